"""Statistics from measured or simulated photocount histograms.

The g2 estimator treats every pair of pixels as a coincidence circuit:
pairwise coincidences per pulse divided by the squared singles rate.
Uncertainties come from first-order propagation with Poisson bin
variances; the joint-histogram statistics (cross-g2, noise reduction
factor) use a deterministic multinomial bootstrap instead, since their
bins are correlated through the shared trial count.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DarkSubtractionWarning, UndefinedStatisticError
from .histograms import CountHistogram, JointCountHistogram

N_BOOTSTRAP = 200


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    std_err: float
    method: str

    def __post_init__(self):
        if self.std_err < 0:
            raise ValueError("std_err must be non-negative")


def _seed_from_meta(meta) -> int:
    try:
        return int(meta.get("seed", 0))
    except (TypeError, ValueError):
        return 0


def g2_from_histogram(hist: CountHistogram) -> EstimateWithError:
    """Zero-delay g2 from a single-detector histogram.

    value = 2 T sum_k C(k,2) N_k / (sum_k k N_k)^2. The trial count makes
    the coincidence and singles rates per-pulse quantities, so coherent
    light gives exactly 1. The error propagates independent Poisson
    fluctuations of each bin.
    """
    counts = hist.counts
    t = float(hist.trials)
    k = np.arange(counts.size, dtype=float)
    pairs = k * (k - 1.0) / 2.0
    s = float(pairs @ counts)
    d = float(k @ counts)
    if d <= 0:
        raise UndefinedStatisticError("g2 undefined: no recorded counts")
    value = 2.0 * t * s / d**2
    grad = 2.0 * t * (pairs / d**2 - 2.0 * k * s / d**3)
    var = float(grad**2 @ np.maximum(counts, 0.0))
    return EstimateWithError(value, float(np.sqrt(var)), "propagation")


def mean_counts_per_pulse(hist: CountHistogram) -> float:
    """Mean recorded photocounts per pulse, sum(k N_k)/T."""
    return hist.total_counts / hist.trials


def _bootstrap(joint: JointCountHistogram, stat, n_boot: int, seed) -> np.ndarray:
    t = joint.trials
    flat = joint.counts.ravel()
    p = flat / flat.sum()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    draws = rng.multinomial(t, p, size=n_boot).astype(float)
    vals = []
    for row in draws:
        try:
            vals.append(stat(row.reshape(joint.counts.shape)))
        except UndefinedStatisticError:
            continue
    return np.asarray(vals)


def _cross_g2_value(counts: np.ndarray, trials: int) -> float:
    n_s = np.arange(counts.shape[0], dtype=float)
    n_i = np.arange(counts.shape[1], dtype=float)
    mean_s = float(n_s @ counts.sum(axis=1)) / trials
    mean_i = float(n_i @ counts.sum(axis=0)) / trials
    if mean_s <= 0 or mean_i <= 0:
        raise UndefinedStatisticError("cross g2 undefined: zero marginal mean")
    mean_si = float(n_s @ counts @ n_i) / trials
    return mean_si / (mean_s * mean_i)


def g2_cross_from_joint(
    joint: JointCountHistogram, n_boot: int = N_BOOTSTRAP, seed: int | None = None
) -> EstimateWithError:
    """Two-detector correlation <N_s N_i>/(<N_s><N_i>) with bootstrap error."""
    value = _cross_g2_value(joint.counts, joint.trials)
    if seed is None:
        seed = _seed_from_meta(joint.meta)
    reps = _bootstrap(
        joint, lambda c: _cross_g2_value(c, joint.trials), n_boot, seed
    )
    err = float(reps.std(ddof=1)) if reps.size > 1 else 0.0
    return EstimateWithError(value, err, "bootstrap")


def _nrf_value(counts: np.ndarray, trials: int) -> float:
    n_s = np.arange(counts.shape[0], dtype=float)
    n_i = np.arange(counts.shape[1], dtype=float)
    diff = n_s[:, None] - n_i[None, :]
    tot = n_s[:, None] + n_i[None, :]
    mean_sum = float((tot * counts).sum()) / trials
    if mean_sum <= 0:
        raise UndefinedStatisticError("NRF undefined: zero total counts")
    mean_diff = float((diff * counts).sum()) / trials
    ss = float((diff**2 * counts).sum())
    var = (ss - trials * mean_diff**2) / (trials - 1)
    return var / mean_sum


def nrf_from_joint(
    joint: JointCountHistogram, n_boot: int = N_BOOTSTRAP, seed: int | None = None
) -> EstimateWithError:
    """Noise reduction factor Var(N_s - N_i)/<N_s + N_i> with bootstrap error.

    Uses the unbiased (T-1) sample variance of the count difference.
    """
    if joint.trials < 2:
        raise UndefinedStatisticError("NRF needs at least 2 trials")
    value = _nrf_value(joint.counts, joint.trials)
    if seed is None:
        seed = _seed_from_meta(joint.meta)
    reps = _bootstrap(joint, lambda c: _nrf_value(c, joint.trials), n_boot, seed)
    err = float(reps.std(ddof=1)) if reps.size > 1 else 0.0
    return EstimateWithError(value, err, "bootstrap")


def subtract_dark(signal: CountHistogram, dark: CountHistogram) -> CountHistogram:
    """Subtract the dark-count background, bin-wise, in expectation.

    The dark histogram is rescaled to the signal's trial count and
    subtracted from every bin k >= 1, clamping at zero; bin 0 absorbs the
    remainder so the total stays at the signal's trial count. Absent
    clamping, the corrected per-pulse mean is signal mean minus dark mean.
    """
    scale = signal.trials / dark.trials
    width = max(signal.counts.size, dark.counts.size)
    sig = np.zeros(width)
    sig[: signal.counts.size] = signal.counts
    drk = np.zeros(width)
    drk[: dark.counts.size] = dark.counts
    corrected = sig[1:] - scale * drk[1:]
    clamped = np.flatnonzero(corrected < 0) + 1
    if clamped.size:
        warnings.warn(
            f"dark subtraction clamped bins {clamped.tolist()} at zero",
            DarkSubtractionWarning,
            stacklevel=2,
        )
        corrected = np.maximum(corrected, 0.0)
    counts = np.concatenate([[signal.trials - corrected.sum()], corrected])
    meta = dict(signal.meta)
    meta.update(
        dark_corrected=True,
        dark_mean_subtracted=mean_counts_per_pulse(dark),
        dark_clamped_bins=clamped.tolist(),
    )
    return CountHistogram(signal.trials, counts, meta)
