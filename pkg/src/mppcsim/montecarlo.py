"""Seeded stochastic simulation of pulses through source, loss, dark
counts, crosstalk and saturation, for one detector or two correlated arms.

Randomness is drawn from counter-based Philox streams keyed by
(seed, stage, chunk-of-pulses) with a fixed chunk size, so results are
bit-identical no matter how the chunks are executed or merged; histogram
merging across chunks is a plain sum.

Two crosstalk samplers are available. ``binomial`` lets every avalanche
trigger at most one neighbor, which is exactly the analytic response
matrix of :mod:`mppcsim.detector`. ``cascade`` lets every triggered
neighbor trigger further neighbors until extinction (geometric
branching), which reproduces the higher-order events the histogram-level
algebra of :mod:`mppcsim.crosstalk` keeps to second order.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .detector import DetectorParams
from .estimators import g2_from_histogram, mean_counts_per_pulse
from .histograms import CountHistogram, JointCountHistogram, SweepSeries
from .sources import SourceSpec

CHUNK = 1 << 16

CROSSTALK_MODES = ("binomial", "cascade")

# stage tags for the keyed RNG streams
_STAGE_SOURCE_S = 0
_STAGE_QE_S = 1
_STAGE_DARK_S = 2
_STAGE_XT_S = 3
_STAGE_SOURCE_I = 4
_STAGE_QE_I = 5
_STAGE_DARK_I = 6
_STAGE_XT_I = 7

_ARM_STAGES = {
    "s": (_STAGE_QE_S, _STAGE_DARK_S, _STAGE_XT_S),
    "i": (_STAGE_QE_I, _STAGE_DARK_I, _STAGE_XT_I),
}


@dataclass(frozen=True)
class SimulationConfig:
    """All knobs of one simulated acquisition run."""

    source: SourceSpec
    detector_s: DetectorParams
    trials: int
    detector_i: DetectorParams | None = None
    seed: int = 0
    crosstalk_mode: str = "binomial"

    def __post_init__(self):
        if self.trials < 1 or int(self.trials) != self.trials:
            raise ValueError("trials must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.crosstalk_mode not in CROSSTALK_MODES:
            raise ValueError(f"crosstalk_mode must be one of {CROSSTALK_MODES}")
        if self.source.is_twin and self.detector_i is None:
            raise ValueError("twin sources require detector_i")


@dataclass(frozen=True)
class EventRecord:
    """One pulse of the raw event stream."""

    pulse_index: int
    counts_s: int
    counts_i: int | None = None


def _rng(seed: int, stage: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(stage, chunk))
    return np.random.Generator(np.random.Philox(ss))


def _chunks(trials: int):
    start = 0
    idx = 0
    while start < trials:
        size = min(CHUNK, trials - start)
        yield idx, start, size
        start += size
        idx += 1


def _source_cdf(spec: SourceSpec) -> np.ndarray:
    cdf = np.cumsum(spec.distribution().probs)
    cdf[-1] = 1.0  # absorb the truncation residual in the top bin
    return cdf


def _draw_photons(cdf: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    return np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)


def _arm_channel(
    photons: np.ndarray,
    det: DetectorParams,
    mode: str,
    seed: int,
    chunk: int,
    arm: str,
) -> np.ndarray:
    stage_qe, stage_dark, stage_xt = _ARM_STAGES[arm]
    if det.eta < 1.0:
        n = _rng(seed, stage_qe, chunk).binomial(photons, det.eta)
    else:
        n = photons.copy()
    if det.dark_mean > 0:
        n = n + _rng(seed, stage_dark, chunk).poisson(det.dark_mean, n.size)
    if det.p_xt > 0:
        rng = _rng(seed, stage_xt, chunk)
        if mode == "binomial":
            n = n + rng.binomial(n, det.p_xt)
        else:
            total = n.copy()
            gen = n
            while gen.any():
                gen = rng.binomial(gen, det.p_xt)
                total += gen
            n = total
    return np.minimum(n, det.n_max)


class _EventWriter:
    def __init__(self, path):
        self.fh = open(path, "w", newline="")
        self.writer = csv.writer(self.fh)
        self.writer.writerow(["pulse", "counts_s", "counts_i"])

    def write(self, start, counts_s, counts_i=None):
        pulses = range(start, start + counts_s.size)
        if counts_i is None:
            self.writer.writerows(
                (p, int(c), "") for p, c in zip(pulses, counts_s)
            )
        else:
            self.writer.writerows(
                (p, int(a), int(b)) for p, a, b in zip(pulses, counts_s, counts_i)
            )

    def close(self):
        self.fh.close()


def _run_meta(config: SimulationConfig) -> dict:
    meta = {
        "source": config.source.kind,
        "mean": config.source.mean,
        "trials": config.trials,
        "seed": config.seed,
        "xt_mode": config.crosstalk_mode,
        "eta": config.detector_s.eta,
        "xt": config.detector_s.p_xt,
        "nmax": config.detector_s.n_max,
        "dark": config.detector_s.dark_mean,
    }
    if config.source.kind == "twin_multimode":
        meta["modes"] = config.source.modes
    if config.source.kind == "fock":
        meta["fock_n"] = config.source.fock_n
    if config.detector_i is not None:
        meta.update(
            eta2=config.detector_i.eta,
            xt2=config.detector_i.p_xt,
            nmax2=config.detector_i.n_max,
            dark2=config.detector_i.dark_mean,
        )
    return meta


def simulate_single(config: SimulationConfig, events_path=None) -> CountHistogram:
    """Simulate one detector; returns the photocount histogram (bin 0 included)."""
    if config.source.is_twin:
        raise ValueError("twin sources describe two arms; use simulate_twin")
    det = config.detector_s
    cdf = _source_cdf(config.source)
    counts = np.zeros(det.n_max + 1, dtype=np.int64)
    writer = _EventWriter(events_path) if events_path else None
    for chunk, start, size in _chunks(config.trials):
        photons = _draw_photons(cdf, _rng(config.seed, _STAGE_SOURCE_S, chunk), size)
        rec = _arm_channel(photons, det, config.crosstalk_mode, config.seed, chunk, "s")
        counts += np.bincount(rec, minlength=det.n_max + 1)
        if writer:
            writer.write(start, rec)
    if writer:
        writer.close()
    return CountHistogram(config.trials, counts, _run_meta(config))


def _simulate_two_arms(config: SimulationConfig, shared: bool, events_path):
    if config.detector_i is None:
        raise ValueError("two-arm simulation requires detector_i")
    det_s, det_i = config.detector_s, config.detector_i
    cdf = _source_cdf(config.source)
    joint = np.zeros((det_s.n_max + 1, det_i.n_max + 1), dtype=np.int64)
    writer = _EventWriter(events_path) if events_path else None
    for chunk, start, size in _chunks(config.trials):
        photons_s = _draw_photons(cdf, _rng(config.seed, _STAGE_SOURCE_S, chunk), size)
        if shared:
            photons_i = photons_s
        else:
            photons_i = _draw_photons(
                cdf, _rng(config.seed, _STAGE_SOURCE_I, chunk), size
            )
        rec_s = _arm_channel(
            photons_s, det_s, config.crosstalk_mode, config.seed, chunk, "s"
        )
        rec_i = _arm_channel(
            photons_i, det_i, config.crosstalk_mode, config.seed, chunk, "i"
        )
        np.add.at(joint, (rec_s, rec_i), 1)
        if writer:
            writer.write(start, rec_s, rec_i)
    if writer:
        writer.close()
    return JointCountHistogram(config.trials, joint, _run_meta(config))


def simulate_twin(config: SimulationConfig, events_path=None) -> JointCountHistogram:
    """Simulate correlated arms sharing the drawn pair number per pulse.

    Twin kinds draw the pair number from their distribution; a ``fock``
    source is also accepted as a deterministic pair number (useful as a
    perfectly correlated reference).
    """
    if not (config.source.is_twin or config.source.kind == "fock"):
        raise ValueError("simulate_twin needs a twin_* (or fock) source kind")
    return _simulate_two_arms(config, shared=True, events_path=events_path)


def simulate_independent(config: SimulationConfig, events_path=None) -> JointCountHistogram:
    """Simulate two arms fed by independent draws of the same source."""
    if config.source.is_twin:
        raise ValueError("independent arms need a non-twin source kind")
    return _simulate_two_arms(config, shared=False, events_path=events_path)


def read_events(path) -> list[EventRecord]:
    """Read back an event-stream CSV written by the simulate functions."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["pulse", "counts_s", "counts_i"]:
            raise ValueError(f"{path}: not an event-stream file")
        for row in reader:
            counts_i = int(row[2]) if row[2] != "" else None
            records.append(EventRecord(int(row[0]), int(row[1]), counts_i))
    return records


def _subseed(seed: int, index: int) -> int:
    ss = np.random.SeedSequence(entropy=[int(seed), 0x5EED, int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def sweep(config: SimulationConfig, intensities):
    """Run one simulation per intensity with derived sub-seeds.

    Single-arm configs return a :class:`SweepSeries` of measured g2 versus
    mean counts per pulse; two-arm configs return the list of joint
    histograms for downstream NRF or cross-g2 analysis.
    """
    grid = np.asarray(intensities, dtype=float)
    if grid.size == 0:
        raise ValueError("intensity grid is empty")
    if grid.size < 3:
        raise ValueError("intensity grid needs at least 3 points")
    if np.any(grid <= 0):
        raise ValueError("intensities must be strictly positive")

    two_arm = config.source.is_twin or config.detector_i is not None
    results = []
    for idx, mean in enumerate(grid):
        cfg = replace(
            config,
            source=replace(config.source, mean=float(mean)),
            seed=_subseed(config.seed, idx),
        )
        if not two_arm:
            results.append(simulate_single(cfg))
        elif config.source.is_twin:
            results.append(simulate_twin(cfg))
        else:
            results.append(simulate_independent(cfg))
    if two_arm:
        return results

    points = []
    for hist in results:
        est = g2_from_histogram(hist)
        points.append((mean_counts_per_pulse(hist), est.value, est.std_err))
    meta = _run_meta(config)
    meta["mean"] = [float(v) for v in grid]
    return SweepSeries(np.array(points), meta=meta)
