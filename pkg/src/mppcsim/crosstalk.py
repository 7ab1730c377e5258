"""Closed-form second-order crosstalk model at the histogram level.

Each recorded avalanche can promote its event by one count with
probability p and by two counts with probability p^2 (one neighbor
triggering a further neighbor); third-order terms are dropped, which
caps the validity of the model at p <= 0.6 where 1 - p - p^2 is still a
probability. The transform redistributes events between bins without
creating or destroying any, so aggregate identities for the coincidence
and singles totals follow exactly.

All bin arithmetic runs on exact rationals; pass p as a string ("0.1")
or ``Fraction`` to keep decimal inputs exact end to end.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CrosstalkRangeWarning
from .histograms import CountHistogram

P_CAP = 0.6
P_WARN = 0.3


def _as_fraction(p) -> Fraction:
    if isinstance(p, Fraction):
        return p
    if isinstance(p, str):
        return Fraction(p)
    return Fraction(float(p))


def _check_p(p: Fraction, context: str, warn: bool = True) -> None:
    if p < 0 or p > Fraction(6, 10):
        raise ValueError(f"{context}: p must lie in [0, 0.6], got {float(p)}")
    if warn and p > Fraction(3, 10):
        warnings.warn(
            f"{context}: p = {float(p):.3g} strains the second-order model "
            "(neglected third-order terms approach the kept ones)",
            CrosstalkRangeWarning,
            stacklevel=3,
        )


def transform_counts_exact(counts, p) -> list[Fraction]:
    """Expected crosstalk-perturbed bin values, as exact rationals.

    Bin k >= 1 loses k(p + p^2) N_k of its events, of which k p N_k move
    to bin k+1 and k p^2 N_k to bin k+2; bin 0 is untouched. The output
    has two extra bins and the same total as the input.
    """
    pf = _as_fraction(p)
    _check_p(pf, "crosstalk transform")
    vals = [Fraction(c if isinstance(c, int) else float(c)) for c in counts]
    out = vals + [Fraction(0), Fraction(0)]
    p2 = pf * pf
    for k in range(1, len(vals)):
        n_k = vals[k]
        if n_k == 0:
            continue
        single = k * pf * n_k
        double = k * p2 * n_k
        out[k] -= single + double
        out[k + 1] += single
        out[k + 2] += double
    return out


def transform_histogram(hist: CountHistogram, p) -> CountHistogram:
    """Histogram-level wrapper of the exact transform (decimal expected counts)."""
    out = transform_counts_exact(hist.counts, p)
    meta = dict(hist.meta)
    meta["crosstalk_transform_p"] = float(_as_fraction(p))
    return CountHistogram(hist.trials, np.array([float(v) for v in out]), meta)


def expected_coincidences(hist: CountHistogram, p) -> float:
    """Pairwise-coincidence total of the crosstalk-perturbed histogram.

    Equals (1 + 2p + 4p^2) sum C(k,2) N_k + p(1 + 3p) sum k N_k, computed
    exactly; agrees identically with counting pairs on the transformed bins.
    """
    pf = _as_fraction(p)
    _check_p(pf, "coincidence aggregate")
    s = Fraction(0)
    d = Fraction(0)
    for k, c in enumerate(hist.counts):
        cf = Fraction(c if isinstance(c, int) else float(c))
        s += Fraction(k * (k - 1), 2) * cf
        d += k * cf
    return float((1 + 2 * pf + 4 * pf * pf) * s + pf * (1 + 3 * pf) * d)


def expected_total_counts(hist: CountHistogram, p) -> float:
    """Photocount total of the crosstalk-perturbed histogram: (1+p+2p^2) sum k N_k."""
    pf = _as_fraction(p)
    _check_p(pf, "total-count aggregate")
    d = Fraction(0)
    for k, c in enumerate(hist.counts):
        d += k * Fraction(c if isinstance(c, int) else float(c))
    return float((1 + pf + 2 * pf * pf) * d)


def coefficient_a(p: float) -> float:
    """Multiplicative distortion of g2: (1+2p+4p^2)/(1+p+2p^2)^2."""
    if not 0.0 <= p <= P_CAP:
        raise ValueError("p must lie in [0, 0.6]")
    return (1.0 + 2.0 * p + 4.0 * p**2) / (1.0 + p + 2.0 * p**2) ** 2


def coefficient_b(p: float) -> float:
    """Additive distortion of g2 per inverse count rate: 2p(1+3p)/(1+p+2p^2)."""
    if not 0.0 <= p <= P_CAP:
        raise ValueError("p must lie in [0, 0.6]")
    return 2.0 * p * (1.0 + 3.0 * p) / (1.0 + p + 2.0 * p**2)


@dataclass(frozen=True)
class G2ModelCoefficients:
    """Coefficient pair (A, B) of the measured-g2 law for one crosstalk level."""

    a_coef: float
    b_coef: float
    p: float

    def __post_init__(self):
        if abs(self.a_coef - coefficient_a(self.p)) > 1e-12:
            raise ValueError("a_coef inconsistent with p")
        if abs(self.b_coef - coefficient_b(self.p)) > 1e-12:
            raise ValueError("b_coef inconsistent with p")

    @classmethod
    def from_p(cls, p: float) -> "G2ModelCoefficients":
        return cls(coefficient_a(p), coefficient_b(p), p)


def measured_g2(p: float, g0: float, n_total_per_pulse: float) -> float:
    """Crosstalk-distorted g2: A(p) g0 + B(p)/n_total_per_pulse."""
    if n_total_per_pulse <= 0:
        raise ValueError("n_total_per_pulse must be positive")
    return coefficient_a(p) * g0 + coefficient_b(p) / n_total_per_pulse


def invert_g2(g2_value: float, n_total_per_pulse: float, p: float) -> float:
    """Recover the source g2 from a measured value: (g2 - B/n)/A."""
    if n_total_per_pulse <= 0:
        raise ValueError("n_total_per_pulse must be positive")
    return (g2_value - coefficient_b(p) / n_total_per_pulse) / coefficient_a(p)
