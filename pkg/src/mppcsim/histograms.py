"""Count containers shared by the estimators, the Monte Carlo engine and
the file formats: per-pulse photocount histograms for one detector, joint
tables for two detectors, and measured g2 sweep series."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditionedFitError

_SUM_TOL = 1e-6


@dataclass(frozen=True)
class CountHistogram:
    """Photocount histogram over ``trials`` pulses, bin 0 included.

    ``counts[k]`` is the number of pulses with k recorded photocounts.
    Event histograms are integer valued and sum to ``trials`` exactly;
    expected-count objects (dark-corrected or crosstalk-transformed) may
    carry decimals but keep the same total.
    """

    trials: int
    counts: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1 or int(self.trials) != self.trials:
            raise ValueError("trials must be a positive integer")
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 1 or counts.size < 1:
            raise ValueError("counts must be a non-empty vector")
        if np.any(counts < -1e-9):
            raise ValueError("counts must be non-negative")
        total = counts.sum()
        if abs(total - self.trials) > _SUM_TOL * max(1.0, self.trials):
            raise ValueError(
                f"counts sum {total} inconsistent with trials {self.trials}"
            )
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_nonzero_counts(cls, trials, counts_from_k1, meta=None):
        """Build a histogram from bins k >= 1, synthesizing the zero bin."""
        tail = np.asarray(counts_from_k1, dtype=float)
        zero = trials - tail.sum()
        if zero < -_SUM_TOL * max(1.0, trials):
            raise ValueError("counts exceed trial count")
        counts = np.concatenate([[max(zero, 0.0)], tail])
        return cls(trials, counts, dict(meta or {}))

    @property
    def total_counts(self) -> float:
        """Total recorded photocounts, sum(k * N_k)."""
        return float(np.arange(self.counts.size) @ self.counts)


@dataclass(frozen=True)
class JointCountHistogram:
    """Joint photocount table over (N_signal, N_idler) for ``trials`` pulses."""

    trials: int
    counts: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1 or int(self.trials) != self.trials:
            raise ValueError("trials must be a positive integer")
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 2:
            raise ValueError("counts must be a matrix")
        if np.any(counts < -1e-9):
            raise ValueError("counts must be non-negative")
        if abs(counts.sum() - self.trials) > _SUM_TOL * max(1.0, self.trials):
            raise ValueError("joint counts must sum to trials")
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True)
class SweepSeries:
    """Measured g2 versus mean counts per pulse, with per-point errors.

    ``points`` is an (n, 3) array of rows (n_total_per_pulse, g2, g2_err),
    sorted ascending by the first column.
    """

    points: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("points must be rows of (n_total, g2, g2_err)")
        if pts.shape[0] < 3:
            raise ValueError("a sweep needs at least 3 points")
        pts = pts[np.argsort(pts[:, 0], kind="stable")]
        if np.any(pts[:, 0] <= 0):
            raise ValueError("n_total values must be strictly positive")
        if np.any(pts[:, 2] <= 0):
            raise ValueError("g2 errors must be strictly positive")
        if np.ptp(pts[:, 0]) == 0:
            raise IllConditionedFitError("all sweep points share one n_total")
        object.__setattr__(self, "points", pts)

    @property
    def n_total(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def g2(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def g2_err(self) -> np.ndarray:
        return self.points[:, 2]
