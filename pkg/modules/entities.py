"""Result entities: estimates, verdicts, realizations and sweep rows."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any

import numpy as np

Z_95 = 1.96


class Direction(Enum):
    """Sign of the derivative of the joint success probability."""

    INCREASING = "increasing"
    DECREASING = "decreasing"
    FLAT = "flat"


@dataclass(frozen=True)
class MonotonicityVerdict:
    """Effect of a tier's density or power on the joint success probability."""

    direction: Direction
    margin: float
    tier_index: int


@dataclass(frozen=True)
class Estimate:
    """A simulated quantity with its standard error and 95% confidence interval.

    Probability estimates are clamped into [0, 1]; the unclamped value is
    kept in `raw_value`. An estimate that could not be formed (e.g. a ratio
    with empty denominator) has NaN value and error.
    """

    value: float
    std_error: float
    ci95: tuple[float, float]
    trials: int
    raw_value: float | None = None

    @classmethod
    def fromStatistic(
        cls, value: float, std_error: float, trials: int, probability: bool = False
    ) -> Estimate:
        """Build an estimate from a point value and its standard error.

        Args:
            value (float): point estimate
            std_error (float): standard error, >= 0
            trials (int): number of trials behind the estimate
            probability (bool, optional): clamp the reported value into [0, 1]

        Returns:
            Estimate
        """
        raw = float(value)
        std_error = float(std_error)
        reported = min(max(raw, 0.0), 1.0) if probability else raw
        return cls(
            value=reported,
            std_error=std_error,
            ci95=(reported - Z_95 * std_error, reported + Z_95 * std_error),
            trials=int(trials),
            raw_value=raw,
        )

    @classmethod
    def fromIndicators(cls, indicators: np.ndarray) -> Estimate:
        """Bernoulli mean with binomial standard error.

        Args:
            indicators (np.ndarray): boolean per-trial outcomes

        Returns:
            Estimate
        """
        trials = len(indicators)
        successes = int(np.count_nonzero(indicators))
        p = successes / trials
        return cls.fromStatistic(p, math.sqrt(p * (1 - p) / trials), trials, True)

    @classmethod
    def fromSamples(cls, samples: np.ndarray) -> Estimate:
        """Sample mean with its standard error.

        Args:
            samples (np.ndarray)

        Returns:
            Estimate
        """
        trials = len(samples)
        std = float(np.std(samples, ddof=1)) if trials > 1 else 0.0
        return cls.fromStatistic(float(np.mean(samples)), std / math.sqrt(trials), trials)

    @classmethod
    def fromSampleVariance(cls, samples: np.ndarray) -> Estimate:
        """Unbiased sample variance with its large-sample standard error.

        Args:
            samples (np.ndarray)

        Returns:
            Estimate
        """
        trials = len(samples)
        if trials < 4:
            return cls.undefined(trials)
        centered = samples - np.mean(samples)
        variance = float(np.var(samples, ddof=1))
        m4 = float(np.mean(centered**4))
        spread = m4 - variance**2 * (trials - 3) / (trials - 1)
        return cls.fromStatistic(variance, math.sqrt(max(spread, 0.0) / trials), trials)

    @classmethod
    def undefined(cls, trials: int) -> Estimate:
        """Estimate that could not be formed from `trials` trials."""
        nan = float("nan")
        return cls(value=nan, std_error=nan, ci95=(nan, nan), trials=int(trials))

    @property
    def is_defined(self) -> bool:
        return not math.isnan(self.value)

    def zScore(self, reference: float) -> float:
        """Distance between the estimate and a reference, in standard errors.

        Args:
            reference (float): value to compare against

        Returns:
            float: NaN when the estimate is undefined
        """
        if not self.is_defined:
            return float("nan")
        difference = self.value - reference
        if self.std_error == 0:
            return 0.0 if difference == 0 else math.copysign(math.inf, difference)
        return difference / self.std_error

    def __str__(self) -> str:
        if not self.is_defined:
            return f"undefined (trials={self.trials})"
        return (
            f"{self.value:.6g} ± {self.std_error:.6g} "
            f"(95% CI [{self.ci95[0]:.6g}, {self.ci95[1]:.6g}], trials={self.trials})"
        )


@dataclass(frozen=True, eq=False)
class Realization:
    """One sample of the K-tier network around the origin.

    `points` has shape (N, d), `tiers` holds the 0-based tier of each point
    and `fading` the per-slot fading powers with shape (N, n).
    """

    points: np.ndarray
    tiers: np.ndarray
    fading: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        for array in (self.points, self.tiers, self.fading):
            array.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.tiers)

    @property
    def slots(self) -> int:
        return self.fading.shape[1]

    def distances(self, location: np.ndarray | None = None) -> np.ndarray:
        """Distances of every point from a location (the origin by default)."""
        if location is None:
            return np.linalg.norm(self.points, axis=1)
        return np.linalg.norm(self.points - location, axis=1)

    def countByTier(self, tier_count: int) -> np.ndarray:
        """Number of points in each tier."""
        return np.bincount(self.tiers, minlength=tier_count)


@dataclass(frozen=True)
class SweepRow:
    """One grid point of a sweep."""

    sweep_value: float
    series: str = ""
    analytic: float | None = None
    sim: Estimate | None = None
    lower_bound: float | None = None
    upper_bound: float | None = None
    independent: float | None = None
    flags: frozenset[str] = field(default_factory=frozenset)

    @property
    def has_bounds(self) -> bool:
        return self.lower_bound is not None and self.upper_bound is not None

    @property
    def failed(self) -> bool:
        return any(f.startswith("error:") for f in self.flags)

    def csvRecord(self, float_format: str = ".15g") -> list[str]:
        """Return the CSV fields of the row.

        Args:
            float_format (str, optional): format of decimal values

        Returns:
            list[str]
        """

        def fmt(value: float | None) -> str:
            return "" if value is None else format(value, float_format)

        sim = self.sim
        return [
            fmt(self.sweep_value),
            fmt(self.analytic),
            fmt(sim.value if sim else None),
            fmt(sim.std_error if sim else None),
            fmt(sim.ci95[0] if sim else None),
            fmt(sim.ci95[1] if sim else None),
            fmt(self.lower_bound),
            fmt(self.upper_bound),
            ";".join(sorted(self.flags)),
            fmt(self.independent),
        ]


@dataclass(frozen=True)
class ComparisonReport:
    """Agreement between the analytic and the simulated columns of a sweep."""

    name: str
    rows_compared: int
    max_abs_z: float
    frac_within_3se: float
    bound_violations: int
    runtime_seconds: float
    z_scores: tuple[float, ...] = ()

    def serialize(self) -> dict[str, Any]:
        """Serialize the report to its documented key set."""
        d = asdict(self)
        d["z_scores"] = list(self.z_scores)
        return d

    def __repr__(self) -> str:
        """Return string representation of the report."""
        return "\n\t· ".join(
            [
                f"{self.__class__.__name__} ({self.name}):",
                f"rows compared: {self.rows_compared}",
                f"max |z|: {self.max_abs_z:.6g}",
                f"fraction within 3 SE: {self.frac_within_3se:.6g}",
                f"bound violations: {self.bound_violations}",
                f"runtime: {self.runtime_seconds:.1f} s",
            ]
        )

    def __str__(self) -> str:
        return self.__repr__()
