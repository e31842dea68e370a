"""Monte Carlo engine for the K-tier Poisson network."""
from __future__ import annotations

import logging
import math
from dataclasses import replace
from multiprocessing import Pool
from typing import Any, Callable

import numpy as np
from scipy import optimize

from modules import corrmath
from modules.common import SETTINGS_PATH, loadSettings
from modules.data import FADING_MODELS, NetworkModel, SimPlan
from modules.entities import Estimate, Realization
from modules.errors import ModeConflictError, ModelError

_BOOTSTRAP_KEY = 0xB0075


def _pathLoss(distances: np.ndarray, model: NetworkModel) -> np.ndarray:
    with np.errstate(divide="ignore", over="ignore"):
        return 1.0 / (distances**model.alpha + model.epsilon)


def _sampleRealization(
    model: NetworkModel, plan: SimPlan, radius: float, trial_index: int, fading: str
) -> Realization:
    """Sample the BSs of every tier in the ball of the given radius.

    The trial stream is keyed by (master_seed, trial_index) and split into a
    geometry and a fading stream: points are drawn tier by tier, fading as an
    (N, n) array in point-major order. Changing the fading law therefore
    keeps the geometry.
    """
    root = np.random.SeedSequence([plan.master_seed, trial_index])
    geometry_sequence, fading_sequence = root.spawn(2)
    geometry = np.random.default_rng(geometry_sequence)

    d = model.dimension
    volume = corrmath.unitBallVolume(d) * radius**d
    points, tiers = [], []
    for index, tier in enumerate(model.tiers):
        count = int(geometry.poisson(tier.density * volume))
        radii = radius * geometry.random(count) ** (1.0 / d)
        directions = geometry.standard_normal((count, d))
        norms = np.linalg.norm(directions, axis=1)
        norms[norms == 0] = 1.0
        points.append(directions / norms[:, None] * radii[:, None])
        tiers.append(np.full(count, index, dtype=np.int64))

    size = sum(len(t) for t in tiers)
    if fading == "rayleigh":
        fading_rng = np.random.default_rng(fading_sequence)
        powers = fading_rng.exponential(1.0, size=(size, plan.slots))
    else:
        powers = np.ones((size, plan.slots))

    return Realization(
        points=np.concatenate(points) if size else np.zeros((0, d)),
        tiers=np.concatenate(tiers),
        fading=powers,
        radius=radius,
    )


def _receivedPowers(
    realization: Realization, model: NetworkModel, location: np.ndarray | None = None
) -> np.ndarray:
    """Received power of every BS in every slot, shape (N, n)."""
    powers = np.array([t.power for t in model.tiers])[realization.tiers]
    gains = _pathLoss(realization.distances(location), model)
    return realization.fading * (powers * gains)[:, None]


def sirAtOrigin(
    realization: Realization, candidate_index: int, slot: int, model: NetworkModel
) -> float:
    """SIR of a candidate BS at the typical user located at the origin.

    Every other BS of every tier interferes; a lone BS yields +inf.

    Args:
        realization (Realization)
        candidate_index (int): 0-based index of the candidate point
        slot (int): 1-based slot
        model (NetworkModel)

    Returns:
        float
    """
    if not 0 <= candidate_index < realization.size:
        raise ModelError(f"Candidate {candidate_index} is not in the realization.")
    if not 1 <= slot <= realization.slots:
        raise ModelError(f"Slot must be between 1 and {realization.slots}, got {slot}.")
    received = _receivedPowers(realization, model)[:, slot - 1]
    signal = float(received[candidate_index])
    interference = float(np.sum(np.delete(received, candidate_index)))
    if interference == 0:
        return math.inf
    return signal / interference


def _qualified(
    received: np.ndarray, interference: np.ndarray, thresholds: np.ndarray
) -> np.ndarray:
    """Per BS and slot, whether the SIR exceeds the BS's threshold."""
    with np.errstate(divide="ignore", invalid="ignore"):
        sir = received / np.maximum(interference, 0.0)
    return sir > thresholds[:, None]


def _successTrial(
    realization: Realization, model: NetworkModel, extra: dict[str, Any]
) -> np.ndarray:
    """Joint success of the slot prefixes 1..m, for m = 1..n (same BS in every slot)."""
    if realization.size == 0:
        return np.zeros(realization.slots, dtype=bool)
    received = _receivedPowers(realization, model)
    total = received.sum(axis=0) + extra["tail"].sum()
    thresholds = np.array([t.threshold for t in model.tiers])[realization.tiers]
    qualified = _qualified(received, total - received, thresholds)
    return np.logical_and.accumulate(qualified, axis=1).any(axis=0)


def _orthogonalTrial(
    realization: Realization, model: NetworkModel, extra: dict[str, Any]
) -> np.ndarray:
    """Joint success in all slots when only the serving tier interferes."""
    tier = extra["tier"]
    own = realization.tiers == tier
    if not own.any():
        return np.zeros(1, dtype=bool)
    received = _receivedPowers(realization, model)[own]
    total = received.sum(axis=0) + extra["tail"][tier]
    threshold = np.full(len(received), model.tiers[tier].threshold)
    qualified = _qualified(received, total - received, threshold)
    return np.atleast_1d(qualified.all(axis=1).any())


def _interferenceTrial(
    realization: Realization, model: NetworkModel, extra: dict[str, Any]
) -> np.ndarray:
    """Total interference at the origin in the first slot."""
    return np.atleast_1d(_receivedPowers(realization, model)[:, 0].sum())


def _pairTrial(
    realization: Realization, model: NetworkModel, extra: dict[str, Any]
) -> np.ndarray:
    """Interference at the origin in slot 1 and at the shifted location in slot 2."""
    shifted = np.zeros(model.dimension)
    shifted[0] = extra["separation"]
    at_origin = _receivedPowers(realization, model)[:, 0].sum()
    at_shift = _receivedPowers(realization, model, shifted)[:, 1].sum()
    return np.array([at_origin, at_shift])


_KERNELS: dict[str, Callable[[Realization, NetworkModel, dict[str, Any]], np.ndarray]] = {
    "success": _successTrial,
    "orthogonal": _orthogonalTrial,
    "interference": _interferenceTrial,
    "pair": _pairTrial,
}


def _runChunk(task: tuple) -> np.ndarray:
    """Run a contiguous block of trials. Module level so that workers can unpickle it."""
    kind, model, plan, radius, fading, extra, start, stop = task
    kernel = _KERNELS[kind]
    logging.debug(f"Running trials {start}-{stop} ({kind}).")
    return np.stack(
        [
            kernel(_sampleRealization(model, plan, radius, index, fading), model, extra)
            for index in range(start, stop)
        ]
    )


class Simulator:
    """Monte Carlo estimator of the closed-form HCN results."""

    _settings_path: str = SETTINGS_PATH
    _settings: dict[str, Any]

    def __init__(self) -> Simulator:
        """Initialize the simulator. Settings are automatically loaded."""
        self._loadSettings()

    def _loadSettings(self) -> None:
        """Load settings from file."""
        self._settings = loadSettings("Simulator", self._settings_path)

    def _checkFading(self, fading: str) -> None:
        if fading not in FADING_MODELS:
            raise ModelError(f"Unknown fading model: {fading}.")

    def _warnApproximate(self, model: NetworkModel) -> None:
        if model.is_approximate:
            logging.warning(
                "Thresholds at most one in tiers "
                f"{model.approximate_tiers}: closed form is approximate."
            )

    def windowRadius(self, model: NetworkModel, plan: SimPlan, separation: float = 0.0) -> float:
        """Resolve the radius of the sampling window.

        An explicit plan radius wins. Otherwise the singular law uses
        window_factor * (max density)^(-1/d); the bounded law picks the radius
        beyond which at most truncation_fraction of the mean interference is
        generated. The separation is added so the shifted location is covered
        as well.

        Args:
            model (NetworkModel)
            plan (SimPlan)
            separation (float, optional): distance of the second location

        Returns:
            float
        """
        if plan.window_radius is not None:
            return plan.window_radius + separation

        if not model.is_bounded:
            densest = max(t.density for t in model.tiers)
            return self.window_factor * densest ** (-1.0 / model.dimension) + separation

        target = self.truncation_fraction
        lower, upper = 0.0, model.epsilon ** (1.0 / model.alpha)
        while corrmath.truncatedInterferenceFraction(model, upper) > target:
            lower, upper = upper, 2.0 * upper

        radius = optimize.brentq(
            lambda r: corrmath.truncatedInterferenceFraction(model, r) - target,
            lower,
            upper,
            xtol=1e-6 * upper,
        )
        return radius + separation

    def sampleRealization(
        self, model: NetworkModel, plan: SimPlan, trial_index: int, fading: str = "rayleigh"
    ) -> Realization:
        """Sample the realization of one trial.

        Deterministic in (model, plan.master_seed, trial_index).

        Args:
            model (NetworkModel)
            plan (SimPlan)
            trial_index (int): non negative trial index
            fading (str, optional): "rayleigh" or "deterministic"

        Returns:
            Realization
        """
        self._checkFading(fading)
        corrmath.delta(model)
        if trial_index < 0:
            raise ModelError(f"Trial index must be >= 0, got {trial_index}.")
        return _sampleRealization(model, plan, self.windowRadius(model, plan), trial_index, fading)

    def _runTrials(
        self,
        kind: str,
        model: NetworkModel,
        plan: SimPlan,
        radius: float,
        fading: str = "rayleigh",
        extra: dict[str, Any] | None = None,
    ) -> np.ndarray:
        """Run every trial of a plan, in parallel when the plan asks for it.

        Results are returned in trial order, so they do not depend on the
        number of workers.
        """
        extra = extra or {}
        chunk = self.chunk_size
        tasks = [
            (kind, model, plan, radius, fading, extra, start, min(start + chunk, plan.trials))
            for start in range(0, plan.trials, chunk)
        ]
        workers = min(plan.parallelism, len(tasks))
        logging.info(
            f"Running {plan.trials} trials ({kind}) with window radius {radius:.6g} "
            f"on {workers} worker(s)."
        )
        if workers <= 1:
            results = [_runChunk(task) for task in tasks]
        else:
            with Pool(processes=workers) as pool:
                results = pool.map(_runChunk, tasks)
        return np.concatenate(results)

    def _sirExtra(self, model: NetworkModel, radius: float) -> dict[str, Any]:
        if self.tail_compensation:
            tail = corrmath.farFieldInterference(model, radius)
        else:
            tail = np.zeros(model.tier_count)
        return {"tail": tail}

    def _requireSingular(self, model: NetworkModel) -> None:
        if model.is_bounded:
            raise ModeConflictError("SIR estimates use the singular path loss (epsilon = 0).")

    def _successPrefixes(self, model: NetworkModel, plan: SimPlan) -> np.ndarray:
        self._requireSingular(model)
        corrmath.delta(model)
        self._warnApproximate(model)
        radius = self.windowRadius(model, plan)
        return self._runTrials("success", model, plan, radius, extra=self._sirExtra(model, radius))

    def estimateJointSuccess(self, model: NetworkModel, plan: SimPlan) -> Estimate:
        """Estimate the probability that one BS clears its threshold in all plan.slots slots.

        Geometry is fixed across slots, fading is redrawn every slot.

        Args:
            model (NetworkModel): model with epsilon = 0
            plan (SimPlan)

        Returns:
            Estimate
        """
        prefixes = self._successPrefixes(model, plan)
        return Estimate.fromIndicators(prefixes[:, plan.slots - 1])

    def estimateConditionalSuccess(self, model: NetworkModel, plan: SimPlan, n: int) -> Estimate:
        """Estimate the probability that slot n succeeds given slots 1..n-1 did.

        Ratio of trials succeeding in all n slots to trials succeeding in the
        first n-1, with the same BS in every slot. The standard error comes
        from a nonparametric bootstrap over trials.

        Args:
            model (NetworkModel): model with epsilon = 0
            plan (SimPlan): its slot count is replaced by n
            n (int): number of slots, >= 2

        Returns:
            Estimate: undefined when no trial succeeds in the first n-1 slots
        """
        if not isinstance(n, int) or n < 2:
            raise ModelError(f"Conditional success needs n >= 2, got {n}.")
        plan = replace(plan, slots=n)
        prefixes = self._successPrefixes(model, plan)
        full = int(np.count_nonzero(prefixes[:, n - 1]))
        given = int(np.count_nonzero(prefixes[:, n - 2]))
        if given == 0:
            logging.warning(f"No trial succeeded in the first {n - 1} slots.")
            return Estimate.undefined(plan.trials)

        # trials fall in three classes: all n slots, only the first n-1, neither;
        # resampling trials is a multinomial draw over the class counts
        counts = np.array([full, given - full, plan.trials - given]) / plan.trials
        rng = np.random.default_rng(
            np.random.SeedSequence([plan.master_seed, plan.trials, n, _BOOTSTRAP_KEY])
        )
        resamples = rng.multinomial(plan.trials, counts, size=self.bootstrap_resamples)
        denominators = resamples[:, 0] + resamples[:, 1]
        valid = denominators > 0
        ratios = resamples[valid, 0] / denominators[valid]
        std_error = float(np.std(ratios, ddof=1)) if len(ratios) > 1 else float("nan")
        return Estimate.fromStatistic(full / given, std_error, plan.trials, probability=True)

    def estimateOrthogonalJointSuccess(
        self, model: NetworkModel, plan: SimPlan, tier_index: int
    ) -> Estimate:
        """Estimate the joint success of a tier that owns a separate band.

        Args:
            model (NetworkModel): model with epsilon = 0
            plan (SimPlan)
            tier_index (int): 1-based tier

        Returns:
            Estimate
        """
        model.tier(tier_index)
        self._requireSingular(model)
        corrmath.delta(model)
        radius = self.windowRadius(model, plan)
        extra = self._sirExtra(model, radius)
        extra["tier"] = tier_index - 1
        indicators = self._runTrials("orthogonal", model, plan, radius, extra=extra)
        return Estimate.fromIndicators(indicators[:, 0])

    def estimateInterferenceMoments(
        self, model: NetworkModel, plan: SimPlan, fading: str = "rayleigh"
    ) -> tuple[Estimate, Estimate]:
        """Estimate mean and variance of the total interference at the origin.

        Args:
            model (NetworkModel): model with epsilon > 0
            plan (SimPlan)
            fading (str, optional): "rayleigh" or "deterministic"

        Returns:
            tuple[Estimate, Estimate]: mean and variance
        """
        self._checkFading(fading)
        if not model.is_bounded:
            raise ModeConflictError("Interference moments need epsilon > 0.")
        corrmath.delta(model)
        radius = self.windowRadius(model, plan)
        samples = self._runTrials("interference", model, plan, radius, fading)[:, 0]
        return Estimate.fromSamples(samples), Estimate.fromSampleVariance(samples)

    def estimateCorrCoefficient(
        self,
        model: NetworkModel,
        plan: SimPlan,
        separation: float = 0.0,
        mode: str = "temporal",
        fading: str = "rayleigh",
    ) -> Estimate:
        """Estimate the Pearson correlation of the interference in two slots.

        The first sample is taken at the origin in slot 1, the second at
        distance `separation` in slot 2, over the same geometry. The standard
        error comes from the Fisher z-transform.

        Args:
            model (NetworkModel): model with epsilon > 0
            plan (SimPlan)
            separation (float, optional): 0 in temporal mode, > 0 in spatiotemporal
            mode (str, optional): "temporal" or "spatiotemporal"
            fading (str, optional): "rayleigh" or "deterministic"

        Returns:
            Estimate
        """
        self._checkFading(fading)
        if not model.is_bounded:
            raise ModeConflictError("Correlation coefficients need epsilon > 0.")
        if mode == "temporal" and separation != 0:
            raise ModelError("Temporal mode samples a single location (separation 0).")
        if mode == "spatiotemporal" and not separation > 0:
            raise ModelError("Spatiotemporal mode needs a positive separation.")
        if mode not in ("temporal", "spatiotemporal"):
            raise ModelError(f"Unknown correlation mode: {mode}.")
        corrmath.delta(model)

        plan = replace(plan, slots=2)
        radius = self.windowRadius(model, plan, separation)
        pairs = self._runTrials(
            "pair", model, plan, radius, fading, extra={"separation": separation}
        )
        if plan.trials < 4 or np.std(pairs[:, 0]) == 0 or np.std(pairs[:, 1]) == 0:
            logging.warning("Degenerate interference samples, correlation undefined.")
            return Estimate.undefined(plan.trials)

        rho = float(np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1])
        std_error = (1 - rho**2) / math.sqrt(plan.trials - 3)
        return Estimate.fromStatistic(rho, std_error, plan.trials)

    @property
    def default_parallelism(self) -> int:
        return self._settings["parallelism"]

    @property
    def window_factor(self) -> float:
        return self._settings["window_factor"]

    @property
    def truncation_fraction(self) -> float:
        return self._settings["truncation_fraction"]

    @property
    def tail_compensation(self) -> bool:
        return self._settings["tail_compensation"]

    @property
    def bootstrap_resamples(self) -> int:
        return self._settings["bootstrap_resamples"]

    @property
    def chunk_size(self) -> int:
        return self._settings["chunk_size"]

    def __repr__(self) -> str:
        """Return string representation of the Simulator object."""
        return "\n\t· ".join(
            [
                f"{self.__class__.__name__}:",
                f"numpy version: {np.__version__}",
                f"default parallelism: {self.default_parallelism}",
                f"window factor: {self.window_factor}",
                f"truncation fraction: {self.truncation_fraction}",
                f"tail compensation: {self.tail_compensation}",
                f"bootstrap resamples: {self.bootstrap_resamples}",
            ]
        )

    def __str__(self) -> str:
        """Return string representation of the Simulator object."""
        return self.__repr__()
