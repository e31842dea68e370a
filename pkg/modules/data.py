"""Input data classes: network model, fading moments, simulation and sweep plans."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any

from modules.common import dbToLinear
from modules.errors import ModelError

SUPPORTED_DIMENSIONS = (1, 2, 3)
SWEEP_VARIABLES = (
    "beta_db",
    "density",
    "power",
    "separation",
    "slots",
    "alpha",
    "epsilon",
)
TIER_VARIABLES = ("beta_db", "density", "power")
SWEEP_OUTPUTS = ("analytic", "simulated", "bounds", "conditional", "correlation")


def _isPositive(value: float) -> bool:
    return isinstance(value, (int, float)) and math.isfinite(value) and value > 0


def _isCount(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class GenericData:
    """Generalization for all data classes."""

    def serialize(self) -> dict:
        """Serialize the object to a dictionary."""
        return asdict(self)

    def __str__(self) -> str:
        """To string dunder method."""
        dict_str = ", ".join([f"{k}={v}" for k, v in self.serialize().items()])
        return f"{self.__class__.__name__}({dict_str})"


@dataclass(frozen=True)
class TierParams(GenericData):
    """One tier of base stations. All values are linear."""

    density: float
    power: float
    threshold: float

    def __post_init__(self) -> None:
        for name in ("density", "power", "threshold"):
            value = getattr(self, name)
            if not _isPositive(value):
                raise ModelError(f"Tier {name} must be positive and finite, got {value}.")

    @property
    def is_approximate(self) -> bool:
        """True when the threshold is at most one (several BSs may qualify)."""
        return self.threshold <= 1


@dataclass(frozen=True)
class NetworkModel(GenericData):
    """K-tier network with its propagation constants.

    An epsilon of zero selects the singular path loss ||x||^-alpha, a
    positive epsilon the bounded law 1 / (||x||^alpha + epsilon).
    """

    tiers: tuple[TierParams, ...]
    alpha: float
    dimension: int = 2
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "tiers", tuple(self.tiers))
        if not self.tiers:
            raise ModelError("A network model needs at least one tier.")
        if not all(isinstance(t, TierParams) for t in self.tiers):
            raise ModelError("Tiers must be TierParams instances.")
        if not _isPositive(self.alpha):
            raise ModelError(f"Path loss exponent must be positive, got {self.alpha}.")
        if self.dimension not in SUPPORTED_DIMENSIONS:
            raise ModelError(
                f"Dimension must be one of {SUPPORTED_DIMENSIONS}, got {self.dimension}."
            )
        if not (
            isinstance(self.epsilon, (int, float))
            and math.isfinite(self.epsilon)
            and self.epsilon >= 0
        ):
            raise ModelError(f"Epsilon must be finite and >= 0, got {self.epsilon}.")

    @classmethod
    def fromDict(cls, d: dict[str, Any]) -> NetworkModel:
        """Create a model from its serialized form.

        Args:
            d (dict[str, Any]): dictionary as returned by serialize()

        Returns:
            NetworkModel
        """
        try:
            tiers = tuple(TierParams(**t) for t in d["tiers"])
            return cls(
                tiers=tiers,
                alpha=float(d["alpha"]),
                dimension=int(d.get("dimension", 2)),
                epsilon=float(d.get("epsilon", 0.0)),
            )
        except ModelError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise ModelError(f"Malformed network model: {e}.") from e

    @property
    def tier_count(self) -> int:
        return len(self.tiers)

    @property
    def is_bounded(self) -> bool:
        """True when the bounded path loss law is selected."""
        return self.epsilon > 0

    @property
    def is_approximate(self) -> bool:
        """True when any tier threshold is at most one."""
        return any(t.is_approximate for t in self.tiers)

    @property
    def approximate_tiers(self) -> list[int]:
        """1-based indices of the tiers with threshold at most one."""
        return [i for i, t in enumerate(self.tiers, start=1) if t.is_approximate]

    def tier(self, tier_index: int) -> TierParams:
        """Return a tier by its 1-based index.

        Args:
            tier_index (int): index between 1 and K

        Returns:
            TierParams
        """
        if not _isCount(tier_index) or not 1 <= tier_index <= self.tier_count:
            raise ModelError(
                f"Tier index must be between 1 and {self.tier_count}, got {tier_index}."
            )
        return self.tiers[tier_index - 1]

    def withTier(self, tier_index: int, **changes: float) -> NetworkModel:
        """Return a copy of the model with one tier changed.

        Args:
            tier_index (int): 1-based tier index
            changes: new values for the tier fields

        Returns:
            NetworkModel
        """
        new_tier = replace(self.tier(tier_index), **changes)
        tiers = list(self.tiers)
        tiers[tier_index - 1] = new_tier
        return replace(self, tiers=tuple(tiers))


@dataclass(frozen=True)
class FadingMoments(GenericData):
    """First and second moments of the fading power coefficient."""

    mean: float = 1.0
    second_moment: float = 2.0

    def __post_init__(self) -> None:
        if not _isPositive(self.mean) or not _isPositive(self.second_moment):
            raise ModelError("Fading moments must be positive and finite.")
        # Jensen, with room for rounding in user supplied values
        if self.second_moment < self.mean**2 * (1 - 1e-12):
            raise ModelError(
                f"Second moment {self.second_moment} is below the squared mean "
                f"{self.mean ** 2}."
            )


RAYLEIGH_FADING = FadingMoments(mean=1.0, second_moment=2.0)
DETERMINISTIC_FADING = FadingMoments(mean=1.0, second_moment=1.0)
FADING_MODELS = {"rayleigh": RAYLEIGH_FADING, "deterministic": DETERMINISTIC_FADING}


@dataclass(frozen=True)
class SimPlan(GenericData):
    """Monte Carlo plan.

    A window radius of None lets the simulator pick one with its default rule.
    """

    trials: int
    slots: int = 1
    master_seed: int = 0
    window_radius: float | None = None
    parallelism: int = 1

    def __post_init__(self) -> None:
        if not _isCount(self.trials) or self.trials < 1:
            raise ModelError(f"Trials must be a positive integer, got {self.trials}.")
        if not _isCount(self.slots) or self.slots < 1:
            raise ModelError(f"Slots must be a positive integer, got {self.slots}.")
        if not _isCount(self.master_seed) or not 0 <= self.master_seed < 2**64:
            raise ModelError(f"Seed must be a 64-bit unsigned integer, got {self.master_seed}.")
        if self.window_radius is not None and not _isPositive(self.window_radius):
            raise ModelError(f"Window radius must be positive, got {self.window_radius}.")
        if not _isCount(self.parallelism) or self.parallelism < 1:
            raise ModelError(f"Parallelism must be a positive integer, got {self.parallelism}.")


@dataclass(frozen=True)
class SweepSpec(GenericData):
    """A parameter sweep, optionally repeated over a series variable.

    Tier-specific variables (beta_db, density, power) act on the tier with
    1-based index `tier`; the series variable uses the same vocabulary.
    """

    name: str
    base_model: NetworkModel
    sweep_variable: str
    grid: tuple[float, ...]
    outputs: frozenset[str]
    plan: SimPlan
    tier: int | None = None
    series_variable: str | None = None
    series_values: tuple[float, ...] = field(default_factory=tuple)
    fading: FadingMoments = RAYLEIGH_FADING

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))
        object.__setattr__(self, "outputs", frozenset(self.outputs))
        object.__setattr__(self, "series_values", tuple(float(v) for v in self.series_values))

        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ModelError(f"Unknown sweep variable: {self.sweep_variable}.")
        if self.series_variable is not None:
            if self.series_variable not in SWEEP_VARIABLES:
                raise ModelError(f"Unknown series variable: {self.series_variable}.")
            if not self.series_values:
                raise ModelError("A series variable needs at least one value.")
        if not self.grid:
            raise ModelError("Sweep grid must not be empty.")
        steps = [b - a for a, b in zip(self.grid, self.grid[1:])]
        if not (all(s > 0 for s in steps) or all(s < 0 for s in steps)):
            raise ModelError("Sweep grid must be strictly monotone.")
        unknown = self.outputs - set(SWEEP_OUTPUTS)
        if unknown:
            raise ModelError(f"Unknown outputs: {sorted(unknown)}.")
        if not self.outputs & {"analytic", "simulated"}:
            raise ModelError("A sweep needs the analytic or the simulated output.")
        if "conditional" in self.outputs and "correlation" in self.outputs:
            raise ModelError("Conditional and correlation outputs are exclusive.")

        variables = {self.sweep_variable, self.series_variable}
        if variables & set(TIER_VARIABLES):
            if self.tier is None:
                raise ModelError("Tier-specific sweep variables need a tier index.")
            self.base_model.tier(self.tier)
        if self.sweep_variable == "separation" and "correlation" not in self.outputs:
            raise ModelError("A separation sweep requires the correlation output.")
        if "correlation" in self.outputs:
            self._checkBounded()
        if "conditional" in self.outputs:
            slots = self._values("slots", self.plan.slots)
            if min(slots) < 2:
                raise ModelError("Conditional success needs at least two slots.")
        if self.sweep_variable == "slots" and not all(
            float(v).is_integer() and v >= 1 for v in self.grid
        ):
            raise ModelError("Slots grid must contain positive integers.")

    def _values(self, variable: str, default: float) -> list[float]:
        """Every value a variable takes across the sweep."""
        if self.sweep_variable == variable:
            return list(self.grid)
        if self.series_variable == variable:
            return list(self.series_values)
        return [default]

    def _checkBounded(self) -> None:
        epsilons = self._values("epsilon", self.base_model.epsilon)
        if min(epsilons) <= 0:
            raise ModelError("Correlation output requires a positive epsilon.")

    @property
    def quantity(self) -> str:
        """Quantity the analytic/simulated columns hold."""
        if "correlation" in self.outputs:
            return "correlation"
        if "conditional" in self.outputs:
            return "conditional"
        return "joint"

    @property
    def series(self) -> list[float | None]:
        """Series values, a single None when there is no series."""
        if self.series_variable is None:
            return [None]
        return list(self.series_values)

    def seriesLabel(self, series_value: float | None) -> str:
        """Label of a series, empty when the sweep has no series."""
        if series_value is None:
            return ""
        return f"{self.series_variable}={series_value:g}"

    def resolve(
        self, series_value: float | None, sweep_value: float
    ) -> tuple[NetworkModel, int, float]:
        """Resolve the model, slot count and separation of one sweep point.

        Args:
            series_value (float | None): value of the series variable
            sweep_value (float): value of the sweep variable

        Returns:
            tuple[NetworkModel, int, float]: model, slots n and separation
        """
        state = {"model": self.base_model, "slots": self.plan.slots, "separation": 0.0}
        if series_value is not None:
            self._apply(state, self.series_variable, series_value)
        self._apply(state, self.sweep_variable, sweep_value)
        return state["model"], state["slots"], state["separation"]

    def _apply(self, state: dict[str, Any], variable: str, value: float) -> None:
        model = state["model"]
        if variable == "beta_db":
            state["model"] = model.withTier(self.tier, threshold=dbToLinear(value))
        elif variable == "density":
            state["model"] = model.withTier(self.tier, density=value)
        elif variable == "power":
            state["model"] = model.withTier(self.tier, power=value)
        elif variable == "alpha":
            state["model"] = replace(model, alpha=value)
        elif variable == "epsilon":
            state["model"] = replace(model, epsilon=value)
        elif variable == "slots":
            state["slots"] = int(value)
        elif variable == "separation":
            if value < 0:
                raise ModelError(f"Separation must be >= 0, got {value}.")
            state["separation"] = value

    def serialize(self) -> dict[str, Any]:
        """Serialize the object to a dictionary."""
        d = asdict(self)
        d["outputs"] = sorted(self.outputs)
        d["grid"] = list(self.grid)
        d["series_values"] = list(self.series_values)
        return d

    @classmethod
    def fromDict(cls, d: dict[str, Any]) -> SweepSpec:
        """Create a sweep spec from its serialized form (e.g. a JSON file).

        Args:
            d (dict[str, Any])

        Returns:
            SweepSpec
        """
        try:
            plan = d.get("plan", {})
            fading = d.get("fading", {})
            return cls(
                name=str(d["name"]),
                base_model=NetworkModel.fromDict(d["base_model"]),
                sweep_variable=d["sweep_variable"],
                grid=tuple(d["grid"]),
                outputs=frozenset(d["outputs"]),
                plan=SimPlan(**plan) if plan else SimPlan(trials=10_000),
                tier=d.get("tier"),
                series_variable=d.get("series_variable"),
                series_values=tuple(d.get("series_values", ())),
                fading=FadingMoments(**fading) if fading else RAYLEIGH_FADING,
            )
        except ModelError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise ModelError(f"Malformed sweep spec: {e}.") from e


@dataclass(frozen=True)
class RunConfig(GenericData):
    """Fully resolved command line configuration."""

    command: str
    model: NetworkModel | None
    plan: SimPlan
    preset: str | None = None
    out: str | None = None
    mode: str = "joint"
    separation: float = 0.0
    fading: str = "rayleigh"
    tier_index: int = 1
    spec_path: str | None = None
