"""Command line front end: analytic evaluation, simulation and sweeps."""
from __future__ import annotations

import argparse
import logging
import os
import time
from dataclasses import replace
from typing import Any

import ujson

from modules import corrmath
from modules.common import SETTINGS_PATH, dbToLinear, linearToDb, loadSettings
from modules.data import FADING_MODELS, NetworkModel, RunConfig, SimPlan, SweepSpec, TierParams
from modules.entities import Estimate, SweepRow
from modules.errors import HetnetError, ModeConflictError, ModelError
from modules.experiments import PRESETS, SweepRunner, figurePreset, summaryReport
from modules.simulator import Simulator

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_MODE_CONFLICT = 3
EXIT_IO = 4

SIMULATION_MODES = ("joint", "conditional", "moments", "correlation", "orthogonal")
DEFAULT_ALPHA = 4.0
DEFAULT_DIMENSION = 2
DEFAULT_EPSILON = 0.0
DEFAULT_SLOTS = 2


def _parseTier(value: str, linear: bool) -> TierParams:
    """Parse a `lambda:P:beta` tier description."""
    fields = value.split(":")
    if len(fields) != 3:
        raise ModelError(f"Tier must be given as lambda:P:beta, got {value}.")
    try:
        density, power, beta = (float(f) for f in fields)
    except ValueError as e:
        raise ModelError(f"Tier fields must be numbers, got {value}.") from e
    threshold = beta if linear else dbToLinear(beta)
    return TierParams(density=density, power=power, threshold=threshold)


class CommandLine:
    """Parses the command line and runs the requested subcommand."""

    _settings_path: str = SETTINGS_PATH
    _settings: dict[str, Any]

    def __init__(
        self, simulator: Simulator | None = None, runner: SweepRunner | None = None
    ) -> CommandLine:
        """Initialize the command line. Settings are automatically loaded.

        Args:
            simulator (Simulator, optional): engine used by the simulate command
            runner (SweepRunner, optional): runner used by the sweep command
        """
        self._loadSettings()
        self._simulator = simulator or Simulator()
        self._runner = runner or SweepRunner(self._simulator)
        self._parser = self._buildParser()

    def _loadSettings(self) -> None:
        """Load settings from file."""
        self._settings = loadSettings("CommandLine", self._settings_path)

    def _buildParser(self) -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        model = common.add_argument_group("model")
        model.add_argument("--preset", help=f"one of {', '.join(PRESETS)}")
        model.add_argument("--alpha", type=float, help=f"path loss exponent ({DEFAULT_ALPHA:g})")
        model.add_argument("--dim", type=int, help=f"dimension ({DEFAULT_DIMENSION})")
        model.add_argument("--epsilon", type=float, help="bounded path loss constant (0)")
        model.add_argument(
            "--tier",
            action="append",
            default=[],
            metavar="lambda:P:beta",
            help="tier density, power and threshold; repeat once per tier",
        )
        unit = model.add_mutually_exclusive_group()
        unit.add_argument(
            "--beta-db",
            dest="beta_linear",
            action="store_false",
            default=False,
            help="tier thresholds are in dB (default)",
        )
        unit.add_argument(
            "--beta-linear",
            dest="beta_linear",
            action="store_true",
            help="tier thresholds are linear",
        )
        model.add_argument("--beta2-db", type=float, help="override the threshold of tier 2 (dB)")
        model.add_argument("--fading", choices=sorted(FADING_MODELS), help="fading law (rayleigh)")

        plan = common.add_argument_group("plan")
        plan.add_argument("--slots", type=int, help=f"number of time slots ({DEFAULT_SLOTS})")
        plan.add_argument("--trials", type=int, help="Monte Carlo trials")
        plan.add_argument("--seed", type=int, help="master seed")
        plan.add_argument("--window-radius", type=float, help="sampling window radius")
        plan.add_argument(
            "--threads",
            type=int,
            help=f"worker processes (env {self.threads_variable})",
        )
        plan.add_argument("--out", help="output file (simulate) or folder (sweep)")

        parser = argparse.ArgumentParser(
            prog="hetnet-correlation",
            description="Interference correlation in K-tier heterogeneous cellular networks.",
        )
        subparsers = parser.add_subparsers(dest="command", required=True)
        subparsers.add_parser("analytic", parents=[common], help="evaluate the closed forms")

        simulate = subparsers.add_parser(
            "simulate", parents=[common], help="Monte Carlo estimate with its closed form"
        )
        simulate.add_argument("--mode", choices=SIMULATION_MODES, default="joint")
        simulate.add_argument("--separation", type=float, default=0.0)
        simulate.add_argument("--tier-index", type=int, default=1)

        sweep = subparsers.add_parser("sweep", parents=[common], help="run a parameter sweep")
        sweep.add_argument("--spec", help="JSON file describing the sweep")
        return parser

    def _resolveThreads(self, args: argparse.Namespace) -> int:
        if args.threads is not None:
            return args.threads
        value = os.environ.get(self.threads_variable)
        if value is None:
            return self._simulator.default_parallelism
        try:
            return int(value)
        except ValueError as e:
            raise ModelError(f"{self.threads_variable} must be an integer, got {value}.") from e

    def _resolveModel(self, args: argparse.Namespace) -> NetworkModel:
        explicit = args.tier or any(
            v is not None for v in (args.alpha, args.dim, args.epsilon)
        )
        if args.preset is not None:
            if explicit:
                raise ModelError("A preset cannot be combined with an explicit model.")
            model = figurePreset(args.preset).base_model
        else:
            if not args.tier:
                raise ModelError("An explicit model needs at least one --tier (or a --preset).")
            model = NetworkModel(
                tiers=tuple(_parseTier(t, args.beta_linear) for t in args.tier),
                alpha=DEFAULT_ALPHA if args.alpha is None else args.alpha,
                dimension=DEFAULT_DIMENSION if args.dim is None else args.dim,
                epsilon=DEFAULT_EPSILON if args.epsilon is None else args.epsilon,
            )

        if args.beta2_db is not None:
            model = model.withTier(2, threshold=dbToLinear(args.beta2_db))
        return model

    def _resolvePlan(self, args: argparse.Namespace) -> SimPlan:
        return SimPlan(
            trials=self.default_trials if args.trials is None else args.trials,
            slots=DEFAULT_SLOTS if args.slots is None else args.slots,
            master_seed=self.default_seed if args.seed is None else args.seed,
            window_radius=args.window_radius,
            parallelism=self._resolveThreads(args),
        )

    def _resolveConfig(
        self, args: argparse.Namespace, spec: SweepSpec | None = None
    ) -> RunConfig:
        """Materialize every default of a parsed command line.

        A sweep takes its model and plan from the sweep spec, so the echoed
        configuration is the one that actually runs.
        """
        if args.command == "sweep":
            model, plan = spec.base_model, spec.plan
            fading = next((k for k, v in FADING_MODELS.items() if v == spec.fading), "custom")
        else:
            model, plan = self._resolveModel(args), self._resolvePlan(args)
            fading = args.fading or "rayleigh"
        return RunConfig(
            command=args.command,
            model=model,
            plan=plan,
            preset=args.preset,
            out=args.out,
            mode=getattr(args, "mode", "joint"),
            separation=getattr(args, "separation", 0.0),
            fading=fading,
            tier_index=getattr(args, "tier_index", 1),
            spec_path=getattr(args, "spec", None),
        )

    def _fmt(self, value: float | None) -> str:
        if value is None:
            return "n/a"
        return f"{value:.{self.significant_digits}g}"

    def _printJson(self, title: str, data: dict[str, Any]) -> None:
        print(f"{title}:")
        print(ujson.dumps(data, indent=2, sort_keys=True))

    def _printComparison(self, label: str, estimate: Estimate, closed_form: float) -> None:
        print(
            f"{label}: simulated {estimate} | closed form {self._fmt(closed_form)} "
            f"| z {self._fmt(estimate.zScore(closed_form))}"
        )

    def _printApproximate(self, model: NetworkModel) -> None:
        if model.is_approximate:
            thresholds = ", ".join(
                f"{linearToDb(model.tier(k).threshold):.3g} dB" for k in model.approximate_tiers
            )
            print(
                "approximate-regime: thresholds at most 0 dB in tiers "
                f"{model.approximate_tiers} ({thresholds}), closed forms are approximations"
            )

    def _analyticCommand(self, config: RunConfig) -> int:
        """Print the closed-form results of a model.

        Args:
            config (RunConfig)

        Returns:
            int: exit code
        """
        model = config.model
        n = config.plan.slots
        fading = FADING_MODELS[config.fading]
        d = corrmath.delta(model)
        lower, upper = corrmath.jointSuccessBounds(model, n)
        conditional = corrmath.conditionalSuccess(n, d) if n >= 2 else None

        print(f"delta: {self._fmt(d)}")
        print(f"p(1): {self._fmt(corrmath.jointSuccess(model, 1))}")
        print(f"p(n) [n={n}]: {self._fmt(corrmath.jointSuccess(model, n))}")
        print(f"independent (p(1))^n: {self._fmt(corrmath.independentJointSuccess(model, n))}")
        print(f"bounds: [{self._fmt(lower)}, {self._fmt(upper)}]")
        print(f"conditional success: {self._fmt(conditional)}")
        rho = corrmath.temporalCorrCoefficient(fading)
        print(f"temporal correlation coefficient: {self._fmt(rho)}")

        if model.tier_count >= 2:
            for tier_index in range(1, model.tier_count + 1):
                verdict = corrmath.monotonicityVerdict(model, tier_index)
                print(
                    f"tier {tier_index} density/power: {verdict.direction.value} "
                    f"(margin {self._fmt(verdict.margin)})"
                )
        if model.is_bounded:
            print(f"interference mean: {self._fmt(corrmath.interferenceMean(model, fading))}")
            print(
                f"interference variance: {self._fmt(corrmath.interferenceVariance(model, fading))}"
            )
        self._printApproximate(model)
        return EXIT_SUCCESS

    def _simulateCommand(self, config: RunConfig) -> int:
        """Print a Monte Carlo estimate next to its closed form.

        Args:
            config (RunConfig)

        Returns:
            int: exit code
        """
        model, plan, n = config.model, config.plan, config.plan.slots
        fading = FADING_MODELS[config.fading]
        results: list[tuple[str, Estimate, float]] = []

        if config.mode == "joint":
            closed = corrmath.jointSuccess(model, n)
            estimate = self._simulator.estimateJointSuccess(model, plan)
            results.append((f"p(n) [n={n}]", estimate, closed))
        elif config.mode == "conditional":
            closed = corrmath.conditionalSuccess(n, corrmath.delta(model))
            estimate = self._simulator.estimateConditionalSuccess(model, plan, n)
            results.append((f"conditional success [n={n}]", estimate, closed))
        elif config.mode == "moments":
            mean, variance = self._simulator.estimateInterferenceMoments(
                model, plan, config.fading
            )
            results.append(("interference mean", mean, corrmath.interferenceMean(model, fading)))
            results.append(
                ("interference variance", variance, corrmath.interferenceVariance(model, fading))
            )
        elif config.mode == "correlation":
            if not model.is_bounded:
                raise ModeConflictError("Correlation mode needs epsilon > 0.")
            closed = corrmath.spatialCorrCoefficient(model, config.separation, fading)
            mode = "temporal" if config.separation == 0 else "spatiotemporal"
            estimate = self._simulator.estimateCorrCoefficient(
                model, plan, config.separation, mode, config.fading
            )
            results.append((f"correlation [separation={config.separation:g}]", estimate, closed))
        else:
            closed = corrmath.orthogonalTierJointSuccess(
                model.tier(config.tier_index), corrmath.delta(model), n
            )
            estimate = self._simulator.estimateOrthogonalJointSuccess(
                model, plan, config.tier_index
            )
            results.append((f"orthogonal tier {config.tier_index} p(n) [n={n}]", estimate, closed))

        for label, estimate, closed in results:
            self._printComparison(label, estimate, closed)
        if config.mode in ("joint", "conditional", "orthogonal"):
            self._printApproximate(model)

        if config.out:
            flags = frozenset({"approximate-regime"}) if model.is_approximate else frozenset()
            rows = [
                SweepRow(sweep_value=float(n), analytic=closed, sim=estimate, flags=flags)
                for _, estimate, closed in results
            ]
            self._runner.writeRows(rows, config.out)
        return EXIT_SUCCESS

    def _loadSweepSpec(self, args: argparse.Namespace) -> SweepSpec:
        """Load the preset or the spec file of a sweep and apply the plan overrides."""
        if (args.preset is None) == (args.spec is None):
            raise ModelError("A sweep needs exactly one of --preset and --spec.")
        model_flags = {
            "--tier": bool(args.tier),
            "--alpha": args.alpha is not None,
            "--dim": args.dim is not None,
            "--epsilon": args.epsilon is not None,
            "--slots": args.slots is not None,
            "--beta2-db": args.beta2_db is not None,
            "--beta-linear": args.beta_linear,
        }
        given = [flag for flag, present in model_flags.items() if present]
        if given:
            raise ModelError(
                f"A sweep takes its model from --preset or --spec; remove {', '.join(given)}."
            )

        if args.preset is not None:
            spec = figurePreset(args.preset)
        else:
            with open(args.spec, encoding="utf-8") as json_file:
                try:
                    data = ujson.load(json_file)
                except ValueError as e:
                    raise ModelError(f"Sweep spec {args.spec} is not valid JSON: {e}.") from e
            spec = SweepSpec.fromDict(data)

        changes: dict[str, Any] = {"parallelism": self._resolveThreads(args)}
        if args.trials is not None:
            changes["trials"] = args.trials
        if args.seed is not None:
            changes["master_seed"] = args.seed
        if args.window_radius is not None:
            changes["window_radius"] = args.window_radius
        spec = replace(spec, plan=replace(spec.plan, **changes))
        if args.fading is not None:
            spec = replace(spec, fading=FADING_MODELS[args.fading])
        return spec

    def _sweepCommand(self, config: RunConfig, spec: SweepSpec) -> int:
        """Run a sweep, write its tables and print its report.

        Args:
            config (RunConfig)
            spec (SweepSpec): sweep with the command line overrides applied

        Returns:
            int: exit code, EXIT_FAILURE when a bound is violated
        """
        self._printJson("sweep", spec.serialize())

        start = time.perf_counter()
        rows = self._runner.runSweep(spec)
        runtime = time.perf_counter() - start

        paths = self._runner.writeCsv(spec, rows, config.out)
        report = summaryReport(spec, rows, runtime)
        self._runner.writeReport(report, config.out)

        for file_path in paths:
            print(f"written {file_path}")
        failed = sum(1 for r in rows if r.failed)
        if failed:
            print(f"failed rows: {failed}")
        print(report)
        return EXIT_SUCCESS if report.bound_violations == 0 else EXIT_FAILURE

    def run(self, argv: list[str]) -> int:
        """Run a command line.

        Args:
            argv (list[str]): arguments, without the program name

        Returns:
            int: 0 on success, 2 on invalid parameters, 3 on a mode conflict,
                4 on I/O failure, 1 on any other failure
        """
        try:
            args = self._parser.parse_args(argv)
        except SystemExit as e:
            return EXIT_SUCCESS if e.code in (0, None) else EXIT_VALIDATION

        try:
            spec = self._loadSweepSpec(args) if args.command == "sweep" else None
            config = self._resolveConfig(args, spec)
            logging.info(f"Resolved configuration: {config}")
            self._printJson("configuration", config.serialize())

            if config.command == "analytic":
                return self._analyticCommand(config)
            if config.command == "simulate":
                return self._simulateCommand(config)
            return self._sweepCommand(config, spec)

        except ModelError as e:
            logging.error(f"Invalid parameters: {e}")
            print(f"error: {e}")
            return EXIT_VALIDATION
        except ModeConflictError as e:
            logging.error(f"Mode conflict: {e}")
            print(f"error: {e}")
            return EXIT_MODE_CONFLICT
        except OSError as e:
            logging.error(f"I/O failure: {e}")
            print(f"error: {e}")
            return EXIT_IO
        except HetnetError as e:
            logging.error(f"Run failed: {e}")
            print(f"error: {e}")
            return EXIT_FAILURE

    @property
    def threads_variable(self) -> str:
        return self._settings["threads_variable"]

    @property
    def significant_digits(self) -> int:
        return self._settings["significant_digits"]

    @property
    def default_trials(self) -> int:
        return self._settings["default_trials"]

    @property
    def default_seed(self) -> int:
        return self._settings["default_seed"]

    def __repr__(self) -> str:
        """Return string representation of the CommandLine object."""
        return "\n\t· ".join(
            [
                f"{self.__class__.__name__}:",
                f"threads variable: {self.threads_variable}",
                f"significant digits: {self.significant_digits}",
                f"default trials: {self.default_trials}",
                f"default seed: {self.default_seed}",
            ]
        )

    def __str__(self) -> str:
        """Return string representation of the CommandLine object."""
        return self.__repr__()
