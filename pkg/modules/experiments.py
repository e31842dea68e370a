"""Figure presets and the sweep runner pairing closed forms with Monte Carlo estimates."""
from __future__ import annotations

import csv
import logging
from dataclasses import replace
from os import makedirs, path
from typing import Any

import ujson

from modules import corrmath
from modules.common import SETTINGS_PATH, deriveSeed, loadSettings
from modules.data import (
    DETERMINISTIC_FADING,
    RAYLEIGH_FADING,
    FadingMoments,
    NetworkModel,
    SimPlan,
    SweepSpec,
    TierParams,
)
from modules.entities import ComparisonReport, SweepRow
from modules.errors import HetnetError, ModelError, PresetError, ReportError
from modules.simulator import Simulator

SUCCESS_TRIALS = 100_000
CORRELATION_TRIALS = 200_000
PRESET_SEED = 20_161_219
PRESETS = ("fig2", "fig3", "fig4", "fig5", "fig6")
BETA2_SERIES_DB = (-4.0, -2.0, 0.0, 1.0)
CSV_HEADER = [
    "sweep_value",
    "analytic",
    "sim_mean",
    "sim_stderr",
    "ci_lo",
    "ci_hi",
    "lower_bound",
    "upper_bound",
    "flags",
    "independent",
]


def _twoTierModel(
    density_1: float, power_1: float, density_2: float, power_2: float, alpha: float = 3.0
) -> NetworkModel:
    """Two-tier model with both thresholds at 0 dB."""
    return NetworkModel(
        tiers=(
            TierParams(density=density_1, power=power_1, threshold=1.0),
            TierParams(density=density_2, power=power_2, threshold=1.0),
        ),
        alpha=alpha,
    )


def figurePreset(name: str, parallelism: int = 1) -> SweepSpec:
    """Return the sweep reproducing one of the figures.

    Args:
        name (str): one of fig2, fig3, fig4, fig5, fig6
        parallelism (int, optional): worker count of the plan

    Returns:
        SweepSpec
    """
    success_plan = SimPlan(
        trials=SUCCESS_TRIALS, slots=2, master_seed=PRESET_SEED, parallelism=parallelism
    )

    if name == "fig2":
        model = NetworkModel(
            tiers=(TierParams(density=1.0, power=1.0, threshold=1.0),),
            alpha=4.0,
            epsilon=1.0,
        )
        return SweepSpec(
            name=name,
            base_model=model,
            sweep_variable="separation",
            grid=tuple(0.25 * i for i in range(13)),
            outputs=frozenset({"analytic", "simulated", "correlation"}),
            plan=replace(success_plan, trials=CORRELATION_TRIALS),
            series_variable="epsilon",
            series_values=(1.0, 0.1, 0.01),
            fading=RAYLEIGH_FADING,
        )

    if name == "fig3":
        return SweepSpec(
            name=name,
            base_model=_twoTierModel(1.0, 10.0, 2.0, 1.0),
            sweep_variable="beta_db",
            grid=(-4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 8.0, 10.0),
            outputs=frozenset({"analytic", "simulated", "bounds"}),
            plan=success_plan,
            tier=2,
        )

    if name == "fig4":
        return SweepSpec(
            name=name,
            base_model=_twoTierModel(1.0, 10.0, 1.0, 1.0),
            sweep_variable="density",
            grid=tuple(10.0 ** (k / 5.0 - 1.0) for k in range(11)),
            outputs=frozenset({"analytic", "simulated", "bounds"}),
            plan=success_plan,
            tier=2,
            series_variable="beta_db",
            series_values=BETA2_SERIES_DB,
        )

    if name == "fig5":
        return SweepSpec(
            name=name,
            base_model=_twoTierModel(1.0, 100.0, 2.0, 1.0),
            sweep_variable="power",
            grid=tuple(10.0 ** (k / 5.0) for k in range(11)),
            outputs=frozenset({"analytic", "simulated", "bounds"}),
            plan=success_plan,
            tier=2,
            series_variable="beta_db",
            series_values=BETA2_SERIES_DB,
        )

    if name == "fig6":
        return SweepSpec(
            name=name,
            base_model=_twoTierModel(1.0, 10.0, 2.0, 1.0),
            sweep_variable="slots",
            grid=tuple(float(n) for n in range(2, 11)),
            outputs=frozenset({"analytic", "simulated", "conditional"}),
            plan=success_plan,
            series_variable="alpha",
            series_values=(3.0, 6.0),
        )

    raise PresetError(f"Unknown preset: {name}. Available presets: {', '.join(PRESETS)}.")


def _fadingName(fading: FadingMoments) -> str:
    if fading == RAYLEIGH_FADING:
        return "rayleigh"
    if fading == DETERMINISTIC_FADING:
        return "deterministic"
    raise ModelError("Only Rayleigh or deterministic fading can be simulated.")


def countBoundViolations(rows: list[SweepRow], tolerance: float = 1e-12) -> int:
    """Count rows whose analytic value lies outside their bounds.

    Args:
        rows (list[SweepRow])
        tolerance (float, optional): absolute slack

    Returns:
        int
    """
    return sum(
        1
        for r in rows
        if r.has_bounds
        and r.analytic is not None
        and not r.lower_bound - tolerance <= r.analytic <= r.upper_bound + tolerance
    )


def compareReport(
    rows: list[SweepRow], name: str = "sweep", runtime_seconds: float = 0.0
) -> ComparisonReport:
    """Compare the simulated and analytic columns of a sweep.

    Rows flagged with an error are skipped; undefined estimates do not
    contribute a z-score.

    Args:
        rows (list[SweepRow])
        name (str, optional): name of the sweep
        runtime_seconds (float, optional): wall time of the sweep

    Returns:
        ComparisonReport
    """
    compared = [r for r in rows if not r.failed]
    if not compared:
        raise ReportError("No row to compare.")
    missing = [r.sweep_value for r in compared if r.analytic is None or r.sim is None]
    if missing:
        raise ReportError(f"Rows without analytic or simulated column: {missing}.")

    z_scores = tuple(r.sim.zScore(r.analytic) for r in compared if r.sim.is_defined)
    magnitudes = [abs(z) for z in z_scores]
    within = sum(1 for z in magnitudes if z <= 3.0)
    return ComparisonReport(
        name=name,
        rows_compared=len(z_scores),
        max_abs_z=max(magnitudes, default=0.0),
        frac_within_3se=within / len(magnitudes) if magnitudes else 0.0,
        bound_violations=countBoundViolations(rows),
        runtime_seconds=runtime_seconds,
        z_scores=z_scores,
    )


def summaryReport(
    spec: SweepSpec, rows: list[SweepRow], runtime_seconds: float = 0.0
) -> ComparisonReport:
    """Report of a sweep, with bound checks only when nothing was simulated."""
    if {"analytic", "simulated"} <= spec.outputs:
        return compareReport(rows, spec.name, runtime_seconds)
    return ComparisonReport(
        name=spec.name,
        rows_compared=0,
        max_abs_z=0.0,
        frac_within_3se=0.0,
        bound_violations=countBoundViolations(rows),
        runtime_seconds=runtime_seconds,
    )


class SweepRunner:
    """Runs sweeps and writes their tables."""

    _settings_path: str = SETTINGS_PATH
    _settings: dict[str, Any]

    def __init__(self, simulator: Simulator | None = None) -> SweepRunner:
        """Initialize the runner. Settings are automatically loaded.

        Args:
            simulator (Simulator, optional): engine for the simulated column
        """
        self._loadSettings()
        self._simulator = simulator or Simulator()

    def _loadSettings(self) -> None:
        """Load settings from file."""
        self._settings = loadSettings("Experiments", self._settings_path)

    def _createFolder(self, folder: str) -> None:
        """Create the output folder if it does not exist."""
        if not path.exists(folder):
            logging.info(f"Creating folder {folder}.")
            makedirs(folder)

    def _runRow(
        self,
        spec: SweepSpec,
        series_index: int,
        series_value: float | None,
        row_index: int,
        sweep_value: float,
    ) -> SweepRow:
        """Evaluate one grid point. Failures end up in the row flags."""
        values: dict[str, Any] = {}
        flags: set[str] = set()
        try:
            model, n, separation = spec.resolve(series_value, sweep_value)
            plan = replace(
                spec.plan,
                slots=n,
                master_seed=deriveSeed(spec.plan.master_seed, series_index, row_index),
            )
            if spec.quantity != "correlation" and model.is_approximate:
                flags.add("approximate-regime")

            if spec.quantity == "joint":
                if "analytic" in spec.outputs:
                    values["analytic"] = corrmath.jointSuccess(model, n)
                    values["independent"] = corrmath.independentJointSuccess(model, n)
                if "bounds" in spec.outputs:
                    values["lower_bound"], values["upper_bound"] = (
                        corrmath.jointSuccessBounds(model, n)
                    )
                if "simulated" in spec.outputs:
                    values["sim"] = self._simulator.estimateJointSuccess(model, plan)

            elif spec.quantity == "conditional":
                if "analytic" in spec.outputs:
                    values["analytic"] = corrmath.conditionalSuccess(n, corrmath.delta(model))
                if "simulated" in spec.outputs:
                    values["sim"] = self._simulator.estimateConditionalSuccess(model, plan, n)

            else:
                if "analytic" in spec.outputs:
                    values["analytic"] = corrmath.spatialCorrCoefficient(
                        model, separation, spec.fading
                    )
                if "simulated" in spec.outputs:
                    mode = "temporal" if separation == 0 else "spatiotemporal"
                    values["sim"] = self._simulator.estimateCorrCoefficient(
                        model, plan, separation, mode, _fadingName(spec.fading)
                    )

        except HetnetError as e:
            logging.error(f"Row {sweep_value} of {spec.name} failed. Error: {e}")
            flags.add(f"error:{e.__class__.__name__}")

        sim = values.get("sim")
        if sim is not None and not sim.is_defined:
            flags.add("undefined")
        row = SweepRow(
            sweep_value=sweep_value,
            series=spec.seriesLabel(series_value),
            flags=frozenset(flags),
            **values,
        )
        logging.info(f"{spec.name} {row.series} {sweep_value:g}: {row.analytic} / {sim}")
        return row

    def runSweep(self, spec: SweepSpec) -> list[SweepRow]:
        """Run every grid point of every series of a sweep.

        Rows come out series by series, in grid order. Each row simulates with
        a seed derived from the plan seed and its position, so a sweep is
        reproducible as a whole and row by row.

        Args:
            spec (SweepSpec)

        Returns:
            list[SweepRow]
        """
        logging.info(f"Running sweep {spec.name} over {spec.sweep_variable}.")
        rows = []
        for series_index, series_value in enumerate(spec.series):
            for row_index, sweep_value in enumerate(spec.grid):
                rows.append(
                    self._runRow(spec, series_index, series_value, row_index, sweep_value)
                )
        logging.info(f"Sweep {spec.name} completed with {len(rows)} rows.")
        return rows

    def writeRows(self, rows: list[SweepRow], file_path: str) -> str:
        """Write rows to a CSV file (UTF-8, LF line endings).

        Args:
            rows (list[SweepRow])
            file_path (str)

        Returns:
            str: path of the file
        """
        with open(file_path, "w", encoding="utf-8", newline="") as csv_file:
            writer = csv.writer(csv_file, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in rows:
                writer.writerow(row.csvRecord(self.float_format))
        logging.info(f"Written {len(rows)} rows to {file_path}.")
        return file_path

    def writeCsv(
        self, spec: SweepSpec, rows: list[SweepRow], folder: str | None = None
    ) -> list[str]:
        """Write one CSV file per series of a sweep.

        Args:
            spec (SweepSpec)
            rows (list[SweepRow])
            folder (str, optional): destination, defaults to the settings folder

        Returns:
            list[str]: written paths
        """
        folder = folder or self.output_folder
        self._createFolder(folder)
        paths = []
        for series_value in spec.series:
            label = spec.seriesLabel(series_value)
            suffix = f"_{label.replace('=', '_')}" if label else ""
            series_rows = [r for r in rows if r.series == label]
            file_path = path.join(folder, f"{spec.name}{suffix}.csv")
            paths.append(self.writeRows(series_rows, file_path))
        return paths

    def writeReport(
        self, report: ComparisonReport, folder: str | None = None
    ) -> tuple[str, str]:
        """Write a report as text and as JSON.

        Args:
            report (ComparisonReport)
            folder (str, optional): destination, defaults to the settings folder

        Returns:
            tuple[str, str]: paths of the text and JSON files
        """
        folder = folder or self.output_folder
        self._createFolder(folder)
        text_path = path.join(folder, f"{report.name}_report.txt")
        json_path = path.join(folder, f"{report.name}_report.json")
        with open(text_path, "w", encoding="utf-8") as text_file:
            text_file.write(f"{report}\n")
        with open(json_path, "w", encoding="utf-8") as json_file:
            ujson.dump(report.serialize(), json_file, indent=2)
        return text_path, json_path

    @property
    def output_folder(self) -> str:
        return self._settings["output_folder"]

    @property
    def float_format(self) -> str:
        return self._settings["float_format"]

    @property
    def simulator(self) -> Simulator:
        return self._simulator

    def __repr__(self) -> str:
        """Return string representation of the SweepRunner object."""
        return "\n\t· ".join(
            [
                f"{self.__class__.__name__}:",
                f"output folder: {self.output_folder}",
                f"float format: {self.float_format}",
                f"presets: {', '.join(PRESETS)}",
            ]
        )

    def __str__(self) -> str:
        """Return string representation of the SweepRunner object."""
        return self.__repr__()
