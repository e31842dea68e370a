import contextlib
import io
import tempfile
import unittest
from os import listdir, path

import ujson

from modules.commandline import (
    EXIT_FAILURE,
    EXIT_IO,
    EXIT_MODE_CONFLICT,
    EXIT_SUCCESS,
    EXIT_VALIDATION,
    CommandLine,
)

TWO_TIER = ["--alpha", "3", "--tier", "1:10:0", "--tier", "2:1:0"]


class CommandLineTest(unittest.TestCase):
    def setUp(self) -> None:
        self._command_line = CommandLine()
        self._folder = tempfile.TemporaryDirectory()

    def tearDown(self) -> None:
        self._folder.cleanup()

    def _run(self, *argv: str) -> tuple[int, str]:
        output = io.StringIO()
        with contextlib.redirect_stdout(output):
            code = self._command_line.run(list(argv))
        return code, output.getvalue()

    def testAnalytic(self):
        code, output = self._run("analytic", *TWO_TIER)
        self.assertEqual(code, EXIT_SUCCESS)
        self.assertIn("configuration:", output)
        self.assertIn("p(n) [n=2]: 0.248098", output)
        self.assertIn("tier 2 density/power: flat", output)
        self.assertIn("approximate-regime", output)

        code, output = self._run("analytic", "--preset", "fig3", "--beta2-db", "-4")
        self.assertEqual(code, EXIT_SUCCESS)
        self.assertIn("p(n) [n=2]: 0.311441", output)
        self.assertIn("bounds: [0.295191, 0.326993]", output)
        self.assertIn("approximate-regime: thresholds at most 0 dB in tiers [1, 2]", output)
        self.assertIn("(0 dB, -4 dB)", output)

    def testThresholdUnits(self):
        _, decibel = self._run("analytic", "--tier", "1:1:3")
        _, linear = self._run("analytic", "--beta-linear", "--tier", "1:1:2")
        self.assertNotIn("approximate-regime", decibel)
        self.assertNotIn("approximate-regime", linear)
        self.assertIn('"threshold": 2.0', linear)
        self.assertNotIn('"threshold": 3.0', decibel)

    def testBoundedAnalytic(self):
        code, output = self._run(
            "analytic", "--epsilon", "1", "--tier", "1:1:0", "--slots", "3"
        )
        self.assertEqual(code, EXIT_SUCCESS)
        self.assertIn("interference mean: 4.9348", output)
        self.assertIn("interference variance: 4.9348", output)
        self.assertIn("temporal correlation coefficient: 0.5", output)
        self.assertIn("p(n) [n=3]", output)

    def testValidationErrors(self):
        invalid = (
            ("analytic", "--alpha", "2", "--tier", "1:1:0"),
            ("analytic", "--preset", "fig9"),
            ("analytic", "--preset", "fig3", "--tier", "1:1:0"),
            ("analytic",),
            ("analytic", "--tier", "1:1"),
            ("analytic", "--tier", "1:x:0"),
            ("analytic", "--tier", "-1:1:0"),
            ("simulate", "--tier", "1:1:0", "--trials", "0"),
            ("simulate", *TWO_TIER, "--mode", "orthogonal", "--tier-index", "3"),
            ("sweep",),
            ("sweep", "--preset", "fig3", "--spec", "sweep.json"),
            ("analytic", "--beta-db", "--beta-linear", "--tier", "1:1:0"),
            ("simulate", "--mode", "unknown", "--tier", "1:1:0"),
            ("unknown",),
            (),
        )
        for argv in invalid:
            with contextlib.redirect_stderr(io.StringIO()):
                code, _ = self._run(*argv)
            self.assertEqual(code, EXIT_VALIDATION, f"{argv} returned {code}")

    def testModeConflict(self):
        code, output = self._run(
            "simulate", "--mode", "correlation", "--tier", "1:1:0", "--trials", "10"
        )
        self.assertEqual(code, EXIT_MODE_CONFLICT)
        self.assertIn("error:", output)

        code, _ = self._run("simulate", "--mode", "moments", "--tier", "1:1:0", "--trials", "10")
        self.assertEqual(code, EXIT_MODE_CONFLICT)

        code, _ = self._run(
            "simulate", "--epsilon", "1", "--tier", "1:1:0", "--trials", "10", "--threads", "1"
        )
        self.assertEqual(code, EXIT_MODE_CONFLICT)

    def testSimulateIsReproducible(self):
        argv = (
            "simulate",
            *TWO_TIER,
            "--trials",
            "300",
            "--seed",
            "9",
            "--window-radius",
            "8",
            "--threads",
            "1",
        )
        code, first = self._run(*argv)
        _, second = self._run(*argv)
        self.assertEqual(code, EXIT_SUCCESS)
        self.assertEqual(first, second)
        self.assertIn("p(n) [n=2]: simulated", first)
        self.assertIn("closed form 0.248098", first)

        _, reseeded = self._run(*argv[:-6], "--seed", "10", *argv[-4:])
        self.assertNotEqual(first, reseeded)

    def testSimulateModes(self):
        common = ("--trials", "200", "--window-radius", "6", "--threads", "1")
        code, output = self._run("simulate", "--mode", "conditional", *TWO_TIER, *common)
        self.assertEqual(code, EXIT_SUCCESS)
        self.assertIn("conditional success [n=2]", output)

        code, output = self._run(
            "simulate", "--mode", "orthogonal", "--tier-index", "2", *TWO_TIER, *common
        )
        self.assertEqual(code, EXIT_SUCCESS)
        self.assertIn("orthogonal tier 2 p(n) [n=2]", output)

        bounded = ("--epsilon", "1", "--tier", "1:1:0")
        code, output = self._run("simulate", "--mode", "moments", *bounded, *common)
        self.assertEqual(code, EXIT_SUCCESS)
        self.assertIn("interference mean: simulated", output)
        self.assertIn("interference variance: simulated", output)

        code, output = self._run(
            "simulate", "--mode", "correlation", "--separation", "0.5", *bounded, *common
        )
        self.assertEqual(code, EXIT_SUCCESS)
        self.assertIn("correlation [separation=0.5]", output)

    def testSimulateOutput(self):
        out = path.join(self._folder.name, "joint.csv")
        code, _ = self._run(
            "simulate", *TWO_TIER, "--trials", "100", "--threads", "1", "--out", out
        )
        self.assertEqual(code, EXIT_SUCCESS)
        with open(out, encoding="utf-8") as csv_file:
            lines = csv_file.read().splitlines()
        self.assertEqual(len(lines), 2)
        self.assertTrue(lines[0].startswith("sweep_value,analytic,sim_mean"))
        self.assertTrue(lines[1].startswith("2,0.248098"))
        self.assertIn("approximate-regime", lines[1])

        missing = path.join(self._folder.name, "missing", "joint.csv")
        code, _ = self._run(
            "simulate", *TWO_TIER, "--trials", "100", "--threads", "1", "--out", missing
        )
        self.assertEqual(code, EXIT_IO)

    def testSweepSpecFile(self):
        spec = {
            "name": "tiny",
            "base_model": {
                "alpha": 3.0,
                "tiers": [
                    {"density": 1.0, "power": 10.0, "threshold": 1.0},
                    {"density": 2.0, "power": 1.0, "threshold": 1.0},
                ],
            },
            "sweep_variable": "beta_db",
            "tier": 2,
            "grid": [-2.0, 0.0, 2.0],
            "outputs": ["analytic", "bounds"],
            "plan": {"trials": 10, "slots": 2},
        }
        spec_path = path.join(self._folder.name, "tiny.json")
        with open(spec_path, "w", encoding="utf-8") as json_file:
            ujson.dump(spec, json_file)
        out = path.join(self._folder.name, "results")

        code, output = self._run("sweep", "--spec", spec_path, "--out", out, "--threads", "1")
        self.assertEqual(code, EXIT_SUCCESS)
        self.assertIn("sweep:", output)
        self.assertIn(f"written {path.join(out, 'tiny.csv')}", output)
        self.assertEqual(
            sorted(listdir(out)), ["tiny.csv", "tiny_report.json", "tiny_report.txt"]
        )
        with open(path.join(out, "tiny_report.json"), encoding="utf-8") as json_file:
            self.assertEqual(ujson.load(json_file)["bound_violations"], 0)

        code, _ = self._run("sweep", "--spec", path.join(self._folder.name, "none.json"))
        self.assertEqual(code, EXIT_IO)

        spec["grid"] = [2.0, 2.0]
        with open(spec_path, "w", encoding="utf-8") as json_file:
            ujson.dump(spec, json_file)
        code, _ = self._run("sweep", "--spec", spec_path, "--out", out)
        self.assertEqual(code, EXIT_VALIDATION)

    def testFailedSweepRows(self):
        spec = {
            "name": "broken",
            "base_model": {"alpha": 4.0, "tiers": [{"density": 1, "power": 1, "threshold": 2}]},
            "sweep_variable": "alpha",
            "grid": [1.5, 1.8],
            "outputs": ["analytic", "simulated"],
            "plan": {"trials": 10, "slots": 2},
        }
        spec_path = path.join(self._folder.name, "broken.json")
        with open(spec_path, "w", encoding="utf-8") as json_file:
            ujson.dump(spec, json_file)

        code, output = self._run(
            "sweep", "--spec", spec_path, "--out", self._folder.name, "--threads", "1"
        )
        self.assertEqual(code, EXIT_FAILURE)
        self.assertIn("error:", output)

    def testMalformedInput(self):
        spec_path = path.join(self._folder.name, "malformed.json")
        with open(spec_path, "w", encoding="utf-8") as json_file:
            json_file.write("{not json")
        code, output = self._run("sweep", "--spec", spec_path, "--threads", "1")
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("error:", output)

        spec = {
            "name": "malformed",
            "base_model": {
                "alpha": "abc",
                "tiers": [{"density": 1.0, "power": 1.0, "threshold": 1.0}],
            },
            "sweep_variable": "slots",
            "grid": [2.0, 3.0],
            "outputs": ["analytic"],
        }
        with open(spec_path, "w", encoding="utf-8") as json_file:
            ujson.dump(spec, json_file)
        code, _ = self._run("sweep", "--spec", spec_path, "--threads", "1")
        self.assertEqual(code, EXIT_VALIDATION)

        for argv in (
            ("analytic", "--tier", "1:1:4000"),
            ("analytic", "--preset", "fig3", "--beta2-db", "4000"),
        ):
            code, _ = self._run(*argv)
            self.assertEqual(code, EXIT_VALIDATION, f"{argv} returned {code}")

    def testSweepRejectsModelFlags(self):
        for flags in (
            ("--tier", "1:1:0"),
            ("--alpha", "3"),
            ("--dim", "1"),
            ("--epsilon", "1"),
            ("--slots", "3"),
            ("--beta2-db", "-4"),
            ("--beta-linear",),
        ):
            code, output = self._run("sweep", "--preset", "fig3", *flags, "--threads", "1")
            self.assertEqual(code, EXIT_VALIDATION, f"{flags} returned {code}")
            self.assertIn(flags[0], output)

        code, _ = self._run("sweep", "--preset", "fig7")
        self.assertEqual(code, EXIT_VALIDATION)

    def testSweepEchoesItsPlan(self):
        spec = {
            "name": "echo",
            "base_model": {
                "alpha": 4.0,
                "tiers": [{"density": 1.0, "power": 1.0, "threshold": 2.0}],
            },
            "sweep_variable": "slots",
            "grid": [1.0, 2.0],
            "outputs": ["analytic"],
            "plan": {"trials": 10, "slots": 2, "master_seed": 5},
        }
        spec_path = path.join(self._folder.name, "echo.json")
        with open(spec_path, "w", encoding="utf-8") as json_file:
            ujson.dump(spec, json_file)
        out = path.join(self._folder.name, "echo")

        options = ("--out", out, "--threads", "1", "--fading", "deterministic")
        code, output = self._run("sweep", "--spec", spec_path, *options)
        self.assertEqual(code, EXIT_SUCCESS)
        configuration = ujson.loads(output.split("sweep:")[0].split("configuration:")[1])
        self.assertEqual(configuration["plan"]["trials"], 10)
        self.assertEqual(configuration["plan"]["master_seed"], 5)
        self.assertEqual(configuration["model"]["alpha"], 4.0)
        self.assertEqual(configuration["fading"], "deterministic")

    def testPresetSweep(self):
        out = path.join(self._folder.name, "fig6")
        code, _ = self._run(
            "sweep",
            "--preset",
            "fig6",
            "--out",
            out,
            "--trials",
            "200",
            "--window-radius",
            "6",
            "--threads",
            "1",
        )
        self.assertEqual(code, EXIT_SUCCESS)
        for name in ("fig6_alpha_3.csv", "fig6_alpha_6.csv"):
            with open(path.join(out, name), encoding="utf-8") as csv_file:
                rows = [line.split(",") for line in csv_file.read().splitlines()[1:]]
            self.assertEqual(len(rows), 9)
            conditional = [float(row[1]) for row in rows]
            self.assertEqual(conditional, sorted(conditional))
            self.assertLess(conditional[0], conditional[-1])

    def testThreadsVariable(self):
        self.assertEqual(self._command_line.threads_variable, "HETNET_THREADS")
        self.assertIn("CommandLine:", repr(self._command_line))
        self.assertEqual(str(self._command_line), repr(self._command_line))


if __name__ == "__main__":
    unittest.main()
