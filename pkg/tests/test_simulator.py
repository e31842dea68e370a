import math
import unittest
from dataclasses import replace

import numpy as np

from modules import corrmath
from modules.common import dbToLinear
from modules.data import RAYLEIGH_FADING, NetworkModel, SimPlan, TierParams
from modules.entities import Estimate, Realization
from modules.errors import ModeConflictError, ModelError
from modules.simulator import Simulator, sirAtOrigin

# estimates must land within this many standard errors of the closed form
Z_TOLERANCE = 4.0


class SimulatorBaseTest:
    def setUp(self) -> None:
        self._simulator = Simulator()
        self._single = NetworkModel(tiers=(TierParams(1.0, 1.0, 1.0),), alpha=4.0)
        self._two_tier = NetworkModel(
            tiers=(TierParams(1.0, 10.0, 1.0), TierParams(2.0, 1.0, 1.0)), alpha=3.0
        )
        self._bounded = NetworkModel(
            tiers=(TierParams(1.0, 1.0, 1.0),), alpha=4.0, epsilon=1.0
        )

    def _assertAgrees(self, estimate: Estimate, expected: float) -> None:
        self.assertTrue(estimate.is_defined)
        self.assertGreater(estimate.std_error, 0)
        self.assertLess(
            abs(estimate.zScore(expected)),
            Z_TOLERANCE,
            f"estimate {estimate} too far from {expected}",
        )


class RealizationTest(SimulatorBaseTest, unittest.TestCase):
    def testDeterminism(self):
        plan = SimPlan(trials=10, slots=3, master_seed=42, window_radius=5.0)
        first = self._simulator.sampleRealization(self._two_tier, plan, 7)
        second = self._simulator.sampleRealization(self._two_tier, plan, 7)
        other = self._simulator.sampleRealization(self._two_tier, plan, 8)

        np.testing.assert_array_equal(first.points, second.points)
        np.testing.assert_array_equal(first.tiers, second.tiers)
        np.testing.assert_array_equal(first.fading, second.fading)
        self.assertFalse(
            first.size == other.size and np.array_equal(first.points, other.points)
        )

    def testGeometry(self):
        plan = SimPlan(trials=1, slots=2, master_seed=1, window_radius=5.0)
        counts = np.array(
            [
                self._simulator.sampleRealization(self._two_tier, plan, i).countByTier(2)
                for i in range(200)
            ]
        )
        expected = np.array([1.0, 2.0]) * math.pi * 25.0
        for tier in range(2):
            standard_error = math.sqrt(expected[tier] / len(counts))
            self.assertLess(
                abs(counts[:, tier].mean() - expected[tier]), Z_TOLERANCE * standard_error
            )

        realization = self._simulator.sampleRealization(self._two_tier, plan, 3)
        self.assertEqual(realization.points.shape, (realization.size, 2))
        self.assertEqual(realization.fading.shape, (realization.size, 2))
        self.assertTrue(np.all(realization.distances() <= 5.0))
        self.assertTrue(np.all(realization.fading > 0))
        self.assertEqual(realization.radius, 5.0)

    def testFadingChoice(self):
        plan = SimPlan(trials=1, slots=2, master_seed=5, window_radius=4.0)
        rayleigh = self._simulator.sampleRealization(self._single, plan, 0, "rayleigh")
        fixed = self._simulator.sampleRealization(self._single, plan, 0, "deterministic")

        np.testing.assert_array_equal(rayleigh.points, fixed.points)
        np.testing.assert_array_equal(fixed.fading, np.ones_like(fixed.fading))

        with self.assertRaises(ModelError):
            self._simulator.sampleRealization(self._single, plan, 0, "nakagami")
        with self.assertRaises(ModelError):
            self._simulator.sampleRealization(self._single, plan, -1)

    def testOtherDimensions(self):
        for dimension, alpha in ((1, 3.0), (3, 5.0)):
            model = NetworkModel(
                tiers=(TierParams(1.0, 1.0, 2.0),), alpha=alpha, dimension=dimension
            )
            plan = SimPlan(trials=1, master_seed=2, window_radius=3.0)
            realization = self._simulator.sampleRealization(model, plan, 0)
            self.assertEqual(realization.points.shape[1], dimension)
            self.assertTrue(np.all(realization.distances() <= 3.0))

    def testSirAtOrigin(self):
        realization = Realization(
            points=np.array([[1.0, 0.0], [0.0, 2.0]]),
            tiers=np.array([0, 0]),
            fading=np.ones((2, 2)),
            radius=3.0,
        )
        self.assertAlmostEqual(sirAtOrigin(realization, 0, 1, self._single), 16.0)
        self.assertAlmostEqual(sirAtOrigin(realization, 1, 2, self._single), 1 / 16)

        lone = Realization(
            points=np.array([[1.0, 1.0]]),
            tiers=np.array([0]),
            fading=np.ones((1, 1)),
            radius=3.0,
        )
        self.assertEqual(sirAtOrigin(lone, 0, 1, self._single), math.inf)

        with self.assertRaises(ModelError):
            sirAtOrigin(realization, 2, 1, self._single)
        with self.assertRaises(ModelError):
            sirAtOrigin(realization, 0, 3, self._single)


class WindowTest(SimulatorBaseTest, unittest.TestCase):
    def testExplicitRadius(self):
        plan = SimPlan(trials=1, window_radius=7.5)
        self.assertEqual(self._simulator.windowRadius(self._two_tier, plan), 7.5)
        self.assertEqual(self._simulator.windowRadius(self._two_tier, plan, 2.0), 9.5)

    def testSingularRule(self):
        plan = SimPlan(trials=1)
        radius = self._simulator.windowRadius(self._two_tier, plan)
        self.assertAlmostEqual(radius, self._simulator.window_factor / math.sqrt(2.0))

    def testBoundedRule(self):
        plan = SimPlan(trials=1)
        radius = self._simulator.windowRadius(self._bounded, plan)
        fraction = corrmath.truncatedInterferenceFraction(self._bounded, radius)
        self.assertAlmostEqual(
            fraction, self._simulator.truncation_fraction, delta=1e-3 * 1e-2
        )
        self.assertAlmostEqual(
            self._simulator.windowRadius(self._bounded, plan, 1.5), radius + 1.5
        )


class SuccessEstimateTest(SimulatorBaseTest, unittest.TestCase):
    def testSingleTier(self):
        for slots in (1, 2):
            plan = SimPlan(trials=3000, slots=slots, master_seed=11)
            estimate = self._simulator.estimateJointSuccess(self._single, plan)
            self._assertAgrees(estimate, corrmath.jointSuccess(self._single, slots))
            self.assertEqual(estimate.trials, 3000)

    def testTwoTierEqualThresholds(self):
        plan = SimPlan(trials=2500, slots=2, master_seed=12)
        estimate = self._simulator.estimateJointSuccess(self._two_tier, plan)
        self._assertAgrees(estimate, corrmath.jointSuccess(self._two_tier, 2))

    def testPowerInvariance(self):
        plan = SimPlan(trials=2000, slots=2, master_seed=13)
        louder = NetworkModel(
            tiers=tuple(
                TierParams(t.density, t.power * 10, t.threshold) for t in self._two_tier.tiers
            ),
            alpha=3.0,
        )
        first = self._simulator.estimateJointSuccess(self._two_tier, plan)
        second = self._simulator.estimateJointSuccess(louder, plan)
        self.assertLess(first.ci95[0], second.ci95[1])
        self.assertLess(second.ci95[0], first.ci95[1])

    def testParallelismInvariance(self):
        self._simulator._settings = {**self._simulator._settings, "chunk_size": 100}
        serial = SimPlan(trials=400, slots=2, master_seed=14, parallelism=1)
        parallel = SimPlan(trials=400, slots=2, master_seed=14, parallelism=3)

        first = self._simulator.estimateJointSuccess(self._single, serial)
        second = self._simulator.estimateJointSuccess(self._single, parallel)
        self.assertEqual(first, second)

    def testConditionalSuccess(self):
        plan = SimPlan(trials=3000, master_seed=15)
        estimate = self._simulator.estimateConditionalSuccess(self._single, plan, 2)
        self._assertAgrees(estimate, corrmath.conditionalSuccess(2, 0.5))

        again = self._simulator.estimateConditionalSuccess(self._single, plan, 2)
        self.assertEqual(estimate, again)

        with self.assertRaises(ModelError):
            self._simulator.estimateConditionalSuccess(self._single, plan, 1)

    def testOrthogonalJointSuccess(self):
        model = NetworkModel(
            tiers=(TierParams(1.0, 10.0, 1.5), TierParams(2.0, 1.0, 2.0)), alpha=4.0
        )
        plan = SimPlan(trials=3000, slots=2, master_seed=16)
        estimate = self._simulator.estimateOrthogonalJointSuccess(model, plan, 2)
        expected = corrmath.orthogonalTierJointSuccess(model.tier(2), 0.5, 2)
        self._assertAgrees(estimate, expected)

        with self.assertRaises(ModelError):
            self._simulator.estimateOrthogonalJointSuccess(model, plan, 3)

    def testUnequalThresholds(self):
        for beta_db in (-4.0, 10.0):
            model = self._two_tier.withTier(2, threshold=dbToLinear(beta_db))
            plan = SimPlan(trials=2500, slots=2, master_seed=17)
            estimate = self._simulator.estimateJointSuccess(model, plan)
            self._assertAgrees(estimate, corrmath.jointSuccess(model, 2))

    def testWindowDoubling(self):
        plan = SimPlan(trials=2000, slots=1, master_seed=18)
        radius = self._simulator.windowRadius(self._single, plan)
        default = self._simulator.estimateJointSuccess(self._single, plan)
        doubled = self._simulator.estimateJointSuccess(
            self._single, replace(plan, window_radius=2 * radius)
        )
        # the two windows sample different points, so their errors add up
        spread = math.hypot(default.std_error, doubled.std_error)
        self.assertLess(abs(default.value - doubled.value), Z_TOLERANCE * spread)

    def testStdErrorScaling(self):
        small = SimPlan(trials=400, slots=1, master_seed=19, window_radius=6.0)
        large = replace(small, trials=6400)
        first = self._simulator.estimateJointSuccess(self._single, small)
        second = self._simulator.estimateJointSuccess(self._single, large)
        # 16 times the trials, a quarter of the error
        ratio = second.std_error / first.std_error
        self.assertGreater(ratio, 0.2)
        self.assertLess(ratio, 0.3)

    def testConditionalGrowsWithAlpha(self):
        plan = SimPlan(trials=2000, master_seed=20, window_radius=10.0)
        estimates = {}
        for alpha in (3.0, 6.0):
            model = replace(self._two_tier, alpha=alpha)
            estimates[alpha] = self._simulator.estimateConditionalSuccess(model, plan, 2)
            self._assertAgrees(
                estimates[alpha], corrmath.conditionalSuccess(2, corrmath.delta(model))
            )
        self.assertGreater(estimates[6.0].value, estimates[3.0].value)

    def testSingularLawRequired(self):
        plan = SimPlan(trials=10, slots=2)
        with self.assertRaises(ModeConflictError):
            self._simulator.estimateJointSuccess(self._bounded, plan)
        with self.assertRaises(ModeConflictError):
            self._simulator.estimateConditionalSuccess(self._bounded, plan, 2)

    def testInvalidModel(self):
        model = NetworkModel(tiers=(TierParams(1.0, 1.0, 2.0),), alpha=2.0)
        with self.assertRaises(ModelError):
            self._simulator.estimateJointSuccess(model, SimPlan(trials=10))


class InterferenceEstimateTest(SimulatorBaseTest, unittest.TestCase):
    def testMoments(self):
        plan = SimPlan(trials=4000, master_seed=21)
        mean, variance = self._simulator.estimateInterferenceMoments(self._bounded, plan)

        self._assertAgrees(mean, corrmath.interferenceMean(self._bounded, RAYLEIGH_FADING))
        self._assertAgrees(
            variance, corrmath.interferenceVariance(self._bounded, RAYLEIGH_FADING)
        )

        with self.assertRaises(ModeConflictError):
            self._simulator.estimateInterferenceMoments(self._single, plan)

    def testMomentScaling(self):
        plan = SimPlan(trials=4000, master_seed=24, window_radius=12.0)
        mean, variance = self._simulator.estimateInterferenceMoments(self._bounded, plan)

        louder = self._bounded.withTier(1, power=2.0)
        louder_mean, louder_variance = self._simulator.estimateInterferenceMoments(louder, plan)
        self.assertAlmostEqual(louder_mean.value / mean.value, 2.0, places=9)
        self.assertAlmostEqual(louder_variance.value / variance.value, 4.0, places=9)

        _, fixed_variance = self._simulator.estimateInterferenceMoments(
            self._bounded, plan, "deterministic"
        )
        self.assertAlmostEqual(variance.value / fixed_variance.value, 2.0, delta=0.3)

    def testTemporalCorrelation(self):
        plan = SimPlan(trials=4000, master_seed=22)
        models = (
            self._bounded,
            NetworkModel(
                tiers=(TierParams(2.0, 5.0, 1.0), TierParams(0.5, 1.0, 1.0)),
                alpha=4.0,
                epsilon=1.0,
            ),
        )
        for model in models:
            estimate = self._simulator.estimateCorrCoefficient(model, plan)
            self._assertAgrees(estimate, 0.5)

        fixed = self._simulator.estimateCorrCoefficient(
            self._bounded, plan, fading="deterministic"
        )
        self.assertAlmostEqual(fixed.value, 1.0, places=9)

    def testSpatialCorrelation(self):
        plan = SimPlan(trials=4000, master_seed=23)
        estimate = self._simulator.estimateCorrCoefficient(
            self._bounded, plan, 1.0, "spatiotemporal"
        )
        expected = corrmath.spatialCorrCoefficient(self._bounded, 1.0, RAYLEIGH_FADING)
        self._assertAgrees(estimate, expected)
        self.assertLess(estimate.value, 0.5)

    def testCorrelationErrors(self):
        plan = SimPlan(trials=10)
        with self.assertRaises(ModeConflictError):
            self._simulator.estimateCorrCoefficient(self._single, plan)
        with self.assertRaises(ModelError):
            self._simulator.estimateCorrCoefficient(self._bounded, plan, 1.0, "temporal")
        with self.assertRaises(ModelError):
            self._simulator.estimateCorrCoefficient(self._bounded, plan, 0.0, "spatiotemporal")
        with self.assertRaises(ModelError):
            self._simulator.estimateCorrCoefficient(self._bounded, plan, 0.0, "spatial")

    def testDegenerateSamples(self):
        empty = NetworkModel(tiers=(TierParams(1e-9, 1.0, 1.0),), alpha=4.0, epsilon=1.0)
        plan = SimPlan(trials=20, window_radius=1.0)
        estimate = self._simulator.estimateCorrCoefficient(empty, plan)
        self.assertFalse(estimate.is_defined)


if __name__ == "__main__":
    unittest.main()
