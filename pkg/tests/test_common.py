import math
import random
import unittest

from modules.common import SETTINGS_PATH, dbToLinear, deriveSeed, linearToDb, loadSettings
from modules.errors import ModelError


class CommonTest(unittest.TestCase):
    _tests_num: int = 100

    def testLoadSettings(self):
        for section in ("Simulator", "Experiments", "CommandLine"):
            settings = loadSettings(section, SETTINGS_PATH)
            self.assertIsInstance(settings, dict)
            self.assertGreater(len(settings), 0)

        with self.assertRaises(KeyError):
            loadSettings("Reddit")

    def testDbConversion(self):
        self.assertEqual(dbToLinear(0), 1.0)
        self.assertAlmostEqual(dbToLinear(10), 10.0, places=12)
        self.assertAlmostEqual(dbToLinear(-4), 0.3981071705534972, places=15)

        for _ in range(self._tests_num):
            value_db = random.uniform(-30, 30)
            self.assertAlmostEqual(linearToDb(dbToLinear(value_db)), value_db, places=10)

    def testDbConversionErrors(self):
        for value in (math.inf, -math.inf, math.nan):
            with self.assertRaises(ModelError):
                dbToLinear(value)
        with self.assertRaises(ModelError):
            dbToLinear(4000)
        for value in (0, -1, math.inf):
            with self.assertRaises(ModelError):
                linearToDb(value)

    def testDeriveSeed(self):
        for _ in range(self._tests_num):
            master = random.randint(0, 2**64 - 1)
            keys = [random.randint(0, 1000) for _ in range(2)]
            seed = deriveSeed(master, *keys)

            self.assertIsInstance(seed, int)
            self.assertTrue(0 <= seed < 2**64)
            self.assertEqual(seed, deriveSeed(master, *keys))
            self.assertNotEqual(seed, deriveSeed(master, keys[0], keys[1] + 1))

        seeds = {deriveSeed(7, series, row) for series in range(5) for row in range(20)}
        self.assertEqual(len(seeds), 100)


if __name__ == "__main__":
    unittest.main()
