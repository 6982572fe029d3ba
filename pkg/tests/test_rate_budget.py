"""Tests for the pair-rate budget, time to N pairs and the cavity-length sweep."""

import unittest
from dataclasses import replace
from math import inf

import numpy as np

from ionlink.presets import PRESETS, UnknownPresetError, get_preset
from ionlink.rate_budget import (
    BudgetConfig,
    InvalidBudgetError,
    both_photons_survival,
    fiber_survival,
    pair_rate,
    rate_report,
    rate_vs_cavity_length,
    time_to_pairs,
)


class TestSurvival(unittest.TestCase):
    """Fiber attenuation."""

    def test_one_photon_per_half_distance(self):
        self.assertAlmostEqual(fiber_survival(5.0), 10 ** (-0.5), places=12)

    def test_both_photons_cover_the_full_distance(self):
        self.assertAlmostEqual(both_photons_survival(10.0), 0.1, places=12)
        self.assertEqual(both_photons_survival(0.0), 1.0)


class TestRateReport(unittest.TestCase):
    """Worked budgets."""

    def test_three_millimetre_cavity(self):
        report = rate_report(get_preset("paper-3mm").budget)
        self.assertAlmostEqual(report.pairs_per_minute, 4.9, delta=0.1)
        self.assertGreater(report.pairs_per_minute, 4.5)
        self.assertLess(report.pairs_per_minute, 5.5)

    def test_one_millimetre_cavity(self):
        rate = pair_rate(get_preset("paper-1mm").budget)
        self.assertGreater(rate, 2.6)
        self.assertLess(rate, 3.3)

    def test_factors_multiply_to_rate(self):
        report = rate_report()
        product = 1.0
        for _, value in report.factors():
            product *= value
        self.assertAlmostEqual(product / report.pairs_per_second, 1.0, places=12)
        self.assertEqual(
            [name for name, _ in report.factors()],
            ["repetition_rate", "emission", "coupling", "transmission", "herald_fraction", "detection"],
        )

    def test_probabilities_are_checked(self):
        with self.assertRaises(InvalidBudgetError):
            BudgetConfig(p_cav=2.0)
        with self.assertRaises(InvalidBudgetError):
            BudgetConfig(repetition_rate=0.0)

    def test_unknown_keys_are_rejected(self):
        with self.assertRaises(InvalidBudgetError):
            BudgetConfig.from_dict({"pcav": 0.01})


class TestTimeToPairs(unittest.TestCase):
    """Collection time."""

    def test_thousand_pairs(self):
        cfg = get_preset("paper-3mm").budget
        result = time_to_pairs(cfg, 1000)
        self.assertTrue(result.feasible)
        self.assertAlmostEqual(result.seconds, 1000 / pair_rate(cfg), places=6)
        self.assertAlmostEqual(result.hours, result.seconds / 3600, places=9)

    def test_zero_pairs_take_no_time(self):
        result = time_to_pairs(BudgetConfig(), 0)
        self.assertEqual(result.seconds, 0.0)
        self.assertTrue(result.feasible)

    def test_zero_rate_is_infeasible(self):
        with self.assertLogs("ionlink.rate_budget", level="WARNING"):
            result = time_to_pairs(BudgetConfig(p_cav=0.0), 10)
        self.assertFalse(result.feasible)
        self.assertEqual(result.seconds, inf)

    def test_negative_count_is_rejected(self):
        with self.assertRaises(InvalidBudgetError):
            time_to_pairs(BudgetConfig(), -1)


class TestCavityLengthSweep(unittest.TestCase):
    """Rate as a function of cavity length."""

    def test_rate_falls_with_length(self):
        points = rate_vs_cavity_length(BudgetConfig(), [1e-3, 3e-3, 1e-2])
        self.assertEqual([p.length for p in points], [1e-3, 3e-3, 1e-2])
        rates = [p.pairs_per_second for p in points]
        self.assertGreater(rates[0], rates[1])
        self.assertGreater(rates[1], rates[2])
        for point in points:
            self.assertAlmostEqual(point.pairs_per_minute, 60 * point.pairs_per_second, places=9)


class TestPresets(unittest.TestCase):
    """Named parameter sets."""

    def test_presets_carry_their_names(self):
        for name, preset in PRESETS.items():
            self.assertEqual(preset.name, name)

    def test_channels_split_the_distance(self):
        arm_a, arm_b = get_preset("paper-3mm").channels()
        self.assertEqual(arm_a, arm_b)
        self.assertAlmostEqual(arm_a.length_km, 5.0)

    def test_unknown_preset(self):
        with self.assertRaises(UnknownPresetError):
            get_preset("paper-5mm")


class TestRateSeparability(unittest.TestCase):
    """Each factor scales the rate on its own."""

    def _random_config(self, rng):
        return BudgetConfig(
            repetition_rate=rng.uniform(1e3, 1e5),
            p_cav=rng.uniform(0.01, 0.5),
            fiber_coupling=rng.uniform(0.1, 1.0),
            distance_km=rng.uniform(0.0, 50.0),
            attenuation_db_per_km=rng.uniform(0.1, 1.0),
            detector_eta=rng.uniform(0.1, 1.0),
            herald_fraction=rng.uniform(0.1, 1.0),
        )

    def test_per_photon_factors_enter_squared(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            cfg = self._random_config(rng)
            rate = pair_rate(cfg)
            s = rng.uniform(0.1, 1.0)
            for name in ("p_cav", "fiber_coupling", "detector_eta"):
                scaled = pair_rate(replace(cfg, **{name: getattr(cfg, name) * s}))
                self.assertAlmostEqual(scaled / rate, s**2, places=10)

    def test_per_attempt_factors_enter_linearly(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            cfg = self._random_config(rng)
            rate = pair_rate(cfg)
            s = rng.uniform(0.1, 1.0)
            for name in ("repetition_rate", "herald_fraction"):
                scaled = pair_rate(replace(cfg, **{name: getattr(cfg, name) * s}))
                self.assertAlmostEqual(scaled / rate, s, places=10)

    def test_distances_add_in_decibels(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            cfg = self._random_config(rng)
            extra = rng.uniform(0.0, 20.0)
            longer = pair_rate(replace(cfg, distance_km=cfg.distance_km + extra))
            expected = 10 ** (-cfg.attenuation_db_per_km * extra / 10)
            self.assertAlmostEqual(longer / pair_rate(cfg), expected, places=10)
