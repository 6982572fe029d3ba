"""Tests for event placement and the three lightcone constraints."""

import unittest

import numpy as np
from scipy.constants import c

from ionlink.presets import get_preset
from ionlink.spacetime_scheduler import (
    EventLabel,
    IncompleteScheduleError,
    InvalidScenarioError,
    Scenario,
    SpacetimeEvent,
    build_schedule,
    lightcone_margin,
    max_detection_window,
    min_choice_delay,
    outside_backward_lightcone,
    timing_sweep,
    validate,
)

TWO_THIRDS_C = 2 * c / 3


class TestLightcone(unittest.TestCase):
    """Single-pair lightcone checks."""

    def test_spacelike_event_is_outside(self):
        e1 = SpacetimeEvent(EventLabel.C_B, 5000.0, 0.0)
        e2 = SpacetimeEvent(EventLabel.D_A, -5000.0, 10e-6)
        self.assertTrue(outside_backward_lightcone(e1, e2))
        self.assertGreater(lightcone_margin(e1, e2), 0)

    def test_timelike_past_event_is_inside(self):
        e1 = SpacetimeEvent(EventLabel.C_B, 0.0, 0.0)
        e2 = SpacetimeEvent(EventLabel.D_A, 0.0, 1e-6)
        self.assertFalse(outside_backward_lightcone(e1, e2))

    def test_later_event_is_outside(self):
        e1 = SpacetimeEvent(EventLabel.C_B, 0.0, 2e-6)
        e2 = SpacetimeEvent(EventLabel.D_A, 0.0, 1e-6)
        self.assertTrue(outside_backward_lightcone(e1, e2))

    def test_event_on_the_cone_counts_as_outside(self):
        e1 = SpacetimeEvent(EventLabel.C_B, 0.0, 0.0)
        e2 = SpacetimeEvent(EventLabel.D_A, 300.0, 300.0 / c)
        self.assertTrue(outside_backward_lightcone(e1, e2))


class TestSymmetricTenKilometres(unittest.TestCase):
    """The 10 km scenario with photons at 2c/3."""

    def test_maximum_window(self):
        window = max_detection_window(Scenario.symmetric(10_000.0))
        self.assertAlmostEqual(window * 1e6, 33.3, delta=0.1)

    def test_preset_passes_all_constraints(self):
        report = validate(build_schedule(get_preset("paper-10km").scenario))
        self.assertTrue(report.passed)
        for name in ("i", "ii", "iii"):
            self.assertGreater(report[name].margin, 0)

    def test_forty_microsecond_window_fails_locality(self):
        scenario = Scenario.symmetric(
            10_000.0, TWO_THIRDS_C, choice_delay=10e-6, rotation_duration=40e-6
        )
        with self.assertLogs("ionlink.spacetime_scheduler", level="WARNING"):
            report = validate(build_schedule(scenario))
        self.assertFalse(report["i"].passed)
        self.assertFalse(report["ii"].passed)
        self.assertTrue(report["iii"].passed)

    def test_zero_choice_delay_binds_on_station_detection(self):
        scenario = Scenario.symmetric(
            10_000.0, TWO_THIRDS_C, choice_delay=0.0, rotation_duration=10e-6, readout_duration=23e-6
        )
        report = validate(build_schedule(scenario))
        self.assertTrue(report["i"].passed)
        self.assertTrue(report["ii"].passed)
        self.assertFalse(report["iii"].passed)
        self.assertAlmostEqual(report["iii"].margin, 5000 / c - 5000 / TWO_THIRDS_C, delta=1e-15)

    def test_minimum_choice_delay_closed_form(self):
        scenario = Scenario.symmetric(10_000.0, TWO_THIRDS_C)
        expected = 5000.0 * (1 / TWO_THIRDS_C - 1 / c)
        self.assertAlmostEqual(min_choice_delay(scenario) / expected, 1.0, places=12)

    def test_minimum_choice_delay_is_enough(self):
        base = Scenario.symmetric(10_000.0, TWO_THIRDS_C)
        scenario = Scenario.symmetric(10_000.0, TWO_THIRDS_C, choice_delay=min_choice_delay(base))
        self.assertTrue(validate(build_schedule(scenario))["iii"].passed)


class TestScenarioValidation(unittest.TestCase):
    """Rejected scenarios and schedules."""

    def test_positions_must_be_ordered(self):
        with self.assertRaises(InvalidScenarioError):
            Scenario(x_a=10.0, x_i=0.0, x_b=20.0)

    def test_fiber_cannot_beat_light(self):
        with self.assertRaises(InvalidScenarioError):
            Scenario(fiber_speed=1.1 * c)

    def test_delays_must_be_non_negative(self):
        with self.assertRaises(InvalidScenarioError):
            Scenario(choice_delay=-1e-6)

    def test_missing_event_is_reported(self):
        events = [e for e in build_schedule(Scenario()) if e.label is not EventLabel.D_I]
        with self.assertRaises(IncompleteScheduleError):
            validate(events)

    def test_round_trip_through_dict(self):
        scenario = get_preset("paper-10km").scenario
        self.assertEqual(Scenario.from_dict(scenario.to_dict()), scenario)


class TestTimingSweep(unittest.TestCase):
    """Parameter sweeps."""

    def test_choice_delay_sweep_crosses_threshold(self):
        scenario = get_preset("paper-10km").scenario
        points = timing_sweep(scenario, "choice_delay", [0.0, 5e-6, 10e-6])
        self.assertEqual([p.value for p in points], [0.0, 5e-6, 10e-6])
        self.assertEqual([p.passed for p in points], [False, False, True])

    def test_unknown_parameter_is_rejected(self):
        with self.assertRaises(InvalidScenarioError):
            timing_sweep(Scenario(), "warp_factor", [1.0])


class TestLightconeInvariants(unittest.TestCase):
    """Properties that hold for arbitrary events and scenarios."""

    def test_translation_keeps_the_verdict(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            x1, x2 = rng.uniform(-2e4, 2e4, 2)
            t1, t2 = rng.uniform(0, 1e-4, 2)
            dx, dt = rng.uniform(-1e5, 1e5), rng.uniform(-1e-3, 1e-3)
            before = outside_backward_lightcone(
                SpacetimeEvent(EventLabel.C_B, x1, t1), SpacetimeEvent(EventLabel.D_A, x2, t2)
            )
            after = outside_backward_lightcone(
                SpacetimeEvent(EventLabel.C_B, x1 + dx, t1 + dt),
                SpacetimeEvent(EventLabel.D_A, x2 + dx, t2 + dt),
            )
            self.assertEqual(before, after)

    def test_later_choice_never_breaks_the_heralding_constraint(self):
        base = Scenario.symmetric(10_000.0, TWO_THIRDS_C, rotation_duration=10e-6)
        delays = np.linspace(0.0, 40e-6, 41)
        points = timing_sweep(base, "choice_delay", delays)
        margins = [p.margin_iii for p in points]
        self.assertTrue(all(b >= a for a, b in zip(margins, margins[1:])))
        passed = [p.margin_iii >= 0 for p in points]
        self.assertEqual(passed, sorted(passed))
        self.assertTrue(passed[-1])

    def test_random_scenarios_match_the_closed_forms(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            x_a, x_i, x_b = np.sort(rng.uniform(-1e4, 1e4, 3))
            scenario = Scenario(
                x_a=x_a,
                x_i=x_i,
                x_b=x_b,
                fiber_speed=rng.uniform(0.5, 1.0) * c,
                choice_delay=rng.uniform(0, 5e-5),
                rotation_duration=rng.uniform(0, 3e-5),
                readout_duration=rng.uniform(0, 3e-5),
                emission_delay=rng.uniform(0, 5e-6),
            )
            report = validate(build_schedule(scenario))
            within_window = scenario.detection_window <= max_detection_window(scenario)
            late_enough = scenario.choice_delay >= min_choice_delay(scenario)
            self.assertEqual(report["i"].passed, within_window)
            self.assertEqual(report["ii"].passed, within_window)
            self.assertEqual(report["iii"].passed, late_enough)


class TestTenKilometreWindowEdge(unittest.TestCase):
    """Windows just inside and just outside 10 km / c."""

    def test_thirty_three_microseconds_is_outside(self):
        choice = SpacetimeEvent(EventLabel.C_B, 5000.0, 0.0)
        detection = SpacetimeEvent(EventLabel.D_A, -5000.0, 33e-6)
        self.assertTrue(outside_backward_lightcone(choice, detection))

    def test_thirty_four_microseconds_is_inside(self):
        # light covers 10192 m in 34 µs
        choice = SpacetimeEvent(EventLabel.C_B, 5000.0, 0.0)
        detection = SpacetimeEvent(EventLabel.D_A, -5000.0, 34e-6)
        self.assertFalse(outside_backward_lightcone(choice, detection))

    def test_schedule_follows_the_same_edge(self):
        inside = Scenario.symmetric(10_000.0, choice_delay=10e-6, rotation_duration=33e-6)
        self.assertTrue(validate(build_schedule(inside)).passed)

        outside = Scenario.symmetric(10_000.0, choice_delay=10e-6, rotation_duration=34e-6)
        with self.assertLogs("ionlink.spacetime_scheduler", level="WARNING"):
            report = validate(build_schedule(outside))
        self.assertFalse(report["i"].passed)
        self.assertFalse(report["ii"].passed)
        self.assertTrue(report["iii"].passed)
