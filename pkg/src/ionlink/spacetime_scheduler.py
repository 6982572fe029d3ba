"""
Timing constraints for a locality-loophole-free Bell test.

Events live on a line (position x in m, time t in s). Each run starts with
the excitation of both ions (E_A, E_B at t = 0). The photons reach the
central station, where the coincidence D_I heralds the pair. Each side
picks its measurement basis (C_A, C_B), rotates and reads out its ion
(D_A, D_B). Three exclusion constraints must hold:

    (i)   C_B outside the backward lightcone of D_A
    (ii)  C_A outside the backward lightcone of D_B
    (iii) C_A and C_B outside the backward lightcone of D_I

Margins are in seconds; a positive margin is slack, a negative one the
amount by which the constraint is violated. Events exactly on the lightcone
count as outside.
"""

from typing import Any, Iterable, Mapping
from dataclasses import dataclass, fields, replace
from enum import Enum
from math import isfinite
import logging

from scipy.constants import c as SPEED_OF_LIGHT

from . import config

logger = logging.getLogger(__name__)


class InvalidScenarioError(ValueError): ...


class IncompleteScheduleError(ValueError): ...


BOUNDARY_TOLERANCE = 1e-12
DEFAULT_FIBER_SPEED = SPEED_OF_LIGHT / 1.5


class EventLabel(Enum):
    E_A = "E_A"
    E_B = "E_B"
    C_A = "C_A"
    C_B = "C_B"
    D_A = "D_A"
    D_B = "D_B"
    D_I = "D_I"


@dataclass(frozen=True)
class SpacetimeEvent:
    label: EventLabel
    x: float
    t: float

    def __post_init__(self):
        if not (isfinite(self.x) and isfinite(self.t)):
            raise InvalidScenarioError(f"Event {self.label.value} has non-finite coordinates")


###############################################################################
# Scenario
###############################################################################


@dataclass(frozen=True)
class Scenario:
    """
    Geometry and delays of one experiment run.

    Attributes:
        x_a, x_i, x_b:
            Positions of ion A, the central station and ion B (x_a ≤ x_i ≤ x_b).
        fiber_speed:
            Signal speed of the photons in fiber (0 < v ≤ c).
        choice_delay:
            Time from excitation to the basis choice on both sides.
        rotation_duration:
            Time from the choice to the completed basis rotation.
        readout_duration:
            Length of the fluorescence detection.
        emission_delay:
            Time between excitation and photon emission.
    """

    x_a: float = -5000.0
    x_i: float = 0.0
    x_b: float = 5000.0
    fiber_speed: float = DEFAULT_FIBER_SPEED
    choice_delay: float = 0.0
    rotation_duration: float = 0.0
    readout_duration: float = 0.0
    emission_delay: float = 0.0

    def __post_init__(self):
        values = [getattr(self, f.name) for f in fields(self)]
        if not all(isfinite(v) for v in values):
            raise InvalidScenarioError("Scenario values must be finite")
        if not self.x_a <= self.x_i <= self.x_b:
            raise InvalidScenarioError("Positions must satisfy x_a ≤ x_i ≤ x_b")
        if not 0 < self.fiber_speed <= SPEED_OF_LIGHT:
            raise InvalidScenarioError(
                f"fiber_speed must lie in (0, c], got {self.fiber_speed}"
            )
        for name in ("choice_delay", "rotation_duration", "readout_duration", "emission_delay"):
            if getattr(self, name) < 0:
                raise InvalidScenarioError(f"{name} must be non-negative")

    @classmethod
    def symmetric(
        cls,
        distance: float,
        fiber_speed: float = DEFAULT_FIBER_SPEED,
        choice_delay: float = 0.0,
        rotation_duration: float = 0.0,
        readout_duration: float = 0.0,
        emission_delay: float = 0.0,
    ) -> "Scenario":
        """Ions at ±distance/2 with the station in the middle."""
        if distance < 0:
            raise InvalidScenarioError(f"distance must be non-negative, got {distance}")
        return cls(
            -distance / 2, 0.0, distance / 2,
            fiber_speed, choice_delay, rotation_duration, readout_duration, emission_delay,
        )

    @property
    def detection_window(self) -> float:
        """Choice to completed detection."""
        return self.rotation_duration + self.readout_duration

    def to_dict(self) -> dict[str, Any]:
        return config.to_dict(self)

    @staticmethod
    def from_dict(data: Mapping[str, Any]) -> "Scenario":
        return config.from_dict(Scenario, data, InvalidScenarioError)


###############################################################################
# build_schedule
###############################################################################


@dataclass(frozen=True)
class Schedule:
    events: tuple[SpacetimeEvent, ...]

    def __getitem__(self, label: EventLabel | str) -> SpacetimeEvent:
        label = EventLabel(label)
        for event in self.events:
            if event.label is label:
                return event
        raise IncompleteScheduleError(f"Schedule has no {label.value} event")

    def __iter__(self):
        return iter(self.events)


def build_schedule(s: Scenario) -> Schedule:
    """
    Place the seven events of one run.

    D_I sits at the later of the two photon arrivals; D_A and D_B at
    choice + rotation + readout.
    """
    arrival = s.emission_delay + max(s.x_i - s.x_a, s.x_b - s.x_i) / s.fiber_speed
    detection = s.choice_delay + s.detection_window
    return Schedule(
        (
            SpacetimeEvent(EventLabel.E_A, s.x_a, 0.0),
            SpacetimeEvent(EventLabel.E_B, s.x_b, 0.0),
            SpacetimeEvent(EventLabel.C_A, s.x_a, s.choice_delay),
            SpacetimeEvent(EventLabel.C_B, s.x_b, s.choice_delay),
            SpacetimeEvent(EventLabel.D_A, s.x_a, detection),
            SpacetimeEvent(EventLabel.D_B, s.x_b, detection),
            SpacetimeEvent(EventLabel.D_I, s.x_i, arrival),
        )
    )


###############################################################################
# Lightcone checks
###############################################################################


def lightcone_margin(e1: SpacetimeEvent, e2: SpacetimeEvent) -> float:
    """Slack |x1 − x2|/c − (t2 − t1) in seconds; ≥ 0 means e1 is outside."""
    return abs(e1.x - e2.x) / SPEED_OF_LIGHT - (e2.t - e1.t)


def outside_backward_lightcone(e1: SpacetimeEvent, e2: SpacetimeEvent) -> bool:
    """
    Whether e1 lies outside the backward lightcone of e2.

    True when e1 is not earlier than e2 or is spacelike separated from it;
    the lightcone surface itself counts as outside.
    """
    return e1.t >= e2.t or lightcone_margin(e1, e2) >= -BOUNDARY_TOLERANCE


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    description: str
    margin: float
    passed: bool


@dataclass(frozen=True)
class TimingReport:
    checks: tuple[ConstraintCheck, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def __getitem__(self, name: str) -> ConstraintCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)


def _check(name: str, description: str, pairs: list[tuple[SpacetimeEvent, SpacetimeEvent]]):
    margin = min(lightcone_margin(e1, e2) for e1, e2 in pairs)
    passed = all(outside_backward_lightcone(e1, e2) for e1, e2 in pairs)
    return ConstraintCheck(name, description, margin, passed)


def validate(schedule: Schedule | Iterable[SpacetimeEvent]) -> TimingReport:
    """
    Evaluate the three timing constraints.

    Raises:
        IncompleteScheduleError: if a required event is missing.
    """
    events = {event.label: event for event in schedule}
    missing = [label.value for label in EventLabel if label not in events]
    if missing:
        raise IncompleteScheduleError(f"Missing events: {', '.join(missing)}")

    e = events
    report = TimingReport(
        (
            _check("i", "C_B outside the backward lightcone of D_A", [(e[EventLabel.C_B], e[EventLabel.D_A])]),
            _check("ii", "C_A outside the backward lightcone of D_B", [(e[EventLabel.C_A], e[EventLabel.D_B])]),
            _check(
                "iii",
                "C_A and C_B outside the backward lightcone of D_I",
                [(e[EventLabel.C_A], e[EventLabel.D_I]), (e[EventLabel.C_B], e[EventLabel.D_I])],
            ),
        )
    )
    for check in report.checks:
        if not check.passed:
            logger.warning("constraint (%s) fails by %.3g s", check.name, -check.margin)
    return report


###############################################################################
# Closed-form limits
###############################################################################


def min_choice_delay(s: Scenario) -> float:
    """
    Smallest excitation-to-choice delay that satisfies constraint (iii).

    In the symmetric case this is (L/2)(1/v − 1/c).
    """
    arrival = build_schedule(s)[EventLabel.D_I].t
    delays = [arrival - abs(s.x_i - x) / SPEED_OF_LIGHT for x in (s.x_a, s.x_b)]
    return max(0.0, *delays)


def max_detection_window(s: Scenario) -> float:
    """Longest choice-to-detection window allowed by (i) and (ii): |x_b − x_a|/c."""
    return abs(s.x_b - s.x_a) / SPEED_OF_LIGHT


@dataclass(frozen=True)
class TimingPoint:
    parameter: str
    value: float
    passed: bool
    margin_i: float
    margin_ii: float
    margin_iii: float


def timing_sweep(s: Scenario, parameter: str, values: Iterable[float]) -> list[TimingPoint]:
    """Validate the scenario with one field replaced by each value in turn."""
    if parameter not in {f.name for f in fields(Scenario)}:
        raise InvalidScenarioError(f"Unknown scenario parameter {parameter!r}")
    points = []
    for value in values:
        report = validate(build_schedule(replace(s, **{parameter: float(value)})))
        points.append(
            TimingPoint(
                parameter,
                float(value),
                report.passed,
                report["i"].margin,
                report["ii"].margin,
                report["iii"].margin,
            )
        )
    return points
