"""
Named parameter sets for one-command reproductions of the worked numbers.

- ``paper-3mm``: 3 mm cavity (p_cav = 0.01), 10 km, η = 0.7, ≈ 5 pairs/min.
- ``paper-1mm``: 1 mm cavity (p_cav = 0.06), otherwise identical, ≈ 3 pairs/s.
- ``paper-10km``: symmetric 10 km timing scenario with v = 2c/3, a 10 µs
  excitation-to-choice delay and a 33 µs choice-to-detection window
  (10 µs rotation plus 23 µs readout).
"""

from dataclasses import dataclass, field

from scipy.constants import c as SPEED_OF_LIGHT

from .entanglement_protocol import ChannelModel
from .rate_budget import BudgetConfig
from .spacetime_scheduler import Scenario


class UnknownPresetError(ValueError): ...


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    cavity_length: float | None = None
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    scenario: Scenario = field(default_factory=Scenario)

    def channels(self) -> tuple[ChannelModel, ChannelModel]:
        """Both arms of the budget's geometry (half the distance each)."""
        half = self.budget.distance_km / 2
        arm = ChannelModel(
            length_km=half,
            attenuation_db_per_km=self.budget.attenuation_db_per_km,
            coupling_efficiency=self.budget.fiber_coupling,
        )
        return arm, arm


_TIMING_10KM = Scenario.symmetric(
    10_000.0,
    fiber_speed=2 * SPEED_OF_LIGHT / 3,
    choice_delay=10e-6,
    rotation_duration=10e-6,
    readout_duration=23e-6,
)

PRESETS: dict[str, Preset] = {
    "paper-3mm": Preset(
        "paper-3mm",
        "3 mm confocal cavity, 10 km link, 1 dB/km, eta 0.7",
        cavity_length=3e-3,
        budget=BudgetConfig(p_cav=0.01, distance_km=10.0),
        scenario=_TIMING_10KM,
    ),
    "paper-1mm": Preset(
        "paper-1mm",
        "1 mm confocal cavity, 10 km link, 1 dB/km, eta 0.7",
        cavity_length=1e-3,
        budget=BudgetConfig(p_cav=0.06, distance_km=10.0),
        scenario=_TIMING_10KM,
    ),
    "paper-10km": Preset(
        "paper-10km",
        "Symmetric 10 km timing scenario, 33 us choice-to-detection window",
        cavity_length=3e-3,
        budget=BudgetConfig(p_cav=0.01, distance_km=10.0),
        scenario=_TIMING_10KM,
    ),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError as e:
        known = ", ".join(sorted(PRESETS))
        raise UnknownPresetError(f"Unknown preset {name!r}; choose one of {known}") from e
