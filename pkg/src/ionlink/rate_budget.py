"""
End-to-end entangled-pair rate as a product of independent factors.

    rate = repetition_rate · p_cav² · coupling² · survival² · herald_fraction · η²

`survival` is the fiber transmission of one photon over half the distance,
since the analyzer sits midway between the ions.
"""

from typing import Any, Iterable
from dataclasses import dataclass, replace
from math import inf, isfinite
import logging

from . import config
from .cavity_model import CavityGeometry, IonConstants, analyze_cavity

logger = logging.getLogger(__name__)


class InvalidBudgetError(ValueError): ...


ATTEMPT_PERIOD = 30e-6


###############################################################################
# Fiber transmission
###############################################################################


def fiber_survival(distance_km: float, db_per_km: float = 1.0) -> float:
    """Per-photon transmission 10^(−α·d/10)."""
    if distance_km < 0 or db_per_km < 0:
        raise InvalidBudgetError("Distance and attenuation must be non-negative")
    return 10.0 ** (-db_per_km * distance_km / 10.0)


def both_photons_survival(distance_km: float, db_per_km: float = 1.0) -> float:
    """
    Probability that both photons reach the central station.

    Each photon covers half of `distance_km`; 10 km at 1 dB/km gives 0.1.
    """
    return fiber_survival(distance_km / 2.0, db_per_km) ** 2


###############################################################################
# BudgetConfig
###############################################################################


@dataclass(frozen=True)
class BudgetConfig:
    """
    Inputs of the pair-rate budget.

    Attributes:
        repetition_rate:
            Excitation attempts per second (one every 30 µs by default).
        p_cav:
            Emission probability into the cavity mode, per ion.
        fiber_coupling:
            Cavity-to-fiber coupling per photon.
        distance_km:
            Ion-to-ion distance; each photon travels half of it.
        attenuation_db_per_km:
            Fiber loss.
        detector_eta:
            Detection efficiency per photon.
        herald_fraction:
            Share of Bell outcomes the analyzer accepts (ψ⁻ and ψ⁺: 1/2).
    """

    repetition_rate: float = 1.0 / ATTEMPT_PERIOD
    p_cav: float = 0.01
    fiber_coupling: float = 1.0
    distance_km: float = 10.0
    attenuation_db_per_km: float = 1.0
    detector_eta: float = 0.7
    herald_fraction: float = 0.5

    def __post_init__(self):
        if not (isfinite(self.repetition_rate) and self.repetition_rate > 0):
            raise InvalidBudgetError(f"repetition_rate must be positive, got {self.repetition_rate}")
        for name in ("p_cav", "fiber_coupling", "detector_eta", "herald_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidBudgetError(f"{name} must lie in [0, 1], got {value}")
        if self.distance_km < 0 or self.attenuation_db_per_km < 0:
            raise InvalidBudgetError("Distance and attenuation must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        return config.to_dict(self)

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "BudgetConfig":
        return config.from_dict(BudgetConfig, data, InvalidBudgetError)


###############################################################################
# Rates
###############################################################################


@dataclass(frozen=True)
class RateReport:
    repetition_rate: float
    emission: float
    coupling: float
    transmission: float
    herald_fraction: float
    detection: float
    pairs_per_attempt: float
    pairs_per_second: float
    pairs_per_minute: float

    def factors(self) -> list[tuple[str, float]]:
        """(name, value) for each multiplicative factor, in budget order."""
        return [
            ("repetition_rate", self.repetition_rate),
            ("emission", self.emission),
            ("coupling", self.coupling),
            ("transmission", self.transmission),
            ("herald_fraction", self.herald_fraction),
            ("detection", self.detection),
        ]


def rate_report(cfg: BudgetConfig = BudgetConfig()) -> RateReport:
    """
    Factor-by-factor breakdown of the pair rate.

    Example:
        >>> round(rate_report(BudgetConfig(p_cav=0.01)).pairs_per_minute, 1)
        4.9
    """
    emission = cfg.p_cav**2
    coupling = cfg.fiber_coupling**2
    transmission = both_photons_survival(cfg.distance_km, cfg.attenuation_db_per_km)
    detection = cfg.detector_eta**2
    per_attempt = emission * coupling * transmission * cfg.herald_fraction * detection
    per_second = cfg.repetition_rate * per_attempt
    logger.debug("pair rate %.6g/s from %.6g per attempt", per_second, per_attempt)

    return RateReport(
        repetition_rate=cfg.repetition_rate,
        emission=emission,
        coupling=coupling,
        transmission=transmission,
        herald_fraction=cfg.herald_fraction,
        detection=detection,
        pairs_per_attempt=per_attempt,
        pairs_per_second=per_second,
        pairs_per_minute=60.0 * per_second,
    )


def pair_rate(cfg: BudgetConfig = BudgetConfig()) -> float:
    """Entangled pairs per second."""
    return rate_report(cfg).pairs_per_second


@dataclass(frozen=True)
class PairTime:
    n_pairs: int
    seconds: float
    feasible: bool

    @property
    def hours(self) -> float:
        return self.seconds / 3600.0


def time_to_pairs(cfg: BudgetConfig, n_pairs: int) -> PairTime:
    """
    Expected time to collect `n_pairs`.

    A zero rate is reported as infeasible (infinite time) rather than raised.
    """
    if n_pairs < 0:
        raise InvalidBudgetError(f"n_pairs must be non-negative, got {n_pairs}")
    if n_pairs == 0:
        return PairTime(0, 0.0, True)
    rate = pair_rate(cfg)
    if rate <= 0.0:
        logger.warning("pair rate is zero; %d pairs are out of reach", n_pairs)
        return PairTime(n_pairs, inf, False)
    return PairTime(n_pairs, n_pairs / rate, True)


###############################################################################
# Cavity-length sweep
###############################################################################


@dataclass(frozen=True)
class RatePoint:
    length: float
    p_cav: float
    pairs_per_second: float
    pairs_per_minute: float


def rate_vs_cavity_length(
    cfg: BudgetConfig,
    lengths: Iterable[float],
    ion: IonConstants = IonConstants(),
) -> list[RatePoint]:
    """Pair rate with p_cav taken from a confocal cavity at its optimal γ."""
    points = []
    for length in lengths:
        emission = analyze_cavity(CavityGeometry(float(length)), ion).p_cav
        report = rate_report(replace(cfg, p_cav=emission))
        points.append(
            RatePoint(float(length), emission, report.pairs_per_second, report.pairs_per_minute)
        )
    return points
