"""
Emission of the ion's photon into a cavity mode.

The ion sits in a short optical cavity resonant with its weak decay branch.
With coupling Ω between the transition and the cavity mode, cavity decay
rate γ and non-cavity loss rate Γ, the probability that the photon leaves
through the cavity is

    p_cav = 4γΩ² / ((γ + Γ)(γΓ + 4Ω²)),

maximal at γ = 2Ω where it equals (2Ω / (2Ω + Γ))². Ω follows from the
dipole element D (recovered from the free-space rate of the coupled branch)
and the mode volume V: Ω = (D/ħ) √(hc / (2ε₀λV)). For a confocal cavity
V = L²λ/4, so Ω ∝ 1/L and the optimal finesse does not depend on L.

All quantities are SI; rates are in 1/s.
"""

from typing import Iterable
from dataclasses import dataclass
from enum import Enum
from math import exp, log, pi, sqrt
import logging

import numpy as np
from scipy import constants
from scipy.optimize import minimize_scalar

logger = logging.getLogger(__name__)


class InvalidCavityError(ValueError): ...


###############################################################################
# Constants
###############################################################################


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values as shipped with scipy (c and h exact in SI)."""

    c: float = constants.c  # 299792458 m/s
    h: float = constants.h  # 6.62607015e-34 J s
    hbar: float = constants.hbar  # 1.054571817e-34 J s
    epsilon_0: float = constants.epsilon_0  # 8.8541878128e-12 F/m


SI = PhysicalConstants()


@dataclass(frozen=True)
class IonConstants:
    """
    Rates of the ⁴⁰Ca⁺ Λ system used for cavity emission.

    Attributes:
        loss_rate:
            Γ, decay rate into everything except the cavity-coupled branch.
        transition_rate:
            A, free-space decay rate of the cavity-coupled P₃/₂ → D₅/₂ branch.
        wavelength:
            λ of the coupled transition (854 nm).
    """

    loss_rate: float = 1.47e8
    transition_rate: float = 0.5e7
    wavelength: float = 854e-9

    def __post_init__(self):
        if min(self.loss_rate, self.transition_rate, self.wavelength) <= 0:
            raise InvalidCavityError("Ion rates and wavelength must be positive")
        if self.loss_rate <= self.transition_rate:
            raise InvalidCavityError(
                "The cavity-coupled branch must be the weak one (loss_rate > transition_rate)"
            )

    @property
    def dipole(self) -> float:
        return dipole_from_decay(self.transition_rate, self.wavelength)


class FinesseConvention(Enum):
    """Prefactor in γ = k·c/(F·L)."""

    PI = "pi"
    FOUR_PI = "4pi"

    @property
    def prefactor(self) -> float:
        return pi if self is FinesseConvention.PI else 4 * pi


@dataclass(frozen=True)
class CavityGeometry:
    """
    Cavity length with optional finesse and mode volume.

    Without a finesse the cavity is assumed to sit at the optimum γ = 2Ω.
    Without a mode volume the confocal value L²λ/4 is used.
    """

    length: float
    finesse: float | None = None
    mode_volume: float | None = None

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidCavityError(f"Cavity length must be positive, got {self.length}")
        if self.finesse is not None and not self.finesse > 1:
            raise InvalidCavityError(f"Finesse must exceed 1, got {self.finesse}")
        if self.mode_volume is not None and not self.mode_volume > 0:
            raise InvalidCavityError(f"Mode volume must be positive, got {self.mode_volume}")

    def volume(self, wavelength: float) -> float:
        if self.mode_volume is not None:
            return self.mode_volume
        return confocal_mode_volume(self.length, wavelength)


def _positive(**values) -> None:
    for name, value in values.items():
        if np.any(np.asarray(value) <= 0):
            raise InvalidCavityError(f"{name} must be positive")


###############################################################################
# Dipole and coupling
###############################################################################


def dipole_from_decay(rate: float, wavelength: float, si: PhysicalConstants = SI) -> float:
    """
    Dipole element D (C·m) from a spontaneous emission rate.

    Inverts A = ω³D² / (3πε₀ħc³) with ω = 2πc/λ. For A = 0.5e7/s at
    854 nm this gives D ≈ 1.05e-29 C·m.
    """
    _positive(rate=rate, wavelength=wavelength)
    omega = 2 * pi * si.c / wavelength
    return sqrt(3 * pi * si.epsilon_0 * si.hbar * si.c**3 * rate / omega**3)


def confocal_mode_volume(length: float, wavelength: float) -> float:
    _positive(length=length, wavelength=wavelength)
    return length**2 * wavelength / 4


def confocal_waist(length: float, wavelength: float) -> float:
    """Mode waist √(Lλ/π) of a confocal cavity."""
    _positive(length=length, wavelength=wavelength)
    return sqrt(length * wavelength / pi)


def coupling_constant(
    dipole: float, wavelength: float, mode_volume: float, si: PhysicalConstants = SI
) -> float:
    """Ω = (D/ħ) √(hc / (2ε₀λV)) in 1/s."""
    _positive(dipole=dipole, wavelength=wavelength, mode_volume=mode_volume)
    return (dipole / si.hbar) * sqrt(si.h * si.c / (2 * si.epsilon_0 * wavelength * mode_volume))


###############################################################################
# Emission probability
###############################################################################


def p_cav(gamma, loss_rate, coupling):
    """
    Probability that the photon is emitted into the cavity mode.

    Accepts scalars or numpy arrays (broadcast elementwise).

    Args:
        gamma:
            Cavity field decay rate γ.
        loss_rate:
            Non-cavity loss rate Γ.
        coupling:
            Ion-cavity coupling Ω.
    """
    _positive(gamma=gamma, loss_rate=loss_rate, coupling=coupling)
    g4 = 4 * np.square(coupling)
    value = 4 * gamma * np.square(coupling) / ((gamma + loss_rate) * (gamma * loss_rate + g4))
    return float(value) if np.ndim(value) == 0 else value


def optimal_gamma(coupling: float) -> float:
    _positive(coupling=coupling)
    return 2 * coupling


def max_p_cav(coupling: float, loss_rate: float) -> float:
    """p_cav at γ = 2Ω, i.e. (2Ω / (2Ω + Γ))²."""
    _positive(coupling=coupling, loss_rate=loss_rate)
    return (2 * coupling / (2 * coupling + loss_rate)) ** 2


def numeric_optimal_gamma(coupling: float, loss_rate: float) -> float:
    """Golden-section search for the argmax of p_cav over log γ."""
    _positive(coupling=coupling, loss_rate=loss_rate)
    start = log(2 * coupling)
    result = minimize_scalar(
        lambda x: -p_cav(exp(x), loss_rate, coupling),
        bracket=(start - 3.0, start + 3.0),
        method="golden",
    )
    return exp(result.x)


###############################################################################
# Finesse and timing
###############################################################################


def finesse_from_gamma(
    gamma: float,
    length: float,
    convention: FinesseConvention = FinesseConvention.PI,
    si: PhysicalConstants = SI,
) -> float:
    _positive(gamma=gamma, length=length)
    return FinesseConvention(convention).prefactor * si.c / (gamma * length)


def gamma_from_finesse(
    finesse: float,
    length: float,
    convention: FinesseConvention = FinesseConvention.PI,
    si: PhysicalConstants = SI,
) -> float:
    _positive(finesse=finesse, length=length)
    return FinesseConvention(convention).prefactor * si.c / (finesse * length)


def wavepacket_duration(gamma: float) -> float:
    _positive(gamma=gamma)
    return 1.0 / gamma


###############################################################################
# Reports
###############################################################################


@dataclass(frozen=True)
class CavityReport:
    length: float
    mode_volume: float
    coupling: float
    gamma_opt: float
    finesse_opt_pi: float
    finesse_opt_4pi: float
    gamma: float
    p_cav: float
    wavepacket_duration: float
    waist: float = 0.0


def analyze_cavity(
    geometry: CavityGeometry | float,
    ion: IonConstants = IonConstants(),
    convention: FinesseConvention = FinesseConvention.PI,
) -> CavityReport:
    """
    Coupling, optimum and emission probability for one cavity.

    Args:
        geometry:
            A CavityGeometry or a bare length in m.
        ion:
            Ion rates and wavelength.
        convention:
            How a given finesse is turned into γ. Ignored when the geometry
            has no finesse (the cavity then sits at γ = 2Ω).

    Example:
        >>> round(analyze_cavity(3e-3).p_cav, 4)
        0.0102
    """
    if not isinstance(geometry, CavityGeometry):
        geometry = CavityGeometry(float(geometry))

    volume = geometry.volume(ion.wavelength)
    omega = coupling_constant(ion.dipole, ion.wavelength, volume)
    gamma_opt = optimal_gamma(omega)
    if geometry.finesse is None:
        gamma = gamma_opt
    else:
        gamma = gamma_from_finesse(geometry.finesse, geometry.length, convention)

    report = CavityReport(
        length=geometry.length,
        mode_volume=volume,
        coupling=omega,
        gamma_opt=gamma_opt,
        finesse_opt_pi=finesse_from_gamma(gamma_opt, geometry.length, FinesseConvention.PI),
        finesse_opt_4pi=finesse_from_gamma(gamma_opt, geometry.length, FinesseConvention.FOUR_PI),
        gamma=gamma,
        p_cav=p_cav(gamma, ion.loss_rate, omega),
        wavepacket_duration=wavepacket_duration(gamma),
        waist=confocal_waist(geometry.length, ion.wavelength),
    )
    logger.debug("cavity L=%g m: Omega=%.4g/s p_cav=%.4g", geometry.length, omega, report.p_cav)
    return report


def cavity_scan(
    lengths: Iterable[float],
    ion: IonConstants = IonConstants(),
) -> list[CavityReport]:
    """`analyze_cavity` at the optimum for every length, in input order."""
    return [analyze_cavity(CavityGeometry(float(length)), ion) for length in lengths]
