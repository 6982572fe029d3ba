"""
One entanglement-generation attempt, evaluated by exact enumeration.

Each ion decays from its excited level into one of two degenerate metastable
levels and emits a photon whose polarization is tagged by that level. The two
photons travel to a central station (channel phase, loss and temporal
mismatch), meet on the partial Bell-state analyzer, and a coincidence
projects the distant ions onto ψ⁻ or ψ⁺.

The single-photon scheme (one excitation shared between two atoms) is kept
as a contrast: its fidelity follows the relative channel phase.
"""

from typing import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from itertools import product
from math import exp, isfinite, pi, sin, sqrt, tau
import cmath
import logging

import numpy as np

from . import config
from .fock_core import (
    AtomLevel,
    BellState,
    DensityMatrix,
    FockState,
    IonLevel,
    JointState,
    ModeLabel,
    ModeRegister,
    Polarization,
    Site,
    Subsystem,
    apply_creation,
    fidelity,
    ion_bell_state,
    partial_trace,
    qubit_basis,
    relabel_modes,
)
from .optics_circuit import (
    Detector,
    HeraldClass,
    Loss,
    OpticalCircuit,
    PhaseShifter,
    analyzer_detectors,
    apply_partial_overlap,
    build_bell_analyzer,
    measure,
)
from .rate_budget import fiber_survival

logger = logging.getLogger(__name__)


class InvalidChannelError(ValueError): ...


class InvalidEmissionError(ValueError): ...


DEFAULT_WAVELENGTH = 854e-9
DEFAULT_WAVENUMBER = tau / DEFAULT_WAVELENGTH

HERALD_TARGETS = {
    HeraldClass.PSI_MINUS: BellState.PSI_MINUS,
    HeraldClass.PSI_PLUS: BellState.PSI_PLUS,
}


###############################################################################
# Models
###############################################################################


@dataclass(frozen=True)
class EmissionModel:
    """
    Branching of the excited level into the two metastable levels.

    Attributes:
        amplitude_asymmetry:
            Ratio ε of the s₁ and s₂ branch amplitudes (1 means balanced).
        compensate:
            Attenuate the stronger polarization until both branches match.
            The removed weight is reported through `pair_survival`.
    """

    amplitude_asymmetry: float = 1.0
    compensate: bool = True

    def __post_init__(self):
        eps = self.amplitude_asymmetry
        if not isfinite(eps) or eps <= 0:
            raise InvalidEmissionError(f"amplitude_asymmetry must be positive, got {eps}")

    @property
    def compensation_attenuation(self) -> float:
        """Amplitude factor applied to the stronger branch (1 when off or balanced)."""
        if not self.compensate:
            return 1.0
        eps = self.amplitude_asymmetry
        return min(eps, 1.0 / eps)

    @property
    def branch_amplitudes(self) -> tuple[float, float]:
        """Normalized per-ion amplitudes of the (s₁, s₂) branches."""
        if self.compensate:
            return (1 / sqrt(2), 1 / sqrt(2))
        eps = self.amplitude_asymmetry
        norm = sqrt(1 + eps * eps)
        return (eps / norm, 1 / norm)

    @property
    def pair_survival(self) -> float:
        """Probability that both photons pass the compensating attenuator."""
        if not self.compensate:
            return 1.0
        eps = self.amplitude_asymmetry
        per_ion = 2 * min(eps, 1.0) ** 2 / (1 + eps * eps)
        return per_ion * per_ion

    def to_dict(self) -> dict:
        return config.to_dict(self)

    @staticmethod
    def from_dict(data: dict) -> "EmissionModel":
        return config.from_dict(EmissionModel, data, InvalidEmissionError)


@dataclass(frozen=True)
class ChannelModel:
    """
    One arm from an ion to the central station.

    Attributes:
        length_km:
            Fiber length of this arm.
        attenuation_db_per_km:
            Fiber loss. Default 1 dB/km.
        wavenumber:
            k in rad/m. Only k·path_length enters the state.
        path_length:
            Optical path length in m; sets the phase φ = k·L.
        temporal_offset:
            Delay in whole bins. Any offset ≥ 1 makes the photon
            fully distinguishable from a partner in bin 0.
        overlap:
            Amplitude μ of this photon in the shared bin; the pair overlap
            is the product of both arms.
        coupling_efficiency:
            Cavity-to-fiber coupling, folded into the survival.
    """

    length_km: float = 0.0
    attenuation_db_per_km: float = 1.0
    wavenumber: float = DEFAULT_WAVENUMBER
    path_length: float = 0.0
    temporal_offset: int = 0
    overlap: float = 1.0
    coupling_efficiency: float = 1.0

    def __post_init__(self):
        if self.length_km < 0 or self.attenuation_db_per_km < 0:
            raise InvalidChannelError("Fiber length and attenuation must be non-negative")
        if not isfinite(self.wavenumber * self.path_length):
            raise InvalidChannelError("Channel phase must be finite")
        if int(self.temporal_offset) != self.temporal_offset or self.temporal_offset < 0:
            raise InvalidChannelError(
                f"temporal_offset must be a non-negative integer, got {self.temporal_offset}"
            )
        for name in ("overlap", "coupling_efficiency"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidChannelError(f"{name} must lie in [0, 1], got {value}")

    @property
    def phase(self) -> float:
        return (self.wavenumber * self.path_length) % tau

    @property
    def survival(self) -> float:
        return fiber_survival(self.length_km, self.attenuation_db_per_km) * self.coupling_efficiency

    def with_phase(self, phase: float) -> "ChannelModel":
        """Same arm with its path length chosen so that k·L equals `phase`."""
        return replace(self, path_length=phase / self.wavenumber)

    def to_dict(self) -> dict:
        return config.to_dict(self)

    @staticmethod
    def from_dict(data: dict) -> "ChannelModel":
        return config.from_dict(ChannelModel, data, InvalidChannelError)


def pair_overlap(ch_a: ChannelModel, ch_b: ChannelModel) -> float:
    """Wavepacket overlap ⟨ψ_A|ψ_B⟩ of the two photons."""
    if ch_a.temporal_offset != ch_b.temporal_offset:
        return 0.0
    return ch_a.overlap * ch_b.overlap


@dataclass(frozen=True)
class HeraldedResult:
    herald_class: HeraldClass
    success_probability: float
    ion_state: DensityMatrix | None
    fidelity_to_target: float | None

    def to_dict(self) -> dict:
        """JSON form; the ion state is written over the canonical S1S1 .. S2S2 basis."""
        ion_state = None
        if self.ion_state is not None:
            canonical = [(levels, FockState()) for levels in qubit_basis(2, IonLevel)]
            matrix = self.ion_state.aligned_to(canonical)
            ion_state = {"real": matrix.real.tolist(), "imag": matrix.imag.tolist()}
        return {
            "herald_class": self.herald_class.value,
            "probability": self.success_probability,
            "fidelity": self.fidelity_to_target,
            "ion_state": ion_state,
        }


###############################################################################
# emit_pair
###############################################################################


EMISSION_REGISTER = ModeRegister(
    tuple(ModeLabel(site, pol) for site in (Site.A, Site.B) for pol in Polarization)
)


def emit_pair(model: EmissionModel = EmissionModel()) -> JointState:
    """
    Ion-photon state right after both ions decayed.

    For balanced branches this is
    ½ [|s₁⟩_A a₁† + |s₂⟩_A a₂†] [|s₁⟩_B b₁† + |s₂⟩_B b₂†] |0⟩,
    four terms of amplitude ½. With compensation the state is renormalized;
    the attenuated weight lives in `model.pair_survival`.
    """
    amplitudes = model.branch_amplitudes
    branches = list(zip(IonLevel, Polarization))

    state = None
    for (level_a, pol_a), (level_b, pol_b) in product(branches, repeat=2):
        term = JointState.vacuum((level_a, level_b), EMISSION_REGISTER)
        term = apply_creation(term, ModeLabel(Site.A, pol_a))
        term = apply_creation(term, ModeLabel(Site.B, pol_b))
        term = term.scaled(amplitudes[level_a - 1] * amplitudes[level_b - 1])
        state = term if state is None else state + term

    return state


###############################################################################
# apply_channels
###############################################################################


def _shift_bins(state, site: Site, offset: int):
    if offset == 0:
        return state
    mapping = {
        m: ModeLabel(m.site, m.polarization, m.temporal_bin + offset)
        for m in state.register
        if m.site == site
    }
    return relabel_modes(state, mapping)


def apply_channels(state, ch_a: ChannelModel, ch_b: ChannelModel) -> DensityMatrix:
    """
    Propagate both photons to the central station.

    Per arm: a polarization-independent phase e^{iφ}, the temporal offset,
    the partial-overlap split and finally loss (fiber and coupling).
    """
    for site, channel in ((Site.A, ch_a), (Site.B, ch_b)):
        state = PhaseShifter(site, channel.phase).apply(state)
        state = _shift_bins(state, site, int(channel.temporal_offset))
        state = apply_partial_overlap(
            state, site, channel.overlap, from_bin=int(channel.temporal_offset)
        )
    for site, channel in ((Site.A, ch_a), (Site.B, ch_b)):
        state = Loss(site, channel.survival).apply(state)

    return state


###############################################################################
# run_attempt
###############################################################################


def run_attempt(
    emission: EmissionModel = EmissionModel(),
    ch_a: ChannelModel = ChannelModel(),
    ch_b: ChannelModel = ChannelModel(),
    detectors: Sequence[Detector] | None = None,
    circuit: OpticalCircuit | None = None,
) -> list[HeraldedResult]:
    """
    Exact herald statistics of one attempt.

    `circuit` replaces the standard Bell-state analyzer; it must end on the
    detector sites (D1..D4).

    Returns:
        One result per herald class, in the order PsiMinus, PsiPlus,
        PhiOrUnusable, NoHerald. Heralding classes carry the fidelity of
        the conditional ion state to the matching Bell state; the others
        carry None. Classes with zero probability carry no ion state.

    Example:
        >>> results = run_attempt()
        >>> [round(r.success_probability, 12) for r in results]
        [0.25, 0.25, 0.0, 0.5]
    """
    if detectors is None:
        detectors = analyzer_detectors()
    state = emit_pair(emission)
    if circuit is None:
        circuit = build_bell_analyzer()
    rho = circuit.apply(apply_channels(state, ch_a, ch_b))
    outcomes = measure(rho, detectors)

    weights = {c: 0.0 for c in HeraldClass}
    states: dict[HeraldClass, np.ndarray] = {}
    basis = None
    for outcome in outcomes:
        cls = outcome.herald_class
        weights[cls] += outcome.probability
        basis = outcome.ion_state.basis
        states[cls] = states.get(cls, 0) + outcome.probability * outcome.ion_state.matrix

    survival = emission.pair_survival
    if survival < 1.0:
        # attenuated pairs never herald; their ion state is what the
        # uncompensated marginal holds beyond the surviving share
        before = partial_trace(emit_pair(replace(emission, compensate=False)), Subsystem.IONS)
        after = partial_trace(state, Subsystem.IONS)
        lost = before.matrix - survival * after.aligned_to(before.basis)
        weights = {c: w * survival for c, w in weights.items()}
        states = {c: m * survival for c, m in states.items()}
        weights[HeraldClass.NO_HERALD] += 1.0 - survival
        states[HeraldClass.NO_HERALD] = states.get(HeraldClass.NO_HERALD, 0) + lost
        basis = before.basis

    results = []
    for cls in HeraldClass:
        probability = weights[cls]
        ion_state = None
        score = None
        if probability > 0.0:
            ion_state = DensityMatrix(states[cls] / probability, basis, qubits=state.qubits)
            if cls in HERALD_TARGETS:
                score = fidelity(ion_state, ion_bell_state(HERALD_TARGETS[cls]))
        results.append(HeraldedResult(cls, probability, ion_state, score))

    logger.debug(
        "attempt: %s",
        ", ".join(f"{r.herald_class.value}={r.success_probability:.6g}" for r in results),
    )
    return results


def herald_probability(results: Iterable[HeraldedResult]) -> float:
    """Total probability of a usable (ψ⁻ or ψ⁺) herald."""
    return sum(r.success_probability for r in results if r.herald_class in HERALD_TARGETS)


###############################################################################
# Single-photon contrast scheme
###############################################################################


class PhaseNoise(Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


SINGLE_PHOTON_TARGET = np.array([0, 1, 1, 0], dtype=complex) / sqrt(2)


def single_photon_scheme_state(phi_a: float, phi_b: float) -> DensityMatrix:
    """(e^{iφ_A}|g⟩_A|e⟩_B + e^{iφ_B}|e⟩_A|g⟩_B)/√2 over (gg, ge, eg, ee)."""
    vector = np.array([0, cmath.exp(1j * phi_a), cmath.exp(1j * phi_b), 0]) / sqrt(2)
    return DensityMatrix.from_qubit_vector(vector, levels=AtomLevel)


def _characteristic(sigma: float, noise: PhaseNoise) -> float:
    if noise is PhaseNoise.GAUSSIAN:
        return exp(-0.5 * sigma * sigma)
    # uniform on [−σ, σ]
    return 1.0 if sigma == 0 else sin(sigma) / sigma


def phase_averaged_single_photon_state(
    phi_a: float,
    phi_b: float,
    sigma: float,
    distribution: PhaseNoise | str = PhaseNoise.GAUSSIAN,
) -> DensityMatrix:
    """
    Single-photon scheme state averaged over relative-phase noise.

    Only the coherence between |ge⟩ and |eg⟩ is affected; it shrinks by the
    characteristic function of the noise (e^{−σ²/2} for a Gaussian of
    standard deviation σ, sin σ/σ for a uniform spread over [−σ, σ]).
    A uniform spread of σ = π gives fidelity 1/2 to the target.
    """
    if sigma < 0:
        raise InvalidChannelError(f"Phase spread must be non-negative, got {sigma}")
    try:
        noise = PhaseNoise(distribution)
    except ValueError as e:
        raise InvalidChannelError(f"Unknown phase-noise distribution {distribution!r}") from e

    matrix = single_photon_scheme_state(phi_a, phi_b).matrix.copy()
    damping = _characteristic(sigma, noise)
    matrix[1, 2] *= damping
    matrix[2, 1] *= damping
    return DensityMatrix.from_qubit_matrix(matrix, levels=AtomLevel)


def single_photon_fidelity(phi_a: float, phi_b: float) -> float:
    return fidelity(single_photon_scheme_state(phi_a, phi_b), SINGLE_PHOTON_TARGET)


###############################################################################
# phase_insensitivity_report
###############################################################################


@dataclass(frozen=True)
class PhaseRow:
    phi_A: float
    phi_B: float
    herald_class: str
    probability: float
    fidelity: float | None
    single_photon_fidelity: float


def phase_grid(points: int = 11) -> np.ndarray:
    """`points` evenly spaced phases over [0, 2π)."""
    return np.linspace(0.0, 2 * pi, points, endpoint=False)


def phase_insensitivity_report(
    phis_a: Iterable[float],
    phis_b: Iterable[float],
    emission: EmissionModel = EmissionModel(),
    ch_a: ChannelModel = ChannelModel(),
    ch_b: ChannelModel = ChannelModel(),
    detectors: Sequence[Detector] | None = None,
    threads: int = 1,
) -> list[PhaseRow]:
    """
    Two-photon heralded fidelity vs single-photon-scheme fidelity on a grid.

    Each grid point runs a full attempt with the arm phases set to
    (φ_A, φ_B). One row per point and heralding class, in grid order
    regardless of `threads`.
    """
    points = [(float(a), float(b)) for a in phis_a for b in phis_b]

    def evaluate(point: tuple[float, float]) -> list[PhaseRow]:
        phi_a, phi_b = point
        results = run_attempt(emission, ch_a.with_phase(phi_a), ch_b.with_phase(phi_b), detectors)
        contrast = single_photon_fidelity(phi_a, phi_b)
        return [
            PhaseRow(phi_a, phi_b, r.herald_class.value, r.success_probability, r.fidelity_to_target, contrast)
            for r in results
            if r.herald_class in HERALD_TARGETS
        ]

    logger.debug("phase grid: %d points on %d threads", len(points), threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(evaluate, points))
    else:
        chunks = [evaluate(p) for p in points]

    return [row for chunk in chunks for row in chunk]
