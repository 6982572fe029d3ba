"""
Optical elements, loss, detectors and the partial Bell-state analyzer.

Analyzer routing (fixed): the 50/50 splitter maps (A, B) → (C, D). The PBS in
arm C transmits pol-1 to D1 and reflects pol-2 to D2; the PBS in arm D
transmits pol-1 to D4 and reflects pol-2 to D3. With this labelling ψ⁻ fires
D1&D3 or D2&D4, ψ⁺ fires D1&D2 or D3&D4, and φ± put both photons on one
detector. D1&D4 and D2&D3 never fire together for indistinguishable photons.
"""

from typing import Any, ClassVar, Iterable, Sequence
from dataclasses import dataclass, asdict
from enum import Enum
from itertools import product
from math import cos, sin, sqrt
import cmath
import json
import logging

import numpy as np
from scipy.stats import binom

from .fock_core import (
    DROP_TOLERANCE,
    DensityMatrix,
    FockState,
    ModeLabel,
    PhotonicState,
    Polarization,
    Site,
    _SparseState,
    apply_creation,
    as_density_matrix,
    compact_register,
    qubit_basis,
    trace_out_modes,
    transform,
    transform_density_matrix,
)

logger = logging.getLogger(__name__)


class InvalidCircuitError(ValueError): ...


class UnterminatedModeError(ValueError): ...


ANALYZER_DETECTORS = (Site.D1, Site.D2, Site.D3, Site.D4)

# first unused bin for a photon's non-overlapping part, per side
SIDE_UNIQUE_BIN = {Site.A: -1, Site.B: -2}


def _check_probability(name: str, value: float, upper_open: bool = False) -> None:
    if not 0.0 <= value <= 1.0 or (upper_open and value == 1.0):
        bound = "[0, 1)" if upper_open else "[0, 1]"
        raise InvalidCircuitError(f"{name} must lie in {bound}, got {value}")


def _bins_at(state, site: Site) -> list[tuple[Polarization, int]]:
    seen = {}
    for mode in state.register:
        if mode.site == site:
            seen[(mode.polarization, mode.temporal_bin)] = None
    return list(seen)


def _finish(state):
    if isinstance(state, DensityMatrix):
        return compact_register(state)
    return state


###############################################################################
# Optical elements
###############################################################################


def beam_splitter_unitary(transmissivity: float = 0.5, phase: float = 0.0) -> np.ndarray:
    """
    Two-mode splitter matrix [[√t, r e^{iφ}], [r e^{iφ}, −√t e^{2iφ}]].

    φ = 0 is the symmetric convention [[1, 1], [1, −1]]/√2 at t = 1/2;
    φ = π/2 gives the [[1, i], [i, 1]]/√2 convention.
    """
    t = sqrt(transmissivity)
    r = sqrt(1.0 - transmissivity)
    e = cmath.exp(1j * phase)
    return np.array([[t, r * e], [r * e, -t * e * e]], dtype=complex)


@dataclass(frozen=True)
class BeamSplitter:
    """Polarization-independent splitter acting on every (pol, bin) pair."""

    kind: ClassVar[str] = "beam_splitter"
    inputs: tuple[Site, Site] = (Site.A, Site.B)
    outputs: tuple[Site, Site] = (Site.C, Site.D)
    transmissivity: float = 0.5
    phase: float = 0.0

    def __post_init__(self):
        _check_probability("transmissivity", self.transmissivity)

    def apply(self, state):
        unitary = beam_splitter_unitary(self.transmissivity, self.phase)
        pairs = dict.fromkeys(_bins_at(state, self.inputs[0]) + _bins_at(state, self.inputs[1]))
        for pol, tbin in pairs:
            modes = [ModeLabel(site, pol, tbin) for site in self.inputs]
            outputs = [ModeLabel(site, pol, tbin) for site in self.outputs]
            state = transform(state, unitary, modes, outputs)
        return _finish(state)


@dataclass(frozen=True)
class PolarizingBeamSplitter:
    """Routes pol-1 to the transmitted port and pol-2 to the reflected port."""

    kind: ClassVar[str] = "polarizing_beam_splitter"
    input: Site = Site.C
    transmitted: Site = Site.D1
    reflected: Site = Site.D2

    def apply(self, state):
        route = {Polarization.H: self.transmitted, Polarization.V: self.reflected}
        identity = np.eye(1, dtype=complex)
        for pol, tbin in _bins_at(state, self.input):
            source = ModeLabel(self.input, pol, tbin)
            target = ModeLabel(route[pol], pol, tbin)
            state = transform(state, identity, [source], [target])
        return _finish(state)


@dataclass(frozen=True)
class PhaseShifter:
    kind: ClassVar[str] = "phase_shifter"
    site: Site = Site.A
    phase: float = 0.0
    polarization: Polarization | None = None

    def apply(self, state):
        factor = np.array([[cmath.exp(1j * self.phase)]], dtype=complex)
        for pol, tbin in _bins_at(state, self.site):
            if self.polarization is not None and pol != self.polarization:
                continue
            mode = ModeLabel(self.site, pol, tbin)
            state = transform(state, factor, [mode])
        return _finish(state)


@dataclass(frozen=True)
class PolarizationRotator:
    """Rotates pol-1 towards pol-2 by `angle` radians in every bin."""

    kind: ClassVar[str] = "polarization_rotator"
    site: Site = Site.A
    angle: float = 0.0

    def apply(self, state):
        c, s = cos(self.angle), sin(self.angle)
        unitary = np.array([[c, s], [-s, c]], dtype=complex)
        bins = dict.fromkeys(tbin for _, tbin in _bins_at(state, self.site))
        for tbin in bins:
            modes = [ModeLabel(self.site, pol, tbin) for pol in Polarization]
            state = transform(state, unitary, modes)
        return _finish(state)


@dataclass(frozen=True)
class Loss:
    kind: ClassVar[str] = "loss"
    site: Site = Site.A
    survival: float = 1.0

    def __post_init__(self):
        _check_probability("survival", self.survival)

    def apply(self, state):
        rho = as_density_matrix(state)
        for pol, tbin in _bins_at(rho, self.site):
            rho = apply_loss(rho, ModeLabel(self.site, pol, tbin), self.survival)
        return rho


OpticalElement = BeamSplitter | PolarizingBeamSplitter | PhaseShifter | PolarizationRotator | Loss

_ELEMENT_KINDS: dict[str, type] = {
    cls.kind: cls
    for cls in (BeamSplitter, PolarizingBeamSplitter, PhaseShifter, PolarizationRotator, Loss)
}


###############################################################################
# apply_loss
###############################################################################


def apply_loss(
    state: "DensityMatrix | _SparseState", mode: ModeLabel, survival: float
) -> DensityMatrix:
    """
    Photon loss on one mode.

    The mode is mixed with a vacuum ENV mode on a beam splitter of
    transmissivity `survival`, then ENV is traced out. Trace is preserved.
    """
    _check_probability("survival", survival)
    rho = as_density_matrix(state)
    if survival == 1.0:
        return rho

    env = ModeLabel(Site.ENV, mode.polarization, mode.temporal_bin)
    if env in rho.register:
        raise InvalidCircuitError(f"Environment mode {env} is already in use")
    p, q = sqrt(survival), sqrt(1.0 - survival)
    unitary = np.array([[p, q], [q, -p]], dtype=complex)
    rho = transform_density_matrix(rho, unitary, [mode, env])
    rho = trace_out_modes(rho, [env])

    return compact_register(rho)


def apply_partial_overlap(
    state,
    site: Site,
    overlap: float,
    unique_bin: int | None = None,
    from_bin: int = 0,
):
    """
    Split the photons of `site` between `from_bin` (amplitude μ) and a
    side-unique orthogonal bin (amplitude √(1−μ²)).
    """
    _check_probability("overlap", overlap)
    if overlap == 1.0:
        return state
    if unique_bin is None:
        unique_bin = SIDE_UNIQUE_BIN[site]
    mu, nu = overlap, sqrt(1.0 - overlap**2)
    unitary = np.array([[mu, nu], [nu, -mu]], dtype=complex)
    for pol in Polarization:
        source = ModeLabel(site, pol, from_bin)
        if source not in state.register:
            continue
        state = transform(state, unitary, [source, ModeLabel(site, pol, unique_bin)])

    return _finish(state)


###############################################################################
# OpticalCircuit
###############################################################################


def _encode(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value if isinstance(value, Site) else value.name
    if isinstance(value, tuple):
        return [_encode(v) for v in value]
    return value


def _element_to_dict(element: OpticalElement) -> dict[str, Any]:
    data = {"kind": element.kind}
    for key, value in asdict(element).items():
        data[key] = _encode(value)
    return data


def _element_from_dict(data: dict[str, Any]) -> OpticalElement:
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in _ELEMENT_KINDS:
        raise InvalidCircuitError(f"Unknown optical element kind {kind!r}")
    cls = _ELEMENT_KINDS[kind]
    kwargs: dict[str, Any] = {}
    try:
        for key, value in data.items():
            if key in ("inputs", "outputs"):
                kwargs[key] = tuple(Site(v) for v in value)
            elif key in ("input", "transmitted", "reflected", "site"):
                kwargs[key] = Site(value)
            elif key == "polarization":
                kwargs[key] = None if value is None else Polarization[value]
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)
    except (KeyError, TypeError) as e:
        raise InvalidCircuitError(f"Invalid {kind} element: {data}") from e


@dataclass(frozen=True)
class OpticalCircuit:
    elements: tuple[OpticalElement, ...] = ()
    detector_sites: tuple[Site, ...] = ANALYZER_DETECTORS

    def apply(self, state) -> DensityMatrix:
        rho = as_density_matrix(state)
        for element in self.elements:
            rho = element.apply(rho)
            logger.debug("after %s: %d basis keys, %d modes", element.kind, rho.dim, len(rho.register))
        return rho

    def to_dict(self) -> dict[str, Any]:
        return {
            "elements": [_element_to_dict(e) for e in self.elements],
            "detectors": [s.value for s in self.detector_sites],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "OpticalCircuit":
        if not isinstance(data, dict) or "elements" not in data:
            raise InvalidCircuitError("Circuit document needs an 'elements' list")
        try:
            detectors = tuple(Site(s) for s in data.get("detectors", [s.value for s in ANALYZER_DETECTORS]))
        except ValueError as e:
            raise InvalidCircuitError("Unknown detector site") from e
        return OpticalCircuit(
            elements=tuple(_element_from_dict(e) for e in data["elements"]),
            detector_sites=detectors,
        )

    @staticmethod
    def from_json(text: str) -> "OpticalCircuit":
        return OpticalCircuit.from_dict(json.loads(text))


def build_bell_analyzer() -> OpticalCircuit:
    """50/50 splitter on (A, B) followed by one PBS per output arm."""
    return OpticalCircuit(
        elements=(
            BeamSplitter(inputs=(Site.A, Site.B), outputs=(Site.C, Site.D)),
            PolarizingBeamSplitter(Site.C, transmitted=Site.D1, reflected=Site.D2),
            PolarizingBeamSplitter(Site.D, transmitted=Site.D4, reflected=Site.D3),
        ),
        detector_sites=ANALYZER_DETECTORS,
    )


###############################################################################
# Detectors and click patterns
###############################################################################


@dataclass(frozen=True)
class Detector:
    site: Site
    efficiency: float = 1.0
    dark_count_prob: float = 0.0
    number_resolving: bool = False

    def __post_init__(self):
        _check_probability("efficiency", self.efficiency)
        _check_probability("dark_count_prob", self.dark_count_prob, upper_open=True)

    @property
    def max_count(self) -> int:
        return 2 if self.number_resolving else 1

    def observed_counts(self, photons: int) -> dict[int, float]:
        """Distribution of the reported count given `photons` incident photons."""
        dist: dict[int, float] = {}
        for detected in range(photons + 1):
            p_detected = float(binom.pmf(detected, photons, self.efficiency))
            for dark, p_dark in ((0, 1.0 - self.dark_count_prob), (1, self.dark_count_prob)):
                weight = p_detected * p_dark
                if weight <= 0.0:
                    continue
                count = min(detected + dark, self.max_count)
                dist[count] = dist.get(count, 0.0) + weight
        return dist


def analyzer_detectors(
    efficiency: float = 1.0,
    dark_count_prob: float = 0.0,
    number_resolving: bool = False,
) -> tuple[Detector, ...]:
    return tuple(
        Detector(site, efficiency, dark_count_prob, number_resolving)
        for site in ANALYZER_DETECTORS
    )


@dataclass(frozen=True)
class ClickPattern:
    """Per-detector counts; 2 stands for "two or more"."""

    counts: tuple[int, ...]
    sites: tuple[Site, ...] = ANALYZER_DETECTORS

    def __post_init__(self):
        if len(self.counts) != len(self.sites):
            raise InvalidCircuitError("One count per detector is required")
        if any(c < 0 for c in self.counts):
            raise InvalidCircuitError("Counts must be non-negative")

    @classmethod
    def from_clicks(cls, clicks: dict[Site, int], sites: tuple[Site, ...] = ANALYZER_DETECTORS):
        return cls(tuple(min(clicks.get(s, 0), 2) for s in sites), sites)

    @property
    def fired(self) -> frozenset[Site]:
        return frozenset(s for s, c in zip(self.sites, self.counts) if c > 0)

    def __str__(self) -> str:
        return "".join(str(c) for c in self.counts)


class HeraldClass(Enum):
    PSI_MINUS = "PsiMinus"
    PSI_PLUS = "PsiPlus"
    PHI_OR_UNUSABLE = "PhiOrUnusable"
    NO_HERALD = "NoHerald"


_PSI_MINUS_PAIRS = {frozenset({Site.D1, Site.D3}), frozenset({Site.D2, Site.D4})}
_PSI_PLUS_PAIRS = {frozenset({Site.D1, Site.D2}), frozenset({Site.D3, Site.D4})}


def classify_pattern(pattern: ClickPattern) -> HeraldClass:
    """
    Map a click pattern to its herald class.

    Table:
        - nothing fired, or one detector with a single count: NoHerald
        - one detector with two or more counts: PhiOrUnusable
        - D1&D3 or D2&D4, single counts: PsiMinus
        - D1&D2 or D3&D4, single counts: PsiPlus
        - anything else: PhiOrUnusable
    """
    fired = pattern.fired
    counts = {s: c for s, c in zip(pattern.sites, pattern.counts) if c > 0}
    if not fired:
        return HeraldClass.NO_HERALD
    if len(fired) == 1:
        (count,) = counts.values()
        return HeraldClass.NO_HERALD if count == 1 else HeraldClass.PHI_OR_UNUSABLE
    if len(fired) == 2 and all(c == 1 for c in counts.values()):
        if fired in _PSI_MINUS_PAIRS:
            return HeraldClass.PSI_MINUS
        if fired in _PSI_PLUS_PAIRS:
            return HeraldClass.PSI_PLUS

    return HeraldClass.PHI_OR_UNUSABLE


###############################################################################
# measure
###############################################################################


@dataclass(frozen=True)
class MeasurementOutcome:
    pattern: ClickPattern
    probability: float
    ion_state: DensityMatrix | None

    @property
    def herald_class(self) -> HeraldClass:
        return classify_pattern(self.pattern)


def _qubit_levels(rho: DensityMatrix):
    for levels, _ in rho.basis:
        if levels:
            return type(levels[0])
    return None


def measure(
    state: "DensityMatrix | _SparseState",
    detectors: Sequence[Detector],
) -> list[MeasurementOutcome]:
    """
    Photon counting on every terminal mode.

    Each detector absorbs all polarizations and temporal bins at its site.
    Efficiency thins each photon independently; a dark count adds one count
    with probability `dark_count_prob`. Conditional qubit states are
    renormalized; their probabilities sum to one.

    Raises:
        UnterminatedModeError: if photons remain in a mode without a detector.
    """
    rho = compact_register(as_density_matrix(state))
    sites = tuple(d.site for d in detectors)
    for mode in rho.register:
        if mode.site not in sites:
            raise UnterminatedModeError(f"Mode {mode} has no detector attached")
    site_of_mode = [sites.index(m.site) for m in rho.register]

    levels_type = _qubit_levels(rho)
    if levels_type is None:
        qubit_keys: tuple[tuple, ...] = ((),) if not rho.qubits else ()
    else:
        qubit_keys = qubit_basis(len(rho.qubits), levels_type)
    qubit_index = {k: i for i, k in enumerate(qubit_keys)}
    size = len(qubit_keys)

    # unnormalized qubit blocks per true photon-count tuple
    by_config: dict[FockState, list[int]] = {}
    for i, (_, fock) in enumerate(rho.basis):
        by_config.setdefault(fock, []).append(i)
    blocks: dict[tuple[int, ...], np.ndarray] = {}
    for fock, members in by_config.items():
        counts = [0] * len(detectors)
        for idx, n in enumerate(fock.occupations):
            counts[site_of_mode[idx]] += n
        q = [qubit_index[rho.basis[i][0]] for i in members]
        block = blocks.setdefault(tuple(counts), np.zeros((size, size), dtype=complex))
        block[np.ix_(q, q)] += rho.matrix[np.ix_(members, members)]

    observed: dict[tuple[int, ...], np.ndarray] = {}
    for true_counts, block in blocks.items():
        per_detector = [
            list(d.observed_counts(n).items()) for d, n in zip(detectors, true_counts)
        ]
        for combo in product(*per_detector):
            weight = float(np.prod([p for _, p in combo]))
            key = tuple(c for c, _ in combo)
            acc = observed.setdefault(key, np.zeros((size, size), dtype=complex))
            acc += weight * block

    basis = tuple((k, FockState()) for k in qubit_keys)
    outcomes = []
    for counts in sorted(observed):
        matrix = observed[counts]
        probability = float(np.trace(matrix).real)
        if probability <= DROP_TOLERANCE:
            continue
        ion_state = DensityMatrix(matrix / probability, basis, qubits=rho.qubits)
        outcomes.append(MeasurementOutcome(ClickPattern(counts, sites), probability, ion_state))

    logger.debug("measured %d true patterns into %d outcomes", len(blocks), len(outcomes))
    return outcomes


def class_probabilities(outcomes: Iterable[MeasurementOutcome]) -> dict[HeraldClass, float]:
    totals = {c: 0.0 for c in HeraldClass}
    for outcome in outcomes:
        totals[outcome.herald_class] += outcome.probability
    return totals


###############################################################################
# Hong-Ou-Mandel interference
###############################################################################


@dataclass(frozen=True)
class HomPoint:
    overlap: float
    coincidence_probability: float


def hom_coincidence_probability(overlap: float = 1.0) -> float:
    """
    Probability of one photon in each output of the 50/50 splitter.

    One pol-1 photon enters from each side; `overlap` is the wavepacket
    overlap μ = ⟨ψ_A|ψ_B⟩. Exact enumeration gives (1 − μ²)/2: zero for
    identical photons, 1/2 for distinguishable ones.
    """
    state = PhotonicState.vacuum()
    state = apply_creation(state, ModeLabel(Site.A))
    state = apply_creation(state, ModeLabel(Site.B))
    state = apply_partial_overlap(state, Site.A, overlap)
    state = BeamSplitter().apply(state)

    c_idx = [i for i, m in enumerate(state.register) if m.site == Site.C]
    d_idx = [i for i, m in enumerate(state.register) if m.site == Site.D]
    probability = 0.0
    for (_, fock), amp in state.amplitudes.items():
        in_c = sum(fock.occupations[i] for i in c_idx)
        in_d = sum(fock.occupations[i] for i in d_idx)
        if in_c == 1 and in_d == 1:
            probability += abs(amp) ** 2

    return probability


def hom_dip(overlaps: Iterable[float]) -> list[HomPoint]:
    return [HomPoint(mu, hom_coincidence_probability(mu)) for mu in overlaps]
