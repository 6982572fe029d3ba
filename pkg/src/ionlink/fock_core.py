"""
Exact states for a small bosonic Fock space tensored with a qubit register.

Photonic amplitudes are kept in sparse maps keyed by occupation vectors over
a `ModeRegister`. Ion levels (or any other two-level alphabet) ride along in
the same key, so one representation covers the photon sector, the joint
ion-photon state and, through `DensityMatrix`, the mixed states produced by
loss and heralding.

Linear-optics convention: a mode unitary ``U`` acting on input modes
``(m_0, ..., m_k)`` replaces every creation operator ``a†_i`` by
``Σ_j U[i, j] b†_j``. The 50/50 beam splitter uses the symmetric matrix
``[[1, 1], [1, -1]] / √2``.
"""

from typing import Iterable, Mapping, Sequence, TypeAlias
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from itertools import product
from math import factorial, sqrt
import logging

import numpy as np

logger = logging.getLogger(__name__)


class PhotonCapacityError(ValueError): ...


class NonUnitaryError(ValueError): ...


class RegisterError(ValueError): ...


class DimensionMismatchError(ValueError): ...


class SubsystemError(ValueError): ...


MAX_PHOTONS = 2
MAX_MODES = 16
DROP_TOLERANCE = 1e-15
UNITARY_TOLERANCE = 1e-10

###############################################################################
# Labels
###############################################################################


class Site(Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    D1 = "D1"
    D2 = "D2"
    D3 = "D3"
    D4 = "D4"
    ENV = "ENV"


class Polarization(IntEnum):
    H = 1
    V = 2


class IonLevel(IntEnum):
    """The two degenerate metastable levels of each ion."""

    S1 = 1
    S2 = 2


class AtomLevel(IntEnum):
    """Ground and excited level of a two-level emitter."""

    G = 1
    E = 2


@dataclass(frozen=True)
class ModeLabel:
    site: Site
    polarization: Polarization = Polarization.H
    temporal_bin: int = 0

    def __str__(self) -> str:
        text = f"{self.site.value}{self.polarization.name}"
        if self.temporal_bin:
            text += f"@{self.temporal_bin}"
        return text


###############################################################################
# ModeRegister
###############################################################################


@dataclass(frozen=True)
class ModeRegister:
    """
    Ordered, duplicate-free tuple of optical modes.

    Occupation vectors are aligned with this order.
    """

    modes: tuple[ModeLabel, ...] = ()

    def __post_init__(self):
        if len(self.modes) > MAX_MODES:
            raise RegisterError(
                f"A register holds at most {MAX_MODES} modes, got {len(self.modes)}"
            )
        if len(set(self.modes)) != len(self.modes):
            raise RegisterError("Mode labels must be unique within a register")

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __contains__(self, mode: object) -> bool:
        return mode in self.modes

    def index(self, mode: ModeLabel) -> int:
        try:
            return self.modes.index(mode)
        except ValueError as e:
            raise RegisterError(f"Mode {mode} is not in the register") from e

    def extend(self, modes: Iterable[ModeLabel]) -> "ModeRegister":
        new_modes = [m for m in dict.fromkeys(modes) if m not in self.modes]
        if not new_modes:
            return self
        return ModeRegister(self.modes + tuple(new_modes))

    def at_site(self, site: Site) -> tuple[ModeLabel, ...]:
        return tuple(m for m in self.modes if m.site == site)


###############################################################################
# FockState
###############################################################################


@dataclass(frozen=True)
class FockState:
    """Occupation vector aligned with a register."""

    occupations: tuple[int, ...] = ()

    def __post_init__(self):
        if any(n < 0 for n in self.occupations):
            raise ValueError("Occupation numbers must be non-negative")

    @property
    def total(self) -> int:
        return sum(self.occupations)

    def padded(self, size: int) -> "FockState":
        missing = size - len(self.occupations)
        if missing <= 0:
            return self
        return FockState(self.occupations + (0,) * missing)

    def without(self, indices: Iterable[int]) -> "FockState":
        drop = set(indices)
        return FockState(
            tuple(n for i, n in enumerate(self.occupations) if i not in drop)
        )


# (qubit levels, photon occupations)
BasisKey: TypeAlias = tuple[tuple[IntEnum, ...], FockState]


###############################################################################
# Sparse pure states
###############################################################################


@dataclass(frozen=True, eq=False)
class _SparseState:
    register: ModeRegister
    amplitudes: Mapping[BasisKey, complex]
    qubits: tuple[str, ...] = ()
    max_photons: int = MAX_PHOTONS

    def __post_init__(self):
        size = len(self.register)
        cleaned: dict[BasisKey, complex] = {}
        for (levels, fock), amp in self.amplitudes.items():
            if len(levels) != len(self.qubits):
                raise DimensionMismatchError(
                    f"Key with {len(levels)} qubit levels for {len(self.qubits)} qubits"
                )
            if fock.total > self.max_photons:
                raise PhotonCapacityError(
                    f"{fock.total} photons exceed the cap of {self.max_photons}"
                )
            if abs(amp) < DROP_TOLERANCE:
                continue
            key = (levels, fock.padded(size))
            cleaned[key] = cleaned.get(key, 0j) + complex(amp)
        object.__setattr__(self, "amplitudes", cleaned)

    def _replace(self, register: ModeRegister, amplitudes: Mapping[BasisKey, complex]):
        return type(self)(
            register=register,
            amplitudes=amplitudes,
            qubits=self.qubits,
            max_photons=self.max_photons,
        )

    @property
    def norm(self) -> float:
        return sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def normalize(self):
        norm = self.norm
        if norm == 0:
            raise ValueError("Cannot normalize the zero vector")
        return self._replace(
            self.register, {k: a / norm for k, a in self.amplitudes.items()}
        )

    def scaled(self, factor: complex):
        return self._replace(
            self.register, {k: a * factor for k, a in self.amplitudes.items()}
        )

    def amplitude(self, levels: tuple[IntEnum, ...], occupations: Mapping[ModeLabel, int]) -> complex:
        """Amplitude of the basis term with the given levels and mode occupations."""
        vector = [0] * len(self.register)
        for mode, n in occupations.items():
            vector[self.register.index(mode)] = n
        return self.amplitudes.get((tuple(levels), FockState(tuple(vector))), 0j)

    def inner(self, other: "_SparseState") -> complex:
        """⟨self|other⟩ over the union of both registers."""
        if self.qubits != other.qubits:
            raise DimensionMismatchError("States live on different qubit registers")
        register = self.register.extend(other.register)
        left = _realign(self, register)
        right = _realign(other, register)
        return sum(
            (a.conjugate() * right.get(k, 0j) for k, a in left.items()), start=0j
        )

    def __add__(self, other: "_SparseState"):
        if type(other) is not type(self) or other.qubits != self.qubits:
            return NotImplemented
        register = self.register.extend(other.register)
        total = dict(_realign(self, register))
        for key, amp in _realign(other, register).items():
            total[key] = total.get(key, 0j) + amp
        return self._replace(register, total)


class PhotonicState(_SparseState):
    """Photon-only state; keys carry an empty qubit tuple."""

    @classmethod
    def vacuum(cls, register: ModeRegister = ModeRegister(), max_photons: int = MAX_PHOTONS):
        return cls(
            register=register,
            amplitudes={((), FockState((0,) * len(register))): 1.0},
            max_photons=max_photons,
        )


class JointState(_SparseState):
    """Ion-pair qubits tensored with the photon sector."""

    @classmethod
    def vacuum(
        cls,
        levels: tuple[IntEnum, ...],
        register: ModeRegister = ModeRegister(),
        qubits: tuple[str, ...] = ("A", "B"),
        max_photons: int = MAX_PHOTONS,
    ):
        return cls(
            register=register,
            amplitudes={(tuple(levels), FockState((0,) * len(register))): 1.0},
            qubits=qubits,
            max_photons=max_photons,
        )


def _realign(state: _SparseState, register: ModeRegister) -> dict[BasisKey, complex]:
    """Re-express the amplitudes over a register that contains the state's modes."""
    if register == state.register:
        return dict(state.amplitudes)
    positions = [register.index(m) for m in state.register]
    realigned = {}
    for (levels, fock), amp in state.amplitudes.items():
        vector = [0] * len(register)
        for src, dst in enumerate(positions):
            vector[dst] = fock.occupations[src]
        realigned[(levels, FockState(tuple(vector)))] = amp
    return realigned


###############################################################################
# apply_creation
###############################################################################


def apply_creation(state: _SparseState, mode: ModeLabel) -> _SparseState:
    """
    Apply a†(mode) to every basis term.

    Each term gains one photon in `mode` with the bosonic factor √(n+1). The
    result is not renormalized. The mode is appended to the register when
    it is not present yet.

    Raises:
        PhotonCapacityError: if a term would exceed `state.max_photons`.
    """
    register = state.register.extend([mode])
    idx = register.index(mode)
    created = {}
    for (levels, fock), amp in _realign(state, register).items():
        if fock.total + 1 > state.max_photons:
            raise PhotonCapacityError(
                f"Creating a photon in {mode} exceeds the cap of {state.max_photons}"
            )
        vector = list(fock.occupations)
        n = vector[idx]
        vector[idx] = n + 1
        created[(levels, FockState(tuple(vector)))] = amp * sqrt(n + 1)

    return state._replace(register, created)


###############################################################################
# apply_mode_unitary
###############################################################################


def check_unitary(unitary: np.ndarray, tolerance: float = UNITARY_TOLERANCE) -> np.ndarray:
    matrix = np.asarray(unitary, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NonUnitaryError(f"Mode unitary must be square, got shape {matrix.shape}")
    identity = np.eye(matrix.shape[0])
    if not np.allclose(matrix.conj().T @ matrix, identity, atol=tolerance):
        raise NonUnitaryError("Mode transformation is not unitary")
    return matrix


def _transform_occupations(
    occupations: tuple[int, ...],
    unitary: np.ndarray,
    in_idx: Sequence[int],
    out_idx: Sequence[int],
) -> dict[tuple[int, ...], complex]:
    vector = list(occupations)
    created: list[int] = []
    prefactor = 1.0
    for k, i in enumerate(in_idx):
        n = vector[i]
        created.extend([k] * n)
        prefactor /= sqrt(factorial(n))
        vector[i] = 0

    terms: dict[tuple[int, ...], complex] = {tuple(vector): complex(prefactor)}
    for k in created:
        expanded: dict[tuple[int, ...], complex] = {}
        for occ, amp in terms.items():
            for j, out in enumerate(out_idx):
                u = unitary[k, j]
                if abs(u) < DROP_TOLERANCE:
                    continue
                n = occ[out]
                new_occ = occ[:out] + (n + 1,) + occ[out + 1 :]
                expanded[new_occ] = expanded.get(new_occ, 0j) + amp * u * sqrt(n + 1)
        terms = expanded

    return {occ: amp for occ, amp in terms.items() if abs(amp) >= DROP_TOLERANCE}


def _unitary_layout(
    register: ModeRegister,
    modes: Sequence[ModeLabel],
    outputs: Sequence[ModeLabel] | None,
) -> tuple[ModeRegister, ModeRegister, list[int], list[int]]:
    """Working register, final register and input/output indices."""
    outputs = list(modes) if outputs is None else list(outputs)
    if len(outputs) != len(modes):
        raise DimensionMismatchError("Inputs and outputs must have equal length")
    working = register.extend(list(modes) + outputs)
    in_idx = [working.index(m) for m in modes]
    out_idx = [working.index(m) for m in outputs]
    # input modes that are not reused as outputs are consumed
    consumed = [m for m in modes if m not in outputs]
    final = ModeRegister(tuple(m for m in working if m not in consumed))
    return working, final, in_idx, out_idx


def apply_mode_unitary(
    state: _SparseState,
    unitary: np.ndarray,
    modes: Sequence[ModeLabel],
    outputs: Sequence[ModeLabel] | None = None,
) -> _SparseState:
    """
    Lift a linear-optics transformation to the Fock space.

    Args:
        state:
            Photonic or joint state.
        unitary:
            k×k unitary; row i describes where input mode i goes.
        modes:
            The k input modes.
        outputs:
            (optional) The k output modes. Defaults to `modes` (in-place).
            Input modes not reused as outputs are removed from the register.

    Returns:
        A state of the same type with the same norm.

    Raises:
        NonUnitaryError: if `unitary` is not unitary within 1e-10.
    """
    matrix = check_unitary(unitary)
    if matrix.shape[0] != len(modes):
        raise DimensionMismatchError(
            f"{matrix.shape[0]}×{matrix.shape[0]} unitary for {len(modes)} modes"
        )
    working, final, in_idx, out_idx = _unitary_layout(state.register, modes, outputs)
    keep = [working.index(m) for m in final]

    result: dict[BasisKey, complex] = {}
    for (levels, fock), amp in _realign(state, working).items():
        for occ, coeff in _transform_occupations(
            fock.occupations, matrix, in_idx, out_idx
        ).items():
            key = (levels, FockState(tuple(occ[i] for i in keep)))
            result[key] = result.get(key, 0j) + amp * coeff

    return state._replace(final, result)


###############################################################################
# relabel_modes
###############################################################################


def relabel_modes(state, mapping: Mapping[ModeLabel, ModeLabel]):
    """
    Rename modes of a state or density matrix without touching amplitudes.

    Raises:
        RegisterError: if the renaming produces duplicate labels.
    """
    register = ModeRegister(tuple(mapping.get(m, m) for m in state.register))
    if isinstance(state, DensityMatrix):
        return DensityMatrix(
            matrix=state.matrix, basis=state.basis, register=register, qubits=state.qubits
        )
    return state._replace(register, state.amplitudes)


###############################################################################
# DensityMatrix
###############################################################################


def qubit_basis(count: int, levels: type[IntEnum] = IonLevel) -> tuple[tuple[IntEnum, ...], ...]:
    """Canonical product basis, e.g. S1S1, S1S2, S2S1, S2S2 for two ions."""
    return tuple(product(list(levels), repeat=count))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    Hermitian matrix over an explicit list of basis keys.

    The same class covers ion-only states (empty register), photon-only
    states (no qubits) and joint states. Conditional states may carry a
    trace below one until they are renormalized.
    """

    matrix: np.ndarray
    basis: tuple[BasisKey, ...]
    register: ModeRegister = field(default_factory=ModeRegister)
    qubits: tuple[str, ...] = ()

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (len(self.basis), len(self.basis)):
            raise DimensionMismatchError(
                f"Matrix shape {matrix.shape} does not match a basis of {len(self.basis)}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "basis", tuple(self.basis))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def index(self, key: BasisKey) -> int:
        return self.basis.index(key)

    def normalized(self) -> "DensityMatrix":
        trace = self.trace
        if trace <= 0:
            raise ValueError("Cannot renormalize a state with zero weight")
        return DensityMatrix(self.matrix / trace, self.basis, self.register, self.qubits)

    def scaled(self, factor: float) -> "DensityMatrix":
        return DensityMatrix(self.matrix * factor, self.basis, self.register, self.qubits)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_valid(self, weight: float = 1.0, tolerance: float = 1e-12) -> bool:
        """Hermitian, trace equal to `weight`, eigenvalues ≥ −1e-10."""
        if not np.allclose(self.matrix, self.matrix.conj().T, atol=tolerance):
            return False
        if abs(self.trace - weight) > tolerance:
            return False
        return bool(np.all(self.eigenvalues() >= -1e-10))

    def trace_distance(self, other: "DensityMatrix") -> float:
        _check_same_space(self, other)
        basis = list(self.basis) + [k for k in other.basis if k not in set(self.basis)]
        eig = np.linalg.eigvalsh(self.aligned_to(basis) - other.aligned_to(basis))
        return float(0.5 * np.abs(eig).sum())

    def aligned_to(self, basis: Sequence[BasisKey]) -> np.ndarray:
        """Matrix re-indexed over `basis`; keys absent here contribute zero."""
        positions = {key: i for i, key in enumerate(self.basis)}
        target = np.zeros((len(basis), len(basis)), dtype=complex)
        pairs = [(t, positions[k]) for t, k in enumerate(basis) if k in positions]
        missing = set(self.basis) - set(basis)
        if any(abs(self.matrix[positions[k], positions[k]]) > DROP_TOLERANCE for k in missing):
            raise DimensionMismatchError("Target basis does not cover the state's support")
        for t1, s1 in pairs:
            for t2, s2 in pairs:
                target[t1, t2] = self.matrix[s1, s2]
        return target

    def __add__(self, other: "DensityMatrix") -> "DensityMatrix":
        _check_same_space(self, other)
        basis = list(self.basis) + [k for k in other.basis if k not in set(self.basis)]
        matrix = self.aligned_to(basis) + other.aligned_to(basis)
        return DensityMatrix(matrix, tuple(basis), self.register, self.qubits)

    @classmethod
    def from_state(cls, state: _SparseState) -> "DensityMatrix":
        basis = tuple(state.amplitudes.keys())
        vector = np.array([state.amplitudes[k] for k in basis], dtype=complex)
        return cls(np.outer(vector, vector.conj()), basis, state.register, state.qubits)

    @classmethod
    def from_qubit_matrix(
        cls,
        matrix: np.ndarray,
        qubits: tuple[str, ...] = ("A", "B"),
        levels: type[IntEnum] = IonLevel,
    ) -> "DensityMatrix":
        basis = tuple((lv, FockState()) for lv in qubit_basis(len(qubits), levels))
        return cls(np.asarray(matrix, dtype=complex), basis, ModeRegister(), qubits)

    @classmethod
    def from_qubit_vector(
        cls,
        vector: np.ndarray,
        qubits: tuple[str, ...] = ("A", "B"),
        levels: type[IntEnum] = IonLevel,
    ) -> "DensityMatrix":
        vector = np.asarray(vector, dtype=complex)
        return cls.from_qubit_matrix(np.outer(vector, vector.conj()), qubits, levels)


def _check_same_space(a: DensityMatrix, b: DensityMatrix) -> None:
    if a.qubits != b.qubits or a.register != b.register:
        raise DimensionMismatchError("Density matrices live on different spaces")


def as_density_matrix(state: "DensityMatrix | _SparseState") -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    return DensityMatrix.from_state(state)


def _compact(rho: DensityMatrix) -> DensityMatrix:
    """Drop basis keys with vanishing population."""
    diagonal = np.real(np.diag(rho.matrix))
    keep = [i for i, p in enumerate(diagonal) if p > DROP_TOLERANCE]
    if len(keep) == rho.dim:
        return rho
    matrix = rho.matrix[np.ix_(keep, keep)]
    return DensityMatrix(matrix, tuple(rho.basis[i] for i in keep), rho.register, rho.qubits)


def compact_register(rho: DensityMatrix) -> DensityMatrix:
    """Remove modes that are empty in every basis key."""
    occupied = set()
    for _, fock in rho.basis:
        occupied.update(i for i, n in enumerate(fock.occupations) if n)
    empty = [i for i in range(len(rho.register)) if i not in occupied]
    if not empty:
        return rho
    register = ModeRegister(tuple(m for i, m in enumerate(rho.register) if i not in empty))
    basis = tuple((levels, fock.without(empty)) for levels, fock in rho.basis)
    return DensityMatrix(rho.matrix, basis, register, rho.qubits)


def transform_density_matrix(
    rho: DensityMatrix,
    unitary: np.ndarray,
    modes: Sequence[ModeLabel],
    outputs: Sequence[ModeLabel] | None = None,
) -> DensityMatrix:
    """ρ → M ρ M† with M the Fock-space lift of a mode unitary."""
    matrix = check_unitary(unitary)
    working, final, in_idx, out_idx = _unitary_layout(rho.register, modes, outputs)
    keep = [working.index(m) for m in final]
    positions = [working.index(m) for m in rho.register]

    new_basis: dict[BasisKey, int] = {}
    columns: list[dict[int, complex]] = []
    for levels, fock in rho.basis:
        vector = [0] * len(working)
        for src, dst in enumerate(positions):
            vector[dst] = fock.occupations[src]
        column: dict[int, complex] = {}
        for occ, coeff in _transform_occupations(
            tuple(vector), matrix, in_idx, out_idx
        ).items():
            key = (levels, FockState(tuple(occ[i] for i in keep)))
            row = new_basis.setdefault(key, len(new_basis))
            column[row] = column.get(row, 0j) + coeff
        columns.append(column)

    lift = np.zeros((len(new_basis), rho.dim), dtype=complex)
    for col, column in enumerate(columns):
        for row, coeff in column.items():
            lift[row, col] = coeff

    result = DensityMatrix(
        lift @ rho.matrix @ lift.conj().T, tuple(new_basis), final, rho.qubits
    )
    return _compact(result)


def transform(state, unitary, modes, outputs=None):
    """Dispatch a mode unitary to a pure state or a density matrix."""
    if isinstance(state, DensityMatrix):
        return transform_density_matrix(state, unitary, modes, outputs)
    return apply_mode_unitary(state, unitary, modes, outputs)


###############################################################################
# partial_trace
###############################################################################


class Subsystem(Enum):
    ALL = "all"
    IONS = "ions"
    PHOTONS = "photons"
    ION_A = "A"
    ION_B = "B"


def _reduce(rho: DensityMatrix, split, register: ModeRegister, qubits: tuple[str, ...]) -> DensityMatrix:
    """Sum ρ[(k1, e), (k2, e)] over the traced part e, with split(key) = (k, e)."""
    kept_index: dict[BasisKey, int] = {}
    groups: dict[object, list[tuple[int, int]]] = {}
    for i, key in enumerate(rho.basis):
        kept, traced = split(key)
        k = kept_index.setdefault(kept, len(kept_index))
        groups.setdefault(traced, []).append((i, k))

    reduced = np.zeros((len(kept_index), len(kept_index)), dtype=complex)
    for members in groups.values():
        src = [i for i, _ in members]
        dst = [k for _, k in members]
        reduced[np.ix_(dst, dst)] += rho.matrix[np.ix_(src, src)]

    return DensityMatrix(reduced, tuple(kept_index), register, qubits)


def _full_qubit_basis(rho: DensityMatrix, qubits: tuple[str, ...]) -> DensityMatrix:
    """Re-index a qubit-only matrix over the canonical product basis."""
    levels = None
    for lv, _ in rho.basis:
        if lv:
            levels = type(lv[0])
            break
    if levels is None:
        return rho
    basis = tuple((lv, FockState()) for lv in qubit_basis(len(qubits), levels))
    return DensityMatrix(rho.aligned_to(basis), basis, ModeRegister(), qubits)


def partial_trace(
    state: "DensityMatrix | _SparseState",
    keep: Subsystem | str = Subsystem.IONS,
) -> DensityMatrix:
    """
    Reduce a joint state to one tensor factor.

    Args:
        state:
            Density matrix or pure state.
        keep:
            Which factor survives: ALL, IONS, PHOTONS, ION_A or ION_B.

    Returns:
        The reduced DensityMatrix. Ion-only results always use the full
        canonical product basis.

    Raises:
        SubsystemError: if the selector names a factor the state lacks.
    """
    rho = as_density_matrix(state)
    try:
        keep = Subsystem(keep)
    except ValueError as e:
        raise SubsystemError(f"Unknown subsystem selector {keep!r}") from e

    if keep is Subsystem.ALL:
        return rho
    if keep is Subsystem.PHOTONS:
        return _reduce(rho, lambda k: (((), k[1]), k[0]), rho.register, ())
    if keep is Subsystem.IONS:
        reduced = _reduce(rho, lambda k: ((k[0], FockState()), k[1]), ModeRegister(), rho.qubits)
        return _full_qubit_basis(reduced, rho.qubits)

    name = keep.value
    if name not in rho.qubits:
        raise SubsystemError(f"State has no qubit named {name!r}")
    pos = rho.qubits.index(name)
    reduced = _reduce(
        rho,
        lambda k: (((k[0][pos],), FockState()), (k[0][:pos] + k[0][pos + 1 :], k[1])),
        ModeRegister(),
        (name,),
    )
    return _full_qubit_basis(reduced, (name,))


def trace_out_modes(rho: DensityMatrix, modes: Iterable[ModeLabel]) -> DensityMatrix:
    """Partial trace over individual optical modes."""
    indices = [rho.register.index(m) for m in modes]
    register = ModeRegister(
        tuple(m for i, m in enumerate(rho.register) if i not in indices)
    )

    def split(key: BasisKey):
        levels, fock = key
        traced = tuple(fock.occupations[i] for i in indices)
        return (levels, fock.without(indices)), traced

    return _reduce(rho, split, register, rho.qubits)


###############################################################################
# fidelity
###############################################################################


def fidelity(rho: "DensityMatrix | _SparseState", target: "np.ndarray | _SparseState") -> float:
    """
    Overlap ⟨target|ρ|target⟩ with a pure target.

    `target` is either a vector aligned with `rho.basis` or a sparse state on
    the same qubits and register.

    Raises:
        DimensionMismatchError: if the target does not fit ρ's space.
    """
    rho = as_density_matrix(rho)
    if isinstance(target, _SparseState):
        if target.qubits != rho.qubits:
            raise DimensionMismatchError("Target lives on different qubits")
        register = rho.register.extend(target.register)
        if len(register) != len(rho.register):
            raise DimensionMismatchError("Target populates modes the state lacks")
        amplitudes = _realign(target, rho.register)
        vector = np.array([amplitudes.pop(k, 0j) for k in rho.basis], dtype=complex)
    else:
        vector = np.asarray(target, dtype=complex).ravel()
        if vector.shape[0] != rho.dim:
            raise DimensionMismatchError(
                f"Target of dimension {vector.shape[0]} for a state of dimension {rho.dim}"
            )

    value = np.vdot(vector, rho.matrix @ vector)
    return float(min(max(value.real, 0.0), 1.0))


###############################################################################
# Bell states
###############################################################################


class BellState(Enum):
    PSI_MINUS = "psi-"
    PSI_PLUS = "psi+"
    PHI_MINUS = "phi-"
    PHI_PLUS = "phi+"


_BELL_VECTORS = {
    BellState.PSI_MINUS: (0, 1, -1, 0),
    BellState.PSI_PLUS: (0, 1, 1, 0),
    BellState.PHI_MINUS: (1, 0, 0, -1),
    BellState.PHI_PLUS: (1, 0, 0, 1),
}


def ion_bell_state(kind: BellState | str) -> np.ndarray:
    """Bell vector over the canonical basis (S1S1, S1S2, S2S1, S2S2)."""
    return np.array(_BELL_VECTORS[BellState(kind)], dtype=complex) / sqrt(2)


def photon_bell_state(
    kind: BellState | str,
    sides: tuple[Site, Site] = (Site.A, Site.B),
    max_photons: int = MAX_PHOTONS,
) -> PhotonicState:
    """Two-photon polarization Bell state, e.g. ψ⁻ = (a₁†b₂† − a₂†b₁†)/√2 |0⟩."""
    coefficients = _BELL_VECTORS[BellState(kind)]
    pols = list(product(list(Polarization), repeat=2))
    register = ModeRegister(
        tuple(ModeLabel(site, pol) for site in sides for pol in Polarization)
    )
    total = None
    for (pol_a, pol_b), coeff in zip(pols, coefficients):
        if not coeff:
            continue
        term = PhotonicState.vacuum(register, max_photons)
        term = apply_creation(term, ModeLabel(sides[0], pol_a))
        term = apply_creation(term, ModeLabel(sides[1], pol_b))
        term = term.scaled(coeff / sqrt(2))
        total = term if total is None else total + term

    return total
