"""Truncated qubit-boson Hilbert space: layouts, state vectors, operators.

A layout is an ordered list of subsystems (qubits of dimension 2, bosonic
modes of dimension >= 3).  Basis indices use little-endian mixed-radix
encoding: the first registered subsystem varies fastest.  Mode operators
are hard-truncated, so the creation operator annihilates the top Fock
level; downstream checks assert that the sentinel level stays empty.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import LayoutError, StateError

QUBIT = "qubit"
MODE = "mode"

UNITARITY_TOL = 1e-10
HERMITICITY_TOL = 1e-12
NORM_TOL = 1e-10

# Internal-qubit matrices in the (ground, excited) = (level 0, level 1)
# ordering.  sigma_z has eigenvalue -1 on the ground state, +1 on the
# excited state; sigma_y follows from sigma_y = -i(sigma_+ - sigma_-).
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.conj().T
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)


def annihilation_matrix(dim: int) -> np.ndarray:
    """Truncated mode annihilation operator: a|n> = sqrt(n)|n-1>."""
    mat = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        mat[n - 1, n] = np.sqrt(n)
    return mat


def creation_matrix(dim: int) -> np.ndarray:
    """Truncated creation operator; annihilates the top level |dim-1>."""
    return annihilation_matrix(dim).conj().T


def kron_le(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product in little-endian order (first factor varies fastest)."""
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(m, out)
    return out


@dataclass(frozen=True)
class Subsystem:
    sid: str
    kind: str
    dim: int


class HilbertLayout:
    """Ordered registry of subsystems with mixed-radix index arithmetic."""

    def __init__(self, subsystems: Sequence[Subsystem]):
        self.subsystems = tuple(subsystems)
        self._pos = {s.sid: i for i, s in enumerate(self.subsystems)}
        self.dims = tuple(s.dim for s in self.subsystems)
        strides = [1]
        for d in self.dims[:-1]:
            strides.append(strides[-1] * d)
        self.strides = tuple(strides)
        self.total_dim = int(np.prod(self.dims)) if self.dims else 1

    def axis(self, sid: str) -> int:
        try:
            return self._pos[sid]
        except KeyError:
            raise LayoutError(f"unknown subsystem id {sid!r}") from None

    def subsystem(self, sid: str) -> Subsystem:
        return self.subsystems[self.axis(sid)]

    def dim_of(self, sid: str) -> int:
        return self.subsystems[self.axis(sid)].dim

    def kind_of(self, sid: str) -> str:
        return self.subsystems[self.axis(sid)].kind

    def is_qubit(self, sid: str) -> bool:
        return self.kind_of(sid) == QUBIT

    def is_mode(self, sid: str) -> bool:
        return self.kind_of(sid) == MODE

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.sid for s in self.subsystems)

    def basis_index(self, levels: Sequence[int]) -> int:
        """Mixed-radix encoding of per-subsystem levels (little-endian)."""
        if len(levels) != len(self.dims):
            raise LayoutError(
                f"expected {len(self.dims)} levels, got {len(levels)}")
        idx = 0
        for lvl, d, stride, sub in zip(levels, self.dims, self.strides,
                                       self.subsystems):
            if not 0 <= lvl < d:
                raise LayoutError(
                    f"level {lvl} out of range for {sub.sid!r} (dim {d})")
            idx += lvl * stride
        return idx

    def levels_of(self, index: int) -> tuple[int, ...]:
        """Inverse of basis_index."""
        if not 0 <= index < self.total_dim:
            raise LayoutError(f"basis index {index} out of range")
        levels = []
        for d in self.dims:
            levels.append(index % d)
            index //= d
        return tuple(levels)

    def __repr__(self) -> str:
        parts = ", ".join(f"{s.sid}:{s.kind}[{s.dim}]" for s in self.subsystems)
        return f"HilbertLayout({parts})"


def create_layout(spec: Iterable[tuple[str, str, int]]) -> HilbertLayout:
    """Build a layout from (id, kind, dim) triples, validating invariants."""
    subsystems = []
    seen = set()
    for sid, kind, dim in spec:
        if sid in seen:
            raise LayoutError(f"duplicate subsystem id {sid!r}")
        seen.add(sid)
        if kind == QUBIT:
            if dim != 2:
                raise LayoutError(f"qubit {sid!r} must have dim 2, got {dim}")
        elif kind == MODE:
            if dim < 3:
                raise LayoutError(f"mode {sid!r} needs dim >= 3, got {dim}")
        else:
            raise LayoutError(f"unknown subsystem kind {kind!r} for {sid!r}")
        subsystems.append(Subsystem(sid, kind, int(dim)))
    if not subsystems:
        raise LayoutError("layout needs at least one subsystem")
    return HilbertLayout(subsystems)


@dataclass
class StateVector:
    """Normalized complex amplitude vector over a layout."""

    layout: HilbertLayout
    amplitudes: np.ndarray = field(repr=False)

    def copy(self) -> "StateVector":
        return StateVector(self.layout, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def check_norm(self, tol: float = NORM_TOL) -> None:
        if abs(self.norm() - 1.0) > tol:
            raise StateError(f"state norm {self.norm()} drifted beyond {tol}")

    def population(self, sid: str, level: int) -> float:
        """Total probability of finding subsystem `sid` at `level`."""
        axis = self.layout.axis(sid)
        tensor = self.amplitudes.reshape(self.layout.dims, order="F")
        sl = [slice(None)] * len(self.layout.dims)
        sl[axis] = level
        return float(np.sum(np.abs(tensor[tuple(sl)]) ** 2))

    def level_distribution(self, sid: str) -> np.ndarray:
        return np.array([self.population(sid, l)
                         for l in range(self.layout.dim_of(sid))])


def basis_state(layout: HilbertLayout, levels: dict[str, int]) -> StateVector:
    """Product basis state with given levels; unspecified subsystems at 0."""
    full = [0] * len(layout.dims)
    for sid, lvl in levels.items():
        full[layout.axis(sid)] = lvl
    amps = np.zeros(layout.total_dim, dtype=complex)
    amps[layout.basis_index(full)] = 1.0
    return StateVector(layout, amps)


def ground_state(layout: HilbertLayout) -> StateVector:
    """All qubits in the electronic ground state, all modes in vacuum."""
    return basis_state(layout, {})


@dataclass
class OperatorMatrix:
    """Dense operator over an ordered subset of subsystems.

    The matrix index is little-endian over `subsystem_ids`: the first
    listed subsystem varies fastest.
    """

    subsystem_ids: tuple[str, ...]
    entries: np.ndarray = field(repr=False)

    def dim(self) -> int:
        return self.entries.shape[0]

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.subsystem_ids, self.entries.conj().T)

    def unitarity_defect(self) -> float:
        eye = np.eye(self.dim())
        return float(np.max(np.abs(self.entries.conj().T @ self.entries - eye)))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))


def _check_targets(layout: HilbertLayout, sids: Sequence[str]) -> None:
    for sid in sids:
        layout.axis(sid)
    if len(set(sids)) != len(sids):
        raise LayoutError(f"repeated subsystem in targets {tuple(sids)}")


def apply_matrix(state: StateVector, matrix: np.ndarray,
                 sids: Sequence[str]) -> StateVector:
    """Apply a matrix over the listed subsystems (no unitarity check).

    Fast path shared by the pulse engine; `apply_embedded_unitary` wraps
    it with the contract checks.
    """
    layout = state.layout
    _check_targets(layout, sids)
    axes = [layout.axis(s) for s in sids]
    dims = layout.dims
    block_dim = int(np.prod([dims[a] for a in axes]))
    if matrix.shape != (block_dim, block_dim):
        raise StateError(
            f"matrix shape {matrix.shape} does not match targets {tuple(sids)}")
    tensor = state.amplitudes.reshape(dims, order="F")
    tensor = np.moveaxis(tensor, axes, range(len(axes)))
    shape = tensor.shape
    block = tensor.reshape(block_dim, -1, order="F")
    block = matrix @ block
    tensor = block.reshape(shape, order="F")
    tensor = np.moveaxis(tensor, range(len(axes)), axes)
    return StateVector(layout, np.ascontiguousarray(tensor.reshape(-1, order="F")))


def apply_matrix_columns(columns: np.ndarray, layout: HilbertLayout,
                         matrix: np.ndarray,
                         sids: Sequence[str]) -> np.ndarray:
    """Apply a subsystem matrix to every column of a (total_dim, k) array."""
    _check_targets(layout, sids)
    axes = [layout.axis(s) for s in sids]
    k = columns.shape[1]
    dims = layout.dims + (k,)
    block_dim = int(np.prod([layout.dims[a] for a in axes]))
    tensor = columns.reshape(dims, order="F")
    tensor = np.moveaxis(tensor, axes, range(len(axes)))
    shape = tensor.shape
    block = tensor.reshape(block_dim, -1, order="F")
    block = matrix @ block
    tensor = block.reshape(shape, order="F")
    tensor = np.moveaxis(tensor, range(len(axes)), axes)
    return tensor.reshape((layout.total_dim, k), order="F")


def apply_embedded_unitary(state: StateVector, op: OperatorMatrix) -> StateVector:
    """Apply op (x) identity on untouched subsystems; norm is preserved."""
    defect = op.unitarity_defect()
    if defect > UNITARITY_TOL:
        raise StateError(f"matrix is not unitary (defect {defect:.3e})")
    out = apply_matrix(state, op.entries, op.subsystem_ids)
    out.check_norm()
    return out


def embedded_matrix(layout: HilbertLayout, op: OperatorMatrix) -> np.ndarray:
    """Dense total_dim x total_dim embedding of op, for the matmul oracle.

    Built from a Kronecker product plus an index permutation rather than
    the reshape engine, so the two paths stay independent.
    """
    axes = [layout.axis(s) for s in op.subsystem_ids]
    rest = [i for i in range(len(layout.dims)) if i not in axes]
    target_dims = [layout.dims[a] for a in axes]
    rest_dims = [layout.dims[i] for i in rest]
    rest_dim = int(np.prod(rest_dims)) if rest_dims else 1
    big = kron_le([op.entries, np.eye(rest_dim, dtype=complex)])

    # Permutation: index in (targets..., rest...) ordering -> layout index.
    perm = np.zeros(layout.total_dim, dtype=np.int64)
    reordered_dims = target_dims + rest_dims
    order = axes + rest
    for packed in range(layout.total_dim):
        rem = packed
        levels = [0] * len(layout.dims)
        for pos, d in zip(order, reordered_dims):
            levels[pos] = rem % d
            rem //= d
        perm[packed] = layout.basis_index(levels)
    full = np.zeros_like(big)
    full[np.ix_(perm, perm)] = big
    return full


def exp_hermitian(gen: OperatorMatrix, scale: float) -> OperatorMatrix:
    """exp(i * scale * gen) for Hermitian gen.

    This is the oracle every exponential-form pulse is checked against.
    The core is scipy's scaling-and-squaring Pade expm.
    """
    defect = gen.hermiticity_defect()
    if defect > HERMITICITY_TOL:
        raise StateError(f"generator is not Hermitian (defect {defect:.3e})")
    result = OperatorMatrix(gen.subsystem_ids, expm(1j * scale * gen.entries))
    u_defect = result.unitarity_defect()
    if u_defect > UNITARITY_TOL:
        raise StateError(f"exponential lost unitarity (defect {u_defect:.3e})")
    return result


class MeasurementResult(NamedTuple):
    outcome: int
    collapsed: StateVector
    probabilities: tuple[float, float]


def measure_qubit_z(state: StateVector, qubit_id: str,
                    rng_seed) -> MeasurementResult:
    """Projective z-basis measurement of one qubit (fluorescence readout).

    Outcome 0 is the ground state, 1 the excited state.  The collapsed
    state is the renormalized projection.  `rng_seed` may be an int seed
    or a numpy Generator.
    """
    layout = state.layout
    if not layout.is_qubit(qubit_id):
        raise StateError(f"{qubit_id!r} is not a qubit")
    rng = np.random.default_rng(rng_seed)
    axis = layout.axis(qubit_id)
    tensor = state.amplitudes.reshape(layout.dims, order="F")
    sl0 = [slice(None)] * len(layout.dims)
    sl1 = list(sl0)
    sl0[axis] = 0
    sl1[axis] = 1
    w0 = float(np.sum(np.abs(tensor[tuple(sl0)]) ** 2))
    w1 = float(np.sum(np.abs(tensor[tuple(sl1)]) ** 2))
    if w0 < 1e-14 and w1 < 1e-14:
        raise StateError("both projection norms vanish; state is corrupt")
    p1 = w1 / (w0 + w1)
    outcome = int(rng.random() < p1)
    keep = tensor.copy()
    drop = tuple(sl0) if outcome == 1 else tuple(sl1)
    keep[drop] = 0.0
    amps = keep.reshape(-1, order="F")
    amps = amps / np.linalg.norm(amps)
    return MeasurementResult(outcome, StateVector(layout, amps), (1 - p1, p1))


def overlap(a: StateVector, b: StateVector) -> complex:
    """Inner product <a|b>."""
    if a.layout is not b.layout and (a.layout.ids != b.layout.ids
                                     or a.layout.dims != b.layout.dims):
        raise StateError("states live on different layouts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))
