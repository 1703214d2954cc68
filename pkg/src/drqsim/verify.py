"""Independent oracles and health checks.

`program_unitary` reconstructs a pulse program as a dense matrix by two
routes: evolving basis columns through the analytic pulse paths, or
multiplying embedded matrix exponentials built with `exp_hermitian`.
Agreement between the routes is what keeps the compiler honest; the
equivalence checker then compares against ideal gates up to an overall
phase.  Heating errors are injected as discrete phonon jumps, and the
parity circuit detects them without disturbing healthy states.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .compiler import CompiledProgram
from .encoding import (
    LogicalRegister,
    codeword_index,
    logical_basis_state,
    measure_dual_rail,
)
from .errors import HealthError, RegisterError, StateError
from .fock import (
    HilbertLayout,
    OperatorMatrix,
    StateVector,
    annihilation_matrix,
    apply_matrix,
    apply_matrix_columns,
    creation_matrix,
    embedded_matrix,
    exp_hermitian,
    measure_qubit_z,
)
from .pulses import (
    PhysicalOp,
    apply_pulse,
    carrier,
    pulse_generator,
    pulse_matrix,
    zbs,
)

MAX_RESTRICTED_DIM = 256
MAX_FULL_DIM = 4096
SENTINEL_TOL = 1e-12
LEAKAGE_GUARD_TOL = 1e-6


def _op_list(program) -> list[PhysicalOp]:
    if isinstance(program, CompiledProgram):
        return list(program.ops)
    return list(program)


@dataclass
class ProgramUnitary:
    matrix: np.ndarray = field(repr=False)
    leakage_max: float = 0.0


def program_unitary(program, layout: HilbertLayout,
                    restrict: LogicalRegister | None = None,
                    method: str = "pulse") -> ProgramUnitary:
    """Dense unitary of a pulse program.

    With `restrict`, columns are codeword basis states evolved through the
    program and projected back onto the codeword span; `leakage_max` is
    the largest weight lost outside that span.  Without it the full
    total_dim matrix is returned.  `method` selects the evolution route:
    "pulse" for the analytic paths, "expm" for the exp_hermitian matmul
    oracle (full-space only).
    """
    ops = _op_list(program)
    if restrict is None:
        if layout.total_dim > MAX_FULL_DIM:
            raise StateError(
                f"full dimension {layout.total_dim} exceeds {MAX_FULL_DIM}")
        if method == "expm":
            full = np.eye(layout.total_dim, dtype=complex)
            for op in ops:
                gen, scale = pulse_generator(op, layout)
                small = exp_hermitian(gen, scale)
                full = embedded_matrix(layout, small) @ full
            return ProgramUnitary(full)
        if method != "pulse":
            raise ValueError(f"unknown method {method!r}")
        out = np.eye(layout.total_dim, dtype=complex)
        for op in ops:
            mat = pulse_matrix(op, layout)
            out = apply_matrix_columns(out, layout, mat.entries,
                                       mat.subsystem_ids)
        return ProgramUnitary(out)

    if method != "pulse":
        raise ValueError("restricted unitaries use the pulse path")
    dim = restrict.logical_dim
    if dim > MAX_RESTRICTED_DIM:
        raise StateError(f"logical dimension {dim} exceeds {MAX_RESTRICTED_DIM}")
    n = restrict.n_logical
    indices = [codeword_index(restrict,
                              [(b >> (n - 1 - i)) & 1 for i in range(n)])
               for b in range(dim)]
    matrix = np.zeros((dim, dim), dtype=complex)
    leakage_max = 0.0
    for col in range(dim):
        bits = [(col >> (n - 1 - i)) & 1 for i in range(n)]
        state = logical_basis_state(restrict, bits)
        for op in ops:
            state = apply_pulse(state, op)
        column = state.amplitudes[indices]
        matrix[:, col] = column
        leakage_max = max(leakage_max,
                          1.0 - float(np.sum(np.abs(column) ** 2)))
    return ProgramUnitary(matrix, leakage_max)


@dataclass
class EquivalenceReport:
    equivalent: bool
    max_entry_error: float
    inferred_phase: float
    leakage_max: float = 0.0


def equivalent_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float,
                           leakage_max: float = 0.0) -> EquivalenceReport:
    """Check a * e^{i phi} == b entrywise, inferring phi from b's largest entry."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise StateError(f"dimension mismatch {a.shape} vs {b.shape}")
    flat = int(np.argmax(np.abs(b)))
    i, j = np.unravel_index(flat, b.shape)
    if abs(a[i, j]) < 1e-14:
        return EquivalenceReport(False, float(np.max(np.abs(a - b))), 0.0,
                                 leakage_max)
    phase = float(np.angle(b[i, j] / a[i, j]))
    err = float(np.max(np.abs(a * np.exp(1j * phase) - b)))
    return EquivalenceReport(err <= tol, err, phase, leakage_max)


def run_program(state: StateVector, program, norm_tol: float = 1e-10,
                probe: Callable[[StateVector], None] | None = None,
                register: LogicalRegister | None = None,
                ancilla_tol: float = 1e-9) -> StateVector:
    """Apply a pulse program with norm monitoring.

    `probe` is called after every pulse (population tracking in tests and
    health checks).  With `register`, pool ancillas and the COM mode must
    sit in their reference states at the program boundaries: compiled
    gates borrow them mid-sequence but assume them ground on entry, so a
    violation means an earlier gate failed to restore its resources.
    """
    if register is not None:
        defect = ancilla_reset_defect(state, register)
        if defect > ancilla_tol:
            raise HealthError(
                f"ancilla not in its reference state at gate entry "
                f"(defect {defect:.3e})")
    for op in _op_list(program):
        state = apply_pulse(state, op)
        if abs(state.norm() - 1.0) > norm_tol:
            raise HealthError(f"norm drifted to {state.norm()}")
        if probe is not None:
            probe(state)
    if register is not None:
        defect = ancilla_reset_defect(state, register)
        if defect > ancilla_tol:
            raise HealthError(
                f"ancilla not restored at gate exit (defect {defect:.3e})")
    return state


def sentinel_population(state: StateVector) -> float:
    """Largest top-Fock-level population over modes with dim >= 4.

    The top level of a cutoff-4 mode is a sentinel: error-free circuits
    never populate it, so weight there means truncation influenced the
    run.
    """
    worst = 0.0
    for sub in state.layout.subsystems:
        if sub.kind == "mode" and sub.dim >= 4:
            worst = max(worst, state.population(sub.sid, sub.dim - 1))
    return worst


def check_sentinel(state: StateVector, tol: float = SENTINEL_TOL) -> None:
    worst = sentinel_population(state)
    if worst > tol:
        raise HealthError(f"sentinel Fock level populated ({worst:.3e})")


def ancilla_reset_defect(state: StateVector,
                         register: LogicalRegister) -> float:
    """Worst deviation of any pool ancilla / COM mode from its reference state."""
    worst = 0.0
    for q in register.ancilla_qubits:
        worst = max(worst, 1.0 - state.population(q, 0))
    if register.com_mode is not None:
        worst = max(worst, 1.0 - state.population(register.com_mode, 0))
    return worst


# ---------------------------------------------------------------------------
# QND parity circuit


def qnd_parity_sequence(qubit: str, mode1: str, mode2: str) -> list[PhysicalOp]:
    """Parity-to-qubit circuit: y(-pi/2), swap, y(pi/2), swap.

    Maps |g>|n>|m> to |sigma_{(n+m) mod 2}>|n>|m> exactly, leaving any
    fixed-parity mode superposition untouched.
    """
    swap = zbs(np.pi / 2, 0.0, qubit, mode1, mode2)
    return [
        carrier(-np.pi / 2, -np.pi / 2, qubit),
        swap,
        carrier(np.pi / 2, -np.pi / 2, qubit),
        swap,
    ]


def qnd_parity_check(state: StateVector, qubit: str, mode1: str, mode2: str,
                     rng_seed=0) -> tuple[str, StateVector]:
    """Run the parity circuit and read the flag off the qubit.

    Returns ("even" | "odd", post-measurement state).  For fixed-parity
    mode states the readout is deterministic and non-demolition; for
    parity mixtures the returned state is the explicitly collapsed
    branch.  The readout is end-of-circuit: continuing coherent evolution
    on other subsystems afterwards is the caller's responsibility to
    justify.
    """
    if not state.layout.is_qubit(qubit):
        raise StateError(f"{qubit!r} is not a qubit")
    if state.population(qubit, 0) < 1.0 - 1e-9:
        raise StateError(f"parity qubit {qubit!r} must start in the ground state")
    for op in qnd_parity_sequence(qubit, mode1, mode2):
        state = apply_pulse(state, op)
    outcome, collapsed, _ = measure_qubit_z(state, qubit, rng_seed)
    return ("odd" if outcome == 1 else "even"), collapsed


# ---------------------------------------------------------------------------
# Heating errors


def inject_heating_error(state: StateVector, mode: str,
                         kind: str) -> StateVector:
    """Apply a discrete phonon jump (loss: a, gain: a^dag) and renormalize."""
    layout = state.layout
    if not layout.is_mode(mode):
        raise StateError(f"{mode!r} is not a mode")
    dim = layout.dim_of(mode)
    if kind == "loss":
        jump = annihilation_matrix(dim)
    elif kind == "gain":
        if state.population(mode, dim - 1) >= 1e-12:
            raise StateError(
                "gain would push population past the Fock truncation")
        jump = creation_matrix(dim)
    else:
        raise ValueError(f"unknown heating kind {kind!r}")
    out = apply_matrix(state, jump, (mode,))
    norm = float(np.linalg.norm(out.amplitudes))
    if norm < 1e-12:
        raise StateError(f"{kind} on {mode!r} annihilates the state")
    return StateVector(layout, out.amplitudes / norm)


# ---------------------------------------------------------------------------
# Ideal logical gates (the comparison side of equivalence checks)


def ideal_logical_gate(name: str, params: Sequence[float],
                       n_operands: int) -> np.ndarray:
    """Textbook matrix of a named gate over its operands (first = MSB)."""
    from . import compiler as _c

    if name in ("x", "y", "z", "h", "s", "sdg"):
        return {"x": _c.PAULI_X, "y": _c.PAULI_Y, "z": _c.PAULI_Z,
                "h": _c.HADAMARD, "s": _c.S_GATE,
                "sdg": _c.S_GATE.conj().T}[name].copy()
    if name in ("rx", "ry", "rz"):
        return _c.rotation_matrix(name[1], params[0])
    if name == "rzz":
        t = params[0]
        return np.diag(np.exp(-1j * t / 2 * np.array([1, -1, -1, 1])))
    if name in ("rxx", "xx"):
        t = params[0]
        xx = np.kron(_c.PAULI_X, _c.PAULI_X)
        return np.cos(t / 2) * np.eye(4) - 1j * np.sin(t / 2) * xx
    if name == "cnot":
        return np.array([[1, 0, 0, 0], [0, 1, 0, 0],
                         [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    if name in ("kcnot", "mcx"):
        dim = 2 ** n_operands
        u = np.eye(dim, dtype=complex)
        u[dim - 2:, dim - 2:] = np.array([[0, 1], [1, 0]])
        return u
    if name in ("cswap", "mcswap"):
        # Last 2N operands are swap targets, everything before controls.
        n_targets = _swap_target_count(name, n_operands)
        n_controls = n_operands - n_targets
        half = n_targets // 2
        dim = 2 ** n_operands
        u = np.zeros((dim, dim), dtype=complex)
        for col in range(dim):
            bits = [(col >> (n_operands - 1 - i)) & 1
                    for i in range(n_operands)]
            if all(bits[:n_controls]):
                tb = bits[n_controls:]
                tb = tb[half:] + tb[:half]
                bits = bits[:n_controls] + tb
            row = 0
            for b in bits:
                row = (row << 1) | b
            u[row, col] = 1.0
        return u
    raise ValueError(f"no ideal matrix for gate {name!r}")


def _swap_target_count(name: str, n_operands: int) -> int:
    if name == "cswap":
        return n_operands - 1
    return 2  # mcswap swaps one pair


def embed_logical_matrix(u_small: np.ndarray, positions: Sequence[int],
                         n: int) -> np.ndarray:
    """Embed a k-qubit matrix at the given logical positions (MSB-first)."""
    k = len(positions)
    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> (n - 1 - i)) & 1 for i in range(n)]
        sub_in = 0
        for p in positions:
            sub_in = (sub_in << 1) | bits[p]
        for sub_out in range(2 ** k):
            amp = u_small[sub_out, sub_in]
            if amp == 0:
                continue
            new_bits = list(bits)
            for idx, p in enumerate(positions):
                new_bits[p] = (sub_out >> (k - 1 - idx)) & 1
            row = 0
            for b in new_bits:
                row = (row << 1) | b
            out[row, col] += amp
    return out


# ---------------------------------------------------------------------------
# Shot sampling


def sample_counts(state: StateVector, register: LogicalRegister,
                  measured_ids: Sequence[str], shots: int,
                  seed) -> dict[str, int]:
    """Born-rule sampling of logical qubits, deterministic for a seed.

    Dual-rail reads borrow the first pool ancilla (reset between reads);
    internal reads are direct fluorescence measurements.
    """
    entries = [register.entry(mid) for mid in measured_ids]
    if any(e.is_dual_rail for e in entries) and not register.ancilla_qubits:
        raise RegisterError("dual-rail readout needs an ancilla qubit")
    rng = np.random.default_rng(seed)
    counts: dict[str, int] = {}
    for _ in range(shots):
        shot_state = state.copy()
        bits = []
        for entry in entries:
            if entry.is_dual_rail:
                bit, shot_state = measure_dual_rail(
                    shot_state, register, entry.logical_id,
                    register.ancilla_qubits[0], rng)
            else:
                bit, shot_state, _ = measure_qubit_z(
                    shot_state, entry.qubit, rng)
            bits.append(str(bit))
        key = "".join(bits)
        counts[key] = counts.get(key, 0) + 1
    return counts
