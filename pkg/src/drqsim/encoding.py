"""Logical qubits over physical subsystems.

Two base encodings:

  dual_rail   |0> = |1>|0> , |1> = |0>|1>   (one phonon shared by two modes)
  internal    |0> = ground, |1> = excited   (one internal qubit)

Each can be extended with an auxiliary mode (kinds `dual_rail_aux` and
`internal_aux`) whose single-phonon level encodes the transient third
basis state used by multi-controlled gates.  In the logical subspace the
auxiliary mode sits in vacuum; any population there counts as leakage.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import RegisterError
from .fock import (
    MODE,
    QUBIT,
    HilbertLayout,
    StateVector,
    measure_qubit_z,
)
from .pulses import PhysicalOp, apply_pulse, carrier, rsb

DUAL_RAIL = "dual_rail"
INTERNAL = "internal"
DUAL_RAIL_AUX = "dual_rail_aux"
INTERNAL_AUX = "internal_aux"

_KIND_ARITY = {DUAL_RAIL: 2, INTERNAL: 1, DUAL_RAIL_AUX: 3, INTERNAL_AUX: 2}


@dataclass(frozen=True)
class RegisterEntry:
    logical_id: str
    kind: str
    physical: tuple[str, ...]

    @property
    def is_dual_rail(self) -> bool:
        return self.kind in (DUAL_RAIL, DUAL_RAIL_AUX)

    @property
    def rails(self) -> tuple[str, str]:
        if not self.is_dual_rail:
            raise RegisterError(f"{self.logical_id!r} has no mode rails")
        return self.physical[0], self.physical[1]

    @property
    def qubit(self) -> str:
        if self.is_dual_rail:
            raise RegisterError(f"{self.logical_id!r} is not an internal qubit")
        return self.physical[0]

    @property
    def aux_mode(self) -> str | None:
        if self.kind == DUAL_RAIL_AUX:
            return self.physical[2]
        if self.kind == INTERNAL_AUX:
            return self.physical[1]
        return None


@dataclass(frozen=True)
class LogicalRegister:
    """Immutable map from logical qubits to physical subsystems."""

    layout: HilbertLayout
    entries: tuple[RegisterEntry, ...]
    ancilla_qubits: tuple[str, ...] = ()
    com_mode: str | None = None

    def entry(self, logical_id: str) -> RegisterEntry:
        for e in self.entries:
            if e.logical_id == logical_id:
                return e
        raise RegisterError(f"unknown logical qubit {logical_id!r}")

    @property
    def n_logical(self) -> int:
        return len(self.entries)

    @property
    def logical_dim(self) -> int:
        return 2 ** self.n_logical

    def claimed_subsystems(self) -> tuple[str, ...]:
        out: list[str] = []
        for e in self.entries:
            out.extend(e.physical)
        out.extend(self.ancilla_qubits)
        if self.com_mode is not None:
            out.append(self.com_mode)
        return tuple(out)


def define_register(layout: HilbertLayout,
                    entries: Iterable[tuple[str, str, Sequence[str]]],
                    ancilla_qubits: Sequence[str] = (),
                    com_mode: str | None = None) -> LogicalRegister:
    """Validate and freeze a logical register over `layout`."""
    built: list[RegisterEntry] = []
    seen_logical: set[str] = set()
    for logical_id, kind, physical in entries:
        if kind not in _KIND_ARITY:
            raise RegisterError(f"unknown register kind {kind!r}")
        physical = tuple(physical)
        if len(physical) != _KIND_ARITY[kind]:
            raise RegisterError(
                f"{kind} entry {logical_id!r} takes {_KIND_ARITY[kind]} "
                f"subsystems, got {len(physical)}")
        if logical_id in seen_logical:
            raise RegisterError(f"duplicate logical id {logical_id!r}")
        seen_logical.add(logical_id)
        want = {
            DUAL_RAIL: (MODE, MODE),
            DUAL_RAIL_AUX: (MODE, MODE, MODE),
            INTERNAL: (QUBIT,),
            INTERNAL_AUX: (QUBIT, MODE),
        }[kind]
        for sid, kindwant in zip(physical, want):
            if layout.kind_of(sid) != kindwant:
                raise RegisterError(
                    f"{logical_id!r}: subsystem {sid!r} must be a {kindwant}")
        if len(set(physical)) != len(physical):
            raise RegisterError(f"{logical_id!r} reuses a subsystem")
        built.append(RegisterEntry(logical_id, kind, physical))

    for q in ancilla_qubits:
        if not layout.is_qubit(q):
            raise RegisterError(f"ancilla {q!r} is not a qubit")
    if com_mode is not None and not layout.is_mode(com_mode):
        raise RegisterError(f"COM mode {com_mode!r} is not a mode")

    register = LogicalRegister(layout, tuple(built), tuple(ancilla_qubits),
                               com_mode)
    claimed = register.claimed_subsystems()
    if len(set(claimed)) != len(claimed):
        dupes = sorted({s for s in claimed if claimed.count(s) > 1})
        raise RegisterError(f"subsystems assigned twice: {dupes}")
    return register


def codeword_levels(register: LogicalRegister,
                    bits: Sequence[int]) -> dict[str, int]:
    """Physical levels of the codeword |bits>; reference levels elsewhere."""
    if len(bits) != register.n_logical:
        raise RegisterError(
            f"expected {register.n_logical} bits, got {len(bits)}")
    levels: dict[str, int] = {}
    for e, b in zip(register.entries, bits):
        if b not in (0, 1):
            raise RegisterError("logical bits must be 0 or 1")
        if e.is_dual_rail:
            d0, d1 = e.rails
            levels[d0] = 1 - b
            levels[d1] = b
        else:
            levels[e.qubit] = b
        if e.aux_mode is not None:
            levels[e.aux_mode] = 0
    return levels


def codeword_index(register: LogicalRegister, bits: Sequence[int]) -> int:
    """Full-space basis index of the codeword (everything else at level 0)."""
    layout = register.layout
    full = [0] * len(layout.dims)
    for sid, lvl in codeword_levels(register, bits).items():
        full[layout.axis(sid)] = lvl
    return layout.basis_index(full)


def logical_basis_state(register: LogicalRegister,
                        bits: Sequence[int]) -> StateVector:
    amps = np.zeros(register.layout.total_dim, dtype=complex)
    amps[codeword_index(register, bits)] = 1.0
    return StateVector(register.layout, amps)


def _bit_patterns(n: int):
    for b in range(2 ** n):
        yield tuple((b >> (n - 1 - i)) & 1 for i in range(n))


@dataclass
class LogicalStateReport:
    """Projection of a physical state onto the codeword span.

    `logical_amplitudes` is indexed lexicographically with the first
    registered logical qubit as the most significant bit.
    """

    logical_amplitudes: np.ndarray = field(repr=False)
    leakage: float = 0.0
    global_phase: float = 0.0


def extract_logical_state(state: StateVector,
                          register: LogicalRegister) -> LogicalStateReport:
    n = register.n_logical
    amps = np.zeros(2 ** n, dtype=complex)
    for k, bits in enumerate(_bit_patterns(n)):
        amps[k] = state.amplitudes[codeword_index(register, bits)]
    weight = float(np.sum(np.abs(amps) ** 2))
    leakage = max(0.0, 1.0 - weight)
    phase = 0.0
    if weight > 1e-15:
        phase = float(np.angle(amps[int(np.argmax(np.abs(amps)))]))
    return LogicalStateReport(amps, leakage, phase)


def leakage_probability(state: StateVector,
                        register: LogicalRegister) -> float:
    """Probability weight outside the codeword span."""
    return extract_logical_state(state, register).leakage


PREPARE_PHASE = np.pi  # carrier(pi) and rsb(pi) each contribute -i


def prepare_dual_rail_zero(register: LogicalRegister, logical_id: str,
                           ancilla_qubit: str) -> tuple[list[PhysicalOp], float]:
    """Pulse sequence loading one phonon into the first rail.

    Starting from the global ground state this prepares the dual-rail
    |0> codeword: a carrier pi-pulse excites the ancilla, a red-sideband
    pi-pulse converts that excitation into a phonon in rail d0 and returns
    the ancilla to the ground state.  The deterministic overall phase of
    -1 is returned for the program ledger rather than corrected.
    """
    entry = register.entry(logical_id)
    if not entry.is_dual_rail:
        raise RegisterError(f"{logical_id!r} is not a dual-rail qubit")
    if ancilla_qubit not in register.ancilla_qubits:
        raise RegisterError(f"{ancilla_qubit!r} is not in the ancilla pool")
    d0, _ = entry.rails
    ops = [carrier(np.pi, 0.0, ancilla_qubit), rsb(np.pi, ancilla_qubit, d0)]
    return ops, PREPARE_PHASE


def measure_dual_rail(state: StateVector, register: LogicalRegister,
                      logical_id: str, ancilla_qubit: str,
                      rng_seed) -> tuple[int, StateVector]:
    """Map the dual-rail state onto the ancilla and read it out.

    A red-sideband pi-pulse between rail d1 and the ground-state ancilla
    maps |0>_D -> ancilla ground, |1>_D -> ancilla excited (the -i phase
    on the excited branch does not affect outcomes).  The ancilla is
    flipped back to ground after readout so it can be reused.
    """
    entry = register.entry(logical_id)
    if not entry.is_dual_rail:
        raise RegisterError(f"{logical_id!r} is not a dual-rail qubit")
    if ancilla_qubit not in register.ancilla_qubits:
        raise RegisterError(f"{ancilla_qubit!r} is not in the ancilla pool")
    if state.population(ancilla_qubit, 0) < 1.0 - 1e-9:
        raise RegisterError(f"ancilla {ancilla_qubit!r} is not in the ground state")
    _, d1 = entry.rails
    mapped = apply_pulse(state, rsb(np.pi, ancilla_qubit, d1))
    outcome, collapsed, _ = measure_qubit_z(mapped, ancilla_qubit, rng_seed)
    if outcome == 1:
        collapsed = apply_pulse(collapsed, carrier(np.pi, 0.0, ancilla_qubit))
    return outcome, collapsed
