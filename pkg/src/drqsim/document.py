"""Circuit document format: parsing, validation, serialization.

A document is plain UTF-8 text with five sections:

    # comments start with '#'
    system:
      qubits: q0 q1
      modes: m0 m1
      cutoff: 4
    registers:
      Q internal q0
      D dual_rail m0 m1
    ancillas:
      qubits: q1
      com_mode: m2
    program:
      h D
      cnot Q D
    options:
      seed: 7
      shots: 10000
      tolerance: 1e-9

Angles are decimal numbers, optionally written as multiples of pi
("pi*0.5", "-pi*0.25", bare "pi").  Every parse failure carries a stable
diagnostic code and the offending line number.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import DocumentError

SECTIONS = ("system", "registers", "ancillas", "program", "options")
REGISTER_KINDS = {"dual_rail": 2, "internal": 1, "dual_rail_aux": 3,
                  "internal_aux": 2}

# gate name -> (number of numeric params, min operands, max operands or None)
GATE_SIGNATURES: dict[str, tuple[int, int, int | None]] = {
    "x": (0, 1, 1), "y": (0, 1, 1), "z": (0, 1, 1), "h": (0, 1, 1),
    "s": (0, 1, 1), "sdg": (0, 1, 1),
    "rx": (1, 1, 1), "ry": (1, 1, 1), "rz": (1, 1, 1),
    "rzz": (1, 2, 2), "rxx": (1, 2, 2), "xx": (1, 2, 2),
    "cnot": (0, 2, 2),
    "cswap": (0, 3, None),
    "kcnot": (0, 3, None),
    "mcx": (0, 2, None),
    "mcswap": (0, 4, None),
    "loss": (0, 1, 1), "gain": (0, 1, 1),
    "qndcheck": (0, 1, 1),
}

_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_PI_RE = re.compile(r"^([+-]?)pi(\*([+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?))?$")


@dataclass(frozen=True)
class GateRecord:
    name: str
    params: tuple[float, ...]
    operands: tuple[str, ...]
    line: int = field(default=0, compare=False)  # diagnostics only

    def render(self) -> str:
        parts = [self.name]
        parts += [format_number(p) for p in self.params]
        parts += list(self.operands)
        return " ".join(parts)


@dataclass
class CircuitDocument:
    qubits: tuple[str, ...] = ()
    modes: tuple[str, ...] = ()
    cutoff: int = 4
    registers: tuple[tuple[str, str, tuple[str, ...]], ...] = ()
    ancilla_qubits: tuple[str, ...] = ()
    com_mode: str | None = None
    program: tuple[GateRecord, ...] = ()
    options: dict[str, float] = field(default_factory=dict)

    def logical_ids(self) -> tuple[str, ...]:
        return tuple(r[0] for r in self.registers)


def parse_number(token: str, line: int) -> float:
    import math
    m = _PI_RE.match(token)
    if m:
        sign = -1.0 if m.group(1) == "-" else 1.0
        factor = float(m.group(3)) if m.group(3) else 1.0
        return sign * math.pi * factor
    if _NUMBER_RE.match(token):
        return float(token)
    raise DocumentError("number", line, f"cannot parse number {token!r}")


def format_number(value: float) -> str:
    import math
    if value == 0:
        return "0"
    ratio = value / math.pi
    rounded = round(ratio, 12)
    if abs(ratio - rounded) < 1e-15 and abs(rounded) >= 1e-6:
        if rounded == 1:
            return "pi"
        if rounded == -1:
            return "-pi"
        return f"pi*{rounded:.12g}"
    return repr(value)


def _looks_numeric(token: str) -> bool:
    return bool(_NUMBER_RE.match(token) or _PI_RE.match(token))


def parse_circuit(text: str) -> CircuitDocument:
    doc = CircuitDocument()
    registers: list[tuple[str, str, tuple[str, ...]]] = []
    program: list[GateRecord] = []
    options: dict[str, float] = {}
    section = None
    seen_sections: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.endswith(":") and stripped[:-1] in SECTIONS:
            section = stripped[:-1]
            if section in seen_sections:
                raise DocumentError("section", lineno,
                                    f"duplicate section {section!r}")
            seen_sections.add(section)
            continue
        if section is None:
            raise DocumentError("section", lineno,
                                f"content before any section: {stripped!r}")

        if section == "system":
            key, _, rest = stripped.partition(":")
            key = key.strip()
            values = rest.split()
            if key == "qubits":
                doc.qubits = _unique(values, lineno, "qubit")
            elif key == "modes":
                doc.modes = _unique(values, lineno, "mode")
            elif key == "cutoff":
                if len(values) != 1:
                    raise DocumentError("syntax", lineno, "cutoff takes one value")
                try:
                    doc.cutoff = int(values[0])
                except ValueError:
                    raise DocumentError("number", lineno,
                                        f"bad cutoff {values[0]!r}") from None
            else:
                raise DocumentError("syntax", lineno,
                                    f"unknown system key {key!r}")
        elif section == "registers":
            tokens = stripped.split()
            if len(tokens) < 3:
                raise DocumentError("syntax", lineno,
                                    "register entry: <id> <kind> <subsystems...>")
            lid, kind, *phys = tokens
            if kind not in REGISTER_KINDS:
                raise DocumentError("validation", lineno,
                                    f"unknown register kind {kind!r}")
            if len(phys) != REGISTER_KINDS[kind]:
                raise DocumentError(
                    "arity", lineno,
                    f"{kind} takes {REGISTER_KINDS[kind]} subsystems, "
                    f"got {len(phys)}")
            if any(r[0] == lid for r in registers):
                raise DocumentError("duplicate", lineno,
                                    f"logical id {lid!r} already defined")
            registers.append((lid, kind, tuple(phys)))
        elif section == "ancillas":
            key, _, rest = stripped.partition(":")
            key = key.strip()
            values = rest.split()
            if key == "qubits":
                doc.ancilla_qubits = _unique(values, lineno, "ancilla")
            elif key == "com_mode":
                if len(values) != 1:
                    raise DocumentError("syntax", lineno,
                                        "com_mode takes one mode id")
                doc.com_mode = values[0]
            else:
                raise DocumentError("syntax", lineno,
                                    f"unknown ancillas key {key!r}")
        elif section == "program":
            tokens = stripped.split()
            name, args = tokens[0], tokens[1:]
            if name not in GATE_SIGNATURES:
                raise DocumentError("unknown-gate", lineno,
                                    f"unknown gate {name!r}")
            n_params, lo, hi = GATE_SIGNATURES[name]
            params = tuple(parse_number(t, lineno) for t in args[:n_params])
            if len(params) != n_params:
                raise DocumentError("arity", lineno,
                                    f"{name} takes {n_params} parameter(s)")
            operands = tuple(args[n_params:])
            if any(_looks_numeric(t) for t in operands):
                raise DocumentError("arity", lineno,
                                    f"{name}: too many numeric parameters")
            if len(operands) < lo or (hi is not None and len(operands) > hi):
                want = f"{lo}" if hi == lo else f"{lo}+" if hi is None else f"{lo}..{hi}"
                raise DocumentError("arity", lineno,
                                    f"{name} takes {want} operand(s), "
                                    f"got {len(operands)}")
            program.append(GateRecord(name, params, operands, lineno))
        elif section == "options":
            key, _, rest = stripped.partition(":")
            key = key.strip()
            if key not in ("seed", "shots", "tolerance"):
                raise DocumentError("syntax", lineno,
                                    f"unknown option {key!r}")
            options[key] = parse_number(rest.strip(), lineno)

    doc.registers = tuple(registers)
    doc.program = tuple(program)
    doc.options = options
    _validate_references(doc)
    return doc


def _unique(values: list[str], lineno: int, what: str) -> tuple[str, ...]:
    if len(set(values)) != len(values):
        raise DocumentError("duplicate", lineno, f"repeated {what} id")
    return tuple(values)


def _validate_references(doc: CircuitDocument) -> None:
    declared = set(doc.qubits) | set(doc.modes)
    logical = set()
    for lid, kind, phys in doc.registers:
        logical.add(lid)
        for sid in phys:
            if sid not in declared:
                raise DocumentError("reference", 0,
                                    f"register {lid!r} uses undeclared {sid!r}")
    for q in doc.ancilla_qubits:
        if q not in doc.qubits:
            raise DocumentError("reference", 0,
                                f"ancilla {q!r} is not a declared qubit")
    if doc.com_mode is not None and doc.com_mode not in doc.modes:
        raise DocumentError("reference", 0,
                            f"com_mode {doc.com_mode!r} is not a declared mode")
    for rec in doc.program:
        if rec.name in ("loss", "gain"):
            for sid in rec.operands:
                if sid not in doc.modes:
                    raise DocumentError("reference", rec.line,
                                        f"{rec.name} target {sid!r} is not a mode")
            continue
        for lid in rec.operands:
            if lid not in logical:
                raise DocumentError("reference", rec.line,
                                    f"unknown logical qubit {lid!r}")


def serialize_circuit(doc: CircuitDocument) -> str:
    lines = ["system:"]
    if doc.qubits:
        lines.append("  qubits: " + " ".join(doc.qubits))
    if doc.modes:
        lines.append("  modes: " + " ".join(doc.modes))
    lines.append(f"  cutoff: {doc.cutoff}")
    lines.append("registers:")
    for lid, kind, phys in doc.registers:
        lines.append(f"  {lid} {kind} " + " ".join(phys))
    if doc.ancilla_qubits or doc.com_mode:
        lines.append("ancillas:")
        if doc.ancilla_qubits:
            lines.append("  qubits: " + " ".join(doc.ancilla_qubits))
        if doc.com_mode:
            lines.append(f"  com_mode: {doc.com_mode}")
    lines.append("program:")
    for rec in doc.program:
        lines.append("  " + rec.render())
    if doc.options:
        lines.append("options:")
        for key in sorted(doc.options):
            value = doc.options[key]
            if key in ("seed", "shots") and value == int(value):
                lines.append(f"  {key}: {int(value)}")
            else:
                lines.append(f"  {key}: {format_number(value)}")
    return "\n".join(lines) + "\n"
