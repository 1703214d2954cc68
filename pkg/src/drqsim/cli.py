"""Command-line surface: compile, run, verify.

Reports are JSON documents (schema `drqsim-report/1`), printed to stdout
and optionally written to a file.  Exit codes: 0 success, 1 verification
failure, 2 parse/validation error, 3 numeric-health failure.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import compiler as comp
from .compiler import CompiledProgram, LogicalGate, _AncillaPool, compile_gate
from .document import CircuitDocument, parse_circuit
from .encoding import (
    LogicalRegister,
    define_register,
    extract_logical_state,
    prepare_dual_rail_zero,
)
from .errors import (
    CompileError,
    DocumentError,
    HealthError,
    LayoutError,
    PulseError,
    RegisterError,
    SimulationError,
    StateError,
)
from .fock import create_layout, ground_state
from .pulses import apply_pulse, carrier
from .suite import run_builtin_suite
from .verify import (
    LEAKAGE_GUARD_TOL,
    check_sentinel,
    embed_logical_matrix,
    equivalent_up_to_phase,
    ideal_logical_gate,
    inject_heating_error,
    program_unitary,
    qnd_parity_check,
    run_program,
    sample_counts,
)

SCHEMA = "drqsim-report/1"

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_VALIDATION = 2
EXIT_HEALTH = 3


def build_system(doc: CircuitDocument,
                 cutoff: int | None = None
                 ) -> tuple["object", LogicalRegister]:
    eff_cutoff = cutoff if cutoff is not None else doc.cutoff
    spec = [(q, "qubit", 2) for q in doc.qubits]
    spec += [(m, "mode", eff_cutoff) for m in doc.modes]
    layout = create_layout(spec)
    register = define_register(layout, doc.registers,
                               ancilla_qubits=doc.ancilla_qubits,
                               com_mode=doc.com_mode)
    return layout, register


def gate_from_record(rec) -> LogicalGate:
    name = rec.name
    if name in ("x", "y", "z", "h", "s", "sdg"):
        matrix = ideal_logical_gate(name, [], 1)
        return comp.su2(matrix, rec.operands[0])
    if name in ("rx", "ry", "rz"):
        return comp.su2(comp.rotation_matrix(name[1], rec.params[0]),
                        rec.operands[0])
    if name == "rzz":
        return comp.rzz(rec.params[0], *rec.operands)
    if name in ("rxx", "xx"):
        return comp.rxx(rec.params[0], *rec.operands)
    if name == "cnot":
        return comp.cnot(*rec.operands)
    if name == "cswap":
        return comp.cswap(rec.operands[0], *rec.operands[1:])
    if name == "kcnot":
        return comp.kcnot(rec.operands[:-1], rec.operands[-1])
    if name == "mcx":
        return comp.mcx(rec.operands[:-1], rec.operands[-1])
    if name == "mcswap":
        return comp.mcswap(rec.operands[:-2], *rec.operands[-2:])
    raise CompileError(f"gate {name!r} is not a unitary gate record")


def _op_entry(op) -> dict:
    entry = {
        "kind": op.kind,
        "theta": op.theta,
        "phi": op.phi,
        "targets": list(op.targets),
    }
    if op.aux_flag:
        entry["aux"] = True
    return entry


def _prepare_all(register: LogicalRegister) -> tuple[list, float]:
    """Preparation pulses loading every dual-rail register into |0>."""
    ops: list = []
    phase = 0.0
    if not any(e.is_dual_rail for e in register.entries):
        return ops, phase
    if not register.ancilla_qubits:
        raise RegisterError("dual-rail preparation needs an ancilla qubit")
    anc = register.ancilla_qubits[0]
    for entry in register.entries:
        if entry.is_dual_rail:
            seq, ph = prepare_dual_rail_zero(register, entry.logical_id, anc)
            ops.extend(seq)
            phase += ph
    return ops, phase


def cmd_compile(doc: CircuitDocument, args) -> tuple[dict, int]:
    layout, register = build_system(doc, args.cutoff)
    prep_ops, prep_phase = _prepare_all(register)
    pool = _AncillaPool(register)
    steps = []
    program = CompiledProgram()
    program.global_phase += prep_phase
    for i, rec in enumerate(doc.program):
        if rec.name in ("loss", "gain"):
            steps.append({"step": i, "gate": rec.render(),
                          "kind": "error-injection"})
            continue
        if rec.name == "qndcheck":
            steps.append({"step": i, "gate": rec.render(),
                          "kind": "parity-check"})
            continue
        gate = gate_from_record(rec)
        try:
            sub = compile_gate(register, gate, pool)
        except (CompileError, RegisterError) as exc:
            raise CompileError(f"gate {i} ({rec.name}): {exc}") from exc
        steps.append({"step": i, "gate": rec.render(), "kind": "pulses",
                      "pulses": [_op_entry(op) for op in sub.ops],
                      "phase": sub.phase_mod_2pi})
        program.extend(sub)
    report = {
        "schema": SCHEMA,
        "command": "compile",
        "preparation": [_op_entry(op) for op in prep_ops],
        "steps": steps,
        "pulse_count": len(program.ops) + len(prep_ops),
        "global_phase": program.phase_mod_2pi,
        "ancilla_manifest": [
            {"gate": use.gate, "qubits": list(use.qubits),
             "modes": list(use.modes)}
            for use in program.ancilla_manifest
        ],
    }
    return report, EXIT_OK


def cmd_run(doc: CircuitDocument, args) -> tuple[dict, int]:
    layout, register = build_system(doc, args.cutoff)
    seed = int(args.seed if args.seed is not None
               else doc.options.get("seed", 0))
    shots = int(args.shots if args.shots is not None
                else doc.options.get("shots", 0))

    state = ground_state(layout)
    prep_ops, ledger = _prepare_all(register)
    state = run_program(state, prep_ops)
    pool = _AncillaPool(register)
    injected = False
    parity_flags = []
    n_records = len(doc.program)
    for i, rec in enumerate(doc.program):
        if rec.name in ("loss", "gain"):
            state = inject_heating_error(state, rec.operands[0], rec.name)
            injected = True
            continue
        if rec.name == "qndcheck":
            if i != n_records - 1 and not args.allow_midcircuit:
                raise CompileError(
                    "qndcheck before the end of the program disturbs the "
                    "modes; pass --allow-midcircuit for idealized studies")
            entry = register.entry(rec.operands[0])
            if not entry.is_dual_rail:
                raise CompileError("qndcheck target must be dual-rail")
            if not register.ancilla_qubits:
                raise RegisterError("qndcheck needs an ancilla qubit")
            anc = register.ancilla_qubits[0]
            flag, state = qnd_parity_check(
                state, anc, *entry.rails, rng_seed=seed + 17 * i)
            if flag == "odd":
                # Pump the readout qubit back to ground for reuse.
                state = apply_pulse(state, carrier(np.pi, 0.0, anc))
            parity_flags.append({"step": i, "target": rec.operands[0],
                                 "parity": flag})
            continue
        gate = gate_from_record(rec)
        try:
            sub = compile_gate(register, gate, pool)
        except (CompileError, RegisterError) as exc:
            raise CompileError(f"gate {i} ({rec.name}): {exc}") from exc
        state = run_program(state, sub,
                            register=register if not injected else None)
        ledger += sub.global_phase
        if not injected:
            check_sentinel(state)

    report_state = extract_logical_state(state, register)
    if not injected and report_state.leakage > LEAKAGE_GUARD_TOL:
        raise HealthError(
            f"error-free run leaked {report_state.leakage:.3e} outside the "
            "codeword span")
    report = {
        "schema": SCHEMA,
        "command": "run",
        "seed": seed,
        "shots": shots,
        "leakage": report_state.leakage,
        "global_phase": float(np.mod(ledger, 2 * np.pi)),
    }
    if parity_flags:
        report["parity_checks"] = parity_flags
    if register.logical_dim <= 64:
        report["logical_amplitudes"] = [
            [float(a.real), float(a.imag)]
            for a in report_state.logical_amplitudes
        ]
        report["logical_phase"] = report_state.global_phase
    if shots > 0:
        counts = sample_counts(state, register, list(doc.logical_ids()),
                               shots, seed)
        report["histogram"] = dict(sorted(counts.items()))
    return report, EXIT_OK


def cmd_verify(doc: CircuitDocument | None, args) -> tuple[dict, int]:
    tol = float(args.tol) if args.tol is not None else 1e-9
    checks = []
    if args.builtin or doc is None:
        for result in run_builtin_suite():
            checks.append(result.to_dict())
    if doc is not None:
        layout, register = build_system(doc, args.cutoff)
        if doc.options.get("tolerance") and args.tol is None:
            tol = float(doc.options["tolerance"])
        ids = list(doc.logical_ids())
        pool = _AncillaPool(register)
        for i, rec in enumerate(doc.program):
            if rec.name in ("loss", "gain", "qndcheck"):
                continue
            gate = gate_from_record(rec)
            sub = compile_gate(register, gate, pool)
            got = program_unitary(sub, layout, restrict=register)
            positions = [ids.index(op) for op in rec.operands]
            small = ideal_logical_gate(rec.name, rec.params,
                                       len(rec.operands))
            ideal = embed_logical_matrix(small, positions, register.n_logical)
            rep = equivalent_up_to_phase(got.matrix, ideal, tol,
                                         got.leakage_max)
            checks.append({
                "name": f"gate-{i}:{rec.render()}",
                "equivalent": rep.equivalent,
                "max_entry_error": rep.max_entry_error,
                "inferred_phase": rep.inferred_phase,
                "leakage_max": rep.leakage_max,
            })
    passed = all(c["equivalent"] for c in checks)
    report = {
        "schema": SCHEMA,
        "command": "verify",
        "tolerance": tol,
        "passed": passed,
        "checks": checks,
    }
    return report, EXIT_OK if passed else EXIT_VERIFY_FAILED


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drqsim",
        description="Simulate and compile dual-rail phonon qubit circuits.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--cutoff", type=int, default=None,
                       help="override the per-mode Fock cutoff")
        p.add_argument("--report", default=None,
                       help="also write the JSON report to this path")

    p_compile = sub.add_parser("compile", help="lower a circuit to pulses")
    p_compile.add_argument("document")
    common(p_compile)

    p_run = sub.add_parser("run", help="simulate a circuit document")
    p_run.add_argument("document")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--shots", type=int, default=None)
    p_run.add_argument("--allow-midcircuit", action="store_true",
                       help="allow qndcheck before the end of the program")
    common(p_run)

    p_verify = sub.add_parser("verify", help="check gate identities")
    p_verify.add_argument("document", nargs="?", default=None)
    p_verify.add_argument("--builtin", action="store_true",
                          help="run the built-in identity suite")
    p_verify.add_argument("--tol", type=float, default=None)
    common(p_verify)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        doc = None
        if getattr(args, "document", None):
            with open(args.document, encoding="utf-8") as fh:
                doc = parse_circuit(fh.read())
        if args.command == "verify" and doc is None and not args.builtin:
            parser.error("verify needs a document or --builtin")
        if args.command == "compile":
            report, code = cmd_compile(doc, args)
        elif args.command == "run":
            report, code = cmd_run(doc, args)
        else:
            report, code = cmd_verify(doc, args)
    except (DocumentError, LayoutError, RegisterError, CompileError,
            PulseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (HealthError, StateError) as exc:
        print(f"numeric health failure: {exc}", file=sys.stderr)
        return EXIT_HEALTH
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
