import json

import pytest

from drqsim.cli import main

BELL = """\
system:
  qubits: q0 q1
  modes: m0 m1
  cutoff: 4
registers:
  D dual_rail m0 m1
  Q internal q0
ancillas:
  qubits: q1
program:
  h D
  cnot D Q
options:
  seed: 7
  shots: 10000
"""


@pytest.fixture
def bell_doc(tmp_path):
    path = tmp_path / "bell.drq"
    path.write_text(BELL)
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_compile_reports_pulses(bell_doc, capsys):
    code, out, _ = run_cli(capsys, "compile", bell_doc)
    assert code == 0
    report = json.loads(out)
    assert report["command"] == "compile"
    assert report["preparation"]  # phonon loading pulses
    kinds = {p["kind"] for step in report["steps"] for p in step["pulses"]}
    assert kinds <= {"carrier", "rsb", "bs", "zbs", "qphase", "native_xx"}
    assert report["ancilla_manifest"]


def test_run_bell_histogram(bell_doc, capsys):
    code, out, _ = run_cli(capsys, "run", bell_doc)
    assert code == 0
    report = json.loads(out)
    hist = report["histogram"]
    assert sum(hist.values()) == 10000
    assert set(hist) <= {"00", "11"}
    assert report["leakage"] <= 1e-9


def test_run_deterministic_reports(bell_doc, capsys):
    _, out1, _ = run_cli(capsys, "run", bell_doc, "--seed", "21")
    _, out2, _ = run_cli(capsys, "run", bell_doc, "--seed", "21")
    assert out1 == out2
    _, out3, _ = run_cli(capsys, "run", bell_doc, "--seed", "22")
    assert out3 != out1


def test_run_report_file(bell_doc, tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out, _ = run_cli(capsys, "run", bell_doc, "--shots", "16",
                           "--report", str(target))
    assert code == 0
    assert json.loads(target.read_text()) == json.loads(out)


def test_verify_document(bell_doc, capsys):
    code, out, _ = run_cli(capsys, "verify", bell_doc)
    assert code == 0
    report = json.loads(out)
    assert report["passed"] is True
    assert len(report["checks"]) == 2


def test_verify_builtin_suite(capsys):
    code, out, _ = run_cli(capsys, "verify", "--builtin")
    assert code == 0
    report = json.loads(out)
    assert report["passed"] is True
    names = {c["name"] for c in report["checks"]}
    assert "cbs-decomposition" in names
    assert "tnp-phase" in names


def test_verify_failure_exit_code(bell_doc, capsys):
    # An absurd tolerance turns machine noise into a verification failure.
    code, out, _ = run_cli(capsys, "verify", bell_doc, "--tol", "1e-18")
    assert code == 1
    report = json.loads(out)
    assert report["passed"] is False


def test_parse_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.drq"
    path.write_text(BELL.replace("h D", "FOO D"))
    code, _, err = run_cli(capsys, "compile", str(path))
    assert code == 2
    assert "unknown-gate" in err


def test_cutoff_validation_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.drq"
    path.write_text(BELL.replace("cutoff: 4", "cutoff: 2"))
    code, _, err = run_cli(capsys, "run", str(path))
    assert code == 2


def test_health_failure_exit_code(tmp_path, capsys):
    # Loss on an empty mode annihilates the state: numeric-health failure.
    path = tmp_path / "sick.drq"
    path.write_text("""\
system:
  qubits: q0
  modes: m0 m1
  cutoff: 4
registers:
  D dual_rail m0 m1
ancillas:
  qubits: q0
program:
  loss m1
""")
    code, _, err = run_cli(capsys, "run", str(path))
    assert code == 3


def test_midcircuit_parity_refused(tmp_path, capsys):
    text = BELL.replace("program:\n  h D\n  cnot D Q",
                        "program:\n  qndcheck D\n  h D")
    path = tmp_path / "mid.drq"
    path.write_text(text)
    code, _, err = run_cli(capsys, "run", str(path))
    assert code == 2
    code, out, _ = run_cli(capsys, "run", str(path), "--allow-midcircuit",
                           "--shots", "0")
    assert code == 0
    report = json.loads(out)
    assert report["parity_checks"][0]["parity"] == "odd"


def test_final_parity_check_allowed(tmp_path, capsys):
    text = BELL.replace("program:\n  h D\n  cnot D Q",
                        "program:\n  h D\n  qndcheck D")
    path = tmp_path / "fin.drq"
    path.write_text(text)
    code, out, _ = run_cli(capsys, "run", str(path), "--shots", "0")
    assert code == 0
    report = json.loads(out)
    assert report["parity_checks"][0]["parity"] == "odd"


def test_run_with_injected_loss_reports_leakage(tmp_path, capsys):
    text = BELL.replace("program:\n  h D\n  cnot D Q",
                        "program:\n  h D\n  loss m0")
    path = tmp_path / "loss.drq"
    path.write_text(text)
    code, out, _ = run_cli(capsys, "run", str(path), "--shots", "0")
    assert code == 0
    report = json.loads(out)
    assert report["leakage"] > 0.9


def test_toffoli_example_runs(capsys):
    code, out, _ = run_cli(capsys, "run", "circuits/toffoli.drq")
    assert code == 0
    report = json.loads(out)
    assert report["histogram"] == {"111": 100}


def test_run_reports_bell_amplitudes(bell_doc, capsys):
    code, out, _ = run_cli(capsys, "run", bell_doc, "--shots", "0")
    assert code == 0
    report = json.loads(out)
    amps = [complex(re, im) for re, im in report["logical_amplitudes"]]
    probs = [abs(a) ** 2 for a in amps]
    assert probs[0] == pytest.approx(0.5, abs=1e-9)
    assert probs[3] == pytest.approx(0.5, abs=1e-9)
    assert probs[1] + probs[2] <= 1e-12


def test_mcswap_document_gate(tmp_path, capsys):
    path = tmp_path / "mcswap.drq"
    path.write_text("""\
system:
  qubits: c1 c2 a1 a2
  modes: b2 com m0 m1 m2 m3
  cutoff: 3
registers:
  C1 internal c1
  C2 internal_aux c2 b2
  T1 dual_rail m0 m1
  T2 dual_rail m2 m3
ancillas:
  qubits: a1 a2
  com_mode: com
program:
  x C1
  x C2
  x T1
  mcswap C1 C2 T1 T2
options:
  shots: 50
""")
    code, out, _ = run_cli(capsys, "run", str(path))
    assert code == 0
    report = json.loads(out)
    # Both controls high: T1 and T2 swap, so |1,1,1,0> -> |1,1,0,1>.
    assert report["histogram"] == {"1101": 50}
    code, out, _ = run_cli(capsys, "verify", str(path))
    assert code == 0
