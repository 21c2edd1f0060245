import subprocess
import sys

import pytest

from conftest import ROOT, write_manifest
from walkersym.cli import format_record, main, parse_record


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_tensors_text(capsys, manifest_dir):
    code, out, _ = run(capsys, "tensors", manifest_dir / "n1.ini")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "f = -2*exp(x)"
    assert "rho_yy = exp(x)" in lines and "tau = 0" in lines
    assert lines[-1] == "conformally_flat: no"


def test_tensors_cw_is_conformally_flat(capsys, manifest_dir):
    _, out, _ = run(capsys, "tensors", manifest_dir / "cw.ini")
    assert "conformally_flat: yes" in out.splitlines()


def test_flat_manifold_is_an_input_error(capsys, tmp_path):
    code, out, err = run(capsys, "tensors", write_manifest(tmp_path, "[manifold]\nf = x*y\n"))
    assert code == 2 and out == ""
    assert "flat manifold rejected" in err


@pytest.mark.parametrize("field,line", [
    ("K", "killing: holds"),
    ("affine", "affine: holds"),
    ("affine", "proper_affine: yes"),
    ("curvature", "proper_curvature_collineation: yes"),
    ("ricci", "proper_ricci_collineation: yes"),
])
def test_classify_nb(capsys, manifest_dir, field, line):
    code, out, _ = run(capsys, "classify", manifest_dir / "n1.ini", "--field", field)
    assert code == 0 and line in out.splitlines()


def test_classify_failure_has_witness(capsys, manifest_dir):
    code, out, _ = run(capsys, "classify", manifest_dir / "cw.ini", "--field", "homothety")
    assert code == 0
    assert "homothetic: holds (eta = 2)" in out.splitlines()
    code, out, _ = run(capsys, "classify", manifest_dir / "cw.ini", "--field", "dy_scaling")
    (line,) = [l for l in out.splitlines() if l.startswith("ricci_collineation:")]
    assert line.startswith("ricci_collineation: fails at Lrho_yy = 2, witness (t,x,y)=(")


def test_records_agree_with_text(capsys, manifest_dir):
    path = manifest_dir / "cw.ini"
    _, text, _ = run(capsys, "classify", path, "--field", "dy_scaling")
    _, recs, _ = run(capsys, "classify", path, "--field", "dy_scaling", "--format", "records")
    parsed = [parse_record(l) for l in recs.splitlines()]
    verdicts = {r["level"]: r for r in parsed if r["kind"] == "verdict"}
    for line in text.splitlines():
        level, sep, rest = line.partition(": ")
        if level in verdicts:
            assert rest.split()[0] == verdicts[level]["status"]
            if "witness_value" in verdicts[level]:
                assert f"value={verdicts[level]['witness_value']}" in line


def test_record_quoting_round_trip():
    rec = {"kind": "x", "text": "a b 'c'", "empty": "", "eq": "k=v"}
    assert parse_record(format_record(rec)) == rec


def test_undecided_exits_3(capsys, tmp_path):
    path = write_manifest(tmp_path, "[manifold]\nf = -x^2\n[fields]\nu = x/1000000000000 ; 0 ; 0\n")
    code, out, _ = run(capsys, "classify", path, "--field", "u")
    assert code == 3 and "killing: unknown" in out
    # a looser probe tolerance turns the tiny residual into a decision
    code, out, _ = run(capsys, "classify", path, "--field", "u", "--tol-override", "1e-15")
    assert code == 0 and "killing: fails" in out


def test_unknown_field_is_input_error(capsys, manifest_dir):
    code, _, err = run(capsys, "classify", manifest_dir / "cw.ini", "--field", "nope")
    assert code == 2 and "no field named 'nope'" in err


def test_bad_manifest_key(capsys, tmp_path):
    code, _, err = run(capsys, "tensors", write_manifest(tmp_path, "[manifold]\nf = x^2\nfoo = 1\n"))
    assert code == 2 and "unknown key" in err


def test_bad_tolerance(capsys, manifest_dir):
    with pytest.raises(SystemExit) as exc:
        main(["tensors", str(manifest_dir / "cw.ini"), "--tol-override", "-1"])
    assert exc.value.code == 2


def test_oracle_check(capsys, manifest_dir):
    code, out, _ = run(capsys, "oracle-check", manifest_dir / "general.ini", "--points", "5")
    assert code == 0
    assert out.splitlines()[-1] == "summary: 10/10 comparisons passed"
    code, out, _ = run(capsys, "oracle-check", manifest_dir / "general.ini", "--points", "5",
                       "--tol-override", "1e-14")
    assert code == 4 and "FAIL Gamma" in out


def test_oracle_check_records(capsys, manifest_dir):
    code, out, _ = run(capsys, "oracle-check", manifest_dir / "pc.ini", "--points", "4", "--format", "records")
    recs = [parse_record(l) for l in out.splitlines()]
    assert code == 0 and recs[-1] == {"kind": "summary", "result": "pass"}
    comps = [r for r in recs if r["kind"] == "comparison"]
    assert {"subject", "error", "error_half_h", "ratio", "point", "verdict"} <= set(comps[0])


def test_verify_paper_family_and_self_test(capsys):
    code, out, _ = run(capsys, "verify-paper", "--family", "CW")
    assert code == 0 and out.splitlines()[-1].startswith("summary: ")
    code, out, _ = run(capsys, "verify-paper", "--family", "CW", "--self-test")
    assert code == 4
    (fail,) = [l for l in out.splitlines() if l.startswith("FAIL")]
    assert "witness (t,x,y)=(" in fail


def test_module_entry_point_is_byte_deterministic(manifest_dir):
    cmd = [sys.executable, "-m", "walkersym", "classify", str(manifest_dir / "n1.ini"), "--field", "ricci",
           "--format", "records", "--seed", "3"]
    runs = [subprocess.run(cmd, capture_output=True, cwd=ROOT, check=True).stdout for _ in range(2)]
    assert runs[0] == runs[1] and runs[0]
