import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from interpnorm import cli

DESC = Path(cli.__file__).parent / "descriptors"


def run(*args, cwd=None):
    p = subprocess.run([sys.executable, "-m", "interpnorm", *args], capture_output=True, text=True, cwd=cwd)
    return p.returncode, p.stdout, p.stderr


def write(tmp, name, d):
    p = Path(tmp) / name
    p.write_text(json.dumps(d))
    return p


def test_norm_theta_sqrt2():
    code, out, _ = run("norm", "--space", "theta:0.5,b=const,E=Lq:2", "--kprofile", "min1t")
    assert code == 0 and float(out) == pytest.approx(math.sqrt(2), rel=1e-9)


def test_norm_grand_constant():
    code, out, _ = run("norm", "--space", "grand:p=2,alpha=1", "--function", "const:1")
    assert code == 0 and float(out) == pytest.approx(0.56377693540918529, rel=1e-6)


def test_norm_empty_file(tmp_path):
    f = tmp_path / "f.txt"
    f.write_text("")
    code, out, _ = run("norm", "--space", "small:p=2,alpha=1", "--function", f"file:{f}")
    assert code == 0 and float(out) == 0.0


def test_norm_json_space_and_breakdown():
    spec = json.dumps({"kind": "R", "theta": 0.5, "weights": {"b": "ell_pow(-1)"},
                       "spaces": {"E": "L2", "F": "L2"}})
    code, out, _ = run("norm", "--space", spec, "--kprofile", "min1t", "--breakdown")
    lines = out.strip().splitlines()
    assert code == 0 and float(lines[0]) == pytest.approx(math.sqrt(2), rel=1e-8)
    assert lines[1] == "t,inner" and len(lines) > 3


def test_norm_warns_on_trivial_space():
    code, _, err = run("norm", "--space", "theta:0,b=const,E=L1", "--kprofile", "min1t")
    assert "warning" in err


def test_norm_parse_error():
    assert run("norm", "--space", "bogus:1", "--kprofile", "min1t")[0] == 2
    assert run("norm", "--space", "theta:0.5", "--function", "nope")[0] == 2


def test_verify_limiting_estimate(tmp_path):
    code, out, _ = run("verify", str(DESC / "limiting_broken_L1.json"), "--output-dir", str(tmp_path))
    assert code == 0 and out.startswith("limiting_broken_L1: PASS")
    csv = (tmp_path / "limiting_broken_L1.csv").read_text().splitlines()
    assert csv[0] == "t,lhs,rhs,ratio" and len(csv) == 50
    assert (tmp_path / "limiting_broken_L1.svg").read_text().startswith("<svg")


def test_verify_hardy_ell_gate(tmp_path):
    code, out, _ = run("verify", str(DESC / "hardy_neg_ell.json"), "--output-dir", str(tmp_path))
    assert code == 4 and "HYPOTHESIS_VIOLATED" in out


def test_verify_malformed(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert run("verify", str(p))[0] == 2
    q = write(tmp_path, "nokind.json", {"id": "x"})
    assert run("verify", str(q))[0] == 2
    r = write(tmp_path, "fewpts.json", {"id": "x", "kind": "sv_scaling", "grid": {"min": 1, "max": 2, "points": 4},
                                        "params": {"b": "ell", "alpha": 1}})
    assert run("verify", str(r))[0] == 2
    m = write(tmp_path, "noparam.json", {"id": "x", "kind": "limiting_estimate", "params": {"E": "L1"}})
    assert run("verify", str(m))[0] == 2


def test_band_only_downgrades(tmp_path):
    d = json.loads((DESC / "limiting_broken_Linf.json").read_text())
    d["band"] = {"lo": 0.0, "hi": 0.5}
    code, out, _ = run("verify", str(write(tmp_path, "tight.json", d)), "--output-dir", str(tmp_path))
    assert code == 1 and "outside descriptor band" in out


def test_campaign_empty(tmp_path):
    out = tmp_path / "out"
    code, _, _ = run("campaign", str(tmp_path), "--output-dir", str(out))
    assert code == 0
    assert (out / "summary.csv").read_text() == "id,verdict,ratio_min,ratio_max\n"


def test_campaign_duplicate_ids(tmp_path):
    d = json.loads((DESC / "seq_hardy_half.json").read_text())
    write(tmp_path, "a.json", d)
    write(tmp_path, "b.json", d)
    assert run("campaign", str(tmp_path))[0] == 2


def test_campaign_small(tmp_path):
    for name in ("seq_hardy_half", "limiting_neg_const", "monotone_broken"):
        (tmp_path / f"{name}.json").write_text((DESC / f"{name}.json").read_text())
    out = tmp_path / "out"
    code, stdout, _ = run("campaign", str(tmp_path), "--output-dir", str(out), "--timing")
    assert code == 0
    rows = (out / "summary.csv").read_text().splitlines()
    assert rows[0] == "id,verdict,ratio_min,ratio_max,wall_time"
    assert [r.split(",")[0] for r in rows[1:]] == ["limiting_neg_const", "monotone_broken", "seq_hardy_half"]
    assert "hypothesis_violated" in rows[1]
    assert "seq_hardy_half.svg" in (out / "index.html").read_text()


def test_campaign_unexpected_negative_control(tmp_path):
    d = json.loads((DESC / "seq_hardy_half.json").read_text())
    d.update(negative_control=True, expect="fail")
    write(tmp_path, "neg.json", d)
    assert run("campaign", str(tmp_path))[0] == 1


def test_list_commands():
    code, out, _ = run("list-weights")
    assert code == 0 and "broken_log" in out
    code, out, _ = run("list-spaces")
    assert code == 0 and [l.split()[0] for l in out.splitlines()] == ["theta", "R", "L", "RL", "LR", "grand", "small"]


def test_golden_descriptors_valid():
    paths = sorted(DESC.glob("*.json"))
    assert len(paths) == 25
    ids = [cli.load_descriptor(p)["id"] for p in paths]
    assert len(set(ids)) == 25
    assert all(p.stem == i for p, i in zip(paths, ids))


def test_exit_code_mapping():
    from interpnorm.errors import CaseGateFailed, QuadratureNonconvergent, SpecParseError, Triviality
    assert cli.exit_code_for(SpecParseError("x")) == 2
    assert cli.exit_code_for(QuadratureNonconvergent("x")) == 3
    assert cli.exit_code_for(CaseGateFailed("x")) == 4
    assert cli.exit_code_for(Triviality("x")) == 4
