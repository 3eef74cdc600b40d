import csv
import json
import math

import pytest

from perbif import cli
from tests.conftest import e00_weight


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_eigs(tmp_path):
    assert cli.main(["eigs", "--k", "4", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "eigs.csv")
    assert [float(r["sigma"]) for r in rows] == [0, 4, 16, 36, 64]
    assert [int(r["kernel_dim"]) for r in rows] == [1, 2, 2, 2, 2]


def test_autonomous_alias(tmp_path):
    assert cli.main(["autoper", "--config", "autonomous.json", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "autonomous.csv")
    k1 = [r for r in rows if r["k"] == "1"]
    # an orbit exists exactly when lambda < 4 k^2; missing ones have empty fields
    for r in rows:
        assert (r["e"] != "") == (float(r["lambda"]) < 4 * int(r["k"]) ** 2)
    assert all(float(r["tau_residual"]) < 1e-10 for r in rows if r["e"])
    assert len(k1) == 9


def test_lscoeff_payload(tmp_path):
    assert cli.main(["lscoeff", "--config", "e00.json", "--k", "1", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "lscoeff.json").read_text())
    text = json.dumps(data)
    assert "FourBranch_H" in text
    assert str(3 / (8 * math.pi))[:12] in text


def test_local_branches(tmp_path):
    assert cli.main(["local-branches", "--config", "bumps_even.json", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "local_branches.csv")
    assert len({r.get("root") or r.get("index") for r in rows}) == 8


def test_continue_report_and_manifest(tmp_path):
    code = cli.main(["continue", "--config", "e00.json", "--k", "1", "--lambda-min", "2.5",
                     "--out", str(tmp_path)])
    assert code == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["violations"] == []
    assert [b["termination"] for b in rep["branches"]] == ["ReachedLambdaMin"] * 4
    man = json.loads((tmp_path / "branches_manifest.json").read_text())
    assert len(man) == 4 and {m["label"] for m in man} == {"k1_r1", "k1_r2", "k1_r3", "k1_r4"}
    rows = _rows(tmp_path / "branches.csv")
    assert list(rows[0]) == list(cli.BRANCH_COLUMNS)
    assert all(r["zeros"] == "2" for r in rows)


def test_output_is_deterministic(tmp_path):
    args = ["continue", "--config", "e00.json", "--k", "1", "--lambda-min", "3.0"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("branches.csv", "branches_manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj, indent=2) if not isinstance(obj, str) else obj)
    return p


def test_config_errors_have_line_numbers(tmp_path):
    p = _write(tmp_path, '{\n  "weight": {"period": 1.0,\n  "segments": [}\n}')
    with pytest.raises(cli.ConfigError, match=r"cfg.json:3"):
        cli.load_config(p)
    p = _write(tmp_path, {"weight": e00_weight().to_dict(), "bogus": 1})
    with pytest.raises(cli.ConfigError, match=r"unknown key 'bogus'") as exc:
        cli.load_config(p)
    assert ":" in str(exc.value).split("unknown")[0]


@pytest.mark.parametrize("extra,msg", [
    ({"continuation": {"dss": 1}}, "unknown continuation"),
    ({"k": [1], "lambda_min": 5.0}, "empty lambda window"),
    ({"k": [-1]}, "nonnegative"),
    ({"mode": "nope"}, "mode must be"),
])
def test_config_validation(tmp_path, extra, msg):
    p = _write(tmp_path, {"weight": e00_weight().to_dict(), **extra})
    with pytest.raises(cli.ConfigError, match=msg):
        cli.load_config(p)


def test_weight_file_reference(tmp_path):
    _write(tmp_path, e00_weight().to_dict(), "w.json")
    p = _write(tmp_path, {"weight_file": "w.json", "k": [1]})
    assert cli.load_config(p).weight == e00_weight()
    p = _write(tmp_path, {"weight_file": "missing.json"})
    with pytest.raises(cli.ConfigError, match="does not exist"):
        cli.load_config(p)


def test_exit_code_2_on_bad_input(tmp_path, capsys):
    assert cli.main(["eigs", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2
    zero = _write(tmp_path, {"weight": {"period": 1.0, "segments": [{"from": 0, "to": 1, "kind": "zero"}]}})
    assert cli.main(["continue", "--config", str(zero), "--out", str(tmp_path / "o")]) == 2
    assert "error:" in capsys.readouterr().err
    assert cli.main(["eigs", "--config", "e00.json", "--period", "2", "--out", str(tmp_path)]) == 2


def test_check_branch_flags_violations():
    from dataclasses import replace

    from perbif.continuation import Branch, BranchOrigin, Termination
    from perbif.orbit import OrbitPoint
    good = OrbitPoint(3.0, 1.0, 0.0, zeros=2, winding=1, residual=1e-12)
    b = Branch(BranchOrigin("eigen", 1, 1), (good, replace(good, zeros=4, lam=4.5, residual=1e-3)),
               Termination.MAX_STEPS, None, 1, 0.0)
    bad = cli.check_branch(b, math.pi)
    assert len(bad) == 3
