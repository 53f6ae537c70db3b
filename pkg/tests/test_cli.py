import csv
import io
import json
import math

import pytest

from isop import bounds as B
from isop.cli import dumps, main, to_csv


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_stats_disc(capsys):
    code, out, _ = run(capsys, "stats", "--domain", "disc", "--basepoint", "0,0")
    assert code == 0
    doc = json.loads(out)
    st = doc["result"]["stats"]
    assert abs(st["E"] - 2 / 3) <= 3 * st["se_E"]
    assert doc["config"]["seed"] == 0 and doc["config"]["samples"] == 100_000


def test_bound_disc_two_reports(capsys):
    code, out, _ = run(capsys, "bound", "--domain", "disc.json", "--basepoint", "0,0",
                       "--bounds", "bobkov_mc,kls_theta", "--samples", "100000", "--seed", "0")
    assert code == 0
    reps = [B.BoundReport.from_dict(r) for r in json.loads(out)["result"]["reports"]]
    assert [r.name for r in reps] == ["bobkov_mc", "kls_theta"]
    for r in reps:
        assert r.valid and r.value <= 4 / math.pi
        assert B.recompute(r) == pytest.approx(r.value, rel=1e-15)


def test_oracle_box(capsys):
    code, out, _ = run(capsys, "oracle", "--domain", "box_1x10", "--families", "lines")
    assert code == 0
    assert json.loads(out)["result"]["cut_search"]["best_value"] == pytest.approx(0.2, abs=1e-6)


def test_theta_point_and_mean(capsys):
    code, out, _ = run(capsys, "theta", "--domain", "disc", "--basepoint", "0.6,0")
    assert code == 0 and json.loads(out)["result"]["theta"]["value"] == pytest.approx(1.6, abs=1e-9)
    code, out, _ = run(capsys, "theta", "--domain", "disc", "--theta-samples", "500")
    assert code == 0 and "theta_mean" in json.loads(out)["result"]


def test_candidates_and_all_bounds(capsys):
    code, out, _ = run(capsys, "bound", "--domain", "cap_0.6", "--candidates", "1,0,0;0.99500416527802582,0.099833416646828155,0",
                       "--bounds", "kls_E,loose_kappa,bobkov_analytic,concentration", "--r0", "1.0",
                       "--samples", "5000")
    assert code == 0
    doc = json.loads(out)
    names = [r["name"] for r in doc["result"]["reports"]]
    assert names == ["kls_E", "loose_kappa", "loose_kappa", "bobkov_analytic", "concentration"]
    assert any("lambda0 estimated" in w for w in doc["warnings"])


def test_csv_matches_json(capsys):
    args = ["bound", "--domain", "square", "--basepoint", "0.5,0.5", "--bounds", "bobkov_analytic,kls_E",
            "--samples", "2000"]
    _, js, _ = run(capsys, *args)
    _, cs, _ = run(capsys, *args, "--format", "csv")
    rows = dict(csv.reader(io.StringIO(cs)))
    doc = json.loads(js)
    for i, rep in enumerate(doc["result"]["reports"]):
        assert float(rows[f"result.reports[{i}].value"]) == rep["value"]
        assert float(rows[f"result.reports[{i}].std_error"]) == rep["std_error"]


def test_output_file_and_repeatability(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["stats", "--domain", "lens", "--basepoint", "0,0", "--samples", "3000", "--output", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_input_errors(tmp_path, capsys):
    code, _, err = run(capsys, "stats", "--domain", "no_such_domain")
    assert code == 2 and "not found" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"space": {"kind": "euclidean", "dim": 2},
                               "shape": {"kind": "ball", "center": [0, 0], "radius": -1}}))
    code, _, err = run(capsys, "stats", "--domain", str(bad))
    assert code == 2 and "$.shape" in err
    code, _, err = run(capsys, "bound", "--domain", "disc", "--bounds", "nonsense")
    assert code == 2
    code, _, err = run(capsys, "oracle", "--domain", "cap_0.3", "--families", "lines")
    assert code == 2
    with pytest.raises(SystemExit) as exc:
        main(["stats", "--domain", "disc", "--samples", "10"])
    assert exc.value.code == 2


def test_invalid_bound_is_report_not_crash(capsys):
    code, out, _ = run(capsys, "bound", "--domain", "cap_0.6", "--basepoint", "1,0,0", "--bounds", "bobkov_mc",
                       "--kappa", "9", "--samples", "2000")
    assert code == 0
    rep = json.loads(out)["result"]["reports"][0]
    assert rep["valid"] is False and rep["value"] == 0


def test_dumps_seventeen_digits():
    text = dumps({"x": 0.1, "y": [1.0 / 3.0], "z": math.inf})
    assert '"x": 0.10000000000000001' in text
    assert json.loads(text)["y"][0] == 1.0 / 3.0
    assert "Infinity" in text
    assert "key,value" in to_csv({"x": 0.1})


def test_validate_subset(capsys):
    code, out, err = run(capsys, "validate", "--only", "1,8")
    assert code == 0
    assert json.loads(out)["result"]["passed"] is True
    assert "[PASS] 1." in err and "[PASS] 8." in err
