import json

import pytest

from winpoint.cli import main
from winpoint.conditioning import kappa
from winpoint.discovery import DtypeConstraint


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, (json.loads(out) if out.strip() else None), err


def test_discover_symmetric(capsys, tmp_path):
    code, doc, _ = run_json(capsys, "discover", "--tile", "4,3", "--mode", "symmetric",
                            "--out", str(tmp_path / "r.json"))
    assert code == 0
    assert doc["points"] == ["0", "5/6", "-5/6", "7/6", "-7/6"]
    assert abs(doc["kappa2_v"] - 14.5) / 14.5 < 0.005
    saved = json.loads((tmp_path / "r.json").read_text())
    assert saved["manifest"]["command"] == "discover" and saved["manifest"]["seed"] == 0
    assert saved["manifest"]["payload_sha256"] == doc["manifest"]["payload_sha256"]


def test_discover_dtype_f63(capsys):
    code, doc, _ = run_json(capsys, "discover", "--tile", "6,3", "--mode", "dtype", "--dtype", "float16")
    assert code == 0 and doc["kappa2_v"] <= 183
    c = DtypeConstraint("float16")
    from fractions import Fraction
    assert all(c.contains(Fraction(p)) for p in doc["points"])


@pytest.mark.parametrize("tile", ["0,3", "4", "a,b"])
def test_discover_bad_tile(capsys, tile):
    assert run(capsys, "discover", "--tile", tile)[0] == 2


def test_verify(capsys, tmp_path):
    assert run(capsys, "verify", "disc-F83")[0] == 0
    dup = tmp_path / "dup.json"
    dup.write_text(json.dumps({"tile": {"m": 2, "r": 3}, "points": ["0", "1", "1"]}))
    code, _, err = run(capsys, "verify", str(dup))
    assert code == 1 and "duplicate" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert run(capsys, "verify", str(bad))[0] == 2
    assert run(capsys, "verify", "no-such-entry")[0] == 2


def test_analyze(capsys):
    code, doc, _ = run_json(capsys, "analyze", "std-F63")
    assert code == 0
    for key, ref in (("kappa_v", 2075), ("kappa_at", 406), ("kappa_bt", 430), ("kappa_g", 26.2)):
        assert abs(doc[key]["two"] - ref) / ref < 0.02
    code, doc, _ = run_json(capsys, "analyze", "disc-F63", "--2d")
    assert abs(doc["two_d"]["kappa_v_2d"] - 5873) / 5873 < 0.03
    assert abs(doc["two_d"]["kron_ratio_at"] - 1) < 1e-6
    code, doc, _ = run_json(capsys, "analyze", "disc-F43", "--legendre")
    assert abs(doc["kappa_legendre"] - 6.2) / 6.2 < 0.03
    assert run(capsys, "analyze", "disc-F43", "--norms", "two,max")[0] == 2


def test_analyze_text_output(capsys):
    code, out, _ = run(capsys, "analyze", "disc-F43")
    assert code == 0 and "kappa_v" in out and "{0, 5/6" in out


def test_simulate(capsys):
    code, doc, _ = run_json(capsys, "simulate", "std-F63", "--precision", "int8", "--samples", "100", "--seed", "7")
    assert code == 0 and doc["mean_rel_l2"] > 1
    assert run(capsys, "simulate", "disc-F43", "--precision", "fp16", "--granularity", "per-channel")[0] == 2
    assert run(capsys, "simulate", "disc-F43", "--samples", "0")[0] == 2


def test_simulate_csv(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, text, _ = run(capsys, "simulate", "disc-F43", "--samples", "5", "--format", "csv", "--out", str(out))
    assert code == 0
    assert text.splitlines()[0].startswith("tile,points,spec")
    assert out.read_text() == text


def test_compare(capsys):
    code, doc, _ = run_json(capsys, "compare", "--tile", "4,3")
    rows = {r["method"].split()[0]: r for r in doc["rows"]}
    assert abs(rows["standard"]["kappa2_v"] - 42.5) / 42.5 < 0.01
    assert abs(rows["chebyshev-opt"]["kappa2_v"] - 15.9) / 15.9 < 0.03
    assert abs(rows["candidate"]["kappa2_v"] - 14.5) / 14.5 < 0.01
    code, doc, _ = run_json(capsys, "compare", "--tile", "8,3", "--baselines", "standard")
    assert abs(doc["rows"][0]["improvement"] - 415) / 415 < 0.02
    code, doc, _ = run_json(capsys, "compare", "--tile", "2,3", "--baselines", "standard")
    assert doc["rows"][0]["improvement"] == pytest.approx(1.0)


def test_export_round_trip(capsys, tmp_path):
    path = tmp_path / "f43.json"
    assert run(capsys, "export", "disc-F43", "--out", str(path))[0] == 0
    doc = json.loads(path.read_text())
    assert doc["points"] == ["0", "5/6", "-5/6", "7/6", "-7/6"]
    import numpy as np
    _, rep, _ = run_json(capsys, "analyze", "disc-F43")
    assert abs(kappa(np.array(doc["AT_f64"])) - rep["kappa_at"]["two"]) <= 1e-9 * rep["kappa_at"]["two"]
    _, again, _ = run_json(capsys, "analyze", str(path))
    rep.pop("manifest"), again.pop("manifest")
    assert again == rep
    assert run(capsys, "verify", str(path))[0] == 0


def test_export_refuses_tampered_file(capsys, tmp_path):
    path = tmp_path / "f43.json"
    run(capsys, "export", "disc-F43", "--out", str(path))
    doc = json.loads(path.read_text())
    doc["AT"][0][1] = "2"
    path.write_text(json.dumps(doc))
    assert run(capsys, "export", str(path))[0] == 1
    assert run(capsys, "verify", str(path))[0] == 1


def test_repro(capsys):
    code, doc, _ = run_json(capsys, "repro", "--tile", "2,3", "--seeds", "0,1")
    assert code == 0 and doc["cv"] == 0 and doc["identical_configs"]
    assert run(capsys, "repro", "--tile", "4,3", "--seeds", "0")[0] == 2


def test_cache_flag(capsys, tmp_path):
    args = ("discover", "--tile", "4,3", "--mode", "symmetric", "--cache-dir", str(tmp_path))
    run_json(capsys, *args)
    _, doc, _ = run_json(capsys, *args)
    assert "cache-hit" in doc["provenance"]


def test_usage_errors(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
