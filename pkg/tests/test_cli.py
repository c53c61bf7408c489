import json
import subprocess
import sys

import numpy as np
import pytest

from hofa import ProductSpace
from hofa.cli import main
from hofa.freiman import PartialMap
from hofa.harmonic import FunctionTable, conv
from hofa.multiaffine import MultilinearForm
from hofa.polynomial import MonomialPoly, poly_phase
from hofa.rng import SplitMix64

S22 = '{"p": 2, "dims": [2, 2]}'


def run(tmp_path, *argv, out="out.json"):
    path = tmp_path / out
    code = main([*argv, "--out", str(path)])
    return code, (json.loads(path.read_text()) if path.exists() else None)


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def dot_map(n):
    return MultilinearForm(ProductSpace(2, (n, n)), frozenset({1, 2}), np.eye(n, dtype=np.int64)).as_map().to_json()


# --------------------------------------------------------------------------- harmonic


def test_uknorm_constant(tmp_path):
    one = write(tmp_path, "one.json", FunctionTable.constant(ProductSpace(2, (3,))).to_json())
    code, out = run(tmp_path, "uknorm", "--in", one, "--k", "3")
    assert code == 0 and out == {"uk": pytest.approx(1.0)}


def test_fourier_round_trip(tmp_path):
    assert main(["gen", "table", "--space", S22, "--seed", "4", "--out", str(tmp_path / "t.json")]) == 0
    assert main(["fourier", "--in", str(tmp_path / "t.json"), "--out", str(tmp_path / "f.json")]) == 0
    assert main(["fourier", "--inverse", "--in", str(tmp_path / "f.json"), "--out", str(tmp_path / "b.json")]) == 0
    a = json.loads((tmp_path / "t.json").read_text())["values"]
    b = json.loads((tmp_path / "b.json").read_text())["values"]
    assert np.max(np.abs(np.array(a) - np.array(b))) <= 1e-9


def test_conv_matches_library(tmp_path):
    main(["gen", "table", "--space", '{"p": 3, "dims": [2]}', "--seed", "1", "--out", str(tmp_path / "f.json")])
    main(["gen", "table", "--space", '{"p": 3, "dims": [2]}', "--seed", "2", "--out", str(tmp_path / "g.json")])
    code, out = run(tmp_path, "conv", "--in", str(tmp_path / "f.json"), "--in2", str(tmp_path / "g.json"))
    f = FunctionTable.from_json(json.loads((tmp_path / "f.json").read_text()))
    g = FunctionTable.from_json(json.loads((tmp_path / "g.json").read_text()))
    assert code == 0 and FunctionTable.from_json(out).allclose(conv(f, g))


def test_boxnorm_schema_and_budget_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, "bad.json", {"space": {"p": 2, "dims": [1]}, "values": [[1, 0]]})
    assert main(["boxnorm", "--in", bad]) == 2
    (tmp_path / "junk.json").write_text("{not json")
    assert main(["boxnorm", "--in", str(tmp_path / "junk.json")]) == 2
    assert main(["gen", "table", "--space", '{"p": 2, "dims": [30]}', "--seed", "1"]) == 3
    assert main(["--budget", "8", "gen", "table", "--space", '{"p": 2, "dims": [4]}', "--seed", "1"]) == 3


# --------------------------------------------------------------------------- multiaffine


def test_bias_of_zero_form(tmp_path):
    zero = MultilinearForm.zero(ProductSpace(2, (2, 2)), frozenset({1, 2})).as_map().to_json()
    code, out = run(tmp_path, "bias", "--in", write(tmp_path, "z.json", zero))
    assert code == 0 and out["metrics"]["bias"] == 1.0
    assert out["experiment"] == "bias" and len(out["config_hash"]) == 16


def test_arank_and_prank(tmp_path):
    x1y1 = write(tmp_path, "m.json", dot_map(1))
    code, out = run(tmp_path, "arank", "--in", x1y1)
    assert out["metrics"]["analytic_rank"] == pytest.approx(1.0)
    code, out = run(tmp_path, "prank", "--in", x1y1)
    assert code == 0
    assert out["metrics"] == {"rank": 1, "exceeds": False, "verified": True}
    assert len(out["witnesses"]) == 1


def test_prank_exceeds(tmp_path):
    code, out = run(tmp_path, "prank", "--in", write(tmp_path, "m.json", dot_map(3)), "--max-rank", "2")
    assert code == 0 and out["metrics"]["exceeds"]


def test_qr_dot_product(tmp_path):
    code, out = run(tmp_path, "qr", "--in", write(tmp_path, "m.json", dot_map(3)))
    assert code == 0
    assert out["metrics"]["delta"] == 0.5 and out["metrics"]["eta_min"] == 0.34375


# --------------------------------------------------------------------------- freiman


def _restriction(tmp_path, density="0.6"):
    path = str(tmp_path / "r.json")
    assert main(["gen", "restriction", "--space", S22, "--seed", "5", "--density", density, "--out", path]) == 0
    return path


def test_freiman_verify_and_inverse(tmp_path):
    r = _restriction(tmp_path)
    code, out = run(tmp_path, "freiman", "verify", "--in", r)
    assert code == 0 and out["metrics"] == {"ok": True}
    code, out = run(tmp_path, "freiman", "inverse-search", "--in", r)
    assert out["metrics"]["agreement"] == out["metrics"]["domain"]


def test_freiman_verify_failure_reports_witness(tmp_path):
    sq = PartialMap.full(ProductSpace(5, (1,)), [(x * x) % 5 for x in range(5)]).to_json()
    code, out = run(tmp_path, "freiman", "verify", "--whole", "--in", write(tmp_path, "sq.json", sq))
    assert code == 0 and out["metrics"]["ok"] is False and out["witnesses"] is not None


def test_freiman_extend_precondition_writes_witness(tmp_path):
    r = _restriction(tmp_path)
    code, out = run(tmp_path, "freiman", "extend", "--in", r)
    assert code == 4 and out is None
    wit = json.loads((tmp_path / "out.json.witness.json").read_text())
    assert "4/5" in wit["error"]


def test_freiman_extend_success(tmp_path):
    s = ProductSpace(2, (3,))
    vals = (s.coords @ np.array([1, 0, 1]) + 1) % 2
    pm = PartialMap.full(s, vals).restrict(np.arange(8) != 3)
    code, out = run(tmp_path, "freiman", "extend", "--in", write(tmp_path, "a.json", pm.to_json()))
    assert code == 0 and out["witnesses"]["matrix"] == [[1, 0, 1]] and out["witnesses"]["offset"] == [1]


def test_freiman_census(tmp_path):
    r = _restriction(tmp_path, "1.0")
    code, out = run(tmp_path, "freiman", "census", "--in", r, "--words", "2,1;2,1", "--lengths", "4",
                    "--per-lengths", "8", "--seed", "3")
    assert code == 0 and out["metrics"]["equal_fraction"] == 1.0


def test_freiman_census_needs_seed(tmp_path):
    code, _ = run(tmp_path, "freiman", "census", "--in", _restriction(tmp_path), "--words", "2,1")
    assert code == 2


def test_freiman_drc_singleton(tmp_path):
    s = ProductSpace(2, (1, 1))
    pm = PartialMap.from_entries(s, 1, {3: [1]}).to_json()
    code, out = run(tmp_path, "freiman", "drc", "--in", write(tmp_path, "s.json", pm), "--t", "1",
                    "--trials", "10000", "--seed", "1")
    m = out["metrics"]
    assert code == 0 and m["expected"] == 0.5 and abs(m["mean"] - 0.5) <= 3 * m["se"]


# --------------------------------------------------------------------------- polynomial


def test_poly_commands(tmp_path):
    x2 = write(tmp_path, "x2.json", MonomialPoly(5, 1, {(2,): 1}).to_json())
    code, out = run(tmp_path, "poly", "degree-test", "--in", x2, "--d", "2")
    assert code == 0 and out["metrics"]["ok"] is True
    code, out = run(tmp_path, "poly", "polarize", "--in", x2, "--k", "2")
    assert out["witnesses"]["sigma"] == [[2]]
    code, out = run(tmp_path, "poly", "approx-fraction", "--in", x2, "--d", "1")
    assert out["metrics"]["fraction"] == pytest.approx(9 / 25)
    code, out = run(tmp_path, "poly", "fit", "--in", x2, "--d", "2")
    assert out["metrics"]["agreement"] == 5


def test_poly_correlate(tmp_path):
    g = MonomialPoly.random(5, 1, 2, SplitMix64(2))
    f = write(tmp_path, "f.json", poly_phase(g, -1).to_json())
    code, out = run(tmp_path, "poly", "correlate", "--in", f, "--poly", write(tmp_path, "g.json", g.to_json()))
    assert code == 0 and out["metrics"]["correlation"] == pytest.approx(1.0)
    code, out = run(tmp_path, "poly", "correlate", "--in", f, "--best", "2")
    assert out["metrics"]["correlation"] == pytest.approx(1.0)


def test_poly_degree_too_large(tmp_path):
    x2 = write(tmp_path, "x2.json", MonomialPoly(5, 1, {(2,): 1}).to_json())
    assert run(tmp_path, "poly", "degree-test", "--in", x2, "--d", "5")[0] == 2


# --------------------------------------------------------------------------- generators, oracle, csv


def test_gen_deterministic(tmp_path):
    for name in ("a.json", "b.json"):
        assert main(["gen", "multiaffine", "--space", S22, "--h", "2", "--seed", "9", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_gen_corruption_zero_is_identity(tmp_path):
    r = _restriction(tmp_path)
    assert main(["gen", "corruption", "--in", r, "--fraction", "0", "--seed", "1", "--out", str(tmp_path / "c.json")]) == 0
    assert json.loads((tmp_path / "c.json").read_text()) == json.loads(open(r).read())


def test_gen_bounded_table(tmp_path):
    for kind in ("disc", "phase", "sign"):
        main(["gen", "table", "--space", S22, "--table-kind", kind, "--seed", "2", "--out", str(tmp_path / "t.json")])
        t = FunctionTable.from_json(json.loads((tmp_path / "t.json").read_text()))
        assert t.bounded and np.abs(t.values).max() <= 1 + 1e-12


def test_gen_requires_seed(tmp_path):
    assert main(["gen", "table", "--space", S22]) == 2


def test_oracle_write_and_check(tmp_path, capsys):
    out = tmp_path / "g"
    assert main(["oracle", "--suite", "harmonic-micro", "--out-dir", str(out)]) == 0
    data = json.loads((out / "harmonic-micro.json").read_text())
    assert len(data["entries"]) == 20
    assert main(["oracle", "--suite", "harmonic-micro", "--out-dir", str(out), "--check"]) == 0
    key = sorted(data["entries"])[0]
    data["entries"][key]["values"]["u2_power"] += 1
    (out / "harmonic-micro.json").write_text(json.dumps(data))
    capsys.readouterr()
    assert main(["oracle", "--suite", "harmonic-micro", "--out-dir", str(out), "--check"]) == 5
    err = capsys.readouterr().err
    assert f"/entries/{key}/values/u2_power" in err


def test_csv_export(tmp_path):
    m = write(tmp_path, "m.json", dot_map(1))
    main(["bias", "--in", m, "--out", str(tmp_path / "a.json")])
    main(["arank", "--in", m, "--out", str(tmp_path / "b.json")])
    assert main(["csv", str(tmp_path / "a.json"), str(tmp_path / "b.json"), "--out", str(tmp_path / "s.csv")]) == 0
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0].startswith("experiment,config_hash,") and len(lines) == 3


def test_timing_flag_adds_wall_time(tmp_path):
    m = write(tmp_path, "m.json", dot_map(1))
    main(["--timing", "bias", "--in", m, "--out", str(tmp_path / "a.json")])
    assert "wall_time" in json.loads((tmp_path / "a.json").read_text())


def test_console_script_and_module_entry(tmp_path):
    m = write(tmp_path, "m.json", dot_map(1))
    a = subprocess.run(["hofa", "bias", "--in", m], capture_output=True, text=True, check=True).stdout
    b = subprocess.run([sys.executable, "-m", "hofa", "bias", "--in", m], capture_output=True, text=True, check=True).stdout
    assert a == b and json.loads(a)["metrics"]["bias"] == 0.5
