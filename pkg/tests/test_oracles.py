"""Main-path results against the frozen oracle goldens in tests/goldens."""

import json
from pathlib import Path

import numpy as np
import pytest

from hofa import ProductSpace
from hofa.freiman import PartialMap, best_affine_agreement, count_d_additive_quadruples, multiaffine_inverse_search
from hofa.generators import random_table
from hofa.harmonic import fourier, fourier_l4, mixed_conv, uk_norm_power
from hofa.multiaffine import MultiAffineMap, MultilinearForm, check_quasirandom
from hofa.oracles import SUITES, compare_goldens, run_suite
from hofa.records import dump

GOLDENS = Path(__file__).parent / "goldens"
TOL = 1e-9


def load(name):
    return json.loads((GOLDENS / f"{name}.json").read_text())["entries"]


def test_every_suite_has_a_golden():
    assert sorted(p.stem for p in GOLDENS.glob("*.json")) == sorted(SUITES)


@pytest.mark.parametrize("name", sorted(SUITES))
def test_goldens_regenerate_byte_identical(name):
    assert dump(run_suite(name, 0), None) == (GOLDENS / f"{name}.json").read_text()


def test_harmonic_micro_against_main_path():
    entries = load("harmonic-micro")
    assert len(entries) == 20
    for e in entries.values():
        cfg, v = e["config"], e["values"]
        f = random_table(ProductSpace.from_json(cfg["space"]), cfg["seed"], cfg["kind"])
        assert uk_norm_power(f, 2) == pytest.approx(v["u2_power"], abs=TOL)
        assert fourier_l4(f) == pytest.approx(v["u2_power"], abs=TOL)
        assert np.sum(np.abs(fourier(f).coefficients) ** 2) == pytest.approx(v["mean_sq"], abs=TOL)


def test_config_formula_against_recursion():
    s = ProductSpace(2, (1, 1))
    for e in load("config-formula").values():
        f = random_table(s, e["config"]["seed"])
        rec = mixed_conv(f, e["config"]["word"]).values
        want = np.array([complex(re, im) for re, im in e["values"]["values"]])
        assert np.allclose(rec, want, atol=TOL)


def test_quadruples_against_main_path():
    for e in load("quadruples").values():
        s = ProductSpace.from_json(e["config"]["space"])
        v = e["values"]
        mask = np.array(v["mask"], bool)
        sigma = PartialMap(s, 1, np.ones(s.total_size, bool), np.array(v["values"]))
        assert count_d_additive_quadruples(s, mask, e["config"]["d"], sigma) == (v["total"], v["respected"])


def test_quasirandom_against_main_path():
    for e in load("quasirandom").values():
        n = e["config"]["n"]
        beta = MultilinearForm(ProductSpace(2, (n, n)), frozenset({1, 2}), np.eye(n, dtype=np.int64)).as_map()
        rep = check_quasirandom(beta, (0,))
        for key in ("delta", "eta_min", "pair_failure", "slice_failure"):
            assert getattr(rep, key) == e["values"][key]


def test_affine_scan_against_main_path():
    s = ProductSpace(2, (3,))
    for e in load("affine-scan").values():
        v = e["values"]
        pm = PartialMap.from_entries(s, 1, {j: [val] for j, val in zip(v["domain"], v["values"])})
        ext, count = best_affine_agreement(pm)
        assert count == v["agreement"]
        assert [int(ext.map.offset[0])] + ext.map.matrix[0].tolist() == v["coeffs"]


def test_multiaffine_scan_against_main_path():
    s = ProductSpace(2, (1, 1))
    for e in load("multiaffine-scan").values():
        v = e["values"]
        pm = PartialMap.from_entries(s, 1, {j: [val] for j, val in zip(v["domain"], v["values"])})
        assert multiaffine_inverse_search(pm)[1] == v["agreement"]


def test_coset_intersection_goldens():
    for e in load("coset-intersection").values():
        v = e["values"]
        assert v["expected"] == e["config"]["delta"] * 2 ** e["config"]["r"]
        assert abs(v["mean"] - v["expected"]) <= 3 * v["se"]


def test_compare_goldens_reports_first_divergence():
    a = {"x": {"b": [1.0, 2.0], "a": 1}}
    b = {"x": {"b": [1.0, 2.5], "a": 1}}
    assert compare_goldens(a, b) == ("/x/b/1", 2.0, 2.5)
    assert compare_goldens(a, a) is None
    assert compare_goldens(a, {"x": {"b": [1.0, 2.0 + 1e-12], "a": 1}}) is None
    assert compare_goldens({"k": 1}, {"j": 1})[0] == "/j"


def test_unknown_suite():
    from hofa import SchemaError

    with pytest.raises(SchemaError):
        run_suite("nope")
