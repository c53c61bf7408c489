import cmath
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hofa import BudgetError, Coset, FpVector, PrimeModulus, ProductSpace, SchemaError, character, dot, rank_fp
from hofa.linalg import inverse_mod_p, nullspace_mod_p, rref, solvability_criterion, solve_mod_p, solve_on_coset
from hofa.rng import SplitMix64, derive_seed
from hofa.space import check_budget


def test_character_values():
    assert character(2, 0) == pytest.approx(1 + 0j)
    assert character(2, 1) == pytest.approx(-1 + 0j)
    assert character(5, 2) == pytest.approx(cmath.exp(4j * cmath.pi / 5))
    assert character(5, 7) == pytest.approx(character(5, 2))


def test_character_rejects_composite():
    with pytest.raises(SchemaError):
        PrimeModulus(6)


def test_dot_examples():
    m2, m5 = PrimeModulus(2), PrimeModulus(5)
    assert dot(FpVector(m2, (0, 0)), FpVector(m2, (1, 1))) == 0
    assert dot(FpVector(m2, (1, 0)), FpVector(m2, (1, 1))) == 1
    assert dot(FpVector(m5, (2, 3)), FpVector(m5, (4, 1))) == 1


def test_dot_dimension_mismatch():
    with pytest.raises(SchemaError):
        dot((1, 2), (1, 2, 3), 5)


def test_index_round_trip():
    s = ProductSpace(2, (2, 1))
    assert s.total_size == 8
    for i in range(8):
        assert s.index_of(s.point_of(i)) == i
    assert s.index_of(((0, 0), (0,))) == 0


def test_point_of_mixed_radix():
    s = ProductSpace(3, (1, 1))
    assert s.point_of(5) == ((1,), (2,))


def test_first_factor_most_significant():
    s = ProductSpace(2, (1, 2))
    assert s.index_of(((1,), (0, 0))) == 4
    assert s.index_of(((0,), (0, 1))) == 1


def test_space_json_round_trip():
    s = ProductSpace(3, (2, 1, 1))
    assert ProductSpace.from_json(s.to_json()) == s


@pytest.mark.parametrize("bad", [{"p": 4, "dims": [1]}, {"p": 2}, {"p": 2, "dims": [-1]}])
def test_space_schema_errors(bad):
    with pytest.raises(SchemaError):
        ProductSpace.from_json(bad)


def test_budget_enforced(monkeypatch):
    with pytest.raises(BudgetError):
        check_budget(10, 5)
    monkeypatch.setenv("HOFA_BUDGET", "100")
    with pytest.raises(BudgetError):
        ProductSpace(2, (8,)).coords


def test_add_table_matches_coordinates():
    s = ProductSpace(3, (1, 1))
    tab = s.add_table
    for i, j in itertools.product(range(9), repeat=2):
        expect = (s.coords[i] + s.coords[j]) % 3
        assert np.array_equal(s.coords[tab[i, j]], expect)


# --------------------------------------------------------------------------- linear algebra


def test_rank_examples():
    assert rank_fp(np.zeros((3, 3), int), 2) == 0
    assert rank_fp(np.eye(3, dtype=int), 2) == 3
    assert rank_fp([[1, 1], [1, 1]], 2) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([2, 3, 5]))
def test_rank_nullity(seed, p):
    a = SplitMix64(seed).residues(p, 12).reshape(3, 4)
    r = rank_fp(a, p)
    ns = nullspace_mod_p(a, p)
    assert r + len(ns) == 4
    assert not ((a @ ns.T) % p).any()
    red, piv = rref(a, p)
    assert len(piv) == r


def test_inverse_mod_p():
    a = np.array([[1, 2], [3, 4]])
    inv = inverse_mod_p(a, 5)
    assert np.array_equal((a @ inv) % 5, np.eye(2, dtype=int))


def test_solve_no_constraints_returns_basepoint():
    c = Coset(3, (1, 2), ((1, 0),))
    assert tuple(solve_on_coset([], c)) == (1, 2)


def test_solve_zero_vector_inconsistent():
    c = Coset.full(2, 3)
    assert solve_on_coset([((0, 0, 0), 1)], c) is None
    assert not solvability_criterion([((0, 0, 0), 1)], c)


def test_solve_on_coset_against_scan():
    # exhaustive scan of all 81 points of F_3^4 as oracle
    rng = SplitMix64(2024)
    pts = list(itertools.product(range(3), repeat=4))
    for trial in range(30):
        xs = rng.residues(3, 8).reshape(2, 4)
        lam = rng.residues(3, 2)
        cons = [(x, l) for x, l in zip(xs, lam)]
        y = solve_on_coset(cons, Coset.full(3, 4))
        exists = any(all(np.dot(x, q) % 3 == l for x, l in cons) for q in pts)
        assert (y is not None) == exists
        if y is not None:
            assert all(np.dot(x, y) % 3 == l for x, l in cons)


def test_solve_on_proper_coset():
    c = Coset(5, (1, 0, 0), ((0, 1, 0),))
    y = solve_on_coset([((0, 1, 0), 3)], c)
    assert c.contains(y) and tuple(y) == (1, 3, 0)
    assert solve_on_coset([((0, 0, 1), 1)], c) is None


def test_solve_mod_p_consistency():
    a = np.array([[1, 1], [2, 2]])
    assert solve_mod_p(a, np.array([1, 2]), 3) is not None
    assert solve_mod_p(a, np.array([1, 1]), 3) is None


def test_coset_members_and_coordinates():
    c = Coset(3, (1, 1, 0), ((1, 0, 1), (0, 1, 1)))
    mem = c.members()
    assert len(mem) == c.size == 9
    assert len({tuple(m) for m in mem}) == 9
    for m in mem:
        lam = c.coordinates_of(m)
        assert np.array_equal((np.asarray(c.u0) + lam @ c.basis_matrix) % 3, m)


def test_coset_rejects_dependent_basis():
    with pytest.raises(SchemaError):
        Coset(2, (0, 0), ((1, 1), (1, 1)))


# --------------------------------------------------------------------------- rng


def test_splitmix_reference_value():
    # first output of SplitMix64 seeded with 0
    assert SplitMix64(0).next_u64() == 0xE220A8397B1DCDAF


def test_rng_reproducible_and_streams_differ():
    a = SplitMix64(7).u64(5)
    assert np.array_equal(a, SplitMix64(7).u64(5))
    assert derive_seed(7, 0) != derive_seed(7, 1)


def test_integers_in_range_and_uniformish():
    x = SplitMix64(3).integers(5, 50_000)
    assert x.min() == 0 and x.max() == 4
    assert np.allclose(np.bincount(x) / 50_000, 0.2, atol=0.01)
