import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hofa import PreconditionError, ProductSpace, SchemaError, character
from hofa.generators import random_table
from hofa.harmonic import (
    FunctionTable,
    Spectrum,
    box_inner,
    box_norm,
    box_norm_power,
    conv,
    conv_direct,
    dir_conv,
    fourier,
    fourier_direct,
    fourier_l4,
    inverse_fourier,
    l1_distance,
    large_spectrum,
    linf_norm,
    lq_norm,
    mixed_conv,
    mixed_conv_expanded,
    shifted_correlation_energy,
    spectral_conv_approx,
    uk_norm,
    uk_norm_direct,
    uk_norm_power,
)
from hofa.oracles import fourier_loop, u2_loop
from hofa.rng import derive_seed

TOL = 1e-9


def _dir_conv_loop(f, d):
    # E_z f(.., y_d + z, ..) conj f(.., z, ..), straight from the definition
    s = f.space
    fac = s.factor(d).coords
    out = np.zeros(s.total_size, complex)
    for i in range(s.total_size):
        pt = [np.array(part) for part in s.point_of(i)]
        acc = 0j
        for z in fac:
            a = [q.copy() for q in pt]
            b = [q.copy() for q in pt]
            a[d - 1] = (pt[d - 1] + z) % s.p
            b[d - 1] = z
            acc += f(a) * np.conj(f(b))
        out[i] = acc / len(fac)
    return out


# --------------------------------------------------------------------------- fourier


def test_fourier_of_constant():
    s = ProductSpace(2, (3,))
    fh = fourier(FunctionTable.constant(s)).coefficients
    assert fh[0] == pytest.approx(1)
    assert np.allclose(fh[1:], 0, atol=TOL)


@pytest.mark.parametrize("p,n,s", [(2, 3, (1, 0, 1)), (3, 2, (2, 1)), (5, 1, (3,))])
def test_fourier_of_character(p, n, s):
    space = ProductSpace(p, (n,))
    f = FunctionTable.character_table(space, s)
    fh = fourier(f).coefficients
    ind = np.zeros(space.total_size)
    ind[space.index_of((s,))] = 1
    assert np.allclose(fh, ind, atol=TOL)


def test_fourier_matches_double_loop():
    f = random_table(ProductSpace(3, (2,)), 11)
    assert np.allclose(fourier(f).coefficients, fourier_loop(f), atol=TOL)
    assert np.allclose(fourier_direct(f).coefficients, fourier_loop(f), atol=TOL)


def test_fourier_on_product_space_uses_flat_coordinates():
    f = random_table(ProductSpace(3, (1, 1)), 5)
    assert np.allclose(fourier(f).coefficients, fourier_loop(f), atol=TOL)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**63), st.sampled_from([(2, (5,)), (3, (3,)), (5, (1, 1))]))
def test_parseval_and_inversion(seed, shape):
    f = random_table(ProductSpace(shape[0], shape[1]), seed, "gaussian")
    fh = fourier(f)
    assert np.sum(np.abs(fh.coefficients) ** 2) == pytest.approx(np.mean(np.abs(f.values) ** 2), abs=TOL)
    assert inverse_fourier(fh).allclose(f)


def test_spectrum_json_round_trip():
    fh = fourier(random_table(ProductSpace(2, (3,)), 1))
    back = Spectrum.from_json(fh.to_json())
    assert np.allclose(back.coefficients, fh.coefficients, atol=0)


def test_table_json_round_trip_and_schema():
    f = random_table(ProductSpace(3, (1, 1)), 4)
    assert FunctionTable.from_json(f.to_json()).allclose(f, 0)
    with pytest.raises(SchemaError):
        FunctionTable.from_json({"space": {"p": 2, "dims": [2]}, "values": [[1, 0]]})


def test_bounded_flag_enforced():
    with pytest.raises(SchemaError):
        FunctionTable(ProductSpace(2, (1,)), np.array([2.0, 0.0]), True)


# --------------------------------------------------------------------------- convolution


def test_conv_trivial_cases():
    s = ProductSpace(2, (3,))
    one = FunctionTable.constant(s)
    assert conv(one, one).allclose(one)
    f = random_table(s, 3)
    assert np.allclose(conv(f, FunctionTable.constant(s, 0)).values, 0)


def test_conv_direct_equals_fourier_identity():
    s = ProductSpace(2, (4,))
    f, g = random_table(s, 1), random_table(s, 2)
    direct = conv_direct(f, g)
    spectral = inverse_fourier(Spectrum(s, fourier(f).coefficients * fourier(g).coefficients.conj()))
    assert direct.allclose(spectral)
    assert conv(f, g).allclose(direct)


def test_conv_space_mismatch():
    with pytest.raises(SchemaError):
        conv(random_table(ProductSpace(2, (2,)), 1), random_table(ProductSpace(3, (1,)), 1))


def test_dir_conv_of_constant():
    s = ProductSpace(3, (1, 2))
    one = FunctionTable.constant(s)
    for d in (1, 2):
        assert dir_conv(one, d).allclose(one)


def test_dir_conv_bilinear_phase():
    s = ProductSpace(2, (1, 1))
    f = FunctionTable.from_function(s, lambda x: character(2, x[0][0] * x[1][0]))
    out = dir_conv(f, 2)
    for x1, y2 in itertools.product(range(2), repeat=2):
        assert out(((x1,), (y2,))) == pytest.approx(character(2, x1 * y2))


@pytest.mark.parametrize("d", [1, 2])
def test_dir_conv_matches_loop(d):
    f = random_table(ProductSpace(3, (1, 1)), 9)
    assert np.allclose(dir_conv(f, d).values, _dir_conv_loop(f, d), atol=TOL)


def test_dir_conv_diagonal_nonnegative():
    s = ProductSpace(3, (1, 1))
    for seed in range(10):
        out = dir_conv(random_table(s, seed), 2)
        for x1 in range(3):
            v = out(((x1,), (0,)))
            assert abs(v.imag) < 1e-12 and v.real >= -1e-12


def test_dir_conv_bad_direction():
    with pytest.raises(SchemaError):
        dir_conv(random_table(ProductSpace(2, (1, 1)), 1), 3)


def test_mixed_conv_single_direction_and_constant():
    s = ProductSpace(2, (1, 2))
    f = random_table(s, 4)
    assert mixed_conv(f, (2,)).allclose(dir_conv(f, 2))
    one = FunctionTable.constant(s)
    assert mixed_conv(one, (1, 2, 1)).allclose(one)


def test_mixed_conv_order():
    # first listed direction is applied first
    f = random_table(ProductSpace(2, (1, 1)), 8)
    assert mixed_conv(f, (1, 2)).allclose(dir_conv(dir_conv(f, 1), 2))


def test_configuration_formula_words_up_to_three():
    s = ProductSpace(2, (1, 1))
    words = [w for r in (1, 2, 3) for w in itertools.product((1, 2), repeat=r)]
    for seed in range(3):
        f = random_table(s, derive_seed(5, seed))
        for w in words:
            rec = mixed_conv(f, w)
            for x in range(s.total_size):
                assert mixed_conv_expanded(f, w, x) == pytest.approx(rec.values[x], abs=TOL)


def test_configuration_formula_constant():
    s = ProductSpace(3, (1, 1))
    c = 0.6 * np.exp(0.7j)
    f = FunctionTable.constant(s, c)
    for w in [(1,), (2, 1), (1, 2, 2)]:
        assert mixed_conv_expanded(f, w, 0) == pytest.approx(abs(c) ** (2 ** len(w)), abs=TOL)


def test_configuration_formula_r1_is_dir_conv():
    f = random_table(ProductSpace(3, (1, 1)), 2)
    ref = _dir_conv_loop(f, 1)
    for x in range(9):
        assert mixed_conv_expanded(f, (1,), x) == pytest.approx(ref[x], abs=TOL)


def test_linf_conv_stability():
    s = ProductSpace(2, (1, 2))
    for seed in range(10):
        f = random_table(s, derive_seed(seed, 0))
        noise = random_table(s, derive_seed(seed, 1))
        g = FunctionTable(s, np.clip(np.abs(f.values + 0.2 * noise.values), 0, 1) * np.exp(1j * np.angle(f.values + 0.2 * noise.values)), True)
        for dirs in [(1, 2), (2, 1, 2)]:
            diff = linf_norm(mixed_conv(f, dirs) - mixed_conv(g, dirs))
            assert diff <= 2 ** len(dirs) * l1_distance(f, g) + TOL


# --------------------------------------------------------------------------- norms


def test_norm_trivia():
    s = ProductSpace(3, (2,))
    one = FunctionTable.constant(s)
    for q in (1, 2, 4.5):
        assert lq_norm(one, q) == pytest.approx(1)
    assert linf_norm(FunctionTable.constant(s, 0)) == 0
    f = random_table(s, 1)
    assert l1_distance(f, f) == 0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_uk_of_constant(k):
    assert uk_norm(FunctionTable.constant(ProductSpace(2, (3,))), k) == pytest.approx(1)


def test_u2_of_character():
    f = FunctionTable.character_table(ProductSpace(3, (2,)), (1, 2))
    assert uk_norm(f, 2) == pytest.approx(1)


def test_u2_identity_against_loop():
    s = ProductSpace(2, (4,))
    for seed in range(5):
        f = random_table(s, seed)
        loop = u2_loop(f)
        assert uk_norm_power(f, 2) == pytest.approx(loop.real, abs=TOL)
        assert fourier_l4(f) == pytest.approx(loop.real, abs=TOL)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_uk_recursion_matches_direct(k):
    f = random_table(ProductSpace(3, (1,)), 7 + k)
    direct = uk_norm_direct(f, k)
    assert abs(direct.imag) < TOL
    assert uk_norm_power(f, k) == pytest.approx(direct.real, abs=TOL)


def test_uk_monotone_in_k():
    f = random_table(ProductSpace(2, (4,)), 3)
    vals = [uk_norm(f, k) for k in (1, 2, 3)]
    assert vals[0] <= vals[1] + TOL <= vals[2] + 2 * TOL


def test_box_norm_examples():
    s = ProductSpace(2, (1, 1))
    assert box_norm(FunctionTable.constant(s)) == pytest.approx(1)
    u = np.exp(1j * np.array([0.3, 1.1]))
    v = np.exp(1j * np.array([2.0, -0.4]))
    f = FunctionTable.from_function(s, lambda x: u[x[0][0]] * v[x[1][0]])
    assert box_norm(f) == pytest.approx(1)
    chi = FunctionTable.from_function(s, lambda x: character(2, x[0][0] * x[1][0]))
    # 16-term enumeration of the defining average
    direct = sum(
        chi(((x1,), (x2,))) * np.conj(chi(((y1,), (x2,)))) * np.conj(chi(((x1,), (y2,)))) * chi(((y1,), (y2,)))
        for x1, x2, y1, y2 in itertools.product(range(2), repeat=4)
    ) / 16
    assert box_norm_power(chi) == pytest.approx(direct.real) == pytest.approx(0.5)


def test_box_inner_equals_power_on_diagonal():
    f = random_table(ProductSpace(3, (1, 1)), 12)
    assert box_inner([f] * 4).real == pytest.approx(box_norm_power(f), abs=TOL)
    g = random_table(ProductSpace(2, (1, 1, 1)), 3)
    assert box_inner([g] * 8).real == pytest.approx(box_norm_power(g), abs=TOL)


def test_box_cauchy_schwarz_and_mapping_form():
    s = ProductSpace(2, (2, 1))
    tabs = {frozenset(I): random_table(s, i) for i, I in enumerate([(), (1,), (2,), (1, 2)])}
    lhs = abs(box_inner(tabs))
    rhs = np.prod([box_norm(t) for t in tabs.values()])
    assert lhs <= rhs + TOL


# --------------------------------------------------------------------------- spectra


def test_large_spectrum_examples():
    s = ProductSpace(2, (3,))
    assert large_spectrum(FunctionTable.constant(s), 0.5) == [0]
    f = FunctionTable.character_table(s, (1, 1, 0))
    assert large_spectrum(f, 0.5) == [s.index_of(((1, 1, 0),))]


def test_large_spectrum_bound_sign_functions():
    s = ProductSpace(2, (6,))
    for seed in range(10):
        f = random_table(s, seed, "sign")
        for eps in (0.1, 0.2, 0.5):
            assert len(large_spectrum(f, eps)) <= eps**-2


def test_large_spectrum_rejects_unbounded():
    f = FunctionTable(ProductSpace(2, (1,)), np.array([3.0, 0.0]), False)
    with pytest.raises(PreconditionError):
        large_spectrum(f, 0.5)


def test_spectral_approx_exact_for_character():
    f = FunctionTable.character_table(ProductSpace(3, (2,)), (1, 0))
    res = spectral_conv_approx(f, f, 0.3)
    assert res.l2_error == pytest.approx(0, abs=TOL)
    assert res.approximant.allclose(conv(f, f))


def test_spectral_approx_zero():
    z = FunctionTable.constant(ProductSpace(2, (3,)), 0)
    assert spectral_conv_approx(z, z, 0.2).l2_error == 0


def test_spectral_approx_random():
    s = ProductSpace(2, (7,))
    for seed in range(3):
        f, g = random_table(s, derive_seed(seed, 0)), random_table(s, derive_seed(seed, 1))
        res = spectral_conv_approx(f, g, 0.2)
        assert res.l2_error <= 0.2
        assert res.lq_error(4) <= 8 * 0.2**0.25


def test_l4bound_holds():
    s = ProductSpace(3, (2,))
    for seed in range(10):
        f, g = random_table(s, derive_seed(seed, 0)), random_table(s, derive_seed(seed, 1))
        assert shifted_correlation_energy(f, g) <= min(fourier_l4(f), fourier_l4(g)) + TOL
