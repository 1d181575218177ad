import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kamlin.errors import FractionalPoleError
from kamlin.series import (
    FourierTaylorSeries as S,
    add,
    deriv_r,
    deriv_t,
    deriv_theta,
    grid_supnorm,
    kernel_project,
    majorant_norm,
    mul,
    mul_with_tail,
    poisson_bracket,
    prune,
    reality_check,
    truncate,
)

from helpers import random_series, rel_max_diff

OMEGA = 0.6180339887498949


# -- arithmetic ---------------------------------------------------------------

def test_add_identity():
    a = S.monomial(3, 1, 0, 2.0)
    assert add(a, S.zero()) == a


def test_add_cancellation():
    assert len(add(S.monomial(2, 0, 0, 1.0), S.monomial(2, 0, 0, -1.0))) == 0


def test_add_linearity():
    s = add(S.monomial(1, 1, 0, 2.0), S.monomial(1, 1, 0, 3.0))
    assert s[1, 1, 0] == 5.0


def test_add_window_and_flags():
    a = S.monomial(3, 1, 0, n_min=3, n_max=5, polynomial_origin=True)
    b = S.monomial(4, 0, 0, n_min=4, n_max=9)
    s = add(a, b)
    assert (s.n_min, s.n_max) == (3, 9)
    assert not s.polynomial_origin


def test_mul_exponent_addition():
    a = S.monomial(1, 1, 0)
    p = mul(a, a, n_max=10)
    assert p.as_dict() == {(2, 2, 0): 1.0}


def test_mul_identity(rng):
    a = random_series(rng, 3, 8, 5, 2, 10)
    assert rel_max_diff(mul(a, S.monomial(0, 0, 0), n_max=20), a) == 0.0


def test_mul_against_binomial_expansion():
    # (2r)^{3/2} cos^3 theta, expanded independently
    cube = S.from_dict({(3, 3 - 2 * a, 0): 2 ** 1.5 / 8 * math.comb(3, a) for a in range(4)})
    sq = mul(cube, cube, n_max=6)
    # (2r)^3 cos^6 theta = 8 r^3 * 2^-6 sum C(6,a) e^{i(6-2a)theta}
    expected = {(6, 6 - 2 * a, 0): math.comb(6, a) / 8 for a in range(7)}
    got = sq.as_dict()
    assert set(got) == set(expected)
    for key, val in expected.items():
        assert got[key] == pytest.approx(val, rel=1e-14)


def test_mul_window_and_tail():
    a = S.from_dict({(2, 0, 0): 1.0, (4, 0, 0): 2.0})
    p, tail = mul_with_tail(a, a, n_max=6)
    assert p.as_dict() == {(4, 0, 0): 1.0, (6, 0, 0): 4.0}
    assert tail == pytest.approx(4.0)


# -- derivatives --------------------------------------------------------------

def test_deriv_r_of_r():
    assert deriv_r(S.monomial(2, 0, 0)).as_dict() == {(0, 0, 0): 1.0}


def test_deriv_r_drops_constants():
    assert len(deriv_r(S.monomial(0, 3, 1, 5.0))) == 0


def test_deriv_r_rejects_half_power():
    with pytest.raises(FractionalPoleError):
        deriv_r(S.monomial(1, 1, 0))


def test_deriv_theta_harmonic():
    assert deriv_theta(S.monomial(1, 1, 0)).as_dict() == {(1, 1, 0): 1j}


def test_deriv_t_harmonic():
    assert deriv_t(S.monomial(4, 0, 3)).as_dict() == {(4, 0, 3): 3j}


def test_derivatives_match_finite_differences(rng):
    a = random_series(rng, 2, 8, 4, 3, 12)
    r, th, t, h = 0.3, 0.4, 1.1, 1e-6
    fd_r = (a(r + h, th, t) - a(r - h, th, t)) / (2 * h)
    fd_th = (a(r, th + h, t) - a(r, th - h, t)) / (2 * h)
    fd_t = (a(r, th, t + h) - a(r, th, t - h)) / (2 * h)
    assert deriv_r(a)(r, th, t) == pytest.approx(fd_r, rel=1e-7)
    assert deriv_theta(a)(r, th, t) == pytest.approx(fd_th, rel=1e-7)
    assert deriv_t(a)(r, th, t) == pytest.approx(fd_t, rel=1e-7)


# -- Poisson bracket ----------------------------------------------------------

def test_bracket_with_h2_convention():
    F = S.monomial(3, 1, 0)
    b = poisson_bracket(F, S.h2(1.0))
    assert b.as_dict() == {(3, 1, 0): -1j}


def test_bracket_theta_free():
    assert len(poisson_bracket(S.monomial(2, 0, 0), S.monomial(4, 0, 0))) == 0


def test_bracket_rejects_half_power():
    with pytest.raises(FractionalPoleError):
        poisson_bracket(S.monomial(1, 1, 0), S.monomial(4, 2, 0))


def test_bracket_matches_derivative_formula(rng):
    F = random_series(rng, 2, 7, 5, 2, 10)
    G = random_series(rng, 2, 7, 5, 2, 10)
    direct = poisson_bracket(F, G)
    via = mul(deriv_r(F), deriv_theta(G), n_max=20) - mul(deriv_theta(F), deriv_r(G), n_max=20)
    assert rel_max_diff(direct, via) < 1e-14


series_params = st.tuples(
    st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(0, 4), st.integers(1, 8))


@st.composite
def series_st(draw, real=True):
    seed, lo, span, terms = draw(series_params)
    rng = np.random.default_rng(seed)
    return random_series(rng, lo, lo + span, 6, 3, terms, real=real)


@settings(max_examples=60, deadline=None)
@given(series_st(), series_st())
def test_bracket_antisymmetry_exact(F, G):
    a = poisson_bracket(F, G)
    b = poisson_bracket(G, F)
    assert np.array_equal(a.keys, b.keys)
    assert np.array_equal(a.coeffs, -b.coeffs)


def _l1(a):
    return float(np.sum(np.abs(a.coeffs)))


def _triple_scale(F, G, H):
    # each bracket contributes at most max(n)*max(|k|)/2 per product
    deg = max(s.max_degree or 0 for s in (F, G, H)) + 6
    return _l1(F) * _l1(G) * _l1(H) * deg ** 4 + 1e-300


@settings(max_examples=40, deadline=None)
@given(series_st(), series_st(), series_st())
def test_jacobi_identity(F, G, H):
    total = add(add(poisson_bracket(F, poisson_bracket(G, H)),
                    poisson_bracket(G, poisson_bracket(H, F))),
                poisson_bracket(H, poisson_bracket(F, G)))
    worst = max([abs(c) for _, c in total] + [0.0])
    assert worst <= 1e-12 * _triple_scale(F, G, H)


@settings(max_examples=40, deadline=None)
@given(series_st(), series_st(), series_st())
def test_leibniz_rule(F, G, H):
    N = 60
    lhs = poisson_bracket(F, mul(G, H, n_max=N))
    rhs = mul(poisson_bracket(F, G), H, n_max=N) + mul(G, poisson_bracket(F, H), n_max=N)
    worst = max([abs(c) for _, c in lhs - rhs] + [0.0])
    assert worst <= 1e-12 * _triple_scale(F, G, H)


@settings(max_examples=60, deadline=None)
@given(series_st(), st.floats(0.1, 3.0))
def test_bracket_with_h2_anchor_exact(F, omega):
    total = add(poisson_bracket(F, S.h2(omega)), deriv_theta(F) * omega)
    assert len(total) == 0


@settings(max_examples=40, deadline=None)
@given(series_st(), st.integers(2, 8), st.floats(-2.0, 2.0))
def test_action_monomial_fast_path_matches_general(F, n, c):
    G = S.monomial(n, 0, 0, c)
    fast = poisson_bracket(F, G)
    # a two-term G takes the general pairwise route
    general = poisson_bracket(F, add(G, S.monomial(40, 2, 0, 1.0)), n_max=39)
    assert rel_max_diff(fast, general) <= 1e-15


@settings(max_examples=60, deadline=None)
@given(series_st(), series_st())
def test_bracket_degree_law(F, G):
    b = poisson_bracket(F, G)
    if len(b):
        assert b.min_degree >= F.min_degree + G.min_degree - 2


@settings(max_examples=60, deadline=None)
@given(series_st(), series_st())
def test_parity_preserved(F, G):
    assert poisson_bracket(F, G).parity_violations() == 0
    assert mul(F, G, n_max=40).parity_violations() == 0
    assert add(F, G).parity_violations() == 0
    assert poisson_bracket(F, G).polynomial_origin


def test_bracket_antisymmetry_shared_keys():
    F = S.from_dict({(3, 1, 0): 1 + 2j, (3, -1, 0): 1 - 2j, (4, 2, 1): 0.3, (5, 1, 2): -0.7j})
    G = S.from_dict({(3, 1, 0): 0.5, (4, 2, 1): 1.7 - 0.1j, (5, 3, -1): 2.0, (4, 0, 1): 1.1})
    assert np.array_equal(poisson_bracket(F, G).coeffs, -poisson_bracket(G, F).coeffs)


# -- norms --------------------------------------------------------------------

def test_majorant_monomial():
    assert majorant_norm(S.h2(OMEGA), 0.3, 0.7) == pytest.approx(OMEGA * 0.3)


def test_majorant_half_power():
    val = majorant_norm(S.monomial(1, 1, 0), 0.25, 0.5)
    assert val == pytest.approx(0.5 * math.exp(0.5))
    assert val == pytest.approx(0.8244, abs=1e-4)


def test_majorant_empty():
    assert majorant_norm(S.zero(), 0.5, 0.5) == 0.0


@settings(max_examples=40, deadline=None)
@given(series_st(), series_st(), st.floats(0.05, 1.0), st.floats(0.0, 1.0))
def test_majorant_monotone_and_subadditive(a, b, rho, gamma):
    m = majorant_norm(a, rho, gamma)
    assert majorant_norm(a, min(rho * 1.5, 2.0), gamma) >= m
    assert majorant_norm(a, rho, gamma + 0.1) >= m
    assert majorant_norm(add(a, b), rho, gamma) <= m + majorant_norm(b, rho, gamma) + 1e-12


def test_grid_supnorm_monomial():
    assert grid_supnorm(S.h2(OMEGA), 0.3, 0.2, samples=8) == pytest.approx(OMEGA * 0.3)


def test_grid_supnorm_attained_at_negative_imaginary_part():
    val = grid_supnorm(S.monomial(1, 1, 0), 0.25, 0.5, samples=8)
    assert val == pytest.approx(0.5 * math.exp(0.5), abs=1e-3)


def test_grid_supnorm_below_majorant(rng):
    for _ in range(50):
        a = random_series(rng, 2, 10, 6, 3, int(rng.integers(1, 12)))
        rho, gamma = rng.uniform(0.05, 1.0), rng.uniform(0.0, 1.0)
        assert grid_supnorm(a, rho, gamma, samples=6) <= majorant_norm(a, rho, gamma) * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(series_st(), st.floats(0.05, 1.0), st.floats(0.3, 1.0), st.floats(0.01, 0.25))
def test_cauchy_estimate_theta(F, rho, gamma, sigma):
    left = majorant_norm(deriv_theta(F), rho, gamma - sigma)
    assert left <= majorant_norm(F, rho, gamma) / sigma * (1 + 1e-12)


# -- kernel / reality -----------------------------------------------------------

def test_kernel_project_split():
    a = add(S.h2(OMEGA), S.monomial(3, 1, 0))
    ker, rng_ = kernel_project(a)
    assert ker.as_dict() == {(2, 0, 0): OMEGA}
    assert rng_.as_dict() == {(3, 1, 0): 1.0}


def test_kernel_project_normal_form_term():
    ker, rng_ = kernel_project(S.monomial(4, 0, 0, 2.5))
    assert ker.as_dict() == {(4, 0, 0): 2.5} and len(rng_) == 0


def test_kernel_project_time_harmonic_is_range():
    ker, rng_ = kernel_project(S.monomial(4, 0, 2))
    assert len(ker) == 0 and rng_.as_dict() == {(4, 0, 2): 1.0}


def test_kernel_project_reassembles(rng):
    a = random_series(rng, 2, 10, 6, 3, 30)
    ker, rng_ = kernel_project(a)
    assert add(ker, rng_) == a


def test_reality_cosine():
    c = S.from_dict({(1, 1, 0): 0.5, (1, -1, 0): 0.5})
    assert reality_check(c) == 0.0


def test_reality_imaginary():
    assert reality_check(S.monomial(2, 0, 0, 1j)) == 2.0


def test_validate_flags():
    with pytest.raises(ValueError):
        S.monomial(3, 2, 0, polynomial_origin=True).validate()
    with pytest.raises(ValueError):
        S.monomial(3, 1, 0, real_symmetric=True).validate()
    S.from_dict({(3, 1, 0): 1j, (3, -1, 0): -1j}, real_symmetric=True).validate()


def test_window_enforced():
    with pytest.raises(ValueError):
        S.monomial(8, 0, 0, n_max=6)


def test_prune_and_truncate():
    a = S.from_dict({(2, 0, 0): 1e-20, (3, 1, 0): 1.0, (6, 0, 0): 2.0})
    assert len(prune(a)) == 3
    assert len(prune(a, 1e-10)) == 2
    t = truncate(a, 3, 5)
    assert t.as_dict() == {(3, 1, 0): 1.0}
    assert (t.n_min, t.n_max) == (3, 5)


def test_evaluate_real_function_is_real(rng):
    a = random_series(rng, 2, 9, 5, 3, 15)
    vals = a.evaluate(rng.uniform(0, 1, 20), rng.uniform(0, 6, 20), rng.uniform(0, 6, 20))
    assert np.max(np.abs(vals.imag)) < 1e-12 * np.max(np.abs(vals))
