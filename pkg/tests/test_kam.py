import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import GOLDEN, random_series
from kamlin.diophantine import DiophantineParams, estimate_alpha
from kamlin.errors import DomainExhausted, NonLinearizableError, NotFound
from kamlin.homological import solve
from kamlin.ingest import to_action_angle
from kamlin.instances import linearizable, linearizing_generator, x_cubed
from kamlin.kam import (
    LN2,
    TransformChain,
    build_schedule,
    compose_eval,
    kam_run,
    kam_step,
    inverse_bound_constant,
    min_admissible_q,
    verify_inverse_bounds,
    verify_schedule,
)
from kamlin.lie import flow_map_numeric, split_quadratic
from kamlin.series import FourierTaylorSeries as S
from kamlin.series import majorant_norm, truncate

ALPHA = estimate_alpha(GOLDEN, 2.0, 1000)
PARAMS = DiophantineParams(GOLDEN, ALPHA, 2.0)
C1 = inverse_bound_constant(ALPHA, 2.0)


# -- inverse-bound constant -------------------------------------------------------

def _closed_form_tau2(sigma):
    e = math.exp(-sigma)
    return sigma ** 3 * e * (1 + e) / (1 - e) ** 3


def test_constant_tau2_against_closed_form():
    grid = np.linspace(1e-4, 0.25, 20001)
    sup = max(_closed_form_tau2(s) for s in grid)
    assert C1 == pytest.approx(8 / ALPHA * max(sup, 2.0), rel=1e-6)
    assert C1 == pytest.approx(41.9, abs=0.1)


def test_constant_scales_inverse_alpha():
    assert inverse_bound_constant(0.1, 2.5) == pytest.approx(2 * inverse_bound_constant(0.2, 2.5), rel=1e-12)


def test_constant_at_least_gamma_limit():
    for tau in (1.5, 2.0, 3.0, 4.0):
        assert inverse_bound_constant(1.0, tau) >= 8 * math.gamma(tau + 1) * (1 - 1e-12)


# -- schedule -------------------------------------------------------------

def test_schedule_q4_values():
    sched = build_schedule(4, 2.0, C1, 2, strict=False)
    assert [p.s for p in sched.steps] == [17, 33]
    assert [p.sigma for p in sched.steps] == [0.0625, 0.03125]


def test_schedule_q12_delta0():
    sched = build_schedule(12, 2.0, C1, 3)
    assert sched.steps[0].delta == pytest.approx(4 * 5 * 12 * LN2 / 4097, rel=1e-15)
    assert sched.steps[0].delta == pytest.approx(0.04061, abs=1e-5)


@pytest.mark.parametrize("N", [0, 1, 5, 20, 45])
def test_sigma_partial_sums_exact(N):
    sched = build_schedule(12, 2.0, 1.0, N + 1)
    total = math.fsum(p.sigma for p in sched.steps)
    # geometric sum: 1/16 + ... + 2^{-(N+4)} = 1/8 - 2^{-(N+4)}
    assert abs(total - (0.125 - 2.0 ** -(N + 4))) <= 1e-15
    assert total < 0.125


def test_ladder_and_nesting():
    sched = build_schedule(12, 2.0, C1, 30)
    for a, b in zip(sched.steps, sched.steps[1:]):
        assert b.s == 2 * a.s - 1
        assert b.rho < a.rho and b.gamma < a.gamma
        assert b.rho == pytest.approx(a.rho - 4 * a.delta, abs=1e-15)
    assert sched.c2 == 1.5 * C1
    assert sched.c3 == pytest.approx(sched.c2 * (4 * 5 * LN2) ** -3)


def test_q4_exhausts_domain():
    with pytest.raises(DomainExhausted) as info:
        build_schedule(4, 2.0, 1.0, 5)
    assert info.value.schedule.steps[0].delta == pytest.approx(3.262, abs=1e-3)
    rep = verify_schedule(build_schedule(4, 2.0, 1.0, 25, strict=False))
    assert rep.status == "infeasible"
    assert rep.sum_delta > 0.125
    assert any("delta" in f for f in rep.failures)


@pytest.mark.parametrize("c1", [1.0, 10.0, 1e3])
def test_q4_infeasible_any_c1(c1):
    assert not verify_schedule(build_schedule(4, 2.0, c1, 25, strict=False)).feasible


def test_min_q_certifies():
    q = min_admissible_q(2.0, C1, horizon=40)
    rep = verify_schedule(build_schedule(q, 2.0, C1, 40))
    assert rep.feasible
    assert rep.sum_delta <= 0.125 and rep.sum_sigma <= 0.125 and rep.sum_epsilon <= 0.5
    assert rep.th1_ok and rep.epsilon_chain_ok and rep.epsilon_decreasing
    ps = build_schedule(q, 2.0, C1, 40).steps
    assert 1 - 4 * rep.sum_delta >= 0.5 and 1 - 4 * rep.sum_sigma >= 0.5
    assert all(p.th1_margin >= 0 for p in ps)


def test_min_q_by_linear_scan():
    q = min_admissible_q(2.0, 1.0, horizon=40)
    feasible = [verify_schedule(build_schedule(k, 2.0, 1.0, 40, strict=False)).feasible
                for k in range(1, 30)]
    assert feasible.index(True) + 1 == q
    assert q == 12


def test_min_q_recorded_for_tau3():
    q3 = min_admissible_q(3.0, C1, horizon=40)
    assert verify_schedule(build_schedule(q3, 3.0, C1, 40)).feasible


def test_min_q_and_large_c1():
    base = min_admissible_q(2.0, 1.0)
    assert min_admissible_q(2.0, 1e6) >= base
    assert min_admissible_q(2.0, 2e6) > base


def test_min_q_not_found():
    with pytest.raises(NotFound):
        min_admissible_q(2.0, 1e10)


def test_min_q_needs_horizon():
    with pytest.raises(ValueError):
        min_admissible_q(2.0, 1.0, horizon=5)


def test_short_horizon_partial():
    rep = verify_schedule(build_schedule(12, 2.0, C1, 1))
    assert rep.status == "partial"
    assert math.isnan(rep.tail_epsilon)


@settings(max_examples=30, deadline=None)
@given(st.integers(12, 40), st.floats(1.5, 4.0), st.floats(0.1, 1e3))
def test_epsilon_decreasing_on_feasible(q, tau, c1):
    sched = build_schedule(q, tau, c1, 25, strict=False)
    rep = verify_schedule(sched)
    if rep.feasible:
        assert rep.epsilon_decreasing
        assert rep.epsilon_chain_ok


# -- inverse bound ----------------------------------------------------------

def test_inverse_bound_single_mode():
    R = S.monomial(20, 2, 0, 0.5) + S.monomial(20, -2, 0, 0.5)
    chk = verify_inverse_bounds(R / majorant_norm(R, 1, 1), GOLDEN, PARAMS, 1, 1, 0.05, 0.05, 10)
    assert chk.violations == 0
    assert min(chk.margins) > 0.9


def test_inverse_bound_zero():
    chk = verify_inverse_bounds(S.zero(), GOLDEN, PARAMS, 1, 1, 0.05, 0.05, 10)
    assert chk.norm_F == chk.norm_Fr == chk.norm_Ftheta == 0
    assert chk.violations == 0


def test_inverse_bound_batch():
    rng = np.random.default_rng(41)
    for _ in range(50):
        R = random_series(rng, 20, 38, 8, 5, 20, no_kernel=True)
        R = R / majorant_norm(R, 1, 1)
        chk = verify_inverse_bounds(R, GOLDEN, PARAMS, 1, 1, 0.05, 0.05, 10, c1=C1)
        assert chk.violations == 0


def test_inverse_bound_domain_validation():
    with pytest.raises(ValueError):
        verify_inverse_bounds(S.zero(), GOLDEN, PARAMS, 1, 1, 0.3, 0.05, 10)


# -- steps and runs -------------------------------------------------------

def test_step_single_mode():
    H = S.h2(GOLDEN) + S.monomial(3, 1, 0)
    Hn, F, rep = kam_step(H, 1.5, 20, GOLDEN, c1=C1)
    _, Pn = split_quadratic(Hn)
    assert len(Pn) == 0  # n_min >= 10 holds vacuously
    assert rep.truncation_range == (3, 4)
    assert rep.bound_satisfied


def test_step_twist_detected():
    H = S.h2(GOLDEN) + S.monomial(4, 0, 0, 1.0) + S.monomial(4, 2, 1) + S.monomial(4, -2, -1)
    with pytest.raises(NonLinearizableError) as info:
        kam_step(H, 2, 12, GOLDEN, c1=C1)
    assert info.value.j == 2 and info.value.A == 1.0


def test_step_zero():
    H = S.h2(GOLDEN)
    Hn, F, rep = kam_step(H, 2, 12, GOLDEN, c1=C1)
    assert Hn == S.h2(GOLDEN) and len(F) == 0
    assert rep.norm_R == rep.norm_F == rep.norm_P_next == 0


@pytest.mark.parametrize("s", [3, 5, 9])
def test_step_degree_doubling(s):
    rng = np.random.default_rng(s)
    N = 2 * s
    P = random_series(rng, N, 2 * N + 4, 6, 3, 25, no_kernel=True)
    P = P + S.monomial(N, 2, 1, 0.1) + S.monomial(N, -2, -1, 0.1)
    Hn, _, _ = kam_step(S.h2(GOLDEN) + P, s, 2 * N + 4, GOLDEN, c1=C1)
    _, Pn = split_quadratic(Hn)
    assert Pn.min_degree >= 2 * (2 * s - 1)


def test_run_trivial():
    chain, reps, H = kam_run(S.h2(GOLDEN), GOLDEN, PARAMS, 5, 24)
    assert len(chain) == 0 and reps == []


def test_run_twist_at_step0():
    H = S.h2(GOLDEN) + S.monomial(4, 0, 0, 1.0)
    with pytest.raises(NonLinearizableError) as info:
        kam_run(H, GOLDEN, PARAMS, 5, 12)
    assert info.value.step == 0
    assert info.value.partial[1] == []


def test_run_x_cubed_twist():
    H = to_action_angle(x_cubed(GOLDEN), 12)
    with pytest.raises(NonLinearizableError) as info:
        kam_run(H, GOLDEN, PARAMS, 5, 12)
    assert info.value.j == 2
    assert info.value.A.real == pytest.approx(-15 / (4 * GOLDEN), rel=1e-12)


def test_run_constructed_instance():
    H = linearizable(GOLDEN, 24)
    chain, reps, Hn = kam_run(H, GOLDEN, PARAMS, 3, 24, s0=3)
    assert len(reps) == 3 and len(chain) == 3
    assert [r.n_min for r in reps] == [6, 10, 18]
    assert [r.s for r in reps] == [3, 5, 9]
    norms = [majorant_norm(split_quadratic(H)[1], 0.25, 0.25)] + [r.norm_P_next for r in reps]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert all(r.bound_satisfied for r in reps)
    assert all(r.kernel_mass <= 1e-18 for r in reps)


def test_run_half_integer_start():
    G = S.from_dict({(3, 1, -1): 0.01, (3, -1, 1): 0.01, (3, 3, 1): 0.01, (3, -3, -1): 0.01},
                    real_symmetric=True, polynomial_origin=True)
    H = linearizable(GOLDEN, 20, G)
    chain, reps, _ = kam_run(H, GOLDEN, PARAMS, 4, 20)
    assert [r.n_min for r in reps] == [3, 4, 6, 10]
    norms = [r.norm_P_next for r in reps]
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_compose_identity_and_single():
    pt = (np.array([0.1, 0.2]), np.array([0.3, 1.0]), np.array([0.0, 2.0]))
    r, th = compose_eval(TransformChain(), pt)
    assert np.array_equal(r, pt[0]) and np.array_equal(th, pt[1])
    F = linearizing_generator()
    r, th = compose_eval(TransformChain([F], [(0.25, 0.25)]), pt)
    r2, th2 = flow_map_numeric(F, pt, 1.0)
    assert np.array_equal(r, r2) and np.array_equal(th, th2)


def test_compose_order():
    F0 = S.monomial(3, 1, 0, 0.1) + S.monomial(3, -1, 0, 0.1)
    F1 = S.monomial(4, 2, 1, 0.1) + S.monomial(4, -2, -1, 0.1)
    pt = (0.2, 0.4, 0.7)
    r, th = compose_eval(TransformChain([F0, F1], [(1, 1), (1, 1)]), pt)
    a = flow_map_numeric(F1, pt, 1.0)
    b = flow_map_numeric(F0, (a[0], a[1], 0.7), 1.0)
    assert (r, th) == (b[0], b[1])


def test_compose_symplectic():
    chain, _, _ = kam_run(linearizable(GOLDEN, 24), GOLDEN, PARAMS, 3, 24, s0=3)
    rng = np.random.default_rng(8)
    r, th, t = rng.uniform(0.05, 0.25, 10), rng.uniform(0, 6.28, 10), rng.uniform(0, 6.28, 10)
    h = 1e-5

    def f(r_, th_):
        return compose_eval(chain, (r_, th_, t))

    rp, tp = f(r + h, th)
    rm, tm = f(r - h, th)
    rq, tq = f(r, th + h)
    rs, ts = f(r, th - h)
    det = ((rp - rm) * (tq - ts) - (rq - rs) * (tp - tm)) / (4 * h * h)
    assert np.max(np.abs(det - 1)) <= 1e-5
