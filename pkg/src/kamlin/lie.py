"""Time-dependent Lie series, order-by-order normalization and numeric flows.

Conventions: ``ad_F(G) = {G, F}``, flow of ``F`` is ``r' = F_theta``,
``theta' = -F_r`` with ``t`` frozen. Degrees are in ``n`` units throughout.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DegreeViolation
from .homological import solve
from .series import (
    FourierTaylorSeries,
    add,
    deriv_r,
    deriv_t,
    deriv_theta,
    kernel_project,
    poisson_bracket,
    scale,
    sub,
    truncate,
)


def _lowest(a, default):
    return a.min_degree if len(a) else default


def iteration_bound(n_max, n_min_h, n_min_f):
    """Maximal number of nonzero ``ad_F`` applications inside ``[n_min_h, n_max]``."""
    return math.ceil((n_max - n_min_h + 2) / (n_min_f - 2))


def _ad_series(G, F, weight, n_max, step):
    """``sum_{j >= 1} weight(j) ad_F^j G`` truncated at ``n_max``."""
    out = FourierTaylorSeries(n_min=0, n_max=n_max, **{
        k: v for k, v in G.meta().items() if k in ("polynomial_origin", "real_symmetric")})
    if not len(G) or not len(F):
        return out
    bound = iteration_bound(n_max, G.min_degree, step)
    term, j = G, 0
    while len(term):
        j += 1
        assert j <= bound, "Lie series failed to terminate within its degree bound"
        term = poisson_bracket(term, F, n_min=0, n_max=n_max)
        out = add(out, scale(term, weight(j)))
    return out


def _widen(a, n_max):
    return a.replace(a.keys, a.coeffs, canonical=True, n_min=0, n_max=n_max)


def _check_generator(F):
    if len(F) and F.min_degree < 3:
        raise ValueError("generator must start at degree n >= 3")


def lie_series_transform(H: FourierTaylorSeries, F: FourierTaylorSeries,
                         n_max: int) -> FourierTaylorSeries:
    """``sum ad_F^j H / j! - sum ad_F^j F_t / (j+1)!`` truncated at ``n_max``.

    This is ``H`` pulled back by the time-one flow of ``F`` in extended
    phase space; the sums terminate because each bracket raises the lowest
    degree by ``n_min(F) - 2 >= 1``. They are evaluated regrouped as
    ``H + sum_{j>=1} ad_F^{j-1} G / j!`` with ``G = {H, F} - F_t``, so the
    cancellation between the two sums happens once, in ``G``.
    """
    _check_generator(F)
    H = truncate(_widen(H, max(n_max, H.n_max or 0)), 0, n_max)
    if not len(F):
        return H
    Ft = truncate(_widen(deriv_t(F), max(n_max, F.n_max or 0)), 0, n_max)
    G = sub(poisson_bracket(H, F, n_min=0, n_max=n_max), Ft)
    # ad^{j-1} G / j! for j >= 1: the j = 1 term is G itself
    rest = _ad_series(G, F, lambda j: 1.0 / math.factorial(j + 1), n_max, F.min_degree)
    return add(add(H, G), rest)


def transformed_perturbation(P, F, R, n_max):
    """New perturbation when ``F`` solves ``{F, omega r} + F_t = R``.

    Substituting ``ad_F(omega r) = F_t - R`` into the Lie series cancels every
    ``F_t`` term, leaving ``(P - R) + sum_{j>=1} ad_F^j (P/j! - R/(j+1)!)``.
    """
    _check_generator(F)
    P = truncate(_widen(P, max(n_max, P.n_max or 0)), 0, n_max)
    R = truncate(_widen(R, max(n_max, R.n_max or 0)), 0, n_max)
    out = sub(P, R)
    if not len(F):
        return out
    step = F.min_degree
    out = add(out, _ad_series(P, F, lambda j: 1.0 / math.factorial(j), n_max, step))
    out = sub(out, _ad_series(R, F, lambda j: 1.0 / math.factorial(j + 1), n_max, step))
    return out


def split_quadratic(H: FourierTaylorSeries):
    """``H = omega r + P``; returns ``(omega, P)``."""
    omega = H[2, 0, 0]
    if omega.imag != 0:
        raise ValueError("frequency coefficient is not real")
    keep = ~((H.keys[:, 0] == 2) & (H.keys[:, 1] == 0) & (H.keys[:, 2] == 0))
    return omega.real, H.replace(H.keys[keep], H.coeffs[keep], canonical=True)


def kam_step_transform(H, F, R, n_max, n_expected=None) -> FourierTaylorSeries:
    """One iteration step ``H = omega r + P -> omega r + P_+``.

    ``n_expected`` defaults to ``2 N - 2`` with ``N`` the lowest degree of
    ``P``. An empty ``P_+`` satisfies any bound.

    Raises
    ------
    DegreeViolation
        ``P_+`` has a term below ``n_expected``.
    """
    omega, P = split_quadratic(H)
    if n_expected is None:
        n_expected = 2 * _lowest(P, 0) - 2
    Pn = transformed_perturbation(P, F, R, n_max)
    if len(Pn) and Pn.min_degree < n_expected:
        raise DegreeViolation(
            f"transformed perturbation starts at n = {Pn.min_degree}, expected >= {n_expected}")
    return add(FourierTaylorSeries.h2(omega), Pn)


def deprit_normalize(H: FourierTaylorSeries, order: int):
    """Normalize ``H = omega r + P`` degree by degree up to ``order``.

    At degree ``d`` the ``(k, m) = (0, 0)`` part is kept and the rest is
    removed by a generator of degree ``d``; later generators cannot touch
    degree ``d`` again.

    Returns
    -------
    coeffs : list of complex
        ``[A_4, A_6, ..., A_order]``, coefficient ``A_{2j}`` of ``r^j``.
    generators : list of FourierTaylorSeries
        One per degree ``3, ..., order`` (possibly empty).
    remainder : FourierTaylorSeries
        Transformed terms above ``order``, within the window of ``H``.
    """
    if order < 4 or order % 2:
        raise ValueError("order must be an even integer >= 4")
    n_max = H.n_max if H.n_max is not None else order
    n_max = max(n_max, order)
    omega, P = split_quadratic(H)
    P = truncate(_widen(P, n_max), 0, n_max)
    if len(P) and P.min_degree < 3:
        raise ValueError("perturbation must start at degree n >= 3")
    generators, coeffs = [], []
    for d in range(3, order + 1):
        comp = truncate(P, d, d)
        kernel, rng = kernel_project(comp)
        if d % 2:
            assert not len(kernel), f"odd-degree kernel term at n = {d} breaks parity"
        else:
            coeffs.append(kernel[d, 0, 0])
        F = solve(rng, omega)
        generators.append(F)
        P = transformed_perturbation(P, F, rng, n_max)
    remainder = truncate(P, order + 1, n_max)
    return coeffs, generators, remainder


def flow_rhs(F: FourierTaylorSeries):
    """Vector field ``(F_theta, -F_r)`` as a vectorized callable of ``(r, theta, t)``."""
    Ftheta = deriv_theta(F)
    Fr = deriv_r(F)

    def rhs(r, theta, t):
        return Ftheta(r, theta, t).real, -Fr(r, theta, t).real

    return rhs


def _rk4(rhs, r, theta, t, epsilon, steps):
    h = epsilon / steps
    for _ in range(steps):
        k1r, k1t = rhs(r, theta, t)
        k2r, k2t = rhs(r + 0.5 * h * k1r, theta + 0.5 * h * k1t, t)
        k3r, k3t = rhs(r + 0.5 * h * k2r, theta + 0.5 * h * k2t, t)
        k4r, k4t = rhs(r + h * k3r, theta + h * k3t, t)
        r = r + h / 6 * (k1r + 2 * k2r + 2 * k3r + k4r)
        theta = theta + h / 6 * (k1t + 2 * k2t + 2 * k3t + k4t)
    return r, theta


def flow_map_numeric(F: FourierTaylorSeries, point, epsilon: float, steps: int = 200,
                     return_error: bool = False):
    """Time-``epsilon`` map of ``r' = F_theta, theta' = -F_r`` by fixed-step RK4.

    ``point = (r, theta, t)`` with broadcastable entries. With
    ``return_error`` the step-halving difference is returned as a third item.
    """
    r, theta, t = (np.asarray(v, dtype=float) for v in point)
    r, theta, t = np.broadcast_arrays(r, theta, t)
    if not len(F):
        out = (r.copy(), theta.copy())
        return out + (np.zeros_like(r),) if return_error else out
    rhs = flow_rhs(F)
    r1, th1 = _rk4(rhs, r, theta, t, epsilon, steps)
    if not return_error:
        return r1, th1
    r2, th2 = _rk4(rhs, r, theta, t, epsilon, 2 * steps)
    return r2, th2, np.hypot(r2 - r1, th2 - th1)


def jacobian_det(F: FourierTaylorSeries, r, theta, t, epsilon=1.0, h=1e-5, steps=200):
    """Determinant of the central-difference Jacobian of the flow map in ``(r, theta)``."""
    r, theta, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r, theta, t)))
    rp, tp = flow_map_numeric(F, (r + h, theta, t), epsilon, steps)
    rm, tm = flow_map_numeric(F, (r - h, theta, t), epsilon, steps)
    rq, tq = flow_map_numeric(F, (r, theta + h, t), epsilon, steps)
    rs, ts = flow_map_numeric(F, (r, theta - h, t), epsilon, steps)
    drr, dtr = (rp - rm) / (2 * h), (tp - tm) / (2 * h)
    drt, dtt = (rq - rs) / (2 * h), (tq - ts) / (2 * h)
    return drr * dtt - drt * dtr
