"""Parameter schedule, its certification, and the desk-scale KAM iteration.

Two modes live here. The schedule functions do arithmetic only and can
certify the step-size inequalities for any start exponent ``q``. The
iteration functions run actual truncate-solve-transform steps on series and
are only feasible for small starting degrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .diophantine import DiophantineParams, estimate_alpha
from .errors import DomainExhausted, NonLinearizableError, NotFound
from .homological import solve
from .lie import flow_map_numeric, kam_step_transform, split_quadratic
from .series import (
    FourierTaylorSeries,
    deriv_r,
    deriv_theta,
    kernel_project,
    majorant_norm,
    sub,
    truncate,
)

LN2 = math.log(2.0)
B_DEFAULT = 1.5
KERNEL_RTOL = 1e-10
CONVERGED_NORM = 1e-14
MIN_HORIZON = 20
Q_MAX = 64
ALPHA_SCAN = 1000
NORM_DOMAIN = (0.25, 0.25)
BOUND_SHRINK = (0.05, 0.05)  # (delta, sigma) for the per-step bound comparison


# -- the inverse-bound constant -----------------------------------------------------

def _weighted_sum(sigma, tau):
    """``sigma^{tau+1} sum_{k>=1} k^tau e^{-k sigma}``."""
    kmax = int(math.ceil((60.0 + tau * (1.0 + math.log(1.0 / sigma))) / sigma)) + 10
    k = np.arange(1, kmax + 1, dtype=float)
    terms = np.exp(tau * np.log(k) - k * sigma + (tau + 1) * math.log(sigma))
    return math.fsum(terms)


def inverse_bound_constant(alpha: float, tau: float) -> float:
    """``(8/alpha) sup_{0 < sigma <= 1/4} sigma^{tau+1} sum k^tau e^{-k sigma}``.

    The ``sigma -> 0`` limit of the weighted sum is ``Gamma(tau+1)``; it is
    included in the supremum. The maximizing grid cell is refined with a
    bounded scalar search.
    """
    if not alpha > 0 or not tau > 1:
        raise ValueError("need alpha > 0 and tau > 1")
    grid = np.geomspace(1e-3, 0.25, 60)
    vals = np.array([_weighted_sum(s, tau) for s in grid])
    i = int(np.argmax(vals))
    best = float(vals[i])
    if 0 < i < len(grid) - 1:
        res = optimize.minimize_scalar(lambda s: -_weighted_sum(s, tau),
                                       bounds=(grid[i - 1], grid[i + 1]), method="bounded")
        best = max(best, -float(res.fun))
    best = max(best, float(special.gamma(tau + 1)))
    return 8.0 / alpha * best


# -- schedule ---------------------------------------------------------------

@dataclass(frozen=True)
class StepParams:
    nu: int
    s: int
    sigma: float
    delta: float
    rho: float
    gamma: float
    log_epsilon: float
    log_th1: float  # log of c1 sigma^{-tau-2} e^{-s delta} delta^{-2}

    @property
    def epsilon(self):
        return _exp(self.log_epsilon)

    @property
    def th1_margin(self):
        """``1 - c1 sigma^{-tau-2} e^{-s delta} delta^{-2}``; nonnegative when the step condition holds."""
        return 1.0 - _exp(self.log_th1)


def _exp(x):
    return math.inf if x > 709 else math.exp(x)


@dataclass
class KamSchedule:
    q: int
    tau: float
    c1: float
    B: float = B_DEFAULT
    steps: list = field(default_factory=list)
    exhausted: bool = False

    @property
    def c2(self):
        return self.B * self.c1

    @property
    def c3(self):
        return self.c2 * (4 * (self.tau + 3) * LN2) ** -3


def build_schedule(q: int, tau: float, c1: float, steps: int, B: float = B_DEFAULT,
                   strict: bool = True) -> KamSchedule:
    """Step parameters for ``nu = 0, ..., steps - 1``.

    Raises
    ------
    DomainExhausted
        Some ``rho_nu`` or ``gamma_nu`` (including the one after the last
        step) is not positive. With ``strict=False`` the schedule is returned
        with ``exhausted`` set instead.
    """
    if q < 1 or not tau > 1 or not c1 > 0 or steps < 1:
        raise ValueError("need q >= 1, tau > 1, c1 > 0, steps >= 1")
    sched = KamSchedule(q=q, tau=tau, c1=c1, B=B)
    rho = gamma = 1.0
    bad = None
    for nu in range(steps):
        s = 2 ** (q + nu) + 1
        sigma = 2.0 ** -(nu + 4)
        delta = 4 * (tau + 3) * (nu + q) * LN2 / s
        common = math.log(c1) - s * delta
        log_eps = math.log(B) + common - (tau + 3) * math.log(sigma) - 3 * math.log(delta)
        log_th1 = common - (tau + 2) * math.log(sigma) - 2 * math.log(delta)
        sched.steps.append(StepParams(nu, s, sigma, delta, rho, gamma, log_eps, log_th1))
        rho -= 4 * delta
        gamma -= 4 * sigma
        if bad is None and (rho <= 0 or gamma <= 0):
            bad = nu
    if bad is not None:
        sched.exhausted = True
        if strict:
            total = sum(p.delta for p in sched.steps[:bad + 1])
            raise DomainExhausted(
                f"domain exhausted after step {bad}: sum of delta = {total:.6g}, "
                f"rho = 1 - 4 * {total:.6g} <= 0", schedule=sched)
    return sched


@dataclass
class ScheduleReport:
    status: str  # "feasible", "infeasible" or "partial"
    sum_delta: float
    sum_sigma: float
    sum_epsilon: float
    tail_delta: float
    tail_sigma: float
    tail_epsilon: float  # nan when no tail bound is available
    th1_ok: bool
    epsilon_chain_ok: bool
    epsilon_decreasing: bool
    failures: list

    @property
    def feasible(self):
        return self.status == "feasible"


def verify_schedule(sched: KamSchedule) -> ScheduleReport:
    """Check the summed step sizes and per-step conditions, tails included.

    Beyond the computed horizon ``N`` the sums are bounded by
    ``delta_nu <= 4(tau+3) ln2 (nu+q) / 2^{q+nu}``, the exact geometric
    ``sigma`` tail, and ``epsilon_nu <= c3 / (3 q nu^2)`` (valid for
    ``q >= 4``). Horizons shorter than ``MIN_HORIZON`` or ``q < 4`` give
    status ``"partial"``.
    """
    steps = sched.steps
    N = len(steps) - 1
    q, tau = sched.q, sched.tau
    part_delta = math.fsum(p.delta for p in steps)
    part_sigma = math.fsum(p.sigma for p in steps)
    part_eps = math.fsum(p.epsilon for p in steps)
    tail_delta = 4 * (tau + 3) * LN2 * (q + N + 2) / 2.0 ** (q + N)
    tail_sigma = 2.0 ** -(N + 4)
    has_tail = len(steps) >= MIN_HORIZON and q >= 4
    tail_eps = sched.c3 / (3 * q) / N if has_tail else math.nan
    sum_delta = part_delta + tail_delta
    sum_sigma = part_sigma + tail_sigma
    sum_eps = part_eps + (tail_eps if has_tail else 0.0)

    failures = []
    if sched.exhausted:
        failures.append("domain exhausted within the horizon")
    if sum_delta > 0.125:
        failures.append(f"sum of delta = {sum_delta:.6g} > 1/8 (delta_0 = {steps[0].delta:.6g})")
    if sum_sigma > 0.125:
        failures.append(f"sum of sigma = {sum_sigma:.6g} > 1/8")
    if sum_eps > 0.5:
        failures.append(f"sum of epsilon >= {sum_eps:.6g} > 1/2")
    th1_ok = all(p.th1_margin >= 0 for p in steps)
    if not th1_ok:
        bad = next(p.nu for p in steps if p.th1_margin < 0)
        failures.append(f"step condition fails at nu = {bad}")
    chain_ok = True
    if q >= 4:
        log_c3 = math.log(sched.c3 / (3 * q))
        chain_ok = all(p.log_epsilon <= log_c3 - 2 * math.log(p.nu) + 1e-12
                       for p in steps[1:])
    eps_dec = all(b.log_epsilon < a.log_epsilon for a, b in zip(steps, steps[1:]))

    if failures:
        status = "infeasible"
    elif not has_tail:
        status = "partial"
    else:
        status = "feasible"
    return ScheduleReport(status, sum_delta, sum_sigma, sum_eps, tail_delta, tail_sigma,
                          tail_eps, th1_ok, chain_ok, eps_dec, failures)


def min_admissible_q(tau: float, c1: float, horizon: int = 40, q_max: int = Q_MAX,
                     B: float = B_DEFAULT) -> int:
    """Smallest ``q <= q_max`` whose schedule verifies as feasible over ``horizon`` steps."""
    if horizon < MIN_HORIZON:
        raise ValueError(f"horizon must be at least {MIN_HORIZON} for the tail bounds")
    for q in range(1, q_max + 1):
        rep = verify_schedule(build_schedule(q, tau, c1, horizon, B=B, strict=False))
        if rep.feasible:
            return q
    raise NotFound(f"no admissible q <= {q_max} for tau = {tau}, c1 = {c1:.6g}")


# -- inverse-bound checks -----------------------------------------------------

@dataclass
class InverseBoundCheck:
    norm_R: float
    norm_F: float
    norm_Fr: float
    norm_Ftheta: float
    bound_F: float
    bound_Fr: float
    bound_Ftheta: float

    @property
    def margins(self):
        return tuple(_margin(n, b) for n, b in ((self.norm_F, self.bound_F),
                                                 (self.norm_Fr, self.bound_Fr),
                                                 (self.norm_Ftheta, self.bound_Ftheta)))

    @property
    def violations(self):
        return sum(m < 0 for m in self.margins)


def _margin(norm, bound):
    """Relative slack ``1 - norm/bound`` (1 when both vanish)."""
    if bound == 0:
        return 1.0 if norm == 0 else -math.inf
    return 1.0 - norm / bound


def inverse_bounds(c1, tau, s, delta, sigma):
    """Bounds on ``F``, ``F_r``, ``F_theta`` for a unit-norm right-hand side."""
    base = c1 * sigma ** (-tau - 1) * math.exp(-s * delta) / delta
    return base, base / delta, base / sigma


def verify_inverse_bounds(R, omega, params: DiophantineParams, rho, gamma, delta, sigma, s,
                          c1=None) -> InverseBoundCheck:
    """Measure ``F = solve(R)`` and its derivatives on the shrunk domains.

    The bounds are scaled by ``|R|_{rho, gamma}``; for unit-norm ``R`` they
    are the a priori bounds, and the solve is linear so the scaling is exact.
    """
    if not (0 < delta < rho / 4 and 0 < sigma < gamma / 4):
        raise ValueError("need 0 < delta < rho/4 and 0 < sigma < gamma/4")
    if c1 is None:
        c1 = inverse_bound_constant(params.alpha, params.tau)
    F = solve(R, omega)
    nR = majorant_norm(R, rho, gamma)
    bF, bFr, bFt = (nR * b for b in inverse_bounds(c1, params.tau, s, delta, sigma))
    return InverseBoundCheck(
        norm_R=nR,
        norm_F=majorant_norm(F, rho - delta, gamma - sigma),
        norm_Fr=majorant_norm(deriv_r(F), rho - 2 * delta, gamma - sigma),
        norm_Ftheta=majorant_norm(deriv_theta(F), rho - delta, gamma - 2 * sigma),
        bound_F=bF, bound_Fr=bFr, bound_Ftheta=bFt)


# -- the iteration ----------------------------------------------------------

@dataclass
class StepReport:
    nu: int
    s: float
    truncation_range: tuple  # (2s, 2(2s-1)) in n units
    n_min: int | None  # lowest degree of the perturbation entering the step
    norm_R: float
    norm_F: float
    norm_P_next: float
    kernel_mass: float
    inverse_bound: float

    @property
    def bound_satisfied(self):
        return self.norm_F <= self.inverse_bound

    @property
    def margin(self):
        return _margin(self.norm_F, self.inverse_bound)


@dataclass
class TransformChain:
    generators: list = field(default_factory=list)
    domains: list = field(default_factory=list)

    def __len__(self):
        return len(self.generators)


def _degree_units(s):
    N = 2 * s
    if N != int(N) or N < 3:
        raise ValueError(f"s = {s} must be a half-integer with 2s >= 3")
    return int(N)


def kam_step(H, s, n_max, omega=None, nu=0, norm_domain=NORM_DOMAIN,
             c1=None, tau=2.0, bound_shrink=BOUND_SHRINK):
    """One truncate-solve-transform cycle at level ``s`` (``n_min(P) >= 2s``).

    The truncation covers ``2s <= n <= 2(2s-1)``. Kernel terms below the top
    degree block the step; those at the top degree are left in the
    perturbation, where second-order terms may still cancel them.

    Returns
    -------
    H_next, F, StepReport

    Raises
    ------
    NonLinearizableError
        A kernel coefficient below the top degree exceeds
        ``KERNEL_RTOL * |P|`` on the norm domain.
    """
    N = _degree_units(s)
    top = 2 * N - 2
    w, P = split_quadratic(H)
    if omega is None:
        omega = w
    rho, gamma = norm_domain
    if len(P) and P.min_degree < N:
        raise ValueError(f"perturbation starts at n = {P.min_degree} < 2s = {N}")
    normP = majorant_norm(P, rho, gamma)
    n_in = P.min_degree if len(P) else None
    kernel, rng = kernel_project(truncate(P, N, top))
    low_kernel = truncate(kernel, N, top - 1)
    kernel_mass = majorant_norm(low_kernel, rho, gamma)
    if len(low_kernel):
        weights = np.abs(low_kernel.coeffs) * rho ** (low_kernel.keys[:, 0] / 2)
        i = int(np.argmax(weights))
        if weights[i] > KERNEL_RTOL * normP:
            n = int(low_kernel.keys[i, 0])
            raise NonLinearizableError(n // 2, complex(low_kernel.coeffs[i]), kernel_mass, step=nu)
        # numerically zero: drop it so the degree bound can hold
        H = sub(H, low_kernel)
        P = sub(P, low_kernel)

    F = solve(rng, omega)
    H_next = kam_step_transform(H, F, rng, n_max, n_expected=top)
    _, P_next = split_quadratic(H_next)

    delta, sigma = bound_shrink
    norm_R = majorant_norm(rng, rho, gamma)
    if c1 is None:
        c1 = inverse_bound_constant(estimate_alpha(omega, tau, ALPHA_SCAN), tau)
    bound = norm_R * inverse_bounds(c1, tau, s, delta, sigma)[0]
    report = StepReport(
        nu=nu, s=s, truncation_range=(N, top),
        n_min=n_in,
        norm_R=norm_R,
        norm_F=majorant_norm(F, rho - delta, gamma - sigma),
        norm_P_next=majorant_norm(P_next, rho, gamma),
        kernel_mass=kernel_mass,
        inverse_bound=bound)
    return H_next, F, report


def kam_run(H, omega, params: DiophantineParams, max_steps, n_max, norm_domain=NORM_DOMAIN,
            s0=None, c1=None, bound_shrink=BOUND_SHRINK):
    """Iterate :func:`kam_step` with ``s_{nu+1} = 2 s_nu - 1``.

    Stops after ``max_steps``, when ``2 s_nu`` leaves the window, or when the
    perturbation's majorant on ``norm_domain`` falls below ``CONVERGED_NORM``.
    ``s0`` defaults to half the lowest degree of the perturbation.

    Returns
    -------
    chain : TransformChain
    reports : list of StepReport
    H : FourierTaylorSeries
        The last transformed Hamiltonian.

    Raises
    ------
    NonLinearizableError
        With ``partial = (chain, reports)`` attached.
    """
    _, P = split_quadratic(H)
    if c1 is None:
        c1 = inverse_bound_constant(params.alpha, params.tau)
    chain, reports = TransformChain(), []
    if not len(P) or majorant_norm(P, *norm_domain) < CONVERGED_NORM:
        return chain, reports, H
    s = P.min_degree / 2 if s0 is None else s0
    for nu in range(max_steps):
        if 2 * s > n_max:
            break
        try:
            H, F, rep = kam_step(H, s, n_max, omega, nu=nu, norm_domain=norm_domain,
                                 c1=c1, tau=params.tau, bound_shrink=bound_shrink)
        except NonLinearizableError as exc:
            exc.partial = (chain, reports)
            raise
        chain.generators.append(F)
        chain.domains.append(tuple(norm_domain))
        reports.append(rep)
        if rep.norm_P_next < CONVERGED_NORM:
            break
        s = 2 * s - 1
    return chain, reports, H


def compose_eval(chain: TransformChain, point, steps=200):
    """Evaluate ``phi_0 o phi_1 o ... o phi_{nu-1}`` at ``point = (r, theta, t)``.

    The innermost map ``phi_{nu-1}`` acts first; each ``phi`` is the time-one
    flow of its generator with ``t`` frozen.
    """
    r, theta, t = (np.asarray(v, dtype=float) for v in point)
    r, theta, t = np.broadcast_arrays(r, theta, t)
    r, theta = r.copy(), theta.copy()
    for F in reversed(chain.generators):
        r, theta = flow_map_numeric(F, (r, theta, t), 1.0, steps)
    return r, theta
