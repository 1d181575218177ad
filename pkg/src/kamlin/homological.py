"""Mode-wise solution of ``{F, omega r} + F_t = R``.

With ``{F, omega r} = -omega F_theta`` each mode decouples:
``i (m - k omega) F_{nkm} = R_{nkm}``. The ``(k, m) = (0, 0)`` modes form the
kernel and must be split off by the caller.
"""
from __future__ import annotations

import cmath
import math
import warnings

import numpy as np
from scipy import integrate

from .errors import QuadratureError, ResonantModeError, SmallDivisorUnderflow
from .series import FourierTaylorSeries, _cplx, deriv_t, poisson_bracket, sub

DIVISOR_FLOOR = 1e-13


def divisors(keys: np.ndarray, omega: float) -> np.ndarray:
    """``m - k omega`` for each row ``(n, k, m)``."""
    return keys[:, 2] - keys[:, 1] * omega


def solve(R: FourierTaylorSeries, omega: float) -> FourierTaylorSeries:
    """Zero-mean generator ``F`` with ``{F, omega r} + F_t = R``.

    Raises
    ------
    ResonantModeError
        ``R`` carries a ``(k, m) = (0, 0)`` term.
    SmallDivisorUnderflow
        Some ``|m - k omega|`` is below ``DIVISOR_FLOOR``.
    """
    keys, c = R.keys, R.coeffs
    if not len(keys):
        return R.replace(keys, c, canonical=True)
    ker = (keys[:, 1] == 0) & (keys[:, 2] == 0)
    if np.any(ker):
        idx = tuple(int(v) for v in keys[np.argmax(ker)])
        raise ResonantModeError(f"kernel mode {idx} passed to the homological solver")
    d = divisors(keys, omega)
    small = np.abs(d) < DIVISOR_FLOOR
    if np.any(small):
        i = int(np.argmax(small))
        raise SmallDivisorUnderflow(keys[i], float(d[i]))
    # c / (i d) = (Im c - i Re c) / d; real arithmetic keeps conjugate pairs exact
    vals = _cplx(c.imag / d, -c.real / d)
    return R.replace(keys, vals, canonical=True)


def residual(F: FourierTaylorSeries, R: FourierTaylorSeries, omega: float) -> FourierTaylorSeries:
    """Defect ``{F, omega r} + F_t - R``."""
    h2 = FourierTaylorSeries.h2(omega)
    lhs = poisson_bracket(F, h2, n_min=F.n_min, n_max=F.n_max) + deriv_t(F)
    return sub(lhs, R)


def divisor_lower_bound(k: int, alpha: float, tau: float) -> float:
    """``4 alpha / |k|^tau``, a lower bound of ``|1 - e^{2 pi i k omega}|`` under the Diophantine condition."""
    if k == 0:
        raise ValueError("k must be nonzero")
    return 4.0 * alpha / abs(k) ** tau


def _mode_profiles(R, r):
    """For each angular index ``k``: arrays ``(m, amplitude)`` with ``r`` substituted."""
    out = {}
    for (n, k, m), c in R:
        prof = out.setdefault(k, {})
        prof[m] = prof.get(m, 0j) + c * r ** (n / 2)
    return {k: (np.array(list(p)), np.array(list(p.values()))) for k, p in out.items()}


def _quad(f, a, b, epsrel, epsabs):
    if b < a:
        # complex_func mishandles reversed limits
        val, err = _quad(f, b, a, epsrel, epsabs)
        return -val, err
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, complex_func=True, epsabs=epsabs,
                                      epsrel=epsrel, limit=400)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from None
    err = abs(err[0]) + abs(err[1]) if isinstance(err, tuple) else abs(err)
    return val, err


def integral_formula_eval(R: FourierTaylorSeries, omega: float, t: float, theta: float,
                          r: float, epsrel: float = 1e-10) -> complex:
    """Periodic solution through the variation-of-constants integral.

    For each ``k`` the profile ``R_k(s)`` solves ``F_k' - i k omega F_k = R_k``;
    the integration constant is fixed by ``2 pi``-periodicity in time. Only
    ``k != 0`` modes are covered. Serves as an oracle for :func:`solve`.
    """
    if len(R) and np.any(R.keys[:, 1] == 0):
        raise ValueError("integral formula covers k != 0 modes only")
    total, scale, errors = 0j, 0.0, 0.0
    for k, (ms, amps) in _mode_profiles(R, r).items():
        def g(s, ms=ms, amps=amps, k=k):
            return complex(np.sum(amps * np.exp(1j * (ms - k * omega) * s)))
        # absolute floor well below the relative target of the integrand size
        epsabs = 1e-2 * epsrel * float(np.sum(np.abs(amps)))
        i_t, e1 = _quad(g, 0.0, t, epsrel, epsabs) if t != 0 else (0j, 0.0)
        i_p, e2 = _quad(g, -2 * math.pi, 0.0, epsrel, epsabs)
        factor = 1.0 / (1.0 - cmath.exp(2j * math.pi * k * omega))
        phase = cmath.exp(1j * k * (omega * t + theta))
        part = phase * (i_t + factor * i_p)
        total += part
        errors += e1 + abs(factor) * e2
        # tolerance is relative to the L1 size of the integrands, so that
        # cancellation inside an integral is not reported as a failure
        scale += float(np.sum(np.abs(amps))) * (abs(t) + 2 * math.pi * abs(factor))
    if errors > epsrel * max(scale, 1e-300):
        raise QuadratureError(f"quadrature error {errors:.2e} above tolerance")
    return total
