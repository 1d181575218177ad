"""Continued fractions and finite-horizon estimates of the Diophantine pair (alpha, tau)."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

log = logging.getLogger(__name__)

NEAR_RESONANCE_THRESHOLD = 1e-5
_CHUNK = 1 << 20


@dataclass
class DiophantineParams:
    """Frequency with a Diophantine pair certified for ``1 <= k <= K_verified``.

    ``K_verified = 0`` means nothing has been checked yet.
    """

    omega: float
    alpha: float
    tau: float = 2.0
    K_verified: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.tau > 1:
            raise ValueError("tau must exceed 1")


def continued_fraction(omega: float, depth: int) -> list:
    """Partial quotients of the float ``omega`` (treated as the exact binary rational it is).

    Stops early when the remainder vanishes, which happens for every
    float eventually and immediately for short rationals such as 0.5.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    x = Fraction(omega)
    out = []
    for _ in range(depth):
        a = x.numerator // x.denominator
        out.append(int(a))
        x -= a
        if x == 0:
            if len(out) < depth:
                log.info("continued fraction of %r terminated after %d quotients", omega, len(out))
            break
        x = 1 / x
    return out


def convergents(quotients) -> list:
    """Convergents ``p_n / q_n`` of a partial-quotient list, as Fractions."""
    p0, q0, p1, q1 = 1, 0, quotients[0], 1
    out = [Fraction(p1, q1)]
    for a in quotients[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append(Fraction(p1, q1))
    return out


def _scaled_distances(omega, tau, k_lo, k_hi):
    k = np.arange(k_lo, k_hi + 1, dtype=np.float64)
    x = k * omega
    return k ** tau * np.abs(x - np.round(x))


def _min_scaled_distance(omega, tau, K):
    best = np.inf
    for lo in range(1, K + 1, _CHUNK):
        best = min(best, float(np.min(_scaled_distances(omega, tau, lo, min(K, lo + _CHUNK - 1)))))
    return best


def estimate_alpha(omega: float, tau: float, K: int) -> float:
    """``min_{1 <= k <= K} k^tau dist(k omega, Z)``; nonincreasing in ``K``."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if not tau > 1:
        raise ValueError("tau must exceed 1")
    return _min_scaled_distance(omega, tau, K)


def check_condition(params: DiophantineParams, K: int) -> bool:
    """True iff ``k^tau dist(k omega, Z) >= alpha`` for ``1 <= k <= K``.

    On success ``params.K_verified`` is raised to ``K``.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    ok = _min_scaled_distance(params.omega, params.tau, K) >= params.alpha
    if ok:
        params.K_verified = max(params.K_verified, K)
    return ok


def near_resonant(omega: float, tau: float, K: int,
                  threshold: float = NEAR_RESONANCE_THRESHOLD) -> bool:
    """Flag frequencies whose finite-horizon alpha estimate is numerically negligible."""
    return estimate_alpha(omega, tau, K) < threshold
