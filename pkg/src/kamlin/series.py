"""Sparse Fourier-Taylor series in action-angle variables.

A series is a finite sum

    sum c[n, k, m] * r**(n/2) * exp(1j*k*theta) * exp(1j*m*t)

stored as sorted integer index rows ``(n, k, m)`` and complex coefficients.
Degrees are counted in ``n`` (the power of sqrt(r)), so ``O(r**s)`` means
lowest degree ``n >= 2s``.

Poisson bracket convention: ``{F, G} = F_r G_theta - F_theta G_r``, so that
``{F, omega*r} = -omega * F_theta``.
"""
from __future__ import annotations

import math
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import FractionalPoleError

__all__ = [
    "MonomialIndex",
    "FourierTaylorSeries",
    "add",
    "sub",
    "scale",
    "mul",
    "mul_with_tail",
    "deriv_r",
    "deriv_theta",
    "deriv_t",
    "poisson_bracket",
    "majorant_norm",
    "grid_supnorm",
    "kernel_project",
    "reality_check",
    "prune",
    "truncate",
]

REALITY_RTOL = 1e-12


class MonomialIndex(NamedTuple):
    """Exponent triple for ``r**(n/2) e^{ik theta} e^{im t}``."""

    n: int
    k: int
    m: int


_EMPTY_KEYS = np.zeros((0, 3), dtype=np.int64)
_EMPTY_VALS = np.zeros(0, dtype=np.complex128)


def _cplx(re, im):
    out = np.empty(np.shape(re), dtype=np.complex128)
    out.real = re
    out.imag = im
    return out


def _combine(keys, vals):
    """Sort index rows, merge duplicates, drop exact zeros.

    Groups of three or more contributions are summed with ``math.fsum`` so the
    result does not depend on the order the contributions were produced in.
    Pair sums are order-independent already.
    """
    if len(vals) == 0:
        return _EMPTY_KEYS, _EMPTY_VALS
    order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))
    keys = keys[order]
    vals = vals[order]
    if len(vals) > 1:
        boundary = np.any(keys[1:] != keys[:-1], axis=1)
        starts = np.concatenate(([0], np.flatnonzero(boundary) + 1))
    else:
        starts = np.zeros(1, dtype=np.int64)
    counts = np.diff(np.append(starts, len(vals)))
    out = vals[starts].copy()
    two = counts == 2
    out[two] = vals[starts[two]] + vals[starts[two] + 1]
    for g in np.flatnonzero(counts > 2):
        seg = vals[starts[g]:starts[g] + counts[g]]
        out[g] = complex(math.fsum(seg.real), math.fsum(seg.imag))
    nz = out != 0
    return keys[starts][nz], out[nz]


class FourierTaylorSeries:
    """Immutable sparse series with a degree window and two structural flags.

    Parameters
    ----------
    keys : array_like, shape (N, 3)
        Integer rows ``(n, k, m)``.
    coeffs : array_like, shape (N,)
        Complex coefficients. Duplicated rows are summed, zeros dropped.
    n_min, n_max : int, optional
        Declared degree window (inclusive). ``n_max=None`` is unbounded.
        Every stored index must lie inside it.
    polynomial_origin : bool
        Terms come from a Cartesian polynomial: ``|k| <= n`` and ``n - k`` even.
    real_symmetric : bool
        ``c[n, -k, -m] == conj(c[n, k, m])``, i.e. the function is real.
    """

    __slots__ = ("_keys", "_coeffs", "n_min", "n_max",
                 "polynomial_origin", "real_symmetric", "_dict")

    def __init__(self, keys=None, coeffs=None, n_min=None, n_max=None,
                 polynomial_origin=False, real_symmetric=False, _canonical=False):
        if keys is None:
            keys, coeffs = _EMPTY_KEYS, _EMPTY_VALS
        keys = np.asarray(keys, dtype=np.int64).reshape(-1, 3)
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if len(keys) != len(coeffs):
            raise ValueError("keys and coeffs differ in length")
        if not _canonical:
            keys, coeffs = _combine(keys, coeffs)
        if len(keys) and np.any(keys[:, 0] < 0):
            raise ValueError("negative degree n in series index")
        if n_min is None:
            n_min = 0
        if len(keys):
            lo, hi = int(keys[0, 0]), int(keys[-1, 0])
            if lo < n_min or (n_max is not None and hi > n_max):
                raise ValueError(
                    f"stored degrees [{lo}, {hi}] outside window [{n_min}, {n_max}]")
        keys.setflags(write=False)
        coeffs.setflags(write=False)
        self._keys = keys
        self._coeffs = coeffs
        self.n_min = int(n_min)
        self.n_max = None if n_max is None else int(n_max)
        self.polynomial_origin = bool(polynomial_origin)
        self.real_symmetric = bool(real_symmetric)
        self._dict = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_dict(cls, terms: Mapping, **kwargs) -> "FourierTaylorSeries":
        if not terms:
            return cls(**kwargs)
        keys = np.array([tuple(k) for k in terms.keys()], dtype=np.int64)
        vals = np.array(list(terms.values()), dtype=np.complex128)
        return cls(keys, vals, **kwargs)

    @classmethod
    def monomial(cls, n, k, m, c=1.0, **kwargs) -> "FourierTaylorSeries":
        return cls([(n, k, m)], [c], **kwargs)

    @classmethod
    def zero(cls, **kwargs) -> "FourierTaylorSeries":
        return cls(**kwargs)

    @classmethod
    def h2(cls, omega) -> "FourierTaylorSeries":
        """The quadratic part ``omega * r``."""
        return cls([(2, 0, 0)], [omega], polynomial_origin=True, real_symmetric=True)

    # -- views ------------------------------------------------------------

    @property
    def keys(self) -> np.ndarray:
        return self._keys

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    def as_dict(self) -> dict:
        if self._dict is None:
            self._dict = {
                MonomialIndex(*map(int, key)): complex(c)
                for key, c in zip(self._keys, self._coeffs)
            }
        return self._dict

    def __len__(self):
        return len(self._coeffs)

    def __bool__(self):
        return len(self._coeffs) > 0

    def __iter__(self):
        return iter(self.as_dict().items())

    def __getitem__(self, index) -> complex:
        return self.as_dict().get(tuple(index), 0j)

    def __contains__(self, index):
        return tuple(index) in self.as_dict()

    @property
    def min_degree(self):
        """Lowest stored ``n`` (``None`` for the empty series)."""
        return int(self._keys[0, 0]) if len(self) else None

    @property
    def max_degree(self):
        return int(self._keys[-1, 0]) if len(self) else None

    def degrees(self) -> list:
        return sorted(set(int(n) for n in self._keys[:, 0]))

    def meta(self, **overrides) -> dict:
        out = dict(n_min=self.n_min, n_max=self.n_max,
                   polynomial_origin=self.polynomial_origin,
                   real_symmetric=self.real_symmetric)
        out.update(overrides)
        return out

    def replace(self, keys, coeffs, canonical=False, **overrides):
        return FourierTaylorSeries(keys, coeffs, _canonical=canonical,
                                   **self.meta(**overrides))

    def __repr__(self):
        head = ", ".join(f"{tuple(k)}: {c:.4g}" for k, c in list(self)[:4])
        more = ", ..." if len(self) > 4 else ""
        return (f"FourierTaylorSeries({{{head}{more}}}, "
                f"window=[{self.n_min}, {self.n_max}], terms={len(self)})")

    def __eq__(self, other):
        if not isinstance(other, FourierTaylorSeries):
            return NotImplemented
        return (np.array_equal(self._keys, other._keys)
                and np.array_equal(self._coeffs, other._coeffs))

    __hash__ = None

    # -- checks -----------------------------------------------------------

    def parity_violations(self) -> int:
        """Number of indices breaking ``|k| <= n`` or ``n - k`` even."""
        n, k = self._keys[:, 0], self._keys[:, 1]
        return int(np.count_nonzero((np.abs(k) > n) | ((n - k) % 2 != 0)))

    def validate(self):
        """Check the flag invariants; raise ``ValueError`` on violation."""
        if self.polynomial_origin and self.parity_violations():
            raise ValueError("polynomial_origin flag set but parity invariant broken")
        if self.real_symmetric:
            scale_ = float(np.max(np.abs(self._coeffs))) if len(self) else 0.0
            if reality_check(self) > REALITY_RTOL * max(scale_, 1e-300):
                raise ValueError("real_symmetric flag set but coefficients are not conjugate-symmetric")
        return self

    # -- evaluation -------------------------------------------------------

    def __call__(self, r, theta, t, sqrt_r=None):
        return self.evaluate(r, theta, t, sqrt_r=sqrt_r)

    def evaluate(self, r, theta, t, sqrt_r=None):
        """Evaluate at (broadcastable) points.

        ``sqrt_r`` overrides ``sqrt(r)``, which is how complex radii are
        sampled: the branch of the square root is the caller's choice.
        """
        if sqrt_r is None:
            sqrt_r = np.sqrt(np.asarray(r, dtype=float))
        sqrt_r, theta, t = np.broadcast_arrays(
            np.asarray(sqrt_r), np.asarray(theta), np.asarray(t))
        shape = sqrt_r.shape
        if not len(self):
            return np.zeros(shape, dtype=complex)[()]
        sq = sqrt_r.reshape(-1, 1)
        th = theta.reshape(-1, 1)
        tt = t.reshape(-1, 1)
        n, k, m = self._keys[:, 0], self._keys[:, 1], self._keys[:, 2]
        basis = sq ** n * np.exp(1j * (k * th + m * tt))
        return (basis @ self._coeffs).reshape(shape)[()]

    # -- operators --------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, FourierTaylorSeries):
            return add(self, other)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, FourierTaylorSeries):
            return sub(self, other)
        return NotImplemented

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return scale(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return scale(self, 1.0 / other)
        return NotImplemented


Series = FourierTaylorSeries


def _join_max(a, b):
    return None if a is None or b is None else max(a, b)


def add(a: FourierTaylorSeries, b: FourierTaylorSeries) -> FourierTaylorSeries:
    """Coefficient-wise sum; window is the union, flags are AND-ed."""
    keys = np.concatenate([a.keys, b.keys])
    vals = np.concatenate([a.coeffs, b.coeffs])
    return FourierTaylorSeries(
        keys, vals,
        n_min=min(a.n_min, b.n_min), n_max=_join_max(a.n_max, b.n_max),
        polynomial_origin=a.polynomial_origin and b.polynomial_origin,
        real_symmetric=a.real_symmetric and b.real_symmetric)


def sub(a, b):
    return add(a, scale(b, -1.0))


def scale(a: FourierTaylorSeries, c) -> FourierTaylorSeries:
    if c == 0:
        return FourierTaylorSeries(**a.meta())
    c = complex(c)
    real = a.real_symmetric and c.imag == 0
    if c.imag == 0:
        vals = _cplx(a.coeffs.real * c.real, a.coeffs.imag * c.real)
    else:
        vals = a.coeffs * c
    return a.replace(a.keys, vals, canonical=bool(np.all(vals != 0)), real_symmetric=real)


def _pair_products(a, b, shift, n_lo, n_hi, bracket):
    """All pairwise products of terms with output degree inside the window.

    Returns kept (keys, vals) and the l1 mass of the discarded products.
    """
    out_keys, out_vals = [], []
    tail = 0.0
    if not len(a) or not len(b):
        return _EMPTY_KEYS, _EMPTY_VALS, tail
    bn = b.keys[:, 0]
    babs = np.abs(b.coeffs)
    a_deg = a.keys[:, 0]
    for na in np.unique(a_deg):
        rows = a_deg == na
        ka, ca = a.keys[rows], a.coeffs[rows]
        lo = n_lo - na - shift
        hi = np.inf if n_hi is None else n_hi - na - shift
        i0 = np.searchsorted(bn, lo, side="left")
        i1 = len(bn) if hi == np.inf else np.searchsorted(bn, hi, side="right")
        if n_hi is not None:
            tail += float(np.sum(np.abs(ca)) * np.sum(babs[i1:]))
        tail += float(np.sum(np.abs(ca)) * np.sum(babs[:i0]))
        if i1 <= i0:
            continue
        kb, cb = b.keys[i0:i1], b.coeffs[i0:i1]
        keys = ka[:, None, :] + kb[None, :, :]
        keys[..., 0] += shift
        # Real arithmetic keeps the product bitwise commutative (no fused ops).
        ar, ai = ca.real[:, None], ca.imag[:, None]
        br, bi = cb.real[None, :], cb.imag[None, :]
        re = ar * br - ai * bi
        im = ar * bi + ai * br
        if bracket:
            half = 0.5 * (ka[:, None, 0] * kb[None, :, 1] - ka[:, None, 1] * kb[None, :, 0])
            re, im = -im * half, re * half
            keep = half != 0
            keys, re, im = keys[keep], re[keep], im[keep]
        vals = _cplx(re, im)
        out_keys.append(keys.reshape(-1, 3))
        out_vals.append(vals.reshape(-1))
    if not out_keys:
        return _EMPTY_KEYS, _EMPTY_VALS, tail
    return np.concatenate(out_keys), np.concatenate(out_vals), tail


def mul_with_tail(a, b, n_max, n_min=0):
    """Truncated product plus the l1 mass of the discarded products.

    The tail value is the coefficient majorant of the dropped terms on the
    unit domain (rho = 1, gamma = 0) before any cancellation among them.
    """
    keys, vals, tail = _pair_products(a, b, 0, n_min, n_max, bracket=False)
    keys, vals = _combine(keys, vals)
    out = FourierTaylorSeries(
        keys, vals, n_min=n_min, n_max=n_max, _canonical=True,
        polynomial_origin=a.polynomial_origin and b.polynomial_origin,
        real_symmetric=a.real_symmetric and b.real_symmetric)
    return out, tail


def mul(a: FourierTaylorSeries, b: FourierTaylorSeries, n_max: int,
        n_min: int = 0) -> FourierTaylorSeries:
    """Product truncated to degrees ``n_min <= n <= n_max``."""
    if n_max is None:
        raise ValueError("mul needs a finite n_max")
    return mul_with_tail(a, b, n_max, n_min)[0]


def deriv_r(a: FourierTaylorSeries) -> FourierTaylorSeries:
    """d/dr: ``c at (n,k,m) -> c*n/2 at (n-2,k,m)``.

    Raises
    ------
    FractionalPoleError
        If ``a`` has an ``n = 1`` term (its derivative is ``r**(-1/2)``).
    """
    n = a.keys[:, 0]
    if np.any(n == 1):
        bad = tuple(int(x) for x in a.keys[np.flatnonzero(n == 1)[0]])
        raise FractionalPoleError(f"r-derivative of term {bad} is singular at r = 0")
    keep = n >= 2
    keys = a.keys[keep].copy()
    vals = a.coeffs[keep] * (keys[:, 0] / 2.0)
    keys[:, 0] -= 2
    # |k| <= n can fail after the shift, so the parity flag is not kept.
    return FourierTaylorSeries(
        keys, vals, n_min=max(a.n_min - 2, 0),
        n_max=None if a.n_max is None else max(a.n_max - 2, 0),
        real_symmetric=a.real_symmetric, _canonical=True)


def deriv_theta(a: FourierTaylorSeries) -> FourierTaylorSeries:
    """d/dtheta: multiply by ``i*k``."""
    vals = a.coeffs * (1j * a.keys[:, 1])
    keep = vals != 0
    return a.replace(a.keys[keep], vals[keep], canonical=True)


def deriv_t(a: FourierTaylorSeries) -> FourierTaylorSeries:
    """d/dt: multiply by ``i*m``."""
    vals = a.coeffs * (1j * a.keys[:, 2])
    keep = vals != 0
    return a.replace(a.keys[keep], vals[keep], canonical=True)


def poisson_bracket(F: FourierTaylorSeries, G: FourierTaylorSeries,
                    n_max=None, n_min=None) -> FourierTaylorSeries:
    """``{F, G} = F_r G_theta - F_theta G_r`` truncated to the window.

    Two monomials bracket to a single monomial with the integer factor
    ``(i/2)(n_F k_G - k_F n_G)``, so the computation never forms the
    derivative series and antisymmetry holds coefficient-wise exactly.
    """
    for s in (F, G):
        if len(s) and np.any(s.keys[:, 0] == 1):
            raise FractionalPoleError("bracket argument has an n = 1 term; its r-derivative is singular")
    if n_min is None:
        n_min = max(F.n_min + G.n_min - 2, 0)
    if n_max is None and F.n_max is not None and G.n_max is not None:
        n_max = F.n_max + G.n_max - 2
    if _is_action_monomial(G) or _is_action_monomial(F):
        return _bracket_with_action_monomial(F, G, n_min, n_max)
    keys, vals, _ = _pair_products(F, G, -2, n_min, n_max, bracket=True)
    keys, vals = _combine(keys, vals)
    return FourierTaylorSeries(
        keys, vals, n_min=n_min, n_max=n_max, _canonical=True,
        polynomial_origin=F.polynomial_origin and G.polynomial_origin,
        real_symmetric=F.real_symmetric and G.real_symmetric)


def _is_action_monomial(a):
    return len(a) == 1 and a.keys[0, 1] == 0 and a.keys[0, 2] == 0 and a.keys[0, 0] >= 2


def _bracket_with_action_monomial(F, G, n_min, n_max):
    # {F, c r^j} = -c j r^(j-1) F_theta, and {c r^j, G} = c j r^(j-1) G_theta
    if _is_action_monomial(G):
        other, mono, sign = F, G, -1.0
    else:
        other, mono, sign = G, F, 1.0
    n, c = int(mono.keys[0, 0]), complex(mono.coeffs[0])
    d = scale(deriv_theta(other), sign * c * (n / 2.0))
    keys = d.keys.copy()
    keys[:, 0] += n - 2
    keep = keys[:, 0] >= n_min
    if n_max is not None:
        keep &= keys[:, 0] <= n_max
    keys, vals = keys[keep], d.coeffs[keep]
    nz = vals != 0
    return FourierTaylorSeries(
        keys[nz], vals[nz], n_min=n_min, n_max=n_max, _canonical=True,
        polynomial_origin=F.polynomial_origin and G.polynomial_origin,
        real_symmetric=F.real_symmetric and G.real_symmetric)


def majorant_norm(a: FourierTaylorSeries, rho: float, gamma: float) -> float:
    """``sum |c| rho**(n/2) exp(|k| gamma)``, an upper bound of the sup-norm on D(rho, gamma)."""
    if rho <= 0 or gamma < 0:
        raise ValueError("majorant_norm needs rho > 0 and gamma >= 0")
    if not len(a):
        return 0.0
    n, k = a.keys[:, 0], a.keys[:, 1]
    w = np.exp(0.5 * n * math.log(rho) + np.abs(k) * gamma)
    return float(np.sum(np.abs(a.coeffs) * w))


def grid_supnorm(a: FourierTaylorSeries, rho: float, gamma: float,
                 samples: int = 16) -> float:
    """Largest sampled modulus on the boundary of D(rho, gamma).

    Samples ``sqrt(r) = sqrt(rho) e^{i phi}``, ``Im theta = +-gamma`` and real
    ``Re theta``, ``t`` on uniform grids. Always a lower bound of the true
    sup-norm, hence never above :func:`majorant_norm`.
    """
    if samples < 4:
        raise ValueError("grid_supnorm needs at least 4 samples per dimension")
    if not len(a):
        return 0.0
    grid = np.arange(samples) * (2 * np.pi / samples)
    phi, sgn, re_th, tt = np.meshgrid(grid, np.array([-1.0, 1.0]), grid, grid,
                                      indexing="ij")
    sq = math.sqrt(rho) * np.exp(1j * phi.ravel())
    th = re_th.ravel() + 1j * gamma * sgn.ravel()
    tt = tt.ravel()
    best = 0.0
    chunk = max(1, 2_000_000 // max(len(a), 1))
    for i in range(0, len(sq), chunk):
        vals = a.evaluate(None, th[i:i + chunk], tt[i:i + chunk], sqrt_r=sq[i:i + chunk])
        best = max(best, float(np.max(np.abs(vals))))
    return best


def kernel_project(a: FourierTaylorSeries):
    """Split into the ``(k, m) = (0, 0)`` part and the rest."""
    ker = (a.keys[:, 1] == 0) & (a.keys[:, 2] == 0)
    kernel = a.replace(a.keys[ker], a.coeffs[ker], canonical=True)
    rng = a.replace(a.keys[~ker], a.coeffs[~ker], canonical=True)
    return kernel, rng


def reality_check(a: FourierTaylorSeries) -> float:
    """``max |c[n,k,m] - conj(c[n,-k,-m])|`` over all indices (0 for a real function)."""
    if not len(a):
        return 0.0
    d = a.as_dict()
    worst = 0.0
    for (n, k, m), c in d.items():
        partner = d.get((n, -k, -m), 0j)
        worst = max(worst, abs(c - partner.conjugate()))
    return worst


def prune(a: FourierTaylorSeries, eps: float = 0.0) -> FourierTaylorSeries:
    """Drop coefficients with ``|c| < eps`` (``eps = 0`` keeps everything)."""
    if eps <= 0:
        return a
    keep = np.abs(a.coeffs) >= eps
    return a.replace(a.keys[keep], a.coeffs[keep], canonical=True)


def truncate(a: FourierTaylorSeries, n_lo=None, n_hi=None) -> FourierTaylorSeries:
    """Keep terms with ``n_lo <= n <= n_hi``; the window shrinks accordingly."""
    n = a.keys[:, 0]
    keep = np.ones(len(n), dtype=bool)
    lo = a.n_min if n_lo is None else max(n_lo, a.n_min)
    hi = a.n_max if n_hi is None else (n_hi if a.n_max is None else min(n_hi, a.n_max))
    keep &= n >= lo
    if hi is not None:
        keep &= n <= hi
    if hi is not None and hi < lo:
        hi = lo
    return a.replace(a.keys[keep], a.coeffs[keep], canonical=True, n_min=lo, n_max=hi)


def from_terms(terms: Iterable, **kwargs) -> FourierTaylorSeries:
    """Build a series from ``((n, k, m), c)`` pairs."""
    terms = list(terms)
    if not terms:
        return FourierTaylorSeries(**kwargs)
    keys = np.array([t[0] for t in terms], dtype=np.int64)
    vals = np.array([t[1] for t in terms], dtype=np.complex128)
    return FourierTaylorSeries(keys, vals, **kwargs)
