"""Cartesian Hamiltonian input: parsing, validation, action-angle conversion.

The input describes ``H = omega (x^2 + y^2)/2 + sum h_{mu nu}(t) x^mu y^nu``
with trigonometric-polynomial coefficients ``h_{mu nu}(t) = sum c_m e^{imt}``.
The quadratic part is implicit; it must already be in the rotated
(Floquet-reduced) form, so explicit quadratic terms are refused.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError
from .series import FourierTaylorSeries

REALITY_TOL = 1e-12
RATIONAL_MAX_DENOMINATOR = 1000

_TOP_FIELDS = {"omega", "tau", "alpha", "terms"}
_TERM_FIELDS = {"mu", "nu", "fourier"}
_MODE_FIELDS = {"m", "re", "im"}


@dataclass(frozen=True)
class Term:
    """One monomial ``h(t) x^mu y^nu`` with ``h(t) = sum c e^{imt}``."""

    mu: int
    nu: int
    fourier: tuple  # ((m, complex), ...) sorted by m

    @property
    def degree(self):
        return self.mu + self.nu


@dataclass(frozen=True)
class HamiltonianSpec:
    omega: float
    terms: tuple = ()
    tau: float = 2.0
    alpha: float | None = None

    def evaluate(self, x, y, t):
        """Cartesian value of the full Hamiltonian (quadratic part included)."""
        x, y, t = (np.asarray(v, dtype=float) for v in (x, y, t))
        total = 0.5 * self.omega * (x * x + y * y) + 0j
        for term in self.terms:
            h = sum(c * np.exp(1j * m * t) for m, c in term.fourier)
            total = total + h * x ** term.mu * y ** term.nu
        return total

    def to_json(self) -> str:
        doc = {
            "omega": self.omega,
            "tau": self.tau,
            "alpha": self.alpha,
            "terms": [
                {"mu": t.mu, "nu": t.nu,
                 "fourier": [{"m": m, "re": c.real, "im": c.imag} for m, c in t.fourier]}
                for t in self.terms
            ],
        }
        return json.dumps(doc, indent=1)


def _number(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{what} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite")
    return float(value)


def _integer(value, what):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{what} must be an integer, got {value!r}")
    return value


def _fields(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise ParseError(f"{where} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"unknown field(s) in {where}: {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ParseError(f"missing field(s) in {where}: {sorted(missing)}")


def rational_match(omega, max_denominator=RATIONAL_MAX_DENOMINATOR):
    """Return ``(p, q)`` if ``omega`` equals ``p/q`` in floating point for some ``q <= max_denominator``."""
    for q in range(1, max_denominator + 1):
        p = round(omega * q)
        if abs(omega - p / q) <= 2 * math.ulp(omega):
            return p, q
    return None


def parse_spec(text, check_omega=True) -> HamiltonianSpec:
    """Parse and validate a JSON Hamiltonian document.

    Raises
    ------
    ParseError
        Invalid JSON, wrong types, missing or unknown fields.
    ValidationError
        Linear or quadratic terms, reality violated, rational ``omega``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    _fields(doc, _TOP_FIELDS, {"omega", "terms"}, "document")
    omega = _number(doc["omega"], "omega")
    tau = _number(doc.get("tau", 2.0), "tau")
    alpha = doc.get("alpha")
    if alpha is not None:
        alpha = _number(alpha, "alpha")
    if not isinstance(doc["terms"], list):
        raise ParseError("terms must be a list")

    terms = []
    for i, raw in enumerate(doc["terms"]):
        _fields(raw, _TERM_FIELDS, _TERM_FIELDS, f"terms[{i}]")
        mu = _integer(raw["mu"], f"terms[{i}].mu")
        nu = _integer(raw["nu"], f"terms[{i}].nu")
        if not isinstance(raw["fourier"], list):
            raise ParseError(f"terms[{i}].fourier must be a list")
        modes = {}
        for j, mode in enumerate(raw["fourier"]):
            where = f"terms[{i}].fourier[{j}]"
            _fields(mode, _MODE_FIELDS, {"m", "re"}, where)
            m = _integer(mode["m"], where + ".m")
            c = complex(_number(mode["re"], where + ".re"), _number(mode.get("im", 0.0), where + ".im"))
            modes[m] = modes.get(m, 0j) + c
        terms.append(Term(mu, nu, tuple(sorted(modes.items()))))

    spec = HamiltonianSpec(omega=omega, terms=tuple(terms), tau=tau, alpha=alpha)
    validate_spec(spec, check_omega=check_omega)
    return spec


def load_spec(path, check_omega=True) -> HamiltonianSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read(), check_omega=check_omega)


def validate_h2(spec: HamiltonianSpec) -> None:
    """The quadratic part must be exactly omega (x^2+y^2)/2, i.e. absent from ``terms``."""
    for t in spec.terms:
        if t.degree == 2:
            raise ValidationError(
                f"explicit quadratic term x^{t.mu} y^{t.nu}: the input must already be "
                "reduced to omega (x^2 + y^2)/2")


def validate_spec(spec: HamiltonianSpec, check_omega=True) -> None:
    if spec.omega == 0:
        raise ValidationError("omega must be nonzero")
    if spec.tau <= 1:
        raise ValidationError("tau must exceed 1")
    if spec.alpha is not None and spec.alpha <= 0:
        raise ValidationError("alpha must be positive")
    if check_omega:
        hit = rational_match(spec.omega)
        if hit is not None:
            raise ValidationError(f"omega = {spec.omega!r} equals {hit[0]}/{hit[1]} in floating point")
    seen = set()
    for t in spec.terms:
        if t.mu < 0 or t.nu < 0:
            raise ValidationError(f"negative exponent in x^{t.mu} y^{t.nu}")
        if t.degree < 2:
            raise ValidationError(f"term x^{t.mu} y^{t.nu} of degree {t.degree} < 2 is forbidden "
                                  "(the origin must be an equilibrium)")
        if (t.mu, t.nu) in seen:
            raise ValidationError(f"duplicate term x^{t.mu} y^{t.nu}")
        seen.add((t.mu, t.nu))
        modes = dict(t.fourier)
        for m, c in modes.items():
            partner = modes.get(-m, 0j).conjugate()
            if abs(c - partner) > REALITY_TOL * max(1.0, abs(c)):
                raise ValidationError(
                    f"h_{{{t.mu}{t.nu}}}(t) is not real: coefficient at m={m} is {c}, "
                    f"conjugate at m={-m} is {partner}")
    validate_h2(spec)


def _angular_coefficients(mu, nu):
    """Fourier coefficients in theta of ``2^{(mu+nu)/2} cos^mu sin^nu``."""
    cos_part = {mu - 2 * a: math.comb(mu, a) / 2 ** mu for a in range(mu + 1)}
    # sin = (e^{i th} - e^{-i th}) / (2i)
    sin_part = {nu - 2 * b: math.comb(nu, b) * (-1) ** b for b in range(nu + 1)}
    sin_scale = (-0.5j) ** nu
    out = {}
    for k1, c1 in cos_part.items():
        for k2, c2 in sin_part.items():
            out[k1 + k2] = out.get(k1 + k2, 0j) + c1 * c2
    norm = 2 ** ((mu + nu) / 2)
    return {k: v * sin_scale * norm for k, v in out.items()}


def to_action_angle(spec: HamiltonianSpec, n_max: int) -> FourierTaylorSeries:
    """Substitute ``x = sqrt(2r) cos th``, ``y = sqrt(2r) sin th``.

    Degree-``j`` Cartesian terms land at ``n = j``; the quadratic part gives
    ``omega`` at ``(2, 0, 0)``. Terms with ``n > n_max`` are dropped.
    """
    if n_max < 3:
        raise ValueError("n_max must be at least 3")
    terms = {(2, 0, 0): complex(spec.omega)}
    for t in spec.terms:
        if t.degree > n_max:
            continue
        ang = _angular_coefficients(t.mu, t.nu)
        for k, a in ang.items():
            if a == 0:
                continue
            for m, c in t.fourier:
                key = (t.degree, k, m)
                terms[key] = terms.get(key, 0j) + a * c
    return FourierTaylorSeries.from_dict(
        terms, n_min=0, n_max=n_max, polynomial_origin=True, real_symmetric=True)


def to_cartesian(P: FourierTaylorSeries, omega: float, tau=2.0, alpha=None) -> HamiltonianSpec:
    """Inverse of :func:`to_action_angle` for a perturbation series.

    ``P`` must satisfy the parity invariant and contain no terms with
    ``n <= 2``; ``omega`` supplies the implicit quadratic part. Uses
    ``r^{n/2} e^{ik th} = ((x+iy)/sqrt2)^p ((x-iy)/sqrt2)^q``, ``p, q = (n +- k)/2``.
    """
    if P.parity_violations():
        raise ValueError("series is not of polynomial origin")
    if len(P) and P.min_degree <= 2:
        raise ValueError("perturbation must start at degree 3")
    coeffs = {}
    for (n, k, m), c in P:
        p, q = (n + k) // 2, (n - k) // 2
        base = c / 2 ** (n / 2)
        for a in range(p + 1):
            ca = math.comb(p, a) * 1j ** a
            for b in range(q + 1):
                cb = math.comb(q, b) * (-1j) ** b
                nu = a + b
                key = (n - nu, nu, m)
                coeffs[key] = coeffs.get(key, 0j) + base * ca * cb
    grouped = {}
    for (mu, nu, m), c in coeffs.items():
        if abs(c) == 0:
            continue
        grouped.setdefault((mu, nu), {})[m] = c
    terms = []
    for (mu, nu), modes in sorted(grouped.items()):
        # symmetrize away rounding so the reality check is exact
        sym = {}
        for m in set(modes) | {-m for m in modes}:
            c = 0.5 * (modes.get(m, 0j) + modes.get(-m, 0j).conjugate())
            if c != 0:
                sym[m] = c
        if sym:
            terms.append(Term(mu, nu, tuple(sorted(sym.items()))))
    return HamiltonianSpec(omega=omega, terms=tuple(terms), tau=tau, alpha=alpha)


def golden_mean() -> float:
    return (math.sqrt(5.0) - 1.0) / 2.0
