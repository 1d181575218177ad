"""Reference Hamiltonians used by the tests, scripts and bundled data files."""
from __future__ import annotations

from .ingest import HamiltonianSpec, Term, golden_mean, to_cartesian
from .lie import lie_series_transform, split_quadratic
from .series import FourierTaylorSeries


def x_cubed(omega=None) -> HamiltonianSpec:
    """``omega (x^2+y^2)/2 + x^3``: nonzero twist at fourth order."""
    omega = golden_mean() if omega is None else omega
    return HamiltonianSpec(omega, (Term(3, 0, ((0, 1 + 0j),)),))


def already_normal(omega=None) -> HamiltonianSpec:
    """``omega (x^2+y^2)/2 + ((x^2+y^2)/2)^2``, i.e. ``omega r + r^2``."""
    omega = golden_mean() if omega is None else omega
    q = ((0, 0.25 + 0j),)
    return HamiltonianSpec(omega, (Term(4, 0, q), Term(2, 2, ((0, 0.5 + 0j),)), Term(0, 4, q)))


def linearizing_generator(eps=0.01) -> FourierTaylorSeries:
    """``eps (2 cos(2 theta - t) + 2 cos t) r^3``; two modes so that no single step inverts it."""
    return FourierTaylorSeries.from_dict(
        {(6, 2, -1): eps, (6, -2, 1): eps, (6, 0, 1): eps, (6, 0, -1): eps},
        polynomial_origin=True, real_symmetric=True)


def linearizable(omega=None, n_max=24, generator=None) -> FourierTaylorSeries:
    """``omega r`` pulled back through the time-one flow of a known generator.

    Every normal-form coefficient vanishes by construction, so the
    iteration must drive the perturbation to zero within the window.
    """
    omega = golden_mean() if omega is None else omega
    G = linearizing_generator() if generator is None else generator
    return lie_series_transform(FourierTaylorSeries.h2(omega), G, n_max)


def linearizable_spec(omega=None, n_max=24, generator=None) -> HamiltonianSpec:
    omega = golden_mean() if omega is None else omega
    _, P = split_quadratic(linearizable(omega, n_max, generator))
    return to_cartesian(P, omega)

