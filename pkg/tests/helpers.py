"""Random-instance generators shared by the test modules."""
import numpy as np

from kamlin.series import FourierTaylorSeries

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def random_series(rng, n_lo, n_hi, kmax, mmax, terms, real=True, parity=True,
                  no_kernel=False, no_k0=False, scale=1.0):
    """Random sparse series; with ``real`` the conjugate partners are added."""
    d = {}
    attempts = 0
    while len(d) < terms and attempts < 50 * terms:
        attempts += 1
        n = int(rng.integers(n_lo, n_hi + 1))
        kk = min(kmax, n) if parity else kmax
        k = int(rng.integers(-kk, kk + 1))
        if parity and (n - k) % 2:
            continue
        m = int(rng.integers(-mmax, mmax + 1))
        if no_kernel and k == 0 and m == 0:
            continue
        if no_k0 and k == 0:
            continue
        c = scale * complex(rng.normal(), rng.normal())
        if real:
            if (k, m) == (0, 0):
                c = complex(c.real)
            d[(n, k, m)] = c
            d[(n, -k, -m)] = c.conjugate() if (k, m) != (0, 0) else c
        else:
            d[(n, k, m)] = c
    return FourierTaylorSeries.from_dict(d, polynomial_origin=parity, real_symmetric=real)


def rel_max_diff(a, b):
    """max |a - b| over coefficients, relative to the largest coefficient seen."""
    diff = a - b
    top = max([abs(c) for _, c in a] + [abs(c) for _, c in b] + [1e-300])
    worst = max([abs(c) for _, c in diff] + [0.0])
    return worst / top
