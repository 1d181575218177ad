"""Compare measured solution norms with the a priori inverse bounds on random inputs.

    python scripts/bound_batch.py [--n 200] [--s 10] [--seed 0]
"""
import argparse

import numpy as np

from kamlin.diophantine import DiophantineParams, estimate_alpha
from kamlin.ingest import golden_mean
from kamlin.kam import inverse_bound_constant, verify_inverse_bounds
from kamlin.series import FourierTaylorSeries, majorant_norm


def random_range(rng, n_lo, n_hi, k_max, m_max, terms):
    """Real-symmetric series with no ``(k, m) = (0, 0)`` modes."""
    d = {}
    while len(d) < 2 * terms:
        n = int(rng.integers(n_lo, n_hi + 1))
        k = int(rng.integers(-min(k_max, n), min(k_max, n) + 1))
        if (n - k) % 2:
            continue
        m = int(rng.integers(-m_max, m_max + 1))
        if k == 0 and m == 0:
            continue
        c = complex(rng.normal(), rng.normal())
        d[(n, k, m)], d[(n, -k, -m)] = c, c.conjugate()
    return FourierTaylorSeries.from_dict(d, real_symmetric=True, polynomial_origin=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--s", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    omega = golden_mean()
    params = DiophantineParams(omega, estimate_alpha(omega, 2.0, 1000), 2.0)
    c1 = inverse_bound_constant(params.alpha, params.tau)
    rng = np.random.default_rng(args.seed)
    margins = []
    for _ in range(args.n):
        R = random_range(rng, 2 * args.s, 2 * (2 * args.s - 1), 8, 5, 20)
        R = R / majorant_norm(R, 1, 1)
        margins.append(verify_inverse_bounds(R, omega, params, 1, 1, 0.05, 0.05, args.s,
                                             c1=c1).margins)
    margins = np.array(margins)
    print(f"c1 = {c1:.6g}, {args.n} samples at s = {args.s}")
    for name, col in zip(("F", "F_r", "F_theta"), margins.T):
        print(f"{name:8s} min margin {col.min():.6f}  violations {(col < 0).sum()}")


if __name__ == "__main__":
    main()
