"""Run the iteration on the constructed linearizable instance and print the ladder.

    python scripts/contraction.py [--steps 3] [--s0 3] [--window 24]
"""
import argparse

from kamlin.diophantine import DiophantineParams, estimate_alpha
from kamlin.ingest import golden_mean
from kamlin.instances import linearizable
from kamlin.kam import NORM_DOMAIN, kam_run
from kamlin.lie import split_quadratic
from kamlin.series import majorant_norm


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=3)
    ap.add_argument("--s0", type=float, default=3)
    ap.add_argument("--window", type=int, default=24)
    args = ap.parse_args()

    omega = golden_mean()
    params = DiophantineParams(omega, estimate_alpha(omega, 2.0, 1000), 2.0)
    H = linearizable(omega, args.window)
    _, P = split_quadratic(H)
    print(f"input  n_min={P.min_degree:3d}  |P|={majorant_norm(P, *NORM_DOMAIN):.3e}")
    _, reports, _ = kam_run(H, omega, params, args.steps, args.window, s0=args.s0)
    for rep in reports:
        lo, hi = rep.truncation_range
        print(f"step {rep.nu}  s={rep.s:g}  n_min(P)={rep.n_min}  R in [{lo},{hi}]  |F|={rep.norm_F:.3e} "
              f"(bound {rep.inverse_bound:.3e})  |P+|={rep.norm_P_next:.3e}")


if __name__ == "__main__":
    main()
