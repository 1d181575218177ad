"""Smallest admissible q as a function of the inverse-bound constant.

    python scripts/schedule_scan.py [--tau 2] [--horizon 40]
"""
import argparse

import numpy as np

from kamlin.errors import NotFound
from kamlin.kam import build_schedule, min_admissible_q, verify_schedule


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tau", type=float, default=2.0)
    ap.add_argument("--horizon", type=int, default=40)
    args = ap.parse_args()

    print(f"{'c1':>10}  {'q*':>4}  {'sum delta':>10}  {'sum sigma':>10}  {'sum eps':>10}")
    for c1 in np.logspace(0, 7, 15):
        try:
            q = min_admissible_q(args.tau, c1, args.horizon)
        except NotFound:
            print(f"{c1:10.3g}  none")
            continue
        rep = verify_schedule(build_schedule(q, args.tau, c1, args.horizon))
        print(f"{c1:10.3g}  {q:4d}  {rep.sum_delta:10.4g}  {rep.sum_sigma:10.4g}  "
              f"{rep.sum_epsilon:10.3g}")


if __name__ == "__main__":
    main()
