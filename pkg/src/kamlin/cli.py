"""Command-line front end.

Exit codes: 0 success, 2 parse/validation, 3 nonzero twist coefficient,
4 infeasible schedule, 5 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import diophantine as dio
from .errors import (
    DegreeViolation,
    FractionalPoleError,
    NonLinearizableError,
    NotFound,
    ParseError,
    QuadratureError,
    ResonantModeError,
    SmallDivisorUnderflow,
    ValidationError,
)
from .ingest import golden_mean, load_spec, rational_match, to_action_angle, validate_spec
from .kam import (
    KERNEL_RTOL,
    NORM_DOMAIN,
    build_schedule,
    kam_run,
    inverse_bound_constant,
    min_admissible_q,
    verify_schedule,
)
from .lie import deprit_normalize, lie_series_transform, split_quadratic
from .series import kernel_project, majorant_norm, truncate

EXIT_OK, EXIT_PARSE, EXIT_TWIST, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 2, 3, 4, 5
SOLVER_ERRORS = (SmallDivisorUnderflow, ResonantModeError, QuadratureError,
                 DegreeViolation, FractionalPoleError)
STEP_HEADER = ["nu", "s", "n_min", "norm_R", "norm_F", "norm_P_next", "inverse_bound", "margin"]
SCHEDULE_HEADER = ["nu", "s", "delta", "sigma", "epsilon", "th1_margin"]
DEFAULT_K = 1000


# -- output helpers -----------------------------------------------------

def _clean(obj):
    """JSON-safe copy: non-finite floats become null, tuples become lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _summary(command, **parts):
    out = {"command": command, "verdict": None, "A": [], "steps": [],
           "schedule": None, "diophantine": None}
    out.update(parts)
    return out


def _emit(args, summary, rows=None, header=None):
    text = json.dumps(_clean(summary), indent=2, ensure_ascii=False)
    if args.out is None:
        print(text)
        if rows is not None:
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(header)
            w.writerows([[_fmt(v) for v in row] for row in rows])
        return
    path = Path(args.out)
    path.write_text(text + "\n", encoding="utf-8")
    if rows is not None:
        with open(path.with_suffix(".csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([[_fmt(v) for v in row] for row in rows])
    print(f"verdict: {summary['verdict']}")


def _err(msg):
    print(f"kamlin: {msg}", file=sys.stderr)


def _a_table(coeffs):
    return [{"j": j, "re": a.real, "im_residual": abs(a.imag)}
            for j, a in enumerate(coeffs, start=2)]


def _resolve_alpha(omega, tau, alpha, K):
    return alpha if alpha is not None else dio.estimate_alpha(omega, tau, K)


def _parse_omega(text):
    if text in ("golden", "phi"):
        return golden_mean()
    return float(text)


# -- twist detection shared by normalize/verdict ------------------------

def _twist(coeffs, P, rho):
    """First ``A_{2j}`` that is nonzero against the perturbation scale, or None."""
    scale = majorant_norm(P, rho, rho) if len(P) else 0.0
    for j, a in enumerate(coeffs, start=2):
        if abs(a) * rho ** j > KERNEL_RTOL * scale:
            return j, a
    return None


def _twist_verdict(j, order):
    return (f"stable (twist, A_{2 * j}≠0 at j={j}) via Moser's twist theorem; "
            f"normal form computed to finite order {order}")


# -- commands -----------------------------------------------------------

def cmd_normalize(args):
    spec = load_spec(args.input)
    H = to_action_angle(spec, max(args.order, 3))
    coeffs, gens, _ = deprit_normalize(H, args.order)
    _, P = split_quadratic(H)
    # replaying the generators measures how pure the normal form is
    cur = H
    for F in gens:
        cur = lie_series_transform(cur, F, args.order)
    _, nonnormal = kernel_project(truncate(cur, 3, args.order))
    rho, gamma = args.rho_inf, args.gamma_inf
    summary = _summary(
        "normalize",
        A=_a_table(coeffs),
        generators=[{"degree": d, "terms": len(F), "majorant": majorant_norm(F, rho, gamma)}
                    for d, F in enumerate(gens, start=3)],
        kernel_purity_residual=majorant_norm(nonnormal, rho, gamma),
        order=args.order, omega=spec.omega)
    hit = _twist(coeffs, P, rho)
    summary["verdict"] = (_twist_verdict(hit[0], args.order) if hit else
                          f"normal form has no nonzero twist coefficient up to order {args.order}")
    _emit(args, summary)
    return EXIT_OK


def _step_row(rep):
    return [rep.nu, format(rep.s, "g"), rep.n_min, rep.norm_R, rep.norm_F,
            rep.norm_P_next, rep.inverse_bound, rep.margin]


def _step_dict(rep):
    return {"nu": rep.nu, "s": rep.s, "truncation_range": list(rep.truncation_range),
            "n_min": rep.n_min, "norm_R": rep.norm_R, "norm_F": rep.norm_F,
            "norm_P_next": rep.norm_P_next, "kernel_mass": rep.kernel_mass,
            "inverse_bound": rep.inverse_bound, "bound_satisfied": rep.bound_satisfied,
            "margin": rep.margin}


def cmd_kam_run(args):
    spec = load_spec(args.input)
    tau = args.tau if args.tau is not None else spec.tau
    alpha = _resolve_alpha(spec.omega, tau, args.alpha if args.alpha is not None else spec.alpha,
                           args.K)
    params = dio.DiophantineParams(spec.omega, alpha, tau)
    H = to_action_angle(spec, args.window)
    domain = (args.rho_inf, args.gamma_inf)
    _, P = split_quadratic(H)
    initial = majorant_norm(P, *domain)
    c1 = inverse_bound_constant(alpha, tau)
    base = dict(initial_norm=initial, norm_domain=list(domain), window=args.window, c1=c1,
                diophantine={"omega": spec.omega, "alpha": alpha, "tau": tau})
    try:
        chain, reps, _ = kam_run(H, spec.omega, params, args.steps, args.window, domain,
                                 s0=args.s0, c1=c1)
    except NonLinearizableError as exc:
        reps = exc.partial[1] if exc.partial else []
        summary = _summary("kam-run", verdict=_twist_verdict(exc.j, 2 * exc.j),
                           A=[{"j": exc.j, "re": exc.A.real, "im_residual": abs(exc.A.imag)}],
                           steps=[_step_dict(r) for r in reps], **base)
        summary["obstruction"] = {"step": exc.step, "kernel_mass": exc.kernel_mass}
        _emit(args, summary, [_step_row(r) for r in reps], STEP_HEADER)
        return EXIT_TWIST
    final = reps[-1].norm_P_next if reps else initial
    verdict = (f"empirical contraction over {len(reps)} step(s): majorant of the perturbation "
               f"{initial:.6g} -> {final:.6g} on the norm domain (truncated at n <= {args.window})")
    summary = _summary("kam-run", verdict=verdict, steps=[_step_dict(r) for r in reps], **base)
    _emit(args, summary, [_step_row(r) for r in reps], STEP_HEADER)
    return EXIT_OK


def _schedule_dict(sched, rep):
    return {"q": sched.q, "tau": sched.tau, "c1": sched.c1, "B": sched.B, "c2": sched.c2,
            "c3": sched.c3, "horizon": len(sched.steps), "status": rep.status,
            "sum_delta": rep.sum_delta, "sum_sigma": rep.sum_sigma,
            "sum_epsilon": rep.sum_epsilon, "tail_delta": rep.tail_delta,
            "tail_sigma": rep.tail_sigma, "tail_epsilon": rep.tail_epsilon,
            "th1_ok": rep.th1_ok, "epsilon_chain_ok": rep.epsilon_chain_ok,
            "epsilon_decreasing": rep.epsilon_decreasing, "failures": rep.failures,
            "rho_inf_lower": 1 - 4 * rep.sum_delta, "gamma_inf_lower": 1 - 4 * rep.sum_sigma}


def cmd_schedule(args):
    omega = args.omega
    if args.c1 is not None:
        c1, alpha = args.c1, args.alpha
    else:
        alpha = _resolve_alpha(omega, args.tau, args.alpha, args.K)
        c1 = inverse_bound_constant(alpha, args.tau)
    if args.find_min_q:
        try:
            q = min_admissible_q(args.tau, c1, horizon=args.horizon)
        except NotFound as exc:
            _err(str(exc))
            summary = _summary("schedule", verdict=f"infeasible: {exc}",
                               schedule={"tau": args.tau, "c1": c1, "horizon": args.horizon})
            _emit(args, summary)
            return EXIT_INFEASIBLE
    else:
        q = args.q
    sched = build_schedule(q, args.tau, c1, args.horizon, strict=False)
    rep = verify_schedule(sched)
    rows = [[p.nu, p.s, p.delta, p.sigma, p.epsilon, p.th1_margin] for p in sched.steps]
    if rep.status == "feasible":
        verdict = (f"feasible: q = {q} satisfies the step-size sums and per-step conditions "
                   f"over {len(rows)} computed steps plus tail bounds")
    elif rep.status == "partial":
        verdict = (f"partial: no tail bound for epsilon with horizon {len(rows)} and q = {q}; "
                   "computed steps only")
    else:
        verdict = "infeasible: " + "; ".join(rep.failures)
    summary = _summary("schedule", verdict=verdict, schedule=_schedule_dict(sched, rep),
                       diophantine={"omega": omega, "alpha": alpha, "tau": args.tau})
    _emit(args, summary, rows, SCHEDULE_HEADER)
    if rep.status == "infeasible":
        _err(verdict)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _k_ladder(K):
    ladder, k = [], 10
    while k < K:
        ladder.append(k)
        k *= 10
    return ladder + [K]


def _diophantine_dict(omega, tau, K, alpha=None):
    ladder = [{"K": k, "alpha": dio.estimate_alpha(omega, tau, k)} for k in _k_ladder(K)]
    est = ladder[-1]["alpha"]
    params = dio.DiophantineParams(omega, alpha if alpha is not None else est, tau)
    ok = dio.check_condition(params, K)
    return {"omega": omega, "tau": tau, "continued_fraction": dio.continued_fraction(omega, 20),
            "alpha_ladder": ladder, "alpha": params.alpha, "K_verified": params.K_verified,
            "holds": ok, "near_resonant": est < dio.NEAR_RESONANCE_THRESHOLD}


def cmd_diophantine(args):
    hit = rational_match(args.omega)
    if hit is not None:
        _err(f"omega = {args.omega!r} equals {hit[0]}/{hit[1]} in floating point")
        return EXIT_PARSE
    d = _diophantine_dict(args.omega, args.tau, args.K, args.alpha)
    if d["near_resonant"]:
        verdict = f"near-resonant: alpha estimate {d['alpha_ladder'][-1]['alpha']:.3g} at K = {args.K}"
    elif d["holds"]:
        verdict = (f"Diophantine condition with alpha = {d['alpha']:.17g}, tau = {args.tau:g} "
                   f"verified for 1 <= k <= {args.K} only")
    else:
        verdict = f"alpha = {d['alpha']:.17g} violates the condition below k = {args.K}"
    _emit(args, _summary("diophantine", verdict=verdict, diophantine=d))
    return EXIT_OK


def cmd_verdict(args):
    spec = load_spec(args.input, check_omega=False)
    tau = args.tau if args.tau is not None else spec.tau
    alpha = args.alpha if args.alpha is not None else spec.alpha
    hit = rational_match(spec.omega)
    if hit is not None or dio.near_resonant(spec.omega, tau, args.K):
        why = f"omega ≈ {hit[0]}/{hit[1]}" if hit else f"alpha estimate below {dio.NEAR_RESONANCE_THRESHOLD:g} at K = {args.K}"
        summary = _summary("verdict", verdict=f"inconclusive (near-resonant ω): {why}",
                           diophantine={"omega": spec.omega, "tau": tau})
        _emit(args, summary)
        return EXIT_OK
    validate_spec(spec)
    H = to_action_angle(spec, max(args.order, 3))
    coeffs, _, _ = deprit_normalize(H, args.order)
    _, P = split_quadratic(H)
    d = _diophantine_dict(spec.omega, tau, args.K, alpha)
    found = _twist(coeffs, P, args.rho_inf)
    if found:
        summary = _summary("verdict", verdict=_twist_verdict(found[0], args.order),
                           A=_a_table(coeffs), diophantine=d)
        _emit(args, summary)
        return EXIT_TWIST
    if d["holds"]:
        verdict = (f"formally linearizable to order {args.order}; Diophantine verified to "
                   f"K = {args.K}; analytic linearization theorem applies ⇒ stable "
                   f"(finite-order, finite-K statement)")
    else:
        verdict = (f"formally linearizable to order {args.order}; Diophantine condition with "
                   f"alpha = {d['alpha']:.6g} fails below K = {args.K}; inconclusive")
    _emit(args, _summary("verdict", verdict=verdict, A=_a_table(coeffs), diophantine=d))
    return EXIT_OK


# -- argument parsing ---------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _err(message)
        raise SystemExit(EXIT_PARSE)


def _even_order(text):
    v = int(text)
    if v < 4 or v % 2:
        raise argparse.ArgumentTypeError("order must be an even integer >= 4")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser():
    p = _Parser(prog="kamlin", description="Normal forms, KAM steps and stability verdicts "
                "for time-periodic one-degree-of-freedom Hamiltonians.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", help="summary JSON path; tables go next to it as .csv")
        sp.add_argument("--tau", type=float, default=None)
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--K", type=_positive_int, default=DEFAULT_K)

    def domain(sp):
        sp.add_argument("--rho-inf", type=float, default=NORM_DOMAIN[0])
        sp.add_argument("--gamma-inf", type=float, default=NORM_DOMAIN[1])

    sp = sub.add_parser("normalize", help="normal-form coefficients A_2j")
    sp.add_argument("input")
    sp.add_argument("--order", type=_even_order, default=4)
    common(sp)
    domain(sp)
    sp.set_defaults(func=cmd_normalize)

    sp = sub.add_parser("kam-run", help="empirical KAM iteration")
    sp.add_argument("input")
    sp.add_argument("--steps", type=int, default=3)
    sp.add_argument("--s0", type=float, default=None, help="starting level (half-integers allowed)")
    sp.add_argument("--window", type=int, default=24, help="largest degree n kept")
    common(sp)
    domain(sp)
    sp.set_defaults(func=cmd_kam_run)

    sp = sub.add_parser("schedule", help="certify the step-size schedule")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--q", type=_positive_int)
    g.add_argument("--find-min-q", action="store_true")
    sp.add_argument("--c1", type=float, default=None, help="override the computed inverse-bound constant")
    sp.add_argument("--omega", type=_parse_omega, default=golden_mean())
    sp.add_argument("--horizon", type=_positive_int, default=40)
    common(sp)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("diophantine", help="continued fraction and alpha estimates")
    sp.add_argument("--omega", type=_parse_omega, default=golden_mean())
    common(sp)
    sp.set_defaults(func=cmd_diophantine, K=10**4)

    sp = sub.add_parser("verdict", help="stability verdict")
    sp.add_argument("input")
    sp.add_argument("--order", type=_even_order, default=8)
    common(sp)
    domain(sp)
    sp.set_defaults(func=cmd_verdict)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "tau", None) is None and args.command in ("schedule", "diophantine"):
        args.tau = 2.0
    if args.tau is not None and not args.tau > 1:
        _err("tau must exceed 1")
        return EXIT_PARSE
    try:
        return args.func(args)
    except (ParseError, ValidationError, OSError) as exc:
        _err(str(exc))
        return EXIT_PARSE
    except ValueError as exc:
        _err(str(exc))
        return EXIT_PARSE
    except SOLVER_ERRORS as exc:
        _err(f"solver failure: {exc}")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
