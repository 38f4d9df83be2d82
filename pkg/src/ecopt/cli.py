"""Command-line entry point: run experiments, tabulate theory parameters,
solve reference problems, and validate dataset files."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ecopt import data, reporting, sampling, theory
from ecopt.problem import LogRegObjective, solve_reference


def _cmd_run(args) -> int:
    text = Path(args.config).read_text()
    preset = reporting.parse_config(text)
    runs = reporting.run_experiment(preset, args.outdir)
    for r in runs:
        final = r.result.traces[-1]
        print(
            f"{r.method.label} seed={r.seed}: final f-gap {final.f_gap_x:.3e} "
            f"({final.bits_per_worker_cum:.3g} bits/worker) -> {r.csv_path}"
        )
    print(f"plot: {Path(args.outdir) / (preset.name + '.svg')}")
    return 0


def _params_table(params: theory.TheoryParams, as_csv: bool) -> str:
    rows = [
        ("A", params.A),
        ("B", params.B),
        ("C", params.C),
        ("D1", params.D1),
        ("D2", params.D2),
        ("rho", params.rho),
        ("F", params.F),
        ("stepsize_cap", params.stepsize_cap),
    ]
    if as_csv:
        return "parameter,value\n" + "\n".join(f"{k},{v:.17g}" for k, v in rows)
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v:.10g}" for k, v in rows)


def _cmd_calc(args) -> int:
    if args.method == "ecsgd":
        params = theory.params_ecsgd_as(
            args.L, args.Lexp, args.n, args.sigma_star_sq,
            Delta=args.Delta, mu=args.mu,
        )
    elif args.method == "eclsvrg":
        params = theory.params_eclsvrg(
            args.L, args.Lexp, args.n, args.p, Delta=args.Delta, mu=args.mu
        )
    else:
        params = theory.params_msigma(
            args.L, args.max_Li, args.M, args.sigma_sq, args.zeta_star_sq,
            args.n, Delta=args.Delta, mu=args.mu,
        )
    print(_params_table(params, args.csv))
    if args.K:
        c1 = 2.0 * (params.D1 + params.F * params.D2)
        c2 = 6.0 * params.L * params.Delta**2
        a = 2.0 * args.T0
        if args.mu > 0:
            gamma = theory.stepsize_strongly_convex(
                params.h, args.mu, args.K, a, c1, c2
            )
        else:
            gamma = theory.stepsize_convex(params.h, args.K, a, 0.0, c1, c2)
        rhs = theory.bound_rhs(params, gamma, args.K, args.T0, args.mu)
        if args.csv:
            print(f"horizon_stepsize,{gamma:.17g}")
            print(f"bound_rhs,{rhs:.17g}")
        else:
            print(f"horizon_stepsize  {gamma:.10g}")
            print(f"bound_rhs       {rhs:.10g}")
    return 0


def _cmd_solve_ref(args) -> int:
    rows, labels, d = data.load_libsvm(args.dataset)
    shards = data.partition(rows, labels, args.n, args.seed)
    obj = LogRegObjective(shards, args.l2)
    ref = solve_reference(obj, args.tol, max_iter=args.max_iter)
    status = "converged" if ref.converged else "UNCONVERGED"
    print(
        f"{status}: f* = {ref.f_star:.12g}, grad norm = {ref.grad_norm:.3e}, "
        f"{ref.iterations} iterations (d={d}, n={args.n}, m={obj.m})"
    )
    return 0 if ref.converged else 2


def _cmd_parse_check(args) -> int:
    try:
        rows, labels, d = data.load_libsvm(args.dataset)
    except data.LibsvmFormatError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    pos = int((labels > 0).sum())
    print(f"ok: {rows.shape[0]} samples, d={d}, +1 labels: {pos}, "
          f"-1 labels: {rows.shape[0] - pos}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecopt",
        description="Distributed error-compensated compressed SGD simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a key=value config file")
    p_run.add_argument("--outdir", default="results")
    p_run.set_defaults(func=_cmd_run)

    p_calc = sub.add_parser("calc", help="print the theory parameter table")
    p_calc.add_argument("method", choices=("ecsgd", "eclsvrg", "msigma"))
    p_calc.add_argument("--L", type=float, required=True)
    p_calc.add_argument("--Lexp", type=float, default=0.0)
    p_calc.add_argument("--n", type=int, required=True)
    p_calc.add_argument("--p", type=float, default=0.1)
    p_calc.add_argument("--sigma-star-sq", type=float, default=0.0)
    p_calc.add_argument("--max-Li", type=float, default=0.0)
    p_calc.add_argument("--M", type=float, default=0.0)
    p_calc.add_argument("--sigma-sq", type=float, default=0.0)
    p_calc.add_argument("--zeta-star-sq", type=float, default=0.0)
    p_calc.add_argument("--mu", type=float, default=0.0)
    p_calc.add_argument("--Delta", type=float, default=0.0)
    p_calc.add_argument("--K", type=int, default=0,
                        help="also print the horizon stepsize and bound RHS")
    p_calc.add_argument("--T0", type=float, default=1.0)
    p_calc.add_argument("--csv", action="store_true")
    p_calc.set_defaults(func=_cmd_calc)

    p_ref = sub.add_parser("solve-ref", help="solve a dataset to high accuracy")
    p_ref.add_argument("dataset")
    p_ref.add_argument("--n", type=int, default=20)
    p_ref.add_argument("--l2", type=float, default=1e-4)
    p_ref.add_argument("--tol", type=float, default=1e-9)
    p_ref.add_argument("--seed", type=int, default=0)
    p_ref.add_argument("--max-iter", type=int, default=10_000_000)
    p_ref.set_defaults(func=_cmd_solve_ref)

    p_chk = sub.add_parser("parse-check", help="validate a LIBSVM file")
    p_chk.add_argument("dataset")
    p_chk.set_defaults(func=_cmd_parse_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
