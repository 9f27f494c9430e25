"""Command-line front door.

Subcommands::

    verify         check one (A, At, W) triple against the spectrum bounds
    example-sweep  sweep the analytic 2x2 family over alpha
    figure1        tabulate the admissible-error and error-budget curves
    fourdvar-demo  analyze a 4D-Var layout file and benchmark PCG
    random-suite   run the randomized verification suite

Every command accepts ``--seed`` and ``--output``; CSV goes to stdout when
no output path is given, and ``--plot`` additionally renders a PNG next to
the delimited data. Exit codes: 0 success, 1 input error, 2 mathematical
check violation.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import fourdvar, gallery, instances, plots, solvers, suite, theory
from .linalg import SpdMatrix, read_matrix
from .solvers import DEFAULT_TOL

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VIOLATION = 2


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(row[col]) for col in header) for row in rows]
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=instances.DEFAULT_SEED,
                        help="PRNG seed (default 42)")
    parser.add_argument("--output", default=None,
                        help="CSV output path (default: stdout)")
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help="solver tolerance (default 1e-8)")


def _plot_arg(parser):
    parser.add_argument("--plot", default=None, metavar="PNG",
                        help="also render a figure to this path")


def cmd_verify(args) -> int:
    try:
        a = read_matrix(args.a)
        atilde = read_matrix(args.atilde)
        w_raw = read_matrix(args.w)
        if a.shape != atilde.shape or a.shape != w_raw.shape or a.shape[0] != a.shape[1]:
            raise ValueError(
                f"inconsistent dimensions: A {a.shape} ({args.a}), "
                f"At {atilde.shape} ({args.atilde}), W {w_raw.shape} ({args.w})"
            )
        w = SpdMatrix(w_raw, sym_rtol=1e-9)
        report = theory.verify_spectrum(a, atilde, w, kappa_w=args.kappa_w)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    eigs = report.eigenvalues
    print(f"eigenvalues of preconditioned operator: "
          f"min {eigs[0]:.10g}, max {eigs[-1]:.10g} (n = {len(eigs)})")
    print(f"error norm ||E||_2        : {report.error_norm:.10g}")
    print(f"kappa_2(W)                : {report.kappa_w:.10g}")
    print(f"predicted ball radius     : {report.ball.radius:.10g}")
    print(f"containment               : {'yes' if report.contained else 'VIOLATED'}")
    print(f"admissible error          : {'yes' if report.admissible else 'no'}"
          f" (threshold {theory.admissible_error(report.kappa_w):.10g})")
    print(f"condition number measured : {report.cond_measured:.10g}")
    if report.cond_bound is not None:
        print(f"condition number bound    : {report.cond_bound:.10g}")
    if args.output is not None:
        header = ["lambda_min", "lambda_max", "enorm", "kappa_w", "radius",
                  "cond_measured", "cond_bound_or_nan", "admissible", "contained"]
        row = {
            "lambda_min": eigs[0], "lambda_max": eigs[-1],
            "enorm": report.error_norm, "kappa_w": report.kappa_w,
            "radius": report.ball.radius, "cond_measured": report.cond_measured,
            "cond_bound_or_nan": report.cond_bound if report.cond_bound is not None
            else math.nan,
            "admissible": report.admissible, "contained": report.contained,
        }
        _write_csv(args.output, header, [row])
    if args.plot:
        plots.render_verify(report, args.plot)
    return EXIT_OK if report.contained else EXIT_VIOLATION


SWEEP_HEADER = ["alpha", "variant", "lambda_min", "lambda_max",
                "lambda_min_closed", "lambda_max_closed", "enorm", "kappa_w",
                "radius", "cond_measured", "cond_bound_or_nan", "contained"]


def _sweep_row(variant, alpha):
    v = gallery.ExampleVariant(variant, alpha)
    a, w, atilde = gallery.example_instance(v)
    report = theory.verify_spectrum(a, atilde, w, kappa_w=alpha)
    lam_min_c, lam_max_c = gallery.closed_form_eigs(v)
    return {
        "alpha": alpha, "variant": variant,
        "lambda_min": report.eigenvalues[0], "lambda_max": report.eigenvalues[-1],
        "lambda_min_closed": lam_min_c, "lambda_max_closed": lam_max_c,
        "enorm": report.error_norm, "kappa_w": report.kappa_w,
        "radius": report.ball.radius, "cond_measured": report.cond_measured,
        "cond_bound_or_nan": report.cond_bound if report.cond_bound is not None
        else math.nan,
        "contained": report.contained,
    }


def cmd_example_sweep(args) -> int:
    try:
        if args.alpha_min < 1 or args.alpha_max < args.alpha_min or args.points < 2:
            raise ValueError("need 1 <= alpha-min <= alpha-max and points >= 2")
        variants = [args.variant] if args.variant != "both" else list(gallery.VARIANT_TAGS)
        alphas = np.logspace(math.log10(args.alpha_min), math.log10(args.alpha_max),
                             args.points)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rows = [_sweep_row(variant, float(alpha))
            for alpha in alphas for variant in variants]
    _write_csv(args.output, SWEEP_HEADER, rows)
    if args.plot:
        plots.render_example_sweep(rows, args.plot)
    return EXIT_OK if all(r["contained"] for r in rows) else EXIT_VIOLATION


def cmd_figure1(args) -> int:
    try:
        m_values = [float(tok) for tok in args.m_values.split(",") if tok.strip()]
        if args.kappa_min < 1 or args.kappa_max < args.kappa_min or args.points < 2:
            raise ValueError("need 1 <= kappa-min <= kappa-max and points >= 2")
        if not m_values or any(m <= 1 for m in m_values):
            raise ValueError("every M value must exceed 1")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    header = ["kappa_w", "admissible_error"] + [f"g_M{m:g}" for m in m_values]
    rows = []
    for kappa in np.logspace(math.log10(args.kappa_min), math.log10(args.kappa_max),
                             args.points):
        row = {"kappa_w": float(kappa),
               "admissible_error": theory.admissible_error(float(kappa))}
        for m in m_values:
            row[f"g_M{m:g}"] = theory.error_budget(float(kappa), m)
        rows.append(row)
    _write_csv(args.output, header, rows)
    if args.plot:
        plots.render_figure1(rows, m_values, args.plot)
    return EXIT_OK


FOURDVAR_HEADER = ["precond", "rho", "enorm", "kappa_d", "radius_rho",
                   "radius_enorm", "lambda_min", "lambda_max", "cond_measured",
                   "contained_rho", "contained_enorm", "pcg_iterations",
                   "pcg_converged", "final_relative_residual"]


def _read_blocks(path, count, size):
    from .linalg import _parse_matrix_lines

    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    blocks = []
    rest = lines
    for i in range(count):
        blk, rest = _parse_matrix_lines(rest, f"{path}: block {i}")
        if blk.shape != (size, size):
            raise ValueError(f"{path}: block {i} has shape {blk.shape}, expected ({size}, {size})")
        blocks.append(blk)
    if rest:
        raise ValueError(f"{path}: trailing content after {count} blocks")
    return blocks


def cmd_fourdvar_demo(args) -> int:
    try:
        layout = fourdvar.read_layout(args.layout)
        if args.variant is not None:
            layout = layout.with_variant(args.variant)
        if args.d_file is not None:
            blocks = _read_blocks(args.d_file, layout.n_sw + 1, layout.n)
            cov = fourdvar.BlockCovariances(tuple(SpdMatrix(b) for b in blocks))
        else:
            cov = fourdvar.identity_covariances(layout)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    variants = [fourdvar.VARIANT_ZERO, fourdvar.VARIANT_IDENTITY]
    if layout.variant == fourdvar.VARIANT_CUSTOM:
        variants.append(fourdvar.VARIANT_CUSTOM)
    print(f"layout: n={layout.n} n_sw={layout.n_sw} dim={layout.dim} "
          f"variant={layout.variant}")
    print(f"kappa_2(D) = {cov.condition():.10g}")

    rows = []
    all_contained = True
    traces = {}
    system, _ = solvers.fourdvar_operators(
        layout.with_variant(fourdvar.VARIANT_ZERO), cov)
    rhs = solvers.benchmark_rhs(system, seed=args.seed)
    unprec = solvers.pcg(system, solvers.identity_operator(layout.dim), rhs,
                         tol=args.tol)
    traces["none"] = unprec
    rows.append({
        "precond": "none", "rho": math.nan, "enorm": math.nan,
        "kappa_d": cov.condition(), "radius_rho": math.nan,
        "radius_enorm": math.nan, "lambda_min": math.nan,
        "lambda_max": math.nan, "cond_measured": math.nan,
        "contained_rho": "nan", "contained_enorm": "nan",
        "pcg_iterations": unprec.iterations, "pcg_converged": unprec.converged,
        "final_relative_residual": unprec.residual_norms[-1] / unprec.residual_norms[0],
    })
    print(f"unpreconditioned PCG: {unprec.iterations} iterations, "
          f"converged={unprec.converged}")

    for variant in variants:
        lay = layout if variant == layout.variant else layout.with_variant(variant)
        report = fourdvar.background_spectrum_check(lay, cov)
        sysop, precond = solvers.fourdvar_operators(lay, cov)
        trace = solvers.pcg(sysop, precond, rhs, tol=args.tol)
        traces[variant] = trace
        contained = report.contained_error and (report.contained_rho is not False)
        all_contained = all_contained and contained
        print(f"[{variant}] rho={report.rho if report.rho is not None else math.nan:.6g} "
              f"||E||_2={report.error_norm:.6g} "
              f"radius(rho)={report.ball_rho.radius if report.ball_rho else math.nan:.6g} "
              f"radius(||E||)={report.ball_error.radius:.6g}")
        print(f"[{variant}] spectrum [{report.eigenvalues[0]:.6g}, "
              f"{report.eigenvalues[-1]:.6g}] contained={contained} "
              f"pcg_iterations={trace.iterations} converged={trace.converged}")
        rows.append({
            "precond": variant,
            "rho": report.rho if report.rho is not None else math.nan,
            "enorm": report.error_norm, "kappa_d": report.kappa_d,
            "radius_rho": report.ball_rho.radius if report.ball_rho else math.nan,
            "radius_enorm": report.ball_error.radius,
            "lambda_min": report.eigenvalues[0],
            "lambda_max": report.eigenvalues[-1],
            "cond_measured": report.cond_measured,
            "contained_rho": report.contained_rho if report.contained_rho is not None
            else "nan",
            "contained_enorm": report.contained_error,
            "pcg_iterations": trace.iterations, "pcg_converged": trace.converged,
            "final_relative_residual": trace.residual_norms[-1] / trace.residual_norms[0],
        })
    if args.output is not None:
        _write_csv(args.output, FOURDVAR_HEADER, rows)
    if args.plot:
        plots.render_fourdvar(traces, args.plot)
    return EXIT_OK if all_contained else EXIT_VIOLATION


def cmd_random_suite(args) -> int:
    try:
        result = suite.run_random_suite(count=args.count, max_dim=args.max_dim,
                                        seed=args.seed,
                                        radius_scale=args.radius_scale)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for check in result.checks:
        total = check.passed + check.failed
        print(f"{check.name}: {check.passed}/{total} passed")
        for line in check.failures[:10]:
            print(f"  FAIL {line}")
    print(f"worst containment slack: {result.worst_slack:.6e}")
    if args.output is not None:
        header = ["check", "passed", "failed"]
        rows = [{"check": c.name, "passed": c.passed, "failed": c.failed}
                for c in result.checks]
        _write_csv(args.output, header, rows)
    return EXIT_OK if result.ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wlsprecond",
        description="Preconditioner quality analysis for weighted least-squares",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="verify one (A, At, W) triple")
    p.add_argument("a", help="model matrix file")
    p.add_argument("atilde", help="approximate model matrix file")
    p.add_argument("w", help="weight matrix file")
    p.add_argument("--kappa-w", type=float, default=None,
                   help="analytic kappa_2(W) override")
    _add_common(p)
    _plot_arg(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("example-sweep", help="sweep the analytic 2x2 family")
    p.add_argument("--variant", choices=["plus2", "stable", "both"], default="both")
    p.add_argument("--alpha-min", type=float, default=1.0)
    p.add_argument("--alpha-max", type=float, default=1e4)
    p.add_argument("--points", type=int, default=17)
    _add_common(p)
    _plot_arg(p)
    p.set_defaults(func=cmd_example_sweep)

    p = sub.add_parser("figure1", help="admissible-error and budget curves")
    p.add_argument("--kappa-min", type=float, default=1.0)
    p.add_argument("--kappa-max", type=float, default=1e6)
    p.add_argument("--points", type=int, default=60)
    p.add_argument("--m-values", default="10,100",
                   help="comma-separated condition-number targets")
    _add_common(p)
    _plot_arg(p)
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("fourdvar-demo", help="analyze a 4D-Var layout file")
    p.add_argument("layout", help="layout file")
    p.add_argument("--variant", choices=["zero", "identity"], default=None,
                   help="override the layout's approximation variant")
    p.add_argument("--d-file", default=None,
                   help="file with n_sw + 1 covariance blocks (default: identity)")
    _add_common(p)
    _plot_arg(p)
    p.set_defaults(func=cmd_fourdvar_demo)

    p = sub.add_parser("random-suite", help="run the randomized verification suite")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--max-dim", type=int, default=12)
    p.add_argument("--radius-scale", type=float, default=1.0,
                   help=argparse.SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_random_suite)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
