"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical abort,
4 fitted rates outside the acceptance windows (with --assert-rates).
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .config import ConfigError, parse_config, parse_sweep
from .diagnostics import DecayFitError, decay_fit
from .grid import Grid2D, field_from_phys
from .harness import run_experiment, sweep
from .kernels import check_kernel_bounds
from .lpdecomp import lemma_ratio_diagnostic
from . import report as rpt


def _cmd_run(args) -> int:
    try:
        with open(args.config, "rb") as fh:
            cfg = parse_config(fh.read())
    except (OSError, ConfigError) as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return 2
    if args.no_figures:
        cfg.output.figures = False
    result = run_experiment(cfg, assert_rates=args.assert_rates, verbose=not args.quiet)
    if args.quiet:
        print(result.summary)
    return result.exit_code


def _cmd_sweep(args) -> int:
    try:
        with open(args.spec, "rb") as fh:
            spec = parse_sweep(fh.read())
    except (OSError, ConfigError) as exc:
        print(f"sweep spec error:\n{exc}", file=sys.stderr)
        return 2
    result = sweep(spec, out_dir=args.out, verbose=False)
    print(f"sweep finished: {len(result.points)} points, {result.failures} failures")
    print(f"index: {result.index_path}")
    return 3 if result.failures else 0


def _cmd_kernels_check(args) -> int:
    ts = np.linspace(args.t_min, args.t_max, args.t_count)
    xis = np.linspace(args.xi_min, args.xi_max, args.xi_count)
    report = check_kernel_bounds(ts, xis)
    with open(args.out, "w") as fh:
        for line in report.csv_rows():
            fh.write(line + "\n")
    print(
        f"kernels-check: {report.n_samples} samples, "
        f"{report.n_violations} violations, max ratio {report.max_ratio:.6f}"
    )
    print(f"csv: {args.out}")
    if args.figure:
        fig_path = args.out.rsplit(".", 1)[0] + ".png"
        rpt.kernel_bounds_figure(fig_path, report)
        print(f"figure: {fig_path}")
    return 0 if report.all_pass else 3


def _cmd_lemma_check(args) -> int:
    sigmas = [float(s) for s in args.dilations.split(",") if s.strip()]
    grid = Grid2D(args.nx, args.nx, args.box, args.box)
    X, Y = grid.mesh
    xc, yc = grid.lx / 2.0, grid.ly / 2.0
    rows = ["dilation,alpha,eps,n0,ratio"]
    ratios = []
    for s in sigmas:
        vals = np.exp(-(((X - xc) * s) ** 2 + (Y - yc) ** 2) / 2.0)
        f = field_from_phys(grid, vals)
        ratio = lemma_ratio_diagnostic(f, args.alpha, args.eps, args.n0)
        ratios.append(ratio)
        rows.append(
            f"{s:.17g},{args.alpha:.17g},{args.eps:.17g},{args.n0:.17g},{ratio:.17g}"
        )
    with open(args.out, "w") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"lemma-check ratios: {', '.join(f'{r:.4f}' for r in ratios)}")
    print(f"csv: {args.out}")
    if args.figure:
        fig_path = args.out.rsplit(".", 1)[0] + ".png"
        rpt.lemma_figure(fig_path, sigmas, ratios)
        print(f"figure: {fig_path}")
    return 0


def _cmd_fit(args) -> int:
    try:
        lo, hi = (float(x) for x in args.window.split(":"))
    except ValueError:
        print("window must be lo:hi", file=sys.stderr)
        return 2
    try:
        cols = rpt.read_series_csv(args.csv)
    except OSError as exc:
        print(f"cannot read {args.csv}: {exc}", file=sys.stderr)
        return 2
    if args.column not in cols:
        print(
            f"column {args.column!r} not found; available: {', '.join(cols)}",
            file=sys.stderr,
        )
        return 2
    try:
        fit = decay_fit(list(zip(cols["t"], cols[args.column])), (lo, hi))
    except DecayFitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return 3
    print(
        f"{args.column}: exponent {fit.exponent:+.4f} +- {fit.stderr:.4f}, "
        f"R^2 {fit.r_squared:.4f}, {fit.n_samples} samples in [{lo:g}, {hi:g}]"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mhdlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="execute one configured run")
    pr.add_argument("config")
    pr.add_argument("--assert-rates", action="store_true",
                    help="exit 4 if fitted exponents leave the acceptance windows")
    pr.add_argument("--no-figures", action="store_true")
    pr.add_argument("--quiet", action="store_true")
    pr.set_defaults(func=_cmd_run)

    ps = sub.add_parser("sweep", help="run a Cartesian parameter sweep")
    ps.add_argument("spec")
    ps.add_argument("--out", default="sweep_out")
    ps.set_defaults(func=_cmd_sweep)

    pk = sub.add_parser("kernels-check", help="certify kernel bounds on a grid")
    pk.add_argument("--t-min", type=float, default=0.0)
    pk.add_argument("--t-max", type=float, default=100.0)
    pk.add_argument("--t-count", type=int, default=200)
    pk.add_argument("--xi-min", type=float, default=0.0)
    pk.add_argument("--xi-max", type=float, default=4.0)
    pk.add_argument("--xi-count", type=int, default=200)
    pk.add_argument("--out", default="kernels_check.csv")
    pk.add_argument("--figure", action="store_true")
    pk.set_defaults(func=_cmd_kernels_check)

    pl = sub.add_parser("lemma-check", help="measured mixed-Riesz bound ratios")
    pl.add_argument("--alpha", type=float, default=0.5)
    pl.add_argument("--eps", type=float, default=0.01)
    pl.add_argument("--n0", type=float, default=0.0)
    pl.add_argument("--dilations", default="1,2,4,8")
    pl.add_argument("--nx", type=int, default=256)
    pl.add_argument("--box", type=float, default=16.0 * math.pi)
    pl.add_argument("--out", default="lemma_check.csv")
    pl.add_argument("--figure", action="store_true")
    pl.set_defaults(func=_cmd_lemma_check)

    pf = sub.add_parser("fit", help="power-law fit of one CSV column")
    pf.add_argument("csv")
    pf.add_argument("--column", required=True)
    pf.add_argument("--window", required=True, help="lo:hi")
    pf.set_defaults(func=_cmd_fit)

    return p


def main(argv=None) -> int:
    from ._alloc import tune_allocator

    tune_allocator()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
