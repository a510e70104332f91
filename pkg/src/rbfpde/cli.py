"""Command line: ``rbfpde solve|convergence|dump-cloud --config <path>``.

Exit codes: 0 success, 1 config error, 2 at least one failed cell.
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    ExperimentConfig,
    bundled_configs,
    dump_clouds,
    fit_convergence,
    monotone_until_floor,
    run_experiment,
)
from .errors import ConfigError, FitError

EXIT_OK, EXIT_CONFIG, EXIT_CELL = 0, 1, 2


def _print_rows(report, out=None):
    out = out or sys.stdout
    print(f"{'scheme':<8}{'label':<22}{'L2 rel. error':>15}{'cond':>11}{'time [s]':>10}  status", file=out)
    for r in report.rows:
        err = f"{r['l2_error']:.3e}" if r["l2_error"] is not None else "-"
        cond = f"{r['condition']:.1e}" if r["condition"] is not None else "-"
        status = r["status"] if r["status"] == "ok" else f"{r['status']}: {r['message']}"
        print(f"{r['scheme']:<8}{r['label']:<22}{err:>15}{cond:>11}{r['wall_time']:>10.2f}  {status}",
              file=out)


def cmd_solve(args):
    cfg = ExperimentConfig.load(args.config)
    report = run_experiment(cfg, jobs=args.jobs, seed=args.seed)
    csv_path, json_path = report.write(args.out)
    _print_rows(report)
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_CELL if report.failed else EXIT_OK


def cmd_convergence(args):
    cfg = ExperimentConfig.load(args.config)
    report = run_experiment(cfg, jobs=args.jobs, seed=args.seed)
    for name in dict.fromkeys(r["scheme"] for r in report.rows):
        rows = [r for r in report.rows if r["scheme"] == name]
        try:
            p, res = fit_convergence(rows, loglog=args.loglog)
        except FitError as exc:
            report.fits[name] = {"error": str(exc)}
            continue
        report.fits[name] = {"p": p, "residual": res, "monotone": monotone_until_floor(rows)}
    csv_path, json_path = report.write(args.out)
    _print_rows(report)
    for name, fit in report.fits.items():
        if "p" in fit:
            print(f"{name}: p = {fit['p']:.3f} (fit residual {fit['residual']:.2e}), "
                  f"monotone until floor: {fit['monotone']}")
        else:
            print(f"{name}: {fit['error']}")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_CELL if report.failed else EXIT_OK


def cmd_dump_cloud(args):
    cfg = ExperimentConfig.load(args.config)
    for path in dump_clouds(cfg, args.out or "."):
        print(path)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="rbfpde", description="RBF boundary and domain collocation experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (
        ("solve", cmd_solve, "run every cell of a config and write CSV/JSON reports"),
        ("convergence", cmd_convergence, "run a refinement study and fit log-log rates"),
        ("dump-cloud", cmd_dump_cloud, "export the node clouds of a config as CSV"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True,
                       help=f"config path or bundled name ({', '.join(bundled_configs())})")
        p.add_argument("--out", default=None, help="output directory (default: current)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1, help="cells run concurrently")
        if name == "convergence":
            p.add_argument("--loglog", action="store_true", help="add a log log N term to the fit")
        p.set_defaults(func=fn)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
