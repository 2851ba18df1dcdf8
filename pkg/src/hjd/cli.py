"""Command-line front end.

Exit codes: 0 success, 1 usage/config/input error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .condexp import check_f_floor
from .config import RunConfig
from .estimators import select_g, select_sigma2
from .exceptions import ConfigError, HJDError, ParameterError
from .harness import a2_pipeline, calibrate_kappa, convergence_probe, run_mise
from .hawkes import fit_hawkes_mle, simulate_hawkes, validate_params
from .io import (header_line, read_jumps_csv, read_path_csv, write_csv, write_json,
                 write_jumps_csv, write_path_csv)
from .projection import Interval, data_interval
from .sde import simulate_path

RISK_COLUMNS = ["model", "delta", "n", "target", "estimator", "mean", "std", "n_rep", "failures"]
KAPPA_COLUMNS = ["model", "delta", "n", "target", "kappa", "adaptive_mean", "adaptive_std",
                 "oracle_mean", "median_dim", "near_min", "failures"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class Context:
    def __init__(self, args):
        self.args = args
        cfg = RunConfig.load(args.config) if args.config else RunConfig.defaults()
        if args.seed is not None:
            cfg = cfg.override("grid.seed", args.seed)
        if args.model is not None:
            cfg = cfg.override("model.name", args.model)
        self.cfg = cfg
        self.out = Path(args.out if args.out is not None else cfg["experiment.output_dir"])
        jobs = args.jobs if args.jobs is not None else int(os.environ.get("HJD_JOBS", "1"))
        if jobs < 1:
            raise UsageError("--jobs must be >= 1")
        self.jobs = jobs

    @property
    def seed(self):
        return self.cfg["grid.seed"]

    def header(self):
        return header_line(__version__, self.cfg.hash(), self.seed)

    def meta(self):
        return {"tool": f"hjd {__version__}", "config": self.cfg.hash(), "seed": self.seed}

    def load_or_simulate(self, need_jumps=False):
        a = self.args
        if getattr(a, "input", None):
            jumps = read_jumps_csv(a.jumps) if getattr(a, "jumps", None) else None
            if need_jumps and jumps is None:
                raise UsageError("this command needs the jump times of the counting process (--jumps)")
            return read_path_csv(a.input, jumps)
        c = self.cfg
        return simulate_path(c.model(), c.hawkes(), c["grid.delta"], c["grid.n"], c["grid.x0"],
                             c.lambda0(), c["grid.seed"], burn_in=c["hawkes.burn_in"])

    def interval(self, path):
        iv = self.cfg["estimation.interval"]
        return Interval(*iv) if iv is not None else data_interval(path)

    def eval_grid(self, iv):
        return np.linspace(iv.lo, iv.hi, self.cfg["nw.grid_points"])


def cmd_simulate(ctx):
    path = ctx.load_or_simulate()
    write_path_csv(ctx.out / "path.csv", path, ctx.header())
    write_jumps_csv(ctx.out / "jumps.csv", path.jumps, ctx.header())


def _fit_cmd(ctx, which):
    path = ctx.load_or_simulate()
    iv = ctx.interval(path)
    est = ctx.cfg.estimation()
    fit = select_sigma2(path, iv, est) if which == "sigma2" else select_g(path, iv, est)
    write_json(ctx.out / f"{which}_fit.json", fit.to_dict(), ctx.meta())
    grid = ctx.eval_grid(iv)
    write_csv(ctx.out / f"{which}_table.csv", ["x", "value"], zip(grid, fit(grid)), ctx.header())


def cmd_fit_sigma(ctx):
    _fit_cmd(ctx, "sigma2")


def cmd_fit_g(ctx):
    _fit_cmd(ctx, "g")


def cmd_fit_a(ctx):
    path = ctx.load_or_simulate(need_jumps=True)
    if path.jumps is None:
        raise UsageError("this command needs the jump times of the counting process (--jumps)")
    cfg = ctx.cfg
    f0 = cfg["nw.f0"] if cfg["nw.f0"] is not None else float(np.sum(cfg["hawkes.zeta"]))
    res = a2_pipeline(path, cfg.estimation(), cfg["experiment.stride"], f0,
                      cfg["estimation.interval"], cfg["nw.bandwidths"], cfg["nw.grid_points"])
    check_f_floor(res.f_hat, res.grid, f0)
    write_csv(ctx.out / "a2_table.csv", ["x", "value"], zip(res.grid, res.a2), ctx.header())
    write_csv(ctx.out / "f_table.csv", ["x", "value"], zip(res.grid, res.f_values), ctx.header())
    write_json(ctx.out / "a2_fits.json",
               {"sigma2": res.sigma2.to_dict(), "g": res.g.to_dict(), "hawkes": res.hawkes.to_dict(),
                "bandwidth": res.f_hat.h, "f0": f0}, ctx.meta())


def cmd_hawkes_mle(ctx):
    a = ctx.args
    cfg = ctx.cfg
    if a.jumps:
        jumps = read_jumps_csv(a.jumps)
        horizon = a.horizon if a.horizon is not None else float(jumps.times[-1]) if len(jumps) else 0.0
    else:
        hp = cfg.hawkes()
        validate_params(hp)
        horizon = a.horizon if a.horizon is not None else cfg["grid.delta"] * cfg["grid.n"]
        jumps = simulate_hawkes(hp, horizon, cfg.lambda0(), seed=cfg["grid.seed"])
    fh = fit_hawkes_mle(jumps, horizon)
    write_json(ctx.out / "hawkes_fit.json", fh.to_dict(), ctx.meta())


def cmd_mise(ctx):
    rep = run_mise(ctx.cfg.experiment(), jobs=ctx.jobs)
    write_csv(ctx.out / "risk.csv", RISK_COLUMNS, rep.rows(), ctx.header())
    write_json(ctx.out / "risk.json", rep.to_dict(), ctx.meta())
    for row in rep.rows():
        print(f"{row['model']} delta={row['delta']} n={row['n']} {row['target']:6s} "
              f"{row['estimator']:8s} {row['mean']:.4f} ({row['std']:.4f})")


def cmd_calibrate_kappa(ctx):
    rows = calibrate_kappa([ctx.cfg.experiment()], ctx.cfg["experiment.kappa_grid"], jobs=ctx.jobs)
    write_csv(ctx.out / "kappa_surface.csv", KAPPA_COLUMNS, rows, ctx.header())


def cmd_probe(ctx):
    rep = convergence_probe(ctx.cfg.experiment(), ctx.cfg["experiment.schedule"], jobs=ctx.jobs)
    write_csv(ctx.out / "probe.csv", RISK_COLUMNS, rep.rows(), ctx.header())
    write_json(ctx.out / "probe.json",
               {"schedule": [list(s) for s in rep.schedule], "monotone": rep.monotone,
                "rows": rep.rows()}, ctx.meta())
    for name, ok in rep.monotone.items():
        print(f"{name}: {'monotone' if ok else 'NOT monotone'}")


COMMANDS = {
    "simulate": cmd_simulate,
    "fit-sigma": cmd_fit_sigma,
    "fit-g": cmd_fit_g,
    "fit-a": cmd_fit_a,
    "hawkes-mle": cmd_hawkes_mle,
    "mise": cmd_mise,
    "calibrate-kappa": cmd_calibrate_kappa,
    "probe": cmd_probe,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (section.key = value lines)")
    common.add_argument("--seed", type=int, help="override grid.seed")
    common.add_argument("--out", help="output directory (default: experiment.output_dir)")
    common.add_argument("--model", help="override model.name (a, b, c, d)")
    common.add_argument("--jobs", type=int, help="worker processes (default: $HJD_JOBS or 1)")
    common.add_argument("--dump-config", action="store_true",
                        help="print the fully resolved config and exit")

    p = _Parser(prog="hjd", description="Hawkes-driven jump diffusions: simulation and estimation")
    p.add_argument("--version", action="version", version=f"hjd {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name in ("fit-sigma", "fit-g", "fit-a"):
            sp.add_argument("--input", help="path CSV (t,x[,lambda...]); simulated from config if absent")
            sp.add_argument("--jumps", help="jumps CSV (component,time)")
        if name == "hawkes-mle":
            sp.add_argument("--jumps", help="jumps CSV; simulated from config if absent")
            sp.add_argument("--horizon", type=float, help="observation window (default: n*delta)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ctx = Context(args)
        if args.dump_config:
            sys.stdout.write(ctx.cfg.dump())
            return 0
        COMMANDS[args.command](ctx)
    except (UsageError, ConfigError, ParameterError, OSError) as exc:
        print(f"hjd {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"hjd {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (HJDError, ArithmeticError) as exc:
        print(f"hjd {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
