"""Command-line entry point.

Exit codes: 0 success, 1 runtime error, 2 configuration error.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .artifacts import atomic_write, write_csv, write_json
from .audit import audit
from .bounds import SWEEP_COLUMNS, alpha_max, sweep, sweep_rows, theorem_bound
from .config import CampaignConfig
from .errors import CeilingRequired, ConfigError, MarkovUpError
from .process import simulate
from .verification import REPORT_COLUMNS, MCBudget, dominance_report, exact_oracle, hitting_series


class Context:
    def __init__(self, config: CampaignConfig, out: Path, threads: int):
        self.config = config
        self.out = out
        self.threads = threads
        self.hash = config.digest()
        self.law = config.build_law()
        self._profile = None
        self._dominance = None

    @property
    def profile(self):
        if self._profile is None:
            self._profile = audit(self.law, m_max=self.config.m_max)
        return self._profile

    @property
    def dominance(self) -> list:
        if self._dominance is None:
            cfg = self.config
            budget = MCBudget(n_traj=cfg.n_traj, horizon=cfg.horizon, seed=cfg.seed,
                              threads=self.threads)
            self._dominance = [dominance_report(self.law, cfg.x0_list, a, budget, profile=self.profile)
                               for a in cfg.alphas]
        return self._dominance


def cmd_simulate(ctx: Context) -> list:
    cfg, paths = ctx.config, []
    for i, x0 in enumerate(cfg.x0_list):
        traj = simulate(ctx.law, x0, cfg.horizon, seed=[cfg.seed, i])
        rows = [{"step": t, "state": s, "run_length": r}
                for t, (s, r) in enumerate(zip(traj.states, traj.run_lengths))]
        paths.append(write_csv(ctx.out / f"trajectory_x{x0}.csv",
                               ("step", "state", "run_length"), rows, ctx.hash))
    return paths


def cmd_audit(ctx: Context) -> list:
    doc = {"law": ctx.law.describe(), "profile": ctx.profile.to_dict()}
    return [write_json(ctx.out / "profile.json", doc, ctx.hash)]


def cmd_bounds(ctx: Context) -> list:
    reports = sweep(ctx.profile, ctx.config.sweep_alphas)
    try:
        a_star = alpha_max(ctx.profile)
    except MarkovUpError as exc:
        a_star = f"{type(exc).__name__}: {exc}"
    return [
        write_csv(ctx.out / "bounds_sweep.csv", SWEEP_COLUMNS, sweep_rows(reports), ctx.hash),
        write_json(ctx.out / "bounds.json",
                   {"alpha_max": a_star, "reports": [r.to_dict() for r in reports]}, ctx.hash),
    ]


def cmd_verify(ctx: Context) -> list:
    reports = ctx.dominance
    rows = [r for rep in reports for r in rep.csv_rows()]
    return [
        write_csv(ctx.out / "dominance.csv", REPORT_COLUMNS, rows, ctx.hash),
        write_json(ctx.out / "dominance.json",
                   {"reports": [rep.to_dict() for rep in reports]}, ctx.hash),
    ]


def cmd_exact(ctx: Context) -> list:
    if ctx.law.ceiling is None:
        raise CeilingRequired("the exact oracle needs a law with a finite ceiling")
    rows = []
    for a in ctx.config.alphas:
        rep = theorem_bound(a, ctx.profile)
        for x0 in ctx.config.x0_list:
            row = {"x0": x0, "alpha": a, "exact": None, "series": None,
                   "bound": rep.bound(x0) if rep.feasible else None, "error": ""}
            try:
                row["exact"] = exact_oracle(ctx.law, a, x0)
                row["series"] = hitting_series(ctx.law, a, x0)[0]
            except MarkovUpError as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    cols = ("x0", "alpha", "exact", "series", "bound", "error")
    return [write_csv(ctx.out / "exact.csv", cols, rows, ctx.hash)]


def cmd_report(ctx: Context) -> list:
    paths = cmd_simulate(ctx) + cmd_audit(ctx) + cmd_bounds(ctx) + cmd_verify(ctx)
    if ctx.law.ceiling is not None:
        paths += cmd_exact(ctx)
    p = ctx.profile
    lines = [
        f"# markovup {__version__} report",
        "",
        f"config sha256: `{ctx.hash}`",
        f"law: `{ctx.law.describe()}`",
        "",
        "## Assumptions",
        f"- rho = {p.rho:.6g}",
        f"- q = {p.q:.6g}",
        f"- kappa_bar_inf = {p.kappa_bar_inf!r} (error <= {p.kappa_bar_error!r})",
        f"- q_bar = {p.q_bar!r}",
        f"- violations: {', '.join(p.violations) if p.violations else 'none'}",
        "",
        "## Bounds",
    ]
    try:
        lines.append(f"- largest feasible alpha: {alpha_max(p):.6g}")
    except MarkovUpError as exc:
        lines.append(f"- largest feasible alpha: {type(exc).__name__}")
    for r in sweep(p, ctx.config.sweep_alphas):
        c1 = f"{r.c1:.6g}" if r.feasible else "infeasible (" + "; ".join(r.violated_conditions) + ")"
        lines.append(f"- alpha={r.alpha:g}: C1 = {c1}")
    lines += ["", "## Dominance", "", "| quantity | x0 | alpha | mc_mean | mc_ci_hi | exact | bound | pass |",
              "|---|---|---|---|---|---|---|---|"]
    for rep in ctx.dominance:
        for row in rep.rows:
            lines.append("| {quantity} | {x0} | {alpha} | {m} | {hi} | {e} | {b} | {ok} |".format(
                m=_fmt(row["mc_mean"]), hi=_fmt(row["mc_ci_hi"]), e=_fmt(row["exact"]),
                b=_fmt(row["bound"]), ok=row["pass"], **row))
    paths.append(atomic_write(ctx.out / "report.md", "\n".join(lines) + "\n"))
    return paths


def _fmt(v) -> str:
    return "" if v is None else f"{v:.6g}"


COMMANDS = {
    "simulate": cmd_simulate,
    "audit": cmd_audit,
    "bounds": cmd_bounds,
    "verify": cmd_verify,
    "exact": cmd_exact,
    "report": cmd_report,
}


def _threads(arg) -> int:
    if arg is None:
        env = os.environ.get("MARKOVUP_THREADS")
        if env is None:
            return 1
        try:
            arg = int(env)
        except ValueError:
            raise ConfigError(f"MARKOVUP_THREADS={env!r} is not an integer")
    if arg < 0:
        raise ConfigError("--threads must be >= 0")
    return arg or (os.cpu_count() or 1)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON campaign configuration")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    common.add_argument("--threads", type=int, help="worker processes, 0 = auto")
    parser = argparse.ArgumentParser(prog="markovup", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"markovup {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = CampaignConfig.load(args.config) if args.config else CampaignConfig.from_dict({})
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be >= 0")
            cfg.seed = args.seed
        out = args.out if args.out is not None else Path(cfg.output_dir)
        ctx = Context(cfg, out, _threads(args.threads))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        for path in COMMANDS[args.command](ctx):
            print(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (MarkovUpError, ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
