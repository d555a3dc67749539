"""Command-line entry point: ``maopac run | bounds | validate``."""
from __future__ import annotations

import argparse
import sys

from .bounds import (
    constants,
    follow_on_bound,
    psi_condition_bound,
    recursive_critic_bound,
    theorem2_bounds,
    trajectory_bounds,
)
from .config import load_config
from .errors import ConfigurationError, MaopacError


def _parser():
    p = argparse.ArgumentParser(prog="maopac", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the configured experiment and write CSV metrics")
    run.add_argument("config", help="JSON config path, or 'default'")
    run.add_argument("--out", help="output directory (overrides output_dir)")
    run.add_argument("--plots", action="store_true", help="also write SVG panels")
    run.add_argument("--jobs", type=int, default=1, help="seeds to run in parallel")

    b = sub.add_parser("bounds", help="print bound constants and admissible errors")
    b.add_argument("config")
    b.add_argument("--n", type=int, required=True, help="horizon")
    b.add_argument("--j", type=int, required=True, help="step at which the errors are incurred")
    b.add_argument("--eps", type=float, required=True, help="target actor error")
    b.add_argument("--M", type=float, default=None, help="emphasis snapshot (default: its upper bound)")
    b.add_argument("--F", type=float, default=None, help="follow-on snapshot (default: its upper bound)")
    b.add_argument("--omega0", type=float, default=None, help="initial critic norm (default: worst case)")

    v = sub.add_parser("validate", help="check a config against every assumption")
    v.add_argument("config")
    return p


def _table(rows):
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v:.6g}" for k, v in rows)


def cmd_run(args):
    from .harness import run_experiment

    cfg = load_config(args.config)
    result = run_experiment(cfg, out_dir=args.out, plots=args.plots, jobs=args.jobs)
    agg = result.aggregate
    print(f"{cfg.algorithm}: {len(cfg.seeds)} seed(s) x {cfg.steps} steps")
    print(f"median final cumulative average reward: {agg.columns['cum_avg_reward'][-1]:.6g}")
    flagged = sum(1 for f in agg.flags if f)
    print(f"steps with bound violations: {flagged}")
    for path in result.files:
        print(f"wrote {path}")
    return 0


def cmd_bounds(args):
    cfg = load_config(args.config)
    h = cfg.hyper
    c = constants(h)
    S = cfg.env.grid_side ** 2
    w0 = args.omega0 if args.omega0 is not None else cfg.policy.critic_init_scale * S ** 0.5
    F = args.F if args.F is not None else follow_on_bound(h)
    M = args.M if args.M is not None else c.B_M
    rows = list(c.as_dict().items())
    rows.append(("F_max", follow_on_bound(h)))
    tb = trajectory_bounds(h, args.n, w0)
    rows += [("B_omega_n", tb.B_omega), ("B_delta_n", tb.B_delta), ("Phi_n", tb.Phi)]
    rows.append(("W_n (recursive critic bound)", recursive_critic_bound(h, args.n, w0)))
    t2 = theorem2_bounds(h, args.n, args.j, args.eps, M, F, w0)
    for name, value in t2.values().items():
        rows.append((name, value))
        rows.append(("  log " + name, getattr(t2, "log_" + name)))
    rows.append(("belief tolerance min(B1, B2)", t2.belief_tolerance))
    rows.append(("ratio tolerance min(D1, D2, D3)", t2.ratio_tolerance))
    rows.append(("psi condition at j", psi_condition_bound(h, args.j, args.eps, w0)))
    print(f"n={args.n} j={args.j} eps={args.eps} M={M:.6g} F={F:.6g} omega0={w0:.6g}")
    print(_table(rows))
    return 0


def cmd_validate(args):
    cfg = load_config(args.config)
    print(f"ok: {cfg.algorithm}, {cfg.agent_count} agents on a {cfg.env.grid_side}x{cfg.env.grid_side} grid")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": cmd_run, "bounds": cmd_bounds, "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigurationError as exc:
        print("invalid configuration:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return 2
    except (MaopacError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
