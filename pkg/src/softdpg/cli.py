"""Command-line entry point.

Subcommands: train, eval, landscape, theory-check, sweep. Exit codes:
0 success, 1 usage or configuration error, 2 a certification check failed,
3 numerical failure (non-finite values, divergent iteration, domain escape).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness
from .mdp_lab import FixedPointError, GridDomainError

__all__ = ["main", "build_parser"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="softdpg", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    train = sub.add_parser("train", help="run training for every seed in a config")
    train.add_argument("--config", required=True, help="path to a JSON run config")
    train.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="K=V",
        help="dotted config override, e.g. agent.sigma=0.5 (repeatable)",
    )

    ev = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--env", required=True)
    ev.add_argument("--episodes", type=int, default=10)
    ev.add_argument("--seed", type=int, default=0)

    land = sub.add_parser("landscape", help="export critic values over the action range")
    land.add_argument("--checkpoint", required=True)
    land.add_argument("--step", type=float, default=0.005)
    land.add_argument("--out", required=True)

    theory = sub.add_parser("theory-check", help="certify the tabular-lab properties")
    theory.add_argument("--sigma", default="0.05,0.1,0.2", help="comma-separated sigmas")
    theory.add_argument("--out", default="theory_report", help="report directory")
    theory.add_argument("--seed", type=int, default=0)
    theory.add_argument("--trials", type=int, default=1000)
    theory.add_argument("--trajectories", type=int, default=4000)

    sweep = sub.add_parser("sweep", help="train across a sigma or N grid")
    sweep.add_argument("--param", required=True, choices=("sigma", "n"))
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--config", required=True)

    return p


def _parse_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"bad list {text!r}: {exc}") from None
    if not values:
        raise UsageError("empty value list")
    return values


def _dispatch(args) -> int:
    if args.command == "train":
        cfg = harness.load_config(args.config, args.override)
        for summary in harness.cmd_train(cfg):
            print(
                f"seed {summary['seed']}: final eval return "
                f"{summary['final_eval_mean']:.6g} -> {summary['log']}"
            )
        return 0

    if args.command == "eval":
        mean, std = harness.cmd_eval(args.checkpoint, args.env, args.episodes, args.seed)
        print(f"{mean:.17g} ± {std:.17g}")
        return 0

    if args.command == "landscape":
        n = harness.cmd_landscape(args.checkpoint, args.step, args.out)
        print(f"wrote {n} rows to {args.out}")
        return 0

    if args.command == "theory-check":
        rows, ok = harness.run_theory_checks(
            args.out,
            sigmas=tuple(_parse_list(args.sigma)),
            seed=args.seed,
            trials=args.trials,
            trajectories=args.trajectories,
        )
        for r in rows:
            flag = "PASS" if r.passed else "FAIL"
            print(
                f"[{flag}] {r.check} sigma={r.sigma:g} observed={r.observed:.6g} "
                f"bound={r.bound:.6g} tolerance={r.tolerance:g}"
            )
        print(f"report: {args.out}/report.csv")
        return 0 if ok else 2

    if args.command == "sweep":
        with open(args.config) as fh:
            base = json.load(fh)
        values = _parse_list(args.values)
        for row in harness.cmd_sweep(args.param, values, base):
            print(
                f"{row['param']}={row['value']:g}: eval return "
                f"{row['eval_return_mean']:.6g} ± {row['eval_return_std']:.6g}"
            )
        return 0

    raise UsageError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _dispatch(args)
    except (FloatingPointError, FixedPointError, GridDomainError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
