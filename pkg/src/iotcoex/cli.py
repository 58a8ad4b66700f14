"""Command-line front end: ``iotcoex analytic|simulate|sweep``."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import analytics
from .config import MAC_SCHEMES, ConfigError
from .experiment import (
    ExperimentSpec,
    analytic_overlay,
    analytic_profile,
    emit,
    load_preset,
    load_spec,
    parse_spec,
    rows_to_csv,
    run_sweep,
    sensor_energy,
    single_row,
)


def _load(args) -> ExperimentSpec:
    spec = load_spec(args.config) if args.config else load_preset(args.preset)
    data = spec.to_dict()
    if args.mode:
        mac = dict(data["base"].get("mac", {}))
        mac["scheme"] = args.mode
        data["base"]["mac"] = mac
    if args.seed is not None:
        data["seed_base"] = args.seed
    if getattr(args, "overlay_analytic", False):
        data["overlay_analytic"] = True
    return parse_spec(data)


def _write(rows, args, spec) -> None:
    if args.out:
        for path in emit(rows, args.out, spec, long_format=getattr(args, "long", False)):
            print(f"wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(rows_to_csv(rows))


def cmd_analytic(args) -> int:
    spec = _load(args)
    if args.tradeoff:
        # reliability-delay tradeoff over K = 1..4 for the base config
        curve = analytics.tradeoff_curve(
            analytic_profile(spec.base),
            sensor_energy(spec.base),
            [1, 2, 3, 4],
            analytics.tier1_neighbor_map(args.i_adjacent, args.i_diagonal),
            target_p_suc=1.0 - spec.capacity_target,
        )
        rows = [dataclasses.asdict(pt) | {"failure_prob": pt.failure_prob} for pt in curve]
        _write(rows, args, spec)
        return 0
    rows = []
    for point in spec.points():
        config = spec.config_for(point, spec.seed_base)
        profile = analytic_profile(config)
        overlay = analytic_overlay(config, spec.capacity_target)
        p = overlay["p_suc_analytic"]
        rows.append(
            {
                **point,
                **overlay,
                "p_suc_isolated": analytics.success_prob_isolated(profile),
                "delay_analytic": analytics.expected_delay(p, profile),
            }
        )
    _write(rows, args, spec)
    return 0


def cmd_simulate(args) -> int:
    spec = _load(args)
    config = spec.config_for({}, spec.seed_base)
    row = single_row(config, spec.overlay_analytic, spec.capacity_target)
    _write([row], args, spec)
    return 0


def cmd_sweep(args) -> int:
    spec = _load(args)
    rows = run_sweep(spec, workers=args.workers)
    _write(rows, args, spec)
    failed = [r for r in rows if r.get("error")]
    for r in failed:
        print(f"run failed: {r['error']}", file=sys.stderr)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iotcoex", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", help="experiment YAML file")
    src.add_argument("--preset", default="baseline", help="bundled preset name (default: baseline)")
    common.add_argument("--seed", type=int, help="override seed_base")
    common.add_argument("--out", help="output CSV path (stdout when omitted)")
    common.add_argument("--mode", choices=sorted(MAC_SCHEMES), help="override the MAC scheme")
    common.add_argument("--overlay-analytic", action="store_true", help="add closed-form columns")
    common.add_argument("--long", action="store_true", help="also write a long-format table")

    p = sub.add_parser("analytic", parents=[common], help="closed-form KPI tables")
    p.add_argument("--tradeoff", action="store_true", help="emit the reliability-delay tradeoff over K = 1..4")
    p.add_argument("--i-adjacent", type=float, default=1.0)
    p.add_argument("--i-diagonal", type=float, default=1.0)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", parents=[common], help="single simulation of the base config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="run the experiment sweep")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
