"""Command line entry point.

Exit codes: 0 on a clean run, 2 on a configuration error, 3 when any
reported success failed re-verification.
"""

from __future__ import annotations

import argparse
import json
import sys

from .geometry import GeometricGraph, PointSet
from .graph import UnionGraph, read_edge_list
from .harness import (ConfigError, TrialConfig, build_host, config_from_mapping, edge_count_experiment,
                      load_config, lower_bound_experiment, parse_sweep, run_trials, sweep_C)
from .verification import CyclicOrder, verify_kth_power

EXIT_OK, EXIT_CONFIG, EXIT_UNSOUND = 0, 2, 3

_TRIAL_FLAGS = ("n", "d", "k", "alpha", "C", "r", "norm", "host", "pattern", "seed", "host_seed",
                "trials", "L", "retries")


def _add_trial_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--C", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--norm", help="1, 2, ... or inf")
    p.add_argument("--host", help="random | complete | extremal-power | extremal-factor | file:PATH")
    p.add_argument("--pattern", help="pattern for extremal-factor hosts (K3, C5, ... or file:PATH)")
    p.add_argument("--seed", type=int)
    p.add_argument("--host-seed", dest="host_seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--L", type=int, help="override the subset size L")
    p.add_argument("--retries", type=int)
    p.add_argument("--sweep", help="C=a,b,c")
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="write results here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--emit-order", action="store_true")
    p.add_argument("--emit-plan", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hampower",
                                     description="Powers of Hamilton cycles in randomly perturbed geometric graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="seeded construction trials, or a sweep over C")
    _add_trial_flags(run)

    edges = sub.add_parser("edges", help="mean edge count of G^d(n, r) against the ball-volume interval")
    edges.add_argument("--n", type=int, required=True)
    edges.add_argument("--d", type=int, default=1)
    edges.add_argument("--norm", default="2")
    edges.add_argument("--r", type=float, required=True)
    edges.add_argument("--trials", type=int, default=100)
    edges.add_argument("--seed", type=int, default=0)

    lb = sub.add_parser("lower-bound", help="extremal host plus a very sparse G")
    lb.add_argument("--n", type=int, required=True)
    group = lb.add_mutually_exclusive_group(required=True)
    group.add_argument("--k", type=int)
    group.add_argument("--pattern")
    lb.add_argument("--alpha", type=float, required=True)
    lb.add_argument("--C", type=float, default=0.01)
    lb.add_argument("--d", type=int, default=2)
    lb.add_argument("--seed", type=int, default=0)

    ver = sub.add_parser("verify", help="check a cyclic order against H, optionally united with G")
    ver.add_argument("--order", required=True, help="file with one space-separated permutation")
    ver.add_argument("--host", required=True, help="edge list of H")
    ver.add_argument("--points", help="point file; adds G at radius --r")
    ver.add_argument("--r", type=float)
    ver.add_argument("--norm", default="2")
    ver.add_argument("--k", type=int, required=True)
    return parser


_RUN_ONLY = ("sweep", "jobs", "out", "format")


def _trial_config(args) -> TrialConfig:
    values = load_config(args.config) if args.config else {}
    # output and scheduling keys may come from the file; flags still win
    for key in _RUN_ONLY:
        from_file = values.pop(key, None)
        if getattr(args, key) is None and from_file is not None:
            setattr(args, key, int(from_file) if key == "jobs" else from_file)
    args.jobs = args.jobs or 1
    args.format = args.format or "json"
    if args.format not in ("json", "csv"):
        raise ConfigError(f"unknown format {args.format!r}")
    for key in _TRIAL_FLAGS:
        val = getattr(args, key)
        if val is not None:
            values[key] = val
    # a C or r given as a flag replaces the other one coming from the file
    if args.C is not None:
        values.pop("r", None)
    elif args.r is not None:
        values.pop("C", None)
    values["emit_order"] = args.emit_order
    values["emit_plan"] = args.emit_plan
    if args.sweep and "C" not in values and "r" not in values:
        values["C"] = parse_sweep(args.sweep)[0]
    return config_from_mapping(values)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_run(args) -> int:
    config = _trial_config(args)
    if args.format == "csv" and not args.sweep:
        raise ConfigError("csv output is only available for sweeps")
    H = build_host(config)
    if args.sweep:
        result = sweep_C(config, parse_sweep(args.sweep), config.trials, H=H, jobs=args.jobs)
        _emit(result.to_csv() if args.format == "csv" else result.to_json(), args.out)
        records = result.records
    else:
        records = run_trials(config, H=H, jobs=args.jobs)
        _emit("\n".join(r.to_json() for r in records), args.out)
    bad = [r for r in records if r.outcome == "unsound" or (r.success and not r.verify_ok)]
    ok = sum(r.success for r in records)
    print(f"{ok}/{len(records)} trials succeeded", file=sys.stderr)
    if bad:
        print(f"{len(bad)} verification violation(s)", file=sys.stderr)
        return EXIT_UNSOUND
    return EXIT_OK


def _cmd_edges(args) -> int:
    try:
        stats = edge_count_experiment(args.n, args.d, args.norm, args.r, args.trials, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(stats.to_json())
    return EXIT_OK


def _cmd_lower_bound(args) -> int:
    target = args.k if args.k is not None else args.pattern
    try:
        report = lower_bound_experiment(args.n, target, args.alpha, args.C, d=args.d, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(report.to_json())
    return EXIT_OK


def _cmd_verify(args) -> int:
    try:
        H = read_edge_list(args.host)
        with open(args.order) as fh:
            order = CyclicOrder.from_line(fh.read())
        graph = H
        if args.points:
            if args.r is None:
                raise ConfigError("--points needs --r")
            graph = UnionGraph(H, GeometricGraph(PointSet.load(args.points), args.r, args.norm))
        check = verify_kth_power(order, graph, args.k)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    print(json.dumps({"ok": check.ok, "violation": check.violation}))
    return EXIT_OK if check else EXIT_UNSOUND


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "edges": _cmd_edges, "lower-bound": _cmd_lower_bound,
               "verify": _cmd_verify}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
