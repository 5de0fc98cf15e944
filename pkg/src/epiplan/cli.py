"""Command line entry point: gen, lint, compile, plan, simulate and bench."""
from __future__ import annotations

import argparse
import json
import os
import sys

from .beliefs import DEFAULT_DEPTH, MAX_DEPTH
from .compiler import CompileError, compile_task
from .domains import CommModel, GroundTruth, Scenario
from .domains.bw4t import bw4t
from .domains.bw4t import default_config as bw4t_config
from .domains.gridworld import default_config as gridworld_config
from .domains.gridworld import gridworld
from .epddl import EPDDLError, parse_domain, parse_problem, render_domain, render_problem, validate
from .execution import SimulationError, build_query_set, metrics, simulate
from .search import (
    DEFAULT_MAX_EXPANSIONS,
    DEFAULT_TIMEOUT_MS,
    STRATEGIES,
    LimitExceeded,
    Plan,
    Unsolvable,
    eliminate_redundant,
    solve,
    validate_plan,
)

MAPS = {"gridworld": ("3x3", "4x3"), "bw4t": ("rooms3", "rooms6")}


def _read(path):
    with open(path) as f:
        return f.read()


def _write(path, text):
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w") as f:
        f.write(text)


def _load_task_files(args):
    d = parse_domain(_read(args.domain))
    p = parse_problem(_read(args.problem), d)
    return d, p


def _on_off(value):
    v = value.lower()
    if v not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return v == "on"


def _depth(value):
    d = int(value)
    if not 0 <= d <= MAX_DEPTH:
        raise argparse.ArgumentTypeError(f"depth must be within 0..{MAX_DEPTH}")
    return d


def cmd_gen(args):
    scenario = Scenario.parse(args.scenario)
    model = CommModel.parse(args.model)
    if args.domain == "gridworld":
        agents = args.agents or (3 if args.map == "3x3" else 4)
        d, p, gt = gridworld(gridworld_config(args.map, agents, scenario, model, args.seed))
    else:
        agents = args.agents or (3 if args.map == "rooms3" else 4)
        d, p, gt = bw4t(bw4t_config(args.map, agents, scenario, model, args.seed))
    base = os.path.join(args.out, f"{args.domain}-{args.map}-{scenario.value}-{model.value}")
    _write(base + ".epddl", render_domain(d))
    _write(base + ".eprob", render_problem(p))
    _write(os.path.join(args.out, "groundtruth.json"), gt.dumps() + "\n")
    print(base + ".epddl")
    print(base + ".eprob")
    return 0


def cmd_lint(args):
    d, p = _load_task_files(args)
    found = validate(d, p, args.depth)
    for diag in found:
        print(diag)
    print(f"{len(found)} diagnostic(s)")
    return 1 if found else 0


def cmd_compile(args):
    d, p = _load_task_files(args)
    task = compile_task(d, p, depth=args.depth, turn_taking=args.turns, prune=not args.no_prune)
    text = task.dumps() + "\n"
    if args.out:
        _write(args.out, text)
        print(f"{len(task.fluents)} fluents, {len(task.actions)} actions -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_plan(args):
    d, p = _load_task_files(args)
    task = compile_task(d, p, depth=args.depth, turn_taking=args.turns)
    try:
        plan = solve(task, args.strategy, args.max_expansions, args.timeout_ms)
    except Unsolvable as err:
        print(f"unsolvable: {err} ({err.expansions} expansions)", file=sys.stderr)
        return 2
    except LimitExceeded as err:
        print(f"limit: {err} ({err.expansions} expansions)", file=sys.stderr)
        return 3
    if not args.keep_redundant:
        plan = eliminate_redundant(task, plan)
    report = validate_plan(task, plan)
    if not report.valid:
        print(f"internal error: plan does not validate: {report.summary()}", file=sys.stderr)
        return 4
    text = json.dumps(plan.to_json(), indent=1) + "\n"
    if args.out:
        _write(args.out, text)
    sys.stdout.write(text)
    print(f"; {len(plan)} steps, {plan.expansions} expansions, {plan.duration_ms:.1f} ms", file=sys.stderr)
    return 0


def cmd_simulate(args):
    d, p = _load_task_files(args)
    with open(args.plan) as f:
        data = json.load(f)
    labels = data["plan"] if isinstance(data, dict) else data
    with open(args.groundtruth) as f:
        gt = GroundTruth.from_json(json.load(f))
    plan = Plan(tuple(range(len(labels))), tuple(labels), duration_ms=data.get("duration_ms", 0.0) if isinstance(data, dict) else 0.0)
    try:
        trace = simulate(plan, gt, d, p)
    except SimulationError as err:
        print(f"simulation failed: {err}", file=sys.stderr)
        return 2
    record = metrics(plan, trace, build_query_set(p, d), pairwise=args.pairwise)
    out = json.dumps(record.to_json(), indent=1)
    if args.out:
        _write(os.path.join(args.out, "trace.json"), json.dumps(trace.to_json(), indent=1) + "\n")
        _write(os.path.join(args.out, "metrics.json"), out + "\n")
    print(out)
    return 0


def cmd_bench_run(args):
    from .bench import MatrixConfig, run_matrix, write_results

    if args.config:
        with open(args.config) as f:
            config = MatrixConfig.from_json(json.load(f))
    else:
        config = MatrixConfig()
    if args.workers:
        config = MatrixConfig(**{**config.__dict__, "workers": args.workers})

    def progress(r):
        if not args.quiet:
            print(f"{r.domain:9} {r.map:6} {r.scenario} {r.model:9} {r.outcome}", file=sys.stderr)

    records = run_matrix(config, progress)
    paths = write_results(records, args.out, config)
    for name in paths.values():
        print(os.path.join(args.out, name))
    recorded = all(r.outcome in ("solved", "unsolvable", "limit") for r in records)
    return 0 if recorded else 1


def cmd_bench_report(args):
    from .bench import load_records, records_csv, report, summary_csv

    records = load_records(getattr(args, "in"))
    summary = report(records)
    if args.format == "json":
        print(json.dumps(summary, indent=1))
    elif args.records:
        sys.stdout.write(records_csv(records))
    else:
        sys.stdout.write(summary_csv(summary))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="epiplan", description="Epistemic multi-agent planning toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a Gridworld or BW4T task")
    g.add_argument("--domain", choices=sorted(MAPS), default="gridworld")
    g.add_argument("--map", default=None, help="3x3|4x3 for gridworld, rooms3|rooms6 for bw4t")
    g.add_argument("--agents", type=int, default=None)
    g.add_argument("--scenario", default="S1", help="S1..S5")
    g.add_argument("--model", default="selective", help="selective|nocomm|commall")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".")
    g.set_defaults(func=cmd_gen)

    def task_args(p):
        p.add_argument("--domain", required=True, help="domain file (.epddl)")
        p.add_argument("--problem", required=True, help="problem file (.eprob)")
        p.add_argument("--depth", type=_depth, default=DEFAULT_DEPTH)

    v = sub.add_parser("lint", help="report diagnostics for a domain/problem pair")
    task_args(v)
    v.set_defaults(func=cmd_lint)

    c = sub.add_parser("compile", help="compile to a classical task (JSON)")
    task_args(c)
    c.add_argument("--turns", type=_on_off, default=False, metavar="on|off")
    c.add_argument("--no-prune", action="store_true", help="keep the full enumerated fluent table")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compile)

    pl = sub.add_parser("plan", help="compile and solve")
    task_args(pl)
    pl.add_argument("--strategy", choices=STRATEGIES, default="gbfs")
    pl.add_argument("--max-expansions", type=int, default=DEFAULT_MAX_EXPANSIONS)
    pl.add_argument("--timeout-ms", type=float, default=DEFAULT_TIMEOUT_MS)
    pl.add_argument("--turns", type=_on_off, default=True, metavar="on|off")
    pl.add_argument("--keep-redundant", action="store_true", help="skip greedy action elimination")
    pl.add_argument("--out", help="write plan JSON here")
    pl.set_defaults(func=cmd_plan)

    s = sub.add_parser("simulate", help="replay a plan against ground truth and measure it")
    task_args(s)
    s.add_argument("--plan", required=True)
    s.add_argument("--groundtruth", required=True)
    s.add_argument("--pairwise", action="store_true")
    s.add_argument("--out", help="directory for trace.json and metrics.json")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="benchmark matrix")
    bsub = b.add_subparsers(dest="bench_command", required=True)
    br = bsub.add_parser("run")
    br.add_argument("--config", help="matrix config JSON; defaults to the 60-run matrix")
    br.add_argument("--out", default="results")
    br.add_argument("--workers", type=int, default=0)
    br.add_argument("--quiet", action="store_true")
    br.set_defaults(func=cmd_bench_run)
    rp = bsub.add_parser("report")
    rp.add_argument("--in", required=True, help="results directory or records.json")
    rp.add_argument("--format", choices=("csv", "json"), default="csv")
    rp.add_argument("--records", action="store_true", help="with csv: one row per record instead of the summary")
    rp.set_defaults(func=cmd_bench_report)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "gen":
        if args.map is None:
            args.map = MAPS[args.domain][0]
        if args.map not in MAPS[args.domain]:
            ap.error(f"--map for {args.domain} must be one of {', '.join(MAPS[args.domain])}")
    try:
        return args.func(args)
    except (EPDDLError, CompileError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
