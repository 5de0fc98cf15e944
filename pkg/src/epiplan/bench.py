"""Benchmark matrix: generate, compile, solve, replay and measure every coordinate."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .compiler import compile_task
from .domains import CommModel, Scenario
from .domains.bw4t import bw4t
from .domains.bw4t import default_config as bw4t_config
from .domains.gridworld import default_config as gridworld_config
from .domains.gridworld import gridworld
from .execution import build_query_set, metrics, simulate
from .search import (
    LimitExceeded,
    Unsolvable,
    eliminate_redundant,
    solve,
    validate_plan,
)

SCHEMA = 1
HEADLINE = ("totalActions", "totalCommunications")
METRICS = ("totalActions", "totalCommunications", "completionTimeMs", "sharednessPercent")
BASELINES = ("nocomm", "commall")
OUTCOMES = ("solved", "unsolvable", "limit", "error")

# fixed column order of the per-record CSV
COLUMNS = (
    "domain",
    "map",
    "agents",
    "scenario",
    "model",
    "seed",
    "outcome",
    "valid",
    "totalActions",
    "rawLength",
    "noops",
    "totalCommunications",
    "sharednessPercent",
    "completionTimeMs",
    "expansions",
    "generated",
    "strategy",
    "error",
)


@dataclass(frozen=True)
class Instance:
    domain: str  # gridworld | bw4t
    map: str
    agents: int


DEFAULT_INSTANCES = (
    Instance("gridworld", "3x3", 3),
    Instance("gridworld", "4x3", 4),
    Instance("bw4t", "rooms3", 3),
    Instance("bw4t", "rooms6", 4),
)


@dataclass(frozen=True)
class MatrixConfig:
    instances: Tuple[Instance, ...] = DEFAULT_INSTANCES
    scenarios: Tuple[str, ...] = tuple(s.value for s in Scenario)
    models: Tuple[str, ...] = tuple(m.value for m in CommModel)
    seed: int = 0
    strategy: str = "gbfs"
    max_expansions: int = 5_000_000
    timeout_ms: float = 60_000
    turn_taking: bool = True
    depth: int = 1
    eliminate: bool = True
    workers: int = 1

    def coordinates(self):
        return [
            (inst, Scenario.parse(s).value, CommModel.parse(m).value)
            for inst in self.instances
            for s in self.scenarios
            for m in self.models
        ]

    @classmethod
    def from_json(cls, data: dict) -> "MatrixConfig":
        data = dict(data)
        if "instances" in data:
            data["instances"] = tuple(Instance(i["domain"], i["map"], int(i["agents"])) for i in data["instances"])
        for key in ("scenarios", "models"):
            if key in data:
                data[key] = tuple(data[key])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown matrix config keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> dict:
        out = asdict(self)
        out["instances"] = [asdict(i) for i in self.instances]
        out["scenarios"] = list(self.scenarios)
        out["models"] = list(self.models)
        return out


@dataclass
class BenchRecord:
    domain: str
    map: str
    agents: int
    scenario: str
    model: str
    seed: int
    outcome: str  # solved | unsolvable | limit | error
    valid: Optional[bool] = None
    strategy: str = "gbfs"
    expansions: int = 0
    generated: int = 0
    metrics: Optional[dict] = None
    plan: List[str] = field(default_factory=list)
    trace_digest: Optional[str] = None
    error: str = ""

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")

    @property
    def key(self):
        return (self.domain, self.map, self.agents, self.scenario, self.model, self.seed)

    def metric(self, name):
        return None if self.metrics is None else self.metrics.get(name)

    def to_json(self, wall_clock=True) -> dict:
        out = asdict(self)
        if not wall_clock and self.metrics is not None:
            out["metrics"] = {k: v for k, v in self.metrics.items() if k != "completionTimeMs"}
        return out

    @classmethod
    def from_json(cls, data: dict) -> "BenchRecord":
        return cls(**data)

    def row(self) -> dict:
        out = {
            "domain": self.domain,
            "map": self.map,
            "agents": self.agents,
            "scenario": self.scenario,
            "model": self.model,
            "seed": self.seed,
            "outcome": self.outcome,
            "valid": "" if self.valid is None else str(self.valid).lower(),
            "expansions": self.expansions,
            "generated": self.generated,
            "strategy": self.strategy,
            "error": self.error,
        }
        for name in ("totalActions", "rawLength", "noops", "totalCommunications", "sharednessPercent", "completionTimeMs"):
            value = self.metric(name)
            out[name] = "" if value is None else value
        return out


def generate(inst: Instance, scenario, model, seed):
    if inst.domain == "gridworld":
        return gridworld(gridworld_config(inst.map, inst.agents, scenario, model, seed))
    if inst.domain == "bw4t":
        return bw4t(bw4t_config(inst.map, inst.agents, scenario, model, seed))
    raise ValueError(f"unknown domain {inst.domain!r}")


def trace_digest(trace) -> str:
    text = json.dumps(trace.to_json(), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def run_one(c: MatrixConfig, inst: Instance, scenario: str, model: str) -> BenchRecord:
    rec = BenchRecord(inst.domain, inst.map, inst.agents, scenario, model, c.seed, "error", strategy=c.strategy)
    try:
        d, p, gt = generate(inst, scenario, model, c.seed)
        task = compile_task(d, p, depth=c.depth, turn_taking=c.turn_taking)
        try:
            plan = solve(task, c.strategy, c.max_expansions, c.timeout_ms)
        except Unsolvable as err:
            rec.outcome, rec.error, rec.expansions = "unsolvable", str(err), err.expansions
            return rec
        except LimitExceeded as err:
            rec.outcome, rec.error, rec.expansions = "limit", str(err), err.expansions
            return rec
        if c.eliminate:
            plan = eliminate_redundant(task, plan)
        rec.valid = validate_plan(task, plan).valid
        trace = simulate(plan, gt, d, p)
        queries = build_query_set(p, d)
        m = metrics(plan, trace, queries, pairwise=Scenario.parse(scenario).has_commander)
        rec.outcome = "solved"
        rec.expansions, rec.generated = plan.expansions, plan.generated
        rec.plan = list(plan.labels)
        rec.metrics = m.to_json()
        rec.trace_digest = trace_digest(trace)
    except Exception as err:  # recorded, never aborts the matrix
        rec.outcome, rec.error = "error", f"{type(err).__name__}: {err}"
    return rec


def _run_packed(args):
    return run_one(*args)


def run_matrix(c: MatrixConfig, progress=None) -> List[BenchRecord]:
    """One record per coordinate, in coordinate order."""
    jobs = [(c, inst, s, m) for inst, s, m in c.coordinates()]
    if c.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=c.workers) as pool:
            records = []
            for rec in pool.map(_run_packed, jobs):
                records.append(rec)
                if progress:
                    progress(rec)
            return records
    records = []
    for job in jobs:
        rec = run_one(*job)
        records.append(rec)
        if progress:
            progress(rec)
    return records


# -- reporting ----------------------------------------------------------------


def percent_change(baseline, selective) -> Optional[float]:
    """(baseline - selective) / selective * 100; None when undefined."""
    if baseline is None or selective is None or selective == 0:
        return None
    return round((baseline - selective) / selective * 100, 2)


def _mean(values):
    values = [v for v in values if v is not None]
    return round(sum(values) / len(values), 2) if values else None


def report(records: Sequence[BenchRecord]) -> dict:
    solved = [r for r in records if r.outcome == "solved"]
    if not any(r.model == "selective" for r in solved) or not any(r.model in BASELINES for r in solved):
        raise ValueError("report needs at least one solved selective record and one solved baseline")
    domains: Dict[str, dict] = {}
    tables: Dict[str, dict] = {}
    for dom in sorted({r.domain for r in records}):
        mine = [r for r in solved if r.domain == dom]
        averages = {}
        for model in ("selective",) + BASELINES:
            rows = [r for r in mine if r.model == model]
            averages[model] = {name: _mean(r.metric(name) for r in rows) for name in METRICS}
            averages[model]["records"] = len(rows)
        change = {
            base: {name: percent_change(averages[base][name], averages["selective"][name]) for name in METRICS}
            for base in BASELINES
        }
        domains[dom] = {"averages": averages, "percentChange": change}
        table = {}
        for scen in [s.value for s in Scenario]:
            cells = {}
            for model in ("selective",) + BASELINES:
                rows = [r for r in mine if r.scenario == scen and r.model == model]
                if rows:
                    cells[model] = {name: _mean(r.metric(name) for r in rows) for name in METRICS}
            if cells:
                table[scen] = cells
        tables[dom] = table
    outcomes: Dict[str, int] = {}
    for r in records:
        outcomes[r.outcome] = outcomes.get(r.outcome, 0) + 1
    return {
        "schema": SCHEMA,
        "records": len(records),
        "outcomes": dict(sorted(outcomes.items())),
        "domains": domains,
        "scenarioTables": tables,
    }


def records_csv(records: Sequence[BenchRecord]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def summary_csv(summary: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["domain", "metric", "selective", "nocomm", "commall", "nocommChangePct", "commallChangePct"])
    for dom, block in summary["domains"].items():
        av, ch = block["averages"], block["percentChange"]
        for name in METRICS:
            w.writerow(
                [dom, name]
                + ["" if av[m][name] is None else av[m][name] for m in ("selective",) + BASELINES]
                + ["undefined" if ch[b][name] is None else ch[b][name] for b in BASELINES]
            )
    return buf.getvalue()


def write_results(records, out_dir, config: Optional[MatrixConfig] = None) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "records.csv"), "w") as f:
        f.write(records_csv(records))
    payload = {"schema": SCHEMA, "records": [r.to_json() for r in records]}
    if config is not None:
        payload["config"] = config.to_json()
    with open(os.path.join(out_dir, "records.json"), "w") as f:
        json.dump(payload, f, indent=1)
    paths = {"records_csv": "records.csv", "records_json": "records.json"}
    try:
        summary = report(records)
    except ValueError:
        return paths
    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump(summary, f, indent=1)
    with open(os.path.join(out_dir, "summary.csv"), "w") as f:
        f.write(summary_csv(summary))
    paths.update(summary_json="summary.json", summary_csv="summary.csv")
    return paths


def load_records(path) -> List[BenchRecord]:
    if os.path.isdir(path):
        path = os.path.join(path, "records.json")
    with open(path) as f:
        data = json.load(f)
    if data.get("schema") != SCHEMA:
        raise ValueError(f"unsupported records schema {data.get('schema')!r}")
    return [BenchRecord.from_json(r) for r in data["records"]]


def timed_run(c: MatrixConfig, progress=None):
    started = time.perf_counter()
    records = run_matrix(c, progress)
    return records, time.perf_counter() - started
