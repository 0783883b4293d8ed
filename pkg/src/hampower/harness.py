"""Seeded trials, sweeps over C, edge-count and lower-bound experiments."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .classification import classify_cells
from .components import build_gamma, component_stats
from .constructor import ConstructionFailure, SoundnessError, Stage, construct
from .geometry import (CellGrid, GeometricGraph, derive_params, parse_norm, rgg_pairs,
                       sample_points, unit_ball_volume)
from .graph import Graph, UnionGraph, read_edge_list
from .hosts import PatternGraph, gen_extremal_factor, gen_extremal_power, gen_min_degree_random, pattern
from .verification import brute_force_kth_power_exists, max_tiling_upper_bound, verify_kth_power

_MASK64 = (1 << 64) - 1
HOST_KINDS = ("random", "complete", "extremal-power", "extremal-factor")
CSV_HEADER = ("C", "r", "n", "d", "k", "alpha", "trials", "successes", "rate",
              "mean_sparse_cells", "mean_components")


class ConfigError(ValueError):
    pass


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base: int, index: int) -> int:
    """Seed of trial ``index``: ``base XOR splitmix64(index)``."""
    return (int(base) & _MASK64) ^ splitmix64(int(index))


# configuration ---------------------------------------------------------------

@dataclass
class TrialConfig:
    n: int = 1000
    d: int = 2
    k: int = 1
    alpha: float = 0.5
    C: float | None = None
    r: float | None = None
    norm: str = "2"
    host: str = "random"
    pattern: str = "K3"
    seed: int = 0
    host_seed: int | None = None
    trials: int = 1
    L: int | None = None
    retries: int = 5
    emit_order: bool = False
    emit_plan: bool = False

    def validate(self) -> "TrialConfig":
        if self.n < 1 or self.d < 1 or self.k < 1:
            raise ConfigError("n, d and k must be positive")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if (self.C is None) == (self.r is None):
            raise ConfigError("give exactly one of C and r")
        if self.C is not None and not self.C > 0:
            raise ConfigError("C must be positive")
        if self.r is not None and not self.r > 0:
            raise ConfigError("r must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        try:
            parse_norm(self.norm)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.host not in HOST_KINDS and not self.host.startswith("file:"):
            raise ConfigError(f"unknown host {self.host!r}")
        return self

    @property
    def C_value(self) -> float:
        return self.C if self.C is not None else self.r**self.d * self.n

    def with_C(self, C: float) -> "TrialConfig":
        return replace(self, C=C, r=None)


_FIELD_TYPES = {f.name: f.type for f in fields(TrialConfig)}


def _coerce(key: str, value: str):
    kind = _FIELD_TYPES[key]
    if value.lower() in ("none", ""):
        return None
    if "bool" in kind:
        return value.lower() in ("1", "true", "yes", "on")
    if kind.startswith("int"):
        return int(value)
    if kind.startswith("float"):
        return float(value)
    return value


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def config_from_mapping(values: dict) -> TrialConfig:
    kwargs = {}
    for key, value in values.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kwargs[key] = _coerce(key, value) if isinstance(value, str) else value
        except ValueError:
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    return TrialConfig(**kwargs).validate()


def build_host(config: TrialConfig) -> Graph:
    n, host = config.n, config.host
    try:
        if host == "random":
            seed = config.seed if config.host_seed is None else config.host_seed
            return gen_min_degree_random(n, config.alpha, seed)
        if host == "complete":
            return Graph.complete(n)
        if host == "extremal-power":
            return gen_extremal_power(n, config.k, config.alpha)
        if host == "extremal-factor":
            return gen_extremal_factor(n, pattern(config.pattern), config.alpha)
        H = read_edge_list(host[5:])
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot build host {host!r}: {exc}") from None
    if H.n != n:
        raise ConfigError(f"host file has {H.n} vertices, config says n={n}")
    return H


# trials ------------------------------------------------------------------------

@dataclass
class TrialRecord:
    trial: int
    seed: int
    C: float
    params: dict | None
    outcome: str  # "success", "failure" or "unsound"
    stage: str | None
    detail: str
    verify_ok: bool
    stats: dict = field(default_factory=dict)
    wall_time: float = 0.0
    order: list | None = None
    plan: dict | None = None

    @property
    def success(self) -> bool:
        return self.outcome == "success"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TrialRecord":
        return cls(**json.loads(text))

    def without_time(self) -> dict:
        d = self.to_dict()
        d.pop("wall_time")
        return d


def run_trial(config: TrialConfig, trial: int = 0, H: Graph | None = None,
              seed: int | None = None) -> TrialRecord:
    """One sample of ``G`` and one construction attempt on it.

    Construction failures are recorded, not raised; only configuration
    problems raise :class:`ConfigError`.
    """
    config.validate()
    if H is None:
        H = build_host(config)
    elif H.n != config.n:
        raise ConfigError(f"host has {H.n} vertices, config says n={config.n}")
    seed = derive_seed(config.seed, trial) if seed is None else seed
    C = config.C_value
    start = time.perf_counter()
    base = dict(trial=trial, seed=seed, C=C)
    try:
        params = derive_params(config.n, config.d, config.k, config.alpha, C,
                               p_norm=config.norm, L_override=config.L)
    except ValueError as exc:
        return TrialRecord(**base, params=None, outcome="failure", stage=Stage.DEGENERATE.value,
                           detail=str(exc), verify_ok=False, wall_time=time.perf_counter() - start)

    points = sample_points(config.n, config.d, seed)
    G = GeometricGraph(points, params.r, params.p_norm)
    grid = CellGrid.for_params(points, params)
    cls = classify_cells(grid, params.R)
    gamma = build_gamma(cls, grid)
    comp = component_stats(gamma, params)
    stats = {"sparse_cells": cls.n_sparse, "components": gamma.n_components,
             "large_components": comp.large, "small_components": comp.small}
    order = plan = None
    try:
        result, plan_obj = construct(H, G, grid, params, retries=config.retries, return_plan=True)
        verify_ok = bool(verify_kth_power(result, UnionGraph(H, G), params.k))
        outcome, stage, detail = ("success", None, "") if verify_ok else ("unsound", None, "re-check failed")
        stats.update(absorbers=len(plan_obj.absorbers), connectors=len(plan_obj.connectors),
                     forbidden_size=plan_obj.forbidden_size)
        if config.emit_order:
            order = result.order.tolist()
        if config.emit_plan:
            plan = plan_obj.to_dict()
    except ConstructionFailure as exc:
        outcome, stage, detail, verify_ok = "failure", exc.stage.value, exc.report.detail, False
        stats.update({f"failure_{k}": v for k, v in exc.report.context.items()})
    except SoundnessError as exc:
        outcome, stage, detail, verify_ok = "unsound", None, str(exc), False
    return TrialRecord(**base, params=params.to_dict(), outcome=outcome, stage=stage, detail=detail,
                       verify_ok=verify_ok, stats=stats, wall_time=time.perf_counter() - start,
                       order=order, plan=plan)


_WORKER_HOST = None


def _init_worker(H):
    global _WORKER_HOST
    _WORKER_HOST = H


def _work(task):
    config, trial, seed = task
    return run_trial(config, trial, H=_WORKER_HOST, seed=seed)


def run_tasks(tasks: list, H: Graph, jobs: int = 1) -> list:
    """Run ``(config, trial, seed)`` tasks; results come back in task order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [run_trial(c, t, H=H, seed=s) for c, t, s in tasks]
    jobs = min(jobs, len(tasks), os.cpu_count() or 1)
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(H,)) as pool:
        return list(pool.map(_work, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def run_trials(config: TrialConfig, H: Graph | None = None, jobs: int = 1) -> list:
    H = build_host(config) if H is None else H
    tasks = [(config, i, derive_seed(config.seed, i)) for i in range(config.trials)]
    return run_tasks(tasks, H, jobs)


# sweeps ----------------------------------------------------------------------------

@dataclass
class SweepResult:
    axis: list
    success_rate: list
    trials_per_point: int
    rows: list = field(default_factory=list)
    records: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if any(not 0 <= x <= 1 for x in self.success_rate):
            raise ValueError("success rates must lie in [0, 1]")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow([repr(row[h]) if isinstance(row[h], float) else row[h] for h in CSV_HEADER])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SweepResult":
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError("unexpected CSV header")
        ints = {"n", "d", "k", "trials", "successes"}
        rows = [{h: int(v) if h in ints else float(v) for h, v in raw.items()} for raw in reader]
        trials = rows[0]["trials"] if rows else 0
        return cls(axis=[r["C"] for r in rows], success_rate=[r["rate"] for r in rows],
                   trials_per_point=trials, rows=rows)

    def to_json(self) -> str:
        return json.dumps({"axis": self.axis, "success_rate": self.success_rate,
                           "trials_per_point": self.trials_per_point, "rows": self.rows,
                           "records": [r.to_dict() for r in self.records]})

    @classmethod
    def from_json(cls, text: str) -> "SweepResult":
        raw = json.loads(text)
        raw["records"] = [TrialRecord(**r) for r in raw["records"]]
        return cls(**raw)


def _mean(xs) -> float:
    return float(np.mean(xs)) if len(xs) else float("nan")


def sweep_C(config: TrialConfig, C_values, trials: int, H: Graph | None = None, jobs: int = 1) -> SweepResult:
    """Success rate at each C; trial ``i`` of point ``j`` uses seed index ``j * trials + i``."""
    C_values = [float(c) for c in C_values]
    if not C_values or trials < 1:
        raise ConfigError("need at least one C value and one trial")
    base = config.with_C(C_values[0]).validate()
    H = build_host(base) if H is None else H
    tasks = []
    for j, C in enumerate(C_values):
        cfg = config.with_C(C)
        tasks.extend((cfg, i, derive_seed(config.seed, j * trials + i)) for i in range(trials))
    records = run_tasks(tasks, H, jobs)
    rows, rates = [], []
    for j, C in enumerate(C_values):
        chunk = records[j * trials:(j + 1) * trials]
        ok = sum(r.success for r in chunk)
        rate = ok / trials
        rates.append(rate)
        rows.append({"C": C, "r": (C / config.n) ** (1 / config.d), "n": config.n, "d": config.d,
                     "k": config.k, "alpha": config.alpha, "trials": trials, "successes": ok,
                     "rate": rate,
                     "mean_sparse_cells": _mean([r.stats["sparse_cells"] for r in chunk if r.stats]),
                     "mean_components": _mean([r.stats["components"] for r in chunk if r.stats])})
    return SweepResult(axis=C_values, success_rate=rates, trials_per_point=trials, rows=rows,
                       records=records)


def parse_sweep(spec: str) -> list:
    """``"C=a,b,c"`` to ``[a, b, c]``."""
    key, _, values = spec.partition("=")
    if key.strip() != "C" or not values:
        raise ConfigError(f"sweep must look like C=a,b,c, got {spec!r}")
    try:
        return [float(x) for x in values.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad sweep values in {spec!r}") from None


# edge counts ---------------------------------------------------------------------------

@dataclass
class EdgeCountStats:
    n: int
    d: int
    p_norm: float
    r: float
    trials: int
    mean: float
    std: float
    lower: float
    upper: float
    within: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def edge_count_interval(n: int, d: int, p_norm, r: float) -> tuple:
    base = math.comb(n, 2) * unit_ball_volume(d, p_norm) * r**d
    return base / 2**d, base


def edge_count_experiment(n: int, d: int, p_norm, r: float, trials: int, seed: int = 0) -> EdgeCountStats:
    """Mean edge count of ``G^d(n, r)`` against the ball-volume interval, with 3 sigma slack."""
    if not 0 < r <= 1:
        raise ValueError("r must lie in (0, 1]")
    if trials < 1:
        raise ValueError("need at least one trial")
    p = parse_norm(p_norm)
    counts = np.array([len(rgg_pairs(sample_points(n, d, derive_seed(seed, i)), r, p))
                       for i in range(trials)], dtype=float)
    mean = float(counts.mean())
    std = float(counts.std(ddof=1)) if trials > 1 else 0.0
    lo, hi = edge_count_interval(n, d, p, r)
    slack = 3 * std / math.sqrt(trials)
    return EdgeCountStats(n=n, d=d, p_norm=p, r=r, trials=trials, mean=mean, std=std, lower=lo,
                          upper=hi, within=lo - slack <= mean <= hi + slack)


# lower bound constructions ---------------------------------------------------------------

@dataclass
class LowerBoundReport:
    n: int
    host: str
    alpha: float
    r: float
    edges: int
    edges_per_n: float
    k: int | None = None
    has_power_cycle: bool | None = None  # brute force on H ∪ G, only for tiny n
    pattern: str | None = None
    tiling_bound: int | None = None
    factor_size: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def lower_bound_experiment(n: int, k_or_F, alpha: float, C_small: float, d: int = 2,
                           seed: int = 0, brute_force_limit: int = 11) -> LowerBoundReport:
    """Extremal host plus a very sparse ``G``.

    An integer selects the power-of-cycle host; a pattern selects the tiling
    host, for which the part-counting bound on F-tilings is reported.
    """
    r = (C_small / n) ** (1 / d)
    points = sample_points(n, d, seed)
    pairs = rgg_pairs(points, min(r, d**0.5), 2)
    report = dict(n=n, alpha=alpha, r=r, edges=len(pairs), edges_per_n=len(pairs) / n)
    if isinstance(k_or_F, (int, np.integer)):
        k = int(k_or_F)
        H = gen_extremal_power(n, k, alpha)
        exists = None
        if n <= brute_force_limit:
            G = Graph.from_edges(n, pairs)
            union = Graph.from_edges(n, np.vstack([H.edges(), G.edges()]), strict=False)
            exists = brute_force_kth_power_exists(union, k, max_n=brute_force_limit)
        return LowerBoundReport(**report, host="extremal-power", k=k, has_power_cycle=exists)
    F = k_or_F if isinstance(k_or_F, PatternGraph) else pattern(str(k_or_F))
    H = gen_extremal_factor(n, F, alpha)
    return LowerBoundReport(**report, host="extremal-factor", pattern=F.name,
                            tiling_bound=max_tiling_upper_bound(H, F), factor_size=n // F.n)
