"""Experiment driver: solver comparisons on one scenario and seeded parameter sweeps."""
from __future__ import annotations

import csv
import io
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import io as dio
from .dp import DpOptions, StateBudgetExceeded, dp_solve
from .exhaustive import BudgetExceeded, EnumOptions, exhaustive_solve
from .greedy import GreedyOptions, greedy_solve
from .model import Scenario, SolveResult, check_feasible, objective
from .scenario import GenConfig, generate

SWEEPABLE = ("n_d", "d2d_pair_distance_max_m", "d2d_cluster_radius_m")
ROW_HEADER = ["swept_param", "swept_value", "seed", "algo", "objective", "feasible", "n_cell_mode",
              "n_d2d_mode", "n_inactive", "states_visited", "wall_time_ms"]
AGG_HEADER = ["swept_param", "swept_value", "algo", "n_rows", "n_feasible", "mean_objective", "std_objective"]

_FLAGS = {"ca-only": "force_d2d_mode_only", "restricted": "restrict_one_d2d_per_channel",
          "per-hop": "per_hop_qos"}


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class AlgoSpec:
    """Solver name plus option flags, written ``name[+flag...]`` e.g. ``greedy+restricted``."""

    name: str
    flags: frozenset = frozenset()

    @classmethod
    def parse(cls, text: str) -> "AlgoSpec":
        name, *flags = text.strip().split("+")
        if name not in ("dp", "greedy", "exhaustive"):
            raise ValueError(f"unknown algorithm {name!r}")
        unknown = set(flags) - set(_FLAGS)
        if unknown:
            raise ValueError(f"unknown algorithm flags {sorted(unknown)}")
        if "per-hop" in flags and name != "dp":
            raise ValueError("per-hop applies to dp only")
        return cls(name, frozenset(flags))

    @property
    def tag(self) -> str:
        return "+".join([self.name, *sorted(self.flags)])

    @property
    def exact(self) -> bool:
        return self.name in ("dp", "exhaustive")

    @property
    def restricts(self) -> frozenset:
        """Flags that shrink the feasible set."""
        return self.flags - {"per-hop"}

    def run(self, scenario: Scenario, budget: int = 10 ** 6) -> SolveResult:
        kw = {_FLAGS[f]: True for f in self.flags}
        if self.name == "dp":
            return dp_solve(scenario, DpOptions(**kw))
        if self.name == "greedy":
            return greedy_solve(scenario, GreedyOptions(**kw))
        return exhaustive_solve(scenario, EnumOptions(budget=budget, **kw))


@dataclass
class ResultRow:
    swept_param: str
    swept_value: object
    seed: int
    algo: str
    objective: Optional[float]
    feasible: bool
    n_cell_mode: int
    n_d2d_mode: int
    n_inactive: int
    states_visited: int
    wall_time_ms: float
    error: Optional[str] = None

    def cells(self) -> list[str]:
        feasible = "error" if self.error else str(self.feasible).lower()
        return [self.swept_param, _fmt(self.swept_value), str(self.seed), self.algo,
                "" if self.objective is None else repr(self.objective), feasible,
                str(self.n_cell_mode), str(self.n_d2d_mode), str(self.n_inactive),
                str(self.states_visited), f"{self.wall_time_ms:.3f}"]


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _cross_check(scenario: Scenario, results: dict) -> list[str]:
    problems = []
    for spec, res in results.items():
        if res is None or not res.feasible:
            continue
        if not check_feasible(scenario, res.assignment).ok:
            problems.append(f"{spec.tag}: returned assignment is infeasible")
        if abs(objective(scenario, res.assignment) - res.objective) > 1e-9:
            problems.append(f"{spec.tag}: objective does not re-validate")
    for a, ra in results.items():
        for b, rb in results.items():
            if a == b or ra is None or rb is None:
                continue
            va = ra.objective if ra.feasible else -math.inf
            vb = rb.objective if rb.feasible else -math.inf
            if a.exact and b.exact and a.restricts == b.restricts:
                if ra.feasible != rb.feasible or (ra.feasible and abs(va - vb) > 1e-9):
                    problems.append(f"{a.tag} != {b.tag}: {va} vs {vb}")
            elif a.exact and a.restricts <= b.restricts and va < vb - 1e-9:
                problems.append(f"{a.tag} < {b.tag}: {va} vs {vb}")
            elif (a.name == b.name == "greedy" and a.restricts < b.restricts
                  and va < vb - 1e-9):
                problems.append(f"{a.tag} < {b.tag}: {va} vs {vb}")
    return problems


def run_compare(scenario: Scenario, algos: Sequence, swept_param: str = "", swept_value="",
                seed: int = 0, budget: int = 10 ** 6, check: bool = True):
    """One row per algorithm on the same scenario, cross-checked.

    Returns (rows, problems). With ``check`` set, a non-empty problem list
    raises InvariantViolation instead.
    """
    specs = [a if isinstance(a, AlgoSpec) else AlgoSpec.parse(a) for a in algos]
    rows, results = [], {}
    for spec in specs:
        try:
            res = spec.run(scenario, budget)
        except (BudgetExceeded, StateBudgetExceeded) as exc:
            results[spec] = None
            rows.append(ResultRow(swept_param, swept_value, seed, spec.tag, None, False,
                                  0, 0, scenario.n_d, 0, 0.0, error=str(exc)))
            continue
        results[spec] = res
        cell, d2d, inactive = res.mode_counts(scenario)
        rows.append(ResultRow(swept_param, swept_value, seed, spec.tag,
                              res.objective if res.feasible else None, res.feasible,
                              cell, d2d, inactive, res.stats.states_visited, res.stats.wall_time * 1e3))
    problems = _cross_check(scenario, results)
    if check and problems:
        raise InvariantViolation("; ".join(problems))
    return rows, problems


@dataclass
class SweepSpec:
    base: GenConfig
    param: str
    values: list
    seeds: int
    algos: list
    output: Optional[str] = None
    budget: int = 10 ** 6

    def __post_init__(self):
        if self.param not in SWEEPABLE:
            raise ValueError(f"cannot sweep {self.param!r}; choose from {SWEEPABLE}")
        if not self.values or self.seeds < 1 or not self.algos:
            raise ValueError("sweep needs at least one value, one seed and one algorithm")
        self.algos = [a if isinstance(a, AlgoSpec) else AlgoSpec.parse(a) for a in self.algos]
        if self.param == "n_d":
            self.values = [int(v) for v in self.values]
        else:
            self.values = [float(v) for v in self.values]

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepSpec":
        doc = dict(doc)
        base = GenConfig.from_dict(doc.pop("base", {}))
        if "master_seed" in doc:
            base = base.replace(master_seed=int(doc.pop("master_seed")))
        return cls(base=base, **doc)


def scenario_seed(master_seed: int, seed_index: int) -> int:
    """Scenario seed for the ``seed_index``-th replicate; shared by every sweep point."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(seed_index),))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class SweepOutcome:
    rows: list
    problems: list = field(default_factory=list)


def _run_point(args):
    spec, value, seed_index = args
    seed = scenario_seed(spec.base.master_seed, seed_index)
    cfg = spec.base.replace(**{spec.param: value, "master_seed": seed})
    scenario = generate(cfg)
    rows, problems = run_compare(scenario, spec.algos, spec.param, value, seed, spec.budget, check=False)
    return rows, [f"{spec.param}={value} seed={seed}: {p}" for p in problems]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ROW_HEADER)
    for row in rows:
        writer.writerow(row.cells())
    return buf.getvalue()


def aggregate(rows) -> list[list]:
    groups = {}
    for row in rows:
        groups.setdefault((row.swept_param, row.swept_value, row.algo), []).append(row)
    out = []
    for (param, value, algo), members in groups.items():
        vals = [r.objective for r in members if r.feasible]
        mean = statistics.fmean(vals) if vals else None
        std = statistics.pstdev(vals) if len(vals) > 1 else (0.0 if vals else None)
        out.append([param, value, algo, len(members), len(vals), mean, std])
    return out


def aggregate_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(AGG_HEADER)
    for param, value, algo, n, n_ok, mean, std in aggregate(rows):
        writer.writerow([param, _fmt(value), algo, n, n_ok,
                         "" if mean is None else repr(mean), "" if std is None else repr(std)])
    return buf.getvalue()


def paired_gaps(rows, better_algo: str, worse_algo: str) -> dict:
    """Per swept value, the list of per-seed objective gaps (both runs feasible)."""
    by_key = {(r.swept_value, r.seed, r.algo): r for r in rows}
    out = {}
    for (value, seed, algo), row in by_key.items():
        if algo != better_algo or not row.feasible:
            continue
        other = by_key.get((value, seed, worse_algo))
        if other is not None and other.feasible:
            out.setdefault(value, []).append(row.objective - other.objective)
    return out


def run_sweep(spec: SweepSpec, workers: int = 1, output: Optional[str] = None) -> SweepOutcome:
    """Run every (value, seed) point and write ``<output>`` plus ``<stem>_summary.csv``.

    Rows come back in (value, seed, algorithm) order whatever the worker count.
    """
    tasks = [(spec, value, k) for value in spec.values for k in range(spec.seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_point, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        parts = [_run_point(t) for t in tasks]
    rows = [r for part, _ in parts for r in part]
    problems = [p for _, part in parts for p in part]
    output = output or spec.output
    if output:
        dio.write_atomic(output, rows_to_csv(rows))
        dio.write_atomic(summary_path(output), aggregate_to_csv(rows))
    return SweepOutcome(rows, problems)


def summary_path(output) -> str:
    output = str(output)
    stem = output[:-4] if output.endswith(".csv") else output
    return f"{stem}_summary.csv"
