"""Experiment grids: configuration, cell execution, CSV persistence and comparisons.

Summary CSV columns: ``problem,dimension,algorithm,seed,final_error,final_fitness,n_eval,status``.
Trend CSV columns: ``n_eval,best_fitness``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import algorithm, baseline
from .benchmarks import REGISTRY, get_benchmark
from .core import ConfigurationError, Problem, RunConfig, RunRecord
from .neuralnet import (
    KinDataset,
    load_dataset,
    mse,
    mse_objective,
    decode_weights,
    n_weights,
    split_three_ways,
    synth_kinematics,
)
from .stats import StatisticsError, holm_bonferroni, score_problems, wilcoxon_rank_sum, Symbol

log = logging.getLogger(__name__)

SUMMARY_HEADER = ["problem", "dimension", "algorithm", "seed", "final_error",
                  "final_fitness", "n_eval", "status"]
TREND_HEADER = ["n_eval", "best_fitness"]

ALGORITHMS = {
    algorithm.ALGORITHM_ID: algorithm.run,
    baseline.ALGORITHM_ID: baseline.run_de,
}
_OVERRIDES = {"pop_size": int, "epsilon": float, "gens_ms": int}


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    label: str
    overrides: tuple = ()

    def config(self, seed: int, max_eval: int) -> RunConfig:
        return RunConfig(seed=seed, max_eval=max_eval, **dict(self.overrides))


@dataclass(frozen=True)
class NNProblemSpec:
    data: str
    hidden: int

    @property
    def dimension(self) -> int:
        return n_weights(self.hidden)

    @property
    def name(self) -> str:
        if self.data.startswith("synthetic:"):
            stem = self.data.replace(":", "-")
        else:
            stem = Path(self.data).stem
        return f"nn-{stem}-h{self.hidden}"


@dataclass
class ExperimentConfig:
    algorithms: list
    problems: list
    dimensions: list = field(default_factory=lambda: [10])
    seeds: list = field(default_factory=lambda: list(range(1, 11)))
    budget_multiplier: int = 5000
    output_dir: str = "results"
    instance_seed: int = 0

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigurationError("config must be a JSON object")
        known = {"algorithms", "problems", "dimensions", "seeds", "budget_multiplier",
                 "output_dir", "instance_seed"}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigurationError(f"unknown field(s): {', '.join(unknown)}")
        for required in ("algorithms", "problems"):
            if required not in raw:
                raise ConfigurationError(f"field '{required}' is required")
        algorithms = [_parse_algorithm(a, k) for k, a in enumerate(_as_list(raw["algorithms"], "algorithms"))]
        labels = [a.label for a in algorithms]
        if len(set(labels)) != len(labels):
            raise ConfigurationError("field 'algorithms': duplicate algorithm labels")
        problems = [_parse_problem(p, k) for k, p in enumerate(_as_list(raw["problems"], "problems"))]
        dimensions = _as_list(raw.get("dimensions", [10]), "dimensions")
        for k, d in enumerate(dimensions):
            if not isinstance(d, int) or isinstance(d, bool) or d < 2:
                raise ConfigurationError(f"field 'dimensions[{k}]': expected integer >= 2, got {d!r}")
        seeds = raw.get("seeds", 10)
        if isinstance(seeds, int) and not isinstance(seeds, bool):
            if seeds < 1:
                raise ConfigurationError("field 'seeds': count must be positive")
            seeds = list(range(1, seeds + 1))
        else:
            seeds = _as_list(seeds, "seeds")
            if not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
                raise ConfigurationError("field 'seeds': expected a count or a list of integers")
            if len(set(seeds)) != len(seeds):
                raise ConfigurationError("field 'seeds': duplicate seeds")
        mult = raw.get("budget_multiplier", 5000)
        if not isinstance(mult, int) or isinstance(mult, bool) or mult < 1:
            raise ConfigurationError(f"field 'budget_multiplier': expected positive integer, got {mult!r}")
        out = raw.get("output_dir", "results")
        if not isinstance(out, str) or not out:
            raise ConfigurationError("field 'output_dir': expected a path string")
        inst = raw.get("instance_seed", 0)
        if not isinstance(inst, int) or isinstance(inst, bool):
            raise ConfigurationError("field 'instance_seed': expected integer")
        return cls(algorithms, problems, dimensions, seeds, mult, out, inst)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text(encoding="utf-8")
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(raw)

    def cells(self) -> list:
        """Every (problem, dimension, algorithm, seed) run, sorted for deterministic output."""
        cells = []
        for prob in self.problems:
            dims = [prob.dimension] if isinstance(prob, NNProblemSpec) else self.dimensions
            for d in dims:
                for alg in self.algorithms:
                    for seed in self.seeds:
                        cells.append(Cell(prob, d, alg, seed, self.budget_multiplier * d, self.instance_seed))
        cells.sort(key=lambda c: c.sort_key)
        return cells


def _as_list(value, name) -> list:
    if not isinstance(value, list) or not value:
        raise ConfigurationError(f"field '{name}': expected a non-empty list")
    return value


def _parse_algorithm(entry, k) -> AlgorithmSpec:
    where = f"algorithms[{k}]"
    if isinstance(entry, str):
        entry = {"name": entry}
    if not isinstance(entry, dict) or "name" not in entry:
        raise ConfigurationError(f"field '{where}': expected a name or an object with 'name'")
    name = entry["name"]
    if name not in ALGORITHMS:
        raise ConfigurationError(f"field '{where}.name': unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}")
    overrides = []
    for key, value in entry.items():
        if key in ("name", "label"):
            continue
        if key not in _OVERRIDES:
            raise ConfigurationError(f"field '{where}.{key}': unknown parameter")
        try:
            overrides.append((key, _OVERRIDES[key](value)))
        except (TypeError, ValueError):
            raise ConfigurationError(f"field '{where}.{key}': bad value {value!r}") from None
    spec = AlgorithmSpec(name, str(entry.get("label", name)), tuple(sorted(overrides)))
    try:
        spec.config(1, 1).validate(min_pop=6 if name == algorithm.ALGORITHM_ID else 4)
    except ConfigurationError as exc:
        raise ConfigurationError(f"field '{where}': {exc}") from None
    return spec


def _parse_problem(entry, k):
    where = f"problems[{k}]"
    if isinstance(entry, str):
        if entry not in REGISTRY:
            raise ConfigurationError(f"field '{where}': unknown benchmark {entry!r}")
        return entry
    if isinstance(entry, dict) and "nn" in entry:
        hidden = entry.get("hidden", 4)
        if not isinstance(hidden, int) or hidden < 1:
            raise ConfigurationError(f"field '{where}.hidden': expected positive integer")
        data = entry["nn"]
        if not isinstance(data, str):
            raise ConfigurationError(f"field '{where}.nn': expected a path or synthetic:<noise>:<n>")
        parse_data_source(data)
        return NNProblemSpec(data, hidden)
    raise ConfigurationError(f"field '{where}': expected a benchmark name or {{\"nn\": ..., \"hidden\": ...}}")


def parse_data_source(data: str):
    """``synthetic:<noise>:<n>`` -> ("synthetic", noise, n); anything else is a CSV path."""
    if data.startswith("synthetic:"):
        parts = data.split(":")
        if len(parts) != 3 or parts[1] not in ("none", "medium", "high"):
            raise ConfigurationError(f"bad synthetic data source {data!r}; use synthetic:<medium|high>:<n>")
        try:
            n = int(parts[2])
        except ValueError:
            raise ConfigurationError(f"bad row count in {data!r}") from None
        if n < 3:
            raise ConfigurationError(f"synthetic data needs at least 3 rows, got {n}")
        return ("synthetic", parts[1], n)
    return ("file", data, None)


@lru_cache(maxsize=8)
def get_dataset(data: str, seed: int = 0) -> KinDataset:
    kind, a, n = parse_data_source(data)
    if kind == "synthetic":
        return synth_kinematics(n, a, seed)
    return load_dataset(a)


@dataclass(frozen=True)
class Cell:
    problem: Union[str, NNProblemSpec]
    dimension: int
    algorithm: AlgorithmSpec
    seed: int
    max_eval: int
    instance_seed: int = 0

    @property
    def problem_name(self) -> str:
        return self.problem if isinstance(self.problem, str) else self.problem.name

    @property
    def sort_key(self):
        return (self.problem_name, self.dimension, self.algorithm.label, self.seed)

    @property
    def trend_filename(self) -> str:
        return f"{self.problem_name}_D{self.dimension}_{self.algorithm.label}_s{self.seed}.csv"

    def build_problem(self) -> Problem:
        if isinstance(self.problem, NNProblemSpec):
            ds = get_dataset(self.problem.data, self.instance_seed)
            split = split_three_ways(ds, self.instance_seed)
            return mse_objective(ds, split.train, self.problem.hidden, name=self.problem.name)
        return get_benchmark(self.problem, self.dimension, self.instance_seed)


def run_cell(cell: Cell) -> tuple[dict, Optional[str]]:
    """Execute one cell; failures are reported in the row, never raised."""
    row = {"problem": cell.problem_name, "dimension": cell.dimension,
           "algorithm": cell.algorithm.label, "seed": cell.seed}
    try:
        problem = cell.build_problem()
        record = ALGORITHMS[cell.algorithm.name](problem, cell.algorithm.config(cell.seed, cell.max_eval))
    except Exception as exc:  # a failed cell must not take the grid down
        log.warning("cell %s failed: %s", cell.sort_key, exc)
        row.update(final_error="", final_fitness="", n_eval="", status="failed")
        return row, None
    err = record.final_error
    row.update(final_error="" if err is None else repr(float(err)),
               final_fitness=repr(float(record.best_f)), n_eval=record.n_eval,
               status="ok" if math.isfinite(record.best_f) else "failed")
    return row, record.trend_csv()


def max_workers() -> int:
    env = os.environ.get("MSCAP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"MSCAP_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def map_cells(func, items, workers: Optional[int] = None) -> list:
    workers = max_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [func(c) for c in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))


def summary_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_HEADER, lineterminator="\n")
    writer.writeheader()
    for row in sorted(rows, key=lambda r: (r["problem"], int(r["dimension"]), r["algorithm"], int(r["seed"]))):
        writer.writerow(row)
    return buf.getvalue()


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None) -> Path:
    """Run all cells, write trend CSVs and ``summary.csv``; returns the summary path."""
    out = Path(config.output_dir)
    trend_dir = out / "trends"
    trend_dir.mkdir(parents=True, exist_ok=True)
    cells = config.cells()
    results = map_cells(run_cell, cells, workers)
    rows = []
    for cell, (row, trend) in zip(cells, results):
        rows.append(row)
        if trend is not None:
            (trend_dir / cell.trend_filename).write_text(trend, encoding="utf-8")
    path = out / "summary.csv"
    path.write_text(summary_csv(rows), encoding="utf-8")
    return path


def read_summary(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SUMMARY_HEADER:
            raise ConfigurationError(f"{path}: header must be {','.join(SUMMARY_HEADER)}")
        return list(reader)


def _row_value(row) -> float:
    return float(row["final_error"] if row["final_error"] != "" else row["final_fitness"])


def group_errors(rows: list) -> dict:
    """``{(problem, dimension): {algorithm: [errors...]}}`` over successful runs."""
    out: dict = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        key = (row["problem"], int(row["dimension"]))
        out.setdefault(key, {}).setdefault(row["algorithm"], []).append(_row_value(row))
    return out


@dataclass
class Comparison:
    cells: list  # (problem, dimension, verdict)

    def totals(self) -> tuple[int, int, int]:
        """Counts of (-, =, +) verdicts."""
        symbols = [v.symbol for _, _, v in self.cells]
        return (symbols.count(Symbol.MINUS), symbols.count(Symbol.EQUALS), symbols.count(Symbol.PLUS))

    def format(self) -> str:
        lines = ["problem,dimension,verdict,p_equal"]
        for problem, dim, v in self.cells:
            lines.append(f"{problem},{dim},{v.symbol.value},{v.p_equal:.3e}")
        m, e, p = self.totals()
        lines.append(f"TOT (-/=/+): {m}/{e}/{p}")
        return "\n".join(lines)


def _single_algorithm_samples(rows: list, which: str) -> dict:
    labels = sorted({r["algorithm"] for r in rows})
    if len(labels) > 1:
        raise StatisticsError(f"summary {which} mixes algorithms {labels}; compare one algorithm per file")
    return {key: next(iter(by_alg.values())) for key, by_alg in group_errors(rows).items()}


def compare_summaries(a_rows: list, b_rows: list, alpha: float = 0.05) -> Comparison:
    """Per (problem, dimension) Wilcoxon verdicts of summary ``a`` (reference) versus ``b``."""
    a = _single_algorithm_samples(a_rows, "a")
    b = _single_algorithm_samples(b_rows, "b")
    if set(a) != set(b):
        only_a = sorted(set(a) - set(b))
        only_b = sorted(set(b) - set(a))
        raise StatisticsError(f"summaries cover different cells: only in a {only_a}, only in b {only_b}")
    cells = [(p, d, wilcoxon_rank_sum(a[(p, d)], b[(p, d)], alpha)) for p, d in sorted(a)]
    return Comparison(cells)


def rank_summaries(rows: list, reference: str, delta: float = 0.05):
    grouped = group_errors(rows)
    algorithms = sorted({r["algorithm"] for r in rows})
    results = {}
    for (problem, dim), by_alg in grouped.items():
        cell = f"{problem}@D{dim}"
        for alg in algorithms:
            if alg not in by_alg:
                raise StatisticsError(f"coverage hole: no successful run of {alg!r} on {problem!r} D={dim}")
        results[cell] = {alg: (float(np.mean(v)), float(np.std(v))) for alg, v in by_alg.items()}
    if not results:
        raise StatisticsError("no successful runs to rank")
    ranks = score_problems(results)
    return holm_bonferroni(ranks, reference, len(results), delta)


@dataclass
class NNTrainingResult:
    seed: int
    record: RunRecord
    train_mse: float
    validation_mse: float
    test_mse: float


def _train_one(args) -> NNTrainingResult:
    data, hidden, seed, multiplier, split_seed = args
    ds = get_dataset(data, split_seed)
    split = split_three_ways(ds, split_seed)
    problem = mse_objective(ds, split.train, hidden, name=NNProblemSpec(data, hidden).name)
    record = algorithm.run(problem, RunConfig(seed=seed, max_eval=multiplier * problem.dimension))
    net = decode_weights(record.best_x, hidden)
    return NNTrainingResult(seed, record, mse(net, ds, split.train),
                            mse(net, ds, split.validation), mse(net, ds, split.test))


def train_nn(data: str, hidden: int, seeds: int, multiplier: int, split_seed: int = 0,
             workers: Optional[int] = None) -> list:
    if hidden < 1:
        raise ConfigurationError("hidden must be at least 1")
    if seeds < 1:
        raise ConfigurationError("seeds must be at least 1")
    if multiplier < 1:
        raise ConfigurationError("budget multiplier must be at least 1")
    parse_data_source(data)
    get_dataset(data, split_seed)  # surface dataset errors before any run
    jobs = [(data, hidden, s, multiplier, split_seed) for s in range(1, seeds + 1)]
    return map_cells(_train_one, jobs, workers)


NN_SUMMARY_HEADER = ["seed", "hidden", "dimension", "n_eval", "train_mse", "validation_mse", "test_mse"]


def nn_summary_csv(results: list, hidden: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(NN_SUMMARY_HEADER)
    for r in results:
        writer.writerow([r.seed, hidden, n_weights(hidden), r.record.n_eval,
                         repr(r.train_mse), repr(r.validation_mse), repr(r.test_mse)])
    return buf.getvalue()
