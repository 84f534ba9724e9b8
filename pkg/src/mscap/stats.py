"""Pairwise Wilcoxon rank-sum verdicts and Holm-Bonferroni ranking of optimizers.

Sign convention follows minimization: the reference sample ``a`` is better
("+") when its values are stochastically smaller than those of ``b``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

EXACT_MAX_N = 12


class StatisticsError(ValueError):
    pass


class Symbol(str, enum.Enum):
    PLUS = "+"
    EQUALS = "="
    MINUS = "-"

    def flipped(self) -> "Symbol":
        return {Symbol.PLUS: Symbol.MINUS, Symbol.MINUS: Symbol.PLUS}.get(self, self)


@dataclass(frozen=True)
class ComparisonVerdict:
    """``p_better`` is the one-sided p-value for "a is smaller than b",
    ``p_worse`` for "a is larger than b", ``p_equal`` the two-sided one."""

    symbol: Symbol
    p_equal: float
    p_better: float
    p_worse: float
    statistic: float
    method: str


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks, tied values sharing the mean of their positions."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    start = 0
    n = values.size
    while start < n:
        stop = start + 1
        while stop < n and sorted_vals[stop] == sorted_vals[start]:
            stop += 1
        ranks[order[start:stop]] = 0.5 * (start + stop + 1)
        start = stop
    return ranks


def _exact_tails(ranks: np.ndarray, n_a: int, w: float) -> tuple[float, float]:
    """P(W <= w) and P(W >= w) under the permutation null, by full enumeration."""
    # doubled ranks are integers even with midranks, so comparisons are exact
    doubled = np.rint(2 * ranks).astype(np.int64)
    w2 = int(round(2 * w))
    le = ge = total = 0
    for subset in combinations(doubled.tolist(), n_a):
        s = sum(subset)
        total += 1
        le += s <= w2
        ge += s >= w2
    return le / total, ge / total


def _normal_tails(ranks: np.ndarray, n_a: int, n_b: int, w: float) -> tuple[float, float]:
    n = n_a + n_b
    mean = n_a * (n + 1) / 2.0
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(counts ** 3 - counts)) / (n * (n - 1))
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return 1.0, 1.0
    sd = math.sqrt(var)
    # continuity correction of half a rank unit
    p_le = normal_cdf((w - mean + 0.5) / sd)
    p_ge = normal_cdf((mean - w + 0.5) / sd)
    return min(1.0, p_le), min(1.0, p_ge)


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float], alpha: float = 0.05,
                      method: str = "auto") -> ComparisonVerdict:
    """Wilcoxon rank-sum comparison of ``a`` (reference) against ``b``.

    ``method`` is "exact" (enumeration of all rank assignments), "normal"
    (tie-corrected normal approximation with continuity correction) or
    "auto", which enumerates when ``len(a) + len(b) <= 12``.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 3 or b.size < 3:
        raise StatisticsError(f"each sample needs at least 3 values (got {a.size} and {b.size})")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise StatisticsError("samples must be finite")
    if method == "auto":
        method = "exact" if a.size + b.size <= EXACT_MAX_N else "normal"
    ranks = midranks(np.concatenate([a, b]))
    w = float(ranks[: a.size].sum())
    if method == "exact":
        p_le, p_ge = _exact_tails(ranks, a.size, w)
    elif method == "normal":
        p_le, p_ge = _normal_tails(ranks, a.size, b.size, w)
    else:
        raise StatisticsError(f"unknown method {method!r}")
    p_equal = min(1.0, 2.0 * min(p_le, p_ge))
    if p_equal >= alpha:
        symbol = Symbol.EQUALS
    elif p_le < p_ge:
        symbol = Symbol.PLUS
    else:
        symbol = Symbol.MINUS
    return ComparisonVerdict(symbol, p_equal, p_le, p_ge, w, method)


def _performance(summary) -> tuple[float, float]:
    if isinstance(summary, (int, float, np.floating, np.integer)):
        return float(summary), 0.0
    if isinstance(summary, tuple):
        mean, std = summary
        return float(mean), float(std)
    values = np.asarray(summary, dtype=float)
    if values.size == 0:
        raise StatisticsError("empty performance sample")
    return float(values.mean()), float(values.std())


def problem_scores(results: Mapping[str, Mapping[str, object]]) -> dict[str, dict[str, float]]:
    """Per-problem scores: best algorithm N_A down to worst 1, ties share midranks.

    ``results[problem][algorithm]`` is a mean error, a ``(mean, std)`` pair
    or a sample of errors. Smaller mean is better; equal means are separated
    by standard deviation, and exact (mean, std) ties share the average score.
    """
    algorithms = sorted({alg for row in results.values() for alg in row})
    if not algorithms:
        raise StatisticsError("no algorithms to score")
    scores: dict[str, dict[str, float]] = {}
    for problem in sorted(results):
        row = results[problem]
        missing = [alg for alg in algorithms if alg not in row]
        if missing:
            raise StatisticsError(f"missing result for problem {problem!r}, algorithm {missing[0]!r}")
        perf = [_performance(row[alg]) for alg in algorithms]
        # rank descending so the worst gets 1; encode (mean, std) lexicographically
        order = sorted(range(len(algorithms)), key=lambda k: perf[k], reverse=True)
        score = [0.0] * len(algorithms)
        pos = 0
        while pos < len(order):
            end = pos + 1
            while end < len(order) and perf[order[end]] == perf[order[pos]]:
                end += 1
            shared = 0.5 * (pos + 1 + end)
            for k in order[pos:end]:
                score[k] = shared
            pos = end
        scores[problem] = dict(zip(algorithms, score))
    return scores


def score_problems(results: Mapping[str, Mapping[str, object]]) -> dict[str, float]:
    """Average per-problem score of every algorithm (higher is better)."""
    per_problem = problem_scores(results)
    n_tp = len(per_problem)
    algorithms = sorted(next(iter(per_problem.values())))
    return {alg: sum(s[alg] for s in per_problem.values()) / n_tp for alg in algorithms}


@dataclass(frozen=True)
class RankRow:
    j: int
    algorithm: str
    rank: float
    z: float
    p: float
    threshold: float
    rejected: bool

    @property
    def hypothesis(self) -> str:
        return "Rejected" if self.rejected else "Accepted"


@dataclass(frozen=True)
class RankTable:
    reference: str
    reference_rank: float
    n_algorithms: int
    n_problems: int
    delta: float
    rows: tuple

    def format(self) -> str:
        lines = [
            f"Holm-Bonferroni procedure (reference: {self.reference}, Rank = {self.reference_rank:.2e})",
            "j,Optimizer,Rank,z_j,p_j,delta/j,Hypothesis",
        ]
        for r in self.rows:
            lines.append(
                f"{r.j},{r.algorithm},{r.rank:.2e},{r.z:.2e},{r.p:.2e},{r.threshold:.2e},{r.hypothesis}"
            )
        return "\n".join(lines)


def holm_bonferroni(ranks: Mapping[str, float], reference: str, n_problems: int,
                    delta: float = 0.05) -> RankTable:
    """Sequentially rejective Holm-Bonferroni test of ``reference`` against every other algorithm.

    ``z_j = (R_j - R_0) / sqrt(N_A (N_A + 1) / (6 N_TP))`` and ``p_j`` is the
    lower-tail normal CDF at ``z_j``. Opponents are visited by descending rank;
    the first ``p_j >= delta / j`` accepts that and every later hypothesis.
    """
    if reference not in ranks:
        raise StatisticsError(f"reference algorithm {reference!r} not among {sorted(ranks)}")
    n_a = len(ranks)
    if n_a < 2:
        raise StatisticsError("need at least two algorithms")
    if n_problems < 1:
        raise StatisticsError("need at least one problem")
    r0 = float(ranks[reference])
    se = math.sqrt(n_a * (n_a + 1) / (6.0 * n_problems))
    opponents = sorted((alg for alg in ranks if alg != reference), key=lambda a: (-ranks[a], a))
    rows = []
    rejecting = True
    for j, alg in enumerate(opponents, start=1):
        z = (float(ranks[alg]) - r0) / se
        p = normal_cdf(z)
        threshold = delta / j
        rejecting = rejecting and p < threshold
        rows.append(RankRow(j, alg, float(ranks[alg]), z, p, threshold, rejecting))
    return RankTable(reference, r0, n_a, n_problems, delta, tuple(rows))
