"""Problem definition, bound handling, budget accounting and swarm state."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class ConfigurationError(ValueError):
    """Raised for invalid run or problem configuration, before any evaluation."""


class EvaluationError(ArithmeticError):
    """Raised when a candidate cannot be evaluated (e.g. non-finite coordinates)."""


class BudgetExhausted(Exception):
    """Signals that no evaluations remain; the caller terminates the run."""


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float).reshape(-1)
        upper = np.array(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise ConfigurationError(
                f"lower and upper bounds differ in length ({lower.size} vs {upper.size})"
            )
        if lower.size == 0:
            raise ConfigurationError("bounds must have at least one dimension")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ConfigurationError("bounds must be finite")
        if np.any(lower >= upper):
            bad = int(np.flatnonzero(lower >= upper)[0])
            raise ConfigurationError(
                f"degenerate bounds at dimension {bad}: [{lower[bad]}, {upper[bad]}]"
            )
        lower.setflags(write=False)
        upper.setflags(write=False)
        width = upper - lower
        width.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "_width", width)

    @classmethod
    def uniform(cls, low: float, high: float, dimension: int) -> "Bounds":
        return cls(np.full(dimension, low, dtype=float), np.full(dimension, high, dtype=float))

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self._width

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x < self.upper))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        x = self.lower + rng.random(self.dimension) * self.width
        # lower + u*width can round up to upper for u close to 1
        return np.where(x >= self.upper, np.nextafter(self.upper, -np.inf), x)


@dataclass(frozen=True)
class Problem:
    """A box-constrained minimization problem.

    ``optimum`` is the known global minimum fitness, or None when unknown
    (e.g. neural-network training objectives).
    """

    dimension: int
    bounds: Bounds
    objective: Callable[[np.ndarray], float]
    name: str = "problem"
    optimum: Optional[float] = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ConfigurationError("dimension must be positive")
        if self.bounds.dimension != self.dimension:
            raise ConfigurationError(
                f"bounds have {self.bounds.dimension} dimensions, problem has {self.dimension}"
            )


@dataclass
class BudgetLedger:
    """Evaluation counter plus the best-so-far record and fitness trend.

    A trend sample ``(n_eval, best_fitness)`` is taken at every improvement
    of the best-so-far fitness and at every multiple of ``sample_every``.
    """

    max_eval: int
    n_eval: int = 0
    nonfinite: int = 0
    best_x: Optional[np.ndarray] = None
    best_f: float = math.inf
    trend: list = field(default_factory=list)
    sample_every: int = 0

    def __post_init__(self):
        if self.max_eval < 1:
            raise ConfigurationError("max_eval must be positive")
        if self.sample_every <= 0:
            self.sample_every = max(1, math.ceil(self.max_eval / 500))

    @property
    def exhausted(self) -> bool:
        return self.n_eval >= self.max_eval

    @property
    def progress(self) -> float:
        return self.n_eval / self.max_eval

    def _record(self, x: np.ndarray, f: float) -> None:
        improved = f < self.best_f
        if improved:
            self.best_f = f
            self.best_x = np.array(x, dtype=float)
        if improved or self.n_eval % self.sample_every == 0:
            self.sample()

    def sample(self) -> None:
        """Append the current best to the trend unless this n_eval is already sampled."""
        if self.best_x is None:
            return
        if self.trend and self.trend[-1][0] == self.n_eval:
            self.trend[-1] = (self.n_eval, self.best_f)
        else:
            self.trend.append((self.n_eval, self.best_f))


def evaluate(problem: Problem, x: np.ndarray, ledger: BudgetLedger) -> float:
    """Evaluate ``x`` on ``problem``, charging one evaluation to ``ledger``.

    Non-finite objective values come back as +inf and are counted in
    ``ledger.nonfinite``.
    """
    if ledger.exhausted:
        raise BudgetExhausted(f"budget of {ledger.max_eval} evaluations exhausted")
    ledger.n_eval += 1
    f = float(problem.objective(x))
    if not math.isfinite(f):
        ledger.nonfinite += 1
        f = math.inf
    ledger._record(x, f)
    return f


def init_velocity(bounds: Bounds, rng: np.random.Generator) -> np.ndarray:
    """Fresh velocity, component j uniform in [-w_j/2, w_j/2) for range width w_j."""
    return (rng.random(bounds.dimension) - 0.5) * bounds.width


def toroidal_wrap(x: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Map every coordinate into [lower, upper) by modular arithmetic on the range width.

    Coordinates already inside the box are returned unchanged (bit-exact), so
    the map is idempotent.
    """
    x = np.asarray(x, dtype=float)
    # any nan/inf component makes the sum non-finite
    if not math.isfinite(x.sum()):
        raise EvaluationError("cannot wrap a non-finite position")
    lo, hi = bounds.lower, bounds.upper
    outside = (x < lo) | (x >= hi)
    if not outside.any():
        return x.copy()
    y = x.copy()
    wrapped = lo + np.mod(x - lo, bounds.width)
    wrapped = np.where(wrapped >= hi, np.nextafter(hi, -np.inf), wrapped)
    y[outside] = wrapped[outside]
    return y


@dataclass
class Particle:
    x: np.ndarray
    v: np.ndarray
    f: float
    life: int


class Swarm:
    """N particles stored as arrays: positions ``x``, velocities ``v``,
    fitnesses ``f`` and lifetimes ``life``; ``best`` indexes the minimum fitness.
    """

    def __init__(self, x: np.ndarray, v: np.ndarray, f: np.ndarray, life=None, best=None):
        self.x = np.array(x, dtype=float)
        self.v = np.array(v, dtype=float)
        self.f = np.array(f, dtype=float)
        n = self.f.size
        self.life = np.zeros(n, dtype=np.int64) if life is None else np.array(life, dtype=np.int64)
        if self.x.shape != self.v.shape or self.x.shape[0] != n:
            raise ConfigurationError("inconsistent swarm array shapes")
        self.best = int(np.argmin(self.f)) if best is None else int(best)

    def __len__(self) -> int:
        return self.f.size

    @property
    def size(self) -> int:
        return self.f.size

    @property
    def best_f(self) -> float:
        return float(self.f[self.best])

    @property
    def best_x(self) -> np.ndarray:
        return self.x[self.best]

    def particle(self, i: int) -> Particle:
        return Particle(self.x[i].copy(), self.v[i].copy(), float(self.f[i]), int(self.life[i]))

    def refresh_best(self) -> None:
        # keep the current witness when it is still among the minima
        fmin = self.f.min()
        if self.f[self.best] > fmin:
            self.best = int(np.argmin(self.f))

    def check_best(self) -> bool:
        return bool(self.f[self.best] <= self.f.min())


@dataclass(frozen=True)
class RunConfig:
    pop_size: int = 50
    epsilon: float = 1e-6
    gens_ms: int = 3
    max_eval: Optional[int] = None
    seed: int = 0

    def validate(self, min_pop: int = 6) -> None:
        if self.pop_size < min_pop:
            raise ConfigurationError(f"pop_size must be at least {min_pop}, got {self.pop_size}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.gens_ms < 1:
            raise ConfigurationError(f"gens_ms must be positive, got {self.gens_ms}")
        if self.max_eval is not None and self.max_eval < 1:
            raise ConfigurationError(f"max_eval must be positive, got {self.max_eval}")

    @property
    def max_age(self) -> int:
        return max(1, math.ceil(-math.log(self.epsilon)))

    def budget(self, dimension: int) -> int:
        return self.max_eval if self.max_eval is not None else 5000 * dimension

    def as_dict(self) -> dict:
        return {
            "pop_size": self.pop_size,
            "epsilon": self.epsilon,
            "gens_ms": self.gens_ms,
            "max_eval": self.max_eval,
            "seed": self.seed,
        }


@dataclass
class RunRecord:
    algorithm: str
    problem: str
    dimension: int
    seed: int
    config: dict
    best_x: np.ndarray
    best_f: float
    n_eval: int
    max_eval: int
    trend: list
    optimum: Optional[float] = None
    nonfinite: int = 0
    status: str = "ok"

    @property
    def final_error(self) -> Optional[float]:
        if self.optimum is None:
            return None
        return self.best_f - self.optimum

    def trend_csv(self) -> str:
        lines = ["n_eval,best_fitness"]
        lines.extend(f"{n},{f!r}" for n, f in self.trend)
        return "\n".join(lines) + "\n"


def make_record(algorithm: str, problem: Problem, config: RunConfig, ledger: BudgetLedger) -> RunRecord:
    ledger.sample()
    return RunRecord(
        algorithm=algorithm,
        problem=problem.name,
        dimension=problem.dimension,
        seed=config.seed,
        config=config.as_dict(),
        best_x=ledger.best_x,
        best_f=ledger.best_f,
        n_eval=ledger.n_eval,
        max_eval=ledger.max_eval,
        trend=list(ledger.trend),
        optimum=problem.optimum,
        nonfinite=ledger.nonfinite,
    )
