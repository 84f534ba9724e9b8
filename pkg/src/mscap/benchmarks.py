"""Seeded benchmark landscapes: separable, non-separable, ill-conditioned and multimodal.

Every registered function is written so that, in its raw coordinates ``z``,
its minimum sits at :data:`BASE_OPTIMA` (all zeros except rosenbrock, which
is minimal at all ones). A benchmark instance evaluates
``f(R @ (x - shift) + z_opt) + bias`` so that the optimum point is always
``shift`` (which defaults to ``z_opt``), rotated or not.

Registry names::

    <base>            plain function
    shifted-<base>    random shift in the middle 80% of the box
    rotated-<base>    random shift and random orthogonal rotation
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .core import Bounds, ConfigurationError, Problem


class UnknownBenchmark(KeyError):
    pass


def sphere(z):
    return float(np.dot(z, z))


def ellipsoid(z):
    d = z.size
    if d == 1:
        return float(z[0] ** 2)
    weights = 10.0 ** (6.0 * np.arange(d) / (d - 1))
    return float(np.dot(weights, z * z))


def schwefel_1_2(z):
    c = np.cumsum(z)
    return float(np.dot(c, c))


def rosenbrock(z):
    return float(np.sum(100.0 * (z[1:] - z[:-1] ** 2) ** 2 + (1.0 - z[:-1]) ** 2))


def rastrigin(z):
    # each term is nonnegative, so the value never drops below 0 by rounding
    return float(np.sum(z * z + 10.0 * (1.0 - np.cos(2.0 * np.pi * z))))


def ackley(z):
    d = z.size
    a = -20.0 * np.expm1(-0.2 * np.sqrt(np.dot(z, z) / d))
    b = np.exp(1.0) - np.exp(np.sum(np.cos(2.0 * np.pi * z)) / d)
    return float(a + b)


def griewank(z):
    i = np.arange(1, z.size + 1)
    return float(1.0 + np.dot(z, z) / 4000.0 - np.prod(np.cos(z / np.sqrt(i))))


BASE_FUNCTIONS: dict[str, Callable[[np.ndarray], float]] = {
    "ackley": ackley,
    "ellipsoid": ellipsoid,
    "griewank": griewank,
    "rastrigin": rastrigin,
    "rosenbrock": rosenbrock,
    "schwefel-1.2": schwefel_1_2,
    "sphere": sphere,
}

DEFAULT_BOUNDS: dict[str, tuple[float, float]] = {
    "ackley": (-32.0, 32.0),
    "ellipsoid": (-100.0, 100.0),
    "griewank": (-600.0, 600.0),
    "rastrigin": (-5.12, 5.12),
    "rosenbrock": (-30.0, 30.0),
    "schwefel-1.2": (-100.0, 100.0),
    "sphere": (-100.0, 100.0),
}

SEPARABLE = frozenset({"sphere", "ellipsoid", "rastrigin"})


def base_optimum(function: str, dimension: int) -> np.ndarray:
    if function == "rosenbrock":
        return np.ones(dimension)
    return np.zeros(dimension)


def random_rotation(dimension: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix from QR of a Gaussian matrix, diagonal signs normalized."""
    q, r = np.linalg.qr(rng.standard_normal((dimension, dimension)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def random_shift(bounds: Bounds, rng: np.random.Generator) -> np.ndarray:
    """Uniform point in the middle 80% of every range."""
    return bounds.lower + bounds.width * (0.1 + 0.8 * rng.random(bounds.dimension))


@dataclass
class BenchmarkSpec:
    """Description of one benchmark instance.

    ``shift`` / ``rotation`` accept an explicit array, True (draw from the
    seed in :func:`make_benchmark`) or None/False (identity).
    """

    name: str
    dimension: int
    function: Optional[str] = None
    shift: Union[np.ndarray, bool, None] = None
    rotation: Union[np.ndarray, bool, None] = None
    bounds: Optional[Bounds] = None
    bias: float = 0.0

    def __post_init__(self):
        if self.function is None:
            self.function = self.name
        if self.function not in BASE_FUNCTIONS:
            raise UnknownBenchmark(f"unknown benchmark function {self.function!r}")
        if self.dimension < 2:
            raise ConfigurationError(f"benchmark dimension must be at least 2, got {self.dimension}")
        if self.bounds is None:
            lo, hi = DEFAULT_BOUNDS[self.function]
            self.bounds = Bounds.uniform(lo, hi, self.dimension)

    @property
    def optimum(self) -> float:
        return self.bias


class Benchmark:
    """Callable objective ``f(R @ (x - shift) + z_opt) + bias``; immutable after construction."""

    def __init__(self, function: str, shift: np.ndarray, rotation: Optional[np.ndarray], bias: float):
        self.function = function
        self._f = BASE_FUNCTIONS[function]
        self.shift = np.array(shift, dtype=float)
        self.shift.setflags(write=False)
        self.z_opt = base_optimum(function, self.shift.size)
        self.rotation = None if rotation is None else np.array(rotation, dtype=float)
        if self.rotation is not None:
            self.rotation.setflags(write=False)
        self.bias = float(bias)

    def __call__(self, x) -> float:
        z = np.asarray(x, dtype=float) - self.shift
        if self.rotation is not None:
            z = self.rotation @ z
        return self._f(z + self.z_opt) + self.bias


def make_benchmark(spec: BenchmarkSpec, seed: int = 0) -> Problem:
    rng = np.random.default_rng(seed)
    d = spec.dimension
    if spec.shift is True:
        shift = random_shift(spec.bounds, rng)
    elif spec.shift is None or spec.shift is False:
        shift = base_optimum(spec.function, d)
    else:
        shift = np.asarray(spec.shift, dtype=float)
    if spec.rotation is True:
        rotation = random_rotation(d, rng)
    elif spec.rotation is None or spec.rotation is False:
        rotation = None
    else:
        rotation = np.asarray(spec.rotation, dtype=float)
        if rotation.shape != (d, d):
            raise ConfigurationError(f"rotation must be {d}x{d}, got {rotation.shape}")
    if shift.shape != (d,):
        raise ConfigurationError(f"shift must have length {d}, got {shift.shape}")
    objective = Benchmark(spec.function, shift, rotation, spec.bias)
    return Problem(d, spec.bounds, objective, name=spec.name, optimum=spec.optimum)


def _registry() -> dict[str, tuple[str, bool, bool]]:
    reg = {}
    for base in BASE_FUNCTIONS:
        reg[base] = (base, False, False)
        reg[f"shifted-{base}"] = (base, True, False)
        reg[f"rotated-{base}"] = (base, True, True)
    return reg


REGISTRY = _registry()


def list_benchmarks() -> list[str]:
    return sorted(REGISTRY)


def get_spec(name: str, dimension: int) -> BenchmarkSpec:
    try:
        function, shifted, rotated = REGISTRY[name]
    except KeyError:
        raise UnknownBenchmark(
            f"unknown benchmark {name!r}; choose from {', '.join(list_benchmarks())}"
        ) from None
    return BenchmarkSpec(name, dimension, function, shift=shifted or None, rotation=rotated or None)


def get_benchmark(name: str, dimension: int, seed: int = 0) -> Problem:
    """Registry lookup plus :func:`make_benchmark`; ``seed`` fixes shift and rotation."""
    return make_benchmark(get_spec(name, dimension), seed)
