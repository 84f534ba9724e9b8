"""Feedforward-network regression of 8-joint arm kinematics as an optimization problem.

The network has 8 inputs, ``n_hidden`` sigmoid hidden units and one linear
output, without biases, so a weight vector has ``9 * n_hidden`` entries:
the ``8 x n_hidden`` input-to-hidden matrix in row-major (input-major)
order followed by the ``n_hidden`` hidden-to-output weights.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import Bounds, ConfigurationError, Problem

N_INPUTS = 8
CSV_HEADER = [f"theta{k}" for k in range(1, N_INPUTS + 1)] + ["distance"]

LINK_LENGTHS = np.array([0.35, 0.25, 0.15, 0.10, 0.06, 0.04, 0.03, 0.02])
TARGET = np.array([0.1, 0.1, 0.1])
NOISE_FRACTION = {"none": 0.0, "medium": 0.025, "high": 0.05}


class DatasetError(ValueError):
    """Malformed dataset content; ``line`` is the 1-based file line when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SchemaError(DatasetError):
    pass


class EncodingError(ValueError):
    pass


def sigmoid(t):
    return 1.0 / (1.0 + np.exp(-t))


@dataclass(frozen=True)
class FFNetwork:
    hidden: np.ndarray  # (8, n_hidden)
    output: np.ndarray  # (n_hidden,)

    @property
    def n_hidden(self) -> int:
        return self.output.size

    def __eq__(self, other):
        if not isinstance(other, FFNetwork):
            return NotImplemented
        return np.array_equal(self.hidden, other.hidden) and np.array_equal(self.output, other.output)


def forward(net: FFNetwork, inputs: np.ndarray) -> np.ndarray:
    """Network output for one input vector (returns a float) or a batch of rows."""
    inputs = np.asarray(inputs, dtype=float)
    out = sigmoid(inputs @ net.hidden) @ net.output
    return float(out) if inputs.ndim == 1 else out


def n_weights(n_hidden: int) -> int:
    return (N_INPUTS + 1) * n_hidden


def decode_weights(vector, n_hidden: int) -> FFNetwork:
    vector = np.asarray(vector, dtype=float).ravel()
    if n_hidden < 1:
        raise EncodingError("n_hidden must be positive")
    if vector.size != n_weights(n_hidden):
        raise EncodingError(
            f"{n_hidden} hidden units need {n_weights(n_hidden)} weights, got {vector.size}"
        )
    split = N_INPUTS * n_hidden
    return FFNetwork(vector[:split].reshape(N_INPUTS, n_hidden).copy(), vector[split:].copy())


def encode_weights(net: FFNetwork) -> np.ndarray:
    return np.concatenate([net.hidden.ravel(), net.output])


class KinDataset:
    """Raw rows plus the [-1, 1] min-max normalized view used for training.

    Normalization parameters are per column over all rows; a constant column
    normalizes to 0.
    """

    def __init__(self, theta, y):
        theta = np.asarray(theta, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        if theta.ndim != 2 or theta.shape[1] != N_INPUTS:
            raise SchemaError(f"expected {N_INPUTS} angle columns, got shape {theta.shape}")
        if theta.shape[0] != y.size:
            raise SchemaError("angle and distance row counts differ")
        if y.size == 0:
            raise DatasetError("dataset has no rows")
        self.theta_raw = theta
        self.y_raw = y
        raw = np.column_stack([theta, y])
        self.col_min = raw.min(axis=0)
        self.col_max = raw.max(axis=0)
        normalized = self._normalize(raw)
        self.theta = normalized[:, :N_INPUTS]
        self.y = normalized[:, N_INPUTS]

    def _normalize(self, raw):
        span = self.col_max - self.col_min
        safe = np.where(span > 0, span, 1.0)
        scaled = 2.0 * (raw - self.col_min) / safe - 1.0
        scaled = np.where(span > 0, scaled, 0.0)
        return np.clip(scaled, -1.0, 1.0)

    def __len__(self) -> int:
        return self.y.size

    def denormalize_y(self, y):
        span = self.col_max[-1] - self.col_min[-1]
        return (np.asarray(y) + 1.0) / 2.0 * span + self.col_min[-1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for angles, dist in zip(self.theta_raw, self.y_raw):
                writer.writerow([repr(float(v)) for v in angles] + [repr(float(dist))])


def load_dataset(path) -> KinDataset:
    """Parse a dataset CSV (header ``theta1..theta8,distance``)."""
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError("empty file", line=1)
        if [h.strip() for h in header] != CSV_HEADER:
            raise SchemaError(f"header must be {','.join(CSV_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise SchemaError(f"expected {len(CSV_HEADER)} columns, got {len(row)}", line=lineno)
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise DatasetError(f"non-numeric value in row {row!r}", line=lineno) from None
            if not all(math.isfinite(v) for v in values):
                raise DatasetError("non-finite value", line=lineno)
            rows.append(values)
    if not rows:
        raise DatasetError("dataset has no data rows")
    data = np.array(rows)
    return KinDataset(data[:, :N_INPUTS], data[:, N_INPUTS])


def _rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def end_effector(theta: Sequence[float], links: np.ndarray = LINK_LENGTHS) -> np.ndarray:
    """Tip position of a revolute chain whose joint axes alternate z, y, z, y, ...

    Each joint rotates the frame, then the link extends along the local x axis.
    """
    rot = np.eye(3)
    pos = np.zeros(3)
    for k, (angle, length) in enumerate(zip(theta, links)):
        rot = rot @ (_rot_z(angle) if k % 2 == 0 else _rot_y(angle))
        pos = pos + length * rot[:, 0]
    return pos


def kinematic_distance(theta: Sequence[float]) -> float:
    return float(np.linalg.norm(end_effector(theta) - TARGET))


def synth_kinematics(n: int, noise: str = "medium", seed: int = 0) -> KinDataset:
    """Synthetic stand-in for the kin8nm/kin8nh data.

    Angles are uniform in [-pi, pi]; the target is the tip's distance to
    (0.1, 0.1, 0.1) plus uniform noise whose half-width is 2.5% ("medium") or
    5% ("high") of the clean distances' standard deviation. ``noise="none"``
    gives the clean map.
    """
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    if noise not in NOISE_FRACTION:
        raise ConfigurationError(f"noise must be one of {sorted(NOISE_FRACTION)}, got {noise!r}")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-math.pi, math.pi, size=(n, N_INPUTS))
    clean = np.array([kinematic_distance(row) for row in theta])
    half_width = NOISE_FRACTION[noise] * float(clean.std())
    y = clean + rng.uniform(-half_width, half_width, size=n) if half_width > 0 else clean
    return KinDataset(theta, y)


@dataclass(frozen=True)
class DataSplit:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray


def split_three_ways(dataset: KinDataset, seed: int = 0) -> DataSplit:
    n = len(dataset)
    if n < 3:
        raise ConfigurationError(f"need at least 3 rows to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    parts = np.array_split(perm, 3)
    return DataSplit(*(np.sort(p) for p in parts))


def mse(net: FFNetwork, dataset: KinDataset, rows) -> float:
    rows = np.asarray(rows)
    err = forward(net, dataset.theta[rows]) - dataset.y[rows]
    return float(np.mean(err * err))


class MSEObjective:
    """Picklable ``weights -> MSE`` closure over a fixed subset of rows."""

    def __init__(self, dataset: KinDataset, rows, n_hidden: int):
        rows = np.asarray(rows)
        if rows.size == 0:
            raise ConfigurationError("split is empty")
        self.n_hidden = n_hidden
        self.theta = dataset.theta[rows]
        self.y = dataset.y[rows]

    def __call__(self, w) -> float:
        w = np.asarray(w, dtype=float)
        split = N_INPUTS * self.n_hidden
        hidden = w[:split].reshape(N_INPUTS, self.n_hidden)
        err = sigmoid(self.theta @ hidden) @ w[split:] - self.y
        return float(np.dot(err, err) / err.size)

    def gradient(self, w) -> np.ndarray:
        """Analytic gradient of the MSE with respect to the weight vector."""
        w = np.asarray(w, dtype=float)
        split = N_INPUTS * self.n_hidden
        hidden = w[:split].reshape(N_INPUTS, self.n_hidden)
        out_w = w[split:]
        h = sigmoid(self.theta @ hidden)
        err = h @ out_w - self.y
        scale = 2.0 / err.size
        g_out = scale * (h.T @ err)
        g_hidden = scale * (self.theta.T @ (err[:, None] * out_w[None, :] * h * (1.0 - h)))
        return np.concatenate([g_hidden.ravel(), g_out])


def mse_objective(dataset: KinDataset, split, n_hidden: int, name: str = "nn") -> Problem:
    """Training problem over ``[-1, 1]^(9 n_hidden)`` minimizing MSE on ``split`` rows."""
    if n_hidden < 1:
        raise ConfigurationError("n_hidden must be positive")
    d = n_weights(n_hidden)
    return Problem(d, Bounds.uniform(-1.0, 1.0, d), MSEObjective(dataset, split, n_hidden), name=name)
