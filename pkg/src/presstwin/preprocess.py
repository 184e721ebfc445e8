"""Standardization and sequence construction for the regressors.

Inputs AND targets are standardized to zero mean / unit variance
(population statistics); predictions are de-standardized before any
metric or report sees them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .domain import SCHEMA_NAMES
from .simulator import derive_seed

SEQUENCE_LENGTH = 10


@dataclass(frozen=True)
class Standardizer:
    """Per-column mean/std used to scale features and targets both ways."""

    mu: np.ndarray
    sigma: np.ndarray
    schema: tuple[str, ...]

    def __post_init__(self):
        if not (self.mu.shape == self.sigma.shape == (len(self.schema),)):
            raise ValueError("mu/sigma must match the schema arity")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma components must be > 0")

    def _check_arity(self, x: np.ndarray):
        if x.shape[-1] != len(self.schema):
            raise ValueError(
                f"arity mismatch: expected {len(self.schema)} columns, got {x.shape[-1]}"
            )

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_arity(x)
        return (x - self.mu) / self.sigma

    def inverse_transform(self, x_scaled: np.ndarray) -> np.ndarray:
        x_scaled = np.asarray(x_scaled, dtype=float)
        self._check_arity(x_scaled)
        return x_scaled * self.sigma + self.mu

    def column(self, name: str) -> int:
        return self.schema.index(name)

    def transform_columns(self, names: Sequence[str], x: np.ndarray) -> np.ndarray:
        idx = [self.column(n) for n in names]
        x = np.asarray(x, dtype=float)
        return (x - self.mu[idx]) / self.sigma[idx]

    def inverse_transform_column(self, name: str, values: np.ndarray) -> np.ndarray:
        i = self.column(name)
        return np.asarray(values, dtype=float) * self.sigma[i] + self.mu[i]

    def transform_column(self, name: str, values: np.ndarray) -> np.ndarray:
        i = self.column(name)
        return (np.asarray(values, dtype=float) - self.mu[i]) / self.sigma[i]

    def to_dict(self) -> dict:
        return {
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "schema": list(self.schema),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Standardizer":
        return cls(
            mu=np.array(payload["mu"], dtype=float),
            sigma=np.array(payload["sigma"], dtype=float),
            schema=tuple(payload["schema"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Standardizer":
        return cls.from_dict(json.loads(text))


def fit(dataset, schema: Sequence[str] = SCHEMA_NAMES) -> Standardizer:
    """Population mean/std per column over (feature..., pressure, flow) rows.

    Accepts an (n, k) array or an iterable of (feature_vector, pressure, flow)
    tuples. Constant columns are rejected by name: a zero sigma would make the
    transform non-invertible.
    """
    rows = _as_matrix(dataset)
    if rows.shape[0] < 2:
        raise ValueError("need at least 2 samples to fit")
    if rows.shape[1] != len(schema):
        raise ValueError(f"expected {len(schema)} columns, got {rows.shape[1]}")
    mu = rows.mean(axis=0)
    sigma = rows.std(axis=0)  # population std
    constant = np.flatnonzero(sigma == 0.0)
    if constant.size:
        names = ", ".join(schema[i] for i in constant)
        raise ValueError(f"constant column(s) cannot be standardized: {names}")
    return Standardizer(mu=mu, sigma=sigma, schema=tuple(schema))


def _as_matrix(dataset) -> np.ndarray:
    if isinstance(dataset, np.ndarray):
        return np.asarray(dataset, dtype=float)
    rows = []
    for item in dataset:
        fv, pressure, flow = item
        rows.append(np.concatenate([np.asarray(fv, dtype=float), [pressure, flow]]))
    return np.array(rows, dtype=float)


def make_sequences(features: np.ndarray, length: int = SEQUENCE_LENGTH) -> np.ndarray:
    """One window per timestep: rows i-length+1..i, left-padded by repeating row 0.

    Every sample gets a prediction target; the window for timestep 0 is
    `length` copies of the first row. Result shape (n, length, k).
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("features must be a non-empty (n, k) matrix")
    if length < 1:
        raise ValueError("length must be >= 1")
    padded = np.vstack([np.repeat(features[:1], length - 1, axis=0), features])
    idx = np.arange(features.shape[0])[:, None] + np.arange(length)[None, :]
    return padded[idx]


def window_at(features: np.ndarray, i: int, length: int = SEQUENCE_LENGTH) -> np.ndarray:
    """The single window ending at timestep i, same padding rule as make_sequences."""
    features = np.asarray(features, dtype=float)
    n = features.shape[0]
    if not 0 <= i < n:
        raise IndexError(i)
    start = i - length + 1
    if start >= 0:
        return features[start : i + 1]
    return np.vstack([np.repeat(features[:1], -start, axis=0), features[: i + 1]])


def split_train_val(
    sizes: Mapping[str, int],
    ratio: float = 0.8,
    seed: int = 0,
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Sample-level random split, stratified per experiment.

    Each experiment contributes round(ratio * n) of its samples to the train
    side; indices within each stratum are shuffled deterministically from
    (seed, experiment_id) and returned sorted. Disjoint and exhaustive.
    """
    if not sizes:
        raise ValueError("empty corpus")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    out: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for exp_id, n in sizes.items():
        if n < 0:
            raise ValueError(f"negative sample count for {exp_id}")
        rng = np.random.default_rng(derive_seed(seed, f"split:{exp_id}"))
        perm = rng.permutation(n)
        n_train = int(round(ratio * n))
        train_idx = np.sort(perm[:n_train])
        val_idx = np.sort(perm[n_train:])
        out[exp_id] = (train_idx, val_idx)
    return out
