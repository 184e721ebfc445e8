"""Feedforward regressor: 5 -> 64 -> 32 -> 1, ReLU hidden layers, linear output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SIZES = (5, 64, 32, 1)


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


@dataclass
class FfnnModel:
    sizes: tuple[int, ...]
    weights: list[np.ndarray]  # (fan_in, fan_out) per layer
    biases: list[np.ndarray]  # (fan_out,) per layer

    kind = "ffnn"

    @classmethod
    def init(cls, seed: int = 0, sizes: tuple[int, ...] = DEFAULT_SIZES) -> "FfnnModel":
        rng = np.random.default_rng(seed)
        weights = [
            glorot_uniform(rng, sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)
        ]
        biases = [np.zeros(sizes[i + 1]) for i in range(len(sizes) - 1)]
        return cls(sizes=tuple(sizes), weights=weights, biases=biases)

    def params(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{i}"] = w
            out[f"b{i}"] = b
        return out

    def num_params(self) -> int:
        return sum(p.size for p in self.params().values())

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Predict standardized targets for a (batch, features) matrix."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.sizes[0]:
            raise ValueError(f"expected {self.sizes[0]} features, got {x.shape[1]}")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite input")
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
        out = h @ self.weights[-1] + self.biases[-1]
        return out[:, 0]

    def backward(self, x: np.ndarray, y: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        """Mean-squared-error loss and its gradient for every parameter."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        batch = x.shape[0]
        if batch == 0:
            raise ValueError("empty batch")

        activations = [x]
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
            activations.append(h)
        pred = (h @ self.weights[-1] + self.biases[-1])[:, 0]

        err = pred - y
        loss = float(np.mean(err**2))
        delta = (2.0 * err / batch)[:, None]  # d(loss)/d(linear output)

        grads: dict[str, np.ndarray] = {}
        n_layers = len(self.weights)
        for i in range(n_layers - 1, -1, -1):
            grads[f"w{i}"] = activations[i].T @ delta
            grads[f"b{i}"] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (activations[i] > 0.0)
        return loss, grads
