"""Single-cell LSTM regressor over windows of 10 feature vectors.

Canonical cell: input/forget/output gates with sigmoid, tanh candidate,
c_t = f*c_{t-1} + i*g, h_t = o*tanh(c_t), zero initial states, and a dense
linear layer on the final hidden state. Gradients run through all steps
(backpropagation through time).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit as sigmoid  # overflow-safe logistic

from .ffnn import glorot_uniform

DEFAULT_INPUT = 5
DEFAULT_HIDDEN = 64


@dataclass
class LstmModel:
    input_size: int
    hidden_size: int
    wx: np.ndarray  # (input, 4H), gate order i|f|g|o
    wh: np.ndarray  # (H, 4H)
    b: np.ndarray  # (4H,)
    wd: np.ndarray  # (H, 1) dense output
    bd: np.ndarray  # (1,)

    kind = "lstm"

    @classmethod
    def init(
        cls,
        seed: int = 0,
        input_size: int = DEFAULT_INPUT,
        hidden_size: int = DEFAULT_HIDDEN,
        forget_bias: float = 1.0,
    ) -> "LstmModel":
        rng = np.random.default_rng(seed)
        h = hidden_size
        # Glorot bounds use per-gate fans: each gate block is an (in, H) map.
        wx = np.hstack([glorot_uniform(rng, input_size, h) for _ in range(4)])
        wh = np.hstack([glorot_uniform(rng, h, h) for _ in range(4)])
        b = np.zeros(4 * h)
        b[h : 2 * h] = forget_bias  # keeps long-range signal alive early in training
        wd = glorot_uniform(rng, h, 1)
        bd = np.zeros(1)
        return cls(input_size, hidden_size, wx, wh, b, wd, bd)

    def params(self) -> dict[str, np.ndarray]:
        return {"wx": self.wx, "wh": self.wh, "b": self.b, "wd": self.wd, "bd": self.bd}

    def num_params(self) -> int:
        return sum(p.size for p in self.params().values())

    def _check_windows(self, windows: np.ndarray, expected_len: int | None) -> np.ndarray:
        windows = np.asarray(windows, dtype=float)
        if windows.ndim == 2:
            windows = windows[None, :, :]
        if windows.ndim != 3 or windows.shape[2] != self.input_size:
            raise ValueError(f"expected (batch, steps, {self.input_size}) windows")
        if expected_len is not None and windows.shape[1] != expected_len:
            raise ValueError(f"expected window length {expected_len}, got {windows.shape[1]}")
        if not np.all(np.isfinite(windows)):
            raise ValueError("non-finite input")
        return windows

    def _step(self, w_stacked: np.ndarray, zin: np.ndarray, c: np.ndarray):
        """One cell step on concatenated [x_t, h_prev] rows; returns gate arrays."""
        hsz = self.hidden_size
        z = zin @ w_stacked + self.b
        z[:, : 2 * hsz] = sigmoid(z[:, : 2 * hsz])  # i | f
        z[:, 2 * hsz : 3 * hsz] = np.tanh(z[:, 2 * hsz : 3 * hsz])  # g
        z[:, 3 * hsz :] = sigmoid(z[:, 3 * hsz :])  # o
        i = z[:, :hsz]
        f = z[:, hsz : 2 * hsz]
        g = z[:, 2 * hsz : 3 * hsz]
        o = z[:, 3 * hsz :]
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        return z, c_new, tanh_c, h_new

    def forward(self, windows: np.ndarray, window_length: int | None = 10) -> np.ndarray:
        """Predict standardized targets for (batch, steps, features) windows."""
        windows = self._check_windows(windows, window_length)
        batch, steps, _ = windows.shape
        w_stacked = np.vstack([self.wx, self.wh])
        h = np.zeros((batch, self.hidden_size))
        c = np.zeros((batch, self.hidden_size))
        for t in range(steps):
            zin = np.hstack([windows[:, t, :], h])
            _, c, _, h = self._step(w_stacked, zin, c)
        return (h @ self.wd + self.bd)[:, 0]

    def backward(
        self, windows: np.ndarray, y: np.ndarray, window_length: int | None = 10
    ) -> tuple[float, dict[str, np.ndarray]]:
        """MSE loss and gradients for every parameter, BPTT through all steps."""
        windows = self._check_windows(windows, window_length)
        y = np.asarray(y, dtype=float).ravel()
        batch, steps, _ = windows.shape
        if batch == 0:
            raise ValueError("empty batch")
        hsz = self.hidden_size
        insz = self.input_size
        w_stacked = np.vstack([self.wx, self.wh])

        h = np.zeros((batch, hsz))
        c = np.zeros((batch, hsz))
        caches = []
        for t in range(steps):
            zin = np.hstack([windows[:, t, :], h])
            gates, c_new, tanh_c, h = self._step(w_stacked, zin, c)
            caches.append((zin, gates, c, tanh_c))
            c = c_new

        pred = (h @ self.wd + self.bd)[:, 0]
        err = pred - y
        loss = float(np.mean(err**2))
        dout = (2.0 * err / batch)[:, None]

        dw_stacked = np.zeros_like(w_stacked)
        db = np.zeros_like(self.b)
        dh = dout @ self.wd.T
        dc = np.zeros((batch, hsz))
        dz = np.empty((batch, 4 * hsz))
        for t in range(steps - 1, -1, -1):
            zin, gates, c_prev, tanh_c = caches[t]
            i = gates[:, :hsz]
            f = gates[:, hsz : 2 * hsz]
            g = gates[:, 2 * hsz : 3 * hsz]
            o = gates[:, 3 * hsz :]
            do = dh * tanh_c
            dc = dc + dh * o * (1.0 - tanh_c**2)
            dz[:, :hsz] = dc * g * i * (1.0 - i)
            dz[:, hsz : 2 * hsz] = dc * c_prev * f * (1.0 - f)
            dz[:, 2 * hsz : 3 * hsz] = dc * i * (1.0 - g**2)
            dz[:, 3 * hsz :] = do * o * (1.0 - o)
            dw_stacked += zin.T @ dz
            db += dz.sum(axis=0)
            dh = dz @ w_stacked[insz:].T
            dc = dc * f
        return loss, {
            "wx": dw_stacked[:insz],
            "wh": dw_stacked[insz:],
            "b": db,
            "wd": h.T @ dout,
            "bd": dout.sum(axis=0),
        }
