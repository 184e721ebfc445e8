"""Adam training loop with per-epoch metric tracking.

All metrics in the report are on standardized targets. Divergence is not
masked by clipping: a non-finite loss aborts with the offending epoch.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..metrics import point_metrics
from .ffnn import FfnnModel
from .lstm import LstmModel

DEFAULT_EPOCHS = 100
DEFAULT_BATCH_SIZE = 32
ADAM_LR = 0.001
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

Model = FfnnModel | LstmModel


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float
    val_mae: float
    val_r2: float


@dataclass(frozen=True)
class TrainReport:
    kind: str
    seed: int
    epochs: int
    model_id: str
    records: tuple[EpochRecord, ...] = field(default_factory=tuple)

    def final(self) -> EpochRecord | None:
        return self.records[-1] if self.records else None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "epochs": self.epochs,
            "model_id": self.model_id,
            "records": [vars(r) | {} for r in self.records],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainReport":
        return cls(
            kind=payload["kind"],
            seed=int(payload["seed"]),
            epochs=int(payload["epochs"]),
            model_id=payload["model_id"],
            records=tuple(EpochRecord(**r) for r in payload.get("records", [])),
        )


def init(kind: str, seed: int = 0, **dims) -> Model:
    """Fresh model with Glorot-uniform weights; deterministic given seed."""
    if kind == "ffnn":
        return FfnnModel.init(seed=seed, **dims)
    if kind == "lstm":
        return LstmModel.init(seed=seed, **dims)
    raise ValueError(f"unknown model kind {kind!r}")


def gradients(model: Model, batch: tuple[np.ndarray, np.ndarray]) -> dict[str, np.ndarray]:
    """Gradients of the mean-squared-error loss for every parameter."""
    x, y = batch
    _, grads = model.backward(x, y)
    return grads


def model_digest(model: Model) -> str:
    h = hashlib.blake2s(digest_size=8)
    for name in sorted(model.params()):
        h.update(name.encode())
        h.update(np.ascontiguousarray(model.params()[name]).tobytes())
    return h.hexdigest()


class Adam:
    """Standard Adam with bias correction; one slot pair per parameter."""

    def __init__(self, params: dict[str, np.ndarray], lr: float = ADAM_LR):
        self.lr = lr
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.t += 1
        bc1 = 1.0 - ADAM_BETA1**self.t
        bc2 = 1.0 - ADAM_BETA2**self.t
        for k, p in params.items():
            g = grads[k]
            self.m[k] = ADAM_BETA1 * self.m[k] + (1.0 - ADAM_BETA1) * g
            self.v[k] = ADAM_BETA2 * self.v[k] + (1.0 - ADAM_BETA2) * g**2
            p -= self.lr * (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + ADAM_EPS)


def predict_batched(model: Model, x: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """Forward pass in bounded-memory chunks."""
    if x.shape[0] <= chunk:
        return model.forward(x)
    parts = [model.forward(x[i : i + chunk]) for i in range(0, x.shape[0], chunk)]
    return np.concatenate(parts)


def train(
    kind: str,
    train_set: tuple[np.ndarray, np.ndarray],
    val_set: tuple[np.ndarray, np.ndarray],
    epochs: int = DEFAULT_EPOCHS,
    batch_size: int = DEFAULT_BATCH_SIZE,
    seed: int = 0,
    lr: float = ADAM_LR,
) -> tuple[Model, TrainReport]:
    """Adam(0.001, 0.9, 0.999, 1e-8) over shuffled mini-batches, deterministic per seed.

    Records train MSE plus validation MSE/MAE/R^2 after every epoch.
    epochs=0 returns the freshly initialized model with an empty report.
    """
    x_train, y_train = train_set
    x_val, y_val = val_set
    y_train = np.asarray(y_train, dtype=float).ravel()
    y_val = np.asarray(y_val, dtype=float).ravel()
    if x_train.shape[0] == 0 or x_val.shape[0] == 0:
        raise ValueError("train and validation sets must be non-empty")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")

    model = init(kind, seed=seed)
    optimizer = Adam(model.params(), lr=lr)
    shuffle_rng = np.random.default_rng([seed, 0x5F])

    records: list[EpochRecord] = []
    for epoch in range(1, epochs + 1):
        perm = shuffle_rng.permutation(x_train.shape[0])
        loss_sum = 0.0
        for start in range(0, perm.size, batch_size):
            idx = perm[start : start + batch_size]
            loss, grads = model.backward(x_train[idx], y_train[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch)
            optimizer.step(model.params(), grads)
            loss_sum += loss * idx.size

        # Running epoch mean over minibatches: the usual "training loss" curve.
        train_mse = loss_sum / perm.size
        val_pred = predict_batched(model, x_val)
        vm = point_metrics(y_val, val_pred)
        if not np.isfinite(vm.mse):
            raise TrainingDiverged(epoch)
        records.append(
            EpochRecord(
                epoch=epoch,
                train_mse=train_mse,
                val_mse=vm.mse,
                val_mae=vm.mae,
                val_r2=vm.r2,
            )
        )

    report = TrainReport(
        kind=kind,
        seed=seed,
        epochs=epochs,
        model_id=f"{kind}-{model_digest(model)}",
        records=tuple(records),
    )
    return model, report
