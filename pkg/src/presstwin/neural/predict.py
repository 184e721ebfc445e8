"""Trajectory prediction and model (de)serialization.

Prediction is direct, not autoregressive: time is an input feature, so a
full trajectory is the two regressors swept over a time grid and
de-standardized. The predicted cycle duration is the first grid point where
predicted pressure reaches the configured end pressure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ..domain import FEATURE_NAMES, ExperimentConfig, feature_matrix
from ..preprocess import SEQUENCE_LENGTH, Standardizer, make_sequences
from .ffnn import FfnnModel
from .lstm import LstmModel
from .training import Model, TrainReport, predict_batched

FORMAT_VERSION = 1


@dataclass(frozen=True)
class PredictionResult:
    """Predicted pressure/flow trajectories on a shared time grid."""

    t: np.ndarray
    pressure: np.ndarray
    flow: np.ndarray
    duration: float | None  # None when predicted pressure never reaches the end pressure

    @property
    def exceeds_horizon(self) -> bool:
        return self.duration is None


def _standardized_inputs(
    model: Model, standardizer: Standardizer, times: np.ndarray, config: ExperimentConfig
) -> np.ndarray:
    rows = standardizer.transform_columns(FEATURE_NAMES, feature_matrix(config, times))
    if isinstance(model, LstmModel):
        return make_sequences(rows, SEQUENCE_LENGTH)
    return rows


def predict_target(
    model: Model,
    standardizer: Standardizer,
    target: str,
    config: ExperimentConfig,
    times: np.ndarray,
) -> np.ndarray:
    """De-standardized predictions for one target on an arbitrary time grid."""
    inputs = _standardized_inputs(model, standardizer, times, config)
    preds = predict_batched(model, inputs)
    return standardizer.inverse_transform_column(target, preds)


def time_grid(dt: float, horizon: float) -> np.ndarray:
    if dt <= 0 or horizon <= 0:
        raise ValueError("dt and horizon must be > 0")
    n = math.floor(horizon / dt + 1e-9) + 1
    return np.arange(n) * dt


def predict_series(
    pressure_model: Model,
    flow_model: Model,
    standardizer: Standardizer,
    config: ExperimentConfig,
    dt: float = 0.1,
    horizon: float = 3600.0,
    times: np.ndarray | None = None,
) -> PredictionResult:
    """Sweep both regressors over t = 0, dt, .. horizon (or an explicit grid)."""
    t = time_grid(dt, horizon) if times is None else np.asarray(times, dtype=float)
    pressure = predict_target(pressure_model, standardizer, "pressure", config, t)
    flow = predict_target(flow_model, standardizer, "flow", config, t)
    reached = np.flatnonzero(pressure >= config.end_pressure)
    duration = float(t[reached[0]]) if reached.size else None
    return PredictionResult(t=t, pressure=pressure, flow=flow, duration=duration)


# --- serialization ----------------------------------------------------------


@dataclass(frozen=True)
class ModelBundle:
    """A trained regressor plus everything needed to use and trace it."""

    model: Model
    standardizer: Standardizer
    target: str
    seed: int
    version: int
    report: TrainReport | None = None
    created_at: str = ""


def bundle_to_dict(bundle: ModelBundle) -> dict:
    model = bundle.model
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "target": bundle.target,
        "seed": bundle.seed,
        "version": bundle.version,
        "created_at": bundle.created_at
        or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "params": {k: v.ravel().tolist() for k, v in model.params().items()},
        "shapes": {k: list(v.shape) for k, v in model.params().items()},
        "standardizer": bundle.standardizer.to_dict(),
    }
    if isinstance(model, FfnnModel):
        payload["sizes"] = list(model.sizes)
    else:
        payload["input_size"] = model.input_size
        payload["hidden_size"] = model.hidden_size
    if bundle.report is not None:
        payload["train_report"] = bundle.report.to_dict()
    return payload


def bundle_from_dict(payload: dict) -> ModelBundle:
    kind = payload["kind"]
    if kind == "ffnn":
        model = FfnnModel.init(seed=0, sizes=tuple(payload["sizes"]))
    elif kind == "lstm":
        model = LstmModel.init(
            seed=0,
            input_size=int(payload["input_size"]),
            hidden_size=int(payload["hidden_size"]),
        )
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    params = model.params()
    for name, flat in payload["params"].items():
        shape = tuple(payload["shapes"][name])
        params[name][...] = np.array(flat, dtype=float).reshape(shape)
    report = (
        TrainReport.from_dict(payload["train_report"]) if "train_report" in payload else None
    )
    return ModelBundle(
        model=model,
        standardizer=Standardizer.from_dict(payload["standardizer"]),
        target=payload["target"],
        seed=int(payload["seed"]),
        version=int(payload["version"]),
        report=report,
        created_at=payload.get("created_at", ""),
    )


def save_bundle(bundle: ModelBundle, path: str | Path):
    Path(path).write_text(json.dumps(bundle_to_dict(bundle)))


def load_bundle(path: str | Path) -> ModelBundle:
    return bundle_from_dict(json.loads(Path(path).read_text()))
