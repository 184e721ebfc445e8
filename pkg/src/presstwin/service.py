"""HTTP/JSON twin service: experiment lifecycle, live ingestion, prediction,
evaluation, retraining, and lifespan estimation.

All payloads are snake_case JSON; errors are `{code, message, details}`.
"""

from __future__ import annotations

from pathlib import Path
from types import SimpleNamespace

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import metrics
from .domain import (
    STATUS_COMPLETE,
    ExperimentConfig,
    Sample,
    config_to_dict,
    validate_config,
)
from .neural import predict_series
from .store import (
    DuplicateExperimentError,
    ExperimentClosedError,
    ExperimentStore,
    TimeRegressionError,
    UnknownExperimentError,
)
from .twin import (
    DEFAULT_DURATION_CAP_FACTOR,
    DEFAULT_FLOW_FLOOR,
    ModelRegistry,
    NoModelError,
    RetrainInProgressError,
    RetrainJob,
    RetrainOptions,
    estimate_lifespan,
)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details: dict | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details or {}


class ConfigPayload(BaseModel):
    experiment_id: str
    concentration: float
    plate_count: int
    end_pressure: float
    cloth_cycles: int
    created_at: str | None = None

    def to_config(self) -> ExperimentConfig:
        kwargs = self.model_dump()
        if kwargs.get("created_at") is None:
            kwargs.pop("created_at")
        return ExperimentConfig(**kwargs)


class SamplePayload(BaseModel):
    t: float
    pressure: float
    flow: float


class IngestPayload(BaseModel):
    samples: list[SamplePayload] = Field(default_factory=list)


class PredictPayload(BaseModel):
    config: ConfigPayload
    dt: float = 0.1
    horizon: float = 3600.0


class RetrainPayload(BaseModel):
    epochs: int = 100
    seed: int = 0
    arch: str = "lstm"
    batch_size: int = 32
    stride: int = 10
    ratio: float = 0.8
    wait: bool = False


def _check_config(payload: ConfigPayload) -> ExperimentConfig:
    config = payload.to_config()
    violations = validate_config(config)
    if violations:
        raise ApiError(
            400, "invalid_config", "experiment config violates invariants",
            {"violations": violations},
        )
    return config


def _record_dict(record) -> dict:
    return {
        "experiment_id": record.experiment_id,
        "config": config_to_dict(record.config),
        "status": record.status,
        "sample_count": record.sample_count,
        "timed_out": record.timed_out,
    }


def create_app(store_dir: str | Path) -> FastAPI:
    store_dir = Path(store_dir)
    app = FastAPI(title="presstwin", version="0.1.0")
    store = ExperimentStore(store_dir)
    registry = ModelRegistry(store_dir / "models")
    job = RetrainJob(store, registry)
    app.state.store = store
    app.state.registry = registry
    app.state.retrain_job = job

    @app.exception_handler(ApiError)
    async def _api_error(_: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "code": "invalid_payload",
                "message": "request payload failed validation",
                "details": {"errors": exc.errors()},
            },
        )

    def _require_record(experiment_id: str):
        try:
            return store.get_record(experiment_id)
        except UnknownExperimentError as exc:
            raise ApiError(404, "unknown_experiment", str(exc)) from exc

    def _current_snapshot():
        try:
            return registry.require_current()
        except NoModelError as exc:
            raise ApiError(503, "no_model", str(exc)) from exc

    def _predict_payload(
        config: ExperimentConfig, dt: float = 0.1, horizon: float = 3600.0, times=None
    ) -> dict:
        snapshot = _current_snapshot()
        p_bundle = snapshot.bundle("pressure")
        q_bundle = snapshot.bundle("flow")
        result = predict_series(
            p_bundle.model,
            q_bundle.model,
            p_bundle.standardizer,
            config,
            dt=dt,
            horizon=horizon,
            times=times,
        )
        return {
            "t": result.t.tolist(),
            "pressure": result.pressure.tolist(),
            "flow": result.flow.tolist(),
            "duration": result.duration,
            "exceeds_horizon": result.exceeds_horizon,
            "model_version": snapshot.version,
        }

    @app.post("/experiments", status_code=201)
    def api_create_experiment(payload: ConfigPayload):
        config = _check_config(payload)
        try:
            record = store.create_experiment(config)
        except DuplicateExperimentError as exc:
            raise ApiError(409, "duplicate_experiment", str(exc)) from exc
        return _record_dict(record)

    @app.get("/experiments")
    def api_list_experiments(status: str | None = None):
        return {"experiments": [_record_dict(r) for r in store.list_experiments(status)]}

    @app.post("/experiments/{experiment_id}/samples")
    def api_ingest(experiment_id: str, payload: IngestPayload):
        _require_record(experiment_id)
        batch = [Sample(s.t, s.pressure, s.flow) for s in payload.samples]
        try:
            count = store.append_samples(experiment_id, batch)
        except ExperimentClosedError as exc:
            raise ApiError(409, "experiment_complete", str(exc)) from exc
        except TimeRegressionError as exc:
            raise ApiError(
                422, "time_regression", str(exc), {"index": exc.index}
            ) from exc
        except ValueError as exc:
            raise ApiError(422, "invalid_samples", str(exc)) from exc
        return {"accepted": len(batch), "sample_count": count}

    @app.post("/experiments/{experiment_id}/complete")
    def api_complete(experiment_id: str):
        _require_record(experiment_id)
        try:
            record = store.mark_complete(experiment_id)
        except ExperimentClosedError as exc:
            raise ApiError(409, "experiment_complete", str(exc)) from exc
        return _record_dict(record)

    @app.get("/experiments/{experiment_id}/live")
    def api_live(experiment_id: str, since: float = Query(default=-1.0)):
        record = _require_record(experiment_id)
        series = store.get_series(experiment_id)
        mask = series.t > since
        t = series.t[mask]
        prediction = None
        if registry.current() is not None and t.size:
            prediction = _predict_payload(record.config, times=t)
        return {
            "experiment_id": experiment_id,
            "status": record.status,
            "timed_out": record.timed_out,
            "samples": [
                {"t": float(a), "pressure": float(b), "flow": float(c)}
                for a, b, c in zip(t, series.pressure[mask], series.flow[mask])
            ],
            "cursor": float(t[-1]) if t.size else since,
            "prediction": prediction,
        }

    @app.post("/predict")
    def api_predict(payload: PredictPayload):
        config = _check_config(payload.config)
        if payload.dt <= 0 or payload.horizon <= 0:
            raise ApiError(400, "invalid_grid", "dt and horizon must be > 0")
        return _predict_payload(config, payload.dt, payload.horizon)

    @app.get("/experiments/{experiment_id}/evaluation")
    def api_evaluate(
        experiment_id: str, window: int = Query(default=metrics.DEFAULT_WINDOW, ge=2)
    ):
        record = _require_record(experiment_id)
        if record.status != STATUS_COMPLETE:
            raise ApiError(
                409, "experiment_open", "evaluation requires a complete experiment"
            )
        measured = store.get_series(experiment_id)
        if len(measured) == 0:
            raise ApiError(409, "empty_experiment", "no samples to evaluate")
        prediction = _predict_payload(record.config, times=measured.t)
        predicted = SimpleNamespace(
            t=np.asarray(prediction["t"]),
            pressure=np.asarray(prediction["pressure"]),
            flow=np.asarray(prediction["flow"]),
        )
        p_row, q_row = metrics.evaluate_experiment(measured, predicted, n=window)
        bands = {}
        for name, values in (("pressure", measured.pressure), ("flow", measured.flow)):
            b = metrics.band(values, window, t=measured.t)
            bands[name] = {
                "t": b.t.tolist(),
                "ma": b.ma.tolist(),
                "lower": b.lower.tolist(),
                "upper": b.upper.tolist(),
                "window": b.window,
                "z": b.z,
            }
        return {
            "experiment_id": experiment_id,
            "window": window,
            "pressure": p_row.as_dict(),
            "flow": q_row.as_dict(),
            "band": bands,
            "prediction": prediction,
        }

    @app.post("/models/retrain", status_code=202)
    def api_retrain(payload: RetrainPayload):
        if not store.list_experiments(status=STATUS_COMPLETE):
            raise ApiError(
                409, "no_complete_experiments", "retraining needs >= 1 complete experiment"
            )
        options = RetrainOptions(
            epochs=payload.epochs,
            seed=payload.seed,
            arch=payload.arch,
            batch_size=payload.batch_size,
            stride=payload.stride,
            ratio=payload.ratio,
        )
        try:
            status = job.start(options, wait=payload.wait)
        except RetrainInProgressError as exc:
            raise ApiError(409, "retrain_running", str(exc)) from exc
        snapshot = registry.current()
        return {
            "retrain": status.as_dict(),
            "current_version": None if snapshot is None else snapshot.version,
        }

    @app.get("/models/current")
    def api_models_current():
        snapshot = registry.current()
        payload = {
            "retrain": registry.retrain_status.as_dict(),
            "version": None,
            "targets": {},
        }
        if snapshot is not None:
            payload["version"] = snapshot.version
            for target, bundle in snapshot.bundles.items():
                final = bundle.report.final() if bundle.report else None
                payload["targets"][target] = {
                    "version": bundle.version,
                    "kind": bundle.model.kind,
                    "seed": bundle.seed,
                    "model_id": bundle.report.model_id if bundle.report else None,
                    "final_val_mse": None if final is None else final.val_mse,
                    "final_val_r2": None if final is None else final.val_r2,
                    "epochs": bundle.report.epochs if bundle.report else None,
                }
        return payload

    @app.get("/models/report/{target}")
    def api_model_report(target: str):
        snapshot = _current_snapshot()
        if target not in snapshot.bundles:
            raise ApiError(404, "unknown_target", f"no model for target {target!r}")
        bundle = snapshot.bundle(target)
        if bundle.report is None:
            raise ApiError(404, "no_report", "model has no training report")
        return bundle.report.to_dict()

    @app.get("/lifespan")
    def api_lifespan(
        concentration: float,
        plate_count: int,
        end_pressure: float,
        k_max: int = 40,
        flow_floor: float = DEFAULT_FLOW_FLOOR,
        duration_cap_factor: float = DEFAULT_DURATION_CAP_FACTOR,
        dt: float = 1.0,
        horizon: float = 3600.0,
    ):
        basis = ExperimentConfig(
            experiment_id="lifespan-basis",
            concentration=concentration,
            plate_count=plate_count,
            end_pressure=end_pressure,
            cloth_cycles=1,
        )
        violations = validate_config(basis)
        if violations:
            raise ApiError(
                400, "invalid_config", "lifespan basis violates invariants",
                {"violations": violations},
            )
        try:
            estimate = estimate_lifespan(
                registry,
                basis,
                k_max=k_max,
                flow_floor=flow_floor,
                duration_cap_factor=duration_cap_factor,
                dt=dt,
                horizon=horizon,
            )
        except NoModelError as exc:
            raise ApiError(503, "no_model", str(exc)) from exc
        return {
            "basis": config_to_dict(estimate.basis),
            "points": [
                {
                    "cycles": p.cycles,
                    "duration": p.duration,
                    "max_flow": p.max_flow,
                    "violates": p.violates,
                }
                for p in estimate.points
            ],
            "recommended_cycle": estimate.recommended_cycle,
            "flow_floor": estimate.flow_floor,
            "duration_cap": estimate.duration_cap,
            "model_version": estimate.model_version,
        }

    return app
