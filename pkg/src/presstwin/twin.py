"""Digital-twin orchestration: model registry, retraining feedback loop, lifespan sweep.

The registry serves immutable snapshots holding both target models, so a
reader always observes a matched (pressure, flow) pair; retraining builds
the complete replacement snapshot first and installs it atomically,
archiving the previous versions on disk.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .domain import STATUS_COMPLETE, ExperimentConfig, require_valid
from .neural import (
    ModelBundle,
    PredictionResult,
    TrainReport,
    bundle_from_dict,
    bundle_to_dict,
    predict_series,
    train,
)
from .pipeline import DEFAULT_RATIO, DEFAULT_STRIDE, prepare_corpus
from .store import ExperimentStore

DEFAULT_ARCH = "lstm"  # serving default; the recurrent model generalizes better here
DEFAULT_FLOW_FLOOR = 8.0  # dm^3/min
DEFAULT_DURATION_CAP_FACTOR = 1.5
TARGETS = ("pressure", "flow")


class RetrainInProgressError(RuntimeError):
    pass


class NoModelError(RuntimeError):
    pass


class NoCompleteExperimentsError(RuntimeError):
    pass


@dataclass(frozen=True)
class RegistrySnapshot:
    """One matched pair of current models; never mutated after install."""

    version: int
    bundles: dict[str, ModelBundle]  # keyed by target
    installed_at: str

    def bundle(self, target: str) -> ModelBundle:
        return self.bundles[target]


@dataclass
class RetrainStatus:
    state: str = "idle"  # idle | running
    started_at: str | None = None
    last_error: str | None = None

    def as_dict(self) -> dict:
        return {
            "state": self.state,
            "started_at": self.started_at,
            "last_error": self.last_error,
        }


class ModelRegistry:
    """Versioned storage for the current and archived regressor pairs."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._snapshot: RegistrySnapshot | None = None
        self.retrain_status = RetrainStatus()
        self._load()

    def _index_path(self) -> Path:
        return self.root / "registry.json"

    def _load(self):
        if not self._index_path().exists():
            return
        index = json.loads(self._index_path().read_text())
        version = int(index["current_version"])
        bundles = {}
        for target in TARGETS:
            path = self.root / f"{target}-v{version}.json"
            bundles[target] = bundle_from_dict(json.loads(path.read_text()))
        self._snapshot = RegistrySnapshot(
            version=version,
            bundles=bundles,
            installed_at=index.get("installed_at", ""),
        )

    def current(self) -> RegistrySnapshot | None:
        return self._snapshot  # attribute read is atomic; snapshots are immutable

    def require_current(self) -> RegistrySnapshot:
        snapshot = self._snapshot
        if snapshot is None:
            raise NoModelError("no trained model version installed yet")
        return snapshot

    def next_version(self) -> int:
        snapshot = self._snapshot
        return 1 if snapshot is None else snapshot.version + 1

    def install(self, bundles: dict[str, ModelBundle]) -> RegistrySnapshot:
        """Persist and atomically publish a new matched pair; old versions stay archived."""
        if set(bundles) != set(TARGETS):
            raise ValueError(f"registry needs exactly the targets {TARGETS}")
        with self._lock:
            version = self.next_version()
            installed_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
            for target, bundle in bundles.items():
                path = self.root / f"{target}-v{version}.json"
                path.write_text(json.dumps(bundle_to_dict(bundle)))
            index = {"current_version": version, "installed_at": installed_at}
            tmp = self._index_path().with_suffix(".tmp")
            tmp.write_text(json.dumps(index))
            tmp.replace(self._index_path())
            snapshot = RegistrySnapshot(
                version=version, bundles=dict(bundles), installed_at=installed_at
            )
            self._snapshot = snapshot
            return snapshot

    def versions(self) -> dict:
        snapshot = self._snapshot
        return {
            target: (None if snapshot is None else snapshot.version) for target in TARGETS
        }


@dataclass(frozen=True)
class RetrainOptions:
    epochs: int = 100
    seed: int = 0
    arch: str = DEFAULT_ARCH
    batch_size: int = 32
    stride: int = DEFAULT_STRIDE
    ratio: float = DEFAULT_RATIO


@dataclass(frozen=True)
class RetrainResult:
    version: int
    reports: dict[str, TrainReport]
    experiments_used: tuple[str, ...]


def retrain(
    store: ExperimentStore,
    registry: ModelRegistry,
    options: RetrainOptions = RetrainOptions(),
) -> RetrainResult:
    """Full refit on every complete experiment, then atomic registry advance.

    Any failure (including divergence) propagates before install, leaving the
    previous versions current.
    """
    records = store.list_experiments(status=STATUS_COMPLETE)
    if not records:
        raise NoCompleteExperimentsError("no complete experiments to train on")
    corpus = [(r.config, store.get_series(r.experiment_id)) for r in records]
    prepared = prepare_corpus(
        corpus, stride=options.stride, ratio=options.ratio, seed=options.seed
    )

    version = registry.next_version()
    bundles: dict[str, ModelBundle] = {}
    reports: dict[str, TrainReport] = {}
    for target in TARGETS:
        train_set, val_set = prepared.tensors(target, options.arch)
        model, report = train(
            options.arch,
            train_set,
            val_set,
            epochs=options.epochs,
            batch_size=options.batch_size,
            seed=options.seed,
        )
        reports[target] = report
        bundles[target] = ModelBundle(
            model=model,
            standardizer=prepared.standardizer,
            target=target,
            seed=options.seed,
            version=version,
            report=report,
        )
    snapshot = registry.install(bundles)
    return RetrainResult(
        version=snapshot.version,
        reports=reports,
        experiments_used=tuple(r.experiment_id for r in records),
    )


class RetrainJob:
    """Single background retrain; a second request while running is refused."""

    def __init__(self, store: ExperimentStore, registry: ModelRegistry):
        self.store = store
        self.registry = registry
        self._guard = threading.Lock()
        self._thread: threading.Thread | None = None
        self.last_result: RetrainResult | None = None

    def start(self, options: RetrainOptions, wait: bool = False) -> RetrainStatus:
        with self._guard:
            if self.registry.retrain_status.state == "running":
                raise RetrainInProgressError("a retrain is already running")
            self.registry.retrain_status = RetrainStatus(
                state="running",
                started_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            )
            self._thread = threading.Thread(
                target=self._run, args=(options,), daemon=True
            )
            self._thread.start()
        if wait:
            self.join()
        return self.registry.retrain_status

    def _run(self, options: RetrainOptions):
        try:
            self.last_result = retrain(self.store, self.registry, options)
            error = None
        except Exception as exc:  # previous versions stay current on any failure
            error = f"{type(exc).__name__}: {exc}"
        self.registry.retrain_status = RetrainStatus(state="idle", last_error=error)

    def join(self, timeout: float | None = None):
        thread = self._thread
        if thread is not None:
            thread.join(timeout)


@dataclass(frozen=True)
class LifespanPoint:
    cycles: int
    duration: float | None  # None when predicted pressure never reaches end pressure
    max_flow: float
    violates: bool


@dataclass(frozen=True)
class LifespanEstimate:
    """Smallest cloth-cycle count at which predicted performance breaks a threshold."""

    basis: ExperimentConfig
    points: tuple[LifespanPoint, ...]
    recommended_cycle: int | None  # None = no violation within the sweep
    flow_floor: float
    duration_cap: float | None
    model_version: int


def estimate_lifespan(
    registry: ModelRegistry,
    basis: ExperimentConfig,
    k_max: int = 40,
    flow_floor: float = DEFAULT_FLOW_FLOOR,
    duration_cap_factor: float = DEFAULT_DURATION_CAP_FACTOR,
    dt: float = 1.0,
    horizon: float = 3600.0,
) -> LifespanEstimate:
    """Sweep cloth cycles 1..k_max through the current models.

    A cycle count violates when predicted max flow drops below flow_floor or
    predicted duration exceeds duration_cap = factor * duration(k=1). If the
    k=1 duration already exceeds the horizon the cap check is disabled.
    """
    snapshot = registry.require_current()
    require_valid(basis)
    if k_max < 1:
        raise ValueError("k_max must be >= 1")

    pressure_bundle = snapshot.bundle("pressure")
    flow_bundle = snapshot.bundle("flow")

    def sweep(k: int) -> PredictionResult:
        return predict_series(
            pressure_bundle.model,
            flow_bundle.model,
            pressure_bundle.standardizer,
            basis.with_cycles(k),
            dt=dt,
            horizon=horizon,
        )

    base = sweep(1)
    duration_cap = None if base.duration is None else duration_cap_factor * base.duration

    points = []
    recommended = None
    for k in range(1, k_max + 1):
        result = base if k == 1 else sweep(k)
        max_flow = float(result.flow.max())
        too_slow = (
            duration_cap is not None
            and (result.duration is None or result.duration > duration_cap)
        )
        violates = max_flow < flow_floor or too_slow
        points.append(
            LifespanPoint(
                cycles=k, duration=result.duration, max_flow=max_flow, violates=violates
            )
        )
        if violates and recommended is None:
            recommended = k
    return LifespanEstimate(
        basis=basis,
        points=tuple(points),
        recommended_cycle=recommended,
        flow_floor=flow_floor,
        duration_cap=duration_cap,
        model_version=snapshot.version,
    )
