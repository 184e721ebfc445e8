"""File-backed persistence mirroring the two-table relational design.

One directory per experiment holds `meta.json` (config + status) and
`samples.csv` (the append-only measurement log, canonical header), with a
store-level `index.json` listing ids. samples.csv is the source of truth:
every append rewrites it through a temp file and an atomic rename, so a
partially written batch is either fully visible or fully absent after a
crash; meta.json is derived and reconciled from the CSV on load.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import (
    CSV_HEADER,
    STATUS_COMPLETE,
    STATUS_OPEN,
    CycleSeries,
    ExperimentConfig,
    Sample,
    config_from_dict,
    config_to_dict,
    require_valid,
    series_from_csv,
)


class StoreError(Exception):
    pass


class UnknownExperimentError(StoreError):
    def __init__(self, experiment_id: str):
        super().__init__(f"unknown experiment {experiment_id!r}")
        self.experiment_id = experiment_id


class DuplicateExperimentError(StoreError):
    def __init__(self, experiment_id: str):
        super().__init__(f"experiment {experiment_id!r} already exists")
        self.experiment_id = experiment_id


class ExperimentClosedError(StoreError):
    def __init__(self, experiment_id: str):
        super().__init__(f"experiment {experiment_id!r} is complete; appends rejected")
        self.experiment_id = experiment_id


class TimeRegressionError(StoreError):
    def __init__(self, index: int, t: float, last_t: float):
        super().__init__(
            f"batch sample {index} has t={t:g} not after last stored t={last_t:g}"
        )
        self.index = index


@dataclass(frozen=True)
class ExperimentRecord:
    config: ExperimentConfig
    status: str
    sample_count: int
    timed_out: bool
    path: Path

    @property
    def experiment_id(self) -> str:
        return self.config.experiment_id


def _atomic_write(path: Path, data: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class ExperimentStore:
    """Experiment metadata plus per-experiment measurement logs under one root."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.experiments_dir = self.root / "experiments"
        self.experiments_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._records: dict[str, ExperimentRecord] = {}
        self._last_t: dict[str, float] = {}
        self._order: list[str] = []
        self._load()

    # -- loading -------------------------------------------------------------

    def _index_path(self) -> Path:
        return self.root / "index.json"

    def _load(self):
        index = []
        if self._index_path().exists():
            index = json.loads(self._index_path().read_text())
        else:
            index = sorted(p.name for p in self.experiments_dir.iterdir() if p.is_dir())
        for exp_id in index:
            exp_dir = self.experiments_dir / exp_id
            meta_path = exp_dir / "meta.json"
            if not meta_path.exists():
                continue
            meta = json.loads(meta_path.read_text())
            config = config_from_dict(meta["config"])
            series = self._read_series(exp_id, meta)
            record = ExperimentRecord(
                config=config,
                status=meta.get("status", STATUS_OPEN),
                sample_count=len(series),
                timed_out=bool(meta.get("timed_out", False)),
                path=exp_dir,
            )
            self._records[exp_id] = record
            self._last_t[exp_id] = float(series.t[-1]) if len(series) else -1.0
            self._order.append(exp_id)
            if record.sample_count != meta.get("sample_count", record.sample_count):
                self._write_meta(record)  # reconcile derived metadata with the CSV

    def _read_series(self, exp_id: str, meta: dict) -> CycleSeries:
        csv_path = self.experiments_dir / exp_id / "samples.csv"
        if not csv_path.exists():
            return CycleSeries(exp_id, np.array([]), np.array([]), np.array([]),
                               status=meta.get("status", STATUS_OPEN))
        return series_from_csv(
            exp_id,
            csv_path.read_text(),
            status=meta.get("status", STATUS_OPEN),
            timed_out=bool(meta.get("timed_out", False)),
        )

    # -- persistence ---------------------------------------------------------

    def _write_meta(self, record: ExperimentRecord):
        payload = {
            "config": config_to_dict(record.config),
            "status": record.status,
            "sample_count": record.sample_count,
            "timed_out": record.timed_out,
        }
        _atomic_write(record.path / "meta.json", json.dumps(payload, indent=2))

    def _write_index(self):
        _atomic_write(self._index_path(), json.dumps(self._order, indent=2))

    # -- operations ----------------------------------------------------------

    def create_experiment(self, config: ExperimentConfig) -> ExperimentRecord:
        require_valid(config)
        with self._lock:
            exp_id = config.experiment_id
            if exp_id in self._records:
                raise DuplicateExperimentError(exp_id)
            exp_dir = self.experiments_dir / exp_id
            exp_dir.mkdir(parents=True, exist_ok=True)
            record = ExperimentRecord(
                config=config,
                status=STATUS_OPEN,
                sample_count=0,
                timed_out=False,
                path=exp_dir,
            )
            _atomic_write(exp_dir / "samples.csv", CSV_HEADER + "\n")
            self._write_meta(record)
            self._records[exp_id] = record
            self._last_t[exp_id] = -1.0
            self._order.append(exp_id)
            self._write_index()
            return record

    def _require(self, experiment_id: str) -> ExperimentRecord:
        record = self._records.get(experiment_id)
        if record is None:
            raise UnknownExperimentError(experiment_id)
        return record

    def append_samples(self, experiment_id: str, batch: Sequence[Sample]) -> int:
        """Durable append; returns the new sample count.

        Batch times must be strictly increasing and all exceed the last stored
        time; a regression is rejected citing its batch index.
        """
        with self._lock:
            record = self._require(experiment_id)
            if record.status != STATUS_OPEN:
                raise ExperimentClosedError(experiment_id)
            if not batch:
                return record.sample_count
            last_t = self._last_t[experiment_id]
            for idx, sample in enumerate(batch):
                if sample.t <= last_t:
                    raise TimeRegressionError(idx, sample.t, last_t)
                if sample.t < 0 or sample.pressure < 0 or sample.flow < 0:
                    raise ValueError(f"batch sample {idx} has negative values")
                last_t = sample.t

            csv_path = record.path / "samples.csv"
            existing = csv_path.read_text()
            lines = [existing if existing.endswith("\n") else existing + "\n"]
            for s in batch:
                lines.append(f"{float(s.t)!r},{float(s.pressure)!r},{float(s.flow)!r}\n")
            _atomic_write(csv_path, "".join(lines))

            record = replace(record, sample_count=record.sample_count + len(batch))
            self._records[experiment_id] = record
            self._last_t[experiment_id] = last_t
            self._write_meta(record)
            return record.sample_count

    def append_series(self, experiment_id: str, series: CycleSeries) -> int:
        return self.append_samples(experiment_id, list(series.samples))

    def mark_complete(self, experiment_id: str, timed_out: bool = False) -> ExperimentRecord:
        with self._lock:
            record = self._require(experiment_id)
            if record.status == STATUS_COMPLETE:
                raise ExperimentClosedError(experiment_id)
            record = replace(record, status=STATUS_COMPLETE, timed_out=timed_out)
            self._records[experiment_id] = record
            self._write_meta(record)
            return record

    def get_record(self, experiment_id: str) -> ExperimentRecord:
        with self._lock:
            return self._require(experiment_id)

    def get_series(self, experiment_id: str) -> CycleSeries:
        with self._lock:
            record = self._require(experiment_id)
            meta = {
                "status": record.status,
                "timed_out": record.timed_out,
            }
            return self._read_series(experiment_id, meta)

    def list_experiments(self, status: str | None = None) -> list[ExperimentRecord]:
        """Records in creation order (created_at ties broken by insertion)."""
        with self._lock:
            records = [self._records[i] for i in self._order]
        records.sort(key=lambda r: r.config.created_at)
        if status is not None:
            records = [r for r in records if r.status == status]
        return records

    def ingest_series(self, config: ExperimentConfig, series: CycleSeries) -> ExperimentRecord:
        """Create + append + complete in one call (batch corpus writes)."""
        self.create_experiment(config)
        self.append_series(config.experiment_id, series)
        return self.mark_complete(config.experiment_id, timed_out=series.timed_out)
