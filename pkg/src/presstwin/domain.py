"""Core data types and the fixed feature schema shared by every module.

Units are documented conventions enforced by validation ranges:
concentration in g/L, pressure in bar, flow in dm^3/min, time in seconds
relative to cycle start.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterator, Sequence

import numpy as np

FEATURE_NAMES: tuple[str, ...] = (
    "chambers",
    "time",
    "concentration",
    "cycles",
    "max_pressure",
)
TARGET_NAMES: tuple[str, ...] = ("pressure", "flow")
SCHEMA_NAMES: tuple[str, ...] = FEATURE_NAMES + TARGET_NAMES

MAX_END_PRESSURE = 10.0  # bar; largest value the experiment ranges cover

CSV_HEADER = "time_s,pressure_bar,flow_dm3_min"

STATUS_OPEN = "open"
STATUS_COMPLETE = "complete"


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


@dataclass(frozen=True)
class ExperimentConfig:
    """Static inputs of one filtration cycle."""

    experiment_id: str
    concentration: float  # suspension solids, g/L
    plate_count: int  # filter plates/chambers
    end_pressure: float  # cycle termination pressure, bar
    cloth_cycles: int  # prior uses of the filter cloth
    created_at: str = field(default_factory=_utc_now_iso)

    def with_cycles(self, cloth_cycles: int) -> "ExperimentConfig":
        return replace(self, cloth_cycles=cloth_cycles)


def validate_config(config: ExperimentConfig) -> list[str]:
    """Return every violated invariant; the config is valid iff the list is empty.

    Violations are values, not failures: callers decide whether to raise.
    """
    violations = []
    if not config.concentration > 0:
        violations.append("concentration > 0")
    if config.plate_count < 1:
        violations.append("plate_count >= 1")
    if not config.end_pressure > 0:
        violations.append("end_pressure > 0")
    if config.end_pressure > MAX_END_PRESSURE:
        violations.append(f"end_pressure <= {MAX_END_PRESSURE:g}")
    if config.cloth_cycles < 1:
        violations.append("cloth_cycles >= 1")
    return violations


class InvalidConfigError(ValueError):
    def __init__(self, violations: Sequence[str]):
        super().__init__("invalid experiment config: " + "; ".join(violations))
        self.violations = list(violations)


def require_valid(config: ExperimentConfig) -> ExperimentConfig:
    violations = validate_config(config)
    if violations:
        raise InvalidConfigError(violations)
    return config


def feature_vector(config: ExperimentConfig, t: float) -> np.ndarray:
    """5-vector in fixed schema order [chambers, time, concentration, cycles, max_pressure]."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return np.array(
        [
            float(config.plate_count),
            float(t),
            float(config.concentration),
            float(config.cloth_cycles),
            float(config.end_pressure),
        ]
    )


def feature_matrix(config: ExperimentConfig, times: np.ndarray) -> np.ndarray:
    """feature_vector broadcast over a time grid; shape (len(times), 5)."""
    times = np.asarray(times, dtype=float)
    if times.size and times.min() < 0:
        raise ValueError("times must be >= 0")
    rows = np.empty((times.size, len(FEATURE_NAMES)))
    rows[:, 0] = config.plate_count
    rows[:, 1] = times
    rows[:, 2] = config.concentration
    rows[:, 3] = config.cloth_cycles
    rows[:, 4] = config.end_pressure
    return rows


@dataclass(frozen=True)
class Sample:
    """One timestamped measurement: elapsed seconds, pressure in bar, flow in dm^3/min."""

    t: float
    pressure: float
    flow: float


@dataclass(frozen=True)
class CycleSeries:
    """Timestamped pressure/flow samples for one cycle.

    Array-backed; `samples` is a derived view. Sample times are strictly
    increasing with nominal 0.1 s spacing (gaps permitted, never reordering).
    """

    experiment_id: str
    t: np.ndarray
    pressure: np.ndarray
    flow: np.ndarray
    status: str = STATUS_COMPLETE
    timed_out: bool = False  # completed by hitting t_max instead of end pressure

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        p = np.asarray(self.pressure, dtype=float)
        q = np.asarray(self.flow, dtype=float)
        if not (t.shape == p.shape == q.shape) or t.ndim != 1:
            raise ValueError("t, pressure, flow must be 1-D arrays of equal length")
        if t.size:
            if t[0] < 0 or p.min() < 0 or q.min() < 0:
                raise ValueError("sample values must be non-negative")
            if t.size > 1 and not np.all(np.diff(t) > 0):
                raise ValueError("sample times must be strictly increasing")
        if self.status not in (STATUS_OPEN, STATUS_COMPLETE):
            raise ValueError(f"unknown status {self.status!r}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "pressure", p)
        object.__setattr__(self, "flow", q)

    def __len__(self) -> int:
        return self.t.size

    @property
    def samples(self) -> Iterator[Sample]:
        for i in range(self.t.size):
            yield Sample(float(self.t[i]), float(self.pressure[i]), float(self.flow[i]))

    @property
    def duration(self) -> float:
        return float(self.t[-1]) if self.t.size else 0.0

    @classmethod
    def from_samples(
        cls,
        experiment_id: str,
        samples: Sequence[Sample],
        status: str = STATUS_COMPLETE,
        timed_out: bool = False,
    ) -> "CycleSeries":
        t = np.array([s.t for s in samples], dtype=float)
        p = np.array([s.pressure for s in samples], dtype=float)
        q = np.array([s.flow for s in samples], dtype=float)
        return cls(experiment_id, t, p, q, status=status, timed_out=timed_out)


def config_to_dict(config: ExperimentConfig) -> dict:
    """Canonical snake_case JSON form."""
    return {
        "experiment_id": config.experiment_id,
        "concentration": config.concentration,
        "plate_count": config.plate_count,
        "end_pressure": config.end_pressure,
        "cloth_cycles": config.cloth_cycles,
        "created_at": config.created_at,
    }


def config_from_dict(payload: dict) -> ExperimentConfig:
    kwargs = dict(
        experiment_id=str(payload["experiment_id"]),
        concentration=float(payload["concentration"]),
        plate_count=int(payload["plate_count"]),
        end_pressure=float(payload["end_pressure"]),
        cloth_cycles=int(payload["cloth_cycles"]),
    )
    if payload.get("created_at"):
        kwargs["created_at"] = str(payload["created_at"])
    return ExperimentConfig(**kwargs)


def config_to_json(config: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(config), sort_keys=True)


def config_from_json(text: str) -> ExperimentConfig:
    return config_from_dict(json.loads(text))


def series_to_csv(series: CycleSeries) -> str:
    """Canonical CSV: fixed header, shortest round-tripping float repr."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for i in range(len(series)):
        buf.write(
            f"{float(series.t[i])!r},{float(series.pressure[i])!r},{float(series.flow[i])!r}\n"
        )
    return buf.getvalue()


def series_from_csv(
    experiment_id: str,
    text: str,
    status: str = STATUS_COMPLETE,
    timed_out: bool = False,
) -> CycleSeries:
    lines = text.strip().splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ValueError(f"expected header {CSV_HEADER!r}")
    rows = [line.split(",") for line in lines[1:] if line.strip()]
    t = np.array([float(r[0]) for r in rows])
    p = np.array([float(r[1]) for r in rows])
    q = np.array([float(r[2]) for r in rows])
    return CycleSeries(experiment_id, t, p, q, status=status, timed_out=timed_out)
