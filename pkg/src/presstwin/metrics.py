"""Evaluation stack: point metrics, moving-average confidence bands, band-relative errors.

The banded reference smooths raw sensor series with a trailing window
(shrinking at the left boundary, so predictions are scorable from t=0) and
brackets it with MA +/- 1.645*STD. Point errors are scored against the
smoothed reference; band errors count only excursions outside the bracket.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

Z_90 = 1.645  # z-score of the 90% interval
DEFAULT_WINDOW = 50  # samples; 5 s at 10 Hz, long enough to smooth pump pulsation


@dataclass(frozen=True)
class PointMetrics:
    mse: float
    mae: float
    rmse: float
    r2: float  # nan when the true series is constant


@dataclass(frozen=True)
class BandedSeries:
    """Moving average with CI90 bounds; the reference predictions are scored against."""

    t: np.ndarray
    ma: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    window: int
    z: float = Z_90

    def __post_init__(self):
        n = self.ma.size
        if not (self.t.size == n == self.lower.size == self.upper.size):
            raise ValueError("band arrays must have equal length")
        if n and not (
            np.all(self.lower <= self.ma + 1e-12) and np.all(self.ma <= self.upper + 1e-12)
        ):
            raise ValueError("band must satisfy lower <= ma <= upper")

    def __len__(self) -> int:
        return self.ma.size


@dataclass(frozen=True)
class MetricRow:
    """One Tables-5/6-shaped result row for a single target."""

    mse: float
    rmse: float
    rl2n: float  # percent
    rl2n_b: float  # percent
    pib: float  # percent

    def as_dict(self) -> dict:
        return {
            "mse": self.mse,
            "rmse": self.rmse,
            "rl2n": self.rl2n,
            "rl2n_b": self.rl2n_b,
            "pib": self.pib,
        }


def point_metrics(y: np.ndarray, yhat: np.ndarray) -> PointMetrics:
    """MSE, MAE, RMSE and R^2 of predictions against true values."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1 or y.size == 0:
        raise ValueError("y and yhat must be equal-length non-empty 1-D arrays")
    err = y - yhat
    mse = float(np.mean(err**2))
    mae = float(np.mean(np.abs(err)))
    rmse = math.sqrt(mse)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = float("nan")  # undefined for a constant true series
    else:
        r2 = 1.0 - float(np.sum(err**2)) / ss_tot
    return PointMetrics(mse=mse, mae=mae, rmse=rmse, r2=r2)


def _trailing_windows(x: np.ndarray, n: int):
    """Full windows as a strided (m, n) view plus the shrinking-prefix length."""
    prefix = min(n - 1, x.size)
    view = None
    if x.size >= n:
        view = np.lib.stride_tricks.sliding_window_view(x, n)
    return prefix, view


def moving_average(x: np.ndarray, n: int) -> np.ndarray:
    """Trailing mean of the last min(n, i+1) samples; window shrinks at the left edge.

    Each window is reduced directly (no running-sum subtraction), so results
    match a naive per-window recomputation with no streaming drift.
    """
    if n < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    prefix, view = _trailing_windows(x, n)
    for i in range(prefix):
        out[i] = x[: i + 1].mean()
    if view is not None:
        out[n - 1 :] = view.mean(axis=-1)
    return out


def rolling_std(x: np.ndarray, n: int) -> np.ndarray:
    """Population standard deviation over the same shrinking trailing window."""
    if n < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    prefix, view = _trailing_windows(x, n)
    for i in range(prefix):
        out[i] = x[: i + 1].std()
    if view is not None:
        out[n - 1 :] = view.std(axis=-1)
    return out


def band(x: np.ndarray, n: int, t: np.ndarray | None = None, z: float = Z_90) -> BandedSeries:
    """CI90 band around the moving average: MA -/+ z * rolling STD."""
    if n < 2:
        raise ValueError("band window must be >= 2")
    x = np.asarray(x, dtype=float)
    if t is None:
        t = np.arange(x.size, dtype=float)
    else:
        t = np.asarray(t, dtype=float)
    ma = moving_average(x, n)
    std = rolling_std(x, n)
    return BandedSeries(t=t, ma=ma, lower=ma - z * std, upper=ma + z * std, window=n, z=z)


def rl2n(y: np.ndarray, yhat: np.ndarray) -> float:
    """Relative L2-norm error in percent: 100 * ||y - yhat|| / ||y||."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError("length mismatch")
    denom = math.sqrt(float(np.sum(y**2)))
    if denom == 0.0:
        raise ValueError("rl2n undefined for a zero-norm reference")
    return 100.0 * math.sqrt(float(np.sum((y - yhat) ** 2))) / denom


def _band_excursions_sq(yhat: np.ndarray, b: BandedSeries) -> np.ndarray:
    """Squared distance to the nearer bound, zero inside the band (bounds inclusive)."""
    below = np.clip(b.lower - yhat, 0.0, None)
    above = np.clip(yhat - b.upper, 0.0, None)
    return below**2 + above**2  # at most one side is nonzero since lower <= upper


def rl2n_b(yhat: np.ndarray, b: BandedSeries) -> float:
    """Band-relative L2 error in percent; only excursions outside [lower, upper] count.

    Integrals discretize to sums on the shared sample grid (uniform spacing
    cancels in the ratio); normalization uses the band's moving average.
    """
    yhat = np.asarray(yhat, dtype=float)
    if yhat.size != len(b):
        raise ValueError("length mismatch")
    denom = float(np.sum(b.ma**2))
    if denom == 0.0:
        raise ValueError("rl2n_b undefined for a zero-norm moving average")
    e2 = _band_excursions_sq(yhat, b)
    return 100.0 * math.sqrt(float(np.sum(e2)) / denom)


def pib(yhat: np.ndarray, b: BandedSeries) -> float:
    """Percentage of points inside the CI90 bounds, boundary points inclusive."""
    yhat = np.asarray(yhat, dtype=float)
    if yhat.size != len(b):
        raise ValueError("length mismatch")
    inside = (yhat >= b.lower) & (yhat <= b.upper)
    return 100.0 * float(np.count_nonzero(inside)) / yhat.size


def _series_arrays(obj) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Accept a CycleSeries or any object with t/pressure/flow arrays."""
    return (
        np.asarray(obj.t, dtype=float),
        np.asarray(obj.pressure, dtype=float),
        np.asarray(obj.flow, dtype=float),
    )


def evaluate_experiment(
    measured,
    predicted,
    n: int = DEFAULT_WINDOW,
    reference: str = "ma",
) -> tuple[MetricRow, MetricRow]:
    """Score a predicted trajectory against banded measurements, one row per target.

    The prediction must already live on the measured time grid (truncated to
    the shorter of the two); MSE/RMSE/RL2N are computed against the moving
    average (or the raw series with reference="raw"), RL2N-B and PIB against
    the CI90 band.
    """
    if reference not in ("ma", "raw"):
        raise ValueError("reference must be 'ma' or 'raw'")
    t_m, p_m, q_m = _series_arrays(measured)
    t_p, p_p, q_p = _series_arrays(predicted)
    m = min(t_m.size, t_p.size)
    if m == 0:
        raise ValueError("empty series")
    if not np.allclose(t_m[:m], t_p[:m], rtol=0.0, atol=1e-9):
        raise ValueError("prediction is not aligned to the measured time grid")

    rows = []
    for y_meas, y_pred in ((p_m[:m], p_p[:m]), (q_m[:m], q_p[:m])):
        b = band(y_meas, n, t=t_m[:m])
        ref = b.ma if reference == "ma" else y_meas
        pm = point_metrics(ref, y_pred)
        rows.append(
            MetricRow(
                mse=pm.mse,
                rmse=pm.rmse,
                rl2n=rl2n(ref, y_pred),
                rl2n_b=rl2n_b(y_pred, b),
                pib=pib(y_pred, b),
            )
        )
    return rows[0], rows[1]


REPORT_FIELDS = ("mse", "rmse", "rl2n", "rl2n_b", "pib")


def mean_row(rows: Sequence[MetricRow]) -> MetricRow:
    if not rows:
        raise ValueError("no rows to average")
    return MetricRow(
        **{f: float(np.mean([getattr(r, f) for r in rows])) for f in REPORT_FIELDS}
    )


def report_rows(
    results: Sequence[tuple[str, MetricRow, MetricRow]],
) -> list[dict]:
    """Tables-5/6-shaped report: one dict per experiment plus a mean row."""
    out = []
    for exp_id, p_row, q_row in results:
        rec = {"experiment": exp_id}
        rec.update({f"pressure_{f}": getattr(p_row, f) for f in REPORT_FIELDS})
        rec.update({f"flow_{f}": getattr(q_row, f) for f in REPORT_FIELDS})
        out.append(rec)
    p_mean = mean_row([p for _, p, _ in results])
    q_mean = mean_row([q for _, _, q in results])
    rec = {"experiment": "mean"}
    rec.update({f"pressure_{f}": getattr(p_mean, f) for f in REPORT_FIELDS})
    rec.update({f"flow_{f}": getattr(q_mean, f) for f in REPORT_FIELDS})
    out.append(rec)
    return out


def report_to_csv(rows: Sequence[dict]) -> str:
    if not rows:
        raise ValueError("empty report")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def report_to_json(rows: Sequence[dict]) -> str:
    return json.dumps(list(rows), indent=2)
