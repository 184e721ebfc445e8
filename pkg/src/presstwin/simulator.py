"""Synthetic chamber-filter-press cycles.

The dynamics are a surrogate calibrated for qualitative trends, not a CFD
model: cake resistance grows with filtered volume per chamber area, cloth
wear throttles pump-deliverable flow and adds medium resistance, and the
pump characteristic caps flow as pressure approaches the stall point.
Reproduced trends: pressure rises to the end pressure while flow decays;
more cloth cycles -> longer cycles and lower flow; higher concentration ->
shorter cycles; more plates -> longer cycles.
"""

from __future__ import annotations

import hashlib
import json
import time as _time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .domain import (
    STATUS_COMPLETE,
    CycleSeries,
    ExperimentConfig,
    Sample,
    require_valid,
)


@dataclass(frozen=True)
class NoiseParams:
    pressure_sigma: float = 0.15  # bar
    flow_sigma: float = 0.5  # dm^3/min
    pulsation_amplitude: float = 0.1  # bar, membrane pump
    pulsation_hz: float = 1.2
    low_flow_sigma: float = 0.8  # flow noise widens to this below the threshold
    low_flow_threshold: float = 5.0  # dm^3/min

    def zeroed(self) -> "NoiseParams":
        return NoiseParams(0.0, 0.0, 0.0, self.pulsation_hz, 0.0, self.low_flow_threshold)


@dataclass(frozen=True)
class SimParams:
    q_max0: float = 25.0  # clean-cloth pump-limited flow, dm^3/min
    p_stall: float = 11.0  # pump stall pressure, bar; > 10 so every end pressure is reachable
    r_m0: float = 0.022  # clean-medium resistance, bar*min/dm^3
    beta_q: float = 0.02  # per-cycle flow-blinding coefficient
    beta_r: float = 0.01  # per-cycle medium-resistance coefficient
    g: float = 0.03  # cake-resistance growth, bar*min/dm^3 per (g/L * dm^3 / plate^2)
    dt: float = 0.1  # s
    t_max: float = 3600.0  # s, hard cap
    noise: NoiseParams = field(default_factory=NoiseParams)

    def __post_init__(self):
        for name in ("q_max0", "r_m0", "beta_q", "beta_r", "g", "dt", "t_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.p_stall <= 10.0:
            raise ValueError("p_stall must exceed 10 bar so every admissible end pressure is reachable")

    def clean(self) -> "SimParams":
        return replace(self, noise=self.noise.zeroed())


def degradation_factors(cycles: int, params: SimParams = SimParams()) -> tuple[float, float]:
    """(flow-cap multiplier, medium-resistance multiplier) after `cycles` uses."""
    if cycles < 0:
        raise ValueError("cycles must be >= 0")
    return 1.0 / (1.0 + params.beta_q * cycles), 1.0 + params.beta_r * cycles


def simulate_cycle(
    config: ExperimentConfig,
    params: SimParams = SimParams(),
    seed: int = 0,
) -> CycleSeries:
    """Run one filtration cycle; deterministic given (config, params, seed).

    Per step: r = r_m0*(1+beta_r*k) + g*c*V/N^2, q_cap = q_max0/(1+beta_q*k),
    Q = q_cap/(1 + q_cap*r/p_stall), P = Q*r, then V += Q*dt/60 (Q is per
    minute, dt in seconds -- the /60 conversion matters). Terminates once the
    clean pressure reaches the end pressure, or at t_max (timed_out flag).
    Measured channels add pump pulsation and Gaussian sensor noise on top of
    the clean trajectory; flow noise widens below the low-flow threshold.
    """
    require_valid(config)
    k = config.cloth_cycles
    c = config.concentration
    n_sq = float(config.plate_count) ** 2
    flow_mult, res_mult = degradation_factors(k, params)
    q_cap = params.q_max0 * flow_mult
    r_medium = params.r_m0 * res_mult

    dt = params.dt
    n_steps_max = int(params.t_max / dt) + 1
    t_list: list[float] = []
    p_list: list[float] = []
    q_list: list[float] = []
    volume = 0.0
    timed_out = True
    for i in range(n_steps_max):
        t = i * dt
        r = r_medium + params.g * c * volume / n_sq
        q = q_cap / (1.0 + q_cap * r / params.p_stall)
        p = q * r
        t_list.append(t)
        p_list.append(p)
        q_list.append(q)
        if p >= config.end_pressure:
            timed_out = False
            break
        volume += q * dt / 60.0

    t_arr = np.array(t_list)
    p_clean = np.array(p_list)
    q_clean = np.array(q_list)

    noise = params.noise
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    pulsation = noise.pulsation_amplitude * np.sin(
        2.0 * np.pi * noise.pulsation_hz * t_arr + phase
    )
    p_meas = p_clean + pulsation + rng.normal(0.0, noise.pressure_sigma, t_arr.size)
    flow_sigma = np.where(
        q_clean < noise.low_flow_threshold, noise.low_flow_sigma, noise.flow_sigma
    )
    q_meas = q_clean + rng.standard_normal(t_arr.size) * flow_sigma
    # Sensors never report negative values.
    np.clip(p_meas, 0.0, None, out=p_meas)
    np.clip(q_meas, 0.0, None, out=q_meas)

    return CycleSeries(
        experiment_id=config.experiment_id,
        t=t_arr,
        pressure=p_meas,
        flow=q_meas,
        status=STATUS_COMPLETE,
        timed_out=timed_out,
    )


def derive_seed(seed: int, experiment_id: str) -> int:
    """Stable per-experiment seed; Python's salted hash() is unusable here."""
    digest = hashlib.blake2s(f"{seed}:{experiment_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def generate_corpus(
    grid: Sequence[ExperimentConfig],
    params: SimParams = SimParams(),
    seed: int = 0,
) -> list[CycleSeries]:
    """One simulated series per config, with per-config seeds derived from (seed, id)."""
    if not grid:
        raise ValueError("empty experiment grid")
    ids = [cfg.experiment_id for cfg in grid]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate experiment ids in grid")
    return [simulate_cycle(cfg, params, derive_seed(seed, cfg.experiment_id)) for cfg in grid]


def sample_json(sample: Sample) -> str:
    """Wire form of one sample: {"t":…,"pressure":…,"flow":…}."""
    return json.dumps({"t": sample.t, "pressure": sample.pressure, "flow": sample.flow})


def ndjson_sink(write: Callable[[str], object]) -> Callable[[Sample], None]:
    """Adapt a line writer into a replay sink emitting newline-delimited JSON."""

    def sink(sample: Sample) -> None:
        write(sample_json(sample) + "\n")

    return sink


class ReplayAborted(RuntimeError):
    """Sink failed mid-replay; `delivered` counts samples accepted before the failure."""

    def __init__(self, delivered: int, cause: Exception):
        super().__init__(f"replay aborted after {delivered} samples: {cause}")
        self.delivered = delivered
        self.cause = cause


def replay(
    series: CycleSeries,
    speedup: float,
    sink: Callable[[Sample], None],
    sleep: Callable[[float], None] = _time.sleep,
    clock: Callable[[], float] = _time.monotonic,
) -> int:
    """Deliver samples in order, pacing wall time by (t_i - t_0)/speedup.

    Pacing follows an absolute schedule so sleep overshoot does not
    accumulate. Returns the number of samples delivered.
    """
    if speedup <= 0:
        raise ValueError("speedup must be > 0")
    if len(series) == 0:
        return 0
    start_wall = clock()
    t0 = float(series.t[0])
    delivered = 0
    for sample in series.samples:
        deadline = start_wall + (sample.t - t0) / speedup
        delay = deadline - clock()
        if delay > 0:
            sleep(delay)
        try:
            sink(sample)
        except Exception as exc:
            raise ReplayAborted(delivered, exc) from exc
        delivered += 1
    return delivered


# --- Experiment grids -------------------------------------------------------
#
# The training grid covers 34 configurations spanning three concentrations,
# one to four plates, end pressures from 0.2 to 10 bar, and cloth cycles from
# 1 to 36. The two evaluation grids hold the 12 configs whose data is
# partially known to a trained model and the 8 configs that are entirely
# unseen (including the 15 g/L concentration absent from training).

_TRAINING_ROWS: list[tuple[float, int, float, int]] = [
    (6.25, 2, 2.0, 34),
    (6.25, 2, 4.0, 32),
    (6.25, 2, 5.0, 31),
    (6.25, 2, 6.0, 30),
    (6.25, 2, 8.0, 29),
    (12.5, 1, 10.0, 4),
    *[(12.5, 2, 10.0, k) for k in (2, 4, 5, 6, 7, 14, 23, 35, 36)],
    (12.5, 2, 7.0, 5),
    (12.5, 2, 8.0, 6),
    (12.5, 2, 0.2, 1),
    (12.5, 2, 0.5, 10),
    (12.5, 2, 0.5, 11),
    (12.5, 2, 0.7, 12),
    (12.5, 2, 0.7, 13),
    *[(12.5, 3, 10.0, k) for k in (1, 2, 3)],
    (25.0, 1, 10.0, 24),
    (25.0, 2, 5.0, 18),
    (25.0, 2, 6.0, 19),
    (25.0, 2, 7.0, 20),
    (25.0, 2, 8.0, 21),
    (25.0, 2, 9.0, 22),
    (25.0, 2, 10.0, 23),
    (25.0, 3, 10.0, 25),
    (25.0, 4, 10.0, 26),
]

_KNOWN_EVAL_ROWS: list[tuple[float, int, float, int]] = [
    (12.5, 2, 10.0, 2),
    (12.5, 2, 10.0, 7),
    (12.5, 2, 10.0, 35),
    (12.5, 2, 10.0, 36),
    (6.25, 2, 8.0, 29),
    (25.0, 2, 10.0, 23),
    (12.5, 1, 10.0, 4),
    (12.5, 3, 10.0, 2),
    (12.5, 2, 10.0, 5),
    (25.0, 1, 10.0, 24),
    (25.0, 3, 10.0, 25),
    (25.0, 4, 10.0, 26),
]

_UNSEEN_EVAL_ROWS: list[tuple[float, int, float, int]] = [
    (6.25, 2, 10.0, 24),
    (12.5, 2, 10.0, 30),
    (12.5, 2, 10.0, 11),
    (12.5, 2, 10.0, 10),
    (12.5, 2, 10.0, 9),
    (12.5, 3, 10.0, 6),
    (15.0, 2, 10.0, 7),
    (15.0, 2, 10.0, 8),
]


def _configs(rows: Sequence[tuple[float, int, float, int]], prefix: str) -> list[ExperimentConfig]:
    return [
        ExperimentConfig(
            experiment_id=f"{prefix}-{i + 1:02d}-c{c:g}-n{n}-e{e:g}-k{k}",
            concentration=c,
            plate_count=n,
            end_pressure=e,
            cloth_cycles=k,
        )
        for i, (c, n, e, k) in enumerate(rows)
    ]


def training_grid() -> list[ExperimentConfig]:
    """The 34-configuration corpus grid."""
    return _configs(_TRAINING_ROWS, "train")


def known_eval_configs() -> list[ExperimentConfig]:
    """12 evaluation configs whose data is partially known after training."""
    return _configs(_KNOWN_EVAL_ROWS, "eval")


def unseen_eval_configs() -> list[ExperimentConfig]:
    """8 evaluation configs fully held out of training (incl. 15 g/L)."""
    return _configs(_UNSEEN_EVAL_ROWS, "holdout")
