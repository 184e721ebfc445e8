import math

import numpy as np
import pytest

from presstwin import metrics
from presstwin.metrics import (
    BandedSeries,
    MetricRow,
    band,
    evaluate_experiment,
    mean_row,
    moving_average,
    pib,
    point_metrics,
    report_rows,
    rl2n,
    rl2n_b,
    rolling_std,
)


# Naive reimplementations used as oracles; deliberately loop-based.

def naive_ma(x, n):
    return [sum(x[max(0, i - n + 1) : i + 1]) / len(x[max(0, i - n + 1) : i + 1])
            for i in range(len(x))]


def naive_std(x, n):
    out = []
    for i in range(len(x)):
        w = x[max(0, i - n + 1) : i + 1]
        m = sum(w) / len(w)
        out.append(math.sqrt(sum((v - m) ** 2 for v in w) / len(w)))
    return out


class TestPointMetrics:
    def test_hand_arithmetic_fixture(self):
        pm = point_metrics([1, 2, 3], [2, 2, 2])
        assert pm.mse == pytest.approx(2 / 3, abs=1e-12)
        assert pm.mae == pytest.approx(2 / 3, abs=1e-12)
        assert pm.rmse == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
        assert pm.r2 == pytest.approx(0.0, abs=1e-12)  # SS_res == SS_tot == 2

    def test_perfect_fit(self):
        pm = point_metrics([1.0, 2.0, 4.0], [1.0, 2.0, 4.0])
        assert (pm.mse, pm.mae, pm.rmse, pm.r2) == (0.0, 0.0, 0.0, 1.0)

    def test_unit_error(self):
        pm = point_metrics([0.0, 0.0], [1.0, 1.0])
        assert pm.mse == 1.0 and pm.rmse == 1.0

    def test_constant_truth_has_undefined_r2(self):
        pm = point_metrics([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
        assert math.isnan(pm.r2)

    def test_rmse_is_sqrt_mse(self):
        rng = np.random.default_rng(0)
        y, yhat = rng.normal(size=100), rng.normal(size=100)
        pm = point_metrics(y, yhat)
        assert pm.rmse**2 == pytest.approx(pm.mse, rel=1e-12)


class TestMovingAverage:
    def test_shrinking_window_fixture(self):
        assert moving_average([1, 2, 3, 4], 3).tolist() == [1.0, 1.5, 2.0, 3.0]

    def test_window_one_is_identity(self):
        x = np.array([3.0, 1.0, 4.0])
        assert moving_average(x, 1).tolist() == x.tolist()

    def test_constant_series_unchanged(self):
        assert moving_average(np.full(10, 7.0), 4).tolist() == [7.0] * 10

    def test_zero_window_rejected(self):
        with pytest.raises(ValueError):
            moving_average([1.0], 0)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            x = rng.normal(size=rng.integers(1, 300))
            n = int(rng.integers(1, 60))
            np.testing.assert_allclose(moving_average(x, n), naive_ma(list(x), n), rtol=1e-12)
            np.testing.assert_allclose(rolling_std(x, n), naive_std(list(x), n),
                                       rtol=1e-12, atol=1e-12)


class TestBand:
    def test_ci90_bounds_fixture(self):
        # window [3, 7]: MA 5, population STD 2 -> 5 -/+ 1.645*2
        b = band(np.array([3.0, 7.0]), 2)
        assert b.ma[1] == pytest.approx(5.0)
        assert b.lower[1] == pytest.approx(1.71, abs=1e-12)
        assert b.upper[1] == pytest.approx(8.29, abs=1e-12)

    def test_noise_free_band_collapses(self):
        x = np.linspace(1, 2, 30)
        b = band(x, 5)
        assert np.all(b.upper - b.lower >= 0)
        assert b.upper[0] == b.lower[0] == x[0]  # first sample has STD 0

    def test_window_below_two_rejected(self):
        with pytest.raises(ValueError):
            band(np.ones(5), 1)

    def test_gaussian_half_width_converges(self):
        # Monte-Carlo: large window on iid noise -> half-width -> 1.645 sigma.
        rng = np.random.default_rng(7)
        sigma = 2.5
        x = rng.normal(0.0, sigma, 50_000)
        b = band(x, 2000)
        half = (b.upper - b.lower)[5000:] / 2.0
        assert np.mean(half) == pytest.approx(1.645 * sigma, rel=0.05)


class TestRl2n:
    def test_zero_for_exact(self):
        assert rl2n([3.0, 4.0], [3.0, 4.0]) == 0.0

    def test_hundred_for_zero_prediction(self):
        assert rl2n([3.0, 4.0], [0.0, 0.0]) == pytest.approx(100.0)

    def test_partial_fixture(self):
        assert rl2n([3.0, 4.0], [3.0, 0.0]) == pytest.approx(80.0)

    def test_zero_norm_rejected(self):
        with pytest.raises(ValueError):
            rl2n([0.0, 0.0], [1.0, 1.0])

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        y, yhat = rng.normal(size=50) + 5, rng.normal(size=50) + 5
        assert rl2n(y, yhat) == pytest.approx(rl2n(1e3 * y, 1e3 * yhat), rel=1e-9)


def constant_band(n, lower, upper, ma):
    return BandedSeries(
        t=np.arange(n, dtype=float),
        ma=np.full(n, float(ma)),
        lower=np.full(n, float(lower)),
        upper=np.full(n, float(upper)),
        window=2,
    )


class TestBandErrors:
    def test_inside_band_is_zero(self):
        b = constant_band(3, 0.0, 1.0, 0.5)
        assert rl2n_b(np.array([0.0, 0.5, 1.0]), b) == 0.0

    def test_three_point_fixture(self):
        # excursion (2-1)^2 = 1 over sum(f^2) = 3 -> sqrt(1/3)*100
        b = constant_band(3, 0.0, 1.0, 1.0)
        assert rl2n_b(np.array([2.0, 0.5, 0.5]), b) == pytest.approx(
            math.sqrt(1 / 3) * 100.0, abs=1e-9
        )

    def test_band_error_never_exceeds_center_error(self):
        rng = np.random.default_rng(11)
        x = rng.normal(10.0, 1.0, 400)
        b = band(x, 20)
        yhat = x + rng.normal(0, 2.0, 400)
        assert rl2n_b(yhat, b) <= rl2n(b.ma, yhat) + 1e-9

    def test_pib_fixture(self):
        b = constant_band(3, 0.0, 1.0, 0.5)
        assert pib(np.array([2.0, 0.5, 0.5]), b) == pytest.approx(200 / 3)

    def test_pib_bounds_inclusive(self):
        b = constant_band(2, 0.0, 1.0, 0.5)
        assert pib(np.array([0.0, 1.0]), b) == 100.0

    def test_full_pib_iff_zero_band_error(self):
        rng = np.random.default_rng(13)
        x = rng.normal(5.0, 1.0, 300)
        b = band(x, 25)
        inside = np.clip(x, b.lower, b.upper)
        assert pib(inside, b) == 100.0
        assert rl2n_b(inside, b) == 0.0
        poked = inside.copy()
        poked[37] = b.upper[37] + 1.0
        assert pib(poked, b) < 100.0
        assert rl2n_b(poked, b) > 0.0


class SeriesStub:
    def __init__(self, t, pressure, flow):
        self.t, self.pressure, self.flow = t, pressure, flow


class TestEvaluateExperiment:
    def _measured(self, n=400, seed=17):
        rng = np.random.default_rng(seed)
        t = np.arange(n) * 0.1
        pressure = np.linspace(1, 9, n) + rng.normal(0, 0.2, n)
        flow = np.linspace(20, 3, n) + rng.normal(0, 0.4, n)
        return SeriesStub(t, np.abs(pressure), np.abs(flow))

    def test_ma_prediction_scores_perfectly(self):
        measured = self._measured()
        predicted = SeriesStub(
            measured.t,
            moving_average(measured.pressure, 50),
            moving_average(measured.flow, 50),
        )
        p_row, q_row = evaluate_experiment(measured, predicted, n=50)
        for row in (p_row, q_row):
            assert row.mse == 0.0 and row.rmse == 0.0 and row.rl2n == 0.0
            assert row.rl2n_b == 0.0 and row.pib == 100.0

    def test_row_schema_matches_report_columns(self):
        row = MetricRow(1.0, 1.0, 2.0, 1.0, 50.0)
        assert set(row.as_dict()) == {"mse", "rmse", "rl2n", "rl2n_b", "pib"}

    def test_five_point_fixture_matches_naive_oracle(self):
        t = np.arange(5) * 0.1
        meas = SeriesStub(t, np.array([1.0, 2, 4, 3, 5]), np.array([9.0, 8, 7, 8, 6]))
        pred = SeriesStub(t, np.array([1.5, 2, 3, 3, 4]), np.array([9.0, 7, 7, 7, 7]))
        n = 3
        p_row, _ = evaluate_experiment(meas, pred, n=n)
        ma = np.array(naive_ma(list(meas.pressure), n))
        std = np.array(naive_std(list(meas.pressure), n))
        lower, upper = ma - 1.645 * std, ma + 1.645 * std
        err = ma - pred.pressure
        exp_mse = float(np.mean(err**2))
        assert p_row.mse == pytest.approx(exp_mse, rel=1e-9)
        assert p_row.rmse == pytest.approx(math.sqrt(exp_mse), rel=1e-9)
        assert p_row.rl2n == pytest.approx(
            100 * np.linalg.norm(err) / np.linalg.norm(ma), rel=1e-9
        )
        e2 = np.where(
            (pred.pressure >= lower) & (pred.pressure <= upper),
            0.0,
            np.minimum((pred.pressure - lower) ** 2, (pred.pressure - upper) ** 2),
        )
        assert p_row.rl2n_b == pytest.approx(
            100 * math.sqrt(e2.sum() / (ma**2).sum()), rel=1e-9
        )
        inside = np.sum((pred.pressure >= lower) & (pred.pressure <= upper))
        assert p_row.pib == pytest.approx(100 * inside / 5)

    def test_misaligned_grids_rejected(self):
        measured = self._measured()
        predicted = SeriesStub(measured.t + 0.05, measured.pressure, measured.flow)
        with pytest.raises(ValueError):
            evaluate_experiment(measured, predicted, n=10)


class TestReport:
    def test_rows_plus_mean(self):
        row = MetricRow(1.0, 1.0, 10.0, 5.0, 80.0)
        other = MetricRow(3.0, math.sqrt(3.0), 20.0, 7.0, 60.0)
        rows = report_rows([("a", row, other), ("b", other, row)])
        assert [r["experiment"] for r in rows] == ["a", "b", "mean"]
        assert rows[-1]["pressure_rl2n"] == pytest.approx(15.0)
        assert rows[-1]["flow_pib"] == pytest.approx(70.0)
        csv_text = metrics.report_to_csv(rows)
        header = csv_text.splitlines()[0].split(",")
        assert header[0] == "experiment"
        for target in ("pressure", "flow"):
            for f in ("mse", "rmse", "rl2n", "rl2n_b", "pib"):
                assert f"{target}_{f}" in header

    def test_mean_row_empty_rejected(self):
        with pytest.raises(ValueError):
            mean_row([])
