import time

import pytest
from fastapi.testclient import TestClient

from presstwin.domain import config_to_dict
from presstwin.service import create_app
from presstwin.simulator import SimParams, generate_corpus, simulate_cycle
from presstwin.domain import ExperimentConfig

TINY_GRID = [
    ExperimentConfig("svc-a", 10.0, 2, 2.0, 3),
    ExperimentConfig("svc-b", 20.0, 3, 2.5, 8),
    ExperimentConfig("svc-c", 15.0, 1, 1.5, 5),
    ExperimentConfig("svc-d", 25.0, 2, 3.0, 12),
]

RETRAIN_BODY = {"epochs": 50, "seed": 3, "arch": "ffnn", "stride": 2, "wait": True}


def payload(cfg, exp_id=None):
    body = config_to_dict(cfg)
    if exp_id:
        body["experiment_id"] = exp_id
    return body


def sample_dicts(series):
    return [
        {"t": float(t), "pressure": float(p), "flow": float(q)}
        for t, p, q in zip(series.t, series.pressure, series.flow)
    ]


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "twin")
    with TestClient(app) as c:
        yield c


@pytest.fixture
def trained_client(tmp_path):
    """Service with a tiny ingested corpus and a fast FFNN retrain done."""
    app = create_app(tmp_path / "twin")
    with TestClient(app) as c:
        corpus = generate_corpus(TINY_GRID, SimParams(), seed=99)
        for cfg, series in zip(TINY_GRID, corpus):
            assert c.post("/experiments", json=payload(cfg)).status_code == 201
            r = c.post(f"/experiments/{cfg.experiment_id}/samples",
                       json={"samples": sample_dicts(series)})
            assert r.status_code == 200
            assert c.post(f"/experiments/{cfg.experiment_id}/complete").status_code == 200
        r = c.post("/models/retrain", json=RETRAIN_BODY)
        assert r.status_code == 202
        assert c.get("/models/current").json()["version"] == 1
        yield c


class TestCreateExperiment:
    def test_create_echoes_config(self, client):
        r = client.post("/experiments", json=payload(TINY_GRID[0]))
        assert r.status_code == 201
        body = r.json()
        assert body["experiment_id"] == "svc-a"
        assert body["config"]["concentration"] == 10.0
        assert body["status"] == "open"

    def test_invalid_config_400_with_violations(self, client):
        bad = payload(TINY_GRID[0])
        bad["end_pressure"] = 12.0
        r = client.post("/experiments", json=bad)
        assert r.status_code == 400
        body = r.json()
        assert body["code"] == "invalid_config"
        assert body["details"]["violations"] == ["end_pressure <= 10"]

    def test_duplicate_409(self, client):
        assert client.post("/experiments", json=payload(TINY_GRID[0])).status_code == 201
        r = client.post("/experiments", json=payload(TINY_GRID[0]))
        assert r.status_code == 409
        assert r.json()["code"] == "duplicate_experiment"

    def test_listing_filters_by_status(self, client):
        for cfg in TINY_GRID[:2]:
            client.post("/experiments", json=payload(cfg))
        client.post(f"/experiments/{TINY_GRID[0].experiment_id}/complete")
        everything = client.get("/experiments").json()["experiments"]
        complete = client.get("/experiments?status=complete").json()["experiments"]
        assert {e["experiment_id"] for e in everything} == {"svc-a", "svc-b"}
        assert [e["experiment_id"] for e in complete] == ["svc-a"]


class TestIngest:
    def test_batch_accepted_and_stored(self, client):
        series = simulate_cycle(TINY_GRID[0], SimParams(), seed=1)
        client.post("/experiments", json=payload(TINY_GRID[0]))
        r = client.post("/experiments/svc-a/samples", json={"samples": sample_dicts(series)})
        assert r.status_code == 200
        assert r.json() == {"accepted": len(series), "sample_count": len(series)}

    def test_unknown_404(self, client):
        r = client.post("/experiments/ghost/samples", json={"samples": []})
        assert r.status_code == 404

    def test_closed_409(self, client):
        client.post("/experiments", json=payload(TINY_GRID[0]))
        client.post("/experiments/svc-a/complete")
        r = client.post("/experiments/svc-a/samples",
                        json={"samples": [{"t": 0, "pressure": 1, "flow": 1}]})
        assert r.status_code == 409

    def test_time_regression_422_with_index(self, client):
        client.post("/experiments", json=payload(TINY_GRID[0]))
        samples = [{"t": 0.0, "pressure": 1, "flow": 1},
                   {"t": 0.2, "pressure": 1, "flow": 1},
                   {"t": 0.1, "pressure": 1, "flow": 1}]
        r = client.post("/experiments/svc-a/samples", json={"samples": samples})
        assert r.status_code == 422
        assert r.json()["details"]["index"] == 2

    def test_empty_batch_ok(self, client):
        client.post("/experiments", json=payload(TINY_GRID[0]))
        r = client.post("/experiments/svc-a/samples", json={"samples": []})
        assert r.status_code == 200
        assert r.json()["accepted"] == 0


class TestLive:
    def test_pagination_concatenates_to_full_series(self, client):
        series = simulate_cycle(TINY_GRID[0], SimParams(), seed=2)
        client.post("/experiments", json=payload(TINY_GRID[0]))
        dicts = sample_dicts(series)
        for start in range(0, len(dicts), 40):
            client.post("/experiments/svc-a/samples",
                        json={"samples": dicts[start : start + 40]})
        seen = []
        since = -1.0
        while True:
            body = client.get(f"/experiments/svc-a/live?since={since}").json()
            if not body["samples"]:
                break
            seen.extend(body["samples"])
            since = body["cursor"]
        assert [s["t"] for s in seen] == [d["t"] for d in dicts]
        assert [s["pressure"] for s in seen] == [d["pressure"] for d in dicts]

    def test_concurrent_ingestion_never_duplicates_or_reorders(self, client):
        import threading

        from presstwin.simulator import replay

        series = simulate_cycle(TINY_GRID[3], SimParams(), seed=11)
        client.post("/experiments", json=payload(TINY_GRID[3]))

        def ingest():
            buffer = []

            def sink(sample):
                buffer.append({"t": sample.t, "pressure": sample.pressure, "flow": sample.flow})
                if len(buffer) >= 20:
                    client.post(f"/experiments/{TINY_GRID[3].experiment_id}/samples",
                                json={"samples": list(buffer)})
                    buffer.clear()

            replay(series, speedup=200.0, sink=sink)
            if buffer:
                client.post(f"/experiments/{TINY_GRID[3].experiment_id}/samples",
                            json={"samples": list(buffer)})
            client.post(f"/experiments/{TINY_GRID[3].experiment_id}/complete")

        writer = threading.Thread(target=ingest)
        writer.start()
        seen = []
        since = -1.0
        while True:
            body = client.get(
                f"/experiments/{TINY_GRID[3].experiment_id}/live?since={since}"
            ).json()
            seen.extend(body["samples"])
            since = body["cursor"]
            if body["status"] == "complete" and not body["samples"]:
                break
            time.sleep(0.01)
        writer.join()
        times = [s["t"] for s in seen]
        assert times == sorted(times)
        assert len(times) == len(set(times)) == len(series)
        assert times == list(series.t)

    def test_since_last_yields_empty_delta(self, client):
        series = simulate_cycle(TINY_GRID[0], SimParams(), seed=2)
        client.post("/experiments", json=payload(TINY_GRID[0]))
        client.post("/experiments/svc-a/samples", json={"samples": sample_dicts(series)})
        body = client.get(f"/experiments/svc-a/live?since={float(series.t[-1])}").json()
        assert body["samples"] == []

    def test_live_includes_prediction_once_trained(self, trained_client):
        series = simulate_cycle(TINY_GRID[0], SimParams(), seed=5)
        cfg = payload(TINY_GRID[0], exp_id="svc-live")
        trained_client.post("/experiments", json=cfg)
        trained_client.post("/experiments/svc-live/samples",
                            json={"samples": sample_dicts(series)[:50]})
        body = trained_client.get("/experiments/svc-live/live?since=-1").json()
        assert body["prediction"] is not None
        assert body["prediction"]["t"] == [s["t"] for s in body["samples"]]
        assert body["prediction"]["model_version"] == 1


class TestPredict:
    def test_503_before_training(self, client):
        r = client.post("/predict", json={"config": payload(TINY_GRID[0]), "dt": 1, "horizon": 10})
        assert r.status_code == 503
        assert r.json()["code"] == "no_model"

    def test_series_lengths(self, trained_client):
        r = trained_client.post(
            "/predict", json={"config": payload(TINY_GRID[0]), "dt": 0.5, "horizon": 12.0}
        )
        assert r.status_code == 200
        body = r.json()
        assert len(body["t"]) == len(body["pressure"]) == len(body["flow"]) == 25
        assert body["model_version"] == 1

    def test_invalid_config_rejected(self, trained_client):
        bad = payload(TINY_GRID[0])
        bad["concentration"] = 0.0
        r = trained_client.post("/predict", json={"config": bad, "dt": 1, "horizon": 10})
        assert r.status_code == 400


class TestRetrain:
    def test_retrain_requires_complete_experiments(self, client):
        r = client.post("/models/retrain", json=RETRAIN_BODY)
        assert r.status_code == 409
        assert r.json()["code"] == "no_complete_experiments"

    def test_retrain_advances_both_targets_atomically(self, trained_client):
        before = trained_client.get("/models/current").json()
        assert before["version"] == 1
        assert before["targets"]["pressure"]["version"] == before["targets"]["flow"]["version"]
        r = trained_client.post("/models/retrain", json=RETRAIN_BODY)
        assert r.status_code == 202
        after = trained_client.get("/models/current").json()
        assert after["version"] == 2
        assert after["targets"]["pressure"]["version"] == 2
        assert after["targets"]["flow"]["version"] == 2

    def test_concurrent_retrain_409(self, trained_client):
        slow = dict(RETRAIN_BODY, epochs=400, wait=False)
        first = trained_client.post("/models/retrain", json=slow)
        assert first.status_code == 202
        second = trained_client.post("/models/retrain", json=dict(RETRAIN_BODY, wait=False))
        assert second.status_code == 409
        assert second.json()["code"] == "retrain_running"
        for _ in range(600):
            if trained_client.get("/models/current").json()["retrain"]["state"] == "idle":
                break
            time.sleep(0.05)
        assert trained_client.get("/models/current").json()["retrain"]["state"] == "idle"

    def test_failed_retrain_keeps_previous_versions(self, trained_client):
        # an impossible option set fails inside the job; the registry must not move
        r = trained_client.post("/models/retrain",
                                json=dict(RETRAIN_BODY, arch="transformer"))
        assert r.status_code == 202
        body = trained_client.get("/models/current").json()
        assert body["version"] == 1
        assert body["retrain"]["last_error"]

    def test_report_endpoint(self, trained_client):
        r = trained_client.get("/models/report/flow")
        assert r.status_code == 200
        body = r.json()
        assert body["epochs"] == RETRAIN_BODY["epochs"]
        assert len(body["records"]) == RETRAIN_BODY["epochs"]


class TestEvaluation:
    def test_open_experiment_409(self, trained_client):
        trained_client.post("/experiments", json=payload(TINY_GRID[0], exp_id="svc-open"))
        r = trained_client.get("/experiments/svc-open/evaluation")
        assert r.status_code == 409

    def test_row_schema_and_band(self, trained_client):
        r = trained_client.get("/experiments/svc-a/evaluation?window=25")
        assert r.status_code == 200
        body = r.json()
        for target in ("pressure", "flow"):
            assert set(body[target]) == {"mse", "rmse", "rl2n", "rl2n_b", "pib"}
            band = body["band"][target]
            assert len(band["ma"]) == len(band["lower"]) == len(band["upper"])
        assert body["window"] == 25
        assert body["prediction"]["model_version"] == 1

    def test_unknown_404(self, trained_client):
        assert trained_client.get("/experiments/ghost/evaluation").status_code == 404

    def test_idempotent(self, trained_client):
        a = trained_client.get("/experiments/svc-b/evaluation?window=30").json()
        b = trained_client.get("/experiments/svc-b/evaluation?window=30").json()
        assert a == b


class TestLifespan:
    def test_503_before_training(self, client):
        r = client.get("/lifespan", params={"concentration": 12.5, "plate_count": 2,
                                            "end_pressure": 2.0})
        assert r.status_code == 503

    def test_sweep_shape_and_threshold_logic(self, trained_client):
        r = trained_client.get(
            "/lifespan",
            params={"concentration": 15.0, "plate_count": 2, "end_pressure": 2.0,
                    "k_max": 8, "dt": 0.5, "horizon": 120.0},
        )
        assert r.status_code == 200
        body = r.json()
        assert [p["cycles"] for p in body["points"]] == list(range(1, 9))
        if body["recommended_cycle"] is not None:
            k = body["recommended_cycle"]
            assert body["points"][k - 1]["violates"]
            assert all(not p["violates"] for p in body["points"][: k - 1])

    def test_unreachable_thresholds_recommend_none(self, trained_client):
        r = trained_client.get(
            "/lifespan",
            params={"concentration": 15.0, "plate_count": 2, "end_pressure": 2.0,
                    "k_max": 5, "flow_floor": 0.0, "duration_cap_factor": 1e9,
                    "dt": 0.5, "horizon": 120.0},
        )
        assert r.status_code == 200
        assert r.json()["recommended_cycle"] is None

    def test_tightening_flow_floor_never_increases_recommendation(self, trained_client):
        def recommend(floor):
            r = trained_client.get(
                "/lifespan",
                params={"concentration": 15.0, "plate_count": 2, "end_pressure": 2.0,
                        "k_max": 6, "flow_floor": floor, "duration_cap_factor": 1e9,
                        "dt": 0.5, "horizon": 120.0},
            )
            return r.json()["recommended_cycle"]

        loose, tight = recommend(1.0), recommend(25.0)
        loose = loose if loose is not None else 7
        tight = tight if tight is not None else 7
        assert tight <= loose
