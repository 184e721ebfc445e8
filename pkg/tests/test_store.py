import json
import os

import numpy as np
import pytest

from presstwin.domain import CycleSeries, ExperimentConfig, Sample, series_to_csv
from presstwin.simulator import SimParams, replay, simulate_cycle, training_grid
from presstwin.store import (
    DuplicateExperimentError,
    ExperimentClosedError,
    ExperimentStore,
    TimeRegressionError,
    UnknownExperimentError,
)


def config(exp_id="exp-1", **overrides):
    base = dict(concentration=12.5, plate_count=2, end_pressure=10.0, cloth_cycles=2)
    base.update(overrides)
    return ExperimentConfig(exp_id, **base)


def tiny_series(exp_id, n=5, offset=0.0):
    t = offset + np.arange(n) * 0.1
    return CycleSeries(exp_id, t, np.linspace(1, 2, n), np.linspace(20, 18, n))


@pytest.fixture
def store(tmp_path):
    return ExperimentStore(tmp_path / "store")


class TestCreate:
    def test_create_starts_open_and_empty(self, store):
        record = store.create_experiment(config())
        assert record.status == "open"
        assert record.sample_count == 0

    def test_duplicate_id_rejected(self, store):
        store.create_experiment(config())
        with pytest.raises(DuplicateExperimentError):
            store.create_experiment(config())

    def test_invalid_config_rejected(self, store):
        with pytest.raises(ValueError):
            store.create_experiment(config(end_pressure=12.0))

    def test_config_round_trip(self, store, tmp_path):
        cfg = config()
        store.create_experiment(cfg)
        reopened = ExperimentStore(tmp_path / "store")
        assert reopened.get_record("exp-1").config == cfg


class TestAppend:
    def test_replayed_series_count(self, store):
        store.create_experiment(config())
        series = simulate_cycle(config(end_pressure=1.0), SimParams(), seed=0)
        batch: list[Sample] = []
        replay(series, speedup=1e9, sink=batch.append)
        count = store.append_samples("exp-1", batch)
        assert count == len(series)

    def test_time_regression_cites_batch_index(self, store):
        store.create_experiment(config())
        batch = [Sample(0.0, 1, 1), Sample(0.1, 1, 1), Sample(0.2, 1, 1),
                 Sample(0.15, 1, 1)]
        with pytest.raises(TimeRegressionError) as excinfo:
            store.append_samples("exp-1", batch)
        assert excinfo.value.index == 3
        assert store.get_record("exp-1").sample_count == 0  # all-or-nothing

    def test_sequential_batches_equal_single_batch(self, store, tmp_path):
        series = tiny_series("exp-1", 10)
        samples = list(series.samples)
        store.create_experiment(config())
        store.append_samples("exp-1", samples[:4])
        store.append_samples("exp-1", samples[4:])

        other = ExperimentStore(tmp_path / "other")
        other.create_experiment(config())
        other.append_samples("exp-1", samples)

        assert series_to_csv(store.get_series("exp-1")) == series_to_csv(
            other.get_series("exp-1")
        )

    def test_append_to_unknown_experiment(self, store):
        with pytest.raises(UnknownExperimentError):
            store.append_samples("ghost", [Sample(0, 1, 1)])

    def test_empty_batch_is_noop(self, store):
        store.create_experiment(config())
        assert store.append_samples("exp-1", []) == 0


class TestComplete:
    def test_transition_and_listing(self, store):
        store.create_experiment(config())
        assert store.list_experiments(status="complete") == []
        record = store.mark_complete("exp-1")
        assert record.status == "complete"
        assert [r.experiment_id for r in store.list_experiments(status="complete")] == ["exp-1"]

    def test_append_after_complete_rejected(self, store):
        store.create_experiment(config())
        store.mark_complete("exp-1")
        with pytest.raises(ExperimentClosedError):
            store.append_samples("exp-1", [Sample(0, 1, 1)])

    def test_double_complete_rejected(self, store):
        store.create_experiment(config())
        store.mark_complete("exp-1")
        with pytest.raises(ExperimentClosedError):
            store.mark_complete("exp-1")


class TestReadBack:
    def test_write_then_read_is_bitwise(self, store):
        series = simulate_cycle(config(end_pressure=0.8), SimParams(), seed=3)
        store.create_experiment(config())
        store.append_series("exp-1", series)
        back = store.get_series("exp-1")
        assert series_to_csv(back) == series_to_csv(series)

    def test_full_grid_ingestion_listed(self, store):
        for i, cfg in enumerate(training_grid()):
            store.ingest_series(cfg, tiny_series(cfg.experiment_id, 3))
        assert len(store.list_experiments()) == 34
        assert len(store.list_experiments(status="complete")) == 34

    def test_unknown_get_rejected(self, store):
        with pytest.raises(UnknownExperimentError):
            store.get_series("nope")


class TestDurability:
    def test_samples_survive_reopen(self, store, tmp_path):
        store.create_experiment(config())
        store.append_samples("exp-1", list(tiny_series("exp-1", 7).samples))
        reopened = ExperimentStore(tmp_path / "store")
        assert reopened.get_record("exp-1").sample_count == 7
        assert len(reopened.get_series("exp-1")) == 7

    def test_orphan_tmp_file_ignored_on_recovery(self, store, tmp_path):
        store.create_experiment(config())
        store.append_samples("exp-1", list(tiny_series("exp-1", 5).samples))
        exp_dir = store.experiments_dir / "exp-1"
        # a crash between temp write and rename leaves a .tmp behind
        (exp_dir / "samples.csv.tmp").write_text("garbage")
        reopened = ExperimentStore(tmp_path / "store")
        assert reopened.get_record("exp-1").sample_count == 5

    def test_failed_rename_leaves_store_unchanged(self, store, monkeypatch):
        store.create_experiment(config())
        store.append_samples("exp-1", list(tiny_series("exp-1", 5).samples))

        real_replace = os.replace

        def broken_replace(src, dst):
            raise OSError("disk full")

        monkeypatch.setattr(os, "replace", broken_replace)
        with pytest.raises(OSError):
            store.append_samples("exp-1", list(tiny_series("exp-1", 3, offset=1.0).samples))
        monkeypatch.setattr(os, "replace", real_replace)
        assert store.get_record("exp-1").sample_count == 5
        assert len(store.get_series("exp-1")) == 5

    def test_meta_reconciled_from_csv(self, store, tmp_path):
        store.create_experiment(config())
        store.append_samples("exp-1", list(tiny_series("exp-1", 5).samples))
        meta_path = store.experiments_dir / "exp-1" / "meta.json"
        meta = json.loads(meta_path.read_text())
        meta["sample_count"] = 999  # stale derived metadata
        meta_path.write_text(json.dumps(meta))
        reopened = ExperimentStore(tmp_path / "store")
        assert reopened.get_record("exp-1").sample_count == 5
