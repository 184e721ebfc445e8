"""Batch entry points tying the pipeline together without the service.

Every subcommand is a thin composition of module operations; identical
inputs and seeds yield byte-identical output files. Exit codes: 0 ok,
1 runtime error, 2 usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import shutil
import sys
from pathlib import Path

import httpx

from . import metrics, simulator
from .domain import (
    config_from_dict,
    config_to_dict,
    series_from_csv,
)
from .neural import (
    ModelBundle,
    load_bundle,
    predict_series,
    save_bundle,
    train,
)
from .pipeline import DEFAULT_RATIO, DEFAULT_STRIDE, prepare_corpus
from .store import ExperimentStore

BUILTIN_GRIDS = {
    "training": simulator.training_grid,
    "known-eval": simulator.known_eval_configs,
    "unseen-eval": simulator.unseen_eval_configs,
}


GRID_EPOCH = "1970-01-01T00:00:00+00:00"  # fixed stamp keeps outputs byte-identical


def _load_grid(source: str):
    builtin = source in BUILTIN_GRIDS
    if builtin:
        items = [config_to_dict(c) for c in BUILTIN_GRIDS[source]()]
    else:
        items = json.loads(Path(source).read_text())
    configs = []
    for item in items:
        if builtin or "created_at" not in item:
            item["created_at"] = GRID_EPOCH
        configs.append(config_from_dict(item))
    return configs


def cmd_simulate(args) -> int:
    grid = _load_grid(args.grid)
    out_dir = Path(args.out)
    created = not out_dir.exists()
    try:
        corpus = simulator.generate_corpus(grid, seed=args.seed)
        store = ExperimentStore(out_dir)
        for config, series in zip(grid, corpus):
            store.ingest_series(config, series)
    except Exception:
        if created and out_dir.exists():
            shutil.rmtree(out_dir)  # partial outputs are removed
        raise
    print(f"simulated {len(corpus)} experiments into {out_dir}")
    return 0


def _load_corpus(data_dir: Path):
    store = ExperimentStore(data_dir)
    records = store.list_experiments(status="complete")
    if not records:
        raise RuntimeError(f"no complete experiments under {data_dir}")
    return [(r.config, store.get_series(r.experiment_id)) for r in records]


def cmd_train(args) -> int:
    corpus = _load_corpus(Path(args.data))
    prepared = prepare_corpus(corpus, stride=args.stride, ratio=args.ratio, seed=args.seed)
    train_set, val_set = prepared.tensors(args.target, args.arch)
    model, report = train(
        args.arch,
        train_set,
        val_set,
        epochs=args.epochs,
        batch_size=args.batch,
        seed=args.seed,
    )
    out = Path(args.out)
    bundle = ModelBundle(
        model=model,
        standardizer=prepared.standardizer,
        target=args.target,
        seed=args.seed,
        version=1,
        report=report,
    )
    report_path = out.with_suffix(".report.csv")
    try:
        save_bundle(bundle, out)
        with open(report_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_mse", "val_mse", "val_mae", "val_r2"])
            for r in report.records:
                writer.writerow([r.epoch, r.train_mse, r.val_mse, r.val_mae, r.val_r2])
    except Exception:
        for path in (out, report_path):
            path.unlink(missing_ok=True)
        raise
    final = report.final()
    if final is not None:
        print(
            f"trained {args.arch} for {args.target}: "
            f"val_mse={final.val_mse:.5f} val_r2={final.val_r2:.4f}"
        )
    print(f"model -> {out}; epoch curves -> {report_path}")
    return 0


def _load_model_pair(paths: list[str]) -> dict:
    bundles = {}
    for path in paths:
        bundle = load_bundle(path)
        bundles[bundle.target] = bundle
    missing = {"pressure", "flow"} - set(bundles)
    if missing:
        raise RuntimeError(f"missing model for target(s): {', '.join(sorted(missing))}")
    return bundles


def cmd_predict(args) -> int:
    bundles = _load_model_pair(args.model)
    config = config_from_dict(json.loads(Path(args.config).read_text()))
    result = predict_series(
        bundles["pressure"].model,
        bundles["flow"].model,
        bundles["pressure"].standardizer,
        config,
        dt=args.dt,
        horizon=args.horizon,
    )
    out = Path(args.out)
    try:
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time_s", "pressure_bar", "flow_dm3_min"])
            for i in range(result.t.size):
                writer.writerow([result.t[i], result.pressure[i], result.flow[i]])
    except Exception:
        out.unlink(missing_ok=True)
        raise
    duration = "exceeds horizon" if result.exceeds_horizon else f"{result.duration:g} s"
    print(f"predicted {result.t.size} steps; estimated duration: {duration}")
    return 0


def _find_models(models_dir: Path) -> dict:
    candidates: dict[str, tuple[int, Path]] = {}
    for path in sorted(models_dir.glob("*.json")):
        try:
            payload = json.loads(path.read_text())
        except (json.JSONDecodeError, UnicodeDecodeError):
            continue
        target = payload.get("target")
        if target in ("pressure", "flow"):
            version = int(payload.get("version", 0))
            if target not in candidates or version > candidates[target][0]:
                candidates[target] = (version, path)
    missing = {"pressure", "flow"} - set(candidates)
    if missing:
        raise RuntimeError(f"no model json for target(s) {sorted(missing)} in {models_dir}")
    return {t: load_bundle(p) for t, (_, p) in candidates.items()}


def cmd_evaluate(args) -> int:
    corpus = _load_corpus(Path(args.data))
    bundles = _find_models(Path(args.models))
    results = []
    for config, measured in corpus:
        if len(measured) < 2:
            continue
        predicted = predict_series(
            bundles["pressure"].model,
            bundles["flow"].model,
            bundles["pressure"].standardizer,
            config,
            times=measured.t,
        )
        p_row, q_row = metrics.evaluate_experiment(measured, predicted, n=args.window)
        results.append((config.experiment_id, p_row, q_row))
    if not results:
        raise RuntimeError("nothing to evaluate")
    rows = metrics.report_rows(results)
    report_path = Path(args.report)
    try:
        report_path.write_text(metrics.report_to_csv(rows))
        report_path.with_suffix(".json").write_text(metrics.report_to_json(rows))
    except Exception:
        report_path.unlink(missing_ok=True)
        report_path.with_suffix(".json").unlink(missing_ok=True)
        raise
    mean = rows[-1]
    print(
        f"evaluated {len(results)} experiments -> {report_path} "
        f"(mean pressure rl2n {mean['pressure_rl2n']:.2f}%, "
        f"mean flow rl2n {mean['flow_rl2n']:.2f}%)"
    )
    return 0


def cmd_replay(args) -> int:
    series = series_from_csv("replay", Path(args.series).read_text())
    url = args.url.rstrip("/")
    buffer: list[dict] = []

    def flush():
        if not buffer:
            return
        batch = list(buffer)
        buffer.clear()
        response = httpx.post(url, json={"samples": batch}, timeout=30.0)
        if response.status_code >= 400:
            raise RuntimeError(f"ingestion failed ({response.status_code}): {response.text}")

    def sink(sample):
        buffer.append({"t": sample.t, "pressure": sample.pressure, "flow": sample.flow})
        if len(buffer) >= args.batch:
            flush()

    delivered = simulator.replay(series, args.speedup, sink)
    flush()
    print(f"replayed {delivered} samples to {url}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(Path(args.store)), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="presstwin", description="Chamber filter press digital twin toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic experiment corpus")
    p.add_argument("--grid", required=True,
                   help="grid JSON path, or builtin: training | known-eval | unseen-eval")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output store directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train one regressor on a stored corpus")
    p.add_argument("--data", required=True, help="store directory")
    p.add_argument("--target", choices=("pressure", "flow"), required=True)
    p.add_argument("--arch", choices=("ffnn", "lstm"), default="lstm")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stride", type=int, default=DEFAULT_STRIDE)
    p.add_argument("--ratio", type=float, default=DEFAULT_RATIO)
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict a trajectory for a config")
    p.add_argument("--model", action="append", required=True,
                   help="model JSON (pass twice: pressure and flow)")
    p.add_argument("--config", required=True, help="experiment config JSON path")
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--horizon", type=float, default=3600.0)
    p.add_argument("--out", required=True, help="prediction CSV path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score models against a stored corpus")
    p.add_argument("--data", required=True, help="store directory with measured cycles")
    p.add_argument("--models", required=True, help="directory containing model JSONs")
    p.add_argument("--window", type=int, default=metrics.DEFAULT_WINDOW)
    p.add_argument("--report", required=True, help="report CSV path (JSON twin written too)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("replay", help="stream a series CSV into the service")
    p.add_argument("--series", required=True, help="canonical series CSV")
    p.add_argument("--speedup", type=float, default=1.0)
    p.add_argument("--url", required=True,
                   help="ingestion endpoint, e.g. http://host:8000/experiments/ID/samples")
    p.add_argument("--batch", type=int, default=25, help="samples per POST")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="run the twin service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--store", required=True, help="store directory")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
