"""Corpus-to-tensor assembly shared by the CLI trainer and the twin's retrain loop.

Windows and rows are built on the native sample grid; `stride` subsamples
which timesteps become training examples (window contents stay consecutive
native-grid steps, so training and prediction see identical spacing). One
standardizer and one train/val split serve every (architecture, target)
combination built from the same prepared corpus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import FEATURE_NAMES, SCHEMA_NAMES, CycleSeries, ExperimentConfig, feature_matrix
from .preprocess import SEQUENCE_LENGTH, Standardizer, fit, make_sequences, split_train_val

DEFAULT_STRIDE = 10
DEFAULT_RATIO = 0.8


@dataclass(frozen=True)
class PreparedExperiment:
    experiment_id: str
    rows: np.ndarray  # (n, 5) standardized features at the selected timesteps
    windows: np.ndarray  # (n, 10, 5) standardized windows ending at those timesteps
    targets: dict[str, np.ndarray]  # standardized, keyed by target name
    train_idx: np.ndarray
    val_idx: np.ndarray


@dataclass(frozen=True)
class PreparedCorpus:
    standardizer: Standardizer
    experiments: tuple[PreparedExperiment, ...]
    stride: int
    ratio: float
    seed: int

    def tensors(
        self, target: str, arch: str
    ) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
        """(train, val) input/target pairs for one architecture and target."""
        if arch not in ("ffnn", "lstm"):
            raise ValueError(f"unknown arch {arch!r}")
        x_tr, y_tr, x_va, y_va = [], [], [], []
        for exp in self.experiments:
            inputs = exp.windows if arch == "lstm" else exp.rows
            y = exp.targets[target]
            x_tr.append(inputs[exp.train_idx])
            y_tr.append(y[exp.train_idx])
            x_va.append(inputs[exp.val_idx])
            y_va.append(y[exp.val_idx])
        train = (np.concatenate(x_tr), np.concatenate(y_tr))
        val = (np.concatenate(x_va), np.concatenate(y_va))
        return train, val


def prepare_corpus(
    corpus: list[tuple[ExperimentConfig, CycleSeries]],
    stride: int = DEFAULT_STRIDE,
    ratio: float = DEFAULT_RATIO,
    seed: int = 0,
) -> PreparedCorpus:
    """Standardize, window, and split a corpus of measured cycles."""
    if not corpus:
        raise ValueError("empty corpus")
    if stride < 1:
        raise ValueError("stride must be >= 1")

    raw_rows = []
    selections: list[tuple[ExperimentConfig, CycleSeries, np.ndarray]] = []
    for config, series in corpus:
        if len(series) == 0:
            continue
        selected = np.arange(0, len(series), stride)
        feats = feature_matrix(config, series.t[selected])
        raw_rows.append(
            np.column_stack([feats, series.pressure[selected], series.flow[selected]])
        )
        selections.append((config, series, selected))
    if not selections:
        raise ValueError("corpus contains no samples")

    standardizer = fit(np.vstack(raw_rows), schema=SCHEMA_NAMES)
    splits = split_train_val(
        {cfg.experiment_id: sel.size for cfg, _, sel in selections}, ratio=ratio, seed=seed
    )

    prepared = []
    for config, series, selected in selections:
        all_feats = standardizer.transform_columns(
            FEATURE_NAMES, feature_matrix(config, series.t)
        )
        # Windows use full-resolution context; only the anchors are subsampled.
        windows = make_sequences(all_feats, SEQUENCE_LENGTH)[selected]
        rows = all_feats[selected]
        targets = {
            "pressure": standardizer.transform_column("pressure", series.pressure[selected]),
            "flow": standardizer.transform_column("flow", series.flow[selected]),
        }
        train_idx, val_idx = splits[config.experiment_id]
        prepared.append(
            PreparedExperiment(
                experiment_id=config.experiment_id,
                rows=rows,
                windows=windows,
                targets=targets,
                train_idx=train_idx,
                val_idx=val_idx,
            )
        )
    return PreparedCorpus(
        standardizer=standardizer,
        experiments=tuple(prepared),
        stride=stride,
        ratio=ratio,
        seed=seed,
    )
