"""Identity and label leakage evaluation on windowed feature signals.

Signals are reduced to non-overlapping window means, stacked across features
into labeled rows, and classified with a k-nearest-neighbor voter (Euclidean
distance, train-statistics z-normalization, seeded uniform tie breaking over
the sorted tied labels). Two harnesses mirror the common study designs:
leave-one-person-out label classification, and person identification trained
on the first half of each recording and tested on the second.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ._rng import derived_rng
from .mechanisms import FeatureSignal


def _window_means(values: np.ndarray, window: int) -> np.ndarray:
    if window < 1:
        raise ValueError("window must be >= 1")
    usable = (len(values) // window) * window
    if usable == 0:
        return np.empty(0)
    return values[:usable].reshape(-1, window).mean(axis=1)


def subsample_windows(signal: FeatureSignal | np.ndarray, window: int) -> np.ndarray:
    """Means of consecutive non-overlapping windows; a trailing partial is dropped."""
    values = signal.values if isinstance(signal, FeatureSignal) else np.asarray(signal, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("signal must be 1-d")
    return _window_means(values, window)


@dataclass
class LabeledWindowSet:
    """Window-mean feature rows with labels and provenance."""

    features: np.ndarray  # (n_rows, n_features)
    labels: np.ndarray
    participants: np.ndarray
    recordings: np.ndarray
    window_index: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=object)
        self.participants = np.asarray(self.participants, dtype=object)
        self.recordings = np.asarray(self.recordings, dtype=object)
        self.window_index = np.asarray(self.window_index, dtype=int)
        n = len(self.features)
        if self.features.ndim != 2:
            raise ValueError("features must be 2-d")
        for arr in (self.labels, self.participants, self.recordings, self.window_index):
            if len(arr) != n:
                raise ValueError("row metadata length mismatch")

    def __len__(self) -> int:
        return len(self.features)

    def subset(self, mask: np.ndarray) -> "LabeledWindowSet":
        return LabeledWindowSet(
            self.features[mask], self.labels[mask], self.participants[mask],
            self.recordings[mask], self.window_index[mask], self.feature_names,
        )


def windows_from_dataset(
    dataset,
    window: int,
    label: str | Callable[[str, str], str] = "recording_type",
) -> LabeledWindowSet:
    """Stack per-feature window means into labeled rows per (participant, recording).

    ``label`` is "participant", "recording_type", or a callable on
    (participant, recording_type). Every (participant, recording_type) pair
    must carry the same features at equal lengths; pairs shorter than one
    window are skipped with a warning.
    """
    if isinstance(label, str):
        if label not in ("participant", "recording_type"):
            raise ValueError("label must be 'participant' or 'recording_type'")
        label_fn = (lambda p, r: p) if label == "participant" else (lambda p, r: r)
    else:
        label_fn = label
    by_pair: dict[tuple[str, str], dict[str, FeatureSignal]] = {}
    for signal in dataset:
        by_pair.setdefault((signal.participant, signal.recording_type), {})[signal.feature] = signal
    feature_names = tuple(sorted({f for sigs in by_pair.values() for f in sigs}))
    rows, labels, participants, recordings, indices = [], [], [], [], []
    for (participant, rectype) in sorted(by_pair):
        signals = by_pair[(participant, rectype)]
        if tuple(sorted(signals)) != feature_names:
            raise ValueError(f"({participant}, {rectype}) is missing features")
        lengths = {len(signals[f]) for f in feature_names}
        if len(lengths) != 1:
            raise ValueError(f"({participant}, {rectype}) has unequal feature lengths")
        columns = [_window_means(signals[f].values, window) for f in feature_names]
        if len(columns[0]) == 0:
            warnings.warn(f"({participant}, {rectype}) shorter than one window; skipped")
            continue
        matrix = np.column_stack(columns)
        for wi, row in enumerate(matrix):
            rows.append(row)
            labels.append(label_fn(participant, rectype))
            participants.append(participant)
            recordings.append(rectype)
            indices.append(wi)
    if not rows:
        raise ValueError("no windows produced; signals too short")
    return LabeledWindowSet(
        np.vstack(rows), np.array(labels, dtype=object),
        np.array(participants, dtype=object), np.array(recordings, dtype=object),
        np.array(indices), feature_names,
    )


def _normalizer(train: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)  # constant feature: leave centered, unscaled
    return mean, std


def _majority(votes: Sequence[str], rng: np.random.Generator) -> str:
    counts: dict[str, int] = {}
    for v in votes:
        counts[v] = counts.get(v, 0) + 1
    top = max(counts.values())
    winners = sorted(label for label, c in counts.items() if c == top)
    if len(winners) == 1:
        return winners[0]
    return winners[int(rng.integers(len(winners)))]


def knn_classify(
    train: LabeledWindowSet,
    test_features: np.ndarray,
    k: int = 11,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Predict a label per test row by majority vote of the k nearest train rows.

    Features are z-normalized with train statistics (applied unchanged to the
    test rows). Equal-distance neighbors are ordered by train-row index; vote
    ties are broken uniformly at random over the sorted tied labels.
    """
    if rng is None:
        rng = np.random.default_rng()
    if k < 1 or k > len(train):
        raise ValueError(f"need 1 <= k <= {len(train)} train rows, got k={k}")
    test = np.asarray(test_features, dtype=np.float64)
    if test.ndim != 2 or test.shape[1] != train.features.shape[1]:
        raise ValueError("test rows must match train feature dimension")
    mean, std = _normalizer(train.features)
    train_z = (train.features - mean) / std
    test_z = (test - mean) / std
    distances = cdist(test_z, train_z, metric="euclidean")
    order = np.argsort(distances, axis=1, kind="stable")[:, :k]
    return np.array(
        [_majority([train.labels[j] for j in row], rng) for row in order],
        dtype=object,
    )


@dataclass
class LoocvReport:
    """Leave-one-person-out label classification accuracies."""

    label_kind: str
    k: int
    fold_accuracy: dict[str, float]
    mean_accuracy: float
    n_rows: int


def loocv_person(
    windows: LabeledWindowSet,
    k: int = 11,
    base_seed: int = 0,
    label_kind: str = "recording_type",
) -> LoocvReport:
    """Label classification with one held-out participant per fold.

    Normalization and neighbors come from the training folds only; fold rngs
    derive from the base seed and the held-out participant id.
    """
    folds = sorted(set(windows.participants))
    if len(folds) < 2:
        raise ValueError("need at least two participants for leave-one-out folds")
    accuracy: dict[str, float] = {}
    for participant in folds:
        held = windows.participants == participant
        train = windows.subset(~held)
        test = windows.subset(held)
        rng = derived_rng(base_seed, "loocv", participant)
        predictions = knn_classify(train, test.features, k, rng)
        accuracy[participant] = float(np.mean(predictions == test.labels))
    return LoocvReport(
        label_kind, k, accuracy, float(np.mean(list(accuracy.values()))), len(windows)
    )


@dataclass
class PersonIdReport:
    """Person identification from second-half windows against first-half training."""

    window: int
    k: int
    window_accuracy: float
    majority_accuracy: float | None
    per_pair: dict[tuple[str, str], bool]
    excluded: tuple[tuple[str, str], ...] = ()


def person_id_eval(
    dataset,
    window: int = 5,
    k: int = 11,
    majority: bool = True,
    base_seed: int = 0,
) -> PersonIdReport:
    """Identify participants: train on each recording's first half, test on its second.

    Each (participant, recording_type) pair contributes window-mean rows from
    both halves; pairs without at least one window per half are excluded with a
    warning. Majority voting aggregates the per-window predictions of a pair.
    """
    by_pair: dict[tuple[str, str], dict[str, FeatureSignal]] = {}
    for signal in dataset:
        by_pair.setdefault((signal.participant, signal.recording_type), {})[signal.feature] = signal
    feature_names = tuple(sorted({f for sigs in by_pair.values() for f in sigs}))
    train_rows, train_labels = [], []
    test_rows, test_labels, test_pairs = [], [], []
    excluded: list[tuple[str, str]] = []
    for pair in sorted(by_pair):
        participant, rectype = pair
        signals = by_pair[pair]
        if tuple(sorted(signals)) != feature_names:
            raise ValueError(f"{pair} is missing features")
        lengths = {len(signals[f]) for f in feature_names}
        if len(lengths) != 1:
            raise ValueError(f"{pair} has unequal feature lengths")
        half = lengths.pop() // 2
        first = [_window_means(signals[f].values[:half], window) for f in feature_names]
        second = [_window_means(signals[f].values[half:], window) for f in feature_names]
        if len(first[0]) == 0 or len(second[0]) == 0:
            warnings.warn(f"{pair} too short to split into windows; excluded")
            excluded.append(pair)
            continue
        for row in np.column_stack(first):
            train_rows.append(row)
            train_labels.append(participant)
        for row in np.column_stack(second):
            test_rows.append(row)
            test_labels.append(participant)
            test_pairs.append(pair)
    if not train_rows or not test_rows:
        raise ValueError("no usable (participant, recording) pairs")
    if len(set(train_labels)) < 2:
        raise ValueError("need at least two participants to identify")
    n_train = len(train_rows)
    train = LabeledWindowSet(
        np.vstack(train_rows), np.array(train_labels, dtype=object),
        np.array(train_labels, dtype=object),
        np.array(["train"] * n_train, dtype=object),
        np.zeros(n_train, dtype=int), feature_names,
    )
    rng = derived_rng(base_seed, "person-id")
    predictions = knn_classify(train, np.vstack(test_rows), k, rng)
    test_labels_arr = np.array(test_labels, dtype=object)
    window_accuracy = float(np.mean(predictions == test_labels_arr))
    majority_accuracy = None
    per_pair: dict[tuple[str, str], bool] = {}
    if majority:
        vote_rng = derived_rng(base_seed, "person-id-majority")
        for pair in sorted(set(test_pairs)):
            votes = [p for p, tp in zip(predictions, test_pairs) if tp == pair]
            per_pair[pair] = _majority(votes, vote_rng) == pair[0]
        majority_accuracy = float(np.mean(list(per_pair.values())))
    return PersonIdReport(
        window, k, window_accuracy, majority_accuracy, per_pair, tuple(excluded)
    )


# ---------------------------------------------------------------------------
# Serialization


def leakage_report_to_json(report: LoocvReport | PersonIdReport) -> str:
    if isinstance(report, LoocvReport):
        payload = {
            "kind": "loocv",
            "label": report.label_kind,
            "k": report.k,
            "mean_accuracy": report.mean_accuracy,
            "fold_accuracy": report.fold_accuracy,
            "n_rows": report.n_rows,
        }
    else:
        payload = {
            "kind": "person-id",
            "window": report.window,
            "k": report.k,
            "window_accuracy": report.window_accuracy,
            "majority_accuracy": report.majority_accuracy,
            "per_pair": {f"{p}/{r}": bool(v) for (p, r), v in report.per_pair.items()},
            "excluded": [f"{p}/{r}" for p, r in report.excluded],
        }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def leakage_report_to_csv(report: LoocvReport | PersonIdReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    if isinstance(report, LoocvReport):
        writer.writerow(["fold", "accuracy"])
        for fold in sorted(report.fold_accuracy):
            writer.writerow([fold, report.fold_accuracy[fold]])
        writer.writerow(["mean", report.mean_accuracy])
    else:
        writer.writerow(["participant", "recording_type", "majority_correct"])
        for (p, r) in sorted(report.per_pair):
            writer.writerow([p, r, int(report.per_pair[(p, r)])])
        writer.writerow(["window_accuracy", "", report.window_accuracy])
        if report.majority_accuracy is not None:
            writer.writerow(["majority_accuracy", "", report.majority_accuracy])
    return out.getvalue()
