"""Dataset container, strict CSV schemas, and synthetic data generators.

Feature rows travel as ``participant,feature,recording_type,step_seconds,t_index,value``;
raw gaze samples as ``participant,recording,timestamp,gx,gy,gz,hx,hy,hz,px,py,pz,pupil``
with empty cells for missing gaze/pupil. Parsing is strict: unknown headers,
non-numeric cells, NaNs, duplicate addresses, and gaps are errors, never silently
coerced. Writing is canonical (sorted keys, shortest round-trip decimals), so
``write(parse(text))`` reproduces a canonically formatted file byte for byte.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.signal import lfilter

from ._rng import derived_rng
from .errors import DuplicateRowError, RowParseError, SchemaError
from .mechanisms import FeatureSignal
from .pipeline import GazeSample

FEATURE_HEADER = ("participant", "feature", "recording_type", "step_seconds", "t_index", "value")
SAMPLE_HEADER = (
    "participant", "recording", "timestamp",
    "gx", "gy", "gz", "hx", "hy", "hz", "px", "py", "pz", "pupil",
)

SCHEMA_VERSION = 1


@dataclass
class Dataset:
    """Keyed collection of feature signals with consistent sampling steps."""

    signals: dict[tuple[str, str, str], FeatureSignal] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def add(self, signal: FeatureSignal) -> None:
        key = (signal.participant, signal.feature, signal.recording_type)
        if key in self.signals:
            raise DuplicateRowError(f"signal already present for {key}")
        for other in self.signals.values():
            if (other.feature, other.recording_type) == (signal.feature, signal.recording_type):
                if other.step_seconds != signal.step_seconds:
                    raise ValueError(
                        f"step_seconds {signal.step_seconds} conflicts with "
                        f"{other.step_seconds} for {(signal.feature, signal.recording_type)}"
                    )
                break
        self.signals[key] = signal

    def get(self, participant: str, feature: str, recording_type: str) -> FeatureSignal:
        return self.signals[(participant, feature, recording_type)]

    def participants(self) -> list[str]:
        return sorted({k[0] for k in self.signals})

    def features(self) -> list[str]:
        return sorted({k[1] for k in self.signals})

    def recording_types(self) -> list[str]:
        return sorted({k[2] for k in self.signals})

    def groups(self) -> list[tuple[tuple[str, str], list[FeatureSignal]]]:
        """Signals grouped by (feature, recording_type), participants sorted."""
        grouped: dict[tuple[str, str], list[FeatureSignal]] = {}
        for (participant, feature, rectype), signal in sorted(self.signals.items()):
            grouped.setdefault((feature, rectype), []).append(signal)
        return sorted(grouped.items())

    def map_values(self, fn) -> "Dataset":
        """New dataset with ``fn(signal) -> ndarray`` applied to every signal."""
        out = Dataset(schema_version=self.schema_version)
        for key in sorted(self.signals):
            signal = self.signals[key]
            out.add(signal.with_values(fn(signal)))
        return out

    def __len__(self) -> int:
        return len(self.signals)

    def __iter__(self):
        return iter(sorted(self.signals.values(), key=lambda s: (s.participant, s.feature, s.recording_type)))


def _decode(text: str | bytes) -> str:
    if isinstance(text, bytes):
        return text.decode("utf-8")
    return text


def _check_header(row: Sequence[str], expected: Sequence[str]) -> None:
    got = list(row)
    want = list(expected)
    if got == want:
        return
    missing = [c for c in want if c not in got]
    extra = [c for c in got if c not in want]
    if missing:
        raise SchemaError(f"missing column {missing[0]!r}")
    if extra:
        raise SchemaError(f"unexpected column {extra[0]!r}")
    raise SchemaError(f"columns out of order: expected {want}, got {got}")


def _parse_float(cell: str, row: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise RowParseError(row, f"non-numeric {column} {cell!r}") from None
    if math.isnan(value) or math.isinf(value):
        raise RowParseError(row, f"non-finite {column} {cell!r}")
    return value


def _parse_int(cell: str, row: int, column: str) -> int:
    try:
        value = int(cell)
    except ValueError:
        raise RowParseError(row, f"non-integer {column} {cell!r}") from None
    return value


def parse_feature_csv(text: str | bytes) -> Dataset:
    """Strictly parse feature rows into a Dataset.

    Duplicate (participant, feature, recording_type, t_index) addresses raise a
    conflict; each signal's indices must form a contiguous 0..n-1 range.
    """
    reader = csv.reader(io.StringIO(_decode(text)))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input") from None
    _check_header(header, FEATURE_HEADER)
    rows: dict[tuple[str, str, str], dict[int, float]] = {}
    steps: dict[tuple[str, str, str], float] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(FEATURE_HEADER):
            raise RowParseError(lineno, f"expected {len(FEATURE_HEADER)} cells, got {len(row)}")
        participant, feature, rectype, step_cell, index_cell, value_cell = row
        if not participant or not feature or not rectype:
            raise RowParseError(lineno, "empty identifier cell")
        step = _parse_float(step_cell, lineno, "step_seconds")
        if step <= 0:
            raise RowParseError(lineno, f"non-positive step_seconds {step!r}")
        t_index = _parse_int(index_cell, lineno, "t_index")
        if t_index < 0:
            raise RowParseError(lineno, f"negative t_index {t_index}")
        value = _parse_float(value_cell, lineno, "value")
        key = (participant, feature, rectype)
        if key in steps and steps[key] != step:
            raise RowParseError(lineno, f"step_seconds changed within signal {key}")
        steps[key] = step
        bucket = rows.setdefault(key, {})
        if t_index in bucket:
            raise DuplicateRowError(f"row {lineno}: duplicate t_index {t_index} for {key}")
        bucket[t_index] = value
    dataset = Dataset()
    for key in sorted(rows):
        indices = sorted(rows[key])
        if indices != list(range(len(indices))):
            expected = next(i for i in range(len(indices)) if i not in set(indices))
            raise ValueError(f"signal {key} missing t_index {expected}")
        values = np.array([rows[key][i] for i in indices])
        participant, feature, rectype = key
        dataset.add(FeatureSignal(participant, feature, rectype, values, steps[key]))
    return dataset


def write_feature_csv(dataset: Dataset) -> str:
    """Canonical feature CSV: keys sorted, shortest round-trip decimals."""
    out = io.StringIO()
    out.write(",".join(FEATURE_HEADER) + "\n")
    for signal in dataset:
        step = repr(float(signal.step_seconds))
        for t_index, value in enumerate(signal.values):
            out.write(
                f"{signal.participant},{signal.feature},{signal.recording_type},"
                f"{step},{t_index},{repr(float(value))}\n"
            )
    return out.getvalue()


# ---------------------------------------------------------------------------
# Raw gaze samples


def _parse_optional_triplet(cells: Sequence[str], row: int, name: str) -> np.ndarray | None:
    empties = sum(1 for c in cells if c == "")
    if empties == 3:
        return None
    if empties:
        raise RowParseError(row, f"partially missing {name} triplet")
    return np.array([_parse_float(c, row, name) for c in cells])


def parse_samples_csv(text: str | bytes) -> dict[tuple[str, str], list[GazeSample]]:
    """Strictly parse raw gaze samples, grouped by (participant, recording).

    Timestamps must be strictly increasing within a recording. Gaze triplets
    and pupil cells may be empty (missing); head direction and position are
    required.
    """
    reader = csv.reader(io.StringIO(_decode(text)))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input") from None
    _check_header(header, SAMPLE_HEADER)
    streams: dict[tuple[str, str], list[GazeSample]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(SAMPLE_HEADER):
            raise RowParseError(lineno, f"expected {len(SAMPLE_HEADER)} cells, got {len(row)}")
        participant, recording = row[0], row[1]
        if not participant or not recording:
            raise RowParseError(lineno, "empty identifier cell")
        timestamp = _parse_float(row[2], lineno, "timestamp")
        gaze = _parse_optional_triplet(row[3:6], lineno, "gaze")
        head_dir = _parse_optional_triplet(row[6:9], lineno, "head direction")
        head_pos = _parse_optional_triplet(row[9:12], lineno, "head position")
        if head_dir is None or head_pos is None:
            raise RowParseError(lineno, "missing head direction or position")
        pupil = None if row[12] == "" else _parse_float(row[12], lineno, "pupil")
        key = (participant, recording)
        stream = streams.setdefault(key, [])
        if stream and timestamp <= stream[-1].timestamp:
            raise RowParseError(lineno, f"timestamp {timestamp} not increasing for {key}")
        stream.append(GazeSample(timestamp, gaze, head_dir, head_pos, pupil))
    return streams


def write_samples_csv(streams: Mapping[tuple[str, str], Iterable[GazeSample]]) -> str:
    """Canonical raw-sample CSV, inverse of parse_samples_csv."""

    def fmt(vec: np.ndarray | None) -> str:
        if vec is None:
            return ",,"
        return ",".join(repr(float(v)) for v in vec)

    out = io.StringIO()
    out.write(",".join(SAMPLE_HEADER) + "\n")
    for (participant, recording) in sorted(streams):
        for s in streams[(participant, recording)]:
            pupil = "" if s.pupil_diameter is None else repr(float(s.pupil_diameter))
            out.write(
                f"{participant},{recording},{repr(float(s.timestamp))},"
                f"{fmt(s.gaze_dir)},{fmt(s.head_dir)},{fmt(s.head_pos)},{pupil}\n"
            )
    return out.getvalue()


# ---------------------------------------------------------------------------
# Synthetic generators


def _names(spec: int | Sequence[str], prefix: str) -> list[str]:
    if isinstance(spec, int):
        if spec < 1:
            raise ValueError(f"need at least one {prefix}")
        return [f"{prefix}{i + 1:02d}" for i in range(spec)]
    names = list(spec)
    if not names:
        raise ValueError(f"need at least one {prefix}")
    return names


def gen_ar1_dataset(
    participants: int | Sequence[str],
    features: int | Sequence[str],
    length: int,
    rho: float,
    participant_offset_scale: float = 0.0,
    seed: int = 0,
    recording_type: str = "ar1",
    step_seconds: float = 0.5,
    level: float = 0.0,
) -> Dataset:
    """Order-1 autoregressive signals with per-participant level offsets.

    ``x_t = level + offset_p + rho * (x_{t-1} - level - offset_p) + eta_t``
    with the innovation scaled to ``sqrt(1 - rho^2)`` so the stationary
    variance around the per-participant mean is 1; ``x_0`` is drawn from the
    stationary marginal. Offsets come from a normal with the given scale,
    drawn once per participant. ``level`` shifts every participant equally,
    mimicking positive-valued features such as pupil diameter whose baseline
    sits far from zero. Fully determined by ``seed``.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if not abs(rho) < 1:
        raise ValueError("need |rho| < 1 for a stationary process")
    participant_names = _names(participants, "p")
    feature_names = _names(features, "f")
    offset_rng = derived_rng(seed, "ar1-offsets")
    offsets = offset_rng.normal(0.0, participant_offset_scale, len(participant_names))
    innovation_sd = math.sqrt(1.0 - rho * rho)
    dataset = Dataset()
    for pi, participant in enumerate(participant_names):
        for feature in feature_names:
            rng = derived_rng(seed, "ar1", participant, feature)
            draws = rng.standard_normal(length)
            forcing = innovation_sd * draws
            forcing[0] = draws[0]  # stationary start: unit-variance marginal
            centered = lfilter([1.0], [1.0, -rho], forcing)
            dataset.add(
                FeatureSignal(
                    participant, feature, recording_type,
                    level + offsets[pi] + centered, step_seconds,
                )
            )
    return dataset


@dataclass
class RegressionSet:
    """Feature matrix (n_features x n_samples) with per-sample (pitch, yaw) targets."""

    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be 2-d (n_features x n_samples)")
        if self.targets.shape != (self.features.shape[1], 2):
            raise ValueError("targets must be (n_samples, 2)")

    @property
    def n_features(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[1])


def gen_regression_set(
    n_samples: int,
    n_features: int = 36,
    noise_scale: float = 0.0,
    seed: int = 0,
    mixing_seed: int | None = None,
) -> RegressionSet:
    """Synthetic gaze-regression data: features on a low-dimensional manifold.

    Two latent gaze angles drive every feature through a fixed random mixing
    matrix (appearance features vary smoothly with where the eye points), plus
    a small isotropic residual; pitch and yaw targets are bounded sine
    responses to the latents, plus optional observation noise. Distances in
    feature space track latent distances, so a kernel regressor with a generic
    bandwidth can recover the targets from a few hundred samples.
    ``mixing_seed`` pins the mixing matrix independently of the samples, so
    two parties can draw disjoint samples from one shared feature space.
    """
    if n_samples < 1 or n_features < 1:
        raise ValueError("n_samples and n_features must be >= 1")
    if noise_scale < 0:
        raise ValueError("noise_scale must be nonnegative")
    rng = derived_rng(seed, "regression-set")
    mixing_rng = rng if mixing_seed is None else derived_rng(mixing_seed, "regression-mixing")
    mixing = mixing_rng.standard_normal((n_features, 2))
    latent = rng.standard_normal((2, n_samples))
    features = mixing @ latent + 0.05 * rng.standard_normal((n_features, n_samples))
    targets = 0.5 * np.sin(latent).T
    if noise_scale > 0:
        targets = targets + rng.normal(0.0, noise_scale, targets.shape)
    return RegressionSet(features, targets)
