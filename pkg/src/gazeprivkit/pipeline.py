"""Upstream gaze processing: gap filling, event detection, smoothing, ray casting,
object-attention accounting, and sliding-window feature extraction.

Velocity-threshold event detection works on angular velocities between
consecutive unit direction vectors. A fixation requires both a still head
(< 7 deg/s) and slow gaze (< 30 deg/s) for 100-500 ms; a saccade requires fast
gaze (> 60 deg/s) for 30-80 ms regardless of head motion. Duration bounds are
strict; runs violating them are discarded whole rather than split.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import savgol_filter

from .errors import DegenerateDenominatorError
from .mechanisms import FeatureSignal


@dataclass
class GazeSample:
    """One tracker sample; gaze and pupil may be missing."""

    timestamp: float
    gaze_dir: np.ndarray | None
    head_dir: np.ndarray
    head_pos: np.ndarray
    pupil_diameter: float | None = None


@dataclass(frozen=True)
class EventThresholds:
    """Velocity (deg/s) and duration (s) bounds for fixations and saccades."""

    head_still: float = 7.0
    fixation_gaze: float = 30.0
    saccade_gaze: float = 60.0
    fixation_duration: tuple[float, float] = (0.100, 0.500)
    saccade_duration: tuple[float, float] = (0.030, 0.080)


@dataclass
class EventSegment:
    kind: str  # "fixation" | "saccade"
    start: float
    end: float
    duration: float
    mean_gaze: np.ndarray
    amplitude_deg: float | None = None  # saccades only: endpoint-to-endpoint angle


@dataclass(frozen=True)
class Collider:
    """Axis-aligned box with an object identity."""

    object_id: str
    center: tuple[float, float, float]
    half_extents: tuple[float, float, float]

    def __post_init__(self) -> None:
        if any(h <= 0 for h in self.half_extents):
            raise ValueError("half_extents must be positive")


@dataclass(frozen=True)
class RayHit:
    object_id: str
    distance: float


@dataclass(frozen=True)
class AttentionRecord:
    total_dwell: float
    visits: int


def _validate_times(times: np.ndarray) -> None:
    if len(times) >= 2 and not np.all(np.diff(times) > 0):
        raise ValueError("timestamps must be strictly increasing")


def interpolate_gaps(samples: Sequence[GazeSample]) -> list[GazeSample]:
    """Fill missing gaze directions by componentwise linear interpolation.

    Interpolated vectors are renormalized to unit length; gaps before the first
    or after the last present sample take the nearest present direction.
    Samples that already have gaze are returned untouched.
    """
    if not samples:
        raise ValueError("need at least one sample")
    times = np.array([s.timestamp for s in samples])
    _validate_times(times)
    present = [i for i, s in enumerate(samples) if s.gaze_dir is not None]
    if not present:
        raise ValueError("all gaze directions missing; nothing to interpolate from")
    known_t = times[present]
    known = np.stack([np.asarray(samples[i].gaze_dir, dtype=np.float64) for i in present])
    filled = np.column_stack([np.interp(times, known_t, known[:, c]) for c in range(3)])
    out: list[GazeSample] = []
    for i, s in enumerate(samples):
        if s.gaze_dir is not None:
            out.append(s)
            continue
        vec = filled[i]
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ValueError(f"interpolated gaze at t={s.timestamp} has zero length")
        out.append(GazeSample(s.timestamp, vec / norm, s.head_dir, s.head_pos, s.pupil_diameter))
    return out


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("zero-length direction vector")
    return vectors / norms


def _angles_deg(dirs: np.ndarray) -> np.ndarray:
    """Angle in degrees between consecutive rows of unit vectors."""
    dots = np.clip(np.sum(dirs[:-1] * dirs[1:], axis=1), -1.0, 1.0)
    return np.degrees(np.arccos(dots))


def _angle_deg(a: np.ndarray, b: np.ndarray) -> float:
    dot = float(np.clip(np.dot(a, b), -1.0, 1.0))
    return math.degrees(math.acos(dot))


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal [start, end] index runs of True values."""
    runs = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs


def detect_events(
    samples: Sequence[GazeSample],
    thresholds: EventThresholds = EventThresholds(),
) -> list[EventSegment]:
    """Velocity-threshold fixation/saccade segmentation.

    Velocity sample ``i`` (1-based over gaps) is the angle between directions
    ``i-1`` and ``i`` divided by the timestamp delta; a run of qualifying
    velocity samples ``[i..j]`` spans timestamps ``t[i-1]..t[j]``. Requires
    gap-free gaze (run interpolate_gaps first).
    """
    if any(s.gaze_dir is None for s in samples):
        raise ValueError("missing gaze; run interpolate_gaps first")
    if len(samples) < 2:
        return []
    times = np.array([s.timestamp for s in samples])
    _validate_times(times)
    gaze = _unit_rows(np.stack([np.asarray(s.gaze_dir, dtype=np.float64) for s in samples]))
    head = _unit_rows(np.stack([np.asarray(s.head_dir, dtype=np.float64) for s in samples]))
    dt = np.diff(times)
    v_gaze = _angles_deg(gaze) / dt
    v_head = _angles_deg(head) / dt

    events: list[EventSegment] = []

    def harvest(mask: np.ndarray, kind: str, bounds: tuple[float, float]) -> None:
        low, high = bounds
        for vi, vj in _runs(mask):
            first, last = vi, vj + 1  # sample indices spanned by the velocity run
            duration = float(times[last] - times[first])
            if not low < duration < high:
                continue
            span = gaze[first:last + 1]
            mean = span.mean(axis=0)
            norm = float(np.linalg.norm(mean))
            mean = mean / norm if norm > 0 else span[0]
            amplitude = _angle_deg(gaze[first], gaze[last]) if kind == "saccade" else None
            events.append(
                EventSegment(kind, float(times[first]), float(times[last]), duration, mean, amplitude)
            )

    harvest((v_head < thresholds.head_still) & (v_gaze < thresholds.fixation_gaze),
            "fixation", thresholds.fixation_duration)
    harvest(v_gaze > thresholds.saccade_gaze, "saccade", thresholds.saccade_duration)
    events.sort(key=lambda e: (e.start, e.kind))
    return events


# ---------------------------------------------------------------------------
# Smoothing and baseline correction


def _shrunken_fit(x: np.ndarray, i: int, half: int, order: int) -> float:
    radius = min(half, i, len(x) - 1 - i)
    window = x[i - radius: i + radius + 1]
    effective = min(order, len(window) - 1)
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    coeffs = np.polynomial.polynomial.polyfit(t, window, effective)
    return float(coeffs[0])  # value of the fit at the window center


def sg_smooth(series: np.ndarray, window: int = 11, order: int = 2) -> np.ndarray:
    """Least-squares polynomial smoothing (center-point evaluation).

    Each point is replaced by the value at the center of a polynomial fit over
    the surrounding window; near the edges the window shrinks symmetrically
    (order capped by the available support), so polynomial series up to the
    given order pass through unchanged everywhere.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("series must be a nonempty 1-d sequence")
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and >= 1")
    if order < 0 or order >= window:
        raise ValueError("need 0 <= order < window")
    half = window // 2
    if len(x) <= window:
        return np.array([_shrunken_fit(x, i, half, order) for i in range(len(x))])
    out = savgol_filter(x, window, order)
    for i in range(half):
        out[i] = _shrunken_fit(x, i, half, order)
        out[len(x) - 1 - i] = _shrunken_fit(x, len(x) - 1 - i, half, order)
    return out


def divisive_baseline(
    series: np.ndarray,
    baseline_duration: float,
    step: float,
    statistic: str = "median",
) -> np.ndarray:
    """Divide a series by the median (or mean) of its leading baseline window."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("series must be a nonempty 1-d sequence")
    if statistic not in ("median", "mean"):
        raise ValueError("statistic must be 'median' or 'mean'")
    if step <= 0:
        raise ValueError("step must be positive")
    count = int(baseline_duration / step + 1e-9)
    if count < 1:
        raise ValueError("baseline window contains no samples")
    if count > len(x):
        raise ValueError(f"baseline needs {count} samples, series has {len(x)}")
    base = x[:count]
    divisor = float(np.median(base) if statistic == "median" else np.mean(base))
    if divisor == 0.0:
        raise DegenerateDenominatorError("baseline statistic is zero")
    return x / divisor


# ---------------------------------------------------------------------------
# Ray casting and object attention


def ray_cast(
    origin: Sequence[float],
    direction: Sequence[float],
    colliders: Iterable[Collider],
) -> RayHit | None:
    """Nearest axis-aligned box hit by a ray (slab method), or None.

    Distance is the nonnegative entry distance along the normalized direction;
    an origin inside a box hits it at distance 0.
    """
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    norm = float(np.linalg.norm(d))
    if norm == 0.0:
        raise ValueError("direction must be nonzero")
    d = d / norm
    best: RayHit | None = None
    for box in colliders:
        lo = np.asarray(box.center) - np.asarray(box.half_extents)
        hi = np.asarray(box.center) + np.asarray(box.half_extents)
        near, far = -math.inf, math.inf
        hit = True
        for axis in range(3):
            if d[axis] == 0.0:
                if not lo[axis] <= o[axis] <= hi[axis]:
                    hit = False
                    break
                continue
            t1 = (lo[axis] - o[axis]) / d[axis]
            t2 = (hi[axis] - o[axis]) / d[axis]
            near = max(near, min(t1, t2))
            far = min(far, max(t1, t2))
        if not hit or near > far or far < 0:
            continue
        distance = max(near, 0.0)
        if best is None or distance < best.distance:
            best = RayHit(box.object_id, distance)
    return best


def gaze_hits(
    samples: Sequence[GazeSample], colliders: Sequence[Collider]
) -> list[tuple[float, str | None]]:
    """Per-sample (timestamp, hit object id or None) stream for attention accounting."""
    stream = []
    for s in samples:
        if s.gaze_dir is None:
            stream.append((s.timestamp, None))
            continue
        hit = ray_cast(s.head_pos, s.gaze_dir, colliders)
        stream.append((s.timestamp, hit.object_id if hit else None))
    return stream


def ooi_attention(
    hit_stream: Sequence[tuple[float, str | None]],
    threshold: float = 0.200,
) -> dict[str, AttentionRecord]:
    """Dwell time and visit counts per object from a hit stream.

    A visit is a maximal run of consecutive samples on the same object whose
    dwell (last minus first timestamp of the run) reaches the threshold; shorter
    glances contribute nothing, and objects with no qualifying visit are absent.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    times = np.array([t for t, _ in hit_stream])
    _validate_times(times)
    totals: dict[str, float] = {}
    visits: dict[str, int] = {}
    i = 0
    n = len(hit_stream)
    while i < n:
        obj = hit_stream[i][1]
        j = i
        while j + 1 < n and hit_stream[j + 1][1] == obj:
            j += 1
        if obj is not None:
            dwell = hit_stream[j][0] - hit_stream[i][0]
            if dwell >= threshold:
                totals[obj] = totals.get(obj, 0.0) + dwell
                visits[obj] = visits.get(obj, 0) + 1
        i = j + 1
    return {obj: AttentionRecord(totals[obj], visits[obj]) for obj in sorted(totals)}


# ---------------------------------------------------------------------------
# Window features


WINDOW_FEATURES = (
    "fixation_count",
    "fixation_duration_mean",
    "saccade_count",
    "saccade_duration_mean",
    "saccade_amplitude_mean",
    "pupil_diameter_mean",
)


@dataclass
class WindowFeatures:
    """Sliding-window feature signals plus per-window validity of the means.

    A window with no qualifying events (or no pupil samples) carries 0 in the
    corresponding mean and False in its validity row, keeping downstream
    sensitivity computations total.
    """

    signals: dict[str, FeatureSignal]
    validity: dict[str, np.ndarray] = field(default_factory=dict)


def window_features(
    events: Sequence[EventSegment],
    pupil_times: np.ndarray,
    pupil_values: np.ndarray,
    window: float = 30.0,
    step: float = 0.5,
    participant: str = "p01",
    recording_type: str = "recording",
) -> WindowFeatures:
    """Sliding-window summary features over events and a (normalized) pupil series.

    Window w spans [t0 + w*step, t0 + w*step + window); an event belongs to the
    window containing its start time. The window count is
    floor((T - window) / step) + 1 over the pupil series' time span T.
    """
    times = np.asarray(pupil_times, dtype=np.float64)
    values = np.asarray(pupil_values, dtype=np.float64)
    if times.ndim != 1 or times.shape != values.shape or len(times) == 0:
        raise ValueError("pupil series must be matching nonempty 1-d arrays")
    _validate_times(times)
    if window <= 0 or step <= 0:
        raise ValueError("window and step must be positive")
    span = float(times[-1] - times[0])
    if span < window:
        raise ValueError(f"recording spans {span:.3f}s, shorter than one {window:.3f}s window")
    count = int((span - window) / step + 1e-9) + 1
    t0 = float(times[0])

    data = {name: np.zeros(count) for name in WINDOW_FEATURES}
    validity = {
        name: np.ones(count, dtype=bool)
        for name in WINDOW_FEATURES
        if name.endswith("_mean")
    }
    fixations = [e for e in events if e.kind == "fixation"]
    saccades = [e for e in events if e.kind == "saccade"]
    for w in range(count):
        start = t0 + w * step
        end = start + window
        fix = [e for e in fixations if start <= e.start < end]
        sac = [e for e in saccades if start <= e.start < end]
        pupil = values[(times >= start) & (times < end)]
        data["fixation_count"][w] = len(fix)
        data["saccade_count"][w] = len(sac)
        if fix:
            data["fixation_duration_mean"][w] = np.mean([e.duration for e in fix])
        else:
            validity["fixation_duration_mean"][w] = False
        if sac:
            data["saccade_duration_mean"][w] = np.mean([e.duration for e in sac])
            data["saccade_amplitude_mean"][w] = np.mean([e.amplitude_deg for e in sac])
        else:
            validity["saccade_duration_mean"][w] = False
            validity["saccade_amplitude_mean"][w] = False
        if len(pupil):
            data["pupil_diameter_mean"][w] = np.mean(pupil)
        else:
            validity["pupil_diameter_mean"][w] = False

    signals = {
        name: FeatureSignal(participant, name, recording_type, data[name], step)
        for name in WINDOW_FEATURES
    }
    return WindowFeatures(signals, validity)


def pupil_series(samples: Sequence[GazeSample]) -> tuple[np.ndarray, np.ndarray]:
    """Timestamps and pupil values with missing entries linearly interpolated."""
    times = np.array([s.timestamp for s in samples])
    _validate_times(times)
    present = [i for i, s in enumerate(samples) if s.pupil_diameter is not None]
    if not present:
        raise ValueError("all pupil diameters missing")
    known_t = times[present]
    known_v = np.array([samples[i].pupil_diameter for i in present])
    return times, np.interp(times, known_t, known_v)
