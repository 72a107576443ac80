"""Differentially private release mechanisms for temporally correlated feature signals.

Four mechanisms share one budget/sensitivity vocabulary:

* ``lpa``   — per-sample Laplace noise on the raw signal (scale ``delta1 / epsilon``).
* ``fpa``   — keep the first ``k`` DFT coefficients, perturb their real and
  imaginary parts with Laplace noise of scale ``sqrt(n) * sqrt(k) * delta2 / epsilon``,
  reconstruct by zero-padded inverse transform.
* ``cfpa``  — split the signal into fixed-size chunks and apply ``fpa`` per chunk
  with chunk-level length, sensitivity, and ``k``; chunks are disjoint, so the
  joint guarantee stays at the per-chunk ``epsilon``.
* ``dcfpa`` — per chunk, difference-transform (keep the first element, then
  consecutive deltas), apply ``fpa`` to the difference signal with the
  difference-signal sensitivity, and integrate back with a prefix sum.

All mechanisms consume the caller's ``numpy.random.Generator`` strictly in chunk
order (real-part noise vector, then imaginary-part noise vector per chunk), so a
single-chunk ``cfpa`` reproduces ``fpa`` bit for bit under the same generator state.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .spectral import Spectrum, dft, idft_padded

_ACCOUNTING = ("single-release", "sequential")


@dataclass(eq=False)
class FeatureSignal:
    """One feature's time series for one participant and recording type."""

    participant: str
    feature: str
    recording_type: str
    values: np.ndarray
    step_seconds: float = 0.5

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or len(values) == 0:
            raise ValueError("values must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain non-finite entries")
        if not self.step_seconds > 0:
            raise ValueError("step_seconds must be positive")
        self.values = values

    def __len__(self) -> int:
        return len(self.values)

    def with_values(self, values: np.ndarray) -> "FeatureSignal":
        return FeatureSignal(
            self.participant, self.feature, self.recording_type, values, self.step_seconds
        )


@dataclass(frozen=True)
class PrivacyBudget:
    """Release parameters: epsilon plus the structural knobs a mechanism needs.

    ``k`` is either one retained-coefficient count applied to every chunk or a
    mapping from chunk index to count. ``accounting`` selects how
    ``composed_epsilon`` reports the joint guarantee for ``dcfpa``.
    """

    epsilon: float
    sensitivity_order: int | None = None
    k: int | Mapping[int, int] | None = None
    chunk_size: int | None = None
    accounting: str = "single-release"

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.sensitivity_order not in (None, 1, 2):
            raise ValueError("sensitivity_order must be 1 or 2")
        if isinstance(self.k, bool) or (
            isinstance(self.k, int) and self.k < 1
        ):
            raise ValueError("k must be a positive integer")
        if self.chunk_size is not None and self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        if self.accounting not in _ACCOUNTING:
            raise ValueError(f"accounting must be one of {_ACCOUNTING}")

    def k_for_chunk(self, chunk_index: int, chunk_length: int) -> int:
        """Retained-coefficient count for one chunk.

        An integer ``k`` is clamped only on a trailing short chunk; on full
        chunks ``k`` larger than the chunk is a configuration error.
        """
        if self.k is None:
            raise ValueError("budget.k is required for spectral mechanisms")
        if isinstance(self.k, int):
            k = self.k
            full = self.chunk_size is None or chunk_length >= self.chunk_size
            if full and k > chunk_length:
                raise ValueError(f"k={k} exceeds chunk length {chunk_length}")
            return min(k, chunk_length)
        try:
            k = self.k[chunk_index]
        except KeyError:
            raise ValueError(f"no k given for chunk {chunk_index}") from None
        if not 1 <= k <= chunk_length:
            raise ValueError(f"k={k} invalid for chunk {chunk_index} of length {chunk_length}")
        return k


@dataclass
class SensitivityTable:
    """Per-(feature, recording_type, chunk) query sensitivities.

    ``entries`` maps ``(feature, recording_type, chunk_index)`` to
    ``(delta_1, delta_2)``. ``chunk_size=None`` means one whole-signal entry at
    chunk index 0. ``representation`` records whether sensitivities were taken
    over the raw signals or their within-chunk difference transforms.
    """

    chunk_size: int | None = None
    representation: str = "raw"
    entries: dict[tuple[str, str, int], tuple[float, float]] = field(default_factory=dict)

    def set(self, feature: str, recording_type: str, chunk_index: int,
            delta1: float, delta2: float) -> None:
        self.entries[(feature, recording_type, chunk_index)] = (float(delta1), float(delta2))

    def delta(self, feature: str, recording_type: str, chunk_index: int, order: int) -> float:
        if order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        try:
            pair = self.entries[(feature, recording_type, chunk_index)]
        except KeyError:
            raise ValueError(
                f"no sensitivity for ({feature!r}, {recording_type!r}, chunk {chunk_index})"
            ) from None
        return pair[order - 1]


# ---------------------------------------------------------------------------
# Laplace sampling


def laplace_from_uniform(u: float, lam: float) -> float:
    """Inverse-CDF Laplace draw at uniform position ``u`` in (0, 1).

    ``u = 0.5`` maps to 0.0 exactly; the transform is monotone in ``u``.
    """
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie strictly inside (0, 1)")
    if lam < 0:
        raise ValueError("scale must be nonnegative")
    centered = u - 0.5
    return -lam * float(np.sign(centered)) * float(np.log1p(-2.0 * abs(centered)))


def laplace_vector(rng: np.random.Generator, lam: float, size: int) -> np.ndarray:
    """Vector of iid Laplace(0, lam) draws via the inverse CDF on rng uniforms."""
    if lam < 0:
        raise ValueError("scale must be nonnegative")
    if lam == 0.0:
        return np.zeros(size)
    u = rng.random(size)
    # rng.random() can return 0.0 exactly; nudge inside the open interval.
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    centered = u - 0.5
    return -lam * np.sign(centered) * np.log1p(-2.0 * np.abs(centered))


def laplace_sample(rng: np.random.Generator, lam: float) -> float:
    """Single Laplace(0, lam) draw; same seed and stream position, same value."""
    return float(laplace_vector(rng, lam, 1)[0])


def lpa_scale(delta1: float, epsilon: float) -> float:
    """Laplace scale for per-sample perturbation: delta1 / epsilon."""
    if delta1 < 0:
        raise ValueError("delta1 must be nonnegative")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return delta1 / epsilon


def fpa_scale(n: int, k: int, delta2: float, epsilon: float) -> float:
    """Laplace scale for spectral perturbation: sqrt(n) * sqrt(k) * delta2 / epsilon.

    The sqrt(k) factor bounds the L1 sensitivity of the retained coefficients by
    their L2 sensitivity; the sqrt(n) factor carries the time-domain L2
    sensitivity through the non-unitary transform.
    """
    if n < 1 or k < 1 or k > n:
        raise ValueError("need 1 <= k <= n")
    if delta2 < 0:
        raise ValueError("delta2 must be nonnegative")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return float(np.sqrt(n) * np.sqrt(k) * delta2 / epsilon)


# ---------------------------------------------------------------------------
# Sensitivity


def _as_array(signal: FeatureSignal | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(signal, FeatureSignal):
        return signal.values
    return np.asarray(signal, dtype=np.float64)


def query_sensitivity(
    signals: Iterable[FeatureSignal | Sequence[float] | np.ndarray], w: int
) -> float:
    """Largest pairwise L_w distance between signals, zero-padded to a common length.

    This is the neighboring-database bound for "replace one participant's
    signal with another's": with fewer than two signals there is no pair and
    the sensitivity is 0.
    """
    if w not in (1, 2):
        raise ValueError("w must be 1 or 2")
    arrays = [_as_array(s) for s in signals]
    if not arrays:
        raise ValueError("need at least one signal")
    if len(arrays) == 1:
        return 0.0
    n = max(len(a) for a in arrays)
    stacked = np.zeros((len(arrays), n))
    for i, a in enumerate(arrays):
        stacked[i, : len(a)] = a
    metric = "cityblock" if w == 1 else "euclidean"
    return float(np.max(pdist(stacked, metric=metric)))


def compute_sensitivity_table(
    dataset,
    chunk_size: int | None = None,
    representation: str = "raw",
    exclude_zero_min_features: bool = False,
) -> SensitivityTable:
    """Sensitivities per (feature, recording_type, chunk) across participants.

    ``dataset`` is any object with ``groups()`` yielding
    ``((feature, recording_type), [FeatureSignal, ...])``. Chunk boundaries are
    laid out on the longest signal in a group; shorter signals contribute
    zero-padded (possibly empty) segments, matching the common-length form of
    the sensitivity definition while mechanisms keep operating on true lengths.
    ``representation="difference"`` takes within-chunk difference transforms
    before measuring distances. ``exclude_zero_min_features`` drops features
    whose minimum is 0 in every signal (count-style features that are zero
    whenever the behavior is absent, which would otherwise dominate utility
    comparisons with vacuous sensitivities).
    """
    if representation not in ("raw", "difference"):
        raise ValueError("representation must be 'raw' or 'difference'")
    table = SensitivityTable(chunk_size=chunk_size, representation=representation)
    for (feature, recording_type), signals in dataset.groups():
        if exclude_zero_min_features and all(
            float(np.min(s.values)) == 0.0 for s in signals
        ):
            continue
        n_max = max(len(s) for s in signals)
        bounds = chunk_boundaries(n_max, chunk_size if chunk_size is not None else n_max)
        for ci, (start, end) in enumerate(bounds):
            segments = []
            for s in signals:
                seg = s.values[start:min(end, len(s))]
                if representation == "difference" and len(seg) > 0:
                    seg = difference_transform(seg)
                padded = np.zeros(end - start)
                padded[: len(seg)] = seg
                segments.append(padded)
            table.set(
                feature,
                recording_type,
                ci,
                query_sensitivity(segments, 1),
                query_sensitivity(segments, 2),
            )
    return table


# ---------------------------------------------------------------------------
# Chunking and the difference/aggregation pair


def chunk_boundaries(n: int, chunk_size: int) -> list[tuple[int, int]]:
    """Half-open [start, end) chunk spans covering 0..n; trailing remainder kept."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    return [(start, min(start + chunk_size, n)) for start in range(0, n, chunk_size)]


def difference_transform(x: np.ndarray) -> np.ndarray:
    """First element kept, then consecutive deltas: [x0, x1-x0, x2-x1, ...]."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or len(arr) == 0:
        raise ValueError("x must be a nonempty 1-d sequence")
    out = np.empty_like(arr)
    out[0] = arr[0]
    out[1:] = np.diff(arr)
    return out


def aggregate_transform(x: np.ndarray) -> np.ndarray:
    """Prefix-sum inverse of difference_transform."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or len(arr) == 0:
        raise ValueError("x must be a nonempty 1-d sequence")
    return np.cumsum(arr)


# ---------------------------------------------------------------------------
# Mechanisms


def lpa(
    signal: FeatureSignal,
    delta1: float,
    budget: PrivacyBudget,
    rng: np.random.Generator,
) -> FeatureSignal:
    """Per-sample Laplace perturbation with scale delta1 / epsilon.

    Zero sensitivity is an exact identity (no draws are consumed).
    """
    lam = lpa_scale(delta1, budget.epsilon)
    if lam == 0.0:
        return signal.with_values(signal.values.copy())
    noise = laplace_vector(rng, lam, len(signal))
    return signal.with_values(signal.values + noise)


def _fpa_core(
    x: np.ndarray, delta2: float, k: int, epsilon: float, rng: np.random.Generator
) -> np.ndarray:
    n = len(x)
    lam = fpa_scale(n, k, delta2, epsilon)
    kept = dft(x).coefficients[:k]
    if lam > 0.0:
        kept = kept + laplace_vector(rng, lam, k) + 1j * laplace_vector(rng, lam, k)
    return idft_padded(Spectrum(kept, n), k, n)


def fpa(
    signal: FeatureSignal,
    delta2: float,
    budget: PrivacyBudget,
    rng: np.random.Generator,
) -> FeatureSignal:
    """Spectral perturbation of the whole signal: noise the first k coefficients."""
    k = budget.k_for_chunk(0, len(signal))
    values = _fpa_core(signal.values, delta2, k, budget.epsilon, rng)
    return signal.with_values(values)


def cfpa(
    signal: FeatureSignal,
    sensitivities: SensitivityTable,
    budget: PrivacyBudget,
    rng: np.random.Generator,
) -> FeatureSignal:
    """Chunked spectral perturbation; each chunk is released at the full epsilon.

    Chunks partition the signal, so the per-chunk guarantees compose in
    parallel and the joint guarantee equals the chunk-level epsilon.
    """
    n = len(signal)
    chunk_size = budget.chunk_size if budget.chunk_size is not None else n
    out = np.empty(n)
    for ci, (start, end) in enumerate(chunk_boundaries(n, chunk_size)):
        delta2 = sensitivities.delta(signal.feature, signal.recording_type, ci, 2)
        k = budget.k_for_chunk(ci, end - start)
        out[start:end] = _fpa_core(signal.values[start:end], delta2, k, budget.epsilon, rng)
    return signal.with_values(out)


def dcfpa(
    signal: FeatureSignal,
    sensitivities: SensitivityTable,
    budget: PrivacyBudget,
    rng: np.random.Generator,
) -> FeatureSignal:
    """Chunked spectral perturbation of within-chunk difference signals.

    Per chunk: difference-transform, perturb spectrally using the
    difference-signal sensitivity, then integrate back with a prefix sum.
    ``sensitivities`` must therefore be a difference-representation table.
    """
    if sensitivities.representation != "difference":
        raise ValueError("dcfpa needs a difference-representation sensitivity table")
    n = len(signal)
    chunk_size = budget.chunk_size if budget.chunk_size is not None else n
    out = np.empty(n)
    for ci, (start, end) in enumerate(chunk_boundaries(n, chunk_size)):
        delta2 = sensitivities.delta(signal.feature, signal.recording_type, ci, 2)
        k = budget.k_for_chunk(ci, end - start)
        diffs = difference_transform(signal.values[start:end])
        noisy = _fpa_core(diffs, delta2, k, budget.epsilon, rng)
        out[start:end] = aggregate_transform(noisy)
    return signal.with_values(out)


MECHANISMS = ("lpa", "fpa", "cfpa", "dcfpa")


def composed_epsilon(
    mechanism: str,
    budget: PrivacyBudget,
    n: int,
    chunk_size: int | None = None,
) -> float:
    """Joint privacy guarantee of one full-signal release.

    ``lpa`` and ``fpa`` are single queries; ``cfpa`` composes in parallel over
    disjoint chunks (max of equal per-chunk epsilons); ``dcfpa`` reports the
    budget epsilon under single-release accounting and ``chunk_length * epsilon``
    under sequential accounting, the conservative reading where every element
    of a chunk is treated as its own release.
    """
    if mechanism not in MECHANISMS:
        raise ValueError(f"unknown mechanism {mechanism!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if mechanism in ("lpa", "fpa", "cfpa"):
        return budget.epsilon
    if budget.accounting == "single-release":
        return budget.epsilon
    size = chunk_size if chunk_size is not None else budget.chunk_size
    chunk_length = min(size, n) if size is not None else n
    return chunk_length * budget.epsilon


def privatize(
    signal: FeatureSignal,
    mechanism: str,
    sensitivities: SensitivityTable,
    budget: PrivacyBudget,
    rng: np.random.Generator,
) -> FeatureSignal:
    """Dispatch one signal through a mechanism using a sensitivity table.

    ``lpa``/``fpa`` read the whole-signal entry (chunk 0) of a raw,
    unchunked table; ``cfpa``/``dcfpa`` read per-chunk entries.
    """
    if mechanism == "lpa":
        delta1 = sensitivities.delta(signal.feature, signal.recording_type, 0, 1)
        return lpa(signal, delta1, budget, rng)
    if mechanism == "fpa":
        delta2 = sensitivities.delta(signal.feature, signal.recording_type, 0, 2)
        return fpa(signal, delta2, budget, rng)
    if mechanism == "cfpa":
        return cfpa(signal, sensitivities, budget, rng)
    if mechanism == "dcfpa":
        return dcfpa(signal, sensitivities, budget, rng)
    raise ValueError(f"unknown mechanism {mechanism!r}")


def budget_with(budget: PrivacyBudget, **changes) -> PrivacyBudget:
    """Frozen-dataclass update helper."""
    return dataclasses.replace(budget, **changes)
