"""Utility and correlation evaluation of privatized feature signals.

Utility is defined through the normalized mean squared error
``NMSE = mean((x - x~)^2) / (mean(x) * mean(x~))`` (sign included; the
denominator is a product of means, so it can be negative) and
``utility = 1 / |NMSE|`` with an explicit infinity sentinel at zero. The trial
harness derives one rng per (feature, recording type, participant, trial) from a
stable hash, so reports are bit-identical regardless of execution order or
thread count.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from typing import Mapping, Sequence

import numpy as np

from ._rng import derived_rng
from .errors import DegenerateDenominatorError, UndefinedCorrelationError
from .mechanisms import (
    FeatureSignal,
    PrivacyBudget,
    SensitivityTable,
    budget_with,
    chunk_boundaries,
    compute_sensitivity_table,
    difference_transform,
    fpa_scale,
    laplace_vector,
    privatize,
)

REPORT_SCHEMA_VERSION = 1


def nmse(original: np.ndarray, released: np.ndarray) -> float:
    """Normalized mean squared error; negative when the means disagree in sign."""
    x = np.asarray(original, dtype=np.float64)
    y = np.asarray(released, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) == 0:
        raise ValueError("signals must be nonempty 1-d arrays of equal length")
    denominator = float(np.mean(x)) * float(np.mean(y))
    if denominator == 0.0:
        raise DegenerateDenominatorError("product of signal means is zero")
    return float(np.mean((x - y) ** 2) / denominator)


def utility_score(nmse_value: float) -> float:
    """1 / |NMSE|; exact zero maps to the infinity sentinel (never averaged)."""
    if nmse_value == 0.0:
        return math.inf
    return 1.0 / abs(nmse_value)


@dataclass
class UtilityReport:
    """Per-(feature, recording_type) utility summary for one mechanism setting."""

    feature: str
    recording_type: str
    mechanism: str
    epsilon: float
    chunk_size: int | None
    chosen_k: int | dict[int, int] | None
    mean_abs_nmse: float
    utility: float
    trials: int
    base_seed: int
    zero_nmse_trials: int = 0
    degenerate_trials: int = 0
    excluded_participants: tuple[str, ...] = ()


def _utility_from_samples(abs_nmses: np.ndarray) -> tuple[float, float]:
    mean_abs = float(np.mean(abs_nmses))
    return mean_abs, utility_score(mean_abs)


def _table_for(dataset, mechanism: str, budget: PrivacyBudget,
               exclude_zero_min_features: bool) -> SensitivityTable:
    if mechanism in ("lpa", "fpa"):
        return compute_sensitivity_table(
            dataset, None, "raw", exclude_zero_min_features
        )
    representation = "difference" if mechanism == "dcfpa" else "raw"
    return compute_sensitivity_table(
        dataset, budget.chunk_size, representation, exclude_zero_min_features
    )


def _thread_count(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("GPK_THREADS", "")
        threads = int(env) if env.strip() else 1
    return max(1, threads)


def _group_budget(
    dataset_signals: list[FeatureSignal],
    mechanism: str,
    budget: PrivacyBudget,
    table: SensitivityTable,
    optimal_k_trials: int,
    base_seed: int,
) -> PrivacyBudget:
    """Resolve budget.k=None to per-chunk optima pooled across participants."""
    if mechanism == "lpa" or budget.k is not None:
        return budget
    feature = dataset_signals[0].feature
    rectype = dataset_signals[0].recording_type
    n_max = max(len(s) for s in dataset_signals)
    chunk_size = budget.chunk_size if mechanism in ("cfpa", "dcfpa") else None
    bounds = chunk_boundaries(n_max, chunk_size if chunk_size is not None else n_max)
    chosen: dict[int, int] = {}
    for ci, (start, end) in enumerate(bounds):
        segments = [s.values[start:end] for s in dataset_signals if len(s) >= end]
        if not segments:  # no signal covers this chunk fully; fall back to partials
            segments = [s.values[start:min(end, len(s))]
                        for s in dataset_signals if len(s) > start]
        delta2 = table.delta(feature, rectype, ci, 2)
        rng = derived_rng(base_seed, "optimal-k", feature, rectype, ci)
        kind = "dcfpa" if mechanism == "dcfpa" else "fpa"
        chosen[ci] = _optimal_k_pooled(segments, kind, delta2, budget.epsilon,
                                       optimal_k_trials, rng)
    return budget_with(budget, k=chosen)


def clamp_budget(budget: PrivacyBudget, signal_length: int,
                 chunk_size: int | None) -> PrivacyBudget:
    """Clamp a per-chunk k map onto a (possibly shorter) signal's chunk grid."""
    if not isinstance(budget.k, Mapping):
        return budget
    bounds = chunk_boundaries(signal_length, chunk_size if chunk_size is not None else signal_length)
    clamped = {}
    for ci, (start, end) in enumerate(bounds):
        k = budget.k.get(ci)
        if k is None:
            raise ValueError(f"no k given for chunk {ci}")
        clamped[ci] = min(k, end - start)
    return budget_with(budget, k=clamped)


def evaluate_mechanism(
    dataset,
    mechanism: str,
    budget: PrivacyBudget,
    trials: int = 100,
    base_seed: int = 0,
    sensitivities: SensitivityTable | None = None,
    optimal_k_trials: int = 25,
    exclude_zero_min_features: bool = False,
    threads: int | None = None,
) -> list[UtilityReport]:
    """Run a mechanism ``trials`` times per (feature, recording_type) group.

    Signals whose mean is exactly zero are excluded and listed per report;
    trials whose released mean is exactly zero are dropped from the average and
    counted. ``budget.k=None`` selects per-chunk k by exhaustive search pooled
    over participants. ``threads=None`` reads GPK_THREADS (default sequential);
    the result is bitwise independent of the thread count.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    table = sensitivities if sensitivities is not None else _table_for(
        dataset, mechanism, budget, exclude_zero_min_features
    )
    workers = _thread_count(threads)
    reports: list[UtilityReport] = []
    for (feature, rectype), signals in dataset.groups():
        if (feature, rectype, 0) not in table.entries:
            continue  # excluded from the table (e.g. zero-minimum feature)
        usable = [s for s in signals if float(np.mean(s.values)) != 0.0]
        excluded = tuple(s.participant for s in signals if s not in usable)
        if not usable:
            continue
        group_budget = _group_budget(usable, mechanism, budget, table,
                                     optimal_k_trials, base_seed)
        chunk_size = group_budget.chunk_size if mechanism in ("cfpa", "dcfpa") else None

        def run_trial(trial: int) -> tuple[list[float], int]:
            values: list[float] = []
            degenerate = 0
            for signal in usable:
                rng = derived_rng(base_seed, feature, rectype, signal.participant, trial)
                per_signal = clamp_budget(group_budget, len(signal), chunk_size)
                released = privatize(signal, mechanism, table, per_signal, rng)
                try:
                    values.append(nmse(signal.values, released.values))
                except DegenerateDenominatorError:
                    degenerate += 1
            return values, degenerate

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(run_trial, range(trials)))
        else:
            outcomes = [run_trial(t) for t in range(trials)]
        nmses = np.array([v for values, _ in outcomes for v in values])
        degenerate_trials = sum(d for _, d in outcomes)
        if len(nmses) == 0:
            continue
        zero_trials = int(np.sum(nmses == 0.0))
        mean_abs, utility = _utility_from_samples(np.abs(nmses))
        chosen_k = group_budget.k if mechanism != "lpa" else None
        if isinstance(chosen_k, Mapping):
            chosen_k = dict(sorted(chosen_k.items()))
            if len(chosen_k) == 1:
                chosen_k = chosen_k[0]
        reports.append(
            UtilityReport(
                feature=feature,
                recording_type=rectype,
                mechanism=mechanism,
                epsilon=budget.epsilon,
                chunk_size=budget.chunk_size,
                chosen_k=chosen_k,
                mean_abs_nmse=mean_abs,
                utility=utility,
                trials=trials,
                base_seed=base_seed,
                zero_nmse_trials=zero_trials,
                degenerate_trials=degenerate_trials,
                excluded_participants=excluded,
            )
        )
    return reports


# ---------------------------------------------------------------------------
# Retained-coefficient search


def _laplace_matrix(rng: np.random.Generator, lam: float, shape: tuple[int, int]) -> np.ndarray:
    return laplace_vector(rng, lam, shape[0] * shape[1]).reshape(shape)


def _candidate_abs_nmse(
    base: np.ndarray,
    target: np.ndarray,
    k: int,
    lam: float,
    trials: int,
    rng: np.random.Generator,
    integrate: bool,
) -> float:
    """Mean |NMSE| of k-coefficient reconstruction over fresh noise trials."""
    n = len(base)
    spectrum = np.fft.fft(base)
    kept = np.zeros((trials, n), dtype=np.complex128)
    kept[:, :k] = spectrum[:k]
    if lam > 0:
        kept[:, :k] += (
            _laplace_matrix(rng, lam, (trials, k))
            + 1j * _laplace_matrix(rng, lam, (trials, k))
        )
    recon = np.fft.ifft(kept, axis=1).real
    if integrate:
        recon = np.cumsum(recon, axis=1)
    target_mean = float(np.mean(target))
    recon_means = recon.mean(axis=1)
    valid = recon_means * target_mean != 0.0
    if not np.any(valid):
        return math.inf
    errors = np.mean((recon[valid] - target) ** 2, axis=1)
    return float(np.mean(np.abs(errors / (recon_means[valid] * target_mean))))


def _optimal_k_pooled(
    segments: Sequence[np.ndarray],
    mechanism: str,
    delta2: float,
    epsilon: float,
    trials: int,
    rng: np.random.Generator,
) -> int:
    if mechanism not in ("fpa", "cfpa", "dcfpa"):
        raise ValueError("optimal k applies to spectral mechanisms only")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    arrays = [np.asarray(s, dtype=np.float64) for s in segments]
    if not arrays or any(a.ndim != 1 or len(a) == 0 for a in arrays):
        raise ValueError("need nonempty 1-d segments")
    length = max(len(a) for a in arrays)
    integrate = mechanism == "dcfpa"
    bases = [difference_transform(a) if integrate else a for a in arrays]
    children = rng.spawn(length)
    best_k, best_score = 1, math.inf
    for k in range(1, length + 1):
        child = children[k - 1]
        scores = []
        for base, target in zip(bases, arrays):
            if k > len(base):
                continue
            lam = fpa_scale(len(base), k, delta2, epsilon)
            scores.append(
                _candidate_abs_nmse(base, target, k, lam, trials, child, integrate)
            )
        score = float(np.mean(scores)) if scores else math.inf
        if score < best_score:  # strict: ties keep the smaller k
            best_k, best_score = k, score
    return best_k


def optimal_k_table(
    dataset,
    mechanism: str,
    budget: PrivacyBudget,
    trials: int = 100,
    base_seed: int = 0,
    sensitivities: SensitivityTable | None = None,
    exclude_zero_min_features: bool = False,
) -> dict[tuple[str, str], int | dict[int, int]]:
    """Per-chunk optimal k for every (feature, recording_type) group, pooled."""
    if mechanism not in ("fpa", "cfpa", "dcfpa"):
        raise ValueError("optimal k applies to spectral mechanisms only")
    table = sensitivities if sensitivities is not None else _table_for(
        dataset, mechanism, budget, exclude_zero_min_features
    )
    chosen: dict[tuple[str, str], int | dict[int, int]] = {}
    for (feature, rectype), signals in dataset.groups():
        if (feature, rectype, 0) not in table.entries:
            continue
        resolved = _group_budget(signals, mechanism, budget_with(budget, k=None),
                                 table, trials, base_seed).k
        if isinstance(resolved, Mapping):
            resolved = dict(sorted(resolved.items()))
            if len(resolved) == 1:
                resolved = resolved[0]
        chosen[(feature, rectype)] = resolved
    return chosen


def optimal_k(
    signal: FeatureSignal | np.ndarray,
    mechanism: str,
    delta2: float,
    epsilon: float,
    trials: int = 100,
    rng: np.random.Generator | None = None,
) -> int:
    """Retained-coefficient count minimizing mean |NMSE| over an exhaustive 1..n grid.

    Each candidate k is scored with independent noise draws; ties go to the
    smaller k. For ``dcfpa`` the candidate reconstruction runs on the
    difference transform and is integrated back before scoring, and ``delta2``
    must be the difference-signal sensitivity.
    """
    values = signal.values if isinstance(signal, FeatureSignal) else np.asarray(signal, dtype=np.float64)
    if rng is None:
        rng = np.random.default_rng()
    return _optimal_k_pooled([values], mechanism, delta2, epsilon, trials, rng)


# ---------------------------------------------------------------------------
# Correlation structure


@dataclass
class CorrelationProfile:
    """Cross-participant correlation between a reference index and later indices."""

    feature: str
    recording_type: str
    transform: str
    ref_index: int
    lags: np.ndarray
    values: np.ndarray
    sample_counts: np.ndarray
    undefined_lags: tuple[int, ...]
    excluded: dict[int, tuple[str, ...]]


def _pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    """Sample correlation, or None when either side has zero variance."""
    if len(a) < 2:
        return None
    da = a - a.mean()
    db = b - b.mean()
    va = float(np.dot(da, da))
    vb = float(np.dot(db, db))
    if va == 0.0 or vb == 0.0:
        return None
    return float(np.dot(da, db) / math.sqrt(va * vb))


def correlation_profile(
    dataset,
    feature: str,
    recording_type: str,
    ref_index: int = 5,
    max_lag: int = 10,
    transform: str = "raw",
) -> CorrelationProfile:
    """Correlation across participants between values at ref_index and ref_index + lag.

    Signals too short for a lag are excluded at that lag only. A lag where
    either side is constant across participants is undefined (NaN, listed in
    ``undefined_lags``); a constant reference column makes every lag undefined
    and raises UndefinedCorrelationError.
    """
    if ref_index < 0 or max_lag < 1:
        raise ValueError("need ref_index >= 0 and max_lag >= 1")
    if transform not in ("raw", "difference"):
        raise ValueError("transform must be 'raw' or 'difference'")
    signals = [
        s for (f, r), group in dataset.groups() if (f, r) == (feature, recording_type)
        for s in group
    ]
    if not signals:
        raise ValueError(f"no signals for ({feature!r}, {recording_type!r})")
    series = {
        s.participant: (difference_transform(s.values) if transform == "difference" else s.values)
        for s in signals
    }
    at_ref = np.array([v[ref_index] for v in series.values() if len(v) > ref_index])
    if len(at_ref) >= 2 and float(np.var(at_ref)) == 0.0:
        raise UndefinedCorrelationError(f"all participants constant at index {ref_index}")

    lags = np.arange(1, max_lag + 1)
    values = np.full(max_lag, np.nan)
    counts = np.zeros(max_lag, dtype=int)
    undefined: list[int] = []
    excluded: dict[int, tuple[str, ...]] = {}
    for i, lag in enumerate(lags):
        needed = ref_index + int(lag)
        usable = {p: v for p, v in series.items() if len(v) > needed}
        dropped = tuple(sorted(set(series) - set(usable)))
        if dropped:
            excluded[int(lag)] = dropped
        a = np.array([v[ref_index] for v in usable.values()])
        b = np.array([v[needed] for v in usable.values()])
        counts[i] = len(a)
        r = _pearson(a, b)
        if r is None:
            undefined.append(int(lag))
        else:
            values[i] = r
    return CorrelationProfile(
        feature, recording_type, transform, ref_index,
        lags, values, counts, tuple(undefined), excluded,
    )


def lag_autocorrelation(values: np.ndarray, lag: int = 1) -> float:
    """Temporal Pearson correlation between a series and its lag-shifted self."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("values must be 1-d")
    if lag < 1 or lag >= len(x):
        raise ValueError("need 1 <= lag < len(values)")
    r = _pearson(x[:-lag], x[lag:])
    if r is None:
        raise UndefinedCorrelationError("zero variance in lagged series")
    return r


# ---------------------------------------------------------------------------
# Report serialization


def _jsonable(report: UtilityReport) -> dict:
    record = asdict(report)
    record["excluded_participants"] = list(report.excluded_participants)
    if isinstance(report.chosen_k, dict):
        record["chosen_k"] = {str(k): v for k, v in report.chosen_k.items()}
    if math.isinf(report.utility):
        record["utility"] = "inf"
    return record


def reports_to_json(reports: Sequence[UtilityReport]) -> str:
    payload = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "reports": [_jsonable(r) for r in reports],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def reports_to_csv(reports: Sequence[UtilityReport]) -> str:
    columns = [
        "feature", "recording_type", "mechanism", "epsilon", "chunk_size",
        "chosen_k", "mean_abs_nmse", "utility", "trials", "base_seed",
        "zero_nmse_trials", "degenerate_trials", "excluded_participants",
    ]
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for report in reports:
        record = _jsonable(report)
        record["chosen_k"] = json.dumps(record["chosen_k"])
        record["excluded_participants"] = ";".join(report.excluded_participants)
        writer.writerow([record[c] for c in columns])
    return out.getvalue()
