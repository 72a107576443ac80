import json
import math

import numpy as np
import pytest

from gazeprivkit.datasets import Dataset, gen_ar1_dataset
from gazeprivkit.errors import DegenerateDenominatorError, UndefinedCorrelationError
from gazeprivkit.evaluation import (
    clamp_budget,
    correlation_profile,
    evaluate_mechanism,
    lag_autocorrelation,
    nmse,
    optimal_k,
    optimal_k_table,
    reports_to_csv,
    reports_to_json,
    utility_score,
)
from gazeprivkit.mechanisms import FeatureSignal, PrivacyBudget, difference_transform


def sig(values, participant="p01", feature="f", rectype="r"):
    return FeatureSignal(participant, feature, rectype, np.asarray(values, dtype=float))


def test_nmse_hand_cases():
    assert nmse([1.0, 2.0, 3.0], [2.0, 2.0, 2.0]) == pytest.approx(1 / 6, abs=1e-12)
    # opposite-sign means carry a negative NMSE
    assert nmse([1.0, 1.0], [-1.0, -1.0]) == pytest.approx(-4.0, abs=1e-12)
    assert nmse([3.0, 3.0], [3.0, 3.0]) == 0.0
    with pytest.raises(DegenerateDenominatorError):
        nmse([1.0, -1.0], [2.0, 2.0])
    with pytest.raises(ValueError):
        nmse([1.0, 2.0], [1.0])


def test_utility_score():
    assert utility_score(1 / 6) == pytest.approx(6.0)
    assert utility_score(-4.0) == 0.25
    assert utility_score(0.0) == math.inf


def test_evaluate_mechanism_bitwise_deterministic_across_threads():
    ds = gen_ar1_dataset(4, 2, 48, 0.8, participant_offset_scale=3.0, seed=11)
    budget = PrivacyBudget(epsilon=2.4, k=8)
    a = evaluate_mechanism(ds, "fpa", budget, trials=12, base_seed=5, threads=1)
    b = evaluate_mechanism(ds, "fpa", budget, trials=12, base_seed=5, threads=4)
    assert a == b
    c = evaluate_mechanism(ds, "fpa", budget, trials=12, base_seed=6, threads=1)
    assert a != c
    assert {(r.feature, r.recording_type) for r in a} == {("f01", "ar1"), ("f02", "ar1")}
    for report in a:
        assert report.trials == 12
        assert report.utility == pytest.approx(1.0 / report.mean_abs_nmse)


def test_evaluate_mechanism_reads_gpk_threads(monkeypatch):
    ds = gen_ar1_dataset(3, 1, 32, 0.5, participant_offset_scale=2.0, seed=3)
    budget = PrivacyBudget(epsilon=1.0)
    monkeypatch.setenv("GPK_THREADS", "3")
    a = evaluate_mechanism(ds, "lpa", budget, trials=8, base_seed=1)
    monkeypatch.delenv("GPK_THREADS")
    b = evaluate_mechanism(ds, "lpa", budget, trials=8, base_seed=1)
    assert a == b


def test_evaluate_mechanism_excludes_zero_mean_signals():
    ds = Dataset()
    ds.add(sig([1.0, 2.0, 3.0], "keep"))
    ds.add(sig([1.0, -1.0, 0.0], "drop"))  # mean exactly zero
    budget = PrivacyBudget(epsilon=1.0)
    (report,) = evaluate_mechanism(ds, "lpa", budget, trials=4, base_seed=0)
    assert report.excluded_participants == ("drop",)


def test_evaluate_mechanism_zero_sensitivity_hits_infinity_sentinel():
    ds = Dataset()
    ds.add(sig([2.0, 4.0], "a"))
    ds.add(sig([2.0, 4.0], "b"))  # identical signals: sensitivity 0
    budget = PrivacyBudget(epsilon=1.0)
    (report,) = evaluate_mechanism(ds, "lpa", budget, trials=5, base_seed=0)
    assert report.mean_abs_nmse == 0.0
    assert report.utility == math.inf
    assert report.zero_nmse_trials == 10  # 5 trials x 2 signals
    payload = json.loads(reports_to_json([report]))
    assert payload["reports"][0]["utility"] == "inf"
    csv_text = reports_to_csv([report])
    assert "inf" in csv_text.splitlines()[1]


def test_evaluate_mechanism_resolves_optimal_k():
    ds = gen_ar1_dataset(3, 1, 24, 0.9, participant_offset_scale=2.0, seed=9)
    budget = PrivacyBudget(epsilon=4.8, chunk_size=8)
    (report,) = evaluate_mechanism(ds, "cfpa", budget, trials=6, base_seed=2,
                                   optimal_k_trials=8)
    assert isinstance(report.chosen_k, dict)
    assert sorted(report.chosen_k) == [0, 1, 2]
    assert all(1 <= k <= 8 for k in report.chosen_k.values())
    table = optimal_k_table(ds, "cfpa", budget, trials=8, base_seed=2)
    assert table[("f01", "ar1")] == report.chosen_k


def test_clamp_budget_restricts_k_map_to_signal_grid():
    budget = PrivacyBudget(epsilon=1.0, k={0: 8, 1: 8, 2: 8}, chunk_size=8)
    clamped = clamp_budget(budget, 20, 8)  # chunks 8, 8, 4
    assert clamped.k == {0: 8, 1: 8, 2: 4}
    untouched = clamp_budget(PrivacyBudget(epsilon=1.0, k=4), 20, 8)
    assert untouched.k == 4


# ---------------------------------------------------------------------------
# Retained-coefficient search


def test_optimal_k_prefers_one_for_constant_signal():
    values = np.full(8, 7.0)
    k = optimal_k(values, "fpa", delta2=1.0, epsilon=1.0, trials=50,
                  rng=np.random.default_rng(1))
    assert k == 1


def test_optimal_k_prefers_full_spectrum_without_noise_pressure():
    rng = np.random.default_rng(2)
    values = rng.normal(size=8) + 4.0
    k = optimal_k(values, "fpa", delta2=1.0, epsilon=1e9, trials=20,
                  rng=np.random.default_rng(3))
    assert k == 8


def test_optimal_k_tie_breaks_toward_smaller_k():
    # zero sensitivity makes every k >= spectral support equally good; the
    # flat signal is fully described by its first coefficient
    values = np.full(6, 3.0)
    k = optimal_k(values, "fpa", delta2=0.0, epsilon=1.0, trials=5,
                  rng=np.random.default_rng(4))
    assert k == 1


def test_optimal_k_dcfpa_runs_on_difference_signal():
    values = np.cumsum(np.ones(16)) + 10
    k = optimal_k(values, "dcfpa", delta2=0.5, epsilon=10.0, trials=30,
                  rng=np.random.default_rng(5))
    assert 1 <= k <= 16
    with pytest.raises(ValueError):
        optimal_k(values, "lpa", delta2=0.5, epsilon=1.0)
    with pytest.raises(ValueError):
        optimal_k(values, "fpa", delta2=0.5, epsilon=1.0, trials=0)


# ---------------------------------------------------------------------------
# Correlation structure


def test_correlation_profile_tracks_ar1_decay():
    ds = gen_ar1_dataset(300, 1, 32, 0.9, seed=21)
    profile = correlation_profile(ds, "f01", "ar1", ref_index=5, max_lag=10)
    assert np.array_equal(profile.lags, np.arange(1, 11))
    assert profile.undefined_lags == ()
    for lag, value in zip(profile.lags, profile.values):
        assert value == pytest.approx(0.9 ** lag, abs=0.1)
    assert np.all(profile.sample_counts == 300)


def test_correlation_profile_difference_transform_decorrelates():
    ds = gen_ar1_dataset(300, 1, 32, 0.9, seed=22)
    profile = correlation_profile(ds, "f01", "ar1", transform="difference")
    assert np.all(np.abs(profile.values) < 0.2)


def test_correlation_profile_per_lag_exclusions():
    ds = Dataset()
    rng = np.random.default_rng(23)
    ds.add(sig(rng.normal(size=10), "long1"))
    ds.add(sig(rng.normal(size=10), "long2"))
    ds.add(sig(rng.normal(size=10), "long3"))
    ds.add(sig(rng.normal(size=8), "short"))
    profile = correlation_profile(ds, "f", "r", ref_index=5, max_lag=4)
    assert profile.excluded == {3: ("short",), 4: ("short",)}
    assert profile.sample_counts.tolist() == [4, 4, 3, 3]


def test_correlation_profile_undefined_lags_and_errors():
    ds = Dataset()
    ds.add(sig([1.0, 2.0, 5.0, 5.0], "a"))
    ds.add(sig([4.0, 0.0, 5.0, 7.0], "b"))
    profile = correlation_profile(ds, "f", "r", ref_index=0, max_lag=3)
    # at lag 2 both participants hold the constant value 5: zero variance
    assert 2 in profile.undefined_lags
    assert math.isnan(profile.values[1])
    constant_ref = Dataset()
    constant_ref.add(sig([5.0, 1.0], "a"))
    constant_ref.add(sig([5.0, 2.0], "b"))
    with pytest.raises(UndefinedCorrelationError):
        correlation_profile(constant_ref, "f", "r", ref_index=0, max_lag=1)
    with pytest.raises(ValueError, match="no signals"):
        correlation_profile(ds, "missing", "r")
    with pytest.raises(ValueError):
        correlation_profile(ds, "f", "r", max_lag=0)
    with pytest.raises(ValueError):
        correlation_profile(ds, "f", "r", transform="wavelet")


def test_lag_autocorrelation():
    x = np.array([1.0, 2.0, 1.0, 2.0, 1.0, 2.0])
    assert lag_autocorrelation(x, 1) == pytest.approx(-1.0)
    assert lag_autocorrelation(x, 2) == pytest.approx(1.0)
    ds = gen_ar1_dataset(1, 1, 100_000, 0.9, seed=24)
    values = next(iter(ds)).values
    assert lag_autocorrelation(values, 1) == pytest.approx(0.9, abs=0.02)
    diffs = difference_transform(values)[1:]
    assert lag_autocorrelation(diffs, 1) == pytest.approx((0.9 - 1) / 2, abs=0.02)
    with pytest.raises(UndefinedCorrelationError):
        lag_autocorrelation(np.ones(10), 1)
    with pytest.raises(ValueError):
        lag_autocorrelation(x, 0)
    with pytest.raises(ValueError):
        lag_autocorrelation(x, 6)


def test_report_serialization_shape():
    ds = gen_ar1_dataset(2, 1, 16, 0.5, participant_offset_scale=1.0, seed=31)
    reports = evaluate_mechanism(ds, "fpa", PrivacyBudget(epsilon=2.0, k=4),
                                 trials=3, base_seed=7)
    payload = json.loads(reports_to_json(reports))
    assert payload["schema_version"] == 1
    record = payload["reports"][0]
    assert record["mechanism"] == "fpa"
    assert record["chosen_k"] == 4
    lines = reports_to_csv(reports).splitlines()
    assert lines[0].startswith("feature,recording_type,mechanism,epsilon")
    assert len(lines) == 1 + len(reports)
