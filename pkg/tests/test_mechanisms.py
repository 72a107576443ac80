import math

import numpy as np
import pytest

from gazeprivkit.datasets import Dataset
from gazeprivkit.mechanisms import (
    FeatureSignal,
    PrivacyBudget,
    SensitivityTable,
    aggregate_transform,
    budget_with,
    cfpa,
    chunk_boundaries,
    composed_epsilon,
    compute_sensitivity_table,
    dcfpa,
    difference_transform,
    fpa,
    fpa_scale,
    laplace_from_uniform,
    laplace_sample,
    laplace_vector,
    lpa,
    lpa_scale,
    privatize,
    query_sensitivity,
)


def sig(values, participant="p01", feature="f", rectype="r"):
    return FeatureSignal(participant, feature, rectype, np.asarray(values, dtype=float))


def raw_table(delta1, delta2, chunks=1):
    table = SensitivityTable(representation="raw")
    for ci in range(chunks):
        table.set("f", "r", ci, delta1, delta2)
    return table


# ---------------------------------------------------------------------------
# Laplace sampling


def test_inverse_cdf_hand_values():
    assert laplace_from_uniform(0.5, 3.0) == 0.0  # exact, not approximate
    assert laplace_from_uniform(0.25, 1.0) == pytest.approx(math.log(0.5), abs=1e-15)
    assert laplace_from_uniform(0.75, 1.0) == pytest.approx(-math.log(0.5), abs=1e-15)
    assert laplace_from_uniform(0.9, 2.0) == pytest.approx(-2.0 * math.log(0.2), abs=1e-12)
    with pytest.raises(ValueError):
        laplace_from_uniform(0.0, 1.0)
    with pytest.raises(ValueError):
        laplace_from_uniform(1.0, 1.0)


def test_vector_matches_scalar_inverse_cdf():
    rng = np.random.default_rng(21)
    u = np.random.default_rng(21).random(64)
    got = laplace_vector(rng, 2.5, 64)
    want = np.array([laplace_from_uniform(v, 2.5) for v in u])
    assert np.array_equal(got, want)


def test_sampler_moments():
    rng = np.random.default_rng(4)
    draws = laplace_vector(rng, 3.0, 1_000_000)
    assert 17.64 <= float(np.var(draws)) <= 18.36  # 2 * lam^2 = 18 within 2%
    assert -0.02 <= float(np.mean(draws)) <= 0.02


def test_sampler_determinism_and_zero_scale():
    a = laplace_vector(np.random.default_rng(7), 1.3, 10)
    b = laplace_vector(np.random.default_rng(7), 1.3, 10)
    assert np.array_equal(a, b)
    assert laplace_sample(np.random.default_rng(7), 1.3) == a[0]
    assert np.array_equal(laplace_vector(np.random.default_rng(7), 0.0, 5), np.zeros(5))


def test_noise_scales():
    assert lpa_scale(4.8, 0.48) == 10.0
    assert fpa_scale(400, 4, 2.0, 2.4) == pytest.approx(100 / 3, rel=1e-12)
    assert fpa_scale(16, 16, 0.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        fpa_scale(4, 5, 1.0, 1.0)
    with pytest.raises(ValueError):
        lpa_scale(1.0, 0.0)


# ---------------------------------------------------------------------------
# Sensitivity


def test_query_sensitivity_hand_values():
    assert query_sensitivity([[1.0, 2.0], [3.0, 4.0]], 1) == 4.0
    assert query_sensitivity([[1.0, 2.0], [3.0, 4.0]], 2) == pytest.approx(math.sqrt(8))
    # ragged signals are zero-padded to the longest
    assert query_sensitivity([[1.0, 2.0, 3.0], [1.0, 2.0]], 1) == 3.0
    assert query_sensitivity([[5.0, 5.0]], 1) == 0.0


def test_query_sensitivity_is_max_over_all_pairs():
    rng = np.random.default_rng(31)
    signals = [rng.normal(size=12) for _ in range(6)]
    for w, norm in ((1, 1), (2, 2)):
        want = max(
            float(np.linalg.norm(a - b, ord=norm))
            for i, a in enumerate(signals)
            for b in signals[i + 1:]
        )
        assert query_sensitivity(signals, w) == pytest.approx(want, rel=1e-12)


def test_sensitivity_norm_ordering():
    rng = np.random.default_rng(32)
    signals = [rng.normal(size=20) for _ in range(5)]
    d1 = query_sensitivity(signals, 1)
    d2 = query_sensitivity(signals, 2)
    assert d2 <= d1 <= math.sqrt(20) * d2 + 1e-12


def test_sensitivity_table_from_dataset():
    ds = Dataset()
    ds.add(sig([1.0, 2.0, 3.0, 4.0], "a"))
    ds.add(sig([0.0, 0.0, 0.0, 0.0], "b"))
    table = compute_sensitivity_table(ds, chunk_size=2)
    assert table.delta("f", "r", 0, 1) == 3.0  # |1|+|2| over first chunk
    assert table.delta("f", "r", 1, 1) == 7.0
    assert table.delta("f", "r", 0, 2) == pytest.approx(math.sqrt(5))
    with pytest.raises(ValueError):
        table.delta("f", "r", 2, 1)
    with pytest.raises(ValueError):
        table.delta("g", "r", 0, 1)


def test_sensitivity_table_difference_representation():
    ds = Dataset()
    ds.add(sig([1.0, 3.0], "a"))
    ds.add(sig([2.0, 2.0], "b"))
    table = compute_sensitivity_table(ds, representation="difference")
    # difference signals are [1, 2] and [2, 0]
    assert table.delta("f", "r", 0, 1) == 3.0
    assert table.representation == "difference"


def test_zero_min_feature_exclusion():
    ds = Dataset()
    ds.add(sig([0.0, 1.0], "a", feature="count"))
    ds.add(sig([0.0, 2.0], "b", feature="count"))
    ds.add(sig([1.0, 2.0], "a", feature="level"))
    ds.add(sig([2.0, 3.0], "b", feature="level"))
    table = compute_sensitivity_table(ds, exclude_zero_min_features=True)
    assert ("count", "r", 0) not in table.entries
    assert ("level", "r", 0) in table.entries


# ---------------------------------------------------------------------------
# Chunking and the difference / aggregation pair


def test_chunk_boundaries():
    assert chunk_boundaries(100, 32) == [(0, 32), (32, 64), (64, 96), (96, 100)]
    assert chunk_boundaries(32, 32) == [(0, 32)]
    assert chunk_boundaries(5, 128) == [(0, 5)]
    assert chunk_boundaries(1, 1) == [(0, 1)]
    with pytest.raises(ValueError):
        chunk_boundaries(0, 32)


def test_difference_and_aggregate():
    assert np.array_equal(difference_transform([5.0, 7.0, 4.0]), [5.0, 2.0, -3.0])
    assert np.array_equal(aggregate_transform([5.0, 2.0, -3.0]), [5.0, 7.0, 4.0])
    ints = np.arange(-30.0, 30.0)  # integer-valued floats invert exactly
    assert np.array_equal(aggregate_transform(difference_transform(ints)), ints)
    rng = np.random.default_rng(41)
    x = rng.normal(size=200) * 100
    back = aggregate_transform(difference_transform(x))
    assert np.max(np.abs(back - x)) <= 1e-12 * max(1.0, float(np.max(np.abs(x))))


# ---------------------------------------------------------------------------
# Mechanisms


def test_lpa_matches_manual_noise():
    signal = sig(np.arange(8.0))
    budget = PrivacyBudget(epsilon=0.48)
    out = lpa(signal, 4.8, budget, np.random.default_rng(5))
    noise = laplace_vector(np.random.default_rng(5), 10.0, 8)
    assert np.array_equal(out.values, signal.values + noise)
    assert out.participant == signal.participant


def test_fpa_consumes_real_then_imaginary_noise():
    signal = sig(np.sin(np.arange(16.0)))
    budget = PrivacyBudget(epsilon=2.0, k=4)
    out = fpa(signal, 1.5, budget, np.random.default_rng(9))
    rng = np.random.default_rng(9)
    lam = fpa_scale(16, 4, 1.5, 2.0)
    kept = np.fft.fft(signal.values)[:4]
    kept = kept + laplace_vector(rng, lam, 4) + 1j * laplace_vector(rng, lam, 4)
    padded = np.zeros(16, dtype=complex)
    padded[:4] = kept
    assert np.array_equal(out.values, np.fft.ifft(padded).real)


def test_zero_sensitivity_identity():
    rng = np.random.default_rng(51)
    for _ in range(100):
        n = int(rng.integers(1, 130))
        values = rng.normal(size=n) * 10
        signal = sig(values)
        budget = PrivacyBudget(epsilon=1.0, k=n, chunk_size=None)
        out_lpa = lpa(signal, 0.0, budget, rng)
        assert np.array_equal(out_lpa.values, values)
        out_fpa = fpa(signal, 0.0, budget, rng)
        assert np.max(np.abs(out_fpa.values - values)) <= 1e-9
        chunked = budget_with(budget, chunk_size=32, k=None)
        table = SensitivityTable(chunk_size=32, representation="raw")
        dtable = SensitivityTable(chunk_size=32, representation="difference")
        ks = {}
        for ci, (s, e) in enumerate(chunk_boundaries(n, 32)):
            table.set("f", "r", ci, 0.0, 0.0)
            dtable.set("f", "r", ci, 0.0, 0.0)
            ks[ci] = e - s
        chunked = budget_with(chunked, k=ks)
        out_cfpa = cfpa(signal, table, chunked, rng)
        assert np.max(np.abs(out_cfpa.values - values)) <= 1e-9
        out_dcfpa = dcfpa(signal, dtable, chunked, rng)
        assert np.max(np.abs(out_dcfpa.values - values)) <= 1e-7


def test_cfpa_equals_fpa_when_chunk_covers_signal():
    rng = np.random.default_rng(61)
    for case in range(100):
        n = int(rng.integers(2, 200))
        values = rng.normal(size=n) * float(rng.uniform(0.5, 20))
        signal = sig(values)
        delta2 = float(rng.uniform(0.1, 5))
        k = int(rng.integers(1, n + 1))
        chunk = int(rng.integers(n, 2 * n + 1))
        table = raw_table(delta2, delta2)
        seed = 1000 + case
        out_fpa = fpa(signal, delta2, PrivacyBudget(epsilon=0.9, k=k),
                      np.random.default_rng(seed))
        out_cfpa = cfpa(signal, table, PrivacyBudget(epsilon=0.9, k=k, chunk_size=chunk),
                        np.random.default_rng(seed))
        assert np.array_equal(out_fpa.values, out_cfpa.values)


def test_cfpa_chunks_use_per_chunk_sensitivities_and_independent_noise():
    values = np.arange(64.0)
    signal = sig(values)
    table = raw_table(1.0, 1.0, chunks=2)
    budget = PrivacyBudget(epsilon=1.0, k=2, chunk_size=32)
    out = cfpa(signal, table, budget, np.random.default_rng(3))
    # manual: sequential rng across chunks, each chunk its own transform
    rng = np.random.default_rng(3)
    manual = np.empty(64)
    for start in (0, 32):
        chunk = values[start:start + 32]
        lam = fpa_scale(32, 2, 1.0, 1.0)
        kept = np.fft.fft(chunk)[:2]
        kept = kept + laplace_vector(rng, lam, 2) + 1j * laplace_vector(rng, lam, 2)
        padded = np.zeros(32, dtype=complex)
        padded[:2] = kept
        manual[start:start + 32] = np.fft.ifft(padded).real
    assert np.array_equal(out.values, manual)


def test_dcfpa_round_trip_structure():
    values = np.cumsum(np.ones(48)) + 5.0
    signal = sig(values)
    table = SensitivityTable(chunk_size=16, representation="difference")
    for ci in range(3):
        table.set("f", "r", ci, 1.0, 1.0)
    budget = PrivacyBudget(epsilon=4.0, k=1, chunk_size=16)
    out = dcfpa(signal, table, budget, np.random.default_rng(8))
    rng = np.random.default_rng(8)
    manual = np.empty(48)
    for start in (0, 16, 32):
        chunk = values[start:start + 16]
        diffs = difference_transform(chunk)
        lam = fpa_scale(16, 1, 1.0, 4.0)
        kept = np.fft.fft(diffs)[:1]
        kept = kept + laplace_vector(rng, lam, 1) + 1j * laplace_vector(rng, lam, 1)
        padded = np.zeros(16, dtype=complex)
        padded[:1] = kept
        manual[start:start + 16] = np.cumsum(np.fft.ifft(padded).real)
    assert np.array_equal(out.values, manual)
    with pytest.raises(ValueError):
        dcfpa(signal, raw_table(1.0, 1.0, chunks=3), budget, np.random.default_rng(8))


def test_fpa_noise_shrinks_with_epsilon():
    values = 10.0 + np.sin(np.arange(128.0) / 5)
    signal = sig(values)
    errors = {}
    for epsilon in (0.5, 5.0, 50.0):
        budget = PrivacyBudget(epsilon=epsilon, k=128)
        mses = []
        for trial in range(40):
            out = fpa(signal, 2.0, budget, np.random.default_rng((19, trial)))
            mses.append(float(np.mean((out.values - values) ** 2)))
        errors[epsilon] = float(np.mean(mses))
    assert errors[0.5] > errors[5.0] > errors[50.0]


def test_privatize_dispatch_and_unknown_mechanism():
    signal = sig(np.arange(6.0) + 1)
    table = raw_table(2.0, 1.0)
    budget = PrivacyBudget(epsilon=1.0, k=3)
    direct = fpa(signal, 1.0, budget, np.random.default_rng(2))
    routed = privatize(signal, "fpa", table, budget, np.random.default_rng(2))
    assert np.array_equal(direct.values, routed.values)
    with pytest.raises(ValueError):
        privatize(signal, "dp-magic", table, budget, np.random.default_rng(2))


# ---------------------------------------------------------------------------
# Budgets and composition


def test_budget_validation():
    with pytest.raises(ValueError):
        PrivacyBudget(epsilon=0.0)
    with pytest.raises(ValueError):
        PrivacyBudget(epsilon=1.0, k=0)
    with pytest.raises(ValueError):
        PrivacyBudget(epsilon=1.0, chunk_size=0)
    with pytest.raises(ValueError):
        PrivacyBudget(epsilon=1.0, accounting="amortized")


def test_k_for_chunk_clamps_only_trailing_chunks():
    budget = PrivacyBudget(epsilon=1.0, k=16, chunk_size=32)
    assert budget.k_for_chunk(0, 32) == 16
    assert budget.k_for_chunk(3, 4) == 4  # trailing remainder shorter than k
    with pytest.raises(ValueError):
        # a full-length chunk cannot accommodate a larger k; that is a config error
        PrivacyBudget(epsilon=1.0, k=40, chunk_size=32).k_for_chunk(0, 32)
    mapped = PrivacyBudget(epsilon=1.0, k={0: 4, 1: 2}, chunk_size=8)
    assert mapped.k_for_chunk(1, 8) == 2
    with pytest.raises(ValueError):
        mapped.k_for_chunk(2, 8)
    with pytest.raises(ValueError):
        PrivacyBudget(epsilon=1.0, k={0: 9}, chunk_size=8).k_for_chunk(0, 8)


def test_composed_epsilon():
    chunked = PrivacyBudget(epsilon=0.48, chunk_size=32, k=1)
    assert composed_epsilon("lpa", PrivacyBudget(epsilon=2.4), 100) == 2.4
    assert composed_epsilon("fpa", PrivacyBudget(epsilon=0.48, k=1), 512) == 0.48
    assert composed_epsilon("cfpa", chunked, 512) == 0.48
    assert composed_epsilon("dcfpa", chunked, 512) == 0.48  # single release
    sequential = budget_with(chunked, epsilon=0.015, accounting="sequential")
    assert composed_epsilon("dcfpa", sequential, 512) == pytest.approx(0.48)
    # a signal shorter than the chunk composes over its true length
    assert composed_epsilon("dcfpa", sequential, 10) == pytest.approx(0.15)
    with pytest.raises(ValueError):
        composed_epsilon("nope", chunked, 10)


def test_feature_signal_validation():
    with pytest.raises(ValueError):
        FeatureSignal("p", "f", "r", np.array([]))
    with pytest.raises(ValueError):
        FeatureSignal("p", "f", "r", np.array([1.0, np.inf]))
    with pytest.raises(ValueError):
        FeatureSignal("p", "f", "r", np.ones((2, 2)))
    with pytest.raises(ValueError):
        FeatureSignal("p", "f", "r", np.ones(3), step_seconds=0.0)
    s = sig([1.0, 2.0])
    assert len(s) == 2
    replaced = s.with_values(np.array([3.0, 4.0]))
    assert replaced.feature == s.feature
    assert np.array_equal(replaced.values, [3.0, 4.0])
