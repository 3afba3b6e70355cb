"""Tests for Spearman correlation and the latent-dimension scan."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgeroles.correlation import (
    ConstantInput,
    CorrelationError,
    CorrelationRow,
    latent_correlation_scan,
    spearman,
)
from bridgeroles.metapath import MetapathProfile
from oracles import brute_spearman


def test_strictly_increasing_is_one():
    r, p = spearman([1.0, 2.0, 5.0, 9.0], [2.0, 4.0, 4.5, 100.0])
    assert r == 1.0
    assert p == 0.0


def test_reversed_is_minus_one():
    r, p = spearman([1, 2, 3, 4], [9, 7, 4, 1])
    assert r == -1.0
    assert p == 0.0


def test_tied_ranks_match_oracle():
    xs = [1.0, 2.0, 2.0, 3.0]
    ys = [1.0, 2.0, 3.0, 4.0]
    r, p = spearman(xs, ys)
    want_r, want_p = brute_spearman(xs, ys)
    assert abs(r - want_r) < 1e-12
    assert abs(p - want_p) < 1e-12


def test_self_correlation_is_one():
    xs = [3.0, 1.0, 4.0, 1.5, 9.0]
    r, _ = spearman(xs, xs)
    assert r == 1.0


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.integers(min_value=-50, max_value=50), min_size=3, max_size=40),
    st.integers(0, 2 ** 31 - 1),
)
def test_matches_brute_oracle(xs, seed):
    rng = np.random.default_rng(seed)
    ys = rng.integers(-50, 50, size=len(xs)).tolist()
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        return
    r, p = spearman(xs, ys)
    want_r, want_p = brute_spearman(xs, ys)
    assert abs(r - want_r) < 1e-9
    assert abs(p - want_p) < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_invariant_under_monotone_transform(seed):
    rng = np.random.default_rng(seed)
    xs = rng.normal(size=20)
    ys = rng.normal(size=20)
    r_base, p_base = spearman(xs, ys)
    r_t, p_t = spearman(np.exp(xs / 4.0) * 3.0 + 1.0, ys)
    assert abs(r_base - r_t) < 1e-12
    assert abs(p_base - p_t) < 1e-12


def test_constant_input_rejected():
    with pytest.raises(ConstantInput):
        spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ConstantInput):
        spearman([1.0, 2.0, 3.0], [5.0, 5.0, 5.0])


def test_validation_errors():
    with pytest.raises(CorrelationError):
        spearman([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(CorrelationError):
        spearman([1.0, 2.0, 3.0], [1.0, 2.0])
    with pytest.raises(CorrelationError):
        spearman([1.0, np.nan, 3.0], [1.0, 2.0, 3.0])


def test_perfect_with_ties_clamps_to_one():
    r, p = spearman([1, 1, 2, 2], [1, 1, 2, 2])
    assert r == 1.0
    assert p == 0.0


def test_row_validation():
    with pytest.raises(CorrelationError):
        CorrelationRow(dim=0, spearman_r=1.5, p_value=0.0)
    with pytest.raises(CorrelationError):
        CorrelationRow(dim=0, spearman_r=0.5, p_value=2.0)


# ---------------------------------------------------------------------------
# latent scan


def test_planted_dimension_ranks_first():
    rng = np.random.default_rng(31)
    counts = rng.integers(0, 40, size=200)
    X = rng.normal(size=(200, 32))
    X[:, 19] = counts
    rows = latent_correlation_scan(X, counts)
    assert rows[0].dim == 19
    assert rows[0].spearman_r == 1.0
    assert rows[0].p_value == 0.0


def test_noise_dimensions_stay_weak():
    rng = np.random.default_rng(44)
    counts = rng.integers(0, 40, size=500)
    X = rng.normal(size=(500, 8))
    rows = latent_correlation_scan(X, counts)
    assert all(abs(row.spearman_r) < 0.2 for row in rows)


def test_constant_dimension_reports_zero_and_sorts_last():
    rng = np.random.default_rng(5)
    counts = rng.integers(0, 10, size=50)
    X = rng.normal(size=(50, 4))
    X[:, 2] = 7.0
    rows = latent_correlation_scan(X, counts)
    tail = rows[-1]
    assert tail.dim == 2
    assert tail.spearman_r == 0.0
    assert tail.p_value == 1.0


def test_scan_accepts_profiles():
    rng = np.random.default_rng(9)
    counts = rng.integers(0, 10, size=30)
    profiles = [
        MetapathProfile(bridge_id=i, shop_paths=0, hospital_paths=0,
                        residence_paths=0, highway_count=int(c))
        for i, c in enumerate(counts)
    ]
    X = rng.normal(size=(30, 6))
    X[:, 1] = counts
    rows = latent_correlation_scan(X, profiles)
    assert rows[0].dim == 1
    assert len(rows) == 6


def test_scan_sorted_by_abs_r_then_dim():
    rng = np.random.default_rng(2)
    counts = rng.integers(0, 30, size=100).astype(float)
    X = rng.normal(size=(100, 10))
    X[:, 4] = counts
    X[:, 7] = -counts
    rows = latent_correlation_scan(X, counts)
    assert {rows[0].dim, rows[1].dim} == {4, 7}
    assert rows[0].dim == 4
    mags = [abs(row.spearman_r) for row in rows]
    assert mags == sorted(mags, reverse=True)


def test_scan_validation():
    with pytest.raises(CorrelationError):
        latent_correlation_scan(np.zeros((5, 4)), [1, 2, 3])
    with pytest.raises(CorrelationError):
        latent_correlation_scan(np.zeros((2, 4)), [1, 2])
