"""Savings arithmetic and attack-feasibility numbers."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logstamp.errors import BadParamError
from logstamp.estimator import (
    CostModel,
    DEFAULT_TOKEN_SIZE_BYTES,
    floor_to_kib,
    kdf_adjusted_margin,
    per_file_marker_bytes,
    render_margin_kv,
    render_savings_kv,
    render_savings_table,
    savings_report,
    security_margin,
)

SIX_YEARS_PLUS_MONTH = int(6 * 365.25 * 86400 + 30 * 86400)


def test_floor_to_kib():
    assert floor_to_kib(0) == 0
    assert floor_to_kib(1023) == 0
    assert floor_to_kib(1024) == 1024
    assert floor_to_kib(81920) == 81920
    assert floor_to_kib(7168 + 511) == 7168
    with pytest.raises(BadParamError):
        floor_to_kib(-1)


def test_sixteen_file_rotation_reference_numbers():
    """16 files, one rotation, one day, 5 KiB tokens, bare 32-byte hashes."""
    model = CostModel(files_per_rotation=16, days=1, price_per_timestamp=1.0)
    report = savings_report(model, marker_overhead_bytes=0)
    assert report.tokens_legacy == 16
    assert report.tokens_new == 1
    assert report.legacy_storage_bytes == 81920
    assert report.new_storage_bytes == 5120 + 16 * 4 * 32 == 7168
    assert report.legacy_storage_bytes_floored == 80 * 1024
    assert report.new_storage_bytes_floored == 7 * 1024
    assert report.storage_ratio == pytest.approx(11.43, abs=0.01)
    assert report.legacy_cost == 16.0
    assert report.new_cost == 1.0
    assert report.cost_ratio == 16.0


def test_single_file_rotation_has_no_savings():
    report = savings_report(CostModel(files_per_rotation=1, days=1), marker_overhead_bytes=0)
    assert report.tokens_legacy == report.tokens_new == 1
    assert report.legacy_storage_bytes == report.new_storage_bytes == DEFAULT_TOKEN_SIZE_BYTES
    assert report.storage_ratio == 1.0


def test_days_and_rotations_scale_linearly():
    base = savings_report(CostModel(16, 1), marker_overhead_bytes=0)
    year = savings_report(CostModel(16, 365), marker_overhead_bytes=0)
    assert year.tokens_legacy == base.tokens_legacy * 365
    assert year.tokens_new == base.tokens_new * 365
    assert year.legacy_storage_bytes == base.legacy_storage_bytes * 365
    assert year.new_storage_bytes == base.new_storage_bytes * 365
    twice = savings_report(CostModel(16, 1, rotations_per_day=2), marker_overhead_bytes=0)
    assert twice.tokens_new == 2


def test_overhead_default_is_measured_surcharge():
    from logstamp.marker import MARKER_FIXED_OVERHEAD_BYTES

    report = savings_report(CostModel(16, 1))
    assert report.marker_overhead_bytes == MARKER_FIXED_OVERHEAD_BYTES
    bare = savings_report(CostModel(16, 1), marker_overhead_bytes=0)
    assert report.new_storage_bytes == bare.new_storage_bytes + 16 * MARKER_FIXED_OVERHEAD_BYTES


def test_crossover_everywhere_from_two_files():
    """5120 + 32*n*ceil(log2 n) < 5120*n for every n >= 2 (exact integers)."""
    for n in list(range(2, 4096)) + [10**5, 10**6 - 1, 10**6]:
        report = savings_report(CostModel(n, 1), marker_overhead_bytes=0)
        assert report.new_storage_bytes < report.legacy_storage_bytes, n


@given(n=st.integers(min_value=2, max_value=10**6))
@settings(max_examples=200, deadline=None)
def test_crossover_property(n):
    report = savings_report(CostModel(n, 1), marker_overhead_bytes=0)
    assert report.new_storage_bytes < report.legacy_storage_bytes
    assert report.tokens_new < report.tokens_legacy


def test_costs_absent_without_price():
    report = savings_report(CostModel(16, 1), marker_overhead_bytes=0)
    assert report.legacy_cost is None and report.new_cost is None and report.cost_ratio is None


def test_model_validation():
    with pytest.raises(BadParamError):
        CostModel(0, 1)
    with pytest.raises(BadParamError):
        CostModel(1, 0)
    with pytest.raises(BadParamError):
        CostModel(1, 1, price_per_timestamp=-0.5)
    with pytest.raises(BadParamError):
        savings_report(CostModel(1, 1), marker_overhead_bytes=-1)


def test_per_file_marker_bytes():
    assert per_file_marker_bytes(1, 32, 0) == 0
    assert per_file_marker_bytes(16, 32, 0) == 128
    assert per_file_marker_bytes(16, 32, 100) == 228
    assert per_file_marker_bytes(1000, 67, 421) == 10 * 67 + 421


# --- feasibility ---------------------------------------------------------------


def test_published_attack_numbers():
    """256-bit hash, ~2^28 s window, 2^47 H/s attacker: short by 2^53."""
    margin = security_margin(256, 2**28 - 1, 1, 2.0**47)
    assert margin.collision_tries_log2 == 128.0
    assert math.log2(margin.window_seconds) == pytest.approx(28.0, abs=1e-9)
    assert margin.required_rate_log2 == pytest.approx(100.0, abs=1e-9)
    assert margin.available_rate_log2 == pytest.approx(47.0, abs=1e-9)
    assert margin.gap_log2 == pytest.approx(53.0, abs=1e-9)
    assert not margin.feasible


def test_realistic_retention_window_rounds_up_to_pow2_28():
    """A 6-year retention plus a month of handling is ~2^27.5 s; treating the
    window as a clean 2^28 rounds it up, which only makes the verdict more
    conservative (a larger window can only help the attacker)."""
    margin = security_margin(256, SIX_YEARS_PLUS_MONTH, 14 * 86400, 2.0**47)
    assert math.log2(margin.window_seconds) == pytest.approx(27.5, abs=0.1)
    assert margin.gap_log2 == pytest.approx(53.5, abs=0.1)
    rounded = security_margin(256, 2**28 - 1, 1, 2.0**47)
    assert rounded.gap_log2 == pytest.approx(53.0, abs=1e-9)
    assert margin.gap_log2 > rounded.gap_log2
    assert not margin.feasible and not rounded.feasible


def test_feasibility_threshold_is_exact():
    # with a 127-bit hash and a 2-second window, 2^62.5 H/s is exactly enough
    margin = security_margin(127, 1, 1, 2.0**62.5)
    assert margin.gap_log2 == pytest.approx(0.0, abs=1e-9)
    assert margin.feasible
    slower = security_margin(127, 1, 1, 2.0**62.4)
    assert not slower.feasible


def test_weak_hash_is_feasible():
    # 64-bit hash: Q = 2^32, required only 2^4 against a 2^28 window
    margin = security_margin(64, 2**28 - 1, 1, 2.0**47)
    assert margin.collision_tries_log2 == 32.0
    assert margin.required_rate_log2 == pytest.approx(4.0, abs=1e-9)
    assert margin.feasible


def test_vanishing_attacker_rate_is_infeasible():
    margin = security_margin(256, 2**28 - 1, 1, 1e-12)
    assert margin.available_rate_log2 < 0
    assert not margin.feasible


def test_margin_monotonicity():
    base = security_margin(256, 2**28 - 1, 1, 2.0**47)
    stronger_hash = security_margin(320, 2**28 - 1, 1, 2.0**47)
    assert stronger_hash.gap_log2 > base.gap_log2
    longer_window = security_margin(256, 2**30 - 1, 1, 2.0**47)
    assert longer_window.required_rate_log2 < base.required_rate_log2


def test_kdf_identity_at_one_repetition():
    base = security_margin(256, 2**28 - 1, 1, 2.0**47)
    same = kdf_adjusted_margin(base, 1)
    assert same == base


def test_kdf_widens_gap_by_log2_repetitions():
    base = security_margin(256, 2**28 - 1, 1, 2.0**47)
    hardened = kdf_adjusted_margin(base, 2**20)
    assert hardened.gap_log2 == pytest.approx(base.gap_log2 + 20.0, abs=1e-9)
    assert hardened.available_rate_log2 == pytest.approx(27.0, abs=1e-9)
    assert hardened.kdf_repetitions == 2**20
    assert hardened.required_rate_log2 == base.required_rate_log2


def test_kdf_adjustment_composes():
    base = security_margin(256, 2**28 - 1, 1, 2.0**47)
    twice = kdf_adjusted_margin(kdf_adjusted_margin(base, 2**10), 2**10)
    once = kdf_adjusted_margin(base, 2**20)
    assert twice.gap_log2 == pytest.approx(once.gap_log2, abs=1e-9)
    assert twice.kdf_repetitions == once.kdf_repetitions


def test_margin_validation():
    with pytest.raises(BadParamError):
        security_margin(0, 1, 1, 1.0)
    with pytest.raises(BadParamError):
        security_margin(256, 0, 1, 1.0)
    with pytest.raises(BadParamError):
        security_margin(256, 1, 1, 0.0)
    base = security_margin(256, 1, 1, 1.0)
    with pytest.raises(BadParamError):
        kdf_adjusted_margin(base, 0)


@given(
    bits=st.integers(min_value=8, max_value=512),
    retention=st.integers(min_value=1, max_value=2**35),
    handling=st.integers(min_value=1, max_value=2**20),
    rate_log2=st.floats(min_value=0.0, max_value=90.0),
)
@settings(max_examples=100, deadline=None)
def test_feasible_iff_gap_nonpositive(bits, retention, handling, rate_log2):
    margin = security_margin(bits, retention, handling, 2.0**rate_log2)
    assert margin.feasible == (margin.gap_log2 <= 0)
    assert margin.required_rate_log2 == pytest.approx(
        bits / 2 - math.log2(retention + handling), abs=1e-9
    )


# --- rendering -----------------------------------------------------------------


def test_table_contains_reference_cells():
    report = savings_report(CostModel(16, 1, price_per_timestamp=1.0), marker_overhead_bytes=0)
    table = render_savings_table(report)
    assert "81920" in table and "7168" in table
    assert "80" in table and "7" in table
    assert "storage_ratio=11.43" in table
    assert "cost_ratio=16.00" in table


def test_table_notes_no_savings_for_single_file():
    table = render_savings_table(savings_report(CostModel(1, 1), marker_overhead_bytes=0))
    assert "no savings" in table


def test_kv_renderings_are_line_oriented():
    report = savings_report(CostModel(16, 1), marker_overhead_bytes=0)
    kv = render_savings_kv(report)
    assert "legacy_storage_bytes=81920" in kv.split("\n")
    assert "cost_ratio" not in kv  # no price given
    margin_kv = render_margin_kv(security_margin(256, 2**28 - 1, 1, 2.0**47))
    assert "gap_log2=53.000" in margin_kv.split("\n")
    assert "verdict=INFEASIBLE" in margin_kv.split("\n")
