import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sncusum import blocks
from sncusum.blocks import (
    BlockConfig,
    PartialSumGrid,
    coarsened_partial_sum,
    make_block_config,
    partial_sum,
    permutation,
    permute_index,
    rescaled_time,
)
from sncusum.errors import ConfigurationError

import oracles

X4 = np.array([1.0, 2.0, 3.0, 4.0])
CFG4 = make_block_config(4, 2)


def test_default_block_rule():
    cfg = make_block_config(100)
    assert (cfg.block_length, cfg.n_blocks) == (5, 20)
    cfg = make_block_config(1000)
    assert (cfg.block_length, cfg.n_blocks) == (13, 76)


def test_block_override_passthrough():
    cfg = make_block_config(12, 2)
    assert (cfg.block_length, cfg.n_blocks) == (2, 6)


def test_block_rule_clamped_below():
    # n**(3/8) < 2 for small n; the default must still give two knots
    assert make_block_config(4).block_length == 2
    assert make_block_config(15).block_length == 2
    for n in range(16, 600):
        assert make_block_config(n).block_length >= 2


def test_block_config_errors():
    with pytest.raises(ValueError):
        make_block_config(3)
    with pytest.raises(ValueError):
        make_block_config(10, 11)
    with pytest.raises(ValueError):
        make_block_config(10, 0)
    with pytest.raises(ValueError):
        BlockConfig(n=10, block_length=3, n_blocks=2)


def test_permutation_interleaves_blocks():
    cfg = make_block_config(12, 2)  # 6 blocks of length 2
    assert [permute_index(k, cfg) for k in range(1, 7)] == [1, 3, 5, 7, 9, 11]
    assert [permute_index(k, cfg) for k in range(7, 13)] == [2, 4, 6, 8, 10, 12]


def test_permutation_remainder_fixed_points():
    cfg = make_block_config(5, 2)  # 2 blocks of 2 plus one leftover index
    assert permute_index(5, cfg) == 5


def test_permute_index_range_check():
    with pytest.raises(ValueError):
        permute_index(0, CFG4)
    with pytest.raises(ValueError):
        permute_index(5, CFG4)


def test_permutation_bijection_exhaustive():
    # every (n, block_length) up to n = 500
    for n in range(4, 501):
        for b in range(1, n + 1):
            perm = permutation(make_block_config(n, b))
            counts = np.bincount(perm, minlength=n)
            assert counts.min() == 1 and counts.max() == 1, (n, b)


def test_permutation_matches_scalar_formula():
    for n, b in [(17, 3), (40, 7), (100, 5)]:
        cfg = make_block_config(n, b)
        perm = permutation(cfg)
        assert [permute_index(k, cfg) for k in range(1, n + 1)] == list(perm + 1)


def test_partial_sum_hand_cases():
    assert partial_sum(X4, CFG4, 1, 1) == pytest.approx(2.5)
    assert partial_sum(X4, CFG4, 0.5, 1) == pytest.approx(1.0)
    assert partial_sum(X4, CFG4, 0.5, 0.5) == pytest.approx(0.25)


def test_partial_sum_rejects_bad_fractions():
    with pytest.raises(ValueError):
        partial_sum(X4, CFG4, -0.1, 0.5)
    with pytest.raises(ValueError):
        partial_sum(X4, CFG4, 0.5, 1.4)


def test_partial_sum_zero_boundaries():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(20)
    cfg = make_block_config(20, 4)
    for u in (0.0, 0.3, 1.0):
        assert partial_sum(x, cfg, 0.0, u) == 0.0
        assert partial_sum(x, cfg, u, 0.0) == 0.0


def test_ordinary_process_is_prefix_mean():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(37)
    cfg = make_block_config(37)
    grid = PartialSumGrid.compute(x, cfg)
    for j in range(38):
        expected = x[:j].sum() / 37
        assert partial_sum(x, cfg, 1.0, j / 37) == pytest.approx(expected, abs=1e-14)
        assert grid.ordinary[j] == pytest.approx(expected, abs=1e-14)


def test_single_index_increment_bound():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(30)
    cfg = make_block_config(30, 5)
    cap = np.abs(x).max() / 30
    for m in range(30):
        step = abs(
            partial_sum(x, cfg, (m + 1) / 30, 0.7) - partial_sum(x, cfg, m / 30, 0.7)
        )
        assert step <= cap + 1e-15


def test_coarsened_hand_cases():
    assert coarsened_partial_sum(X4, CFG4, 0.0, 0.7) == 0.0
    # floor(0.6 * 4 / 2) * 2 / 4 = 0.5
    assert coarsened_partial_sum(X4, CFG4, 0.6, 1) == pytest.approx(1.0)
    assert coarsened_partial_sum(X4, CFG4, 1, 0.5) == pytest.approx(
        partial_sum(X4, CFG4, 1.0, 0.5)
    )


def test_coarsened_piecewise_constant_in_t():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(60)
    cfg = make_block_config(60, 6)  # n_blocks=10, knots every 1/6
    width = cfg.n_blocks / cfg.n
    for k in range(cfg.n_knots):
        left = k * width
        for frac in (0.0, 0.37, 0.93):
            t = left + frac * width * 0.999
            assert coarsened_partial_sum(x, cfg, t, 0.8) == pytest.approx(
                coarsened_partial_sum(x, cfg, left, 0.8), abs=1e-15
            )


def test_rescaled_time_values():
    assert rescaled_time(1.0, CFG4) == 1.0
    assert rescaled_time(0.5, CFG4) == 0.0
    cfg = make_block_config(100)
    assert rescaled_time(0.6, cfg) == pytest.approx(0.5)


def test_rescaled_time_needs_two_knots():
    cfg = make_block_config(8, 1)  # n_blocks = 8, single coarse step
    with pytest.raises(ConfigurationError):
        rescaled_time(0.5, cfg)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(4, 120),
    data=st.data(),
)
def test_partial_sum_matches_brute_force(n, data):
    b = data.draw(st.integers(1, n))
    t = data.draw(st.floats(0, 1))
    s = data.draw(st.floats(0, 1))
    seed = data.draw(st.integers(0, 2**31))
    cfg = make_block_config(n, b)
    x = np.random.default_rng(seed).standard_normal(n)
    assert partial_sum(x, cfg, t, s) == pytest.approx(
        oracles.partial_sum(x, cfg, t, s), abs=1e-12
    )


def test_grid_rows_match_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(25):
        n = int(rng.integers(4, 80))
        b = int(rng.integers(1, n + 1))
        cfg = make_block_config(n, b)
        x = rng.standard_normal(n)
        grid = PartialSumGrid.compute(x, cfg)
        for k in range(cfg.n_knots + 1):
            t = k * cfg.n_blocks / n
            for j in (0, n // 3, n):
                assert grid.knot_rows[k, j] == pytest.approx(
                    oracles.partial_sum(x, cfg, t, j / n), abs=1e-12
                )


def test_grid_margins_and_coarse_value():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(50)
    cfg = make_block_config(50, 7)
    grid = PartialSumGrid.compute(x, cfg)
    margins = grid.knot_margins()
    for k in range(cfg.n_knots + 1):
        t = k * cfg.n_blocks / cfg.n
        assert margins[k] == pytest.approx(coarsened_partial_sum(x, cfg, t, 1.0))
    assert grid.coarse_value(0.55, 0.4) == pytest.approx(
        coarsened_partial_sum(x, cfg, 0.55, 0.4)
    )


def test_scale_equivariance_power_of_two_is_exact():
    rng = np.random.default_rng(6)
    x = rng.standard_normal(40)
    cfg = make_block_config(40, 4)
    for t, s in [(0.3, 0.9), (0.75, 0.4), (1.0, 1.0)]:
        assert partial_sum(4.0 * x, cfg, t, s) == 4.0 * partial_sum(x, cfg, t, s)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-50, 50), seed=st.integers(0, 2**31))
def test_scale_equivariance(c, seed):
    x = np.random.default_rng(seed).standard_normal(24)
    cfg = make_block_config(24, 3)
    scaled = partial_sum(c * x, cfg, 0.6, 0.8)
    assert scaled == pytest.approx(c * partial_sum(x, cfg, 0.6, 0.8), abs=1e-12)


def test_as_series_validation():
    with pytest.raises(ValueError):
        blocks.as_series([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        blocks.as_series([1.0, 2.0, np.nan, 4.0])
    with pytest.raises(ValueError):
        blocks.as_series(np.zeros((4, 2)))
