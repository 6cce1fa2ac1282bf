import math
from itertools import combinations

import numpy as np
import pytest

from roughsig.norms import (
    MatrixIncrements,
    VectorIncrements,
    beta_lower_bound,
    control_function,
    factorial_bound_check,
    hoelder_ratio,
    p_variation,
    p_variation_power_table,
    signature_level_increments,
)
from roughsig.processes import ProcessSpec, sample_paths
from roughsig.signature import PrefixTable


def exhaustive_p_variation(f, p):
    """Oracle: enumerate all 2^(m-1) partitions of the grid."""
    m = f.times.size - 1
    norms = np.zeros((m + 1, m + 1))
    for i in range(1, m + 1):
        norms[:i, i] = f.norms_to(i)
    best = 0.0
    interior = list(range(1, m))
    for r in range(m):
        for subset in combinations(interior, r):
            pts = [0, *subset, m]
            best = max(best, sum(norms[a, b] ** p for a, b in zip(pts, pts[1:])))
    return best ** (1.0 / p)


def test_pvar_three_point_example():
    f = VectorIncrements([0.0, 1.0, 2.0], [[0.0], [1.0], [0.0]])
    assert p_variation(f, 2.0) == pytest.approx(math.sqrt(2.0), rel=1e-15)


def test_pvar_monotone_path_p1():
    vals = np.cumsum([0.0, 0.3, 0.9, 0.1, 0.2])[:, None]
    f = VectorIncrements(np.arange(5.0), vals)
    assert p_variation(f, 1.0) == pytest.approx(float(vals[-1] - vals[0]), rel=1e-12)


def test_pvar_p1_is_total_one_step_variation():
    rng = np.random.default_rng(2)
    for _ in range(20):
        vals = rng.standard_normal((rng.integers(2, 12), 1))
        f = VectorIncrements(np.arange(len(vals), dtype=float), vals)
        assert p_variation(f, 1.0) == pytest.approx(
            float(np.abs(np.diff(vals[:, 0])).sum()), rel=1e-12
        )


def test_pvar_dp_equals_exhaustive_scalar():
    rng = np.random.default_rng(3)
    for _ in range(25):
        m = int(rng.integers(2, 12))
        vals = rng.standard_normal((m + 1, 1))
        f = VectorIncrements(np.arange(m + 1, dtype=float), vals)
        for p in (1.0, 1.5, 2.0, 2.5):
            assert p_variation(f, p) == pytest.approx(exhaustive_p_variation(f, p), rel=1e-12)


def test_pvar_dp_equals_exhaustive_tensor_increments():
    rng = np.random.default_rng(5)
    for _ in range(10):
        m = int(rng.integers(3, 11))
        vals = rng.standard_normal((m, 2))
        table = PrefixTable(vals, 2, 2)
        grid = np.arange(m + 1)
        f = signature_level_increments(table, grid, float(m), 2)
        for p in (1.2, 2.5):
            assert p_variation(f, p) == pytest.approx(exhaustive_p_variation(f, p), rel=1e-12)


def test_pvar_monotone_in_p():
    rng = np.random.default_rng(7)
    vals = rng.standard_normal((40, 1))
    f = VectorIncrements(np.arange(40.0), vals)
    out = [p_variation(f, p) for p in (1.0, 1.5, 2.0, 2.5, 3.0)]
    assert all(a >= b - 1e-12 for a, b in zip(out, out[1:]))


def test_pvar_rejects_bad_p_and_big_grids():
    f = VectorIncrements([0.0, 1.0], [[0.0], [1.0]])
    with pytest.raises(ValueError):
        p_variation(f, 0.5)


def test_power_table_superadditive():
    rng = np.random.default_rng(11)
    vals = rng.standard_normal((51, 2))
    f = VectorIncrements(np.arange(51.0), vals)
    table = p_variation_power_table(f, 2.5)
    m = 50
    for a in range(m + 1):
        for b in range(a, m + 1):
            for c in range(b, m + 1):
                # superadditivity of the p-th power in the interval argument
                assert table[a, c] >= table[a, b] + table[b, c] - 1e-9 * (1 + table[a, c])


def test_hoelder_ratio_examples():
    c = -2.5
    times = np.linspace(0.0, 3.0, 31)
    f = VectorIncrements(times, (c * times)[:, None])
    assert hoelder_ratio(f, 1.0) == pytest.approx(abs(c), rel=1e-12)
    z = VectorIncrements(times, np.zeros((31, 1)))
    assert hoelder_ratio(z, 0.5) == 0.0


def test_beta_lower_bound_against_series_oracle():
    p = 2.5
    e = (math.floor(p) + 1) / p
    # direct summation with an integral tail bound as the oracle
    M = 2_000_000
    ms = np.arange(1, M + 1, dtype=float)
    series = float(np.sum(ms**-e))
    tail_lo = ((M + 1) ** (1 - e)) / (e - 1)
    tail_hi = (M ** (1 - e)) / (e - 1)
    oracle_lo = 2 * p * p * (1 + 2.0**e * (series + tail_lo))
    oracle_hi = 2 * p * p * (1 + 2.0**e * (series + tail_hi))
    val = beta_lower_bound(p)
    assert oracle_lo - 1e-6 <= val <= oracle_hi + 1e-6
    # the spec's closed display: 2 * 6.25 * (1 + sum)
    assert val == pytest.approx(12.5 * (1 + 2.0**1.2 * (series + (tail_lo + tail_hi) / 2)), rel=1e-4)


def test_gamma_factorial_at_one():
    assert math.gamma(1.0 + 1.0) == 1.0


def _chain_signature_grid(seed=13, n=400, grid_pts=30):
    spec = ProcessSpec.markov_functional([[0.9, 0.1], [0.2, 0.8]], [[1.0, 0.0], [-1.0, 1.0]])
    vals = sample_paths(spec, n, 1, seed=seed)[0]
    table = PrefixTable(vals, 4, 2)
    grid = np.unique(np.linspace(0, n, grid_pts).round().astype(int))
    return table, grid, float(n)


def test_control_function_zero_path():
    table = PrefixTable(np.zeros((30, 1)), 2, 1)
    grid = np.arange(0, 31, 5)
    phi = control_function(table, grid, 30.0, 2.5)
    assert np.all(phi.matrix == 0.0)


def test_control_function_superadditive():
    table, grid, N = _chain_signature_grid()
    phi = control_function(table, grid, N, 2.5)
    m = grid.size
    for a in range(m):
        for b in range(a, m):
            for c in range(b, m):
                lhs = phi.matrix[a, c]
                assert lhs >= phi.matrix[a, b] + phi.matrix[b, c] - 1e-9 * (1 + lhs)


def test_control_function_rejects_small_beta():
    table, grid, N = _chain_signature_grid()
    with pytest.raises(ValueError):
        control_function(table, grid, N, 2.5, beta_const=10.0)


def test_factorial_bound_levels():
    p = 2.5
    table, grid, N = _chain_signature_grid()
    phi = control_function(table, grid, N, p)
    level_norms = {
        nu: signature_level_increments(table, grid, N, nu).matrix for nu in (1, 2, 3, 4)
    }
    report = factorial_bound_check(level_norms, phi, p, phi.beta)
    assert report.max_ratio[1] <= 1.0
    assert report.max_ratio[2] <= 1.0
    assert report.overall_max <= 1.0 + 1e-9
