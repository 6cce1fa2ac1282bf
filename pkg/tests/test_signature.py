import numpy as np
import pytest

from roughsig.signature import (
    PathSample,
    PrefixTable,
    brute_force_signature,
    batch_terminal_signature,
    iterated_sum_prefix,
    signature_increment,
    signature_of_steps,
    suspension_signature,
)
from roughsig.processes import ProcessSpec, RngStream, SuspensionSpec, sample_suspension
from roughsig.tensor import chen_concat


def _levels(tensor):
    return [lvl.coeffs for lvl in tensor.levels]


def _assert_tensor_close(x, y, atol=1e-12):
    for a, b in zip(_levels(x), _levels(y)):
        scale = max(1.0, np.abs(b).max())
        np.testing.assert_allclose(a, b, rtol=0, atol=atol * scale)


def test_prefix_empty_path():
    out = iterated_sum_prefix(PathSample(dim=1, values=np.zeros((0, 1))), 2)
    assert len(out) == 1
    assert out[0].level(0).coeffs.tolist() == [1.0]
    assert out[0].level(1).coeffs.tolist() == [0.0]
    assert out[0].level(2).coeffs.tolist() == [0.0]


def test_prefix_worked_example_d1():
    out = iterated_sum_prefix(PathSample(dim=1, values=[[1.0], [2.0]]), 3)
    last = out[-1]
    assert last.level(1).coeffs.tolist() == [3.0]
    assert last.level(2).coeffs.tolist() == [2.0]
    assert last.level(3).coeffs.tolist() == [0.0]


def test_prefix_worked_example_d2():
    out = iterated_sum_prefix(PathSample(dim=2, values=[[1.0, 0.0], [0.0, 1.0]]), 2)
    lvl2 = out[-1].level(2)
    assert lvl2[(1, 2)] == 1.0
    assert lvl2[(2, 1)] == 0.0
    assert lvl2[(1, 1)] == 0.0
    assert lvl2[(2, 2)] == 0.0


def test_signature_increment_empty_window():
    xs = PathSample(dim=1, values=[[1.0], [2.0], [3.0]])
    sig = signature_increment(xs, 0.5, 0.5, 2, scale=1.0)
    assert sig.tensor.level(0).coeffs.tolist() == [1.0]
    assert sig.tensor.level(1).coeffs.tolist() == [0.0]
    assert sig.tensor.level(2).coeffs.tolist() == [0.0]


def test_signature_increment_worked_example():
    xs = PathSample(dim=1, values=[[1.0], [2.0], [3.0]])
    sig = signature_increment(xs, 0.0, 3.0, 2, scale=1.0)
    assert sig.tensor.level(1).coeffs.tolist() == [6.0]
    assert sig.tensor.level(2).coeffs.tolist() == [11.0]


def test_signature_increment_normalization():
    xs = PathSample(dim=1, values=[[1.0], [2.0], [3.0]])
    sig = signature_increment(xs, 0.0, 0.75, 2, scale=4.0)
    # window [0, 3): levels scale by N^(-nu/2)
    assert sig.tensor.level(1).coeffs[0] == pytest.approx(6.0 / 2.0, rel=1e-15)
    assert sig.tensor.level(2).coeffs[0] == pytest.approx(11.0 / 4.0, rel=1e-15)


def test_signature_window_out_of_range():
    xs = PathSample(dim=1, values=[[1.0], [2.0]])
    with pytest.raises(ValueError):
        signature_increment(xs, 0.0, 3.0, 2, scale=1.0)
    with pytest.raises(ValueError):
        signature_increment(xs, -0.5, 1.0, 2, scale=1.0)


def test_chen_consistency_discrete_exact():
    rng = np.random.default_rng(7)
    xs = PathSample(dim=2, values=rng.standard_normal((200, 2)))
    for s, u, t in [(0.0, 50.0, 200.0), (10.0, 11.0, 199.0), (0.0, 0.0, 13.0)]:
        left = signature_increment(xs, s, u, 3, scale=1.0).tensor
        right = signature_increment(xs, u, t, 3, scale=1.0).tensor
        whole = signature_increment(xs, s, t, 3, scale=1.0).tensor
        _assert_tensor_close(chen_concat(left, right), whole)


def test_oracle_equivalence_random_integer_sequences():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        n = int(rng.integers(0, 11))
        d = int(rng.integers(1, 4))
        L = int(rng.integers(1, 5))
        vals = rng.integers(-3, 4, size=(n, d)).astype(float)
        xs = PathSample(dim=d, values=vals)
        direct = brute_force_signature(xs, depth=L)
        rec = iterated_sum_prefix(xs, L)[-1]
        for nu in range(L + 1):
            np.testing.assert_array_equal(direct.level(nu).coeffs, rec.level(nu).coeffs)


def test_oracle_equivalence_float_inputs():
    rng = np.random.default_rng(99)
    for _ in range(20):
        n = int(rng.integers(1, 12))
        vals = rng.standard_normal((n, 2))
        xs = PathSample(dim=2, values=vals)
        direct = brute_force_signature(xs, depth=3)
        rec = iterated_sum_prefix(xs, 3)[-1]
        _assert_tensor_close(direct, rec, atol=1e-10)


def test_brute_force_guards():
    xs = PathSample(dim=1, values=np.ones((20, 1)))
    with pytest.raises(ValueError):
        brute_force_signature(xs, depth=2)
    xs = PathSample(dim=1, values=np.ones((5, 1)))
    with pytest.raises(ValueError):
        brute_force_signature(xs, depth=5)


def test_single_element_sequence():
    xs = PathSample(dim=2, values=[[2.0, -1.0]])
    out = brute_force_signature(xs, depth=3)
    assert out.level(1).coeffs.tolist() == [2.0, -1.0]
    assert np.all(out.level(2).coeffs == 0.0)
    assert np.all(out.level(3).coeffs == 0.0)


def test_reversal_antisymmetry_shuffle_identity():
    rng = np.random.default_rng(12)
    vals = rng.integers(-4, 5, size=(9, 1)).astype(float)
    fwd = brute_force_signature(PathSample(dim=1, values=vals), depth=2)
    rev = brute_force_signature(PathSample(dim=1, values=vals[::-1]), depth=2)
    total = vals.sum()
    sq = (vals**2).sum()
    assert fwd.level(2).coeffs[0] + rev.level(2).coeffs[0] == pytest.approx(
        total**2 - sq, rel=1e-12
    )


def test_dilation_scaling():
    rng = np.random.default_rng(4)
    vals = rng.standard_normal((50, 2))
    c = 1.7
    base = iterated_sum_prefix(PathSample(dim=2, values=vals), 4)[-1]
    scaled = iterated_sum_prefix(PathSample(dim=2, values=c * vals), 4)[-1]
    for nu in range(5):
        np.testing.assert_allclose(
            scaled.level(nu).coeffs,
            c**nu * base.level(nu).coeffs,
            rtol=1e-12,
        )


def test_prefix_table_increment_matches_direct():
    rng = np.random.default_rng(8)
    vals = rng.standard_normal((300, 2))
    table = PrefixTable(vals, 3, 2)
    xs = PathSample(dim=2, values=vals)
    for a, b in [(0, 300), (17, 120), (55, 56), (100, 100)]:
        direct = signature_increment(xs, float(a), float(b), 3, scale=1.0).tensor
        via_inverse = table.increment(a, b)
        _assert_tensor_close(via_inverse, direct, atol=1e-10)


def test_pairwise_window_matches_sequential():
    rng = np.random.default_rng(10)
    steps = rng.standard_normal((5000, 2))
    full = signature_of_steps(steps, 3, 2)
    table = PrefixTable(steps, 3, 2)
    seq = table.prefix_arrays(5000)
    for a, b in zip(full, seq):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def _wave_path(dt, horizon=3.0):
    grid = np.arange(int(round(horizon / dt))) * dt
    vals = np.stack([np.sin(grid), np.cos(2 * grid)], axis=1)
    return PathSample(dim=2, values=vals, kind="continuous", dt=dt)


def test_continuous_chen_exact_on_aligned_splits():
    xs = _wave_path(0.01)
    s, u, t = 0.0, 1.25, 2.5  # multiples of dt
    left = signature_increment(xs, s, u, 3, scale=1.0).tensor
    right = signature_increment(xs, u, t, 3, scale=1.0).tensor
    whole = signature_increment(xs, s, t, 3, scale=1.0).tensor
    _assert_tensor_close(chen_concat(left, right), whole)


def test_continuous_chen_first_order_in_dt():
    s, u, t = 0.0, np.pi / 3.0, 2.6  # split off the grid
    residuals = {}
    for dt in (1e-2, 1e-3):
        xs = _wave_path(dt)
        left = signature_increment(xs, s, u, 2, scale=1.0).tensor
        right = signature_increment(xs, u, t, 2, scale=1.0).tensor
        whole = signature_increment(xs, s, t, 2, scale=1.0).tensor
        combined = chen_concat(left, right)
        residuals[dt] = max(
            np.abs(a - b).max() for a, b in zip(_levels(combined), _levels(whole))
        )
    assert residuals[1e-2] / residuals[1e-3] >= 8.0


def test_degenerate_vanishing_under_refinement():
    xs = _wave_path(1e-3, horizon=2.0)
    sums = []
    for mesh in (0.5, 0.25, 0.125):
        cuts = np.arange(0.0, 2.0 + 1e-12, mesh)
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            t2 = signature_increment(xs, a, b, 2, scale=1.0).tensor.level(2)
            total += np.linalg.norm(t2.coeffs)
        sums.append(total)
    assert sums[0] > sums[1] > sums[2]


def test_batch_terminal_matches_single():
    rng = np.random.default_rng(21)
    steps = rng.standard_normal((5, 40, 2))
    batch = batch_terminal_signature(steps, 3)
    for r in range(5):
        single = iterated_sum_prefix(PathSample(dim=2, values=steps[r]), 3)[-1]
        for nu in range(4):
            np.testing.assert_allclose(batch[nu][r], single.level(nu).coeffs, rtol=1e-12)


def _unit_roof_suspension():
    base = ProcessSpec.markov_functional(
        [[0.5, 0.5], [0.5, 0.5]], np.zeros((2, 1))
    )
    return SuspensionSpec(base=base, roof=np.array([1.0, 1.0]), fiber_g=[[1.0], [-1.0]])


def test_suspension_unit_roof_reduces_to_continuous():
    spec = _unit_roof_suspension()
    samp = sample_suspension(spec, 40.0, RngStream(5), fiber_dt=0.1)
    direct = signature_increment(samp.fiber, 0.2, 0.9, 2, scale=16.0)
    via = suspension_signature(samp, 0.2, 0.9, 2, 16.0)
    _assert_tensor_close(via.tensor, direct.tensor)


def test_suspension_identity_at_equal_times():
    spec = _unit_roof_suspension()
    samp = sample_suspension(spec, 30.0, RngStream(5), fiber_dt=0.1)
    sig = suspension_signature(samp, 0.4, 0.4, 2, 8.0)
    assert sig.tensor.level(0).coeffs.tolist() == [1.0]
    assert np.all(sig.tensor.level(1).coeffs == 0.0)


def test_suspension_level1_quadrature_oracle():
    base = ProcessSpec.markov_functional([[0.3, 0.7], [0.6, 0.4]], np.zeros((2, 1)))
    spec = SuspensionSpec(base=base, roof=np.array([0.5, 1.5]), fiber_g=[[1.0], [-0.5]])
    samp = sample_suspension(spec, 100.0, RngStream(9), fiber_dt=0.01)
    N, s, t = 10.0, 0.3, 0.8
    sig = suspension_signature(samp, s, t, 2, N)
    tb = samp.tau_bar
    # independent left-point quadrature of the fiber over the window
    lo, hi = s * N * tb, t * N * tb
    lefts = lo + 0.01 * np.arange(int(np.floor((hi - lo) / 0.01 + 1e-9)))
    idx = np.floor(lefts / 0.01 + 1e-9).astype(int)
    quad = samp.fiber.values[idx].sum(axis=0) * 0.01
    np.testing.assert_allclose(
        sig.tensor.level(1).coeffs, quad / np.sqrt(N), rtol=1e-10
    )
