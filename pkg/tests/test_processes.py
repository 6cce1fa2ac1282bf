import numpy as np
import pytest

from roughsig.processes import (
    ProcessSpec,
    RngStream,
    SuspensionSpec,
    approximation_rate,
    mixing_coefficients,
    renewal_counts,
    sample_path,
    sample_paths,
    sample_suspension,
    stationary_distribution,
)
from roughsig.distances import cdf_distance


TWO_STATE = ProcessSpec.markov_functional(
    [[0.9, 0.1], [0.2, 0.8]], [[1.0, 0.0], [-1.0, 1.0]]
)


def test_rng_stream_reproducible_and_independent():
    a = sample_paths(TWO_STATE, 500, 1, seed=42, first_stream=3)
    b = sample_paths(TWO_STATE, 500, 1, seed=42, first_stream=3)
    c = sample_paths(TWO_STATE, 500, 1, seed=42, first_stream=4)
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != c.tobytes()


def test_batch_equals_per_replica():
    batch = sample_paths(TWO_STATE, 64, 5, seed=9)
    for r in range(5):
        single = sample_path(TWO_STATE, 64, RngStream(9, r))
        np.testing.assert_array_equal(batch[r], single.values)


@pytest.mark.parametrize(
    "spec",
    [
        ProcessSpec.iid(2, cov=[[2.0, 0.5], [0.5, 1.0]]),
        ProcessSpec.iid_exponential(1),
        ProcessSpec.ar1(0.5),
        TWO_STATE,
        ProcessSpec.doubling_map("cos2pi"),
        ProcessSpec.gauss_map(),
    ],
    ids=["iid", "iid-exp", "ar1", "chain", "doubling", "gauss"],
)
def test_centering_one_million_draws(spec):
    vals = sample_paths(spec, 1_000_000, 1, seed=11)[0]
    mean = vals.mean(axis=0)
    std = vals.std(axis=0)
    assert np.all(np.abs(mean) <= 5.0 * std / 1e3)


def test_chain_state_frequencies_match_stationary():
    pi = TWO_STATE.pi
    vals = sample_paths(TWO_STATE, 200_000, 1, seed=13)[0]
    # state 0 has observable row g[0]; recover state indicator from values
    freq0 = np.mean(np.all(np.isclose(vals, TWO_STATE.g[0]), axis=1))
    se = np.sqrt(pi[0] * (1 - pi[0]) / 200_000) / np.sqrt(pi[0] * (1 - pi[0]))  # ~ bern se units
    se = np.sqrt(pi[0] * (1 - pi[0]) / 200_000)
    assert abs(freq0 - pi[0]) <= 4.0 * 2 * se  # serial dependence inflates the se


def test_doubling_map_dynamics():
    vals = sample_paths(ProcessSpec.doubling_map("centered-x"), 2000, 1, seed=17)[0][:, 0]
    x = vals + 0.5
    drift = np.abs(x[1:] - (2 * x[:-1]) % 1.0)
    assert drift.max() <= 2.0**-50  # states carry 63 bits, doubles resolve 53


def test_gauss_map_invariant_cdf():
    vals = sample_paths(ProcessSpec.gauss_map(), 100_000, 1, seed=19)[0][:, 0]
    x = np.sort(vals + (1.0 / np.log(2.0) - 1.0))
    cdf = np.log1p(x) / np.log(2.0)
    emp = np.arange(1, x.size + 1) / x.size
    assert np.max(np.abs(cdf - emp)) < 0.02


@pytest.mark.parametrize("spec", [TWO_STATE, ProcessSpec.ar1(0.5)], ids=["chain", "ar1"])
def test_stationarity_pairs_match_replica_start(spec):
    # pairs are collected 16 steps apart so the iid KS critical value applies
    n_pts, gap = 10_000, 16
    path = sample_paths(spec, n_pts * gap + 1, 1, seed=23)[0]
    starts = np.arange(n_pts) * gap
    reps = sample_paths(spec, 2, n_pts, seed=24)
    crit = 1.628 * np.sqrt(2.0 / n_pts)  # 1% two-sample KS critical value
    for coord in range(spec.dim):
        for lag in (0, 1):
            stat = cdf_distance(path[starts + lag, coord], reps[:, lag, coord])
            assert stat < crit


def test_subshift_parry_chain():
    spec = ProcessSpec.subshift([[1, 1], [1, 0]], [[1.0], [-1.0]])
    assert spec.is_chain
    # golden-mean shift: Parry weights pi = (phi^2, 1) / (phi^2 + 1)
    phi = (1 + np.sqrt(5)) / 2
    np.testing.assert_allclose(spec.pi, [phi**2 / (phi**2 + 1), 1 / (phi**2 + 1)], rtol=1e-10)
    np.testing.assert_allclose(stationary_distribution(spec.P), spec.pi, rtol=1e-10)


def test_non_ergodic_rejected():
    with pytest.raises(ValueError):
        ProcessSpec.markov_functional([[1.0, 0.0], [0.0, 1.0]], [[1.0], [-1.0]])
    with pytest.raises(ValueError):
        ProcessSpec.markov_functional([[0.0, 1.0], [1.0, 0.0]], [[1.0], [-1.0]])  # periodic


def test_mixing_iid_chain_exact_zeros():
    iid_chain = ProcessSpec.markov_functional(
        [[0.5, 0.5], [0.5, 0.5]], [[1.0], [-1.0]]
    )
    tab = mixing_coefficients(iid_chain, 8)
    assert np.all(tab.alpha == 0.0)
    assert np.all(tab.phi == 0.0)
    assert np.all(tab.psi == 0.0)


def test_mixing_geometric_psi_ratio():
    tab = mixing_coefficients(TWO_STATE, 30)
    ratios = tab.psi[1:] / tab.psi[:-1]
    np.testing.assert_allclose(ratios, 0.7, atol=1e-9)


def test_mixing_monotone_and_alpha_bound():
    tab = mixing_coefficients(TWO_STATE, 20)
    assert np.all(np.diff(tab.alpha) <= 1e-15)
    assert np.all(np.diff(tab.phi) <= 1e-15)
    assert np.all(np.diff(tab.psi) <= 1e-15)
    assert np.all(tab.alpha <= tab.psi / 4.0 + 1e-12)
    assert tab.alpha_exact


def test_mixing_large_chain_flagged():
    S = 14
    P = np.full((S, S), 1.0 / S)
    spec = ProcessSpec.markov_functional(P, np.eye(S)[:, :1])
    tab = mixing_coefficients(spec, 3)
    assert not tab.alpha_exact


def test_approximation_rate():
    assert approximation_rate(TWO_STATE, 4.0, 1) == 0.0
    assert approximation_rate(TWO_STATE, 4.0, 5) == 0.0
    dm = ProcessSpec.doubling_map("centered-x")
    vals = [approximation_rate(dm, 2.0, l) for l in range(6)]
    assert vals[3] == pytest.approx(1.0 * 2.0**-3)
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        approximation_rate(ProcessSpec.ar1(0.5), 2.0, 1)


def _roof_spec(roof=(0.5, 1.5)):
    base = ProcessSpec.markov_functional([[0.5, 0.5], [0.5, 0.5]], np.zeros((2, 1)))
    return SuspensionSpec(base=base, roof=np.array(roof), fiber_g=[[1.0], [-1.0]])


def test_suspension_centering_and_bounds():
    spec = _roof_spec()
    weighted = (spec.base.pi * spec.roof) @ spec.fiber_g
    assert np.all(np.abs(weighted) <= 1e-12)
    assert spec.roof_bound == pytest.approx(2.0)
    samp = sample_suspension(spec, 50.0, RngStream(3), with_fiber=False)
    used = samp.roofs[: samp.n_of(samp.horizon) + 1]
    assert np.all(used >= 1.0 / spec.roof_bound)
    assert np.all(used <= spec.roof_bound)


def test_unit_roof_counting_is_floor():
    spec = _roof_spec(roof=(1.0, 1.0))
    samp = sample_suspension(spec, 25.0, RngStream(1), with_fiber=False)
    for s in (0.0, 0.3, 1.0, 7.7, 24.9):
        assert samp.n_of(s) == int(np.floor(s))


def test_renewal_ratio_near_one():
    spec = _roof_spec()
    counts = renewal_counts(spec, [1e4], replicas=8, seed=5)
    assert np.all(np.abs(counts[:, 0] / 1e4 - 1.0) < 0.05)


def test_renewal_counts_match_single_sample():
    spec = _roof_spec()
    counts = renewal_counts(spec, [50.0, 100.0], replicas=3, seed=7)
    assert counts.shape == (3, 2)
    assert np.all(counts[:, 0] <= counts[:, 1])


def test_roof_validation():
    base = ProcessSpec.markov_functional([[0.5, 0.5], [0.5, 0.5]], np.zeros((2, 1)))
    with pytest.raises(ValueError):
        SuspensionSpec(base=base, roof=np.array([0.5, -1.0]), fiber_g=[[1.0], [-1.0]])
    with pytest.raises(ValueError):
        SuspensionSpec(base=base, roof=np.array([0.5]), fiber_g=[[1.0], [-1.0]])
