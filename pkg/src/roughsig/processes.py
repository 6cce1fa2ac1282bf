"""Centered stationary weakly dependent processes and their dependence data.

Samplers start every path from the invariant law (chains from the stationary
vector, AR(1) from its stationary Gaussian, maps from their invariant
measure) and subtract the invariant mean of the observable, so the output
is stationary and centered by construction.

The doubling map is iterated on a 63-bit sliding window over a random
bitstream rather than on floats: x -> 2x mod 1 on binary floats shifts the
mantissa out and collapses to 0, while the bit window realizes the map as
the Bernoulli shift it is isomorphic to, with fresh low-order bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import lfilter

from .signature import PathSample

_ALPHA_ENUM_MAX_STATES = 12
_SUSPENSION_CELL_GUARD = 50_000_000

# exact mean of x under the Gauss measure dx/((1+x) ln 2)
_GAUSS_MEAN_X = 1.0 / math.log(2.0) - 1.0

# map observables: id -> (callable, invariant mean per map kind,
# Hoelder constant, Hoelder exponent)
_MAP_OBSERVABLES = {
    "cos2pi": (lambda x: np.cos(2 * np.pi * x), {"doubling-map": 0.0}, 2 * np.pi, 1.0),
    "sin2pi": (lambda x: np.sin(2 * np.pi * x), {"doubling-map": 0.0}, 2 * np.pi, 1.0),
    "centered-x": (
        lambda x: x,
        {"doubling-map": 0.5, "gauss-map": _GAUSS_MEAN_X},
        1.0,
        1.0,
    ),
}


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream: (seed, stream id) -> independent generator."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))


def _as_matrix(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Stationary vector pi with pi P = pi, via a bordered linear solve."""
    S = P.shape[0]
    A = np.eye(S) - P.T
    A[-1, :] = 1.0
    b = np.zeros(S)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    if pi.min() < -1e-12:
        raise ValueError("stationary solve produced negative mass; chain not ergodic?")
    return np.clip(pi, 0.0, None)


def _check_ergodic(P: np.ndarray) -> None:
    S = P.shape[0]
    if P.shape != (S, S):
        raise ValueError("P must be square")
    if np.any(P < -1e-15) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-10):
        raise ValueError("P must be row-stochastic")
    # primitive (irreducible + aperiodic) iff some power up to Wielandt's
    # bound (S-1)^2 + 1 has all entries positive
    B = (P > 0).astype(np.int64)
    power = B.copy()
    for _ in range((S - 1) ** 2):
        if power.min() > 0:
            return
        power = np.clip(power @ B, 0, 1)
    if power.min() == 0:
        raise ValueError("P is not irreducible and aperiodic")


@dataclass(frozen=True, eq=False)
class ProcessSpec:
    """Recipe for a centered stationary sequence; use the factory methods."""

    kind: str
    dim: int
    P: np.ndarray | None = None
    g: np.ndarray | None = None
    rho: float | None = None
    innovation_std: float | None = None
    cov: np.ndarray | None = None
    observable: str | None = None
    pi: np.ndarray | None = None

    @classmethod
    def iid(cls, dim: int = 1, cov=None) -> "ProcessSpec":
        cov = np.eye(dim) if cov is None else np.asarray(cov, dtype=float)
        if cov.shape != (dim, dim):
            raise ValueError("cov must be d x d")
        np.linalg.cholesky(cov)  # reject non-PSD input early
        return cls(kind="iid", dim=dim, cov=cov)

    @classmethod
    def iid_exponential(cls, dim: int = 1) -> "ProcessSpec":
        """Centered unit-rate exponential coordinates (skewed iid)."""
        return cls(kind="iid-exponential", dim=dim)

    @classmethod
    def ar1(cls, rho: float, innovation_std: float = 1.0, dim: int = 1) -> "ProcessSpec":
        if not -1 < rho < 1:
            raise ValueError("ar1 needs |rho| < 1")
        return cls(kind="ar1", dim=dim, rho=float(rho), innovation_std=float(innovation_std))

    @classmethod
    def markov_functional(cls, P, g) -> "ProcessSpec":
        P = _as_matrix(P)
        _check_ergodic(P)
        pi = stationary_distribution(P)
        g = _as_matrix(g)
        if g.shape[0] != P.shape[0]:
            raise ValueError("observable table must have one row per state")
        g = g - pi @ g  # center under the stationary law
        return cls(kind="markov-functional", dim=g.shape[1], P=P, g=g, pi=pi)

    @classmethod
    def subshift(cls, adjacency, g) -> "ProcessSpec":
        """Topologically mixing subshift carrying its Parry (max entropy) measure."""
        A = _as_matrix(adjacency)
        if not np.all((A == 0) | (A == 1)):
            raise ValueError("adjacency must be 0/1")
        if np.any(A.sum(axis=1) < 1):
            raise ValueError("every symbol needs at least one successor")
        eigvals, eigvecs = np.linalg.eig(A)
        k = int(np.argmax(eigvals.real))
        lam = eigvals[k].real
        v = np.abs(eigvecs[:, k].real)
        if v.min() <= 0 or lam <= 0:
            raise ValueError("adjacency is not primitive")
        P = A * v[None, :] / (lam * v[:, None])
        P /= P.sum(axis=1, keepdims=True)
        spec = cls.markov_functional(P, g)
        return cls(kind="subshift", dim=spec.dim, P=spec.P, g=spec.g, pi=spec.pi)

    @classmethod
    def doubling_map(cls, observable: str = "cos2pi") -> "ProcessSpec":
        _lookup_observable("doubling-map", observable)
        return cls(kind="doubling-map", dim=1, observable=observable)

    @classmethod
    def gauss_map(cls, observable: str = "centered-x") -> "ProcessSpec":
        _lookup_observable("gauss-map", observable)
        return cls(kind="gauss-map", dim=1, observable=observable)

    @property
    def is_chain(self) -> bool:
        return self.kind in ("markov-functional", "subshift")


def _lookup_observable(map_kind: str, name: str):
    try:
        fn, means, C, gamma = _MAP_OBSERVABLES[name]
    except KeyError:
        raise ValueError(f"unknown map observable {name!r}") from None
    if map_kind not in means:
        raise ValueError(f"observable {name!r} has no exact centering for {map_kind}")
    return fn, means[map_kind], C, gamma


# -- sampling ---------------------------------------------------------------


def _draw_raw(spec: ProcessSpec, n: int, gen: np.random.Generator) -> np.ndarray:
    if spec.kind == "iid":
        return gen.standard_normal((n, spec.dim))
    if spec.kind == "iid-exponential":
        return gen.random((n, spec.dim))
    if spec.kind == "ar1":
        return gen.standard_normal((n + 1, spec.dim))
    if spec.is_chain or spec.kind == "gauss-map":
        return gen.random(n)
    if spec.kind == "doubling-map":
        return gen.integers(0, 2, size=n + 62, dtype=np.uint64).astype(np.float64)
    raise ValueError(f"unknown process kind {spec.kind!r}")


def _chain_states(spec: ProcessSpec, u: np.ndarray) -> np.ndarray:
    R, n = u.shape
    S = spec.P.shape[0]
    cum_pi = np.cumsum(spec.pi)
    cum_P = np.cumsum(spec.P, axis=1)
    states = np.empty((R, n), dtype=np.intp)
    states[:, 0] = np.searchsorted(cum_pi, u[:, 0], side="right").clip(0, S - 1)
    for t in range(1, n):
        rows = cum_P[states[:, t - 1]]
        states[:, t] = (u[:, t][:, None] > rows).sum(axis=1).clip(0, S - 1)
    return states


def _doubling_states(bits: np.ndarray) -> np.ndarray:
    # 63-bit sliding windows over the bitstream, read as fixed-point fractions
    b = bits.astype(np.uint64)
    pows = (np.uint64(1) << np.arange(62, -1, -1, dtype=np.uint64)).astype(np.uint64)
    windows = sliding_window_view(b, 63, axis=-1)
    vals = np.einsum("...kj,j->...k", windows, pows)
    return vals.astype(np.float64) / float(1 << 63)


def _gauss_states(u0: np.ndarray, n: int) -> np.ndarray:
    # inverse-CDF start x = 2^u - 1, double-precision iteration of {1/x}
    R = u0.shape[0]
    xs = np.empty((R, n))
    x = np.exp2(u0) - 1.0
    for k in range(n):
        xs[:, k] = x
        x = np.maximum(x, 1e-12)  # renormalization guard away from 0
        x = 1.0 / x
        x -= np.floor(x)
    return xs


def _transform(spec: ProcessSpec, raw: np.ndarray, n: int) -> np.ndarray:
    """Raw draws (R, ...) -> centered stationary values (R, n, d)."""
    if spec.kind == "iid":
        chol = np.linalg.cholesky(spec.cov)
        return raw @ chol.T
    if spec.kind == "iid-exponential":
        return -np.log1p(-raw) - 1.0
    if spec.kind == "ar1":
        z = raw * spec.innovation_std
        x0 = z[:, 0]
        zi = (spec.rho * x0)[:, None, :]
        out, _ = lfilter([1.0], [1.0, -spec.rho], z[:, 1:], axis=1, zi=zi)
        return out
    if spec.is_chain:
        states = _chain_states(spec, raw)
        return spec.g[states]
    if spec.kind == "doubling-map":
        fn, mean, _, _ = _lookup_observable("doubling-map", spec.observable)
        return (fn(_doubling_states(raw)) - mean)[:, :, None]
    if spec.kind == "gauss-map":
        fn, mean, _, _ = _lookup_observable("gauss-map", spec.observable)
        return (fn(_gauss_states(raw[:, 0], n)) - mean)[:, :, None]
    raise ValueError(f"unknown process kind {spec.kind!r}")


def sample_paths(
    spec: ProcessSpec, n: int, replicas: int, seed: int, first_stream: int = 0
) -> np.ndarray:
    """Replica batch of stationary paths, shape (replicas, n, d).

    Replica r is drawn from RngStream(seed, first_stream + r), so the output
    is independent of batching and identical to per-replica sampling.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    raws = [
        _draw_raw(spec, n, RngStream(seed, first_stream + r).generator())
        for r in range(replicas)
    ]
    return _transform(spec, np.stack(raws, axis=0), n)


def sample_path(spec: ProcessSpec, n: int, rng: RngStream) -> PathSample:
    """One stationary centered path of length n as a discrete PathSample."""
    values = sample_paths(spec, n, 1, rng.seed, first_stream=rng.stream)[0]
    return PathSample(dim=spec.dim, values=values, kind="discrete")


# -- suspensions ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SuspensionSpec:
    """Suspension over a finite-state base: roof and fiber observable per state.

    The fiber observable is constant during each sojourn; its table is
    centered with roof weights so that the sojourn integrals have mean zero.
    """

    base: ProcessSpec
    roof: np.ndarray
    fiber_g: np.ndarray

    def __post_init__(self):
        if not self.base.is_chain:
            raise ValueError("suspension base must be a finite-state chain")
        roof = np.asarray(self.roof, dtype=float)
        if roof.shape != (self.base.P.shape[0],):
            raise ValueError("roof table must have one value per base state")
        if roof.min() <= 0:
            raise ValueError("roof must be strictly positive")
        g = _as_matrix(self.fiber_g)
        if g.shape[0] != roof.shape[0]:
            raise ValueError("fiber observable table must have one row per state")
        pi = self.base.pi
        # roof-weighted centering: E int_0^tau xi = sum_a pi_a tau_a g_a = 0
        g = g - (pi * roof) @ g / float(pi @ roof)
        object.__setattr__(self, "roof", roof)
        object.__setattr__(self, "fiber_g", g)

    @property
    def dim(self) -> int:
        return self.fiber_g.shape[1]

    @property
    def tau_bar(self) -> float:
        return float(self.base.pi @ self.roof)

    @property
    def roof_bound(self) -> float:
        """The smallest L with 1/L <= roof <= L."""
        return float(max(self.roof.max(), 1.0 / self.roof.min()))


@dataclass(frozen=True, eq=False)
class SuspensionSample:
    """One suspension trajectory: jump data plus an optional fiber grid path."""

    states: np.ndarray
    roofs: np.ndarray
    cum: np.ndarray  # cum[k] = sum of the first k roofs, cum[0] = 0
    tau_bar: float
    horizon: float
    fiber: PathSample | None = None

    def n_of(self, s) -> np.ndarray | int:
        """Counting function: max{k : sum of first k roofs <= s}."""
        idx = np.searchsorted(self.cum, s, side="right") - 1
        return idx if np.ndim(s) else int(idx)

    def sigma_of(self, s) -> np.ndarray | float:
        """Cumulative roof time of the last completed sojourn before s."""
        val = self.cum[self.n_of(s)]
        return val if np.ndim(s) else float(val)


def _suspension_steps(spec: SuspensionSpec, horizon: float) -> int:
    # every roof is >= roof.min(), so this many sojourns always cover horizon
    return int(math.ceil(horizon / float(spec.roof.min()))) + 2


def sample_suspension(
    spec: SuspensionSpec,
    horizon: float,
    rng: RngStream,
    with_fiber: bool = True,
    fiber_dt: float | None = None,
) -> SuspensionSample:
    """Sample the suspension flow up to the given (unscaled) horizon.

    Returns jump times and the counting function; when ``with_fiber`` is
    set, also the fiber trajectory sampled on a uniform grid of step
    ``fiber_dt`` (default: a tenth of the shortest roof).
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    n_steps = _suspension_steps(spec, horizon)
    u = rng.generator().random(n_steps)
    states = _chain_states(spec.base, u[None, :])[0]
    roofs = spec.roof[states]
    cum = np.concatenate([[0.0], np.cumsum(roofs)])
    fiber = None
    if with_fiber:
        dt = float(spec.roof.min()) / 10.0 if fiber_dt is None else float(fiber_dt)
        cells = int(math.ceil(horizon / dt))
        if cells > _SUSPENSION_CELL_GUARD:
            raise ValueError(f"fiber grid of {cells} cells exceeds the memory guard")
        t_left = np.arange(cells) * dt
        idx = np.clip(np.searchsorted(cum, t_left, side="right") - 1, 0, len(states) - 1)
        fiber = PathSample(
            dim=spec.dim, values=spec.fiber_g[states[idx]], kind="continuous", dt=dt
        )
    return SuspensionSample(
        states=states,
        roofs=roofs,
        cum=cum,
        tau_bar=spec.tau_bar,
        horizon=float(horizon),
        fiber=fiber,
    )


def renewal_counts(spec: SuspensionSpec, s_values, replicas: int, seed: int) -> np.ndarray:
    """n(s * tau_bar) for each s in ``s_values`` over replica streams, (R, len(s))."""
    s_values = np.asarray(s_values, dtype=float)
    tb = spec.tau_bar
    horizon = float(s_values.max()) * tb + 4.0 * float(spec.roof.max())
    n_steps = _suspension_steps(spec, horizon)
    u = np.stack(
        [RngStream(seed, r).generator().random(n_steps) for r in range(replicas)], axis=0
    )
    states = _chain_states(spec.base, u)
    cum = np.concatenate(
        [np.zeros((replicas, 1)), np.cumsum(spec.roof[states], axis=1)], axis=1
    )
    out = np.empty((replicas, s_values.size), dtype=np.int64)
    targets = s_values * tb
    for r in range(replicas):
        out[r] = np.searchsorted(cum[r], targets, side="right") - 1
    return out


# -- dependence coefficients -------------------------------------------------


@dataclass(frozen=True, eq=False)
class MixingTable:
    """alpha / phi / psi mixing coefficients of a finite chain at lags 1..n_max."""

    ns: np.ndarray
    alpha: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    alpha_exact: bool


def mixing_coefficients(spec: ProcessSpec, n_max: int) -> MixingTable:
    """Dependence coefficients between sigma(X_0) and sigma(X_n) of a chain.

    psi(n) = max_ij |p^n_ij - pi_j| / pi_j and phi(n) = max_i (1/2) sum_j
    |p^n_ij - pi_j|; alpha(n) is the exact supremum over event pairs,
    enumerated over state subsets (capped at 12 states; beyond that the
    standard bound psi(n)/4 is reported and flagged).
    """
    if not spec.is_chain:
        raise ValueError("mixing coefficients are computed for finite-state chains only")
    P, pi = spec.P, spec.pi
    S = P.shape[0]
    exact_alpha = S <= _ALPHA_ENUM_MAX_STATES
    alphas, phis, psis = [], [], []
    Pn = np.eye(S)
    for _ in range(1, n_max + 1):
        Pn = Pn @ P
        D = Pn - pi[None, :]
        psis.append(float(np.max(np.abs(D) / pi[None, :])))
        phis.append(float(np.max(0.5 * np.abs(D).sum(axis=1))))
        if exact_alpha:
            # |P(A x B) - P(A)P(B)| maximized over subsets; for fixed A the
            # best B collects the positive column sums of pi_i (p^n_ij - pi_j)
            M = pi[:, None] * D
            best = 0.0
            for mask in range(1, 2**S):
                rows = [i for i in range(S) if mask >> i & 1]
                col = M[rows].sum(axis=0)
                best = max(best, float(np.maximum(col, 0.0).sum()))
            alphas.append(best)
        else:
            alphas.append(psis[-1] / 4.0)
    return MixingTable(
        ns=np.arange(1, n_max + 1),
        alpha=np.array(alphas),
        phi=np.array(phis),
        psi=np.array(psis),
        alpha_exact=exact_alpha,
    )


def approximation_rate(spec: ProcessSpec, a: float, l: int) -> float:
    """Upper estimate of the l-window conditional approximation error.

    State-local functionals of chains are exactly measurable at window 0,
    so the rate is 0; Hoelder observables of expanding maps are bounded by
    the Hoelder constant times the cylinder diameter 2**(-l * exponent).
    """
    if l < 0:
        raise ValueError("window must be >= 0")
    if spec.is_chain or spec.kind in ("iid", "iid-exponential"):
        return 0.0
    if spec.kind in ("doubling-map", "gauss-map"):
        _, _, C, gamma = _lookup_observable(spec.kind, spec.observable)
        return float(C * 2.0 ** (-l * gamma))
    raise ValueError(f"approximation rate unsupported for kind {spec.kind!r}")
