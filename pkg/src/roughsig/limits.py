"""Gaussian limit objects: the (sigma, gamma) model and its rough-path lift.

``sigma`` is the long-run covariance of the process (the Brownian limit's
covariance at time 1) and ``gamma`` the drift matrix of lagged
cross-covariances entering level >= 2.  The lift is built by the Ito Euler
scheme: one step multiplies the running tensor by the group element
(1, dW_k, gamma*dt, 0, ...), so the grid path satisfies the Chen relation
exactly and the only error against the analytic object is the order-1/2
strong Euler error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .processes import ProcessSpec, RngStream, SuspensionSpec, _chain_states
from .signature import PathSample
from .tensor import TruncatedTensor, chen_concat_arrays, chen_inverse_arrays

_EIG_CLIP = -1e-10


@dataclass(frozen=True, eq=False)
class LimitModel:
    """Covariance matrix sigma and drift matrix gamma of the Gaussian limit."""

    sigma: np.ndarray
    gamma: np.ndarray
    variant: str = "discrete"
    se_sigma: np.ndarray | None = None
    se_gamma: np.ndarray | None = None
    tail_warning: bool = False

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        if sigma.shape != gamma.shape or sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ValueError("sigma and gamma must be square matrices of equal size")
        if np.max(np.abs(sigma - sigma.T)) > 1e-12 * max(1.0, np.max(np.abs(sigma))):
            raise ValueError("sigma must be symmetric")
        if self.variant not in ("discrete", "continuous", "suspension"):
            raise ValueError(f"unknown variant {self.variant!r}")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "gamma", gamma)

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    def sqrt_sigma(self) -> np.ndarray:
        """Symmetric PSD square root; mildly negative eigenvalues clip to 0."""
        vals, vecs = np.linalg.eigh(self.sigma)
        if vals.min() < _EIG_CLIP:
            raise ValueError(f"sigma has eigenvalue {vals.min():.3e} below tolerance")
        vals = np.clip(vals, 0.0, None)
        return (vecs * np.sqrt(vals)) @ vecs.T

    def to_json_dict(self) -> dict:
        payload = {
            "sigma": self.sigma.tolist(),
            "gamma": self.gamma.tolist(),
            "variant": self.variant,
            "tail_warning": self.tail_warning,
        }
        if self.se_sigma is not None:
            payload["se_sigma"] = np.asarray(self.se_sigma).tolist()
        if self.se_gamma is not None:
            payload["se_gamma"] = np.asarray(self.se_gamma).tolist()
        return payload

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, payload: dict) -> "LimitModel":
        return cls(
            sigma=np.asarray(payload["sigma"], dtype=float),
            gamma=np.asarray(payload["gamma"], dtype=float),
            variant=payload.get("variant", "discrete"),
            se_sigma=None if "se_sigma" not in payload else np.asarray(payload["se_sigma"]),
            se_gamma=None if "se_gamma" not in payload else np.asarray(payload["se_gamma"]),
            tail_warning=bool(payload.get("tail_warning", False)),
        )

    @classmethod
    def from_json(cls, text: str) -> "LimitModel":
        return cls.from_json_dict(json.loads(text))


def _lagged_covariances(values: np.ndarray, lag_cap: int) -> np.ndarray:
    """C[k] = average of x_t (x) x_{t+k} over the path, k = 0..lag_cap."""
    n, d = values.shape
    if lag_cap >= n:
        raise ValueError("lag cap must be below the path length")
    C = np.empty((lag_cap + 1, d, d))
    for k in range(lag_cap + 1):
        C[k] = values[: n - k].T @ values[k:] / (n - k)
    return C


def _aggregate_model(
    C_reps: np.ndarray, F_reps: np.ndarray | None, variant: str
) -> LimitModel:
    """Combine per-replica lag covariances into the truncated-series model.

    gamma is the truncated lag series (plus the within-cell correction F for
    continuous-time variants); sigma = C(0) + gamma_lags + gamma_lags^T holds
    exactly by construction of the estimator.
    """
    R = C_reps.shape[0]
    gamma_lag_reps = C_reps[:, 1:].sum(axis=1)
    sigma_reps = C_reps[:, 0] + gamma_lag_reps + gamma_lag_reps.transpose(0, 2, 1)
    gamma_reps = gamma_lag_reps if F_reps is None else gamma_lag_reps + F_reps
    sigma = sigma_reps.mean(axis=0)
    sigma = 0.5 * (sigma + sigma.T)
    gamma = gamma_reps.mean(axis=0)
    se_sigma = sigma_reps.std(axis=0, ddof=1) / np.sqrt(R) if R > 1 else np.zeros_like(sigma)
    se_gamma = gamma_reps.std(axis=0, ddof=1) / np.sqrt(R) if R > 1 else np.zeros_like(gamma)
    tail = C_reps[:, -1]
    tail_se = tail.std(axis=0, ddof=1) / np.sqrt(R) if R > 1 else np.full_like(sigma, np.inf)
    warning = bool(np.any(np.abs(tail.mean(axis=0)) > 5.0 * np.maximum(tail_se, 1e-300)))
    return LimitModel(
        sigma=sigma,
        gamma=gamma,
        variant=variant,
        se_sigma=se_sigma,
        se_gamma=se_gamma,
        tail_warning=warning,
    )


def estimate_limit_model(
    spec,
    lag_cap: int,
    replicas: int,
    length: int,
    seed: int,
    variant: str | None = None,
) -> LimitModel:
    """Estimate (sigma, gamma) from long stationary paths.

    Lagged covariances are time averages truncated at ``lag_cap``; standard
    errors come from the replica spread.  The continuous variant treats the
    series as a unit-step piecewise-constant integrand and adds the exact
    within-cell correction F = C(0)/2 to gamma; the suspension variant works
    on the sojourn integrals and adds the within-roof correction.
    """
    if lag_cap < 1:
        raise ValueError("lag cap must be >= 1")
    if isinstance(spec, SuspensionSpec):
        if variant not in (None, "suspension"):
            raise ValueError("suspension specs use the suspension variant")
        return _estimate_suspension(spec, lag_cap, replicas, length, seed)
    variant = variant or "discrete"
    if variant == "suspension":
        raise ValueError("suspension variant needs a SuspensionSpec")
    from .processes import sample_paths

    paths = sample_paths(spec, length, replicas, seed)
    C_reps = np.stack([_lagged_covariances(p, lag_cap) for p in paths])
    F_reps = None
    if variant == "continuous":
        # unit cell holds a constant value, so the ordered double integral
        # over the cell is exactly half the squared value
        F_reps = C_reps[:, 0] / 2.0
    return _aggregate_model(C_reps, F_reps, variant)


def _estimate_suspension(
    spec: SuspensionSpec, lag_cap: int, replicas: int, length: int, seed: int
) -> LimitModel:
    us = np.stack(
        [RngStream(seed, r).generator().random(length) for r in range(replicas)], axis=0
    )
    states = _chain_states(spec.base, us)
    eta_table = spec.fiber_g * spec.roof[:, None]  # sojourn integral per state
    C_reps, F_reps = [], []
    for r in range(replicas):
        eta = eta_table[states[r]]
        C_reps.append(_lagged_covariances(eta, lag_cap))
        gf = spec.fiber_g[states[r]]
        w = spec.roof[states[r]] ** 2 / 2.0
        F_reps.append(np.einsum("k,ki,kj->ij", w, gf, gf) / states.shape[1])
    return _aggregate_model(np.stack(C_reps), np.stack(F_reps), "suspension")


def _chain_fundamental(spec: ProcessSpec) -> np.ndarray:
    P, pi = spec.P, spec.pi
    S = P.shape[0]
    Z = np.linalg.inv(np.eye(S) - P + np.outer(np.ones(S), pi))
    return Z - np.eye(S)  # = sum_{k>=1} (P^k - 1 pi^T)


def exact_chain_limit_model(spec: ProcessSpec) -> LimitModel:
    """Closed-form (sigma, gamma) of a Markov functional, no truncation."""
    if not spec.is_chain:
        raise ValueError("exact model available for finite-state chains only")
    D = np.diag(spec.pi)
    g = spec.g
    C0 = g.T @ D @ g
    gamma = g.T @ D @ _chain_fundamental(spec) @ g
    sigma = C0 + gamma + gamma.T
    return LimitModel(sigma=0.5 * (sigma + sigma.T), gamma=gamma, variant="discrete")


def exact_suspension_limit_model(spec: SuspensionSpec) -> LimitModel:
    """Closed-form (sigma, gamma) of a suspension with sojourn-constant fiber."""
    base = spec.base
    D = np.diag(base.pi)
    h = spec.fiber_g * spec.roof[:, None]  # eta observable per state
    C0 = h.T @ D @ h
    gamma_lags = h.T @ D @ _chain_fundamental(base) @ h
    F = np.einsum("a,ai,aj->ij", base.pi * spec.roof**2 / 2.0, spec.fiber_g, spec.fiber_g)
    sigma = C0 + gamma_lags + gamma_lags.T
    return LimitModel(sigma=0.5 * (sigma + sigma.T), gamma=gamma_lags + F, variant="suspension")


# -- Brownian motion and its rough-path lift ---------------------------------


def brownian_increments_batch(
    model: LimitModel, T: float, steps: int, replicas: int, seed: int, first_stream: int = 0
) -> np.ndarray:
    """Replica batch of Brownian increments with covariance sigma*dt, (R, m, d)."""
    if steps < 1 or T <= 0:
        raise ValueError("need steps >= 1 and T > 0")
    root = model.sqrt_sigma()
    dt = T / steps
    raws = [
        RngStream(seed, first_stream + r).generator().standard_normal((steps, model.dim))
        for r in range(replicas)
    ]
    return np.stack(raws) @ (root.T * np.sqrt(dt))


def sample_brownian(model: LimitModel, T: float, steps: int, rng: RngStream):
    """One Brownian path W on the uniform grid, W(0) = 0; returns (times, W)."""
    inc = brownian_increments_batch(model, T, steps, 1, rng.seed, first_stream=rng.stream)[0]
    times = np.linspace(0.0, T, steps + 1)
    W = np.vstack([np.zeros((1, model.dim)), np.cumsum(inc, axis=0)])
    return times, W


class GaussianRoughPath:
    """Grid lift of a Brownian sample: levels nu = 0..depth over the grid.

    The construction is a multiplicative prefix scan, so Chen holds exactly
    at grid split points; increments over (i, j) are recovered through the
    group inverse.
    """

    def __init__(self, times: np.ndarray, w: np.ndarray, model: LimitModel, depth: int):
        times = np.asarray(times, dtype=float)
        w = np.asarray(w, dtype=float)
        if w.shape != (times.size, model.dim):
            raise ValueError("w must be sampled on the grid, shape (m+1, d)")
        steps = np.diff(times)
        if steps.size and (steps.min() <= 0 or np.max(np.abs(steps - steps[0])) > 1e-12 * steps[0]):
            raise ValueError("grid must be uniform and increasing")
        self.times = times
        self.w = w
        self.model = model
        self.depth = depth
        self.dim = model.dim
        dt = float(steps[0]) if steps.size else 0.0
        self.dt = dt
        inc = np.diff(w, axis=0)
        self._levels = _euler_prefix(inc[None], model.gamma, dt, depth)

    @property
    def grid_size(self) -> int:
        return self.times.size

    def prefix_arrays(self, k: int) -> list[np.ndarray]:
        return [lvl[0, k].copy() for lvl in self._levels]

    def prefix(self, k: int) -> TruncatedTensor:
        return TruncatedTensor.from_arrays(self.dim, self.depth, self.prefix_arrays(k))

    def increment(self, i: int, j: int) -> TruncatedTensor:
        if not 0 <= i <= j < self.grid_size:
            raise ValueError("grid indices out of range")
        if i == 0:
            return self.prefix(j)
        inv = chen_inverse_arrays(self.prefix_arrays(i), self.dim)
        arrays = chen_concat_arrays(inv, self.prefix_arrays(j), self.dim)
        return TruncatedTensor.from_arrays(self.dim, self.depth, arrays)

    def index_of(self, t: float) -> int:
        k = int(round(t / self.dt)) if self.dt else 0
        if not 0 <= k < self.grid_size or abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not a grid point")
        return k


def _euler_prefix(increments: np.ndarray, gamma: np.ndarray, dt: float, depth: int):
    """Shared Euler prefix scan; increments (R, m, d), returns per-level arrays."""
    R, m, d = increments.shape
    dt_gamma = gamma.ravel() * dt
    out = [np.ones((R, m + 1, 1))]
    for nu in range(1, depth + 1):
        lvl = np.zeros((R, m + 1, d**nu))
        if m:
            terms = np.einsum("rka,rkb->rkab", out[nu - 1][:, :-1], increments).reshape(R, m, -1)
            if nu >= 2:
                terms = terms + np.einsum(
                    "rki,j->rkij", out[nu - 2][:, :-1], dt_gamma
                ).reshape(R, m, -1)
            np.cumsum(terms, axis=1, out=lvl[:, 1:])
        out.append(lvl)
    return out


def lyons_extension(times: np.ndarray, w: np.ndarray, model: LimitModel, depth: int) -> GaussianRoughPath:
    """Lift a grid Brownian sample to its rough path with drift gamma."""
    return GaussianRoughPath(times, w, model, depth)


def lyons_terminal_batch(
    model: LimitModel, T: float, steps: int, depth: int, replicas: int, seed: int,
    first_stream: int = 0, chunk: int = 256,
) -> list[np.ndarray]:
    """Terminal levels of the lifted Gaussian rough path per replica.

    Returns one (replicas, d**nu) array per level nu = 0..depth; replicas are
    chunked to bound memory and keyed by stream id, so results do not depend
    on the chunk size.
    """
    d = model.dim
    out = [np.empty((replicas, d**nu)) for nu in range(depth + 1)]
    dt = T / steps
    for lo in range(0, replicas, chunk):
        hi = min(lo + chunk, replicas)
        inc = brownian_increments_batch(model, T, steps, hi - lo, seed, first_stream + lo)
        levels = _euler_prefix(inc, model.gamma, dt, depth)
        for nu in range(depth + 1):
            out[nu][lo:hi] = levels[nu][:, -1]
    return out
