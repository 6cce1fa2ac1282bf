"""Iterated-sum and iterated-integral signatures of sampled paths.

The level-nu signature of a window collects, for every word (i_1,...,i_nu),
the sum of products x_{i_1}(k_1) ... x_{i_nu}(k_nu) over strictly increasing
index tuples inside the window.  Everything here is built on one recurrence:
appending a step x(k) updates level nu by (level nu-1 so far) (x) x(k), i.e.
a Chen product with the step's group element (1, x(k), 0, ..., 0).

Continuous-grid paths are handled by the same engine with step increments
x(k) * dt (a left-point rule on the simplex); this drops the Lebesgue-null
diagonal blocks, keeps Chen exact at grid-aligned split points and commits
an O(dt) error at interior split points.

Normalized signatures rescale level nu by N**(-nu/2) and read the window
(s, t) as index window [floor(s*N), floor(t*N)).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .tensor import (
    MAX_DEPTH,
    TruncatedTensor,
    chen_concat_arrays,
    chen_inverse_arrays,
)

# Below this many steps a window signature is accumulated sequentially
# (vectorized); longer windows are split and Chen-combined pairwise, which
# bounds float summation-error growth the way pairwise summation does.
_CHUNK = 1024

_BRUTE_FORCE_MAX_N = 14
_BRUTE_FORCE_MAX_DEPTH = 4


@dataclass(frozen=True)
class PathSample:
    """A finite d-dimensional series, discrete or grid-sampled continuous.

    ``values[k]`` is the k-th term of a discrete series, or the constant
    integrand value on the cell [k*dt, (k+1)*dt) of a continuous-grid path.
    ``time_scale`` is the default N used when normalizing signatures.
    """

    dim: int
    values: np.ndarray
    kind: str = "discrete"
    dt: float | None = None
    time_scale: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or (arr.size and arr.shape[1] != self.dim):
            raise ValueError(f"values must be (n, {self.dim})")
        if arr.shape[1] != self.dim:
            arr = arr.reshape(0, self.dim)
        object.__setattr__(self, "values", arr)
        if self.kind not in ("discrete", "continuous"):
            raise ValueError("kind must be 'discrete' or 'continuous'")
        if self.kind == "continuous":
            if self.dt is None or self.dt <= 0:
                raise ValueError("continuous-grid paths need dt > 0")
        elif self.dt is not None:
            raise ValueError("discrete paths have an implicit unit step")
        if self.time_scale <= 0:
            raise ValueError("time_scale must be positive")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def horizon(self) -> float:
        """Length of the unscaled time axis covered by the sample."""
        if self.kind == "discrete":
            return float(len(self))
        return float(len(self)) * self.dt


@dataclass(frozen=True)
class SignatureIncrement:
    """Normalized signature of one window, all levels 0..depth."""

    s: float
    t: float
    tensor: TruncatedTensor


def _identity_arrays(dim: int, depth: int) -> list[np.ndarray]:
    return [np.ones(1)] + [np.zeros(dim**nu) for nu in range(1, depth + 1)]


def _check_depth(depth: int) -> None:
    if not 1 <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must be in 1..{MAX_DEPTH}")


def prefix_level_arrays(steps: np.ndarray, depth: int) -> list[np.ndarray]:
    """All prefix signatures of a step matrix, one level array per order.

    Returns ``[P_0, ..., P_depth]`` where ``P_nu`` has shape (n+1, d**nu)
    and row k holds level nu of the signature of steps[:k].
    """
    _check_depth(depth)
    steps = np.asarray(steps, dtype=float)
    n, d = steps.shape
    out = [np.ones((n + 1, 1))]
    for nu in range(1, depth + 1):
        lvl = np.zeros((n + 1, d**nu))
        if n:
            # level update: Sigma_nu(0, k+1) = Sigma_nu(0, k) + Sigma_{nu-1}(0, k) (x) x(k)
            terms = np.einsum("ka,kb->kab", out[nu - 1][:-1], steps).reshape(n, -1)
            np.cumsum(terms, axis=0, out=lvl[1:])
        out.append(lvl)
    return out


def signature_of_steps(steps: np.ndarray, depth: int, dim: int) -> list[np.ndarray]:
    """Signature (final levels only) of a step matrix, pairwise-combined."""
    _check_depth(depth)
    steps = np.asarray(steps, dtype=float).reshape(-1, dim)
    n = steps.shape[0]
    if n == 0:
        return _identity_arrays(dim, depth)
    if n <= _CHUNK:
        pref = prefix_level_arrays(steps, depth)
        return [lvl[-1].copy() for lvl in pref]
    mid = n // 2
    left = signature_of_steps(steps[:mid], depth, dim)
    right = signature_of_steps(steps[mid:], depth, dim)
    return chen_concat_arrays(left, right, dim)


def scale_level_arrays(arrays: list[np.ndarray], c: float) -> list[np.ndarray]:
    """Rescale level nu by c**nu (the dilation x -> c*x on signatures)."""
    return [arr * c**nu for nu, arr in enumerate(arrays)]


class PrefixTable:
    """Prefix signatures of a step sequence with O(1) window queries.

    Increments over [a, b) are recovered from the prefixes through the
    group inverse, inverse(prefix(a)) (x) prefix(b), which is the Chen
    relation solved for the middle factor.
    """

    def __init__(self, steps: np.ndarray, depth: int, dim: int):
        steps = np.asarray(steps, dtype=float).reshape(-1, dim)
        self.dim = dim
        self.depth = depth
        self.n = steps.shape[0]
        self._levels = prefix_level_arrays(steps, depth)

    def prefix_arrays(self, k: int) -> list[np.ndarray]:
        return [lvl[k].copy() for lvl in self._levels]

    def prefix(self, k: int) -> TruncatedTensor:
        return TruncatedTensor.from_arrays(self.dim, self.depth, self.prefix_arrays(k))

    def increment_arrays(self, a: int, b: int) -> list[np.ndarray]:
        if not 0 <= a <= b <= self.n:
            raise ValueError(f"window [{a}, {b}) outside 0..{self.n}")
        if a == 0:
            return self.prefix_arrays(b)
        inv = chen_inverse_arrays(self.prefix_arrays(a), self.dim)
        return chen_concat_arrays(inv, self.prefix_arrays(b), self.dim)

    def increment(self, a: int, b: int) -> TruncatedTensor:
        return TruncatedTensor.from_arrays(self.dim, self.depth, self.increment_arrays(a, b))

    def level_increments(self, a: int, bs: np.ndarray, nu: int) -> np.ndarray:
        """Level nu of the increments over [a, b) for many b at once."""
        bs = np.asarray(bs, dtype=int)
        d = self.dim
        if nu == 0:
            return np.ones((bs.size, 1))
        inv = chen_inverse_arrays(self.prefix_arrays(a), d)
        out = np.zeros((bs.size, d**nu))
        for k in range(nu + 1):
            right = self._levels[nu - k][bs]
            out += np.einsum("i,bj->bij", inv[k], right).reshape(bs.size, -1)
        return out


def iterated_sum_prefix(xs: PathSample, depth: int) -> list[TruncatedTensor]:
    """Unnormalized iterated sums of every prefix of a discrete series.

    Entry k is the truncated tensor of Sigma_nu(0, k), nu = 0..depth,
    computed by the appending recurrence in O(n * depth * d**depth).
    """
    if xs.kind != "discrete":
        raise ValueError("iterated_sum_prefix expects a discrete series")
    levels = prefix_level_arrays(xs.values, depth)
    return [
        TruncatedTensor.from_arrays(xs.dim, depth, [lvl[k] for lvl in levels])
        for k in range(len(xs) + 1)
    ]


def _floor_index(x: float) -> int:
    # snap-to-grid guard: 0.3*10 etc. should land on the intended cell
    return int(np.floor(x + 1e-9))


def _window_steps(xs: PathSample, s: float, t: float, scale: float) -> np.ndarray:
    if not 0 <= s <= t:
        raise ValueError(f"need 0 <= s <= t, got ({s}, {t})")
    if xs.kind == "discrete":
        ka = _floor_index(s * scale)
        kb = _floor_index(t * scale)
        if kb > len(xs):
            raise ValueError(f"window [{s}, {t}) at scale {scale} exceeds the sample")
        return xs.values[ka:kb]
    # left-point rule on cells anchored at the window's left endpoint: exact
    # on grid-aligned windows, O(dt) quadrature error otherwise
    u_lo, u_hi = s * scale, t * scale
    if u_hi > xs.horizon * (1 + 1e-12) + 1e-9:
        raise ValueError(f"window [{s}, {t}) at scale {scale} exceeds the sampled horizon")
    m = _floor_index((u_hi - u_lo) / xs.dt)
    lefts = u_lo + np.arange(m) * xs.dt
    idx = np.minimum(np.floor(lefts / xs.dt + 1e-9).astype(int), len(xs) - 1)
    return xs.values[idx] * xs.dt


def signature_increment(
    xs: PathSample,
    s: float,
    t: float,
    depth: int,
    scale: float | None = None,
) -> SignatureIncrement:
    """Normalized signature of the window (s, t) at time scale N.

    Level nu carries the factor N**(-nu/2).  Discrete series use the index
    window [floor(s*N), floor(t*N)); continuous-grid paths integrate the
    piecewise-constant values over [s*N, t*N) with the left-point rule.
    """
    N = xs.time_scale if scale is None else float(scale)
    steps = _window_steps(xs, s, t, N)
    arrays = signature_of_steps(steps, depth, xs.dim)
    arrays = scale_level_arrays(arrays, N**-0.5)
    return SignatureIncrement(s, t, TruncatedTensor.from_arrays(xs.dim, depth, arrays))


def brute_force_signature(
    xs: PathSample,
    window: tuple[int, int] | None = None,
    depth: int = 2,
) -> TruncatedTensor:
    """Direct enumeration oracle for unnormalized iterated sums.

    Sums the word products over every strictly increasing index tuple with
    no recurrence; combinatorial cost caps the window at 14 points and the
    depth at 4.
    """
    if xs.kind != "discrete":
        raise ValueError("the enumeration oracle is defined for discrete series")
    lo, hi = (0, len(xs)) if window is None else window
    if not 0 <= lo <= hi <= len(xs):
        raise ValueError(f"window [{lo}, {hi}) outside the sample")
    n = hi - lo
    if n > _BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute-force window capped at {_BRUTE_FORCE_MAX_N} points, got {n}")
    if depth > _BRUTE_FORCE_MAX_DEPTH:
        raise ValueError(f"brute-force depth capped at {_BRUTE_FORCE_MAX_DEPTH}, got {depth}")
    _check_depth(depth)
    vals = xs.values[lo:hi]
    d = xs.dim
    arrays = [np.ones(1)]
    for nu in range(1, depth + 1):
        acc = np.zeros(d**nu)
        for ks in combinations(range(n), nu):
            prod = vals[ks[0]]
            for k in ks[1:]:
                prod = np.multiply.outer(prod, vals[k])
            acc += prod.ravel()
        arrays.append(acc)
    return TruncatedTensor.from_arrays(d, depth, arrays)


def suspension_signature(samp, s: float, t: float, depth: int, scale: float) -> SignatureIncrement:
    """Normalized signature of a suspension trajectory over (s, t).

    The window is read on the fiber's own clock stretched by the mean roof:
    level nu integrates over [s*N*tau_bar, t*N*tau_bar) with the same
    left-point simplex rule as any continuous-grid path.
    """
    fiber = samp.fiber
    N = float(scale)
    tb = samp.tau_bar
    steps = _window_steps(fiber, s * tb, t * tb, N)
    arrays = signature_of_steps(steps, depth, fiber.dim)
    arrays = scale_level_arrays(arrays, N**-0.5)
    return SignatureIncrement(s, t, TruncatedTensor.from_arrays(fiber.dim, depth, arrays))


def batch_prefix_levels(steps: np.ndarray, depth: int) -> list[np.ndarray]:
    """Prefix level arrays for a batch of step matrices.

    ``steps`` has shape (R, n, d); entry nu of the result has shape
    (R, n+1, d**nu).  Memory is the caller's problem: chunk R upstream.
    """
    _check_depth(depth)
    steps = np.asarray(steps, dtype=float)
    R, n, d = steps.shape
    out = [np.ones((R, n + 1, 1))]
    for nu in range(1, depth + 1):
        lvl = np.zeros((R, n + 1, d**nu))
        if n:
            terms = np.einsum("rka,rkb->rkab", out[nu - 1][:, :-1], steps).reshape(R, n, -1)
            np.cumsum(terms, axis=1, out=lvl[:, 1:])
        out.append(lvl)
    return out


def batch_terminal_signature(steps: np.ndarray, depth: int) -> list[np.ndarray]:
    """Final signature levels for a batch of step matrices, (R, d**nu) each."""
    return [lvl[:, -1] for lvl in batch_prefix_levels(steps, depth)]
