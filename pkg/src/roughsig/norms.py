"""Path norms and rough-path bounds: p-variation, Hoelder ratios, control
function and the factorial decay of signature levels.

p-variation of sampled data is defined here as the supremum over partitions
with breakpoints on the sample grid; for piecewise-constant paths all
variation sits at the jumps, so the grid supremum is the true one.  The
supremum is computed exactly by dynamic programming in O(m^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .signature import PrefixTable

_PVAR_GRID_GUARD = 20_000
_TABLE_GRID_GUARD = 2_000


class VectorIncrements:
    """Increment norms ||x(t_i) - x(t_j)|| of a grid-sampled vector path."""

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != self.times.size:
            raise ValueError("one value per grid time required")
        self.values = values

    def norms_to(self, i: int) -> np.ndarray:
        return np.linalg.norm(self.values[:i] - self.values[i], axis=1)


class MatrixIncrements:
    """Increment norms given as an explicit (m+1) x (m+1) upper table."""

    def __init__(self, times, matrix):
        self.times = np.asarray(times, dtype=float)
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (self.times.size, self.times.size):
            raise ValueError("matrix must be square over the grid")
        if np.any(np.abs(np.diag(matrix)) > 0):
            raise ValueError("increments over empty windows must vanish")
        self.matrix = matrix

    def norms_to(self, i: int) -> np.ndarray:
        return self.matrix[:i, i]


def signature_level_increments(
    table: PrefixTable, grid: np.ndarray, scale: float, level: int
) -> MatrixIncrements:
    """Norms of normalized level-nu signature increments on a subgrid.

    ``grid`` holds step indices into the prefix table; times are grid/scale
    and level nu carries the normalization scale**(-nu/2).
    """
    grid = np.asarray(grid, dtype=int)
    m = grid.size
    mat = np.zeros((m, m))
    factor = float(scale) ** (-level / 2.0)
    for a in range(m - 1):
        incs = table.level_increments(grid[a], grid[a + 1 :], level)
        mat[a, a + 1 :] = np.linalg.norm(incs, axis=1) * factor
    return MatrixIncrements(grid / float(scale), mat)


def p_variation(f, p: float) -> float:
    """Exact p-variation over grid partitions via dynamic programming.

    V(i) = max over j < i of V(j) + ||X(t_j, t_i)||^p; the answer is
    V(m)^(1/p).
    """
    if p < 1:
        raise ValueError("p-variation needs p >= 1")
    m = f.times.size - 1
    if m + 1 > _PVAR_GRID_GUARD:
        raise ValueError(f"grid of {m + 1} points exceeds the O(m^2) guard")
    if m < 0:
        raise ValueError("empty grid")
    V = np.zeros(m + 1)
    for i in range(1, m + 1):
        V[i] = np.max(V[:i] + f.norms_to(i) ** p)
    return float(V[m] ** (1.0 / p))


def p_variation_power_table(f, p: float) -> np.ndarray:
    """Table of ||X||^p_{p,[t_a,t_b]} for all grid pairs a <= b.

    Row a is one forward DP restricted to breakpoints >= a, so the table is
    exactly superadditive: T[a, c] >= T[a, b] + T[b, c].
    """
    if p < 1:
        raise ValueError("p-variation needs p >= 1")
    m = f.times.size - 1
    if m + 1 > _TABLE_GRID_GUARD:
        raise ValueError(f"grid of {m + 1} points exceeds the O(m^3) table guard")
    rows = [f.norms_to(i) ** p for i in range(m + 1)]
    out = np.zeros((m + 1, m + 1))
    for a in range(m):
        V = np.zeros(m + 1 - a)
        for i in range(a + 1, m + 1):
            V[i - a] = np.max(V[: i - a] + rows[i][a:i])
        out[a, a:] = V
    return out


def hoelder_ratio(f, exponent: float) -> float:
    """sup over grid pairs of ||X(s,t)|| / |t-s|^exponent (diagnostic)."""
    if exponent <= 0:
        raise ValueError("exponent must be positive")
    m = f.times.size - 1
    best = 0.0
    for i in range(1, m + 1):
        gaps = (f.times[i] - f.times[:i]) ** exponent
        best = max(best, float(np.max(f.norms_to(i) / gaps)))
    return best


def beta_lower_bound(p: float) -> float:
    """Smallest admissible constant of the factorial signature bound.

    2 p^2 (1 + sum_{r>=3} (2/(r-2))^((floor(p)+1)/p)); the series is
    2^e zeta(e) with e = (floor(p)+1)/p, convergent for p < floor(p)+1.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    e = (math.floor(p) + 1) / p
    if e <= 1:
        raise ValueError("series diverges at this p")
    return 2.0 * p * p * (1.0 + 2.0**e * float(zeta(e)))


@dataclass(frozen=True, eq=False)
class ControlFunction:
    """Superadditive control phi(s,t) on a grid, via its value table."""

    times: np.ndarray
    matrix: np.ndarray
    p: float
    beta: float

    def value(self, a: int, b: int) -> float:
        return float(self.matrix[a, b])


def control_function(
    table: PrefixTable, grid: np.ndarray, scale: float, p: float, beta_const: float | None = None
) -> ControlFunction:
    """Control function beta^p (||S||^p_p + ||level-2||^{p/2}_{p/2}) per pair.

    ``table`` holds unnormalized prefix signatures (depth >= 2), ``grid``
    the step indices of the evaluation grid, ``scale`` the normalization N.
    """
    if not 2 < p < 3:
        raise ValueError("the factorial bound machinery needs p in (2, 3)")
    beta = beta_lower_bound(p) if beta_const is None else float(beta_const)
    if beta < beta_lower_bound(p) * (1 - 1e-12):
        raise ValueError("beta_const is below the admissible lower bound")
    grid = np.asarray(grid, dtype=int)
    times = grid / float(scale)
    level1 = table._levels[1][grid] * float(scale) ** -0.5
    v1 = p_variation_power_table(VectorIncrements(times, level1), p)
    inc2 = signature_level_increments(table, grid, scale, 2)
    v2 = p_variation_power_table(inc2, p / 2.0)
    return ControlFunction(times=times, matrix=beta**p * (v1 + v2), p=p, beta=beta)


@dataclass(frozen=True, eq=False)
class FactorialBoundReport:
    """Worst-case slack of the factorial bound per level."""

    max_ratio: dict[int, float]
    worst_pair: dict[int, tuple[int, int]]

    @property
    def overall_max(self) -> float:
        return max(self.max_ratio.values())


def factorial_bound_check(
    level_norms: dict[int, np.ndarray], phi: ControlFunction, p: float, beta: float
) -> FactorialBoundReport:
    """Ratios ||level nu (s,t)|| * beta * (nu/p)! / phi(s,t)^(nu/p) over pairs.

    With an admissible beta the ratio stays <= 1 for every level: up to
    floor(p) it holds by construction of phi, beyond that by the
    superadditivity induction.  (nu/p)! is Gamma(nu/p + 1).
    """
    report_max: dict[int, float] = {}
    report_arg: dict[int, tuple[int, int]] = {}
    m = phi.times.size
    iu = np.triu_indices(m, k=1)
    phi_vals = phi.matrix[iu]
    for nu, mat in sorted(level_norms.items()):
        fact = math.gamma(nu / p + 1.0)
        norms = mat[iu]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = norms * beta * fact / phi_vals ** (nu / p)
        ratios = np.where(norms == 0.0, 0.0, ratios)
        ratios = np.where((phi_vals == 0.0) & (norms > 0.0), np.inf, ratios)
        k = int(np.argmax(ratios))
        report_max[nu] = float(ratios[k])
        report_arg[nu] = (int(iu[0][k]), int(iu[1][k]))
    return FactorialBoundReport(max_ratio=report_max, worst_pair=report_arg)
