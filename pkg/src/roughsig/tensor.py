"""Truncated tensor-algebra arithmetic over R^d.

A truncated tensor holds one coefficient array per level nu = 0..depth,
the level-nu array being a dense row-major table indexed by words
(i_1, ..., i_nu) in {1..d}^nu.  Signatures and their Gaussian limits live
in this algebra; concatenation of path increments is the Chen product.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

# Dense storage of level nu costs d**nu doubles; beyond depth 8 the d=4
# tables no longer fit sensible memory budgets.
MAX_DEPTH = 8


def word_to_offset(word: tuple[int, ...], dim: int) -> int:
    """Flat row-major offset of a word (i_1,...,i_nu), letters in 1..dim."""
    off = 0
    for letter in word:
        if not 1 <= letter <= dim:
            raise ValueError(f"letter {letter} outside 1..{dim}")
        off = off * dim + (letter - 1)
    return off


def offset_to_word(offset: int, dim: int, order: int) -> tuple[int, ...]:
    """Inverse of :func:`word_to_offset` for words of the given order."""
    if not 0 <= offset < dim**order:
        raise ValueError(f"offset {offset} outside [0, {dim**order})")
    letters = []
    for _ in range(order):
        offset, rem = divmod(offset, dim)
        letters.append(rem + 1)
    return tuple(reversed(letters))


def _as_level_array(coeffs, dim: int, order: int) -> np.ndarray:
    arr = np.asarray(coeffs, dtype=float).reshape(-1)
    if arr.size != dim**order:
        raise ValueError(
            f"level of order {order} over R^{dim} needs {dim**order} "
            f"coefficients, got {arr.size}"
        )
    return arr


@dataclass(frozen=True)
class TensorLevel:
    """One homogeneous level: dense coefficients of all words of one order."""

    dim: int
    order: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if self.order < 0:
            raise ValueError("order must be >= 0")
        arr = _as_level_array(self.coeffs, self.dim, self.order)
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    def __getitem__(self, word: tuple[int, ...]) -> float:
        if len(word) != self.order:
            raise ValueError(f"word length {len(word)} != order {self.order}")
        return float(self.coeffs[word_to_offset(word, self.dim)])

    @classmethod
    def zero(cls, dim: int, order: int) -> "TensorLevel":
        return cls(dim, order, np.zeros(dim**order))


def tensor_product(a: TensorLevel, b: TensorLevel) -> TensorLevel:
    """Tensor product of two levels; order adds, coefficients multiply.

    The result coefficient at word (w1, w2) is a[w1] * b[w2]; with
    row-major storage that is exactly the flattened outer product.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} != {b.dim}")
    return TensorLevel(a.dim, a.order + b.order, np.outer(a.coeffs, b.coeffs).ravel())


def level_norm(a: TensorLevel) -> float:
    """Euclidean norm of the coefficient array.

    This is a cross norm: ||a (x) b|| = ||a|| ||b||, so in particular it is
    sub-multiplicative under :func:`tensor_product`.
    """
    return float(np.linalg.norm(a.coeffs))


@dataclass(frozen=True)
class TruncatedTensor:
    """Element of the tensor algebra truncated at ``depth``."""

    dim: int
    depth: int
    levels: tuple[TensorLevel, ...] = field(default=None)

    def __post_init__(self):
        if not 1 <= self.depth <= MAX_DEPTH:
            raise ValueError(f"depth must be in 1..{MAX_DEPTH}")
        if self.levels is None or len(self.levels) != self.depth + 1:
            raise ValueError("need one level per order 0..depth")
        fixed = []
        for nu, lvl in enumerate(self.levels):
            if not isinstance(lvl, TensorLevel):
                lvl = TensorLevel(self.dim, nu, lvl)
            if lvl.order != nu or lvl.dim != self.dim:
                raise ValueError(f"level {nu} has order {lvl.order}, dim {lvl.dim}")
            fixed.append(lvl)
        object.__setattr__(self, "levels", tuple(fixed))

    @classmethod
    def identity(cls, dim: int, depth: int) -> "TruncatedTensor":
        """Neutral element of the Chen product: level 0 = 1, rest 0."""
        levels = [TensorLevel(dim, 0, [1.0])]
        levels += [TensorLevel.zero(dim, nu) for nu in range(1, depth + 1)]
        return cls(dim, depth, tuple(levels))

    @classmethod
    def from_arrays(cls, dim: int, depth: int, arrays) -> "TruncatedTensor":
        return cls(dim, depth, tuple(TensorLevel(dim, nu, arr) for nu, arr in enumerate(arrays)))

    def level(self, nu: int) -> TensorLevel:
        return self.levels[nu]

    def level_arrays(self) -> list[np.ndarray]:
        return [lvl.coeffs for lvl in self.levels]

    @property
    def scalar(self) -> float:
        return float(self.levels[0].coeffs[0])

    def is_grouplike(self, tol: float = 1e-9) -> bool:
        return abs(self.scalar - 1.0) <= tol

    def norm(self) -> float:
        """Euclidean norm across all levels (diagnostic only)."""
        return math.sqrt(sum(float(lvl.coeffs @ lvl.coeffs) for lvl in self.levels))

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "depth": self.depth,
            "levels": [lvl.coeffs.tolist() for lvl in self.levels],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, payload: dict) -> "TruncatedTensor":
        return cls.from_arrays(int(payload["dim"]), int(payload["depth"]), payload["levels"])

    @classmethod
    def from_json(cls, text: str) -> "TruncatedTensor":
        return cls.from_json_dict(json.loads(text))


def _check_pair(x: TruncatedTensor, y: TruncatedTensor) -> None:
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} != {y.dim}")
    if x.depth != y.depth:
        raise ValueError(f"depth mismatch: {x.depth} != {y.depth}")


def chen_concat(x: TruncatedTensor, y: TruncatedTensor) -> TruncatedTensor:
    """Chen (truncated tensor) product of two group-like elements.

    Level m of the result is sum_k x_k (x) y_{m-k}; for signatures of
    adjacent windows this is exactly the signature of the concatenation.
    """
    _check_pair(x, y)
    d, L = x.dim, x.depth
    xs = x.level_arrays()
    ys = y.level_arrays()
    out = chen_concat_arrays(xs, ys, d)
    return TruncatedTensor.from_arrays(d, L, out)


def chen_concat_arrays(xs: list[np.ndarray], ys: list[np.ndarray], dim: int) -> list[np.ndarray]:
    """Chen product on raw level arrays (level m = sum_k xs[k] (x) ys[m-k])."""
    L = len(xs) - 1
    out = []
    for m in range(L + 1):
        acc = np.zeros(dim**m)
        for k in range(m + 1):
            acc += np.multiply.outer(xs[k], ys[m - k]).ravel()
        out.append(acc)
    return out


def chen_inverse_arrays(xs: list[np.ndarray], dim: int) -> list[np.ndarray]:
    """Group inverse of a group-like element given as raw level arrays.

    Writing g = 1 + r with r supported on levels >= 1, the inverse is the
    truncated Neumann series sum_k (-r)^(x)k.
    """
    L = len(xs) - 1
    if not np.isclose(xs[0][0], 1.0):
        raise ValueError("group inverse requires a group-like element (level 0 = 1)")
    neg = [np.zeros(1)] + [-x for x in xs[1:]]
    acc = [np.array([1.0])] + [np.zeros(dim**m) for m in range(1, L + 1)]
    term = acc
    for _ in range(L):
        term = chen_concat_arrays(term, neg, dim)
        acc = [a + t for a, t in zip(acc, term)]
    acc[0] = np.array([1.0])
    return acc


def chen_inverse(x: TruncatedTensor) -> TruncatedTensor:
    """Inverse of a group-like tensor: chen_concat(x, chen_inverse(x)) = 1."""
    return TruncatedTensor.from_arrays(x.dim, x.depth, chen_inverse_arrays(x.level_arrays(), x.dim))
