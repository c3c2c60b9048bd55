"""Low-rank matrix factors shared by the actor and the critic.

An N x M matrix X is stored as the product of a tall factor L (N x K) and a
fat factor R (K x M) with K small. Entries are only ever read one at a time
(per visited grid cell), so nothing here materializes the full product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class LayoutError(ValueError):
    """Flat-vector length or segment shapes do not match the layout."""


@dataclass
class LowRankMatrix:
    """X = left @ right with left (N x K) and right (K x M)."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=float)
        self.right = np.asarray(self.right, dtype=float)
        if self.left.ndim != 2 or self.right.ndim != 2:
            raise ValueError("factors must be 2-D arrays")
        if self.left.shape[1] != self.right.shape[0]:
            raise ValueError(
                f"rank mismatch: left is {self.left.shape}, right is {self.right.shape}"
            )

    @property
    def n_rows(self) -> int:
        return self.left.shape[0]

    @property
    def n_cols(self) -> int:
        return self.right.shape[1]

    @property
    def rank(self) -> int:
        return self.left.shape[1]

    def entry(self, i: int, j: int) -> float:
        """Single entry [X]_{i,j} = sum_k left[i,k] * right[k,j]."""
        if not (0 <= i < self.n_rows and 0 <= j < self.n_cols):
            raise IndexError(f"entry ({i}, {j}) outside {self.n_rows}x{self.n_cols}")
        return float(self.left[i, :] @ self.right[:, j])

    def entries(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Vectorized gather of [X]_{rows[t], cols[t]} for index arrays."""
        return np.einsum("tk,kt->t", self.left[rows, :], self.right[:, cols])

    def param_count(self) -> int:
        return self.rank * (self.n_rows + self.n_cols)

    def copy(self) -> "LowRankMatrix":
        return LowRankMatrix(self.left.copy(), self.right.copy())


def init_factors(n: int, m: int, k: int, scale: float, seed,
                 eps_init: float = 0.1) -> LowRankMatrix:
    """Random factors with entries i.i.d. uniform on [scale(1-eps), scale(1+eps)].

    Uniform around a positive scale rather than zero-mean, so products such as
    the standard-deviation matrix start strictly positive. eps_init=0 gives
    constant factors (every entry of X equals k * scale**2).
    """
    if n < 1 or m < 1 or k < 1:
        raise ValueError("n, m, k must all be >= 1")
    if k > min(n, m):
        raise ValueError(f"rank {k} exceeds min(n, m) = {min(n, m)}")
    if scale <= 0:
        raise ValueError("scale must be positive")
    rng = np.random.default_rng(seed)
    lo, hi = scale * (1.0 - eps_init), scale * (1.0 + eps_init)
    left = rng.uniform(lo, hi, size=(n, k))
    right = rng.uniform(lo, hi, size=(k, m))
    return LowRankMatrix(left, right)


@dataclass
class FlatParams:
    """All factor entries in one vector, with the segment layout to undo it.

    Segment order is fixed (left factor then right factor, matrices in the
    order given to flatten) so that gradient/CG vectors line up across calls.
    """

    values: np.ndarray
    layout: list = field(default_factory=list)  # (name, rows, cols) per segment

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        total = sum(r * c for _, r, c in self.layout)
        if total != self.values.size:
            raise LayoutError(
                f"layout wants {total} values, vector has {self.values.size}"
            )

    def segment(self, name: str) -> np.ndarray:
        """View of one named segment, reshaped to its matrix shape."""
        offset = 0
        for seg_name, r, c in self.layout:
            if seg_name == name:
                return self.values[offset:offset + r * c].reshape(r, c)
            offset += r * c
        raise KeyError(name)

    def with_values(self, values: np.ndarray) -> "FlatParams":
        return FlatParams(np.asarray(values, dtype=float), self.layout)


def flatten(matrices) -> FlatParams:
    """Concatenate factor entries of each matrix, row-major, L before R."""
    parts, layout = [], []
    for idx, m in enumerate(matrices):
        parts.append(m.left.ravel())
        parts.append(m.right.ravel())
        layout.append((f"m{idx}.left", m.n_rows, m.rank))
        layout.append((f"m{idx}.right", m.rank, m.n_cols))
    values = np.concatenate(parts) if parts else np.zeros(0)
    return FlatParams(values, layout)


def unflatten(p: FlatParams) -> list:
    """Inverse of flatten: rebuild the LowRankMatrix list from the vector."""
    if len(p.layout) % 2 != 0:
        raise LayoutError("layout must pair left/right segments")
    out = []
    offset = 0
    for seg_idx in range(0, len(p.layout), 2):
        lname, ln, lk = p.layout[seg_idx]
        rname, rk, rm = p.layout[seg_idx + 1]
        if lk != rk or not lname.endswith(".left") or not rname.endswith(".right"):
            raise LayoutError(f"segments {lname}/{rname} do not form a factor pair")
        left = p.values[offset:offset + ln * lk].reshape(ln, lk)
        offset += ln * lk
        right = p.values[offset:offset + rk * rm].reshape(rk, rm)
        offset += rk * rm
        out.append(LowRankMatrix(left.copy(), right.copy()))
    return out


def param_count(matrices) -> int:
    """Total K_i * (N_i + M_i) over the given matrices."""
    return sum(m.param_count() for m in matrices)
