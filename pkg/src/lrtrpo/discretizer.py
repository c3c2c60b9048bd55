"""Regular-grid discretization of continuous states into matrix indices.

Each state dimension is binned uniformly; the bins of the dimensions assigned
to ``row_dims`` are flattened (mixed radix) into a single row index, and the
``col_dims`` bins into a single column index. States outside the nominal
bounds clamp to the boundary cells, so downstream matrix lookups are total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridDim:
    lower: float
    upper: float
    n_cells: int

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"need lower < upper, got [{self.lower}, {self.upper}]")
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")


class StateGrid:
    """Per-dimension bins plus a row/column split of the dimensions."""

    def __init__(self, dims, row_dims, col_dims):
        self.dims = [d if isinstance(d, GridDim) else GridDim(*d) for d in dims]
        self.row_dims = list(row_dims)
        self.col_dims = list(col_dims)
        if not self.row_dims or not self.col_dims:
            raise ValueError("row_dims and col_dims must both be non-empty")
        if sorted(self.row_dims + self.col_dims) != list(range(len(self.dims))):
            raise ValueError(
                f"row_dims {self.row_dims} and col_dims {self.col_dims} must "
                f"partition dimensions 0..{len(self.dims) - 1}"
            )
        self._lo = np.array([d.lower for d in self.dims])
        self._hi = np.array([d.upper for d in self.dims])
        self._cells = np.array([d.n_cells for d in self.dims])

    @property
    def state_dim(self) -> int:
        return len(self.dims)

    @property
    def n_rows(self) -> int:
        return int(np.prod(self._cells[self.row_dims]))

    @property
    def n_cols(self) -> int:
        return int(np.prod(self._cells[self.col_dims]))

    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_cols

    def cell_indices(self, s) -> np.ndarray:
        """Per-dimension cell index with clamping to [0, n_cells - 1]."""
        s = np.asarray(s, dtype=float)
        if s.shape != (self.state_dim,):
            raise ValueError(f"state has shape {s.shape}, grid wants ({self.state_dim},)")
        frac = (s - self._lo) / (self._hi - self._lo)
        idx = np.floor(frac * self._cells).astype(int)
        return np.clip(idx, 0, self._cells - 1)

    def state_to_indices(self, s) -> tuple[int, int]:
        """Map a state to its (row, col) matrix indices."""
        cells = self.cell_indices(s)
        return self._flatten(cells, self.row_dims), self._flatten(cells, self.col_dims)

    def _flatten(self, cells: np.ndarray, dim_order) -> int:
        idx = 0
        for d in dim_order:
            idx = idx * int(self._cells[d]) + int(cells[d])
        return idx

    def states_to_indices(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized state_to_indices over an (n, D) batch."""
        states = np.asarray(states, dtype=float)
        frac = (states - self._lo) / (self._hi - self._lo)
        cells = np.clip(np.floor(frac * self._cells).astype(int), 0, self._cells - 1)
        rows = np.zeros(len(states), dtype=int)
        for d in self.row_dims:
            rows = rows * int(self._cells[d]) + cells[:, d]
        cols = np.zeros(len(states), dtype=int)
        for d in self.col_dims:
            cols = cols * int(self._cells[d]) + cells[:, d]
        return rows, cols


def default_split(state_dim: int) -> tuple[list[int], list[int]]:
    """First half of the dimensions to rows, the rest to columns."""
    if state_dim < 2:
        raise ValueError("need at least 2 state dimensions to split")
    half = state_dim // 2
    return list(range(half)), list(range(half, state_dim))
