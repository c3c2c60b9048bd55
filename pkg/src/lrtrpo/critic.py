"""Low-rank value-function critic and Monte Carlo return targets.

The value table V is a factorized N x M matrix indexed by the same grid cells
as the policy. It is fit to within-episode Monte Carlo returns by plain
gradient descent on the squared-error loss

    L(omega) = 1/2 * sum_t (G_t - V(s_t))^2,

whose factor gradients again inherit the one-row / one-column sparsity of the
bilinear entry map. Advantages are the residuals G_t - V(s_t) under the
critic as it was before the current batch's update.
"""

from __future__ import annotations

import numpy as np

from .discretizer import StateGrid
from .errors import DivergenceError
from .factorization import LowRankMatrix


def monte_carlo_returns(rewards, gamma: float = 1.0) -> np.ndarray:
    """Reverse cumulative (optionally discounted) sum over one episode."""
    rewards = np.asarray(rewards, dtype=float)
    out = np.zeros_like(rewards)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


class Critic:
    """V(s) = [L R]_{i_s, j_s} with gradient-descent fitting."""

    def __init__(self, vf: LowRankMatrix, grid: StateGrid,
                 learning_rate: float = 1e-3):
        if (vf.n_rows, vf.n_cols) != grid.shape():
            raise ValueError(f"vf is {vf.n_rows}x{vf.n_cols}, grid is {grid.shape()}")
        if not vf.rank < min(vf.n_rows, vf.n_cols):
            raise ValueError("critic rank must be strictly below min(N, M)")
        if learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        self.vf = vf
        self.grid = grid
        self.learning_rate = learning_rate

    def value(self, s) -> float:
        i, j = self.grid.state_to_indices(s)
        return self.vf.entry(i, j)

    def values_at(self, rows, cols) -> np.ndarray:
        return self.vf.entries(np.asarray(rows), np.asarray(cols))

    def loss(self, buffer) -> float:
        resid = buffer.returns - self.values_at(buffer.rows, buffer.cols)
        return 0.5 * float(resid @ resid)

    def gradient(self, buffer) -> tuple[np.ndarray, np.ndarray]:
        """Descent gradient of the squared-error loss w.r.t. (left, right).

        d_left[i, k] = -sum_t 1{i = i_t} (G_t - V_t) right[k, j_t]
        d_right[k, j] = -sum_t 1{j = j_t} (G_t - V_t) left[i_t, k]
        """
        if len(buffer.rows) == 0:
            raise ValueError("empty buffer")
        rows = np.asarray(buffer.rows)
        cols = np.asarray(buffer.cols)
        resid = buffer.returns - self.values_at(rows, cols)
        n, m = self.vf.n_rows, self.vf.n_cols
        # bincount per rank component: much faster than scatter-add here
        d_left = np.stack([
            -np.bincount(rows, weights=resid * self.vf.right[k, cols],
                         minlength=n)
            for k in range(self.vf.rank)
        ], axis=1)
        d_right = np.stack([
            -np.bincount(cols, weights=resid * self.vf.left[rows, k],
                         minlength=m)
            for k in range(self.vf.rank)
        ], axis=0)
        return d_left, d_right

    def update(self, buffer, n_steps: int | None = None,
               learning_rate: float | None = None) -> np.ndarray:
        """Run gradient-descent steps on the batch; returns the loss trace.

        The trace has n_steps + 1 entries: the loss before any step, then
        after each step. Raises DivergenceError if the loss leaves the reals.
        """
        n_steps = 1 if n_steps is None else int(n_steps)
        alpha = self.learning_rate if learning_rate is None else learning_rate
        trace = np.zeros(n_steps + 1)
        trace[0] = self.loss(buffer)
        with np.errstate(over="ignore", invalid="ignore"):
            for step in range(n_steps):
                d_left, d_right = self.gradient(buffer)
                self.vf.left -= alpha * d_left
                self.vf.right -= alpha * d_right
                trace[step + 1] = self.loss(buffer)
                if not np.isfinite(trace[step + 1]):
                    raise DivergenceError(
                        "critic loss diverged; decrease the critic learning rate"
                    )
        return trace

    def advantages(self, buffer, normalize: bool = False) -> np.ndarray:
        """A_t = G_t - V(s_t); optionally standardized over the batch."""
        adv = buffer.returns - self.values_at(buffer.rows, buffer.cols)
        if normalize:
            std = adv.std()
            adv = (adv - adv.mean()) / (std if std > 0 else 1.0)
        return adv

    def copy(self) -> "Critic":
        return Critic(self.vf.copy(), self.grid, self.learning_rate)
