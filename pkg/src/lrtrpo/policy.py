"""Gaussian policy whose per-state mean and std live in low-rank matrices.

For a state falling in grid cell (i, j), the action distribution is
N(mu, sigma) with mu = [L_mu R_mu]_{i,j} and sigma the entry of a second
factorized matrix (or a single shared scalar, the default). Score gradients
with respect to the factor entries are analytic: the chain rule through the
bilinear entry map leaves exactly one nonzero row of d_mu_left and one
nonzero column of d_mu_right per sample.

Raw sigma values are floored at a small positive constant instead of being
reparameterized, so the factor derivatives keep their literal form; states
whose raw sigma sits at or below the floor get zero sigma-gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretizer import StateGrid
from .factorization import FlatParams, LowRankMatrix

LOG_2PI = math.log(2.0 * math.pi)


def gaussian_log_prob(a: float, mu: float, sigma: float) -> float:
    return -((a - mu) ** 2) / (2.0 * sigma**2) - math.log(sigma) - 0.5 * LOG_2PI


@dataclass
class ScoreGradient:
    """Per-sample gradient of log pi w.r.t. the actor factor entries."""

    d_mu_left: np.ndarray
    d_mu_right: np.ndarray
    d_sigma_left: np.ndarray | None = None
    d_sigma_right: np.ndarray | None = None
    d_sigma_scalar: float | None = None

    def to_flat(self) -> np.ndarray:
        parts = [self.d_mu_left.ravel(), self.d_mu_right.ravel()]
        if self.d_sigma_scalar is not None:
            parts.append(np.array([self.d_sigma_scalar]))
        else:
            parts.append(self.d_sigma_left.ravel())
            parts.append(self.d_sigma_right.ravel())
        return np.concatenate(parts)


class GaussianPolicy:
    """pi(a|s) = N(a | mu(s), sigma(s)) over a discretized state space.

    sigma_raw is either a LowRankMatrix (state-dependent std) or a plain
    float (one shared std for every state, the common simplification).
    """

    def __init__(self, mu: LowRankMatrix, sigma_raw, grid: StateGrid,
                 sigma_floor: float = 1e-2):
        if (mu.n_rows, mu.n_cols) != grid.shape():
            raise ValueError(
                f"mu is {mu.n_rows}x{mu.n_cols}, grid is {grid.shape()}"
            )
        if isinstance(sigma_raw, LowRankMatrix):
            if (sigma_raw.n_rows, sigma_raw.n_cols) != grid.shape():
                raise ValueError("sigma matrix shape does not match grid")
        else:
            sigma_raw = float(sigma_raw)
        if sigma_floor <= 0:
            raise ValueError("sigma_floor must be positive")
        self.mu = mu
        self.sigma_raw = sigma_raw
        self.grid = grid
        self.sigma_floor = sigma_floor

    @property
    def state_independent_sigma(self) -> bool:
        return not isinstance(self.sigma_raw, LowRankMatrix)

    # ----- single-state evaluation ------------------------------------

    def mean(self, s) -> float:
        i, j = self.grid.state_to_indices(s)
        return self.mu.entry(i, j)

    def std(self, s) -> float:
        if self.state_independent_sigma:
            return max(self.sigma_raw, self.sigma_floor)
        i, j = self.grid.state_to_indices(s)
        return max(self.sigma_raw.entry(i, j), self.sigma_floor)

    def sample_action(self, s, rng) -> float:
        i, j = self.grid.state_to_indices(s)
        mu, sigma = self.cell_params(i, j)
        return mu + sigma * rng.standard_normal()

    def log_prob(self, s, a) -> float:
        i, j = self.grid.state_to_indices(s)
        mu, sigma = self.cell_params(i, j)
        return gaussian_log_prob(a, mu, sigma)

    def cell_params(self, i: int, j: int) -> tuple[float, float]:
        mu = self.mu.entry(i, j)
        if self.state_independent_sigma:
            raw = self.sigma_raw
        else:
            raw = self.sigma_raw.entry(i, j)
        return mu, max(raw, self.sigma_floor)

    def score(self, s, a) -> ScoreGradient:
        """Gradient of log pi(a|s) w.r.t. every actor factor entry.

        d_mu_left[i,k]  = 1{i=i_s} (a-mu)/sigma^2 * R_mu[k,j_s]
        d_mu_right[k,j] = 1{j=j_s} (a-mu)/sigma^2 * L_mu[i_s,k]
        and symmetrically for sigma with coefficient (a-mu)^2/sigma^3 - 1/sigma,
        gated to zero where the raw sigma is at the floor.
        """
        i, j = self.grid.state_to_indices(s)
        mu, sigma = self.cell_params(i, j)
        mu_coef = (a - mu) / sigma**2
        sig_coef = (a - mu) ** 2 / sigma**3 - 1.0 / sigma

        d_mu_left = np.zeros_like(self.mu.left)
        d_mu_right = np.zeros_like(self.mu.right)
        d_mu_left[i, :] = mu_coef * self.mu.right[:, j]
        d_mu_right[:, j] = mu_coef * self.mu.left[i, :]

        if self.state_independent_sigma:
            active = self.sigma_raw > self.sigma_floor
            return ScoreGradient(d_mu_left, d_mu_right,
                                 d_sigma_scalar=sig_coef if active else 0.0)

        active = self.sigma_raw.entry(i, j) > self.sigma_floor
        d_sig_left = np.zeros_like(self.sigma_raw.left)
        d_sig_right = np.zeros_like(self.sigma_raw.right)
        if active:
            d_sig_left[i, :] = sig_coef * self.sigma_raw.right[:, j]
            d_sig_right[:, j] = sig_coef * self.sigma_raw.left[i, :]
        return ScoreGradient(d_mu_left, d_mu_right, d_sig_left, d_sig_right)

    # ----- batch evaluation over index arrays -------------------------

    def cell_params_at(self, rows, cols) -> tuple[np.ndarray, np.ndarray]:
        mus = self.mu.entries(rows, cols)
        if self.state_independent_sigma:
            sigma = max(self.sigma_raw, self.sigma_floor)
            sigmas = np.full_like(mus, sigma)
        else:
            sigmas = np.maximum(self.sigma_raw.entries(rows, cols), self.sigma_floor)
        return mus, sigmas

    def log_probs_at(self, rows, cols, actions) -> np.ndarray:
        mus, sigmas = self.cell_params_at(rows, cols)
        a = np.asarray(actions, dtype=float)
        return -((a - mus) ** 2) / (2.0 * sigmas**2) - np.log(sigmas) - 0.5 * LOG_2PI

    def score_matrix(self, rows, cols, actions) -> np.ndarray:
        """Dense (n_samples, n_params) matrix whose row t is score(s_t, a_t).

        Row t equals score(s_t, a_t).to_flat(); built by scatter rather than
        per-sample loops so the Fisher-vector products over a rollout batch
        stay cheap.
        """
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        a = np.asarray(actions, dtype=float)
        n = len(a)
        k = self.mu.rank
        n_rows, n_cols = self.mu.n_rows, self.mu.n_cols
        mus, sigmas = self.cell_params_at(rows, cols)
        mu_coef = (a - mus) / sigmas**2
        sig_coef = (a - mus) ** 2 / sigmas**3 - 1.0 / sigmas

        out = np.zeros((n, self.n_params))
        sample_idx = np.arange(n)[:, None]
        # mu left-factor block: columns i*K + k
        left_cols = rows[:, None] * k + np.arange(k)[None, :]
        out[sample_idx, left_cols] = mu_coef[:, None] * self.mu.right[:, cols].T
        # mu right-factor block: columns N*K + k*M + j
        off = n_rows * k
        right_cols = off + np.arange(k)[None, :] * n_cols + cols[:, None]
        out[sample_idx, right_cols] = mu_coef[:, None] * self.mu.left[rows, :]

        off += k * n_cols
        if self.state_independent_sigma:
            if self.sigma_raw > self.sigma_floor:
                out[:, off] = sig_coef
        else:
            raw = self.sigma_raw.entries(rows, cols)
            gated = np.where(raw > self.sigma_floor, sig_coef, 0.0)
            ks = self.sigma_raw.rank
            s_left_cols = off + rows[:, None] * ks + np.arange(ks)[None, :]
            out[sample_idx, s_left_cols] = gated[:, None] * self.sigma_raw.right[:, cols].T
            off += n_rows * ks
            s_right_cols = off + np.arange(ks)[None, :] * n_cols + cols[:, None]
            out[sample_idx, s_right_cols] = gated[:, None] * self.sigma_raw.left[rows, :]
        return out

    # ----- KL divergence ----------------------------------------------

    def kl_at(self, new: "GaussianPolicy", rows, cols) -> float:
        """Mean closed-form KL(old || new) over the given grid cells."""
        mu_old, sig_old = self.cell_params_at(rows, cols)
        mu_new, sig_new = new.cell_params_at(rows, cols)
        per_state = (np.log(sig_new / sig_old)
                     + (sig_old**2 + (mu_old - mu_new) ** 2) / (2.0 * sig_new**2)
                     - 0.5)
        return float(np.mean(per_state))

    def kl(self, new: "GaussianPolicy", states) -> float:
        """Mean KL(old || new) over a list of raw states."""
        rows, cols = self.grid.states_to_indices(np.atleast_2d(np.asarray(states)))
        return self.kl_at(new, rows, cols)

    # ----- flat parameter vector ---------------------------------------

    def flat_layout(self) -> list:
        layout = [("mu.left", self.mu.n_rows, self.mu.rank),
                  ("mu.right", self.mu.rank, self.mu.n_cols)]
        if self.state_independent_sigma:
            layout.append(("sigma", 1, 1))
        else:
            layout.append(("sigma.left", self.sigma_raw.n_rows, self.sigma_raw.rank))
            layout.append(("sigma.right", self.sigma_raw.rank, self.sigma_raw.n_cols))
        return layout

    @property
    def n_params(self) -> int:
        return sum(r * c for _, r, c in self.flat_layout())

    def to_flat(self) -> FlatParams:
        parts = [self.mu.left.ravel(), self.mu.right.ravel()]
        if self.state_independent_sigma:
            parts.append(np.array([self.sigma_raw]))
        else:
            parts.append(self.sigma_raw.left.ravel())
            parts.append(self.sigma_raw.right.ravel())
        return FlatParams(np.concatenate(parts), self.flat_layout())

    def with_flat(self, values) -> "GaussianPolicy":
        """New policy with parameters taken from a flat vector."""
        if isinstance(values, FlatParams):
            values = values.values
        values = np.asarray(values, dtype=float)
        if values.size != self.n_params:
            raise ValueError(f"expected {self.n_params} params, got {values.size}")
        p = FlatParams(values, self.flat_layout())
        mu = LowRankMatrix(p.segment("mu.left").copy(), p.segment("mu.right").copy())
        if self.state_independent_sigma:
            sigma_raw = float(p.segment("sigma")[0, 0])
        else:
            sigma_raw = LowRankMatrix(p.segment("sigma.left").copy(),
                                      p.segment("sigma.right").copy())
        return GaussianPolicy(mu, sigma_raw, self.grid, self.sigma_floor)

    def copy(self) -> "GaussianPolicy":
        sigma = self.sigma_raw.copy() if not self.state_independent_sigma \
            else self.sigma_raw
        return GaussianPolicy(self.mu.copy(), sigma, self.grid, self.sigma_floor)


# ----- discrete-action softmax variant --------------------------------


def softmax_probs(weights: LowRankMatrix, state_index: int) -> np.ndarray:
    """Action probabilities softmax([L R]_{state, :}) for one state row."""
    logits = weights.left[state_index, :] @ weights.right
    logits = logits - logits.max()  # shift for stability
    e = np.exp(logits)
    return e / e.sum()


def softmax_score(weights: LowRankMatrix, state_index: int,
                  action_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of log softmax pi(a|s) w.r.t. the weight factors.

    With q = onehot(a) - probs, the chain rule through the bilinear entry
    map gives d_left[i,:] = 1{i=s} q @ R^T and d_right[:,j] = q_j * L[s,:].
    """
    probs = softmax_probs(weights, state_index)
    q = -probs
    q[action_index] += 1.0
    d_left = np.zeros_like(weights.left)
    d_right = np.zeros_like(weights.right)
    d_left[state_index, :] = weights.right @ q
    d_right[:, :] = np.outer(weights.left[state_index, :], q)
    return d_left, d_right
