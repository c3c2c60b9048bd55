"""KL-constrained natural-gradient step for the actor.

Each iteration linearizes the importance-weighted advantage objective and
quadratically models the KL constraint by the Fisher information matrix,
estimated as the batch mean of score outer products. Conjugate gradient
solves H x = g matrix-free; the step is scaled onto the trust-region
boundary and then backtracked until the sampled KL and the sampled
surrogate both accept it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .policy import GaussianPolicy


@dataclass
class TrustRegionConfig:
    delta: float = 1e-2          # KL radius
    cg_iters: int = 10
    cg_tol: float = 1e-10        # relative residual target
    damping: float = 1e-2        # added to the FVP; the sampled FIM is singular
    backtrack_ratio: float = 0.8
    max_backtracks: int = 10

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.damping < 0:
            raise ValueError("damping must be >= 0")
        if not 0.0 < self.backtrack_ratio < 1.0:
            raise ValueError("backtrack_ratio must lie in (0, 1)")


@dataclass
class StepDiagnostics:
    surrogate_before: float
    surrogate_after: float
    kl_after: float
    cg_residual: float
    step_scale: float
    n_backtracks: int
    accepted: bool


def surrogate_gradient(buffer, policy_old: GaussianPolicy) -> np.ndarray:
    """Batch-mean policy gradient g = mean_t rho_t * score_t * A_t.

    Evaluated at the sampling policy, so every importance ratio rho_t is 1;
    the ratios are still computed against the buffer's frozen log-probs as a
    consistency check.
    """
    n = len(buffer.rows)
    if n == 0:
        raise ValueError("empty buffer")
    log_probs = policy_old.log_probs_at(buffer.rows, buffer.cols, buffer.actions)
    ratios = np.exp(log_probs - buffer.old_log_probs)
    if not np.allclose(ratios, 1.0, atol=1e-8):
        raise NumericError("importance ratios at the old policy are not 1; "
                           "buffer log-probs were not frozen under this policy")
    scores = policy_old.score_matrix(buffer.rows, buffer.cols, buffer.actions)
    return scores.T @ (ratios * buffer.advantages) / n


class FisherOperator:
    """Matrix-free H v = mean_t score_t (score_t . v) + damping * v."""

    def __init__(self, buffer, policy_old: GaussianPolicy, damping: float = 0.0):
        self.scores = policy_old.score_matrix(buffer.rows, buffer.cols,
                                              buffer.actions)
        self.damping = damping
        self.n = len(self.scores)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.size != self.scores.shape[1]:
            raise ValueError(
                f"vector length {v.size} does not match layout "
                f"{self.scores.shape[1]}"
            )
        return self.scores.T @ (self.scores @ v) / self.n + self.damping * v


def fisher_vector_product(buffer, policy_old: GaussianPolicy, v,
                          damping: float = 0.0) -> np.ndarray:
    """One-shot form of FisherOperator for a single vector."""
    return FisherOperator(buffer, policy_old, damping)(v)


def conjugate_gradient(apply_h, g: np.ndarray, cg_iters: int = 10,
                       cg_tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Approximately solve H x = g for symmetric PSD H.

    Returns (x, relative residual |H x - g| / |g|). Stops when the residual
    target is met or the iteration budget is exhausted.
    """
    g = np.asarray(g, dtype=float)
    x = np.zeros_like(g)
    g_norm = math.sqrt(float(g @ g))
    if g_norm == 0.0:
        return x, 0.0
    r = g.copy()
    p = g.copy()
    rdotr = float(r @ r)
    for _ in range(cg_iters):
        if math.sqrt(rdotr) <= cg_tol * g_norm:
            break
        z = apply_h(p)
        pz = float(p @ z)
        if pz <= 0 or not math.isfinite(pz):
            raise NumericError("CG curvature is not positive; "
                               "increase the FVP damping")
        alpha = rdotr / pz
        x += alpha * p
        r -= alpha * z
        new_rdotr = float(r @ r)
        if not math.isfinite(new_rdotr):
            raise NumericError("CG residual diverged; increase the FVP damping")
        p = r + (new_rdotr / rdotr) * p
        rdotr = new_rdotr
    true_resid = apply_h(x) - g
    return x, math.sqrt(float(true_resid @ true_resid)) / g_norm


def sampled_surrogate(buffer, policy_old: GaussianPolicy,
                      policy_new: GaussianPolicy) -> float:
    """Importance-weighted advantage objective on the batch."""
    lp_new = policy_new.log_probs_at(buffer.rows, buffer.cols, buffer.actions)
    ratios = np.exp(lp_new - buffer.old_log_probs)
    return float(np.mean(ratios * buffer.advantages))


def trust_region_update(policy_old: GaussianPolicy, buffer,
                        cfg: TrustRegionConfig
                        ) -> tuple[GaussianPolicy, StepDiagnostics]:
    """Propose, scale, and line-search one actor step.

    The CG direction x is scaled to the constraint boundary,
    step = sqrt(2 delta / x.H x) * x, then shrunk geometrically until the
    sampled KL fits the radius and the sampled surrogate does not decrease.
    Exhausting the backtracking budget rejects the step (actor unchanged);
    training treats that as a null iteration, not an error.
    """
    surrogate_before = float(np.mean(buffer.advantages))
    g = surrogate_gradient(buffer, policy_old)
    if not np.any(g):
        diag = StepDiagnostics(surrogate_before, surrogate_before, 0.0, 0.0,
                               0.0, 0, accepted=True)
        return policy_old, diag

    apply_h = FisherOperator(buffer, policy_old, cfg.damping)
    x, cg_residual = conjugate_gradient(apply_h, g, cfg.cg_iters, cfg.cg_tol)
    xhx = float(x @ apply_h(x))
    if xhx <= 0 or not math.isfinite(xhx):
        raise NumericError("step direction has non-positive curvature; "
                           "increase the FVP damping")
    full_step = math.sqrt(2.0 * cfg.delta / xhx) * x

    theta_old = policy_old.to_flat().values
    scale = 1.0
    for m in range(cfg.max_backtracks):
        candidate = policy_old.with_flat(theta_old + scale * full_step)
        kl = policy_old.kl_at(candidate, buffer.rows, buffer.cols)
        surrogate = sampled_surrogate(buffer, policy_old, candidate)
        if kl <= cfg.delta and surrogate >= surrogate_before:
            diag = StepDiagnostics(surrogate_before, surrogate, kl,
                                   cg_residual, scale, m, accepted=True)
            return candidate, diag
        scale *= cfg.backtrack_ratio
    diag = StepDiagnostics(surrogate_before, surrogate_before, 0.0,
                           cg_residual, 0.0, cfg.max_backtracks,
                           accepted=False)
    return policy_old, diag
