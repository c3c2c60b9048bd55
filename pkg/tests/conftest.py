import numpy as np

from lrtrpo.discretizer import StateGrid
from lrtrpo.factorization import LowRankMatrix
from lrtrpo.policy import GaussianPolicy


def small_grid(n_cells=(4, 5)):
    return StateGrid([(0.0, 1.0, n_cells[0]), (0.0, 1.0, n_cells[1])],
                     row_dims=[0], col_dims=[1])


def random_policy(seed, state_dep_sigma=False, grid=None, rank=2,
                  sigma_floor=1e-3):
    """Random well-conditioned policy: sigma safely above the floor."""
    rng = np.random.default_rng(seed)
    grid = grid or small_grid()
    n, m = grid.shape()
    mu = LowRankMatrix(rng.normal(0.0, 0.6, (n, rank)),
                       rng.normal(0.0, 0.6, (rank, m)))
    if state_dep_sigma:
        # positive factors keep every raw sigma entry well above the floor
        sigma = LowRankMatrix(rng.uniform(0.5, 1.0, (n, rank)),
                              rng.uniform(0.5, 1.0, (rank, m)))
    else:
        sigma = rng.uniform(0.4, 1.5)
    return GaussianPolicy(mu, sigma, grid, sigma_floor=sigma_floor)


class SampleBatch:
    """Buffer stand-in carrying exactly what the update operators read."""

    def __init__(self, rows, cols, actions, advantages, old_log_probs):
        self.rows = np.asarray(rows)
        self.cols = np.asarray(cols)
        self.actions = np.asarray(actions, dtype=float)
        self.advantages = np.asarray(advantages, dtype=float)
        self.old_log_probs = np.asarray(old_log_probs, dtype=float)


def make_batch(policy, n, seed, adv_scale=1.0):
    """Synthetic on-policy batch: actions sampled from the given policy."""
    rng = np.random.default_rng(seed)
    states = rng.uniform(0, 1, size=(n, 2))
    rows, cols = policy.grid.states_to_indices(states)
    mus, sigmas = policy.cell_params_at(rows, cols)
    actions = mus + sigmas * rng.standard_normal(n)
    old_log_probs = policy.log_probs_at(rows, cols, actions)
    advantages = adv_scale * rng.normal(size=n)
    return SampleBatch(rows, cols, actions, advantages, old_log_probs)


def fd_gradient(f, theta, h=1e-5):
    """Central finite differences of scalar f at parameter vector theta."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        step = h * max(1.0, abs(theta[i]))
        up = theta.copy()
        up[i] += step
        dn = theta.copy()
        dn[i] -= step
        grad[i] = (f(up) - f(dn)) / (2.0 * step)
    return grad


def assert_close_rel(analytic, fd, rel_tol=1e-6, abs_tol=1e-8):
    """Elementwise |a - f| <= abs_tol + rel_tol * max(|a|, |f|).

    abs_tol is the central-difference noise floor (roundoff ~ eps * |f| / h);
    entries large enough to rise above it are held to the relative tolerance.
    """
    analytic = np.asarray(analytic, dtype=float)
    fd = np.asarray(fd, dtype=float)
    assert analytic.shape == fd.shape
    for a, f in zip(analytic.ravel(), fd.ravel()):
        bound = abs_tol + rel_tol * max(abs(a), abs(f))
        assert abs(a - f) <= bound, (
            f"analytic {a} vs fd {f}: diff {abs(a - f)} > {bound}")
