"""Trust-region policy optimization with low-rank matrix actors and critics.

The policy's per-state Gaussian mean/std and the critic's value table live in
low-rank factorized matrices over a discretized state grid; updates are
KL-constrained natural-gradient steps solved by conjugate gradient.
"""

from .config import ExperimentConfig, load_config, preset_config
from .critic import Critic, monte_carlo_returns
from .discretizer import StateGrid
from .envs import make_env
from .errors import ConfigError, DivergenceError, NumericError
from .factorization import FlatParams, LowRankMatrix, init_factors
from .policy import GaussianPolicy
from .trainer import Trainer, collect_rollouts, evaluate, train
from .trustregion import TrustRegionConfig, trust_region_update

__all__ = [
    "ConfigError",
    "Critic",
    "DivergenceError",
    "ExperimentConfig",
    "FlatParams",
    "GaussianPolicy",
    "LowRankMatrix",
    "NumericError",
    "StateGrid",
    "Trainer",
    "TrustRegionConfig",
    "collect_rollouts",
    "evaluate",
    "init_factors",
    "load_config",
    "make_env",
    "monte_carlo_returns",
    "preset_config",
    "train",
    "trust_region_update",
]

__version__ = "0.1.0"
