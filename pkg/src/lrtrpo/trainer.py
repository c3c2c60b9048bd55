"""The full training loop: collect, actor trust-region step, critic descent.

Iteration order matters and is fixed: rollouts are collected under the
current actor, advantages are formed against the critic as it stood *before*
this iteration, the actor takes its KL-constrained step, and only then does
the critic descend on the same batch. The buffer is discarded afterwards;
nothing is reused across iterations.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .critic import Critic, monte_carlo_returns
from .discretizer import StateGrid, default_split
from .envs import Transition, make_env
from .factorization import init_factors, param_count
from .policy import GaussianPolicy
from .trustregion import StepDiagnostics, trust_region_update


@dataclass
class RolloutBuffer:
    """One iteration's transitions, flattened into parallel arrays."""

    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    episode_ids: np.ndarray
    step_indices: np.ndarray
    rows: np.ndarray            # cached grid indices of states
    cols: np.ndarray
    returns: np.ndarray
    old_log_probs: np.ndarray
    advantages: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def episode_returns(self) -> list:
        """Total reward per episode, in collection order."""
        out = []
        for eid in np.unique(self.episode_ids):
            out.append(float(self.rewards[self.episode_ids == eid].sum()))
        return out

    @property
    def transitions(self) -> list:
        return [
            Transition(self.states[t], float(self.actions[t]),
                       self.next_states[t], float(self.rewards[t]),
                       bool(self.dones[t]), int(self.episode_ids[t]),
                       int(self.step_indices[t]))
            for t in range(len(self))
        ]


def collect_rollouts(env, policy: GaussianPolicy, n_episodes: int,
                     horizon: int, rng, gamma: float = 1.0) -> RolloutBuffer:
    """Sample n_episodes of at most horizon steps under the current policy.

    Returns and old-policy log-probs are filled in before the buffer is
    handed out, so downstream consumers never see a partially built batch.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    states, actions, next_states, rewards = [], [], [], []
    dones, episode_ids, step_indices, all_rows, all_cols = [], [], [], [], []
    returns = []
    grid = policy.grid
    for episode in range(n_episodes):
        s = env.reset()
        ep_rewards = []
        for t in range(horizon):
            i, j = grid.state_to_indices(s)
            mu, sigma = policy.cell_params(i, j)
            a = mu + sigma * rng.standard_normal()
            s_next, r, done = env.step(a)
            states.append(s)
            actions.append(a)
            next_states.append(s_next)
            rewards.append(r)
            dones.append(done)
            episode_ids.append(episode)
            step_indices.append(t)
            all_rows.append(i)
            all_cols.append(j)
            ep_rewards.append(r)
            s = s_next
            if done:
                break
        returns.append(monte_carlo_returns(ep_rewards, gamma))
    rows = np.array(all_rows)
    cols = np.array(all_cols)
    acts = np.array(actions)
    buffer = RolloutBuffer(
        states=np.array(states),
        actions=acts,
        next_states=np.array(next_states),
        rewards=np.array(rewards),
        dones=np.array(dones, dtype=bool),
        episode_ids=np.array(episode_ids),
        step_indices=np.array(step_indices),
        rows=rows,
        cols=cols,
        returns=np.concatenate(returns),
        old_log_probs=policy.log_probs_at(rows, cols, acts),
    )
    return buffer


@dataclass
class IterationDiagnostics:
    iteration: int
    episode_returns: list
    step: StepDiagnostics
    critic_loss_initial: float
    critic_loss_final: float
    wall_time: float


@dataclass
class TrainHistory:
    episode_returns: list = field(default_factory=list)
    iterations: list = field(default_factory=list)  # IterationDiagnostics
    param_counts: dict = field(default_factory=dict)

    @property
    def n_episodes(self) -> int:
        return len(self.episode_returns)


def build_grid(config: ExperimentConfig, env) -> StateGrid:
    cells = list(config.grid.cells)
    if len(cells) != env.spec.state_dim:
        raise ValueError(
            f"grid.cells has {len(cells)} entries, {env.spec.name} has "
            f"{env.spec.state_dim} state dimensions"
        )
    bounds = config.grid.bounds or env.state_bounds
    row_dims, col_dims = config.grid.row_dims, config.grid.col_dims
    if row_dims is None or col_dims is None:
        row_dims, col_dims = default_split(env.spec.state_dim)
    dims = [(lo, hi, n) for (lo, hi), n in zip(bounds, cells)]
    return StateGrid(dims, row_dims, col_dims)


class Trainer:
    """Owns the actor, critic, and environment for one seeded run."""

    def __init__(self, config: ExperimentConfig, seed: int):
        config.validate()
        self.config = config
        self.seed = seed
        self.env = make_env(config.env, max_steps=config.loop.horizon)
        self.grid = build_grid(config, self.env)
        n, m = self.grid.shape()

        ss = np.random.SeedSequence(seed)
        ss_env, ss_act, ss_mu, ss_sigma, ss_vf = ss.spawn(5)
        self.rng = np.random.default_rng(ss_act)
        self.env.reset(seed=ss_env)

        actor = config.actor
        mu = init_factors(n, m, actor.rank, actor.mu_init_scale, ss_mu,
                          eps_init=actor.init_eps)
        if actor.sigma_mode == "scalar":
            sigma_raw = actor.sigma_init
        else:
            # factor scale chosen so the initial product is ~ sigma_init
            scale = (actor.sigma_init / actor.sigma_rank) ** 0.5
            sigma_raw = init_factors(n, m, actor.sigma_rank, scale, ss_sigma,
                                     eps_init=actor.init_eps)
        self.policy = GaussianPolicy(mu, sigma_raw, self.grid,
                                     sigma_floor=actor.sigma_floor)

        vf = init_factors(n, m, config.critic.rank, config.critic.init_scale,
                          ss_vf, eps_init=config.critic.init_eps)
        self.critic = Critic(vf, self.grid,
                             learning_rate=config.critic.learning_rate)

        self.history = TrainHistory(param_counts=self.param_counts())
        self._iteration = 0

    def param_counts(self) -> dict:
        actor = self.policy.n_params
        critic = param_count([self.critic.vf])
        return {"actor": actor, "critic": critic, "total": actor + critic}

    def iteration(self) -> IterationDiagnostics:
        """One full pass: collect, advantage, actor step, critic descent."""
        start = time.perf_counter()
        loop = self.config.loop
        buffer = collect_rollouts(self.env, self.policy,
                                  loop.episodes_per_iter, loop.horizon,
                                  self.rng, gamma=loop.gamma)
        buffer.advantages = self.critic.advantages(
            buffer, normalize=loop.normalize_advantages)
        self.policy, step_diag = trust_region_update(
            self.policy, buffer, self.config.trust_region)
        trace = self.critic.update(buffer, n_steps=self.config.critic.steps)
        diag = IterationDiagnostics(
            iteration=self._iteration,
            episode_returns=buffer.episode_returns,
            step=step_diag,
            critic_loss_initial=float(trace[0]),
            critic_loss_final=float(trace[-1]),
            wall_time=time.perf_counter() - start,
        )
        self._iteration += 1
        self.history.episode_returns.extend(diag.episode_returns)
        self.history.iterations.append(diag)
        return diag

    def run(self, progress=None) -> TrainHistory:
        """All H iterations; partial history stays on the trainer if one
        iteration raises (divergence aborts are persisted by the caller)."""
        for h in range(self.config.loop.iterations):
            diag = self.iteration()
            if progress is not None:
                progress(h, diag)
        return self.history


def train(config: ExperimentConfig, seed: int | None = None) -> TrainHistory:
    """Run one seeded training; seed defaults to the config's first seed."""
    seed = config.seeds[0] if seed is None else seed
    return Trainer(config, seed).run()


def evaluate(policy: GaussianPolicy, env, n_episodes: int, rng=None,
             mode: str = "stochastic") -> dict:
    """Roll out the policy without learning and summarize episode returns.

    mode "mean" takes a = mu(s) deterministically; "stochastic" samples from
    the policy and needs an rng.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    if mode not in ("stochastic", "mean"):
        raise ValueError("mode must be 'stochastic' or 'mean'")
    if mode == "stochastic" and rng is None:
        raise ValueError("stochastic evaluation needs an rng")
    returns = []
    for _ in range(n_episodes):
        s = env.reset()
        total = 0.0
        done = False
        while not done:
            if mode == "mean":
                a = policy.mean(s)
            else:
                a = policy.sample_action(s, rng)
            s, r, done = env.step(a)
            total += r
        returns.append(total)
    return {
        "returns": returns,
        "median": statistics.median(returns),
        "mean": statistics.fmean(returns),
        "std": statistics.pstdev(returns) if len(returns) > 1 else 0.0,
    }
