"""Self-contained continuous-action classic-control environments.

Standard formulations of the inverted pendulum, continuous mountain car, and
a continuous-torque acrobot variant, with no external simulator dependency.
States are kept in native coordinates (angles, velocities) so a D-dimensional
state maps directly onto a D-dimensional discretization grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError


@dataclass(frozen=True)
class EnvSpec:
    name: str
    state_dim: int
    action_low: float
    action_high: float
    max_steps: int

    def __post_init__(self):
        if not self.action_low < self.action_high:
            raise ValueError("need action_low < action_high")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class Transition:
    state: np.ndarray
    action: float
    next_state: np.ndarray
    reward: float
    done: bool
    episode_id: int
    step_index: int


def _wrap_angle(x: float) -> float:
    return ((x + math.pi) % (2.0 * math.pi)) - math.pi


class _BaseEnv:
    """Single-threaded state machine: reset(seed) then repeated step(action)."""

    spec: EnvSpec
    state_bounds: list  # nominal (lo, hi) per dimension, for grid construction

    def __init__(self, max_steps: int):
        self._rng = np.random.default_rng()
        self._state = None
        self._steps = 0
        self._max_steps = max_steps

    def reset(self, seed=None) -> np.ndarray:
        """Draw a fresh start state; reseeds the start-state stream if given."""
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._state = self._sample_start(self._rng)
        self._steps = 0
        return self._state.copy()

    def step(self, action) -> tuple[np.ndarray, float, bool]:
        if self._state is None:
            raise RuntimeError("call reset() before step()")
        action = float(action)
        if not math.isfinite(action):
            raise NumericError(f"{self.spec.name}: non-finite action {action}")
        clipped = min(max(action, self.spec.action_low), self.spec.action_high)
        next_state, reward, goal = self._dynamics(self._state, clipped)
        if not np.all(np.isfinite(next_state)):
            raise NumericError(f"{self.spec.name}: non-finite state {next_state}")
        self._state = next_state
        self._steps += 1
        done = goal or self._steps >= self._max_steps
        return next_state.copy(), reward, done

    def _sample_start(self, rng) -> np.ndarray:
        raise NotImplementedError

    def _dynamics(self, state, action) -> tuple[np.ndarray, float, bool]:
        """One integrator step. Returns (next_state, reward, goal_reached)."""
        raise NotImplementedError


class Pendulum(_BaseEnv):
    """Torque-driven rigid rod stabilized upright.

    State (angle, angular velocity) with angle wrapped to [-pi, pi] and zero
    at the upright position. Per-step cost penalizes angle, speed, and torque;
    episodes only end at the horizon.
    """

    GRAVITY = 10.0
    MASS = 1.0
    LENGTH = 1.0
    DT = 0.05
    MAX_SPEED = 8.0

    def __init__(self, max_steps: int = 200):
        super().__init__(max_steps)
        self.spec = EnvSpec("pendulum", 2, -2.0, 2.0, max_steps)
        self.state_bounds = [(-math.pi, math.pi), (-self.MAX_SPEED, self.MAX_SPEED)]

    def _sample_start(self, rng):
        return np.array([rng.uniform(-math.pi, math.pi), rng.uniform(-1.0, 1.0)])

    def _dynamics(self, state, u):
        th, thdot = state
        cost = _wrap_angle(th) ** 2 + 0.1 * thdot**2 + 0.001 * u**2
        g, m, length, dt = self.GRAVITY, self.MASS, self.LENGTH, self.DT
        newthdot = thdot + (3.0 * g / (2.0 * length) * math.sin(th)
                            + 3.0 / (m * length**2) * u) * dt
        newthdot = min(max(newthdot, -self.MAX_SPEED), self.MAX_SPEED)
        newth = _wrap_angle(th + newthdot * dt)
        return np.array([newth, newthdot]), -cost, False


class MountainCar(_BaseEnv):
    """Underpowered car in a valley; positive reward only at the hilltop goal.

    Kinematics with cos(3x) gravity, throttle force in [-1, 1]. Per-step
    reward is the action penalty -0.1 * a^2; reaching the goal position adds
    +100 and ends the episode.
    """

    POWER = 0.0015
    GRAVITY = 0.0025
    GOAL_POSITION = 0.45
    GOAL_BONUS = 100.0
    MIN_POSITION = -1.2
    MAX_POSITION = 0.6
    MAX_SPEED = 0.07

    def __init__(self, max_steps: int = 999):
        super().__init__(max_steps)
        self.spec = EnvSpec("mountaincar", 2, -1.0, 1.0, max_steps)
        self.state_bounds = [(self.MIN_POSITION, self.MAX_POSITION),
                             (-self.MAX_SPEED, self.MAX_SPEED)]

    def _sample_start(self, rng):
        return np.array([rng.uniform(-0.6, -0.4), 0.0])

    def _dynamics(self, state, a):
        pos, vel = state
        vel = vel + a * self.POWER - self.GRAVITY * math.cos(3.0 * pos)
        vel = min(max(vel, -self.MAX_SPEED), self.MAX_SPEED)
        pos = min(max(pos + vel, self.MIN_POSITION), self.MAX_POSITION)
        if pos <= self.MIN_POSITION and vel < 0.0:  # inelastic left wall
            vel = 0.0
        goal = pos >= self.GOAL_POSITION
        reward = -0.1 * a**2 + (self.GOAL_BONUS if goal else 0.0)
        return np.array([pos, vel]), reward, goal


class Acrobot(_BaseEnv):
    """Two-link underactuated arm swinging its free end above the bar.

    Continuous torque in [-1, 1] on the second joint (the usual formulation
    is discrete-action; this variant admits a Gaussian policy). State is
    (theta1, theta2, dtheta1, dtheta2) with angles wrapped. Reward is -1 per
    step, 0 on the transition that lifts the tip above link height 1.
    """

    L1 = 1.0
    LC1 = 0.5
    LC2 = 0.5
    M1 = 1.0
    M2 = 1.0
    I1 = 1.0
    I2 = 1.0
    GRAVITY = 9.8
    DT = 0.2
    MAX_VEL1 = 4.0 * math.pi
    MAX_VEL2 = 9.0 * math.pi

    def __init__(self, max_steps: int = 500):
        super().__init__(max_steps)
        self.spec = EnvSpec("acrobot", 4, -1.0, 1.0, max_steps)
        self.state_bounds = [(-math.pi, math.pi), (-math.pi, math.pi),
                             (-self.MAX_VEL1, self.MAX_VEL1),
                             (-self.MAX_VEL2, self.MAX_VEL2)]

    def _sample_start(self, rng):
        return rng.uniform(-0.1, 0.1, size=4)

    def _deriv(self, s, torque):
        m1, m2, l1 = self.M1, self.M2, self.L1
        lc1, lc2, i1, i2, g = self.LC1, self.LC2, self.I1, self.I2, self.GRAVITY
        th1, th2, dth1, dth2 = s
        d1 = (m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * math.cos(th2))
              + i1 + i2)
        d2 = m2 * (lc2**2 + l1 * lc2 * math.cos(th2)) + i2
        phi2 = m2 * lc2 * g * math.cos(th1 + th2 - math.pi / 2.0)
        phi1 = (-m2 * l1 * lc2 * dth2**2 * math.sin(th2)
                - 2 * m2 * l1 * lc2 * dth2 * dth1 * math.sin(th2)
                + (m1 * lc1 + m2 * l1) * g * math.cos(th1 - math.pi / 2.0)
                + phi2)
        ddth2 = ((torque + d2 / d1 * phi1
                  - m2 * l1 * lc2 * dth1**2 * math.sin(th2) - phi2)
                 / (m2 * lc2**2 + i2 - d2**2 / d1))
        ddth1 = -(d2 * ddth2 + phi1) / d1
        return np.array([dth1, dth2, ddth1, ddth2])

    def _dynamics(self, state, torque):
        # RK4 over one dt with the torque held constant
        s = np.asarray(state, dtype=float)
        dt = self.DT
        k1 = self._deriv(s, torque)
        k2 = self._deriv(s + dt / 2.0 * k1, torque)
        k3 = self._deriv(s + dt / 2.0 * k2, torque)
        k4 = self._deriv(s + dt * k3, torque)
        ns = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        ns[0] = _wrap_angle(ns[0])
        ns[1] = _wrap_angle(ns[1])
        ns[2] = min(max(ns[2], -self.MAX_VEL1), self.MAX_VEL1)
        ns[3] = min(max(ns[3], -self.MAX_VEL2), self.MAX_VEL2)
        goal = -math.cos(ns[0]) - math.cos(ns[0] + ns[1]) > 1.0
        return ns, (0.0 if goal else -1.0), goal


ENV_REGISTRY = {
    "pendulum": Pendulum,
    "acrobot": Acrobot,
    "mountaincar": MountainCar,
}


def make_env(name: str, max_steps: int | None = None) -> _BaseEnv:
    """Instantiate an environment by registry name."""
    try:
        cls = ENV_REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown environment {name!r}; choose from {sorted(ENV_REGISTRY)}"
        ) from None
    return cls() if max_steps is None else cls(max_steps=max_steps)
