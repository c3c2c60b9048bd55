import math

import numpy as np
import pytest

from lrtrpo.envs import Acrobot, EnvSpec, MountainCar, Pendulum, make_env
from lrtrpo.errors import NumericError


def test_registry_names():
    for name in ("pendulum", "acrobot", "mountaincar"):
        env = make_env(name)
        assert env.spec.name == name
    with pytest.raises(ValueError):
        make_env("cartpole")


def test_envspec_validation():
    with pytest.raises(ValueError):
        EnvSpec("x", 2, 1.0, -1.0, 10)
    with pytest.raises(ValueError):
        EnvSpec("x", 2, -1.0, 1.0, 0)


def test_pendulum_start_distribution_bounds():
    env = Pendulum()
    for seed in range(1000):
        th, thdot = env.reset(seed=seed)
        assert -math.pi <= th <= math.pi
        assert -1.0 <= thdot <= 1.0


def test_mountaincar_start_distribution_bounds():
    env = MountainCar()
    for seed in range(1000):
        pos, vel = env.reset(seed=seed)
        assert -0.6 <= pos <= -0.4
        assert vel == 0.0


def test_reset_deterministic_given_seed():
    for name in ("pendulum", "acrobot", "mountaincar"):
        a = make_env(name).reset(seed=123)
        b = make_env(name).reset(seed=123)
        assert np.array_equal(a, b)


def test_pendulum_reward_at_upright_fixed_point():
    env = Pendulum()
    env.reset(seed=0)
    env._state = np.array([0.0, 0.0])
    _, reward, done = env.step(0.0)
    assert reward == 0.0
    assert not done


def test_mountaincar_gravity_only_velocity():
    env = MountainCar()
    state = env.reset(seed=5)
    pos = state[0]
    next_state, _, _ = env.step(0.0)
    # one-step hand evaluation: v' = v + 0*power - 0.0025*cos(3x), v = 0
    assert next_state[1] == pytest.approx(-0.0025 * math.cos(3.0 * pos), abs=1e-15)


def test_horizon_truncation():
    for name in ("pendulum", "acrobot", "mountaincar"):
        env = make_env(name, max_steps=7)
        env.reset(seed=0)
        done = False
        steps = 0
        while not done:
            _, _, done = env.step(0.0)
            steps += 1
        assert steps <= 7


def test_step_determinism():
    env_a, env_b = Pendulum(), Pendulum()
    env_a.reset(seed=3)
    env_b.reset(seed=3)
    for u in (1.0, -2.0, 0.5):
        sa, ra, da = env_a.step(u)
        sb, rb, db = env_b.step(u)
        assert np.array_equal(sa, sb)
        assert ra == rb and da == db


def test_states_stay_finite_under_bounded_actions():
    rng = np.random.default_rng(0)
    for name in ("pendulum", "acrobot", "mountaincar"):
        env = make_env(name)
        env.reset(seed=1)
        done = False
        while not done:
            action = rng.uniform(env.spec.action_low, env.spec.action_high)
            state, reward, done = env.step(action)
            assert np.all(np.isfinite(state))
            assert math.isfinite(reward)


def test_pendulum_reward_range():
    env = Pendulum()
    env.reset(seed=2)
    lo = -(math.pi**2 + 0.1 * 8.0**2 + 0.001 * 2.0**2)
    rng = np.random.default_rng(1)
    for _ in range(500):
        _, r, done = env.step(rng.uniform(-2, 2))
        assert lo <= r <= 0.0
        if done:
            env.reset()


def test_mountaincar_reward_structure():
    env = MountainCar(max_steps=400)
    env.reset(seed=0)
    # force the car to the goal: rewards stay <= 0 until the goal bonus lands
    env._state = np.array([0.44, 0.07])
    next_state, reward, done = env.step(1.0)
    assert done
    assert next_state[0] >= MountainCar.GOAL_POSITION
    assert reward == pytest.approx(100.0 - 0.1)


def test_acrobot_reward_nonpositive_until_goal():
    env = Acrobot(max_steps=100)
    env.reset(seed=4)
    done = False
    rewards = []
    while not done:
        _, r, done = env.step(1.0)
        rewards.append(r)
    assert all(r == -1.0 for r in rewards[:-1])
    assert rewards[-1] in (-1.0, 0.0)  # 0 only if the goal was reached


def test_acrobot_goal_condition():
    env = Acrobot()
    env.reset(seed=0)
    # start hanging: tip height -cos(t1) - cos(t1+t2) near -2, far from goal
    th1, th2 = env._state[0], env._state[1]
    assert -math.cos(th1) - math.cos(th1 + th2) < 1.0


def test_action_clipping_applied_before_dynamics():
    env = Pendulum()
    env.reset(seed=0)
    env._state = np.array([1.0, 0.0])
    s_big, r_big, _ = env.step(50.0)
    env.reset(seed=0)
    env._state = np.array([1.0, 0.0])
    s_clip, r_clip, _ = env.step(2.0)
    assert np.array_equal(s_big, s_clip)
    assert r_big == r_clip


def test_non_finite_action_raises():
    env = Pendulum()
    env.reset(seed=0)
    with pytest.raises(NumericError):
        env.step(float("nan"))


def test_angle_wrapping():
    env = Pendulum()
    env.reset(seed=0)
    env._state = np.array([math.pi - 0.01, 8.0])
    next_state, _, _ = env.step(2.0)
    assert -math.pi <= next_state[0] <= math.pi
