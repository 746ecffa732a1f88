from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rydnoise import NoiseParams
from rydnoise.errors import ConfigurationError, DataError
from rydnoise.learn.network import huber
from rydnoise.rl import (
    ACTIONS,
    CorrectionEnv,
    CorrectionParams,
    DqnConfig,
    EnvConfig,
    ReplayBuffer,
    greedy_action,
    kl_divergence,
    l1_distance,
    q_network,
    td_targets,
    train_dqn,
    uncorrected_baseline,
)

# small environment for fast tests
FAST = EnvConfig(n_sims=2, n_samples=25, max_steps=6)


# KL and distances


def test_kl_example():
    assert kl_divergence([0.9, 0.1], [0.5, 0.5]) == pytest.approx(0.3681, abs=1e-4)


def test_kl_of_identical_is_zero():
    p = np.array([0.2, 0.3, 0.5])
    assert kl_divergence(p, p) == 0.0


def test_kl_infinite_without_floor():
    assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == math.inf
    assert math.isfinite(kl_divergence([0.5, 0.5], [1.0, 0.0], floor=1e-12))
    assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))


def test_kl_length_mismatch():
    with pytest.raises(DataError):
        kl_divergence([1.0], [0.5, 0.5])


@settings(max_examples=100)
@given(st.integers(1, 6), st.integers(0, 2**31))
def test_kl_non_negative(n, seed):
    rng = np.random.default_rng(seed)
    p, q = rng.dirichlet(np.ones(2**n)), rng.dirichlet(np.ones(2**n))
    assert kl_divergence(p, q) >= -1e-12


def test_l1_distance():
    assert l1_distance([0.1, 0.9], [0.3, 0.7]) == pytest.approx(0.4)


# DQN pieces


def test_huber_pointwise():
    loss, grad = huber(np.array([-3.0, -0.5, 0.0, 0.25, 2.0]))
    assert loss.tolist() == pytest.approx([2.5, 0.125, 0.0, 0.03125, 1.5])
    assert grad.tolist() == [-1.0, -0.5, 0.0, 0.25, 1.0]


def test_td_targets():
    r = np.array([1.0, 0.0, 1.0])
    nq = np.array([[0.2, 0.8], [1.0, -1.0], [5.0, 5.0]])
    d = np.array([0.0, 0.0, 1.0])
    assert np.allclose(td_targets(r, nq, d, 0.99), [1 + 0.99 * 0.8, 0.99, 1.0])
    assert np.array_equal(td_targets(r, nq, np.zeros(3), 0.0), r)


def test_epsilon_schedule():
    c = DqnConfig()
    assert c.epsilon(0) == 0.9
    assert c.epsilon(150) == pytest.approx(0.475)
    assert c.epsilon(300) == pytest.approx(0.05) and c.epsilon(900) == pytest.approx(0.05)


def test_default_dqn_config():
    c = DqnConfig()
    assert (c.episodes, c.gamma, c.replay_capacity, c.batch_size, c.target_sync_episodes) == (
        1000, 0.99, 10_000, 128, 10,
    )


def test_q_network_shape():
    net = q_network(50, 6, rng=0)
    assert [w.shape for w in net.params[::2]] == [(50, 128), (128, 128), (128, 6)]
    assert net.predict(np.zeros((3, 50))).shape == (3, 6)


def test_replay_buffer_wraps():
    buf = ReplayBuffer(3, 2)
    for i in range(5):
        buf.add([i, i], i % 2, float(i), [i + 1, i + 1], i == 4)
    assert len(buf) == 3
    assert sorted(buf.rewards.tolist()) == [2.0, 3.0, 4.0]
    obs, *_ = buf.sample(np.random.default_rng(0), 10)
    assert obs.shape == (10, 2)


@dataclass
class _BanditState:
    observation: np.ndarray


class _Bandit:
    """One-step task: action 2 pays 1, everything else pays 0."""

    n_actions = 4
    observation_size = 3

    def reset(self, seed=0):
        self.rng = np.random.default_rng(seed)
        return _BanditState(self.rng.random(3))

    def step(self, action):
        return _BanditState(self.rng.random(3)), int(action == 2), True


def test_toy_bandit_is_learned():
    cfg = DqnConfig(episodes=200, batch_size=16, replay_capacity=500, eps_decay_episodes=100,
                    target_sync_episodes=5, hidden=(16,), learning_rate=1e-2)
    net, log, _ = train_dqn(_Bandit(), cfg, seed=0)
    obs = np.random.default_rng(7).random((200, 3))
    picks = [greedy_action(net, o) for o in obs]
    assert np.mean(np.array(picks) == 2) >= 0.9
    assert len(log) == 200


# environment


def test_reset_state():
    env = CorrectionEnv(FAST)
    s = env.reset(seed=1)
    assert s.params == CorrectionParams(math.pi / 20, 0.0, 0.0)
    assert s.observation.shape == (50,) == (env.observation_size,)
    assert s.step == 0 and not s.done
    again = CorrectionEnv(FAST).reset(seed=1)
    assert np.array_equal(s.observation, again.observation)


def test_default_env_config():
    c = EnvConfig()
    assert (c.duration, c.base_area, c.max_steps, c.n_sims, c.n_samples) == (500.0, math.pi / 2, 100, 10, 25)
    assert c.area_step == pytest.approx(math.pi / 200) and c.delta_step == 0.2
    assert c.noise == NoiseParams.device_estimate()


def test_action_arithmetic():
    env = CorrectionEnv(FAST)
    p = FAST.initial
    assert env.apply_action(p, 0).area == pytest.approx(p.area + math.pi / 200)
    assert env.apply_action(p, 1).area == pytest.approx(p.area - math.pi / 200)
    assert env.apply_action(p, 2).delta_i == pytest.approx(0.2)
    assert env.apply_action(p, 5).delta_f == pytest.approx(-0.2)
    assert len(ACTIONS) == 6
    with pytest.raises(ConfigurationError):
        env.apply_action(p, 6)


def test_boundary_ends_episode_with_zero_reward():
    cfg = replace(FAST, initial=CorrectionParams(0.0, 0.0, 20.0))
    env = CorrectionEnv(cfg)
    env.reset(seed=0)
    s, r, done = env.step(1)
    assert (r, done) == (0, True)
    env.reset(seed=0)
    s, r, done = env.step(4)
    assert (r, done) == (0, True) and s.kl is None
    with pytest.raises(ConfigurationError):
        env.step(0)


def test_episode_length_cap():
    env = CorrectionEnv(replace(FAST, max_steps=3))
    env.reset(seed=0)
    dones = [env.step(2)[2] for _ in range(3)]
    assert dones == [False, False, True]


def test_reward_is_strict_improvement():
    env = CorrectionEnv(FAST)
    env.reset(seed=0)
    env.state = replace(env.state, distance=0.0)
    _, r, _ = env.step(2)
    assert r == 0
    env.reset(seed=0)
    env.state = replace(env.state, distance=math.inf)
    _, r, _ = env.step(2)
    assert r == 1


def test_noiseless_env_sees_ideal_outcome():
    cfg = replace(FAST, noise=NoiseParams(waist=1e9), initial=CorrectionParams(0.0, 0.0, 0.0))
    env = CorrectionEnv(cfg)
    s = env.reset(seed=0)
    assert s.distance < 1e-6
    assert np.allclose(s.observation.reshape(25, 2).sum(axis=1), 1.0)


def test_measured_outcome_includes_readout():
    on = CorrectionEnv(FAST)
    off = CorrectionEnv(replace(FAST, readout_errors=False))
    a, b = on.reset(seed=4), off.reset(seed=4)
    assert np.array_equal(a.observation, b.observation)
    q = b.final_probs
    eps, epsp = FAST.noise.eps, FAST.noise.eps_prime
    assert a.final_probs[1] == pytest.approx(q[1] * (1 - epsp) + q[0] * eps, abs=1e-14)


def test_logged_rewards_match_distances():
    cfg = DqnConfig(episodes=3, batch_size=4, hidden=(8,))
    _, log, steps = train_dqn(CorrectionEnv(FAST), cfg, seed=2, record_steps=True)
    assert steps
    for row in steps:
        if row["distance"] is not None and row["kl"] is not None:
            assert row["reward"] == int(row["distance"] < row["prev_distance"])
            assert row["kl"] >= 0
    for ep in range(3):
        rows = [r for r in steps if r["episode"] == ep]
        assert log[ep]["cumulative_reward"] == sum(r["reward"] for r in rows)
        assert log[ep]["steps"] == len(rows)


def test_params_stay_in_bounds():
    env = CorrectionEnv(FAST)
    rng = np.random.default_rng(0)
    for ep in range(3):
        s = env.reset(seed=ep)
        while not s.done:
            s, _, _ = env.step(int(rng.integers(6)))
            if s.kl is not None:
                assert FAST.in_bounds(s.params)


def test_greedy_policy_is_deterministic():
    net = q_network(50, 6, rng=1)
    obs = CorrectionEnv(FAST).reset(seed=3).observation
    assert greedy_action(net, obs) == greedy_action(net, obs.copy())


def test_training_is_deterministic():
    cfg = DqnConfig(episodes=2, batch_size=4, hidden=(8,))
    a = train_dqn(CorrectionEnv(FAST), cfg, seed=5)[1]
    b = train_dqn(CorrectionEnv(FAST), cfg, seed=5)[1]
    assert a == b


def test_baseline_is_positive_and_deterministic():
    a = uncorrected_baseline(FAST, 3, seed=1)
    assert a > 0 and a == uncorrected_baseline(FAST, 3, seed=1)
