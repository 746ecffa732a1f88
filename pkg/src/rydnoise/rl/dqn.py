"""Deep Q-learning with experience replay and a periodically synced target network."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from ..errors import DivergenceError
from ..learn.network import Adam, DenseNetwork, huber


@dataclass(frozen=True)
class DqnConfig:
    episodes: int = 1000
    gamma: float = 0.99
    replay_capacity: int = 10_000
    batch_size: int = 128
    eps_start: float = 0.9
    eps_end: float = 0.05
    eps_decay_episodes: int = 300
    target_sync_episodes: int = 10
    learning_rate: float = 1e-3
    hidden: tuple[int, ...] = (128, 128)

    def epsilon(self, episode: int) -> float:
        if self.eps_decay_episodes <= 0:
            return self.eps_end
        frac = min(1.0, episode / self.eps_decay_episodes)
        return self.eps_start + frac * (self.eps_end - self.eps_start)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


class ReplayBuffer:
    def __init__(self, capacity: int, obs_size: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_size))
        self.next_obs = np.zeros((capacity, obs_size))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity)
        self.size = 0
        self._pos = 0

    def add(self, obs, action, reward, next_obs, done) -> None:
        i = self._pos
        self.obs[i], self.actions[i], self.rewards[i] = obs, action, reward
        self.next_obs[i], self.dones[i] = next_obs, float(done)
        self._pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, n: int):
        idx = rng.integers(0, self.size, size=n)
        return self.obs[idx], self.actions[idx], self.rewards[idx], self.next_obs[idx], self.dones[idx]

    def __len__(self) -> int:
        return self.size


def q_network(obs_size: int, n_actions: int, hidden=(128, 128), rng=None) -> DenseNetwork:
    return DenseNetwork([obs_size, *hidden, n_actions], output="linear", rng=rng)


def td_targets(rewards, next_q, dones, gamma: float) -> np.ndarray:
    """r + γ·maxₐ Q(s′, a), with no bootstrap on terminal transitions."""
    return rewards + gamma * (1.0 - dones) * next_q.max(axis=1)


def greedy_action(net: DenseNetwork, obs) -> int:
    return int(np.argmax(net.predict(np.asarray(obs)[None, :])[0]))


def dqn_update(net, target_net, opt, batch, gamma: float) -> float:
    obs, actions, rewards, next_obs, dones = batch
    targets = td_targets(rewards, target_net.predict(next_obs), dones, gamma)
    q, cache = net.forward(obs)
    rows = np.arange(len(actions))
    delta = q[rows, actions] - targets
    loss, dloss = huber(delta)
    if not np.all(np.isfinite(q)):
        raise DivergenceError("non-finite Q-values")
    grad = np.zeros_like(q)
    grad[rows, actions] = dloss / len(actions)
    opt.step(net.backward(cache, grad))
    return float(loss.mean())


def train_dqn(
    env,
    config: DqnConfig | None = None,
    seed: int = 0,
    callback: Callable[[dict], None] | None = None,
    record_steps: bool = False,
):
    """Train a Q-network on ``env``; returns (network, episode log, step log).

    ``env`` needs ``reset(seed)`` returning a state with ``observation`` (and
    optionally ``kl``), ``step(action)`` returning (state, reward, done),
    ``n_actions`` and ``observation_size``. Episode ``e`` resets with seed
    ``(seed, e)``.
    """
    config = config or DqnConfig()
    rng = np.random.default_rng([seed, 3])
    net = q_network(env.observation_size, env.n_actions, config.hidden, rng=np.random.default_rng([seed, 4]))
    target = q_network(env.observation_size, env.n_actions, config.hidden, rng=0)
    target.set_weights(net.get_weights())
    opt = Adam(net.params, lr=config.learning_rate)
    buffer = ReplayBuffer(config.replay_capacity, env.observation_size)

    log, steps_log = [], []
    for episode in range(config.episodes):
        eps = config.epsilon(episode)
        state = env.reset(seed=(seed, episode))
        kls, total, steps, losses = [], 0, 0, []
        done = False
        while not done:
            if rng.random() < eps:
                action = int(rng.integers(env.n_actions))
            else:
                action = greedy_action(net, state.observation)
            prev_distance = getattr(state, "distance", None)
            nxt, reward, done = env.step(action)
            buffer.add(state.observation, action, reward, nxt.observation, done)
            kl = getattr(nxt, "kl", None)
            if kl is not None:
                kls.append(kl)
            if record_steps:
                steps_log.append(
                    {
                        "episode": episode,
                        "step": steps + 1,
                        "action": action,
                        "reward": reward,
                        "prev_distance": prev_distance,
                        "distance": getattr(nxt, "distance", None),
                        "final_probs": np.array(getattr(nxt, "final_probs", [])).tolist(),
                        "done": done,
                        "kl": kl,
                    }
                )
            total += reward
            steps += 1
            state = nxt
            if len(buffer) >= config.batch_size:
                losses.append(dqn_update(net, target, opt, buffer.sample(rng, config.batch_size), config.gamma))
        if (episode + 1) % config.target_sync_episodes == 0:
            target.set_weights(net.get_weights())
        row = {
            "episode": episode,
            "mean_kl": float(np.mean(kls)) if kls else math.nan,
            "steps": steps,
            "cumulative_reward": total,
            "epsilon": eps,
            "mean_loss": float(np.mean(losses)) if losses else math.nan,
        }
        log.append(row)
        if callback:
            callback(row)
    return net, log, steps_log
