"""Seeded random search with successive halving over MLP hyperparameters."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigurationError
from .models import MlpConfig, MlpTrainer

DEFAULT_RUNGS = (1, 2, 4, 8, 16, 32, 64, 150)


@dataclass(frozen=True)
class SearchSpace:
    n_layers: tuple[int, int] = (1, 100)
    width: tuple[int, int] = (5, 200)
    batch_sizes: tuple[int, ...] = (2, 4, 8, 16, 32)
    learning_rate: tuple[float, float] = (1e-4, 1e-1)
    dropout: tuple[float, float] = (0.0, 0.0)
    l2: tuple[float, float] = (0.0, 0.0)

    def sample(self, rng: np.random.Generator, max_epochs: int) -> MlpConfig:
        layers = int(rng.integers(self.n_layers[0], self.n_layers[1] + 1))
        width = int(rng.integers(self.width[0], self.width[1] + 1))
        lo, hi = np.log(self.learning_rate[0]), np.log(self.learning_rate[1])
        lr = float(np.exp(rng.uniform(lo, hi))) if hi > lo else float(self.learning_rate[0])
        return MlpConfig(
            hidden_layers=(width,) * layers,
            learning_rate=lr,
            batch_size=int(rng.choice(self.batch_sizes)),
            max_epochs=max_epochs,
            dropout_prob=float(rng.uniform(*self.dropout)) if self.dropout[1] > self.dropout[0] else self.dropout[0],
            l2_strength=float(rng.uniform(*self.l2)) if self.l2[1] > self.l2[0] else self.l2[0],
        )

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "SearchSpace":
        return cls(**{k: tuple(v) for k, v in data.items()})


def random_search(
    dataset,
    space: SearchSpace | None = None,
    n_trials: int = 20,
    rungs=DEFAULT_RUNGS,
    seed: int = 0,
    val_fraction: float = 0.1,
) -> tuple[MlpConfig, list[dict]]:
    """Sample ``n_trials`` configurations and prune them by successive halving.

    ``rungs`` are cumulative epoch budgets. After each rung the surviving trials
    are ranked by their best validation L1 and the worse half is discarded.
    Returns the configuration with the lowest validation L1 and a per-trial log.
    """
    if n_trials < 1:
        raise ConfigurationError("n_trials must be >= 1")
    rungs = sorted(int(r) for r in rungs)
    space = space or SearchSpace()
    rng = np.random.default_rng([seed, 11])
    perm = rng.permutation(dataset.n_samples)
    n_val = max(1, int(round(val_fraction * dataset.n_samples)))
    train, val = dataset.subset(perm[n_val:]), dataset.subset(perm[:n_val])

    trainers = []
    for t in range(n_trials):
        cfg = space.sample(rng, rungs[-1])
        trainers.append(MlpTrainer(train, val, cfg, seed=seed * 10_000 + t))
    status = ["running"] * n_trials
    alive = list(range(n_trials))
    for r, budget in enumerate(rungs):
        for t in alive:
            tr = trainers[t]
            tr.run(budget - tr.epoch)
        if r == len(rungs) - 1 or len(alive) == 1:
            break
        alive.sort(key=lambda t: (trainers[t].best_loss, t))
        keep = max(1, math.ceil(len(alive) / 2))
        for t in alive[keep:]:
            status[t] = f"pruned_after_rung_{r}"
        alive = alive[:keep]
    for t in alive:
        status[t] = "completed"

    log = []
    for t, tr in enumerate(trainers):
        model = tr.model()
        val_mae = np.mean(np.abs(model.predict(val.features) - val.labels), axis=0)
        log.append(
            {
                "trial": t,
                "config": tr.config.to_dict(),
                "epochs": tr.epoch,
                "val_l1": tr.best_loss,
                "val_mae": val_mae.tolist(),
                "val_mae_mean": float(val_mae.mean()),
                "status": status[t],
            }
        )
    best = min(range(n_trials), key=lambda t: (trainers[t].best_loss, t))
    return trainers[best].config, log
