"""k-fold cross-validation and ensemble prediction."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, DataError
from .models import MlpConfig, RegressorModel, fit_linear, fit_mlp, mean_absolute_error, single_param_config

PROTOCOLS = ("train_val", "train_val_test")


@dataclass
class CvReport:
    """Held-out MAE (original units) for each fold and target."""

    model_kind: str
    protocol: str
    label_names: list[str]
    fold_mae: np.ndarray
    fold_indices: list[np.ndarray]
    models: list[RegressorModel] = field(default_factory=list, repr=False)
    seed: int = 0

    @property
    def k(self) -> int:
        return len(self.fold_indices)

    @property
    def mean(self) -> np.ndarray:
        return self.fold_mae.mean(axis=0)

    @property
    def std(self) -> np.ndarray:
        return self.fold_mae.std(axis=0)

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "protocol": self.protocol,
            "label_names": list(self.label_names),
            "k": self.k,
            "seed": self.seed,
            "fold_mae": self.fold_mae.tolist(),
            "mae_mean": self.mean.tolist(),
            "mae_std": self.std.tolist(),
        }


def fold_blocks(n_samples: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle once and cut into ``k`` blocks whose sizes differ by at most one."""
    if k < 2:
        raise ConfigurationError("cross-validation needs k >= 2")
    if k > n_samples:
        raise DataError(f"cannot make {k} folds from {n_samples} samples")
    perm = np.random.default_rng([seed, 7]).permutation(n_samples)
    return np.array_split(perm, k)


def fold_split(blocks, f: int, protocol: str):
    """(train, validation, test) index arrays for fold ``f``.

    ``train_val``: block f is both the early-stopping and the reported set,
    the other k-1 blocks train. ``train_val_test``: block f is the test set,
    block f+1 validates, the remaining k-2 train.
    """
    k = len(blocks)
    if protocol == "train_val":
        train = np.concatenate([b for i, b in enumerate(blocks) if i != f])
        return train, blocks[f], blocks[f]
    if protocol == "train_val_test":
        v = (f + 1) % k
        train = np.concatenate([b for i, b in enumerate(blocks) if i not in (f, v)])
        return train, blocks[v], blocks[f]
    raise ConfigurationError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")


def _run_fold(job):
    dataset, kind, config, seed, train, val, test = job
    if kind == "linear":
        model = fit_linear(dataset.subset(train))
    else:
        model = fit_mlp(dataset.subset(train), dataset.subset(val), config, seed)
    return model, mean_absolute_error(model, dataset.subset(test))


def cross_validate(
    dataset,
    kind: str = "mlp",
    config: MlpConfig | None = None,
    k: int = 20,
    seed: int = 0,
    protocol: str = "train_val",
    workers: int = 1,
) -> CvReport:
    if kind not in ("linear", "mlp"):
        raise ConfigurationError(f"unknown model kind {kind!r}")
    config = config or single_param_config()
    blocks = fold_blocks(dataset.n_samples, k, seed)
    jobs = []
    for f in range(k):
        train, val, test = fold_split(blocks, f, protocol)
        jobs.append((dataset, kind, config, seed * 1000 + f, train, val, test))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_fold, jobs))
    else:
        results = [_run_fold(j) for j in jobs]
    return CvReport(
        model_kind=kind,
        protocol=protocol,
        label_names=list(dataset.label_names),
        fold_mae=np.array([r[1] for r in results]),
        fold_indices=[fold_split(blocks, f, protocol)[2] for f in range(k)],
        models=[r[0] for r in results],
        seed=seed,
    )


def predict_ensemble(models, features) -> tuple[np.ndarray, np.ndarray]:
    """Per-target mean and population std of the models' predictions.

    A 1-D ``features`` vector gives arrays of shape (n_targets,); a 2-D batch
    gives (n_samples, n_targets).
    """
    if not models:
        raise DataError("no models given")
    dims = {m.input_dim for m in models}
    if len(dims) != 1:
        raise DataError(f"models disagree on input dimension: {sorted(dims)}")
    x = np.asarray(features, dtype=float)
    single = x.ndim == 1
    preds = np.stack([m.predict(np.atleast_2d(x)) for m in models])
    mean, std = preds.mean(axis=0), preds.std(axis=0)
    return (mean[0], std[0]) if single else (mean, std)
