"""Noise-parameter regressors: ridge-stabilised linear baseline and an MLP."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, DataError, DivergenceError
from .network import Adam, DenseNetwork, l1_loss

RIDGE = 1e-8
MODEL_FORMAT = "rydnoise-model"
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpConfig:
    hidden_layers: tuple[int, ...] = (100,)
    learning_rate: float = 1e-3
    batch_size: int = 512
    max_epochs: int = 150
    dropout_prob: float = 0.0
    l2_strength: float = 0.0
    early_stop_patience: int = 20

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        if not self.hidden_layers or min(self.hidden_layers) < 1:
            raise ConfigurationError("hidden layer widths must be >= 1")
        if not 0 <= self.dropout_prob < 1:
            raise ConfigurationError("dropout_prob must lie in [0, 1)")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.batch_size < 1 or self.max_epochs < 1 or self.early_stop_patience < 1:
            raise ConfigurationError("batch_size, max_epochs and patience must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_layers"] = list(self.hidden_layers)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "MlpConfig":
        return cls(**data)


def single_param_config() -> MlpConfig:
    """1×100 hidden, Adam lr 1e-3, batch 512, at most 150 epochs."""
    return MlpConfig()


def desk_scale_config() -> MlpConfig:
    """Single-parameter config for desk-scale data (2 000 instead of 10 000 samples).

    With batch 512 a fifth of the data gives a fifth of the optimizer updates
    per epoch, so the epoch cap grows fivefold to keep the update budget;
    early stopping still ends training once validation loss stalls.
    """
    return replace(single_param_config(), max_epochs=750)


def multi_param_config() -> MlpConfig:
    """Best configuration of the multi-parameter hyperparameter search."""
    return MlpConfig(
        hidden_layers=(117,), learning_rate=0.069, batch_size=16, max_epochs=150,
        dropout_prob=0.044, l2_strength=0.0002,
    )


@dataclass
class TargetScaler:
    minimum: np.ndarray
    maximum: np.ndarray

    @classmethod
    def fit(cls, y) -> "TargetScaler":
        y = np.asarray(y, dtype=float)
        lo, hi = y.min(axis=0), y.max(axis=0)
        if np.any(hi <= lo):
            raise DataError("every target needs min < max to be scaled to [0, 1]")
        return cls(lo, hi)

    def transform(self, y):
        return (np.asarray(y, dtype=float) - self.minimum) / (self.maximum - self.minimum)

    def inverse(self, y_scaled):
        return np.asarray(y_scaled, dtype=float) * (self.maximum - self.minimum) + self.minimum


@dataclass
class RegressorModel:
    kind: str
    input_dim: int
    output_dim: int
    label_names: list[str]
    network: DenseNetwork | None = None
    scaler: TargetScaler | None = None
    coef: np.ndarray | None = None
    intercept: np.ndarray | None = None
    config: MlpConfig | None = None
    seed: int | None = None
    history: dict = field(default_factory=dict)

    def predict(self, features) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=float))
        if x.shape[1] != self.input_dim:
            raise DataError(f"model expects {self.input_dim} features, got {x.shape[1]}")
        if self.kind == "linear":
            return x @ self.coef + self.intercept
        return self.scaler.inverse(self.network.predict(x))

    def to_dict(self) -> dict:
        d = {
            "format": MODEL_FORMAT,
            "version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "label_names": list(self.label_names),
            "seed": self.seed,
        }
        if self.kind == "linear":
            d["coef"] = self.coef.tolist()
            d["intercept"] = self.intercept.tolist()
        else:
            d["config"] = self.config.to_dict() if self.config else None
            d["target_min"] = self.scaler.minimum.tolist()
            d["target_max"] = self.scaler.maximum.tolist()
            d["network"] = self.network.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RegressorModel":
        if d.get("format") != MODEL_FORMAT:
            raise DataError("not a model file")
        common = dict(
            kind=d["kind"], input_dim=d["input_dim"], output_dim=d["output_dim"],
            label_names=d["label_names"], seed=d.get("seed"),
        )
        if d["kind"] == "linear":
            return cls(**common, coef=np.asarray(d["coef"]), intercept=np.asarray(d["intercept"]))
        return cls(
            **common,
            network=DenseNetwork.from_dict(d["network"]),
            scaler=TargetScaler(np.asarray(d["target_min"]), np.asarray(d["target_max"])),
            config=MlpConfig.from_dict(d["config"]) if d.get("config") else None,
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "RegressorModel":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"cannot read model {path}: {exc}") from exc


def _xy(data):
    if hasattr(data, "features"):
        return data.features, data.labels, list(data.label_names)
    x, y = data
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    return np.asarray(x, dtype=float), y, [f"y{i}" for i in range(y.shape[1])]


def fit_linear(train, ridge: float = RIDGE) -> RegressorModel:
    """Least squares with a tiny ridge penalty on the weights (not the intercept).

    Solved as an augmented least-squares problem so collinear feature blocks
    stay well conditioned.
    """
    x, y, names = _xy(train)
    n, p = x.shape
    if n < 2:
        raise DataError("linear regression needs at least two samples")
    a = np.hstack([x, np.ones((n, 1))])
    penalty = np.sqrt(ridge) * np.eye(p, p + 1)
    a_aug = np.vstack([a, penalty])
    y_aug = np.vstack([y, np.zeros((p, y.shape[1]))])
    beta, *_ = np.linalg.lstsq(a_aug, y_aug, rcond=None)
    return RegressorModel(
        kind="linear", input_dim=p, output_dim=y.shape[1], label_names=names,
        coef=beta[:p], intercept=beta[p],
    )


class MlpTrainer:
    """Mini-batch Adam on the L1 loss of min-max scaled targets, with early stopping.

    Training can be resumed with further :meth:`run` calls (used by the
    successive-halving search). The best-validation weights are kept and
    restored when training ends.
    """

    def __init__(self, train, val, config: MlpConfig, seed: int = 0, scaler: TargetScaler | None = None):
        x, y, self.label_names = _xy(train)
        xv, yv, _ = _xy(val)
        if len(xv) == 0:
            raise DataError("validation set is empty")
        self.config = config
        self.seed = seed
        self.scaler = scaler or TargetScaler.fit(y)
        self.x, self.y = x, self.scaler.transform(y)
        self.xv, self.yv = xv, self.scaler.transform(yv)
        self.rng = np.random.default_rng([seed, 1])
        sizes = [x.shape[1], *config.hidden_layers, y.shape[1]]
        self.net = DenseNetwork(sizes, "sigmoid", config.dropout_prob, rng=np.random.default_rng([seed, 0]))
        self.opt = Adam(self.net.params, lr=config.learning_rate, weight_decay=config.l2_strength)
        self.epoch = 0
        self.best_loss = math.inf
        self.best_epoch = 0
        self.best_weights = self.net.get_weights()
        self.train_curve: list[float] = []
        self.val_curve: list[float] = []
        self.stopped = False

    def val_loss(self) -> float:
        return l1_loss(self.net.predict(self.xv), self.yv)[0]

    def _epoch(self) -> float:
        n = len(self.x)
        order = self.rng.permutation(n)
        bs = self.config.batch_size
        total = 0.0
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            pred, cache = self.net.forward(self.x[idx], training=True, rng=self.rng)
            loss, grad = l1_loss(pred, self.y[idx])
            total += loss * len(idx)
            self.opt.step(self.net.backward(cache, grad))
        return total / n

    def run(self, epochs: int | None = None) -> "MlpTrainer":
        target = self.config.max_epochs if epochs is None else min(self.epoch + epochs, self.config.max_epochs)
        while not self.stopped and self.epoch < target:
            train_loss = self._epoch()
            self.epoch += 1
            val = self.val_loss()
            if not (math.isfinite(train_loss) and math.isfinite(val)):
                raise DivergenceError(f"non-finite loss at epoch {self.epoch}", epoch=self.epoch)
            self.train_curve.append(train_loss)
            self.val_curve.append(val)
            if val < self.best_loss:
                self.best_loss, self.best_epoch = val, self.epoch
                self.best_weights = self.net.get_weights()
            elif self.epoch - self.best_epoch >= self.config.early_stop_patience:
                self.stopped = True
        if self.stopped or self.epoch >= self.config.max_epochs:
            self.stopped = True
        return self

    def model(self) -> RegressorModel:
        net = DenseNetwork(self.net.sizes, "sigmoid", self.net.dropout, rng=0)
        net.set_weights(self.best_weights)
        return RegressorModel(
            kind="mlp", input_dim=self.x.shape[1], output_dim=self.y.shape[1],
            label_names=self.label_names, network=net, scaler=self.scaler,
            config=self.config, seed=self.seed,
            history={
                "train_l1": list(self.train_curve), "val_l1": list(self.val_curve),
                "best_epoch": self.best_epoch, "best_val_l1": self.best_loss,
            },
        )


def fit_mlp(train, val, config: MlpConfig | None = None, seed: int = 0) -> RegressorModel:
    trainer = MlpTrainer(train, val, config or single_param_config(), seed)
    return trainer.run().model()


def mean_absolute_error(model: RegressorModel, data) -> np.ndarray:
    """Per-target MAE in original units."""
    x, y, _ = _xy(data)
    return np.mean(np.abs(model.predict(x) - y), axis=0)
