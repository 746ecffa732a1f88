"""Dense feed-forward network with manual backpropagation and Adam."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError, DataError

OUTPUT_ACTIVATIONS = ("sigmoid", "linear")


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class DenseNetwork:
    """ReLU hidden layers, sigmoid or linear output, optional inverted dropout.

    ``params`` is a flat list ``[W1, b1, W2, b2, ...]`` with ``W`` of shape
    (fan_in, fan_out). Gradients returned by :meth:`backward` follow the same
    layout, which is what :class:`Adam` consumes.
    """

    def __init__(self, sizes, output: str = "sigmoid", dropout: float = 0.0, rng=None):
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ConfigurationError(f"invalid layer sizes {sizes}")
        if output not in OUTPUT_ACTIVATIONS:
            raise ConfigurationError(f"output activation must be one of {OUTPUT_ACTIVATIONS}")
        if not 0.0 <= dropout < 1.0:
            raise ConfigurationError(f"dropout must lie in [0, 1), got {dropout}")
        self.sizes = sizes
        self.output = output
        self.dropout = float(dropout)
        rng = np.random.default_rng(rng)
        self.params = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.params.append(rng.uniform(-bound, bound, size=fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params)

    def forward(self, x, training: bool = False, rng=None):
        """Returns (output, cache). Dropout is only active when ``training``."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise DataError(f"expected input of shape (batch, {self.sizes[0]}), got {x.shape}")
        acts = [x]
        masks = []
        h = x
        for layer in range(self.n_layers):
            w, b = self.params[2 * layer], self.params[2 * layer + 1]
            z = h @ w + b
            if layer < self.n_layers - 1:
                h = np.maximum(z, 0.0)
                if training and self.dropout > 0:
                    keep = rng.random(h.shape) >= self.dropout
                    mask = keep / (1.0 - self.dropout)
                    h = h * mask
                    masks.append(mask)
                else:
                    masks.append(None)
            else:
                h = _sigmoid(z) if self.output == "sigmoid" else z
            acts.append(h)
        return h, (acts, masks)

    def predict(self, x) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, grad_out) -> list[np.ndarray]:
        """Gradients of a scalar loss w.r.t. ``params`` given dLoss/dOutput."""
        acts, masks = cache
        grads = [None] * len(self.params)
        out = acts[-1]
        g = grad_out * out * (1.0 - out) if self.output == "sigmoid" else grad_out
        for layer in range(self.n_layers - 1, -1, -1):
            h_in = acts[layer]
            grads[2 * layer] = h_in.T @ g
            grads[2 * layer + 1] = g.sum(axis=0)
            if layer > 0:
                g = g @ self.params[2 * layer].T
                mask = masks[layer - 1]
                if mask is not None:
                    g = g * mask
                g = g * (acts[layer] > 0)
        return grads

    def get_weights(self) -> list[np.ndarray]:
        return [p.copy() for p in self.params]

    def set_weights(self, weights) -> None:
        for p, w in zip(self.params, weights):
            p[...] = w

    def to_dict(self) -> dict:
        return {
            "sizes": self.sizes,
            "output_activation": self.output,
            "dropout": self.dropout,
            "layers": [
                {"weight": self.params[2 * i].tolist(), "bias": self.params[2 * i + 1].tolist()}
                for i in range(self.n_layers)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DenseNetwork":
        net = cls(data["sizes"], data["output_activation"], data.get("dropout", 0.0), rng=0)
        for i, layer in enumerate(data["layers"]):
            net.params[2 * i][...] = np.asarray(layer["weight"], dtype=float)
            net.params[2 * i + 1][...] = np.asarray(layer["bias"], dtype=float)
        return net


class Adam:
    """Adam with optional coupled L2 penalty (``weight_decay`` added to the gradient)."""

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.0):
        if lr <= 0:
            raise ConfigurationError(f"learning rate must be positive, got {lr}")
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if self.weight_decay:
                g = g + self.weight_decay * p
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def l1_loss(pred, target):
    """Mean absolute error and its gradient w.r.t. ``pred``."""
    diff = pred - target
    return float(np.mean(np.abs(diff))), np.sign(diff) / diff.size


def huber(delta, kappa: float = 1.0):
    """Elementwise Huber loss and derivative."""
    a = np.abs(delta)
    loss = np.where(a <= kappa, 0.5 * delta**2, kappa * (a - 0.5 * kappa))
    grad = np.clip(delta, -kappa, kappa)
    return loss, grad
