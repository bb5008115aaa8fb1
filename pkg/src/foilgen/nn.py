"""Dense feed-forward networks with manual reverse-mode gradients and Adam."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, TrainingError


def _relu(x):
    return np.maximum(x, 0.0)


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# activation -> (f(pre), df/dpre as a function of (pre, post))
ACTIVATIONS = {
    "linear": (lambda x: x, lambda pre, post: np.ones_like(pre)),
    "relu": (_relu, lambda pre, post: (pre > 0).astype(pre.dtype)),
    "tanh": (np.tanh, lambda pre, post: 1.0 - post**2),
    "sigmoid": (_sigmoid, lambda pre, post: post * (1.0 - post)),
    "softplus": (_softplus, lambda pre, post: _sigmoid(pre)),
}


@dataclass
class Layer:
    w: np.ndarray          # (n_in, n_out)
    b: np.ndarray          # (n_out,)
    act: str = "linear"

    def __post_init__(self):
        if self.act not in ACTIVATIONS:
            raise ParameterError(f"unknown activation {self.act!r}")


@dataclass
class MlpModel:
    layers: list[Layer]

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].w.shape[0]] + [l.w.shape[1] for l in self.layers]

    def parameters(self):
        for layer in self.layers:
            yield layer.w
            yield layer.b


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    kl_weight: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if min(self.epochs, self.batch_size) < 1 or self.learning_rate < 0:
            raise ParameterError("epochs and batch_size must be positive, lr >= 0")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1 and self.eps > 0):
            raise ParameterError("invalid Adam constants")
        if self.kl_weight < 0:
            raise ParameterError("kl_weight must be >= 0")


def init_mlp(dims: list[int], acts: list[str], rng: np.random.Generator) -> MlpModel:
    """Fan-in scaled uniform init: w ~ U(-1/sqrt(n_in), 1/sqrt(n_in)), b = 0."""
    if len(acts) != len(dims) - 1:
        raise ParameterError("need one activation per layer")
    layers = []
    for n_in, n_out, act in zip(dims[:-1], dims[1:], acts):
        bound = 1.0 / np.sqrt(n_in)
        w = rng.uniform(-bound, bound, size=(n_in, n_out))
        layers.append(Layer(w=w, b=np.zeros(n_out), act=act))
    return MlpModel(layers)


def forward(model: MlpModel, x: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Run the network; returns [(pre, post)] per layer for the backward pass."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.layers[0].w.shape[0]:
        raise ParameterError(
            f"input width {x.shape[1]} != first layer width {model.layers[0].w.shape[0]}")
    caches = []
    h = x
    for layer in model.layers:
        pre = h @ layer.w + layer.b
        post = ACTIVATIONS[layer.act][0](pre)
        caches.append((pre, post))
        h = post
    return caches


def output(model: MlpModel, x: np.ndarray) -> np.ndarray:
    return forward(model, x)[-1][1]


def backward(model: MlpModel, x: np.ndarray,
             caches: list[tuple[np.ndarray, np.ndarray]],
             grad_out: np.ndarray) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Exact gradients for every (w, b) plus the gradient w.r.t. the input."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    grad = np.atleast_2d(np.asarray(grad_out, dtype=float))
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        pre, post = caches[i]
        if grad.shape != post.shape:
            raise ParameterError("gradient shape mismatch")
        dpre = grad * ACTIVATIONS[layer.act][1](pre, post)
        inp = x if i == 0 else caches[i - 1][1]
        grads[i] = (inp.T @ dpre, dpre.sum(axis=0))
        grad = dpre @ layer.w.T
    return grads, grad


@dataclass
class AdamState:
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_model(cls, *models: MlpModel) -> "AdamState":
        params = [p for mod in models for p in mod.parameters()]
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params], t=0)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState, config: TrainConfig) -> None:
    """One Adam update with bias correction, in place on params/state."""
    if len(params) != len(state.m):
        raise ParameterError("Adam state does not match parameter count")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient in Adam step")
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    corr1 = 1.0 - b1**state.t
    corr2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= config.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + config.eps)
