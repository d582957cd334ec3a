"""Small tanh MLP with hand-written backprop and Adam.

The vector-field regressor for desk-scale runs: input is the mapped state
concatenated with (t, sin 2*pi*t, cos 2*pi*t), two hidden layers, linear
output. Gradients are exact reverse-mode and are checked against finite
differences in the tests.
"""

from dataclasses import dataclass, field

import numpy as np

from .alpha_geometry import MappedState
from .manifold import InvariantViolationError, NumericalError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

N_TIME_FEATURES = 3


@dataclass
class MlpModel:
    """Weights (fan_in, fan_out) and biases per layer; tanh between layers."""

    weights: list
    biases: list

    @property
    def widths(self) -> list:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


def init_mlp(n_in: int, n_out: int, hidden, rng: np.random.Generator) -> MlpModel:
    """Xavier-uniform initialization, biases at zero."""
    widths = [n_in, *hidden, n_out]
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases)


def time_features(t) -> np.ndarray:
    """(t, sin 2*pi*t, cos 2*pi*t) with a leading batch axis when t is a vector."""
    t = np.asarray(t, dtype=np.float64)
    return np.stack([t, np.sin(2.0 * np.pi * t), np.cos(2.0 * np.pi * t)], axis=-1)


def forward_batch(model: MlpModel, feats: np.ndarray):
    """Batched forward pass; returns output and the activation cache for backward."""
    acts = [feats]
    h = feats
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w + b
        if i < last:
            h = np.tanh(h)
        acts.append(h)
    return h, acts


def backward_batch(model: MlpModel, acts, d_out: np.ndarray):
    """Reverse-mode gradients of the cached forward pass.

    Returns (weight grads, bias grads) matching the model layout; d_out is
    the upstream gradient on the network output.
    """
    d_ws = [None] * len(model.weights)
    d_bs = [None] * len(model.biases)
    g = d_out
    for i in range(len(model.weights) - 1, -1, -1):
        if i < len(model.weights) - 1:
            g = g * (1.0 - acts[i + 1] ** 2)
        d_ws[i] = acts[i].T @ g
        d_bs[i] = g.sum(axis=0)
        g = g @ model.weights[i].T
    return d_ws, d_bs


def _single_features(model: MlpModel, x: MappedState, t: float) -> np.ndarray:
    feats = np.concatenate([x.coords, time_features(float(t))])
    if feats.size != model.weights[0].shape[0]:
        raise InvariantViolationError(
            f"model expects {model.weights[0].shape[0]} inputs, got {feats.size}"
        )
    return feats[None, :]


def forward(model: MlpModel, x: MappedState, t: float) -> np.ndarray:
    """Raw (unprojected) prediction for a single state and time."""
    out, _ = forward_batch(model, _single_features(model, x, t))
    return out[0]


def backward(model: MlpModel, x: MappedState, t: float, upstream_grad):
    """Parameter gradients of forward(model, x, t) contracted with upstream_grad."""
    upstream = np.asarray(upstream_grad, dtype=np.float64)
    _, acts = forward_batch(model, _single_features(model, x, t))
    return backward_batch(model, acts, upstream[None, :])


@dataclass
class AdamState:
    """First/second moment accumulators mirroring the model parameters."""

    m_w: list
    v_w: list
    m_b: list
    v_b: list
    step: int = 0


def init_adam(model: MlpModel) -> AdamState:
    return AdamState(
        m_w=[np.zeros_like(w) for w in model.weights],
        v_w=[np.zeros_like(w) for w in model.weights],
        m_b=[np.zeros_like(b) for b in model.biases],
        v_b=[np.zeros_like(b) for b in model.biases],
    )


def adam_step(model: MlpModel, grads, state: AdamState, lr: float):
    """One bias-corrected Adam update in place; returns (model, state)."""
    d_ws, d_bs = grads
    for g in (*d_ws, *d_bs):
        if not np.all(np.isfinite(g)):
            raise NumericalError("non-finite gradient in Adam update")
    state.step += 1
    c1 = 1.0 - ADAM_BETA1**state.step
    c2 = 1.0 - ADAM_BETA2**state.step
    for params, grads_, ms, vs in (
        (model.weights, d_ws, state.m_w, state.v_w),
        (model.biases, d_bs, state.m_b, state.v_b),
    ):
        for i, g in enumerate(grads_):
            ms[i] *= ADAM_BETA1
            ms[i] += (1.0 - ADAM_BETA1) * g
            vs[i] *= ADAM_BETA2
            vs[i] += (1.0 - ADAM_BETA2) * g**2
            params[i] -= lr * (ms[i] / c1) / (np.sqrt(vs[i] / c2) + ADAM_EPS)
    return model, state


def mlp_to_dict(model: MlpModel) -> dict:
    """Row-major JSON-ready payload of all parameters."""
    return {
        "widths": model.widths,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }


def mlp_from_dict(payload: dict) -> MlpModel:
    weights = [np.asarray(w, dtype=np.float64) for w in payload["weights"]]
    biases = [np.asarray(b, dtype=np.float64) for b in payload["biases"]]
    model = MlpModel(weights, biases)
    if model.widths != list(payload["widths"]):
        raise InvariantViolationError("stored widths do not match weight shapes")
    return model
