"""Geodesic flow matching on the simplex: loss, trainer, sampler, reporting.

Training regresses the conditional geodesic velocity in mapped coordinates
(prediction projected to the sphere tangent space, error measured in the
mapped Riemannian norm); sampling integrates the learned field with Euler
steps through the exponential map. A `linear` baseline mode runs plain
flow matching on raw probabilities with the Euclidean norm.
"""

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import nn
from .alpha_geometry import (
    AlphaParam,
    MappedState,
    alpha_norm_sq_array,
    alpha_rep_array,
    alpha_rep_inverse_array,
    as_alpha,
    sphere_project_array,
    _logsumexp,
)
from .geodesics import T_FIELD_CLAMP, conditional_vector_field, geodesic
from .manifold import (
    InvariantViolationError,
    NumericalError,
    SimplexPoint,
    clamp_normalize_array,
    make_rng,
    sample_uniform_simplex_array,
)
from .reparam import DEFAULT_MAX_ITER, DEFAULT_TOL, bvp_tau_grids, interp_rows, ivp_tau_final

logger = logging.getLogger(__name__)

SAMPLE_TAU_STEPS = 20
MODEL_FORMAT_VERSION = 1
BASELINES = ("alpha_flow", "linear")


@dataclass(frozen=True)
class FlowConfig:
    """Hyperparameters for one training/sampling run."""

    alpha: AlphaParam
    epochs: int = 2000
    learning_rate: float = 1e-2
    euler_steps_sample: int = 1000
    tau_steps: int = 100
    t_clamp: float = 1e-3
    clamp_eps: float = 1e-3
    seed: int = 0
    baseline: str = "alpha_flow"
    hidden: tuple = (256, 256)

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_alpha(self.alpha))
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if min(self.epochs, self.euler_steps_sample, self.tau_steps) < 1:
            raise InvariantViolationError("counts must be positive")
        if not 0.0 < self.t_clamp < 0.5:
            raise InvariantViolationError("t_clamp must lie in (0, 0.5)")
        if not 0.0 < self.clamp_eps < 0.5:
            raise InvariantViolationError("clamp_eps must lie in (0, 1/n)")
        if self.baseline not in BASELINES:
            raise InvariantViolationError(f"baseline must be one of {BASELINES}")
        if self.learning_rate <= 0.0:
            raise InvariantViolationError("learning_rate must be positive")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.alpha,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "euler_steps_sample": self.euler_steps_sample,
            "tau_steps": self.tau_steps,
            "t_clamp": self.t_clamp,
            "clamp_eps": self.clamp_eps,
            "seed": self.seed,
            "baseline": self.baseline,
            "hidden": list(self.hidden),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "FlowConfig":
        return cls(**{**payload, "hidden": tuple(payload.get("hidden", (256, 256)))})


@dataclass
class Model:
    """Trained predictor plus the config that produced it."""

    mlp: nn.MlpModel
    config: FlowConfig
    loss_history: np.ndarray

    @property
    def n(self) -> int:
        return self.mlp.widths[-1]


@dataclass(frozen=True)
class LossReport:
    """Monte-Carlo flow-matching loss; half of it bounds the NLL up to a constant."""

    mean_loss: float
    half_loss: float
    per_batch: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.mean_loss) and np.all(np.isfinite(self.per_batch))):
            raise InvariantViolationError("loss report contains non-finite values")
        if self.half_loss != self.mean_loss / 2.0:
            raise InvariantViolationError("half_loss must equal mean_loss / 2")


# ---------------------------------------------------------------------------
# batched geometry helpers
# ---------------------------------------------------------------------------


def _rep(mu: np.ndarray, cfg: FlowConfig) -> np.ndarray:
    if cfg.baseline == "linear":
        return mu
    return alpha_rep_array(mu, cfg.alpha)


def _rep_inverse(x: np.ndarray, cfg: FlowConfig) -> np.ndarray:
    if cfg.baseline == "linear":
        return x
    return alpha_rep_inverse_array(x, cfg.alpha)


def _project(x: np.ndarray, raw: np.ndarray, cfg: FlowConfig) -> np.ndarray:
    """Tangent projection of the raw prediction at the current state."""
    if cfg.baseline == "linear":
        return raw - raw.mean(axis=-1, keepdims=True)
    return sphere_project_array(x, raw, cfg.alpha)


def _project_transpose(x: np.ndarray, g: np.ndarray, cfg: FlowConfig) -> np.ndarray:
    """Adjoint of _project, for pushing loss gradients back onto the raw output."""
    if cfg.baseline == "linear":
        return g - g.mean(axis=-1, keepdims=True)
    alpha = cfg.alpha
    if alpha.is_log_chart:
        mu = np.exp(x)
        return g - mu * np.sum(g, axis=-1, keepdims=True)
    return g - x ** (alpha.p - 1.0) * np.sum(x * g, axis=-1, keepdims=True)


def pair_state_and_field(
    x0: np.ndarray, x1: np.ndarray, t: np.ndarray, cfg: FlowConfig
) -> tuple:
    """Geodesic point x_t and conditional velocity u_t for each (row, time)."""
    if cfg.baseline == "linear":
        d = x1 - x0
        return x0 + t[:, None] * d, d
    alpha = cfg.alpha
    a = alpha.alpha
    if a == -1.0:
        d = x1 - x0
        return x0 + t[:, None] * d, d
    if a == 0.0:
        dot = np.clip(np.sum(x0 * x1, axis=-1), -1.0, 1.0)
        theta = np.arccos(dot)
        tiny = theta < 1e-12
        sin_theta = np.where(tiny, 1.0, np.sin(theta))
        th = theta[:, None]
        x_t = (np.sin((1.0 - t[:, None]) * th) * x0 + np.sin(t[:, None] * th) * x1) / sin_theta[:, None]
        u_t = th * (-np.cos((1.0 - t[:, None]) * th) * x0 + np.cos(t[:, None] * th) * x1) / sin_theta[:, None]
        if np.any(tiny):
            x_t[tiny] = x0[tiny]
            u_t[tiny] = 0.0
        return x_t, u_t
    if a == 1.0:
        z = (1.0 - t[:, None]) * x0 + t[:, None] * x1
        x_t = z - _logsumexp(z, keepdims=True)
        mu_t = np.exp(x_t)
        d = x1 - x0
        return x_t, d - np.sum(mu_t * d, axis=-1, keepdims=True)
    p = alpha.p
    d = x1 - x0
    tau, tau_dot, _ = bvp_tau_grids(
        x0, x1, p, cfg.tau_steps, DEFAULT_TOL, DEFAULT_MAX_ITER, fast=True
    )
    tau_t = interp_rows(tau, t, cfg.tau_steps)[:, None]
    td_t = interp_rows(tau_dot, t, cfg.tau_steps)[:, None]
    c = x0 + tau_t * d
    norm = np.sum(c**p, axis=-1, keepdims=True) ** (1.0 / p)
    x_t = c / norm
    u_t = sphere_project_array(x_t, td_t * d, alpha) / norm
    return x_t, u_t


def _norm_weights(x_t: np.ndarray, cfg: FlowConfig) -> np.ndarray:
    """Per-component weights of the mapped squared norm, mu clamped first."""
    if cfg.baseline == "linear":
        return np.ones_like(x_t)
    mu = clamp_normalize_array(_rep_inverse(x_t, cfg), cfg.clamp_eps)
    alpha = cfg.alpha
    if alpha.is_log_chart:
        return mu
    return alpha.p**2 * mu**alpha.alpha


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------


def _as_predictor(predictor, cfg: FlowConfig):
    """Normalize a Model or callable(state, t) -> raw vector into a callable."""
    if isinstance(predictor, Model):
        mlp = predictor.mlp

        def call(x: MappedState, t: float) -> np.ndarray:
            return nn.forward(mlp, x, t)

        return call
    return predictor


def training_loss(
    predictor, mu1: SimplexPoint, mu0: SimplexPoint, t: float, cfg: FlowConfig
) -> float:
    """Flow-matching loss of one conditioning pair at time t.

    Builds the geodesic state x_t and target field u_t, projects the raw
    prediction to the tangent space, and returns the mapped squared norm of
    the error (Euclidean for the linear baseline).
    """
    if not 0.0 <= t <= 1.0 - cfg.t_clamp:
        raise InvariantViolationError(f"t={t} outside [0, 1 - t_clamp]")
    call = _as_predictor(predictor, cfg)
    if cfg.baseline == "linear":
        x_t_arr = (1.0 - t) * mu0.probs + t * mu1.probs
        u_t_arr = mu1.probs - mu0.probs
        state = MappedState(x_t_arr, AlphaParam(-1.0))
        raw = np.asarray(call(state, t), dtype=np.float64)
        v = raw - raw.mean()
        return float(np.sum((v - u_t_arr) ** 2))
    curve = geodesic(mu0, mu1, cfg.alpha, tau_steps=cfg.tau_steps)
    x_t = curve.point_at(t)
    u_t = conditional_vector_field(curve, t)
    raw = np.asarray(call(x_t, t), dtype=np.float64)
    if not np.all(np.isfinite(raw)):
        raise NumericalError("predictor returned non-finite values")
    v = sphere_project_array(x_t.coords, raw, cfg.alpha)
    mu_clamped = clamp_normalize_array(alpha_rep_inverse_array(x_t.coords, cfg.alpha), cfg.clamp_eps)
    return float(alpha_norm_sq_array(v - u_t.comps, mu_clamped, cfg.alpha))


def _batch_losses(
    mlp: nn.MlpModel, x_t: np.ndarray, u_t: np.ndarray, t: np.ndarray, cfg: FlowConfig
):
    """Per-sample losses plus everything backward needs."""
    feats = np.concatenate([x_t, nn.time_features(t)], axis=1)
    raw, acts = nn.forward_batch(mlp, feats)
    if not np.all(np.isfinite(raw)):
        raise NumericalError("predictor returned non-finite values")
    v = _project(x_t, raw, cfg)
    diff = v - u_t
    w = _norm_weights(x_t, cfg)
    per_sample = np.sum(diff**2 * w, axis=1)
    return per_sample, diff, w, acts


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def train(dataset, cfg: FlowConfig) -> Model:
    """Full-batch Adam on the mean flow-matching loss with fresh (mu0, t) draws."""
    data = np.stack([pt.probs for pt in dataset])
    b, n = data.shape
    if cfg.clamp_eps >= 1.0 / n:
        raise InvariantViolationError(f"clamp_eps={cfg.clamp_eps} too large for n={n}")
    rng = make_rng(cfg.seed)
    mlp = nn.init_mlp(n + nn.N_TIME_FEATURES, n, cfg.hidden, rng)
    adam = nn.init_adam(mlp)
    x1 = _rep(data, cfg)
    history = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        mu0 = sample_uniform_simplex_array(n, b, rng, cfg.clamp_eps)
        t = rng.uniform(0.0, 1.0 - cfg.t_clamp, size=b)
        x0 = _rep(mu0, cfg)
        x_t, u_t = pair_state_and_field(x0, x1, t, cfg)
        per_sample, diff, w, acts = _batch_losses(mlp, x_t, u_t, t, cfg)
        loss = float(per_sample.mean())
        if not np.isfinite(loss):
            raise NumericalError(f"training loss diverged at epoch {epoch}: {loss!r}")
        g_raw = _project_transpose(x_t, (2.0 / b) * diff * w, cfg)
        grads = nn.backward_batch(mlp, acts, g_raw)
        nn.adam_step(mlp, grads, adam, cfg.learning_rate)
        history[epoch] = loss
    return Model(mlp=mlp, config=cfg, loss_history=history)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def model_field(model: Model):
    """Projected vector field (x_batch, t) -> v_batch of a trained model."""
    cfg = model.config

    def field(x: np.ndarray, t: float) -> np.ndarray:
        feats = np.concatenate([x, np.broadcast_to(nn.time_features(t), (x.shape[0], 3))], axis=1)
        raw, _ = nn.forward_batch(model.mlp, feats)
        return _project(x, raw, cfg)

    return field


def sample_paths(field_fn, cfg: FlowConfig, count: int, n: int, rng: np.random.Generator):
    """Integrate `count` Euler trajectories of a projected field.

    Returns (probabilities (count, n), clamp activations, worst sum residual).
    Clamps fire only when a step actually leaves the open chart; the point is
    then floored at clamp_eps in probability space and renormalized.
    """
    alpha = cfg.alpha
    n_steps = cfg.euler_steps_sample
    mu = sample_uniform_simplex_array(n, count, rng, cfg.clamp_eps)
    x = _rep(mu, cfg)
    linearish = cfg.baseline == "linear" or alpha.alpha == -1.0
    clamp_count = 0
    max_sum_err = 0.0
    for k in range(n_steps):
        v = field_fn(x, k / n_steps)
        if not np.all(np.isfinite(v)):
            raise NumericalError(f"field returned non-finite values at step {k}")
        u = v / n_steps
        if linearish:
            x = x + u
            bad = np.any(x <= 0.0, axis=1)
            if np.any(bad):
                clamp_count += int(bad.sum())
                x[bad] = clamp_normalize_array(np.maximum(x[bad], 0.0), cfg.clamp_eps)
            x /= x.sum(axis=1, keepdims=True)
            max_sum_err = max(max_sum_err, float(np.abs(x.sum(axis=1) - 1.0).max()))
            continue
        if alpha.is_log_chart:
            z = x + u
            x = z - _logsumexp(z, keepdims=True)
            max_sum_err = max(max_sum_err, float(np.abs(np.exp(x).sum(axis=1) - 1.0).max()))
            continue
        p = alpha.p
        if alpha.alpha == 0.0:
            speed = np.linalg.norm(u, axis=1, keepdims=True)
            direction = np.divide(u, speed, out=np.zeros_like(u), where=speed > 0.0)
            c = np.cos(speed) * x + np.sin(speed) * direction
        else:
            tau1 = ivp_tau_final(x, u, p, SAMPLE_TAU_STEPS)
            exited = ~np.isfinite(tau1)
            if np.any(exited):
                tau1 = np.where(exited, 1.0, tau1)
            c = x + tau1[:, None] * u
        bad = np.any(c <= 0.0, axis=1)
        if np.any(bad):
            clamp_count += int(bad.sum())
            mu_bad = clamp_normalize_array(np.maximum(c[bad], 0.0) ** p, cfg.clamp_eps)
            c[bad] = alpha_rep_array(mu_bad, alpha)
        x = c / np.sum(c**p, axis=1, keepdims=True) ** (1.0 / p)
        max_sum_err = max(max_sum_err, float(np.abs(np.sum(x**p, axis=1) - 1.0).max()))
    return _rep_inverse(x, cfg), clamp_count, max_sum_err


def sample(model: Model, cfg: FlowConfig, count: int, rng: np.random.Generator):
    """Draw `count` simplex points from a trained model (Euler integration)."""
    mus, clamps, sum_err = sample_paths(model_field(model), cfg, count, model.n, rng)
    if clamps:
        logger.info("sampling clamped %d manifold exits", clamps)
    logger.debug("sampling worst sum residual %.3e", sum_err)
    return [SimplexPoint(row) for row in mus]


# ---------------------------------------------------------------------------
# reporting and serialization
# ---------------------------------------------------------------------------


def elbo_report(
    model: Model, dataset, cfg: FlowConfig, mc_draws: int, rng: np.random.Generator = None
) -> LossReport:
    """Monte-Carlo estimate of the flow loss over fresh (t, mu0) draws.

    half_loss is the negative-log-likelihood bound up to the model-independent
    prior constant, which is not computable and therefore not added.
    """
    if rng is None:
        rng = make_rng(cfg.seed + 0x10E1B0)
    data = np.stack([pt.probs for pt in dataset])
    b, n = data.shape
    idx = rng.integers(0, b, size=mc_draws)
    mu1 = data[idx]
    mu0 = sample_uniform_simplex_array(n, mc_draws, rng, cfg.clamp_eps)
    t = rng.uniform(0.0, 1.0 - cfg.t_clamp, size=mc_draws)
    x_t, u_t = pair_state_and_field(_rep(mu0, cfg), _rep(mu1, cfg), t, cfg)
    per_sample, *_ = _batch_losses(model.mlp, x_t, u_t, t, cfg)
    mean_loss = float(per_sample.mean())
    return LossReport(mean_loss=mean_loss, half_loss=mean_loss / 2.0, per_batch=per_sample)


def save_model(model: Model, path):
    """Serialize a trained model to JSON (weights row-major, config echoed)."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "config": model.config.to_dict(),
        "mlp": nn.mlp_to_dict(model.mlp),
        "loss_history": np.asarray(model.loss_history).tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_model(path) -> Model:
    with open(path) as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise InvariantViolationError(f"unsupported model format version {version!r}")
    return Model(
        mlp=nn.mlp_from_dict(payload["mlp"]),
        config=FlowConfig.from_dict(payload["config"]),
        loss_history=np.asarray(payload["loss_history"], dtype=np.float64),
    )
