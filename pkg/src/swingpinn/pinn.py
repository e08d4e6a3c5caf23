"""Physics residual, composite loss and its gradient for the swing-equation PINN.

Single-output mode (``"delta"``) fits ``delta(t, p1)`` and penalizes

    f_delta = m * delta_tt + d * delta_t + b12 * v1 * v2 * sin(delta) - p1

Two-output mode (``"delta_omega"``) fits ``(delta, omega)`` and penalizes

    f_omega = delta_t - omega
    f_delta = m * omega_t + d * omega + b12 * v1 * v2 * sin(delta) - p1

The loss is ``mse_u + mse_f`` with equal weights; labels are always delta.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dataset import CollocationPoints, Domain, TrainingPoints
from .dynamics import SwingParams
from .mlp import MlpParams, backward, forward, forward_with_time_derivs

__all__ = [
    "MODES",
    "PHYSICS_NAMES",
    "M_FLOOR",
    "PinnModel",
    "LossReport",
    "ModeError",
    "swing_residual",
    "residual",
    "residual_two_output",
    "loss",
    "loss_gradient",
    "loss_and_gradient",
    "predict_delta",
    "predict_omega",
    "in_domain",
]

MODES = ("delta", "delta_omega")
PHYSICS_NAMES = ("m", "d")
M_FLOOR = 1e-4


class ModeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PinnModel:
    mlp: MlpParams
    params: SwingParams
    norm: Domain
    trainable: tuple[bool, bool] = (False, False)
    mode: str = "delta"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ModeError(f"mode must be one of {MODES}, got {self.mode!r}")
        expected = 1 if self.mode == "delta" else 2
        if self.mlp.n_outputs != expected:
            raise ModeError(f"mode {self.mode!r} needs {expected} network outputs, got {self.mlp.n_outputs}")
        object.__setattr__(self, "norm", Domain(*map(float, self.norm)))
        object.__setattr__(self, "trainable", tuple(bool(v) for v in self.trainable))
        if len(self.trainable) != 2:
            raise ValueError("trainable holds one flag each for m and d")

    @property
    def trainable_names(self) -> tuple[str, ...]:
        return tuple(n for n, flag in zip(PHYSICS_NAMES, self.trainable) if flag)

    def theta(self) -> np.ndarray:
        """Network parameters followed by the trainable physics parameters."""
        phys = [getattr(self.params, n) for n in self.trainable_names]
        return np.concatenate([self.mlp.flatten(), np.array(phys, dtype=float)])

    def with_theta(self, theta: np.ndarray) -> "PinnModel":
        theta = np.asarray(theta, dtype=float)
        n_net = self.mlp.n_params
        mlp = MlpParams.from_flat(self.mlp.layer_sizes, theta[:n_net])
        updates = dict(zip(self.trainable_names, map(float, theta[n_net:])))
        params = dataclasses.replace(self.params, **updates) if updates else self.params
        return dataclasses.replace(self, mlp=mlp, params=params)

    def normalize(self, t, p1) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        p1 = np.asarray(p1, dtype=float)
        return t / self.norm.t_end, (p1 - self.norm.p_min) / (self.norm.p_max - self.norm.p_min)


class LossReport(NamedTuple):
    mse_u: float
    mse_f: float
    total: float


def _derivs(model: PinnModel, t, p1, return_cache=False, mlp=None):
    """Network value and physical-time derivatives at ``(t, p1)``."""
    th, ph = model.normalize(t, p1)
    res = forward_with_time_derivs(mlp or model.mlp, th, ph, return_cache=return_cache)
    out, cache = res if return_cache else (res, None)
    scale = 1.0 / model.norm.t_end
    return out.u, out.u_t * scale, out.u_tt * scale * scale, cache


def swing_residual(params: SwingParams, p1, delta, delta_t, delta_tt):
    """``m * delta_tt + d * delta_t + b12 * v1 * v2 * sin(delta) - p1`` for any source of derivatives."""
    return params.m * delta_tt + params.d * delta_t + params.pmax * np.sin(delta) - p1


def residual(model: PinnModel, t, p1) -> np.ndarray:
    """Swing-equation residual of the single-output network."""
    if model.mode != "delta":
        raise ModeError("residual() needs a single-output model; use residual_two_output()")
    u, u_t, u_tt, _ = _derivs(model, t, p1)
    p1 = np.broadcast_to(np.asarray(p1, dtype=float), u[:, 0].shape)
    return swing_residual(model.params, p1, u[:, 0], u_t[:, 0], u_tt[:, 0])


def residual_two_output(model: PinnModel, t, p1) -> tuple[np.ndarray, np.ndarray]:
    """``(f_omega, f_delta)`` for the two-output network."""
    if model.mode != "delta_omega":
        raise ModeError("residual_two_output() needs a two-output model")
    u, u_t, _, _ = _derivs(model, t, p1)
    prm = model.params
    p1 = np.broadcast_to(np.asarray(p1, dtype=float), u[:, 0].shape)
    f_omega = u_t[:, 0] - u[:, 1]
    f_delta = swing_residual(prm, p1, u[:, 0], u[:, 1], u_t[:, 1])
    return f_omega, f_delta


def _check_inputs(training: TrainingPoints, collocation: CollocationPoints):
    if not isinstance(training, TrainingPoints):
        training = TrainingPoints.from_points(training)
    if not isinstance(collocation, CollocationPoints):
        collocation = CollocationPoints.from_points(collocation)
    if len(training) == 0 or len(collocation) == 0:
        raise ValueError("loss needs at least one training point and one collocation point")
    return training, collocation


def loss(model: PinnModel, training, collocation) -> LossReport:
    training, collocation = _check_inputs(training, collocation)
    mse_u, mse_f, _ = _loss_terms(model, training, collocation, need_grad=False)
    return LossReport(mse_u, mse_f, mse_u + mse_f)


def loss_gradient(model: PinnModel, training, collocation) -> tuple[np.ndarray, dict[str, float]]:
    """Gradient over the network parameters and over the trainable physics parameters."""
    _, grad_net, grad_phys = loss_and_gradient(model, training, collocation)
    return grad_net, grad_phys


def loss_and_gradient(model: PinnModel, training, collocation, dtype="float64"):
    """One forward and one backward sweep; returns ``(LossReport, grad_net, grad_phys)``.

    ``dtype="float32"`` runs the network sweeps in single precision (about
    three times faster); the loss reduction and returned gradient stay float64.
    """
    training, collocation = _check_inputs(training, collocation)
    mse_u, mse_f, grads = _loss_terms(model, training, collocation, need_grad=True, dtype=dtype)
    grad_net, grad_phys = grads
    return LossReport(mse_u, mse_f, mse_u + mse_f), grad_net, grad_phys


def _loss_terms(model, training, collocation, need_grad, dtype="float64"):
    n_u, n_f = len(training), len(collocation)
    mlp = model.mlp if dtype == "float64" else model.mlp.astype(dtype)
    # data points and collocation points share one batched sweep
    t = np.concatenate([training.t, collocation.t])
    p1 = np.concatenate([training.p1, collocation.p1])
    u, u_t, u_tt, cache = _derivs(model, t, p1, return_cache=need_grad, mlp=mlp)
    prm = model.params
    k = prm.pmax
    uc, utc, uttc, pc = u[n_u:], u_t[n_u:], u_tt[n_u:], collocation.p1

    r_u = u[:n_u, 0] - training.delta
    mse_u = float(np.mean(r_u * r_u))

    if model.mode == "delta":
        f = swing_residual(prm, pc, uc[:, 0], utc[:, 0], uttc[:, 0])
        mse_f = float(np.mean(f * f))
    else:
        f_omega = utc[:, 0] - uc[:, 1]
        f_delta = swing_residual(prm, pc, uc[:, 0], uc[:, 1], utc[:, 1])
        mse_f = float(np.mean(f_omega * f_omega + f_delta * f_delta))
    if not need_grad:
        return mse_u, mse_f, None

    inv_t = 1.0 / model.norm.t_end
    g_u = np.zeros_like(u)
    g_ut = np.zeros_like(u)
    g_utt = np.zeros_like(u)
    g_u[:n_u, 0] = 2.0 * r_u / n_u

    if model.mode == "delta":
        c = 2.0 * f / n_f
        g_u[n_u:, 0] = c * k * np.cos(uc[:, 0])
        g_ut[n_u:, 0] = c * prm.d * inv_t
        g_utt[n_u:, 0] = c * prm.m * inv_t * inv_t
        phys = {"m": float(np.dot(c, uttc[:, 0])), "d": float(np.dot(c, utc[:, 0]))}
    else:
        c_om = 2.0 * f_omega / n_f
        c_de = 2.0 * f_delta / n_f
        g_u[n_u:, 0] = c_de * k * np.cos(uc[:, 0])
        g_u[n_u:, 1] = c_de * prm.d - c_om
        g_ut[n_u:, 0] = c_om * inv_t
        g_ut[n_u:, 1] = c_de * prm.m * inv_t
        phys = {"m": float(np.dot(c_de, utc[:, 1])), "d": float(np.dot(c_de, uc[:, 1]))}

    grad_net = backward(mlp, cache, g_u, g_ut, g_utt)
    grad_phys = {name: phys[name] for name in model.trainable_names}
    return mse_u, mse_f, (grad_net, grad_phys)


def predict_delta(model: PinnModel, t, p1) -> np.ndarray:
    """Rotor angle at arbitrary ``(t, p1)``; broadcasts its inputs."""
    th, ph = model.normalize(t, p1)
    return forward(model.mlp, th, ph)[:, 0]


def predict_omega(model: PinnModel, t, p1) -> np.ndarray:
    """Frequency: the exact time derivative of the angle output (single-output mode)
    or the network's own omega output (two-output mode)."""
    if model.mode == "delta_omega":
        th, ph = model.normalize(t, p1)
        return forward(model.mlp, th, ph)[:, 1]
    _, u_t, _, _ = _derivs(model, t, p1)
    return u_t[:, 0]


def in_domain(model: PinnModel, t, p1) -> np.ndarray:
    """False where ``(t, p1)`` lies outside the training box (extrapolation)."""
    return model.norm.contains(t, p1)
