"""Full-batch training of the PINN: forward solution and parameter identification.

Adam with exponentially decaying step size does the bulk of the work; an
optional L-BFGS stage (scipy) refines from the best Adam iterate. Physics
parameters, when trainable, are kept feasible by projection (``m >= 1e-4``,
``d >= 0``) after every step.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .dataset import CollocationPoints, Domain, TrainingPoints
from .dynamics import SwingParams
from .mlp import MlpParams, init_params
from .pinn import M_FLOOR, LossReport, PinnModel, loss, loss_and_gradient

__all__ = [
    "TrainConfig",
    "TrainReport",
    "HistoryRow",
    "TrainingDiverged",
    "CheckpointError",
    "train_forward",
    "train_identify",
    "checkpoint",
    "checkpoint_dict",
    "restore",
    "write_history_csv",
    "DEFAULT_INIT_GUESS",
]

logger = logging.getLogger(__name__)

DEFAULT_INIT_GUESS = (0.25, 0.10)
CHECKPOINT_FORMAT = "swingpinn-checkpoint-1"


class TrainingDiverged(RuntimeError):
    """Loss became non-finite or exceeded the divergence threshold.

    ``model`` holds the best finite iterate seen before the blow-up.
    """

    def __init__(self, message: str, model: PinnModel, report: "TrainReport"):
        super().__init__(message)
        self.model = model
        self.report = report


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    max_iterations: int = 50_000
    learning_rate: float = 1e-3
    decay_rate: float = 0.5
    decay_steps: int = 10_000
    seed: int = 0
    grad_tol: float = 1e-8
    plateau_window: int = 1_000
    plateau_tol: float = 1e-12
    mode: str = "forward"
    refine: bool = False
    refine_iterations: int = 5_000
    log_every: int = 100
    divergence_threshold: float = 1e6
    dtype: str = "float64"
    # Adam iterations with trainable physics held at the initial guess
    physics_warmup: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.mode not in ("forward", "identify"):
            raise ValueError(f"mode must be 'forward' or 'identify', got {self.mode!r}")
        if self.dtype not in ("float64", "float32"):
            raise ValueError("dtype must be 'float64' or 'float32'")
        if self.physics_warmup < 0:
            raise ValueError("physics_warmup must be non-negative")

    def learning_rate_at(self, iteration: int) -> float:
        return self.learning_rate * self.decay_rate ** (iteration / self.decay_steps)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown train-config fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class HistoryRow:
    iteration: int
    mse_u: float
    mse_f: float
    total: float
    m: Optional[float] = None
    d: Optional[float] = None


@dataclass
class TrainReport:
    history: list[HistoryRow] = field(default_factory=list)
    initial: Optional[LossReport] = None
    final: Optional[LossReport] = None
    seconds: float = 0.0
    iterations: int = 0
    refine_iterations: int = 0
    stop_reason: str = ""
    identified: Optional[dict] = None
    relative_errors: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "initial": self.initial._asdict() if self.initial else None,
            "final": self.final._asdict() if self.final else None,
            "seconds": self.seconds,
            "iterations": self.iterations,
            "refine_iterations": self.refine_iterations,
            "stop_reason": self.stop_reason,
            "identified": self.identified,
            "relative_errors": self.relative_errors,
        }


def _project(theta: np.ndarray, model: PinnModel) -> None:
    n_net = model.mlp.n_params
    for offset, name in enumerate(model.trainable_names):
        floor = M_FLOOR if name == "m" else 0.0
        if theta[n_net + offset] < floor:
            theta[n_net + offset] = floor


def _log_row(report: TrainReport, it: int, rep: LossReport, model: PinnModel) -> None:
    report.history.append(HistoryRow(it, rep.mse_u, rep.mse_f, rep.total, *_phys_values(model)))


def _phys_values(model: PinnModel):
    if not any(model.trainable):
        return None, None
    return model.params.m, model.params.d


def _adam(model, training, collocation, config, report):
    b1, b2, eps = 0.9, 0.999, 1e-8
    theta = model.theta()
    m1 = np.zeros_like(theta)
    m2 = np.zeros_like(theta)
    best_theta, best_loss = theta.copy(), math.inf
    # best loss seen up to each iteration, used by the plateau test
    best_so_far = np.empty(config.max_iterations + 1)
    reason = "max_iterations"
    it = 0
    current = model
    for it in range(config.max_iterations + 1):
        current = model.with_theta(theta)
        rep, g_net, g_phys = loss_and_gradient(current, training, collocation, dtype=config.dtype)
        if not math.isfinite(rep.total) or rep.total > config.divergence_threshold:
            report.iterations = it
            best_model = model.with_theta(best_theta)
            raise TrainingDiverged(
                f"loss diverged at iteration {it} (total={rep.total:g})", best_model, report
            )
        if rep.total < best_loss:
            best_loss, best_theta = rep.total, theta.copy()
        best_so_far[it] = best_loss
        if it % config.log_every == 0:
            _log_row(report, it, rep, current)
        if it == config.max_iterations:
            break
        grad = np.concatenate([g_net, [g_phys[n] for n in current.trainable_names]])
        if it < config.physics_warmup:
            grad[g_net.size :] = 0.0
        if np.max(np.abs(grad)) < config.grad_tol:
            reason = "gradient_tolerance"
            break
        w = config.plateau_window
        if it >= w and best_so_far[it - w] - best_loss < config.plateau_tol:
            reason = "loss_plateau"
            break

        m1 = b1 * m1 + (1 - b1) * grad
        m2 = b2 * m2 + (1 - b2) * grad * grad
        step = it + 1
        m_hat = m1 / (1 - b1**step)
        v_hat = m2 / (1 - b2**step)
        theta = theta - config.learning_rate_at(it) * m_hat / (np.sqrt(v_hat) + eps)
        if current.trainable_names:
            _project(theta, model)
        if it % 1000 == 0:
            logger.debug("adam iteration %d: loss %.3e", it, rep.total)
    report.iterations = it
    report.stop_reason = reason
    return model.with_theta(best_theta)


def _lbfgs(model, training, collocation, config, report):
    n_net = model.mlp.n_params
    bounds = [(None, None)] * n_net
    for name in model.trainable_names:
        bounds.append((M_FLOOR, None) if name == "m" else (0.0, None))

    def fun(theta):
        # line searches need full precision, whatever dtype Adam used
        cur = model.with_theta(theta)
        rep, g_net, g_phys = loss_and_gradient(cur, training, collocation)
        if not math.isfinite(rep.total):
            return math.inf, np.zeros_like(theta)
        return rep.total, np.concatenate([g_net, [g_phys[n] for n in cur.trainable_names]])

    res = optimize.minimize(
        fun,
        model.theta(),
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={
            "maxiter": config.refine_iterations,
            "maxfun": 2 * config.refine_iterations,
            "maxcor": 50,
            "ftol": 1.0 * np.finfo(float).eps,
            "gtol": config.grad_tol,
        },
    )
    report.refine_iterations = int(res.nit)
    refined = model.with_theta(res.x)
    if loss(refined, training, collocation).total <= loss(model, training, collocation).total:
        return refined
    return model


def _run(model, training, collocation, config) -> tuple[PinnModel, TrainReport]:
    if not isinstance(training, TrainingPoints):
        training = TrainingPoints.from_points(training)
    if not isinstance(collocation, CollocationPoints):
        collocation = CollocationPoints.from_points(collocation)
    report = TrainReport()
    start = time.perf_counter()
    report.initial = loss(model, training, collocation)
    model = _adam(model, training, collocation, config, report)
    if config.refine:
        model = _lbfgs(model, training, collocation, config, report)
    report.seconds = time.perf_counter() - start
    report.final = loss(model, training, collocation)
    _log_row(report, report.iterations + report.refine_iterations, report.final, model)
    return model, report


def train_forward(
    training,
    collocation,
    layer_sizes: Sequence[int],
    params: SwingParams,
    config: TrainConfig,
    *,
    domain: Domain,
    two_output: bool = False,
    init_model: Optional[PinnModel] = None,
) -> tuple[PinnModel, TrainReport]:
    """Fit the network to labeled angles and the swing equation with known physics."""
    if config.mode != "forward":
        raise ValueError("train_forward needs config.mode == 'forward'")
    if init_model is None:
        mlp = init_params(layer_sizes, config.seed)
        model = PinnModel(mlp, params, domain, (False, False), "delta_omega" if two_output else "delta")
    else:
        model = dataclasses.replace(init_model, params=params, trainable=(False, False))
    return _run(model, training, collocation, config)


def train_identify(
    training,
    collocation,
    layer_sizes: Sequence[int],
    known: SwingParams,
    config: TrainConfig,
    *,
    domain: Domain,
    init_guess: tuple[float, float] = DEFAULT_INIT_GUESS,
    truth: Optional[tuple[float, float]] = None,
    init_model: Optional[PinnModel] = None,
) -> tuple[PinnModel, TrainReport]:
    """Train network, inertia ``m`` and damping ``d`` jointly.

    Only the coupling terms of ``known`` are used. With ``truth``
    the report carries relative errors of the identified values.
    """
    if config.mode != "identify":
        raise ValueError("train_identify needs config.mode == 'identify'")
    params = dataclasses.replace(known, m=float(init_guess[0]), d=float(init_guess[1]))
    if init_model is None:
        mlp = init_params(layer_sizes, config.seed)
        model = PinnModel(mlp, params, domain, (True, True), "delta")
    else:
        model = dataclasses.replace(init_model, params=params, trainable=(True, True))
    model, report = _run(model, training, collocation, config)
    report.identified = {"m": model.params.m, "d": model.params.d}
    if truth is not None:
        m_true, d_true = truth
        report.relative_errors = {
            "m": abs(model.params.m - m_true) / m_true,
            "d": abs(model.params.d - d_true) / d_true,
        }
    return model, report


def checkpoint_dict(model: PinnModel) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "layer_sizes": list(model.mlp.layer_sizes),
        "weights": [w.tolist() for w in model.mlp.weights],
        "biases": [b.tolist() for b in model.mlp.biases],
        "normalization": model.norm._asdict(),
        "physics": model.params.to_dict(),
        "trainable": dict(zip(("m", "d"), model.trainable)),
        "mode": model.mode,
    }


def checkpoint(model: PinnModel, path) -> None:
    """Write the model as JSON; floats use the shortest round-trip repr."""
    text = json.dumps(checkpoint_dict(model), sort_keys=True, separators=(",", ":"))
    Path(path).write_text(text + "\n")


def restore(path, layer_sizes: Optional[Sequence[int]] = None) -> PinnModel:
    """Load a checkpoint; with ``layer_sizes`` also check the architecture matches."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a {CHECKPOINT_FORMAT} file")
    try:
        sizes = tuple(data["layer_sizes"])
        if layer_sizes is not None and tuple(layer_sizes) != sizes:
            raise CheckpointError(
                f"checkpoint architecture {list(sizes)} does not match requested {list(layer_sizes)}"
            )
        mlp = MlpParams(sizes, tuple(map(np.array, data["weights"])), tuple(map(np.array, data["biases"])))
        norm = data["normalization"]
        return PinnModel(
            mlp,
            SwingParams(**data["physics"]),
            Domain(norm["t_end"], norm["p_min"], norm["p_max"]),
            (data["trainable"]["m"], data["trainable"]["d"]),
            data["mode"],
        )
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"incompatible checkpoint {path}: {exc}") from exc


def write_history_csv(report: TrainReport, path) -> None:
    with_phys = any(row.m is not None for row in report.history)
    header = ["iteration", "mse_u", "mse_f", "total"] + (["m", "d"] if with_phys else [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in report.history:
            values = [row.iteration, repr(row.mse_u), repr(row.mse_f), repr(row.total)]
            if with_phys:
                values += [repr(row.m), repr(row.d)]
            writer.writerow(values)
