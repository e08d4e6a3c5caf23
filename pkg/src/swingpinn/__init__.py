"""Physics-informed neural networks for the single-machine infinite-bus swing equation."""

__version__ = "0.1.0"

from .dynamics import SwingParams, State, Trajectory, energy, equilibrium, integrate, swing_rhs
from .dataset import (
    DatasetSpec,
    Domain,
    generate_grid,
    load_csv,
    sample_collocation_points,
    sample_training_points,
    save_csv,
)
from .mlp import MlpParams, init_params
from .pinn import PinnModel, loss, loss_gradient, predict_delta, predict_omega, residual
from .trainer import TrainConfig, checkpoint, restore, train_forward, train_identify
from .evaluation import benchmark, evaluate_model, recover_omega, relative_l2

__all__ = [
    "SwingParams",
    "State",
    "Trajectory",
    "energy",
    "equilibrium",
    "integrate",
    "swing_rhs",
    "DatasetSpec",
    "Domain",
    "generate_grid",
    "load_csv",
    "save_csv",
    "sample_collocation_points",
    "sample_training_points",
    "MlpParams",
    "init_params",
    "PinnModel",
    "loss",
    "loss_gradient",
    "predict_delta",
    "predict_omega",
    "residual",
    "TrainConfig",
    "checkpoint",
    "restore",
    "train_forward",
    "train_identify",
    "benchmark",
    "evaluate_model",
    "recover_omega",
    "relative_l2",
]
