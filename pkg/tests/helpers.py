import numpy as np

from swingpinn.dataset import CollocationPoints, Domain, TrainingPoints
from swingpinn.dynamics import SwingParams
from swingpinn.mlp import MlpParams, count_params
from swingpinn.pinn import PinnModel

DOMAIN = Domain(20.0, 0.08, 0.18)


def random_model(sizes=(2, 10, 10, 10, 10, 10, 1), seed=0, scale=0.5, params=None, trainable=(False, False)):
    rng = np.random.default_rng(seed)
    mlp = MlpParams.from_flat(list(sizes), rng.normal(scale=scale, size=count_params(list(sizes))))
    mode = "delta" if sizes[-1] == 1 else "delta_omega"
    return PinnModel(mlp, params or SwingParams(), DOMAIN, trainable, mode)


def random_points(n_u, n_f, seed=0, domain=DOMAIN):
    rng = np.random.default_rng(seed)
    training = TrainingPoints(
        rng.uniform(0, domain.t_end, n_u),
        rng.uniform(domain.p_min, domain.p_max, n_u),
        rng.uniform(0.0, 1.0, n_u),
    )
    collocation = CollocationPoints(rng.uniform(0, domain.t_end, n_f), rng.uniform(domain.p_min, domain.p_max, n_f))
    return training, collocation


def constant_model(values, params=None, domain=DOMAIN):
    """Network whose outputs are the constants ``values`` everywhere."""
    values = np.atleast_1d(np.asarray(values, dtype=float))
    mlp = MlpParams((2, values.size), (np.zeros((2, values.size)),), (values,))
    mode = "delta" if values.size == 1 else "delta_omega"
    return PinnModel(mlp, params or SwingParams(), domain, (False, False), mode)
