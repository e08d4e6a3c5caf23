"""Dense tanh network with exact time derivatives and parameter gradients.

Inputs are the normalized pair ``(t, p)``. Alongside the value ``u`` the
forward pass carries the first and second directional derivatives along the
time input, using

    tanh'  = 1 - tanh^2
    tanh'' = -2 tanh (1 - tanh^2)

Reverse mode runs over that extended graph, so one backward sweep returns the
gradient of any weighted combination of ``u``, ``u_t`` and ``u_tt`` with
respect to every weight and bias.

Weights are stored with shape ``(n_in, n_out)`` so a layer is ``a @ W + b``.
The flat parameter ordering is layer-major: ``W0`` row-major, ``b0``, ``W1``,
``b1``, and so on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "MlpParams",
    "ValueAndTimeDerivs",
    "ForwardCache",
    "init_params",
    "forward",
    "forward_with_time_derivs",
    "backward",
    "param_gradients",
    "count_params",
]


def count_params(layer_sizes: Sequence[int]) -> int:
    return sum(n_in * n_out + n_out for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]))


def _check_sizes(layer_sizes: Sequence[int]) -> tuple[int, ...]:
    sizes = tuple(int(n) for n in layer_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output layer")
    if any(n <= 0 for n in sizes):
        raise ValueError(f"layer sizes must be positive, got {sizes}")
    if sizes[0] != 2:
        raise ValueError("the input layer takes (t, p) and must have size 2")
    return sizes


def _as_float(x) -> np.ndarray:
    x = np.asarray(x)
    # float32 is kept for the fast training path; everything else is float64
    return x if x.dtype in (np.float32, np.float64) else x.astype(np.float64)


@dataclass(frozen=True, eq=False)
class MlpParams:
    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        sizes = _check_sizes(self.layer_sizes)
        weights = tuple(_as_float(w) for w in self.weights)
        biases = tuple(_as_float(b) for b in self.biases)
        if len(weights) != len(sizes) - 1 or len(biases) != len(sizes) - 1:
            raise ValueError("one weight matrix and one bias vector per layer")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
                raise ValueError(
                    f"layer {i}: expected W{(sizes[i], sizes[i + 1])} and b{(sizes[i + 1],)}, "
                    f"got W{w.shape} and b{b.shape}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i} has non-finite entries")
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)

    @property
    def n_params(self) -> int:
        return count_params(self.layer_sizes)

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype

    def astype(self, dtype) -> "MlpParams":
        return MlpParams(
            self.layer_sizes,
            tuple(w.astype(dtype) for w in self.weights),
            tuple(b.astype(dtype) for b in self.biases),
        )

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    @classmethod
    def from_flat(cls, layer_sizes: Sequence[int], flat: np.ndarray) -> "MlpParams":
        sizes = _check_sizes(layer_sizes)
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (count_params(sizes),):
            raise ValueError(f"expected {count_params(sizes)} parameters, got {flat.shape}")
        weights, biases = [], []
        pos = 0
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            weights.append(flat[pos : pos + n_in * n_out].reshape(n_in, n_out).copy())
            pos += n_in * n_out
            biases.append(flat[pos : pos + n_out].copy())
            pos += n_out
        return cls(sizes, tuple(weights), tuple(biases))


class ValueAndTimeDerivs(NamedTuple):
    u: np.ndarray
    u_t: np.ndarray
    u_tt: np.ndarray


@dataclass
class ForwardCache:
    # acts[i] feeds layer i (acts[0] is the input); z_t[i], z_tt[i] are the
    # pre-activation time derivatives that produced acts[i] (None for i = 0)
    acts: list
    acts_t: list
    acts_tt: list
    z_t: list
    z_tt: list


def init_params(layer_sizes: Sequence[int], seed: int) -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    sizes = _check_sizes(layer_sizes)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return MlpParams(sizes, tuple(weights), tuple(biases))


def _inputs(t, p, dtype=np.float64) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=dtype))
    p = np.atleast_1d(np.asarray(p, dtype=dtype))
    t, p = np.broadcast_arrays(t, p)
    return np.stack([t.ravel(), p.ravel()], axis=1)


def forward(params: MlpParams, t, p) -> np.ndarray:
    """Network output, shape ``(n_points, n_outputs)``."""
    a = _inputs(t, p, params.dtype)
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ w + b
        if i < last:
            a = np.tanh(a)
    return a


def forward_with_time_derivs(params: MlpParams, t, p, *, return_cache: bool = False):
    """Value and first/second derivatives along the time input.

    Each field of the result has shape ``(n_points, n_outputs)``. With
    ``return_cache=True`` also returns the intermediates needed by
    :func:`backward`.
    """
    x = _inputs(t, p, params.dtype)
    n = x.shape[0]
    a = x
    a_t = np.zeros_like(x)
    a_t[:, 0] = 1.0
    a_tt = np.zeros_like(x)
    cache = ForwardCache([a], [a_t], [a_tt], [None], [None])

    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        if i == 0:
            # input derivative is the constant unit vector along t
            z_t = np.broadcast_to(w[0], (n, w.shape[1]))
            z_tt = np.zeros((n, w.shape[1]), dtype=x.dtype)
        else:
            z_t = a_t @ w
            z_tt = a_tt @ w
        if i == last:
            a, a_t, a_tt = z, z_t, z_tt
        else:
            a = np.tanh(z)
            s = 1.0 - a * a
            a_t = s * z_t
            a_tt = s * z_tt - 2.0 * a * s * z_t * z_t
            cache.acts.append(a)
            cache.acts_t.append(a_t)
            cache.acts_tt.append(a_tt)
            cache.z_t.append(z_t)
            cache.z_tt.append(z_tt)

    out = ValueAndTimeDerivs(np.array(a), np.array(a_t), np.array(a_tt))
    if return_cache:
        return out, cache
    return out


def backward(params: MlpParams, cache: ForwardCache, g_u, g_ut, g_utt) -> np.ndarray:
    """Pull cotangents on ``(u, u_t, u_tt)`` back to the flat parameter vector.

    The cotangents have the output shape ``(n_points, n_outputs)`` and the
    result is summed over points.
    """
    n_layers = len(params.weights)
    dtype = params.dtype
    g_z = np.asarray(g_u, dtype=dtype)
    g_zt = np.asarray(g_ut, dtype=dtype)
    g_ztt = np.asarray(g_utt, dtype=dtype)
    grads_w = [None] * n_layers
    grads_b = [None] * n_layers

    for i in range(n_layers - 1, -1, -1):
        w = params.weights[i]
        a_prev = cache.acts[i]
        if i == 0:
            # a_t = e_t and a_tt = 0 for the input layer
            gw = a_prev.T @ g_z
            gw[0] += g_zt.sum(axis=0)
            grads_w[i] = gw
            grads_b[i] = g_z.sum(axis=0)
            break
        a_prev_t, a_prev_tt = cache.acts_t[i], cache.acts_tt[i]
        z_prev_t, z_prev_tt = cache.z_t[i], cache.z_tt[i]
        grads_w[i] = a_prev.T @ g_z + a_prev_t.T @ g_zt + a_prev_tt.T @ g_ztt
        grads_b[i] = g_z.sum(axis=0)

        g_a = g_z @ w.T
        g_at = g_zt @ w.T
        g_att = g_ztt @ w.T

        # through a = tanh(z), a_t = s z_t, a_tt = s z_tt - 2 a s z_t^2
        a = a_prev
        s = 1.0 - a * a
        two_as = 2.0 * a * s
        g_ztt = s * g_att
        g_zt = s * g_at - 2.0 * two_as * z_prev_t * g_att
        g_z = (
            s * g_a
            - two_as * z_prev_t * g_at
            - g_att * (two_as * z_prev_tt + 2.0 * s * (s - 2.0 * a * a) * z_prev_t * z_prev_t)
        )

    parts = []
    for gw, gb in zip(grads_w, grads_b):
        parts.append(gw.ravel())
        parts.append(gb)
    return np.concatenate(parts).astype(np.float64)


def param_gradients(params: MlpParams, t: float, p: float, output: int = 0):
    """Gradients of ``u``, ``u_t`` and ``u_tt`` at one input point.

    Returns three flat vectors in the canonical parameter ordering, for the
    chosen output component.
    """
    _, cache = forward_with_time_derivs(params, t, p, return_cache=True)
    k = params.n_outputs
    if not 0 <= output < k:
        raise IndexError(f"output {output} out of range for {k} outputs")
    unit = np.zeros((1, k))
    unit[0, output] = 1.0
    zero = np.zeros((1, k))
    return (
        backward(params, cache, unit, zero, zero),
        backward(params, cache, zero, unit, zero),
        backward(params, cache, zero, zero, unit),
    )
