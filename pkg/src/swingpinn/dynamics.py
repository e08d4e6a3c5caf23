"""Single-machine infinite-bus swing equation and its reference integrator.

The rotor dynamics are

    m * delta'' + d * delta' + b12 * v1 * v2 * sin(delta) - p1 = 0

integrated as the first-order system (delta' = omega, omega' = ...) with an
adaptive Dormand-Prince 5(4) scheme. Output is sampled on a uniform grid with
the scheme's 4th-order continuous extension, so the adaptive step never has
to land on grid points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "SwingParams",
    "State",
    "Trajectory",
    "IntegrationError",
    "NoEquilibriumError",
    "swing_rhs",
    "integrate",
    "equilibrium",
    "energy",
    "DEFAULT_RTOL",
    "DEFAULT_ATOL",
]

DEFAULT_RTOL = 1e-6
DEFAULT_ATOL = 1e-8


class IntegrationError(RuntimeError):
    """Raised when the adaptive step collapses before reaching the horizon."""

    def __init__(self, message: str, last_time: float):
        super().__init__(f"{message} (last valid time t={last_time:.6g} s)")
        self.last_time = last_time


class NoEquilibriumError(ValueError):
    """Raised when the mechanical power exceeds the pull-out power."""


@dataclass(frozen=True)
class SwingParams:
    """Physical constants of the SMIB swing equation (per-unit)."""

    m: float = 0.4
    d: float = 0.15
    b12: float = 0.2
    v1: float = 1.0
    v2: float = 1.0

    def __post_init__(self):
        for name in ("m", "d", "b12", "v1", "v2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.m <= 0:
            raise ValueError(f"inertia m must be positive, got {self.m}")
        if self.d < 0:
            raise ValueError(f"damping d must be non-negative, got {self.d}")
        if self.b12 <= 0 or self.v1 <= 0 or self.v2 <= 0:
            raise ValueError("b12, v1 and v2 must be positive")

    @property
    def pmax(self) -> float:
        """Pull-out power b12 * v1 * v2."""
        return self.b12 * self.v1 * self.v2

    def to_dict(self) -> dict:
        return {"m": self.m, "d": self.d, "b12": self.b12, "v1": self.v1, "v2": self.v2}


class State(NamedTuple):
    delta: float
    omega: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples of one swing trajectory at a fixed mechanical power ``p1``."""

    p1: float
    times: np.ndarray
    delta: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        delta = np.asarray(self.delta, dtype=float)
        omega = np.asarray(self.omega, dtype=float)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("a trajectory needs at least one time point")
        if delta.shape != times.shape or omega.shape != times.shape:
            raise ValueError("times, delta and omega must have the same length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "omega", omega)

    def __len__(self) -> int:
        return self.times.size

    @property
    def states(self) -> list[State]:
        return [State(float(a), float(w)) for a, w in zip(self.delta, self.omega)]


def swing_rhs(state, params: SwingParams, p1: float) -> tuple[float, float]:
    """Time derivative ``(d delta/dt, d omega/dt)`` of the first-order system."""
    delta, omega = state
    accel = (p1 - params.d * omega - params.pmax * math.sin(delta)) / params.m
    return omega, accel


def equilibrium(params: SwingParams, p1: float) -> State:
    """Stable fixed point ``(arcsin(p1 / pmax), 0)``."""
    ratio = p1 / params.pmax
    if abs(ratio) > 1.0:
        raise NoEquilibriumError(
            f"|p1|={abs(p1):g} exceeds the pull-out power {params.pmax:g}; no equilibrium exists"
        )
    return State(math.asin(ratio), 0.0)


def energy(state, params: SwingParams, p1: float) -> float:
    """Lyapunov-type energy; constant for d = 0 and non-increasing for d > 0."""
    delta, omega = state
    return 0.5 * params.m * omega**2 - p1 * delta - params.pmax * math.cos(delta)


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between 5th- and 4th-order weights (7th stage is the FSAL stage)
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# 4th-order continuous extension; columns multiply theta, theta^2, theta^3, theta^4
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


def _output_grid(t_end: float, output_step: float) -> np.ndarray:
    n_steps = t_end / output_step
    n = int(round(n_steps))
    if n < 1 or abs(n_steps - n) > 1e-9 * max(1.0, n_steps):
        raise ValueError(f"output_step={output_step} does not divide t_end={t_end}")
    return np.arange(n + 1) * output_step


def _initial_step(f, y0, f0, rtol, atol, span) -> float:
    # Hairer, Norsett & Wanner, "Solving ODEs I", sec. II.4
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = f(y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def integrate(
    params: SwingParams,
    p1: float,
    init,
    t_end: float,
    output_step: float,
    *,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_steps: int = 1_000_000,
) -> Trajectory:
    """Integrate the swing equation from ``init`` over ``[0, t_end]``.

    Returns the solution sampled at ``0, output_step, ..., t_end``.
    Raises :class:`IntegrationError` if the step size underflows.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if not output_step > 0:
        raise ValueError("output_step must be positive")
    if not (rtol >= 0 and atol >= 0 and rtol + atol > 0):
        raise ValueError("tolerances must be non-negative and not both zero")
    grid = _output_grid(t_end, output_step)
    t_final = float(grid[-1])

    k_sync = params.pmax
    inv_m = 1.0 / params.m
    damping = params.d

    def f(y):
        return np.array([y[1], (p1 - damping * y[1] - k_sync * math.sin(y[0])) * inv_m])

    y = np.array(init, dtype=float)
    if y.shape != (2,) or not np.all(np.isfinite(y)):
        raise ValueError("init must be a finite (delta, omega) pair")

    out = np.empty((grid.size, 2))
    out[0] = y
    next_idx = 1

    t = 0.0
    k = np.empty((7, 2))
    k[0] = f(y)
    h = _initial_step(f, y, k[0], rtol, atol, t_final)

    for _ in range(max_steps):
        if next_idx >= grid.size:
            break
        min_step = 16 * np.finfo(float).eps * max(abs(t), 1.0)
        if h < min_step:
            raise IntegrationError("step size underflow", t)
        if t + h > t_final:
            h = t_final - t

        for s in range(1, 6):
            dy = np.dot(_A[s], k[:s]) * h
            k[s] = f(y + dy)
        y_new = y + h * np.dot(_B[:6], k[:6])
        k[6] = f(y_new)
        if not np.all(np.isfinite(y_new)):
            h *= _MIN_FACTOR
            continue

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean((h * np.dot(_E, k) / scale) ** 2))

        if err <= 1.0:
            t_new = t_final if h == t_final - t else t + h
            # sample every grid point covered by this step
            q = k.T @ _P
            while next_idx < grid.size and grid[next_idx] <= t_new + 1e-12 * t_final:
                theta = (grid[next_idx] - t) / h
                powers = np.array([theta, theta**2, theta**3, theta**4])
                out[next_idx] = y + h * (q @ powers)
                next_idx += 1
            t = t_new
            y = y_new
            k[0] = k[6]
            factor = _MAX_FACTOR if err == 0 else min(_MAX_FACTOR, _SAFETY * err ** (-1 / 5))
            h *= factor
        else:
            h *= max(_MIN_FACTOR, _SAFETY * err ** (-1 / 5))
    else:
        raise IntegrationError("maximum number of steps exceeded", t)

    return Trajectory(p1=float(p1), times=grid, delta=out[:, 0], omega=out[:, 1])
