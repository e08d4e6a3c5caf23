"""Trajectory grids, labeled training points and collocation points.

The grid holds ``n_trajectories`` solutions at evenly spaced mechanical
powers. Labeled points are drawn from the grid without replacement (never
re-simulated), and collocation points are Latin-hypercube samples of the
``[0, t_end] x [p_min, p_max]`` box.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .dynamics import IntegrationError, SwingParams, Trajectory, integrate

__all__ = [
    "Domain",
    "DatasetSpec",
    "TrainingPoint",
    "TrainingPoints",
    "CollocationPoint",
    "CollocationPoints",
    "MalformedFileError",
    "generate_grid",
    "stack_grid",
    "sample_training_points",
    "latin_hypercube",
    "sample_collocation_points",
    "identification_pairs",
    "save_csv",
    "load_csv",
    "CSV_HEADER",
]

CSV_HEADER = ("p1", "t", "delta", "omega")


class MalformedFileError(ValueError):
    pass


class Domain(NamedTuple):
    """Training box ``[0, t_end] x [p_min, p_max]``; doubles as the input normalization."""

    t_end: float
    p_min: float
    p_max: float

    def contains(self, t, p1, tol: float = 1e-12) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        p1 = np.asarray(p1, dtype=float)
        return (
            (t >= -tol) & (t <= self.t_end + tol) & (p1 >= self.p_min - tol) & (p1 <= self.p_max + tol)
        )


@dataclass(frozen=True)
class DatasetSpec:
    p_min: float = 0.08
    p_max: float = 0.18
    t_end: float = 20.0
    output_step: float = 0.1
    n_trajectories: int = 100
    init: tuple[float, float] = (0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "init", tuple(float(v) for v in self.init))
        if not self.p_min < self.p_max:
            raise ValueError(f"need p_min < p_max, got [{self.p_min}, {self.p_max}]")
        if not self.t_end > 0 or not self.output_step > 0:
            raise ValueError("t_end and output_step must be positive")
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be at least 1")
        if len(self.init) != 2 or not all(math.isfinite(v) for v in self.init):
            raise ValueError("init must be a finite (delta, omega) pair")

    @property
    def domain(self) -> Domain:
        return Domain(self.t_end, self.p_min, self.p_max)

    @property
    def powers(self) -> np.ndarray:
        if self.n_trajectories == 1:
            return np.array([self.p_min])
        return np.linspace(self.p_min, self.p_max, self.n_trajectories)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["init"] = list(self.init)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown dataset-spec fields: {sorted(unknown)}")
        return cls(**data)

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load_json(cls, path) -> "DatasetSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


class TrainingPoint(NamedTuple):
    t: float
    p1: float
    delta: float


class CollocationPoint(NamedTuple):
    t: float
    p1: float


@dataclass(frozen=True, eq=False)
class TrainingPoints:
    """Labeled points stored column-wise."""

    t: np.ndarray
    p1: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        for name in ("t", "p1", "delta"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        if not (self.t.shape == self.p1.shape == self.delta.shape):
            raise ValueError("t, p1 and delta must have the same length")

    def __len__(self) -> int:
        return self.t.size

    def __iter__(self) -> Iterator[TrainingPoint]:
        for row in zip(self.t, self.p1, self.delta):
            yield TrainingPoint(*map(float, row))

    def __getitem__(self, i) -> TrainingPoint:
        return TrainingPoint(float(self.t[i]), float(self.p1[i]), float(self.delta[i]))

    @classmethod
    def from_points(cls, points: Sequence[TrainingPoint]) -> "TrainingPoints":
        arr = np.array([tuple(p) for p in points], dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])


@dataclass(frozen=True, eq=False)
class CollocationPoints:
    t: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        for name in ("t", "p1"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        if self.t.shape != self.p1.shape:
            raise ValueError("t and p1 must have the same length")

    def __len__(self) -> int:
        return self.t.size

    def __iter__(self) -> Iterator[CollocationPoint]:
        for row in zip(self.t, self.p1):
            yield CollocationPoint(*map(float, row))

    def __getitem__(self, i) -> CollocationPoint:
        return CollocationPoint(float(self.t[i]), float(self.p1[i]))

    @classmethod
    def from_points(cls, points: Sequence[CollocationPoint]) -> "CollocationPoints":
        arr = np.array([tuple(p) for p in points], dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])


def generate_grid(spec: DatasetSpec, params: SwingParams, **integrator_opts) -> list[Trajectory]:
    """Integrate one trajectory per evenly spaced power in ``[p_min, p_max]``."""
    grid = []
    for p1 in spec.powers:
        try:
            grid.append(
                integrate(params, float(p1), spec.init, spec.t_end, spec.output_step, **integrator_opts)
            )
        except IntegrationError as exc:
            err = IntegrationError(f"integration failed for p1={p1:.6g}", exc.last_time)
            err.p1 = float(p1)
            raise err from exc
    return grid


def stack_grid(grid: Sequence[Trajectory]) -> dict[str, np.ndarray]:
    """Concatenate trajectories into flat ``p1, t, delta, omega`` columns."""
    if len(grid) == 0:
        raise ValueError("empty trajectory set")
    return {
        "p1": np.concatenate([np.full(len(tr), tr.p1) for tr in grid]),
        "t": np.concatenate([tr.times for tr in grid]),
        "delta": np.concatenate([tr.delta for tr in grid]),
        "omega": np.concatenate([tr.omega for tr in grid]),
    }


def sample_training_points(grid: Sequence[Trajectory], n_u: int, seed: int) -> TrainingPoints:
    """Draw ``n_u`` distinct grid samples uniformly without replacement."""
    cols = stack_grid(grid)
    total = cols["t"].size
    if not 1 <= n_u <= total:
        raise ValueError(f"n_u={n_u} must lie in [1, {total}] (available grid samples)")
    idx = np.random.default_rng(seed).choice(total, size=n_u, replace=False)
    return TrainingPoints(cols["t"][idx], cols["p1"][idx], cols["delta"][idx])


def latin_hypercube(n: int, bounds: Sequence[tuple[float, float]], rng: np.random.Generator) -> np.ndarray:
    """``n`` Latin-hypercube samples, one per equal-width stratum in each dimension."""
    if n < 1:
        raise ValueError("n must be at least 1")
    dims = len(bounds)
    u = np.empty((n, dims))
    for j in range(dims):
        strata = rng.permutation(n)
        u[:, j] = (strata + rng.random(n)) / n
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    return lo + u * (hi - lo)


def sample_collocation_points(n_f: int, domain: Domain, seed: int) -> CollocationPoints:
    pts = latin_hypercube(
        n_f, [(0.0, domain.t_end), (domain.p_min, domain.p_max)], np.random.default_rng(seed)
    )
    return CollocationPoints(pts[:, 0], pts[:, 1])


def identification_pairs(
    n_pairs: int,
    seed: int,
    m_range: tuple[float, float] = (0.1, 0.4),
    d_range: tuple[float, float] = (0.05, 0.15),
) -> list[tuple[float, float]]:
    """Seeded Latin-hypercube draw of ``(m, d)`` ground-truth pairs."""
    pts = latin_hypercube(n_pairs, [m_range, d_range], np.random.default_rng(seed))
    return [(float(m), float(d)) for m, d in pts]


def save_csv(trajectories: Sequence[Trajectory], path) -> None:
    """Write trajectories as ``p1,t,delta,omega`` rows with round-trip float precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for tr in trajectories:
            p1 = repr(float(tr.p1))
            for t, a, w in zip(tr.times.tolist(), tr.delta.tolist(), tr.omega.tolist()):
                writer.writerow((p1, repr(t), repr(a), repr(w)))


def load_csv(path) -> list[Trajectory]:
    """Inverse of :func:`save_csv`; rows with equal ``p1`` form one trajectory, in file order."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MalformedFileError(f"{path}: empty file")
    if tuple(rows[0]) != CSV_HEADER:
        raise MalformedFileError(f"{path}: expected header {','.join(CSV_HEADER)}, got {','.join(rows[0])}")
    groups: dict[float, list[tuple[float, float, float]]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_HEADER):
            raise MalformedFileError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
        try:
            p1, t, delta, omega = (float(v) for v in row)
        except ValueError as exc:
            raise MalformedFileError(f"{path}:{lineno}: {exc}") from None
        groups.setdefault(p1, []).append((t, delta, omega))
    if not groups:
        raise MalformedFileError(f"{path}: no data rows")
    out = []
    for p1, samples in groups.items():
        arr = np.array(samples)
        try:
            out.append(Trajectory(p1, arr[:, 0], arr[:, 1], arr[:, 2]))
        except ValueError as exc:
            raise MalformedFileError(f"{path}: trajectory p1={p1}: {exc}") from None
    return out
