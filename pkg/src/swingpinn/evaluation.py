"""Error metrics, frequency recovery and the integrator-versus-surrogate timing study."""
from __future__ import annotations

import csv
import json
import statistics
import timeit
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import stack_grid
from .dynamics import SwingParams, Trajectory, integrate
from .pinn import PinnModel, in_domain, predict_delta

__all__ = [
    "EvalReport",
    "TimingReport",
    "relative_l2",
    "recover_omega",
    "evaluate_model",
    "benchmark",
    "write_per_trajectory_csv",
    "write_plot_csv",
    "REFERENCE_SPEEDUP_FULL_GRID",
    "REFERENCE_SPEEDUP_SINGLE_INSTANT",
]

# published reference figures; hardware-dependent, for side-by-side display only
REFERENCE_SPEEDUP_FULL_GRID = 28.0
REFERENCE_SPEEDUP_SINGLE_INSTANT = 87.0


def relative_l2(pred, exact) -> float:
    """``||pred - exact|| / ||exact||``."""
    pred = np.asarray(pred, dtype=float).ravel()
    exact = np.asarray(exact, dtype=float).ravel()
    if pred.shape != exact.shape or exact.size == 0:
        raise ValueError("pred and exact must be non-empty and of equal length")
    norm = np.linalg.norm(exact)
    if norm == 0:
        raise ValueError("relative error undefined for a zero-norm reference")
    return float(np.linalg.norm(pred - exact) / norm)


def recover_omega(delta_series, h: float) -> np.ndarray:
    """Forward differences of a uniformly sampled angle; backward difference at the end."""
    delta = np.asarray(delta_series, dtype=float).ravel()
    if delta.size < 2:
        raise ValueError("need at least two samples to difference")
    if not h > 0:
        raise ValueError("h must be positive")
    diffs = np.diff(delta) / h
    return np.append(diffs, diffs[-1])


@dataclass
class EvalReport:
    l2_delta: float
    l2_omega: float
    per_trajectory: list[dict]
    best_p1: float
    worst_p1: float
    extrapolated: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def evaluate_model(model, grid: Sequence[Trajectory]) -> EvalReport:
    """Pooled and per-trajectory relative L2 of delta and of differenced omega.

    ``model`` is a :class:`PinnModel` or any callable ``(t, p1) -> delta``.
    Omega is always recovered by differencing the predicted angle and compared
    with the integrator's omega. Best/worst are ranked by the delta error;
    ties go to the lowest ``p1``.
    """
    if len(grid) == 0:
        raise ValueError("empty test grid")
    predict = (lambda t, p: predict_delta(model, t, p)) if isinstance(model, PinnModel) else model
    rows, pred_d, pred_w = [], [], []
    extrapolated = False
    for tr in grid:
        d_hat = np.asarray(predict(tr.times, np.full(len(tr), tr.p1)), dtype=float)
        h = float(tr.times[1] - tr.times[0]) if len(tr) > 1 else 1.0
        w_hat = recover_omega(d_hat, h) if len(tr) > 1 else np.zeros(1)
        pred_d.append(d_hat)
        pred_w.append(w_hat)
        rows.append(
            {
                "p1": tr.p1,
                "l2_delta": relative_l2(d_hat, tr.delta),
                "l2_omega": _safe_l2(w_hat, tr.omega),
            }
        )
        if isinstance(model, PinnModel):
            extrapolated |= not bool(np.all(in_domain(model, tr.times, tr.p1)))
    cols = stack_grid(grid)
    order = sorted(rows, key=lambda r: (r["l2_delta"], r["p1"]))
    return EvalReport(
        l2_delta=relative_l2(np.concatenate(pred_d), cols["delta"]),
        l2_omega=_safe_l2(np.concatenate(pred_w), cols["omega"]),
        per_trajectory=rows,
        best_p1=order[0]["p1"],
        worst_p1=max(rows, key=lambda r: (r["l2_delta"], -r["p1"]))["p1"],
        extrapolated=extrapolated,
    )


def _safe_l2(pred, exact) -> float:
    if np.linalg.norm(exact) == 0:
        return float("nan")
    return relative_l2(pred, exact)


def write_per_trajectory_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["p1", "l2_delta", "l2_omega"])
        for row in report.per_trajectory:
            writer.writerow([repr(row["p1"]), repr(row["l2_delta"]), repr(row["l2_omega"])])


def write_plot_csv(model: PinnModel, trajectory: Trajectory, path) -> None:
    """``t,delta_pred,delta_true,omega_pred,omega_true`` for one trajectory."""
    d_hat = predict_delta(model, trajectory.times, trajectory.p1)
    h = float(trajectory.times[1] - trajectory.times[0])
    w_hat = recover_omega(d_hat, h)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "delta_pred", "delta_true", "omega_pred", "omega_true"])
        for row in zip(trajectory.times, d_hat, trajectory.delta, w_hat, trajectory.omega):
            writer.writerow([repr(float(v)) for v in row])


@dataclass
class TimingReport:
    integrator_full_grid: float
    surrogate_full_grid: float
    surrogate_single_instant: float
    integrator_single_instant: float
    surrogate_single_instant_early: float
    integrator_single_instant_early: float
    speedup_full_grid: float
    speedup_single_instant: float
    reference_speedup_full_grid: float = REFERENCE_SPEEDUP_FULL_GRID
    reference_speedup_single_instant: float = REFERENCE_SPEEDUP_SINGLE_INSTANT
    single_instant: float = 0.0
    early_instant: float = 0.0
    n_trajectories: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def _median_time(fn, repeats: int, number: int, warmup: int = 3) -> float:
    for _ in range(warmup):
        fn()
    runs = timeit.Timer(fn).repeat(repeat=repeats, number=number)
    return statistics.median(runs) / number


def benchmark(
    model: PinnModel,
    params: SwingParams,
    p1_samples,
    t_end: float = 20.0,
    output_step: float = 0.1,
    single_instant: float = 10.0,
    init=(0.1, 0.1),
    *,
    early_instant: float = 0.1,
    repeats: int = 10,
    query_number: int = 200,
) -> TimingReport:
    """Median wall-clock timings, after three warm-up calls each.

    Full grid: integrating all ``p1_samples`` versus one batched surrogate
    evaluation of the same grid, both reported per trajectory set.
    Single instant: one surrogate query at ``single_instant`` versus
    integrating from 0 up to it. The same pair is measured at
    ``early_instant`` to expose how each cost depends on the horizon.
    """
    if repeats < 10:
        raise ValueError("use at least 10 repetitions per measurement")
    p1_samples = np.asarray(p1_samples, dtype=float)
    times = np.arange(int(round(t_end / output_step)) + 1) * output_step
    grid_t = np.tile(times, p1_samples.size)
    grid_p = np.repeat(p1_samples, times.size)
    p_mid = float(p1_samples[p1_samples.size // 2])

    def run_integrator():
        for p1 in p1_samples:
            integrate(params, float(p1), init, t_end, output_step)

    integ_full = _median_time(run_integrator, repeats, 1)
    surr_full = _median_time(lambda: predict_delta(model, grid_t, grid_p), repeats, 1)

    def single(at):
        q_t = np.array([at])
        q_p = np.array([p_mid])
        surr = _median_time(lambda: predict_delta(model, q_t, q_p), repeats, query_number)
        integ = _median_time(lambda: integrate(params, p_mid, init, at, at), repeats, 1)
        return surr, integ

    surr_single, integ_single = single(single_instant)
    surr_early, integ_early = single(early_instant)
    return TimingReport(
        integrator_full_grid=integ_full,
        surrogate_full_grid=surr_full,
        surrogate_single_instant=surr_single,
        integrator_single_instant=integ_single,
        surrogate_single_instant_early=surr_early,
        integrator_single_instant_early=integ_early,
        speedup_full_grid=integ_full / surr_full,
        speedup_single_instant=integ_single / surr_single,
        single_instant=float(single_instant),
        early_instant=float(early_instant),
        n_trajectories=int(p1_samples.size),
    )
