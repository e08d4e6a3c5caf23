"""Acceptance suite: one test per criterion, each at its stated tolerance.

The summary section printed at the end of the run lists PASS/FAIL per criterion.
Criteria 1, 2, 3 and 7 train networks and take about 20 minutes together
on one CPU core. Run alone with ``pytest tests/test_acceptance.py``.
"""
import json
import sys

import numpy as np
import pytest

from swingpinn.cli import main
from swingpinn.dataset import (
    DatasetSpec,
    generate_grid,
    identification_pairs,
    sample_collocation_points,
    sample_training_points,
)
from swingpinn.dynamics import SwingParams, energy, equilibrium, integrate, swing_rhs
from swingpinn.evaluation import benchmark
from swingpinn.mlp import MlpParams, count_params, forward_with_time_derivs, param_gradients
from swingpinn.pinn import PinnModel, loss, loss_gradient, residual
from swingpinn.trainer import TrainConfig, restore, train_identify

from helpers import DOMAIN, random_model, random_points
from oracles import central_diff, close, naive_loss, rk4_swing, second_diff

pytestmark = pytest.mark.acceptance

FORWARD_RUN = {
    "seed": 0,
    "n_u": 40,
    "n_f": 8000,
    "layers": [2, 10, 10, 10, 10, 10, 1],
    "train": {
        "max_iterations": 5000,
        "dtype": "float32",
        "refine": True,
        "refine_iterations": 5000,
        "log_every": 100,
    },
}
# Adam fits the network under the initial guess; L-BFGS-B then moves network and physics jointly
IDENTIFY_TRAIN = TrainConfig(
    mode="identify",
    max_iterations=2000,
    physics_warmup=2000,
    dtype="float32",
    refine=True,
    refine_iterations=3000,
    log_every=100,
)
IDENTIFY_N_F = 4000


def detail(request, text):
    request.node.user_properties.append(("detail", text))


@pytest.fixture(scope="module")
def forward_runs(tmp_path_factory):
    """Two independent ``generate`` + ``train`` CLI runs with identical configs."""
    root = tmp_path_factory.mktemp("forward")
    cfg = root / "run.json"
    cfg.write_text(json.dumps(FORWARD_RUN))
    runs = []
    for name in ("a", "b"):
        out = root / name
        assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
        assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
        runs.append(out)
    return runs


@pytest.mark.criterion(1, "forward-solution accuracy")
def test_forward_solution_accuracy(forward_runs, request):
    ev = json.loads((forward_runs[0] / "eval_report.json").read_text())
    tr = json.loads((forward_runs[0] / "train_report.json").read_text())
    n_rows = len((forward_runs[0] / "grid.csv").read_text().splitlines()) - 1
    detail(request, f"relative L2 delta = {ev['l2_delta']:.3e} (<= 5e-2); training {tr['seconds']:.0f} s (<= 1800 s)")
    assert n_rows == 20_100
    assert ev["l2_delta"] <= 5e-2
    assert tr["seconds"] <= 1800


@pytest.mark.criterion(2, "frequency recovery")
def test_frequency_recovery(forward_runs, request):
    ev = json.loads((forward_runs[0] / "eval_report.json").read_text())
    detail(request, f"relative L2 omega = {ev['l2_omega']:.3e} (<= 1.5e-1)")
    assert ev["l2_omega"] <= 0.15


@pytest.mark.criterion(3, "parameter identification")
def test_parameter_identification(request):
    spec = DatasetSpec(n_trajectories=40)
    lines = []
    ok = True
    for m_true, d_true in identification_pairs(3, seed=0):
        grid = generate_grid(spec, SwingParams(m=m_true, d=d_true))
        training = sample_training_points(grid, 100, seed=0)
        collocation = sample_collocation_points(IDENTIFY_N_F, spec.domain, seed=1)
        _, report = train_identify(
            training,
            collocation,
            [2, 30, 30, 30, 30, 30, 1],
            SwingParams(),
            IDENTIFY_TRAIN,
            domain=spec.domain,
            truth=(m_true, d_true),
        )
        err = report.relative_errors
        lines.append(
            f"(m={m_true:.3f}, d={d_true:.3f}): err m {err['m']:.2%}, d {err['d']:.2%}, {report.seconds:.0f} s"
        )
        ok &= err["m"] <= 0.05 and err["d"] <= 0.05 and report.seconds <= 600
    detail(request, "; ".join(lines))
    assert ok, lines


def _fd_net_grad(prm, t, p, field, output, h=1e-5):
    flat = prm.flatten()
    out = np.empty_like(flat)
    for i in range(flat.size):
        e = np.zeros_like(flat)
        e[i] = h
        hi = getattr(forward_with_time_derivs(MlpParams.from_flat(prm.layer_sizes, flat + e), t, p), field)
        lo = getattr(forward_with_time_derivs(MlpParams.from_flat(prm.layer_sizes, flat - e), t, p), field)
        out[i] = (hi[0, output] - lo[0, output]) / (2 * h)
    return out


@pytest.mark.criterion(4, "gradient correctness")
def test_gradient_correctness(request):
    rng = np.random.default_rng(2024)
    failures = []
    for draw in range(100):
        width = int(rng.integers(2, 8))
        depth = int(rng.integers(1, 4))
        sizes = [2] + [width] * depth + [1]
        prm = MlpParams.from_flat(sizes, rng.normal(scale=0.8, size=count_params(sizes)))
        t, p = rng.uniform(0, 1, 2)
        out = forward_with_time_derivs(prm, t, p)
        u = lambda tt: forward_with_time_derivs(prm, tt, p).u[0, 0]
        checks = {
            "u_t": (out.u_t[0, 0], central_diff(u, t, 1e-4)),
            "u_tt": (out.u_tt[0, 0], second_diff(u, t, 1e-4)),
        }
        for grad, field in zip(param_gradients(prm, t, p), ("u", "u_t", "u_tt")):
            checks["d" + field] = (grad, _fd_net_grad(prm, t, p, field, 0))

        # residual sensitivities to the physics parameters, in physical time
        params = SwingParams(m=float(rng.uniform(0.1, 0.4)), d=float(rng.uniform(0.05, 0.15)))
        t_phys, p_phys = 20.0 * t, 0.08 + 0.1 * p

        def f_of(m, d):
            return residual(PinnModel(prm, SwingParams(m=m, d=d), DOMAIN), t_phys, p_phys)[0]

        h = 1e-6
        checks["df/dm"] = (out.u_tt[0, 0] / 400.0, (f_of(params.m + h, params.d) - f_of(params.m - h, params.d)) / (2 * h))
        checks["df/dd"] = (out.u_t[0, 0] / 20.0, (f_of(params.m, params.d + h) - f_of(params.m, params.d - h)) / (2 * h))

        # and the loss gradient that carries them
        training, colloc = random_points(3, 5, seed=draw)
        ident = PinnModel(prm, params, DOMAIN, (True, True))
        _, phys = loss_gradient(ident, training, colloc)
        for name in ("m", "d"):
            delta = {"m": (h, 0.0), "d": (0.0, h)}[name]
            hi = PinnModel(prm, SwingParams(m=params.m + delta[0], d=params.d + delta[1]), DOMAIN)
            lo = PinnModel(prm, SwingParams(m=params.m - delta[0], d=params.d - delta[1]), DOMAIN)
            fd = (loss(hi, training, colloc).total - loss(lo, training, colloc).total) / (2 * h)
            checks["dL/d" + name] = (phys[name], fd)

        for name, (got, want) in checks.items():
            if not close(got, want, 1e-4, 1e-7):
                failures.append((draw, name))
    detail(request, f"{100 - len({d for d, _ in failures})}/100 draws match (rel 1e-4, abs 1e-7)")
    assert not failures, failures[:10]


@pytest.mark.criterion(5, "integrator oracle")
def test_integrator_oracle(request):
    undamped = SwingParams(m=0.4, d=0.0)
    tr = integrate(undamped, 0.1, (0.1, 0.1), 20.0, 0.1)
    e = np.array([energy(s, undamped, 0.1) for s in tr.states])
    drift = float(np.max(np.abs(e - e[0])) / abs(e[0]))

    default = SwingParams()
    tr = integrate(default, 0.1, (0.1, 0.1), 20.0, 0.1)
    ref = rk4_swing(0.4, 0.15, 0.2, 0.1, (0.1, 0.1), 20.0, h=1e-4)
    gap = float(np.max(np.abs(tr.delta - ref[:, 0])))

    stationary = 0.0
    for p1 in (0.0, 0.08, 0.1, 0.18):
        eq = equilibrium(default, p1)
        rhs = swing_rhs(eq, default, p1)
        held = integrate(default, p1, eq, 20.0, 0.1)
        stationary = max(
            stationary,
            abs(rhs[0]),
            abs(rhs[1]),
            float(np.max(np.abs(held.delta - eq.delta))),
            float(np.max(np.abs(held.omega))),
        )
    eps = np.finfo(float).eps
    detail(
        request,
        f"(a) energy drift {drift:.2e} (<= 1e-6); (b) max |delta - RK4| {gap:.2e} over {len(tr)} points (<= 1e-6); "
        f"(c) equilibrium deviation {stationary:.1e} (<= {4 * eps:.1e})",
    )
    assert drift <= 1e-6
    assert len(tr) == 201 and gap <= 1e-6
    assert stationary <= 4 * eps


@pytest.mark.criterion(6, "timing structure")
def test_timing_structure(forward_runs, request):
    model = restore(forward_runs[0] / "checkpoint.json")
    rep = benchmark(
        model,
        SwingParams(),
        np.linspace(0.08, 0.18, 100),
        single_instant=20.0,
        early_instant=0.1,
        repeats=15,
    )
    flatness = rep.surrogate_single_instant / rep.surrogate_single_instant_early
    ratio = rep.integrator_single_instant / rep.surrogate_single_instant
    detail(
        request,
        f"(a) query cost t=20 / t=0.1 = {flatness:.2f} (within 2x); "
        f"(b) integrate-to-20 / query = {ratio:.0f} (>= 10); "
        f"measured speedups {rep.speedup_full_grid:.0f}x full grid, {rep.speedup_single_instant:.0f}x single instant "
        f"(reference {rep.reference_speedup_full_grid:g}x, {rep.reference_speedup_single_instant:g}x)",
    )
    assert 0.5 <= flatness <= 2.0
    assert ratio >= 10


@pytest.mark.criterion(7, "determinism")
def test_determinism(forward_runs, request):
    a, b = forward_runs
    same = {f: (a / f).read_bytes() == (b / f).read_bytes() for f in ("grid.csv", "checkpoint.json", "history.csv")}
    detail(request, ", ".join(f"{f} {'identical' if v else 'DIFFERENT'}" for f, v in same.items()))
    assert all(same.values())


def _naive(model, training, colloc):
    prm = model.params
    return naive_loss(
        [w.tolist() for w in model.mlp.weights],
        [b.tolist() for b in model.mlp.biases],
        tuple(model.norm),
        (prm.m, prm.d, prm.pmax),
        list(zip(training.t, training.p1, training.delta)),
        list(zip(colloc.t, colloc.p1)),
        two_output=model.mode == "delta_omega",
    )


@pytest.mark.criterion(8, "loss definition")
def test_loss_definition(request):
    cases = [((2, 10, 10, 10, 10, 10, 1), 40, 8000)]
    cases += [((2, 8, 8, 1), 25, 400)] * 4 + [((2, 6, 6, 2), 25, 400)] * 3
    worst = 0.0
    for i, (sizes, n_u, n_f) in enumerate(cases):
        model = random_model(sizes, seed=100 + i, params=SwingParams(m=0.1 + 0.04 * i, d=0.05 + 0.01 * i))
        training, colloc = random_points(n_u, n_f, seed=200 + i)
        got = loss(model, training, colloc)
        want = _naive(model, training, colloc)
        worst = max(worst, *(abs(a - b) for a, b in zip(got, want)))
    detail(request, f"max |loss - naive| = {worst:.1e} over {len(cases)} models (<= 1e-12)")
    assert worst <= 1e-12


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
