"""Train the forward surrogate delta(t, p1) from 40 labeled angles and 8000
collocation points, then score it on the full trajectory grid.

Takes a few minutes on one core. Run: python3 demos/02_forward_pinn.py [adam_iterations]
"""
import sys

from swingpinn import (
    DatasetSpec,
    SwingParams,
    TrainConfig,
    evaluate_model,
    generate_grid,
    predict_delta,
    sample_collocation_points,
    sample_training_points,
    train_forward,
)

iters = int(sys.argv[1]) if len(sys.argv) > 1 else 5000
spec = DatasetSpec()
params = SwingParams()
grid = generate_grid(spec, params)

training = sample_training_points(grid, 40, seed=0)
collocation = sample_collocation_points(8000, spec.domain, seed=1)
print(f"{len(training)} labeled points, {len(collocation)} collocation points")

config = TrainConfig(max_iterations=iters, dtype="float32", refine=True, refine_iterations=5000, log_every=500)
model, report = train_forward(training, collocation, [2, 10, 10, 10, 10, 10, 1], params, config, domain=spec.domain)
for row in report.history:
    print(f"  iter {row.iteration:6d}  mse_u {row.mse_u:.3e}  mse_f {row.mse_f:.3e}")
print(f"trained in {report.seconds:.0f} s ({report.stop_reason})")

ev = evaluate_model(model, grid)
print(f"relative L2 on {len(grid)} trajectories: delta {ev.l2_delta:.3e}, omega {ev.l2_omega:.3e}")
print(f"best p1={ev.best_p1:.3f}, worst p1={ev.worst_p1:.3f}")

tr = next(g for g in grid if g.p1 == ev.worst_p1)
pred = predict_delta(model, tr.times, tr.p1)
for k in range(0, 201, 40):
    print(f"  t={tr.times[k]:5.1f}  true {tr.delta[k]: .5f}  surrogate {pred[k]: .5f}")
