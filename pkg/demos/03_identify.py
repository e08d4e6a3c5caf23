"""Recover inertia and damping of a machine from 100 noiseless angle samples.

Takes several minutes on one core. Run: python3 demos/03_identify.py [m d]
"""
import sys

from swingpinn import (
    DatasetSpec,
    SwingParams,
    TrainConfig,
    generate_grid,
    sample_collocation_points,
    sample_training_points,
    train_identify,
)

m_true, d_true = (float(v) for v in sys.argv[1:3]) if len(sys.argv) > 2 else (0.30, 0.07)
spec = DatasetSpec(n_trajectories=40)
grid = generate_grid(spec, SwingParams(m=m_true, d=d_true))
training = sample_training_points(grid, 100, seed=0)
collocation = sample_collocation_points(4000, spec.domain, seed=1)

# m and d stay at the initial guess while Adam shapes the network; L-BFGS-B then moves everything
config = TrainConfig(
    mode="identify",
    max_iterations=2000,
    physics_warmup=2000,
    dtype="float32",
    refine=True,
    refine_iterations=3000,
    log_every=250,
)
model, report = train_identify(
    training,
    collocation,
    [2, 30, 30, 30, 30, 30, 1],
    SwingParams(),
    config,
    domain=spec.domain,
    init_guess=(0.25, 0.10),
    truth=(m_true, d_true),
)
for row in report.history:
    print(f"  iter {row.iteration:6d}  loss {row.total:.3e}  m {row.m:.4f}  d {row.d:.4f}")
print(f"true      m={m_true:.4f}  d={d_true:.4f}")
print(f"estimated m={model.params.m:.4f}  d={model.params.d:.4f}")
print(f"relative errors: m {report.relative_errors['m']:.2%}, d {report.relative_errors['d']:.2%}")
print(f"{report.seconds:.0f} s")
