"""Compare the cost of integrating trajectories with the cost of querying a
surrogate. Untrained weights suffice: evaluation cost does not depend on them.

Run: python3 demos/04_benchmark.py
"""
import numpy as np

from swingpinn import DatasetSpec, PinnModel, SwingParams, benchmark, init_params

spec = DatasetSpec()
model = PinnModel(init_params([2, 10, 10, 10, 10, 10, 1], seed=0), SwingParams(), spec.domain)
report = benchmark(model, SwingParams(), np.linspace(0.08, 0.18, 100), single_instant=20.0)

print(f"100 trajectories on the 0.1 s grid: integrator {report.integrator_full_grid * 1e3:.1f} ms, "
      f"surrogate {report.surrogate_full_grid * 1e3:.2f} ms ({report.speedup_full_grid:.0f}x)")
print(f"one state at t=20 s: integrator {report.integrator_single_instant * 1e3:.2f} ms, "
      f"surrogate {report.surrogate_single_instant * 1e6:.1f} us ({report.speedup_single_instant:.0f}x)")
print(f"one state at t=0.1 s: integrator {report.integrator_single_instant_early * 1e3:.3f} ms, "
      f"surrogate {report.surrogate_single_instant_early * 1e6:.1f} us")
print("the surrogate cost is flat in t; the integrator cost grows with the horizon")
