"""Simulate the single-machine swing dynamics and inspect one trajectory.

Run: python3 demos/01_simulate.py
"""
import numpy as np

from swingpinn import DatasetSpec, SwingParams, energy, equilibrium, generate_grid, integrate

params = SwingParams()
print(f"machine: m={params.m}, d={params.d}, b12*v1*v2={params.pmax}")

p1 = 0.1
eq = equilibrium(params, p1)
print(f"stable equilibrium at p1={p1}: delta={eq.delta:.6f} rad")

tr = integrate(params, p1, (0.1, 0.1), t_end=20.0, output_step=0.1)
print(f"{len(tr)} samples; delta(20 s) = {tr.delta[-1]:.6f}, omega(20 s) = {tr.omega[-1]:.2e}")

e = np.array([energy(s, params, p1) for s in tr.states])
print(f"energy falls from {e[0]:.5f} to {e[-1]:.5f} under damping")

for t in (0.0, 2.5, 5.0, 10.0, 20.0):
    k = int(round(t / 0.1))
    print(f"  t={t:5.1f}  delta={tr.delta[k]: .5f}  omega={tr.omega[k]: .5f}")

grid = generate_grid(DatasetSpec(), params)
print(f"full grid: {len(grid)} trajectories, {sum(len(g) for g in grid)} samples")
peak = max(grid, key=lambda g: g.delta.max())
print(f"largest swing at p1={peak.p1:.3f}: max delta {peak.delta.max():.4f} rad")
