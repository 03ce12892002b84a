"""
Drifting thermal noise
======================

Here the thermal mean performs a biased random walk between shots. We log
the walk, cut the shot sequence into windows, and give each window the
average of the thermal kernels its shots saw.
"""

# %%
import numpy as np

import thermal_inference as ti

truth = ti.fock_state(2, 13)
eta = 0.8
walk = ti.RandomWalkSpec(start=0.1, step=5e-4, p_up=0.51)
log = ti.simulate_random_walk(truth, eta, walk, 900_000, seed=2)

# %%
# With a drift of 2e-5 per shot the walk covers a wide range over 9x10^5 shots.
lo, hi = log.nbar_range
print(f"realized nbar range [{lo:.3f}, {hi:.3f}]")
print(f"final {log.nbar_actual[-1]:.3f}, expected {walk.expected_position(899_999):.3f} "
      f"+/- {walk.position_sd(899_999):.3f}")

# %%
# Thirty windows, one averaged kernel each.
binned = ti.bin_shot_log(log, 30)
records = [rec for rec, _ in binned]
povms = [ti.empirical_averaged_kernel(eta, log.nbar_actual[sl], 12)
         for sl in ti.bin_slices(len(log), 30)]
print("window means:", np.round([m for _, m in binned[::6]], 3))

report = ti.reconstruct(povms, records, ti.ReconstructionConfig(max_iterations=100_000, record_trace_every=10_000), truth)
print(f"fidelity {report.final_fidelity:.4f}")
print("estimate", np.round(report.estimate.probs[:5], 3))
