"""
Calibrating the thermal means from vacuum runs
==============================================

Block the signal and the no-click rate is ``1 / (1 + eta nbar)``. Inverting
that for each setting gives the thermal means, and from them the kernels
used for reconstruction.
"""

# %%
import numpy as np

import thermal_inference as ti
from thermal_inference.experiments import calibrate

eta = 0.8
true_nbars = np.linspace(0.1, 0.95, 30)
vacuum = ti.PhotonDistribution([1.0])
cal_records = ti.simulate_fixed(vacuum, eta, true_nbars, 100_000, seed=3)

# %%
cal = calibrate(cal_records, eta, 12)
est = np.array([nb for nb, _ in cal])
print(f"worst calibration error {np.abs(est - true_nbars).max():.4f}")

# %%
# Reconstruct |2> with the calibrated kernels instead of the true ones.
truth = ti.fock_state(2, 13)
records = ti.simulate_fixed(truth, eta, true_nbars, 10_000, seed=4)
report = ti.reconstruct([k for _, k in cal], records, ti.ReconstructionConfig(max_iterations=50_000, record_trace_every=10_000), truth)
print(f"fidelity with calibrated kernels {report.final_fidelity:.4f}")
