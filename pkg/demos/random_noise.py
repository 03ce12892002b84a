"""
Random thermal noise and averaged kernels
=========================================

When every shot sees a different ``nbar`` drawn from a normal law around
the set value, the right kernel is the average of the thermal kernel over
that law. With enough shots the reconstruction is as good as with fixed
noise, and the error bound is only slightly larger.
"""

# %%
import numpy as np

import thermal_inference as ti

truth = ti.fock_state(2, 13)
eta, variance = 0.8, 0.1
means = np.linspace(0.1, 0.95, 30)

# %%
# The averaged kernel differs from the fixed one mostly at small means,
# where truncation at zero skews the law.
noise = ti.NoiseDistribution.gaussian(0.1, variance)
fixed = ti.thermal_kernel(ti.DetectorSetting(eta, 0.1), 12)
averaged = ti.averaged_kernel(eta, noise, 12)
print("fixed   ", np.round(fixed.kernel[:4], 4))
print("averaged", np.round(averaged.kernel[:4], 4))

# %%
# Simulate 5x10^4 shots per mean and reconstruct with the averaged kernels.
records = ti.simulate_gaussian_noise(truth, eta, means, variance, 50_000, seed=1)
povms = [ti.averaged_kernel(eta, ti.NoiseDistribution.gaussian(m, variance), 12) for m in means]
report = ti.reconstruct(povms, records, ti.ReconstructionConfig(max_iterations=100_000, record_trace_every=10_000), truth)
print(f"fidelity after 1e5 iterations: {report.final_fidelity:.4f}")

# %%
# Error bound against trial count, random vs fixed noise at nbar = 0.1.
for n in (1_000, 10_000, 100_000):
    print(f"N={n:>6}: random {ti.predicted_error_bound(truth, [averaged], [n]):.5f}  "
          f"fixed {ti.predicted_error_bound(truth, [fixed], [n]):.5f}")
