import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from thermal_inference import (
    DetectorSetting,
    NoiseDistribution,
    ParameterError,
    efficiency_kernel,
    empirical_averaged_kernel,
    gaussian_averaged_kernel,
    thermal_kernel,
    thermal_no_click_probability,
)
from thermal_inference.core import random_distribution
from thermal_inference.povm import averaged_kernel, read_kernels_csv, write_kernels_csv

from conftest import distributions

# 10^7-draw Monte Carlo means and standard errors, tests/oracles/gaussian_kernel_mc.py
MC_NARROW = ([0.7166559196367481, 0.30441149718167493, 0.13010136375180836],
             [1.3076012077119207e-05, 2.1636831154787002e-06, 4.016120876571283e-06])
MC_WIDE = ([0.8244410086583961, 0.2720479008449056, 0.09515421319668171],
           [3.28457120627823e-05, 1.0118679326168721e-05, 1.0405649138343834e-05])


def quad_oracle(eta, mean, variance, n):
    sd = np.sqrt(variance)

    def integrand(x):
        s = 1.0 / (1.0 + eta * x)
        return s * (1.0 - eta * s) ** n * norm.pdf(x, mean, sd)

    val, _ = quad(integrand, 0.0, mean + 12 * sd, epsabs=1e-13, epsrel=1e-12, points=[mean])
    return val / norm.sf(0.0, mean, sd)


class TestEfficiencyKernel:
    def test_perfect_detector(self):
        assert efficiency_kernel(1.0, 3).kernel.tolist() == [1, 0, 0, 0]

    @pytest.mark.parametrize("eta,expected", [(0.8, [1, 0.2, 0.04]), (0.5, [1, 0.5, 0.25])])
    def test_values(self, eta, expected):
        np.testing.assert_allclose(efficiency_kernel(eta, 2).kernel, expected, atol=1e-15)

    @pytest.mark.parametrize("eta", [0.0, -0.1, 1.5])
    def test_rejects_eta(self, eta):
        with pytest.raises(ParameterError):
            efficiency_kernel(eta, 2)


class TestThermalKernel:
    def test_no_noise_is_efficiency_kernel(self):
        np.testing.assert_allclose(thermal_kernel(DetectorSetting(0.8, 0.0), 12).kernel, efficiency_kernel(0.8, 12).kernel, atol=1e-16)

    def test_values(self):
        np.testing.assert_allclose(thermal_kernel(DetectorSetting(0.8, 0.5), 2).kernel, [5 / 7, 15 / 49, 45 / 343], atol=1e-15)
        np.testing.assert_allclose(thermal_kernel(DetectorSetting(1.0, 1.0), 1).kernel, [0.5, 0.25], atol=1e-16)

    @given(distributions(), st.floats(0.01, 1.0), st.floats(0.0, 3.0))
    def test_inner_product_is_probability(self, rho, eta, nbar):
        s = DetectorSetting(eta, nbar)
        k = thermal_kernel(s, 12)
        assert abs(k.probability(rho) - thermal_no_click_probability(rho, s)) < 1e-14


class TestGaussianAveraged:
    def test_requires_gaussian(self):
        with pytest.raises(ParameterError):
            gaussian_averaged_kernel(0.8, NoiseDistribution.fixed(0.3), 2)
        with pytest.raises(ParameterError):
            gaussian_averaged_kernel(0.8, NoiseDistribution.gaussian(0.3, 0.1), 2, quad_points=8)

    def test_noise_distribution_invariant(self):
        with pytest.raises(ParameterError):
            NoiseDistribution("gaussian", 0.1, 0.0)
        with pytest.raises(ParameterError):
            NoiseDistribution("fixed", 0.1, 0.1)
        assert NoiseDistribution.gaussian(0.1, 0.0).kind == "fixed"

    def test_vanishing_variance(self):
        k = gaussian_averaged_kernel(0.8, NoiseDistribution.gaussian(0.5, 1e-8), 12)
        np.testing.assert_allclose(k.kernel, thermal_kernel(DetectorSetting(0.8, 0.5), 12).kernel, atol=1e-4)

    def test_narrow_noise_against_monte_carlo(self):
        k = gaussian_averaged_kernel(0.8, NoiseDistribution.gaussian(0.5, 0.01), 2).kernel
        mean, se = MC_NARROW
        assert np.all(np.abs(k - mean) < 4 * np.asarray(se))
        # close to the noiseless kernel up to the second-order (delta-method) shift
        base = thermal_kernel(DetectorSetting(0.8, 0.5), 2).kernel
        h = 1e-3
        curv = (
            thermal_kernel(DetectorSetting(0.8, 0.5 + h), 2).kernel - 2 * base + thermal_kernel(DetectorSetting(0.8, 0.5 - h), 2).kernel
        ) / h**2
        np.testing.assert_allclose(k, base + 0.5 * 0.01 * curv, atol=1e-4)
        assert np.max(np.abs(k - base)) < 2.5e-3

    def test_wide_truncated_noise_against_monte_carlo(self):
        k0 = gaussian_averaged_kernel(0.8, NoiseDistribution.gaussian(0.1, 0.1), 0).kernel
        k2 = gaussian_averaged_kernel(0.8, NoiseDistribution.gaussian(0.1, 0.1), 2).kernel
        mean, se = MC_WIDE
        assert abs(k0[0] - mean[0]) < 4 * se[0]
        assert np.all(np.abs(k2 - mean) < 4 * np.asarray(se))

    @pytest.mark.parametrize("mean,variance", [(0.1, 0.1), (0.5, 0.01), (0.95, 0.1), (0.3, 1.0)])
    def test_against_adaptive_quadrature(self, mean, variance):
        k = gaussian_averaged_kernel(0.8, NoiseDistribution.gaussian(mean, variance), 4).kernel
        ref = [quad_oracle(0.8, mean, variance, n) for n in range(5)]
        np.testing.assert_allclose(k, ref, atol=1e-9)

    def test_converges_with_points(self):
        noise = NoiseDistribution.gaussian(0.1, 0.1)
        ref = quad_oracle(0.8, 0.1, 0.1, 2)
        errs = [abs(gaussian_averaged_kernel(0.8, noise, 2, q).kernel[2] - ref) for q in (16, 32, 513)]
        assert errs[0] < 1e-6
        assert errs[-1] < 1e-10


class TestEmpiricalAveraged:
    def test_single_sample(self):
        np.testing.assert_allclose(
            empirical_averaged_kernel(0.8, [0.37], 6).kernel, thermal_kernel(DetectorSetting(0.8, 0.37), 6).kernel, atol=1e-16
        )

    def test_zero_samples_reduce_to_efficiency(self):
        np.testing.assert_allclose(empirical_averaged_kernel(0.8, [0.0, 0.0], 2).kernel, [1, 0.2, 0.04], atol=1e-16)

    def test_two_samples(self):
        a = thermal_kernel(DetectorSetting(0.8, 0.3), 1).kernel
        b = thermal_kernel(DetectorSetting(0.8, 0.7), 1).kernel
        # by hand: s = 1/1.24, 1/1.56
        np.testing.assert_allclose(a, [1 / 1.24, (1 / 1.24) * (1 - 0.8 / 1.24)], atol=1e-15)
        np.testing.assert_allclose(b, [1 / 1.56, (1 / 1.56) * (1 - 0.8 / 1.56)], atol=1e-15)
        np.testing.assert_allclose(empirical_averaged_kernel(0.8, [0.3, 0.7], 1).kernel, (a + b) / 2, atol=1e-16)

    def test_nbar_mode(self):
        k = empirical_averaged_kernel(0.8, [0.3, 0.7], 3, average="nbar").kernel
        np.testing.assert_allclose(k, thermal_kernel(DetectorSetting(0.8, 0.5), 3).kernel, atol=1e-16)

    def test_errors(self):
        with pytest.raises(ParameterError):
            empirical_averaged_kernel(0.8, [], 2)
        with pytest.raises(ParameterError):
            empirical_averaged_kernel(0.8, [-0.1], 2)
        with pytest.raises(ParameterError):
            empirical_averaged_kernel(0.8, [0.1], 2, average="median")


@given(st.floats(0.01, 1.0), st.floats(0.0, 2.0), st.floats(1e-4, 1.0))
@settings(max_examples=50, deadline=None)
def test_kernels_in_unit_interval_and_decreasing(eta, mean, variance):
    for k in (
        thermal_kernel(DetectorSetting(eta, mean), 12),
        gaussian_averaged_kernel(eta, NoiseDistribution.gaussian(mean, variance), 12, 64),
        empirical_averaged_kernel(eta, [mean, mean + variance], 12),
    ):
        r = k.kernel
        assert np.all((r >= 0) & (r <= 1))
        # strict decrease until the entries underflow
        nz = r[r > 1e-300]
        assert np.all(np.diff(nz) < 0)


def test_kernel_linearity():
    rng = np.random.default_rng(11)
    for _ in range(20):
        rho = random_distribution(rng, 13)
        nbars = rng.uniform(0, 2, size=rng.integers(1, 30))
        avg = empirical_averaged_kernel(0.7, nbars, 12)
        probs = [thermal_no_click_probability(rho, DetectorSetting(0.7, float(x))) for x in nbars]
        assert abs(avg.probability(rho) - np.mean(probs)) < 1e-12


def test_averaged_kernel_dispatch():
    fixed = averaged_kernel(0.8, NoiseDistribution.fixed(0.4), 3)
    np.testing.assert_array_equal(fixed.kernel, thermal_kernel(DetectorSetting(0.8, 0.4), 3).kernel)


def test_csv_roundtrip(tmp_path):
    ks = [thermal_kernel(DetectorSetting(0.8, nb), 4) for nb in (0.1, 0.5, 0.9)]
    write_kernels_csv(tmp_path / "k.csv", ks)
    assert (tmp_path / "k.csv").read_text().splitlines()[0] == "index,label,n,r_n"
    back = read_kernels_csv(tmp_path / "k.csv")
    assert [b.label for b in back] == [k.label for k in ks]
    for a, b in zip(ks, back):
        np.testing.assert_array_equal(a.kernel, b.kernel)
