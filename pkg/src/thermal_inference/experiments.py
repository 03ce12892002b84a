"""Scenario runners: fixed, random and drifting thermal noise, plus calibration.

A run writes one directory::

    manifest.json   parameters, seed and library versions (enough to rerun)
    records.csv     label,trials,no_clicks,nbar
    kernels.csv     index,label,n,r_n
    estimate.json   estimate, error bound, clamp count, final fidelity
    trace.csv       iteration,loglik,fidelity

plus scenario extras (``panel_b.csv`` for random noise, ``walk.csv`` and
``walk.json`` for the drifting walk). No timestamps are written, so reruns
with the same manifest are byte-identical.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .core import (
    DetectorSetting,
    MeasurementRecord,
    ParameterError,
    PhotonDistribution,
    PovmElement,
    parse_state,
)
from .povm import (
    NoiseDistribution,
    averaged_kernel,
    empirical_averaged_kernel,
    thermal_kernel,
    write_kernels_csv,
)
from .reconstruct import (
    ReconstructionConfig,
    ReconstructionReport,
    error_bound,
    predicted_error_bound,
    reconstruct,
)
from .simulator import (
    RandomWalkSpec,
    bin_shot_log,
    bin_slices,
    simulate_fixed,
    simulate_gaussian_noise,
    simulate_random_walk,
    write_records_csv,
)

SCENARIOS = ("fig1", "fig2", "fig3", "custom")


class CalibrationError(ValueError):
    """A vacuum calibration rate that cannot be inverted to a thermal mean."""


@dataclass
class ExperimentConfig:
    """Flat parameter set shared by all scenarios.

    Fields left at ``None`` take the scenario default (see ``SCENARIO_DEFAULTS``).
    ``noise_spread`` says how to read ``variance``: as a variance (default) or
    as a standard deviation.
    """

    scenario: str = "fig1"
    truth: str = "fock:2"
    eta: float = 0.8
    dim: int = 13
    nbar_min: float = 0.1
    nbar_max: float = 0.95
    settings: int = 30
    shots: Optional[int] = None
    iterations: Optional[int] = None
    record_every: Optional[int] = None
    seed: int = 0
    # random noise
    variance: float = 0.0
    noise_spread: str = "variance"
    quad_points: int = 513
    sweep: str = "1,2,5,10,20,50,100"
    sweep_nbar: float = 0.1
    # drifting noise
    walk_start: float = 0.1
    walk_step: float = 5e-4
    walk_p_up: float = 0.51
    walk_floor: float = 0.0
    shots_per_step: int = 1
    bins: int = 30
    total_shots: Optional[int] = None
    kernel_average: str = "kernel"
    trajectory_stride: int = 1000
    out: str = field(default="runs", metadata={"manifest": False})

    @classmethod
    def for_scenario(cls, scenario: str, **overrides) -> "ExperimentConfig":
        if scenario not in SCENARIOS:
            raise ParameterError(f"unknown scenario {scenario!r}; pick one of {SCENARIOS}")
        params = dict(SCENARIO_DEFAULTS.get(scenario, {}))
        params.update({k: v for k, v in overrides.items() if v is not None})
        params["scenario"] = scenario
        cfg = cls(**params)
        cfg.validate()
        return cfg

    # -- derived quantities

    @property
    def nbar_grid(self) -> np.ndarray:
        return np.linspace(self.nbar_min, self.nbar_max, self.settings)

    @property
    def noise_variance(self) -> float:
        return self.variance**2 if self.noise_spread == "std" else self.variance

    @property
    def sweep_trials(self) -> List[int]:
        return [int(round(float(x) * 1000)) for x in self.sweep.split(",") if x.strip()]

    @property
    def walk(self) -> RandomWalkSpec:
        return RandomWalkSpec(self.walk_start, self.walk_step, self.walk_p_up, self.walk_floor, self.shots_per_step)

    @property
    def walk_total_shots(self) -> int:
        return self.total_shots if self.total_shots is not None else self.bins * self.shots

    def truth_state(self) -> PhotonDistribution:
        return parse_state(self.truth, self.dim)

    def reconstruction(self) -> ReconstructionConfig:
        every = self.record_every or max(1, self.iterations // 1000)
        return ReconstructionConfig(self.iterations, self.dim, "maximal_entropy", every)

    def validate(self) -> None:
        """Check every scenario-relevant field before any computation starts."""
        for name in ("shots", "iterations"):
            v = getattr(self, name)
            if v is None or int(v) != v or v < 1:
                raise ParameterError(f"{name} must be a positive integer for {self.scenario}")
        if self.dim < 2:
            raise ParameterError("dim must be >= 2")
        DetectorSetting(self.eta, 0.0)
        self.truth_state()
        if self.settings < 1 or self.nbar_min < 0 or self.nbar_max < self.nbar_min:
            raise ParameterError("need settings >= 1 and 0 <= nbar_min <= nbar_max")
        if self.noise_spread not in ("variance", "std"):
            raise ParameterError("noise_spread must be 'variance' or 'std'")
        if self.variance < 0:
            raise ParameterError("variance must be >= 0")
        if self.kernel_average not in ("kernel", "nbar"):
            raise ParameterError("kernel_average must be 'kernel' or 'nbar'")
        if self.scenario == "fig2":
            if not self.sweep_trials or min(self.sweep_trials) < 1:
                raise ParameterError("sweep must list positive trial counts (in thousands)")
        if self.scenario == "fig3":
            self.walk
            bin_slices(self.walk_total_shots, self.bins)
            if self.trajectory_stride < 1:
                raise ParameterError("trajectory_stride must be >= 1")

    def manifest_params(self) -> dict:
        return {
            f.name: getattr(self, f.name)
            for f in fields(self)
            if f.metadata.get("manifest", True)
        }


SCENARIO_DEFAULTS = {
    "fig1": dict(shots=10_000, iterations=10_000, variance=0.0),
    "fig2": dict(shots=50_000, iterations=1_000_000, variance=0.1),
    "fig3": dict(shots=30_000, iterations=1_000_000, variance=0.0),
    "custom": dict(shots=10_000, iterations=10_000),
}


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    """Build a config from a manifest ``params`` block or a flat key/value dict."""
    params = mapping.get("params", mapping)
    known = {f.name: f for f in fields(ExperimentConfig)}
    unknown = set(params) - set(known)
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    scenario = params.get("scenario", "fig1")
    rest = {k: v for k, v in params.items() if k != "scenario"}
    return ExperimentConfig.for_scenario(scenario, **rest)


# -- output helpers


def prepare_output_dir(path) -> Path:
    """Create ``path`` and make sure it is writable before any heavy work."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    return out


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(out: Path, config: ExperimentConfig, outputs: Sequence[str]) -> None:
    import scipy

    write_json(
        out / "manifest.json",
        {
            "params": config.manifest_params(),
            "package": "thermal_inference",
            "package_version": __version__,
            "numpy_version": np.__version__,
            "scipy_version": scipy.__version__,
            "rng": "numpy PCG64, SeedSequence(seed, spawn_key=(setting,))",
            "outputs": sorted(outputs),
        },
    )


def _write_reconstruction(out: Path, povms, records, report: ReconstructionReport, extra: Optional[dict] = None):
    write_records_csv(out / "records.csv", records)
    write_kernels_csv(out / "kernels.csv", povms)
    report.write_trace_csv(out / "trace.csv")
    payload = report.to_dict()
    if extra:
        payload.update(extra)
    write_json(out / "estimate.json", payload)


@dataclass
class RunResult:
    out: Path
    config: ExperimentConfig
    records: List[MeasurementRecord]
    povms: List[PovmElement]
    report: ReconstructionReport
    extras: dict = field(default_factory=dict)

    @property
    def fidelity(self) -> Optional[float]:
        return self.report.final_fidelity


# -- scenarios


def _grid_run(config: ExperimentConfig, variance: float):
    truth = config.truth_state()
    M = config.dim - 1
    means = config.nbar_grid
    records = simulate_gaussian_noise(truth, config.eta, means, variance, config.shots, config.seed)
    noises = [NoiseDistribution.gaussian(float(m), variance) for m in means]
    povms = [averaged_kernel(config.eta, nz, M, config.quad_points) for nz in noises]
    report = reconstruct(povms, records, config.reconstruction(), truth)
    predicted = predicted_error_bound(truth, povms, [r.trials for r in records])
    return records, povms, report, {"predicted_error_bound": predicted}


_BASE_OUTPUTS = ["manifest.json", "records.csv", "kernels.csv", "estimate.json", "trace.csv"]


def run_fig1(config: ExperimentConfig) -> RunResult:
    """Fixed thermal noise on a grid of thermal means (``variance`` is ignored)."""
    config.validate()
    out = prepare_output_dir(config.out)
    records, povms, report, extra = _grid_run(config, 0.0)
    _write_reconstruction(out, povms, records, report, extra)
    write_manifest(out, config, _BASE_OUTPUTS)
    return RunResult(out, config, records, povms, report, extra)


def run_custom(config: ExperimentConfig) -> RunResult:
    """Grid of thermal means with fixed or Gaussian noise, per ``variance``."""
    config.validate()
    out = prepare_output_dir(config.out)
    records, povms, report, extra = _grid_run(config, config.noise_variance)
    _write_reconstruction(out, povms, records, report, extra)
    write_manifest(out, config, _BASE_OUTPUTS)
    return RunResult(out, config, records, povms, report, extra)


def error_bound_sweep(config: ExperimentConfig) -> List[dict]:
    """Error bound against trial count for random and for fixed noise at one mean.

    Random and fixed series draw from separate seed streams.
    """
    truth = config.truth_state()
    M = config.dim - 1
    mean, var = config.sweep_nbar, config.noise_variance
    random_povm = averaged_kernel(config.eta, NoiseDistribution.gaussian(mean, var), M, config.quad_points)
    fixed_povm = thermal_kernel(DetectorSetting(config.eta, mean), M)
    rows = []
    for k, n in enumerate(config.sweep_trials):
        rec_r = simulate_gaussian_noise(truth, config.eta, [mean], var, n, (config.seed, 1, k))
        rec_f = simulate_fixed(truth, config.eta, [mean], n, (config.seed, 2, k))
        rows.append(
            {
                "trials": n,
                "delta_random": error_bound(rec_r),
                "delta_fixed": error_bound(rec_f),
                "predicted_random": predicted_error_bound(truth, [random_povm], [n]),
                "predicted_fixed": predicted_error_bound(truth, [fixed_povm], [n]),
            }
        )
    return rows


def _write_rows_csv(path, rows: List[dict]) -> None:
    import csv

    cols = list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in cols])


def run_fig2(config: ExperimentConfig) -> RunResult:
    """Gaussian random thermal noise with averaged kernels (panel a) and the
    error-bound sweep (panel b)."""
    config.validate()
    out = prepare_output_dir(config.out)
    records, povms, report, extra = _grid_run(config, config.noise_variance)
    sweep = error_bound_sweep(config)
    _write_reconstruction(out, povms, records, report, extra)
    _write_rows_csv(out / "panel_b.csv", sweep)
    write_manifest(out, config, _BASE_OUTPUTS + ["panel_b.csv"])
    return RunResult(out, config, records, povms, report, dict(extra, panel_b=sweep))


def run_fig3(config: ExperimentConfig) -> RunResult:
    """Drifting thermal noise: one walk, binned into windows with averaged kernels."""
    config.validate()
    out = prepare_output_dir(config.out)
    truth = config.truth_state()
    M = config.dim - 1
    walk = config.walk
    total = config.walk_total_shots
    log = simulate_random_walk(truth, config.eta, walk, total, config.seed)
    binned = bin_shot_log(log, config.bins)
    records = [rec for rec, _ in binned]
    povms = [
        empirical_averaged_kernel(config.eta, log.nbar_actual[sl], M, config.kernel_average)
        for sl in bin_slices(len(log), config.bins)
    ]
    report = reconstruct(povms, records, config.reconstruction(), truth)
    lo, hi = log.nbar_range
    n_steps = (total - 1) // walk.shots_per_step
    summary = {
        "total_shots": total,
        "realized_nbar_range": [lo, hi],
        "final_nbar": float(log.nbar_actual[-1]),
        "expected_final_nbar": walk.expected_position(n_steps),
        "final_nbar_sd": walk.position_sd(n_steps),
        "bin_mean_nbar": [m for _, m in binned],
    }
    _write_reconstruction(out, povms, records, report, {"realized_nbar_range": [lo, hi]})
    log.to_csv(out / "walk.csv", stride=config.trajectory_stride)
    write_json(out / "walk.json", summary)
    write_manifest(out, config, _BASE_OUTPUTS + ["walk.csv", "walk.json"])
    return RunResult(out, config, records, povms, report, summary)


RUNNERS = {"fig1": run_fig1, "fig2": run_fig2, "fig3": run_fig3, "custom": run_custom}


def run_experiment(config: ExperimentConfig) -> RunResult:
    return RUNNERS[config.scenario](config)


def rerun_from_manifest(manifest_path, out) -> RunResult:
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    config = config_from_mapping(manifest)
    config = dataclasses.replace(config, out=str(out))
    return run_experiment(config)


# -- calibration


def calibrate(records: Sequence[MeasurementRecord], eta: float, M: int) -> List[Tuple[float, PovmElement]]:
    """Thermal mean and kernel per setting from vacuum-signal (noise-only) data.

    With the signal blocked the no-click rate is ``1 / (1 + eta nbar)``, so
    ``nbar = (1/p - 1) / eta``.
    """
    DetectorSetting(eta, 0.0)
    out = []
    for r in records:
        p = r.frequency
        if p <= 0.0 or p > 1.0:
            raise CalibrationError(f"setting {r.setting_label!r}: no-click rate {p} cannot be inverted")
        nbar = (1.0 / p - 1.0) / eta
        kernel = thermal_kernel(DetectorSetting(eta, nbar), M)
        out.append((nbar, PovmElement(kernel.kernel, f"{r.setting_label}:nbar={nbar:.17g}")))
    return out
