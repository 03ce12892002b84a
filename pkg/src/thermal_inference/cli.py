"""Command-line front end.

::

    thermal-inference experiment fig1 --out runs/fig1 --seed 3
    thermal-inference experiment fig2 --config my.cfg --iterations 20000
    thermal-inference simulate --mode gaussian --variance 0.1 --out data/
    thermal-inference reconstruct --records data/records.csv --kernels data/kernels.csv --out rec/
    thermal-inference calibrate --records vacuum.csv --eta 0.8 --out cal/
    thermal-inference report runs/fig1

Config files are flat ``key = value`` text (``#`` comments) or a run's
``manifest.json``; command-line flags win over file values.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .core import ParameterError, parse_state
from .experiments import (
    CalibrationError,
    ExperimentConfig,
    calibrate,
    config_from_mapping,
    prepare_output_dir,
    run_experiment,
    write_json,
)
from .povm import NoiseDistribution, averaged_kernel, read_kernels_csv, write_kernels_csv
from .reconstruct import ReconstructionConfig, reconstruct
from .simulator import (
    RandomWalkSpec,
    bin_shot_log,
    read_records_csv,
    simulate_gaussian_noise,
    simulate_random_walk,
    write_records_csv,
    write_records_json,
)


def _field_converters():
    conv = {}
    for f in fields(ExperimentConfig):
        t = str(f.type)
        conv[f.name] = int if "int" in t else float if "float" in t else str
    return conv


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines into typed config values."""
    conv = _field_converters()
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip().strip("\"'")
        if not sep or key not in conv:
            raise ParameterError(f"config line {lineno}: cannot parse {raw!r}")
        out[key] = conv[key](value)
    return out


def load_config_file(path) -> dict:
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        data = json.loads(text)
        return dict(data.get("params", data))
    return parse_config_text(text)


def _parse_set(items) -> dict:
    return parse_config_text("\n".join(items or []))


def _nbar_list(text: str):
    """``a:b:n`` (linspace) or a comma-separated list."""
    if text.count(":") == 2:
        a, b, n = text.split(":")
        return [float(x) for x in np.linspace(float(a), float(b), int(n))]
    return [float(x) for x in text.split(",") if x.strip()]


def _common(p: argparse.ArgumentParser, defaults: bool = False):
    p.add_argument("--seed", type=int, default=0 if defaults else None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--eta", type=float, default=0.8 if defaults else None, help="detector efficiency")
    p.add_argument("--truth", default="fock:2" if defaults else None, help="fock:k, thermal:nbar, coherent:mean or p0,p1,...")
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--dim", type=int, default=None, help="search dimension M+1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermal-inference", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("experiment", help="run a predefined scenario")
    p.add_argument("scenario", choices=["fig1", "fig2", "fig3", "custom"])
    _common(p)
    p.add_argument("--config", help="key = value file or manifest.json")
    p.add_argument("--variance", type=float)
    p.add_argument("--total-shots", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--record-every", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="any config field; repeatable")

    p = sub.add_parser("simulate", help="simulate click records for a known state")
    _common(p, defaults=True)
    p.add_argument("--mode", choices=["fixed", "gaussian", "walk"], default="fixed")
    p.add_argument("--nbars", default="0.1:0.95:30", help="a:b:n or comma list")
    p.add_argument("--variance", type=float, default=0.0)
    p.add_argument("--walk-start", type=float, default=0.1)
    p.add_argument("--walk-step", type=float, default=5e-4)
    p.add_argument("--walk-p-up", type=float, default=0.51)
    p.add_argument("--bins", type=int, default=30)

    p = sub.add_parser("reconstruct", help="EM reconstruction from records and kernels")
    _common(p)
    p.add_argument("--records", required=True)
    p.add_argument("--kernels", required=True)
    p.add_argument("--record-every", type=int, default=100)
    p.add_argument("--tol", type=float, default=None, help="optional log-likelihood stop tolerance")

    p = sub.add_parser("calibrate", help="thermal kernels from vacuum-signal records")
    p.add_argument("--records", required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--dim", type=int, default=13)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="summarize a run directory")
    p.add_argument("run_dir")
    return parser


def _cmd_experiment(args) -> int:
    params = load_config_file(args.config) if args.config else {}
    scenario = args.scenario
    params.pop("scenario", None)
    params.update(_parse_set(args.set))
    for name in ("seed", "out", "eta", "truth", "shots", "iterations", "dim", "variance", "total_shots", "bins", "record_every"):
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    params.setdefault("out", f"runs/{scenario}")
    config = config_from_mapping(dict(params, scenario=scenario))
    result = run_experiment(config)
    print(f"{scenario}: wrote {result.out}")
    print(f"  error bound {result.report.error_bound:.6g}")
    if result.fidelity is not None:
        print(f"  fidelity {result.fidelity:.6f}")
    return 0


def _cmd_simulate(args) -> int:
    out = prepare_output_dir(args.out or "sim")
    dim = args.dim or 13
    rho = parse_state(args.truth, dim)
    shots = args.shots or 10_000
    manifest = {k: v for k, v in vars(args).items() if k not in ("out", "command")}
    if args.mode == "walk":
        walk = RandomWalkSpec(args.walk_start, args.walk_step, args.walk_p_up)
        log = simulate_random_walk(rho, args.eta, walk, shots, args.seed)
        log.to_csv(out / "shots.csv")
        records = [rec for rec, _ in bin_shot_log(log, args.bins)]
    else:
        nbars = _nbar_list(args.nbars)
        variance = args.variance if args.mode == "gaussian" else 0.0
        records = simulate_gaussian_noise(rho, args.eta, nbars, variance, shots, args.seed)
        noises = [NoiseDistribution.gaussian(nb, variance) for nb in nbars]
        write_kernels_csv(out / "kernels.csv", [averaged_kernel(args.eta, nz, dim - 1) for nz in noises])
    write_records_csv(out / "records.csv", records)
    write_records_json(out / "records.json", records)
    write_json(out / "manifest.json", {"params": manifest, "package_version": __version__})
    print(f"simulate: wrote {out}")
    return 0


def _cmd_reconstruct(args) -> int:
    records = read_records_csv(args.records)
    povms = read_kernels_csv(args.kernels)
    dim = args.dim or povms[0].dim
    truth = parse_state(args.truth, dim) if args.truth else None
    config = ReconstructionConfig(args.iterations or 10_000, dim, "maximal_entropy", args.record_every, args.tol)
    out = prepare_output_dir(args.out or "reconstruction")
    report = reconstruct(povms, records, config, truth)
    report.write_json(out / "estimate.json")
    report.write_trace_csv(out / "trace.csv")
    print(f"reconstruct: {report.iterations} iterations, error bound {report.error_bound:.6g}")
    print("  estimate " + " ".join(f"{x:.4f}" for x in report.estimate.probs))
    return 0


def _cmd_calibrate(args) -> int:
    records = read_records_csv(args.records)
    out = prepare_output_dir(args.out)
    result = calibrate(records, args.eta, args.dim - 1)
    write_kernels_csv(out / "kernels.csv", [k for _, k in result])
    write_json(
        out / "calibration.json",
        {"eta": args.eta, "settings": [{"label": r.setting_label, "nbar": nb} for r, (nb, _) in zip(records, result)]},
    )
    for r, (nb, _) in zip(records, result):
        print(f"{r.setting_label}: nbar = {nb:.6g}")
    return 0


def _cmd_report(args) -> int:
    run = Path(args.run_dir)
    manifest = json.loads((run / "manifest.json").read_text())
    estimate = json.loads((run / "estimate.json").read_text())
    params = manifest.get("params", {})
    print(f"run {run} ({params.get('scenario', 'simulate')}, seed {params.get('seed')})")
    for key in ("truth", "eta", "dim", "shots", "iterations", "variance"):
        if key in params:
            print(f"  {key:<11}{params[key]}")
    print(f"  error bound {estimate['error_bound']:.6g}")
    if estimate.get("final_fidelity") is not None:
        print(f"  fidelity   {estimate['final_fidelity']:.6f}")
    if "realized_nbar_range" in estimate:
        lo, hi = estimate["realized_nbar_range"]
        print(f"  nbar range [{lo:.4g}, {hi:.4g}]")
    print("  estimate   " + " ".join(f"{x:.4f}" for x in estimate["estimate"]))
    return 0


COMMANDS = {
    "experiment": _cmd_experiment,
    "simulate": _cmd_simulate,
    "reconstruct": _cmd_reconstruct,
    "calibrate": _cmd_calibrate,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ParameterError, CalibrationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
