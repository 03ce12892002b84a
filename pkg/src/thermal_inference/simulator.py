"""Synthetic click/no-click data under fixed, random and drifting thermal noise.

Randomness comes from numpy's PCG64 generator. Every setting ``j`` of a run
with seed ``s`` gets its own stream, ``SeedSequence(s, spawn_key=(j,))``, so
a setting's counts do not depend on how many other settings are simulated or
in which order. The random walk is a single sequential stream (index 0).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.stats import truncnorm

from .core import MeasurementRecord, ParameterError, PhotonDistribution


def setting_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for setting ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def no_click_probabilities(rho: PhotonDistribution, eta: float, nbars) -> np.ndarray:
    """Vectorized thermal no-click probability for many thermal means."""
    if not 0.0 < eta <= 1.0:
        raise ParameterError(f"efficiency must be in (0, 1], got {eta}")
    nbars = np.asarray(nbars, dtype=float)
    if np.any(nbars < 0):
        raise ParameterError("thermal means must be >= 0")
    scale = 1.0 / (1.0 + eta * nbars)
    # generating function sum_n rho_n x^n at x = 1 - eta_eff
    return scale * np.polyval(rho.probs[::-1], 1.0 - eta * scale)


def _check_shots(shots: int, name: str = "shots_per_setting") -> None:
    if int(shots) != shots or shots < 1:
        raise ParameterError(f"{name} must be a positive integer, got {shots}")


def simulate_fixed(
    rho: PhotonDistribution,
    eta: float,
    nbars: Sequence[float],
    shots_per_setting: int,
    seed: int,
) -> List[MeasurementRecord]:
    """Binomial no-click counts for each fixed thermal mean in ``nbars``."""
    _check_shots(shots_per_setting)
    probs = no_click_probabilities(rho, eta, nbars)
    records = []
    for j, (nbar, p) in enumerate(zip(nbars, probs)):
        s = setting_rng(seed, j).binomial(int(shots_per_setting), min(max(p, 0.0), 1.0))
        records.append(MeasurementRecord(f"{j}:nbar={nbar:g}", int(shots_per_setting), int(s), float(nbar)))
    return records


def sample_truncated_normal(rng: np.random.Generator, mean: float, variance: float, size: int) -> np.ndarray:
    """Draws from ``Normal(mean, variance)`` conditioned on being >= 0."""
    sd = np.sqrt(variance)
    return truncnorm.rvs((0.0 - mean) / sd, np.inf, loc=mean, scale=sd, size=size, random_state=rng)


def simulate_gaussian_noise(
    rho: PhotonDistribution,
    eta: float,
    noise_means: Sequence[float],
    variance: float,
    shots_per_setting: int,
    seed: int,
) -> List[MeasurementRecord]:
    """Each shot draws its own thermal mean from a truncated normal.

    With ``variance == 0`` this is exactly :func:`simulate_fixed`, stream for
    stream.
    """
    if variance < 0:
        raise ParameterError("variance must be >= 0")
    if variance == 0:
        return simulate_fixed(rho, eta, noise_means, shots_per_setting, seed)
    _check_shots(shots_per_setting)
    records = []
    for j, mean in enumerate(noise_means):
        if mean < 0:
            raise ParameterError("noise means must be >= 0")
        rng = setting_rng(seed, j)
        nbar = sample_truncated_normal(rng, mean, variance, int(shots_per_setting))
        p = no_click_probabilities(rho, eta, nbar)
        silent = int(np.count_nonzero(rng.random(p.size) < p))
        records.append(MeasurementRecord(f"{j}:nbar~N({mean:g},{variance:g})", int(shots_per_setting), silent, float(mean)))
    return records


@dataclass(frozen=True)
class RandomWalkSpec:
    """Lattice walk of the thermal mean: ``+step`` with ``p_up``, else ``-step``.

    The walk reflects at ``floor``. ``shots_per_step`` shots share each value
    (1 means the mean moves after every shot).
    """

    start: float
    step: float
    p_up: float
    floor: float = 0.0
    shots_per_step: int = 1

    def __post_init__(self):
        if not self.step > 0:
            raise ParameterError("walk step must be > 0")
        if not 0.0 <= self.p_up <= 1.0:
            raise ParameterError("p_up must be in [0, 1]")
        if self.floor < 0 or self.start < self.floor:
            raise ParameterError("need 0 <= floor <= start")
        if int(self.shots_per_step) != self.shots_per_step or self.shots_per_step < 1:
            raise ParameterError("shots_per_step must be a positive integer")

    def expected_position(self, n_steps: int) -> float:
        """Mean position after ``n_steps`` steps, ignoring the floor."""
        return self.start + n_steps * (2.0 * self.p_up - 1.0) * self.step

    def position_sd(self, n_steps: int) -> float:
        return self.step * float(np.sqrt(4.0 * self.p_up * (1.0 - self.p_up) * n_steps))


@dataclass(frozen=True)
class ShotLog:
    """Per-shot thermal mean and outcome of a drifting-noise run."""

    shot_index: np.ndarray
    nbar_actual: np.ndarray
    clicked: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.shot_index, dtype=np.int64)
        nb = np.asarray(self.nbar_actual, dtype=float)
        ck = np.asarray(self.clicked, dtype=bool)
        if not (idx.shape == nb.shape == ck.shape) or idx.ndim != 1:
            raise ParameterError("shot log columns must be 1-d and equally long")
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            raise ParameterError("shot indices must be strictly increasing")
        for name, a in (("shot_index", idx), ("nbar_actual", nb), ("clicked", ck)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return self.shot_index.size

    @property
    def nbar_range(self) -> Tuple[float, float]:
        return float(self.nbar_actual.min()), float(self.nbar_actual.max())

    def to_csv(self, path, stride: int = 1) -> None:
        """Write ``shot_index,nbar_actual,clicked``; ``stride`` thins the rows."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("shot_index", "nbar_actual", "clicked"))
            for i in range(0, len(self), stride):
                w.writerow((int(self.shot_index[i]), repr(float(self.nbar_actual[i])), int(self.clicked[i])))

    @classmethod
    def from_csv(cls, path) -> "ShotLog":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            [int(r["shot_index"]) for r in rows],
            [float(r["nbar_actual"]) for r in rows],
            [bool(int(r["clicked"])) for r in rows],
        )


def walk_trajectory(walk: RandomWalkSpec, total_shots: int, rng: np.random.Generator) -> np.ndarray:
    """Thermal mean seen by each shot; shot 0 sees ``walk.start``."""
    n_values = -(-total_shots // walk.shots_per_step)
    up = rng.random(n_values - 1) < walk.p_up
    values = np.empty(n_values)
    x = walk.start
    values[0] = x
    step, floor = walk.step, walk.floor
    for i in range(1, n_values):
        x = x + step if up[i - 1] else x - step
        if x < floor:
            x = 2.0 * floor - x
        values[i] = x
    return np.repeat(values, walk.shots_per_step)[:total_shots]


def simulate_random_walk(
    rho: PhotonDistribution,
    eta: float,
    walk: RandomWalkSpec,
    total_shots: int,
    seed: int,
) -> ShotLog:
    """One Bernoulli trial per shot while the thermal mean drifts between shots."""
    _check_shots(total_shots, "total_shots")
    rng = setting_rng(seed, 0)
    nbar = walk_trajectory(walk, int(total_shots), rng)
    p = no_click_probabilities(rho, eta, nbar)
    clicked = rng.random(p.size) >= p
    return ShotLog(np.arange(nbar.size), nbar, clicked)


def bin_slices(n: int, bins: int) -> List[slice]:
    """Contiguous equal bins; the remainder ``n % bins`` goes to the last bin."""
    if int(bins) != bins or bins < 1:
        raise ParameterError("bins must be a positive integer")
    if bins > n:
        raise ParameterError(f"{bins} bins requested for only {n} shots")
    size = n // bins
    edges = [k * size for k in range(bins)] + [n]
    return [slice(edges[k], edges[k + 1]) for k in range(bins)]


def bin_shot_log(log: ShotLog, bins: int) -> List[Tuple[MeasurementRecord, float]]:
    """Aggregate a shot log into ``bins`` records with their mean thermal photon number."""
    out = []
    for k, sl in enumerate(bin_slices(len(log), bins)):
        trials = sl.stop - sl.start
        silent = trials - int(np.count_nonzero(log.clicked[sl]))
        mean_nbar = float(log.nbar_actual[sl].mean())
        out.append((MeasurementRecord(f"bin{k}", trials, silent, mean_nbar), mean_nbar))
    return out


# -- serialization

RECORD_COLUMNS = ("label", "trials", "no_clicks", "nbar")


def write_records_csv(path, records: Sequence[MeasurementRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow((r.setting_label, r.trials, r.no_click_count, "" if r.nbar is None else repr(float(r.nbar))))


def read_records_csv(path) -> List[MeasurementRecord]:
    with open(path, newline="") as fh:
        return [
            MeasurementRecord(
                row["label"],
                int(row["trials"]),
                int(row["no_clicks"]),
                float(row["nbar"]) if row.get("nbar") else None,
            )
            for row in csv.DictReader(fh)
        ]


def records_summary(records: Sequence[MeasurementRecord]) -> List[dict]:
    return [
        {"label": r.setting_label, "N": r.trials, "S": r.no_click_count, "mean_nbar": r.nbar}
        for r in records
    ]


def write_records_json(path, records: Sequence[MeasurementRecord]) -> None:
    with open(path, "w") as fh:
        json.dump({"settings": records_summary(records)}, fh, indent=2, sort_keys=True)
        fh.write("\n")
