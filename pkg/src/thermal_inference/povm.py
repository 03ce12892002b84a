"""Diagonal no-click kernels for efficiency, thermal dressing and noise averaging."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Sequence

import numpy as np
from scipy.stats import norm

from .core import DetectorSetting, ParameterError, PovmElement

DEFAULT_QUAD_POINTS = 513
#: Half-width of the Gaussian quadrature window, in standard deviations.
QUAD_HALF_WIDTH = 8.0


@dataclass(frozen=True)
class NoiseDistribution:
    """Distribution of the thermal mean photon number for one setting.

    ``gaussian`` noise is a normal law truncated to ``nbar >= 0``.
    """

    kind: str
    mean: float
    variance: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "gaussian"):
            raise ParameterError(f"unknown noise kind {self.kind!r}")
        if self.mean < 0 or self.variance < 0:
            raise ParameterError("noise mean and variance must be >= 0")
        if (self.variance == 0) != (self.kind == "fixed"):
            raise ParameterError("variance must be zero exactly for fixed noise")

    @classmethod
    def fixed(cls, mean: float) -> "NoiseDistribution":
        return cls("fixed", mean, 0.0)

    @classmethod
    def gaussian(cls, mean: float, variance: float) -> "NoiseDistribution":
        if variance == 0:
            return cls.fixed(mean)
        return cls("gaussian", mean, variance)

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))


def _thermal_rows(eta: float, nbars: np.ndarray, M: int) -> np.ndarray:
    # one kernel per row, shape (len(nbars), M + 1)
    scale = 1.0 / (1.0 + eta * nbars)
    n = np.arange(M + 1)
    return scale[:, None] * np.power((1.0 - eta * scale)[:, None], n[None, :])


def _check_eta_m(eta: float, M: int) -> None:
    if not 0.0 < eta <= 1.0:
        raise ParameterError(f"efficiency must be in (0, 1], got {eta}")
    if int(M) != M or M < 0:
        raise ParameterError(f"truncation must be a non-negative integer, got {M}")


def efficiency_kernel(eta: float, M: int) -> PovmElement:
    """``r_n = (1 - eta)^n``: the bare detector without added light."""
    _check_eta_m(eta, M)
    return PovmElement(np.power(1.0 - eta, np.arange(M + 1)), label=f"eta={eta:g}")


def thermal_kernel(setting: DetectorSetting, M: int) -> PovmElement:
    """Kernel of the bucket detector with thermal light of mean ``setting.nbar``.

    ``r_n = s (1 - eta s)^n`` with ``s = 1 / (1 + eta nbar)``.
    """
    _check_eta_m(setting.eta, M)
    row = _thermal_rows(setting.eta, np.array([setting.nbar], dtype=float), M)[0]
    return PovmElement(row, label=f"eta={setting.eta:g},nbar={setting.nbar:.17g}")


@lru_cache(maxsize=8)
def _legendre(points: int):
    return np.polynomial.legendre.leggauss(points)


def truncated_normal_nodes(mean: float, variance: float, quad_points: int = DEFAULT_QUAD_POINTS):
    """Gauss-Legendre nodes and weights for ``Normal(mean, variance)`` on ``[0, inf)``.

    The rule spans ``[max(0, mean - 8 sd), mean + 8 sd]`` with the normal
    density folded into the weights, which are then renormalized to one
    (this is the truncation at zero).
    """
    if variance <= 0:
        raise ParameterError("quadrature needs a positive variance")
    sd = np.sqrt(variance)
    lo = max(0.0, mean - QUAD_HALF_WIDTH * sd)
    hi = mean + QUAD_HALF_WIDTH * sd
    t, w = _legendre(int(quad_points))
    nodes = lo + 0.5 * (t + 1.0) * (hi - lo)
    w = w * norm.pdf(nodes, loc=mean, scale=sd)
    return nodes, w / w.sum()


def gaussian_averaged_kernel(
    eta: float,
    noise: NoiseDistribution,
    M: int,
    quad_points: int = DEFAULT_QUAD_POINTS,
) -> PovmElement:
    """Thermal kernel averaged over a truncated-normal thermal mean.

    Deterministic quadrature; see :func:`truncated_normal_nodes`.
    """
    if noise.kind != "gaussian":
        raise ParameterError("gaussian_averaged_kernel needs gaussian noise")
    if quad_points < 16:
        raise ParameterError("use at least 16 quadrature points")
    _check_eta_m(eta, M)
    nodes, weights = truncated_normal_nodes(noise.mean, noise.variance, quad_points)
    row = weights @ _thermal_rows(eta, nodes, M)
    return PovmElement(
        row, label=f"eta={eta:g},nbar~N({noise.mean:.17g},{noise.variance:.17g})"
    )


def averaged_kernel(eta: float, noise: NoiseDistribution, M: int, quad_points: int = DEFAULT_QUAD_POINTS) -> PovmElement:
    """Kernel for either kind of noise: exact for fixed, averaged for gaussian."""
    if noise.kind == "fixed":
        return thermal_kernel(DetectorSetting(eta, noise.mean), M)
    return gaussian_averaged_kernel(eta, noise, M, quad_points)


def empirical_averaged_kernel(
    eta: float, nbar_samples: Sequence[float], M: int, average: str = "kernel"
) -> PovmElement:
    """Kernel for a window of shots whose thermal means are known.

    With ``average="kernel"`` (default) the thermal kernels of the individual
    samples are averaged, which is exact for the mixture. ``average="nbar"``
    instead builds one thermal kernel at the sample mean.
    """
    samples = np.asarray(nbar_samples, dtype=float).ravel()
    if samples.size == 0:
        raise ParameterError("need at least one thermal-mean sample")
    if np.any(samples < 0):
        raise ParameterError("thermal-mean samples must be >= 0")
    _check_eta_m(eta, M)
    if average == "kernel":
        row = _thermal_rows(eta, samples, M).mean(axis=0)
    elif average == "nbar":
        row = _thermal_rows(eta, np.array([samples.mean()]), M)[0]
    else:
        raise ParameterError(f"average must be 'kernel' or 'nbar', got {average!r}")
    return PovmElement(row, label=f"eta={eta:g},mean_nbar={samples.mean():.17g}")


def kernel_matrix(povms: Sequence[PovmElement]) -> np.ndarray:
    """Stack kernels into a ``(K, M + 1)`` array; all must share one truncation."""
    if len(povms) == 0:
        raise ParameterError("need at least one POVM element")
    dims = {p.dim for p in povms}
    if len(dims) != 1:
        raise ParameterError(f"kernels have mixed lengths {sorted(dims)}")
    return np.vstack([p.kernel for p in povms])


# -- CSV


KERNEL_COLUMNS = ("index", "label", "n", "r_n")


def write_kernels_csv(path, povms: Iterable[PovmElement]) -> None:
    """Long-format CSV, one row per ``(kernel, n)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(KERNEL_COLUMNS)
        for j, p in enumerate(povms):
            for n, r in enumerate(p.kernel):
                w.writerow([j, p.label, n, repr(float(r))])


def read_kernels_csv(path) -> List[PovmElement]:
    rows: dict = {}
    labels: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            j = int(row["index"])
            labels[j] = row.get("label", "")
            rows.setdefault(j, {})[int(row["n"])] = float(row["r_n"])
    out = []
    for j in sorted(rows):
        entries = rows[j]
        if sorted(entries) != list(range(len(entries))):
            raise ParameterError(f"kernel {j} has missing photon numbers")
        out.append(PovmElement([entries[n] for n in range(len(entries))], labels[j]))
    return out
