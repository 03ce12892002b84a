"""Domain types and elementary no-click probabilities.

Everything here works on the diagonal of the density matrix in the Fock
basis, i.e. on photon-number distributions truncated at ``M`` photons.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

#: Default Fock-space truncation (photon numbers 0..12).
DEFAULT_MAX_PHOTONS = 12

_RENORM_TOL = 1e-9
_TAIL_TOL = 1e-6


class ParameterError(ValueError):
    """Raised for out-of-range physical or numerical parameters."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PhotonDistribution:
    """Normalized photon-number distribution ``probs[n] = rho_nn``, n = 0..M.

    Sums that are off by less than 1e-9 are silently renormalized; anything
    worse is rejected.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        if p.size < 1:
            raise ParameterError("distribution needs at least one entry")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ParameterError("probabilities must be finite and non-negative")
        total = p.sum()
        if abs(total - 1.0) >= _RENORM_TOL:
            raise ParameterError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", _frozen(p / total))

    @property
    def max_photons(self) -> int:
        return self.probs.size - 1

    def __len__(self) -> int:
        return self.probs.size

    def padded(self, length: int) -> np.ndarray:
        """Probabilities zero-padded to ``length`` entries."""
        if length < self.probs.size:
            if np.any(self.probs[length:] > 0):
                raise ParameterError(
                    f"distribution has support beyond {length - 1} photons"
                )
            return self.probs[:length].copy()
        out = np.zeros(length)
        out[: self.probs.size] = self.probs
        return out

    def mean(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)

    @classmethod
    def uniform(cls, dim: int) -> "PhotonDistribution":
        """Maximal-entropy state over ``dim`` Fock levels."""
        return cls(np.full(dim, 1.0 / dim))


@dataclass(frozen=True)
class PovmElement:
    """Diagonal no-click effect ``Pi = sum_n r_n |n><n|``.

    The click effect is ``I - Pi``; both are valid only when 0 <= r_n <= 1.
    """

    kernel: np.ndarray
    label: str = ""

    def __post_init__(self):
        r = np.array(self.kernel, dtype=float).ravel()
        if r.size < 1:
            raise ParameterError("kernel needs at least one entry")
        if not np.all(np.isfinite(r)):
            raise ParameterError("kernel entries must be finite")
        # rounding in averaged kernels can step a hair outside [0, 1]
        if np.any(r < -1e-12) or np.any(r > 1 + 1e-12):
            raise ParameterError("kernel entries must lie in [0, 1]")
        object.__setattr__(self, "kernel", _frozen(np.clip(r, 0.0, 1.0)))

    @property
    def dim(self) -> int:
        return self.kernel.size

    def probability(self, rho: PhotonDistribution) -> float:
        """No-click probability ``tr(Pi rho)``."""
        return float(self.kernel @ rho.padded(self.kernel.size))


@dataclass(frozen=True)
class DetectorSetting:
    """Bucket detector with efficiency ``eta`` and admixed thermal light ``nbar``."""

    eta: float
    nbar: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ParameterError(f"efficiency must be in (0, 1], got {self.eta}")
        if not self.nbar >= 0.0:
            raise ParameterError(f"thermal mean must be >= 0, got {self.nbar}")

    @property
    def effective_eta(self) -> float:
        return self.eta / (1.0 + self.eta * self.nbar)


@dataclass(frozen=True)
class MeasurementRecord:
    """``no_click_count`` no-click outcomes out of ``trials`` runs of one setting.

    ``nbar`` optionally carries the (mean) thermal photon number the setting
    was run at; it is metadata only.
    """

    setting_label: str
    trials: int
    no_click_count: int
    nbar: Optional[float] = None

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ParameterError(f"trials must be a positive integer, got {self.trials}")
        if int(self.no_click_count) != self.no_click_count or not (
            0 <= self.no_click_count <= self.trials
        ):
            raise ParameterError(
                f"no-click count {self.no_click_count} outside [0, {self.trials}]"
            )
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "no_click_count", int(self.no_click_count))

    @property
    def frequency(self) -> float:
        return self.no_click_count / self.trials


def no_click_probability(rho: PhotonDistribution, eta: float) -> float:
    """Probability that a bucket detector of efficiency ``eta`` stays silent.

    This is the photon-number generating function ``sum_n (1-eta)^n rho_nn``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"efficiency must be in [0, 1], got {eta}")
    n = np.arange(len(rho))
    # 0**0 == 1 keeps the vacuum term for eta == 1
    return float(np.power(1.0 - eta, n) @ rho.probs)


def thermal_no_click_probability(rho: PhotonDistribution, setting: DetectorSetting) -> float:
    """No-click probability with thermal light of mean ``setting.nbar`` admixed."""
    scale = 1.0 / (1.0 + setting.eta * setting.nbar)
    return scale * no_click_probability(rho, setting.eta * scale)


def fidelity(p: PhotonDistribution, q: PhotonDistribution) -> float:
    """Squared Bhattacharyya overlap ``(sum_n sqrt(p_n q_n))**2``.

    For diagonal density matrices this is the Uhlmann fidelity. The shorter
    distribution is zero-padded.
    """
    dim = max(len(p), len(q))
    overlap = np.sqrt(p.padded(dim) * q.padded(dim)).sum()
    return float(min(overlap * overlap, 1.0))


# -- named states


def fock_state(k: int, dim: int) -> PhotonDistribution:
    if not 0 <= k < dim:
        raise ParameterError(f"Fock state |{k}> does not fit in {dim} levels")
    probs = np.zeros(dim)
    probs[k] = 1.0
    return PhotonDistribution(probs)


def thermal_state(nbar: float, dim: int) -> PhotonDistribution:
    """Bose-Einstein distribution truncated to ``dim`` levels and renormalized.

    Truncation loss above 1e-6 is rejected rather than hidden.
    """
    if nbar < 0:
        raise ParameterError("thermal mean must be >= 0")
    n = np.arange(dim)
    probs = nbar**n / (1.0 + nbar) ** (n + 1)
    _check_tail(probs, "thermal", dim)
    return PhotonDistribution(probs / probs.sum())


def coherent_state(mean: float, dim: int) -> PhotonDistribution:
    """Poissonian photon statistics of a coherent state with ``|alpha|^2 = mean``."""
    from scipy.stats import poisson

    if mean < 0:
        raise ParameterError("coherent mean must be >= 0")
    probs = poisson.pmf(np.arange(dim), mean)
    _check_tail(probs, "coherent", dim)
    return PhotonDistribution(probs / probs.sum())


def _check_tail(probs: np.ndarray, name: str, dim: int) -> None:
    if 1.0 - probs.sum() > _TAIL_TOL:
        raise ParameterError(
            f"{name} state loses {1.0 - probs.sum():.3g} probability above "
            f"{dim - 1} photons; raise the truncation"
        )


def parse_state(text: str, dim: int) -> PhotonDistribution:
    """Build a state from ``fock:k``, ``thermal:nbar``, ``coherent:mean`` or
    an explicit comma-separated probability list."""
    text = text.strip()
    kind, sep, arg = text.partition(":")
    kind = kind.lower()
    if sep:
        if kind == "fock":
            return fock_state(int(arg), dim)
        if kind == "thermal":
            return thermal_state(float(arg), dim)
        if kind == "coherent":
            return coherent_state(float(arg), dim)
        raise ParameterError(f"unknown state kind {kind!r}")
    values = [float(v) for v in text.strip("[]").split(",") if v.strip()]
    return PhotonDistribution(PhotonDistribution(values).padded(dim))


def random_distribution(rng: np.random.Generator, dim: int) -> PhotonDistribution:
    """Uniformly random point of the probability simplex."""
    return PhotonDistribution(rng.dirichlet(np.ones(dim)))
