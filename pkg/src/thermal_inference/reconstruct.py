"""Maximum-likelihood reconstruction of a photon-number distribution by EM.

Each setting ``j`` is the two-outcome POVM ``{Pi_j, I - Pi_j}`` run ``N_j``
times with ``S_j`` no-click outcomes. The log-likelihood is

    sum_j S_j ln p_j + (N_j - S_j) ln(1 - p_j),   p_j = <r_j, rho>

without the binomial coefficients (they do not depend on ``rho``), so values
are comparable only within one data set.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import xlogy

from .core import MeasurementRecord, ParameterError, PhotonDistribution, PovmElement, fidelity
from .povm import kernel_matrix

#: Probabilities are clamped to ``[PROB_FLOOR, 1 - PROB_FLOOR]`` inside EM.
PROB_FLOOR = 1e-15


def _data(povms: Sequence[PovmElement], records: Sequence[MeasurementRecord]):
    if len(povms) != len(records):
        raise ParameterError(f"{len(povms)} POVM elements but {len(records)} records")
    A = kernel_matrix(povms)
    N = np.array([r.trials for r in records], dtype=float)
    S = np.array([r.no_click_count for r in records], dtype=float)
    return A, N, S


def _em_weights(N: np.ndarray, S: np.ndarray):
    w = N / N.sum()
    f = S / N
    return w * f, w * (1.0 - f)


def _em_update(rho, A, B, a, b):
    """One EM step; returns the new distribution and the number of clamped p_j."""
    p = A @ rho
    pc = np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)
    clamped = int(np.count_nonzero(pc != p))
    R = (a / pc) @ A + (b / (1.0 - pc)) @ B
    new = rho * R
    return new / new.sum(), clamped


def _loglik(rho, A, N, S, clamp=False) -> float:
    p = np.clip(A @ rho, 0.0, 1.0)
    if clamp:
        p = np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)
    with np.errstate(divide="ignore"):
        return float(np.sum(xlogy(S, p) + xlogy(N - S, 1.0 - p)))


def log_likelihood(
    rho: PhotonDistribution,
    povms: Sequence[PovmElement],
    records: Sequence[MeasurementRecord],
    clamp: bool = False,
) -> float:
    """Binomial log-likelihood of ``records`` under ``rho`` (constants dropped).

    Data that are impossible under ``rho`` (a no-click count with ``p_j = 0``
    or a click with ``p_j = 1``) give ``-inf`` and a ``RuntimeWarning``;
    ``clamp=True`` uses the EM probability clamp instead and stays finite.
    """
    A, N, S = _data(povms, records)
    value = _loglik(rho.padded(A.shape[1]), A, N, S, clamp)
    if value == -np.inf:
        warnings.warn("data impossible under this distribution; log-likelihood is -inf", RuntimeWarning, stacklevel=2)
    return value


def em_step(
    rho: PhotonDistribution,
    povms: Sequence[PovmElement],
    records: Sequence[MeasurementRecord],
) -> PhotonDistribution:
    """Multiplicative EM update ``rho_n <- rho_n R_n / sum_m rho_m R_m``.

    ``R_n = sum_j w_j [f_j r_jn / p_j + (1 - f_j)(1 - r_jn) / (1 - p_j)]`` with
    ``f_j = S_j / N_j`` and ``w_j = N_j / sum N``. Entries that are zero stay
    zero.
    """
    A, N, S = _data(povms, records)
    a, b = _em_weights(N, S)
    new, _ = _em_update(rho.padded(A.shape[1]), A, 1.0 - A, a, b)
    return PhotonDistribution(new)


@dataclass(frozen=True)
class ReconstructionConfig:
    """Settings for :func:`reconstruct`.

    ``init`` is ``"maximal_entropy"`` (uniform start) or a strictly positive
    :class:`PhotonDistribution`. ``tol`` enables stopping once the
    log-likelihood gain per iteration falls below it; off by default.
    """

    max_iterations: int = 10_000
    search_dim: int = 13
    init: Union[str, PhotonDistribution] = "maximal_entropy"
    record_trace_every: int = 100
    tol: Optional[float] = None

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ParameterError("max_iterations must be >= 1")
        if self.search_dim < 2:
            raise ParameterError("search_dim must be >= 2")
        if self.record_trace_every < 1:
            raise ParameterError("record_trace_every must be >= 1")
        if isinstance(self.init, PhotonDistribution):
            if len(self.init) != self.search_dim:
                raise ParameterError("custom start must have search_dim entries")
            if np.any(self.init.probs <= 0):
                raise ParameterError("custom start must be strictly positive (EM cannot revive zeros)")
        elif self.init != "maximal_entropy":
            raise ParameterError(f"unknown init {self.init!r}")

    def start(self) -> PhotonDistribution:
        if isinstance(self.init, PhotonDistribution):
            return self.init
        return PhotonDistribution.uniform(self.search_dim)


@dataclass
class ReconstructionReport:
    estimate: PhotonDistribution
    loglik_trace: List[Tuple[int, float]]
    fidelity_trace: Optional[List[Tuple[int, float]]]
    error_bound: float
    iterations: int
    clamp_count: int = 0
    converged: bool = False

    @property
    def final_loglik(self) -> float:
        return self.loglik_trace[-1][1]

    @property
    def final_fidelity(self) -> Optional[float]:
        return None if self.fidelity_trace is None else self.fidelity_trace[-1][1]

    def to_dict(self) -> dict:
        return {
            "estimate": [float(x) for x in self.estimate.probs],
            "error_bound": self.error_bound,
            "iterations": self.iterations,
            "clamp_count": self.clamp_count,
            "converged": self.converged,
            "final_loglik": self.final_loglik,
            "final_fidelity": self.final_fidelity,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_trace_csv(self, path) -> None:
        fid = dict(self.fidelity_trace or [])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("iteration", "loglik", "fidelity"))
            for it, ll in self.loglik_trace:
                w.writerow((it, repr(ll), repr(fid[it]) if it in fid else ""))


def reconstruct(
    povms: Sequence[PovmElement],
    records: Sequence[MeasurementRecord],
    config: Optional[ReconstructionConfig] = None,
    truth: Optional[PhotonDistribution] = None,
) -> ReconstructionReport:
    """Run EM for ``config.max_iterations`` steps from the configured start.

    Traces are taken at iteration 0, every ``record_trace_every`` iterations,
    and at the last iteration. The fidelity trace needs ``truth``.
    """
    config = config or ReconstructionConfig()
    A, N, S = _data(povms, records)
    if A.shape[1] != config.search_dim:
        raise ParameterError(f"kernels have {A.shape[1]} entries, search_dim is {config.search_dim}")
    B = 1.0 - A
    a, b = _em_weights(N, S)
    rho = config.start().probs.copy()

    ll_trace: List[Tuple[int, float]] = []
    fid_trace: Optional[List[Tuple[int, float]]] = [] if truth is not None else None

    def record(it, r):
        ll_trace.append((it, _loglik(r, A, N, S, clamp=True)))
        if fid_trace is not None:
            fid_trace.append((it, fidelity(PhotonDistribution(r), truth)))

    record(0, rho)
    clamps = 0
    converged = False
    prev_ll = ll_trace[0][1]
    every = config.record_trace_every
    it = 0
    for it in range(1, config.max_iterations + 1):
        rho, c = _em_update(rho, A, B, a, b)
        clamps += c
        if config.tol is not None:
            ll = _loglik(rho, A, N, S, clamp=True)
            if abs(ll - prev_ll) < config.tol:
                converged = True
                break
            prev_ll = ll
        if it % every == 0:
            record(it, rho)
    if ll_trace[-1][0] != it:
        record(it, rho)

    return ReconstructionReport(
        estimate=PhotonDistribution(rho),
        loglik_trace=ll_trace,
        fidelity_trace=fid_trace,
        error_bound=error_bound(records),
        iterations=it,
        clamp_count=clamps,
        converged=converged,
    )


def error_bound(records: Sequence[MeasurementRecord]) -> float:
    """Largest binomial standard error ``sqrt(f_j (1 - f_j) / N_j)`` over settings.

    Order-of-magnitude error of each reconstructed ``rho_nn``.
    """
    if len(records) == 0:
        raise ParameterError("need at least one record")
    return max(float(np.sqrt(r.no_click_count / r.trials**2 * (1.0 - r.frequency))) for r in records)


def predicted_error_bound(
    rho: PhotonDistribution, povms: Sequence[PovmElement], trials: Sequence[int]
) -> float:
    """Expected :func:`error_bound` for data drawn from ``rho``."""
    if len(povms) != len(trials) or len(povms) == 0:
        raise ParameterError("povms and trials must be aligned and non-empty")
    A = kernel_matrix(povms)
    p = np.clip(A @ rho.padded(A.shape[1]), 0.0, 1.0)
    return float(np.max(np.sqrt(p * (1.0 - p) / np.asarray(trials, dtype=float))))
