import numpy as np
import pytest
from scipy.special import eval_genlaguerre, gammaln
from hypothesis import strategies as st

from thermal_inference import PhotonDistribution, fock_state


@pytest.fixture
def two_photons():
    return fock_state(2, 13)


def displaced_thermal_oracle(probs, eta, nbar, nodes=96):
    """No-click probability of the signal superposed with a thermal field.

    Independent of the closed form: the thermal field is a random phase-space
    displacement ``beta`` with ``|beta|^2 ~ Exp(nbar)``. Photon-number
    statistics of each displaced Fock state come from the Laguerre matrix
    elements ``|<k|D(beta)|n>|^2``; the radial average uses Gauss-Laguerre
    nodes and the count sum is cut where ``(1 - eta)^k < 1e-18``.
    """
    probs = np.asarray(probs, dtype=float)
    if nbar == 0:
        return float(np.power(1.0 - eta, np.arange(probs.size)) @ probs)
    k_max = probs.size + (200 if eta == 1 else int(np.ceil(np.log(1e-18) / np.log(1.0 - eta))))
    rate = 1.0 / nbar
    u, w = np.polynomial.laguerre.laggauss(nodes)
    r = u / rate  # |beta|^2 nodes; Exp(nbar) density absorbed in the weights
    k = np.arange(k_max + 1)
    total = 0.0
    for n, pn in enumerate(probs):
        if pn == 0:
            continue
        lo, hi = np.minimum(k, n), np.maximum(k, n)
        lag = eval_genlaguerre(lo[None, :], (hi - lo)[None, :], r[:, None])
        with np.errstate(divide="ignore"):
            log_sq = (
                gammaln(lo + 1)[None, :] - gammaln(hi + 1)[None, :]
                + (hi - lo)[None, :] * np.log(r[:, None]) - r[:, None]
                + 2.0 * np.log(np.abs(lag))
            )
        weights_k = np.power(1.0 - eta, k)
        per_node = (np.exp(log_sq) * weights_k[None, :]).sum(axis=1)
        total += pn * float(w @ per_node)
    return total


@st.composite
def distributions(draw, min_dim=1, max_dim=13):
    dim = draw(st.integers(min_dim, max_dim))
    w = draw(st.lists(st.floats(0.0, 1.0), min_size=dim, max_size=dim))
    w = np.asarray(w) + 1e-3
    return PhotonDistribution(w / w.sum())


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one pass/fail line per acceptance criterion, shown at the end."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def _record(name, ok, detail):
        line = f"{name}: {'PASS' if ok else 'FAIL'} {detail}"
        lines.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
