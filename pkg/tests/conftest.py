import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qestkit.states import ParamFamily, pure_state  # noqa: E402


def rand_herm(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def rand_ket(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def rand_state(rng, d, rank=None):
    """Random density matrix of the given rank (full rank by default)."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def multi_unitary(rho0, gens):
    """ρ(θ) = U ρ0 U† with U = exp(-i Σ θ_k H_k), analytic derivatives."""
    gens = [np.asarray(g, dtype=complex) for g in gens]

    def u(th):
        h = sum(t * g for t, g in zip(th, gens))
        w, v = np.linalg.eigh(h)
        return (v * np.exp(-1j * w)) @ v.conj().T

    def func(th):
        un = u(th)
        return un @ rho0 @ un.conj().T

    def deriv(th, mu):
        # exact derivative of exp(-iH(θ)) via the Daleckii-Krein formula
        h = sum(t * g for t, g in zip(th, gens))
        w, v = np.linalg.eigh(h)
        e = np.exp(-1j * w)
        diff = w[:, None] - w[None, :]
        same = np.abs(diff) < 1e-12
        kern = np.where(same, -1j * e[:, None],
                        (e[:, None] - e[None, :]) / np.where(same, 1.0, diff))
        du = v @ (kern * (v.conj().T @ gens[mu] @ v)) @ v.conj().T
        un = u(th)
        x = du @ rho0 @ un.conj().T
        return x + x.conj().T

    return ParamFamily(len(gens), func, deriv, name="random-unitary")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


__all__ = ["rand_herm", "rand_ket", "rand_state", "multi_unitary", "pure_state"]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.line(n))
