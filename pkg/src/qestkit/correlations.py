"""Skew information and the correlation measures built on it."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .numkit import (
    PAULI,
    DimensionMismatch,
    NumericalError,
    ValidationError,
    embed_local,
    hermitian_eigen,
    hermitian_part,
    matrix_sqrt_psd,
    su_generators,
)
from .qfi import TRUNCATION_TOL
from .states import density_array


def _sqrt(m) -> np.ndarray:
    # eigenvalues within eigensolver roundoff of zero would leak O(sqrt(eps)) into the result
    floor = 16 * m.shape[0] * np.finfo(float).eps * abs(float(np.trace(m).real))
    return matrix_sqrt_psd(m, floor=floor)


class NotAQubitSide(ValidationError):
    pass


class DimensionNotPowerOfTwo(ValidationError):
    pass


class ZeroCorrelation(NumericalError):
    pass


@dataclass(frozen=True)
class Observable:
    op: np.ndarray
    spectrum_label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "op", hermitian_part(self.op, name="observable"))


@dataclass(frozen=True)
class CorrelationReport:
    value: float
    optimizer_matrix: np.ndarray
    max_eigenvalue: float
    measure: str


def _op(k) -> np.ndarray:
    return k.op if isinstance(k, Observable) else hermitian_part(k, name="observable")


def _pair(rho, k):
    m = density_array(rho)
    op = _op(k)
    if op.shape != m.shape:
        raise DimensionMismatch(f"observable is {op.shape[0]}-dim, state is {m.shape[0]}-dim")
    return m, op


def skew_information(rho, K) -> float:
    """Tr(ρK²) - Tr(√ρ K √ρ K), clamped at zero."""
    m, k = _pair(rho, K)
    s = _sqrt(m)
    val = np.trace(m @ k @ k).real - np.trace(s @ k @ s @ k).real
    return max(float(val), 0.0)


def variance_observable(rho, K) -> float:
    m, k = _pair(rho, K)
    mean = np.trace(m @ k).real
    return float(np.trace(m @ k @ k).real - mean**2)


def qfi_quarter(rho, K, tol: float = TRUNCATION_TOL) -> float:
    """QFI of the unitary family generated by K, divided by four."""
    m, k = _pair(rho, K)
    eig = hermitian_eigen(m)
    p, v = eig.eigenvalues, eig.eigenvectors
    km = v.conj().T @ k @ v
    ps = p[:, None] + p[None, :]
    keep = ps > tol * float(np.sum(p))
    weights = np.zeros_like(ps)
    weights[keep] = 2 * np.outer(p, p)[keep] / ps[keep]
    val = np.trace(m @ k @ k).real - float(np.sum(weights * np.abs(km) ** 2))
    return max(float(val), 0.0)


def hellinger_distance_sq(rho, sigma) -> float:
    """1 - Tr(√ρ √σ), clipped to [0, 1]."""
    a, b = density_array(rho), density_array(sigma)
    if a.shape != b.shape:
        raise DimensionMismatch("states differ in dimension")
    val = 1.0 - np.trace(_sqrt(a) @ _sqrt(b)).real
    return float(min(max(val, 0.0), 1.0))


# -- local measures -------------------------------------------------------------------

def _bipartite(rho, dims) -> tuple[np.ndarray, tuple[int, int]]:
    m = density_array(rho)
    if dims is None:
        dims = getattr(rho, "dims", None)
    dims = tuple(int(x) for x in dims)
    if len(dims) != 2 or dims[0] * dims[1] != m.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not describe a bipartition of {m.shape[0]}")
    return m, dims


def _qubit_side(rho, dims):
    m, dims = _bipartite(rho, dims)
    if dims[0] != 2:
        raise NotAQubitSide(f"first subsystem has dimension {dims[0]}, need 2")
    return m, dims


def _report(mat: np.ndarray, norm: float, measure: str) -> CorrelationReport:
    mat = 0.5 * (mat + mat.T)
    top = float(np.linalg.eigvalsh(mat)[-1])
    return CorrelationReport(norm - top, mat, top, measure)


def w_matrix(rho, local_ops) -> np.ndarray:
    """w_ij = Tr(√ρ A_i √ρ A_j) for a list of (already embedded) operators."""
    m = density_array(rho)
    s = _sqrt(m)
    sa = [s @ a for a in local_ops]
    n = len(local_ops)
    w = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            w[i, j] = w[j, i] = np.trace(sa[i] @ sa[j]).real
    return w


def lqu_qubit(rho, dims=None) -> CorrelationReport:
    """Local quantum uncertainty with a qubit on the measured side: 1 - λmax(W)."""
    m, dims = _qubit_side(rho, dims)
    ops = [embed_local(p, dims, 0) for p in PAULI]
    return _report(w_matrix(m, ops), 1.0, "lqu")


def m_matrix(rho, dims=None, tol: float = TRUNCATION_TOL) -> np.ndarray:
    """Real symmetric part of Σ 2 p_i p_j/(p_i+p_j) <i|σ_l⊗1|j><j|σ_k⊗1|i>.

    Every pair with p_i + p_j above the truncation threshold is included,
    diagonal pairs too, so that for unit s the quadratic form sᵀMs is the
    weighted sum subtracted from Tr(ρK²) = 1 in the quarter-convention QFI.
    """
    m, dims = _qubit_side(rho, dims)
    eig = hermitian_eigen(m)
    p, v = eig.eigenvalues, eig.eigenvectors
    ps = p[:, None] + p[None, :]
    keep = ps > tol * float(np.sum(p))
    wts = np.zeros_like(ps)
    wts[keep] = 2 * np.outer(p, p)[keep] / ps[keep]
    sig = [v.conj().T @ embed_local(s, dims, 0) @ v for s in PAULI]
    out = np.empty((3, 3))
    for l in range(3):
        for k in range(3):
            out[l, k] = np.sum(wts * sig[l] * sig[k].T).real
    return 0.5 * (out + out.T)


def lqfi(rho, dims=None, tol: float = TRUNCATION_TOL) -> CorrelationReport:
    """Local quantum Fisher information: 1 - λmax(M)."""
    return _report(m_matrix(rho, dims, tol), 1.0, "lqfi")


def lqu_multiqubit_average(rho, n_qubits: int, workers: int | None = None):
    """LQU of each qubit against the rest, and their mean.

    Returns ``(values, average)``.
    """
    m = density_array(rho)
    if n_qubits < 1 or n_qubits > 8 or m.shape[0] != 2**n_qubits:
        raise DimensionNotPowerOfTwo(f"dimension {m.shape[0]} is not 2^{n_qubits} (n <= 8)")
    dims = [2] * n_qubits
    s = _sqrt(m)

    def one(k):
        ops = [embed_local(p, dims, k) for p in PAULI]
        w = np.empty((3, 3))
        for i in range(3):
            for j in range(i, 3):
                w[i, j] = w[j, i] = np.trace(s @ ops[i] @ s @ ops[j]).real
        return 1.0 - float(np.linalg.eigvalsh(w)[-1])

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, range(n_qubits)))
    else:
        values = [one(k) for k in range(n_qubits)]
    return values, float(np.mean(values))


def lqu_qudit(rho, dims=None) -> CorrelationReport:
    """LQU with a qudit on the measured side: 2/d1 - λmax(W - G·P).

    W uses the generalized Gell-Mann matrices λ_i ⊗ 1, P_k = Tr(ρ λ_k⊗1)
    and g_ijk = Tr(λ_iλ_jλ_k + λ_jλ_iλ_k)/4. For d1 = 2 the g tensor
    vanishes and this reduces to ``lqu_qubit``.
    """
    m, dims = _bipartite(rho, dims)
    d1 = dims[0]
    gens = su_generators(d1)
    ops = [embed_local(g, dims, 0) for g in gens]
    w = w_matrix(m, ops)
    pvec = np.array([np.trace(m @ o).real for o in ops])
    stack = np.array(gens)
    prod = np.einsum("iab,jbc->ijac", stack, stack)
    g = 0.25 * np.einsum("ijab,kba->ijk", prod + prod.transpose(1, 0, 2, 3), stack).real
    w_hat = w - g @ pvec
    return _report(w_hat, 2.0 / d1, "lqu_qudit")


@dataclass(frozen=True)
class PrecisionChain:
    lqu: float
    lqfi: float
    bound_lqu: float
    bound_lqfi: float


def precision_chain(rho, dims=None, strict: bool = True, zero_tol: float = 1e-12) -> PrecisionChain:
    """Both measures plus the variance bounds 1/U and 1/Q_F.

    Checks U <= Q_F <= 2U within 1e-9. A vanishing LQU raises
    ZeroCorrelation when ``strict``; otherwise the bounds are infinite.
    """
    u = lqu_qubit(rho, dims).value
    q = lqfi(rho, dims).value
    if not (u - 1e-9 <= q <= 2 * u + 1e-9):
        raise NumericalError(f"sandwich U <= Q_F <= 2U violated: U={u!r}, Q_F={q!r}")
    if u <= zero_tol:
        if strict:
            raise ZeroCorrelation("local quantum uncertainty vanishes; bounds undefined")
        return PrecisionChain(u, q, float("inf"), float("inf") if q <= zero_tol else 1.0 / q)
    return PrecisionChain(u, q, 1.0 / u, 1.0 / q)
