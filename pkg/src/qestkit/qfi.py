"""Single-parameter quantum estimation: SLD and quantum Fisher information."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numkit import (
    NumericalError,
    ValidationError,
    hermitian_eigen,
    hermitian_part,
    max_abs,
)
from .states import (
    NotNormalized,
    ParamFamily,
    density_array,
    family_derivative,
    fd_step_for,
)

TRUNCATION_TOL = 1e-12
RANK_TOL = 1e-10


class DegenerateSpectrum(NumericalError):
    pass


@dataclass(frozen=True)
class SLD:
    """Symmetric logarithmic derivative for one parameter index."""

    op: np.ndarray
    param_index: int = 0
    truncation_tol: float = TRUNCATION_TOL
    support_rank: int = 0


def check_derivative(drho, dim: int | None = None) -> np.ndarray:
    d = hermitian_part(drho, tol=1e-10, name="drho", atol=1e-14)
    if dim is not None and d.shape[0] != dim:
        raise ValidationError(f"drho is {d.shape[0]}-dimensional, state is {dim}")
    if abs(np.trace(d)) > 1e-8 * max(1.0, max_abs(d)):
        raise ValidationError(f"drho is not traceless (trace {np.trace(d)!r})")
    return d


def pair_weights(w: np.ndarray, tol: float = TRUNCATION_TOL) -> np.ndarray:
    """2/(λ_i + λ_j) where λ_i + λ_j > tol·Tr, zero elsewhere."""
    s = w[:, None] + w[None, :]
    keep = s > tol * max(float(np.sum(w)), 1e-300)
    out = np.zeros_like(s)
    out[keep] = 2.0 / s[keep]
    return out


def support_rank(w: np.ndarray) -> int:
    return int(np.sum(w > RANK_TOL * max(float(np.sum(w)), 1e-300)))


def sld_eigenbasis(rho, drho, tol: float = TRUNCATION_TOL, param_index: int = 0) -> SLD:
    """SLD built entry by entry in the eigenbasis of ρ.

    The kernel-kernel block is set to zero, which is the minimal-norm
    solution of the Lyapunov equation for rank-deficient states.
    """
    m = density_array(rho)
    d = check_derivative(drho, m.shape[0])
    eig = hermitian_eigen(m)
    v = eig.eigenvectors
    dm = v.conj().T @ d @ v
    lm = pair_weights(eig.eigenvalues, tol) * dm
    op = v @ lm @ v.conj().T
    return SLD(0.5 * (op + op.conj().T), param_index, tol, support_rank(eig.eigenvalues))


def qfi(rho, drho, tol: float = TRUNCATION_TOL) -> float:
    m = density_array(rho)
    d = check_derivative(drho, m.shape[0])
    eig = hermitian_eigen(m)
    v = eig.eigenvectors
    dm = v.conj().T @ d @ v
    return float(np.sum(pair_weights(eig.eigenvalues, tol) * np.abs(dm) ** 2))


def qfi_pure(psi, dpsi) -> float:
    """4(<∂ψ|∂ψ> - |<ψ|∂ψ>|²) for a normalized state vector."""
    psi = np.asarray(psi, dtype=complex).ravel()
    dpsi = np.asarray(dpsi, dtype=complex).ravel()
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise NotNormalized(f"state vector has norm {np.linalg.norm(psi)!r}")
    if dpsi.shape != psi.shape:
        raise ValidationError("psi and dpsi differ in length")
    overlap = np.vdot(psi, dpsi)
    return float(4.0 * (np.vdot(dpsi, dpsi).real - abs(overlap) ** 2))


@dataclass(frozen=True)
class SpectralQfi:
    total: float
    classical_part: float
    quantum_part: float


def qfi_spectral(fam: ParamFamily, theta, mu: int = 0, step: float | None = None,
                 tol: float = TRUNCATION_TOL) -> SpectralQfi:
    """QFI split into eigenvalue (classical) and eigenvector (quantum) parts.

    Eigenvalue derivatives come from central differences of the sorted
    spectrum; eigenvector derivatives from first-order perturbation theory,
    so the spectrum must be non-degenerate.
    """
    theta = fam.check_domain(theta)
    rho = fam.matrix(theta)
    eig = hermitian_eigen(rho)
    p, v = eig.eigenvalues, eig.eigenvectors
    trace = float(np.sum(p))
    if p.size > 1 and np.min(np.diff(p)) < 1e-8 * trace:
        raise DegenerateSpectrum("eigenvalue gap below 1e-8; use qfi instead")

    h = fd_step_for(theta[mu], step if step is not None else fam.fd_step)
    tp, tm = theta.copy(), theta.copy()
    tp[mu] += h
    tm[mu] -= h
    dp = (np.linalg.eigvalsh(hermitian_part(fam.matrix(tp)))
          - np.linalg.eigvalsh(hermitian_part(fam.matrix(tm)))) / (tp[mu] - tm[mu])

    dm = v.conj().T @ family_derivative(fam, theta, mu) @ v
    gap = p[None, :] - p[:, None]  # gap[k, j] = p_j - p_k
    np.fill_diagonal(gap, 1.0)
    c = dm / gap  # c[k, j] = <ψ_k|∂ψ_j>
    np.fill_diagonal(c, 0.0)

    live = p > tol * trace
    classical = float(np.sum(dp[live] ** 2 / p[live]))
    norms = np.sum(np.abs(c) ** 2, axis=0)
    overlaps = np.abs(np.diag(c)) ** 2
    quantum = 4.0 * float(np.sum(p * (norms - overlaps)))
    pp = p[:, None] * p[None, :]
    ps = p[:, None] + p[None, :]
    mask = (ps > tol * trace) & ~np.eye(p.size, dtype=bool)
    quantum -= 8.0 * float(np.sum(pp[mask] / ps[mask] * np.abs(c[mask]) ** 2))
    return SpectralQfi(classical + quantum, classical, quantum)


def optimal_measurement(sld: SLD, tol: float = 1e-9) -> list[np.ndarray]:
    """Projectors onto the SLD eigenspaces, degenerate eigenvalues grouped."""
    eig = hermitian_eigen(sld.op)
    w, v = eig.eigenvalues, eig.eigenvectors
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    groups, start = [], 0
    for k in range(1, w.size + 1):
        if k == w.size or w[k] - w[k - 1] > tol * scale:
            block = v[:, start:k]
            groups.append(block @ block.conj().T)
            start = k
    return groups
