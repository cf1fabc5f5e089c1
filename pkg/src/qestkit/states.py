"""Quantum states and parametrized families of states."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .numkit import (
    PAULI,
    DimensionMismatch,
    NotPSD,
    ValidationError,
    as_matrix,
    hermitian_eigen,
    hermitian_part,
    kron,
    max_abs,
    su_generators,
)


class DomainViolation(ValidationError):
    pass


class StepUnderflow(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


# -- density matrices -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated state: Hermitian, unit trace, PSD up to ``psd_tolerance``.

    ``dims`` records the subsystem structure; a plain state has a single
    entry equal to the matrix side.
    """

    mat: np.ndarray
    dims: tuple = ()
    psd_tolerance: float = 1e-10

    def __post_init__(self):
        m = hermitian_part(self.mat, name="density matrix")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-10:
            raise NotNormalized(f"trace {tr!r} differs from 1")
        w = np.linalg.eigvalsh(m)
        if w[0] < -self.psd_tolerance:
            raise NotPSD(f"eigenvalue {w[0]:.3e} below -{self.psd_tolerance:.1e}")
        dims = tuple(int(d) for d in self.dims) or (m.shape[0],)
        if int(np.prod(dims)) != m.shape[0]:
            raise DimensionMismatch(f"dims {dims} do not multiply to {m.shape[0]}")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def is_pure(self, tol: float = 1e-10) -> bool:
        return abs(np.trace(self.mat @ self.mat).real - 1.0) <= tol


def density_array(rho) -> np.ndarray:
    """Matrix of a DensityMatrix, or a raw array passed through as complex."""
    if isinstance(rho, DensityMatrix):
        return rho.mat
    return as_matrix(rho, "rho")


def pure_state(psi, dims: Sequence[int] = ()) -> DensityMatrix:
    psi = np.asarray(psi, dtype=complex).ravel()
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise NotNormalized("zero vector")
    psi = psi / nrm
    return DensityMatrix(np.outer(psi, psi.conj()), tuple(dims))


def maximally_mixed(d: int) -> DensityMatrix:
    return DensityMatrix(np.eye(d) / d)


# -- JSON state files -------------------------------------------------------------

def matrix_to_pairs(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def pairs_to_matrix(rows) -> np.ndarray:
    try:
        a = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"matrix is not a nested [re, im] array: {exc}") from exc
    if a.ndim != 3 or a.shape[2] != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"matrix must have shape (d, d, 2), got {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


def load_matrix_file(path) -> tuple[np.ndarray, tuple]:
    """Read ``{"dims": [...], "matrix": [[[re, im], ...], ...]}``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict) or "matrix" not in doc:
        raise ValidationError(f"{path}: missing 'matrix'")
    m = pairs_to_matrix(doc["matrix"])
    dims = tuple(int(d) for d in doc.get("dims", [m.shape[0]]))
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionMismatch(f"{path}: dims {list(dims)} do not match side {m.shape[0]}")
    return m, dims


def load_state(path) -> DensityMatrix:
    m, dims = load_matrix_file(path)
    return DensityMatrix(m, dims)


def state_document(rho: DensityMatrix) -> dict:
    return {"dims": list(rho.dims), "matrix": matrix_to_pairs(rho.mat)}


# -- families ---------------------------------------------------------------------

@dataclass(frozen=True)
class ParamFamily:
    """A map θ -> state with analytic or finite-difference derivatives.

    ``func`` returns the raw matrix for θ; ``derivative(θ, mu)`` returns
    ∂ρ/∂θ_mu when known in closed form. ``domain`` holds one open interval
    (lo, hi) per parameter, with None meaning unbounded.
    """

    n_params: int
    func: Callable[[np.ndarray], np.ndarray]
    derivative: Optional[Callable[[np.ndarray, int], np.ndarray]] = None
    fd_step: Optional[float] = None
    domain: Optional[Sequence[tuple]] = None
    dims: tuple = ()
    name: str = "family"
    param_names: tuple = ()

    def check_domain(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.n_params,):
            raise DimensionMismatch(f"{self.name} expects {self.n_params} parameters")
        if not np.all(np.isfinite(theta)):
            raise DomainViolation("non-finite parameter")
        if self.domain is not None:
            for k, (x, (lo, hi)) in enumerate(zip(theta, self.domain)):
                if (lo is not None and x <= lo) or (hi is not None and x >= hi):
                    raise DomainViolation(
                        f"parameter {k} = {float(x)!r} outside ({lo}, {hi}) for {self.name}")
        return theta

    def matrix(self, theta) -> np.ndarray:
        return np.asarray(self.func(self.check_domain(theta)), dtype=complex)

    def evaluate(self, theta) -> DensityMatrix:
        return DensityMatrix(self.matrix(theta), self.dims)

    def with_fd(self, step: float | None = None) -> "ParamFamily":
        """Copy of this family that ignores its analytic derivative."""
        return ParamFamily(self.n_params, self.func, None, step, self.domain,
                           self.dims, self.name, self.param_names)


def fd_step_for(x: float, step: float | None = None) -> float:
    return float(step) if step is not None else 1e-5 * max(1.0, abs(x))


def family_derivative(fam: ParamFamily, theta, mu: int, step: float | None = None) -> np.ndarray:
    theta = fam.check_domain(theta)
    if not 0 <= mu < fam.n_params:
        raise DimensionMismatch(f"parameter index {mu} out of range")
    if fam.derivative is not None and step is None:
        d = np.asarray(fam.derivative(theta, mu), dtype=complex)
    else:
        h = fd_step_for(theta[mu], step if step is not None else fam.fd_step)
        plus, minus = theta.copy(), theta.copy()
        plus[mu] += h
        minus[mu] -= h
        if not h > 0 or plus[mu] == theta[mu] or minus[mu] == theta[mu]:
            raise StepUnderflow(f"step {h!r} vanishes at parameter {theta[mu]!r}")
        fam.check_domain(plus)
        fam.check_domain(minus)
        d = (fam.matrix(plus) - fam.matrix(minus)) / (plus[mu] - minus[mu])
    d = hermitian_part(d, tol=1e-8, name="state derivative", atol=1e-14)
    if abs(np.trace(d)) > 2e-8 * max(1.0, max_abs(d)):
        raise ValidationError(f"state derivative has trace {np.trace(d)!r}")
    return d


def family_derivatives(fam: ParamFamily, theta, step: float | None = None) -> list[np.ndarray]:
    return [family_derivative(fam, theta, mu, step) for mu in range(fam.n_params)]


def constant_family(rho, n_params: int = 1) -> ParamFamily:
    m = density_array(rho)
    dims = rho.dims if isinstance(rho, DensityMatrix) else ()
    zero = np.zeros_like(m)
    return ParamFamily(n_params, lambda th: m, lambda th, mu: zero,
                       dims=dims, name="constant")


# -- thermal and unitary models -------------------------------------------------------

def thermal_state(H, beta: float, dims: Sequence[int] = ()) -> DensityMatrix:
    """Gibbs state exp(-βH)/Z, built in the eigenbasis of H.

    Energies are shifted so the largest exponent is zero, which keeps large
    β from overflowing.
    """
    if not np.isfinite(beta):
        raise DomainViolation("beta must be finite")
    eig = hermitian_eigen(H)
    x = -beta * eig.eigenvalues
    w = np.exp(x - x.max())
    w /= w.sum()
    v = eig.eigenvectors
    return DensityMatrix((v * w) @ v.conj().T, tuple(dims))


def thermal_family(H, dims: Sequence[int] = ()) -> ParamFamily:
    """One-parameter family θ = (β,) of Gibbs states for a fixed H."""
    H = hermitian_part(H, name="H")

    def func(th):
        return thermal_state(H, th[0]).mat

    def deriv(th, mu):
        rho = func(th)
        e = np.trace(rho @ H).real
        # ρ commutes with H, so the symmetrized product is exact
        return -0.5 * ((H - e * np.eye(len(H))) @ rho + rho @ (H - e * np.eye(len(H))))

    return ParamFamily(1, func, deriv, dims=tuple(dims), name="thermal",
                       param_names=("beta",))


def _unitary(H: np.ndarray, t: float) -> np.ndarray:
    if t == 0:
        return np.eye(len(H), dtype=complex)
    eig = hermitian_eigen(H)
    v = eig.eigenvectors
    return (v * np.exp(-1j * t * eig.eigenvalues)) @ v.conj().T


def unitary_family(rho0, H) -> ParamFamily:
    """θ ↦ exp(-iθH) ρ0 exp(iθH) with derivative -i[H, ρ_θ]."""
    m0 = density_array(rho0)
    H = hermitian_part(H, name="H")
    if H.shape != m0.shape:
        raise DimensionMismatch(f"H is {H.shape[0]}-dimensional, state is {m0.shape[0]}")
    dims = rho0.dims if isinstance(rho0, DensityMatrix) else ()

    def func(th):
        u = _unitary(H, th[0])
        return u @ m0 @ u.conj().T

    def deriv(th, mu):
        r = func(th)
        return -1j * (H @ r - r @ H)

    return ParamFamily(1, func, deriv, dims=dims, name="unitary", param_names=("theta",))


def multi_unitary_family(rho0, generators: Sequence) -> ParamFamily:
    """θ ↦ U_n(θ_n)…U_1(θ_1) ρ0 (…)† with U_k = exp(-iθ_k H_k).

    Derivatives are left to finite differences because the generators need
    not commute.
    """
    m0 = density_array(rho0)
    hs = [hermitian_part(h, name="H") for h in generators]

    def func(th):
        r = m0
        for t, h in zip(th, hs):
            u = _unitary(h, t)
            r = u @ r @ u.conj().T
        return r

    return ParamFamily(len(hs), func, None, name="multi-unitary")


# -- Bloch representation -----------------------------------------------------------

@dataclass(frozen=True)
class BlochVector:
    r: np.ndarray
    d: int = 2

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).ravel()
        if r.size != self.d * self.d - 1:
            raise DimensionMismatch(f"Bloch vector for d={self.d} needs {self.d**2 - 1} entries")
        object.__setattr__(self, "r", r)


def _bloch_scale(d: int) -> float:
    return np.sqrt(d * (d - 1) / 2.0)


def bloch_matrix(r, d: int) -> np.ndarray:
    """(1/d)(1 + c r·K) with c = √(d(d-1)/2), without validation."""
    k = su_generators(d)
    c = _bloch_scale(d)
    m = np.eye(d, dtype=complex)
    for x, g in zip(np.asarray(r, dtype=float), k):
        m = m + c * x * g
    return m / d


def bloch_to_state(b) -> DensityMatrix:
    if not isinstance(b, BlochVector):
        r = np.asarray(b, dtype=float).ravel()
        b = BlochVector(r, int(round(np.sqrt(r.size + 1))))
    return DensityMatrix(bloch_matrix(b.r, b.d))


def operator_to_bloch(m, d: int | None = None) -> np.ndarray:
    """Bloch coordinates of the traceless part of a Hermitian operator."""
    m = np.asarray(m, dtype=complex)
    d = d or m.shape[0]
    scale = d / (2.0 * _bloch_scale(d))
    return np.array([np.trace(m @ g).real * scale for g in su_generators(d)])


def state_to_bloch(rho) -> BlochVector:
    m = density_array(rho)
    return BlochVector(operator_to_bloch(m), m.shape[0])


def qubit_pure_state(theta: float, phi: float = 0.0) -> DensityMatrix:
    """cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>, Bloch vector (sinθcosφ, sinθsinφ, cosθ)."""
    return pure_state([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def qubit_sphere_family() -> ParamFamily:
    """Two-parameter pure qubit family over the polar and azimuthal angles."""
    def func(th):
        return qubit_pure_state(th[0], th[1]).mat

    def deriv(th, mu):
        t, p = th
        if mu == 0:
            dr = np.array([np.cos(t) * np.cos(p), np.cos(t) * np.sin(p), -np.sin(t)])
        else:
            dr = np.array([-np.sin(t) * np.sin(p), np.sin(t) * np.cos(p), 0.0])
        return 0.5 * sum(x * s for x, s in zip(dr, PAULI))

    return ParamFamily(2, func, deriv, name="qubit-sphere", param_names=("theta", "phi"))


# -- the qubit PVM example ----------------------------------------------------------

def qubit_pvm_model(theta: float) -> tuple[float, float]:
    """Outcome probabilities (1 ± cos(θ/2))/2 of a σ_z measurement."""
    if not 0.0 <= theta <= np.pi:
        raise DomainViolation(f"theta = {float(theta)!r} outside [0, pi]")
    c = np.cos(theta / 2)
    return (1 + c) / 2, (1 - c) / 2


def qubit_pvm_family() -> ParamFamily:
    """Pure qubit whose σ_z statistics reproduce ``qubit_pvm_model``.

    The Bloch vector is (sin(θ/2), 0, cos(θ/2)), i.e. a polar angle of θ/2.
    """
    def func(th):
        return qubit_pure_state(th[0] / 2).mat

    def deriv(th, mu):
        a = th[0] / 2
        return 0.25 * (np.cos(a) * PAULI[0] - np.sin(a) * PAULI[2])

    return ParamFamily(1, func, deriv, name="qubit-pvm", param_names=("theta",))


def sigma_z_projectors() -> list[np.ndarray]:
    return [np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)]


# -- Heisenberg XY two-qubit chain ------------------------------------------------------

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.conj().T


def heisenberg_xy_hamiltonian(J: float, B: float) -> np.ndarray:
    """J(σ+⊗σ- + σ-⊗σ+) + (B/2)(σz⊗1 + 1⊗σz) in the |00>,|01>,|10>,|11> basis."""
    hop = kron(SIGMA_PLUS, SIGMA_MINUS) + kron(SIGMA_MINUS, SIGMA_PLUS)
    zeeman = kron(PAULI[2], np.eye(2)) + kron(np.eye(2), PAULI[2])
    return J * hop + 0.5 * B * zeeman


def _xy_weights(J, B, T):
    # Gibbs weights of |00>, the two hopping modes, and |11>; energies B, J, -J, -B
    beta = 1.0 / T
    energies = np.array([B, J, -J, -B])
    x = -beta * energies
    w = np.exp(x - x.max())
    return energies, w / w.sum()


def heisenberg_xy_scalars(J: float, B: float, T: float):
    """The four entries (chi, gamma, varsigma, Pi) and their (B, T) derivatives.

    chi = ρ_00,00, Pi = ρ_11,11, gamma and varsigma are the diagonal and
    off-diagonal entries of the middle block. Returned as (values, d_B, d_T),
    each an array ordered (chi, gamma, varsigma, Pi).
    """
    if not T > 0:
        raise DomainViolation(f"temperature must be positive, got {T!r}")
    beta = 1.0 / T
    energies, p = _xy_weights(J, B, T)
    # ∂p_i = -p_i (∂(βE_i) - <∂(βE)>)
    dB_bE = beta * np.array([1.0, 0.0, 0.0, -1.0])
    dT_bE = -energies / T**2
    dp_B = -p * (dB_bE - p @ dB_bE)
    dp_T = -p * (dT_bE - p @ dT_bE)

    def pack(q):
        # q ordered by energy levels (00, +J, -J, 11)
        return np.array([q[0], 0.5 * (q[1] + q[2]), 0.5 * (q[1] - q[2]), q[3]])

    return pack(p), pack(dp_B), pack(dp_T)


def _xy_matrix(s) -> np.ndarray:
    chi, gam, vs, pi = s
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0], m[3, 3] = chi, pi
    m[1, 1] = m[2, 2] = gam
    m[1, 2] = m[2, 1] = vs
    return m


def heisenberg_xy_state(J: float, B: float, T: float) -> DensityMatrix:
    vals, _, _ = heisenberg_xy_scalars(J, B, T)
    return DensityMatrix(_xy_matrix(vals), (2, 2))


def heisenberg_xy_family(J: float) -> ParamFamily:
    """Thermal two-qubit XY chain as a family over θ = (B, T)."""
    if J == 0:
        raise DomainViolation("coupling J must be nonzero")

    def func(th):
        return _xy_matrix(heisenberg_xy_scalars(J, th[0], th[1])[0])

    def deriv(th, mu):
        _, dB, dT = heisenberg_xy_scalars(J, th[0], th[1])
        return _xy_matrix(dB if mu == 0 else dT)

    return ParamFamily(2, func, deriv, domain=[(None, None), (0.0, None)], dims=(2, 2),
                       name="heisenberg-xy", param_names=("B", "T"))


# -- finite-difference stencils from files -------------------------------------------

def stencil_family(center, plus: Sequence, minus: Sequence, step: float) -> ParamFamily:
    """Family known only at θ0 and θ0 ± h e_mu, parametrized so θ0 = 0.

    Only θ = 0 can be evaluated; derivatives are central differences of the
    supplied neighbour states.
    """
    if len(plus) != len(minus) or not plus:
        raise ValidationError("need matching plus/minus states for every parameter")
    if not step > 0:
        raise ValidationError("stencil step must be positive")
    c = density_array(center)
    ps = [density_array(p) for p in plus]
    ms = [density_array(m) for m in minus]
    for m in ps + ms:
        if m.shape != c.shape:
            raise DimensionMismatch("stencil states differ in dimension")
    dims = center.dims if isinstance(center, DensityMatrix) else ()
    n = len(ps)

    def func(th):
        if np.any(th != 0):
            raise DomainViolation("stencil family is only known at its centre point")
        return c

    def deriv(th, mu):
        func(th)
        return (ps[mu] - ms[mu]) / (2 * step)

    return ParamFamily(n, func, deriv, dims=dims, name="stencil")
