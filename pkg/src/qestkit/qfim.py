"""Multiparameter quantum estimation.

Four routes to the quantum Fisher information matrix are provided:

* eigendecomposition of ρ with support truncation,
* Bloch-vector formulas (qubit and general dimension),
* two-qubit X states via their two 2×2 blocks,
* vectorization, where the SLD equation becomes a linear solve in
  Liouville space, optionally regularized for rank-deficient states.

Reports also carry the mean Uhlmann curvature, the quantumness of the
model and the matrix Cramér-Rao bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .classical import SingularFim, inverse_or_pinv
from .numkit import (
    DimensionMismatch,
    NumericalError,
    ValidationError,
    hermitian_eigen,
    kron,
    max_abs,
    symmetric_structure,
    unvec,
    vec,
)
from .qfi import (
    RANK_TOL,
    SLD,
    TRUNCATION_TOL,
    check_derivative,
    pair_weights,
    sld_eigenbasis,
    support_rank,
)
from .states import (
    DomainViolation,
    ParamFamily,
    bloch_matrix,
    density_array,
    family_derivatives,
    operator_to_bloch,
)

DEFAULT_SCHEDULE = (1e-4, 5e-5, 2.5e-5)


class RankDeficient(NumericalError):
    pass


class SolveFailure(NumericalError):
    pass


class ExtrapolationUnstable(NumericalError):
    pass


class NotXState(ValidationError):
    pass


class BlochNormExceeded(ValidationError):
    pass


class NotPSDState(ValidationError):
    pass


class RangeViolation(NumericalError):
    pass


# -- reports ------------------------------------------------------------------------

@dataclass(frozen=True)
class QuantumnessResult:
    value: float
    raw: float
    pseudo_inverse: bool
    two_parameter_form: float | None = None


@dataclass(frozen=True)
class QfimReport:
    fim: np.ndarray
    slds: list
    crb: np.ndarray
    crb_pseudo_inverse: bool
    uhlmann: np.ndarray
    quantumness: float
    method: str
    tolerances: dict
    warnings: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_params(self) -> int:
        return self.fim.shape[0]


@dataclass(frozen=True)
class CrbBounds:
    variances: np.ndarray
    covariance: np.ndarray
    pseudo_inverse: bool
    n_trials: int


def _symmetrize(f: np.ndarray) -> np.ndarray:
    f = np.real_if_close(np.asarray(f), tol=1e6).real
    return 0.5 * (f + f.T)


def uhlmann_matrix(rho, slds) -> np.ndarray:
    """U_{μν} = -(i/4) Tr(ρ [L_μ, L_ν]), a real antisymmetric matrix."""
    m = density_array(rho)
    ops = [s.op if isinstance(s, SLD) else np.asarray(s, dtype=complex) for s in slds]
    n = len(ops)
    u = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            comm = ops[a] @ ops[b] - ops[b] @ ops[a]
            val = (-0.25j * np.trace(m @ comm)).real
            u[a, b], u[b, a] = val, -val
    return u


def quantumness_details(fim, uhlmann, strict: bool = False) -> QuantumnessResult:
    """Spectral radius of 2i F⁻¹ U, checked against the n = 2 closed form.

    A singular F falls back to its pseudo-inverse (flagged) unless
    ``strict`` is set. Values above 1 by more than 1e-6 raise
    RangeViolation; smaller excursions are clamped.
    """
    f = _symmetrize(fim)
    u = np.asarray(uhlmann, dtype=float)
    n = f.shape[0]
    if u.shape != (n, n):
        raise DimensionMismatch("Fisher and Uhlmann matrices differ in shape")
    inv, pinv = inverse_or_pinv(f)
    if pinv and strict:
        raise SingularFim("Fisher matrix is singular")
    if pinv:
        z = 2j * inv @ u
    else:
        z = 2j * np.linalg.solve(f, u)
    raw = float(np.max(np.abs(np.linalg.eigvals(z)))) if n else 0.0
    two = None
    if n == 2 and not pinv:
        two = float(np.sqrt(max(np.linalg.det(2 * u), 0.0) / np.linalg.det(f)))
        if abs(two - raw) > 1e-8 * max(1.0, raw):
            raise NumericalError(
                f"quantumness forms disagree: spectral {raw!r} vs determinant {two!r}")
    if raw > 1 + 1e-6:
        raise RangeViolation(f"quantumness {raw!r} exceeds 1")
    return QuantumnessResult(min(max(raw, 0.0), 1.0), raw, pinv, two)


def quantumness(fim, uhlmann) -> float:
    return quantumness_details(fim, uhlmann).value


def crb_matrix(report: QfimReport, n_trials: int = 1) -> CrbBounds:
    """Var(θ_μ) >= [F⁻¹]_{μμ} / n_trials."""
    if n_trials < 1:
        raise ValidationError("n_trials must be at least 1")
    inv, pinv = inverse_or_pinv(report.fim)
    cov = inv / n_trials
    return CrbBounds(np.diag(cov).copy(), cov, pinv, n_trials)


def build_report(rho, fim, slds, method: str, tolerances: dict,
                 diagnostics: dict | None = None) -> QfimReport:
    fim = _symmetrize(fim)
    warnings = []
    u = uhlmann_matrix(rho, slds)
    q = quantumness_details(fim, u)
    if q.pseudo_inverse:
        warnings.append("Fisher matrix singular; pseudo-inverse used")
    if q.raw != q.value:
        warnings.append(f"quantumness {q.raw!r} clamped to {q.value!r}")
    inv, pinv = inverse_or_pinv(fim)
    diag = dict(diagnostics or {})
    diag["quantumness_raw"] = q.raw
    if q.two_parameter_form is not None:
        diag["quantumness_two_parameter_form"] = q.two_parameter_form
    return QfimReport(fim, list(slds), inv, pinv, u, q.value, method,
                      dict(tolerances), warnings, diag)


# -- eigendecomposition route ------------------------------------------------------

def _eigen_fim(m: np.ndarray, drhos: list, tol: float):
    eig = hermitian_eigen(m)
    v = eig.eigenvectors
    wts = pair_weights(eig.eigenvalues, tol)
    dms = [v.conj().T @ d @ v for d in drhos]
    n = len(dms)
    f = np.zeros((n, n))
    for a in range(n):
        for b in range(a, n):
            # Re(<i|∂_a|j><j|∂_b|i>) summed with 2/(λ_i+λ_j) weights
            val = float(np.sum(wts * (dms[a] * dms[b].T).real))
            f[a, b] = f[b, a] = val
    slds = []
    for k, dm in enumerate(dms):
        op = v @ (wts * dm) @ v.conj().T
        slds.append(SLD(0.5 * (op + op.conj().T), k, tol, support_rank(eig.eigenvalues)))
    return f, slds


def qfim_eigen_at(rho, drhos, tol: float = TRUNCATION_TOL) -> QfimReport:
    m = density_array(rho)
    ds = [check_derivative(d, m.shape[0]) for d in drhos]
    f, slds = _eigen_fim(m, ds, tol)
    return build_report(m, f, slds, "eigen", {"truncation": tol})


def qfim_eigen(fam: ParamFamily, theta, tol: float = TRUNCATION_TOL,
               step: float | None = None) -> QfimReport:
    """QFIM from the spectral decomposition of ρ_θ with support truncation."""
    m = fam.evaluate(theta).mat
    return qfim_eigen_at(m, family_derivatives(fam, theta, step), tol)


# -- Bloch route ---------------------------------------------------------------------

def bloch_inputs(fam: ParamFamily, theta, step: float | None = None):
    """Bloch vector of ρ_θ and the rows ∂_μ r, in the package normalization."""
    m = fam.evaluate(theta).mat
    d = m.shape[0]
    r = operator_to_bloch(m, d)
    dr = np.array([operator_to_bloch(x, d) for x in family_derivatives(fam, theta, step)])
    return r, dr


def qfim_bloch_qubit(r, dr) -> np.ndarray:
    """∂r·∂r + (r·∂r)(r·∂r)/(1-|r|²), dropping the second term for pure states."""
    r = np.asarray(r, dtype=float).ravel()
    dr = np.atleast_2d(np.asarray(dr, dtype=float))
    if r.size != 3 or dr.shape[1] != 3:
        raise DimensionMismatch("qubit Bloch vectors have three components")
    norm = np.linalg.norm(r)
    if norm > 1 + 1e-10:
        raise BlochNormExceeded(f"|r| = {norm!r} > 1")
    f = dr @ dr.T
    if abs(1 - norm) > 1e-10:
        proj = dr @ r
        f = f + np.outer(proj, proj) / (1 - norm**2)
    return _symmetrize(f)


def bloch_g_matrix(r, d: int) -> np.ndarray:
    """G_ij = (2/d) δ_ij + √((d-1)/(2d)) Σ_m v_ijm r_m, with v from the generators."""
    r = np.asarray(r, dtype=float).ravel()
    v = symmetric_structure(d)
    return 2.0 / d * np.eye(d * d - 1) + np.sqrt((d - 1) / (2.0 * d)) * (v @ r)


def qfim_bloch_general(r, dr, d: int, form: str = "direct") -> np.ndarray:
    """Bloch-vector QFIM in dimension d.

    ``form="direct"`` contracts ∂r with the kernel A = d/(2(d-1))·G - r rᵀ
    directly, F_μν = ∂_νrᵀ A ∂_μr. ``form="inverse"`` uses A⁻¹ instead,
    which is the form that reduces to ``qfim_bloch_qubit`` at d = 2 and
    agrees with ``qfim_eigen`` for every full-rank state. The two differ in
    general; tests record by how much.
    """
    r = np.asarray(r, dtype=float).ravel()
    dr = np.atleast_2d(np.asarray(dr, dtype=float))
    n = d * d - 1
    if r.size != n or dr.shape[1] != n:
        raise DimensionMismatch(f"Bloch vectors for d={d} need {n} components")
    w = np.linalg.eigvalsh(bloch_matrix(r, d))
    if w[0] <= RANK_TOL:
        raise NotPSDState(f"Bloch vector gives minimum eigenvalue {w[0]:.3e}; need full rank")
    a = d / (2.0 * (d - 1)) * bloch_g_matrix(r, d) - np.outer(r, r)
    if form == "direct":
        f = dr @ a @ dr.T
    elif form == "inverse":
        f = dr @ np.linalg.solve(a, dr.T)
    else:
        raise ValidationError(f"unknown form {form!r}")
    return _symmetrize(f)


def _bloch_slds(fam, theta, step, tol):
    m = fam.evaluate(theta).mat
    ds = family_derivatives(fam, theta, step)
    return m, [sld_eigenbasis(m, d, tol, k) for k, d in enumerate(ds)]


def qfim_bloch_report(fam: ParamFamily, theta, tol: float = TRUNCATION_TOL,
                      step: float | None = None) -> QfimReport:
    """Report whose matrix comes from the qubit Bloch formula.

    SLDs, needed for the Uhlmann curvature, come from the eigenbasis.
    """
    r, dr = bloch_inputs(fam, theta, step)
    if r.size != 3:
        raise DimensionMismatch("the Bloch report route is implemented for qubits")
    f = qfim_bloch_qubit(r, dr)
    m, slds = _bloch_slds(fam, theta, step, tol)
    return build_report(m, f, slds, "bloch", {"truncation": tol, "pure_branch": 1e-10})


# -- vectorization route ---------------------------------------------------------------

def superoperator(m: np.ndarray, placement: str) -> np.ndarray:
    """Liouville-space matrix of X -> ρX + Xρ under column stacking candidates.

    ``"column"`` is 1⊗ρ + ρ*⊗1, ``"swapped"`` is ρ⊗1 + 1⊗ρ*.
    """
    eye = np.eye(m.shape[0])
    if placement == "column":
        return kron(eye, m) + kron(m.conj(), eye)
    if placement == "swapped":
        return kron(m, eye) + kron(eye, m.conj())
    raise ValidationError(f"unknown placement {placement!r}")


def _solve_fim(m: np.ndarray, drhos: list, placement: str):
    d = m.shape[0]
    s = superoperator(m, placement)
    rhs = np.column_stack([vec(x) for x in drhos]) if drhos else np.zeros((d * d, 0))
    try:
        x = np.linalg.solve(s, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SolveFailure("non-finite solution of the Liouville-space system")
    lv = 2.0 * x
    f = (rhs.conj().T @ lv).real
    ops = []
    for k in range(len(drhos)):
        op = unvec(lv[:, k], d)
        ops.append(0.5 * (op + op.conj().T))
    return _symmetrize(f), ops


@lru_cache(maxsize=1)
def superoperator_placement() -> str:
    """Pick the Kronecker placement that reproduces the eigen route.

    Runs once on a fixed random complex qutrit; exactly one placement must
    agree, otherwise the build is broken and an error is raised.
    """
    rng = np.random.default_rng(20240611)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    m = a @ a.conj().T + 0.1 * np.eye(3)
    m /= np.trace(m).real
    h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = h + h.conj().T
    dr = -1j * (h @ m - m @ h)
    ref, _ = _eigen_fim(m, [dr], TRUNCATION_TOL)
    ok = []
    for placement in ("column", "swapped"):
        f, _ = _solve_fim(m, [dr], placement)
        if abs(f[0, 0] - ref[0, 0]) <= 1e-10 * (1 + abs(ref[0, 0])):
            ok.append(placement)
    if len(ok) != 1:
        raise RuntimeError(f"superoperator self-test failed: matching placements {ok}")
    return ok[0]


PLACEMENT = superoperator_placement()


def qfim_vectorized(rho, drhos, tol: float = TRUNCATION_TOL) -> QfimReport:
    """QFIM from F = 2 vec[∂_μρ]† S⁻¹ vec[∂_νρ] with S the anticommutator map.

    Requires a full-rank state; the SLDs are read off the same solves.
    """
    m = density_array(rho)
    ds = [check_derivative(d, m.shape[0]) for d in drhos]
    w = np.linalg.eigvalsh(m)
    trace = float(np.sum(w))
    if w[0] <= RANK_TOL * trace:
        raise RankDeficient(f"minimum eigenvalue {w[0]:.3e} not above {RANK_TOL:g}·Tr")
    f, ops = _solve_fim(m, ds, PLACEMENT)
    slds = [SLD(op, k, tol, m.shape[0]) for k, op in enumerate(ops)]
    return build_report(m, f, slds, "vectorized",
                        {"rank": RANK_TOL, "placement": PLACEMENT})


def qfim_vectorized_regularized(rho, drhos, s_schedule=DEFAULT_SCHEDULE,
                                tol: float = TRUNCATION_TOL) -> QfimReport:
    """Vectorized QFIM for possibly rank-deficient states.

    ρ is mixed with white noise, ρ_s = (1-s)ρ + s/d, the solve is repeated
    over ``s_schedule`` and the two smallest s are extrapolated linearly to
    s = 0. The largest s only monitors the residual: the successive
    differences must keep one sign, else ExtrapolationUnstable.
    """
    m = density_array(rho)
    d = m.shape[0]
    ds = [check_derivative(x, d) for x in drhos]
    sched = sorted((float(s) for s in s_schedule), reverse=True)
    if len(sched) < 3 or not all(0 < s < 1 for s in sched) or len(set(sched)) != len(sched):
        raise ValidationError("need at least three distinct s values in (0, 1)")
    fs, ls = [], []
    for s in sched:
        ms = (1 - s) * m + s / d * np.eye(d)
        f, ops = _solve_fim(ms, [(1 - s) * x for x in ds], PLACEMENT)
        fs.append(f)
        ls.append(ops)
    s1, s2, s3 = sched[-3:]
    f1, f2, f3 = fs[-3:]
    c2, c3 = s2 / (s2 - s3), s3 / (s2 - s3)
    f0 = c2 * f3 - c3 * f2
    ops0 = [c2 * a - c3 * b for a, b in zip(ls[-1], ls[-2])]

    d12, d23 = f1 - f2, f2 - f3
    floor = 1e-9 * (1 + max_abs(f0))
    flips = (np.abs(d12) > floor) & (np.abs(d23) > floor) & (np.sign(d12) != np.sign(d23))
    if np.any(flips):
        raise ExtrapolationUnstable("regularized QFIM is not monotone in s")
    slope = (f2 - f3) / (s2 - s3)
    residual = float(max_abs(f1 - (f0 + slope * s1)))

    slds = [SLD(0.5 * (op + op.conj().T), k, tol, support_rank(np.linalg.eigvalsh(m)))
            for k, op in enumerate(ops0)]
    return build_report(m, f0, slds, "vectorized-regularized",
                        {"schedule": list(sched), "placement": PLACEMENT},
                        {"extrapolation_residual": residual})


# -- X-state route ---------------------------------------------------------------------

X_BLOCKS = ((0, 3), (1, 2))


def _x_pattern_ok(m: np.ndarray, tol: float = 1e-12) -> bool:
    mask = np.ones((4, 4), dtype=bool)
    for i in range(4):
        mask[i, i] = mask[i, 3 - i] = False
    return bool(np.all(np.abs(m[mask]) <= tol * max(1.0, max_abs(m))))


def _block_eigenpairs(b: np.ndarray):
    """Eigenvalues (λ+, λ-) and eigenvectors of a 2×2 Hermitian block.

    The eigenvector closed form (Tr(bσz) ± √(Tr² - 4 det), 2 Tr(bσ+)),
    normalized, is evaluated for the sign that avoids cancellation; its
    partner follows by orthogonality.
    """
    tr = float(np.trace(b).real)
    det = float(np.linalg.det(b).real)
    z = float((b[0, 0] - b[1, 1]).real)
    lower = b[1, 0]  # Tr(b σ+) with σ+ = |0><1|
    root = np.sqrt(max(tr * tr - 4 * det, 0.0))
    lam = np.array([(tr + root) / 2, (tr - root) / 2])
    sign = 1.0 if z >= 0 else -1.0
    t = z + sign * root
    u = np.array([t, 2 * lower], dtype=complex)
    nu = np.linalg.norm(u)
    if nu == 0:
        u = np.array([1.0, 0.0], dtype=complex)
    else:
        u = u / nu
    partner = np.array([-u[1].conj(), u[0].conj()])
    vp, vm = (u, partner) if sign > 0 else (partner, u)
    return lam, vp, vm


def qfim_xstate(fam: ParamFamily, theta, tol: float = TRUNCATION_TOL,
                step: float | None = None) -> QfimReport:
    """QFIM of a two-qubit X-state family from its two 2×2 blocks.

    Each block contributes its eigenvalue (classical) term, the λ-weighted
    pure-state QFIMs of its two eigenvectors, and the -16 det/Tr cross term.
    """
    m = fam.evaluate(theta).mat
    if m.shape != (4, 4):
        raise NotXState("X-state route needs a two-qubit state")
    ds = family_derivatives(fam, theta, step)
    for x in [m] + ds:
        if not _x_pattern_ok(x):
            raise NotXState("state or derivative leaves the X pattern")
    n = len(ds)
    total_trace = float(np.trace(m).real)
    f = np.zeros((n, n))
    for idx in X_BLOCKS:
        blk = m[np.ix_(idx, idx)]
        dblk = [x[np.ix_(idx, idx)] for x in ds]
        lam, vp, vm = _block_eigenpairs(blk)
        tr, det = lam.sum(), lam[0] * lam[1]
        if tr <= tol * total_trace:
            continue
        dl = np.array([[np.vdot(v, db @ v).real for v in (vp, vm)] for db in dblk])
        live = lam > tol * total_trace
        f += (dl[:, live] / lam[live]) @ dl[:, live].T
        mix = np.array([np.vdot(vm, db @ vp) for db in dblk])  # <ϑ-|∂ρ|ϑ+>
        gap = lam[0] - lam[1]
        if gap > tol * total_trace:
            c = mix / gap  # ∂ϑ+ = c ϑ-, ∂ϑ- = -c* ϑ+
            pure = 4 * np.real(np.outer(c.conj(), c))
            f += lam[0] * pure + lam[1] * pure - 16 * det / tr * np.real(np.outer(c.conj(), c))
        else:
            # equal eigenvalues: the same cross term written without the gap
            f += 4 * np.real(np.outer(mix.conj(), mix)) / tr
    slds = [sld_eigenbasis(m, x, tol, k) for k, x in enumerate(ds)]
    return build_report(m, f, slds, "xstate", {"truncation": tol, "x_pattern": 1e-12})


# -- Heisenberg XY closed forms -----------------------------------------------------------

@dataclass(frozen=True)
class HeisenbergOracle:
    """Closed-form quantities of the thermal two-qubit XY chain in (B, T).

    Every field is the literal closed-form expression, including the block
    entries of the inverse Liouville-space matrix and the SLD matrices
    built from them; nothing is corrected against the numerics.
    Parameter order is (B, T).
    """

    J: float
    B: float
    T: float
    chi: float
    Pi: float
    varsigma: float
    gamma: float
    d_chi: tuple
    d_Pi: tuple
    d_varsigma: tuple
    d_gamma: tuple
    alpha: float
    xi: float
    delta: float
    lam: float
    tau: float
    kappa: float
    eta: float
    vartheta: float
    mu: float
    varpi: float
    F_TT: float
    F_BB: float
    F_BT: float
    var_min_T: float
    var_min_B: float

    def fim(self) -> np.ndarray:
        return np.array([[self.F_BB, self.F_BT], [self.F_BT, self.F_TT]])

    def density_matrix(self) -> np.ndarray:
        m = np.zeros((4, 4))
        m[0, 0], m[3, 3] = self.chi, self.Pi
        m[1, 1] = m[2, 2] = self.gamma
        m[1, 2] = m[2, 1] = self.varsigma
        return m

    def gamma_inverse(self) -> np.ndarray:
        """The 16×16 block matrix given for (ρ⊗1 + 1⊗ρ*)⁻¹."""
        def blk(a, b, c, e):
            return np.array([[a, 0, 0, 0], [0, b, c, 0], [0, c, b, 0], [0, 0, 0, e]])

        g11 = blk(self.alpha, self.xi, self.delta, self.lam)
        g22 = blk(self.xi, self.kappa, self.eta, self.vartheta)
        g44 = blk(self.lam, self.vartheta, self.tau, self.alpha)
        g23 = blk(self.mu, self.eta, self.varpi, self.tau)
        z = np.zeros((4, 4))
        return np.block([[g11, z, z, z], [z, g22, g23, z], [z, g23, g22, z], [z, z, z, g44]])

    def vec_derivative(self, param: str) -> np.ndarray:
        k = {"B": 0, "T": 1}[param]
        out = np.zeros(16)
        out[0] = self.d_chi[k]
        out[5] = out[10] = self.d_gamma[k]
        out[6] = out[9] = self.d_varsigma[k]
        out[15] = self.d_Pi[k]
        return out

    def sld(self, param: str) -> np.ndarray:
        """Closed-form SLD matrix for ``param`` in {"B", "T"}."""
        k = {"B": 0, "T": 1}[param]
        dchi, dpi = self.d_chi[k], self.d_Pi[k]
        dg, ds = self.d_gamma[k], self.d_varsigma[k]
        a = (self.kappa + self.varpi) * dg + 2 * self.eta * ds
        b = (self.kappa + self.varpi) * ds + 2 * self.eta * dg
        return 2 * np.array([[self.alpha * dchi, 0, 0, 0],
                             [0, a, b, 0],
                             [0, b, a, 0],
                             [0, 0, 0, self.alpha * dpi]])


def _quotient(num, dnum, den, dden):
    return (dnum * den - num * dden) / den**2


def heisenberg_oracle(J: float, B: float, T: float) -> HeisenbergOracle:
    if not T > 0:
        raise DomainViolation(f"temperature must be positive, got {T!r}")
    if J == 0:
        raise DomainViolation("coupling J must be nonzero")
    beta = 1.0 / T
    u, v = beta * B, beta * J
    ch, sh = np.cosh, np.sinh
    c = ch(u) + ch(v)
    eu, e2u = np.exp(u), np.exp(2 * u)

    chi = np.exp(-u) / (2 * c)
    Pi = eu / (2 * c)
    vs = -sh(v) / (2 * c)
    gm = ch(v) / (2 * c)

    # derivatives of u = B/T and v = J/T with respect to (B, T)
    du = (beta, -B / T**2)
    dv = (0.0, -J / T**2)
    d = {"chi": [], "Pi": [], "vs": [], "gm": []}
    for k in range(2):
        dc = sh(u) * du[k] + sh(v) * dv[k]
        d["chi"].append(_quotient(np.exp(-u), -np.exp(-u) * du[k], 2 * c, 2 * dc))
        d["Pi"].append(_quotient(eu, eu * du[k], 2 * c, 2 * dc))
        d["vs"].append(_quotient(-sh(v), -ch(v) * dv[k], 2 * c, 2 * dc))
        d["gm"].append(_quotient(ch(v), sh(v) * dv[k], 2 * c, 2 * dc))

    alpha = eu * c
    xi = 1 + eu * ch(v)
    delta = eu * sh(v)
    lam = 1 + ch(v) / ch(u)
    tau = (ch(u) - sh(u)) * sh(v)
    kappa = 0.25 * c * (3 + ch(2 * v)) / ch(v)
    eta = 0.5 * c * sh(v)
    vartheta = 1 + np.exp(-u) * ch(v)
    mu = eu * sh(v)
    varpi = 0.5 * c * np.tanh(v) * sh(v)

    big = 1 + e2u + 2 * eu * ch(v)
    bracket = ((1 + e2u) * (B**2 + J**2) * ch(v)
               + 2 * (eu * (B**2 + J**2) - B * (-1 + e2u) * J * sh(v)))
    F_TT = np.exp(-2 * u) * big / (4 * T**4 * c**3) * bracket
    F_BB = 2 * eu * (2 * eu + (1 + e2u) * ch(v)) / (T**2 * big**2)
    F_BT = (2 * eu * (2 * B * eu + B * (1 + e2u) * ch(v) - (-1 + e2u) * J * sh(v))
            / (T**3 * big**2))
    var_T = np.exp(-u) * T**4 * (2 * eu + (1 + e2u) * ch(v)) / (2 * J**2)
    var_B = np.exp(-4 * u) * T**2 * big**3 / (16 * J**2 * c**3) * bracket

    return HeisenbergOracle(
        J=J, B=B, T=T, chi=chi, Pi=Pi, varsigma=vs, gamma=gm,
        d_chi=tuple(d["chi"]), d_Pi=tuple(d["Pi"]),
        d_varsigma=tuple(d["vs"]), d_gamma=tuple(d["gm"]),
        alpha=alpha, xi=xi, delta=delta, lam=lam, tau=tau, kappa=kappa,
        eta=eta, vartheta=vartheta, mu=mu, varpi=varpi,
        F_TT=F_TT, F_BB=F_BB, F_BT=F_BT, var_min_T=var_T, var_min_B=var_B)
