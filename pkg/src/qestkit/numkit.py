"""Dense complex linear algebra kernel.

Everything here is a thin, validated layer over numpy: Hermitian
eigendecomposition, PSD square roots, Kronecker products, column-stacking
vectorization, partial traces and the generalized Gell-Mann generators.
The exception hierarchy shared by the whole package also lives here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np

MAX_SIDE = 2**10


# -- errors -----------------------------------------------------------------

class QestError(Exception):
    """Base class for every error raised by qestkit."""


class ValidationError(QestError, ValueError):
    """Input violates a precondition (maps to CLI exit code 2)."""


class NumericalError(QestError, ArithmeticError):
    """A computation could not be completed reliably (CLI exit code 3)."""


class NotSquare(ValidationError):
    pass


class NotHermitian(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class NonFiniteEntries(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class DimensionTooLarge(ValidationError):
    pass


class ConvergenceFailure(NumericalError):
    pass


# -- helpers ------------------------------------------------------------------

def max_abs(m) -> float:
    """Entrywise max-modulus norm, used for every relative tolerance."""
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite complex square 2-D array within the size cap."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquare(f"{name} must be square, got shape {a.shape}")
    if a.shape[0] > MAX_SIDE:
        raise DimensionTooLarge(f"{name} side {a.shape[0]} exceeds cap {MAX_SIDE}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteEntries(f"{name} has NaN or Inf entries")
    return a


def hermitian_part(m, tol: float = 1e-10, name: str = "matrix", atol: float = 0.0) -> np.ndarray:
    """Return (M + M†)/2 after checking M is Hermitian within tol·‖M‖ + atol."""
    a = as_matrix(m, name)
    if max_abs(a - a.conj().T) > tol * max_abs(a) + atol:
        raise NotHermitian(f"{name} is not Hermitian")
    return (a + a.conj().T) / 2


# -- eigen ----------------------------------------------------------------------

@dataclass(frozen=True)
class HermitianEigen:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eigen(m) -> HermitianEigen:
    """Ascending eigendecomposition of a Hermitian matrix.

    The input is symmetrized before the LAPACK call, so asymmetry below
    1e-10 relative is silently removed while anything larger raises
    NotHermitian.
    """
    h = hermitian_part(m)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceFailure(str(exc)) from exc
    return HermitianEigen(w, v)


def matrix_sqrt_psd(m, clip: float | None = None, floor: float = 0.0) -> np.ndarray:
    """PSD square root; eigenvalues at or below `floor` are treated as exact zeros."""
    eig = hermitian_eigen(m)
    if clip is None:
        clip = 1e-10 * max(abs(float(np.sum(eig.eigenvalues))), 1e-300)
    if eig.eigenvalues.size and eig.eigenvalues[0] < -clip:
        raise NotPSD(f"eigenvalue {eig.eigenvalues[0]:.3e} below -{clip:.1e}")
    w = eig.eigenvalues
    root = np.sqrt(np.where(w > floor, w, 0.0))
    v = eig.eigenvectors
    return (v * root) @ v.conj().T


# -- tensor plumbing ------------------------------------------------------------

def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(mats: Sequence) -> np.ndarray:
    return reduce(kron, mats)


def vec(a) -> np.ndarray:
    """Column-stacking: [[1,2],[3,4]] -> (1,3,2,4)."""
    a = as_matrix(a)
    return a.reshape(-1, order="F")


def unvec(v, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise DimensionMismatch(f"length {v.size} is not a square")
    return v.reshape((dim, dim), order="F")


def _check_dims(m: np.ndarray, dims: Sequence[int]) -> list[int]:
    dims = [int(d) for d in dims]
    if not dims or any(d < 1 for d in dims):
        raise DimensionMismatch(f"bad subsystem dimensions {dims}")
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not multiply to {m.shape[0]}")
    return dims


def partial_trace(m, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems stay in their original order. Passing an empty ``keep``
    is rejected; use ``np.trace`` for the full trace.
    """
    a = as_matrix(m)
    dims = _check_dims(a, dims)
    keep = sorted({int(k) for k in np.atleast_1d(keep)})
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise DimensionMismatch(f"keep={keep} invalid for {len(dims)} subsystems")
    n = len(dims)
    t = a.reshape(dims + dims)
    # einsum labels: row index i_k, column index j_k; traced ones share a label
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = [letters[n + k] if k in keep else rows[k] for k in range(n)]
    out = [rows[k] for k in keep] + [cols[k] for k in keep]
    r = np.einsum("".join(rows + cols) + "->" + "".join(out), t)
    side = int(np.prod([dims[k] for k in keep]))
    return r.reshape(side, side)


def embed_local(op, dims: Sequence[int], position: int) -> np.ndarray:
    op = as_matrix(op, "op")
    dims = [int(d) for d in dims]
    if not 0 <= position < len(dims):
        raise DimensionMismatch(f"position {position} outside {len(dims)} subsystems")
    if op.shape[0] != dims[position]:
        raise DimensionMismatch(
            f"operator side {op.shape[0]} != dims[{position}] = {dims[position]}")
    return kron_all([op if k == position else np.eye(d) for k, d in enumerate(dims)])


# -- generators -----------------------------------------------------------------

@lru_cache(maxsize=None)
def _generators(d: int) -> tuple:
    sym, diag = [], []
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1.0
            a = np.zeros((d, d), dtype=complex)
            a[j, k], a[k, j] = -1j, 1j
            sym.extend([s, a])
    for l in range(1, d):
        g = np.zeros((d, d), dtype=complex)
        g[np.arange(l), np.arange(l)] = 1.0
        g[l, l] = -l
        diag.append(g * np.sqrt(2.0 / (l * (l + 1))))
    mats = sym + diag
    for g in mats:
        g.setflags(write=False)
    return tuple(mats)


def su_generators(d: int) -> list[np.ndarray]:
    """Generalized Gell-Mann matrices with Tr(K_i K_j) = 2 δ_ij.

    Off-diagonal pairs come first (symmetric then antisymmetric for each
    j < k), followed by the d-1 diagonal ones, so d = 2 yields the Pauli
    matrices in x, y, z order.
    """
    if d < 2:
        raise DimensionMismatch("need d >= 2")
    return [g.copy() for g in _generators(int(d))]


@lru_cache(maxsize=None)
def _sym_structure(d: int) -> np.ndarray:
    k = _generators(d)
    stack = np.array(k)
    prod = np.einsum("iab,jbc->ijac", stack, stack)
    anti = prod + prod.transpose(1, 0, 2, 3)
    v = 0.5 * np.einsum("ijab,mba->ijm", anti, stack).real
    v.setflags(write=False)
    return v


def symmetric_structure(d: int) -> np.ndarray:
    """Array v[i, j, m] = Tr({K_i, K_j} K_m) / 2 for the Gell-Mann set."""
    return _sym_structure(int(d)).copy()


PAULI = tuple(_generators(2))
