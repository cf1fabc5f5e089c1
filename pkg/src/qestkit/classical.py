"""Classical estimation: score, Fisher information and Cramér-Rao bounds."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .numkit import NumericalError, ValidationError, hermitian_part, max_abs
from .states import DomainViolation, ParamFamily, family_derivative, fd_step_for

SKIP_PROB = 1e-15
REGULARITY_TOL = 1e-6


class ZeroProbability(ValidationError):
    pass


class RegularityViolation(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class SingularFim(NumericalError):
    pass


class NonPositiveInformation(ValidationError):
    pass


class NotAPovm(ValidationError):
    pass


@dataclass(frozen=True)
class ProbModel:
    """A parametric family of distributions.

    Discrete models list their ``outcomes``; continuous ones give an
    ``interval`` (a pair or a function of θ returning one) and integrate by
    Gauss-Legendre of the given ``order``. ``prob(x, θ)`` must accept an
    array of points for continuous models. ``dprob(x, θ, mu)`` is the
    optional analytic derivative of the probability.
    """

    n_params: int
    prob: Callable
    dprob: Optional[Callable] = None
    outcomes: Optional[Sequence] = None
    interval: object = None
    order: int = 200
    fd_step: Optional[float] = None
    name: str = "model"

    @property
    def discrete(self) -> bool:
        return self.outcomes is not None

    def nodes(self, theta) -> tuple[list | np.ndarray, np.ndarray]:
        """Sample points and weights: outcomes with unit weight, or quadrature."""
        if self.discrete:
            return list(self.outcomes), np.ones(len(self.outcomes))
        iv = self.interval(theta) if callable(self.interval) else self.interval
        a, b = float(iv[0]), float(iv[1])
        if not (np.isfinite(a) and np.isfinite(b) and b > a):
            raise QuadratureFailure(f"bad integration interval ({a}, {b})")
        x, w = np.polynomial.legendre.leggauss(self.order)
        half = 0.5 * (b - a)
        return half * x + 0.5 * (a + b), half * w


@dataclass(frozen=True)
class CfimReport:
    fim: np.ndarray
    crb: np.ndarray
    n_trials: int
    regularity_residual: float
    normalization_residual: float
    pseudo_inverse: bool = False
    warnings: list = field(default_factory=list)


def _theta(theta) -> np.ndarray:
    return np.atleast_1d(np.asarray(theta, dtype=float))


def _probs(model: ProbModel, xs, theta) -> np.ndarray:
    if model.discrete:
        p = np.array([model.prob(x, theta) for x in xs], dtype=float)
    else:
        p = np.asarray(model.prob(xs, theta), dtype=float)
    if not np.all(np.isfinite(p)):
        raise QuadratureFailure("non-finite probability values")
    return p


def _dprobs(model: ProbModel, xs, theta, mu: int) -> np.ndarray:
    if model.dprob is not None:
        if model.discrete:
            return np.array([model.dprob(x, theta, mu) for x in xs], dtype=float)
        return np.asarray(model.dprob(xs, theta, mu), dtype=float)
    h = fd_step_for(theta[mu], model.fd_step)
    tp, tm = theta.copy(), theta.copy()
    tp[mu] += h
    tm[mu] -= h
    return (_probs(model, xs, tp) - _probs(model, xs, tm)) / (tp[mu] - tm[mu])


def score(model: ProbModel, x, theta, mu: int = 0) -> float:
    """∂ log p(x; θ) / ∂θ_mu."""
    theta = _theta(theta)
    xs = [x] if model.discrete else np.array([float(x)])
    p = _probs(model, xs, theta)[0]
    if not p > 0:
        raise ZeroProbability(f"p({x!r}) = {p!r}")
    return float(_dprobs(model, xs, theta, mu)[0] / p)


def _fisher(model: ProbModel, theta):
    theta = _theta(theta)
    xs, w = model.nodes(theta)
    p = _probs(model, xs, theta)
    if np.any(p < -SKIP_PROB):
        raise ValidationError(f"{model.name}: negative probability {p.min()!r}")
    dp = np.array([_dprobs(model, xs, theta, mu) for mu in range(model.n_params)])
    if not np.all(np.isfinite(dp)):
        raise QuadratureFailure("non-finite derivative values")
    keep = p >= SKIP_PROB
    s = np.zeros_like(dp)
    s[:, keep] = dp[:, keep] / p[keep]
    wp = w * np.where(keep, p, 0.0)
    fim = (s * wp) @ s.T
    fim = 0.5 * (fim + fim.T)
    regularity = float(np.max(np.abs(s @ wp))) if model.n_params else 0.0
    normalization = float(abs(np.sum(w * p) - 1.0))
    return fim, regularity, normalization


def fisher_information(model: ProbModel, theta, mu: int = 0, strict: bool = False) -> float:
    """Variance of the score for parameter ``mu``.

    With ``strict`` a regularity residual above 1e-6 raises
    RegularityViolation instead of passing silently.
    """
    fim, reg, _ = _fisher(model, theta)
    if strict and reg > REGULARITY_TOL:
        raise RegularityViolation(f"E[score] = {reg:.3e}")
    return float(fim[mu, mu])


def inverse_or_pinv(fim: np.ndarray, rcond: float = 1e-12,
                    atol: float = 1e-14) -> tuple[np.ndarray, bool]:
    """Inverse via a linear solve, or the pseudo-inverse when singular.

    Singular means an eigenvalue at or below rcond·‖F‖ or below ``atol``,
    so roundoff-level information is not inverted. The flag is True when
    the pseudo-inverse was used.
    """
    fim = np.asarray(fim, dtype=float)
    n = fim.shape[0]
    if n == 0:
        return fim.copy(), False
    w = np.linalg.eigvalsh(0.5 * (fim + fim.T))
    scale = max(abs(w).max(), 1e-300)
    if w.min() > max(rcond * scale, atol):
        inv = np.linalg.solve(fim, np.eye(n))
        return 0.5 * (inv + inv.T), False
    cut = max(rcond, atol / scale)
    return np.linalg.pinv(fim, rcond=min(cut, 1.0), hermitian=True), True


def fisher_matrix(model: ProbModel, theta, n_trials: int = 1, strict: bool = False) -> CfimReport:
    fim, reg, norm = _fisher(model, theta)
    warnings = []
    if reg > REGULARITY_TOL:
        msg = f"regularity residual {reg:.3e} exceeds {REGULARITY_TOL:g}"
        if strict:
            raise RegularityViolation(msg)
        warnings.append(msg)
    if norm > 1e-8:
        warnings.append(f"normalization residual {norm:.3e} exceeds 1e-08")
    inv, pinv = inverse_or_pinv(fim)
    if pinv:
        if strict:
            raise SingularFim("Fisher matrix is singular")
        warnings.append("Fisher matrix singular; pseudo-inverse used for the bound")
    return CfimReport(fim, inv / n_trials, n_trials, reg, norm, pinv, warnings)


def cramer_rao_bound(fi: float, n_trials: int = 1) -> float:
    if not fi > 0:
        raise NonPositiveInformation(f"Fisher information {fi!r} is not positive")
    if n_trials < 1:
        raise ValidationError("n_trials must be at least 1")
    return 1.0 / (n_trials * fi)


# -- model builders ---------------------------------------------------------------

def normal_model(order: int = 200, halfwidth: float = 12.0) -> ProbModel:
    """N(mu, var) over θ = (mu, var), integrated on mu ± halfwidth·σ."""

    def prob(x, th):
        mu, var = th
        if not var > 0:
            raise DomainViolation("variance must be positive")
        return np.exp(-((x - mu) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)

    def dprob(x, th, k):
        mu, var = th
        p = prob(x, th)
        if k == 0:
            return p * (x - mu) / var
        return p * ((x - mu) ** 2 / (2 * var**2) - 1 / (2 * var))

    def interval(th):
        if not th[1] > 0:
            raise DomainViolation("variance must be positive")
        sd = np.sqrt(th[1])
        return th[0] - halfwidth * sd, th[0] + halfwidth * sd

    return ProbModel(2, prob, dprob, interval=interval, order=order, name="normal")


def uniform_model(a: float = 0.0, b: float = 1.0, n_params: int = 1) -> ProbModel:
    """Uniform density on [a, b], independent of θ."""
    return ProbModel(n_params, lambda x, th: np.full(np.shape(x), 1.0 / (b - a)),
                     lambda x, th, k: np.zeros(np.shape(x)),
                     interval=(a, b), order=50, name="uniform")


def qubit_pvm_prob_model() -> ProbModel:
    from .states import qubit_pvm_model

    def prob(x, th):
        return qubit_pvm_model(th[0])[0 if x == "+" else 1]

    def dprob(x, th, k):
        d = -np.sin(th[0] / 2) / 4
        return d if x == "+" else -d

    return ProbModel(1, prob, dprob, outcomes=("+", "-"), name="qubit-pvm")


def table_model(probs: Sequence[float], dprobs: Sequence[Sequence[float]],
                outcomes: Sequence | None = None) -> ProbModel:
    """Discrete model tabulated at a single θ: p(x) and ∂_mu p(x) per outcome."""
    p = np.asarray(probs, dtype=float)
    dp = np.atleast_2d(np.asarray(dprobs, dtype=float))
    if p.ndim != 1 or dp.shape[1] != p.size:
        raise ValidationError("derivative rows must have one entry per outcome")
    if np.any(p < 0) or not np.all(np.isfinite(p)) or not np.all(np.isfinite(dp)):
        raise ValidationError("probabilities must be finite and nonnegative")
    labels = list(outcomes) if outcomes is not None else list(range(p.size))
    if len(labels) != p.size:
        raise ValidationError("outcome labels do not match probabilities")
    index = {x: i for i, x in enumerate(labels)}
    return ProbModel(dp.shape[0], lambda x, th: p[index[x]],
                     lambda x, th, k: dp[k, index[x]],
                     outcomes=tuple(labels), name="table")


def iid_product(model: ProbModel, n: int) -> ProbModel:
    """Joint model of n independent copies of a discrete model."""
    if not model.discrete:
        raise ValidationError("iid products are built for discrete models only")
    outcomes = tuple(itertools.product(model.outcomes, repeat=n))

    def prob(xs, th):
        return float(np.prod([model.prob(x, th) for x in xs]))

    def dprob(xs, th, k):
        ps = [model.prob(x, th) for x in xs]
        dps = [_dprobs(model, [x], th, k)[0] for x in xs]
        total = 0.0
        for i in range(len(xs)):
            total += dps[i] * np.prod(ps[:i] + ps[i + 1:])
        return total

    return ProbModel(model.n_params, prob, dprob, outcomes=outcomes,
                     name=f"{model.name}^{n}")


def check_povm(povm: Sequence, dim: int | None = None, tol: float = 1e-10) -> list[np.ndarray]:
    elems = []
    for k, e in enumerate(povm):
        try:
            h = hermitian_part(e, tol=tol, name=f"POVM element {k}")
        except ValidationError as exc:
            raise NotAPovm(str(exc)) from exc
        if np.linalg.eigvalsh(h)[0] < -tol:
            raise NotAPovm(f"POVM element {k} is not PSD")
        elems.append(h)
    if not elems:
        raise NotAPovm("empty POVM")
    d = elems[0].shape[0]
    if (dim is not None and d != dim) or any(e.shape != (d, d) for e in elems):
        raise NotAPovm("POVM elements have the wrong dimension")
    if max_abs(sum(elems) - np.eye(d)) > tol:
        raise NotAPovm("POVM elements do not sum to the identity")
    return elems


def born_model(fam: ParamFamily, povm: Sequence) -> ProbModel:
    """Outcome statistics p(x; θ) = Tr(ρ_θ Π_x) of a fixed measurement."""
    elems = check_povm(povm)

    def prob(x, th):
        return float(np.trace(fam.matrix(th) @ elems[x]).real)

    def dprob(x, th, k):
        return float(np.trace(family_derivative(fam, th, k) @ elems[x]).real)

    return ProbModel(fam.n_params, prob, dprob, outcomes=tuple(range(len(elems))),
                     name=f"born({fam.name})")
