import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import multi_unitary, rand_herm, rand_state
from qestkit import classical as C
from qestkit import states as S
from qestkit.numkit import ValidationError
from qestkit.qfi import qfi
from qestkit.qfim import qfim_eigen


def random_povm(rng, d, k):
    """k random PSD elements normalized by S^{-1/2}(·)S^{-1/2}."""
    mats = []
    for _ in range(k):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        mats.append(g @ g.conj().T)
    w, v = np.linalg.eigh(sum(mats))
    inv_root = (v / np.sqrt(w)) @ v.conj().T
    return [inv_root @ m @ inv_root for m in mats]


# -- score --------------------------------------------------------------------------

@pytest.mark.parametrize("x", [-1.3, 0.0, 2.5])
def test_normal_score_wrt_mean(x):
    mu, var = 0.4, 1.7
    assert np.isclose(C.score(C.normal_model(), x, [mu, var], 0), (x - mu) / var, rtol=1e-12)


def test_normal_score_fd_matches_analytic():
    base = C.normal_model()
    fd = C.ProbModel(2, base.prob, None, interval=base.interval, name="normal-fd")
    for mu in range(2):
        a = C.score(base, 0.9, [0.1, 2.0], mu)
        b = C.score(fd, 0.9, [0.1, 2.0], mu)
        assert abs(a - b) < 1e-8


def test_uniform_score_is_zero():
    assert C.score(C.uniform_model(), 0.3, [1.0], 0) == 0


def test_score_zero_probability():
    model = C.table_model([1.0, 0.0], [[0.0, 0.0]], ["a", "b"])
    with pytest.raises(C.ZeroProbability):
        C.score(model, "b", [0.0], 0)


@pytest.mark.parametrize("mu,var", [(0, 1), (-2, 0.3), (5, 7)])
def test_expected_score_vanishes(mu, var):
    _, reg, norm = C._fisher(C.normal_model(), [mu, var])
    assert reg < 1e-8 and norm < 1e-8


# -- Fisher information ---------------------------------------------------------------

@pytest.mark.parametrize("var", [0.5, 1.0, 2.0, 5.0])
def test_normal_fim(var):
    rep = C.fisher_matrix(C.normal_model(), [0.3, var])
    expect = np.diag([1 / var, 1 / (2 * var**2)])
    assert np.allclose(rep.fim, expect, rtol=1e-8, atol=1e-12)
    assert np.allclose(rep.crb @ rep.fim, np.eye(2), atol=1e-8)
    assert not rep.warnings
    assert np.isclose(C.fisher_information(C.normal_model(), [0.3, var], 0), 1 / var, rtol=1e-8)


def test_normal_fim_sigma2_two():
    assert np.allclose(C.fisher_matrix(C.normal_model(), [0, 2]).fim, np.diag([0.5, 0.125]), rtol=1e-8)


def test_theta_independent_model_has_zero_information():
    assert C.fisher_information(C.uniform_model(), [0.3], 0) == 0
    rep = C.fisher_matrix(C.uniform_model(), [0.3])
    assert rep.pseudo_inverse and rep.warnings
    with pytest.raises(C.SingularFim):
        C.fisher_matrix(C.uniform_model(), [0.3], strict=True)


@pytest.mark.parametrize("theta", [0.3, 1.0, 2.5])
def test_qubit_pvm_matches_two_term_sum(theta):
    p = S.qubit_pvm_model(theta)
    d = -np.sin(theta / 2) / 4
    brute = d**2 / p[0] + d**2 / p[1]
    assert np.isclose(C.fisher_information(C.qubit_pvm_prob_model(), [theta]), brute, rtol=1e-12)
    assert np.isclose(brute, 0.25)


def test_truncated_quadrature_flags_regularity():
    rep = C.fisher_matrix(C.normal_model(halfwidth=3), [0, 1])
    assert rep.regularity_residual > C.REGULARITY_TOL
    assert any("regularity" in w for w in rep.warnings)
    with pytest.raises(C.RegularityViolation):
        C.fisher_matrix(C.normal_model(halfwidth=3), [0, 1], strict=True)
    with pytest.raises(C.RegularityViolation):
        C.fisher_information(C.normal_model(halfwidth=3), [0, 1], strict=True)


def test_bad_interval():
    bad = C.ProbModel(1, lambda x, th: np.ones_like(x), interval=(1.0, 0.0))
    with pytest.raises(C.QuadratureFailure):
        C.fisher_matrix(bad, [0.0])


def test_normal_rejects_nonpositive_variance():
    with pytest.raises(S.DomainViolation):
        C.fisher_matrix(C.normal_model(), [0, -1])


def test_single_parameter_matrix_matches_scalar():
    m = C.qubit_pvm_prob_model()
    assert C.fisher_matrix(m, [1.1]).fim.shape == (1, 1)
    assert np.isclose(C.fisher_matrix(m, [1.1]).fim[0, 0], C.fisher_information(m, [1.1]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(2, 6), n=st.integers(1, 3))
def test_table_fim_is_psd_and_symmetric(seed, k, n):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(k))
    dp = rng.normal(size=(n, k))
    dp -= dp.mean(axis=1, keepdims=True)
    rep = C.fisher_matrix(C.table_model(p, dp), np.zeros(n))
    assert np.allclose(rep.fim, rep.fim.T, atol=1e-12)
    assert np.linalg.eigvalsh(rep.fim)[0] >= -1e-10
    assert rep.regularity_residual < 1e-12


# -- Cramér-Rao --------------------------------------------------------------------------

def test_cramer_rao_bound():
    assert C.cramer_rao_bound(4, 1) == 0.25
    assert np.isclose(C.cramer_rao_bound(4, 100), 0.0025)
    with pytest.raises(C.NonPositiveInformation):
        C.cramer_rao_bound(0.0)
    with pytest.raises(ValidationError):
        C.cramer_rao_bound(1.0, 0)


# -- iid products ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_iid_additivity(n):
    m = C.qubit_pvm_prob_model()
    one = C.fisher_information(m, [1.2])
    assert abs(C.fisher_information(C.iid_product(m, n), [1.2]) - n * one) < 1e-8


def test_iid_needs_discrete():
    with pytest.raises(ValidationError):
        C.iid_product(C.normal_model(), 2)


# -- Born rule models ---------------------------------------------------------------------

def test_born_qubit_pvm_probabilities():
    model = C.born_model(S.qubit_pvm_family(), S.sigma_z_projectors())
    for th in [0.2, 1.0, 3.0]:
        expect = S.qubit_pvm_model(th)
        assert np.allclose([model.prob(x, [th]) for x in model.outcomes], expect, atol=1e-15)


def test_born_identity_povm_is_constant():
    model = C.born_model(S.qubit_pvm_family(), [np.eye(2)])
    assert np.isclose(model.prob(0, [0.7]), 1.0)
    assert C.fisher_information(model, [0.7]) == 0


def test_random_povm_probabilities(rng):
    povm = random_povm(rng, 2, 4)
    fam = S.qubit_sphere_family()
    model = C.born_model(fam, povm)
    for _ in range(5):
        th = rng.uniform(0.1, 3.0, size=2)
        p = [model.prob(x, th) for x in model.outcomes]
        assert min(p) >= 0 and abs(sum(p) - 1) < 1e-12


def test_povm_validation():
    with pytest.raises(C.NotAPovm):
        C.check_povm([np.diag([1, 0])])
    with pytest.raises(C.NotAPovm):
        C.check_povm([np.diag([1.5, 1]), np.diag([-0.5, 0])])
    with pytest.raises(C.NotAPovm):
        C.check_povm([])


def test_cfi_bounded_by_qfi(rng):
    for _ in range(20):
        d = int(rng.integers(2, 4))
        fam = multi_unitary(rand_state(rng, d), [rand_herm(rng, d)])
        th = rng.normal(size=1)
        model = C.born_model(fam, random_povm(rng, d, int(rng.integers(2, 5))))
        q = qfi(fam.matrix(th), S.family_derivative(fam, th, 0))
        assert C.fisher_information(model, th) <= q + 1e-7


def test_cfim_bounded_by_qfim_matrix(rng):
    # F_C <= F_Q in the Loewner order
    d = 3
    fam = multi_unitary(rand_state(rng, d), [rand_herm(rng, d), rand_herm(rng, d)])
    th = rng.normal(size=2)
    fq = qfim_eigen(fam, th).fim
    for _ in range(5):
        fc = C.fisher_matrix(C.born_model(fam, random_povm(rng, d, 5)), th).fim
        assert np.linalg.eigvalsh(fq - fc)[0] >= -1e-7
