import numpy as np
import pytest
from scipy.optimize import minimize

from conftest import rand_herm, rand_ket, rand_state
from qestkit import correlations as K
from qestkit.numkit import (
    PAULI,
    DimensionMismatch,
    NumericalError,
    embed_local,
    max_abs,
    partial_trace,
    su_generators,
)
from qestkit.qfi import qfi
from qestkit.states import DensityMatrix, maximally_mixed, pure_state

BELL = pure_state([1, 0, 0, 1], (2, 2))


def fibonacci_sphere(n=10_000):
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    phi = np.pi * (1 + 5**0.5) * k
    r = np.sqrt(1 - z**2)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def grid_min(rho, measure, dims=(2, 2), position=0, n=10_000):
    """Brute-force minimum over K_A = s·σ on a sphere grid."""
    ops = [embed_local(p, dims, position) for p in PAULI]
    return min(measure(rho, sum(x * o for x, o in zip(s, ops))) for s in fibonacci_sphere(n))


def unitary(rng, d):
    w, v = np.linalg.eigh(rand_herm(rng, d))
    return (v * np.exp(1j * w)) @ v.conj().T


def spectral_skew(rho, k):
    p, v = np.linalg.eigh(rho)
    p = np.clip(p, 0, None)
    km = v.conj().T @ k @ v
    sq = np.sqrt(p)
    return 0.5 * float(np.sum((sq[:, None] - sq[None, :]) ** 2 * np.abs(km) ** 2))


# -- skew information ----------------------------------------------------------------------

def test_skew_commuting_pair_vanishes():
    rho = np.diag([0.2, 0.3, 0.5])
    k = np.diag([1.0, -2.0, 0.5])
    assert K.skew_information(rho, k) < 1e-15
    assert K.qfi_quarter(rho, k) < 1e-15


def test_skew_pure_equals_variance(rng):
    for d in (2, 3, 5):
        rho, k = pure_state(rand_ket(rng, d)), rand_herm(rng, d)
        var = K.variance_observable(rho, k)
        assert abs(K.skew_information(rho, k) - var) < 1e-10
        assert abs(K.qfi_quarter(rho, k) - var) < 1e-10


def test_skew_spectral_form(rng):
    for _ in range(20):
        d = int(rng.integers(2, 6))
        rho, k = rand_state(rng, d), rand_herm(rng, d)
        assert abs(K.skew_information(rho, k) - spectral_skew(rho, k)) < 1e-10


def test_variance_identity_is_zero(rng):
    assert abs(K.variance_observable(rand_state(rng, 3), np.eye(3))) < 1e-15


def test_skew_bounded_by_variance(rng):
    for _ in range(100):
        d = int(rng.integers(2, 6))
        rho, k = rand_state(rng, d), rand_herm(rng, d)
        i = K.skew_information(rho, k)
        assert 0 <= i <= K.variance_observable(rho, k) + 1e-10


def test_qfi_quarter_is_quarter_qfi(rng):
    for _ in range(10):
        d = int(rng.integers(2, 5))
        rho, k = rand_state(rng, d), rand_herm(rng, d)
        assert abs(K.qfi_quarter(rho, k) - qfi(rho, -1j * (k @ rho - rho @ k)) / 4) < 1e-9


def test_sandwich(rng):
    for _ in range(200):
        d = int(rng.integers(2, 7))
        rank = int(rng.integers(1, d + 1))
        rho, k = rand_state(rng, d, rank), rand_herm(rng, d)
        i, f = K.skew_information(rho, k), K.qfi_quarter(rho, k)
        assert i - 1e-9 <= f <= 2 * i + 1e-9


def test_skew_convexity(rng):
    k = rand_herm(rng, 3)
    for _ in range(10):
        states = [rand_state(rng, 3) for _ in range(3)]
        p = rng.dirichlet(np.ones(3))
        mix = sum(w * s for w, s in zip(p, states))
        rhs = sum(w * K.skew_information(s, k) for w, s in zip(p, states))
        assert K.skew_information(mix, k) <= rhs + 1e-9


def test_skew_invariant_under_commuting_unitary(rng):
    k = rand_herm(rng, 3)
    w, v = np.linalg.eigh(k)
    u = (v * np.exp(1j * rng.normal(size=3))) @ v.conj().T
    rho = rand_state(rng, 3)
    assert abs(K.skew_information(u @ rho @ u.conj().T, k) - K.skew_information(rho, k)) < 1e-9


def test_skew_superadditivity_wrt_subsystem(rng):
    rho = rand_state(rng, 6)
    ka = rand_herm(rng, 2)
    joint = K.skew_information(rho, embed_local(ka, (2, 3), 0))
    local = K.skew_information(partial_trace(rho, (2, 3), 0), ka)
    assert joint >= local - 1e-9


def test_skew_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        K.skew_information(np.eye(2) / 2, np.eye(3))


def test_observable_wrapper():
    obs = K.Observable(np.diag([1.0, -1.0]), "pm1")
    assert K.skew_information(maximally_mixed(2), obs) == 0


# -- Hellinger ------------------------------------------------------------------------------

def test_hellinger_trivial(rng):
    rho = rand_state(rng, 3)
    assert K.hellinger_distance_sq(rho, rho) < 1e-12
    assert abs(K.hellinger_distance_sq(np.diag([1, 0]), np.diag([0, 1])) - 1) < 1e-15
    sigma = rand_state(rng, 3)
    assert abs(K.hellinger_distance_sq(rho, sigma) - K.hellinger_distance_sq(sigma, rho)) < 1e-12
    with pytest.raises(DimensionMismatch):
        K.hellinger_distance_sq(rho, np.eye(2) / 2)


def test_hellinger_identity_for_root_of_unity(rng):
    for _ in range(20):
        rho = rand_state(rng, 4)
        s = rand_ket(rng, 3).real
        s /= np.linalg.norm(s)
        ka = embed_local(sum(x * p for x, p in zip(s, PAULI)), (2, 2), 0)
        lhs = K.skew_information(rho, ka)
        rhs = K.hellinger_distance_sq(rho, ka @ rho @ ka)
        assert abs(lhs - rhs) < 1e-10


# -- LQU and LQFI ----------------------------------------------------------------------------

def test_bell_measures():
    for fn in (K.lqu_qubit, K.lqfi, K.lqu_qudit):
        assert abs(fn(BELL).value - 1) < 1e-9


def test_bell_matches_grid():
    assert abs(grid_min(BELL.mat, K.skew_information) - 1) < 2e-3
    assert abs(grid_min(BELL.mat, K.qfi_quarter) - 1) < 2e-3


def test_product_pure_vanishes(rng):
    rho = np.kron(pure_state(rand_ket(rng, 2)).mat, pure_state(rand_ket(rng, 3)).mat)
    assert K.lqu_qubit(rho, (2, 3)).value <= 1e-10
    assert K.lqfi(rho, (2, 3)).value <= 1e-10
    zero = np.kron(np.diag([1, 0]), np.diag([1, 0]))
    assert K.lqfi(zero, (2, 2)).value <= 1e-10


def test_product_with_pure_side_a_vanishes(rng):
    rho = np.kron(pure_state(rand_ket(rng, 2)).mat, rand_state(rng, 2))
    assert K.lqu_qubit(rho, (2, 2)).value <= 1e-10


def test_pure_lqu_is_linear_entropy(rng):
    for d2 in (2, 3):
        for _ in range(10):
            rho = pure_state(rand_ket(rng, 2 * d2)).mat
            ra = partial_trace(rho, (2, d2), 0)
            expect = 2 * (1 - np.trace(ra @ ra).real)
            assert abs(K.lqu_qubit(rho, (2, d2)).value - expect) < 1e-9


def test_report_invariants(rng):
    rho = rand_state(rng, 6)
    for rep, norm in ((K.lqu_qubit(rho, (2, 3)), 1), (K.lqfi(rho, (2, 3)), 1),
                      (K.lqu_qudit(rho, (3, 2)), 2 / 3)):
        m = rep.optimizer_matrix
        assert max_abs(m - m.T) <= 1e-10
        assert abs(rep.value - (norm - rep.max_eigenvalue)) <= 1e-12
        assert -1e-12 <= rep.value <= norm + 1e-12


def test_closed_forms_match_grid_minimization(rng):
    for _ in range(20):
        rho = rand_state(rng, 4)
        assert abs(K.lqu_qubit(rho, (2, 2)).value - grid_min(rho, K.skew_information)) < 2e-3
        assert abs(K.lqfi(rho, (2, 2)).value - grid_min(rho, K.qfi_quarter)) < 2e-3


def test_closed_forms_are_lower_bounds_of_grid(rng):
    rho = rand_state(rng, 4)
    assert K.lqu_qubit(rho, (2, 2)).value <= grid_min(rho, K.skew_information, n=500) + 1e-12


def test_lqu_lqfi_sandwich(rng):
    for _ in range(200):
        rho = rand_state(rng, 4, int(rng.integers(1, 5)))
        u, q = K.lqu_qubit(rho, (2, 2)).value, K.lqfi(rho, (2, 2)).value
        assert u - 1e-9 <= q <= 2 * u + 1e-9


def test_local_unitary_invariance(rng):
    rho = rand_state(rng, 6)
    u = np.kron(unitary(rng, 2), unitary(rng, 3))
    rot = u @ rho @ u.conj().T
    for fn in (K.lqu_qubit, K.lqfi):
        assert abs(fn(rho, (2, 3)).value - fn(rot, (2, 3)).value) < 1e-8


def test_lqu_non_increasing_under_channel_on_b(rng):
    # replace B by a fixed state: a channel acting on B alone
    rho = rand_state(rng, 4)
    sigma_b = rand_state(rng, 2)
    out = np.kron(partial_trace(rho, (2, 2), 0), sigma_b)
    assert K.lqu_qubit(out, (2, 2)).value <= K.lqu_qubit(rho, (2, 2)).value + 1e-8
    # partial depolarization of B
    p = 0.4
    mixed = (1 - p) * rho + p * np.kron(partial_trace(rho, (2, 2), 0), np.eye(2) / 2)
    assert K.lqu_qubit(mixed, (2, 2)).value <= K.lqu_qubit(rho, (2, 2)).value + 1e-8


def test_m_matrix_quadratic_form_is_qfi_quarter(rng):
    rho = rand_state(rng, 4)
    m = K.m_matrix(rho, (2, 2))
    for s in fibonacci_sphere(20):
        ka = embed_local(sum(x * p for x, p in zip(s, PAULI)), (2, 2), 0)
        assert abs(1 - s @ m @ s - K.qfi_quarter(rho, ka)) < 1e-12


def test_qubit_side_required():
    with pytest.raises(K.NotAQubitSide):
        K.lqu_qubit(np.eye(6) / 6, (3, 2))
    with pytest.raises(K.NotAQubitSide):
        K.lqfi(np.eye(6) / 6, (3, 2))
    with pytest.raises(DimensionMismatch):
        K.lqu_qubit(np.eye(4) / 4, (2, 3))


def test_dims_from_density_matrix():
    rho = DensityMatrix(np.eye(6) / 6, (2, 3))
    assert abs(K.lqu_qubit(rho).value) < 1e-12


# -- multi-qubit average -------------------------------------------------------------------------

def test_average_two_qubit_symmetric():
    values, avg = K.lqu_multiqubit_average(BELL, 2)
    assert abs(values[0] - values[1]) < 1e-12 and abs(avg - 1) < 1e-9


def test_average_product_state(rng):
    kets = [rand_ket(rng, 2) for _ in range(3)]
    psi = np.kron(np.kron(kets[0], kets[1]), kets[2])
    values, avg = K.lqu_multiqubit_average(pure_state(psi), 3)
    assert max(values) < 1e-10 and avg < 1e-10


def test_average_ghz3_matches_grid():
    ghz = np.zeros(8)
    ghz[0] = ghz[7] = 1
    rho = pure_state(ghz).mat
    values, avg = K.lqu_multiqubit_average(rho, 3, workers=3)
    assert max(values) - min(values) < 1e-12
    for k in range(3):
        assert abs(values[k] - grid_min(rho, K.skew_information, (2, 2, 2), k, n=2000)) < 2e-3


def test_average_threads_match_serial(rng):
    rho = rand_state(rng, 16)
    assert K.lqu_multiqubit_average(rho, 4, workers=4) == K.lqu_multiqubit_average(rho, 4)


def test_average_dimension_checks():
    with pytest.raises(K.DimensionNotPowerOfTwo):
        K.lqu_multiqubit_average(np.eye(6) / 6, 3)
    with pytest.raises(K.DimensionNotPowerOfTwo):
        K.lqu_multiqubit_average(np.eye(2**9) / 2**9, 9)


# -- qudit LQU ----------------------------------------------------------------------------------

def test_qudit_reduces_to_qubit(rng):
    for _ in range(20):
        rho = rand_state(rng, 4)
        assert abs(K.lqu_qudit(rho, (2, 2)).value - K.lqu_qubit(rho, (2, 2)).value) < 1e-8


def test_qudit_maximally_mixed():
    for dims in ((3, 2), (3, 3), (4, 2)):
        assert abs(K.lqu_qudit(np.eye(dims[0] * dims[1]) / (dims[0] * dims[1]), dims).value) < 1e-10


def _qudit_skew(rho, dims, s):
    s = s / np.linalg.norm(s)
    ka = sum(x * g for x, g in zip(s, su_generators(dims[0])))
    return K.skew_information(rho, embed_local(ka, dims, 0))


def test_qudit_matches_sphere_minimization(rng):
    dims = (3, 2)
    rho = rand_state(rng, 6)
    rep = K.lqu_qudit(rho, dims)
    assert 0 <= rep.value <= 2 / 3
    samples = rng.normal(size=(10_000, 8))
    sampled = min(_qudit_skew(rho, dims, s) for s in samples[:2000])
    assert rep.value <= sampled + 1e-12
    best = min((minimize(lambda s: _qudit_skew(rho, dims, s), s0, method="BFGS")
                for s0 in samples[:8]), key=lambda r: r.fun)
    assert abs(best.fun - rep.value) < 1e-6


# -- precision chain -------------------------------------------------------------------------------

def test_chain_bell():
    ch = K.precision_chain(BELL)
    assert abs(ch.lqu - 1) < 1e-9 and abs(ch.lqfi - 1) < 1e-9
    assert abs(ch.bound_lqu - 1) < 1e-9 and abs(ch.bound_lqfi - 1) < 1e-9


def test_chain_classical_state():
    rho = 0.5 * np.kron(np.diag([1, 0]), np.diag([1, 0])) + 0.5 * np.kron(np.diag([0, 1]), np.diag([0, 1]))
    with pytest.raises(K.ZeroCorrelation):
        K.precision_chain(rho, (2, 2))
    ch = K.precision_chain(rho, (2, 2), strict=False)
    assert ch.bound_lqu == float("inf") and ch.bound_lqfi == float("inf")
    assert issubclass(K.ZeroCorrelation, NumericalError)


def test_chain_random_states(rng):
    for _ in range(200):
        ch = K.precision_chain(rand_state(rng, 4), (2, 2))
        assert ch.lqu - 1e-9 <= ch.lqfi <= 2 * ch.lqu + 1e-9
        assert ch.bound_lqfi <= ch.bound_lqu + 1e-9
