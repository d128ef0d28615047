import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from gnarspec.covsel import ConvergenceError, covariance_selection
from gnarspec.graph import augment_mask
from gnarspec.periodogram import augment, constrained_mle, de_augment

from conftest import random_hpd


def random_pd(rng, m):
    A = rng.standard_normal((m, m + 3))
    return A @ A.T / (m + 3) + 0.05 * np.eye(m)


def random_mask(rng, m, density=0.4):
    U = np.triu(rng.random((m, m)) < density, 1)
    return (U | U.T).astype(int)


def loglik(Theta, S):
    sign, logdet = np.linalg.slogdet(Theta)
    return logdet - np.real(np.trace(S @ Theta)) if sign > 0 else -np.inf


def check_equations(S, mask, Sigma, Theta, tol=1e-8):
    m = S.shape[-1]
    free = (mask != 0) | np.eye(m, dtype=bool)
    np.testing.assert_allclose(Sigma[free], S[free], atol=tol)
    assert np.all(Theta[~free] == 0)
    np.testing.assert_allclose(Sigma @ Theta, np.eye(m), atol=1e-8)


def test_full_mask_returns_input(rng):
    S = random_pd(rng, 5)
    Sigma, _ = covariance_selection(S, np.ones((5, 5)) - np.eye(5))
    np.testing.assert_array_equal(Sigma, S)


def test_empty_mask_is_diagonal(rng):
    S = random_pd(rng, 5)
    Sigma, Theta = covariance_selection(S, np.zeros((5, 5)))
    np.testing.assert_array_equal(Sigma, np.diag(np.diag(S)))
    np.testing.assert_allclose(Theta, np.diag(1 / np.diag(S)))


def test_chain_closed_form(rng):
    S = random_pd(rng, 3)
    mask = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    Sigma, Theta = covariance_selection(S, mask)
    assert Theta[0, 2] == 0
    assert Sigma[0, 2] == pytest.approx(S[0, 1] * S[1, 2] / S[1, 1], abs=1e-10)


def test_chain_matches_numerical_maximizer(rng):
    S = random_pd(rng, 3)
    mask = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    Sigma, Theta = covariance_selection(S, mask)

    def unpack(x):
        T = np.diag(x[:3])
        T[0, 1] = T[1, 0] = x[3]
        T[1, 2] = T[2, 1] = x[4]
        return T

    x0 = np.r_[1 / np.diag(S), 0, 0]
    res = minimize(lambda x: -loglik(unpack(x), S), x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000})
    np.testing.assert_allclose(unpack(res.x), Theta, atol=1e-5)
    assert loglik(Theta, S) >= -res.fun - 1e-12


@pytest.mark.parametrize("method", ["regression", "newton"])
def test_estimating_equations_real(method, rng):
    for _ in range(10):
        m = int(rng.integers(3, 9))
        S, mask = random_pd(rng, m), random_mask(rng, m)
        Sigma, Theta = covariance_selection(S, mask, method=method)
        check_equations(S, mask, Sigma, Theta)


def test_estimating_equations_complex_batch(rng):
    S = random_hpd(rng, 6, batch=20)
    mask = random_mask(rng, 6)
    Sigma, Theta = covariance_selection(S, mask)
    for k in range(20):
        check_equations(S[k], mask, Sigma[k], Theta[k])


def test_solvers_agree(rng):
    S = random_hpd(rng, 7, batch=10)
    mask = random_mask(rng, 7, 0.5)
    a, _ = covariance_selection(S, mask, "regression")
    b, _ = covariance_selection(S, mask, "newton")
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_complex_problem_equals_augmented_problem(rng):
    M = random_hpd(rng, 5, batch=4)
    mask = random_mask(rng, 5)
    direct, _ = covariance_selection(M, mask)
    Sig, _ = constrained_mle(augment(M), augment_mask(mask))
    np.testing.assert_allclose(de_augment(Sig), direct, atol=1e-9)


def test_likelihood_beats_feasible_candidates(rng):
    m = 6
    S, mask = random_pd(rng, m), random_mask(rng, m)
    _, Theta = covariance_selection(S, mask)
    best = loglik(Theta, S)
    assert best >= loglik(np.diag(1 / np.diag(S)), S)
    free = np.triu(mask, 1) != 0
    for _ in range(100):
        T = np.zeros((m, m))
        T[free] = 0.3 * rng.standard_normal(free.sum())
        T = T + T.T
        T += np.eye(m) * (abs(np.linalg.eigvalsh(T).min()) + rng.uniform(0.1, 2))
        assert best >= loglik(T, S)


def test_ridge_on_singular_input():
    v = np.array([1.0, 2.0, 0.5, -1.0])
    S = np.outer(v, v)
    mask = np.array([[0, 1, 0, 0], [1, 0, 1, 0], [0, 1, 0, 1], [0, 0, 1, 0]])
    Sigma, Theta = constrained_mle(S, mask)
    assert np.all(np.isfinite(Theta)) and Theta[0, 2] == 0


def test_nonconvergence_reports_duality_gap(rng):
    S = random_pd(rng, 8)
    mask = random_mask(rng, 8, 0.5)
    with pytest.raises(ConvergenceError, match="duality gap"):
        covariance_selection(S, mask, max_iter=1)
    with pytest.raises(ConvergenceError, match="duality gap"):
        covariance_selection(S, mask, "newton", max_iter=1)


def test_mask_validation(rng):
    with pytest.raises(ValueError):
        covariance_selection(random_pd(rng, 3), np.ones((2, 2)))
    with pytest.raises(ValueError):
        covariance_selection(random_pd(rng, 3), np.triu(np.ones((3, 3)), 1))


@pytest.mark.property
@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_augmented_estimating_equations(seed, d):
    rng = np.random.default_rng(seed)
    M = random_hpd(rng, d)
    mask = augment_mask(random_mask(rng, d, 0.5))
    Sig_t = augment(M)
    Sigma, Theta = constrained_mle(Sig_t, mask)
    check_equations(Sig_t, mask, Sigma, Theta)
