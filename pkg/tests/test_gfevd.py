import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnarspec.gfevd import (
    build_network,
    garman_klass,
    gfevd,
    is_connected_at,
    lasso_var,
    log_volatility,
    ma_coefficients,
    synthetic_ohlc,
    volatility_network,
)
from gnarspec.gnar import EstimationError, simulate_var


def test_garman_klass_values():
    assert garman_klass(0.0, 0.0, 0.0, 0.0) == 0
    assert garman_klass(0.0, 0.02, -0.02, 0.0) == pytest.approx(8.024e-4, rel=1e-12)
    assert np.isfinite(log_volatility(garman_klass(1.0, 1.0, 1.0, 1.0)))
    with pytest.raises(ValueError, match="ordering"):
        garman_klass(0.0, 0.01, 0.02, 0.0)


def test_log_volatility_round_trip():
    s2 = np.array([1e-4, 0.3, 2.0])
    np.testing.assert_allclose(np.exp(2 * log_volatility(s2)), s2)


@pytest.mark.property
@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4), st.floats(-100, 100))
def test_garman_klass_shift_invariant(prices, shift):
    o, c, a, b = prices
    h, l = max(o, c, a, b), min(o, c, a, b)
    base = garman_klass(o, h, l, c)
    assert garman_klass(o + shift, h + shift, l + shift, c + shift) == pytest.approx(base, abs=1e-9)


def test_lasso_sparse_recovery():
    X = simulate_var([0.5 * np.eye(5)], np.eye(5), 2000, seed=11)
    fit = lasso_var(X, p_max=1)
    P = fit.Pi[0]
    assert np.all(np.abs(np.diag(P) - 0.5) < 0.1)
    off = P[~np.eye(5, dtype=bool)]
    assert np.mean(off == 0) >= 0.8


def test_lasso_full_shrinkage():
    X = simulate_var([0.5 * np.eye(3)], np.eye(3), 300, seed=1)
    fit = lasso_var(X, p_max=2, lambda_index=0)
    assert all(not P.any() for P in fit.Pi)
    Xc = X[2:] - X[2:].mean(axis=0)
    np.testing.assert_allclose(fit.V, Xc.T @ Xc / Xc.shape[0], atol=1e-12)


@pytest.mark.property
def test_lasso_deterministic():
    X = simulate_var([0.4 * np.eye(3)], np.eye(3), 300, seed=2)
    a, b = lasso_var(X, p_max=2), lasso_var(X, p_max=2)
    for P, Q in zip(a.Pi, b.Pi):
        np.testing.assert_array_equal(P, Q)


def test_lasso_rejects_flat_node():
    X = np.random.default_rng(0).standard_normal((200, 3))
    X[:, 1] = 2.0
    with pytest.raises(ValueError, match="node 1"):
        lasso_var(X)


def test_ma_coefficients():
    rng = np.random.default_rng(3)
    P1 = rng.standard_normal((3, 3)) * 0.2
    B = ma_coefficients([P1], 5)
    np.testing.assert_array_equal(B[0], np.eye(3))
    for h in range(6):
        np.testing.assert_allclose(B[h], np.linalg.matrix_power(P1, h), atol=1e-14)
    P2 = rng.standard_normal((3, 3)) * 0.2
    comp = np.block([[P1, P2], [np.eye(3), np.zeros((3, 3))]])
    B = ma_coefficients([P1, P2], 10)
    for h in range(11):
        np.testing.assert_allclose(B[h], np.linalg.matrix_power(comp, h)[:3, :3], atol=1e-12)


def test_ma_coefficients_decay():
    rng = np.random.default_rng(4)
    for _ in range(20):
        P = rng.standard_normal((4, 4))
        P *= 0.9 / np.max(np.abs(np.linalg.eigvals(P)))
        B = ma_coefficients([P], 60)
        assert np.linalg.norm(B[60]) < np.linalg.norm(B[1])


def test_gfevd_no_spillovers():
    B = ma_coefficients([np.zeros((3, 3))], 1)
    psi = gfevd(B, np.diag([1.0, 2.0, 3.0]), 1, start=0)
    np.testing.assert_allclose(psi, np.eye(3))
    with pytest.raises(EstimationError, match="denominator"):
        gfevd(B, np.eye(3), 1, start=1)


def test_gfevd_bivariate_oracle():
    V = np.array([[2.0, 0.6], [0.6, 1.0]])
    psi = gfevd(ma_coefficients([np.zeros((2, 2))], 1), V, 1, start=0)
    raw = np.array([[V[0, 0] ** 2 / (V[0, 0] * V[0, 0]), V[0, 1] ** 2 / (V[1, 1] * V[0, 0])],
                    [V[1, 0] ** 2 / (V[0, 0] * V[1, 1]), V[1, 1] ** 2 / (V[1, 1] * V[1, 1])]])
    np.testing.assert_allclose(psi, raw / raw.sum(axis=1, keepdims=True), atol=1e-15)


@pytest.mark.property
@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.sampled_from([0, 1]))
def test_gfevd_rows_sum_to_one(seed, H, start):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((4, 4))
    P *= 0.8 / np.max(np.abs(np.linalg.eigvals(P)))
    A = rng.standard_normal((4, 4))
    psi = gfevd(ma_coefficients([P], H + 1), A @ A.T + 0.1 * np.eye(4), H, start)
    assert np.all(psi >= 0)
    np.testing.assert_allclose(psi.sum(axis=1), 1.0, atol=1e-10)


def linear_scan(psi):
    bil = np.maximum(psi, psi.T)
    cand = np.unique(bil[np.triu_indices(len(psi), 1)])
    return max(t for t in cand if is_connected_at(psi, t))


@pytest.mark.property
@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 9))
def test_bisection_matches_linear_scan(seed, d):
    rng = np.random.default_rng(seed)
    psi = rng.random((d, d))
    psi /= psi.sum(axis=1, keepdims=True)
    tau, W, edges = build_network(psi)
    assert tau == linear_scan(psi)
    np.testing.assert_array_equal(W, W.T)
    assert np.all(W >= 0)
    for i, j in edges:
        assert max(psi[i, j], psi[j, i]) >= tau


def test_zero_threshold_gives_complete_graph():
    psi = np.full((4, 4), 0.25)
    tau, _, edges = build_network(psi, candidates=[0.0])
    assert tau == 0 and len(edges) == 6


def test_star_psi():
    d = 5
    psi = np.full((d, d), 0.01) + 0.9 * np.eye(d)
    psi[0, 0] = 0.05
    hub = [0.5, 0.4, 0.3, 0.2]
    for k, v in enumerate(hub, start=1):
        psi[0, k] = v
    psi /= psi.sum(axis=1, keepdims=True)
    tau, _, edges = build_network(psi)
    bil = np.maximum(psi, psi.T)
    assert tau == pytest.approx(min(bil[0, 1:]))
    assert all(0 in e for e in edges)


def test_disconnected_candidates_rejected():
    psi = np.eye(3) * 0.5 + 0.5 / 3
    with pytest.raises(EstimationError):
        build_network(psi, candidates=[0.9])


def test_synthetic_pipeline_recovers_edges():
    edges = [(0, 1), (1, 2), (2, 3)]
    A = np.zeros((4, 4))
    for i, j in edges:
        A[i, j] = A[j, i] = 1
    O, H, L, C, _ = synthetic_ohlc(0.4 * np.eye(4) + 0.25 * A, 0.1 * np.eye(4), 1000, seed=0)
    assert np.all(L <= np.minimum(O, C)) and np.all(np.maximum(O, C) <= H)
    res = volatility_network(log_volatility(garman_klass(O, H, L, C)), H=10, p_max=2)
    assert set(res.edges) == set(edges)
