import numpy as np
import pytest
from scipy.linalg import solve_discrete_lyapunov
from hypothesis import given, settings
from hypothesis import strategies as st

from gnarspec.bench import builtin_models
from gnarspec.gnar import GnarParams, var_coefficients
from gnarspec.graph import Network, NetworkContext
from gnarspec.hierarchy import distance_band
from gnarspec.spectra import (
    SpectralField,
    check_grid,
    coherence,
    fourier_grid,
    gnar_spectrum,
    partial_coherence,
    precision,
    var_spectrum,
)

from conftest import random_hpd

GRID = np.linspace(0.01, 0.5, 64)


def test_fourier_grid():
    np.testing.assert_allclose(fourier_grid(10), [0.1, 0.2, 0.3, 0.4])
    assert len(fourier_grid(1000)) == 499
    with pytest.raises(ValueError):
        check_grid([0.2, 0.1])
    with pytest.raises(ValueError):
        check_grid([0.1, 0.6])


def test_white_noise_is_flat(ctx5):
    f = gnar_spectrum(GnarParams([0.0], [[0.0]], sigma2=2.5), ctx5, GRID)
    np.testing.assert_allclose(f.values, np.broadcast_to(2.5 * np.eye(5), f.values.shape), atol=1e-15)


def test_ar1_closed_form():
    ctx = NetworkContext.from_network(Network(1, []))
    f = gnar_spectrum(GnarParams([0.6], [[]], sigma2=1.3), ctx, GRID)
    expected = 1.3 / np.abs(1 - 0.6 * np.exp(-2j * np.pi * GRID)) ** 2
    np.testing.assert_allclose(f.values[:, 0, 0].real, expected, rtol=1e-13)


def test_var_spectrum_zero_coefficients():
    V = np.array([[2.0, 0.3], [0.3, 1.0]])
    f = var_spectrum([np.zeros((2, 2))], V, GRID)
    np.testing.assert_allclose(f.values, np.broadcast_to(V, f.values.shape), atol=1e-15)


def test_bivariate_block_closed_form():
    f = var_spectrum([np.array([[0.5, 0], [0, 0]])], np.eye(2), GRID)
    np.testing.assert_allclose(f.values[:, 0, 0].real, 1 / np.abs(1 - 0.5 * np.exp(-2j * np.pi * GRID)) ** 2)
    np.testing.assert_allclose(f.values[:, 1, 1], 1.0)
    np.testing.assert_allclose(f.values[:, 0, 1], 0.0)


@pytest.mark.parametrize("name", ["M1", "M2", "M3", "M4", "M5"])
def test_embedding_identity(name, ctx10):
    m = builtin_models()[name]
    a = gnar_spectrum(m, ctx10, GRID).values
    b = var_spectrum(var_coefficients(m, ctx10), np.eye(10), GRID).values
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_singular_transfer_reports_frequency():
    with pytest.raises(np.linalg.LinAlgError, match="omega = 0.5"):
        var_spectrum([np.array([[-1.0]])], np.eye(1), [0.25, 0.5])


def test_precision_inverse_contract(ctx10):
    f = gnar_spectrum(builtin_models()["M3"], ctx10, GRID)
    S = precision(f)
    np.testing.assert_allclose(f.values @ S.values, np.broadcast_to(np.eye(10), S.values.shape), atol=1e-10)
    diag = SpectralField(GRID, np.broadcast_to(np.diag([1.0, 2.0, 4.0]), (64, 3, 3)).astype(complex))
    np.testing.assert_allclose(precision(diag).values[0], np.diag([1.0, 0.5, 0.25]))


def test_precision_cofactor_oracle(rng):
    M = random_hpd(rng, 3)
    cof = np.empty((3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(M, i, 0), j, 1)
            cof[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    det = sum(M[0, j] * cof[0, j] for j in range(3))
    S = precision(SpectralField([0.1], M[None]))
    np.testing.assert_allclose(S.values[0], cof.T / det, atol=1e-12)


def test_ill_conditioned_precision_rejected():
    M = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]], dtype=complex)
    with pytest.raises(np.linalg.LinAlgError, match="omega"):
        precision(SpectralField([0.2], M[None]))


def test_coherence_of_diagonal_spectrum():
    f = SpectralField(GRID, np.broadcast_to(np.diag([1.0, 3.0]), (64, 2, 2)).astype(complex))
    np.testing.assert_array_equal(coherence(f).values, np.broadcast_to(np.eye(2), (64, 2, 2)))
    np.testing.assert_array_equal(partial_coherence(precision(f)).values, np.broadcast_to(np.eye(2), (64, 2, 2)))


def test_coherence_saturates_for_rank_one():
    v = np.array([1.0, 2.0 - 1.0j])
    M = np.outer(v, v.conj()) + 1e-9 * np.eye(2)
    assert coherence(SpectralField([0.1], M[None])).values[0, 0, 1] == pytest.approx(1.0, abs=1e-8)


def test_coherence_rejects_nonpositive_diagonal():
    M = np.array([[0.0, 0.1], [0.1, 1.0]], dtype=complex)
    with pytest.raises(ValueError, match="nonpositive"):
        coherence(SpectralField([0.1], M[None]))


def test_first_stage_coherence_dominates_third_stage(ctx10):
    """M1 first-stage pair versus a third-stage pair under M4."""
    D = ctx10.stages.distances
    assert D[0, 7] == 1 and D[0, 8] == 3
    near = coherence(gnar_spectrum(builtin_models()["M1"], ctx10, GRID)).pair(0, 7)
    far = coherence(gnar_spectrum(builtin_models()["M4"], ctx10, GRID)).pair(0, 8)
    assert np.all(near > far)


def test_chain_partial_coherence_ordering(path3):
    ctx = NetworkContext.from_network(path3)
    g = partial_coherence(gnar_spectrum(GnarParams([0.3], [[0.4]]), ctx, GRID))
    assert np.all(g.pair(0, 2) < g.pair(0, 1))


@pytest.mark.parametrize("name", ["M3", "M5"])
def test_cross_spectral_hierarchy_ordering(name, ctx10):
    S = np.abs(precision(gnar_spectrum(builtin_models()[name], ctx10, GRID)).values)
    peak = S.max(axis=0)
    levels = [peak[distance_band(ctx10.stages, r)].min() for r in (1, 2, 3)]
    assert levels[0] >= levels[1] >= levels[2]


def population_autocovariances(Phi, V, H):
    """Gamma(h) = E[X_{t+h} X_t^T] for h = 0..H via the companion form."""
    d, p = V.shape[0], len(Phi)
    F = np.zeros((d * p, d * p))
    F[:d] = np.hstack(Phi)
    F[d:, :-d] = np.eye(d * (p - 1))
    Q = np.zeros_like(F)
    Q[:d, :d] = V
    G = solve_discrete_lyapunov(F, Q)
    out = []
    for _ in range(H + 1):
        out.append(G[:d, :d].copy())
        G = F @ G
    return out


@pytest.mark.parametrize("model", ["M1", "M2", "M3", "M4", "M5"])
def test_matches_population_lag_window(model, ctx5):
    params = builtin_models()[model]
    Phi = var_coefficients(params, ctx5)
    gam = population_autocovariances(Phi, params.innovation_cov(ctx5.d), 400)
    grid = np.array([0.1, 0.25, 0.4])
    f = gnar_spectrum(params, ctx5, grid).values
    for k, om in enumerate(grid):
        oracle = gam[0] + sum(g * np.exp(-2j * np.pi * h * om) + g.T * np.exp(2j * np.pi * h * om) for h, g in enumerate(gam[1:], start=1))
        np.testing.assert_allclose(f[k], oracle, atol=1e-10)


coefs = st.floats(-0.15, 0.15, allow_nan=False)


@pytest.mark.property
@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(coefs, st.lists(coefs, max_size=3)), min_size=1, max_size=3))
def test_spectral_field_properties(lags):
    from gnarspec.io import builtin_network

    ctx = NetworkContext.from_network(builtin_network("net5"))
    params = GnarParams([a for a, _ in lags], [b for _, b in lags])
    f = gnar_spectrum(params, ctx, GRID)
    v = f.values
    np.testing.assert_allclose(v, np.conj(np.swapaxes(v, 1, 2)), atol=1e-12)
    assert np.linalg.eigvalsh(v).min() > 0
    for field in (coherence(f), partial_coherence(f)):
        assert np.all((field.values >= 0) & (field.values <= 1))
        np.testing.assert_array_equal(np.diagonal(field.values, axis1=1, axis2=2), 1.0)
        np.testing.assert_array_equal(field.values, np.swapaxes(field.values, 1, 2))


@pytest.mark.property
@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bivariate_coherence_equals_partial_coherence(seed):
    M = random_hpd(np.random.default_rng(seed), 2, batch=5)
    f = SpectralField(np.linspace(0.1, 0.5, 5), M)
    np.testing.assert_allclose(coherence(f).values, partial_coherence(precision(f)).values, atol=1e-12)
