"""Volatility connectedness networks.

Garman-Klass daily variance, log-volatility, sparse Lasso-VAR with lag
chosen by BIC, moving-average coefficients, generalized forecast error
variance decomposition and the connectivity-preserving threshold graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from sklearn.linear_model import Lasso, LassoCV
from sklearn.model_selection import KFold

from .gnar import EstimationError, simulate_var

GK_FLOOR = 1e-12


def garman_klass(open_, high, low, close) -> np.ndarray:
    """Range-based daily variance estimate from (log) open, high, low and close.

    0.511 (H-L)^2 - 0.019 [(C-O)(H+L-2O) - 2(H-O)(L-O)] - 0.383 (C-O)^2
    """
    O, H, L, C = (np.asarray(v, dtype=float) for v in (open_, high, low, close))
    tol = 1e-12 * np.maximum(1.0, np.abs(H))
    if np.any(L > np.minimum(O, C) + tol) or np.any(np.maximum(O, C) > H + tol):
        raise ValueError("OHLC ordering violated: need low <= min(open, close) <= max(open, close) <= high")
    return (
        0.511 * (H - L) ** 2
        - 0.019 * ((C - O) * (H + L - 2 * O) - 2 * (H - O) * (L - O))
        - 0.383 * (C - O) ** 2
    )


def log_volatility(sigma2) -> np.ndarray:
    """log(sigma) = log(sigma^2) / 2, with variances floored at 1e-12."""
    return 0.5 * np.log(np.maximum(np.asarray(sigma2, dtype=float), GK_FLOOR))


@dataclass(frozen=True)
class LassoVarFit:
    """Sparse VAR estimate.

    Attributes
    ----------
    Pi : list of (d, d) arrays
    V : (d, d) residual covariance
    p : selected lag
    bic : dict mapping each candidate lag to its criterion
    lambdas : (d,) penalty chosen per equation at the selected lag
    """

    Pi: list
    V: np.ndarray
    p: int
    bic: dict = field(default_factory=dict)
    lambdas: np.ndarray | None = None


def _lagged(X, p, start):
    T = X.shape[0]
    return np.hstack([X[start - k : T - k] for k in range(1, p + 1)]), X[start:]


def lambda_grid(Z, y, n_lambda=50, ratio=1e-3) -> np.ndarray:
    """Log grid from the smallest penalty that zeroes every coefficient down to ratio times it."""
    # the relative nudge keeps the top point strictly inside the all-zero region despite rounding
    lam_max = np.max(np.abs(Z.T @ y)) / Z.shape[0] * (1 + 1e-10)
    if lam_max == 0:
        lam_max = 1.0
    return np.geomspace(lam_max, ratio * lam_max, n_lambda)


def _fit_lags(X, p, start, folds, n_lambda, lambda_index):
    Z, Y = _lagged(X, p, start)
    n, d = Y.shape
    mu, sd = Z.mean(axis=0), Z.std(axis=0)
    Zs = (Z - mu) / sd
    Yc = Y - Y.mean(axis=0)
    coef = np.zeros((d, Z.shape[1]))
    lambdas = np.zeros(d)
    for i in range(d):
        grid = lambda_grid(Zs, Yc[:, i], n_lambda)
        if lambda_index is None:
            model = LassoCV(alphas=grid, cv=KFold(folds), fit_intercept=False, max_iter=10000, tol=1e-6)
        else:
            model = Lasso(alpha=grid[lambda_index], fit_intercept=False, max_iter=10000, tol=1e-6)
        model.fit(Zs, Yc[:, i])
        coef[i] = model.coef_ / sd
        lambdas[i] = model.alpha_ if lambda_index is None else grid[lambda_index]
    resid = Yc - (Z - mu) @ coef.T
    V = resid.T @ resid / n
    Pi = [coef[:, k * d : (k + 1) * d] for k in range(p)]
    return Pi, (V + V.T) / 2, int(np.count_nonzero(coef)), lambdas


def lasso_var(X, p_max: int = 5, folds: int = 10, n_lambda: int = 50, lambda_index: int | None = None) -> LassoVarFit:
    """Equation-by-equation lasso VAR with lag chosen by BIC.

    Each equation regresses the centred response on standardized lags;
    the penalty minimizes the mean squared error of ``folds``-fold
    cross-validation over contiguous time blocks.  For every p up to
    ``p_max`` the criterion log det V + (nonzeros) log(n) / n is evaluated
    on the common sample t > p_max using the lasso residuals.

    ``lambda_index`` bypasses cross-validation and uses that grid point
    (0 is the largest penalty, giving an all-zero fit).
    """
    X = np.asarray(X, dtype=float)
    T, d = X.shape
    flat = np.nonzero(X.std(axis=0) == 0)[0]
    if flat.size:
        raise ValueError(f"series for node {int(flat[0])} has zero variance")
    if T - p_max < max(folds * 2, p_max * d // 5 + 1):
        raise ValueError(f"too few observations ({T}) for p_max = {p_max} with {folds} folds")
    results, bic = {}, {}
    n = T - p_max
    for p in range(1, p_max + 1):
        Pi, V, nnz, lambdas = _fit_lags(X, p, p_max, folds, n_lambda, lambda_index)
        sign, logdet = np.linalg.slogdet(V)
        bic[p] = (logdet if sign > 0 else -np.inf) + nnz * np.log(n) / n
        results[p] = (Pi, V, lambdas)
    p_best = min(bic, key=lambda p: (bic[p], p))
    Pi, V, lambdas = results[p_best]
    return LassoVarFit(Pi, V, p_best, bic, lambdas)


def ma_coefficients(Pi, H: int) -> list[np.ndarray]:
    """B_0 = I and B_h = sum_{j=1}^{min(h,p)} B_{h-j} Pi_j for h = 1..H."""
    if H < 0:
        raise ValueError("horizon must be nonnegative")
    Pi = [np.asarray(P, dtype=float) for P in Pi]
    d = Pi[0].shape[0]
    B = [np.eye(d)]
    for h in range(1, H + 1):
        B.append(sum(B[h - j] @ Pi[j - 1] for j in range(1, min(h, len(Pi)) + 1)))
    return B


def gfevd(B, V, H: int, start: int = 1) -> np.ndarray:
    """Row-normalized generalized forecast error variance decomposition.

    psi_ij = sum_h (B_h V)_ij^2 / (V_jj sum_h (B_h V B_h^T)_ii), summed over
    h = start..start+H-1, then each row divided by its sum.  The default
    ``start=1`` sums h = 1..H; ``start=0`` gives the h = 0..H-1 convention.
    """
    if H < 1:
        raise ValueError("horizon must be >= 1")
    if start not in (0, 1):
        raise ValueError("start must be 0 or 1")
    V = np.asarray(V, dtype=float)
    if len(B) < start + H:
        raise ValueError(f"need MA coefficients up to lag {start + H - 1}")
    hs = [np.asarray(B[h]) for h in range(start, start + H)]
    num = sum((Bh @ V) ** 2 for Bh in hs)
    den = sum(np.diag(Bh @ V @ Bh.T) for Bh in hs)
    vjj = np.diag(V)
    if np.any(vjj <= 0) or np.any(den <= 0):
        raise EstimationError("degenerate forecast error variance (zero denominator)")
    raw = num / (den[:, None] * vjj[None, :])
    return raw / raw.sum(axis=1, keepdims=True)


def _bilateral(psi):
    M = np.maximum(psi, psi.T)
    np.fill_diagonal(M, -np.inf)
    return M


def is_connected_at(psi, tau) -> bool:
    A = _bilateral(np.asarray(psi)) >= tau
    return connected_components(A, directed=False)[0] == 1


@dataclass(frozen=True)
class GfevdResult:
    """Variance decomposition and its thresholded network.

    Attributes
    ----------
    psi : (d, d) row-normalized decomposition
    horizon : forecast horizon H
    tau_star : largest candidate threshold keeping the graph connected
    weights : (d, d) symmetric weights (psi_ij + psi_ji) / 2 on retained edges, else 0
    edges : retained pairs (i, j), i < j, 0-based
    """

    psi: np.ndarray
    horizon: int
    tau_star: float
    weights: np.ndarray
    edges: tuple
    fit: LassoVarFit | None = None


def build_network(psi, candidates=None):
    """Connectivity-preserving threshold graph.

    Returns
    -------
    tau_star : float
    weights : (d, d) array
    edges : tuple of (i, j)
    """
    psi = np.asarray(psi, dtype=float)
    d = psi.shape[0]
    bil = _bilateral(psi)
    if candidates is None:
        iu = np.triu_indices(d, 1)
        candidates = np.unique(bil[iu])
    cand = np.unique(np.asarray(candidates, dtype=float))
    if cand.size == 0:
        raise ValueError("empty candidate threshold set")
    if not is_connected_at(psi, cand[0]):
        raise EstimationError("no candidate threshold yields a connected graph")
    # connectivity only degrades as tau grows, so bisect on the sorted grid
    lo, hi = 0, cand.size - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if is_connected_at(psi, cand[mid]):
            lo = mid
        else:
            hi = mid - 1
    tau = float(cand[lo])
    keep = bil >= tau
    W = np.where(keep, (psi + psi.T) / 2, 0.0)
    iu, ju = np.nonzero(np.triu(keep, 1))
    return tau, W, tuple(zip(iu.tolist(), ju.tolist()))


def volatility_network(log_vol, H: int = 10, p_max: int = 5, start: int = 1, candidates=None, **lasso_kw) -> GfevdResult:
    """Lasso-VAR, GFEVD and threshold network from a log-volatility panel."""
    fit = lasso_var(log_vol, p_max=p_max, **lasso_kw)
    B = ma_coefficients(fit.Pi, start + H)
    psi = gfevd(B, fit.V, H, start)
    tau, W, edges = build_network(psi, candidates)
    return GfevdResult(psi, H, tau, W, edges, fit)


def ohlc_pipeline(open_, high, low, close, H: int = 10, p_max: int = 5, start: int = 1, **kw) -> GfevdResult:
    """Full pipeline from (T, d) OHLC arrays to the connectedness network."""
    X = log_volatility(garman_klass(open_, high, low, close))
    return volatility_network(X, H=H, p_max=p_max, start=start, **kw)


def synthetic_ohlc(Phi, V, T: int, mean_log_vol: float = np.log(0.01), steps: int = 78, burn_in: int = 200, seed=None):
    """OHLC panel whose daily log-volatility follows a VAR(1).

    Each day's log price is a Brownian path over ``steps`` intraday
    increments with standard deviation exp(x_t + mean_log_vol), starting at
    zero open.

    Returns
    -------
    open_, high, low, close : (T, d) arrays
    log_vol : (T, d) array of the latent daily log-volatility
    """
    rng = np.random.default_rng(seed)
    x = simulate_var([Phi], V, T, burn_in, rng) + mean_log_vol
    sigma = np.exp(x)
    incr = rng.standard_normal((T, steps, x.shape[1])) * (sigma / np.sqrt(steps))[:, None, :]
    path = np.concatenate([np.zeros((T, 1, x.shape[1])), np.cumsum(incr, axis=1)], axis=1)
    return path[:, 0], path.max(axis=1), path.min(axis=1), path[:, -1], x
