"""GNAR model: parameters, VAR embedding, simulation, least-squares fitting, BIC order selection."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .graph import NetworkContext


class EstimationError(RuntimeError):
    """Raised when an estimator cannot produce a result for valid input."""


@dataclass(frozen=True)
class GnarOrder:
    """Lag order p and per-lag stage depths s_1..s_p."""

    p: int
    s: tuple[int, ...]

    def __init__(self, p, s):
        s = tuple(int(v) for v in s)
        if int(p) < 1:
            raise ValueError(f"lag order must be >= 1, got {p}")
        if len(s) != int(p):
            raise ValueError(f"need {p} stage depths, got {len(s)}")
        if any(v < 0 for v in s):
            raise ValueError("stage depths must be nonnegative")
        object.__setattr__(self, "p", int(p))
        object.__setattr__(self, "s", s)

    @property
    def q(self) -> int:
        """Number of regression coefficients p + sum(s)."""
        return self.p + sum(self.s)

    def column_names(self) -> list[str]:
        names = []
        for k in range(self.p):
            names.append(f"alpha_{k + 1}")
            names.extend(f"beta_{k + 1}_{r + 1}" for r in range(self.s[k]))
        return names

    def check_against(self, ctx: NetworkContext) -> None:
        deepest = max(self.s, default=0)
        if deepest > ctx.r_max:
            raise ValueError(
                f"stage exceeds diameter: s = {deepest} but the network has r_max = {ctx.r_max}"
            )

    def __str__(self) -> str:
        return f"GNAR({self.p},[{','.join(map(str, self.s))}])"


@dataclass(frozen=True)
class GnarParams:
    """Global-alpha GNAR coefficients and innovation covariance.

    Parameters
    ----------
    alpha : sequence of float
        Autoregressive coefficients alpha_1..alpha_p.
    beta : sequence of sequence of float
        ``beta[k][r]`` is the coefficient of the (r+1)-stage average at lag k+1.
    sigma2 : float, optional
        Innovation variance when the covariance is ``sigma2 * I``.
    V : array_like, optional
        Full innovation covariance; takes precedence over ``sigma2``.
    """

    alpha: tuple[float, ...]
    beta: tuple[tuple[float, ...], ...]
    sigma2: float = 1.0
    V: np.ndarray | None = None

    def __init__(self, alpha, beta, sigma2=1.0, V=None):
        alpha = tuple(float(a) for a in alpha)
        beta = tuple(tuple(float(b) for b in row) for row in beta)
        if len(alpha) != len(beta):
            raise ValueError(f"alpha has {len(alpha)} lags but beta has {len(beta)}")
        if not alpha:
            raise ValueError("at least one lag is required")
        if V is not None:
            V = np.array(V, dtype=float)
            if V.ndim != 2 or V.shape[0] != V.shape[1]:
                raise ValueError("innovation covariance must be square")
            if not np.allclose(V, V.T, atol=1e-12):
                raise ValueError("innovation covariance must be symmetric")
            V.setflags(write=False)
        elif sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sigma2", float(sigma2))
        object.__setattr__(self, "V", V)

    @property
    def order(self) -> GnarOrder:
        return GnarOrder(len(self.alpha), [len(b) for b in self.beta])

    def innovation_cov(self, d: int) -> np.ndarray:
        if self.V is not None:
            if self.V.shape != (d, d):
                raise ValueError(f"innovation covariance is {self.V.shape}, expected ({d}, {d})")
            return np.array(self.V)
        return self.sigma2 * np.eye(d)

    def coef_vector(self) -> np.ndarray:
        """Coefficients in design-column order (alpha_1, beta_11.., alpha_2, ...)."""
        out = []
        for a, b in zip(self.alpha, self.beta):
            out.append(a)
            out.extend(b)
        return np.array(out)

    @classmethod
    def from_vector(cls, coef, order: GnarOrder, **kw) -> "GnarParams":
        coef = np.asarray(coef, dtype=float)
        if coef.size != order.q:
            raise ValueError(f"expected {order.q} coefficients, got {coef.size}")
        alpha, beta, pos = [], [], 0
        for k in range(order.p):
            alpha.append(coef[pos])
            beta.append(coef[pos + 1 : pos + 1 + order.s[k]])
            pos += 1 + order.s[k]
        return cls(alpha, beta, **kw)


def var_coefficients(params: GnarParams, ctx: NetworkContext) -> list[np.ndarray]:
    """Equivalent VAR matrices Phi_k = alpha_k I + sum_r beta_kr (W o A_r)."""
    params.order.check_against(ctx)
    eye = np.eye(ctx.d)
    return [
        a * eye + sum((b * ctx.weighted_stage(r + 1) for r, b in enumerate(bs)), np.zeros((ctx.d, ctx.d)))
        for a, bs in zip(params.alpha, params.beta)
    ]


def is_stationary(params: GnarParams) -> bool:
    """Sufficient condition sum_k (|alpha_k| + sum_r |beta_kr|) < 1."""
    total = sum(abs(a) + sum(abs(b) for b in bs) for a, bs in zip(params.alpha, params.beta))
    return total < 1


def neighbourhood_averages(x, ctx: NetworkContext, r: int) -> np.ndarray:
    """Z^r = (W o A_r) x for one time point (or row-wise for a T x d panel)."""
    x = np.asarray(x, dtype=float)
    return x @ ctx.weighted_stage(r).T


def _innovation_factor(V: np.ndarray) -> np.ndarray:
    """Matrix L with L L^T = V; accepts positive semidefinite V."""
    try:
        return np.linalg.cholesky(V)
    except np.linalg.LinAlgError:
        w, Q = np.linalg.eigh(V)
        if w.min() < -1e-10 * max(1.0, abs(w).max()):
            raise ValueError("innovation covariance is not positive semidefinite") from None
        return Q * np.sqrt(np.clip(w, 0, None))


def simulate_var(Phi, V, T: int, burn_in: int = 500, seed=None) -> np.ndarray:
    """Simulate a Gaussian VAR(p) from a zero initial state.

    Parameters
    ----------
    Phi : list of (d, d) arrays
        Lag matrices.
    V : (d, d) array
        Innovation covariance (positive semidefinite).
    T, burn_in : int
        Returned length and number of discarded leading rows.
    seed : int, Generator or SeedSequence, optional

    Returns
    -------
    (T, d) array
    """
    if T < 1 or burn_in < 0:
        raise ValueError("need T >= 1 and burn_in >= 0")
    Phi = [np.asarray(P, dtype=float) for P in Phi]
    V = np.asarray(V, dtype=float)
    d, p = V.shape[0], len(Phi)
    rng = np.random.default_rng(seed)
    L = _innovation_factor(V)
    n = T + burn_in
    X = rng.standard_normal((n + p, d)) @ L.T
    X[:p] = 0.0
    # row t of X holds u_t before the update; lag blocks stacked newest first
    stacked = np.hstack(Phi)
    for t in range(p, n + p):
        X[t] += stacked @ X[t - p : t][::-1].ravel()
    return X[p + burn_in :]


def simulate(params: GnarParams, ctx: NetworkContext, T: int, burn_in: int = 500, seed=None) -> np.ndarray:
    """Simulate a GNAR panel through its constrained-VAR representation.

    A warning is issued when the sufficient stationarity condition fails.
    """
    if not is_stationary(params):
        warnings.warn("GNAR coefficients violate the stationarity condition", RuntimeWarning, stacklevel=2)
    Phi = var_coefficients(params, ctx)
    return simulate_var(Phi, params.innovation_cov(ctx.d), T, burn_in, seed)


def _lagged_regressors(X: np.ndarray, order: GnarOrder, ctx: NetworkContext, start: int) -> np.ndarray:
    """Design columns for responses X[start:], as an (n, d, q) array."""
    T = X.shape[0]
    cols = []
    for k in range(1, order.p + 1):
        lag = X[start - k : T - k]
        cols.append(lag)
        for r in range(1, order.s[k - 1] + 1):
            cols.append(lag @ ctx.weighted_stage(r).T)
    return np.stack(cols, axis=-1)


def build_design(X, order: GnarOrder, ctx: NetworkContext, start: int | None = None):
    """Stacked response and design for the GNAR linear model.

    Parameters
    ----------
    X : (T, d) array
    order : GnarOrder
    ctx : NetworkContext
    start : int, optional
        First response row (0-based); defaults to ``order.p``.  A larger
        value restricts the fit to a common sample across orders.

    Returns
    -------
    y : (n d,) array
        Responses stacked time-major (all nodes at t, then t+1, ...).
    D : (n d, q) array
    """
    X = np.asarray(X, dtype=float)
    order.check_against(ctx)
    start = order.p if start is None else int(start)
    if start < order.p:
        raise ValueError("start must be at least the lag order")
    if X.shape[0] <= start:
        raise ValueError(f"need T > {start} observations, got T = {X.shape[0]}")
    D = _lagged_regressors(X, order, ctx, start)
    n, d, q = D.shape
    return X[start:].reshape(-1), D.reshape(n * d, q)


def _lstsq_checked(D: np.ndarray, y: np.ndarray, names: list[str]) -> np.ndarray:
    Q, R, piv = scipy.linalg.qr(D, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(D.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int((diag > tol).sum())
    if rank < D.shape[1]:
        bad = [names[j] for j in sorted(piv[rank:])]
        raise EstimationError(f"rank-deficient GNAR design; dependent columns: {', '.join(bad)}")
    coef = np.empty(D.shape[1])
    coef[piv] = scipy.linalg.solve_triangular(R, Q.T @ y)
    return coef


def residual_covariance(residuals) -> np.ndarray:
    """Maximum-likelihood residual covariance U^T U / n."""
    U = np.asarray(residuals, dtype=float)
    S = U.T @ U / U.shape[0]
    return (S + S.T) / 2


def fit_ols(X, order: GnarOrder, ctx: NetworkContext, start: int | None = None):
    """Least-squares GNAR fit.

    Returns
    -------
    params : GnarParams
        Fitted coefficients with ``V`` set to the residual covariance.
    residuals : (n, d) array
    """
    X = np.asarray(X, dtype=float)
    y, D = build_design(X, order, ctx, start)
    coef = _lstsq_checked(D, y, order.column_names())
    resid = (y - D @ coef).reshape(-1, ctx.d)
    params = GnarParams.from_vector(coef, order, V=residual_covariance(resid))
    return params, resid


def _logdet(V: np.ndarray) -> float:
    sign, val = np.linalg.slogdet(V)
    return val if sign > 0 else -np.inf


def _bic_penalty(q: int, n: int, d: int, divisor: str) -> float:
    nd = n * d
    if divisor == "n":
        return q * np.log(nd) / n
    if divisor == "nd":
        return q * np.log(nd) / nd
    raise ValueError(f"unknown BIC divisor {divisor!r}")


def gnar_bic(X, order: GnarOrder, ctx: NetworkContext, start: int | None = None, divisor: str = "n") -> float:
    """BIC of the fit on rows ``start..T-1``.

    ``divisor="n"`` gives log det V + q log(n d) / n, the criterion of the
    stacked Gaussian likelihood (n log det V) with n d observations.
    ``divisor="nd"`` divides the penalty by n d instead, which penalizes
    each coefficient d times more weakly.
    """
    _, resid = fit_ols(X, order, ctx, start)
    n, d = resid.shape
    return _logdet(residual_covariance(resid)) + _bic_penalty(order.q, n, d, divisor)


def candidate_orders(p_max: int, s_max: int):
    for p in range(1, p_max + 1):
        for s in itertools.product(range(s_max + 1), repeat=p):
            yield GnarOrder(p, s)


class _BicCache:
    """Sufficient statistics of the largest design, so every sub-order's
    residual covariance is available without refitting from the raw panel."""

    def __init__(self, X, ctx: NetworkContext, p_max: int, s_max: int):
        full = GnarOrder(p_max, [s_max] * p_max)
        D = _lagged_regressors(X, full, ctx, p_max)
        Y = X[p_max:]
        self.n, self.d = Y.shape
        self.names = full.column_names()
        self.G = np.einsum("tic,tie->ce", D, D)
        self.g = np.einsum("tic,ti->c", D, Y)
        self.M = np.einsum("tic,tj->cij", D, Y)
        self.N = np.einsum("tic,tje->ceij", D, D)
        self.YY = Y.T @ Y
        self.s_max = s_max

    def columns(self, order: GnarOrder) -> np.ndarray:
        stride = 1 + self.s_max
        return np.array([k * stride + r for k in range(order.p) for r in range(order.s[k] + 1)])

    def bic(self, order: GnarOrder, divisor: str = "n") -> float:
        c = self.columns(order)
        G = self.G[np.ix_(c, c)]
        try:
            b = np.linalg.solve(G, self.g[c])
        except np.linalg.LinAlgError:
            raise EstimationError(f"rank-deficient GNAR design for {order}") from None
        if np.linalg.cond(G) > 1e12:
            raise EstimationError(f"rank-deficient GNAR design for {order}")
        cross = np.einsum("c,cij->ij", b, self.M[c])
        quad = np.einsum("c,e,ceij->ij", b, b, self.N[np.ix_(c, c)])
        V = (self.YY - cross - cross.T + quad) / self.n
        return _logdet((V + V.T) / 2) + _bic_penalty(order.q, self.n, self.d, divisor)


def select_order_bic(
    X, ctx: NetworkContext, p_max: int, s_max: int, divisor: str = "n", return_scores: bool = False
):
    """Exhaustive BIC search over p <= p_max and every s_k in 0..s_max.

    All candidates are fitted on the common sample t = p_max+1..T and
    scored by :func:`gnar_bic`.  Ties go to the smaller q, then the
    smaller p.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    if s_max > ctx.r_max:
        raise ValueError(f"stage exceeds diameter: s_max = {s_max} > r_max = {ctx.r_max}")
    X = np.asarray(X, dtype=float)
    if X.shape[0] <= p_max + 1:
        raise ValueError(f"need T > {p_max + 1} observations")
    cache = _BicCache(X, ctx, p_max, s_max)
    scores = {}
    for order in candidate_orders(p_max, s_max):
        try:
            scores[order] = cache.bic(order, divisor)
        except EstimationError:
            continue
    if not scores:
        raise EstimationError("no candidate order could be fitted")
    best = min(scores, key=lambda o: (scores[o], o.q, o.p))
    return (best, scores) if return_scores else best
