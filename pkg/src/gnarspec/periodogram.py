"""Nonparametric and penalized spectral estimation.

DFT and periodograms, kernel smoothing, the real-valued augmentation of
Hermitian matrices, network-constrained covariance selection per
frequency, and the unrestricted / penalized VAR plug-in estimators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covsel import covariance_selection
from .gnar import EstimationError
from .graph import NetworkContext, augment_mask, induced_adjacency
from .spectra import SpectralField, fourier_grid, hermitian_part, var_spectrum

PENALTIES = ("none", "a1", "induced")


@dataclass(frozen=True)
class SmoothingSpec:
    """Symmetric kernel W(-m..m) normalized so that mean(W) = 1."""

    bandwidth: int
    weights: np.ndarray

    def __post_init__(self):
        m = int(self.bandwidth)
        w = np.asarray(self.weights, dtype=float)
        if m < 0:
            raise ValueError("bandwidth must be nonnegative")
        if w.shape != (2 * m + 1,):
            raise ValueError(f"need {2 * m + 1} kernel weights, got {w.size}")
        if np.any(w < 0) or w[m] <= 0:
            raise ValueError("kernel weights must be nonnegative with positive centre")
        if not np.allclose(w, w[::-1]):
            raise ValueError("kernel weights must be symmetric")
        w = w * (2 * m + 1) / w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "bandwidth", m)
        object.__setattr__(self, "weights", w)

    @classmethod
    def daniell(cls, m: int) -> "SmoothingSpec":
        return cls(m, np.ones(2 * int(m) + 1))

    @classmethod
    def default(cls, T: int) -> "SmoothingSpec":
        """Daniell kernel with m = floor(sqrt(T))."""
        return cls.daniell(int(np.floor(np.sqrt(T))))


def dft(X) -> np.ndarray:
    """J(l/T) = T^-1/2 sum_{t=1}^T X_t exp(-2 pi i t l / T) for l = 0..T-1.

    Returns
    -------
    (T, d) complex array, row l holding J(l/T).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    T = X.shape[0]
    if T < 2:
        raise ValueError("need at least two observations")
    # numpy's FFT indexes time from 0; the shift to t = 1 is a phase factor
    phase = np.exp(-2j * np.pi * np.arange(T) / T)
    return phase[:, None] * np.fft.fft(X, axis=0) / np.sqrt(T)


def raw_periodogram(J) -> SpectralField:
    """Rank-one periodogram J J^H on the full circle of Fourier frequencies."""
    J = np.asarray(J)
    T = J.shape[0]
    I = J[:, :, None] * np.conj(J[:, None, :])
    return SpectralField(np.arange(T) / T, I, "spectrum")


def smooth(raw: SpectralField, spec: SmoothingSpec) -> SpectralField:
    """Kernel average over neighbouring Fourier frequencies, indices wrapped mod T."""
    T = len(raw)
    m = spec.bandwidth
    if m >= T / 2:
        raise ValueError(f"bandwidth {m} must be below T/2 = {T / 2}")
    out = np.zeros_like(raw.values)
    for k in range(-m, m + 1):
        out += spec.weights[k + m] * np.roll(raw.values, -k, axis=0)
    out /= 2 * m + 1
    return SpectralField(raw.freqs, hermitian_part(out), "spectrum")


def smoothed_periodogram(X, spec: SmoothingSpec | None = None) -> SpectralField:
    """Smoothed periodogram restricted to the Fourier grid l = 1..floor(T/2)-1."""
    X = np.asarray(X, dtype=float)
    T = X.shape[0]
    spec = SmoothingSpec.default(T) if spec is None else spec
    full = smooth(raw_periodogram(dft(X)), spec)
    keep = np.arange(1, T // 2)
    return SpectralField(fourier_grid(T), full.values[keep], "spectrum")


def augment(M) -> np.ndarray:
    """Real 2d x 2d form (1/2)[[C, -Q], [Q, C]] of a Hermitian M = C - iQ (batched)."""
    M = np.asarray(M)
    scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
    if np.max(np.abs(M - np.conj(np.swapaxes(M, -1, -2))), initial=0.0) > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian")
    C, Q = np.real(M), -np.imag(M)
    top = np.concatenate([C, -Q], axis=-1)
    bottom = np.concatenate([Q, C], axis=-1)
    return np.concatenate([top, bottom], axis=-2) / 2


def de_augment(Sigma) -> np.ndarray:
    """Hermitian matrix C - iQ with C = S11 + S22 and Q = S21 - S12 (batched).

    For a 2d x 2d input without the block pattern this is the image of its
    orthogonal projection onto block-structured matrices.
    """
    Sigma = np.asarray(Sigma, dtype=float)
    d = Sigma.shape[-1] // 2
    S11, S12 = Sigma[..., :d, :d], Sigma[..., :d, d:]
    S21, S22 = Sigma[..., d:, :d], Sigma[..., d:, d:]
    C = S11 + S22
    Q = S21 - S12
    C = (C + np.swapaxes(C, -1, -2)) / 2
    Q = (Q - np.swapaxes(Q, -1, -2)) / 2
    return C - 1j * Q


def _ridge(S, threshold: float, dim: int):
    """Add 1e-8 * trace / dim to matrices whose smallest eigenvalue is below ``threshold``."""
    S = np.array(S)
    w = np.linalg.eigvalsh(S)[..., 0]
    low = w < threshold
    if np.any(low):
        tr = np.real(np.trace(S, axis1=-2, axis2=-1))
        eps = 1e-8 * tr / dim
        idx = np.arange(S.shape[-1])
        if S.ndim == 2:
            S[idx, idx] += eps
        else:
            rows = np.nonzero(low)[0]
            S[rows[:, None], idx[None, :], idx[None, :]] += eps[rows][:, None]
    return S


def constrained_mle(Sigma_tilde, mask, method: str = "regression"):
    """Covariance selection on augmented real matrices.

    Parameters
    ----------
    Sigma_tilde : (2d, 2d) or (n, 2d, 2d) array
        Real symmetric matrices; a ridge of 1e-8 * trace / (2d) is added
        where the smallest eigenvalue is below 1e-10.
    mask : (2d, 2d) array
        Free off-diagonal precision entries.
    method : {"regression", "newton"}

    Returns
    -------
    Sigma_hat, Theta_hat
    """
    S = np.asarray(Sigma_tilde, dtype=float)
    S = _ridge(S, 1e-10, S.shape[-1])
    return covariance_selection(S, mask, method=method)


def penalty_mask(ctx: NetworkContext, penalty: str, r_star: int = 1):
    """d x d mask for a penalty name, or None for no penalty."""
    if penalty == "none":
        return None
    if penalty == "a1":
        return ctx.stages.stage(1).copy()
    if penalty == "induced":
        return induced_adjacency(ctx.stages, r_star)
    raise ValueError(f"unknown penalty {penalty!r}; choose from {PENALTIES}")


def penalize_field(field: SpectralField, mask, engine: str = "complex", method: str = "regression") -> SpectralField:
    """Frequency-wise covariance selection of a spectral field under ``mask``.

    ``engine="augmented"`` runs augment, real covariance selection with the
    tiled mask and de-augment.  ``engine="complex"`` solves the equivalent
    Hermitian problem directly: the augmented optimum is block structured,
    so both give the same estimate.
    """
    if mask is None:
        return field
    mask = np.asarray(mask) != 0
    if engine == "augmented":
        Sig, _ = constrained_mle(augment(field.values), augment_mask(mask), method)
        vals = de_augment(Sig)
    elif engine == "complex":
        d = field.d
        # eigenvalues of the augmented matrix are half those of M; the ridge is scaled to match
        M = _ridge(hermitian_part(field.values), 2e-10, d)
        vals, _ = covariance_selection(M, mask, method=method)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return SpectralField(field.freqs, hermitian_part(vals), "spectrum")


def np_spectrum_penalized(
    X,
    ctx: NetworkContext | None = None,
    penalty: str = "a1",
    r_star: int = 1,
    spec: SmoothingSpec | None = None,
    engine: str = "complex",
    method: str = "regression",
) -> SpectralField:
    """Smoothed periodogram refined by network-constrained covariance selection.

    ``penalty`` is ``"none"`` (plain smoothed periodogram), ``"a1"`` (first
    stage adjacency) or ``"induced"`` (pairs within distance 2 r*).
    """
    field = smoothed_periodogram(X, spec)
    if penalty == "none":
        return field
    if ctx is None:
        raise ValueError("a network is required for a penalized estimate")
    return penalize_field(field, penalty_mask(ctx, penalty, r_star), engine, method)


def _var_design(X, p: int, start: int):
    T = X.shape[0]
    return np.hstack([X[start - k : T - k] for k in range(1, p + 1)]), X[start:]


def fit_var_ols(X, p: int, start: int | None = None):
    """Unrestricted VAR(p) least squares without intercept.

    Returns
    -------
    Phi : list of (d, d) arrays
    V : (d, d) residual covariance (divisor n)
    resid : (n, d) residuals
    """
    X = np.asarray(X, dtype=float)
    T, d = X.shape
    start = p if start is None else start
    if T - start <= p * d:
        raise EstimationError(f"VAR({p}) overparameterized: {T - start} usable rows for {p * d} regressors per equation")
    Z, Y = _var_design(X, p, start)
    B, _, rank, _ = np.linalg.lstsq(Z, Y, rcond=None)
    if rank < Z.shape[1]:
        raise EstimationError(f"singular VAR({p}) design (rank {rank} < {Z.shape[1]})")
    resid = Y - Z @ B
    V = resid.T @ resid / resid.shape[0]
    Phi = [B[k * d : (k + 1) * d].T for k in range(p)]
    return Phi, (V + V.T) / 2, resid


def select_var_order_bic(X, p_max: int) -> int:
    """Lag minimizing log det V + p d^2 log(n) / n on the common sample t > p_max."""
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    best, best_p = np.inf, None
    n = X.shape[0] - p_max
    for p in range(1, p_max + 1):
        try:
            _, V, _ = fit_var_ols(X, p, start=p_max)
        except EstimationError:
            continue
        sign, logdet = np.linalg.slogdet(V)
        crit = (logdet if sign > 0 else -np.inf) + p * d * d * np.log(n) / n
        if crit < best:
            best, best_p = crit, p
    if best_p is None:
        raise EstimationError("no VAR order could be fitted")
    return best_p


def parametric_var_penalized(
    X,
    p: int | None = None,
    penalty: str = "none",
    ctx: NetworkContext | None = None,
    r_star: int = 1,
    grid=None,
    p_max: int = 5,
    engine: str = "complex",
    method: str = "regression",
) -> SpectralField:
    """VAR plug-in spectrum, optionally refined by covariance selection per frequency.

    With ``p=None`` the lag is chosen by BIC up to ``p_max``.
    """
    X = np.asarray(X, dtype=float)
    if p is None:
        p = select_var_order_bic(X, p_max)
    Phi, V, _ = fit_var_ols(X, p)
    grid = fourier_grid(X.shape[0]) if grid is None else grid
    field = var_spectrum(Phi, V, grid)
    if penalty == "none":
        return field
    if ctx is None:
        raise ValueError("a network is required for a penalized estimate")
    return penalize_field(field, penalty_mask(ctx, penalty, r_star), engine, method)
