"""Spectral densities, precision matrices, coherence and partial coherence of GNAR/VAR processes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gnar import GnarParams
from .graph import NetworkContext

COND_LIMIT = 1e12
KINDS = ("spectrum", "precision", "coherence", "partial_coherence")


@dataclass(frozen=True)
class SpectralField:
    """A family of d x d matrices indexed by frequency.

    Attributes
    ----------
    freqs : (n,) array
        Frequencies in cycles per time step.
    values : (n, d, d) array
        Complex for spectra and precisions, real for coherence fields.
    kind : str
        One of ``spectrum``, ``precision``, ``coherence``, ``partial_coherence``.
    """

    freqs: np.ndarray
    values: np.ndarray
    kind: str = "spectrum"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        freqs = np.asarray(self.freqs, dtype=float)
        values = np.asarray(self.values)
        if values.ndim != 3 or values.shape[1] != values.shape[2]:
            raise ValueError("values must have shape (n, d, d)")
        if freqs.shape != (values.shape[0],):
            raise ValueError("one matrix per frequency is required")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "values", values)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.values.shape[0]

    def pair(self, i: int, j: int) -> np.ndarray:
        return self.values[:, i, j]


def fourier_grid(T: int) -> np.ndarray:
    """Fourier frequencies l/T for l = 1..floor(T/2)-1."""
    if T < 4:
        raise ValueError(f"need T >= 4 for a nonempty Fourier grid, got {T}")
    return np.arange(1, T // 2) / T


def check_grid(grid) -> np.ndarray:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("frequency grid must be a nonempty 1-d array")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("frequency grid must be strictly increasing")
    if grid[0] < 0 or grid[-1] > 0.5:
        raise ValueError("grid frequencies must lie in [0, 0.5]")
    return grid


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return (M + np.conj(np.swapaxes(M, -1, -2))) / 2


def _guarded_inverse(M: np.ndarray, freqs: np.ndarray, what: str, scale: float | None = None) -> np.ndarray:
    """Batch inverse rejecting matrices whose condition number exceeds COND_LIMIT.

    The smallest singular value is also compared with ``scale`` (default: the
    largest singular value over the batch) so near-zero 1 x 1 or uniformly
    tiny matrices are caught too.
    """
    sv = np.linalg.svd(M, compute_uv=False)
    scale = sv[:, 0].max() if scale is None else scale
    bad = ~((sv[:, -1] * COND_LIMIT > sv[:, 0]) & (sv[:, -1] * COND_LIMIT > scale))
    if bad.any():
        listed = ", ".join(f"{w:.6g}" for w in freqs[bad][:10])
        raise np.linalg.LinAlgError(f"{what} is singular or ill-conditioned at omega = {listed}")
    return np.linalg.inv(M)


def _transfer_spectrum(U: np.ndarray, V: np.ndarray, freqs: np.ndarray, scale: float) -> SpectralField:
    Uinv = _guarded_inverse(U, freqs, "U(omega)", scale)
    f = Uinv @ V @ np.conj(np.swapaxes(Uinv, -1, -2))
    return SpectralField(freqs, hermitian_part(f), "spectrum")


def var_spectrum(Phi, V, grid) -> SpectralField:
    """Spectrum U(w)^-1 V U(w)^-H with U(w) = I - sum_k Phi_k exp(-2 pi i k w)."""
    grid = check_grid(grid)
    V = np.asarray(V, dtype=float)
    d = V.shape[0]
    U = np.broadcast_to(np.eye(d, dtype=complex), (grid.size, d, d)).copy()
    for k, P in enumerate(Phi, start=1):
        U -= np.exp(-2j * np.pi * k * grid)[:, None, None] * np.asarray(P, dtype=float)
    scale = 1 + sum(np.linalg.norm(P, 2) for P in Phi)
    return _transfer_spectrum(U, V, grid, scale)


def gnar_spectrum(params: GnarParams, ctx: NetworkContext, grid) -> SpectralField:
    """GNAR spectrum assembled stage by stage from alpha and beta.

    U(w) = (1 - sum_k alpha_k z^k) I - sum_r (sum_k beta_kr z^k) (W o A_r), z = exp(-2 pi i w).
    """
    grid = check_grid(grid)
    order = params.order
    order.check_against(ctx)
    d = ctx.d
    z = np.exp(-2j * np.pi * np.outer(grid, np.arange(1, order.p + 1)))
    own = 1 - z @ np.array(params.alpha)
    U = own[:, None, None] * np.eye(d)
    for r in range(1, max(order.s, default=0) + 1):
        b = np.array([bs[r - 1] if len(bs) >= r else 0.0 for bs in params.beta])
        U = U - (z @ b)[:, None, None] * ctx.weighted_stage(r)
    scale = 1 + sum(abs(a) + sum(map(abs, bs)) for a, bs in zip(params.alpha, params.beta))
    return _transfer_spectrum(U, params.innovation_cov(d), grid, scale)


def precision(field: SpectralField) -> SpectralField:
    """Inverse spectrum S(w) = f(w)^-1 with a condition-number guard."""
    S = _guarded_inverse(field.values, field.freqs, "spectral matrix")
    return SpectralField(field.freqs, hermitian_part(S), "precision")


def _normalized_modulus(M: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    diag = np.real(np.diagonal(M, axis1=1, axis2=2))
    if np.any(~(diag > 0)):
        k = np.nonzero(~(diag > 0).all(axis=1))[0][0]
        raise ValueError(f"nonpositive diagonal entry at omega = {freqs[k]:.6g}")
    out = np.abs(M) ** 2 / (diag[:, :, None] * diag[:, None, :])
    out = np.clip((out + np.swapaxes(out, 1, 2)) / 2, 0.0, 1.0)
    idx = np.arange(M.shape[1])
    out[:, idx, idx] = 1.0
    return out


def coherence(field: SpectralField) -> SpectralField:
    """Squared coherence |f_ij|^2 / (f_ii f_jj)."""
    return SpectralField(field.freqs, _normalized_modulus(field.values, field.freqs), "coherence")


def partial_coherence(field: SpectralField) -> SpectralField:
    """Squared partial coherence |S_ij|^2 / (S_ii S_jj) from a precision field."""
    if field.kind == "spectrum":
        field = precision(field)
    vals = _normalized_modulus(field.values, field.freqs)
    return SpectralField(field.freqs, vals, "partial_coherence")


def all_targets(spectrum: SpectralField) -> dict[str, SpectralField]:
    """Spectrum, coherence and partial coherence from one spectral field."""
    return {
        "spectrum": spectrum,
        "coherence": coherence(spectrum),
        "partial_coherence": partial_coherence(precision(spectrum)),
    }
