"""r-dependent spectral representation by distance-calibrated soft-thresholding of the precision field."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .gnar import EstimationError
from .graph import StageStructure
from .spectra import SpectralField, hermitian_part


def soft_threshold(z, rho):
    """Complex soft-thresholding (|z| - rho)_+ exp(i arg z), with sft(0) = 0."""
    if np.any(np.asarray(rho) < 0):
        raise ValueError("threshold must be nonnegative")
    z = np.asarray(z)
    # exp(i arg z) rather than z/|z|: stays finite for subnormal moduli, and arg(0) = 0
    return np.maximum(np.abs(z) - rho, 0.0) * np.exp(1j * np.angle(z))


@dataclass(frozen=True)
class ThresholdLadder:
    """Thresholds xi^(1..r*) chosen from the precision field."""

    xi: tuple[float, ...]

    @property
    def r_star(self) -> int:
        return len(self.xi)

    def __getitem__(self, r: int) -> float:
        if not 1 <= r <= self.r_star:
            raise IndexError(f"stage {r} outside 1..{self.r_star}")
        return self.xi[r - 1]


def distance_band(stages: StageStructure, r: int) -> np.ndarray:
    """Boolean mask of pairs at distance 2r-1 or 2r."""
    D = stages.distances
    return (D == 2 * r - 1) | (D == 2 * r)


def select_thresholds(S_hat: SpectralField, stages: StageStructure, r_star: int) -> ThresholdLadder:
    """xi^(r) = min over frequencies and pairs at distance 2r-1 or 2r of |S_ij(omega)|."""
    if r_star < 1:
        raise ValueError("r_star must be >= 1")
    mod = np.abs(S_hat.values)
    xi = []
    for r in range(1, r_star + 1):
        band = distance_band(stages, r)
        if not band.any():
            raise ValueError(
                f"no node pairs at distance {2 * r - 1} or {2 * r} for r = {r}; network too small for r* = {r_star}"
            )
        xi.append(float(mod[:, band].min()))
    for r in range(1, r_star):
        if xi[r - 1] < xi[r]:
            warnings.warn(
                f"threshold ladder increases from r = {r} ({xi[r - 1]:.4g}) to r = {r + 1} ({xi[r]:.4g})",
                RuntimeWarning,
                stacklevel=2,
            )
    return ThresholdLadder(tuple(xi))


def threshold_precision(S_hat: SpectralField, ladder, r: int | None = None) -> SpectralField:
    """Soft-threshold a precision field at xi^(r); diagonal entries are preserved.

    ``ladder`` is a :class:`ThresholdLadder` (then ``r`` selects the rung) or
    a plain nonnegative threshold.  Each diagonal entry is first moved
    outward by xi along its own phase, so the common threshold returns it
    to its original value.
    """
    xi = ladder[r] if isinstance(ladder, ThresholdLadder) else float(ladder)
    S = np.array(S_hat.values, dtype=complex)
    idx = np.arange(S.shape[1])
    diag = S[:, idx, idx]
    S[:, idx, idx] = diag + xi * np.exp(1j * np.angle(diag))
    return SpectralField(S_hat.freqs, hermitian_part(soft_threshold(S, xi)), "precision")


def r_dependent_spectrum(S_r: SpectralField, ridge_fallback: bool = False) -> SpectralField:
    """Invert a thresholded precision field frequency by frequency.

    Singular matrices raise :class:`EstimationError` listing the offending
    frequencies, unless ``ridge_fallback`` adds 1e-8 * mean|diag| * I there.
    """
    S = np.array(S_r.values)
    w = np.linalg.eigvalsh(S)
    scale = np.max(np.abs(w), axis=1)
    singular = ~(np.min(np.abs(w), axis=1) > 1e-12 * scale)
    if singular.any():
        if not ridge_fallback:
            listed = ", ".join(f"{v:.6g}" for v in S_r.freqs[singular][:10])
            raise EstimationError(f"thresholded precision is singular at omega = {listed}")
        idx = np.arange(S.shape[1])
        ridge = 1e-8 * np.mean(np.abs(S[:, idx, idx]), axis=1)
        rows = np.nonzero(singular)[0]
        S[rows[:, None], idx[None, :], idx[None, :]] += ridge[rows][:, None]
    return SpectralField(S_r.freqs, hermitian_part(np.linalg.inv(S)), "spectrum")


def hierarchy(S_hat: SpectralField, stages: StageStructure, r_star: int, ridge_fallback: bool = False):
    """Ladder, thresholded precisions and r-dependent spectra for r = 1..r*."""
    ladder = select_thresholds(S_hat, stages, r_star)
    precisions = {r: threshold_precision(S_hat, ladder, r) for r in range(1, r_star + 1)}
    spectra = {r: r_dependent_spectrum(P, ridge_fallback) for r, P in precisions.items()}
    return ladder, precisions, spectra
