"""Gaussian covariance selection: maximum likelihood under prescribed precision zeros.

Solves, independently for each matrix in a batch,

    maximize  log det Theta - tr(S Theta)
    subject to Theta_ij = 0 for i != j with mask_ij = 0,

for real symmetric or complex Hermitian S.  The optimum satisfies
Sigma = Theta^-1 with Sigma_ij = S_ij on the diagonal and on mask pairs.

Two solvers are provided.  ``regression`` (the default) is the cyclic
node-wise regression algorithm, vectorized over the batch.  ``newton`` is
a batched damped Newton method, run on the precision entries (primal) or
on the unmatched covariance entries (dual), whichever has fewer unknowns;
it serves as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gnar import EstimationError

SOLVE_TOL = 1e-12
ACCEPT_TOL = 1e-9


class ConvergenceError(EstimationError):
    """The solver did not converge; the message carries the final duality gap."""


@dataclass(frozen=True)
class _Directions:
    """Hermitian search directions c E_ab + conj(c) E_ba."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def size(self) -> int:
        return self.a.size

    def gradient(self, R):
        """tr(R D_u) = 2 Re(c_u R_ba) for Hermitian R."""
        return 2 * np.real(self.c * R[:, self.b, self.a])

    def hessian(self, P):
        """H_uv = tr(P D_u P D_v) for Hermitian P."""
        a, b, c = self.a, self.b, self.c
        A, B, C, E = a[:, None], b[:, None], a[None, :], b[None, :]
        cu, cv = c[:, None], c[None, :]
        cuc, cvc = np.conj(cu), np.conj(cv)
        H = (
            cu * cv * P[:, E, A] * P[:, B, C]
            + cu * cvc * P[:, C, A] * P[:, B, E]
            + cuc * cv * P[:, E, B] * P[:, A, C]
            + cuc * cvc * P[:, C, B] * P[:, A, E]
        )
        H = np.real(H)
        return (H + np.swapaxes(H, 1, 2)) / 2

    def assemble(self, delta, m, dtype):
        out = np.zeros((delta.shape[0], m, m), dtype=dtype)
        np.add.at(out, (slice(None), self.a, self.b), delta * self.c)
        np.add.at(out, (slice(None), self.b, self.a), delta * np.conj(self.c))
        return out

    @classmethod
    def build(cls, pairs, m, diagonal, complex_):
        ia, ib = pairs
        a = [ia]
        b = [ib]
        c = [np.ones(ia.size, dtype=complex)]
        if complex_:
            a.append(ia)
            b.append(ib)
            c.append(np.full(ia.size, 1j))
        if diagonal:
            idx = np.arange(m)
            a.insert(0, idx)
            b.insert(0, idx)
            c.insert(0, np.full(m, 0.5, dtype=complex))
        c = np.concatenate(c)
        return cls(np.concatenate(a), np.concatenate(b), c if complex_ else c.real)


def mask_pairs(mask, present=True):
    """Upper-triangle index pairs where ``mask`` is nonzero (or zero)."""
    mask = np.asarray(mask)
    iu, ju = np.triu_indices(mask.shape[0], 1)
    keep = (mask[iu, ju] != 0) == present
    return iu[keep], ju[keep]


def _herm(M):
    return (M + np.conj(np.swapaxes(M, -1, -2))) / 2


def _logdet_pd(M):
    w = np.linalg.eigvalsh(M)
    ok = w[:, 0] > 0
    out = np.full(M.shape[0], -np.inf)
    out[ok] = np.log(w[ok]).sum(axis=1)
    return out


def _tr_prod(A, B):
    return np.real(np.einsum("nij,nji->n", A, B))


class _Primal:
    """Unknowns: diagonal and mask entries of Theta."""

    def __init__(self, dirs):
        self.dirs = dirs

    def start(self, S):
        idx = np.arange(S.shape[1])
        Theta = np.zeros_like(S)
        Theta[:, idx, idx] = 1 / np.real(S[:, idx, idx])
        return Theta

    def objective(self, Theta, S):
        return _logdet_pd(Theta) - _tr_prod(S, Theta)

    def grad_hess(self, Theta, S):
        Sigma = _herm(np.linalg.inv(Theta))
        return self.dirs.gradient(Sigma - S), self.dirs.hessian(Sigma)

    def residual(self, Theta, S):
        R = np.linalg.inv(Theta) - S
        scale = np.max(np.real(np.diagonal(S, axis1=1, axis2=2)), axis=1)
        return np.max(np.abs(R[:, self.dirs.b, self.dirs.a]), axis=1) / scale


class _Dual:
    """Unknowns: covariance entries off the mask, starting from S."""

    def __init__(self, dirs):
        self.dirs = dirs

    def start(self, S):
        return S.copy()

    def objective(self, W, S):
        return _logdet_pd(W)

    def grad_hess(self, W, S):
        Theta = _herm(np.linalg.inv(W))
        return self.dirs.gradient(Theta), self.dirs.hessian(Theta)

    def residual(self, W, S):
        Theta = np.linalg.inv(W)
        scale = np.max(np.real(np.diagonal(Theta, axis1=1, axis2=2)), axis=1)
        return np.max(np.abs(Theta[:, self.dirs.b, self.dirs.a]), axis=1) / scale


def _damped_newton(S, form, max_iter):
    """Batched Newton ascent with Armijo backtracking; returns iterate and residuals."""
    n, m, _ = S.shape
    X = form.start(S)
    fval = form.objective(X, S)
    res = form.residual(X, S)
    active = res > SOLVE_TOL
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        Xa, Sa = X[idx], S[idx]
        g, H = form.grad_hess(Xa, Sa)
        try:
            delta = np.linalg.solve(H, g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            delta = np.stack([np.linalg.lstsq(h, v, rcond=None)[0] for h, v in zip(H, g)])
        dec = np.einsum("nu,nu->n", g, delta)
        D = form.dirs.assemble(delta, m, X.dtype)
        step = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        for _ in range(50):
            k = np.nonzero(pending)[0]
            if k.size == 0:
                break
            trial = Xa[k] + step[k, None, None] * D[k]
            ft = form.objective(trial, Sa[k])
            f0 = fval[idx[k]]
            ok = ft >= f0 + 0.25 * step[k] * dec[k] - 64 * np.finfo(float).eps * np.abs(f0)
            Xa[k[ok]] = trial[ok]
            fval[idx[k[ok]]] = ft[ok]
            pending[k[ok]] = False
            step[k[~ok]] /= 2
        X[idx] = Xa
        res[idx] = form.residual(Xa, Sa)
        # a failed line search means no further progress is possible in floating point
        active[idx] = (res[idx] > SOLVE_TOL) & ~pending
    return X, res


def _zero_off_mask(Theta, absent):
    Theta[:, absent[0], absent[1]] = 0
    Theta[:, absent[1], absent[0]] = 0
    return Theta


def _duality_report(S, Theta, res):
    m = S.shape[1]
    gap = np.abs(_tr_prod(S, Theta) - m)
    k = int(np.argmax(res))
    return f"duality gap |tr(S Theta) - {m}| = {gap[k]:.3e}, max relative residual {res[k]:.3e} (batch item {k})"


def _newton_batch(S, mask, max_iter):
    m = S.shape[1]
    complex_ = np.iscomplexobj(S)
    present = mask_pairs(mask, True)
    absent = mask_pairs(mask, False)
    factor = 2 if complex_ else 1
    if m + factor * present[0].size <= factor * absent[0].size:
        form = _Primal(_Directions.build(present, m, True, complex_))
        Theta, res = _damped_newton(S, form, max_iter)
        Theta = _zero_off_mask(_herm(Theta), absent)
    else:
        form = _Dual(_Directions.build(absent, m, False, complex_))
        W, res = _damped_newton(S, form, max_iter)
        Theta = _zero_off_mask(_herm(np.linalg.inv(W)), absent)
    return _herm(np.linalg.inv(Theta)), Theta, res


def _regression_batch(S, mask, max_iter, tol=1e-9):
    """Cyclic regression: update one row/column of W at a time until entries settle."""
    n, m, _ = S.shape
    W = S.copy()
    nbrs = [np.nonzero((np.asarray(mask)[j] != 0) & (np.arange(m) != j))[0] for j in range(m)]
    others = [np.delete(np.arange(m), j) for j in range(m)]
    betas = [None] * m
    for sweep in range(max_iter):
        change = np.zeros(n)
        for j in range(m):
            rest, nb = others[j], nbrs[j]
            new = np.zeros((n, rest.size), dtype=S.dtype)
            beta = np.zeros((n, rest.size), dtype=S.dtype)
            if nb.size:
                W11 = W[:, nb[:, None], nb[None, :]]
                b = np.linalg.solve(W11, S[:, nb, j][..., None])[..., 0]
                beta[:, np.searchsorted(rest, nb)] = b
                new = np.einsum("nij,nj->ni", W[:, rest[:, None], nb[None, :]], b)
            change = np.maximum(change, np.max(np.abs(W[:, rest, j] - new), axis=1))
            W[:, rest, j] = new
            W[:, j, rest] = np.conj(new)
            betas[j] = beta
        if change.max() < tol:
            break
    else:
        Theta = _herm(np.linalg.inv(W))
        raise ConvergenceError(
            f"cyclic regression did not converge in {max_iter} sweeps; "
            + _duality_report(S, Theta, change)
        )
    Theta = np.zeros_like(S)
    for j in range(m):
        rest, beta = others[j], betas[j]
        theta_jj = 1 / np.real(W[:, j, j] - np.einsum("ni,ni->n", W[:, j, rest], beta))
        Theta[:, j, j] = theta_jj
        Theta[:, rest, j] = -beta * theta_jj[:, None]
    Theta = _zero_off_mask(_herm(Theta), mask_pairs(mask, False))
    return _herm(W), Theta, change


def covariance_selection(S, mask, method: str = "regression", max_iter: int | None = None):
    """Constrained Gaussian MLE for a batch of Hermitian positive definite matrices.

    Parameters
    ----------
    S : (n, m, m) or (m, m) array
        Real symmetric or complex Hermitian, positive definite.
    mask : (m, m) array
        Nonzero off-diagonal entries mark free precision entries.  The
        diagonal is always free.
    method : {"regression", "newton"}
    max_iter : int, optional
        Regression sweeps (default 10000) or Newton iterations (default 200).

    Returns
    -------
    Sigma_hat, Theta_hat : arrays shaped like ``S``
        ``Theta_hat`` has exact zeros off the mask and ``Sigma_hat`` is its inverse.
    """
    S = np.asarray(S)
    single = S.ndim == 2
    if single:
        S = S[None]
    S = _herm(S.astype(complex if np.iscomplexobj(S) else float))
    mask = np.asarray(mask) != 0
    m = S.shape[1]
    if mask.shape != (m, m):
        raise ValueError(f"mask shape {mask.shape} does not match matrices of size {m}")
    if not np.array_equal(mask, mask.T):
        raise ValueError("mask must be symmetric")
    np.fill_diagonal(mask, False)
    absent = mask_pairs(mask, False)

    if absent[0].size == 0:
        Sigma, Theta = S.copy(), _herm(np.linalg.inv(S))
    elif not mask.any():
        idx = np.arange(m)
        Sigma = np.zeros_like(S)
        Sigma[:, idx, idx] = S[:, idx, idx]
        Theta = np.zeros_like(S)
        Theta[:, idx, idx] = 1 / np.real(S[:, idx, idx])
    else:
        if method == "newton":
            Sigma, Theta, res = _newton_batch(S, mask, 200 if max_iter is None else max_iter)
            if np.any(~(res <= ACCEPT_TOL)):
                raise ConvergenceError("covariance selection did not converge; " + _duality_report(S, Theta, res))
        elif method == "regression":
            Sigma, Theta, _ = _regression_batch(S, mask, 10000 if max_iter is None else max_iter)
        else:
            raise ValueError(f"unknown method {method!r}")
    if single:
        return Sigma[0], Theta[0]
    return Sigma, Theta
