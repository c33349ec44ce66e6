"""Additive P-spline factor model fitted by penalized least squares.

Each factor gets a cubic B-spline smooth whose coefficients are restricted to
the subspace where the smooth sums to zero over the training inputs (the
constraint is absorbed with a QR step).  All smooths and a global intercept
are estimated in one penalized least-squares solve; smoothing parameters are
either given or picked by GCV with a single coordinate-wise sweep over a
logarithmic grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from ..errors import InsufficientRowsError, OutOfDomainError, SingularSystemError
from .splines import SplineBasis, basis_matrix

LAMBDA_GRID = np.logspace(-4, 8, 13)
_START_LAMBDA = 1.0


@dataclass(frozen=True)
class GamFit:
    intercept: float
    coefs: tuple[np.ndarray, ...]
    lambdas: np.ndarray
    edf_smooth: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    basis: SplineBasis
    active: np.ndarray
    gcv: float
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diagnostics: dict = field(default_factory=dict)

    kind = "gam"

    @property
    def edf(self) -> float:
        return 1.0 + float(np.sum(self.edf_smooth))

    def smooth(self, k: int, x) -> np.ndarray:
        """Value of the ``k``-th (centered) smooth at points ``x``, clamped to [0, 1]."""
        x = np.clip(np.atleast_1d(np.asarray(x, dtype=float)), 0.0, 1.0)
        return basis_matrix(x, self.basis) @ self.coefs[k]

    def predict(self, f_row) -> np.ndarray | float:
        f = np.asarray(f_row, dtype=float)
        rows = np.atleast_2d(f)
        if not np.all(np.isfinite(rows)):
            raise OutOfDomainError("non-finite factor input")
        out = np.full(rows.shape[0], self.intercept)
        for k in range(rows.shape[1]):
            if self.active[k]:
                out += self.smooth(k, rows[:, k])
        return float(out[0]) if f.ndim == 1 else out


@dataclass(frozen=True)
class _Design:
    X: np.ndarray
    roots: list
    Z: list
    blocks: list
    active: np.ndarray


def _constraint_basis(B: np.ndarray) -> np.ndarray:
    """Columns spanning ``{z : 1'B z = 0}``."""
    c = B.sum(axis=0)[:, None]
    q, _ = np.linalg.qr(c, mode="complete")
    return q[:, 1:]


def build_design(F: np.ndarray, basis: SplineBasis) -> _Design:
    n, K = F.shape
    D = basis.penalty_root(2)
    cols = [np.ones((n, 1))]
    roots, Zs, blocks = [], [], []
    active = np.ptp(F, axis=0) > 0
    start = 1
    for k in range(K):
        if not active[k]:
            Zs.append(None)
            roots.append(None)
            blocks.append(slice(start, start))
            continue
        B = basis_matrix(F[:, k], basis)
        Z = _constraint_basis(B)
        cols.append(B @ Z)
        Zs.append(Z)
        roots.append(D @ Z)
        blocks.append(slice(start, start + Z.shape[1]))
        start += Z.shape[1]
    return _Design(np.hstack(cols), roots, Zs, blocks, active)


def penalty_matrix(design: _Design, lambdas) -> np.ndarray:
    """Block-diagonal ``sum_k lambda_k Z_k' D'D Z_k`` (zero for the intercept)."""
    p = design.X.shape[1]
    S = np.zeros((p, p))
    for k, blk in enumerate(design.blocks):
        if design.roots[k] is None:
            continue
        R = design.roots[k]
        S[blk, blk] = lambdas[k] * (R.T @ R)
    return S


def _solve(design: _Design, h: np.ndarray, lambdas):
    """Penalized LS through QR of the augmented system ``[X; sqrt(S)]``."""
    X = design.X
    n, p = X.shape
    rows = [X]
    for k, blk in enumerate(design.blocks):
        R = design.roots[k]
        if R is None:
            continue
        pad = np.zeros((R.shape[0], p))
        pad[:, blk] = np.sqrt(lambdas[k]) * R
        rows.append(pad)
    A = np.vstack(rows)
    y = np.concatenate([h, np.zeros(A.shape[0] - n)])
    Q, Rm = linalg.qr(A, mode="economic")
    d = np.abs(np.diag(Rm))
    if d.size == 0 or d.min() <= 1e-12 * max(d.max(), 1.0):
        raise SingularSystemError("penalized normal equations are singular")
    beta = linalg.solve_triangular(Rm, Q.T @ y)
    Q1 = Q[:n]
    edf_total = float(np.sum(Q1 * Q1))
    return beta, Q1, Rm, edf_total


def _gcv_sweep(design: _Design, h: np.ndarray, grid) -> np.ndarray:
    """One coordinate-wise pass over ``grid`` per factor, minimizing GCV.

    Trial fits use a Cholesky solve of the penalized Gram matrix.
    """
    X = design.X
    XtX = X.T @ X
    Xth = X.T @ h
    K = len(design.blocks)
    lam = np.full(K, _START_LAMBDA)
    pens = []
    for k in range(K):
        if design.roots[k] is None:
            pens.append(None)
            continue
        P = np.zeros_like(XtX)
        R = design.roots[k]
        P[design.blocks[k], design.blocks[k]] = R.T @ R
        pens.append(P)
    for k in range(K):
        if pens[k] is None:
            continue
        base = XtX + sum(lam[j] * pens[j] for j in range(K) if pens[j] is not None and j != k)
        scores = []
        for g in grid:
            try:
                c = linalg.cho_factor(base + g * pens[k])
            except linalg.LinAlgError:
                scores.append(np.inf)
                continue
            beta = linalg.cho_solve(c, Xth)
            edf = float(np.trace(linalg.cho_solve(c, XtX)))
            scores.append(_gcv(h, beta, X, edf))
        lam[k] = grid[int(np.argmin(scores))]
    return lam


def _gcv(h, beta, X, edf):
    n = h.size
    rss = float(np.sum((h - X @ beta) ** 2))
    return n * rss / max(n - edf, 1e-12) ** 2


def fit_gam(
    h,
    F,
    basis: SplineBasis = SplineBasis(),
    lambdas="auto",
    grid=LAMBDA_GRID,
) -> GamFit:
    """Fit ``h ~ intercept + sum_k f_k(F[:, k])`` with P-spline smooths.

    ``lambdas`` is a sequence with one smoothing parameter per factor or
    ``"auto"`` for GCV selection.  Constant factor columns carry no
    information and get an identically zero smooth.
    """
    h = np.asarray(h, dtype=float).ravel()
    F = np.asarray(F, dtype=float).reshape(h.size, -1)
    n, K = F.shape
    if np.any(F < 0) or np.any(F > 1) or not np.all(np.isfinite(F)):
        raise OutOfDomainError("factor inputs must be normalized to [0, 1]")
    if n <= K * basis.size:
        raise InsufficientRowsError(f"need more than {K * basis.size} rows, got {n}")
    design = build_design(F, basis)
    if isinstance(lambdas, str):
        if lambdas != "auto":
            raise ValueError("lambdas must be a sequence or 'auto'")
        lam = _gcv_sweep(design, h, grid)
    else:
        lam = np.asarray(lambdas, dtype=float).ravel()
        if lam.size != K or np.any(lam <= 0):
            raise ValueError("need one positive smoothing parameter per factor")
    beta, Q1, Rm, edf_total = _solve(design, h, lam)
    X = design.X
    fitted = X @ beta
    resid = h - fitted
    # diag((X'X + S)^-1 X'X) = diag(R^-1 Q1'X) since X = Q1 R
    Rinv = linalg.solve_triangular(Rm, np.eye(Rm.shape[0]))
    Fmat = Rinv @ (Q1.T @ X)
    edf_coef = np.diag(Fmat)
    coefs, edf_s = [], np.zeros(K)
    for k, blk in enumerate(design.blocks):
        if design.Z[k] is None:
            coefs.append(np.zeros(basis.size))
            continue
        coefs.append(design.Z[k] @ beta[blk])
        edf_s[k] = float(np.sum(edf_coef[blk]))
    sigma2 = float(np.sum(resid**2)) / max(n - edf_total, 1.0)
    Vb = sigma2 * (Rinv @ Rinv.T)
    pvals = _smooth_pvalues(beta, Vb, design, edf_s)
    return GamFit(
        intercept=float(beta[0]),
        coefs=tuple(coefs),
        lambdas=lam,
        edf_smooth=edf_s,
        residuals=resid,
        fitted=fitted,
        basis=basis,
        active=design.active,
        gcv=_gcv(h, beta, X, edf_total),
        beta=beta,
        pvalues=pvals,
    )


def _smooth_pvalues(beta, Vb, design, edf_s) -> np.ndarray:
    """Approximate Wald test of each smooth being zero (rank ~ its edf)."""
    K = len(design.blocks)
    out = np.ones(K)
    for k, blk in enumerate(design.blocks):
        if design.Z[k] is None:
            continue
        b = beta[blk]
        V = Vb[blk, blk]
        r = int(min(max(1, round(edf_s[k])), b.size))
        w, U = np.linalg.eigh(V)
        idx = np.argsort(w)[::-1][:r]
        w, U = w[idx], U[:, idx]
        if np.any(w <= 0):
            continue
        proj = U.T @ b
        stat = float(np.sum(proj**2 / w))
        out[k] = float(stats.chi2.sf(stat, df=r))
    return out
