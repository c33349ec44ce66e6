"""Reference implementations written independently of the package internals."""

import numpy as np
from scipy.interpolate import BSpline


def ols(h, F):
    X = np.column_stack([np.ones(len(h)), F])
    return np.linalg.solve(X.T @ X, X.T @ h)


def uniform_bspline_design(x, n_segments=7, degree=3):
    step = 1.0 / n_segments
    t = np.arange(-degree, n_segments + degree + 1) * step
    x = np.minimum(np.asarray(x, dtype=float), 1.0 - 1e-15)
    return BSpline.design_matrix(x, t, degree).toarray()


def gam_oracle(h, F, lambdas, n_segments=7, degree=3):
    """Penalized normal equations with sum-to-zero constraints as Lagrange rows.

    Returns (intercept, list of per-factor coefficient vectors, fitted values).
    """
    n, K = F.shape
    Bs = [uniform_bspline_design(F[:, k], n_segments, degree) for k in range(K)]
    q = Bs[0].shape[1]
    B = np.hstack([np.ones((n, 1))] + Bs)
    p = B.shape[1]
    D = np.diff(np.eye(q), n=2, axis=0)
    P = np.zeros((p, p))
    C = np.zeros((K, p))
    for k in range(K):
        sl = slice(1 + k * q, 1 + (k + 1) * q)
        P[sl, sl] = lambdas[k] * D.T @ D
        C[k, sl] = Bs[k].sum(axis=0)
    kkt = np.block([[B.T @ B + P, C.T], [C, np.zeros((K, K))]])
    rhs = np.concatenate([B.T @ h, np.zeros(K)])
    sol = np.linalg.solve(kkt, rhs)[:p]
    coefs = [sol[1 + k * q: 1 + (k + 1) * q] for k in range(K)]
    return sol[0], coefs, B @ sol


def simplex_grid(n_assets, step):
    """Every weight vector on the unit simplex whose entries are multiples of ``step``."""
    m = int(round(1.0 / step))
    pts = []

    def rec(prefix, left, k):
        if k == 1:
            pts.append(prefix + [left])
            return
        for j in range(left + 1):
            rec(prefix + [j], left - j, k - 1)

    rec([], m, n_assets)
    return np.array(pts, dtype=float) / m


def discrete_cvar(portfolio_returns, beta):
    """CVaR of equally likely outcomes (rows of a 2-D array) by the tail-average formula."""
    x = np.atleast_2d(portfolio_returns)
    S = x.shape[1]
    m = S * (1.0 - beta)
    losses = -np.sort(x, axis=1)  # worst outcome first
    k = int(np.floor(m + 1e-12))
    tail = losses[:, :k].sum(axis=1)
    if k < S:
        tail = tail + (m - k) * losses[:, k]
    return tail / m


def cvar_by_nu_search(portfolio_returns, beta):
    """Minimize the Rockafellar-Uryasev bracket over every candidate nu (the losses)."""
    loss = -np.asarray(portfolio_returns, dtype=float)
    S = loss.size
    vals = [nu + np.maximum(loss - nu, 0).sum() / (S * (1 - beta)) for nu in loss]
    return min(vals)


def grid_objective_min(R, alpha, beta, step):
    grid = simplex_grid(R.shape[1], step)
    x = grid @ R.T
    obj = -alpha * x.mean(axis=1) + (1 - alpha) * discrete_cvar(x, beta)
    return float(obj.min())
