"""Share of variance carried by the leading principal components of rolling panels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def eigen_shares(panel) -> np.ndarray:
    """Descending eigenvalues of the sample covariance, normalized to sum to one."""
    X = np.asarray(panel, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("panel must be a 2-D array with at least two rows")
    w = np.linalg.eigvalsh(np.cov(X, rowvar=False).reshape(X.shape[1], X.shape[1]))[::-1]
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0:
        return np.full(w.size, 1.0 / w.size)
    return w / total


def n_components_for(shares, threshold: float = 0.9) -> int:
    """Smallest ``k`` whose cumulative share reaches ``threshold``."""
    c = np.cumsum(shares)
    return int(np.searchsorted(c, threshold - 1e-12) + 1)


def top_k_share(panel, k: int) -> float:
    return float(np.sum(eigen_shares(panel)[:k]))


@dataclass(frozen=True)
class PcaDynamics:
    k: int
    returns: np.ndarray
    innovations: np.ndarray
    residuals: np.ndarray


def pca_explained_dynamics(returns, innovations, residuals, k_fixed: int | None = None,
                           threshold: float = 0.9) -> PcaDynamics:
    """Top-``k`` variance share per window for three aligned sequences of panels.

    ``k`` defaults to the number of components reaching ``threshold`` on the
    first returns window and is then held fixed.
    """
    returns, innovations, residuals = list(returns), list(innovations), list(residuals)
    if not (len(returns) == len(innovations) == len(residuals)) or not returns:
        raise ValueError("need the same non-zero number of windows for each panel")
    k = k_fixed if k_fixed is not None else n_components_for(eigen_shares(returns[0]), threshold)
    series = [np.array([top_k_share(w, k) for w in seq]) for seq in (returns, innovations, residuals)]
    return PcaDynamics(k, *series)
