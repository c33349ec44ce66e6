"""B-spline bases on [0, 1] with difference penalties (P-splines)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import OutOfDomainError


@dataclass(frozen=True)
class SplineBasis:
    """Uniform B-spline basis on [0, 1].

    The knot vector extends ``degree`` equal steps beyond both ends of the
    domain, so every basis function has the same shape and the basis sums to
    one everywhere on [0, 1].
    """

    degree: int = 3
    n_interior: int = 6

    def __post_init__(self):
        if self.degree < 0 or self.n_interior < 0:
            raise ValueError("degree and n_interior must be non-negative")

    @property
    def n_segments(self) -> int:
        return self.n_interior + 1

    @property
    def size(self) -> int:
        return self.n_segments + self.degree

    @property
    def knots(self) -> np.ndarray:
        dx = 1.0 / self.n_segments
        return np.arange(-self.degree, self.n_segments + self.degree + 1) * dx

    def penalty_root(self, order: int = 2) -> np.ndarray:
        """Difference matrix ``D`` such that the penalty is ``z' D'D z``."""
        return np.diff(np.eye(self.size), n=order, axis=0)


def basis_matrix(x, basis: SplineBasis) -> np.ndarray:
    """Evaluate all basis functions at each point of ``x`` (rows = points)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x)):
        raise OutOfDomainError("spline inputs must lie in [0, 1]")
    t = basis.knots
    nseg = basis.n_segments
    d = basis.degree
    # x == 1 is evaluated as the left limit of the last interval
    seg = np.minimum(np.floor(x * nseg).astype(int), nseg - 1)
    j0 = seg + d
    B = np.zeros((x.size, t.size - 1))
    B[np.arange(x.size), j0] = 1.0
    for k in range(1, d + 1):
        nb = t.size - 1 - k
        left = (x[:, None] - t[None, :nb]) / (t[k : k + nb] - t[:nb])[None, :]
        right = (t[k + 1 : k + 1 + nb][None, :] - x[:, None]) / (t[k + 1 : k + 1 + nb] - t[1 : 1 + nb])[None, :]
        B = left * B[:, :nb] + right * B[:, 1 : nb + 1]
    return B


def bspline_basis(x: float, basis: SplineBasis) -> np.ndarray:
    """Vector of the ``basis.size`` basis values at a single point."""
    return basis_matrix([x], basis)[0]
