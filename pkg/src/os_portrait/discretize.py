"""Dense matrix realizations of L(eps) y = i eps y'' + q(x) y with y(-1) = y(1) = 0.

Two schemes share one contract: the matrix acts on values at the interior
nodes of a grid and equals ``1j * eps * D2 + diag(q(nodes))``.

* ``chebyshev`` -- collocation on Chebyshev-Gauss-Lobatto points with the
  boundary rows and columns removed.
* ``fd2`` -- the three-point Laplacian on a uniform grid.

``n`` is always the number of interior nodes, i.e. the matrix dimension.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, InvalidSize, NonPositiveEpsilon
from .profile import QuadraticProfile, evaluate

MIN_SIZE = 4


class Scheme(str, Enum):
    CHEBYSHEV = "chebyshev"
    FD2 = "fd2"


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray
    kind: str  # "chebyshev" or "uniform"

    def __len__(self):
        return len(self.nodes)


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    matrix: np.ndarray
    grid: Grid
    epsilon: float
    scheme: Scheme
    profile: QuadraticProfile

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def reynolds(self) -> float:
        return 1.0 / self.epsilon


def _check(epsilon: float, n: int):
    if int(n) != n or n < MIN_SIZE:
        raise InvalidSize(f"need at least {MIN_SIZE} interior nodes, got {n}")
    if not epsilon > 0.0:
        raise NonPositiveEpsilon(f"epsilon must be positive, got {epsilon}")


def chebyshev_d2(n_interior: int) -> tuple[np.ndarray, np.ndarray]:
    """Interior nodes (ascending) and the Dirichlet second-derivative matrix.

    Nodes come from the sine form of the Gauss-Lobatto points so that they are
    exactly antisymmetric; node differences use the product-of-sines identity
    and the diagonals of D and D2 are set by the negative-sum rule.
    """
    N = n_interior + 1  # polynomial degree
    k = np.arange(N + 1)
    x = np.sin(np.pi * (N - 2 * k) / (2.0 * N))[::-1]  # ascending, x[0] = -1
    th = np.pi * k / N
    # x_i - x_j = cos(th_i) - cos(th_j) for the descending order; reversed below
    dx = -2.0 * np.sin((th[:, None] + th[None, :]) / 2) * np.sin((th[:, None] - th[None, :]) / 2)
    dx = dx[::-1, ::-1]
    np.fill_diagonal(dx, 1.0)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** k
    c = c[::-1]
    D = np.outer(c, 1.0 / c) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    D2 = D @ D
    np.fill_diagonal(D2, 0.0)
    np.fill_diagonal(D2, -D2.sum(axis=1))
    return x[1:-1].copy(), D2[1:-1, 1:-1].copy()


def fd2_laplacian(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform interior nodes with h = 2/(n+1) and the tridiagonal (1, -2, 1)/h^2."""
    j = np.arange(1, n + 1)
    x = (2.0 * j - (n + 1)) / (n + 1)
    h = 2.0 / (n + 1)
    T = (np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)) / (h * h)
    return x, T


def _assemble(p, epsilon, nodes, d2, scheme, kind):
    A = 1j * epsilon * d2 + np.diag(evaluate(p, nodes)).astype(complex)
    A.setflags(write=False)
    nodes.setflags(write=False)
    return DiscretizedOperator(A, Grid(nodes, kind), float(epsilon), scheme, p)


def build_chebyshev(p: QuadraticProfile, epsilon: float, n: int) -> DiscretizedOperator:
    _check(epsilon, n)
    nodes, d2 = chebyshev_d2(int(n))
    return _assemble(p, epsilon, nodes, d2, Scheme.CHEBYSHEV, "chebyshev")


def build_finite_difference(p: QuadraticProfile, epsilon: float, n: int) -> DiscretizedOperator:
    _check(epsilon, n)
    nodes, t = fd2_laplacian(int(n))
    return _assemble(p, epsilon, nodes, t, Scheme.FD2, "uniform")


def build(p: QuadraticProfile, epsilon: float, n: int, scheme) -> DiscretizedOperator:
    scheme = Scheme(scheme)
    if scheme is Scheme.CHEBYSHEV:
        return build_chebyshev(p, epsilon, n)
    return build_finite_difference(p, epsilon, n)


def apply(op: DiscretizedOperator, v) -> np.ndarray:
    v = np.asarray(v)
    if v.shape != (op.n,):
        raise DimensionMismatch(f"vector of shape {v.shape} for operator of size {op.n}")
    return op.matrix @ v
