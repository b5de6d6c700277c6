"""Midpoint grid on an interval and the killed fractional Laplacian on it.

Integral operators are stored as kernel matrices ``K`` acting through the
quadrature weights: ``(K f)_i = sum_j K[i, j] f_j w_j``. The generator matrix
follows the same convention, so its action on a grid vector is ``K @ (w * u)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import gamma

from .errors import ConfigError, DomainError

__all__ = [
    "Grid",
    "Kind",
    "OperatorMatrix",
    "build_grid",
    "fractional_constant",
    "assemble_generator",
    "killing_density_phi",
]

MIN_NODES = 16


@dataclass(frozen=True, eq=False)
class Grid:
    a: float
    b: float
    n: int
    nodes: np.ndarray
    h: float
    weights: np.ndarray
    delta: np.ndarray

    @property
    def length(self) -> float:
        return self.b - self.a

    def is_symmetric(self) -> bool:
        return math.isclose(self.a, -self.b)


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def build_grid(a: float, b: float, n: int, *, min_nodes: int = MIN_NODES) -> Grid:
    """Uniform midpoint grid ``x_i = a + (i - 1/2) h`` on ``(a, b)``."""
    if not a < b:
        raise ConfigError(f"domain needs a < b, got ({a}, {b})")
    if n < min_nodes:
        raise ConfigError(f"grid needs n >= {min_nodes} nodes, got n={n}")
    h = (b - a) / n
    x = a + (np.arange(n) + 0.5) * h
    delta = np.minimum(x - a, b - x)
    return Grid(float(a), float(b), int(n), _frozen(x), h, _frozen(np.full(n, h)), _frozen(delta))


class Kind(str, enum.Enum):
    GENERATOR = "generator"
    HEAT = "heat"
    GREEN = "green"
    GREEN_PSI = "green_psi"
    GREEN_PSI_STAR = "green_psi_star"
    JUMPING = "jumping"
    FUNCTION = "function"


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Symmetric grid-indexed kernel matrix.

    ``apply(f)`` evaluates ``sum_j K[i, j] f_j w_j``.
    """

    entries: np.ndarray
    kind: Kind
    grid: Grid
    meta: dict = field(default_factory=dict)

    def apply(self, f):
        return self.entries @ (self.grid.weights * np.asarray(f, dtype=float))

    def compose(self, other: "OperatorMatrix") -> np.ndarray:
        """Kernel of the composition ``self o other``: ``K1 W K2``."""
        return self.entries @ (self.grid.weights[:, None] * other.entries)

    def asymmetry(self) -> float:
        e = self.entries
        scale = np.abs(e).max()
        return float(np.abs(e - e.T).max() / scale) if scale else 0.0


def fractional_constant(beta: float) -> float:
    """Normalizing constant of ``(-Delta)^(beta/2)`` on the line."""
    return 2.0**beta * gamma((1.0 + beta) / 2.0) / (math.sqrt(math.pi) * abs(gamma(-beta / 2.0)))


def _check_beta(beta):
    if not 0.0 < beta < 2.0:
        raise DomainError(f"beta must lie in (0, 2), got {beta}")


def killing_density_phi(grid: Grid, beta: float, i=None):
    """Exterior mass ``c * int_{D^c} |x - y|^(-1-beta) dy`` at node ``i``
    (all nodes when ``i`` is None)."""
    _check_beta(beta)
    c = fractional_constant(beta)
    x = grid.nodes if i is None else grid.nodes[i]
    return c / beta * ((x - grid.a) ** -beta + (grid.b - x) ** -beta)


def assemble_generator(grid: Grid, beta: float) -> OperatorMatrix:
    """Kernel matrix of ``(-Delta)^(beta/2)`` restricted to the grid interval.

    Off-diagonal couplings are exact cell integrals of ``c |r|^(-1-beta)``.
    The principal-value integral over the node's own cell is replaced by its
    second-order Taylor term, ``-c (h/2)^(2-beta)/(2-beta) u''``, with ``u''``
    the three-point difference and zero exterior values. The exterior enters
    only through the closed-form killing term on the diagonal.
    """
    _check_beta(beta)
    n, h = grid.n, grid.h
    c = fractional_constant(beta)
    k = np.arange(1, n)
    cell = c * (((k - 0.5) * h) ** -beta - ((k + 0.5) * h) ** -beta) / beta
    jump = toeplitz(np.concatenate(([0.0], cell)))
    taylor = c * (h / 2.0) ** (2.0 - beta) / ((2.0 - beta) * h * h)
    kill = killing_density_phi(grid, beta)
    m = -jump
    m[np.arange(n - 1), np.arange(1, n)] -= taylor
    m[np.arange(1, n), np.arange(n - 1)] -= taylor
    m[np.diag_indices(n)] = jump.sum(axis=1) + 2.0 * taylor + kill
    # operator matrix m acts directly on vectors; the kernel divides by w_j
    entries = m / h
    entries = 0.5 * (entries + entries.T)
    entries.setflags(write=False)
    return OperatorMatrix(entries, Kind.GENERATOR, grid, {"beta": beta})
