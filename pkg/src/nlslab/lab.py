"""One-stop construction of every operator the solvers and checks share."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import bernstein, discretize, kernels, spectral
from .bernstein import BernsteinSpec, Role
from .discretize import Grid, OperatorMatrix
from .kernels import BoundaryData, PoissonKernel
from .spectral import FunctionalCalculus, Spectrum


@dataclass(eq=False)
class Lab:
    """Grid, spectrum and the ``psi``-calculus for one ``(beta, psi, n)`` setting.

    Derived operators are built lazily and cached.
    """

    grid: Grid
    beta: float
    psi: BernsteinSpec
    spectrum: Spectrum
    extrapolation_order: int = 3

    @property
    def phi(self) -> BernsteinSpec:
        return bernstein.stable(self.beta / 2.0, Role.PHI)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    def V(self, t):
        return bernstein.renewal_V(self.phi, t)

    @cached_property
    def v_delta(self) -> np.ndarray:
        return self.V(self.grid.delta)

    @cached_property
    def gpsi(self) -> OperatorMatrix:
        return spectral.green_matrix(self.spectrum, "Gpsi", self.psi)

    @cached_property
    def gpsi_star(self) -> OperatorMatrix:
        return spectral.green_matrix(self.spectrum, "Gpsi*", self.psi)

    @cached_property
    def green(self) -> OperatorMatrix:
        return spectral.green_matrix(self.spectrum, "G")

    @cached_property
    def psi_op(self) -> FunctionalCalculus:
        return spectral.apply_psi(self.spectrum, self.psi)

    @cached_property
    def poisson(self) -> PoissonKernel:
        return kernels.poisson_kernel(self.gpsi, V=self.V, order=self.extrapolation_order)

    @cached_property
    def p_sigma(self) -> np.ndarray:
        return kernels.poisson_potential(self.poisson, BoundaryData.sigma())

    def poisson_potential(self, zeta: BoundaryData) -> np.ndarray:
        return kernels.poisson_potential(self.poisson, zeta)

    def green_potential(self, f) -> np.ndarray:
        """``G^psi f`` on the grid."""
        return self.gpsi.apply(f)


def build_lab(n: int, beta: float, psi: BernsteinSpec | None = None, alpha: float | None = None,
              a: float = -1.0, b: float = 1.0, extrapolation_order: int = 3) -> Lab:
    """Assemble and diagonalize the generator for ``(-Delta)^(beta/2)`` on
    ``(a, b)``; ``psi`` defaults to the stable ``lam**(alpha/2)``."""
    if psi is None:
        if alpha is None:
            raise ValueError("give either psi or alpha")
        if not 0.0 < alpha < 2.0:
            raise bernstein.DomainError(f"alpha must lie in (0, 2), got {alpha}")
        psi = bernstein.stable(alpha / 2.0)
    grid = discretize.build_grid(a, b, n)
    gen = discretize.assemble_generator(grid, beta)
    return Lab(grid, beta, psi, spectral.eigendecompose(gen), extrapolation_order)
