"""Eigendecomposition of the discrete generator and its functional calculus.

With ``(lam_j, phi_j)`` orthonormal under the grid inner product, a scalar map
``g`` becomes the kernel ``sum_j g(lam_j) phi_j phi_j^T``. Heat kernels, the
outer operator ``psi(-L)`` and all Green kernels are instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bernstein
from .bernstein import BernsteinSpec, Family, Role
from .discretize import Grid, Kind, OperatorMatrix
from .errors import ConfigError, NumericalError

__all__ = [
    "Spectrum",
    "FunctionalCalculus",
    "eigendecompose",
    "function_of",
    "apply_psi",
    "heat_kernel",
    "green_matrix",
    "green_oracle_subordination",
]


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column j is phi_{j+1}
    grid: Grid
    generator: OperatorMatrix

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def phi1(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    def kernel(self, values) -> np.ndarray:
        """``sum_j values[j] phi_j phi_j^T`` as a symmetric array."""
        phi = self.eigenvectors
        k = (phi * values) @ phi.T
        return 0.5 * (k + k.T)

    def coefficients(self, u) -> np.ndarray:
        """Grid-inner-product coefficients of ``u`` in the eigenbasis."""
        return self.eigenvectors.T @ (self.grid.weights * np.asarray(u, dtype=float))

    def residuals(self) -> np.ndarray:
        """Sup-norm eigen-residual ``|K W phi_j - lam_j phi_j|`` per mode."""
        act = self.generator.entries @ (self.grid.weights[:, None] * self.eigenvectors)
        return np.abs(act - self.eigenvectors * self.eigenvalues).max(axis=0)


def eigendecompose(a: OperatorMatrix) -> Spectrum:
    """Dense symmetric eigensolve of ``W^(1/2) K W^(1/2)``.

    Eigenvectors are rescaled to grid orthonormality; ``phi_1`` is made
    positive and every other mode gets a positive first significant entry.
    """
    if a.kind is not Kind.GENERATOR:
        raise ConfigError(f"eigendecompose expects a generator matrix, got {a.kind}")
    root = np.sqrt(a.grid.weights)
    sym = root[:, None] * a.entries * root[None, :]
    try:
        lam, vec = np.linalg.eigh(0.5 * (sym + sym.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    if lam[0] <= 0:
        raise NumericalError("generator has a non-positive eigenvalue (assembly bug)",
                             {"lambda_1": float(lam[0])})
    phi = vec / root[:, None]
    if np.sum(phi[:, 0]) < 0:
        phi[:, 0] *= -1
    if np.any(phi[:, 0] <= 0):
        raise NumericalError("principal eigenvector changes sign")
    cutoff = 1e-8 * np.abs(phi).max(axis=0)
    first = np.argmax(np.abs(phi) > cutoff, axis=0)
    signs = np.sign(phi[first, np.arange(phi.shape[1])])
    signs[0] = 1.0
    phi = phi * signs
    lam.setflags(write=False)
    phi.setflags(write=False)
    return Spectrum(lam, phi, a.grid, a)


@dataclass(frozen=True, eq=False)
class FunctionalCalculus:
    spectrum: Spectrum
    g: Callable
    values: np.ndarray
    matrix: OperatorMatrix

    def apply(self, u) -> np.ndarray:
        return self.matrix.apply(u)

    def then(self, other: "FunctionalCalculus") -> np.ndarray:
        """Kernel of ``other o self``."""
        return other.matrix.compose(self.matrix)


def function_of(spec: Spectrum, g: Callable, kind: Kind = Kind.FUNCTION, **meta) -> FunctionalCalculus:
    values = np.asarray(g(spec.eigenvalues), dtype=float)
    entries = spec.kernel(values)
    entries.setflags(write=False)
    return FunctionalCalculus(spec, g, values, OperatorMatrix(entries, kind, spec.grid, meta))


def apply_psi(spec: Spectrum, psi: BernsteinSpec) -> FunctionalCalculus:
    """Materialize ``psi(-L_|D)``."""
    if psi.role is not Role.PSI:
        raise ConfigError("apply_psi expects the outer exponent psi")
    return function_of(spec, psi.__call__, Kind.FUNCTION, psi=psi.describe())


def heat_kernel(spec: Spectrum, t: float) -> OperatorMatrix:
    """``p_D(t, x_i, x_j) = sum_j exp(-lam_j t) phi_j(x_i) phi_j(x_j)``."""
    if not t > 0:
        raise ConfigError(f"heat kernel needs t > 0, got {t}")
    entries = spec.kernel(np.exp(-spec.eigenvalues * t))
    entries.setflags(write=False)
    return OperatorMatrix(entries, Kind.HEAT, spec.grid, {"t": t})


_GREEN_KINDS = {"G": Kind.GREEN, "Gpsi": Kind.GREEN_PSI, "Gpsi*": Kind.GREEN_PSI_STAR}


def green_matrix(spec: Spectrum, which: str = "Gpsi", psi: BernsteinSpec | None = None) -> OperatorMatrix:
    """Green kernel ``sum_j g(lam_j)^-1 phi_j phi_j^T`` for ``g`` the identity
    (``"G"``), ``psi`` (``"Gpsi"``) or its conjugate (``"Gpsi*"``)."""
    if which not in _GREEN_KINDS:
        raise ConfigError(f"unknown Green kernel {which!r}; expected one of {sorted(_GREEN_KINDS)}")
    lam = spec.eigenvalues
    if which == "G":
        g = lam
    elif psi is None:
        raise ConfigError(f"{which} needs a psi specification")
    elif which == "Gpsi":
        g = bernstein.evaluate(psi, lam)
    else:
        g = bernstein.conjugate(psi)(lam)
    entries = spec.kernel(1.0 / g)
    entries.setflags(write=False)
    meta = {"which": which}
    if psi is not None:
        meta["psi"] = psi.describe()
    return OperatorMatrix(entries, _GREEN_KINDS[which], spec.grid, meta)


def _cumulative_potential(psi, t):
    # int_0^t u; exact for stable, leading small-time asymptotics otherwise
    if psi.family is Family.STABLE:
        return t**psi.s / math.gamma(psi.s + 1.0)
    return t * bernstein.potential_density_u(psi, t) / psi.s


def green_oracle_subordination(spec: Spectrum, psi: BernsteinSpec, t_max: float | None = None,
                               quad_nodes: int = 400, tail_tol: float = 1e-8,
                               order: int = 12) -> OperatorMatrix:
    """Green kernel of ``psi(-L_|D)`` as the time integral of the heat kernel
    against the potential density, ``int_0^inf p_D(t) u(t) dt``.

    The time integral runs on ``quad_nodes`` log-spaced points with the
    trapezoid rule in ``log t``. Below ``t_min`` the heat kernel is replaced by
    its ``t -> 0`` limit (the weighted identity), which only touches the
    diagonal. Above ``t_max`` the remainder is bounded by
    ``max_x p_D(t_max, x, x) u(t_max) / lam_1``; when ``t_max`` is not given
    it is doubled until that bound is below ``tail_tol``.
    """
    if quad_nodes < 16:
        raise ConfigError("green_oracle_subordination needs at least 16 quadrature nodes")
    lam = spec.eigenvalues
    lam1, lam_max = lam[0], lam[-1]
    phi2 = spec.eigenvectors**2

    def tail_bound(tm):
        diag = phi2 @ np.exp(-lam * tm)
        u_tm = bernstein.potential_density_u(psi, tm, order=order)
        return float(diag.max() * u_tm / lam1)

    if t_max is None:
        t_max = 20.0 / lam1
        while tail_bound(t_max) > tail_tol:
            t_max *= 2.0
            if t_max > 1e8 / lam1:
                raise NumericalError("could not reach the requested tail bound", {"tail_tol": tail_tol})
    bound = tail_bound(t_max)
    if bound > tail_tol:
        raise NumericalError("tail bound above tolerance; increase t_max",
                             {"t_max": t_max, "tail_bound": bound, "tail_tol": tail_tol})
    t_min = 1e-8 / lam_max
    y = np.linspace(math.log(t_min), math.log(t_max), quad_nodes)
    t = np.exp(y)
    u = bernstein.potential_density_u(psi, t, order=order)
    w = np.full(quad_nodes, y[1] - y[0])
    w[[0, -1]] *= 0.5
    # per-mode time integrals int exp(-lam t) u(t) dt
    coef = (np.exp(-np.outer(lam, t)) * (u * t * w)).sum(axis=1)
    coef += _cumulative_potential(psi, t_min)
    entries = spec.kernel(coef)
    entries.setflags(write=False)
    meta = {"t_min": t_min, "t_max": t_max, "tail_bound": bound, "quad_nodes": quad_nodes,
            "psi": psi.describe()}
    return OperatorMatrix(entries, Kind.GREEN_PSI, spec.grid, meta)
