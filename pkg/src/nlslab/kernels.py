"""Boundary objects of ``psi(-L_|D)``: Poisson kernel and potentials, the
jumping kernel ``J_D`` and the killing density of the subordinate process.

In one dimension the boundary is the two points ``{a, b}`` and the surface
measure is counting measure, so a Poisson kernel is an ``n x 2`` array and
boundary data are two atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from . import bernstein
from .bernstein import BernsteinSpec, Family
from .discretize import Grid, OperatorMatrix
from .errors import ConfigError, NumericalError
from .spectral import FunctionalCalculus, Spectrum

__all__ = [
    "BoundaryData",
    "PoissonKernel",
    "boundary_ratio_limit",
    "poisson_kernel",
    "martin_kernel",
    "poisson_potential",
    "harmonicity_residual",
    "QuadConfig",
    "jumping_kernel_JD",
    "killing_density_psi",
]


@dataclass(frozen=True)
class BoundaryData:
    zeta_a: float = 0.0
    zeta_b: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.zeta_a) and math.isfinite(self.zeta_b)):
            raise ConfigError("boundary atoms must be finite")

    @classmethod
    def sigma(cls) -> "BoundaryData":
        """Counting measure on ``{a, b}``."""
        return cls(1.0, 1.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.zeta_a, self.zeta_b])

    def __mul__(self, c):
        return BoundaryData(c * self.zeta_a, c * self.zeta_b)

    __rmul__ = __mul__

    def nonnegative(self) -> bool:
        return self.zeta_a >= 0 and self.zeta_b >= 0


@dataclass(frozen=True, eq=False)
class PoissonKernel:
    values: np.ndarray  # column 0 is the endpoint a, column 1 is b
    grid: Grid
    diagnostics: dict = field(default_factory=dict)

    def column(self, z: str) -> np.ndarray:
        return self.values[:, {"a": 0, "b": 1}[z]]


def _extrapolation_weights(d):
    """Lagrange weights evaluating the interpolant through ``(d_k, .)`` at 0."""
    w = np.ones(len(d))
    for k in range(len(d)):
        for m in range(len(d)):
            if m != k:
                w[k] *= d[m] / (d[m] - d[k])
    return w


def boundary_ratio_limit(kernel: np.ndarray, grid: Grid, V: Callable, order: int = 3):
    """Extrapolate ``kernel[x, y] / V(delta(y))`` to ``y -> a`` and ``y -> b``.

    The ratios at the ``order`` nodes nearest each endpoint are combined with
    polynomial (Richardson) weights in ``delta``. Rows that sit inside the
    stencil, where the diagonal singularity of the kernel dominates, fall back
    to the nearest-node ratio and are listed in the diagnostics.
    """
    if order < 1:
        raise ConfigError("extrapolation order must be >= 1")
    n = grid.n
    out = np.empty((n, 2))
    diag = {}
    for col, (name, idx) in enumerate((("a", np.arange(order)),
                                       ("b", n - 1 - np.arange(order)))):
        d = grid.delta[idx]
        ratios = kernel[:, idx] / V(d)[None, :]
        w = _extrapolation_weights(d)
        val = ratios @ w
        lower = ratios[:, :-1] @ _extrapolation_weights(d[:-1]) if order > 1 else ratios[:, 0]
        stencil = np.zeros(n, dtype=bool)
        stencil[idx] = True
        # neighbours of the stencil also see the diagonal through the weights
        near = np.zeros(n, dtype=bool)
        lo, hi = idx.min(), idx.max()
        near[max(0, lo - 1):min(n, hi + 2)] = True
        fallback = np.where(near)[0]
        val[near] = ratios[near, 0]
        out[:, col] = val
        interior = ~near
        resid = np.abs(val - lower)[interior] / np.abs(val[interior])
        steps = np.diff(ratios[interior], axis=1)
        monotone = np.all(steps >= 0, axis=1) | np.all(steps <= 0, axis=1)
        diag[name] = {
            "order": order,
            "nodes": idx.tolist(),
            "richardson_residual": float(resid.max()) if resid.size else 0.0,
            "fallback_rows": fallback.tolist(),
            "non_monotone_rows": int((~monotone).sum()),
            "warning": bool((~monotone).any()),
        }
    return out, diag


def poisson_kernel(gpsi: OperatorMatrix, grid: Grid | None = None, V: Callable | None = None,
                   phi: BernsteinSpec | None = None, order: int = 3) -> PoissonKernel:
    """Generalized normal derivative of the Green kernel at each endpoint.

    ``V`` defaults to the renewal function of ``phi``; when both are omitted
    the ``beta`` recorded on the generator is required (stable ``phi``).
    """
    grid = grid or gpsi.grid
    if V is None:
        if phi is None:
            raise ConfigError("poisson_kernel needs V or phi")
        V = lambda t: bernstein.renewal_V(phi, t)  # noqa: E731
    values, diag = boundary_ratio_limit(gpsi.entries, grid, V, order)
    if np.any(values <= 0):
        bad = int(np.argmin(values.min(axis=1)))
        diag["nonpositive_row"] = bad
    values.setflags(write=False)
    return PoissonKernel(values, grid, diag)


def martin_kernel(g: OperatorMatrix, V: Callable, order: int = 3) -> PoissonKernel:
    """Same boundary extrapolation applied to the Green kernel of the killed
    process itself."""
    values, diag = boundary_ratio_limit(g.entries, g.grid, V, order)
    values.setflags(write=False)
    return PoissonKernel(values, g.grid, diag)


def poisson_potential(k: PoissonKernel, zeta: BoundaryData) -> np.ndarray:
    return k.values @ zeta.as_array()


def harmonicity_residual(u, psi_op: FunctionalCalculus, margin: float) -> float:
    """Largest ``|psi(-L) u|`` over nodes at distance ``>= margin`` from the
    boundary, relative to ``max |u|`` there."""
    grid = psi_op.spectrum.grid
    if margin < 4 * grid.h:
        raise ConfigError(f"margin must be >= 4h = {4 * grid.h:g}")
    inner = grid.delta >= margin
    if not inner.any():
        raise ConfigError("no nodes inside the requested margin")
    act = psi_op.apply(u)
    scale = np.abs(np.asarray(u)[inner]).max()
    return float(np.abs(act[inner]).max() / scale)


@dataclass(frozen=True)
class QuadConfig:
    """Time-quadrature settings for ``J_D`` and the killing density."""

    nodes: int = 128
    t_min_factor: float = 1e-6  # t_min = factor / lam_max
    t_max_factor: float = 60.0  # t_max = factor / lam_1
    rtol: float = 1e-5


def _small_time_moment(psi, tau):
    # int_0^tau t nu(t) dt
    if psi.family is Family.STABLE:
        s = psi.s
        return s * tau ** (1.0 - s) / ((1.0 - s) * math.gamma(1.0 - s))
    val, _ = integrate.quad(lambda y: bernstein.evaluate(psi, math.exp(-y)) * math.exp(y),
                            math.log(tau) - 60.0, math.log(tau), limit=200)
    return val


def _tail_mass(psi, tau):
    # int_tau^inf nu(t) dt
    if psi.family is Family.STABLE:
        return tau ** (-psi.s) / math.gamma(1.0 - psi.s)
    val, _ = integrate.quad(lambda y: bernstein.evaluate(psi, math.exp(-y)),
                            math.log(tau), math.log(tau) + 80.0, limit=200)
    return val


def _log_rule(lo, hi, m):
    # Gauss-Legendre in log t; the integrands are analytic in log t
    y, w = np.polynomial.legendre.leggauss(m)
    a, b = math.log(lo), math.log(hi)
    y = 0.5 * (b - a) * y + 0.5 * (b + a)
    t = np.exp(y)
    return t, 0.5 * (b - a) * w * t


def _jd_entry(spec, psi, i, j, cfg, nodes):
    lam = spec.eigenvalues
    phi = spec.eigenvectors
    grid = spec.grid
    t_min = cfg.t_min_factor / lam[-1]
    t_max = cfg.t_max_factor / lam[0]
    r = abs(grid.nodes[i] - grid.nodes[j])
    t0 = min(max(r**spec.generator.meta.get("beta", 1.0), 10 * t_min), t_max / 10)
    coupling = phi[i] * phi[j]
    total = 0.0
    for lo, hi in ((t_min, t0), (t0, t_max)):
        t, w = _log_rule(lo, hi, nodes // 2)
        p = np.exp(-np.outer(t, lam)) @ coupling
        nu = bernstein.levy_density_nu(psi, t).value
        total += float(np.sum(p * nu * w))
    # p_D(t) ~ -t K for small t off the diagonal
    total += -spec.generator.entries[i, j] * _small_time_moment(psi, t_min)
    return total


def jumping_kernel_JD(spec: Spectrum, psi: BernsteinSpec, i, j: int,
                      cfg: QuadConfig = QuadConfig()):
    """``J_D(x_i, x_j) = int_0^inf p_D(t, x_i, x_j) nu(t) dt`` by quadrature.

    The time axis is split at ``t0 = V(|x_i - x_j|)^2``, each half on a
    Gauss-Legendre rule in ``log t``; below ``t_min`` the heat kernel is replaced by
    its first-order expansion and above ``t_max`` the integrand is negligible
    against ``exp(-lam_1 t)``. A half-resolution rerun guards convergence.
    ``i`` may be an index array (with ``j`` fixed).
    """
    idx = np.atleast_1d(i)
    if np.any(idx == j):
        raise ConfigError("J_D is defined off the diagonal (i != j)")
    out = np.empty(idx.size)
    for k, ii in enumerate(idx):
        fine = _jd_entry(spec, psi, int(ii), j, cfg, cfg.nodes)
        coarse = _jd_entry(spec, psi, int(ii), j, cfg, cfg.nodes // 2)
        if abs(fine - coarse) > cfg.rtol * abs(fine) + 1e-14:
            raise NumericalError("J_D quadrature did not converge",
                                 {"i": int(ii), "j": j, "fine": fine, "coarse": coarse})
        out[k] = fine
    return float(out[0]) if np.ndim(i) == 0 else out


def _kappa_entry(spec, psi, i, ones_coef, cfg, nodes):
    lam = spec.eigenvalues
    t_min = cfg.t_min_factor / lam[-1]
    t_max = cfg.t_max_factor / lam[0]
    t0 = min(max(spec.grid.delta[i] ** spec.generator.meta.get("beta", 1.0), 10 * t_min), t_max / 10)
    total = 0.0
    for lo, hi in ((t_min, t0), (t0, t_max)):
        t, w = _log_rule(lo, hi, nodes // 2)
        survival = np.exp(-np.outer(t, lam)) @ (spec.eigenvectors[i] * ones_coef)
        nu = bernstein.levy_density_nu(psi, t).value
        total += float(np.sum((1.0 - survival) * nu * w))
    gen_one = spec.generator.entries[i] @ spec.grid.weights
    total += gen_one * _small_time_moment(psi, t_min)
    total += _tail_mass(psi, t_max)
    return total


def killing_density_psi(spec: Spectrum, psi: BernsteinSpec, i=None,
                        cfg: QuadConfig = QuadConfig()):
    """``kappa(x_i) = int_0^inf (1 - P_t^D 1(x_i)) nu(t) dt`` by quadrature.

    ``1 - P_t 1`` is evaluated spectrally; it behaves like ``t (K W 1)`` for
    small ``t`` and tends to 1 for large ``t``, which fixes the two analytic
    end pieces. ``i=None`` returns every node.
    """
    ones_coef = spec.coefficients(np.ones(spec.n))
    idx = np.arange(spec.n) if i is None else np.atleast_1d(i)
    out = np.empty(idx.size)
    for k, ii in enumerate(idx):
        fine = _kappa_entry(spec, psi, int(ii), ones_coef, cfg, cfg.nodes)
        coarse = _kappa_entry(spec, psi, int(ii), ones_coef, cfg, cfg.nodes // 2)
        if abs(fine - coarse) > cfg.rtol * abs(fine):
            raise NumericalError("killing-density quadrature did not converge",
                                 {"i": int(ii), "fine": fine, "coarse": coarse})
        out[k] = fine
    return float(out[0]) if (i is not None and np.ndim(i) == 0) else out
