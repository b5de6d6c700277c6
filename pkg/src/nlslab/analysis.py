"""Boundary-rate fits and two-sided envelope bands.

Comparability statements ``f(x) ~ delta(x)^e`` are checked as least-squares
slopes over dyadic boundary layers; kernel estimates ``K ~ E`` as the band of
ratios ``K / E``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import brentq

from . import bernstein
from .bernstein import BernsteinSpec, Family
from .discretize import Grid, OperatorMatrix
from .errors import ConfigError

__all__ = [
    "RateFit",
    "EnvelopeBand",
    "fit_boundary_rate",
    "fit_power_law",
    "observed_order",
    "weyl_slope",
    "envelope_check",
    "green_envelope",
    "heat_envelope_small",
    "phi_inverse",
]

LOG_IMPROVEMENT = 0.30


@dataclass(frozen=True)
class RateFit:
    exponent: float
    intercept: float
    r_squared: float
    log_correction_detected: bool
    layers: list

    def as_row(self) -> dict:
        return {
            "exponent": self.exponent,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "log_correction": self.log_correction_detected,
            "delta_finest": self.layers[-1][0],
            "delta_coarsest": self.layers[0][0],
            "n_layers": len(self.layers),
        }


def _lstsq(x, y):
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    return coef, float(resid @ resid)


def fit_boundary_rate(values, grid: Grid, delta_min: float = 0.0, delta_max: float = 0.5,
                      min_layers: int = 5) -> RateFit:
    """Fit ``|values| ~ c * delta^e`` over dyadic layers ``[2^-(k+1), 2^-k] * delta_max``.

    Each layer is summarized by the geometric means of ``delta`` and
    ``|values|`` over its nodes; layers reaching below ``max(delta_min, 2h)``
    are dropped. A logarithmic factor ``log(diam/delta)`` is reported when it
    lowers the residual sum of squares by at least 30%, in which case the
    exponent of the log-corrected model is returned.
    """
    vals = np.abs(np.asarray(values, dtype=float))
    floor = max(delta_min, 2.0 * grid.h)
    layers = []
    k = 0
    while True:
        hi = delta_max * 2.0**-k
        lo = hi / 2.0
        if lo < floor * (1 - 1e-12):
            break
        sel = (grid.delta >= lo) & (grid.delta < hi) if k else (grid.delta >= lo) & (grid.delta <= hi)
        if sel.any():
            if np.any(vals[sel] == 0) or not np.all(np.isfinite(vals[sel])):
                raise ConfigError("boundary fit needs finite nonzero values in every layer")
            layers.append((float(np.exp(np.log(grid.delta[sel]).mean())),
                           float(np.exp(np.log(vals[sel]).mean()))))
        k += 1
    if len(layers) < min_layers:
        raise ConfigError(f"boundary fit needs >= {min_layers} dyadic layers in "
                          f"[{floor:g}, {delta_max:g}], found {len(layers)}")
    d = np.log([p[0] for p in layers])
    v = np.log([p[1] for p in layers])
    (slope, icpt), ss_pow = _lstsq(d, v)
    ss_tot = float(((v - v.mean()) ** 2).sum())
    r2 = 1.0 - ss_pow / ss_tot if ss_tot > 0 else 1.0
    logfac = np.log(np.log(grid.length / np.exp(d)))
    (slope_log, icpt_log), ss_log = _lstsq(d, v - logfac)
    detected = ss_log <= (1.0 - LOG_IMPROVEMENT) * ss_pow and ss_pow > 1e-20
    if detected:
        slope, icpt = slope_log, icpt_log
        r2 = 1.0 - ss_log / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(icpt), float(min(max(r2, 0.0), 1.0)), bool(detected), layers)


def fit_power_law(x, y) -> tuple:
    """Slope and intercept of ``log |y|`` against ``log x``."""
    (slope, icpt), _ = _lstsq(np.log(np.asarray(x, float)), np.log(np.abs(np.asarray(y, float))))
    return float(slope), float(icpt)


def observed_order(errors, ratio: float = 2.0) -> list:
    """Observed convergence orders ``log(e_k / e_{k+1}) / log(ratio)``."""
    e = np.asarray(errors, dtype=float)
    return [float(math.log(e[k] / e[k + 1]) / math.log(ratio)) for k in range(len(e) - 1)]


def weyl_slope(eigenvalues, j_lo: int = 5, j_hi: int = 50) -> float:
    """Least-squares slope of ``log lam_j`` against ``log j`` for ``j_lo <= j <= j_hi`` (1-based)."""
    lam = np.asarray(eigenvalues, dtype=float)
    if j_hi > lam.size or j_lo < 1 or j_hi - j_lo < 2:
        raise ConfigError(f"need modes {j_lo}..{j_hi}, have {lam.size}")
    j = np.arange(j_lo, j_hi + 1)
    return fit_power_law(j, lam[j - 1])[0]


class EnvelopeBand(NamedTuple):
    c_low: float
    c_high: float
    nonpositive: int

    @property
    def width(self) -> float:
        return self.c_high / self.c_low


def envelope_check(m, formula: Callable, exclusion: int = 2, grid: Grid | None = None) -> EnvelopeBand:
    """Extremal ratios ``M[i, j] / formula(x_i, x_j)`` over ``|i - j| >= exclusion``.

    Non-positive entries of ``M`` are counted and left out of the band.
    """
    if isinstance(m, OperatorMatrix):
        grid = grid or m.grid
        m = m.entries
    if grid is None:
        raise ConfigError("envelope_check needs a grid for bare arrays")
    n = grid.n
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    keep = np.abs(i - j) >= exclusion
    env = formula(grid.nodes[i[keep]], grid.nodes[j[keep]])
    if np.any(env <= 0):
        raise ConfigError("envelope formula must be positive on the included set")
    vals = m[keep]
    pos = vals > 0
    ratio = vals[pos] / env[pos]
    return EnvelopeBand(float(ratio.min()), float(ratio.max()), int((~pos).sum()))


def _delta(grid, x):
    return np.minimum(x - grid.a, grid.b - x)


def green_envelope(grid: Grid, phi: BernsteinSpec, psi: BernsteinSpec) -> Callable:
    """Sharp two-sided profile of ``G_D^psi`` in dimension one."""
    def formula(x, y):
        r = np.abs(x - y)
        vr = bernstein.renewal_V(phi, r)
        fx = np.minimum(bernstein.renewal_V(phi, _delta(grid, x)) / vr, 1.0)
        fy = np.minimum(bernstein.renewal_V(phi, _delta(grid, y)) / vr, 1.0)
        return fx * fy / (r * bernstein.evaluate(psi, vr**-2.0))
    return formula


def phi_inverse(phi: BernsteinSpec, y):
    """Inverse of the (increasing) Bernstein function."""
    y = np.asarray(y, dtype=float)
    if phi.family is Family.STABLE:
        return y ** (1.0 / phi.s)
    out = np.empty(y.shape)
    for k, val in np.ndenumerate(y):
        hi = max(1.0, val ** (1.0 / phi.s))
        while bernstein.evaluate(phi, hi) < val:
            hi *= 2.0
        out[k] = brentq(lambda lam: bernstein.evaluate(phi, lam) - val, 0.0, hi, xtol=1e-14, rtol=1e-13)
    return out


def heat_envelope_small(grid: Grid, phi: BernsteinSpec, t: float) -> Callable:
    """Small-time two-sided profile of the killed heat kernel in dimension one."""
    near = float(np.sqrt(phi_inverse(phi, 1.0 / t)))

    def formula(x, y):
        r = np.abs(x - y)
        fx = np.minimum(bernstein.renewal_V(phi, _delta(grid, x)) / math.sqrt(t), 1.0)
        fy = np.minimum(bernstein.renewal_V(phi, _delta(grid, y)) / math.sqrt(t), 1.0)
        with np.errstate(divide="ignore"):
            far = np.where(r > 0, t / (r * bernstein.renewal_V(phi, np.maximum(r, 1e-300)) ** 2), np.inf)
        return fx * fy * np.minimum(near, far)
    return formula
