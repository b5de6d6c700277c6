"""Complete Bernstein functions and the scalar objects derived from them.

Three families are supported, all driftless:

* stable          ``lam**s``
* relativistic    ``(lam + m**(1/s))**s - m``
* tempered stable ``(lam + theta)**s - theta**s``

A :class:`BernsteinSpec` plays one of two roles: the inner exponent ``phi`` of
the subordinate Brownian motion (``phi(lam) = lam**(beta/2)`` gives the
restricted fractional Laplacian) or the outer exponent ``psi`` applied
spectrally to the killed generator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate
from scipy.special import gamma

from .errors import ConfigError, DomainError, NumericalError

__all__ = [
    "Family",
    "Role",
    "BernsteinSpec",
    "ScalingReport",
    "LevyDensity",
    "stable",
    "relativistic",
    "tempered",
    "evaluate",
    "conjugate",
    "estimate_scaling",
    "renewal_V",
    "levy_density_nu",
    "potential_density_u",
    "stehfest_coefficients",
    "invert_laplace",
    "weight_rho",
]


class Family(str, enum.Enum):
    STABLE = "stable"
    RELATIVISTIC = "relativistic"
    TEMPERED = "tempered"


class Role(str, enum.Enum):
    PHI = "phi"
    PSI = "psi"


@dataclass(frozen=True)
class BernsteinSpec:
    """One member of a complete Bernstein family.

    ``s`` is the scaling exponent at infinity and must lie strictly in (0, 1).
    ``mass`` is used by the relativistic family and ``tempering`` by the
    tempered one; each must be positive when its family is selected.
    """

    family: Family
    s: float
    mass: float = 0.0
    tempering: float = 0.0
    role: Role = Role.PSI

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "role", Role(self.role))
        if not (0.0 < self.s < 1.0):
            raise DomainError(f"exponent s must lie in (0, 1), got {self.s}")
        if self.family is Family.RELATIVISTIC and not self.mass > 0:
            raise DomainError(f"relativistic mass must be positive, got {self.mass}")
        if self.family is Family.TEMPERED and not self.tempering > 0:
            raise DomainError(f"tempering must be positive, got {self.tempering}")

    def __call__(self, lam):
        return evaluate(self, lam)

    def with_role(self, role: Role) -> "BernsteinSpec":
        return BernsteinSpec(self.family, self.s, self.mass, self.tempering, Role(role))

    def describe(self) -> dict:
        out = {"family": self.family.value, "s": self.s, "role": self.role.value}
        if self.family is Family.RELATIVISTIC:
            out["mass"] = self.mass
        if self.family is Family.TEMPERED:
            out["tempering"] = self.tempering
        return out


def stable(s: float, role: Role = Role.PSI) -> BernsteinSpec:
    return BernsteinSpec(Family.STABLE, s, role=role)


def relativistic(s: float, mass: float, role: Role = Role.PSI) -> BernsteinSpec:
    return BernsteinSpec(Family.RELATIVISTIC, s, mass=mass, role=role)


def tempered(s: float, tempering: float, role: Role = Role.PSI) -> BernsteinSpec:
    return BernsteinSpec(Family.TEMPERED, s, tempering=tempering, role=role)


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def evaluate(spec: BernsteinSpec, lam):
    """Closed-form value of the Bernstein function.

    ``lam = 0`` returns 0; negative arguments raise :class:`DomainError`.
    Works elementwise on arrays.
    """
    x, scalar = _as_array(lam)
    if np.any(x < 0) or np.any(~np.isfinite(x)):
        raise DomainError("Bernstein functions are evaluated on [0, inf)")
    s = spec.s
    if spec.family is Family.STABLE:
        out = x**s
    elif spec.family is Family.RELATIVISTIC:
        m = spec.mass
        shift = m ** (1.0 / s)
        # (lam + shift)**s - m loses digits for lam << shift
        out = m * np.expm1(s * np.log1p(x / shift))
    else:
        th = spec.tempering
        out = th**s * np.expm1(s * np.log1p(x / th))
    return float(out) if scalar else out


def log_evaluate(spec: BernsteinSpec, lam):
    x, scalar = _as_array(lam)
    if np.any(x <= 0):
        raise DomainError("log of a Bernstein function needs lam > 0")
    if spec.family is Family.STABLE:
        out = spec.s * np.log(x)
    else:
        out = np.log(evaluate(spec, x))
    return float(out) if scalar else out


def conjugate(spec: BernsteinSpec) -> Callable:
    """Return ``lam -> lam / psi(lam)``.

    For the stable family the conjugate of exponent ``s`` is the stable
    function of exponent ``1 - s``; it is returned in that closed form so the
    identity holds to roundoff.
    """
    if spec.role is not Role.PSI:
        raise ConfigError("conjugate is defined for the outer exponent psi")
    if spec.family is Family.STABLE:
        star = stable(1.0 - spec.s)
        return star.__call__

    def psi_star(lam):
        x, scalar = _as_array(lam)
        if np.any(x <= 0):
            raise DomainError("conjugate evaluated at non-positive argument")
        out = x / evaluate(spec, x)
        return float(out) if scalar else out

    return psi_star


@dataclass(frozen=True)
class ScalingReport:
    lower_exponent: float
    upper_exponent: float
    lower_const: float
    upper_const: float
    sample_range: tuple


def estimate_scaling(spec: BernsteinSpec, lam_min: float = 1.0, lam_max: float = 1e6,
                     n_samples: int = 256) -> ScalingReport:
    """Empirical weak-scaling exponents on a geometric lattice.

    Every ordered pair ``t_i < t_j`` of lattice points contributes the slope
    ``log(phi(t_j)/phi(t_i)) / log(t_j/t_i)``; the exponents are the extremal
    slopes and the constants the extremal multiplicative gaps against them.
    """
    if n_samples < 8:
        raise ConfigError(f"estimate_scaling needs n_samples >= 8, got {n_samples}")
    if not (1.0 <= lam_min < lam_max):
        raise ConfigError("estimate_scaling needs 1 <= lam_min < lam_max")
    ll = np.linspace(math.log(lam_min), math.log(lam_max), n_samples)
    lf = log_evaluate(spec, np.exp(ll))
    idx = np.arange(n_samples)
    lo, hi = np.inf, -np.inf
    # pairwise slopes in row blocks to keep memory bounded at large n_samples
    block = max(1, 2_000_000 // n_samples)
    for start in range(0, n_samples - 1, block):
        rows = idx[start:start + block]
        dl = ll[None, :] - ll[rows, None]
        df = lf[None, :] - lf[rows, None]
        mask = idx[None, :] > rows[:, None]
        slopes = df[mask] / dl[mask]
        lo = min(lo, slopes.min())
        hi = max(hi, slopes.max())
    c_lo, c_hi = np.inf, -np.inf
    for start in range(0, n_samples - 1, block):
        rows = idx[start:start + block]
        dl = ll[None, :] - ll[rows, None]
        df = lf[None, :] - lf[rows, None]
        mask = idx[None, :] > rows[:, None]
        c_lo = min(c_lo, np.exp((df - lo * dl)[mask]).min())
        c_hi = max(c_hi, np.exp((df - hi * dl)[mask]).max())
    return ScalingReport(float(lo), float(hi), float(c_lo), float(c_hi), (lam_min, lam_max))


def renewal_V(phi: BernsteinSpec, t):
    """Renewal function representative ``V(t) = 1 / sqrt(phi(t**-2))``."""
    x, scalar = _as_array(t)
    if np.any(x <= 0):
        raise DomainError("renewal function needs t > 0")
    if phi.family is Family.STABLE:
        out = x ** phi.s
    else:
        out = 1.0 / np.sqrt(evaluate(phi, x**-2.0))
    return float(out) if scalar else out


class LevyDensity(NamedTuple):
    value: float | np.ndarray
    proxy: bool


def levy_density_nu(psi: BernsteinSpec, t) -> LevyDensity:
    """Levy density of the subordinator with exponent ``psi``.

    Exact for the stable family; otherwise the comparable proxy
    ``psi(1/t)/t`` with ``proxy=True``.
    """
    x, scalar = _as_array(t)
    if np.any(x <= 0):
        raise DomainError("Levy density needs t > 0")
    if psi.family is Family.STABLE:
        s = psi.s
        out = s * x ** (-1.0 - s) / gamma(1.0 - s)
        proxy = False
    else:
        out = evaluate(psi, 1.0 / x) / x
        proxy = True
    return LevyDensity(float(out) if scalar else out, proxy)


@lru_cache(maxsize=None)
def stehfest_coefficients(order: int) -> np.ndarray:
    """Gaver-Stehfest weights ``V_1..V_N`` (exact rationals, rounded once)."""
    if order < 2 or order % 2:
        raise ConfigError(f"Stehfest order must be even and >= 2, got {order}")
    half = order // 2
    f = math.factorial
    weights = []
    for k in range(1, order + 1):
        acc = Fraction(0)
        for j in range((k + 1) // 2, min(k, half) + 1):
            acc += Fraction(j**half * f(2 * j),
                            f(half - j) * f(j) * f(j - 1) * f(k - j) * f(2 * j - k))
        weights.append((-1) ** (k + half) * acc)
    out = np.array([float(w) for w in weights])
    out.setflags(write=False)
    return out


def invert_laplace(transform: Callable, t, order: int = 12):
    """Gaver-Stehfest inversion of ``transform`` at times ``t`` (vectorized)."""
    x, scalar = _as_array(t)
    if np.any(x <= 0):
        raise DomainError("Laplace inversion needs t > 0")
    w = stehfest_coefficients(order)
    a = math.log(2.0) / x
    k = np.arange(1, order + 1)
    vals = transform(np.multiply.outer(a, k))
    out = a * (vals @ w)
    return float(out) if scalar else out


def potential_density_u(psi: BernsteinSpec, t, order: int = 12, monitor_tol: float = 1e-5):
    """Potential density of the subordinator, i.e. the inverse Laplace
    transform of ``1/psi``.

    Closed form ``t**(s-1)/Gamma(s)`` for the stable family. Other families go
    through Gaver-Stehfest at ``order``, cross-checked against ``order + 2``;
    a relative spread above ``monitor_tol`` raises :class:`NumericalError`.
    """
    if psi.role is not Role.PSI:
        raise ConfigError("potential density is defined for the outer exponent psi")
    x, scalar = _as_array(t)
    if np.any(x <= 0):
        raise DomainError("potential density needs t > 0")
    if psi.family is Family.STABLE:
        out = x ** (psi.s - 1.0) / gamma(psi.s)
        return float(out) if scalar else out

    def transform(lam):
        return 1.0 / evaluate(psi, lam)

    main = np.atleast_1d(invert_laplace(transform, x, order))
    finer = np.atleast_1d(invert_laplace(transform, x, order + 2))
    spread = np.abs(finer - main) / np.abs(main)
    worst = int(np.argmax(spread))
    if spread[worst] > monitor_tol:
        raise NumericalError(
            "Laplace inversion did not settle across neighbouring orders",
            {"t": float(np.atleast_1d(x)[worst]), "relative_spread": float(spread[worst]),
             "order": order, "tolerance": monitor_tol},
        )
    if np.any(main <= 0):
        raise NumericalError("Laplace inversion produced a non-positive density",
                             {"order": order})
    return float(main[0]) if scalar else main.reshape(x.shape)


def _rho_scalar(phi, psi, delta):
    v = renewal_V(phi, delta)
    head = v * v * evaluate(psi, v**-2.0)
    if v >= 1.0:
        return head
    # substitute s = exp(y) so the integrand is smooth at the heavy end s = v
    val, err = integrate.quad(lambda y: evaluate(psi, math.exp(-2.0 * y)) * math.exp(y),
                              math.log(v), 0.0, epsabs=1e-10, epsrel=1e-8, limit=200)
    if not math.isfinite(val) or err > max(1e-10, 1e-8 * abs(val)) * 10:
        raise NumericalError("quadrature failed in weight_rho", {"delta": delta, "error": err})
    return head + v * val


def weight_rho(phi: BernsteinSpec, psi: BernsteinSpec, delta):
    """Boundary weight of the distributional solution space,
    ``V^2 psi(V^-2) + V * int_V^1 psi(s^-2) ds`` with ``V = V(delta)``.
    """
    x, scalar = _as_array(delta)
    if np.any(x <= 0):
        raise DomainError("weight_rho needs delta > 0")
    out = np.array([_rho_scalar(phi, psi, float(d)) for d in x.ravel()]).reshape(x.shape)
    return float(out) if scalar else out
