"""Invariant suites for one laboratory setting.

Each suite returns :class:`Check` records that carry the measured value, the
tolerance it was held to and the verdict, so reports can be audited without
rerunning anything.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .analysis import envelope_check, fit_boundary_rate, green_envelope, weyl_slope
from .kernels import BoundaryData
from .lab import Lab
from .semilinear import (Nonlinearity, Sign, distributional_residual, kato_check, solve_absorption,
                         solve_linear, solve_monotone, solve_truncated, weak_trace)
from . import spectral
from .bernstein import conjugate

__all__ = ["Check", "run_all", "SUITES"]


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    tolerance: float
    relation: str  # how value is compared with tolerance
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _le(suite, name, value, tol):
    return Check(suite, name, float(value), float(tol), "value <= tolerance", bool(value <= tol))


def _within(suite, name, value, target, tol):
    return Check(suite, f"{name} (target {target:g})", float(value), float(tol),
                 "|value - target| <= tolerance", bool(abs(value - target) <= tol))


def _rel(a, b):
    return float(np.abs(a - b).max() / np.abs(b).max())


def spectral_identities(lab: Lab) -> list:
    g = lab.green.entries
    fact = lab.gpsi.compose(lab.gpsi_star)
    star = spectral.function_of(lab.spectrum, conjugate(lab.psi))
    comp = lab.psi_op.then(star)
    out = [
        _le("spectral", "Gpsi W Gpsi* = G, relative sup error", _rel(fact, g), 1e-9),
        _le("spectral", "psi(-L) psi*(-L) = -L, relative sup error", _rel(comp, lab.spectrum.generator.entries), 1e-9),
        _le("spectral", "Gpsi symmetry", lab.gpsi.asymmetry(), 1e-12),
        _le("spectral", "Gpsi negative entries (count)", float(np.sum(lab.gpsi.entries < 0)), 0),
        _le("spectral", "max eigen-residual relative to lambda_n",
            float(lab.spectrum.residuals().max() / lab.spectrum.eigenvalues[-1]), 1e-10),
    ]
    return out


def rates(lab: Lab) -> list:
    beta, alpha = lab.beta, 2.0 * lab.psi.s
    out = [_within("rates", "Hopf exponent of phi_1", fit_boundary_rate(lab.spectrum.phi1, lab.grid).exponent,
                   beta / 2.0, 0.05)]
    if lab.n >= 64:
        out.append(_within("rates", "Weyl slope over j in [5, 50]", weyl_slope(lab.spectrum.eigenvalues),
                           beta, 0.05))
    out.append(_within("rates", "Poisson potential exponent",
                       fit_boundary_rate(lab.p_sigma, lab.grid).exponent,
                       -1.0 - beta / 2.0 + alpha * beta / 2.0, 0.1))
    return out


def envelope(lab: Lab) -> list:
    band = envelope_check(lab.gpsi, green_envelope(lab.grid, lab.phi, lab.psi))
    return [_le("envelope", "Gpsi band width C_high/C_low", band.width, 50.0),
            _le("envelope", "Gpsi nonpositive entries off the band", band.nonpositive, 0)]


def maximum_principle(lab: Lab, seed: int = 0, trials: int = 12) -> list:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    delta = lab.grid.delta
    for k in range(trials):
        if k % 3 == 0:
            lam = rng.random(lab.n)
        elif k % 3 == 1:
            lam = delta ** rng.uniform(-1.4, 1.0)
        else:
            lam = np.where(rng.random(lab.n) < 0.1, rng.random(lab.n) * 10, 0.0)
        zeta = BoundaryData(*rng.random(2)) if k % 2 else BoundaryData()
        u = solve_linear(lab, lam, zeta).u
        worst = max(worst, float(-u.min() / u.max()))
    return [_le("maximum_principle", "max over battery of -min(u)/max(u)", worst, 1e-10)]


def monotonicity(lab: Lab, tol: float = 1e-10) -> list:
    f = Nonlinearity(0.0, 1.2, Sign.NONNEGATIVE, 0.1)
    sigma = BoundaryData.sigma()
    rep = solve_monotone(lab, f, sigma, tol=tol, supersolution=2.0 * lab.p_sigma)
    return [
        Check("monotonicity", "monotone iterates nondecreasing", float(rep.monotone), 1.0, "value == 1",
              bool(rep.monotone)),
        _le("monotonicity", "iterates above supersolution 2P (count)",
            rep.extras["above_supersolution_iterates"], 0),
        _le("monotonicity", "final step", rep.residual if rep.converged else np.inf, tol),
    ]


def rate_transfer(lab: Lab, tol: float = 1e-10) -> list:
    rep = solve_absorption(lab, Nonlinearity(0.0, 1.2, Sign.NONPOSITIVE, 0.1), BoundaryData.sigma(), tol=tol)
    ref = fit_boundary_rate(lab.p_sigma, lab.grid).exponent
    got = rep.boundary_fit.exponent if rep.boundary_fit is not None else np.inf
    return [_le("rate_transfer", "absorption solve final step", rep.residual if rep.converged else np.inf, tol),
            _within("rate_transfer", "exponent of u minus exponent of P", got - ref, 0.0, 0.1)]


def _signed_problem(lab):
    x = lab.grid.nodes
    g = 5.0 * np.sin(3.0 * x)
    f = Nonlinearity(0.0, 1.1, Sign.SIGNED,
                     custom=lambda x, d, t: 5.0 * np.sin(3.0 * x) - np.sign(t) * np.abs(t) ** 1.1)
    sup = lab.green_potential(np.abs(g))
    return f, -sup, sup


def kato_and_uniqueness(lab: Lab, tol: float = 1e-10, seed: int = 0) -> list:
    f, sub, sup = _signed_problem(lab)
    rep = solve_truncated(lab, f, sub, sup, tol=tol, seed=seed)
    scale = float(np.abs(rep.u).max())
    g = np.abs(5.0 * np.sin(3.0 * lab.grid.nodes))
    eq = kato_check(lab, lab.green_potential(g), g)
    neg = -lab.green_potential(g)
    return [
        _le("kato", "signed solution violation / max|u|", rep.kato_violation / scale, 1e-6),
        _le("kato", "equality case violation", eq, 1e-10),
        _le("kato", "nonpositive u violation", kato_check(lab, neg, -g), tol),
        _le("uniqueness", "spread over random starts / max|sup|", rep.extras["start_spread_relative"], 10 * tol),
    ]


def distributional(lab: Lab) -> list:
    x = lab.grid.nodes
    worst = 0.0
    for lam in (np.ones(lab.n), np.cos(2.0 * x) + 1.5, lab.grid.delta ** -0.5):
        u = solve_linear(lab, lam).u
        worst = max(worst, distributional_residual(lab, u, lam))
    return [_le("distributional", "max bump residual / ||lambda||", worst, 1e-8)]


def weak_traces(lab: Lab, strips=(0.2, 0.1, 0.05)) -> list:
    zeta = BoundaryData(1.0, 2.0)

    def test(x):
        return 1.0 + 0.5 * x

    target = zeta.zeta_a * test(lab.grid.a) + zeta.zeta_b * test(lab.grid.b)
    up = lab.poisson_potential(zeta)
    ug = lab.green_potential(np.ones(lab.n))
    out = []
    for t in strips:
        out.append(_le("weak_trace", f"|trace(P zeta) - target| / target at t = {t:g}",
                       abs(weak_trace(lab, up, t, test) - target) / target, 0.1))
        out.append(_le("weak_trace", f"|trace(G 1)| / target at t = {t:g}",
                       abs(weak_trace(lab, ug, t, test)) / target, 0.1))
    return out


SUITES = {
    "spectral": spectral_identities,
    "rates": rates,
    "envelope": envelope,
    "maximum_principle": maximum_principle,
    "monotonicity": monotonicity,
    "rate_transfer": rate_transfer,
    "kato_and_uniqueness": kato_and_uniqueness,
    "distributional": distributional,
    "weak_trace": weak_traces,
}


def run_all(lab: Lab, tol: float = 1e-10, seed: int = 0, suites=None) -> list:
    """Run the named suites (all by default) and return the flat list of checks."""
    out = []
    for name in suites or SUITES:
        fn = SUITES[name]
        kwargs = {}
        if name in ("monotonicity", "rate_transfer", "kato_and_uniqueness"):
            kwargs["tol"] = tol
        if name in ("maximum_principle", "kato_and_uniqueness"):
            kwargs["seed"] = seed
        out.extend(fn(lab, **kwargs))
    return out
