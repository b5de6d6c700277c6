"""Fixed-point solvers for ``psi(-L_|D) u = f(x, u)`` with boundary trace ``zeta``.

Every solver works with the weak-dual form ``u = G^psi f(., u) + P^psi zeta``.
Green potentials use the grid weights: ``(G^psi g)_i = sum_j G_ij g_j w_j``.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .analysis import RateFit, fit_boundary_rate
from .errors import ConfigError, InconsistencyError, InfeasibleDataError, PreconditionError
from .kernels import BoundaryData
from .lab import Lab, build_lab

__all__ = [
    "Sign",
    "Nonlinearity",
    "SolveReport",
    "solve_linear",
    "solve_monotone",
    "solve_absorption",
    "solve_truncated",
    "kato_check",
    "critical_exponent",
    "integrability_surrogate",
    "existence_sweep",
    "SweepRow",
    "classification_boundary",
    "bump",
    "BUMPS",
    "distributional_residual",
    "weak_trace",
]


class Sign(str, enum.Enum):
    NONPOSITIVE = "nonpositive"
    NONNEGATIVE = "nonnegative"
    SIGNED = "signed"


@dataclass(frozen=True)
class Nonlinearity:
    """``f(x, t) = s * m * delta(x)^theta * |t|^p`` with the sign pattern ``s``.

    ``NONPOSITIVE`` is ``-m q |t|^p``, ``NONNEGATIVE`` is ``m q (t^+)^p`` (which
    is nondecreasing) and ``SIGNED`` is the odd, nonincreasing
    ``-m q sign(t) |t|^p``. A ``custom`` map ``(x, delta, t) -> f`` overrides
    the formula but still has to respect the growth bound ``m q |t|^p``.
    """

    theta: float
    p: float
    sign: Sign = Sign.NONPOSITIVE
    m: float = 1.0
    custom: Callable | None = None

    def __post_init__(self):
        if not self.p > 0:
            raise ConfigError(f"growth exponent p must be positive, got {self.p}")
        if not self.m > 0:
            raise ConfigError(f"scale m must be positive, got {self.m}")
        object.__setattr__(self, "sign", Sign(self.sign))

    def q(self, delta) -> np.ndarray:
        return self.m * np.asarray(delta, dtype=float) ** self.theta

    def bound(self, delta, t) -> np.ndarray:
        """``q(x) Lambda(|t|)``."""
        return self.q(delta) * np.abs(t) ** self.p

    def __call__(self, x, delta, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.custom is not None:
            return np.asarray(self.custom(x, delta, t), dtype=float)
        mag = self.bound(delta, t)
        if self.sign is Sign.NONPOSITIVE:
            return -mag
        if self.sign is Sign.NONNEGATIVE:
            return np.where(t > 0, mag, 0.0)
        return -np.sign(t) * mag

    def on(self, lab: Lab, t) -> np.ndarray:
        return self(lab.grid.nodes, lab.grid.delta, t)

    def bound_violation(self, lab: Lab, ts: Sequence[float] = (-10, -1, -0.1, 0, 0.1, 1, 10)) -> float:
        """Largest relative excess of ``|f|`` over ``m q |t|^p`` on a lattice of constant states."""
        worst = 0.0
        for t in ts:
            t_vec = np.full(lab.n, float(t))
            excess = np.abs(self.on(lab, t_vec)) - self.bound(lab.grid.delta, t_vec)
            scale = np.maximum(self.bound(lab.grid.delta, t_vec), 1e-300)
            worst = max(worst, float(np.max(excess / scale)))
        return worst

    def describe(self) -> dict:
        return {"theta": self.theta, "p": self.p, "sign": self.sign.value, "m": self.m,
                "custom": self.custom is not None}


@dataclass
class SolveReport:
    u: np.ndarray
    iterations: int
    residual_trace: list
    converged: bool
    boundary_fit: RateFit | None = None
    monotone: bool | None = None
    kato_violation: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return self.residual_trace[-1] if self.residual_trace else 0.0

    def to_dict(self) -> dict:
        fit = None
        if self.boundary_fit is not None:
            fit = self.boundary_fit.as_row()
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual,
            "residual_trace": list(self.residual_trace),
            "boundary_fit": fit,
            "monotone": self.monotone,
            "kato_violation": self.kato_violation,
            "extras": self.extras,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def _fit_or_none(lab: Lab, u, delta_max: float = 0.5):
    try:
        return fit_boundary_rate(u, lab.grid, delta_max=delta_max)
    except ConfigError:
        return None


def solve_linear(lab: Lab, lam_data=None, zeta: BoundaryData | None = None,
                 profile_exponent: float | None = None) -> SolveReport:
    """``u = G^psi lam + P^psi zeta``.

    ``lam_data`` is a grid vector (``None`` means zero). When it comes from a
    blow-up profile ``delta^kappa`` pass ``kappa`` as ``profile_exponent`` so
    that the integrability against ``V(delta)`` is checked on the continuum
    exponent rather than on the (always finite) grid sum.
    """
    if profile_exponent is not None and profile_exponent <= -1.0 - lab.beta / 2.0:
        raise InfeasibleDataError(
            f"delta^{profile_exponent:g} is not integrable against V(delta) "
            f"(needs exponent > {-1.0 - lab.beta / 2.0:g})")
    u = np.zeros(lab.n)
    if lam_data is not None:
        lam_data = np.asarray(lam_data, dtype=float)
        if lam_data.shape != (lab.n,):
            raise ConfigError(f"data has shape {lam_data.shape}, grid has {lab.n} nodes")
        u += lab.green_potential(lam_data)
    if zeta is not None and (zeta.zeta_a or zeta.zeta_b):
        u += lab.poisson_potential(zeta)
    return SolveReport(u, 0, [0.0], True, _fit_or_none(lab, u))


def _step(u_new, u_old):
    return float(np.max(np.abs(u_new - u_old)) / max(np.max(np.abs(u_new)), 1e-300))


def solve_monotone(lab: Lab, f: Nonlinearity, zeta: BoundaryData, tol: float = 1e-10,
                   max_iter: int = 500, supersolution=None) -> SolveReport:
    """Monotone iteration ``u_{k+1} = G^psi f(., u_k) + P^psi zeta`` from ``u_0 = P^psi zeta``.

    ``f`` must be nonnegative and nondecreasing in ``t``. The step size is the
    sup-norm change relative to ``max |u|``.
    """
    if f.sign is not Sign.NONNEGATIVE:
        raise ConfigError("solve_monotone needs a nonnegative nondecreasing nonlinearity")
    if not zeta.nonnegative():
        raise ConfigError("solve_monotone needs nonnegative boundary data")
    p_zeta = lab.poisson_potential(zeta)
    test = lab.green_potential(f.bound(lab.grid.delta, 2.0 * p_zeta))
    excess = test - p_zeta
    if np.any(excess > 1e-12 * np.abs(p_zeta).max()):
        node = int(np.argmax(excess))
        raise PreconditionError(
            f"G(q Lambda(2P)) exceeds P at node {node} (x = {lab.grid.nodes[node]:.6g}) "
            f"by {excess[node]:.3g}", node=node)
    u = p_zeta.copy()
    trace, monotone, converged = [], True, False
    above_super = 0
    k = 0
    for k in range(1, max_iter + 1):
        u_new = lab.green_potential(f.on(lab, u)) + p_zeta
        if np.any(u_new < u - 1e-12 * max(1.0, np.abs(u).max())):
            monotone = False
        if supersolution is not None and np.any(u_new > supersolution + 1e-12 * np.abs(u_new).max()):
            above_super += 1
        r = _step(u_new, u)
        trace.append(r)
        u = u_new
        if r <= tol:
            converged = True
            break
    rep = SolveReport(u, k, trace, converged, _fit_or_none(lab, u), monotone=monotone)
    rep.extras["above_supersolution_iterates"] = above_super
    return rep


def integrability_surrogate(lab: Lab, f: Nonlinearity, zeta: BoundaryData | None = None) -> float:
    """``sum_i q(x_i) Lambda(P^psi zeta(x_i)) V(delta_i) w_i``."""
    p_zeta = lab.p_sigma if zeta is None else lab.poisson_potential(zeta)
    return float(np.sum(f.bound(lab.grid.delta, p_zeta) * lab.v_delta * lab.weights))


def solve_absorption(lab: Lab, f: Nonlinearity, zeta: BoundaryData, tol: float = 1e-10,
                     max_iter: int = 500, omega: float = 1.0, adaptive: bool = True) -> SolveReport:
    """Damped Picard iteration for a nonpositive (absorbing) nonlinearity.

    ``u <- (1 - omega) u + omega (G^psi f(., u) + P^psi zeta)`` from
    ``u_0 = P^psi zeta``. With ``adaptive`` the damping is halved whenever the
    step grows. The bracket ``0 <= u <= P^psi zeta`` is checked on every
    iterate and violations are counted, never clamped. Five consecutive
    doublings of the step stop the run as divergent.
    """
    if not 0 < omega <= 1:
        raise ConfigError(f"damping must lie in (0, 1], got {omega}")
    if f.sign is not Sign.NONPOSITIVE and f.custom is None:
        raise ConfigError("solve_absorption needs a nonpositive nonlinearity")
    if not zeta.nonnegative():
        raise ConfigError("solve_absorption needs nonnegative boundary data")
    p_zeta = lab.poisson_potential(zeta)
    scale = max(float(np.abs(p_zeta).max()), 1e-300)
    u = p_zeta.copy()
    trace, converged, diverged = [], False, False
    doublings, violations, halvings = 0, 0, 0
    k = 0
    for k in range(1, max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            target = lab.green_potential(f.on(lab, u)) + p_zeta
            u_new = (1.0 - omega) * u + omega * target
            r = _step(u_new, u)
        if not math.isfinite(r):
            diverged = True
            trace.append(float("inf"))
            break
        if trace and r >= 2.0 * trace[-1]:
            doublings += 1
        else:
            doublings = 0
        if adaptive and trace and r > trace[-1] and omega > 1.0 / 1024:
            omega *= 0.5
            halvings += 1
        trace.append(r)
        if np.any(u_new < -tol * scale) or np.any(u_new > p_zeta + tol * scale):
            violations += 1
        u = u_new
        if r <= tol:
            converged = True
            break
        if doublings >= 5:
            diverged = True
            break
    rep = SolveReport(u, k, trace, converged, _fit_or_none(lab, u))
    rep.extras.update({"omega": omega, "omega_halvings": halvings, "bracket_violations": violations,
                       "diverged": diverged, "surrogate": integrability_surrogate(lab, f, zeta)})
    return rep


def _truncated_picard(lab, f, sub, sup, start, p_zeta, tol, max_iter, omega):
    v = start.copy()
    trace, converged = [], False
    k = 0
    for k in range(1, max_iter + 1):
        target = lab.green_potential(f.on(lab, np.clip(v, sub, sup))) + p_zeta
        v_new = (1.0 - omega) * v + omega * target
        r = float(np.max(np.abs(v_new - v)) / max(np.max(np.abs(v_new)), np.max(np.abs(sup)), 1e-300))
        trace.append(r)
        v = v_new
        if r <= tol:
            converged = True
            break
    return v, k, trace, converged


def solve_truncated(lab: Lab, f: Nonlinearity, sub, sup, tol: float = 1e-10, max_iter: int = 2000,
                    omega: float = 0.5, zeta: BoundaryData | None = None, starts: int = 5,
                    seed: int = 0) -> SolveReport:
    """Picard iteration for the map ``v -> G^psi F(., v) + P^psi zeta`` where
    ``F(x, t) = f(x, clip(t, sub(x), sup(x)))``.

    The main run starts at the midpoint of the bracket; ``starts`` further
    runs begin at uniform random points inside it and their largest sup-norm
    distance to the main solution is reported as ``start_spread``.
    """
    sub = np.asarray(sub, dtype=float)
    sup = np.asarray(sup, dtype=float)
    if sub.shape != (lab.n,) or sup.shape != (lab.n,):
        raise ConfigError("sub- and supersolution must be grid vectors")
    if np.any(sub > sup):
        node = int(np.argmax(sub - sup))
        raise PreconditionError(f"subsolution exceeds supersolution at node {node}", node=node)
    if not 0 < omega <= 1:
        raise ConfigError(f"damping must lie in (0, 1], got {omega}")
    p_zeta = np.zeros(lab.n) if zeta is None else lab.poisson_potential(zeta)
    u, k, trace, converged = _truncated_picard(lab, f, sub, sup, 0.5 * (sub + sup), p_zeta,
                                               tol, max_iter, omega)
    scale = max(float(np.abs(sup).max()), float(np.abs(sub).max()), 1e-300)
    slack = tol * scale
    if converged and (np.any(u < sub - slack) or np.any(u > sup + slack)):
        node = int(np.argmax(np.maximum(sub - u, u - sup)))
        raise InconsistencyError("truncated fixed point leaves the bracket",
                                 {"node": node, "u": float(u[node]), "sub": float(sub[node]),
                                  "sup": float(sup[node])})
    rng = np.random.default_rng(seed)
    spread = 0.0
    for _ in range(starts):
        start = sub + rng.random(lab.n) * (sup - sub)
        v, _, _, ok = _truncated_picard(lab, f, sub, sup, start, p_zeta, tol, max_iter, omega)
        converged = converged and ok
        spread = max(spread, float(np.max(np.abs(v - u))))
    rep = SolveReport(u, k, trace, converged, _fit_or_none(lab, u))
    rep.extras.update({"omega": omega, "starts": starts, "start_spread": spread,
                       "start_spread_relative": spread / scale})
    if not np.any(np.asarray(zeta.as_array() if zeta else [0.0])):
        f_vals = f.on(lab, u)
        rep.kato_violation = kato_check(lab, u, f_vals)
    return rep


def kato_check(lab: Lab, u, f_vals) -> float:
    """``max_i (u_i^+ - (G^psi 1_{u>0} f)_i)``; nonpositive when Kato's inequality holds."""
    u = np.asarray(u, dtype=float)
    rhs = lab.green_potential(np.where(u > 0, f_vals, 0.0))
    return float(np.max(np.maximum(u, 0.0) - rhs))


def critical_exponent(alpha: float, beta: float, theta: float) -> float:
    """``(1 + 2 theta / (2 + beta)) / (1 - beta alpha / (2 + beta))``."""
    for name, val in (("alpha", alpha), ("beta", beta)):
        if not 0 < val < 2:
            raise ConfigError(f"{name} must lie in (0, 2), got {val}")
    return (1.0 + 2.0 * theta / (2.0 + beta)) / (1.0 - beta * alpha / (2.0 + beta))


# ----------------------------------------------------------------------------
# existence sweep

STABLE_BAND = 0.10
GROWTH_BAND = 0.20


@dataclass(frozen=True)
class SweepRow:
    p: float
    n: int
    cls: str
    surrogate: float
    residual: float
    boundary_exponent: float

    def as_csv(self) -> tuple:
        return (self.p, self.n, self.cls, self.surrogate, self.residual, self.boundary_exponent)


def _classify(surrogates, converged_all):
    """Refinement behaviour of the surrogate sums ``S_n`` over ``n, 2n, 4n``.

    A convergent sum has geometrically shrinking increments, so the ratio of
    consecutive increments stays below one; a divergent power-law sum has
    increment ratio at least one. The relative growth of the last doubling
    is compared against the stability and growth bands.
    """
    s = [float(v) for v in surrogates]
    growth = s[-1] / s[-2] - 1.0
    if len(s) >= 3:
        d1, d2 = s[1] - s[0], s[2] - s[1]
        ratio = d2 / d1 if d1 != 0 else 0.0
    else:
        ratio = 0.0
    if not converged_all:
        return "D", growth, ratio
    if growth >= GROWTH_BAND or ratio >= 1.0:
        return "D", growth, ratio
    if growth <= STABLE_BAND:
        return "C", growth, ratio
    return "C" if ratio < 1.0 else "D", growth, ratio


def existence_sweep(alpha: float, beta: float, theta: float, p_grid: Sequence[float],
                    n_levels: Sequence[int] = (256, 512, 1024), m: float = 1.0,
                    tol: float = 1e-10, max_iter: int = 500, labs: dict | None = None,
                    workers: int = 1) -> dict:
    """Classify each ``p`` as convergent (``"C"``) or divergent (``"D"``).

    For every level the absorption problem with ``zeta = sigma`` is solved and
    the integrability surrogate is recorded. A ``p`` is convergent when every
    solve converges and the surrogate is refinement-stable; see ``_classify``.
    Returns ``{"rows": [...], "summary": [...], "boundary": (p_lo, p_hi),
    "critical": p*}``. Cells ``(p, n)`` run on ``workers`` threads; results
    do not depend on the worker count.
    """
    p_grid = sorted(float(p) for p in p_grid)
    labs = {} if labs is None else labs
    for n in n_levels:
        if n not in labs:
            labs[n] = build_lab(n, beta, alpha=alpha)
    sigma = BoundaryData.sigma()

    def cell(p, n):
        return solve_absorption(labs[n], Nonlinearity(theta, p, Sign.NONPOSITIVE, m), sigma,
                                tol=tol, max_iter=max_iter)

    cells = [(p, n) for p in p_grid for n in n_levels]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda c: cell(*c), cells))
    else:
        reports = [cell(*c) for c in cells]
    by_cell = dict(zip(cells, reports))
    rows, summary = [], []
    for p in p_grid:
        reps = [by_cell[(p, n)] for n in n_levels]
        surr = [r.extras["surrogate"] for r in reps]
        cls, growth, ratio = _classify(surr, all(r.converged for r in reps))
        for n, s_n, rep in zip(n_levels, surr, reps):
            expo = rep.boundary_fit.exponent if rep.boundary_fit is not None else float("nan")
            rows.append(SweepRow(p, n, cls, s_n, rep.residual, expo))
        summary.append({"p": p, "class": cls, "growth": growth, "increment_ratio": ratio})
    return {"rows": rows, "summary": summary, "boundary": classification_boundary(summary),
            "critical": critical_exponent(alpha, beta, theta)}


def classification_boundary(summary) -> tuple:
    """``(p_lo, p_hi)``: last convergent and first divergent ``p`` (``None`` when absent)."""
    lo = hi = None
    for row in summary:
        if row["class"] == "C" and hi is None:
            lo = row["p"]
        elif row["class"] == "D" and hi is None:
            hi = row["p"]
    return lo, hi


# ----------------------------------------------------------------------------
# weak formulations

BUMPS = ((-0.3, 0.2), (0.0, 0.3), (0.4, 0.25))


def bump(x, center: float, width: float) -> np.ndarray:
    """Smooth bump ``exp(1 - 1/(1 - r^2))`` with ``r = (x - center)/width``, zero for ``|r| >= 1``."""
    r = (np.asarray(x, dtype=float) - center) / width
    out = np.zeros_like(r)
    inside = np.abs(r) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def distributional_residual(lab: Lab, u, lam_data, bumps=BUMPS) -> float:
    """``max_xi |<u, psi(-L) xi>_W - <lam, xi>_W| / ||lam||_W`` over the bump test functions."""
    w = lab.weights
    lam_data = np.asarray(lam_data, dtype=float)
    norm = float(np.sqrt(np.sum(lam_data**2 * w)))
    worst = 0.0
    for c, wd in bumps:
        xi = bump(lab.grid.nodes, c, wd)
        lhs = float(np.sum(u * lab.psi_op.apply(xi) * w))
        rhs = float(np.sum(lam_data * xi * w))
        worst = max(worst, abs(lhs - rhs))
    return worst / max(norm, 1e-300)


def weak_trace(lab: Lab, u, t: float, test: Callable | None = None) -> float:
    """Boundary-strip average ``(1/t) sum_{delta_i <= t} (u_i / P^psi sigma_i) test(x_i) w_i``."""
    test = test or (lambda x: np.ones_like(x))
    strip = lab.grid.delta <= t
    if strip.sum() < 8:
        raise ConfigError(f"strip delta <= {t:g} holds {int(strip.sum())} nodes; need at least 8")
    vals = np.asarray(u, dtype=float)[strip] / lab.p_sigma[strip]
    return float(np.sum(vals * test(lab.grid.nodes[strip]) * lab.weights[strip]) / t)
