"""Run configuration: sectioned ``key = value`` files plus command-line overrides.

Every field is validated up front and all problems are reported together in a
single :class:`ConfigError`.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import bernstein
from .bernstein import BernsteinSpec
from .discretize import MIN_NODES
from .errors import ConfigError
from .kernels import BoundaryData
from .semilinear import Nonlinearity, Sign

__all__ = ["Config", "SCHEMA", "load_config"]

# section -> key -> (type, default, help)
SCHEMA = {
    "domain": {
        "a": (float, -1.0, "left endpoint"),
        "b": (float, 1.0, "right endpoint"),
        "n": (int, 512, "number of grid nodes (at least 16)"),
    },
    "operator": {
        "beta": (float, 1.0, "order of the inner fractional Laplacian, in (0, 2)"),
        "alpha": (float, 1.0, "scaling index of psi, in (0, 2); psi_s defaults to alpha/2"),
        "psi_family": (str, "stable", "stable | relativistic | tempered"),
        "psi_s": (float, None, "Bernstein exponent of psi, in (0, 1)"),
        "psi_mass": (float, 0.0, "mass of the relativistic family"),
        "psi_tempering": (float, 0.0, "tempering of the tempered family"),
    },
    "nonlinearity": {
        "theta": (float, 0.0, "boundary weight exponent of q = m delta^theta"),
        "p": (float, 1.2, "growth exponent"),
        "m": (float, 1.0, "scale"),
        "sign": (str, "nonpositive", "nonpositive | nonnegative | signed"),
    },
    "boundary": {
        "zeta_a": (float, 1.0, "boundary atom at a"),
        "zeta_b": (float, 1.0, "boundary atom at b"),
    },
    "solver": {
        "method": (str, "auto", "auto | linear | monotone | absorption | truncated"),
        "tol": (float, 1e-10, "relative sup-norm step tolerance"),
        "max_iter": (int, 500, "iteration cap"),
        "omega": (float, None, "damping; 1 for absorption, 0.5 for truncated when unset"),
    },
    "sweep": {
        "p_grid": (str, "1.2,1.4,1.6,1.8", "comma-separated growth exponents"),
        "levels": (str, "256,512,1024", "comma-separated grid sizes"),
    },
    "output": {
        "dir": (str, "out", "output directory"),
        "eig_modes": (int, 5, "eigenfunctions written to eigfun.csv"),
    },
    "run": {
        "seed": (int, 0, "seed for randomized batteries"),
    },
}

METHODS = ("auto", "linear", "monotone", "absorption", "truncated")
FAMILIES = ("stable", "relativistic", "tempered")


def _flat_default(key):
    for sec in SCHEMA.values():
        if key in sec:
            return sec[key][1]
    raise KeyError(key)


@dataclass
class Config:
    a: float = -1.0
    b: float = 1.0
    n: int = 512
    beta: float = 1.0
    alpha: float = 1.0
    psi_family: str = "stable"
    psi_s: float | None = None
    psi_mass: float = 0.0
    psi_tempering: float = 0.0
    theta: float = 0.0
    p: float = 1.2
    m: float = 1.0
    sign: str = "nonpositive"
    zeta_a: float = 1.0
    zeta_b: float = 1.0
    method: str = "auto"
    tol: float = 1e-10
    max_iter: int = 500
    omega: float | None = None
    p_grid: str = "1.2,1.4,1.6,1.8"
    levels: str = "256,512,1024"
    dir: str = "out"
    eig_modes: int = 5
    seed: int = 0
    problems: list = field(default_factory=list, repr=False)

    # derived views ---------------------------------------------------------

    @property
    def psi(self) -> BernsteinSpec:
        s = self.alpha / 2.0 if self.psi_s is None else self.psi_s
        if self.psi_family == "stable":
            return bernstein.stable(s)
        if self.psi_family == "relativistic":
            return bernstein.relativistic(s, self.psi_mass)
        return bernstein.tempered(s, self.psi_tempering)

    @property
    def zeta(self) -> BoundaryData:
        return BoundaryData(self.zeta_a, self.zeta_b)

    @property
    def nonlinearity(self) -> Nonlinearity:
        return Nonlinearity(self.theta, self.p, Sign(self.sign), self.m)

    @property
    def p_values(self) -> list:
        return [float(v) for v in self.p_grid.split(",") if v.strip()]

    @property
    def level_values(self) -> list:
        return [int(v) for v in self.levels.split(",") if v.strip()]

    @property
    def out(self) -> Path:
        return Path(self.dir)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "problems"}

    # validation ------------------------------------------------------------

    def validate(self) -> "Config":
        """Check every field against the module preconditions; raise once with all problems."""
        bad = []

        def need(cond, msg):
            if not cond:
                bad.append(msg)

        for name in ("a", "b", "beta", "alpha", "theta", "p", "m", "zeta_a", "zeta_b", "tol",
                     "psi_mass", "psi_tempering"):
            need(math.isfinite(getattr(self, name)), f"{name} must be finite")
        need(self.a < self.b, f"domain needs a < b, got a={self.a}, b={self.b}")
        need(self.n >= MIN_NODES, f"n must satisfy n >= {MIN_NODES}, got {self.n}")
        need(0 < self.beta < 2, f"beta must lie in (0, 2), got {self.beta}")
        need(0 < self.alpha < 2, f"alpha must lie in (0, 2), got {self.alpha}")
        need(self.psi_family in FAMILIES, f"psi_family must be one of {FAMILIES}, got {self.psi_family!r}")
        if self.psi_s is not None:
            need(0 < self.psi_s < 1, f"psi_s must lie in (0, 1), got {self.psi_s}")
        need(self.psi_mass >= 0, "psi_mass must be nonnegative")
        need(self.psi_tempering >= 0, "psi_tempering must be nonnegative")
        need(self.psi_family != "relativistic" or self.psi_mass > 0, "relativistic psi needs psi_mass > 0")
        need(self.psi_family != "tempered" or self.psi_tempering > 0, "tempered psi needs psi_tempering > 0")
        need(self.p > 0, f"p must be positive, got {self.p}")
        need(self.m > 0, f"m must be positive, got {self.m}")
        need(self.sign in {s.value for s in Sign}, f"sign must be one of {[s.value for s in Sign]}")
        need(self.method in METHODS, f"method must be one of {METHODS}, got {self.method!r}")
        need(0 < self.tol < 1, f"tol must lie in (0, 1), got {self.tol}")
        need(self.max_iter >= 1, "max_iter must be at least 1")
        if self.omega is not None:
            need(0 < self.omega <= 1, f"omega must lie in (0, 1], got {self.omega}")
        need(self.eig_modes >= 1, "eig_modes must be at least 1")
        need(self.seed >= 0, "seed must be nonnegative")
        try:
            ps = self.p_values
            need(len(ps) >= 2 and all(v > 0 for v in ps), "p_grid needs at least two positive values")
        except ValueError:
            bad.append(f"p_grid is not a comma-separated list of numbers: {self.p_grid!r}")
        try:
            lv = self.level_values
            need(len(lv) >= 2 and all(v >= MIN_NODES for v in lv),
                 f"levels needs at least two grid sizes, each >= {MIN_NODES}")
        except ValueError:
            bad.append(f"levels is not a comma-separated list of integers: {self.levels!r}")
        if self.method in ("monotone", "absorption") and not (self.zeta_a >= 0 and self.zeta_b >= 0):
            bad.append(f"method {self.method} needs nonnegative boundary atoms")
        if bad:
            raise ConfigError("invalid configuration:\n  - " + "\n  - ".join(bad))
        return self


def _coerce(kind, raw, key, problems):
    if raw is None:
        return None
    if isinstance(raw, str) and raw.strip().lower() in ("", "none"):
        return None
    try:
        return kind(raw)
    except (TypeError, ValueError):
        problems.append(f"{key}: cannot read {raw!r} as {kind.__name__}")
        return _flat_default(key)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> Config:
    """Read an optional config file, apply non-``None`` overrides and validate."""
    values, problems = {}, []
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for section in parser.sections():
            if section not in SCHEMA:
                problems.append(f"unknown section [{section}]")
                continue
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    problems.append(f"unknown key {key!r} in [{section}]")
                    continue
                values[key] = _coerce(SCHEMA[section][key][0], raw, key, problems)
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    cfg = Config(**values)
    try:
        cfg.validate()
    except ConfigError as exc:
        if problems:
            raise ConfigError(str(exc) + "\n  - " + "\n  - ".join(problems)) from None
        raise
    if problems:
        raise ConfigError("invalid configuration:\n  - " + "\n  - ".join(problems))
    return cfg
