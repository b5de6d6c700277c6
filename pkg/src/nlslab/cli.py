"""Command-line front end: ``nlslab {eig,green,poisson,solve,sweep,verify}``.

Exit codes: 0 success, 2 configuration error, 3 numerical error,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (envelope_check, fit_boundary_rate, green_envelope, heat_envelope_small, weyl_slope)
from .config import SCHEMA, Config, load_config
from .errors import ConfigError, DomainError, NlslabError, NumericalError
from .kernels import BoundaryData
from .lab import Lab, build_lab
from .semilinear import (Sign, critical_exponent, existence_sweep, solve_absorption, solve_linear,
                         solve_monotone, solve_truncated)
from .spectral import heat_kernel
from .verify import run_all

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY = 0, 2, 3, 4

COMMANDS = ("eig", "green", "poisson", "solve", "sweep", "verify")


# ----------------------------------------------------------------------------
# output helpers

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    """Comma-separated, 17 significant digits, LF line endings."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    return obj


def write_json(path: Path, data) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _lab(cfg: Config, n: int | None = None) -> Lab:
    return build_lab(n or cfg.n, cfg.beta, psi=cfg.psi, a=cfg.a, b=cfg.b)


def _expected_poisson_exponent(cfg):
    return -1.0 - cfg.beta / 2.0 + cfg.alpha * cfg.beta / 2.0


def _rate_row(values, lab: Lab, **extra) -> dict:
    """Fit summary, or the reason no fit is possible on this grid."""
    try:
        row = fit_boundary_rate(values, lab.grid).as_row()
    except ConfigError as exc:
        row = {"exponent": None, "unavailable": str(exc)}
    row.update(extra)
    return row


# ----------------------------------------------------------------------------
# commands

def cmd_eig(cfg: Config) -> int:
    lab = _lab(cfg)
    lam = lab.spectrum.eigenvalues
    out = cfg.out
    write_csv(out / "eig.csv", ["j", "lambda"], ((j + 1, v) for j, v in enumerate(lam)))
    k = min(cfg.eig_modes, lab.n)
    phi = lab.spectrum.eigenvectors[:, :k]
    write_csv(out / "eigfun.csv", ["x"] + [f"phi_{j + 1}" for j in range(k)],
              ([x, *row] for x, row in zip(lab.grid.nodes, phi)))
    rates = {"beta": cfg.beta, "n": lab.n,
             "hopf": _rate_row(lab.spectrum.phi1, lab, target=cfg.beta / 2.0)}
    if lab.n >= 50:
        rates["weyl"] = {"slope": weyl_slope(lam), "j_range": [5, 50], "target": cfg.beta}
    write_json(out / "rates.json", rates)
    return EXIT_OK


def cmd_green(cfg: Config) -> int:
    lab = _lab(cfg)
    g = lab.gpsi.entries
    x = lab.grid.nodes
    write_csv(cfg.out / "green.csv", ["x"] + [f"y_{j}" for j in range(lab.n)],
              ([xi, *row] for xi, row in zip(x, g)))
    band = envelope_check(lab.gpsi, green_envelope(lab.grid, lab.phi, lab.psi))
    heat = envelope_check(heat_kernel(lab.spectrum, 0.1), heat_envelope_small(lab.grid, lab.phi, 0.1))
    potentials = {}
    for kappa in (0.5, 0.0, -0.25):
        potentials[format(kappa, "g")] = _rate_row(lab.green_potential(lab.grid.delta ** kappa), lab)
    write_json(cfg.out / "envelope.json", {
        "n": lab.n, "beta": cfg.beta, "psi": cfg.psi.describe(),
        "green": {"c_low": band.c_low, "c_high": band.c_high, "width": band.width,
                  "nonpositive": band.nonpositive},
        "heat_t0.1": {"c_low": heat.c_low, "c_high": heat.c_high, "width": heat.width,
                      "nonpositive": heat.nonpositive},
        "green_potential_rates": potentials,
    })
    return EXIT_OK


def cmd_poisson(cfg: Config) -> int:
    lab = _lab(cfg)
    pk = lab.poisson
    write_csv(cfg.out / "poisson.csv", ["x", "P_a", "P_b", "P_sigma"],
              ([x, pa, pb, ps] for x, (pa, pb), ps in zip(lab.grid.nodes, pk.values, lab.p_sigma)))
    write_json(cfg.out / "poisson_rates.json", {
        "n": lab.n, "beta": cfg.beta, "alpha": cfg.alpha,
        "p_sigma": _rate_row(lab.p_sigma, lab, target=_expected_poisson_exponent(cfg)),
        "extrapolation": pk.diagnostics,
    })
    return EXIT_OK


def _solve(cfg: Config, lab: Lab):
    f = cfg.nonlinearity
    zeta = cfg.zeta
    method = cfg.method
    if method == "auto":
        method = {Sign.NONPOSITIVE: "absorption", Sign.NONNEGATIVE: "monotone",
                  Sign.SIGNED: "truncated"}[f.sign]
    if method == "linear":
        return method, solve_linear(lab, None, zeta)
    if method == "monotone":
        return method, solve_monotone(lab, f, zeta, cfg.tol, cfg.max_iter)
    if method == "absorption":
        return method, solve_absorption(lab, f, zeta, cfg.tol, cfg.max_iter,
                                        omega=1.0 if cfg.omega is None else cfg.omega)
    # odd nonincreasing f: P(zeta+) is a supersolution and -P(zeta-) a subsolution
    sup = lab.poisson_potential(BoundaryData(max(zeta.zeta_a, 0.0), max(zeta.zeta_b, 0.0)))
    sub = -lab.poisson_potential(BoundaryData(max(-zeta.zeta_a, 0.0), max(-zeta.zeta_b, 0.0)))
    return method, solve_truncated(lab, f, sub, sup, cfg.tol, cfg.max_iter,
                                   omega=0.5 if cfg.omega is None else cfg.omega, zeta=zeta,
                                   seed=cfg.seed)


def cmd_solve(cfg: Config) -> int:
    lab = _lab(cfg)
    method, rep = _solve(cfg, lab)
    p_zeta = lab.poisson_potential(cfg.zeta)
    write_csv(cfg.out / "solution.csv", ["x", "u", "P_zeta"], zip(lab.grid.nodes, rep.u, p_zeta))
    data = rep.to_dict()
    data.update({"method": method, "nonlinearity": cfg.nonlinearity.describe(),
                 "zeta": [cfg.zeta_a, cfg.zeta_b], "n": lab.n, "tol": cfg.tol,
                 "critical_exponent": critical_exponent(cfg.alpha, cfg.beta, cfg.theta)})
    write_json(cfg.out / "report.json", data)
    if not rep.converged:
        print(f"solve: not converged after {rep.iterations} iterations "
              f"(last step {rep.residual:.3g})", file=sys.stderr)
    return EXIT_OK


def _workers() -> int:
    raw = os.environ.get("NLSLAB_THREADS", "1")
    try:
        val = int(raw)
    except ValueError:
        raise ConfigError(f"NLSLAB_THREADS must be a positive integer, got {raw!r}") from None
    if val < 1:
        raise ConfigError(f"NLSLAB_THREADS must be a positive integer, got {raw!r}")
    return val


def cmd_sweep(cfg: Config) -> int:
    workers = _workers()
    labs = {n: build_lab(n, cfg.beta, psi=cfg.psi, a=cfg.a, b=cfg.b) for n in cfg.level_values}
    res = existence_sweep(cfg.alpha, cfg.beta, cfg.theta, cfg.p_values, cfg.level_values, m=cfg.m,
                          tol=cfg.tol, max_iter=cfg.max_iter, labs=labs, workers=workers)
    write_csv(cfg.out / "sweep.csv", ["p", "n", "class", "surrogate", "residual", "boundary_exponent"],
              (r.as_csv() for r in res["rows"]))
    lo, hi = res["boundary"]
    write_json(cfg.out / "sweep_summary.json", {
        "alpha": cfg.alpha, "beta": cfg.beta, "theta": cfg.theta, "levels": cfg.level_values,
        "critical_exponent": res["critical"], "boundary": [lo, hi], "summary": res["summary"],
        "brackets_critical": lo is not None and hi is not None and lo < res["critical"] < hi,
    })
    print(f"sweep: classification boundary ({lo}, {hi}); critical exponent {res['critical']:.6g}")
    return EXIT_OK


def cmd_verify(cfg: Config) -> int:
    lab = _lab(cfg)
    checks = run_all(lab, tol=cfg.tol, seed=cfg.seed)
    suites = {}
    for c in checks:
        suites.setdefault(c.suite, []).append(c.as_dict())
    ok = all(c.passed for c in checks)
    write_json(cfg.out / "verify.json", {
        "n": lab.n, "beta": cfg.beta, "alpha": cfg.alpha, "passed": ok,
        "suites": {name: {"passed": all(c["passed"] for c in items), "checks": items}
                   for name, items in suites.items()},
    })
    for c in checks:
        if not c.passed:
            print(f"verify: FAIL {c.suite}: {c.name} = {c.value:.6g} (tolerance {c.tolerance:g})",
                  file=sys.stderr)
    return EXIT_OK if ok else EXIT_VERIFY


HANDLERS = {"eig": cmd_eig, "green": cmd_green, "poisson": cmd_poisson, "solve": cmd_solve,
            "sweep": cmd_sweep, "verify": cmd_verify}


# ----------------------------------------------------------------------------
# argument handling

def build_parser() -> argparse.ArgumentParser:
    sections = "\n".join(f"  [{sec}] " + ", ".join(keys) for sec, keys in SCHEMA.items())
    parser = argparse.ArgumentParser(
        prog="nlslab",
        description="Green/Poisson machinery and semilinear solvers for psi(-L) on an interval.",
        epilog="config file sections and keys:\n" + sections,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="sectioned key = value config file")
    parser.add_argument("--out", help="output directory (created if missing)")
    parser.add_argument("--n", type=int, help="number of grid nodes (at least 16)")
    parser.add_argument("--beta", type=float, help="order of the base operator, in (0, 2)")
    parser.add_argument("--alpha", type=float, help="scaling index of psi, in (0, 2)")
    parser.add_argument("--theta", type=float, help="weight exponent of the nonlinearity")
    parser.add_argument("--p", type=float, help="power of the nonlinearity")
    parser.add_argument("--tol", type=float, help="solver and check tolerance")
    parser.add_argument("--seed", type=int, help="seed for randomized checks")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {"n": args.n, "beta": args.beta, "alpha": args.alpha, "theta": args.theta,
                 "p": args.p, "tol": args.tol, "seed": args.seed, "dir": args.out}
    try:
        cfg = load_config(args.config, overrides)
        cfg.out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](cfg)
    except (ConfigError, DomainError) as exc:
        print(f"nlslab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"nlslab: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NlslabError as exc:
        print(f"nlslab: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"nlslab: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
