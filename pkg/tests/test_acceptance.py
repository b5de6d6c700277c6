"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) for the summary alone.
"""

import sys
import time
from functools import lru_cache

import numpy as np
import pytest

from nlslab import bernstein, spectral
from nlslab.analysis import envelope_check, fit_boundary_rate, green_envelope, heat_envelope_small, weyl_slope
from nlslab.lab import build_lab
from nlslab.semilinear import existence_sweep
from nlslab.verify import SUITES

N_RATES = 1024


@lru_cache(maxsize=None)
def lab(n, beta, alpha=1.0):
    return build_lab(n, beta, alpha=alpha)


def _record(log, number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}"
    print(line)
    if log is not None:
        log.append(line)
    return passed


def _rel(a, b):
    return float(np.abs(a - b).max() / np.abs(b).max())


def criterion_1(log=None):
    start = time.perf_counter()
    L = build_lab(512, 1.0, alpha=1.0)
    fact = _rel(L.gpsi.compose(L.gpsi_star), L.green.entries)
    star = spectral.function_of(L.spectrum, bernstein.conjugate(L.psi))
    comp = _rel(L.psi_op.then(star), L.spectrum.generator.entries)
    elapsed = time.perf_counter() - start
    ok = fact <= 1e-9 and comp <= 1e-9 and elapsed < 30
    return _record(log, 1, "spectral identities", ok,
                   f"factorization {fact:.2e}, composition {comp:.2e} (tol 1e-9), {elapsed:.1f}s (< 30s)")


def criterion_2(log=None):
    start = time.perf_counter()
    L = lab(256, 1.0)
    oracle = spectral.green_oracle_subordination(L.spectrum, L.psi).entries
    ref = L.gpsi.entries
    off = ~np.eye(L.n, dtype=bool)
    err = float(np.max(np.abs(oracle[off] - ref[off]) / np.abs(ref[off])))
    elapsed = time.perf_counter() - start
    ok = err <= 1e-4 and elapsed < 60
    return _record(log, 2, "oracle equivalence", ok,
                   f"max relative off-diagonal error {err:.2e} (tol 1e-4), {elapsed:.1f}s (< 60s)")


def criterion_3(log=None):
    parts, ok = [], True
    for beta in (0.6, 1.0, 1.4):
        L = lab(N_RATES, beta)
        e = fit_boundary_rate(L.spectrum.phi1, L.grid).exponent
        ok &= abs(e - beta / 2) <= 0.05
        parts.append(f"beta={beta:g}: {e:.3f} vs {beta / 2:g}")
    return _record(log, 3, "Hopf rate (+-0.05)", ok, "; ".join(parts))


def criterion_4(log=None):
    parts, ok = [], True
    for beta in (0.6, 1.0, 1.4):
        s = weyl_slope(lab(N_RATES, beta).spectrum.eigenvalues, 5, 50)
        ok &= abs(s - beta) <= 0.05
        parts.append(f"beta={beta:g}: {s:.3f}")
    return _record(log, 4, "Weyl slope (+-0.05)", ok, "; ".join(parts))


def criterion_5(log=None):
    L = lab(N_RATES, 1.0)
    parts, ok = [], True
    for kappa, target, log_expected in ((0.5, 0.5, False), (0.0, 0.5, True), (-0.25, 0.25, False)):
        fit = fit_boundary_rate(L.green_potential(L.grid.delta**kappa), L.grid)
        good = abs(fit.exponent - target) <= 0.07 and fit.log_correction_detected == log_expected
        ok &= good
        parts.append(f"kappa={kappa:g}: {fit.exponent:.3f} vs {target:g}, "
                     f"log flag {fit.log_correction_detected} (want {log_expected})")
    return _record(log, 5, "Green-potential boundary table (+-0.07)", ok, "; ".join(parts))


def criterion_6(log=None):
    parts, ok = [], True
    for beta, alpha in ((1.0, 1.0), (1.0, 0.5), (1.4, 1.0)):
        L = lab(N_RATES, beta, alpha)
        target = -1 - beta / 2 + alpha * beta / 2
        e = fit_boundary_rate(L.p_sigma, L.grid).exponent
        ok &= abs(e - target) <= 0.1
        parts.append(f"(beta,alpha)=({beta:g},{alpha:g}): {e:.3f} vs {target:g}")
    return _record(log, 6, "Poisson rate (+-0.1)", ok, "; ".join(parts))


def criterion_7(log=None):
    L = lab(N_RATES, 1.0)
    rho = bernstein.weight_rho(L.phi, L.psi, L.grid.delta)
    e = fit_boundary_rate(L.green_potential(rho), L.grid).exponent
    ok = abs(e - 0.5) <= 0.07
    return _record(log, 7, "rho-invariance (+-0.07)", ok, f"exponent {e:.3f} vs 0.5")


def criterion_8(log=None):
    start = time.perf_counter()
    labs = {}
    parts, ok = [], True
    for theta, grid in ((0.0, (1.2, 1.4, 1.6, 1.8)), (1.0, (2.2, 2.4, 2.6, 2.8))):
        res = existence_sweep(1.0, 1.0, theta, grid, (256, 512, 1024), labs=labs)
        lo, hi = res["boundary"]
        p_star = res["critical"]
        good = lo is not None and hi is not None and lo < p_star < hi and hi - lo <= 0.2 + 1e-12
        ok &= good
        parts.append(f"theta={theta:g}: boundary ({lo}, {hi}) vs p*={p_star:.3g}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 600
    return _record(log, 8, "critical-exponent brackets", ok, "; ".join(parts) + f"; {elapsed:.1f}s (< 600s)")


def criterion_9(log=None):
    L = lab(512, 1.0)
    names = ("maximum_principle", "monotonicity", "rate_transfer", "kato_and_uniqueness",
             "distributional", "weak_trace")
    checks = [c for name in names for c in SUITES[name](L)]
    failed = [f"{c.suite}/{c.name}={c.value:.3g}" for c in checks if not c.passed]
    ok = not failed
    detail = f"{len(checks) - len(failed)}/{len(checks)} checks pass"
    if failed:
        detail += "; failing: " + ", ".join(failed)
    return _record(log, 9, "semilinear invariant suites (n=512)", ok, detail)


def criterion_10(log=None):
    parts, ok = [], True
    bands = {}
    for n in (512, 1024):
        L = lab(n, 1.0)
        bands[("green", n)] = envelope_check(L.gpsi, green_envelope(L.grid, L.phi, L.psi))
        bands[("heat", n)] = envelope_check(spectral.heat_kernel(L.spectrum, 0.1),
                                            heat_envelope_small(L.grid, L.phi, 0.1))
    for kind, tol in (("green", 0.10), ("heat", 0.15)):
        a, b = bands[(kind, 512)], bands[(kind, 1024)]
        d_low = abs(b.c_low / a.c_low - 1)
        d_high = abs(b.c_high / a.c_high - 1)
        good = d_low <= tol and d_high <= tol and a.nonpositive == b.nonpositive == 0
        ok &= good
        parts.append(f"{kind}: C_low {a.c_low:.4g}->{b.c_low:.4g} ({d_low:.1%}), "
                     f"C_high {a.c_high:.4g}->{b.c_high:.4g} ({d_high:.1%}), tol {tol:.0%}")
    return _record(log, 10, "envelope stability n -> 2n", ok, "; ".join(parts))


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10]


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 11)])
def test_acceptance(criterion, acceptance_log):
    assert criterion(acceptance_log)


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
