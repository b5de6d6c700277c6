import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlslab import bernstein, discretize, spectral
from nlslab.analysis import (envelope_check, fit_boundary_rate, fit_power_law, green_envelope,
                             heat_envelope_small, observed_order, phi_inverse, weyl_slope)
from nlslab.bernstein import Role
from nlslab.errors import ConfigError
from nlslab.lab import build_lab


@pytest.fixture(scope="module")
def grid1024():
    return discretize.build_grid(-1.0, 1.0, 1024)


# ---------------------------------------------------------------- rate fits

def test_fit_exact_power(grid1024):
    fit = fit_boundary_rate(grid1024.delta**0.5, grid1024)
    assert fit.exponent == pytest.approx(0.5, abs=1e-6)
    assert fit.r_squared >= 1 - 1e-9
    assert not fit.log_correction_detected


def test_fit_flags_log_correction(grid1024):
    d = grid1024.delta
    fit = fit_boundary_rate(d**0.5 * np.log(2.0 / d), grid1024)
    assert fit.log_correction_detected
    assert fit.exponent == pytest.approx(0.5, abs=0.03)


def test_fit_layers_decrease_and_respect_floor(grid1024):
    fit = fit_boundary_rate(grid1024.delta**-0.3, grid1024)
    deltas = [p[0] for p in fit.layers]
    assert np.all(np.diff(deltas) < 0)
    assert min(deltas) >= 2 * grid1024.h
    row = fit.as_row()
    assert row["n_layers"] == len(fit.layers)
    assert row["delta_finest"] == deltas[-1]


def test_fit_principal_mode():
    lab = build_lab(1024, 1.0, alpha=1.0)
    assert fit_boundary_rate(lab.spectrum.phi1, lab.grid).exponent == pytest.approx(0.5, abs=0.05)


def test_fit_needs_enough_layers():
    g = discretize.build_grid(-1.0, 1.0, 32)
    with pytest.raises(ConfigError, match="dyadic layers"):
        fit_boundary_rate(g.delta, g)


def test_fit_rejects_vanishing_layer(grid1024):
    vals = grid1024.delta.copy()
    vals[grid1024.delta > 0.3] = 0.0
    with pytest.raises(ConfigError):
        fit_boundary_rate(vals, grid1024)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(1e-6, 1e6), e=st.floats(-1.5, 1.5), wiggle=st.floats(0, 0.3))
def test_fit_scale_equivariance(c, e, wiggle):
    g = discretize.build_grid(-1.0, 1.0, 512)
    vals = g.delta**e * (1 + wiggle * np.sin(40 * g.nodes))
    base = fit_boundary_rate(vals, g)
    scaled = fit_boundary_rate(c * vals, g)
    assert scaled.exponent == pytest.approx(base.exponent, abs=1e-9)
    assert scaled.intercept - base.intercept == pytest.approx(math.log(c), abs=1e-9)
    assert 0.0 <= base.r_squared <= 1.0


def test_power_law_and_observed_order():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    slope, icpt = fit_power_law(x, 3.0 * x**-1.5)
    assert slope == pytest.approx(-1.5, abs=1e-12)
    assert icpt == pytest.approx(math.log(3.0), abs=1e-12)
    assert observed_order([1.0, 0.25, 0.0625]) == pytest.approx([2.0, 2.0])


def test_weyl_slope_synthetic_and_errors():
    assert weyl_slope(np.arange(1, 101, dtype=float) ** 1.3) == pytest.approx(1.3, abs=1e-12)
    with pytest.raises(ConfigError):
        weyl_slope(np.ones(20))


# ---------------------------------------------------------------- envelopes

def test_envelope_of_formula_itself_is_one():
    g = discretize.build_grid(-1.0, 1.0, 64)
    phi = bernstein.stable(0.5, Role.PHI)
    form = green_envelope(g, phi, bernstein.stable(0.5))
    i, j = np.meshgrid(np.arange(64), np.arange(64), indexing="ij")
    off = i != j
    m = np.ones((64, 64))
    m[off] = form(g.nodes[i[off]], g.nodes[j[off]])
    band = envelope_check(m, form, grid=g)
    assert band.c_low == pytest.approx(1.0, rel=1e-14)
    assert band.c_high == pytest.approx(1.0, rel=1e-14)
    assert band.nonpositive == 0


@settings(max_examples=25, deadline=None)
@given(c=st.floats(1e-4, 1e4))
def test_envelope_scaling_invariance(c):
    g = discretize.build_grid(-1.0, 1.0, 32)
    rng = np.random.default_rng(1)
    m = rng.random((32, 32)) + 0.1
    form = lambda x, y: 1.0 + (x - y) ** 2  # noqa: E731
    base = envelope_check(m, form, grid=g)
    scaled = envelope_check(c * m, lambda x, y: c * form(x, y), grid=g)
    assert scaled.c_low == pytest.approx(base.c_low, rel=1e-12)
    assert scaled.c_high == pytest.approx(base.c_high, rel=1e-12)


def test_envelope_counts_nonpositive_entries():
    g = discretize.build_grid(-1.0, 1.0, 16)
    m = np.ones((16, 16))
    m[0, 5] = m[5, 0] = -1.0
    band = envelope_check(m, lambda x, y: np.ones_like(x), grid=g)
    assert band.nonpositive == 2
    assert band.width == 1.0


def test_envelope_needs_grid_for_arrays():
    with pytest.raises(ConfigError):
        envelope_check(np.ones((16, 16)), lambda x, y: np.ones_like(x))


def test_green_envelope_band_stable_under_refinement():
    bands = []
    for n in (256, 512):
        lab = build_lab(n, 1.0, alpha=1.0)
        bands.append(envelope_check(lab.gpsi, green_envelope(lab.grid, lab.phi, lab.psi)))
    assert bands[0].nonpositive == 0
    assert bands[0].width <= 50
    assert bands[1].width == pytest.approx(bands[0].width, rel=0.10)


def test_heat_envelope_band_stable_under_refinement():
    widths = []
    for n in (256, 512):
        g = discretize.build_grid(-1.0, 1.0, n)
        spec = spectral.eigendecompose(discretize.assemble_generator(g, 1.0))
        phi = bernstein.stable(0.5, Role.PHI)
        band = envelope_check(spectral.heat_kernel(spec, 0.1), heat_envelope_small(g, phi, 0.1))
        assert np.isfinite(band.width)
        widths.append(band.width)
    assert widths[1] == pytest.approx(widths[0], rel=0.15)


def test_phi_inverse_round_trip():
    for spec in (bernstein.stable(0.5, Role.PHI), bernstein.relativistic(0.5, 1.0, Role.PHI)):
        y = np.array([0.1, 1.0, 30.0])
        np.testing.assert_allclose(bernstein.evaluate(spec, phi_inverse(spec, y)), y, rtol=1e-10)
