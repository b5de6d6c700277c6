import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlslab import discretize
from nlslab.discretize import Kind
from nlslab.errors import ConfigError, DomainError


def _lambda1(n, beta=1.0):
    g = discretize.build_grid(-1.0, 1.0, n)
    a = discretize.assemble_generator(g, beta)
    root = np.sqrt(g.weights)
    return float(np.linalg.eigvalsh(root[:, None] * a.entries * root[None, :])[0])


def _torsion_exact(x, beta):
    c = 2.0**beta * math.gamma(1 + beta / 2) * math.gamma((1 + beta) / 2) / math.sqrt(math.pi)
    return (1.0 - x * x) ** (beta / 2) / c


# ---------------------------------------------------------------- grid

def test_four_node_grid():
    g = discretize.build_grid(-1.0, 1.0, 4, min_nodes=1)
    np.testing.assert_array_equal(g.nodes, [-0.75, -0.25, 0.25, 0.75])
    assert g.h == 0.5
    np.testing.assert_array_equal(g.delta, [0.25, 0.75, 0.75, 0.25])


def test_small_grid_rejected():
    with pytest.raises(ConfigError, match="n >= 16"):
        discretize.build_grid(-1.0, 1.0, 15)


def test_empty_interval_rejected():
    with pytest.raises(ConfigError):
        discretize.build_grid(1.0, 1.0, 32)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-5, 5), length=st.floats(0.1, 10), n=st.integers(16, 400))
def test_grid_invariants(a, length, n):
    b = a + length
    g = discretize.build_grid(a, b, n)
    assert a < g.nodes[0] and g.nodes[-1] < b
    assert np.all(np.diff(g.nodes) > 0)
    assert np.all(g.delta > 0) and np.all(g.delta <= (b - a) / 2 * (1 + 1e-12))
    assert g.weights.sum() == pytest.approx(b - a, rel=1e-12)


def test_grid_arrays_are_read_only():
    g = discretize.build_grid(-1.0, 1.0, 16)
    with pytest.raises(ValueError):
        g.nodes[0] = 0.0


# ---------------------------------------------------------------- killing density

def test_killing_density_at_center():
    g = discretize.build_grid(-1.0, 1.0, 17)
    assert g.nodes[8] == pytest.approx(0.0, abs=1e-15)
    assert discretize.killing_density_phi(g, 1.0, 8) == pytest.approx(2 / math.pi, rel=1e-14)


def test_killing_density_boundary_blow_up():
    g = discretize.build_grid(-1.0, 1.0, 4096)
    k = discretize.killing_density_phi(g, 1.0)
    # kappa(x) delta(x) -> 1/pi at the edge
    assert k[0] * g.delta[0] == pytest.approx(1 / math.pi, rel=1e-3)


def test_killing_density_reflection_symmetric():
    g = discretize.build_grid(-1.0, 1.0, 64)
    k = discretize.killing_density_phi(g, 0.7)
    np.testing.assert_array_equal(k, k[::-1])


def test_fractional_constant_at_one():
    assert discretize.fractional_constant(1.0) == pytest.approx(1 / math.pi, rel=1e-14)


# ---------------------------------------------------------------- generator

@pytest.mark.parametrize("beta", [0.0, 2.0, -0.5, 2.5])
def test_generator_rejects_bad_beta(beta):
    g = discretize.build_grid(-1.0, 1.0, 16)
    with pytest.raises(DomainError):
        discretize.assemble_generator(g, beta)


@pytest.mark.parametrize("beta", [0.3, 1.0, 1.7])
def test_generator_symmetric_with_sign_structure(beta):
    g = discretize.build_grid(-1.0, 1.0, 128)
    a = discretize.assemble_generator(g, beta)
    assert a.kind is Kind.GENERATOR
    assert a.asymmetry() <= 1e-12
    off = a.entries[~np.eye(128, dtype=bool)]
    assert np.all(off <= 0)
    assert np.all(np.diag(a.entries) > 0)


def test_generator_positive_definite():
    g = discretize.build_grid(-2.0, 3.0, 96)
    a = discretize.assemble_generator(g, 1.3)
    assert np.linalg.eigvalsh(a.entries).min() > 0


@pytest.mark.parametrize("beta", [0.6, 1.0, 1.4])
def test_row_action_on_constants(beta):
    # interior rows reproduce the killing density exactly; the two edge rows carry the
    # self-cell correction against the zero exterior, a near-constant fraction of kappa
    excess = []
    for n in (64, 128, 256):
        g = discretize.build_grid(-1.0, 1.0, n)
        a = discretize.assemble_generator(g, beta)
        r = a.apply(np.ones(n))
        k = discretize.killing_density_phi(g, beta)
        assert np.abs(r - k)[1:-1].max() <= 1e-12 * k.max()
        excess.append((r[0] - k[0]) / k[0])
    assert excess[0] > 0
    np.testing.assert_allclose(excess, excess[0], rtol=0.05)


def test_lambda1_richardson():
    lams = [_lambda1(n) for n in (256, 512, 1024)]
    order = math.log2((lams[0] - lams[1]) / (lams[1] - lams[2]))
    extrapolated = lams[2] + (lams[2] - lams[1]) / (2.0**order - 1.0)
    assert extrapolated == pytest.approx(1.1578, abs=0.02)
    assert _lambda1(512) == pytest.approx(1.1578, abs=0.02)


def test_lambda1_cauchy_under_doubling():
    lams = [_lambda1(n) for n in (64, 128, 256, 512)]
    steps = np.abs(np.diff(lams))
    assert np.all(np.diff(steps) < 0)


@pytest.mark.parametrize("beta", [0.6, 1.0, 1.4])
def test_torsion_against_closed_form(beta):
    errs = []
    for n in (128, 256, 512):
        g = discretize.build_grid(-1.0, 1.0, n)
        a = discretize.assemble_generator(g, beta)
        u = np.linalg.solve(a.entries * g.h, np.ones(n))
        exact = _torsion_exact(g.nodes, beta)
        errs.append(np.abs(u - exact).max() / exact.max())
    assert errs[1] <= 0.02
    assert errs[0] > errs[1] > errs[2]


def test_generator_scales_with_interval_length():
    # (-Delta)^(beta/2) on (0, L) is L^-beta times the operator on (0, 1)
    beta, n = 0.8, 64
    a1 = discretize.assemble_generator(discretize.build_grid(0.0, 1.0, n), beta).entries
    a3 = discretize.assemble_generator(discretize.build_grid(0.0, 3.0, n), beta).entries
    # kernels carry an extra 1/h from the weight convention
    np.testing.assert_allclose(a3 * 3.0 ** (1 + beta), a1, rtol=1e-12)
