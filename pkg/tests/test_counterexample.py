import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kinres.collision import GradKernelModel
from kinres.counterexample import (
    PROBE_LIMIT,
    Functional,
    TestFamilyParams,
    alpha_sweep,
    codim_sweep,
    finite_codim_combination,
    g_alpha_eval,
    g_alpha_lq_norm,
    ly2_gap_ratio,
    ly2_gap_sweep,
    manufactured_solution_check,
    moment_functionals,
    probe_value,
    probe_value_convolution,
    q_infinity_control,
    weighted_probe,
)
from kinres.transport import SeparableField, Gaussian, apply_S
from kinres.velocity import DomainError, Velocity, VelocityGrid, weighted_sup_norm

SQRT2 = math.sqrt(2)
qs = st.sampled_from([1.0, 1.5, 2.0, 3.0, 4.0, 10.0])


def test_g_alpha_examples():
    assert g_alpha_eval(TestFamilyParams(1.0, 3.0), 0.0, Velocity(0, 0, 0)) == 1.0
    assert g_alpha_eval(TestFamilyParams(1.0, 2.0), 0.0, Velocity(0, math.sqrt(3), 0)) == pytest.approx(0.25)
    a, q = 0.01, 2.0
    assert g_alpha_eval(TestFamilyParams(a, q), a, Velocity(0, 0, 0)) == pytest.approx(a ** (-1 / q) / math.e)


@pytest.mark.parametrize("q, expected", [(1.0, 4.0), (2.0, 2.0)])
def test_lq_norm_values(q, expected):
    for a in (1.0, 1e-2, 1e-6):
        p = TestFamilyParams(a, q)
        assert g_alpha_lq_norm(p) == pytest.approx(expected, rel=1e-15)
        assert g_alpha_lq_norm(p, "quadrature") == pytest.approx(expected, rel=1e-12)


@given(qs)
def test_lq_norm_alpha_independent(q):
    vals = [g_alpha_lq_norm(TestFamilyParams(a, q)) for a in (1.0, 1e-2, 1e-6)]
    assert max(vals) - min(vals) <= 1e-12
    quad = [g_alpha_lq_norm(TestFamilyParams(a, q), "quadrature") for a in (1.0, 1e-2, 1e-6)]
    np.testing.assert_allclose(quad, vals[0], rtol=1e-11)


def test_probe_examples():
    p = TestFamilyParams(1e-4, 2.0)
    assert probe_value(p) == pytest.approx(100 / (2 * (SQRT2 + 1)), rel=1e-6)
    assert probe_value(p) == pytest.approx(20.7107, abs=1e-4)
    for k in (10, 20, 30):
        a = 2.0**-k
        assert probe_value(TestFamilyParams(a, 3.0)) * a ** (1 / 3) == pytest.approx(PROBE_LIMIT, rel=3 * a * a + 1e-14)
    assert PROBE_LIMIT == pytest.approx(0.2071068, abs=1e-7)


@given(st.floats(1e-6, 1.0), qs)
def test_probe_closed_form_vs_convolution(a, q):
    p = TestFamilyParams(a, q)
    assert probe_value(p) == pytest.approx(probe_value_convolution(p), rel=1e-13)


def test_probe_against_quadrature():
    for a in (0.3, 1e-3):
        p = TestFamilyParams(a, 2.0)
        xi = Velocity(a, 1, 0)
        g = lambda y: g_alpha_eval(p, y, xi)
        assert apply_S(g, xi, 0.0, tol=1e-12, kinks=(0.0,)) == pytest.approx(probe_value(p), rel=1e-10)


@given(st.floats(1e-6, 1.0), qs, qs)
def test_probe_q_ratio(a, q1, q2):
    r = probe_value(TestFamilyParams(a, q1)) / probe_value(TestFamilyParams(a, q2))
    assert r == pytest.approx(a ** (1 / q2 - 1 / q1), rel=1e-12)


@given(qs)
def test_probe_increases_as_alpha_decreases(q):
    vals = [probe_value(TestFamilyParams(a, q)) for a in np.geomspace(1.0, 1e-8, 30)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_weighted_probe_lower_bounds_grid_sup():
    grid = VelocityGrid.product()
    for a in (0.1, 1e-3):
        p = TestFamilyParams(a, 2.0)
        xa = np.array([[a, 1.0, 0.0]])
        nodes = np.vstack([grid.nodes, xa])
        vals = [probe_value_convolution_at(p, v) for v in nodes]
        assert weighted_sup_norm(nodes, 3, values=vals) >= weighted_probe(p) * (1 - 1e-14)


def probe_value_convolution_at(p, v):
    from kinres.counterexample import g_alpha_profile
    from kinres.transport import apply_S_exponential
    xi = Velocity(*v)
    return apply_S_exponential(g_alpha_profile(p, xi), xi, 0.0)


@pytest.mark.parametrize("q, target", [(1.0, -1.0), (2.0, -0.5), (4.0, -0.25)])
def test_alpha_sweep(q, target):
    rep = alpha_sweep(q)
    assert rep.passed, rep.reasons
    assert rep.fitted_slope == pytest.approx(target, abs=0.02)
    assert len(rep.alphas) == 12 and np.all(np.diff(rep.alphas) < 0)
    assert rep.lq_spread <= 1e-10


def test_slope_identity():
    r1, r2 = alpha_sweep(1.0), alpha_sweep(3.0)
    assert r1.fitted_slope - r2.fitted_slope == pytest.approx(1 / 3 - 1, abs=1e-6)


def test_sweep_rejects_degenerate():
    with pytest.raises(ValueError):
        alpha_sweep(2.0, n_points=1)
    with pytest.raises(ValueError):
        alpha_sweep(2.0, alpha_min=1.0, alpha_max=0.5)


@given(st.floats(1e-6, 1.0), qs)
def test_q_infinity_control(a, q):
    lhs, rhs = q_infinity_control(TestFamilyParams(a, q))
    assert lhs <= rhs


def test_gap_examples():
    assert ly2_gap_ratio(Velocity(1, 0, 0)) == 2.0
    assert ly2_gap_ratio(Velocity(1e-6, 1, 0)) == pytest.approx((1 + math.sqrt(1 + 1e-12)) / 1e-6, rel=1e-15)
    assert ly2_gap_ratio(Velocity(1e-6, 1, 0)) == pytest.approx(2e6, rel=1e-6)
    with pytest.raises(DomainError):
        ly2_gap_ratio(Velocity(0, 1, 0))
    rows, slope = ly2_gap_sweep(np.logspace(-1, -6, 11))
    assert slope == pytest.approx(-1, abs=1e-3)


def test_codim_no_functionals():
    res = finite_codim_combination([], [0.01], 2.0)
    np.testing.assert_array_equal(res.coefficients, [1.0])
    # reduces to the single-member probe
    assert res.weighted_probe == pytest.approx(weighted_probe(TestFamilyParams(0.01, 2.0)) / g_alpha_lq_norm(TestFamilyParams(0.01, 2.0)), rel=1e-10)


def test_codim_single_functional_hand_formula():
    xi0 = Velocity(0.4, -0.2, 1.0)
    ell = Functional([0.05], [xi0.as_array()], [1.0])
    alphas = [0.1, 0.02]
    res = finite_codim_combination([ell], alphas, 2.0)
    l1, l2 = (float(g_alpha_eval(TestFamilyParams(a, 2.0), 0.05, xi0)) for a in alphas)
    hand = np.array([l2, -l1]) / math.hypot(l1, l2)
    assert abs(abs(np.dot(res.coefficients, hand)) - 1.0) <= 1e-12
    assert res.residuals.max() <= 1e-12


def test_codim_requires_enough_alphas():
    with pytest.raises(ValueError):
        finite_codim_combination(moment_functionals(), [0.1] * 5, 2.0)


def test_codim_moments_residuals():
    fs = moment_functionals()
    res = finite_codim_combination(fs, 1e-3 * 2.0 ** np.arange(6), 2.0)
    assert res.residuals.max() <= 1e-10
    assert np.linalg.norm(res.coefficients) == pytest.approx(1.0)
    assert res.coefficients[res.lead_index] > 0


@pytest.mark.parametrize("q", [1.0, 2.0, 4.0])
def test_codim_divergence(q):
    sw = codim_sweep(moment_functionals(), q)
    assert sw.passed
    assert sw.fitted_slope == pytest.approx(-1 / q, abs=0.05)


def test_codim_with_spread_positions():
    # functionals away from x = 0 give a genuinely rank-3 constraint matrix
    rng = np.random.default_rng(1)
    fs = [Functional(rng.uniform(-0.05, 0.05, 8), rng.standard_normal((8, 3)), rng.standard_normal(8)) for _ in range(3)]
    res = finite_codim_combination(fs, 0.02 * 2.0 ** np.arange(4), 2.0)
    assert np.linalg.matrix_rank(res.matrix) == 3
    assert res.residuals.max() <= 1e-10
    assert res.weighted_probe > 0


def test_manufactured_trivial_and_no_collisions():
    zero = SeparableField(Gaussian(0.0, 1.0))
    assert manufactured_solution_check(zero) == 0.0
    assert manufactured_solution_check(kernel=GradKernelModel(0.0, 1.0)) <= 1e-8


def test_manufactured_full_pipeline():
    assert manufactured_solution_check() <= 1e-6
