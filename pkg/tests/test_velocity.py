import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinres.velocity import (
    SQRT2,
    CollisionFrequencyModel,
    DomainError,
    Velocity,
    VelocityGrid,
    bracket,
    nu,
    triangle_ratios,
    weight,
    weight_triangle_check,
    weighted_sup_norm,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
vel = st.tuples(finite, finite, finite)


def test_velocity_validation():
    with pytest.raises(ValueError):
        Velocity(float("nan"))
    with pytest.raises(DomainError):
        Velocity(0.0, 1.0, 0.0).require_transport()


@pytest.mark.parametrize(
    "xi, r, expected",
    [((0, 0, 0), 3, 1.0), ((1, 0, 0), 2, 4.0), ((3, 4, 0), 3, 216.0)],
)
def test_weight_examples(xi, r, expected):
    assert weight(Velocity(*xi), r) == pytest.approx(expected, rel=1e-15)


def test_weight_rejects_negative_order():
    with pytest.raises(ValueError):
        weight(Velocity(1.0), -1)


def test_nu_examples():
    assert nu(Velocity(0, 0, 0)) == 1.0
    assert nu(Velocity(1, 0, 0)) == pytest.approx(1.4142136, abs=1e-7)
    a = 0.37
    assert nu(Velocity(a, 1, 0)) == pytest.approx(math.sqrt(2 + a * a), rel=1e-15)
    assert nu(Velocity(1, 0, 0), CollisionFrequencyModel(3.0)) == pytest.approx(3 * SQRT2)


@given(vel)
def test_weight_zero_order_is_one(xi):
    assert weight(np.array(xi), 0) == 1.0


@given(vel, st.floats(0, 5))
def test_weight_radial(xi, r):
    x = np.array(xi)
    rot = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]]) @ x
    assert weight(rot, r) == pytest.approx(weight(x, r), rel=1e-12)


@given(vel, st.floats(0.1, 10))
def test_nu_bracketing(xi, nu0):
    m = CollisionFrequencyModel(nu0)
    x = np.array(xi)
    n = nu(x, m)
    assert n / nu0 >= 1.0
    ratio = n / (nu0 * (1 + np.linalg.norm(x)))
    assert 1 / SQRT2 - 1e-12 <= ratio <= 1 + 1e-12
    assert n / (nu0 * bracket(x)) == pytest.approx(1.0, rel=1e-15)


def test_sup_norm_examples():
    grid = VelocityGrid.product()
    pts = np.vstack([grid.nodes, [[1.0, 0, 0]]])
    assert weighted_sup_norm(pts, 0, values=np.ones(len(pts))) == 1.0
    # (1+t)^2/(1+t^2) is maximal (= 2) at t = 1
    assert weighted_sup_norm(pts, 2, values=bracket(pts) ** -2) == pytest.approx(2.0, rel=1e-15)
    for r in (0.5, 2, 3):
        assert weighted_sup_norm(pts, r, values=weight(pts, r) ** -1) == pytest.approx(1.0, rel=1e-13)


def test_sup_norm_pairs_and_empty():
    assert weighted_sup_norm([(Velocity(1, 0, 0), -0.5)], 1) == 1.0
    with pytest.raises(ValueError):
        weighted_sup_norm([], 1)


@given(st.lists(st.tuples(vel, st.floats(-5, 5)), min_size=1, max_size=8), st.tuples(vel, st.floats(-5, 5)))
def test_sup_norm_monotone(samples, extra):
    base = weighted_sup_norm(samples, 1.5)
    assert weighted_sup_norm(samples + [extra], 1.5) >= base


def test_product_grid_invariants():
    g = VelocityGrid.product()
    assert not np.any(g.nodes[:, 0] == 0)
    assert g.nodes[:, 0].min() < 0 < g.nodes[:, 0].max()
    assert np.abs(g.nodes[:, 0]).min() == pytest.approx(1e-6)
    assert np.abs(g.nodes).max() == pytest.approx(50.0)
    g1 = VelocityGrid.product(level=1)
    assert len(g1) > 4 * len(g)


def test_grid_rejects_bad_nodes():
    with pytest.raises(ValueError):
        VelocityGrid(np.array([[0.0, 1, 0], [1.0, 0, 0]]), R_max=1)
    with pytest.raises(ValueError):
        VelocityGrid(np.array([[1.0, 1, 0], [2.0, 0, 0]]), R_max=1)


def test_triangle_trivial_cases():
    xi = np.array([[3.0, -1, 2], [0.1, 0, 0]])
    np.testing.assert_allclose(triangle_ratios(xi, np.zeros_like(xi)), 1.0, rtol=1e-15)
    np.testing.assert_allclose(triangle_ratios(xi, xi), 1.0, rtol=1e-15)


def test_triangle_sup_oracle():
    # brute force over aligned configurations |xi| = a + b (the worst case)
    a = np.linspace(0, 5, 1001)[:, None]
    b = np.linspace(0, 5, 1001)[None, :]
    brute = np.sqrt((1 + (a + b) ** 2) / ((1 + a * a) * (1 + b * b))).max()
    # grid step 0.005 around the optimum a = b = 2**-0.5
    assert brute == pytest.approx(2 / math.sqrt(3), rel=1e-5)
    ok, worst = weight_triangle_check(200_000, seed=3)
    assert ok and worst <= 2 / math.sqrt(3) + 1e-12
    assert worst > 1.15  # the aligned draws get close to the supremum


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_triangle_bound_any_seed(seed):
    ok, worst = weight_triangle_check(20_000, seed)
    assert ok and worst <= SQRT2 + 1e-12


def test_triangle_deterministic():
    assert weight_triangle_check(1000, 5) == weight_triangle_check(1000, 5)
