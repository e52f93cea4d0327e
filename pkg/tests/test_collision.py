import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from kinres.collision import (
    GradKernelModel,
    K_opnorm_estimate,
    K_opnorm_weighted,
    apply_K,
    k_eval,
    weighted_K_at,
    weighted_K_radial,
)
from kinres.velocity import VelocityGrid

TWO_PI = 2 * math.pi


def radial_oracle(s, r=3.0, C=1.0, c=1.0):
    """(1+s)^r (K (1+|.|)^-r)(s) for r = 3 via the shell identity
    int_{|w|=rho} f(|xi+w|) dS = 2 pi rho / s int_{|s-rho|}^{s+rho} f(v) v dv."""
    assert r == 3.0
    G = lambda v: -1 / (1 + v) + 0.5 / (1 + v) ** 2
    f = lambda rho: math.exp(-c * rho * rho) * (G(s + rho) - G(abs(s - rho)))
    val = integrate.quad(f, 0, s, epsabs=1e-14, epsrel=1e-13)[0] + integrate.quad(f, s, np.inf, epsabs=1e-14, epsrel=1e-13)[0]
    return (1 + s) ** 3 * TWO_PI * C / s * val


def test_k_eval_examples():
    assert k_eval([0, 0, 0], [1, 0, 0]) == pytest.approx(0.3678794, abs=1e-7)
    assert k_eval([2, 3, 1], [2, 3, 0]) == pytest.approx(math.exp(-1))
    assert k_eval([0, 0, 0], [1, 0, 0], GradKernelModel(2.0, 1.0)) == pytest.approx(2 * math.exp(-1))
    with pytest.raises(ValueError):
        k_eval([1, 1, 1], [1, 1, 1])


@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_k_symmetric(v):
    a, b = np.array(v[:3]), np.array(v[3:])
    if np.linalg.norm(a - b) > 1e-6:
        assert k_eval(a, b) == k_eval(b, a)


@pytest.mark.parametrize("xi", [[0, 0, 0], [0.3, -1.0, 2.0], [10.0, 0, 0]])
def test_apply_K_constant(xi):
    assert apply_K(1.0, xi) == pytest.approx(TWO_PI, abs=1e-10)
    assert apply_K(0.0, xi) == 0.0


@pytest.mark.parametrize("C, c", [(1.0, 1.0), (2.0, 0.5), (0.3, 4.0)])
def test_apply_K_mass_scaling(C, c):
    m = GradKernelModel(C, c)
    assert apply_K(1.0, [0.5, 0.5, 0.5], m) == pytest.approx(TWO_PI * C / c, rel=1e-12)


def test_apply_K_gaussian_at_origin():
    g = lambda p: np.exp(-np.sum(p * p, axis=-1))
    assert apply_K(g, [0, 0, 0]) == pytest.approx(math.pi, abs=1e-10)
    assert apply_K(lambda v: np.exp(-v * v), [0, 0, 0], radial=True) == pytest.approx(math.pi, abs=1e-10)


def test_apply_K_gaussian_off_origin_closed_form():
    # K e^{-|.|^2}(xi) = 2 pi / s int_0^inf e^{-rho^2} [H(s+rho) - H(|s-rho|)] drho,  H(v) = -e^{-v^2}/2
    s = 1.3
    H = lambda v: -0.5 * math.exp(-v * v)
    f = lambda rho: math.exp(-rho * rho) * (H(s + rho) - H(abs(s - rho)))
    oracle = TWO_PI / s * (integrate.quad(f, 0, s, epsabs=1e-14)[0] + integrate.quad(f, s, np.inf, epsabs=1e-14)[0])
    xi = np.array([0.5, -1.2, 0.0])
    xi *= s / np.linalg.norm(xi)
    assert apply_K(lambda p: np.exp(-np.sum(p * p, axis=-1)), xi) == pytest.approx(oracle, abs=1e-10)


def test_apply_K_linearity_and_positivity():
    f = lambda p: np.exp(-np.sum((p - 0.3) ** 2, axis=-1))
    g = lambda p: 1.0 / (1.0 + np.sum(p * p, axis=-1))
    xi = [0.4, 0.1, -0.7]
    lhs = apply_K(lambda p: 2.0 * f(p) - 3.0 * g(p), xi, tol=1e-9)
    assert lhs == pytest.approx(2.0 * apply_K(f, xi, tol=1e-9) - 3.0 * apply_K(g, xi, tol=1e-9), abs=1e-8)
    assert apply_K(f, xi) > 0 and apply_K(g, xi) > 0


@pytest.mark.parametrize("s", [0.2, 1.0, 2.3655, 7.0, 40.0])
def test_weighted_radial_vs_shell_oracle(s):
    assert float(weighted_K_radial(s, 3.0)[0]) == pytest.approx(radial_oracle(s), rel=1e-10)
    xi = np.array([0.6, 0.0, 0.8]) * s
    assert weighted_K_at(xi, 3.0) == pytest.approx(radial_oracle(s), rel=1e-9)


def test_opnorm_r0_is_total_mass():
    assert K_opnorm_weighted(0.0) == pytest.approx(TWO_PI, abs=1e-6)
    assert K_opnorm_weighted(0.0, GradKernelModel(3.0, 2.0)) == pytest.approx(TWO_PI * 3 / 2, abs=1e-6)


def test_opnorm_r3_matches_oracle_max():
    est = K_opnorm_estimate(3.0)
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(lambda s: -radial_oracle(s), bounds=(1.0, 5.0), method="bounded", options={"xatol": 1e-8})
    assert est.value == pytest.approx(-res.fun, rel=1e-9)
    assert est.value >= weighted_K_at([0.0, 0.0, 0.0], 3.0)


def test_opnorm_r3_stable_under_refinement():
    base = K_opnorm_weighted(3.0, grid=VelocityGrid.product(R_max=50))
    assert abs(K_opnorm_weighted(3.0, grid=VelocityGrid.product(R_max=100)) - base) < 1e-4
    assert abs(K_opnorm_weighted(3.0, grid=VelocityGrid.product(R_max=50, level=1)) - base) < 1e-4


def test_model_validation():
    with pytest.raises(ValueError):
        GradKernelModel(1.0, 0.0)
    with pytest.raises(ValueError):
        GradKernelModel(-1.0, 1.0)
