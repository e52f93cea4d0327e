"""The free-streaming resolvent ``S = (xi1 d/dx + nu(xi))**-1``.

``S`` acts diagonally in velocity, as a convolution in ``x`` with

    S_xi(theta) = |xi1|**-1 exp(-nu(xi) |theta| / |xi1|)   if theta * xi1 > 0
                = 0                                         otherwise.

Downwind support is fixed by the sign of ``xi1``; the prefactor uses
``|xi1|`` so the kernel stays a nonnegative Green function for both signs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels
from .optimize import golden_max
from .quadrature import QuadResult, adaptive_quad
from .velocity import (
    DEFAULT_NU,
    CollisionFrequencyModel,
    DomainError,
    Velocity,
    VelocityGrid,
    as_velocity,
    nu,
)

# Decay lengths kept when truncating the one-sided streaming integral;
# the dropped tail is exp(-40) ~ 4e-18 of the kernel mass.
DECAY_LENGTHS = 40.0


# -- spatial profiles ---------------------------------------------------------

@dataclass(frozen=True)
class TwoSidedExponential:
    """``amplitude * exp(-|x| / rate)``."""

    rate: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    def __call__(self, x):
        return self.amplitude * np.exp(-np.abs(x) / self.rate)

    def derivative(self, x):
        # symmetric derivative at the kink x = 0
        return -np.sign(x) / self.rate * self(x)

    @property
    def kinks(self) -> tuple[float, ...]:
        return (0.0,)


@dataclass(frozen=True)
class Gaussian:
    """``amplitude * exp(-(x / width)**2)``."""

    amplitude: float = 1.0
    width: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")

    def __call__(self, x):
        return self.amplitude * np.exp(-((np.asarray(x) / self.width) ** 2))

    def derivative(self, x):
        x = np.asarray(x)
        return -2.0 * x / self.width**2 * self(x)

    @property
    def kinks(self) -> tuple[float, ...]:
        return ()


class Sampled:
    """Profile given by samples on a strictly increasing grid.

    Interpolated by a not-a-knot cubic spline inside the grid and taken as
    zero outside it.
    """

    def __init__(self, x: Sequence[float], values: Sequence[float]):
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != values.shape or x.size < 4:
            raise ValueError("Sampled needs matching 1-D arrays with at least 4 points")
        if np.any(np.diff(x) <= 0):
            raise ValueError("sample grid must be strictly increasing")
        self.x = x
        self.values = values
        self._spline = CubicSpline(x, values)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.x[0]) & (x <= self.x[-1])
        return np.where(inside, self._spline(np.clip(x, self.x[0], self.x[-1])), 0.0)

    def derivative(self, x):
        raise TypeError("sampled profiles have no symbolic derivative")

    @property
    def kinks(self) -> tuple[float, ...]:
        return (float(self.x[0]), float(self.x[-1]))


SpatialProfile = Union[TwoSidedExponential, Gaussian, Sampled]


@dataclass(frozen=True)
class SeparableField:
    """``h(x, xi) = profile(x) * velocity_factor(xi)``.

    ``velocity_factor`` maps an ``(..., 3)`` array to values; ``None`` means 1.
    """

    profile: SpatialProfile
    velocity_factor: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def factor(self, xi: Velocity) -> float:
        if self.velocity_factor is None:
            return 1.0
        return float(self.velocity_factor(xi.as_array()))

    def __call__(self, x, xi) -> float | np.ndarray:
        xi = as_velocity(xi)
        return self.profile(x) * self.factor(xi)


# -- kernel and its L1 norm ---------------------------------------------------

def kernel_S(xi, theta, model: CollisionFrequencyModel = DEFAULT_NU):
    """Streaming kernel ``S_xi(theta)``; vectorized in ``theta``."""
    xi = as_velocity(xi).require_transport()
    a = abs(xi.xi1)
    th = np.asarray(theta, dtype=float)
    on = th * xi.xi1 > 0
    val = np.where(on, np.exp(-nu(xi, model) * np.abs(th) / a) / a, 0.0)
    return float(val) if val.ndim == 0 else val


def l1_norm_S(xi, model: CollisionFrequencyModel = DEFAULT_NU) -> float:
    """``||S_xi||_{L1(R)} = 1 / nu(xi)``, independent of ``xi1``."""
    xi = as_velocity(xi).require_transport()
    return 1.0 / nu(xi, model)


def l1_norm_S_quadrature(xi, model: CollisionFrequencyModel = DEFAULT_NU, tol: float = 1e-12) -> QuadResult:
    """Adaptive-quadrature oracle for :func:`l1_norm_S` on the support side."""
    xi = as_velocity(xi).require_transport()
    span = DECAY_LENGTHS * abs(xi.xi1) / nu(xi, model)
    lo, hi = (0.0, span) if xi.xi1 > 0 else (-span, 0.0)
    return adaptive_quad(lambda th: kernel_S(xi, th, model), lo, hi, tol=tol)


def l1_identity_errors(grid: VelocityGrid, model: CollisionFrequencyModel = DEFAULT_NU, tol: float = 1e-12):
    """Quadrature value minus ``1/nu`` at every grid node.

    Returns ``(deviation, error_estimate)`` arrays in node order.
    """
    pts = grid.nodes
    nuv = nu(pts, model)
    vals, errs = _kernels.l1_quad(np.abs(pts[:, 0]), nuv, tol, DECAY_LENGTHS)
    return vals - 1.0 / nuv, errs


# -- applying S ----------------------------------------------------------------

def apply_S_exponential(
    profile: TwoSidedExponential,
    xi,
    x: float,
    model: CollisionFrequencyModel = DEFAULT_NU,
    constant: bool = False,
) -> float:
    """Closed-form ``(S g)(x, xi)`` for ``g(y) = A exp(-|y| / rate)``.

    With ``kappa = nu / |xi1|``, ``beta = 1 / rate`` and ``z = x sign(xi1)``
    (the reflection maps ``xi1 < 0`` onto ``xi1 > 0``)::

        z <= 0:  A e^{beta z} / (|xi1| (kappa + beta))
        z > 0:   A/|xi1| [ e^{-kappa z} (1 - e^{-(beta-kappa) z}) / (beta - kappa)
                           + e^{-kappa z} / (kappa + beta) ]

    which at ``x = 0`` reduces to ``A rate / (rate nu + |xi1|)``.  With
    ``constant=True`` the profile is the constant ``A`` (the rate -> inf
    limit) and the result is ``A / nu`` for every ``x``.
    """
    xi = as_velocity(xi).require_transport()
    A = profile.amplitude
    nuv = nu(xi, model)
    if constant:
        return A / nuv
    a = abs(xi.xi1)
    kappa = nuv / a
    beta = 1.0 / profile.rate
    z = x if xi.xi1 > 0 else -x
    if z <= 0:
        return A * math.exp(beta * z) / (a * (kappa + beta))
    d = beta - kappa
    ramp = z if d == 0.0 else -math.expm1(-d * z) / d
    return A / a * math.exp(-kappa * z) * (ramp + 1.0 / (kappa + beta))


def apply_S(
    f: Callable[[np.ndarray], np.ndarray],
    xi,
    x: float,
    model: CollisionFrequencyModel = DEFAULT_NU,
    tol: float = 1e-10,
    kinks: Sequence[float] = (),
) -> float:
    """``(S f)(x, xi)`` by adaptive quadrature for a bounded profile ``f``.

    The integral runs over the downwind displacement ``tau = |x - y|`` on
    ``[0, 40 |xi1| / nu]``, so the support edge is an endpoint and the
    integrand is smooth apart from the profile's own ``kinks`` (given in
    ``y``), which become breakpoints.  Raises ``QuadratureError`` carrying
    the achieved estimate when refinement stalls.
    """
    xi = as_velocity(xi).require_transport()
    a = abs(xi.xi1)
    sgn = 1.0 if xi.xi1 > 0 else -1.0
    rate = nu(xi, model) / a
    span = DECAY_LENGTHS / rate

    def integrand(tau):
        return np.exp(-rate * tau) / a * f(x - sgn * tau)

    breaks = [sgn * (x - k) for k in kinks]
    return adaptive_quad(integrand, 0.0, span, tol=tol, breakpoints=breaks).value


def apply_S_sampled(
    profile: Sampled,
    xi,
    x: float,
    model: CollisionFrequencyModel = DEFAULT_NU,
    tol: float = 1e-10,
) -> float:
    """``(S g)(x, xi)`` for a sampled profile, to absolute quadrature error ``tol``.

    The profile must have decayed below ``tol`` at both grid ends, since it
    is taken as zero beyond them.
    """
    if max(abs(profile.values[0]), abs(profile.values[-1])) > tol:
        raise ValueError("sampled profile has not decayed below tol at its grid ends")
    return apply_S(profile, xi, x, model, tol=tol, kinks=profile.kinks)


def transport_apply(field: SeparableField, xi, x, model: CollisionFrequencyModel = DEFAULT_NU):
    """``(xi1 d/dx + nu(xi)) h`` at ``(x, xi)`` for a closed-form profile."""
    if isinstance(field.profile, Sampled):
        raise TypeError("transport_apply needs a closed-form profile; sampled profiles are rejected")
    xi = as_velocity(xi)
    c = field.factor(xi)
    return (xi.xi1 * field.profile.derivative(x) + nu(xi, model) * field.profile(x)) * c


def inverse_pair_residual(
    field: SeparableField,
    xi,
    x: float,
    model: CollisionFrequencyModel = DEFAULT_NU,
    tol: float = 1e-10,
) -> float:
    """``S((xi1 d/dx + nu) h)(x, xi) - h(x, xi)``."""
    xi = as_velocity(xi).require_transport()
    g = lambda y: transport_apply(field, xi, y, model)
    kinks = getattr(field.profile, "kinks", ())
    return apply_S(g, xi, x, model, tol=tol, kinks=kinks) - float(field(x, xi))


# -- the operator-norm profile sigma(theta) -----------------------------------

def _weighted_kernel(t: float, u: float, theta: float, nu0: float) -> float:
    """``(1 + |xi|) S_xi(theta)`` at ``xi = (t, u, 0)``, ``t > 0``."""
    s2 = t * t + u * u
    return (1.0 + math.sqrt(s2)) / t * math.exp(-nu0 * math.sqrt(1.0 + s2) * theta / t)


@dataclass(frozen=True)
class SigmaEstimate:
    theta: float
    value: float
    grid_max: float
    refined: float
    tail_limit: float
    argmax: tuple[float, float]


def sigma_estimate(
    theta: float,
    grid: VelocityGrid,
    model: CollisionFrequencyModel = DEFAULT_NU,
    restrict_axis: bool = False,
) -> SigmaEstimate:
    """``sigma(theta) = sup_xi (1 + |xi|) S_xi(theta)``, as a certified lower bound.

    The weight and ``nu`` depend on ``|xi|`` and the kernel on ``|xi1|``, so
    the sup reduces to ``xi = (t, u, 0)`` with ``t, u >= 0``.  Steps: grid
    max over the nodes on the support side, then golden-section refinement
    in ``log t`` (outer) and ``u`` (inner, where the objective is unimodal),
    then comparison with the tail limit ``exp(-nu0 theta)`` reached along
    ``t -> inf``.  ``restrict_axis=True`` pins ``u = 0``.
    """
    if not theta > 0:
        raise DomainError("sigma is defined for theta > 0")
    nu0 = model.nu0
    nodes = grid.nodes
    if restrict_axis:
        nodes = np.unique(np.column_stack([np.abs(nodes[:, 0]), np.zeros((len(nodes), 2))]), axis=0)
    vals = _kernels.sigma_values(theta, nodes, nu0)
    i = int(np.argmax(vals))
    grid_max = float(vals[i])
    t0 = abs(float(nodes[i, 0]))
    u0 = math.hypot(float(nodes[i, 1]), float(nodes[i, 2]))

    ts = np.unique(np.abs(nodes[:, 0]))
    j = int(np.searchsorted(ts, t0))
    t_lo = ts[max(j - 2, 0)] if j > 0 else t0 / 4.0
    t_hi = ts[min(j + 2, ts.size - 1)] if j < ts.size - 1 else t0 * 4.0
    u_hi = 4.0 * max(grid.R_max, u0)

    def best_over_u(t: float) -> tuple[float, float]:
        if restrict_axis:
            return 0.0, _weighted_kernel(t, 0.0, theta, nu0)
        return golden_max(lambda u: _weighted_kernel(t, u, theta, nu0), 0.0, u_hi, xtol=1e-12)

    log_t, refined = golden_max(lambda lt: best_over_u(math.exp(lt))[1], math.log(t_lo), math.log(t_hi), xtol=1e-12)
    t_star = math.exp(log_t)
    u_star = best_over_u(t_star)[0]
    tail = math.exp(-nu0 * theta)
    value = max(grid_max, refined, tail)
    if value == grid_max and grid_max >= refined:
        t_star, u_star = t0, u0
    return SigmaEstimate(theta, value, grid_max, refined, tail, (t_star, u_star))


def sigma_profile(
    theta: float,
    grid: VelocityGrid,
    model: CollisionFrequencyModel = DEFAULT_NU,
    restrict_axis: bool = False,
) -> float:
    """Operator norm ``L^inf_{2,xi} -> L^inf_{3,xi}`` of the displacement-``theta`` kernel."""
    return sigma_estimate(theta, grid, model, restrict_axis).value


def sigma_integral_divergence(
    eps_list: Sequence[float],
    grid: VelocityGrid,
    model: CollisionFrequencyModel = DEFAULT_NU,
    tol: float = 1e-7,
    restrict_axis: bool = False,
) -> list[tuple[float, float]]:
    """``(eps, int_eps^1 sigma)`` for each ``eps`` in the given list.

    The integral is taken in ``s = log theta``, where the ``1/theta``
    singularity becomes a bounded integrand, with every ``eps`` a breakpoint.
    """
    eps = [float(e) for e in eps_list]
    if any(not 0 < e <= 1 for e in eps):
        raise ValueError("eps values must lie in (0, 1]")
    if not eps:
        return []
    lo = min(eps)
    if lo == 1.0:
        return [(e, 0.0) for e in eps]

    def integrand(s):
        s = np.atleast_1d(s)
        return np.array([sigma_profile(math.exp(v), grid, model, restrict_axis) * math.exp(v) for v in s])

    cuts = sorted({math.log(e) for e in eps} | {0.0})
    pieces = {}
    for a, b in zip(cuts[:-1], cuts[1:]):
        pieces[a] = adaptive_quad(integrand, a, b, tol=tol * (b - a) / -cuts[0]).value
    out = []
    for e in eps:
        le = math.log(e)
        out.append((e, float(sum(v for a, v in sorted(pieces.items()) if a >= le))))
    return out


def bounded_case_constant(grid: VelocityGrid, model: CollisionFrequencyModel = DEFAULT_NU) -> float:
    """``sup_xi (1 + |xi|) / nu(xi)``: the bound on ``S`` from
    ``L^inf(L^inf_{2,xi})`` to ``L^inf(L^inf_{3,xi})``.

    Follows from ``||S_xi||_{L1} = 1/nu``.  Grid max over node radii, then a
    golden-section pass on the radius between the neighbouring radii.
    """
    radii = np.unique(grid.radii())
    ratio = lambda s: (1.0 + s) / (model.nu0 * math.sqrt(1.0 + s * s))
    vals = (1.0 + radii) / (model.nu0 * np.sqrt(1.0 + radii**2))
    i = int(np.argmax(vals))
    lo = radii[max(i - 1, 0)]
    hi = radii[min(i + 1, radii.size - 1)]
    _, refined = golden_max(ratio, float(lo), float(hi), xtol=1e-12)
    return max(float(vals[i]), refined)
