"""Model collision operator ``K`` with the Grad-bound kernel.

The kernel is taken equal to its bound,
``k(xi, xi_star) = C |xi - xi_star|**-1 exp(-c |xi - xi_star|**2)``.
Integrals are done in spherical coordinates centred at ``xi``: with
``xi_star = xi + rho * omega`` the Jacobian ``rho**2`` cancels the
singularity and leaves ``C rho exp(-c rho**2) f(xi + rho omega)``.

Angular rule: polar axis along ``xi``; ``mu = cos(angle)`` is written as
``mu = -1 + 2 t**2`` with Gauss-Legendre in ``t`` (this smooths the
square-root behaviour of ``|xi_star|`` near ``xi_star = 0``), and the
azimuth uses the periodic trapezoid rule.  The radial rule is
Gauss-Legendre on ``[0, |xi|]`` and ``[|xi|, R_cut]``, ``R_cut = 6/sqrt(c)``.
Errors are estimated by doubling every order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import _kernels
from .optimize import golden_max
from .quadrature import QuadratureError, gauss_legendre
from .velocity import VelocityGrid, as_points, check_weight_order, weight

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GradKernelModel:
    C_amp: float = 1.0
    c_decay: float = 1.0

    def __post_init__(self):
        if not self.C_amp >= 0 or not math.isfinite(self.C_amp):
            raise ValueError("C_amp must be finite and nonnegative")
        if not self.c_decay > 0 or not math.isfinite(self.c_decay):
            raise ValueError("c_decay must be positive and finite")

    @property
    def R_cut(self) -> float:
        # tail beyond the cut is below exp(-36) of the mass
        return 6.0 / math.sqrt(self.c_decay)

    def total_mass(self) -> float:
        """``int k(xi, .) = 2 pi C / c``."""
        return TWO_PI * self.C_amp / self.c_decay


DEFAULT_KERNEL = GradKernelModel()


def k_eval(xi, xi_star, model: GradKernelModel = DEFAULT_KERNEL):
    d = as_points(xi) - as_points(xi_star)
    r = np.sqrt(np.sum(d * d, axis=-1))
    if np.any(r == 0):
        raise ValueError("k(xi, xi_star) is singular at xi = xi_star")
    val = model.C_amp / r * np.exp(-model.c_decay * r * r)
    return float(val) if val.ndim == 0 else val


def _frame(xi: np.ndarray):
    s = float(np.linalg.norm(xi))
    e = xi / s if s > 0 else np.array([0.0, 0.0, 1.0])
    helper = np.array([1.0, 0.0, 0.0]) if abs(e[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(e, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e, e1)
    return s, e, e1, e2


def _angular_t(n_t: int):
    tx, tw = gauss_legendre(n_t, 0.0, 1.0)
    return -1.0 + 2.0 * tx * tx, 4.0 * tx * tw


def _radial_panels(s: float, R: float, n_rho: int):
    cut = min(s, R)
    xs, ws = [], []
    for lo, hi in ((0.0, cut), (cut, R)):
        if hi > lo:
            x, w = gauss_legendre(n_rho, lo, hi)
            xs.append(x)
            ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def _apply_K_rule(f, xi: np.ndarray, model: GradKernelModel, n_rho: int, n_t: int, n_phi: int, radial: bool):
    s, e, e1, e2 = _frame(xi)
    rho, wr = _radial_panels(s, model.R_cut, n_rho)
    mu, wmu = _angular_t(n_t)
    radial_w = model.C_amp * rho * np.exp(-model.c_decay * rho * rho) * wr
    if radial:
        v = np.sqrt(np.maximum(s * s + rho[:, None] ** 2 + 2.0 * s * rho[:, None] * mu[None, :], 0.0))
        ang = TWO_PI * np.sum(np.asarray(f(v), dtype=float) * wmu, axis=-1)
        return float(np.sum(radial_w * ang))
    phi = TWO_PI * np.arange(n_phi) / n_phi
    sin_mu = np.sqrt(np.maximum(1.0 - mu * mu, 0.0))
    # omega[t, phi, :]
    omega = (
        mu[:, None, None] * e
        + (sin_mu[:, None] * np.cos(phi)[None, :])[..., None] * e1
        + (sin_mu[:, None] * np.sin(phi)[None, :])[..., None] * e2
    )
    pts = xi + rho[:, None, None, None] * omega[None, ...]
    vals = np.asarray(f(pts), dtype=float)
    if vals.ndim == 0:
        vals = np.full(pts.shape[:-1], float(vals))
    ang = (TWO_PI / n_phi) * np.einsum("rtp,t->r", vals, wmu)
    return float(np.sum(radial_w * ang))


def apply_K_estimate(
    f: Union[Callable, float],
    xi,
    model: GradKernelModel = DEFAULT_KERNEL,
    tol: float = 1e-10,
    radial: bool = False,
    orders: tuple[int, int, int] = (24, 24, 16),
    max_doublings: int = 3,
) -> tuple[float, float]:
    """``(Kf)(xi)`` and its order-doubling error estimate.

    ``f`` maps an ``(..., 3)`` array of velocities to values, or with
    ``radial=True`` an array of speeds to values; a plain number means a
    constant function.
    """
    if not callable(f):
        const = float(f)
        f = lambda p: np.full(np.shape(p)[:-1] if not radial else np.shape(p), const)
    xi = as_points(xi).astype(float)
    n_rho, n_t, n_phi = orders
    prev = _apply_K_rule(f, xi, model, n_rho, n_t, n_phi, radial)
    err = math.inf
    for _ in range(max_doublings):
        n_rho, n_t, n_phi = 2 * n_rho, 2 * n_t, 2 * n_phi
        cur = _apply_K_rule(f, xi, model, n_rho, n_t, n_phi, radial)
        err = abs(cur - prev)
        prev = cur
        if err <= tol:
            return cur, err
    raise QuadratureError("apply_K did not converge under order doubling", prev, err)


def apply_K(f, xi, model: GradKernelModel = DEFAULT_KERNEL, tol: float = 1e-10, radial: bool = False) -> float:
    """``(Kf)(xi) = int k(xi, xi_star) f(xi_star) dxi_star`` to absolute error ``tol``."""
    return apply_K_estimate(f, xi, model, tol, radial)[0]


def weighted_K_radial(s, r: float, model: GradKernelModel = DEFAULT_KERNEL, n_rho: int = 48, n_t: int = 48):
    """``(1 + s)**r (K (1 + |.|)**-r)(xi)`` for ``|xi| = s``, vectorized in ``s``."""
    rx, rw = gauss_legendre(n_rho)
    tx, tw = gauss_legendre(n_t)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return _kernels.k_radial(s, r, model.C_amp, model.c_decay, model.R_cut, rx, rw, tx, tw)


@dataclass(frozen=True)
class OpNormEstimate:
    r: float
    value: float
    grid_max: float
    argmax_speed: float
    quad_error: float


def K_opnorm_estimate(
    r: float,
    model: GradKernelModel = DEFAULT_KERNEL,
    grid: VelocityGrid | None = None,
    tol: float = 1e-8,
    orders: tuple[int, int] = (32, 32),
) -> OpNormEstimate:
    """``|K|`` on ``L^inf_{r,xi}``: ``sup_xi (1+|xi|)**r (K (1+|.|)**-r)(xi)``.

    Exact for a positive kernel.  Both the weight and ``k`` are rotation
    invariant, so the integrand depends on ``|xi|`` only; it is evaluated at
    the grid's distinct speeds with the orders given and doubled, then
    refined by golden section between the speeds neighbouring the best one.
    """
    r = check_weight_order(r)
    if grid is None:
        grid = VelocityGrid.product()
    speeds = np.unique(grid.radii())
    n_rho, n_t = orders
    coarse = weighted_K_radial(speeds, r, model, n_rho, n_t)
    fine = weighted_K_radial(speeds, r, model, 2 * n_rho, 2 * n_t)
    qerr = float(np.max(np.abs(fine - coarse)))
    if qerr > tol:
        raise QuadratureError("weighted K integral not resolved at doubled order", float(np.max(fine)), qerr)
    i = int(np.argmax(fine))
    lo = speeds[max(i - 1, 0)]
    hi = speeds[min(i + 1, speeds.size - 1)]
    f1 = lambda s: float(weighted_K_radial(s, r, model, 2 * n_rho, 2 * n_t)[0])
    s_star, refined = golden_max(f1, float(lo), float(hi), xtol=1e-9)
    value = max(float(fine[i]), refined)
    arg = s_star if refined >= fine[i] else float(speeds[i])
    return OpNormEstimate(r, value, float(fine[i]), arg, qerr)


def K_opnorm_weighted(
    r: float,
    model: GradKernelModel = DEFAULT_KERNEL,
    grid: VelocityGrid | None = None,
    tol: float = 1e-8,
) -> float:
    return K_opnorm_estimate(r, model, grid, tol).value


def weighted_K_at(xi, r: float, model: GradKernelModel = DEFAULT_KERNEL, tol: float = 1e-10) -> float:
    """``(1+|xi|)**r (K (1+|.|)**-r)(xi)`` via :func:`apply_K` (lower bound on the norm)."""
    r = check_weight_order(r)
    return float(weight(xi, r)) * apply_K(lambda v: (1.0 + v) ** -r, xi, model, tol, radial=True)
