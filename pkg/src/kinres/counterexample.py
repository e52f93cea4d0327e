"""Blow-up machinery for the L^q -> L^inf resolvent bound.

The test family is ``g_alpha(x, xi) = <xi>**-2 alpha**(-1/q) exp(-|x|/alpha)``.
Its ``L^q(R, L^inf_{2,xi})`` norm does not depend on ``alpha``, while the
streaming resolvent evaluated at ``x = 0, xi_alpha = (alpha, 1, 0)`` grows
like ``alpha**(-1/q)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .collision import DEFAULT_KERNEL, GradKernelModel, apply_K
from .optimize import golden_max, loglog_slope
from .quadrature import adaptive_quad
from .transport import (
    Gaussian,
    SeparableField,
    TwoSidedExponential,
    apply_S,
    apply_S_exponential,
    transport_apply,
)
from .velocity import (
    DEFAULT_NU,
    SQRT2,
    CollisionFrequencyModel,
    DomainError,
    Velocity,
    as_points,
    as_velocity,
    bracket,
)

# limit of probe_value * alpha**(1/q) as alpha -> 0 (model nu = <xi>)
PROBE_LIMIT = 1.0 / (2.0 * (SQRT2 + 1.0))


@dataclass(frozen=True)
class TestFamilyParams:
    alpha: float
    q: float = 2.0

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.q >= 1:
            raise ValueError("q must be >= 1")


def g_alpha_eval(p: TestFamilyParams, x, xi):
    """``<xi>**-2 alpha**(-1/q) exp(-|x| / alpha)``; broadcasts over ``x`` and velocity arrays."""
    b = bracket(xi)
    return p.alpha ** (-1.0 / p.q) * np.exp(-np.abs(x) / p.alpha) / (b * b)


def g_alpha_profile(p: TestFamilyParams, xi) -> TwoSidedExponential:
    """The ``x``-profile of ``g_alpha`` at a fixed velocity."""
    b = bracket(xi)
    return TwoSidedExponential(rate=p.alpha, amplitude=p.alpha ** (-1.0 / p.q) / (b * b))


def g_alpha_lq_norm(p: TestFamilyParams, method: str = "closed", tol: float = 1e-14) -> float:
    """``||g_alpha||_{L^q(R, L^inf_{2,xi})} = 2 (2/q)**(1/q)``.

    The velocity factor contributes ``sup (1+|xi|)**2 / <xi>**2 = 2`` (at
    ``|xi| = 1``); the ``x`` factor contributes ``(2/q)**(1/q)``, with
    ``alpha`` cancelling.  ``method="quadrature"`` recomputes both factors
    numerically (golden section in ``|xi|``, adaptive quadrature in ``x``).
    """
    if not math.isfinite(p.q):
        raise ValueError("q must be finite")
    if method == "closed":
        return 2.0 * (2.0 / p.q) ** (1.0 / p.q)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    _, vsup = golden_max(lambda t: (1.0 + t) ** 2 / (1.0 + t * t), 0.0, 10.0, xtol=1e-12)
    a = p.alpha
    integrand = lambda x: (a ** (-1.0 / p.q) * np.exp(-x / a)) ** p.q
    half = adaptive_quad(integrand, 0.0, 60.0 * a, tol=tol / a).value
    return vsup * (2.0 * half) ** (1.0 / p.q)


def probe_velocity(alpha: float) -> Velocity:
    return Velocity(alpha, 1.0, 0.0)


def probe_value(p: TestFamilyParams, model: CollisionFrequencyModel = DEFAULT_NU) -> float:
    """``(S g_alpha)(0, (alpha, 1, 0))`` in closed form.

    ``<xi_alpha>**2 = 2 + alpha**2`` and ``nu = nu0 <xi_alpha>``; the
    exponential convolution at ``x = 0`` gives
    ``alpha**(-1/q) / ((2 + alpha**2) (nu + 1))``.
    """
    b2 = 2.0 + p.alpha * p.alpha
    return p.alpha ** (-1.0 / p.q) / (b2 * (model.nu0 * math.sqrt(b2) + 1.0))


def probe_value_convolution(p: TestFamilyParams, model: CollisionFrequencyModel = DEFAULT_NU) -> float:
    """Same probe through :func:`apply_S_exponential` (cross-check path)."""
    xi = probe_velocity(p.alpha)
    return apply_S_exponential(g_alpha_profile(p, xi), xi, 0.0, model)


def weighted_probe(p: TestFamilyParams, model: CollisionFrequencyModel = DEFAULT_NU) -> float:
    """``(1 + |xi_alpha|)**3 probe``: a lower bound on ``||S g_alpha(0, .)||_{L^inf_{3,xi}}``."""
    return (1.0 + math.sqrt(1.0 + p.alpha * p.alpha)) ** 3 * probe_value(p, model)


@dataclass
class SweepReport:
    q: float
    alphas: np.ndarray
    probe_values: np.ndarray
    weighted_probe_values: np.ndarray
    lq_norms: np.ndarray
    fitted_slope: float
    slope_target: float
    slope_tol: float
    lq_spread: float
    passed: bool
    reasons: list[str] = field(default_factory=list)

    def rows(self):
        for a, p, w, n in zip(self.alphas, self.probe_values, self.weighted_probe_values, self.lq_norms):
            yield {
                "alpha": a,
                "probe": p,
                "weighted_probe": w,
                "lq_norm": n,
                "log_alpha": math.log(a),
                "log_weighted_probe": math.log(w),
            }

    def verdict(self) -> dict:
        return {
            "q": self.q,
            "fitted_slope": self.fitted_slope,
            "target": self.slope_target,
            "tolerance": self.slope_tol,
            "lq_norm_spread": self.lq_spread,
            "pass": self.passed,
            "reasons": list(self.reasons),
        }


def alpha_sweep(
    q: float,
    alpha_min: float = 2.0**-14,
    alpha_max: float = 2.0**-4,
    n_points: int = 12,
    slope_tol: float = 0.02,
    model: CollisionFrequencyModel = DEFAULT_NU,
) -> SweepReport:
    """Geometric sweep of ``alpha`` from ``alpha_max`` down to ``alpha_min``."""
    if not 0 < alpha_min < alpha_max:
        raise ValueError("need 0 < alpha_min < alpha_max")
    if n_points < 4:
        raise ValueError("degenerate fit: n_points must be >= 4")
    alphas = np.geomspace(alpha_max, alpha_min, int(n_points))
    params = [TestFamilyParams(float(a), q) for a in alphas]
    probes = np.array([probe_value(p, model) for p in params])
    wprobes = np.array([weighted_probe(p, model) for p in params])
    norms = np.array([g_alpha_lq_norm(p) for p in params])
    slope = loglog_slope(alphas, wprobes)
    target = -1.0 / q
    spread = float(norms.max() / norms.min() - 1.0)
    reasons = []
    if abs(slope - target) > slope_tol:
        reasons.append(f"slope {slope:.6f} differs from {target:.6f} by more than {slope_tol}")
    if spread > 1e-10:
        reasons.append(f"L^q norms vary with alpha (relative spread {spread:.3e})")
    return SweepReport(q, alphas, probes, wprobes, norms, slope, target, slope_tol, spread, not reasons, reasons)


# -- the [LY2] (102) gap ----------------------------------------------------

def ly2_gap_ratio(xi) -> float:
    """``(1 + |xi|) / |xi1|``, unbounded as ``xi1 -> 0``."""
    xi = as_velocity(xi)
    if xi.xi1 == 0:
        raise DomainError("gap ratio needs xi1 != 0")
    return (1.0 + xi.speed) / abs(xi.xi1)


def ly2_gap_sweep(xi1_list: Sequence[float]) -> tuple[list[tuple[float, float]], float]:
    """Ratio along ``xi = (xi1, 1, 0)`` and the log-log slope in ``xi1``."""
    rows = [(float(a), ly2_gap_ratio(Velocity(a, 1.0, 0.0))) for a in xi1_list]
    slope = loglog_slope([abs(a) for a, _ in rows], [r for _, r in rows])
    return rows, slope


# -- finite codimension -------------------------------------------------------

@dataclass(frozen=True)
class Functional:
    """``l(g) = sum coeff * g(x, xi)`` over finitely many nodes."""

    xs: np.ndarray
    velocities: np.ndarray
    coeffs: np.ndarray
    name: str = ""

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float).reshape(-1)
        vs = as_points(self.velocities).reshape(-1, 3)
        cs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if xs.size == 0 or not (xs.size == vs.shape[0] == cs.size):
            raise ValueError("functional needs matching, nonempty node arrays")
        if not np.all(np.isfinite(cs)):
            raise ValueError("functional coefficients must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "velocities", vs)
        object.__setattr__(self, "coeffs", cs)

    def __call__(self, g: Callable) -> float:
        return float(np.dot(self.coeffs, g(self.xs, self.velocities)))


def moment_functionals(n_nodes: int = 16, seed: int = 7) -> list[Functional]:
    """Five moment-type functionals: ``1, xi1, xi2, xi3, |xi|**2`` against a
    Gaussian weight on a seeded velocity node set at ``x = 0``, a finite
    stand-in for the five collision invariants."""
    rng = np.random.default_rng(seed)
    vs = rng.standard_normal((n_nodes, 3))
    w = np.exp(-np.sum(vs * vs, axis=1)) / n_nodes
    xs = np.zeros(n_nodes)
    moments = {
        "mass": np.ones(n_nodes),
        "momentum_1": vs[:, 0],
        "momentum_2": vs[:, 1],
        "momentum_3": vs[:, 2],
        "energy": np.sum(vs * vs, axis=1),
    }
    return [Functional(xs, vs, w * m, name) for name, m in moments.items()]


@dataclass
class CodimResult:
    alphas: np.ndarray
    coefficients: np.ndarray
    residuals: np.ndarray
    matrix: np.ndarray
    lead_index: int
    lq_norm: float
    weighted_probe: float


def _null_basis(M: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    """Orthonormal null-space basis (columns) from the SVD."""
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n)
    _, sv, vh = np.linalg.svd(M)
    rank = int(np.sum(sv > rcond * max(sv[0], np.finfo(float).tiny))) if sv.size else 0
    return vh[rank:].T


def combo_lq_norm(c, alphas, q: float, tol: float = 1e-13) -> float:
    """``||sum c_j g_{alpha_j}||_{L^q(R, L^inf_{2,xi})}`` (velocity factor 2)."""
    c = np.asarray(c, dtype=float)
    a = np.asarray(alphas, dtype=float)
    amp = c * a ** (-1.0 / q)
    scale = float(a.min())

    def integrand(y):
        x = scale * np.asarray(y)[:, None]
        return np.abs(np.sum(amp * np.exp(-x / a), axis=1)) ** q

    span = 60.0 * float(a.max()) / scale
    total = float(np.sum(np.abs(amp))) ** q
    res = adaptive_quad(integrand, 0.0, span, tol=tol * total, max_intervals=20000)
    return 2.0 * (2.0 * scale * res.value) ** (1.0 / q)


def combo_probe(c, alphas, q: float, at_alpha: float, model: CollisionFrequencyModel = DEFAULT_NU) -> float:
    """``(S sum c_j g_{alpha_j})(0, (at_alpha, 1, 0))``."""
    xi = probe_velocity(at_alpha)
    return float(sum(
        cj * apply_S_exponential(g_alpha_profile(TestFamilyParams(float(aj), q), xi), xi, 0.0, model)
        for cj, aj in zip(c, alphas)
    ))


def finite_codim_combination(
    functionals: Sequence[Functional],
    alphas: Sequence[float],
    q: float,
    model: CollisionFrequencyModel = DEFAULT_NU,
) -> CodimResult:
    """Unit vector ``c`` with ``l_i(sum c_j g_{alpha_j}) = 0`` for every functional.

    ``M_ij = l_i(g_{alpha_j})``.  Among null vectors the one with the
    largest component on the smallest ``alpha`` is chosen (the normalized
    projection of that coordinate vector onto the null space), signed so
    that component is positive; if it is orthogonal to the null space the
    next smallest ``alpha`` is tried.  The returned weighted probe is for
    the combination rescaled to unit ``L^q(L^inf_2)`` norm, at
    ``xi = (alpha_lead, 1, 0)``.
    """
    alphas = np.asarray(alphas, dtype=float)
    if alphas.ndim != 1 or alphas.size == 0 or np.any(alphas <= 0):
        raise ValueError("alphas must be a nonempty list of positive numbers")
    if alphas.size < len(functionals) + 1:
        raise ValueError("need at least one more alpha than functionals")
    M = np.array([[ell(lambda x, v: g_alpha_eval(TestFamilyParams(float(a), q), x, v)) for a in alphas]
                  for ell in functionals]).reshape(len(functionals), alphas.size)
    basis = _null_basis(M)
    if basis.shape[1] == 0:
        raise np.linalg.LinAlgError("null space is empty at working precision")
    c = None
    for j in np.argsort(alphas, kind="stable"):
        proj = basis @ basis[j]
        norm = float(np.linalg.norm(proj))
        if norm > 1e-8:
            c = proj / norm
            if c[j] < 0:
                c = -c
            lead = int(j)
            break
    if c is None:
        raise np.linalg.LinAlgError("null space orthogonal to every family member")
    residuals = np.abs(M @ c)
    lq = combo_lq_norm(c, alphas, q)
    w = (1.0 + math.sqrt(1.0 + alphas[lead] ** 2)) ** 3
    # the sup norm sees |S g|; the signed value may be negative
    probe = abs(combo_probe(c, alphas, q, float(alphas[lead]), model)) / lq
    return CodimResult(alphas, c, residuals, M, lead, lq, w * probe)


@dataclass
class CodimSweep:
    q: float
    lead_alphas: np.ndarray
    weighted_probes: np.ndarray
    max_residual: float
    fitted_slope: float
    slope_target: float
    slope_tol: float
    passed: bool


def codim_sweep(
    functionals: Sequence[Functional],
    q: float,
    lead_alphas: Sequence[float] | None = None,
    n_alphas: int = 6,
    ratio: float = 2.0,
    slope_tol: float = 0.05,
    residual_tol: float = 1e-10,
    model: CollisionFrequencyModel = DEFAULT_NU,
) -> CodimSweep:
    """Family of constructions with ``alphas = a, a*ratio, ...`` as ``a -> 0``;
    fits the slope of the normalized weighted probe against ``a``."""
    if lead_alphas is None:
        lead_alphas = 2.0 ** -np.arange(6, 15)
    lead_alphas = np.asarray(lead_alphas, dtype=float)
    probes, resid = [], 0.0
    for a in lead_alphas:
        res = finite_codim_combination(functionals, a * ratio ** np.arange(n_alphas), q, model)
        probes.append(res.weighted_probe)
        resid = max(resid, float(res.residuals.max(initial=0.0)))
    probes = np.array(probes)
    slope = loglog_slope(lead_alphas, probes)
    ok = abs(slope + 1.0 / q) <= slope_tol and resid <= residual_tol and bool(np.all(probes > 0))
    return CodimSweep(q, lead_alphas, probes, resid, slope, -1.0 / q, slope_tol, ok)


# -- manufactured solution ---------------------------------------------------

def default_test_set():
    """5 positions x (5 x 3 x 3) velocities, none with ``xi1 = 0``."""
    xs = np.array([-1.5, -0.5, 0.0, 0.7, 2.0])
    vs = [Velocity(a, b, c)
          for a in (-2.0, -0.3, 0.05, 0.8, 2.5)
          for b in (-1.0, 0.0, 1.2)
          for c in (-0.6, 0.0, 0.9)]
    return xs, vs


def gaussian_field() -> SeparableField:
    """``h = exp(-x**2) exp(-|xi|**2)``."""
    return SeparableField(Gaussian(1.0, 1.0), lambda p: np.exp(-np.sum(np.asarray(p) ** 2, axis=-1)))


def manufactured_solution_check(
    h: SeparableField | None = None,
    xs: Sequence[float] | None = None,
    velocities: Sequence[Velocity] | None = None,
    kernel: GradKernelModel = DEFAULT_KERNEL,
    model: CollisionFrequencyModel = DEFAULT_NU,
    tol: float = 1e-10,
) -> float:
    """Max over the test set of ``|S g + S(K h) - h|`` with
    ``g = (xi1 d/dx + nu) h - K h``.

    ``K`` acts on the velocity factor only, so ``(K h)(y, xi) =
    profile(y) (K factor)(xi)`` with one 3D quadrature per velocity.
    """
    if h is None:
        h = gaussian_field()
    if xs is None or velocities is None:
        dxs, dvs = default_test_set()
        xs = dxs if xs is None else xs
        velocities = dvs if velocities is None else velocities
    factor = h.velocity_factor or (lambda p: np.ones(np.shape(p)[:-1]))
    kinks = getattr(h.profile, "kinks", ())
    worst = 0.0
    for xi in velocities:
        xi = as_velocity(xi).require_transport()
        kf = apply_K(factor, xi, kernel, tol=tol) if kernel.C_amp != 0 else 0.0
        kh = lambda y: h.profile(y) * kf
        g = lambda y: transport_apply(h, xi, y, model) - kh(y)
        for x in xs:
            lhs = apply_S(g, xi, float(x), model, tol=tol, kinks=kinks)
            lhs += apply_S(kh, xi, float(x), model, tol=tol, kinks=kinks)
            worst = max(worst, abs(lhs - float(h(float(x), xi))))
    return worst


def q_infinity_control(p: TestFamilyParams, model: CollisionFrequencyModel = DEFAULT_NU) -> tuple[float, float]:
    """``(weighted probe, sqrt(2)/nu0 * ||g_alpha||_{L^inf(L^inf_2)})``; the first never exceeds the second."""
    sup_g = 2.0 * p.alpha ** (-1.0 / p.q)
    return weighted_probe(p, model), SQRT2 / model.nu0 * sup_g
