"""Velocity-space primitives: weights, collision frequency, grids, sup norms.

Two weights coexist and are never interchanged:

* the norm weight ``(1 + |xi|)**r`` defining ``L^inf_{r,xi}``;
* the Japanese bracket ``<xi> = (1 + |xi|**2)**0.5``, which sets the
  collision frequency model and the velocity profile of the test family.

Functions taking a velocity accept either a :class:`Velocity` or an array
whose last axis has length 3; array inputs broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Velocity:
    """A point of R^3; ``xi1`` is the transport direction."""

    xi1: float
    xi2: float = 0.0
    xi3: float = 0.0

    def __post_init__(self):
        for name in ("xi1", "xi2", "xi3"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"velocity component {name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        return np.array([self.xi1, self.xi2, self.xi3])

    @property
    def speed(self) -> float:
        return math.sqrt(self.xi1 * self.xi1 + self.xi2 * self.xi2 + self.xi3 * self.xi3)

    def require_transport(self) -> "Velocity":
        """Return self, or raise if ``xi1 == 0`` (the streaming kernel is undefined there)."""
        if self.xi1 == 0.0:
            raise DomainError("xi1 = 0: the free-streaming kernel is undefined")
        return self


class DomainError(ValueError):
    """Input outside the domain of a kernel or operator."""


@dataclass(frozen=True)
class CollisionFrequencyModel:
    """``nu(xi) = nu0 * <xi>``: the exact model behind ``nu ~ <xi>``."""

    nu0: float = 1.0

    def __post_init__(self):
        if not (self.nu0 > 0 and math.isfinite(self.nu0)):
            raise ValueError("nu0 must be a positive finite number")

    def __call__(self, xi) -> float | np.ndarray:
        return nu(xi, self)


DEFAULT_NU = CollisionFrequencyModel()


def as_points(xi) -> np.ndarray:
    """Coerce a Velocity, a 3-sequence or an ``(..., 3)`` array to float array."""
    if isinstance(xi, Velocity):
        return xi.as_array()
    pts = np.asarray(xi, dtype=float)
    if pts.shape[-1:] != (3,):
        raise ValueError(f"velocity arrays need a trailing axis of length 3, got shape {pts.shape}")
    return pts


def as_velocity(xi) -> Velocity:
    if isinstance(xi, Velocity):
        return xi
    a, b, c = (float(v) for v in np.asarray(xi, dtype=float).reshape(3))
    return Velocity(a, b, c)


def speed(xi) -> float | np.ndarray:
    pts = as_points(xi)
    s = np.sqrt(np.sum(pts * pts, axis=-1))
    return float(s) if s.ndim == 0 else s


def check_weight_order(r: float) -> float:
    r = float(r)
    if not (r >= 0 and math.isfinite(r)):
        raise ValueError(f"weight order must be a finite r >= 0, got {r!r}")
    return r


def weight(xi, r: float) -> float | np.ndarray:
    """Norm weight ``(1 + |xi|)**r``."""
    r = check_weight_order(r)
    return (1.0 + speed(xi)) ** r


def bracket(xi) -> float | np.ndarray:
    """Japanese bracket ``(1 + |xi|**2)**0.5``."""
    pts = as_points(xi)
    b = np.sqrt(1.0 + np.sum(pts * pts, axis=-1))
    return float(b) if b.ndim == 0 else b


def nu(xi, model: CollisionFrequencyModel = DEFAULT_NU) -> float | np.ndarray:
    """Collision frequency ``nu0 * <xi>``."""
    return model.nu0 * bracket(xi)


def weighted_sup_norm(samples, r: float, values=None) -> float:
    """``max (1 + |xi|)**r |h(xi)|`` over the given samples.

    Either pass ``samples`` as an iterable of ``(Velocity, value)`` pairs, or
    pass an ``(N, 3)`` array of nodes with ``values`` separately.  This is a
    lower bound for the true supremum over R^3.
    """
    r = check_weight_order(r)
    if values is None:
        pairs = list(samples)
        if not pairs:
            raise ValueError("weighted_sup_norm needs at least one sample")
        pts = np.array([as_points(p) for p, _ in pairs], dtype=float)
        vals = np.array([v for _, v in pairs], dtype=float)
    else:
        pts = as_points(samples).reshape(-1, 3)
        vals = np.asarray(values, dtype=float).reshape(-1)
        if pts.shape[0] != vals.shape[0]:
            raise ValueError("nodes and values differ in length")
        if vals.size == 0:
            raise ValueError("weighted_sup_norm needs at least one sample")
    return float(np.max(weight(pts, r) * np.abs(vals)))


@dataclass(frozen=True)
class VelocityGrid:
    """A finite node set standing in for R^3 in sup computations.

    Build it with :meth:`product`; arbitrary node arrays are accepted as long
    as no node has ``xi1 == 0`` and both signs of ``xi1`` occur.
    """

    nodes: np.ndarray
    R_max: float
    level: int = 0
    xi1_min: float = field(default=1e-6)

    def __post_init__(self):
        pts = np.ascontiguousarray(as_points(self.nodes).reshape(-1, 3))
        if pts.shape[0] == 0:
            raise ValueError("empty velocity grid")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid nodes must be finite")
        if np.any(pts[:, 0] == 0.0):
            raise ValueError("grid nodes must not have xi1 = 0")
        if not (np.any(pts[:, 0] > 0) and np.any(pts[:, 0] < 0)):
            raise ValueError("grid must cover both signs of xi1")
        if not self.R_max > 0:
            raise ValueError("R_max must be positive")
        pts.setflags(write=False)
        object.__setattr__(self, "nodes", pts)

    @classmethod
    def product(
        cls,
        R_max: float = 50.0,
        level: int = 0,
        n_xi1: int = 16,
        n_perp: int = 3,
        xi1_min: float = 1e-6,
    ) -> "VelocityGrid":
        """Log-spaced ``|xi1|`` in ``[xi1_min, R_max]`` (both signs) tensored
        with a coarse symmetric grid in ``(xi2, xi3)``.

        Each refinement level doubles both per-axis counts.  Nodes are ordered
        lexicographically in ``(xi1, xi2, xi3)``.
        """
        if not 0 < xi1_min < R_max:
            raise ValueError("need 0 < xi1_min < R_max")
        scale = 2 ** int(level)
        a1 = np.logspace(math.log10(xi1_min), math.log10(R_max), n_xi1 * scale)
        xi1 = np.concatenate([-a1[::-1], a1])
        p = np.logspace(-1.0, math.log10(R_max), n_perp * scale)
        perp = np.concatenate([-p[::-1], [0.0], p])
        g1, g2, g3 = np.meshgrid(xi1, perp, perp, indexing="ij")
        nodes = np.stack([g1.ravel(), g2.ravel(), g3.ravel()], axis=-1)
        return cls(nodes=nodes, R_max=float(R_max), level=int(level), xi1_min=float(xi1_min))

    def __len__(self) -> int:
        return self.nodes.shape[0]

    def radii(self) -> np.ndarray:
        return np.sqrt(np.sum(self.nodes * self.nodes, axis=-1))

    def velocities(self) -> Sequence[Velocity]:
        return [Velocity(*row) for row in self.nodes]


def sample_triangle_pairs(n_samples: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded pairs ``(xi, xi_star)`` for the weight-inequality check.

    ``xi_star`` and the displacement ``d = xi - xi_star`` have independent
    isotropic directions and radii log-uniform on ``[1e-3, 1e3]``.  For every
    fourth pair ``d`` is aligned with ``xi_star`` (the extremal
    configuration, where ``|xi| = |d| + |xi_star|``).
    """
    rng = np.random.default_rng(seed)

    def isotropic(n):
        v = rng.standard_normal((n, 3))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def radii(n):
        return 10.0 ** rng.uniform(-3.0, 3.0, size=(n, 1))

    xs = isotropic(n_samples) * radii(n_samples)
    d = isotropic(n_samples) * radii(n_samples)
    aligned = np.arange(n_samples) % 4 == 0
    dn = np.linalg.norm(d[aligned], axis=1, keepdims=True)
    xn = np.linalg.norm(xs[aligned], axis=1, keepdims=True)
    d[aligned] = xs[aligned] / np.where(xn > 0, xn, 1.0) * dn
    return xs + d, xs


def triangle_ratios(xi, xi_star) -> np.ndarray:
    """``<xi> / (<xi - xi_star> <xi_star>)`` elementwise."""
    return _kernels.triangle_ratios(
        np.ascontiguousarray(as_points(xi).reshape(-1, 3)),
        np.ascontiguousarray(as_points(xi_star).reshape(-1, 3)),
    )


def weight_triangle_check(n_samples: int = 1_000_000, seed: int = 0) -> tuple[bool, float]:
    """Check ``<xi> <= sqrt(2) <xi - xi_star> <xi_star>`` on seeded samples.

    Returns the pass flag and the worst observed ratio.  The bound follows
    from ``1 + (a + b)**2 <= 2 (1 + a**2)(1 + b**2)``; the true supremum of
    the ratio is ``2/sqrt(3)``, reached for aligned vectors of length
    ``2**-0.5`` each.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    xi, xs = sample_triangle_pairs(int(n_samples), int(seed))
    ratios = triangle_ratios(xi, xs)
    worst = float(np.max(ratios))
    return bool(worst <= SQRT2), worst


def radii_brackets(radii: Iterable[float], best: float) -> tuple[float, float]:
    """Neighbouring distinct radii around ``best`` (clamped at the ends)."""
    r = np.unique(np.asarray(list(radii), dtype=float))
    i = int(np.searchsorted(r, best))
    lo = r[max(i - 1, 0)]
    hi = r[min(i + 1, r.size - 1)]
    return float(lo), float(hi)
