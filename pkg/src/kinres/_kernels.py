"""Hot numeric kernels, each in a numba loop form and a numpy form.

The public names at the bottom dispatch on ``_accel.USE_NUMBA``.  Both forms
are kept importable so tests can check them against each other and the
benchmark can time them side by side.  Reductions run in a fixed order, so a
given backend is bit-reproducible run to run.
"""

from __future__ import annotations

import math

import numpy as np

from . import _accel
from .quadrature import GK_NODES, GK_WEIGHTS, G_WEIGHTS, adaptive_quad

TWO_PI = 2.0 * math.pi


# -- weight triangle ratios ---------------------------------------------------

def _triangle_ratios_numpy(xi, xs):
    d = xi - xs
    b = np.sqrt(1.0 + np.einsum("ij,ij->i", xi, xi))
    bd = np.sqrt(1.0 + np.einsum("ij,ij->i", d, d))
    bs = np.sqrt(1.0 + np.einsum("ij,ij->i", xs, xs))
    return b / (bd * bs)


@_accel.njit
def _triangle_ratios_numba(xi, xs):
    n = xi.shape[0]
    out = np.empty(n)
    for i in range(n):
        a = 1.0
        b = 1.0
        c = 1.0
        for k in range(3):
            a += xi[i, k] * xi[i, k]
            d = xi[i, k] - xs[i, k]
            b += d * d
            c += xs[i, k] * xs[i, k]
        out[i] = math.sqrt(a) / (math.sqrt(b) * math.sqrt(c))
    return out


# -- weighted streaming-kernel values on a node set ---------------------------

def _sigma_values_numpy(theta, nodes, nu0):
    a = np.abs(nodes[:, 0])
    s2 = np.einsum("ij,ij->i", nodes, nodes)
    return (1.0 + np.sqrt(s2)) / a * np.exp(-nu0 * np.sqrt(1.0 + s2) * theta / a)


@_accel.njit
def _sigma_values_numba(theta, nodes, nu0):
    n = nodes.shape[0]
    out = np.empty(n)
    for i in range(n):
        a = abs(nodes[i, 0])
        s2 = nodes[i, 0] ** 2 + nodes[i, 1] ** 2 + nodes[i, 2] ** 2
        out[i] = (1.0 + math.sqrt(s2)) / a * math.exp(-nu0 * math.sqrt(1.0 + s2) * theta / a)
    return out


# -- L1 norm of the streaming kernel by adaptive Gauss-Kronrod ---------------

def _l1_quad_numpy(a_abs, nuv, tol, decay_lengths):
    n = a_abs.shape[0]
    vals = np.empty(n)
    errs = np.empty(n)
    for i in range(n):
        a = float(a_abs[i])
        rate = float(nuv[i]) / a
        res = adaptive_quad(lambda th: np.exp(-rate * th) / a, 0.0, decay_lengths / rate, tol=tol)
        vals[i] = res.value
        errs[i] = res.error
    return vals, errs


@_accel.njit
def _gk15_exp(a, rate, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    fc = math.exp(-rate * mid) / a
    k = GK_WEIGHTS[7] * fc
    g = G_WEIGHTS[3] * fc
    for j in range(7):
        dx = half * GK_NODES[j]
        f = (math.exp(-rate * (mid - dx)) + math.exp(-rate * (mid + dx))) / a
        k += GK_WEIGHTS[j] * f
        if j % 2 == 1:
            g += G_WEIGHTS[j // 2] * f
    return half * k, half * abs(k - g)


@_accel.njit
def _l1_quad_numba(a_abs, nuv, tol, decay_lengths):
    n = a_abs.shape[0]
    vals = np.empty(n)
    errs = np.empty(n)
    stack_lo = np.empty(256)
    stack_hi = np.empty(256)
    for i in range(n):
        a = a_abs[i]
        rate = nuv[i] / a
        b = decay_lengths / rate
        top = 0
        stack_lo[0] = 0.0
        stack_hi[0] = b
        total = 0.0
        err = 0.0
        while top >= 0:
            lo = stack_lo[top]
            hi = stack_hi[top]
            top -= 1
            v, e = _gk15_exp(a, rate, lo, hi)
            # local tolerance proportional to the interval's share of [0, b]
            if e <= tol * (hi - lo) / b or top >= 250 or hi - lo < 1e-14 * b:
                total += v
                err += e
            else:
                m = 0.5 * (lo + hi)
                top += 1
                stack_lo[top] = m
                stack_hi[top] = hi
                top += 1
                stack_lo[top] = lo
                stack_hi[top] = m
        vals[i] = total
        errs[i] = err
    return vals, errs


# -- weighted Grad-kernel integral for a radial weight -----------------------
#
# For |xi| = s the integral over xi_star = xi + rho*omega, with the polar axis
# along xi, is
#     2 pi C int rho e^{-c rho^2} int_{-1}^{1} ((1+s)/(1+v))^r dmu drho,
#     v = sqrt(s^2 + rho^2 + 2 s rho mu).
# mu = -1 + 2 t^2 removes the sqrt endpoint singularity at mu = -1, rho = s,
# and the rho range is split at rho = s where the remaining kink sits.

def _k_radial_numpy(s_arr, r, C, c, R_cut, rho_x, rho_w, t_x, t_w, chunk=128):
    t = 0.5 * (t_x + 1.0)
    mu = -1.0 + 2.0 * t * t
    wmu = 0.5 * t_w * 4.0 * t
    out = np.empty(s_arr.shape[0])
    for start in range(0, s_arr.shape[0], chunk):
        s = s_arr[start:start + chunk][:, None]
        cut = np.minimum(s, R_cut)
        acc = np.zeros(s.shape[0])
        for lo, hi in ((np.zeros_like(cut), cut), (cut, np.full_like(cut, R_cut))):
            half = 0.5 * (hi - lo)
            rho = 0.5 * (hi + lo) + half * rho_x[None, :]
            wr = half * rho_w[None, :]
            radial = rho * np.exp(-c * rho * rho) * wr
            v2 = s[:, :, None] ** 2 + rho[:, :, None] ** 2 + 2.0 * s[:, :, None] * rho[:, :, None] * mu
            v = np.sqrt(np.maximum(v2, 0.0))
            ang = np.sum(((1.0 + s[:, :, None]) / (1.0 + v)) ** r * wmu, axis=-1)
            acc += np.sum(radial * ang, axis=-1)
        out[start:start + chunk] = TWO_PI * C * acc
    return out


@_accel.njit
def _k_radial_numba(s_arr, r, C, c, R_cut, rho_x, rho_w, t_x, t_w):
    nt = t_x.shape[0]
    mu = np.empty(nt)
    wmu = np.empty(nt)
    for j in range(nt):
        t = 0.5 * (t_x[j] + 1.0)
        mu[j] = -1.0 + 2.0 * t * t
        wmu[j] = 0.5 * t_w[j] * 4.0 * t
    out = np.empty(s_arr.shape[0])
    for i in range(s_arr.shape[0]):
        s = s_arr[i]
        cut = min(s, R_cut)
        acc = 0.0
        for panel in range(2):
            lo = 0.0 if panel == 0 else cut
            hi = cut if panel == 0 else R_cut
            if hi <= lo:
                continue
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            for k in range(rho_x.shape[0]):
                rho = mid + half * rho_x[k]
                radial = rho * math.exp(-c * rho * rho) * half * rho_w[k]
                ang = 0.0
                for j in range(nt):
                    v2 = s * s + rho * rho + 2.0 * s * rho * mu[j]
                    v = math.sqrt(v2) if v2 > 0.0 else 0.0
                    ang += ((1.0 + s) / (1.0 + v)) ** r * wmu[j]
                acc += radial * ang
        out[i] = TWO_PI * C * acc
    return out


# -- dispatch -------------------------------------------------------------------

def triangle_ratios(xi, xs):
    if _accel.USE_NUMBA:
        return _triangle_ratios_numba(xi, xs)
    return _triangle_ratios_numpy(xi, xs)


def sigma_values(theta, nodes, nu0):
    nodes = np.ascontiguousarray(nodes, dtype=float)
    if _accel.USE_NUMBA:
        return _sigma_values_numba(float(theta), nodes, float(nu0))
    return _sigma_values_numpy(float(theta), nodes, float(nu0))


def l1_quad(a_abs, nuv, tol, decay_lengths=40.0):
    a_abs = np.ascontiguousarray(a_abs, dtype=float)
    nuv = np.ascontiguousarray(nuv, dtype=float)
    if _accel.USE_NUMBA:
        return _l1_quad_numba(a_abs, nuv, float(tol), float(decay_lengths))
    return _l1_quad_numpy(a_abs, nuv, float(tol), float(decay_lengths))


def k_radial(s_arr, r, C, c, R_cut, rho_x, rho_w, t_x, t_w):
    args = (
        np.ascontiguousarray(s_arr, dtype=float), float(r), float(C), float(c), float(R_cut),
        np.ascontiguousarray(rho_x), np.ascontiguousarray(rho_w),
        np.ascontiguousarray(t_x), np.ascontiguousarray(t_w),
    )
    if _accel.USE_NUMBA:
        return _k_radial_numba(*args)
    return _k_radial_numpy(*args)
