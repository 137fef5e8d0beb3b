"""Compiled Dormand-Prince kernel and per-family scalar bias/gap functions.

Each family contributes ``eps(t, prm)`` and ``gap(t, prm)`` where ``prm``
holds the family parameters in schema order.  The kernel is specialized
once per family and is bit-for-bit the same scheme as the pure-Python
integrator in :mod:`nlsweep.schrodinger`.
"""

import math

import numpy as np
from numba import njit

OK, UNDERFLOW, BUDGET = 0, 1, 2


@njit(cache=True)
def _sech(x):
    w = math.exp(-abs(x))
    return 2.0 * w / (1.0 + w * w)


@njit(cache=True)
def _zero(t, p):
    return 0.0


# -- linear (v, Delta)
@njit(cache=True)
def linear_e(t, p):
    return p[0] * t


@njit(cache=True)
def const1(t, p):
    return p[1]


@njit(cache=True)
def const2(t, p):
    return p[2]


@njit(cache=True)
def const3(t, p):
    return p[3]


# -- tanh_modulated (v0, alpha, T, Delta)
@njit(cache=True)
def tanh_modulated_e(t, p):
    return p[0] * t * (1.0 + p[1] * math.tanh(t / p[2]))


# -- quadratic (v0, v1, Delta)
@njit(cache=True)
def quadratic_e(t, p):
    return p[0] * t + p[1] * t * t


# -- parabolic (eps0, alpha, Delta)
@njit(cache=True)
def parabolic_e(t, p):
    return p[0] + p[1] * t * t


# -- cubic (v0, chi3, Delta)
@njit(cache=True)
def cubic_e(t, p):
    k = p[1] * p[0] ** 3 / (6.0 * p[2] * p[2])
    return p[0] * t + k * t ** 3


# -- superlinear / sublinear (v, lam, Delta)
@njit(cache=True)
def superlinear_e(t, p):
    return p[0] * t * math.sqrt(1.0 + p[1] * t * t)


@njit(cache=True)
def sublinear_e(t, p):
    return p[0] * t * (1.0 + 2.0 * p[1] * t * t) ** -0.25


# -- sine / sinh / tanh (A, T, Delta)
@njit(cache=True)
def sine_e(t, p):
    return p[0] * math.sin(t / p[1])


@njit(cache=True)
def sinh_e(t, p):
    return p[0] * math.sinh(t / p[1])


@njit(cache=True)
def tanh_e(t, p):
    return p[0] * math.tanh(t / p[1])


# -- demkov_kunike (A, B, T)
@njit(cache=True)
def demkov_kunike_e(t, p):
    return 2.0 * p[1] * math.tanh(t / p[2])


@njit(cache=True)
def demkov_kunike_g(t, p):
    return 2.0 * p[0] * _sech(t / p[2])


# -- tangent (A, B, T)
@njit(cache=True)
def tangent_e(t, p):
    return 2.0 * p[1] * math.tan(t / p[2])


@njit(cache=True)
def tangent_g(t, p):
    return 2.0 * p[0]


# -- rosen_zener (a, b, T)
@njit(cache=True)
def rosen_zener_e(t, p):
    return 2.0 * p[0]


@njit(cache=True)
def rosen_zener_g(t, p):
    return 2.0 * p[1] * _sech(t / p[2])


# -- rotating (Omega, omega, duration)
@njit(cache=True)
def rotating_e(t, p):
    return p[0] * math.cos(p[1] * t)


@njit(cache=True)
def rotating_g(t, p):
    return p[0] * math.sin(p[1] * t)


# -- power_law (A, a, T, Delta)
@njit(cache=True)
def power_law_e(t, p):
    if t == 0.0:
        return 0.0
    return math.copysign(p[0] * abs(t / p[2]) ** p[1], t)


# -- erf (A, sigma, T, Delta)
@njit(cache=True)
def erf_e(t, p):
    return p[0] * math.erf(t / (math.sqrt(2.0) * p[1] * p[2]))


# -- gaussian_gap (v, Delta0, T)
@njit(cache=True)
def gaussian_gap_g(t, p):
    return p[1] * math.exp(-(t / p[2]) ** 2)


# -- tanh_gap (v, Delta0, alpha, T)
@njit(cache=True)
def tanh_gap_g(t, p):
    return p[1] * (1.0 + p[2] * math.tanh(t / p[3]))


# -- power_gap (v, d0, a, T)
@njit(cache=True)
def power_gap_g(t, p):
    return p[1] * abs(t / p[3]) ** p[2]


# -- gap-eliminated linear sweeps: prm = (family prm padded to 4, gap~, n,
#    t~ nodes, t nodes, G', G''), bias gap~ v G / gap(G) with G the quintic
#    Hermite map of nlsweep.gap_transform
@njit(cache=True)
def _tab_forward(tt, p):
    n = int(p[5])
    x = p[6:6 + n]
    y = p[6 + n:6 + 2 * n]
    d = p[6 + 2 * n:6 + 3 * n]
    s = p[6 + 3 * n:6 + 4 * n]
    # the integrator stays inside the tabulated range; clamp rounding overshoot
    if tt <= x[0]:
        return y[0]
    if tt >= x[n - 1]:
        return y[n - 1]
    k = np.searchsorted(x, tt, side="right") - 1
    h = x[k + 1] - x[k]
    u = (tt - x[k]) / h
    A = y[k + 1] - (y[k] + h * d[k] + h * h * s[k] / 2)
    B = h * d[k + 1] - (h * d[k] + h * h * s[k])
    C = h * h * (s[k + 1] - s[k])
    c3 = 10 * A - 4 * B + C / 2
    c4 = -15 * A + 7 * B - C
    c5 = 6 * A - 3 * B + C / 2
    return y[k] + u * (h * d[k] + u * (h * h * s[k] / 2 + u * (c3 + u * (c4 + u * c5))))


@njit(cache=True)
def tilde_g(t, p):
    return p[4]


@njit(cache=True)
def gaussian_gap_tilde_e(t, p):
    G = _tab_forward(t, p)
    return p[4] * p[0] * G / gaussian_gap_g(G, p)


@njit(cache=True)
def tanh_gap_tilde_e(t, p):
    G = _tab_forward(t, p)
    return p[4] * p[0] * G / tanh_gap_g(G, p)


FAMILY_KERNELS = {
    "linear": (linear_e, const1),
    "tanh_modulated": (tanh_modulated_e, const3),
    "quadratic": (quadratic_e, const2),
    "parabolic": (parabolic_e, const2),
    "cubic": (cubic_e, const2),
    "superlinear": (superlinear_e, const2),
    "sublinear": (sublinear_e, const2),
    "sine": (sine_e, const2),
    "sinh": (sinh_e, const2),
    "tanh": (tanh_e, const2),
    "demkov_kunike": (demkov_kunike_e, demkov_kunike_g),
    "tangent": (tangent_e, tangent_g),
    "rosen_zener": (rosen_zener_e, rosen_zener_g),
    "rotating": (rotating_e, rotating_g),
    "power_law": (power_law_e, const3),
    "erf": (erf_e, const3),
    "gaussian_gap": (linear_e, gaussian_gap_g),
    "tanh_gap": (linear_e, tanh_gap_g),
    "power_gap": (linear_e, power_gap_g),
    "gaussian_gap~": (gaussian_gap_tilde_e, tilde_g),
    "tanh_gap~": (tanh_gap_tilde_e, tilde_g),
}


def lookup(p):
    """(eps, gap, prm) for a catalog profile, or None for custom profiles."""
    key = p._model.kernel_key
    if key is None or key not in FAMILY_KERNELS:
        return None
    fe, fg = FAMILY_KERNELS[key]
    prm = p._model.kernel_prm
    if prm is None:
        prm = np.array(list(p.params.values()), dtype=np.float64)
    return fe, fg, prm


# first-class function arguments do not survive numba's on-disk cache
@njit
def dopri(fe, fg, prm, t0, t1, a, b, rtol, cap, max_steps):
    """Dormand-Prince 5(4) on the two amplitudes; see schrodinger._dopri."""
    sgn = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    t = t0
    e = fe(t, prm)
    g = fg(t, prm)
    ka1 = e * a + g * b
    kb1 = g * a - e * b
    E = math.hypot(e, g)
    h = min(span, cap / E if E > 0 else span, 1e-2 * max(span, 1e-300))
    n = 0
    rej = 0
    forced = 0
    h_floor = 1e-12 * span
    defect = abs(abs(a) ** 2 + abs(b) ** 2 - 1.0)
    end_tol = 1e-13 * max(1.0, abs(t1))
    while abs(t1 - t) > end_tol:
        if E > 0 and h > cap / E:
            h = cap / E
        rem = abs(t1 - t)
        if h > rem:
            h = rem
        if h < 1e-15 * max(1.0, abs(t)) or forced > 10000:
            return a, b, t, n, rej, defect, UNDERFLOW
        if n + rej > max_steps:
            return a, b, t, n, rej, defect, BUDGET
        hs = sgn * h
        hc = -0.5j * hs
        x = a + hc * (1 / 5) * ka1
        y = b + hc * (1 / 5) * kb1
        tt = t + hs * 0.2
        e = fe(tt, prm)
        g = fg(tt, prm)
        ka2 = e * x + g * y
        kb2 = g * x - e * y
        x = a + hc * (3 / 40 * ka1 + 9 / 40 * ka2)
        y = b + hc * (3 / 40 * kb1 + 9 / 40 * kb2)
        tt = t + hs * 0.3
        e = fe(tt, prm)
        g = fg(tt, prm)
        ka3 = e * x + g * y
        kb3 = g * x - e * y
        x = a + hc * (44 / 45 * ka1 - 56 / 15 * ka2 + 32 / 9 * ka3)
        y = b + hc * (44 / 45 * kb1 - 56 / 15 * kb2 + 32 / 9 * kb3)
        tt = t + hs * 0.8
        e = fe(tt, prm)
        g = fg(tt, prm)
        ka4 = e * x + g * y
        kb4 = g * x - e * y
        x = a + hc * (19372 / 6561 * ka1 - 25360 / 2187 * ka2 + 64448 / 6561 * ka3 - 212 / 729 * ka4)
        y = b + hc * (19372 / 6561 * kb1 - 25360 / 2187 * kb2 + 64448 / 6561 * kb3 - 212 / 729 * kb4)
        tt = t + hs * (8 / 9)
        e = fe(tt, prm)
        g = fg(tt, prm)
        ka5 = e * x + g * y
        kb5 = g * x - e * y
        x = a + hc * (9017 / 3168 * ka1 - 355 / 33 * ka2 + 46732 / 5247 * ka3
                      + 49 / 176 * ka4 - 5103 / 18656 * ka5)
        y = b + hc * (9017 / 3168 * kb1 - 355 / 33 * kb2 + 46732 / 5247 * kb3
                      + 49 / 176 * kb4 - 5103 / 18656 * kb5)
        tt = t + hs
        e = fe(tt, prm)
        g = fg(tt, prm)
        ka6 = e * x + g * y
        kb6 = g * x - e * y
        an = a + hc * (35 / 384 * ka1 + 500 / 1113 * ka3 + 125 / 192 * ka4
                       - 2187 / 6784 * ka5 + 11 / 84 * ka6)
        bn = b + hc * (35 / 384 * kb1 + 500 / 1113 * kb3 + 125 / 192 * kb4
                       - 2187 / 6784 * kb5 + 11 / 84 * kb6)
        tn = t1 if h == rem else t + hs
        e = fe(tn, prm)
        g = fg(tn, prm)
        ka7 = e * an + g * bn
        kb7 = g * an - e * bn
        ea = hc * (71 / 57600 * ka1 - 71 / 16695 * ka3 + 71 / 1920 * ka4
                   - 17253 / 339200 * ka5 + 22 / 525 * ka6 - 1 / 40 * ka7)
        eb = hc * (71 / 57600 * kb1 - 71 / 16695 * kb3 + 71 / 1920 * kb4
                   - 17253 / 339200 * kb5 + 22 / 525 * kb6 - 1 / 40 * kb7)
        err = max(abs(ea), abs(eb)) / max(rtol * h, 1e-14)
        if err > 1.0 and h <= h_floor:
            forced += 1
            err = 1.0
        if err <= 1.0:
            t = tn
            a = an
            b = bn
            ka1 = ka7
            kb1 = kb7
            E = math.hypot(e, g)
            n += 1
            d = abs(a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag - 1.0)
            if d > defect:
                defect = d
            if err > 0:
                h *= min(5.0, 0.9 * err ** -0.2)
            else:
                h *= 5.0
        else:
            rej += 1
            h *= max(0.2, 0.9 * err ** -0.2)
    return a, b, t, n, rej, defect, OK
