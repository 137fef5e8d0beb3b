"""Dykhne-Davis-Pechukas machinery: complex zeros, action integrals, Gamma factors.

Zeros are searched on E^2 = eps^2 + gap^2, which is analytic wherever the
profile is, so the Newton iteration never meets a branch cut.  Action
integrals D(t_c) = int_0^{t_c} E ds are computed by adaptive Gauss-Kronrod
quadrature on a parameterized contour.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import (
    ContourError,
    MultiplicityError,
    SearchError,
    SingularityError,
    UnsupportedError,
    ValidationError,
)
from .schrodinger import TransitionResult
from .sweep_catalog import crossing_derivatives

# Gauss-Kronrod 7-15 rule on [-1, 1]
_XK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_X = np.concatenate([-_XK[:-1], _XK[::-1]])
_WKF = np.concatenate([_WK[:-1], _WK[::-1]])
_WGF = np.zeros(15)
_WGF[1::2] = np.concatenate([_WG, _WG[-2::-1]])

SEED_GRID = (40, 20)


@dataclass(frozen=True)
class DdpZero:
    """A transition point in the upper half plane."""

    t_c: complex
    action: complex
    gamma: complex
    multiplicity_flag: bool
    newton_residual: float


class ZeroList(list):
    """List of :class:`DdpZero` carrying a search diagnostic."""

    def __init__(self, items=(), diagnostic=""):
        super().__init__(items)
        self.diagnostic = diagnostic


@dataclass(frozen=True)
class SearchBox:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    @property
    def diagonal(self):
        return math.hypot(self.re_max - self.re_min, self.im_max - self.im_min)

    def contains(self, z, slack=0.0):
        return (self.re_min - slack <= z.real <= self.re_max + slack
                and self.im_min - slack <= z.imag <= self.im_max + slack)


def _require_analytic(p):
    if not p.analytic:
        raise UnsupportedError(f"family {p.family!r} is not analytic; DDP is inapplicable")


def _scales(p):
    """(time scale, energy scale) near the crossing."""
    try:
        c = crossing_derivatives(p)
    except UnsupportedError:
        c = None
    T = p.time_const
    if c is not None and c.v0 > 0 and c.gap0 > 0:
        t_s = c.gap0 / c.v0
        e_s = c.gap0
    else:
        e_s = float(abs(p.gap(0.0))) or float(abs(p.dbias(0.0))) or 1.0
        t_s = T or 1.0
    return t_s, e_s, T


def default_search_box(p, max_count=10):
    """Rectangle Re in [-R, R], Im in (0, H] scaled to the crossing.

    Families with poles get a box tall enough to hold zeros attached to the
    first few pole rows, since those are the ones that matter in the
    generalized formula.
    """
    t_s, _, T = _scales(p)
    R = 10 * max(T or 0.0, t_s)
    H = 10 * t_s
    if not math.isinf(p.analyticity_distance):
        H = min(H, 0.95 * p.analyticity_distance)
        if p._model.pole_seeds is not None:
            H = max(H, (max_count + 3) * p.analyticity_distance)
    return SearchBox(-R, R, 0.0, H)


def _as_box(search, p, max_count):
    if search is None:
        return default_search_box(p, max_count)
    if isinstance(search, SearchBox):
        box = search
    else:
        box = SearchBox(*map(float, search))
    if not (box.re_min < box.re_max and box.im_min < box.im_max and box.im_max > 0):
        raise ValidationError("search rectangle must be non-empty and reach into Im > 0")
    return box


def _f_and_df(m, z):
    e = m.eps(z)
    g = m.gap(z)
    return e * e + g * g, 2 * (e * m.deps(z) + g * m.dgap(z)), e, g


def _seeds(p, box):
    nx, ny = SEED_GRID
    xs = np.linspace(box.re_min, box.re_max, nx)
    lo = max(box.im_min, 1e-3 * (box.im_max - box.im_min))
    ys = np.linspace(lo, box.im_max, ny)
    pts = (xs[None, :] + 1j * ys[:, None]).ravel()
    extra = []
    if p._model.pole_seeds is not None:
        spacing = 2 * p.analyticity_distance
        ang = np.exp(2j * np.pi * (np.arange(8) + 0.5) / 8)
        for pole in p._model.pole_seeds(box.im_max):
            for r in (1e-3, 1e-2, 1e-1, 0.3):
                extra.extend(pole + r * spacing * ang)
    return np.concatenate([pts, np.asarray(extra, dtype=complex)])


def _newton(p, z, iters=80):
    """Vectorized damped Newton on E^2; returns converged points and counts."""
    m = p._model
    z = np.array(z, dtype=complex)
    alive = np.ones(z.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(iters):
            f, df, _, _ = _f_and_df(m, z)
            step = f / df
            bad = ~np.isfinite(step)
            alive &= ~bad
            step[bad] = 0
            lim = 0.5 * (np.abs(z) + 1.0)
            big = np.abs(step) > lim
            step[big] *= lim[big] / np.abs(step[big])
            z = z - step
        f, df, e, g = _f_and_df(m, z)
        scale = np.abs(e) ** 2 + np.abs(g) ** 2
        res = np.abs(f) / np.where(scale > 0, scale, 1.0)
    ok = alive & np.isfinite(res) & (res <= 1e-10)
    return z, res, ok


def _polish(p, z):
    """A few checked Newton steps in scalar arithmetic."""
    m = p._model
    for _ in range(6):
        p._check(np.array([z]))
        f, df, _, _ = _f_and_df(m, z)
        if df == 0 or f == 0:
            break
        dz = f / df
        z = z - dz
        if abs(dz) <= 1e-15 * max(abs(z), 1.0):
            break
    f, df, e, g = _f_and_df(m, z)
    scale = abs(e) ** 2 + abs(g) ** 2
    return complex(z), float(abs(f) / scale) if scale > 0 else float(abs(f)), complex(df)


def _is_double(p, z, df):
    m = p._model
    e = complex(m.eps(z))
    g = complex(m.gap(z))
    t_s, _, _ = _scales(p)
    scale = abs(e) ** 2 + abs(g) ** 2 + abs(complex(m.gap(0.0))) ** 2
    return abs(df) * t_s < 1e-5 * scale


def find_upper_zeros(p, search=None, max_count=10, with_actions=True, path="vertical"):
    """Distinct zeros of E^2 with Im > 0 in the search rectangle, sorted by Im.

    Returns a :class:`ZeroList`; it is empty (with a diagnostic) when E^2 has
    no zeros there.
    """
    _require_analytic(p)
    if max_count < 1:
        raise ValidationError("max_count must be >= 1")
    box = _as_box(search, p, max_count)
    seeds = _seeds(p, box)
    z, res, ok = _newton(p, seeds)
    diag = box.diagonal
    cand = [complex(w) for w in z[ok] if box.contains(w, slack=1e-9 * diag) and w.imag > 1e-12 * diag]
    if not cand:
        m = p._model
        with np.errstate(all="ignore"):
            f, df, _, _ = _f_and_df(m, seeds)
        if np.all(np.abs(df) <= 1e-10 * (np.abs(f) + 1)):
            return ZeroList([], "E^2 is constant: the quasi-energy has no zeros")
        if not np.any(ok) and np.all(np.isfinite(z) & np.vectorize(lambda w: box.contains(w))(z)):
            raise SearchError("Newton iteration failed to converge from every seed")
        return ZeroList([], "no zeros of E^2 in the search rectangle")
    cand.sort(key=lambda w: (round(w.imag / (1e-8 * diag)), w.real))
    uniq = []
    for w in cand:
        if all(abs(w - u) > 1e-8 * diag for u in uniq):
            uniq.append(w)
    polished = []
    for w in uniq:
        try:
            w2, r, df = _polish(p, w)
        except SingularityError:
            continue
        polished.append((w2, r, df))
    polished.sort(key=lambda x: (x[0].imag, x[0].real))
    out = []
    for i, (w, r, df) in enumerate(polished):
        # relative to the zero's own height as well: boxes scaled by Delta/v0
        # grow without bound in the adiabatic limit
        tol = 1e-4 * min(diag, w.imag)
        near = any(abs(w - u) <= tol for j, (u, _, _) in enumerate(polished) if j != i)
        flag = near or _is_double(p, w, df)
        out.append((w, r, flag))
    out = out[:max_count]
    zeros = []
    for w, r, flag in out:
        if with_actions:
            act = action_integral(p, w, path=path)
            gam = _gamma(p, w)
        else:
            act, gam = complex("nan+nanj"), complex("nan+nanj")
        zeros.append(DdpZero(w, act, gam, flag, r))
    return ZeroList(zeros, f"{len(zeros)} zero(s) found")


# ----------------------------------------------------------------- quadrature

def _track(vals, prev):
    out = np.empty_like(vals)
    for k, r in enumerate(vals):
        out[k] = r if abs(r - prev) <= abs(r + prev) else -r
        prev = out[k]
    return out


def _gk_path(fsq, path, dpath, rtol=1e-10, atol=1e-300, tracked=True, n0=16, maxdepth=50,
             start=None):
    """int_0^1 E(path(w)) path'(w) dw with E = sqrt(fsq).

    With ``tracked`` the square root is continued from its positive value at
    w = 0, choosing at each node the sign closest to the previous node.
    Otherwise the principal branch with Re E >= 0 is used.  ``start`` fixes
    the branch at w = 0.  Returns (value, ambiguous, E at w = 1) where
    ambiguous signals an unresolved branch jump.
    """
    prev = np.sqrt(complex(fsq(np.array([path(0.0)]))[0]))
    if start is not None:
        prev = prev if abs(prev - start) <= abs(prev + start) else -prev
    elif prev.real < 0:
        prev = -prev
    stack = [(k / n0, (k + 1) / n0, 0) for k in range(n0 - 1, -1, -1)]
    total = 0j
    ambiguous = False
    comp = 0j
    emax = abs(prev)
    while stack:
        a, b, d = stack.pop()
        w = np.concatenate([(a + b) / 2 + (b - a) / 2 * _X, [b]])
        r = np.sqrt(np.asarray(fsq(path(w)), dtype=complex))
        if tracked:
            et = _track(r, prev)
            seq = np.concatenate([[prev], et])
            mag = np.abs(seq)
            emax = max(emax, float(mag.max()))
            with np.errstate(all="ignore"):
                ang = np.abs(np.angle(seq[1:] / seq[:-1]))
            # near a zero E^2 is dominated by rounding and its phase is noise
            floor = max(1e-7 * emax, 1e-300)
            ang[(mag[1:] <= floor) | (mag[:-1] <= floor)] = 0.0
            bad = bool(np.nanmax(ang) > np.pi / 4)
        else:
            et = np.where(r.real < 0, -r, r)
            bad = False
        g = et[:-1] * dpath(w[:-1])
        K = (b - a) / 2 * np.sum(_WKF * g)
        G = (b - a) / 2 * np.sum(_WGF * g)
        if (abs(K - G) > max(atol, rtol * abs(total + K)) or bad) and d < maxdepth:
            m = (a + b) / 2
            stack.append((m, b, d + 1))
            stack.append((a, m, d + 1))
            continue
        if bad and b < 1 - 1e-9:
            ambiguous = True
        # compensated summation
        y = K - comp
        t = total + y
        comp = (t - total) - y
        total = t
        prev = et[-1]
    return complex(total), ambiguous, complex(prev)


def _straight(a, b):
    d = b - a
    return (lambda w: a + d * (1 - (1 - np.asarray(w)) ** 2),
            lambda w: d * 2 * (1 - np.asarray(w)))


def _segment(a, b):
    d = b - a
    return (lambda w: a + d * np.asarray(w)), (lambda w: d * np.ones_like(np.asarray(w, dtype=float)))


def _fsq(p):
    m = p._model

    def f(z):
        p._check(z)
        e = m.eps(z)
        g = m.gap(z)
        return e * e + g * g

    return f


def action_integral(p, t_c, path="straight", rtol=1e-10):
    """D(t_c) = int_0^{t_c} E(s) ds.

    ``path='straight'`` follows the segment 0 -> t_c with the square root
    continued from its positive value at 0 (detouring around nearby zeros if
    needed).  ``path='vertical'`` runs along the real axis to Re t_c and then
    vertically, taking the principal branch Re E >= 0 on the vertical leg.
    """
    _require_analytic(p)
    t_c = complex(t_c)
    if t_c == 0:
        return 0j
    fsq = _fsq(p)
    if path == "straight":
        val, amb, _ = _gk_path(fsq, *_straight(0j, t_c), rtol=rtol)
        if not amb:
            return val
        for sgn in (1, -1):
            mid = t_c / 2 + sgn * 0.25j * t_c
            v1, a1, e_mid = _gk_path(fsq, *_segment(0j, mid), rtol=rtol)
            if a1:
                continue
            v2, a2, _ = _gk_path(fsq, *_straight(mid, t_c), rtol=rtol, start=e_mid)
            if not a2:
                return v1 + v2
        raise ContourError(f"branch of E is ambiguous along every contour to {t_c}")
    if path == "vertical":
        x, y = t_c.real, t_c.imag
        fe, fg, _, _ = p.scalar_functions()
        h = 0.0
        if x != 0:
            h = quad(lambda s: math.hypot(fe(s), fg(s)), 0.0, x,
                     epsabs=0.0, epsrel=rtol, limit=500)[0]
        v, _, _ = _gk_path(fsq, *_straight(complex(x), t_c), rtol=rtol, tracked=False)
        return h + v
    raise ValidationError(f"unknown contour {path!r}; use 'straight' or 'vertical'")


# ----------------------------------------------------------------- Gamma

def _gamma(p, t_c):
    m = p._model
    z = complex(t_c)
    e, g = complex(m.eps(z)), complex(m.gap(z))
    de, dg = complex(m.deps(z)), complex(m.dgap(z))
    df = 2 * (e * de + g * dg)
    if df == 0:
        raise MultiplicityError(f"E^2 has a multiple zero at {t_c}")
    return 2j * (de * g - e * dg) / df


def gamma_factor(p, t_c):
    """Gamma = 2i (eps' gap - eps gap') / (E^2)' at a simple zero t_c."""
    _require_analytic(p)
    t_c = complex(t_c)
    p._check(np.array([t_c]))
    m = p._model
    df = 2 * (complex(m.eps(t_c)) * complex(m.deps(t_c)) + complex(m.gap(t_c)) * complex(m.dgap(t_c)))
    if _is_double(p, t_c, df):
        raise MultiplicityError(
            f"zero at {t_c} is (nearly) double; the Gamma factor is not defined"
        )
    return _gamma(p, t_c)


# ----------------------------------------------------------------- probabilities

def generalized_probability(p, n_zeros, search=None, path="vertical"):
    """P = |sum_k Gamma_k exp(i D_k)|^2 over the n_zeros lowest zeros (never clamped)."""
    if n_zeros < 1:
        raise ValidationError("n_zeros must be >= 1")
    zeros = find_upper_zeros(p, search=search, max_count=n_zeros, path=path)
    if len(zeros) < n_zeros:
        raise SearchError(
            f"requested {n_zeros} zeros but found {len(zeros)} ({zeros.diagnostic})"
        )
    flagged = [z.t_c for z in zeros if z.multiplicity_flag]
    if flagged:
        raise MultiplicityError(f"coincident or multiple zeros at {flagged}")
    amp = sum(z.gamma * np.exp(1j * z.action) for z in zeros)
    return TransitionResult(
        probability=float(abs(amp) ** 2), method=f"ddp-{n_zeros}-zeros",
        details={"zeros": list(zeros), "n_zeros_used": n_zeros},
    )


def standard_probability(p, search=None, path="straight"):
    """P = exp(-2 Im D(t_c)) for the lowest zero."""
    zeros = find_upper_zeros(p, search=search, max_count=1, path=path)
    if not zeros:
        raise SearchError(f"no transition point found ({zeros.diagnostic})")
    z = zeros[0]
    return TransitionResult(
        probability=float(math.exp(-2 * z.action.imag)), method="ddp-1-zeros",
        details={"zeros": [z], "n_zeros_used": 1},
    )


def _lzsm(delta):
    return math.exp(-2 * math.pi * delta)


def double_passage_from_phase(delta, chi2, phi):
    """P_LZSM (1 + 3 pi delta chi2^2 / 4) |1 - exp(i phi)|^2."""
    return _lzsm(delta) * (1 + 0.75 * math.pi * delta * chi2 ** 2) * abs(1 - np.exp(1j * phi)) ** 2


def double_passage_phase(v0, v1, Delta):
    """phi = (2/3)(Delta^2/v0) chi2 - int_0^{-v0/v1} E(s) ds for eps = v0 t + v1 t^2."""
    chi2 = 2 * v1 * Delta / v0 ** 2
    b = -v0 / v1
    integral = quad(lambda s: math.hypot(v0 * s + v1 * s * s, Delta), 0.0, b,
                    epsabs=0.0, epsrel=1e-12, limit=500)[0]
    return (2.0 / 3.0) * (Delta ** 2 / v0) * chi2 - integral


@dataclass(frozen=True)
class DoublePassage:
    probability: float
    phase: float
    unreliable: bool
    note: str = field(default="")

    def __iter__(self):
        return iter((self.probability, self.phase))


def double_passage_probability(v0, v1, Delta):
    """Two-crossing DDP estimate for eps = v0 t + v1 t^2.

    The result is flagged unreliable for delta < 1, where this estimate is
    known to fail (it can exceed 1).
    """
    for name, val in (("v0", v0), ("v1", v1), ("Delta", Delta)):
        if not val > 0:
            raise ValidationError(f"{name} must be > 0")
    delta = Delta ** 2 / (4 * v0)
    chi2 = 2 * v1 * Delta / v0 ** 2
    phi = double_passage_phase(v0, v1, Delta)
    P = double_passage_from_phase(delta, chi2, phi)
    unreliable = delta < 1
    note = "known-unreliable for delta < 1" if unreliable else ""
    return DoublePassage(float(P), float(phi), unreliable, note)
