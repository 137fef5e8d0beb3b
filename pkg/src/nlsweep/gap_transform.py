"""Elimination of a time-dependent gap by reparameterizing time.

With t = G(t~) and  int_0^{G(t~)} gap(s) ds = gap~ * t~,  the Schrodinger
equation in t~ has the constant gap gap~ and the bias
eps~(t~) = gap~ * eps(G) / gap(G).

The map is tabulated on nodes (t_k, t~_k) with t~_k from adaptive
quadrature; G between nodes is a quintic Hermite interpolant built from the
exact derivatives G' = gap~/gap and G'' = -gap~^2 gap'/gap^3, refined until
the round trip t~ -> t -> t~ holds to 1e-10 relative.
"""

import bisect
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import CoverageError, DomainError, UnsupportedError
from .sweep_catalog import CrossingData, crossing_derivatives, custom_profile

ROUND_TRIP_RTOL = 1e-10
ROUND_TRIP_ATOL = 1e-12


def _hermite5(s, h, y0, d0, s0, y1, d1, s1):
    A = y1 - (y0 + h * d0 + h * h * s0 / 2)
    B = h * d1 - (h * d0 + h * h * s0)
    C = h * h * (s1 - s0)
    c3 = 10 * A - 4 * B + C / 2
    c4 = -15 * A + 7 * B - C
    c5 = 6 * A - 3 * B + C / 2
    return y0 + s * (h * d0 + s * (h * h * s0 / 2 + s * (c3 + s * (c4 + s * c5))))


@dataclass(frozen=True, eq=False)
class TimeMap:
    """Monotone map between original time t and transformed time t~."""

    target_gap: float
    t_nodes: tuple
    tt_nodes: tuple
    d1: tuple
    d2: tuple
    singular: frozenset  # interval indices next to a zero of the gap
    bounded: tuple  # (lower, upper) flags: whether the t~ range is capped by a bounded integral
    _gap: object
    _dgap: object

    @property
    def t_range(self):
        return self.t_nodes[0], self.t_nodes[-1]

    @property
    def tt_range(self):
        return self.tt_nodes[0], self.tt_nodes[-1]

    def _integral(self, a, b):
        if a == b:
            return 0.0
        return quad(self._gap, a, b, epsabs=0.0, epsrel=1e-13, limit=200)[0] / self.target_gap

    def _inverse1(self, t):
        lo, hi = self.t_range
        if not lo <= t <= hi:
            raise CoverageError(f"t={t:.6g} outside the tabulated range [{lo:.6g}, {hi:.6g}]")
        k = min(max(bisect.bisect_right(self.t_nodes, t) - 1, 0), len(self.t_nodes) - 2)
        t0 = self.t_nodes[k]
        return self.tt_nodes[k] + self._integral(t0, t)

    def _forward1(self, tt):
        lo, hi = self.tt_range
        if not lo <= tt <= hi:
            why = " (the integral of the gap is bounded)" if any(self.bounded) else ""
            raise CoverageError(f"t~={tt:.6g} outside the covered range [{lo:.6g}, {hi:.6g}]{why}")
        k = min(max(bisect.bisect_right(self.tt_nodes, tt) - 1, 0), len(self.tt_nodes) - 2)
        x0, x1 = self.tt_nodes[k], self.tt_nodes[k + 1]
        if k in self.singular:
            t0, t1 = self.t_nodes[k], self.t_nodes[k + 1]
            if tt == x0:
                return t0
            if tt == x1:
                return t1
            return brentq(lambda t: self.tt_nodes[k] + self._integral(t0, t) - tt, t0, t1,
                          xtol=1e-300, rtol=1e-15)
        h = x1 - x0
        return _hermite5((tt - x0) / h, h, self.t_nodes[k], self.d1[k], self.d2[k],
                         self.t_nodes[k + 1], self.d1[k + 1], self.d2[k + 1])

    def forward(self, tt):
        """G(t~) = t."""
        if np.ndim(tt) == 0:
            return self._forward1(float(tt))
        return np.array([self._forward1(float(x)) for x in np.ravel(tt)]).reshape(np.shape(tt))

    def inverse(self, t):
        """t~(t)."""
        if np.ndim(t) == 0:
            return self._inverse1(float(t))
        return np.array([self._inverse1(float(x)) for x in np.ravel(t)]).reshape(np.shape(t))

    def forward_derivative(self, tt):
        """G'(t~) = gap~ / gap(G(t~))."""
        return self.target_gap / self._gap(self._forward1(float(tt)))


def _default_half_span(p):
    try:
        c = crossing_derivatives(p)
        s = c.gap0 / c.v0 if c.v0 > 0 and c.gap0 > 0 else 1.0
    except UnsupportedError:
        s = 1.0
    if p.time_const:
        s = max(s, p.time_const)
    return 1e4 * s


def build_time_map(p, target_gap=None, t_span=None, max_nodes=200_000):
    """Tabulate t~(t) over ``t_span`` (default: a generous symmetric range)."""
    fg, fdg = p._model.rgap, p._model.rdgap
    if target_gap is None:
        target_gap = fg(0.0)
    target_gap = float(target_gap)
    if not target_gap > 0:
        raise DomainError("target gap must be > 0 (the gap vanishes at t = 0; pass target_gap)")
    if t_span is None:
        R = _default_half_span(p)
        t_span = (-R, R)
    t_lo, t_hi = map(float, t_span)
    if not t_lo < 0 < t_hi:
        raise DomainError("t_span must contain t = 0")

    g0 = fg(0.0)
    s0 = p.time_const or math.inf
    if g0 > 0 and fdg(0.0) != 0:
        s0 = min(s0, g0 / abs(fdg(0.0)))
    if not math.isfinite(s0):
        s0 = 1.0
    h0 = (1e-6 if g0 == 0 else 1e-3) * s0

    def march(sign, limit):
        """Nodes from 0 towards ``limit``; flags a bounded integral of the gap."""
        ts = [0.0]
        t, h, acc, gmax, stalled = 0.0, h0, 0.0, g0, 0
        while abs(t) < abs(limit):
            g, dg = fg(t), fdg(t)
            if g < 0:
                raise DomainError(f"gap is negative at t={t:.6g}")
            if g == 0 and t != 0:
                if gmax > 0 and stalled:
                    return ts, True
                raise DomainError(f"gap vanishes at t={t:.6g}")
            gmax = max(gmax, g)
            step = max(0.25 * abs(t), h0)
            if g > 0 and dg != 0:
                step = min(step, 0.1 * g / abs(dg))
            if t != 0:
                step = min(step, 2 * h)
            step = max(step, 1e-12 * max(abs(t), 1.0))
            tn = t + sign * step
            if abs(tn) > abs(limit):
                tn = limit
            inc = abs(quad(fg, t, tn, epsabs=0.0, epsrel=1e-13, limit=200)[0])
            acc += inc
            stalled = stalled + 1 if inc <= 1e-15 * acc else 0
            h, t = step, tn
            ts.append(t)
            if stalled > 8:
                # a gap decaying at infinity and one about to cross zero both
                # stall; only the latter turns negative just beyond
                probe = t + sign * 1e-3 * max(abs(t), s0)
                if fg(probe) < 0:
                    raise DomainError(f"gap vanishes near t={t:.6g}")
                return ts, True
            if len(ts) > max_nodes:
                raise CoverageError("time map needs too many nodes")
        return ts, False

    right, bhi = march(1.0, t_hi)
    left, blo = march(-1.0, t_lo)
    t_nodes = left[::-1] + right[1:]

    # t~ at the nodes by accumulating interval integrals outward from 0
    i0 = len(left) - 1
    tt = [0.0] * len(t_nodes)
    for k in range(i0 + 1, len(t_nodes)):
        tt[k] = tt[k - 1] + quad(fg, t_nodes[k - 1], t_nodes[k], epsabs=0.0, epsrel=1e-13,
                                 limit=200)[0] / target_gap
    for k in range(i0 - 1, -1, -1):
        tt[k] = tt[k + 1] - quad(fg, t_nodes[k], t_nodes[k + 1], epsabs=0.0, epsrel=1e-13,
                                 limit=200)[0] / target_gap

    def derivs(t):
        g = fg(t)
        if g == 0:
            return math.inf, math.inf
        return target_gap / g, -target_gap ** 2 * fdg(t) / g ** 3

    nodes = list(zip(t_nodes, tt))
    # refine until the midpoint round trip holds everywhere
    for _ in range(60):
        tn = [a for a, _ in nodes]
        xn = [b for _, b in nodes]
        dd = [derivs(a) for a in tn]
        singular = {k for k in range(len(tn) - 1) if fg(tn[k]) == 0 or fg(tn[k + 1]) == 0}
        inserts = []
        for k in range(len(tn) - 1):
            if k in singular:
                continue
            x0, x1 = xn[k], xn[k + 1]
            h = x1 - x0
            if h <= 0:
                raise DomainError("time map is not strictly increasing")
            for s in (0.25, 0.5, 0.75):
                xm = x0 + s * h
                tm = _hermite5(s, h, tn[k], dd[k][0], dd[k][1], tn[k + 1], dd[k + 1][0], dd[k + 1][1])
                if not tn[k] < tm < tn[k + 1]:
                    inserts.append(k)
                    break
                back = x0 + quad(fg, tn[k], tm, epsabs=0.0, epsrel=1e-13, limit=200)[0] / target_gap
                if abs(back - xm) > ROUND_TRIP_RTOL * abs(xm) * 0.1 + ROUND_TRIP_ATOL * 0.1:
                    inserts.append(k)
                    break
        if not inserts:
            break
        for k in reversed(inserts):
            tm = 0.5 * (tn[k] + tn[k + 1])
            xm = xn[k] + quad(fg, tn[k], tm, epsabs=0.0, epsrel=1e-13, limit=200)[0] / target_gap
            nodes.insert(k + 1, (tm, xm))
        if len(nodes) > max_nodes:
            raise CoverageError("time map refinement exceeded the node budget")
    tn = [a for a, _ in nodes]
    xn = [b for _, b in nodes]
    dd = [derivs(a) for a in tn]
    singular = frozenset(k for k in range(len(tn) - 1) if fg(tn[k]) == 0 or fg(tn[k + 1]) == 0)
    return TimeMap(
        target_gap=target_gap, t_nodes=tuple(tn), tt_nodes=tuple(xn),
        d1=tuple(d[0] for d in dd), d2=tuple(d[1] for d in dd),
        singular=singular, bounded=(blo, bhi), _gap=fg, _dgap=fdg,
    )


def equivalent_derivatives(p, target_gap=None):
    """(deps~/dt~, d2eps~/dt~2, d3eps~/dt~3) at the crossing."""
    c = crossing_derivatives(p)
    D = c.gap0
    if not D > 0:
        raise UnsupportedError("gap vanishes at the crossing")
    Dt = D if target_gap is None else float(target_gap)
    v, e2, e3, g1, g2 = c.v0, c.eps2, c.eps3, c.gap1, c.gap2
    first = Dt ** 2 * v / D ** 2
    second = Dt ** 3 * (e2 / D ** 3 - 3 * v * g1 / D ** 4)
    third = Dt ** 4 * (e3 / D ** 4 - 6 * e2 * g1 / D ** 5 - 4 * v * g2 / D ** 5
                       + 15 * v * g1 ** 2 / D ** 6)
    return first, second, third


def equivalent_nonlinearity(p, target_gap=None):
    """(chi2, chi3) of the equivalent constant-gap problem."""
    c = crossing_derivatives(p)
    if not c.v0 > 0:
        raise UnsupportedError("v0 = 0: nonlinearity parameters undefined")
    Dt = c.gap0 if target_gap is None else float(target_gap)
    d1, d2, d3 = equivalent_derivatives(p, Dt)
    return Dt * d2 / d1 ** 2, Dt ** 2 * d3 / d1 ** 3


def equivalent_profile(p, target_gap=None, time_map=None):
    """Constant-gap profile with bias eps~(t~) = gap~ eps(G(t~)) / gap(G(t~)).

    Real-axis only.  When the integral of the gap is bounded, the profile
    lives on the finite t~ interval the map can reach.
    """
    if p.gap_kind == "constant" and time_map is None and target_gap is None:
        return p
    tm = time_map or build_time_map(p, target_gap)
    Dt = tm.target_gap
    fe, fg, fde, fdg = p.scalar_functions()

    def eps(tt):
        t = tm._forward1(tt)
        g = fg(t)
        if g == 0:
            return 0.0 if fe(t) == 0 else math.copysign(math.inf, fe(t))
        return Dt * fe(t) / g

    def deps(tt):
        t = tm._forward1(tt)
        g = fg(t)
        if g == 0:
            return math.inf
        return Dt * Dt * (fde(t) * g - fe(t) * fdg(t)) / g ** 3

    def gap(tt):
        return Dt

    def dgap(tt):
        return 0.0

    try:
        d1, d2, d3 = equivalent_derivatives(p, Dt)
        crossing = (d1, d2, d3, Dt, 0.0, 0.0)
    except UnsupportedError:
        crossing = None
    prof = custom_profile(
        f"{p.family}~", eps, gap, deps, dgap, crossing=crossing, time_const=p.time_const,
        params=dict(p.params, target_gap=Dt),
    )
    lo, hi = tm.tt_range
    if any(tm.bounded):
        prof = _with_domain(prof, (lo, hi))
    if p.family in _TABULATED and not tm.singular:
        head = list(p.params.values())
        head += [0.0] * (4 - len(head)) + [Dt, len(tm.t_nodes)]
        prm = np.concatenate([head, tm.tt_nodes, tm.t_nodes, tm.d1, tm.d2]).astype(np.float64)
        model = replace(prof._model, kernel_key=f"{p.family}~", kernel_prm=prm)
        prof = replace(prof, _model=model)
    return prof


# linear-bias families with a compiled counterpart of the transformed bias
_TABULATED = ("gaussian_gap", "tanh_gap")


def _with_domain(prof, domain):
    model = replace(prof._model, domain=tuple(domain))
    return replace(prof, _model=model)


def crossing_data_equivalent(p, target_gap=None):
    """CrossingData of the equivalent problem."""
    d1, d2, d3 = equivalent_derivatives(p, target_gap)
    Dt = crossing_derivatives(p).gap0 if target_gap is None else float(target_gap)
    return CrossingData(d1, d2, d3, Dt, 0.0, 0.0, Dt * Dt / (4 * d1))
