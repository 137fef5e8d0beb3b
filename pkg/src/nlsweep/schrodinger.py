"""Direct integration of i dpsi/dt = H(t) psi, H = (eps*sz + gap*sx)/2.

The integrator is an embedded Dormand-Prince 5(4) pair written for two
complex amplitudes.  Step size is controlled per unit time and additionally
capped at 0.05/E(t) so the dynamical phase is always resolved.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CoverageError, IntegrationError, ValidationError, WindowError

try:
    from . import _kernels
except ImportError:  # numba missing: pure-Python integrator only
    _kernels = None
from .sweep_catalog import crossing_duration

# Dormand-Prince 5(4) tableau
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)

PHASE_CAP = 0.05
ADIABATIC_RATIO = 1e-2


@dataclass(frozen=True)
class TwoLevelState:
    """Diabatic amplitudes (psi_up, psi_down) at time t."""

    amp_up: complex
    amp_down: complex
    t: float = 0.0

    @property
    def norm(self):
        return abs(self.amp_up) ** 2 + abs(self.amp_down) ** 2

    def as_array(self):
        return np.array([self.amp_up, self.amp_down], dtype=complex)


@dataclass(frozen=True)
class TransitionResult:
    """A probability with the method that produced it and its diagnostics."""

    probability: float
    method: str
    window: float = math.nan
    converged: bool = True
    residual: float = 0.0
    norm_defect: float = 0.0
    details: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Evolution:
    state: TwoLevelState
    norm_defect: float
    n_steps: int
    n_rejected: int
    times: Optional[np.ndarray] = None
    amplitudes: Optional[np.ndarray] = None


def _dopri(fe, fg, t0, t1, a, b, rtol, cap=PHASE_CAP, max_steps=5_000_000, sample=False):
    # stage derivatives are stored without the common factor -i/2, which is
    # folded into the complex step hc
    sgn = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    t = t0
    e, g = fe(t), fg(t)
    ka1, kb1, E = e * a + g * b, g * a - e * b, math.hypot(e, g)
    h = min(span, cap / E if E > 0 else span, 1e-2 * max(span, 1e-300))
    n = rej = forced = 0
    h_floor = 1e-12 * span
    defect = abs(abs(a) ** 2 + abs(b) ** 2 - 1)
    ts, amps = ([t0], [(a, b)]) if sample else (None, None)
    end_tol = 1e-13 * max(1.0, abs(t1))
    while abs(t1 - t) > end_tol:
        if E > 0 and h > cap / E:
            h = cap / E
        rem = abs(t1 - t)
        if h > rem:
            h = rem
        if h < 1e-15 * max(1.0, abs(t)) or forced > 10_000:
            raise IntegrationError(f"step size underflow at t={t:.17g}", location=t)
        if n + rej > max_steps:
            raise IntegrationError(f"step budget exhausted at t={t:.17g}", location=t)
        hs = sgn * h
        hc = -0.5j * hs
        x = a + hc * _A21 * ka1
        y = b + hc * _A21 * kb1
        tt = t + hs * 0.2
        e, g = fe(tt), fg(tt)
        ka2, kb2 = e * x + g * y, g * x - e * y
        x = a + hc * (_A31 * ka1 + _A32 * ka2)
        y = b + hc * (_A31 * kb1 + _A32 * kb2)
        tt = t + hs * 0.3
        e, g = fe(tt), fg(tt)
        ka3, kb3 = e * x + g * y, g * x - e * y
        x = a + hc * (_A41 * ka1 + _A42 * ka2 + _A43 * ka3)
        y = b + hc * (_A41 * kb1 + _A42 * kb2 + _A43 * kb3)
        tt = t + hs * 0.8
        e, g = fe(tt), fg(tt)
        ka4, kb4 = e * x + g * y, g * x - e * y
        x = a + hc * (_A51 * ka1 + _A52 * ka2 + _A53 * ka3 + _A54 * ka4)
        y = b + hc * (_A51 * kb1 + _A52 * kb2 + _A53 * kb3 + _A54 * kb4)
        tt = t + hs * (8 / 9)
        e, g = fe(tt), fg(tt)
        ka5, kb5 = e * x + g * y, g * x - e * y
        x = a + hc * (_A61 * ka1 + _A62 * ka2 + _A63 * ka3 + _A64 * ka4 + _A65 * ka5)
        y = b + hc * (_A61 * kb1 + _A62 * kb2 + _A63 * kb3 + _A64 * kb4 + _A65 * kb5)
        tt = t + hs
        e, g = fe(tt), fg(tt)
        ka6, kb6 = e * x + g * y, g * x - e * y
        an = a + hc * (_B1 * ka1 + _B3 * ka3 + _B4 * ka4 + _B5 * ka5 + _B6 * ka6)
        bn = b + hc * (_B1 * kb1 + _B3 * kb3 + _B4 * kb4 + _B5 * kb5 + _B6 * kb6)
        tn = t1 if h == rem else t + hs
        e, g = fe(tn), fg(tn)
        ka7, kb7 = e * an + g * bn, g * an - e * bn
        ea = hc * (_E1 * ka1 + _E3 * ka3 + _E4 * ka4 + _E5 * ka5 + _E6 * ka6 + _E7 * ka7)
        eb = hc * (_E1 * kb1 + _E3 * kb3 + _E4 * kb4 + _E5 * kb5 + _E6 * kb6 + _E7 * kb7)
        # local error per unit time, floored at roundoff level
        err = max(abs(ea), abs(eb)) / max(rtol * h, 1e-14)
        # steps below the floor are accepted: this crosses bounded jumps of
        # the integrand (power-law sweeps with a < 1) at negligible cost
        if err > 1.0 and h <= h_floor:
            forced += 1
            err = 1.0
        if err <= 1.0:
            t, a, b = tn, an, bn
            ka1, kb1, E = ka7, kb7, math.hypot(e, g)
            n += 1
            d = abs(a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag - 1)
            if d > defect:
                defect = d
            if sample:
                ts.append(t)
                amps.append((a, b))
            h *= min(5.0, 0.9 * err ** -0.2) if err > 0 else 5.0
        else:
            rej += 1
            h *= max(0.2, 0.9 * err ** -0.2)
    return a, b, t, n, rej, defect, ts, amps


def _integrate(p, t0, t1, a, b, rtol, max_steps=None, sample=False):
    """Dispatch to the compiled kernel when the profile has one.

    The default step budget is 5e6 steps in Python and 5e7 compiled.
    """
    jit = _kernels.lookup(p) if (_kernels is not None and not sample) else None
    if jit is None:
        fe, fg, _, _ = p.scalar_functions()
        return _dopri(fe, fg, t0, t1, a, b, rtol, max_steps=max_steps or 5_000_000, sample=sample)
    max_steps = max_steps or 50_000_000
    fe, fg, prm = jit
    a, b, t, n, rej, defect, status = _kernels.dopri(
        fe, fg, prm, float(t0), float(t1), complex(a), complex(b), float(rtol),
        PHASE_CAP, int(max_steps),
    )
    if status == _kernels.UNDERFLOW:
        raise IntegrationError(f"step size underflow at t={t:.17g}", location=t)
    if status == _kernels.BUDGET:
        raise IntegrationError(f"step budget exhausted at t={t:.17g}", location=t)
    return a, b, t, n, rej, defect, None, None


def evolve(p, t0, t1, psi0, rtol=1e-10, trajectory=False, max_steps=5_000_000):
    """Integrate from t0 to t1 starting at ``psi0`` (TwoLevelState or pair).

    Integration backwards in time (t1 < t0) is allowed.
    """
    if not 1e-13 <= rtol <= 1e-6:
        raise ValidationError("rtol must lie in [1e-13, 1e-6]")
    if t1 == t0:
        raise ValidationError("t1 must differ from t0")
    if isinstance(psi0, TwoLevelState):
        a0, b0 = complex(psi0.amp_up), complex(psi0.amp_down)
    else:
        a0, b0 = complex(psi0[0]), complex(psi0[1])
    if abs(abs(a0) ** 2 + abs(b0) ** 2 - 1) > 1e-9:
        raise ValidationError("initial state must be normalized")
    p._check(np.array([t0, t1], dtype=float))
    a, b, t, n, rej, defect, ts, amps = _integrate(
        p, float(t0), float(t1), a0, b0, rtol, max_steps=max_steps, sample=trajectory
    )
    state = TwoLevelState(a, b, t)
    if trajectory:
        return Evolution(state, defect, n, rej, np.asarray(ts), np.asarray(amps))
    return Evolution(state, defect, n, rej)


# ---------------------------------------------------------------- basis states

def eigenstates(e, g):
    """(upper, lower) instantaneous eigenvectors of H = (e sz + g sx)/2."""
    th = math.atan2(g, e)
    c, s = math.cos(th / 2), math.sin(th / 2)
    return np.array([c, s], dtype=complex), np.array([-s, c], dtype=complex)


def _rot(th):
    c, s = math.cos(th / 2), math.sin(th / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


_V = np.diag([1.0, 1.0j])


def superadiabatic_state(e, g, de, dg, upper, ddtheta=None):
    """Superadiabatic state of H = (e sz + g sx)/2.

    In the adiabatic frame, after the constant unitary diag(1, i), the
    Hamiltonian has the same real form with (e, g) -> (E, -dtheta/dt).  One
    pass of that map gives the first-order state; a second pass (which needs
    d^2theta/dt^2, passed as ``ddtheta``) gives the second-order state.
    """
    E2 = e * e + g * g
    E = math.sqrt(E2)
    th0 = math.atan2(g, e)
    thd = (e * dg - de * g) / E2
    th1 = math.atan2(-thd, E)
    frames = [th0, th1]
    if ddtheta is not None:
        Ed = (e * de + g * dg) / E
        e1, g1, de1, dg1 = E, -thd, Ed, -ddtheta
        th1d = (e1 * dg1 - de1 * g1) / (e1 * e1 + g1 * g1)
        frames.append(math.atan2(-th1d, math.hypot(e1, g1)))
    last = frames[-1]
    c, s = math.cos(last / 2), math.sin(last / 2)
    w = np.array([c, s], dtype=complex) if upper else np.array([-s, c], dtype=complex)
    for th in reversed(frames[:-1]):
        w = _rot(th) @ (_V @ w)
    return w


def _theta_dot(p, t):
    fe, fg, fde, fdg = p.scalar_functions()
    e, g = fe(t), fg(t)
    return (e * fdg(t) - fde(t) * g) / (e * e + g * g)


def _up_like_state(p, t, right, gap_ref):
    """State that continues the diabatic 'up' state at an asymptotic edge."""
    fe, fg, fde, fdg = p.scalar_functions()
    e, g = fe(t), fg(t)
    if abs(g) <= 1e-12 * gap_ref:
        return np.array([1.0, 0.0], dtype=complex)
    upper = e > 0 if e != 0 else right
    h = 1e-4 * max(abs(t), _base_scale(p))
    if p.domain is not None:
        h = min(h, 0.25 * (p.domain[1] - abs(t)))
    ddth = (_theta_dot(p, t + h) - _theta_dot(p, t - h)) / (2 * h)
    return superadiabatic_state(e, g, fde(t), fdg(t), upper, ddth)


def _energy_ref(p):
    fe, fg, _, _ = p.scalar_functions()
    lo, hi = p.domain if p.domain is not None else (-math.inf, math.inf)
    ts = [t for t in (0.0, 1e-3, -1e-3) if lo < t < hi]
    return max(max(math.hypot(fe(t), fg(t)) for t in ts), 1e-300)


def _persistence(p, left, right, rtol, gap_ref):
    psi = _up_like_state(p, left, False, gap_ref)
    a, b, _, n, _, defect, _, _ = _integrate(p, left, right, complex(psi[0]), complex(psi[1]), rtol)
    phi = _up_like_state(p, right, True, gap_ref)
    amp = np.conj(phi[0]) * a + np.conj(phi[1]) * b
    return float(abs(amp) ** 2), defect, n


# ---------------------------------------------------------------- windows

def _crossing(p):
    from .sweep_catalog import crossing_derivatives

    try:
        return crossing_derivatives(p)
    except Exception:
        return None


def _base_scale(p):
    c = _crossing(p)
    if c is not None and c.v0 > 0:
        return crossing_duration(c.v0, abs(c.gap0))
    if p.time_const:
        return float(p.time_const)
    return 1.0 / _energy_ref(p)


def initial_window(p):
    """W0 = max(10 tau, 20/sqrt(v0), 5 T, adiabatic half-width)."""
    scale = _base_scale(p)
    w = 10 * scale
    c = _crossing(p)
    if c is not None and c.v0 > 0:
        w = max(w, 20 / math.sqrt(c.v0))
    if p.time_const:
        w = max(w, 5 * float(p.time_const))
    return max(w, _adiabatic_halfwidth(p, scale))


def _adiabatic_ratio(p, t):
    fe, fg, fde, fdg = p.scalar_functions()
    e, g = fe(t), fg(t)
    den = math.hypot(e, g) ** 3
    if den == 0:
        return 0.0
    return abs(e * fdg(t) - fde(t) * g) / den


def _adiabatic_halfwidth(p, scale, ratio=ADIABATIC_RATIO):
    """Smallest |t| beyond which |dtheta/dt|/E stays below ``ratio``."""
    grow = 1.15
    ts = scale * 1e-3 * grow ** np.arange(180)  # up to ~1e8 * scale
    last = 0.0
    end = ts[-8]
    for t in ts:
        try:
            bad = _adiabatic_ratio(p, t) > ratio or _adiabatic_ratio(p, -t) > ratio
        except CoverageError:
            # tabulated profiles: nothing to learn beyond the covered range
            end = math.inf
            break
        if bad:
            last = t
    if last >= end:
        raise WindowError(
            f"profile {p.family!r} does not become adiabatic at large |t|; no asymptotic window"
        )
    return last * grow


def _edge_margin(p, ratio=ADIABATIC_RATIO):
    lo, hi = p.domain
    L = hi
    first = None
    for d in L * 0.85 ** np.arange(1, 220):
        if _adiabatic_ratio(p, L - d) > ratio or _adiabatic_ratio(p, -L + d) > ratio:
            first = d
    return first * 0.85 if first is not None else L * 0.5


def _zero_gap(p):
    fe, fg, _, _ = p.scalar_functions()
    lo, hi = p.domain if p.domain is not None else (-50.0, 50.0)
    return all(fg(t) == 0 for t in np.linspace(lo, hi, 41)[1:-1])


def converge_window(p, tol=1e-6, rtol=1e-10, max_doublings=12):
    """Grow the symmetric window until the persistence probability settles.

    Returns ``(W, diagnostics)``; diagnostics holds probability, residual,
    norm_defect, history and converged.
    """
    if _zero_gap(p):
        W = _base_scale(p) if p.domain is None else p.domain[1]
        return W, dict(probability=1.0, residual=0.0, norm_defect=0.0, history=[(W, 1.0)],
                       converged=True)
    gap_ref = _energy_ref(p)
    history = []
    if p.domain is not None:
        L = min(-p.domain[0], p.domain[1])
        # the persistence error decays only linearly in the margin, so the
        # starting margin is tied to the requested tolerance
        eta = max(_edge_margin(p, ratio=0.1 * tol), 1e-8 * L)

        def run(eta):
            try:
                return _persistence(p, -(L - eta), L - eta, rtol, gap_ref)
            except IntegrationError as exc:
                raise WindowError(
                    f"edge margin {eta:.3g} is below the resolution of the time axis: {exc}"
                ) from exc

        P, defect, _ = run(eta)
        history.append((L - eta, P))
        for _ in range(max_doublings):
            eta /= 2
            Pn, d, _ = run(eta)
            defect = max(defect, d)
            history.append((L - eta, Pn))
            if abs(Pn - P) < tol:
                return L - eta, dict(probability=Pn, residual=abs(Pn - P), norm_defect=defect,
                                     history=history, converged=True)
            P = Pn
        raise WindowError(f"no convergence after {max_doublings} margin halvings")
    W = initial_window(p)
    P, defect, _ = _persistence(p, -W, W, rtol, gap_ref)
    history.append((W, P))
    for _ in range(max_doublings):
        W *= 2
        Pn, d, _ = _persistence(p, -W, W, rtol, gap_ref)
        defect = max(defect, d)
        history.append((W, Pn))
        if abs(Pn - P) < tol:
            return W, dict(probability=Pn, residual=abs(Pn - P), norm_defect=defect,
                           history=history, converged=True)
        P = Pn
    raise WindowError(
        f"persistence probability did not settle after {max_doublings} window doublings"
    )


def diabatic_persistence_probability(p, rtol=1e-10, tol=1e-6):
    """Probability to stay in the initial diabatic state after the passage."""
    W, diag = converge_window(p, tol=tol, rtol=rtol)
    return TransitionResult(
        probability=diag["probability"], method="integrator", window=W,
        converged=diag["converged"], residual=diag["residual"],
        norm_defect=diag["norm_defect"], details={"history": diag["history"]},
    )


def adiabatic_transition_probability(p, t0, t1, rtol=1e-10):
    """Start in the ground state of H(t0); probability of the excited state of H(t1)."""
    fe, fg, _, _ = p.scalar_functions()
    _, lower = eigenstates(fe(t0), fg(t0))
    if t1 == t0:
        return TransitionResult(0.0, "integrator", window=0.0)
    ev = evolve(p, t0, t1, lower, rtol=rtol)
    upper, _ = eigenstates(fe(t1), fg(t1))
    amp = np.vdot(upper, ev.state.as_array())
    return TransitionResult(
        probability=float(abs(amp) ** 2), method="integrator", window=abs(t1 - t0),
        norm_defect=ev.norm_defect, details={"steps": ev.n_steps},
    )


def transition_probability(p, rtol=1e-10, tol=1e-6):
    """Transition probability between adiabatic states, by problem type.

    Single passage: the diabatic persistence probability.  Finite-duration
    profiles (a ``duration`` parameter): ground state at t = 0 to the excited
    state at t = duration.  Double passage: 1 - persistence, since the
    initial diabatic state is the same adiabatic state at both ends.
    """
    if p.single_passage:
        return diabatic_persistence_probability(p, rtol=rtol, tol=tol)
    duration = p.params.get("duration")
    if duration is not None and math.isfinite(duration):
        return adiabatic_transition_probability(p, 0.0, duration, rtol=rtol)
    res = diabatic_persistence_probability(p, rtol=rtol, tol=tol)
    details = dict(res.details, passage="double")
    return TransitionResult(
        probability=1.0 - res.probability, method="integrator", window=res.window,
        converged=res.converged, residual=res.residual, norm_defect=res.norm_defect,
        details=details,
    )
