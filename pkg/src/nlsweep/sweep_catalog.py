"""Bias/gap profile families for the two-level avoided-crossing problem.

A profile is the pair (eps(t), gap(t)) entering H = (eps*sz + gap*sx)/2.
Every family exposes vectorized numpy evaluation (complex-capable when the
family is analytic), fast scalar closures for the ODE integrator, and the
exact derivatives at the crossing point t = 0.
"""

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Callable, Mapping, Optional, Tuple

import numpy as np
from scipy import special

from .errors import (
    SingularityError,
    UnknownFamilyError,
    UnsupportedError,
    ValidationError,
)

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class CrossingData:
    """Derivatives of eps and gap at t = 0 plus the adiabaticity parameter."""

    v0: float
    eps2: float
    eps3: float
    gap0: float
    gap1: float
    gap2: float
    delta: float


@dataclass(frozen=True)
class _Model:
    eps: Callable
    deps: Callable
    gap: Callable
    dgap: Callable
    reps: Callable
    rdeps: Callable
    rgap: Callable
    rdgap: Callable
    crossing: Optional[Tuple[float, float, float, float, float, float]]
    crossing_reason: str = ""
    dist: float = math.inf
    domain: Optional[Tuple[float, float]] = None
    time_const: Optional[float] = None
    poles: Optional[Callable] = None  # z -> distance to the nearest pole
    pole_seeds: Optional[Callable] = None  # (im_max) -> list of pole locations
    single_passage: bool = True
    kernel_key: Optional[str] = None  # compiled integrator functions, if any
    kernel_prm: Optional[np.ndarray] = None  # parameter vector for them, if not the params


@dataclass(frozen=True, eq=False)
class SweepProfile:
    """Immutable (eps, gap) pair with its family metadata."""

    family: str
    params: Mapping[str, float]
    gap_kind: str
    analytic: bool
    analyticity_distance: float
    _model: _Model = field(repr=False, compare=False)

    @property
    def domain(self):
        return self._model.domain

    @property
    def time_const(self):
        return self._model.time_const

    @property
    def single_passage(self):
        return self._model.single_passage

    def bias(self, z):
        return eval_bias(self, z)

    def gap(self, z):
        return eval_gap(self, z)

    def dbias(self, z):
        z = self._check(z)
        return self._model.deps(z)

    def dgap(self, z):
        z = self._check(z)
        return self._model.dgap(z)

    def energy_squared(self, z):
        z = self._check(z)
        e = self._model.eps(z)
        g = self._model.gap(z)
        return e * e + g * g

    def scalar_functions(self):
        """Return (eps, gap, deps, dgap) as fast real scalar callables."""
        m = self._model
        return m.reps, m.rgap, m.rdeps, m.rdgap

    def _check(self, z):
        arr = np.asarray(z)
        if np.iscomplexobj(arr):
            if not self.analytic and np.any(arr.imag != 0):
                raise UnsupportedError(
                    f"family {self.family!r} is not analytic; complex evaluation refused"
                )
            if self._model.poles is not None:
                d = self._model.poles(arr)
                scale = self._model.time_const or 1.0
                if np.any(d < 1e-12 * scale):
                    raise SingularityError(f"evaluation at a pole of {self.family!r}")
        dom = self._model.domain
        if dom is not None:
            re = np.real(arr)
            if np.any(re <= dom[0]) or np.any(re >= dom[1]):
                raise ValidationError(
                    f"t outside the domain ({dom[0]:.6g}, {dom[1]:.6g}) of {self.family!r}"
                )
        return z


# ----------------------------------------------------------------- helpers

def _sech(z):
    z = np.asarray(z)
    s = np.where(np.real(z) >= 0, 1.0, -1.0)
    w = np.exp(-s * z)
    return 2.0 * w / (1.0 + w * w)


def _msech(x):
    w = math.exp(-abs(x))
    return 2.0 * w / (1.0 + w * w)


def _const(c):
    c = float(c)

    def f(z):
        z = np.asarray(z)
        return np.full(z.shape, c, dtype=z.dtype if np.iscomplexobj(z) else float)[()]

    return f


def _rconst(c):
    c = float(c)
    return lambda t: c


def _tanh_pole_distance(T):
    def d(z):
        w = np.asarray(z) / (1j * math.pi * T) - 0.5
        n = np.round(np.real(w))
        return np.abs(w - n) * math.pi * T

    return d


def _tanh_pole_seeds(T):
    def seeds(im_max):
        n = int(im_max / (math.pi * T)) + 1
        return [1j * math.pi * T * (k + 0.5) for k in range(n)]

    return seeds


def _need(params, name, cond, message):
    if not cond(params[name]):
        raise ValidationError(f"{name}={params[name]!r}: {message}")


def _positive(params, *names):
    for n in names:
        _need(params, n, lambda x: x > 0, "must be > 0")


def _nonneg(params, *names):
    for n in names:
        _need(params, n, lambda x: x >= 0, "must be >= 0")


# ----------------------------------------------------------------- families

def _linear(p):
    v, D = p["v"], p["Delta"]
    _need(p, "v", lambda x: x != 0, "sweep rate must be nonzero")
    _nonneg(p, "Delta")
    return _Model(
        eps=lambda z: v * np.asarray(z), deps=_const(v), gap=_const(D), dgap=_const(0.0),
        reps=lambda t: v * t, rdeps=_rconst(v), rgap=_rconst(D), rdgap=_rconst(0.0),
        crossing=(v, 0.0, 0.0, D, 0.0, 0.0),
    )


def _tanh_modulated(p):
    v0, al, T, D = p["v0"], p["alpha"], p["T"], p["Delta"]
    _positive(p, "v0", "T")
    _nonneg(p, "Delta")
    _need(p, "alpha", lambda x: abs(x) < 1, "|alpha| < 1 required so that the sweep rate keeps its sign")

    def eps(z):
        z = np.asarray(z)
        return v0 * z * (1 + al * np.tanh(z / T))

    def deps(z):
        z = np.asarray(z)
        return v0 * (1 + al * np.tanh(z / T)) + v0 * al * z * _sech(z / T) ** 2 / T

    def reps(t):
        return v0 * t * (1 + al * math.tanh(t / T))

    def rdeps(t):
        return v0 * (1 + al * math.tanh(t / T)) + v0 * al * t * _msech(t / T) ** 2 / T

    return _Model(
        eps=eps, deps=deps, gap=_const(D), dgap=_const(0.0),
        reps=reps, rdeps=rdeps, rgap=_rconst(D), rdgap=_rconst(0.0),
        crossing=(v0, 2 * v0 * al / T, 0.0, D, 0.0, 0.0),
        dist=math.pi * T / 2, time_const=T,
        poles=_tanh_pole_distance(T), pole_seeds=_tanh_pole_seeds(T),
    )


def _quadratic(p):
    v0, v1, D = p["v0"], p["v1"], p["Delta"]
    _positive(p, "v0")
    _nonneg(p, "Delta")
    return _Model(
        eps=lambda z: v0 * np.asarray(z) + v1 * np.asarray(z) ** 2,
        deps=lambda z: v0 + 2 * v1 * np.asarray(z),
        gap=_const(D), dgap=_const(0.0),
        reps=lambda t: v0 * t + v1 * t * t, rdeps=lambda t: v0 + 2 * v1 * t,
        rgap=_rconst(D), rdgap=_rconst(0.0),
        crossing=(v0, 2 * v1, 0.0, D, 0.0, 0.0),
        single_passage=(v1 == 0),
    )


def _parabolic(p):
    e0, al, D = p["eps0"], p["alpha"], p["Delta"]
    _need(p, "alpha", lambda x: x != 0, "curvature must be nonzero")
    _nonneg(p, "Delta")
    return _Model(
        eps=lambda z: e0 + al * np.asarray(z) ** 2, deps=lambda z: 2 * al * np.asarray(z),
        gap=_const(D), dgap=_const(0.0),
        reps=lambda t: e0 + al * t * t, rdeps=lambda t: 2 * al * t,
        rgap=_rconst(D), rdgap=_rconst(0.0),
        crossing=None, crossing_reason="the parabolic sweep has no crossing at t = 0",
        single_passage=False,
    )


def _cubic(p):
    v0, c3, D = p["v0"], p["chi3"], p["Delta"]
    _positive(p, "v0", "Delta")
    _need(p, "chi3", lambda x: x >= 0, "chi3 >= 0 required for a single monotone passage")
    k = c3 * v0 ** 3 / (6 * D * D)
    return _Model(
        eps=lambda z: v0 * np.asarray(z) + k * np.asarray(z) ** 3,
        deps=lambda z: v0 + 3 * k * np.asarray(z) ** 2,
        gap=_const(D), dgap=_const(0.0),
        reps=lambda t: v0 * t + k * t ** 3, rdeps=lambda t: v0 + 3 * k * t * t,
        rgap=_rconst(D), rdgap=_rconst(0.0),
        crossing=(v0, 0.0, 6 * k, D, 0.0, 0.0),
    )


def _superlinear(p):
    v, lam, D = p["v"], p["lam"], p["Delta"]
    _positive(p, "v", "lam")
    _nonneg(p, "Delta")

    def eps(z):
        z = np.asarray(z)
        return v * z * np.sqrt(1 + lam * z * z)

    def deps(z):
        z = np.asarray(z)
        return v * (1 + 2 * lam * z * z) / np.sqrt(1 + lam * z * z)

    return _Model(
        eps=eps, deps=deps, gap=_const(D), dgap=_const(0.0),
        reps=lambda t: v * t * math.sqrt(1 + lam * t * t),
        rdeps=lambda t: v * (1 + 2 * lam * t * t) / math.sqrt(1 + lam * t * t),
        rgap=_rconst(D), rdgap=_rconst(0.0),
        crossing=(v, 0.0, 3 * v * lam, D, 0.0, 0.0),
        dist=1 / math.sqrt(lam), time_const=1 / math.sqrt(lam),
    )


def _sublinear(p):
    v, lam, D = p["v"], p["lam"], p["Delta"]
    _positive(p, "v", "lam")
    _nonneg(p, "Delta")

    def eps(z):
        z = np.asarray(z)
        return v * z * (1 + 2 * lam * z * z) ** -0.25

    def deps(z):
        z = np.asarray(z)
        return v * (1 + lam * z * z) * (1 + 2 * lam * z * z) ** -1.25

    return _Model(
        eps=eps, deps=deps, gap=_const(D), dgap=_const(0.0),
        reps=lambda t: v * t * (1 + 2 * lam * t * t) ** -0.25,
        rdeps=lambda t: v * (1 + lam * t * t) * (1 + 2 * lam * t * t) ** -1.25,
        rgap=_rconst(D), rdgap=_rconst(0.0),
        crossing=(v, 0.0, -3 * v * lam, D, 0.0, 0.0),
        dist=1 / math.sqrt(2 * lam), time_const=1 / math.sqrt(2 * lam),
    )


def _sine(p):
    A, T, D = p["A"], p["T"], p["Delta"]
    _positive(p, "A", "T")
    _nonneg(p, "Delta")
    return _Model(
        eps=lambda z: A * np.sin(np.asarray(z) / T),
        deps=lambda z: A / T * np.cos(np.asarray(z) / T),
        gap=_const(D), dgap=_const(0.0),
        reps=lambda t: A * math.sin(t / T), rdeps=lambda t: A / T * math.cos(t / T),
        rgap=_rconst(D), rdgap=_rconst(0.0),
        crossing=(A / T, 0.0, -A / T ** 3, D, 0.0, 0.0),
        time_const=T, single_passage=False,
    )


def _sinh(p):
    A, T, D = p["A"], p["T"], p["Delta"]
    _positive(p, "A", "T")
    _nonneg(p, "Delta")
    return _Model(
        eps=lambda z: A * np.sinh(np.asarray(z) / T),
        deps=lambda z: A / T * np.cosh(np.asarray(z) / T),
        gap=_const(D), dgap=_const(0.0),
        reps=lambda t: A * math.sinh(t / T), rdeps=lambda t: A / T * math.cosh(t / T),
        rgap=_rconst(D), rdgap=_rconst(0.0),
        crossing=(A / T, 0.0, A / T ** 3, D, 0.0, 0.0),
        time_const=T,
    )


def _tanh(p):
    A, T, D = p["A"], p["T"], p["Delta"]
    _positive(p, "A", "T")
    _nonneg(p, "Delta")
    return _Model(
        eps=lambda z: A * np.tanh(np.asarray(z) / T),
        deps=lambda z: A / T * _sech(np.asarray(z) / T) ** 2,
        gap=_const(D), dgap=_const(0.0),
        reps=lambda t: A * math.tanh(t / T), rdeps=lambda t: A / T * _msech(t / T) ** 2,
        rgap=_rconst(D), rdgap=_rconst(0.0),
        crossing=(A / T, 0.0, -2 * A / T ** 3, D, 0.0, 0.0),
        dist=math.pi * T / 2, time_const=T,
        poles=_tanh_pole_distance(T), pole_seeds=_tanh_pole_seeds(T),
    )


def _demkov_kunike(p):
    A, B, T = p["A"], p["B"], p["T"]
    _positive(p, "T")
    _nonneg(p, "A", "B")

    def dgap(z):
        z = np.asarray(z)
        return -2 * A / T * _sech(z / T) * np.tanh(z / T)

    return _Model(
        eps=lambda z: 2 * B * np.tanh(np.asarray(z) / T),
        deps=lambda z: 2 * B / T * _sech(np.asarray(z) / T) ** 2,
        gap=lambda z: 2 * A * _sech(np.asarray(z) / T), dgap=dgap,
        reps=lambda t: 2 * B * math.tanh(t / T),
        rdeps=lambda t: 2 * B / T * _msech(t / T) ** 2,
        rgap=lambda t: 2 * A * _msech(t / T),
        rdgap=lambda t: -2 * A / T * _msech(t / T) * math.tanh(t / T),
        crossing=(2 * B / T, 0.0, -4 * B / T ** 3, 2 * A, 0.0, -2 * A / T ** 2),
        dist=math.pi * T / 2, time_const=T,
        poles=_tanh_pole_distance(T), pole_seeds=_tanh_pole_seeds(T),
    )


def _tangent(p):
    A, B, T = p["A"], p["B"], p["T"]
    _positive(p, "T", "B")
    _nonneg(p, "A")
    half = math.pi * T / 2

    def deps(z):
        c = np.cos(np.asarray(z) / T)
        return 2 * B / T / (c * c)

    def rdeps(t):
        c = math.cos(t / T)
        return 2 * B / T / (c * c)

    return _Model(
        eps=lambda z: 2 * B * np.tan(np.asarray(z) / T), deps=deps,
        gap=_const(2 * A), dgap=_const(0.0),
        reps=lambda t: 2 * B * math.tan(t / T), rdeps=rdeps,
        rgap=_rconst(2 * A), rdgap=_rconst(0.0),
        crossing=(2 * B / T, 0.0, 4 * B / T ** 3, 2 * A, 0.0, 0.0),
        domain=(-half, half), time_const=T,
    )


def _rosen_zener(p):
    a, b, T = p["a"], p["b"], p["T"]
    _positive(p, "T")
    _nonneg(p, "b")
    return _Model(
        eps=_const(2 * a), deps=_const(0.0),
        gap=lambda z: 2 * b * _sech(np.asarray(z) / T),
        dgap=lambda z: -2 * b / T * _sech(np.asarray(z) / T) * np.tanh(np.asarray(z) / T),
        reps=_rconst(2 * a), rdeps=_rconst(0.0),
        rgap=lambda t: 2 * b * _msech(t / T),
        rdgap=lambda t: -2 * b / T * _msech(t / T) * math.tanh(t / T),
        crossing=(0.0, 0.0, 0.0, 2 * b, 0.0, -2 * b / T ** 2),
        dist=math.pi * T / 2, time_const=T,
        poles=_tanh_pole_distance(T), pole_seeds=_tanh_pole_seeds(T),
    )


def _rotating(p):
    Om, om = p["Omega"], p["omega"]
    _positive(p, "Omega", "omega")
    if p.get("duration") is None or not math.isfinite(p["duration"]):
        p["duration"] = math.pi / om
    _positive(p, "duration")
    return _Model(
        eps=lambda z: Om * np.cos(om * np.asarray(z)),
        deps=lambda z: -Om * om * np.sin(om * np.asarray(z)),
        gap=lambda z: Om * np.sin(om * np.asarray(z)),
        dgap=lambda z: Om * om * np.cos(om * np.asarray(z)),
        reps=lambda t: Om * math.cos(om * t), rdeps=lambda t: -Om * om * math.sin(om * t),
        rgap=lambda t: Om * math.sin(om * t), rdgap=lambda t: Om * om * math.cos(om * t),
        crossing=(0.0, -Om * om * om, 0.0, 0.0, Om * om, 0.0),
        time_const=1 / om, single_passage=False,
    )


def _is_odd_integer(a):
    return float(a).is_integer() and int(a) % 2 == 1


def _power_law(p):
    A, a, T, D = p["A"], p["a"], p["T"], p["Delta"]
    _positive(p, "a", "T")
    _nonneg(p, "A", "Delta")
    odd = _is_odd_integer(a)

    def eps(z):
        z = np.asarray(z)
        if odd:
            return A * (z / T) ** int(a)
        return A * np.sign(np.real(z)) * np.abs(z / T) ** a

    def deps(z):
        z = np.asarray(z, dtype=complex if np.iscomplexobj(z) else float)
        if odd:
            return A * a / T * (z / T) ** (int(a) - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = a * A * np.abs(z / T) ** a / np.abs(z)
        return out

    def reps(t):
        return math.copysign(A * abs(t / T) ** a, t) if t != 0 else 0.0

    def rdeps(t):
        if t == 0:
            return math.inf if a < 1 else (A / T if a == 1 else 0.0)
        return a * A * abs(t / T) ** a / abs(t)

    if odd:
        crossing = (A / T if a == 1 else 0.0, 0.0, 6 * A / T ** 3 if a == 3 else 0.0, D, 0.0, 0.0)
        reason = ""
    else:
        crossing, reason = None, "power-law sweep is not differentiable at t = 0 for this exponent"
    return _Model(
        eps=eps, deps=deps, gap=_const(D), dgap=_const(0.0),
        reps=reps, rdeps=rdeps, rgap=_rconst(D), rdgap=_rconst(0.0),
        crossing=crossing, crossing_reason=reason, time_const=T,
    )


def _erf(p):
    A, s, T, D = p["A"], p["sigma"], p["T"], p["Delta"]
    _positive(p, "sigma", "T")
    _nonneg(p, "A", "Delta")
    c = 1 / (math.sqrt(2) * s * T)

    def eps(z):
        z = np.asarray(z)
        return A * special.erf(c * z)

    def deps(z):
        z = np.asarray(z)
        return A * 2 / SQRT_PI * c * np.exp(-(c * z) ** 2)

    return _Model(
        eps=eps, deps=deps, gap=_const(D), dgap=_const(0.0),
        reps=lambda t: A * math.erf(c * t),
        rdeps=lambda t: A * 2 / SQRT_PI * c * math.exp(-(c * t) ** 2),
        rgap=_rconst(D), rdgap=_rconst(0.0),
        crossing=(A * 2 * c / SQRT_PI, 0.0, -4 * A * c ** 3 / SQRT_PI, D, 0.0, 0.0),
        time_const=s * T,
    )


def _gaussian_gap(p):
    v, D0, T = p["v"], p["Delta0"], p["T"]
    _positive(p, "v", "Delta0", "T")

    def gap(z):
        z = np.asarray(z)
        return D0 * np.exp(-(z / T) ** 2)

    def dgap(z):
        z = np.asarray(z)
        return -2 * z / T ** 2 * D0 * np.exp(-(z / T) ** 2)

    return _Model(
        eps=lambda z: v * np.asarray(z), deps=_const(v), gap=gap, dgap=dgap,
        reps=lambda t: v * t, rdeps=_rconst(v),
        rgap=lambda t: D0 * math.exp(-(t / T) ** 2),
        rdgap=lambda t: -2 * t / T ** 2 * D0 * math.exp(-(t / T) ** 2),
        crossing=(v, 0.0, 0.0, D0, 0.0, -2 * D0 / T ** 2),
        time_const=T,
    )


def _tanh_gap(p):
    v, D0, al, T = p["v"], p["Delta0"], p["alpha"], p["T"]
    _positive(p, "v", "Delta0", "T")
    _need(p, "alpha", lambda x: abs(x) < 1, "|alpha| < 1 required so that the gap stays positive")
    return _Model(
        eps=lambda z: v * np.asarray(z), deps=_const(v),
        gap=lambda z: D0 * (1 + al * np.tanh(np.asarray(z) / T)),
        dgap=lambda z: D0 * al / T * _sech(np.asarray(z) / T) ** 2,
        reps=lambda t: v * t, rdeps=_rconst(v),
        rgap=lambda t: D0 * (1 + al * math.tanh(t / T)),
        rdgap=lambda t: D0 * al / T * _msech(t / T) ** 2,
        crossing=(v, 0.0, 0.0, D0, D0 * al / T, 0.0),
        dist=math.pi * T / 2, time_const=T,
        poles=_tanh_pole_distance(T), pole_seeds=_tanh_pole_seeds(T),
    )


def _power_gap(p):
    v, d0, a, T = p["v"], p["d0"], p["a"], p["T"]
    _positive(p, "v", "d0", "a", "T")

    def gap(z):
        return d0 * np.abs(np.asarray(z) / T) ** a

    def dgap(z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return a * d0 * np.sign(z) * np.abs(z / T) ** a / np.abs(z)

    def rdgap(t):
        if t == 0:
            return 0.0 if a > 1 else math.inf
        return math.copysign(a * d0 * abs(t / T) ** a / abs(t), t)

    return _Model(
        eps=lambda z: v * np.asarray(z), deps=_const(v), gap=gap, dgap=dgap,
        reps=lambda t: v * t, rdeps=_rconst(v),
        rgap=lambda t: d0 * abs(t / T) ** a, rdgap=rdgap,
        crossing=None, crossing_reason="power-law gap vanishes and is not differentiable at t = 0",
        time_const=T,
    )


# name -> (builder, ordered params with defaults (None = required), gap kind, analytic flag)
_REGISTRY = {
    "linear": (_linear, {"v": None, "Delta": 1.0}, "constant", True),
    "tanh_modulated": (_tanh_modulated, {"v0": None, "alpha": None, "T": None, "Delta": 1.0}, "constant", True),
    "quadratic": (_quadratic, {"v0": None, "v1": None, "Delta": 1.0}, "constant", True),
    "parabolic": (_parabolic, {"eps0": 0.0, "alpha": None, "Delta": 1.0}, "constant", True),
    "cubic": (_cubic, {"v0": None, "chi3": None, "Delta": 1.0}, "constant", True),
    "superlinear": (_superlinear, {"v": None, "lam": None, "Delta": 1.0}, "constant", True),
    "sublinear": (_sublinear, {"v": None, "lam": None, "Delta": 1.0}, "constant", True),
    "sine": (_sine, {"A": None, "T": None, "Delta": 1.0}, "constant", True),
    "sinh": (_sinh, {"A": None, "T": None, "Delta": 1.0}, "constant", True),
    "tanh": (_tanh, {"A": None, "T": None, "Delta": 1.0}, "constant", True),
    "demkov_kunike": (_demkov_kunike, {"A": None, "B": None, "T": 1.0}, "time-dependent", True),
    "tangent": (_tangent, {"A": None, "B": None, "T": 1.0}, "constant", True),
    "rosen_zener": (_rosen_zener, {"a": None, "b": None, "T": 1.0}, "time-dependent", True),
    "rotating": (_rotating, {"Omega": 1.0, "omega": None, "duration": math.nan}, "time-dependent", True),
    "power_law": (_power_law, {"A": None, "a": None, "T": 1.0, "Delta": 1.0}, "constant", None),
    "erf": (_erf, {"A": None, "sigma": None, "T": 1.0, "Delta": 1.0}, "constant", True),
    "gaussian_gap": (_gaussian_gap, {"v": None, "Delta0": 1.0, "T": None}, "time-dependent", True),
    "tanh_gap": (_tanh_gap, {"v": None, "Delta0": 1.0, "alpha": None, "T": None}, "time-dependent", True),
    "power_gap": (_power_gap, {"v": None, "d0": 1.0, "a": None, "T": 1.0}, "time-dependent", False),
}


def families():
    """Names of the registered families."""
    return sorted(_REGISTRY)


def family_parameters(family):
    """Parameter names (with defaults, None meaning required) of a family."""
    return dict(_REGISTRY[_normalize(family)][1])


def _normalize(name):
    key = str(name).strip().lower().replace("-", "_")
    if key not in _REGISTRY:
        raise UnknownFamilyError(f"unknown family {name!r}; known: {', '.join(families())}")
    return key


def make_profile(family, params=None, **kwargs):
    """Validate parameters and build an immutable :class:`SweepProfile`."""
    key = _normalize(family)
    builder, schema, gap_kind, analytic = _REGISTRY[key]
    given = dict(params or {})
    given.update(kwargs)
    unknown = set(given) - set(schema)
    if unknown:
        raise ValidationError(f"unknown parameter(s) for {key}: {', '.join(sorted(unknown))}")
    record = {}
    for name, default in schema.items():
        if name in given:
            try:
                record[name] = float(given[name])
            except (TypeError, ValueError):
                raise ValidationError(f"{name}={given[name]!r}: not a number") from None
        elif default is None:
            raise ValidationError(f"missing required parameter {name!r} for {key}")
        else:
            record[name] = float(default)
    for name, val in record.items():
        if math.isnan(val) and not (key == "rotating" and name == "duration"):
            raise ValidationError(f"{name}: NaN is not allowed")
    model = replace(builder(record), kernel_key=key)
    if analytic is None:
        analytic = _is_odd_integer(record["a"])
    dist = model.dist if analytic else math.nan
    return SweepProfile(
        family=key, params=MappingProxyType(record), gap_kind=gap_kind,
        analytic=analytic, analyticity_distance=dist, _model=model,
    )


def custom_profile(name, eps, gap, deps, dgap, crossing=None, time_const=None,
                   params=None, single_passage=True):
    """Real-axis-only profile from scalar callables (used for transformed problems)."""

    def vec(f):
        def g(z):
            z = np.asarray(z, dtype=float)
            if z.ndim == 0:
                return f(float(z))
            return np.array([f(float(x)) for x in z.ravel()]).reshape(z.shape)

        return g

    model = _Model(
        eps=vec(eps), deps=vec(deps), gap=vec(gap), dgap=vec(dgap),
        reps=eps, rdeps=deps, rgap=gap, rdgap=dgap,
        crossing=crossing, crossing_reason="no crossing metadata for this profile",
        time_const=time_const, single_passage=single_passage,
    )
    return SweepProfile(
        family=name, params=MappingProxyType(dict(params or {})), gap_kind="constant",
        analytic=False, analyticity_distance=math.nan, _model=model,
    )


# ----------------------------------------------------------------- operations

def eval_bias(p, z):
    """eps(z); complex z only for analytic families."""
    z = p._check(z)
    return p._model.eps(z)


def eval_gap(p, z):
    """Delta(z); complex z only for analytic families."""
    z = p._check(z)
    return p._model.gap(z)


def quasi_energy(p, z):
    """sqrt(eps^2 + Delta^2), principal branch (positive on the real axis)."""
    return np.sqrt(p.energy_squared(z))


def crossing_derivatives(p):
    """Exact derivatives of eps and Delta at t = 0."""
    c = p._model.crossing
    if c is None:
        raise UnsupportedError(p._model.crossing_reason or "no crossing data")
    v0, e2, e3, g0, g1, g2 = c
    delta = g0 * g0 / (4 * v0) if v0 > 0 else math.nan
    return CrossingData(v0, e2, e3, g0, g1, g2, delta)


def nonlinearity_params(p):
    """(chi2, chi3) = (Delta*eps''/v0^2, Delta^2*eps'''/v0^3) at the crossing."""
    c = crossing_derivatives(p)
    if not c.v0 > 0:
        raise UnsupportedError("v0 = 0: essential nonlinearity, chi parameters undefined")
    return c.gap0 * c.eps2 / c.v0 ** 2, c.gap0 ** 2 * c.eps3 / c.v0 ** 3


def crossing_duration(v, gap):
    """Duration of the crossing process, (1/sqrt v) * max(1, gap/(2 sqrt v))."""
    if not v > 0:
        raise ValidationError("sweep rate must be > 0")
    if gap < 0:
        raise ValidationError("gap must be >= 0")
    s = math.sqrt(v)
    return max(1.0, gap / (2 * s)) / s
