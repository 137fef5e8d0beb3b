"""Closed-form and perturbative transition probabilities.

All functions are pure scalar maps.  Perturbative formulas do not refuse
inputs outside their regime of validity; :func:`validity_advisory` reports
when |chi2| or |chi3| is too large for them to be trusted.
"""

import math
from dataclasses import dataclass

from scipy.integrate import quad

from .errors import DomainError, MultiplicityError

ADVISORY_LIMIT = 0.3


@dataclass(frozen=True)
class PerturbativeInput:
    """Adiabaticity parameter and nonlinearity parameters at the crossing."""

    delta: float
    chi2: float = 0.0
    chi3: float = 0.0

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError("delta must be > 0")

    @property
    def advisory(self):
        return validity_advisory(self.chi2, self.chi3)


def validity_advisory(chi2=0.0, chi3=0.0):
    """Messages for nonlinearity parameters outside the perturbative regime."""
    out = []
    if abs(chi2) >= ADVISORY_LIMIT:
        out.append(f"|chi2| = {abs(chi2):.3g} >= {ADVISORY_LIMIT}: quadratic correction unreliable")
    if abs(chi3) >= ADVISORY_LIMIT:
        out.append(f"|chi3| = {abs(chi3):.3g} >= {ADVISORY_LIMIT}: cubic correction unreliable")
    return tuple(out)


def _exp(x):
    # far outside their regime the corrected exponents can turn large and positive
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _delta_ok(delta):
    if not delta >= 0:
        raise DomainError("delta must be >= 0")


def lzsm(delta):
    """exp(-2 pi delta)."""
    _delta_ok(delta)
    return math.exp(-2 * math.pi * delta)


def quadratic_corrected(delta, chi2):
    """exp{-2 pi delta (1 - 3 chi2^2 / 8)}."""
    _delta_ok(delta)
    return _exp(-2 * math.pi * delta * (1 - 3 * chi2 ** 2 / 8))


def quadratic_corrected_alt(delta, chi2):
    """P_LZSM (1 + 3 pi delta chi2^2 / 4)."""
    return lzsm(delta) * (1 + 0.75 * math.pi * delta * chi2 ** 2)


def quadratic_alt_peak(ratio, Delta=1.0):
    """Location v0 and height of the maximum of the alternative correction.

    At fixed ratio = v1/(v0 Delta) the excess over P_LZSM peaks at
    v0/Delta^2 = pi/6 with height (27 e^-3 / pi) v1^2 / v0^3.
    """
    v0 = math.pi / 6 * Delta ** 2
    v1 = ratio * v0 * Delta
    return v0, 27 * math.exp(-3) / math.pi * v1 ** 2 / v0 ** 3


def cubic_corrected(delta, chi3, linearized=False):
    """exp{-2 pi delta (1 + chi3/8)}, or P_LZSM (1 - pi delta chi3 / 4) if linearized."""
    if linearized:
        return lzsm(delta) * (1 - math.pi * delta * chi3 / 4)
    _delta_ok(delta)
    return _exp(-2 * math.pi * delta * (1 + chi3 / 8))


def unified_corrected(delta, chi2, chi3):
    """exp{-2 pi delta (1 - 3 chi2^2/8 + chi3/8)}."""
    _delta_ok(delta)
    return _exp(-2 * math.pi * delta * (1 - 3 * chi2 ** 2 / 8 + chi3 / 8))


def variable_gap_corrected(delta, gap_slope_over_v):
    """exp{-2 pi delta (1 - 3 s^2 / 2)} with s = Delta'/v at the crossing."""
    _delta_ok(delta)
    return _exp(-2 * math.pi * delta * (1 - 1.5 * gap_slope_over_v ** 2))


def _sech2(x):
    x = abs(x)
    w = math.exp(-2 * x)
    return 4 * w / (1 + w) ** 2


def demkov_kunike(A, B, T):
    """cosh^2(pi sqrt(B^2 - A^2) T) / cosh^2(pi B T); cos replaces cosh when A > B."""
    if min(A, B, T) < 0:
        raise DomainError("A, B and T must be >= 0")
    s = B * B - A * A
    if s >= 0:
        x = math.pi * math.sqrt(s) * T
        y = math.pi * B * T
        # cosh^2(x)/cosh^2(y) with x <= y, evaluated without overflow
        return math.exp(2 * (x - y)) * ((1 + math.exp(-2 * x)) / (1 + math.exp(-2 * y))) ** 2
    return math.cos(math.pi * math.sqrt(-s) * T) ** 2 * _sech2(math.pi * B * T)


def rosen_zener(a, b, T):
    """1 - sin^2(pi b T) / cosh^2(pi a T)."""
    if T < 0:
        raise DomainError("T must be >= 0")
    return 1 - math.sin(math.pi * b * T) ** 2 * _sech2(math.pi * a * T)


def rotating_field(x, theta):
    """(1/2) x^2/(1+x^2) (1 - cos theta), theta = sqrt(Omega^2 + omega^2) t, x = omega/Omega."""
    if x < 0:
        raise DomainError("x must be >= 0")
    return 0.5 * x * x / (1 + x * x) * (1 - math.cos(theta))


def rotating_field_half_turn(x):
    """Probability after a half turn, t = pi/omega."""
    if x < 0:
        raise DomainError("x must be >= 0")
    if x * x == 0.0:  # the prefactor x^2 underflows before the phase is representable
        return 0.0
    return rotating_field(x, math.hypot(1.0, x) / x * math.pi)


def square_pulse_limit(A, Delta):
    """A^2 / (Delta^2 + A^2)."""
    if A == 0:
        return 0.0
    return A * A / (Delta * Delta + A * A)


def _ju(y, xi):
    c = math.cos(y)
    u1 = (2 * xi * xi - 1) * c * c
    u2 = xi * math.sqrt(xi * xi - 1) * math.sin(2 * y)
    m = math.hypot(u1, u2)
    j = math.sqrt(max(u1 + m, 0.0) / 2)
    r = math.copysign(math.sqrt(max(m - u1, 0.0) / 2), u2)
    return j, r


def sinh_large_xi_action(A, T, Delta):
    """D(t_c^+) for eps = A sinh(t/T) when xi = Delta/A > 1.

    Real axis from 0 to T arccosh(xi), then vertically to Im t = pi T / 2,
    where E / A = j + i r = sqrt(u1 + i u2) on the principal branch with
    u1 = (2 xi^2 - 1) cos^2 y and u2 = xi sqrt(xi^2 - 1) sin 2y.
    """
    if not (A > 0 and T > 0 and Delta > 0):
        raise DomainError("A, T and Delta must be > 0")
    xi = Delta / A
    if abs(xi - 1) <= 1e-12:
        raise MultiplicityError("xi = 1: the transition points are double zeros")
    if xi < 1:
        raise DomainError("xi = Delta/A must exceed 1; use the standard DDP route for xi < 1")
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400)
    x_end = math.acosh(xi)
    real = quad(lambda x: math.sqrt(xi * xi + math.sinh(x) ** 2), 0.0, x_end, **opts)[0]
    jint = quad(lambda y: _ju(y, xi)[0], 0.0, math.pi / 2, **opts)[0]
    rint = quad(lambda y: _ju(y, xi)[1], 0.0, math.pi / 2, **opts)[0]
    return complex(A * T * (real - rint), A * T * jint)


def sinh_large_xi(A, T, Delta):
    """2 exp(-2 Im D) (1 + cos 2 Re D) from the two lowest transition points."""
    D = sinh_large_xi_action(A, T, Delta)
    return 2 * math.exp(-2 * D.imag) * (1 + math.cos(2 * D.real))
