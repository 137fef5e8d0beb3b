"""Acceptance criteria 1-13, each recorded as one PASS/FAIL line in the summary.

Criteria that the implementation faithfully fails are strict xfails; their
outcome is still recorded so the summary shows FAIL.
"""

import math

import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar

import fig7_data
from nlsweep import closed_form as cf
from nlsweep import ddp
from nlsweep import gap_transform as gt
from nlsweep.schrodinger import adiabatic_transition_probability, transition_probability
from nlsweep.sweep_catalog import make_profile, nonlinearity_params


def P(family, **params):
    return transition_probability(make_profile(family, params)).probability


def rel(a, b):
    return abs(a - b) / abs(b)


def test_c1_linear(record):
    vs = np.geomspace(0.05, 20, 40)
    err = max(abs(P("linear", v=v) - cf.lzsm(1 / (4 * v))) for v in vs)
    record(1, err <= 1e-3, f"max |dP| = {err:.2e}")
    assert err <= 1e-3


@pytest.mark.parametrize("family, closed, grid", [
    ("demkov_kunike", lambda x: cf.demkov_kunike(x, 1.0, 1.0), [dict(A=a, B=1.0) for a in np.linspace(0.2, 3, 10)]),
    ("tangent", lambda x: cf.demkov_kunike(x, 1.0, 1.0), [dict(A=a, B=1.0) for a in np.linspace(0.2, 3, 10)]),
    ("rosen_zener", lambda x: cf.rosen_zener(x, 0.5, 1.0), [dict(a=a, b=0.5) for a in np.linspace(0.1, 2, 10)]),
])
def test_c2_exact_models(record, family, closed, grid):
    err = max(abs(P(family, **g) - closed(next(iter(g.values())))) for g in grid)
    record(2, err <= 1e-6, f"{family} {err:.1e}")
    assert err <= 1e-6


def test_c3_rotating_field(record):
    err = 0.0
    for x in (0.1, 0.5, 1.0, 2.0, 10.0):
        p = make_profile("rotating", Omega=1.0, omega=x)
        for t in np.linspace(0, 2 * math.pi / x, 21)[1:]:
            got = adiabatic_transition_probability(p, 0.0, t).probability
            err = max(err, abs(got - cf.rotating_field(x, math.hypot(1.0, x) * t)))
    half = max(
        abs(adiabatic_transition_probability(make_profile("rotating", Omega=1.0, omega=x), 0.0, math.pi / x)
            .probability - cf.rotating_field_half_turn(x))
        for x in np.geomspace(0.05, 20, 12)
    )
    h1 = cf.rotating_field_half_turn(1.0)
    ok = err <= 1e-8 and half <= 1e-8 and abs(h1 - 0.31688) <= 1e-3
    record(3, ok, f"{err:.1e}, half-turn {half:.1e}, P(x=1) = {h1:.6f}")
    assert ok


def _quadratic_dp(v0, alpha, T):
    p = make_profile("tanh_modulated", v0=v0, alpha=alpha, T=T)
    delta = 1 / (4 * v0)
    chi2, _ = nonlinearity_params(p)
    lz = cf.lzsm(delta)
    return transition_probability(p).probability - lz, cf.quadratic_corrected(delta, chi2) - lz


def test_c4_quadratic_perturbation(record):
    worst = max(rel(eq, num) for num, eq in (_quadratic_dp(v0, 0.5, 10.0) for v0 in np.geomspace(0.3, 3, 6)))
    ratio = 0.05

    def excess(v0):
        delta, chi2 = 1 / (4 * v0), 2 * ratio / v0
        return cf.quadratic_corrected_alt(delta, chi2) - cf.lzsm(delta)

    r = minimize_scalar(lambda v: -excess(v), bracket=(0.2, 0.5, 1.5), method="golden", tol=1e-10)
    v1 = ratio * math.pi / 6
    peak_ok = (abs(r.x - math.pi / 6) <= 1e-4
               and rel(excess(math.pi / 6), 27 * math.exp(-3) / math.pi * v1 ** 2 / (math.pi / 6) ** 3) <= 1e-6)
    num, eq = _quadratic_dp(0.05, 0.5, 10.0)
    breakdown = rel(eq, num)
    ok = worst <= 0.15 and peak_ok and breakdown > 0.5
    record(4, ok, f"max rel {worst:.3f}, peak at {r.x:.6f}, breakdown rel {breakdown:.1e}")
    assert ok


def test_c5_quadratic_sign_reversal(record):
    dps = [_quadratic_dp(v0, 0.5, 10.0 / v0) for v0 in np.geomspace(2, 30, 8)]
    num = [d[0] for d in dps]
    ok = max(num) > 1e-6 and min(num) < -1e-6 and all(d[1] > 0 for d in dps)
    record(5, ok, f"integrator dP from {max(num):.2e} to {min(num):.2e}, Eq. positive")
    assert ok


@pytest.mark.xfail(strict=True, reason="the cubic correction overshoots by up to 19% in this regime")
def test_c6_cubic_perturbation(record):
    worst = 0.0
    for v0 in np.geomspace(0.3, 10, 6):
        chi3 = 0.1 / v0 ** 2
        lz = cf.lzsm(1 / (4 * v0))
        num = P("cubic", v0=v0, chi3=chi3) - lz
        eq = cf.cubic_corrected(1 / (4 * v0), chi3) - lz
        worst = max(worst, rel(eq, num))
    record(6, worst <= 0.15, f"max rel {worst:.3f}")
    assert worst <= 0.15


@pytest.mark.xfail(strict=True, reason="five zeros leave a 0.09 error at intermediate rates")
def test_c7_five_zero_accuracy(record):
    err = np.max(np.abs(fig7_data.generalized(5) - fig7_data.integrator()))
    record(7, err <= 0.02, f"5-zero max |dP| = {err:.3f}")
    assert err <= 0.02


def test_c7_two_zero_exceeds_one(record):
    ps = [ddp.generalized_probability(fig7_data.profile(v), 2).probability for v in (30, 60, 100, 200)]
    record(7, max(ps) > 1, f"2-zero max P = {max(ps):.3f}")
    assert max(ps) > 1


def test_c7_one_zero_worse(record):
    num = fig7_data.integrator()
    e1 = np.max(np.abs(fig7_data.generalized(1) - num))
    e5 = np.max(np.abs(fig7_data.generalized(5) - num))
    record(7, e1 > e5, f"1-zero {e1:.3f} > 5-zero {e5:.3f}")
    assert e1 > e5


@pytest.mark.parametrize("family, params", [("power_law", dict(a=1e-3)), ("erf", dict(sigma=1e-3))])
def test_c8_square_pulse(record, family, params):
    err = max(abs(P(family, A=A, **params) - cf.square_pulse_limit(A, 1.0)) for A in np.linspace(0, 5, 30))
    record(8, err <= 1e-2, f"{family} {err:.1e}")
    assert err <= 1e-2


@pytest.mark.parametrize("family, params, target", [
    ("tanh_gap", dict(alpha=0.5, T=10.0), None),
    ("gaussian_gap", dict(T=5.0), None),
    ("power_gap", dict(a=0.5), 1.0),
])
def test_c9_gap_transform(record, family, params, target):
    err = 0.0
    for v in np.geomspace(0.5, 2, 5):
        p = make_profile(family, v=v, **params)
        q = gt.equivalent_profile(p, target_gap=target)
        err = max(err, abs(transition_probability(p).probability - transition_probability(q).probability))
    record(9, err <= 1e-4, f"{family} {err:.1e}")
    assert err <= 1e-4


def test_c9_algebraic_identity(record):
    worst = 0.0
    for s in np.linspace(-0.3, 0.3, 13):
        for v in (0.2, 1.0, 5.0):
            if s == 0:
                continue
            alpha = math.copysign(0.5, s)
            p = make_profile("tanh_gap", v=v, alpha=alpha, T=abs(alpha / (s * v)))
            chi2, chi3 = gt.equivalent_nonlinearity(p)
            delta = 1 / (4 * v)
            worst = max(worst, rel(cf.unified_corrected(delta, chi2, chi3), cf.variable_gap_corrected(delta, s)))
    record(9, worst <= 1e-13, f"identity {worst:.1e}")
    assert worst <= 1e-13


def test_c10_variable_gap(record):
    worst = 0.0
    for v in np.geomspace(0.2, 3, 7):
        lz = cf.lzsm(1 / (4 * v))
        num = P("tanh_gap", v=v, Delta0=1.0, alpha=0.5, T=10.0) - lz
        eq = cf.variable_gap_corrected(1 / (4 * v), 0.05 / v) - lz
        worst = max(worst, rel(eq, num))
    record(10, worst <= 0.15, f"max rel {worst:.3f}")
    assert worst <= 0.15


def test_c11_odd_sweeps(record):
    xi = math.sqrt(0.02)
    A = 1 / xi
    worst = 0.0
    for family, chi3 in (("sine", -xi ** 2), ("sinh", xi ** 2), ("tanh", -2 * xi ** 2)):
        for v0 in (0.25, 0.5, 1.0, 2.0, 4.0):
            delta = 1 / (4 * v0)
            lz = cf.lzsm(delta)
            got = ddp.standard_probability(make_profile(family, A=A, T=A / v0)).probability - lz
            worst = max(worst, rel(got, cf.cubic_corrected(delta, chi3) - lz))
    record(11, worst <= 0.05, f"max rel {worst:.4f}")
    assert worst <= 0.05


def test_c12_double_passage(record):
    v0 = 5.0

    def phase(v1):
        return ddp.double_passage_phase(v0, v1, 1.0)

    # bracket a crossing of phi = pi (mod 2 pi): sin changes sign while cos < 0
    vs = np.geomspace(0.5, 50, 400)
    k = next(i for i in range(len(vs) - 1)
             if math.sin(phase(vs[i])) * math.sin(phase(vs[i + 1])) < 0
             and math.cos(phase(vs[i])) < 0 and math.cos(phase(vs[i + 1])) < 0)
    v1 = brentq(lambda v: math.sin(phase(v)), vs[k], vs[k + 1], xtol=1e-14)
    fast = ddp.double_passage_probability(v0, v1, 1.0)
    engineered = math.cos(fast.phase) < -0.99 and fast.probability > 1 and fast.unreliable
    worst = 0.0
    for v0 in (0.1, 0.125, 0.15, 0.175, 0.2):
        v1 = 0.05 * v0 ** 2
        est = ddp.double_passage_probability(v0, v1, 1.0).probability
        worst = max(worst, rel(est, P("quadratic", v0=v0, v1=v1)))
    ok = engineered and worst <= 0.2
    record(12, ok, f"P(phi=pi) = {fast.probability:.2f}, max rel {worst:.3f} for delta >= 1.25")
    assert ok


def test_c13_sinh_large_xi(record):
    err = max(
        abs(cf.sinh_large_xi(1.0, 1.0, xi)
            - ddp.generalized_probability(make_profile("sinh", A=1.0, T=1.0, Delta=xi), 2).probability)
        for xi in (1.5, 2.0, 3.0)
    )
    record(13, err <= 1e-6, f"max |dP| = {err:.1e}")
    assert err <= 1e-6
