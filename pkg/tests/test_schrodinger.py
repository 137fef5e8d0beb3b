import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsweep import closed_form as cf
from nlsweep import schrodinger as sch
from nlsweep.errors import ValidationError, WindowError
from nlsweep.sweep_catalog import custom_profile, make_profile


def test_zero_gap_keeps_population():
    p = make_profile("linear", v=1.3, Delta=0.0)
    ev = sch.evolve(p, -5.0, 5.0, (1, 0))
    assert abs(ev.state.amp_up) ** 2 == pytest.approx(1.0, abs=1e-9)
    assert ev.state.amp_down == 0
    r = sch.diabatic_persistence_probability(p)
    assert r.probability == 1.0 and r.converged


def test_linear_lzsm():
    p = make_profile("linear", v=1.0)
    r = sch.diabatic_persistence_probability(p)
    assert r.probability == pytest.approx(math.exp(-math.pi / 2), abs=1e-3)
    assert r.converged and r.residual < 1e-6
    assert 0 <= r.probability <= 1
    W, diag = sch.converge_window(p, tol=1e-6)
    assert diag["residual"] < 1e-6 and W > 0


def test_demkov_kunike_fixed_window():
    A, B, T = 0.5, 1.0, 1.0
    p = make_profile("demkov_kunike", A=A, B=B, T=T)
    ev = sch.evolve(p, -40 * T, 40 * T, (1, 0))
    assert abs(ev.state.amp_up) ** 2 == pytest.approx(cf.demkov_kunike(A, B, T), abs=1e-6)


def test_alpha_sign_symmetry():
    a = sch.diabatic_persistence_probability(make_profile("tanh_modulated", v0=1, alpha=0.5, T=10))
    b = sch.diabatic_persistence_probability(make_profile("tanh_modulated", v0=1, alpha=-0.5, T=10))
    assert a.probability == pytest.approx(b.probability, abs=1e-6)


def test_square_pulse_power_law():
    r = sch.diabatic_persistence_probability(make_profile("power_law", A=1, a=1e-3))
    assert r.probability == pytest.approx(0.5, abs=1e-2)


def test_rotating_field_values():
    p = make_profile("rotating", Omega=1.0, omega=1.0)
    assert sch.adiabatic_transition_probability(p, 0.0, 0.0).probability == 0.0
    r = sch.adiabatic_transition_probability(p, 0.0, math.pi)
    assert r.probability == pytest.approx(0.25 * (1 - math.cos(math.sqrt(2) * math.pi)), abs=1e-8)
    q = make_profile("rotating", Omega=1.0, omega=0.01)
    assert sch.adiabatic_transition_probability(q, 0.0, math.pi / 0.01).probability < 1e-3


def test_linear_monotone_in_rate():
    ps = [sch.diabatic_persistence_probability(make_profile("linear", v=v)).probability
          for v in (0.1, 0.3, 1.0, 3.0, 10.0)]
    assert all(a < b for a, b in zip(ps, ps[1:]))


def test_parabolic_double_passage_converges():
    p = make_profile("parabolic", alpha=1.0)
    r = sch.transition_probability(p)
    assert r.converged and r.residual < 1e-6
    assert 0 <= r.probability <= 1


def test_non_asymptotic_profile_fails():
    # the bias oscillates forever, so the persistence never settles
    p = custom_profile("wobble", eps=lambda t: math.sin(t), gap=lambda t: 1.0,
                       deps=lambda t: math.cos(t), dgap=lambda t: 0.0, time_const=1.0)
    with pytest.raises(WindowError):
        sch.converge_window(p, max_doublings=3)


def test_evolve_validation():
    p = make_profile("linear", v=1.0)
    with pytest.raises(ValidationError):
        sch.evolve(p, 0.0, 1.0, (1, 0), rtol=1e-3)
    with pytest.raises(ValidationError):
        sch.evolve(p, 0.0, 0.0, (1, 0))
    with pytest.raises(ValidationError):
        sch.evolve(p, 0.0, 1.0, (1, 1))


def test_trajectory_sampling():
    p = make_profile("linear", v=1.0)
    ev = sch.evolve(p, -3.0, 3.0, sch.TwoLevelState(1, 0, -3.0), trajectory=True)
    assert ev.times[0] == -3.0 and ev.times[-1] == pytest.approx(3.0)
    norms = np.sum(np.abs(ev.amplitudes) ** 2, axis=1)
    assert np.max(np.abs(norms - 1)) <= 1e-9


def test_transition_result_invariants():
    r = sch.transition_probability(make_profile("tanh", A=3, T=2))
    assert 0 <= r.probability <= 1
    assert r.converged and r.residual < 1e-6
    assert r.method == "integrator"


PROFILES = [
    ("linear", dict(v=1.0)),
    ("tanh_modulated", dict(v0=1.0, alpha=0.5, T=2.0)),
    ("sine", dict(A=2.0, T=1.0)),
    ("rosen_zener", dict(a=0.3, b=1.0)),
    ("tanh_gap", dict(v=1.0, alpha=0.5, T=2.0)),
]


@pytest.mark.parametrize("family, params", PROFILES)
@settings(max_examples=10, deadline=None)
@given(t0=st.floats(-8, -1), span=st.floats(0.5, 12), phase=st.floats(0, 2 * math.pi),
       mix=st.floats(0, 1))
def test_norm_conservation(family, params, t0, span, phase, mix):
    p = make_profile(family, params)
    psi = (math.sqrt(1 - mix), math.sqrt(mix) * complex(math.cos(phase), math.sin(phase)))
    ev = sch.evolve(p, t0, t0 + span, psi, rtol=1e-10)
    assert ev.norm_defect <= 1e-9
    assert abs(ev.state.norm - 1) <= 1e-9


@pytest.mark.parametrize("family, params", PROFILES)
@settings(max_examples=10, deadline=None)
@given(t0=st.floats(-6, 0), span=st.floats(0.5, 8))
def test_time_reversal(family, params, t0, span):
    p = make_profile(family, params)
    rtol = 1e-10
    fwd = sch.evolve(p, t0, t0 + span, (1, 0), rtol=rtol)
    back = sch.evolve(p, t0 + span, t0, fwd.state, rtol=rtol)
    err = np.abs(back.state.as_array() - np.array([1, 0]))
    assert np.max(err) <= 10 * rtol * max(1.0, span)
