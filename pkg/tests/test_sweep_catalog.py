import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsweep import sweep_catalog as sc
from nlsweep.errors import SingularityError, UnknownFamilyError, UnsupportedError, ValidationError


def test_linear_bias():
    p = sc.make_profile("linear", v=2.0)
    assert sc.eval_bias(p, 3.0) == pytest.approx(6.0)


@pytest.mark.parametrize("family, params", [
    ("tanh_modulated", dict(v0=1, alpha=1.2, T=1)),
    ("power_law", dict(A=1, a=0)),
    ("linear", dict(v=0)),
    ("linear", dict(v=1, Delta=-1)),
])
def test_invalid_parameters(family, params):
    with pytest.raises(ValidationError):
        sc.make_profile(family, params)


def test_unknown_family_and_parameter():
    with pytest.raises(UnknownFamilyError):
        sc.make_profile("nope", v=1)
    with pytest.raises(ValidationError):
        sc.make_profile("linear", v=1, bogus=2)
    with pytest.raises(ValidationError):
        sc.make_profile("linear")


def test_sine_on_imaginary_axis():
    p = sc.make_profile("sine", A=1, T=1)
    assert sc.eval_bias(p, 1j * math.pi / 2) == pytest.approx(1j * math.sinh(math.pi / 2), rel=1e-14)
    assert abs(sc.eval_bias(p, 1j * math.pi / 2) - 2.3013j) < 1e-4


def test_gaussian_gap_and_dk_gap():
    g = sc.make_profile("gaussian_gap", v=1, Delta0=1, T=0.5)
    assert sc.eval_gap(g, 0.5) == pytest.approx(math.exp(-1), rel=1e-14)
    dk = sc.make_profile("demkov_kunike", A=1, B=1, T=1)
    assert sc.eval_gap(dk, 0.0) == pytest.approx(2.0)


def test_quasi_energy():
    p = sc.make_profile("linear", v=1)
    assert sc.quasi_energy(p, 0.0) == pytest.approx(1.0)
    assert abs(sc.quasi_energy(p, 1j)) < 1e-15
    q = sc.make_profile("linear", v=1, Delta=2)
    assert sc.quasi_energy(q, 3.0) == pytest.approx(math.sqrt(13))


def test_crossing_derivatives():
    c = sc.crossing_derivatives(sc.make_profile("tanh_modulated", v0=1, alpha=0.5, T=10))
    assert c.v0 == pytest.approx(1.0)
    assert c.eps2 == pytest.approx(0.1)
    c = sc.crossing_derivatives(sc.make_profile("sinh", A=2, T=2, Delta=1))
    assert c.v0 == pytest.approx(1.0)
    assert c.eps3 == pytest.approx(0.25)
    assert c.delta == pytest.approx(0.25)


def test_nonlinearity_params():
    v0 = 2.0
    p = sc.make_profile("tanh_modulated", v0=v0, alpha=0.2, T=10 / v0)
    chi2, chi3 = sc.nonlinearity_params(p)
    assert chi2 == pytest.approx(0.04)
    A, D = 3.0, 0.5
    chi2, chi3 = sc.nonlinearity_params(sc.make_profile("sine", A=A, T=1.7, Delta=D))
    assert chi2 == 0
    assert chi3 == pytest.approx(-(D / A) ** 2)
    assert sc.nonlinearity_params(sc.make_profile("linear", v=1)) == (0.0, 0.0)


def test_nonlinearity_undefined_without_slope():
    with pytest.raises(UnsupportedError):
        sc.nonlinearity_params(sc.make_profile("rosen_zener", a=1, b=1))


@pytest.mark.parametrize("v, gap, expected", [(1, 2, 1.0), (4, 1, 0.5), (1, 0, 1.0)])
def test_crossing_duration(v, gap, expected):
    assert sc.crossing_duration(v, gap) == pytest.approx(expected)


def test_crossing_duration_bad_rate():
    with pytest.raises(ValidationError):
        sc.crossing_duration(0, 1)


def test_non_analytic_family_refuses_complex():
    p = sc.make_profile("power_law", A=1, a=0.5)
    assert not p.analytic
    with pytest.raises(UnsupportedError):
        sc.eval_bias(p, 0.1 + 0.1j)
    assert sc.make_profile("power_law", A=1, a=3).analytic


def test_pole_evaluation():
    p = sc.make_profile("tanh", A=1, T=1)
    with pytest.raises(SingularityError):
        sc.eval_bias(p, 1j * math.pi / 2)


def test_erf_normalization():
    p = sc.make_profile("erf", A=2, sigma=0.5, T=1)
    assert sc.eval_bias(p, 0.3) == pytest.approx(2 * math.erf(0.3 / (math.sqrt(2) * 0.5)))
    assert sc.eval_bias(p, 50.0) == pytest.approx(2.0)


def test_superlinear_sublinear_signs():
    sup = sc.crossing_derivatives(sc.make_profile("superlinear", v=1.5, lam=0.3))
    sub = sc.crossing_derivatives(sc.make_profile("sublinear", v=1.5, lam=0.3))
    assert sup.eps3 * sup.v0 > 0
    assert sub.eps3 * sub.v0 < 0


ANALYTIC = [
    ("linear", dict(v=1.3, Delta=0.7)),
    ("tanh_modulated", dict(v0=1.1, alpha=0.6, T=2.0)),
    ("quadratic", dict(v0=1.0, v1=0.3)),
    ("cubic", dict(v0=1.0, chi3=0.2)),
    ("sine", dict(A=2.0, T=1.5, Delta=0.8)),
    ("sinh", dict(A=0.7, T=1.2)),
    ("tanh", dict(A=2.0, T=0.9)),
    ("demkov_kunike", dict(A=0.5, B=1.0, T=1.3)),
    ("rosen_zener", dict(a=0.4, b=0.9, T=1.1)),
    ("erf", dict(A=1.0, sigma=0.7)),
    ("gaussian_gap", dict(v=1.0, T=2.0)),
    ("tanh_gap", dict(v=1.0, alpha=0.5, T=3.0)),
    ("superlinear", dict(v=1.0, lam=0.4)),
    ("sublinear", dict(v=1.0, lam=0.4)),
]


@pytest.mark.parametrize("family, params", ANALYTIC)
@settings(max_examples=30, deadline=None)
@given(t=st.floats(-3, 3))
def test_real_time_is_real(family, params, t):
    p = sc.make_profile(family, params)
    assert np.imag(sc.eval_bias(p, complex(t))) == pytest.approx(0.0, abs=1e-12)
    assert np.imag(sc.eval_gap(p, complex(t))) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("family, params", ANALYTIC)
@settings(max_examples=30, deadline=None)
@given(x=st.floats(-2, 2), y=st.floats(0.01, 0.3))
def test_schwarz_symmetry(family, params, x, y):
    p = sc.make_profile(family, params)
    z = complex(x, y)
    f = complex(sc.eval_bias(p, z))
    g = complex(sc.eval_bias(p, z.conjugate()))
    assert abs(f.conjugate() - g) <= 1e-12 * max(1.0, abs(f))
    f = complex(sc.eval_gap(p, z))
    g = complex(sc.eval_gap(p, z.conjugate()))
    assert abs(f.conjugate() - g) <= 1e-12 * max(1.0, abs(f))


@pytest.mark.parametrize("family, params", ANALYTIC + [
    ("power_law", dict(A=1.0, a=0.5)),
    ("power_gap", dict(v=1.0, a=0.5)),
    ("tangent", dict(A=0.5, B=1.0)),
    ("rotating", dict(omega=0.7)),
])
@settings(max_examples=30, deadline=None)
@given(t=st.floats(0.05, 1.2))
def test_derivatives_match_finite_differences(family, params, t):
    p = sc.make_profile(family, params)
    fe, fg, fde, fdg = p.scalar_functions()
    h = 1e-5
    for f, df in ((fe, fde), (fg, fdg)):
        fd = (f(t + h) - f(t - h)) / (2 * h)
        assert fd == pytest.approx(df(t), rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("family, params", [fp for fp in ANALYTIC if fp[0] != "rosen_zener"])
def test_crossing_data_matches_finite_differences(family, params):
    p = sc.make_profile(family, params)
    c = sc.crossing_derivatives(p)
    fe, fg, fde, fdg = p.scalar_functions()
    assert fe(0.0) == pytest.approx(0.0, abs=1e-14)
    assert fde(0.0) == pytest.approx(c.v0, rel=1e-12)
    h = 1e-3
    assert (fde(h) - fde(-h)) / (2 * h) == pytest.approx(c.eps2, rel=1e-5, abs=1e-6)
    assert (fde(h) - 2 * fde(0.0) + fde(-h)) / h ** 2 == pytest.approx(c.eps3, rel=1e-4, abs=1e-5)
    assert fg(0.0) == pytest.approx(c.gap0)
    assert fdg(0.0) == pytest.approx(c.gap1, abs=1e-12)


def test_profiles_are_immutable():
    p = sc.make_profile("linear", v=1)
    with pytest.raises(TypeError):
        p.params["v"] = 2
    with pytest.raises(AttributeError):
        p.family = "x"
