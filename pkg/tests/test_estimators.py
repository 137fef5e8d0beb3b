import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from nlsweep import TransitionProbabilityEstimator
from nlsweep import closed_form as cf
from nlsweep.errors import ValidationError


def test_params_roundtrip():
    est = TransitionProbabilityEstimator(family="sinh", features=("A", "T"), fixed={"Delta": 1.0},
                                         method="ddp:standard")
    params = est.get_params()
    assert params["family"] == "sinh" and params["method"] == "ddp:standard"
    other = clone(est)
    assert other.get_params() == params
    est.set_params(method="integrator")
    assert est.method == "integrator"


def test_fit_predict_closed_form():
    X = np.array([[0.5], [1.0], [4.0]])
    est = TransitionProbabilityEstimator(family="linear", features=("v",),
                                         method="closed-form:lzsm").fit(X)
    assert est.n_features_in_ == 1
    expected = [cf.lzsm(1 / (4 * v)) for v in X[:, 0]]
    assert est.predict(X) == pytest.approx(expected, rel=1e-14)


def test_integrator_prediction():
    est = TransitionProbabilityEstimator(features=("v",)).fit([[1.0]])
    assert est.predict([[1.0]])[0] == pytest.approx(math.exp(-math.pi / 2), abs=1e-6)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        TransitionProbabilityEstimator().predict([[1.0]])


@pytest.mark.parametrize("kw, X", [
    (dict(features=("bogus",)), [[1.0]]),
    (dict(method="magic"), [[1.0]]),
    (dict(), [[1.0, 2.0]]),
    (dict(), [[0.0]]),
])
def test_fit_validation(kw, X):
    with pytest.raises(ValidationError):
        TransitionProbabilityEstimator(**kw).fit(X)


def test_predict_shape_check():
    est = TransitionProbabilityEstimator(method="closed-form:lzsm").fit([[1.0]])
    with pytest.raises(ValidationError):
        est.predict([[1.0, 2.0]])
