"""scikit-learn style wrapper: parameter values in, probabilities out.

``fit`` validates the configuration against one representative profile; it
learns nothing from data.  ``predict`` maps each row of X (values of the
parameters named in ``features``) to a transition probability.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ValidationError
from .runner import _check_method, evaluate_method
from .sweep_catalog import family_parameters, make_profile


class TransitionProbabilityEstimator(BaseEstimator):
    """Transition probability of a sweep family as a function of its parameters.

    Parameters
    ----------
    family : str
        Sweep family name.
    features : tuple of str
        Family parameters supplied column-wise in X.
    fixed : dict, optional
        Values of the remaining parameters.
    method : str
        ``integrator``, ``ddp:<n>``, ``ddp:standard`` or ``closed-form:<id>``.
    rtol, tol : float
        Integrator tolerance and window convergence threshold.
    """

    def __init__(self, family="linear", features=("v",), fixed=None, method="integrator",
                 rtol=1e-10, tol=1e-6):
        self.family = family
        self.features = features
        self.fixed = fixed
        self.method = method
        self.rtol = rtol
        self.tol = tol

    def _params(self, row):
        params = dict(self.fixed or {})
        params.update(zip(self.features_, (float(v) for v in row)))
        return params

    def fit(self, X, y=None):
        """Validate the configuration; X supplies a representative parameter row."""
        schema = family_parameters(self.family)
        feats = tuple(self.features)
        bad = [f for f in feats if f not in schema]
        if bad:
            raise ValidationError(f"unknown feature(s) for {self.family}: {', '.join(bad)}")
        _check_method(self.method, 1)
        X = check_array(X, ensure_2d=True, dtype=np.float64)
        if X.shape[1] != len(feats):
            raise ValidationError(f"X has {X.shape[1]} columns, expected {len(feats)}")
        self.features_ = feats
        self.n_features_in_ = len(feats)
        make_profile(self.family, self._params(X[0]))
        return self

    def predict(self, X):
        """Probability for every row of X."""
        check_is_fitted(self, "features_")
        X = check_array(X, ensure_2d=True, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            p = make_profile(self.family, self._params(row))
            out[i] = evaluate_method(p, self.method, self.rtol, self.tol)[0]
        return out
