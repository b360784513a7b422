"""Estimator-style wrappers.

``fit`` takes a 0/1 transition matrix and builds the equilibrium state.
``transform``/``predict`` take a list of holes, each a word or a list of
words of one length.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_collection, check_function, check_hole_words, check_positive, check_shift
from .escape_flow import escape_rate_flow
from .gibbs import equilibrium_state
from .open_system import Hole, escape_rate_discrete
from .suspension import DiscretizationParams, RoofFunction, choose_discretization


class EquilibriumState(TransformerMixin, BaseEstimator):
    """Equilibrium state of a locally constant potential; transforms words to cylinder measures.

    ``potential`` is per-symbol values, a ``{word: value}`` map, or ``None`` for zero.
    """

    def __init__(self, potential=None, theta=0.5):
        self.potential = potential
        self.theta = theta

    def fit(self, X, y=None):
        A = check_shift(X)
        phi = check_function(A, self.potential, "potential", self.theta)
        self.shift_ = A
        self.measure_ = equilibrium_state(A, phi)
        self.pressure_ = self.measure_.pressure
        return self

    def transform(self, X):
        check_is_fitted(self, "measure_")
        words = check_collection(X)
        return np.array([self.measure_.cylinder(next(iter(check_hole_words(self.shift_, [w])))) for w in words])


class DiscreteEscapeRate(BaseEstimator):
    """Escape rates of the shift through cylinder holes."""

    def __init__(self, potential=None, theta=0.5):
        self.potential = potential
        self.theta = theta

    def fit(self, X, y=None):
        self.state_ = EquilibriumState(self.potential, self.theta).fit(X)
        return self

    def predict(self, X):
        """Escape rate for each hole."""
        check_is_fitted(self, "state_")
        mu = self.state_.measure_
        holes = [check_hole_words(mu.shift, h) for h in check_collection(X)]
        return np.array([escape_rate_discrete(mu, h, k_max=0).rate for h in holes])

    def ratio(self, X):
        """``rate / mu(hole)`` for each hole."""
        check_is_fitted(self, "state_")
        mu = self.state_.measure_
        holes = [check_hole_words(mu.shift, h) for h in check_collection(X)]
        return np.array([escape_rate_discrete(mu, h, k_max=0).rate / mu.measure_of(h) for h in holes])


class FlowEscapeRate(BaseEstimator):
    """Brackets for the semi-flow escape rate through ``hole x {0}``.

    ``delta`` and ``m`` may be ``"auto"``; ``predict`` returns an ``(n, 2)``
    array of ``[R_lower, R_upper]``.
    """

    def __init__(self, roof=(2.0, 2.0), potential=None, delta="auto", m="auto", theta=0.5):
        self.roof = roof
        self.potential = potential
        self.delta = delta
        self.m = m
        self.theta = theta

    def fit(self, X, y=None):
        self.state_ = EquilibriumState(self.potential, self.theta).fit(X)
        mu = self.state_.measure_
        self.roof_ = RoofFunction(check_function(mu.shift, self.roof, "roof", self.theta), mu.shift)
        request = 0.1 if self.delta == "auto" else check_positive(self.delta, "delta")
        if self.m == "auto":
            params = choose_discretization(self.roof_, mu, request)
        else:
            params = DiscretizationParams.for_roof(self.roof_, int(self.m), request)
        self.params_ = params.check(self.roof_, mu)
        return self

    def _results(self, X):
        check_is_fitted(self, "params_")
        mu = self.state_.measure_
        holes = [Hole(len(next(iter(w))), w) for w in (check_hole_words(mu.shift, h) for h in check_collection(X))]
        return [escape_rate_flow(mu, self.roof_, h, self.params_, check=False) for h in holes]

    def predict(self, X):
        return np.array([[r.R_lower, r.R_upper] for r in self._results(X)])

    def ratio_interval(self, X):
        """``[R_lower, R_upper] / nu(hole x [0, 1])`` for each hole."""
        return np.array([r.ratio_interval for r in self._results(X)])
