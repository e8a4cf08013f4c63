"""Estimator-style wrappers around the envelope machinery.

``fit`` builds state, ``predict`` evaluates envelopes and ``get_params`` /
``set_params`` come from :class:`sklearn.base.BaseEstimator`, so these
objects can be cloned and grid-searched like any other estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points, check_positive, check_queries, check_values
from .densities import DensityParams, get_density
from .exceptions import EmptyGraphError
from .hull import build_lower_envelope
from .lattice import DEFAULT_CAP, LatticeSpec, generate_lattice, sample_density
from .lp import envelope_lp
from .pipeline import METHODS, _lp_value, _map, lift_query, query_nu, worker_count


class LowerConvexEnvelope(BaseEstimator):
    """Lower convex envelope of scattered data ``(X, y)`` via Quickhull.

    ``predict`` returns ``+inf`` outside the convex hull of ``X``.
    """

    def fit(self, X, y):
        X = check_points(X)
        y = check_values(y, X.shape[0])
        self.envelope_ = build_lower_envelope(X, y)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "envelope_")
        X = check_points(X, self.n_features_in_)
        return self.envelope_.evaluate_many(X)

    def certificates(self, X):
        """Barycentric certificates (:class:`~polyrelax.hull.EnvelopeValue`) per row."""
        check_is_fitted(self, "envelope_")
        X = check_points(X, self.n_features_in_)
        return [self.envelope_.evaluate(x) for x in X]


class LinearProgramEnvelope(BaseEstimator):
    """Same function as :class:`LowerConvexEnvelope`, one simplex solve per query."""

    def __init__(self, max_iter=None, n_jobs=None):
        self.max_iter = max_iter
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X = check_points(X)
        self.points_ = X
        self.values_ = check_values(y, X.shape[0])
        self.n_features_in_ = X.shape[1]
        return self

    def solve(self, x):
        check_is_fitted(self, "points_")
        return envelope_lp(self.points_, self.values_, x, max_iter=self.max_iter)

    def predict(self, X):
        check_is_fitted(self, "points_")
        X = check_points(X, self.n_features_in_)
        sols = _map(self.solve, list(X), worker_count(self.n_jobs))
        return np.array([s.value for s in sols])


class PolyconvexEnvelope(BaseEstimator):
    """Approximate polyconvex envelope of a registered isotropic density.

    ``fit`` samples the density on the lattice (and builds the hull for the
    ``*-qh`` methods); ``predict`` takes matrices ``(N, d, d)`` or signed
    singular values ``(N, d)``.  ``transform`` returns the lifted query
    coordinates used by the chosen method.
    """

    def __init__(self, density="ksd", d=2, delta=0.1375, radius=1.1, method="svpc-qh",
                 mu=1.0, kappa=1.0, k=1.0 / 3.0, ell=1.0 / 8.0, cap=DEFAULT_CAP, n_jobs=None):
        self.density = density
        self.d = d
        self.delta = delta
        self.radius = radius
        self.method = method
        self.mu = mu
        self.kappa = kappa
        self.k = k
        self.ell = ell
        self.cap = cap
        self.n_jobs = n_jobs

    def _params(self):
        return DensityParams(self.density, int(self.d), mu=self.mu, kappa=self.kappa, k=self.k, ell=self.ell)

    def fit(self, X=None, y=None):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        params = self._params()
        delta = check_positive(self.delta, "delta")
        radius = check_positive(self.radius, "radius")
        lifting, backend = self.method.split("-")
        dim = params.d if lifting == "svpc" else params.d ** 2
        self.lattice_ = generate_lattice(LatticeSpec(dim, delta, radius), cap=int(self.cap))
        self.phi_, self.exact_ = get_density(params)
        try:
            self.graph_ = sample_density(self.lattice_, self.phi_, lifting=lifting)
        except EmptyGraphError:
            self.graph_ = None
        self.envelope_ = None
        if backend == "qh" and self.graph_ is not None:
            self.envelope_ = build_lower_envelope(self.graph_.lifted, self.graph_.values)
        self.lifting_ = lifting
        return self

    def transform(self, X):
        check_is_fitted(self, "lattice_")
        Q = check_queries(X, self.d)
        return np.array([lift_query(q, self.d, self.lifting_) for q in Q])

    def _evaluate(self, x):
        if self.graph_ is None:
            return np.inf
        if self.envelope_ is not None:
            return self.envelope_.evaluate(x).value
        return _lp_value(self.graph_, x).value

    def predict(self, X):
        lifted = self.transform(X)
        return np.array(_map(self._evaluate, list(lifted), worker_count(self.n_jobs)), dtype=float)

    def exact(self, X):
        """Known exact envelope at the queries; raises if the density has none."""
        check_is_fitted(self, "lattice_")
        if self.exact_ is None:
            raise ValueError(f"density {self.density!r} has no known exact envelope")
        Q = check_queries(X, self.d)
        return np.array([float(self.exact_(query_nu(q, self.d))) for q in Q])
