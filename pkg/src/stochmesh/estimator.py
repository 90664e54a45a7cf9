"""scikit-learn style front end to the mesh pipeline."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .harness import sample_cloud
from .mesh import SamplingConfig, apply_mapping, uniform_mesh
from .moments import average_variance, finalize_moments
from .qbuild import QCriterion, build_q


class StochasticMeshGenerator(BaseEstimator, TransformerMixin):
    """Learn a mesh mapping ``Q`` from solutions on random sparse meshes.

    ``fit`` takes a boundary value problem (any object with a
    ``solve(mesh)`` method, e.g. :class:`~stochmesh.solvers.SingularProblem`)
    instead of a data matrix. ``transform`` evaluates the learned mapping
    at points of ``[0, 1]``; :meth:`generate_mesh` returns
    ``Q(uniform_mesh(n))``.

    Parameters
    ----------
    criterion : {"q1", "q2"}
    n_samples : int
        Number of random meshes ``m``.
    n_points : int
        Interior points per random mesh ``n``.
    n_bins : int
        Bins used for the pointwise moments.
    smoothing_window : int or None
        Moving-average window; ``None`` uses the criterion default.
    epsilon_floor : float
    random_state : int
        Master seed (a non-negative integer below 2**64).
    n_jobs : int
        Worker processes for the sampling loop. Results do not depend on it.

    Attributes
    ----------
    moments_ : MomentField
    mapping_ : MeshMapping
    vbar_ : float
        Average pointwise variance.
    n_failed_ : int
        Number of dropped samples.
    """

    def __init__(self, criterion="q1", n_samples=15000, n_points=10, n_bins=101,
                 smoothing_window=None, epsilon_floor=1e-6, random_state=0, n_jobs=1):
        self.criterion = criterion
        self.n_samples = n_samples
        self.n_points = n_points
        self.n_bins = n_bins
        self.smoothing_window = smoothing_window
        self.epsilon_floor = epsilon_floor
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        """Sample, solve and build the mapping for the problem ``X``."""
        if not hasattr(X, "solve"):
            raise TypeError("fit expects a problem object with a solve(mesh) method")
        crit = QCriterion(self.criterion, self.smoothing_window, self.epsilon_floor)
        seed = 0 if self.random_state is None else self.random_state
        sampling = SamplingConfig(self.n_samples, self.n_points, seed)
        cloud, failures = sample_cloud(X, sampling, self.n_bins, workers=self.n_jobs)
        self.moments_ = finalize_moments(cloud)
        self.mapping_ = build_q(self.moments_, crit)
        self.vbar_ = average_variance(self.moments_, cloud.n_solutions).vbar
        self.n_failed_ = len(failures)
        return self

    def _points(self, X):
        X = check_array(X, ensure_2d=False, dtype=float)
        if np.any((X < 0.0) | (X > 1.0)):
            raise ValueError("mapping inputs must lie in [0, 1]")
        return X

    def transform(self, X, y=None):
        """Evaluate ``Q`` elementwise; the output has the shape of ``X``."""
        check_is_fitted(self, "mapping_")
        return np.asarray(self.mapping_(self._points(X)), dtype=float)

    def inverse_transform(self, X, y=None):
        """Evaluate ``Q^{-1}`` elementwise (piecewise-linear in the knots)."""
        check_is_fitted(self, "mapping_")
        q = self.mapping_
        return np.interp(self._points(X), q.q_knots, q.s_knots)

    def generate_mesh(self, n):
        """Mesh with ``n`` interior points, ``Q`` applied to the uniform mesh."""
        check_is_fitted(self, "mapping_")
        return apply_mapping(self.mapping_, uniform_mesh(n))
