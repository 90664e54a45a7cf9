"""Pointwise moments of sampled sparse-mesh solutions.

Each sampled solution contributes its ``(x_k, u_k)`` pairs to the bin of
``[0, 1]`` containing ``x_k``. Bins keep streaming sums, so clouds built by
different workers merge by addition.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import check_positive_int
from .exceptions import InsufficientDataError, InvalidStateError

DEFAULT_BINS = 101


class PointCloud:
    """Per-bin count, sum and sum of squares of sampled solution values.

    Parameters
    ----------
    n_bins : int
        Number of uniform bins on ``[0, 1]``.
    retain_points : bool
        Also keep the raw ``(x, u)`` pairs, needed by :func:`density_grid`.
    """

    def __init__(self, n_bins=DEFAULT_BINS, retain_points=False):
        self.n_bins = check_positive_int(n_bins, "n_bins")
        self.edges = np.linspace(0.0, 1.0, self.n_bins + 1)
        self.count = np.zeros(self.n_bins, dtype=np.int64)
        self.sum = np.zeros(self.n_bins)
        self.sumsq = np.zeros(self.n_bins)
        self.retain_points = bool(retain_points)
        self._points = []
        self.n_solutions = 0

    def bin_index(self, x):
        idx = np.floor(np.asarray(x, dtype=float) * self.n_bins).astype(np.int64)
        return np.clip(idx, 0, self.n_bins - 1)

    def accumulate(self, sol):
        """Deposit one sampled solution; returns ``self``."""
        x = sol.mesh.interior
        u = sol.values
        idx = self.bin_index(x)
        self.count += np.bincount(idx, minlength=self.n_bins)
        self.sum += np.bincount(idx, weights=u, minlength=self.n_bins)
        self.sumsq += np.bincount(idx, weights=u * u, minlength=self.n_bins)
        if self.retain_points:
            self._points.append(np.column_stack((x, u)))
        self.n_solutions += 1
        return self

    def merge(self, other):
        """Return a new cloud holding the contents of ``self`` then ``other``."""
        if other.n_bins != self.n_bins:
            raise ValueError("cannot merge clouds with different binning")
        out = PointCloud(self.n_bins, self.retain_points and other.retain_points)
        out.count = self.count + other.count
        out.sum = self.sum + other.sum
        out.sumsq = self.sumsq + other.sumsq
        out.n_solutions = self.n_solutions + other.n_solutions
        if out.retain_points:
            out._points = self._points + other._points
        return out

    def copy(self):
        return self.merge(PointCloud(self.n_bins, self.retain_points))

    @property
    def points(self):
        """Retained ``(x, u)`` pairs as an ``(N, 2)`` array."""
        if not self.retain_points:
            raise InvalidStateError("point retention was not enabled for this cloud")
        if not self._points:
            return np.empty((0, 2))
        return np.concatenate(self._points)

    @property
    def total_count(self):
        return int(self.count.sum())


def accumulate(cloud, sol):
    return cloud.accumulate(sol)


@dataclass(frozen=True, eq=False)
class MomentField:
    """Bin-centre estimates of the pointwise mean and variance.

    ``filled`` marks bins whose variance (and, for empty bins, mean) was
    interpolated from neighbouring bins because they held fewer than two
    values.
    """

    grid: np.ndarray
    mu: np.ndarray
    var: np.ndarray
    count: np.ndarray
    filled: np.ndarray
    edges: np.ndarray

    @property
    def widths(self):
        return np.diff(self.edges)


def _fill(values, valid, grid):
    # np.interp clamps outside the valid range, so no extrapolation happens
    out = values.copy()
    out[~valid] = np.interp(grid[~valid], grid[valid], values[valid])
    return out


def finalize_moments(cloud):
    """Turn accumulated sums into a :class:`MomentField`.

    Uses the unbiased (``count - 1``) variance estimator.

    Raises
    ------
    InsufficientDataError
        If every bin is empty, or no bin holds two or more values.
    """
    c = cloud.count
    if not np.any(c > 0):
        raise InsufficientDataError("all bins are empty")
    if not np.any(c > 1):
        raise InsufficientDataError("no bin holds two or more values")
    grid = 0.5 * (cloud.edges[:-1] + cloud.edges[1:])
    has_mean = c > 0
    has_var = c > 1
    mu = np.zeros(cloud.n_bins)
    mu[has_mean] = cloud.sum[has_mean] / c[has_mean]
    var = np.zeros(cloud.n_bins)
    cv = c[has_var]
    var[has_var] = (cloud.sumsq[has_var] - cloud.sum[has_var] ** 2 / cv) / (cv - 1)
    np.maximum(var, 0.0, out=var)   # round-off can push a zero variance negative
    mu = _fill(mu, has_mean, grid)
    var = _fill(var, has_var, grid)
    return MomentField(grid=grid, mu=mu, var=var, count=c.copy(), filled=~has_var,
                       edges=cloud.edges.copy())


@dataclass(frozen=True)
class SamplingDiagnostics:
    vbar: float
    m_used: int


def average_variance(field, m_used=0):
    """Width-weighted mean of the pointwise variance over ``[0, 1]``."""
    w = field.widths
    vbar = float(np.sum(field.var * w) / np.sum(w))
    return SamplingDiagnostics(vbar=vbar, m_used=int(m_used))


class DensityGrid(NamedTuple):
    density: np.ndarray
    x_edges: np.ndarray
    u_edges: np.ndarray


def density_grid(cloud, u_bins, u_range=None):
    """Normalised 2-D histogram of the retained ``(x, u)`` pairs.

    Returns a :class:`DensityGrid` whose ``density`` has shape
    ``(n_bins, u_bins)`` and integrates to one over the ``(x, u)``
    rectangle.
    """
    u_bins = check_positive_int(u_bins, "u_bins")
    pts = cloud.points
    if pts.shape[0] == 0:
        raise InsufficientDataError("no retained points")
    if u_range is None:
        lo, hi = float(pts[:, 1].min()), float(pts[:, 1].max())
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
    else:
        lo, hi = map(float, u_range)
    u_edges = np.linspace(lo, hi, u_bins + 1)
    counts, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=(cloud.edges, u_edges))
    cell = np.outer(np.diff(cloud.edges), np.diff(u_edges))
    total = counts.sum()
    if total == 0:
        raise InsufficientDataError("no retained points fall inside u_range")
    return DensityGrid(counts / (total * cell), cloud.edges.copy(), u_edges)
