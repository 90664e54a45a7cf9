"""Mesh mappings built from pointwise solution moments.

Two equidistribution integrands are supported:

* ``q1``: ``sqrt(|mu'|)``, which clusters points where the mean solution
  is steep;
* ``q2``: ``(mu'')**2 * var**3``, which clusters points where curvature and
  sampling variance are large together.

The integrand is floored, integrated with the trapezoid rule and
normalised to a CDF ``F`` on ``[0, 1]``; the mapping is ``Q = F^{-1}``,
obtained exactly by swapping the coordinates of the piecewise-linear
tabulation.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ._validation import check_vector
from .exceptions import DegenerateCriterionError
from .mesh import MeshMapping

CRITERIA = ("q1", "q2")


@dataclass(frozen=True)
class QCriterion:
    """Settings for :func:`build_q`.

    Attributes
    ----------
    kind : {"q1", "q2"}
    smoothing_window : int or None
        Moving-average window applied to ``mu`` before differentiating.
        ``None`` picks 5 for q1 and 7 for q2.
    epsilon_floor : float
        Floor added to the integrand, relative to its maximum.
    derivative_power, variance_power : float
        Exponents of ``mu''`` and ``var`` in q2.
    """

    kind: str = "q1"
    smoothing_window: int = None
    epsilon_floor: float = 1e-6
    derivative_power: float = 2.0
    variance_power: float = 3.0

    def __post_init__(self):
        if self.kind not in CRITERIA:
            raise ValueError(f"unknown criterion {self.kind!r}; expected one of {CRITERIA}")
        if self.smoothing_window is None:
            object.__setattr__(self, "smoothing_window", 5 if self.kind == "q1" else 7)
        w = self.smoothing_window
        if not isinstance(w, (int, np.integer)) or w < 1 or w % 2 == 0:
            raise ValueError(f"smoothing_window must be a positive odd integer, got {w!r}")
        if not self.epsilon_floor > 0.0:
            raise ValueError("epsilon_floor must be positive")


def moving_average(values, window):
    """Centered moving average; the window shrinks symmetrically at the ends.

    Symmetric shrinking keeps linear data unchanged.
    """
    values = np.asarray(values, dtype=float)
    if window <= 1:
        return values.copy()
    half = window // 2
    n = values.size
    csum = np.concatenate(([0.0], np.cumsum(values)))
    k = np.arange(n)
    r = np.minimum(np.minimum(k, n - 1 - k), half)
    return (csum[k + r + 1] - csum[k - r]) / (2 * r + 1)


def numeric_derivative(values, grid, order=1, smoothing_window=1):
    """First or second derivative of samples on a uniform grid.

    Centered differences in the interior, one-sided at the two ends
    (second-order accurate for ``order=1``). For ``order=2`` rows near the
    ends copy the nearest row unaffected by the shrinking smoothing window,
    which keeps the result exact on quadratics; the window is reduced if
    the data are too short to leave such a row. Values within the rounding noise of the differences are
    returned as exactly zero, so constant data has a zero derivative.
    """
    values = check_vector(values, "values")
    grid = check_vector(grid, "grid", length=values.size)
    if values.size < 3:
        raise ValueError("need at least three samples to differentiate")
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order!r}")
    h = np.diff(grid)
    if np.any(h <= 0) or not np.allclose(h, h[0], rtol=1e-8, atol=0.0):
        raise ValueError("grid must be uniform and increasing")
    if order == 2 and smoothing_window > values.size - 2:
        # keep at least one row whose inputs all see the full window
        smoothing_window = max(1, values.size - 2 - (values.size % 2 == 0))
    v = moving_average(values, smoothing_window)
    dx = h[0]
    if order == 1:
        out = np.gradient(v, grid, edge_order=2)
    else:
        out = np.empty_like(v)
        out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dx**2
        # the shrinking end windows shift quadratics by varying amounts, so
        # only rows whose three inputs all had full windows are kept; the end
        # rows copy the nearest such value
        lo = max(1, smoothing_window // 2 + 1)
        hi = v.size - 1 - lo
        out[:lo] = out[lo]
        out[hi + 1:] = out[hi]
    noise = 64.0 * np.finfo(float).eps * np.max(np.abs(v)) / dx**order
    out[np.abs(out) <= noise] = 0.0
    return out


def criterion_integrand(field, crit):
    """Unfloored integrand of ``crit`` at the bin centres of ``field``."""
    if crit.kind == "q1":
        d1 = numeric_derivative(field.mu, field.grid, 1, crit.smoothing_window)
        return np.sqrt(np.abs(d1))
    d2 = numeric_derivative(field.mu, field.grid, 2, crit.smoothing_window)
    return np.abs(d2) ** crit.derivative_power * field.var ** crit.variance_power


def mapping_from_density(grid, g, label="computed"):
    """Mapping ``Q = F^{-1}`` where ``F`` is the normalised integral of ``g``.

    ``g`` is sampled at the interior points ``grid`` and extended as a
    constant to 0 and 1.
    """
    s = np.concatenate(([0.0], grid, [1.0]))
    g = np.concatenate(([g[0]], g, [g[-1]]))
    cum = cumulative_trapezoid(g, s, initial=0.0)
    total = cum[-1]
    if not total > 0.0 or not np.isfinite(total):
        raise DegenerateCriterionError("mapping integrand integrates to zero")
    F = cum / total
    F[-1] = 1.0
    if np.any(np.diff(F) <= 0.0):
        raise DegenerateCriterionError("normalised integral is not strictly increasing")
    return MeshMapping.tabulated(F, s, label=label)


def build_q(field, crit=None):
    """Build the mesh mapping for ``crit`` from a moment field.

    Raises
    ------
    DegenerateCriterionError
        If the integrand vanishes everywhere.
    """
    crit = QCriterion() if crit is None else crit
    g = criterion_integrand(field, crit)
    if not np.all(np.isfinite(g)):
        raise DegenerateCriterionError("integrand has non-finite values")
    gmax = float(g.max())
    if gmax <= 0.0:
        raise DegenerateCriterionError(f"{crit.kind} integrand is identically zero")
    return mapping_from_density(field.grid, g + crit.epsilon_floor * gmax, label=crit.kind)


def compare_mappings(mappings, eval_points):
    """Tabulate several mappings at common points.

    ``mappings`` is a dict ``{name: MeshMapping}`` or a list (names taken
    from each mapping's label). Returns a dict of columns, ``"x"`` first.
    """
    x = check_vector(eval_points, "eval_points")
    if not isinstance(mappings, dict):
        mappings = {q.label or f"mapping{i}": q for i, q in enumerate(mappings)}
    table = {"x": x.copy()}
    for name, q in mappings.items():
        table[name] = np.asarray(q(x), dtype=float)
    return table
