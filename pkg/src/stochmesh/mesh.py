"""Meshes on the unit interval, mesh mappings, and random mesh sampling.

A :class:`Mesh` holds only the interior points of a partition of ``[0, 1]``;
the boundary points 0 and 1 are implied. A :class:`MeshMapping` is a
monotone map of ``[0, 1]`` onto itself used to move a uniform mesh.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    check_increasing_sequence,
    check_nonnegative_int,
    check_positive_int,
    check_vector,
)
from .exceptions import DegenerateMeshError

#: Minimum admissible gap between neighbouring mesh points.
GAP_TOL = 1e-12


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Mesh:
    """Strictly increasing interior points of a partition of ``[0, 1]``."""

    interior: np.ndarray

    def __post_init__(self):
        x = check_vector(self.interior, "interior")
        if x.size == 0:
            raise ValueError("a mesh needs at least one interior point")
        if x[0] <= 0.0 or x[-1] >= 1.0:
            raise ValueError("interior points must lie strictly inside (0, 1)")
        if np.any(np.diff(x) <= 0.0):
            raise ValueError("interior points must be strictly increasing")
        object.__setattr__(self, "interior", _frozen(x))

    left_boundary = 0.0
    right_boundary = 1.0

    @property
    def n(self):
        return self.interior.shape[0]

    def __len__(self):
        return self.n

    @property
    def nodes(self):
        """Interior points with both boundary points attached (length n+2)."""
        return np.concatenate(([0.0], self.interior, [1.0]))

    @property
    def steps(self):
        """Step sizes ``h_1 .. h_{n+1}``; they sum to one."""
        return np.diff(self.nodes)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return np.array_equal(self.interior, other.interior)

    def __hash__(self):
        return hash(self.interior.tobytes())

    def __repr__(self):
        return f"Mesh(n={self.n}, interior={np.array2string(self.interior, precision=4)})"


@dataclass(frozen=True, eq=False)
class MeshMapping:
    """Monotone map ``Q: [0, 1] -> [0, 1]`` with ``Q(0) = 0`` and ``Q(1) = 1``.

    Use the constructors :meth:`identity`, :meth:`power` and
    :meth:`tabulated` rather than instantiating directly.

    Attributes
    ----------
    kind : {"identity", "power", "tabulated"}
    s_knots, q_knots : ndarray
        Knot table. For ``tabulated`` mappings this defines ``Q`` by
        piecewise-linear interpolation; for the analytic kinds it is a
        sampled copy used for serialisation.
    exponent : float or None
        Exponent of the ``power`` kind, ``Q(s) = s**exponent``.
    """

    kind: str
    s_knots: np.ndarray
    q_knots: np.ndarray
    exponent: float = None
    label: str = field(default=None)

    @classmethod
    def identity(cls):
        s = np.array([0.0, 1.0])
        return cls("identity", _frozen(s), _frozen(s), label="uniform")

    @classmethod
    def power(cls, exponent, n_knots=1001):
        exponent = float(exponent)
        if not exponent > 0.0:
            raise ValueError(f"power mapping needs a positive exponent, got {exponent}")
        s = np.linspace(0.0, 1.0, n_knots)
        return cls("power", _frozen(s), _frozen(s**exponent), exponent=exponent,
                   label=f"power:{exponent:g}")

    @classmethod
    def tabulated(cls, s_knots, q_knots, label="computed"):
        """Piecewise-linear mapping through strictly increasing knots.

        The first knot must be ``(0, 0)`` and the last ``(1, 1)``.
        """
        s = check_increasing_sequence(s_knots, "s_knots")
        q = check_increasing_sequence(q_knots, "q_knots")
        if s.shape != q.shape or s.size < 2:
            raise ValueError("s_knots and q_knots must have equal length >= 2")
        if s[0] != 0.0 or s[-1] != 1.0 or q[0] != 0.0 or q[-1] != 1.0:
            raise ValueError("tabulated mapping must pass through (0, 0) and (1, 1)")
        return cls("tabulated", _frozen(s), _frozen(q), label=label)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "identity":
            out = s.copy()
        elif self.kind == "power":
            out = np.power(s, self.exponent)
        else:
            out = np.interp(s, self.s_knots, self.q_knots)
        return out if out.ndim else float(out)

    def knots(self):
        """``(s, Q(s))`` pairs as an ``(k, 2)`` array."""
        return np.column_stack((self.s_knots, self.q_knots))

    def __repr__(self):
        extra = f", exponent={self.exponent:g}" if self.kind == "power" else ""
        return f"MeshMapping(kind={self.kind!r}{extra}, knots={self.s_knots.size})"


@dataclass(frozen=True)
class SamplingConfig:
    """How the sparse random meshes are drawn.

    ``m`` meshes of ``n`` points each; sample ``i`` uses a random stream
    derived from ``(master_seed, i)`` only.
    """

    m: int
    n: int
    master_seed: int = 0
    distribution: str = "uniform"

    def __post_init__(self):
        check_positive_int(self.m, "m")
        check_positive_int(self.n, "n")
        check_nonnegative_int(self.master_seed, "master_seed")
        if self.master_seed >= 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.distribution != "uniform":
            raise ValueError(f"unsupported distribution {self.distribution!r}")


def uniform_mesh(n):
    """Interior points ``k / (n + 1)`` for ``k = 1 .. n``."""
    n = check_positive_int(n, "n")
    return Mesh(np.arange(1, n + 1) / (n + 1))


def sample_rng(master_seed, sample_index):
    """Independent Philox stream for one sample index."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(sample_index,))
    return np.random.Generator(np.random.Philox(seq))


def _draw_sorted(rng, n, tol=GAP_TOL):
    x = np.sort(rng.random(n))
    while True:
        bad = (x <= tol) | (x >= 1.0 - tol)
        bad[1:] |= np.diff(x) <= tol
        k = int(bad.sum())
        if k == 0:
            return x
        x = np.sort(np.concatenate((x[~bad], rng.random(k))))


def sample_sorted_mesh(cfg, sample_index):
    """Draw the ``sample_index``-th random mesh of ``cfg``.

    Points coinciding (within ``GAP_TOL``) with a neighbour or with the
    boundary are redrawn, so the result is always a valid :class:`Mesh`.
    """
    sample_index = check_nonnegative_int(sample_index, "sample_index")
    if sample_index >= cfg.m:
        raise ValueError(f"sample_index {sample_index} out of range for m={cfg.m}")
    return Mesh(_draw_sorted(sample_rng(cfg.master_seed, sample_index), cfg.n))


def apply_mapping(q, mesh):
    """Return the mesh with interior points ``Q(x_k)``.

    Raises
    ------
    DegenerateMeshError
        If any mapped gap, boundary gaps included, falls below ``GAP_TOL``.
    """
    if q.kind == "identity":
        return mesh
    y = np.asarray(q(mesh.interior), dtype=float)
    gaps = np.diff(np.concatenate(([0.0], y, [1.0])))
    if np.any(gaps < GAP_TOL):
        k = int(np.argmin(gaps))
        raise DegenerateMeshError(
            f"mapped mesh has gap {gaps[k]:.3e} at step {k + 1} (minimum {GAP_TOL:g})"
        )
    return Mesh(y)


def max_gap(mesh):
    """Largest step size of the mesh, boundary gaps included."""
    return float(np.max(mesh.steps))
