"""Three-point finite differences on non-uniform meshes.

The second-derivative operator is stored as a tridiagonal matrix acting on
the interior unknowns, together with the two weights that couple the first
and last rows to the Dirichlet boundary values.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ._validation import check_vector
from .exceptions import SingularOperatorError
from .mesh import GAP_TOL, Mesh

PIVOT_TOL = 1e-14


def stencil_coeffs(h_left, h_right):
    """Weights ``(c, b, a)`` on ``(u_{k-1}, u_k, u_{k+1})`` approximating u''.

    They solve the undetermined-coefficient conditions
    ``a + b + c = 0``, ``a*h_right - c*h_left = 0`` and
    ``(a*h_right**2 + c*h_left**2) / 2 = 1``.
    """
    if not (h_left > 0.0 and h_right > 0.0):
        raise ValueError(f"step sizes must be positive, got {h_left!r}, {h_right!r}")
    s = h_left + h_right
    c = 2.0 / (h_left * s)
    a = 2.0 / (h_right * s)
    b = -2.0 / (h_left * h_right)
    return c, b, a


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Tridiagonal discretisation of a second-order operator on ``mesh``.

    ``sub[k]`` multiplies ``u_k`` in row ``k+1`` and ``sup[k]`` multiplies
    ``u_{k+1}`` in row ``k``. ``left_coupling`` and ``right_coupling`` are
    the row-1 and row-n weights on the boundary values ``u_0`` and
    ``u_{n+1}``.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    mesh: Mesh
    left_coupling: float
    right_coupling: float

    @property
    def n(self):
        return self.diag.shape[0]

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def matvec(self, u):
        u = np.asarray(u, dtype=float)
        out = self.diag * u
        out[1:] += self.sub * u[:-1]
        out[:-1] += self.sup * u[1:]
        return out

    def shifted(self, diagonal):
        """Operator with ``diagonal`` added to the main diagonal."""
        return TridiagonalOperator(self.sub, self.diag + diagonal, self.sup, self.mesh,
                                   self.left_coupling, self.right_coupling)

    def eigenvalues(self):
        """Eigenvalues of the operator, ascending.

        Three-point operators of this form are ``D^{-1} S`` with ``D``
        positive diagonal and ``S`` symmetric, so the spectrum is real and
        equals that of the symmetric matrix ``D^{-1/2} S D^{-1/2}``.
        """
        prod = self.sub * self.sup
        if np.any(prod <= 0.0):
            return np.sort(np.linalg.eigvals(self.to_dense()).real)
        off = np.sqrt(prod)
        return eigh_tridiagonal(self.diag, off, eigvals_only=True)


def _midpoint_weights(nodes, coefficient):
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    if coefficient is None:
        return np.ones_like(mids)
    w = np.asarray(coefficient(mids), dtype=float)
    return np.broadcast_to(w, mids.shape).astype(float)


def assemble_second_derivative(mesh, coefficient=None):
    """Assemble ``(w u')'`` on ``mesh``; ``w`` defaults to 1.

    Row ``k`` is the conservative flux difference

        2/(h_k + h_{k+1}) * [w_{k+1/2} (u_{k+1}-u_k)/h_{k+1} - w_{k-1/2} (u_k-u_{k-1})/h_k]

    with ``w`` evaluated at cell midpoints, so ``w(0)`` is never needed.
    For ``w = 1`` the rows reduce to the classical non-uniform stencil of
    :func:`stencil_coeffs`.
    """
    h = mesh.steps
    if np.any(h < GAP_TOL):
        raise SingularOperatorError("mesh has a degenerate step")
    w = _midpoint_weights(mesh.nodes, coefficient)
    flux = w / h                       # length n+1, one per cell
    scale = 2.0 / (h[:-1] + h[1:])     # length n, one per interior node
    lower = scale * flux[:-1]          # weight on u_{k-1}
    upper = scale * flux[1:]           # weight on u_{k+1}
    diag = -(lower + upper)
    return TridiagonalOperator(
        sub=lower[1:].copy(),
        diag=diag,
        sup=upper[:-1].copy(),
        mesh=mesh,
        left_coupling=float(lower[0]),
        right_coupling=float(upper[-1]),
    )


def boundary_adjusted_rhs(op, f, left_value, right_value):
    """Move Dirichlet data to the right-hand side."""
    rhs = check_vector(f, "f", length=op.n).copy()
    rhs[0] -= op.left_coupling * left_value
    rhs[-1] -= op.right_coupling * right_value
    return rhs


def solve_tridiagonal(op, rhs):
    """Thomas elimination without pivoting.

    Raises
    ------
    SingularOperatorError
        If a pivot's magnitude drops below ``PIVOT_TOL``.
    """
    d = check_vector(rhs, "rhs", length=op.n)
    a, b, c = op.sub, op.diag, op.sup
    n = op.n
    cp = np.empty(n)
    dp = np.empty(n)
    piv = b[0]
    if abs(piv) < PIVOT_TOL:
        raise SingularOperatorError("zero pivot in row 0")
    cp[0] = c[0] / piv if n > 1 else 0.0
    dp[0] = d[0] / piv
    for i in range(1, n):
        piv = b[i] - a[i - 1] * cp[i - 1]
        if abs(piv) < PIVOT_TOL:
            raise SingularOperatorError(f"zero pivot in row {i}")
        if i < n - 1:
            cp[i] = c[i] / piv
        dp[i] = (d[i] - a[i - 1] * dp[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        dp[i] -= cp[i] * dp[i + 1]
    return dp


def periodic_nodes(mesh):
    """Nodes of ``mesh`` on the circle ``[0, 1)``: the identified boundary point, then the interior."""
    return mesh.nodes[:-1]


def centered_first_derivative(mesh, u, periodic=False, left_value=None, right_value=None):
    """Centered difference ``(u_{k+1} - u_{k-1}) / (h_k + h_{k+1})``.

    Parameters
    ----------
    mesh : Mesh
    u : array_like
        Interior values (length n). With ``periodic=True`` the values live
        on the circle nodes of :func:`periodic_nodes` (length n+1, the first
        entry being the value at ``0 == 1``).
    periodic : bool
        Wrap neighbour indices around the unit circle.
    left_value, right_value : float, optional
        Dirichlet values used by the first and last rows in the
        non-periodic case. When omitted those rows use one-sided
        differences.
    """
    if periodic:
        x = periodic_nodes(mesh)
        u = check_vector(u, "u", length=x.size)
        h = np.diff(np.concatenate((x, [1.0])))   # h[k] = x_{k+1} - x_k on the circle
        h_left = np.roll(h, 1)
        return (np.roll(u, -1) - np.roll(u, 1)) / (h_left + h)

    u = check_vector(u, "u", length=mesh.n)
    h = mesh.steps
    up = np.empty(u.size + 2)
    up[1:-1] = u
    out = np.empty_like(u)
    if u.size == 1 and (left_value is None or right_value is None):
        raise ValueError("a one-point mesh needs both boundary values")
    up[0] = left_value if left_value is not None else np.nan
    up[-1] = right_value if right_value is not None else np.nan
    out[:] = (up[2:] - up[:-2]) / (h[:-1] + h[1:])
    if left_value is None:
        out[0] = (u[1] - u[0]) / h[1]
    if right_value is None:
        out[-1] = (u[-1] - u[-2]) / h[-2]
    return out
