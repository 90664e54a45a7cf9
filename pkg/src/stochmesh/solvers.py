"""Boundary value problems and their finite-difference solvers.

Every problem type exposes ``kind``, ``exact(x)`` (or ``None``) and
``solve(mesh)``; :func:`solve` is the dispatcher used by the sampling
loop. Problems are plain dataclasses so they pickle to worker processes.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .discretize import (
    assemble_second_derivative,
    boundary_adjusted_rhs,
    periodic_nodes,
    solve_tridiagonal,
)
from .exceptions import NonlinearSolverError

PROBLEM_KINDS = ("poisson-generic", "singular", "hamilton-jacobi", "oscillatory")


@dataclass(frozen=True, eq=False)
class SampledSolution:
    """Approximate solution values at the interior points of ``mesh``.

    ``iterations`` and ``residual`` are filled in by nonlinear solvers.
    """

    mesh: object
    values: np.ndarray
    iterations: int = 0
    residual: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.mesh.n,):
            raise ValueError(f"expected {self.mesh.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("solution contains non-finite values")
        object.__setattr__(self, "values", v)


class _QuadraticExact:
    # exact solution of u'' = c with Dirichlet data; a class so it pickles
    def __init__(self, c, left, right):
        self.c, self.left, self.right = float(c), float(left), float(right)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.left + (self.right - self.left - 0.5 * self.c) * x + 0.5 * self.c * x * x


class _ConstantForcing:
    def __init__(self, value):
        self.value = float(value)

    def __call__(self, x):
        return np.full(np.shape(x), self.value)


@dataclass(frozen=True, eq=False)
class PoissonProblem:
    """``u'' = forcing(x)`` on (0, 1) with ``u(0) = left``, ``u(1) = right``.

    ``forcing`` may be a callable or a number. For numeric forcing the
    exact quadratic solution is supplied automatically.
    """

    forcing: object = 0.0
    left: float = 0.0
    right: float = 1.0
    exact_solution: object = None
    kind = "poisson-generic"

    def __post_init__(self):
        if not callable(self.forcing):
            c = float(self.forcing)
            object.__setattr__(self, "forcing", _ConstantForcing(c))
            if self.exact_solution is None:
                object.__setattr__(self, "exact_solution",
                                   _QuadraticExact(c, self.left, self.right))

    def exact(self, x):
        return None if self.exact_solution is None else self.exact_solution(x)

    @property
    def has_exact(self):
        return self.exact_solution is not None

    def solve(self, mesh):
        op = assemble_second_derivative(mesh)
        f = np.asarray(self.forcing(mesh.interior), dtype=float)
        rhs = boundary_adjusted_rhs(op, f, self.left, self.right)
        return SampledSolution(mesh, solve_tridiagonal(op, rhs))


@dataclass(frozen=True)
class SingularProblem:
    """``(x^alpha u')' = g(x) u`` with ``u(0) = 1``, ``u(1) = e``.

    ``g(x) = beta x^(alpha+beta-2) ((alpha+beta-1) + beta x^beta)`` makes
    ``u(x) = exp(x^beta)`` the exact solution.
    """

    alpha: float = 0.85
    beta: float = 10.0
    kind = "singular"
    has_exact = True

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @property
    def left(self):
        return 1.0

    @property
    def right(self):
        return math.e

    def coefficient(self, x):
        return np.power(x, self.alpha)

    def reaction(self, x):
        a, b = self.alpha, self.beta
        x = np.asarray(x, dtype=float)
        return b * x ** (a + b - 2.0) * ((a + b - 1.0) + b * x**b)

    def exact(self, x):
        return np.exp(np.power(x, self.beta))

    def solve(self, mesh):
        op = assemble_second_derivative(mesh, self.coefficient)
        op = op.shifted(-self.reaction(mesh.interior))
        rhs = boundary_adjusted_rhs(op, np.zeros(mesh.n), self.left, self.right)
        return SampledSolution(mesh, solve_tridiagonal(op, rhs))


@dataclass(frozen=True)
class OscillatoryProblem:
    """``u'' = -20 + a (phi'' cos(phi) - phi'^2 sin(phi))``, ``u(0)=1``, ``u(1)=3``.

    ``phi(x) = frequency * pi * x**3`` with ``frequency`` 5 or 20. The exact
    solution is ``1 + 12x - 10x^2 + a sin(phi(x))``.
    """

    frequency: float = 5.0
    a: float = 0.5
    kind = "oscillatory"
    has_exact = True
    left = 1.0
    right = 3.0

    def __post_init__(self):
        if self.frequency not in (5, 20):
            raise ValueError(f"frequency must be 5 or 20, got {self.frequency}")

    def phase(self, x):
        return self.frequency * math.pi * np.asarray(x, dtype=float) ** 3

    def forcing(self, x):
        x = np.asarray(x, dtype=float)
        k = self.frequency * math.pi
        phi, d1, d2 = k * x**3, 3.0 * k * x**2, 6.0 * k * x
        return -20.0 + self.a * (d2 * np.cos(phi) - d1**2 * np.sin(phi))

    def exact(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 + 12.0 * x - 10.0 * x**2 + self.a * np.sin(self.phase(x))

    def solve(self, mesh):
        op = assemble_second_derivative(mesh)
        rhs = boundary_adjusted_rhs(op, self.forcing(mesh.interior), self.left, self.right)
        return SampledSolution(mesh, solve_tridiagonal(op, rhs))


@dataclass(frozen=True)
class BFGSOptions:
    """BFGS settings.

    ``stall_resolution`` applies once neither the BFGS direction nor
    steepest descent yields a decrease: the iterate is accepted as a
    minimiser to working precision when the largest decrease a
    steepest-descent step could achieve, ``|g|^2 / (2 L)`` with ``L`` the
    curvature along ``g``, is at most ``stall_resolution`` times the
    rounding noise in the objective value.
    """

    gtol: float = 1e-10
    maxiter: int = 500
    armijo_c: float = 1e-4
    max_halvings: int = 60
    stall_resolution: float = 64.0


@dataclass(frozen=True)
class HamiltonJacobiProblem:
    """Steady ``u + H(u_x) = f`` on the unit circle, ``H(p) = p^2 / pi^2``.

    ``f(x) = -|sin(pi(x - pi/4))| + cos^2(pi(x - pi/4))``; the exact solution
    ``-|sin(pi(x - pi/4))|`` has a kink at ``x = pi/4``. Setting
    ``hamiltonian_scale=0`` drops ``H`` (useful for testing).
    """

    hamiltonian_scale: float = 1.0 / math.pi**2
    options: BFGSOptions = field(default_factory=BFGSOptions)
    kind = "hamilton-jacobi"
    has_exact = True

    def forcing(self, x):
        t = math.pi * (np.asarray(x, dtype=float) - math.pi / 4.0)
        return -np.abs(np.sin(t)) + np.cos(t) ** 2

    def exact(self, x):
        t = math.pi * (np.asarray(x, dtype=float) - math.pi / 4.0)
        return -np.abs(np.sin(t))

    def solve(self, mesh):
        return solve_hj(mesh, self)


def periodic_difference_matrix(nodes):
    """Dense centered-difference matrix on sorted circle nodes in ``[0, 1)``."""
    m = nodes.size
    h = np.diff(np.concatenate((nodes, [nodes[0] + 1.0])))
    denom = np.roll(h, 1) + h
    d = np.zeros((m, m))
    idx = np.arange(m)
    d[idx, (idx + 1) % m] += 1.0 / denom
    d[idx, (idx - 1) % m] -= 1.0 / denom
    return d


def bfgs_minimize(fun_grad, x0, options=BFGSOptions(), f_noise=None):
    """Minimise with BFGS and Armijo backtracking (step halving).

    ``fun_grad(x)`` returns ``(value, gradient)``. Returns
    ``(x, value, gradient_norm, iterations)``. ``f_noise(x)``, if given,
    estimates the absolute rounding noise of the objective at ``x``; the
    default is ``eps * |value|``.

    Raises
    ------
    NonlinearSolverError
        If ``gtol`` is not reached within ``maxiter`` iterations, unless
        the iteration stalled at a point where no representable decrease
        remains (see :class:`BFGSOptions`).
    """
    x = np.array(x0, dtype=float)
    fx, g = fun_grad(x)
    hinv = np.eye(x.size)
    gnorm = float(np.linalg.norm(g))
    it = 0
    stalled = restarted = False
    while gnorm > options.gtol and it < options.maxiter:
        p = -hinv @ g
        slope = float(g @ p)
        if slope >= 0.0:
            # lost descent: restart from steepest descent
            hinv = np.eye(x.size)
            p = -g
            slope = -gnorm**2
        t = 1.0
        for _ in range(options.max_halvings):
            x_new = x + t * p
            f_new, g_new = fun_grad(x_new)
            if f_new <= fx + options.armijo_c * t * slope:
                break
            t *= 0.5
        else:
            f_new = fx
        if not f_new < fx or np.array_equal(x_new, x):
            if restarted:
                stalled = True
                break
            # one retry along steepest descent before declaring a stall
            hinv = np.eye(x.size)
            restarted = True
            continue
        restarted = False
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        x, fx, g = x_new, f_new, g_new
        gnorm = float(np.linalg.norm(g))
        it += 1
        if sy > 1e-300:
            rho = 1.0 / sy
            hy = hinv @ y
            hinv += (rho * rho * float(y @ hy) + rho) * np.outer(s, s) \
                - rho * (np.outer(hy, s) + np.outer(s, hy))
    if stalled:
        noise = np.finfo(float).eps * abs(fx) if f_noise is None else f_noise(x)
        stalled = _unresolvable_decrease(fun_grad, x, g, noise, options)
    if gnorm > options.gtol and not stalled:
        raise NonlinearSolverError(
            f"BFGS stopped after {it} iterations with gradient norm {gnorm:.3e}",
            iterations=it, residual=gnorm)
    return x, fx, gnorm, it


def _unresolvable_decrease(fun_grad, x, g, noise, options):
    # curvature along g from one forward difference of the gradient
    gnorm = float(np.linalg.norm(g))
    direction = g / gnorm
    delta = math.sqrt(np.finfo(float).eps) * max(1.0, float(np.linalg.norm(x)))
    curv = float(direction @ (fun_grad(x + delta * direction)[1] - g)) / delta
    if not curv > 0.0:
        return False
    best_decrease = 0.5 * gnorm**2 / curv
    return best_decrease <= options.stall_resolution * noise


def hj_residual_parts(u, d, f, scale):
    du = d @ u
    r = u + scale * du * du - f
    grad = r + 2.0 * scale * (d.T @ (du * r))
    return r, grad


def solve_hj(mesh, problem=None):
    """Solve the periodic Hamilton-Jacobi problem on ``mesh``.

    Unknowns sit on the circle nodes (the identified boundary point 0 == 1
    and the interior points). The residual ``u + H(D u) - f`` with ``D`` the
    periodic centered difference is driven to zero by minimising half its
    squared 2-norm, starting from ``u = f``. The returned solution carries
    the interior values; ``residual`` is the final residual 2-norm.
    """
    problem = HamiltonJacobiProblem() if problem is None else problem
    if mesh.n < 2:
        raise ValueError("the Hamilton-Jacobi solver needs n >= 2 interior points")
    nodes = periodic_nodes(mesh)
    d = periodic_difference_matrix(nodes)
    f = problem.forcing(nodes)
    scale = problem.hamiltonian_scale

    def fun_grad(u):
        r, grad = hj_residual_parts(u, d, f, scale)
        return 0.5 * float(r @ r), grad

    def objective_noise(u):
        # each residual entry carries rounding error ~ eps * (sum of its term sizes)
        du = d @ u
        r = u + scale * du * du - f
        terms = np.abs(u) + np.abs(scale * du * du) + np.abs(f)
        return float(np.linalg.norm(r) * np.linalg.norm(np.finfo(float).eps * terms))

    u, fx, _, it = bfgs_minimize(fun_grad, f, problem.options, objective_noise)
    return SampledSolution(mesh, u[1:], iterations=it, residual=math.sqrt(2.0 * fx))


def solve(problem, mesh):
    """Solve ``problem`` on the interior points of ``mesh``."""
    return problem.solve(mesh)


def exact_error(problem, sol, norm="max"):
    """Max or RMS norm of ``exact(x_k) - values_k`` over interior nodes."""
    if not getattr(problem, "has_exact", False):
        raise ValueError(f"problem {problem.kind!r} has no exact solution")
    err = np.abs(np.asarray(problem.exact(sol.mesh.interior)) - sol.values)
    if norm == "max":
        return float(err.max())
    if norm == "rms":
        return float(np.sqrt(np.mean(err * err)))
    raise ValueError(f"unknown norm {norm!r}; expected 'max' or 'rms'")


def make_problem(kind, **params):
    """Build a problem from a kind tag and keyword parameters."""
    builders = {
        "poisson-generic": PoissonProblem,
        "singular": SingularProblem,
        "hamilton-jacobi": HamiltonJacobiProblem,
        "oscillatory": OscillatoryProblem,
    }
    try:
        cls = builders[kind]
    except KeyError:
        raise ValueError(f"unknown problem kind {kind!r}; expected one of {PROBLEM_KINDS}") from None
    return cls(**params)
