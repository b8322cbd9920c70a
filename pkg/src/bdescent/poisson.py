"""Discrete Dirichlet energy for -laplace(u) = g on the unit interval/square.

The energy

    f(u) = 1/2 * h^d * u' K u  -  h^d * g' u

is the trapezoid-weighted discretization of 1/2 int ||grad u||^2 - int g u
over a uniform interior grid with zero boundary values, where K is the
standard second-order finite-difference negative Laplacian (3-point
stencil in 1D, 5-point in 2D, applied matrix-free).  Its critical point
solves K u = g, i.e. the discrete weak formulation, which a direct solver
reproduces independently of the descent path: tridiagonal elimination in
1D, conjugate gradients on the stencil in 2D.

Descent on this objective uses the plain Euclidean coefficient norm
(p = 2 geometry; the underlying function space is a Hilbert space).  The
gradient-energy seminorm h^d * u'Ku is reported as a diagnostic only; a
preconditioned variant that descends in that geometry is out of scope.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .objectives import ConditionClass, Objective
from .sequence_space import Vec, conjugate_exponent, norm

__all__ = [
    "GridSpec",
    "PoissonProblem",
    "SOURCES",
    "EXACT_SOLUTIONS",
    "make_problem",
    "node_coordinates",
    "apply_stencil",
    "energy_objective",
    "direct_solve",
    "solution_errors",
    "write_node_values_csv",
    "read_node_values_csv",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of n interior points per axis on the unit domain.

    Spacing is h = 1/(n+1); boundary values are identically zero and are
    not stored.  dim is the spatial dimension, 1 or 2.
    """

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("grid dimension must be 1 or 2")
        if self.n < 1:
            raise ValueError("need at least one interior point per axis")

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def num_unknowns(self) -> int:
        return self.n**self.dim


@dataclass(frozen=True)
class PoissonProblem:
    grid: GridSpec
    g: np.ndarray  # source sampled at interior nodes, row-major in 2D

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        if g.shape != (self.grid.num_unknowns,):
            raise ValueError(
                f"source must have {self.grid.num_unknowns} values, got {g.shape}"
            )
        if not np.isfinite(g).all():
            raise ValueError("source values must be finite")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)


def node_coordinates(grid: GridSpec) -> np.ndarray:
    """Interior node coordinates, shape (N, dim), row-major (x slowest in 2D)."""
    axis = (np.arange(grid.n) + 1.0) * grid.h
    if grid.dim == 1:
        return axis.reshape(-1, 1)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def _sine(coords: np.ndarray) -> np.ndarray:
    out = np.full(coords.shape[0], np.pi**2 * coords.shape[1])
    for c in range(coords.shape[1]):
        out = out * np.sin(np.pi * coords[:, c])
    return out


def _constant(coords: np.ndarray) -> np.ndarray:
    return np.ones(coords.shape[0])


def _bump(coords: np.ndarray) -> np.ndarray:
    r2 = np.sum((coords - 0.5) ** 2, axis=1)
    return np.exp(-50.0 * r2)


SOURCES = {"sine": _sine, "constant": _constant, "bump": _bump}


def _sine_solution(coords: np.ndarray) -> np.ndarray:
    out = np.ones(coords.shape[0])
    for c in range(coords.shape[1]):
        out = out * np.sin(np.pi * coords[:, c])
    return out


def _constant_solution_1d(coords: np.ndarray) -> np.ndarray:
    x = coords[:, 0]
    return 0.5 * x * (1.0 - x)


# Closed-form solutions, keyed by (source, dim), where one exists.
EXACT_SOLUTIONS = {
    ("sine", 1): _sine_solution,
    ("sine", 2): _sine_solution,
    ("constant", 1): _constant_solution_1d,
}


def make_problem(grid: GridSpec, source: str) -> PoissonProblem:
    if source not in SOURCES:
        raise ValueError(f"unknown source {source!r}; choose from {sorted(SOURCES)}")
    return PoissonProblem(grid, SOURCES[source](node_coordinates(grid)))


def apply_stencil(grid: GridSpec, u: np.ndarray) -> np.ndarray:
    """Matrix-free K u for the negative Laplacian with zero Dirichlet data."""
    h2 = grid.h * grid.h
    if grid.dim == 1:
        out = 2.0 * u
        out[1:] -= u[:-1]
        out[:-1] -= u[1:]
        return out / h2
    n = grid.n
    v = u.reshape(n, n)
    out = 4.0 * v
    out[1:, :] -= v[:-1, :]
    out[:-1, :] -= v[1:, :]
    out[:, 1:] -= v[:, :-1]
    out[:, :-1] -= v[:, 1:]
    return out.ravel() / h2


def energy_objective(prob: PoissonProblem) -> Objective:
    """The discrete Dirichlet energy as a descent objective.

    value(u) = 1/2 h^d u'Ku - h^d g'u, gradient(u) = h^d (Ku - g).  The
    stencil norm is bounded by 4*dim/h^2, so L = h^d * 4*dim/h^2 is a
    global Lipschitz constant for the gradient.
    """
    grid = prob.grid
    g = prob.g
    w = grid.h**grid.dim
    lip = w * 4.0 * grid.dim / (grid.h * grid.h)

    def value(x: Vec) -> float:
        u = x.coeffs
        ku = apply_stencil(grid, u)
        return float(0.5 * w * np.dot(u, ku) - w * np.dot(g, u))

    def gradient(x: Vec) -> Vec:
        u = x.coeffs
        return Vec._wrap(w * (apply_stencil(grid, u) - g), conjugate_exponent(x.p))

    def hessian_action(x: Vec, v: Vec) -> Vec:
        return Vec._wrap(w * apply_stencil(grid, v.coeffs), conjugate_exponent(x.p))

    return Objective(
        name="poisson-energy",
        dim=grid.num_unknowns,
        value=value,
        gradient=gradient,
        local_radius=lambda x: 1.0 + norm(x),
        local_lipschitz=lambda x: lip,
        hessian_action=hessian_action,
        condition_class=ConditionClass.QUADRATIC,
    )


def direct_solve(prob: PoissonProblem, cg_rtol: float = 1e-12) -> np.ndarray:
    """Solve K u = g directly, independent of any descent.

    1D uses banded (tridiagonal) elimination, exact to roundoff.  2D runs
    conjugate gradients on the matrix-free stencil down to relative
    residual cg_rtol; K is symmetric positive definite, so a failure to
    converge within 10 N iterations signals a stencil bug and raises.
    """
    grid = prob.grid
    g = prob.g
    if grid.dim == 1:
        n = grid.n
        h2 = grid.h * grid.h
        ab = np.zeros((3, n))
        ab[0, 1:] = -1.0 / h2
        ab[1, :] = 2.0 / h2
        ab[2, :-1] = -1.0 / h2
        return solve_banded((1, 1), ab, g)

    N = grid.num_unknowns
    b_norm = float(np.linalg.norm(g))
    if b_norm == 0.0:
        return np.zeros(N)
    x = np.zeros(N)
    r = g.copy()
    p = r.copy()
    rs = float(np.dot(r, r))
    for _ in range(10 * N):
        if np.sqrt(rs) <= cg_rtol * b_norm:
            return x
        kp = apply_stencil(grid, p)
        alpha = rs / float(np.dot(p, kp))
        x += alpha * p
        r -= alpha * kp
        rs_new = float(np.dot(r, r))
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise RuntimeError(
        f"conjugate gradients failed to reach relative residual {cg_rtol} "
        f"within {10 * N} iterations; the stencil is not SPD-consistent"
    )


def solution_errors(u: np.ndarray, prob: PoissonProblem, exact) -> tuple[float, float]:
    """(max nodal error, discrete L2 error) of u against exact(coords)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (prob.grid.num_unknowns,):
        raise ValueError("node values do not match the grid")
    err = u - exact(node_coordinates(prob.grid))
    max_err = float(np.max(np.abs(err)))
    l2_err = float(np.sqrt(prob.grid.h**prob.grid.dim * np.dot(err, err)))
    return max_err, l2_err


def write_node_values_csv(path, grid: GridSpec, u: np.ndarray) -> None:
    """Coordinate columns then value, one interior node per row, row-major."""
    coords = node_coordinates(grid)
    header = "x,u\n" if grid.dim == 1 else "x,y,u\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header)
        for row, val in zip(coords, u):
            cols = [format(c, ".17g") for c in row] + [format(val, ".17g")]
            fh.write(",".join(cols) + "\n")


def read_node_values_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read back (coords, values) from the node-value CSV layout."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :-1], data[:, -1]
