"""Objective functions with local Lipschitz data.

An objective bundles value and gradient evaluation with two continuous
positive functions r(x) and L(x) such that the gradient is Lipschitz on
the ball B(x, r(x)) with constant L(x).  For twice-differentiable
objectives the canonical recipe is r(x) = 1 + ||x|| together with any
closed-form upper bound for the Hessian norm over B(x, r(x)); the step
size theory only needs an upper bound, never the exact supremum.

Each objective also carries a declared weak-limit soundness class (see
README): the tag records which structural argument guarantees that a
vanishing-gradient weak limit is itself critical.  The tag is
declarative because the underlying property quantifies over weakly
convergent sequences and is not finitely checkable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .sequence_space import Vec, conjugate_exponent, norm

__all__ = [
    "ConditionClass",
    "CriticalKind",
    "Objective",
    "QuadraticSpec",
    "make_quadratic",
    "make_quartic_saddle",
    "gradient_check",
    "classify_critical_point",
    "operator_norm",
]

# Dense Hessian assembly is a diagnostic, not an inner loop; keep it at
# desk scale.
MAX_DENSE_HESSIAN_DIM = 200


class ConditionClass(str, Enum):
    """Structural reason a vanishing-gradient weak limit must be critical."""

    QUADRATIC = "Quadratic"
    CONVEX = "Convex"
    CLASS_S_PLUS = "ClassSPlus"
    UNKNOWN = "Unknown"


class CriticalKind(str, Enum):
    MINIMUM = "Minimum"
    SADDLE = "Saddle"
    MAXIMUM = "Maximum"
    NOT_CRITICAL = "NotCritical"
    INDETERMINATE = "Indeterminate"


def _dual(x: Vec, coeffs: np.ndarray) -> Vec:
    """Wrap gradient coefficients in the dual exponent of the input point."""
    return Vec._wrap(coeffs, conjugate_exponent(x.p))


@dataclass(frozen=True)
class Objective:
    """Value/gradient provider with local Lipschitz data.

    Fields
    ------
    dim             number of coordinates
    value           Vec -> float
    gradient        Vec -> Vec, tagged with the dual exponent of its input
    local_radius    Vec -> r(x) > 0
    local_lipschitz Vec -> L(x) > 0, a Lipschitz constant for the gradient
                    on B(x, r(x))
    hessian_action  optional (Vec, Vec) -> Vec computing H(x) v
    condition_class declared weak-limit soundness class
    known_critical_points
                    optional tuple of (coefficients, kind) with kind one of
                    Minimum / Saddle / Maximum
    """

    name: str
    dim: int
    value: Callable[[Vec], float]
    gradient: Callable[[Vec], Vec]
    local_radius: Callable[[Vec], float]
    local_lipschitz: Callable[[Vec], float]
    hessian_action: Optional[Callable[[Vec, Vec], Vec]] = None
    condition_class: ConditionClass = ConditionClass.UNKNOWN
    known_critical_points: tuple = field(default=())

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("objective dimension must be >= 1")


@dataclass(frozen=True)
class QuadraticSpec:
    """Data for f(x) = 1/2 <Ax, x> + <b, x> with A symmetric."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be a square matrix")
        if b.shape != (A.shape[0],):
            raise ValueError("b must be a vector matching A")
        if float(np.max(np.abs(A - A.T))) > 1e-12:
            raise ValueError("A must be symmetric to 1e-12 (max |A - A^T|)")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.b.size


def operator_norm(A: np.ndarray, rel_tol: float = 1e-10, max_iters: int = 100_000) -> float:
    """Spectral norm of a symmetric matrix by power iteration.

    The Rayleigh estimate ||A v_k|| / ||v_k|| is non-decreasing for
    symmetric A and converges to max |eig|; iteration stops when its
    relative change drops below rel_tol.  The start vector is drawn from
    a fixed-seed generator so repeated constructions are identical.
    """
    n = A.shape[0]
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    est_prev = -np.inf
    for _ in range(max_iters):
        w = A @ v
        wn = float(np.linalg.norm(w))
        if wn == 0.0:
            return 0.0
        est = wn  # ||A v|| with ||v|| = 1
        if abs(est - est_prev) <= rel_tol * est:
            return est
        est_prev = est
        v = w / wn
    return est_prev


def make_quadratic(spec: QuadraticSpec) -> Objective:
    """Objective f(x) = 1/2 <Ax, x> + <b, x>, gradient Ax + b.

    L is the operator norm of A (a global Lipschitz constant for the
    gradient), computed once by power iteration; the critical point
    -A^(-1) b is recorded with its kind from the eigenvalue signs of A
    whenever A is invertible.
    """
    A, b = spec.A, spec.b
    dim = spec.dim

    lip = max(operator_norm(A), np.finfo(float).tiny)

    def value(x: Vec) -> float:
        c = x.coeffs
        return float(0.5 * np.dot(A @ c, c) + np.dot(b, c))

    def gradient(x: Vec) -> Vec:
        return _dual(x, A @ x.coeffs + b)

    def hessian_action(x: Vec, v: Vec) -> Vec:
        return _dual(x, A @ v.coeffs)

    known = ()
    eigs = np.linalg.eigvalsh(A)
    eig_scale = float(np.max(np.abs(eigs)))
    if eig_scale > 0 and float(np.min(np.abs(eigs))) > 1e-12 * eig_scale:
        z = np.linalg.solve(A, -b)
        thr = 1e-12 * eig_scale
        if np.all(eigs > thr):
            kind = CriticalKind.MINIMUM
        elif np.all(eigs < -thr):
            kind = CriticalKind.MAXIMUM
        else:
            kind = CriticalKind.SADDLE
        z.setflags(write=False)
        known = ((z, kind),)

    return Objective(
        name="quadratic",
        dim=dim,
        value=value,
        gradient=gradient,
        local_radius=lambda x: 1.0 + norm(x),
        local_lipschitz=lambda x: lip,
        hessian_action=hessian_action,
        condition_class=ConditionClass.QUADRATIC,
        known_critical_points=known,
    )


def make_quartic_saddle(dim: int) -> Objective:
    """Bounded-below test function with one saddle flanked by two minima.

        f(x) = x_1^2 - x_2^2 + x_2^4/2 + (x_3^2 + x_4^2 + ...)/2

    Critical points: a saddle at the origin (Hessian diag(2, -2, 1, ...))
    and minima at (0, +-1, 0, ...) with value -1/2.  The hyperplane
    {x_2 = 0} is invariant under gradient steps, which makes deliberate
    starts on the saddle's stable set easy to construct.

    The Hessian norm at z is at most 6 ||z||^2 + 2, so
    L(x) = max(2, 6 (||x|| + r(x))^2 + 2) bounds it over B(x, r(x)).
    """
    if dim < 2:
        raise ValueError("quartic saddle objective needs dim >= 2")

    def value(x: Vec) -> float:
        c = x.coeffs
        rest = c[2:]
        return float(c[0] ** 2 - c[1] ** 2 + 0.5 * c[1] ** 4 + 0.5 * np.dot(rest, rest))

    def gradient(x: Vec) -> Vec:
        c = x.coeffs
        g = np.empty_like(c)
        g[0] = 2.0 * c[0]
        g[1] = -2.0 * c[1] + 2.0 * c[1] ** 3
        g[2:] = c[2:]
        return _dual(x, g)

    def hessian_action(x: Vec, v: Vec) -> Vec:
        c, w = x.coeffs, v.coeffs
        h = np.empty_like(w)
        h[0] = 2.0 * w[0]
        h[1] = (-2.0 + 6.0 * c[1] ** 2) * w[1]
        h[2:] = w[2:]
        return _dual(x, h)

    def local_lipschitz(x: Vec) -> float:
        m = 2.0 * norm(x) + 1.0  # ||x|| + r(x)
        return max(2.0, 6.0 * m * m + 2.0)

    saddle = np.zeros(dim)
    saddle.setflags(write=False)
    min_pos = np.zeros(dim)
    min_pos[1] = 1.0
    min_pos.setflags(write=False)
    min_neg = np.zeros(dim)
    min_neg[1] = -1.0
    min_neg.setflags(write=False)

    return Objective(
        name="quartic-saddle",
        dim=dim,
        value=value,
        gradient=gradient,
        local_radius=lambda x: 1.0 + norm(x),
        local_lipschitz=local_lipschitz,
        hessian_action=hessian_action,
        condition_class=ConditionClass.UNKNOWN,
        known_critical_points=(
            (saddle, CriticalKind.SADDLE),
            (min_pos, CriticalKind.MINIMUM),
            (min_neg, CriticalKind.MINIMUM),
        ),
    )


def gradient_check(obj: Objective, x: Vec, h: float = 1e-5) -> float:
    """Max relative discrepancy between the gradient and central differences.

    Returns max_j |cd_j - g_j| / max(1, |g_j|) with the central difference
    taken coordinatewise at step h.
    """
    if h <= 0.0:
        raise ValueError("finite-difference step must be positive")
    g = obj.gradient(x).coeffs
    worst = 0.0
    base = x.coeffs
    for j in range(obj.dim):
        plus = base.copy()
        plus[j] += h
        minus = base.copy()
        minus[j] -= h
        cd = (obj.value(Vec._wrap(plus, x.p)) - obj.value(Vec._wrap(minus, x.p))) / (2.0 * h)
        worst = max(worst, abs(cd - g[j]) / max(1.0, abs(g[j])))
    return worst


def classify_critical_point(obj: Objective, x: Vec, tol: float = 1e-8) -> CriticalKind:
    """Classify x by the eigenvalue signs of the dense Hessian.

    Returns NotCritical when the gradient norm exceeds tol.  Otherwise the
    Hessian is assembled by applying hessian_action to basis vectors and
    its eigenvalues thresholded at +-tol: all above gives Minimum, all
    below Maximum, both signs Saddle, anything unresolved Indeterminate
    (degenerate directions are reported, never guessed).
    """
    if obj.hessian_action is None:
        raise ValueError(f"objective {obj.name!r} provides no hessian_action")
    if obj.dim > MAX_DENSE_HESSIAN_DIM:
        raise ValueError(
            f"dense Hessian classification is limited to dim <= {MAX_DENSE_HESSIAN_DIM}"
        )
    if norm(obj.gradient(x)) > tol:
        return CriticalKind.NOT_CRITICAL
    H = np.empty((obj.dim, obj.dim))
    for j in range(obj.dim):
        e = np.zeros(obj.dim)
        e[j] = 1.0
        H[:, j] = obj.hessian_action(x, Vec._wrap(e, x.p)).coeffs
    H = 0.5 * (H + H.T)
    eigs = np.linalg.eigvalsh(H)
    if np.all(eigs > tol):
        return CriticalKind.MINIMUM
    if np.all(eigs < -tol):
        return CriticalKind.MAXIMUM
    if np.any(eigs > tol) and np.any(eigs < -tol):
        return CriticalKind.SADDLE
    return CriticalKind.INDETERMINATE
