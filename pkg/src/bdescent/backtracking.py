"""Step-size selection on the geometric grid {beta^n * delta0}.

Two rules are provided.  The local rule picks, by descending enumeration
of the grid, the largest delta with

    delta < alpha / L(x)         and        delta * ||grad f(x)|| < r(x),

both inequalities strict.  The second condition is vacuous at a critical
point (0 < r always), which is exactly the literal reading of the
inequality at gradient norm zero.  The classical Armijo rule instead
accepts the largest grid delta with

    f(x - delta d) <= f(x) - alpha * delta * <grad f(x), d>,

non-strict, for a descent direction d.

Descent directions follow the dual-pairing contract
<grad f(x), d> = ||grad f(x)||^2 and ||d|| = ||grad f(x)||: the raw
gradient in the Hilbert case p = 2, the duality-mapped gradient
otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .objectives import Objective
from .sequence_space import Vec, _same_exponent, axpy, duality_map, norm, pairing

__all__ = [
    "HyperParams",
    "StepRuleKind",
    "StepRule",
    "StepSizeError",
    "local_step_size",
    "armijo_step_size",
    "descent_direction",
]

DEFAULT_MAX_HALVINGS = 200

# Grid candidates are produced by repeated multiplication delta *= beta,
# never by powering, so accepted values are bitwise members of the same
# grid that tests and diagnostics enumerate.


class StepSizeError(RuntimeError):
    """No grid point satisfied the rule within the halving budget.

    With valid inputs (finite positive L and r) the budget cannot be
    exhausted at any sane scale, so this surfaces contract violations
    instead of silently returning a tiny step.
    """


@dataclass(frozen=True)
class HyperParams:
    """The step-size triple: 0 < alpha < 1, 0 < beta < 1, delta0 > 0."""

    alpha: float = 0.5
    beta: float = 0.5
    delta0: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (0.0 < self.beta < 1.0):
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not (self.delta0 > 0.0 and math.isfinite(self.delta0)):
            raise ValueError(f"delta0 must be positive and finite, got {self.delta0}")


class StepRuleKind(str, Enum):
    LOCAL_BACKTRACKING = "LocalBacktracking"
    ARMIJO = "Armijo"


@dataclass(frozen=True)
class StepRule:
    kind: StepRuleKind = StepRuleKind.LOCAL_BACKTRACKING
    hyper: HyperParams = HyperParams()
    max_halvings: int = DEFAULT_MAX_HALVINGS

    def __post_init__(self):
        if self.max_halvings < 1:
            raise ValueError("max_halvings must be >= 1")
        # Keep the smallest grid candidate above the underflow guard.
        floor_log10 = math.log10(self.hyper.delta0) + self.max_halvings * math.log10(self.hyper.beta)
        if floor_log10 < -300.0:
            raise ValueError(
                "max_halvings pushes the step grid below 1e-300; reduce the budget"
            )


def local_step_size(
    hp: HyperParams,
    grad_norm: float,
    r_x: float,
    L_x: float,
    max_halvings: int = DEFAULT_MAX_HALVINGS,
) -> float:
    """Largest delta in {beta^n delta0} with delta < alpha/L and delta*||g|| < r.

    Raises StepSizeError when max_halvings candidates are exhausted.
    """
    if not (r_x > 0.0 and L_x > 0.0):
        raise ValueError("local Lipschitz data must be positive")
    if not (grad_norm >= 0.0 and math.isfinite(grad_norm)):
        raise ValueError("gradient norm must be finite and nonnegative")
    bound = hp.alpha / L_x
    delta = hp.delta0
    for _ in range(max_halvings + 1):
        if delta < bound and (grad_norm == 0.0 or delta * grad_norm < r_x):
            return delta
        delta *= hp.beta
    raise StepSizeError(
        f"no step in {max_halvings} halvings satisfied delta < {bound} "
        f"and delta * {grad_norm} < {r_x}"
    )


def armijo_step_size(
    obj: Objective,
    x: Vec,
    direction: Vec,
    hp: HyperParams,
    max_halvings: int = DEFAULT_MAX_HALVINGS,
) -> float:
    """Largest grid delta passing the sufficient-decrease test.

    Accepts delta when f(x - delta d) <= f(x) - alpha delta <grad f(x), d>.
    The pairing <grad f(x), d> must be positive (descent direction).
    """
    g = obj.gradient(x)
    slope = pairing(g, direction)
    if not slope > 0.0:
        raise ValueError(f"not a descent direction: <grad, d> = {slope}")
    fx = obj.value(x)
    delta = hp.delta0
    for _ in range(max_halvings + 1):
        trial = axpy(-delta, direction, x)
        if obj.value(trial) <= fx - hp.alpha * delta * slope:
            return delta
        delta *= hp.beta
    raise StepSizeError(
        f"Armijo condition not met within {max_halvings} halvings from delta0={hp.delta0}"
    )


def descent_direction(obj: Objective, x: Vec, p: float) -> Vec:
    """Direction paired with the gradient as <g, d> = ||g||^2, ||d|| = ||g||.

    p is the exponent of the gradient (dual) space: the raw gradient for
    p = 2, its duality-mapped image otherwise.  The result lives in the
    conjugate space, i.e. the space of the iterates.
    """
    g = obj.gradient(x)
    if not _same_exponent(p, g.p):
        raise ValueError(f"direction exponent {p} does not match gradient exponent {g.p}")
    if p == 2.0:
        return g
    return duality_map(g)
