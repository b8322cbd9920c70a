"""The descent iteration x_{n+1} = x_n - delta(x_n) d(x_n) with tracing.

The driver runs either step rule until a stop condition fires, records
(f, gradient norm, step size, step norm) at every iteration, and
classifies the outcome.  Limit statements about the iteration have no
finite certificate, so the stopping logic uses explicit proxies: a small
terminal gradient, a run of small steps, a value floor for divergence,
and a norm ceiling for escape.  A bounded ring of recent iterates is
retained so tail diagnostics (max step norm, tail diameter) can be
reported for long runs without storing the whole orbit.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from math import ceil, isfinite
from typing import NamedTuple, Optional

from .backtracking import (
    StepRule,
    StepRuleKind,
    StepSizeError,
    armijo_step_size,
    descent_direction,
    local_step_size,
)
from .objectives import CriticalKind, Objective, classify_critical_point
from .sequence_space import Vec, axpy, conjugate_exponent, norm

__all__ = [
    "Outcome",
    "StopSpec",
    "TraceRecord",
    "DescentTrace",
    "TailSummary",
    "AuditResult",
    "NonFiniteError",
    "run_descent",
    "tail_diagnostics",
    "converged_point_audit",
    "write_trace_csv",
    "trace_summary",
]

# A single sub-tolerance step can occur while creeping past a saddle;
# require a run of them before declaring step convergence.
STEP_CONVERGED_WINDOW = 10

# Tail iterates kept for diagnostics.
TAIL_RING_SIZE = 64


class Outcome(str, Enum):
    GRAD_CONVERGED = "GradConverged"
    STEP_CONVERGED = "StepConverged"
    DIVERGING_VALUE = "DivergingValue"
    ESCAPING_NORM = "EscapingNorm"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    STEP_SIZE_FAILURE = "StepSizeFailure"


class NonFiniteError(RuntimeError):
    """Objective value or gradient became non-finite during descent."""

    def __init__(self, iteration: int, what: str):
        super().__init__(f"non-finite {what} at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class StopSpec:
    """Finite proxies for the limit statements about the iteration.

    divergence_floor and norm_ceiling sit far beyond the scale of every
    built-in objective; they are pure guards.
    """

    max_iters: int = 200_000
    grad_tol: float = 1e-8
    step_tol: float = 1e-9
    divergence_floor: float = -1e12
    norm_ceiling: float = 1e8

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.grad_tol > 0.0 and self.step_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if not self.norm_ceiling > 0.0:
            raise ValueError("norm_ceiling must be positive")


class TraceRecord(NamedTuple):
    """One visited iterate.  delta and step_norm describe the step taken
    from this iterate and are None on the terminal record."""

    iter: int
    f: float
    grad_norm: float
    delta: Optional[float]
    step_norm: Optional[float]


@dataclass
class DescentTrace:
    records: list
    terminal: Vec
    outcome: Outcome
    tail_points: tuple  # ((iter, Vec), ...) for the last <= 64 iterates

    @property
    def iters(self) -> int:
        return len(self.records) - 1

    @property
    def final_f(self) -> float:
        return self.records[-1].f

    @property
    def final_grad_norm(self) -> float:
        return self.records[-1].grad_norm


def run_descent(obj: Objective, x0: Vec, rule: StepRule, stop: StopSpec) -> DescentTrace:
    """Iterate from x0 until a stop condition fires.

    Outcome precedence: StepSizeFailure, then DivergingValue, EscapingNorm,
    GradConverged, StepConverged, BudgetExhausted.  Every visited iterate
    gets a record; the terminal record carries no step.  Non-finite values
    or gradients raise NonFiniteError with the iteration index.
    """
    if obj.dim != x0.dim:
        raise ValueError(f"objective dim {obj.dim} does not match start dim {x0.dim}")
    p_dual = conjugate_exponent(x0.p)
    hp = rule.hyper
    armijo = rule.kind == StepRuleKind.ARMIJO

    value = obj.value
    gradient = obj.gradient
    local_radius = obj.local_radius
    local_lipschitz = obj.local_lipschitz

    records = []
    ring: deque = deque(maxlen=TAIL_RING_SIZE)
    x = x0
    ring.append((0, x))
    consec_small = 0
    n = 0
    outcome = None
    while True:
        f = value(x)
        if not isfinite(f):
            raise NonFiniteError(n, "value")
        g = gradient(x)
        gn = norm(g)
        if not isfinite(gn):
            raise NonFiniteError(n, "gradient")

        if f < stop.divergence_floor:
            outcome = Outcome.DIVERGING_VALUE
        elif norm(x) > stop.norm_ceiling:
            outcome = Outcome.ESCAPING_NORM
        elif gn <= stop.grad_tol:
            outcome = Outcome.GRAD_CONVERGED
        elif consec_small >= STEP_CONVERGED_WINDOW:
            outcome = Outcome.STEP_CONVERGED
        elif n >= stop.max_iters:
            outcome = Outcome.BUDGET_EXHAUSTED
        if outcome is not None:
            records.append(TraceRecord(n, f, gn, None, None))
            break

        if p_dual == 2.0:
            direction = g
        else:
            direction = descent_direction(obj, x, p_dual)
        try:
            if armijo:
                delta = armijo_step_size(obj, x, direction, hp, rule.max_halvings)
            else:
                delta = local_step_size(
                    hp, gn, local_radius(x), local_lipschitz(x), rule.max_halvings
                )
        except StepSizeError:
            outcome = Outcome.STEP_SIZE_FAILURE
            records.append(TraceRecord(n, f, gn, None, None))
            break

        x_next = axpy(-delta, direction, x)
        step_norm = norm(axpy(-1.0, x, x_next))
        records.append(TraceRecord(n, f, gn, delta, step_norm))
        consec_small = consec_small + 1 if step_norm <= stop.step_tol else 0
        n += 1
        x = x_next
        ring.append((n, x))

    return DescentTrace(
        records=records, terminal=x, outcome=outcome, tail_points=tuple(ring)
    )


class TailSummary(NamedTuple):
    max_step_norm: float
    diameter: float
    final_grad_norm: float


def tail_diagnostics(trace: DescentTrace, tail_fraction: float) -> TailSummary:
    """Summary of the last ceil(tail_fraction * len) records.

    Returns the max step norm over the tail records, the diameter of the
    retained tail iterates (those in the ring buffer falling inside the
    window), and the terminal gradient norm.  The diameter is a weak
    finite stand-in for statements about the cluster set; it is reported,
    not thresholded.
    """
    if not trace.records:
        raise ValueError("empty trace")
    if not (0.0 < tail_fraction < 1.0):
        raise ValueError("tail_fraction must lie in (0, 1)")
    total = len(trace.records)
    m = max(ceil(tail_fraction * total), 1)
    first = total - m
    max_step = 0.0
    for rec in trace.records[first:]:
        if rec.step_norm is not None and rec.step_norm > max_step:
            max_step = rec.step_norm
    pts = [v for (i, v) in trace.tail_points if i >= first]
    diameter = 0.0
    for a in range(len(pts)):
        for b in range(a + 1, len(pts)):
            d = norm(axpy(-1.0, pts[a], pts[b]))
            if d > diameter:
                diameter = d
    return TailSummary(max_step, diameter, trace.final_grad_norm)


class AuditResult(str, Enum):
    CRITICAL_MINIMUM_LIKE = "CriticalMinimumLike"
    CRITICAL_SADDLE = "CriticalSaddle"
    CRITICAL_MAXIMUM = "CriticalMaximum"
    NOT_CONVERGED = "NotConverged"
    INDETERMINATE = "Indeterminate"


_AUDIT_FROM_KIND = {
    CriticalKind.MINIMUM: AuditResult.CRITICAL_MINIMUM_LIKE,
    CriticalKind.SADDLE: AuditResult.CRITICAL_SADDLE,
    CriticalKind.MAXIMUM: AuditResult.CRITICAL_MAXIMUM,
    CriticalKind.NOT_CRITICAL: AuditResult.NOT_CONVERGED,
    CriticalKind.INDETERMINATE: AuditResult.INDETERMINATE,
}


def converged_point_audit(obj: Objective, trace: DescentTrace, tol: float = 1e-6) -> AuditResult:
    """Classify the terminal point of a converged run.

    Runs the dense-Hessian classifier at the terminal point when the
    outcome indicates convergence; anything else is NotConverged, as is a
    terminal point whose gradient fails the tolerance.
    """
    if trace.outcome not in (Outcome.GRAD_CONVERGED, Outcome.STEP_CONVERGED):
        return AuditResult.NOT_CONVERGED
    kind = classify_critical_point(obj, trace.terminal, tol)
    return _AUDIT_FROM_KIND[kind]


def _fmt(v: Optional[float]) -> str:
    return "" if v is None else format(v, ".17g")


def write_trace_csv(trace: DescentTrace, path) -> None:
    """CSV with header iter,f,grad_norm,delta,step_norm, one row per iteration."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iter,f,grad_norm,delta,step_norm\n")
        for rec in trace.records:
            fh.write(
                f"{rec.iter},{_fmt(rec.f)},{_fmt(rec.grad_norm)},"
                f"{_fmt(rec.delta)},{_fmt(rec.step_norm)}\n"
            )


def trace_summary(trace: DescentTrace) -> dict:
    """The JSON-ready run summary: outcome, iters, final value/gradient, point."""
    return {
        "outcome": trace.outcome.value,
        "iters": trace.iters,
        "final_f": float(trace.final_f),
        "final_grad_norm": float(trace.final_grad_norm),
        "terminal_point": [float(v) for v in trace.terminal.coeffs],
    }
