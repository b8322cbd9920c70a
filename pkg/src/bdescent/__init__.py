"""Locally backtracked gradient descent on finite l^p truncations.

Library layout:

    sequence_space   vectors, norms, dual pairing, duality mapping
    objectives       objective interface and built-in test functions
    backtracking     step-size rules and descent directions
    driver           the descent loop, tracing, outcome classification
    poisson          discrete Dirichlet energy and a direct-solve oracle
    experiments      seeded experiments (Monte Carlo saddle study, checks)
    cli              the bdescent command
"""

from .backtracking import (
    HyperParams,
    StepRule,
    StepRuleKind,
    StepSizeError,
    armijo_step_size,
    descent_direction,
    local_step_size,
)
from .driver import (
    AuditResult,
    DescentTrace,
    NonFiniteError,
    Outcome,
    StopSpec,
    converged_point_audit,
    run_descent,
    tail_diagnostics,
    trace_summary,
    write_trace_csv,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    McSummary,
    canonical_json,
    make_objective,
    run_experiment,
    saddle_mc,
)
from .objectives import (
    ConditionClass,
    CriticalKind,
    Objective,
    QuadraticSpec,
    classify_critical_point,
    gradient_check,
    make_quadratic,
    make_quartic_saddle,
)
from .poisson import (
    GridSpec,
    PoissonProblem,
    direct_solve,
    energy_objective,
    make_problem,
    solution_errors,
)
from .sequence_space import Vec, axpy, conjugate_exponent, duality_map, norm, pairing

__version__ = "0.1.0"
