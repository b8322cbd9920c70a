"""Named experiments with seeded, machine-readable results.

Every experiment is a pure function of its configuration: the seed fully
determines all sampling, summaries are canonical JSON (sorted keys, no
timestamps), and Monte Carlo trials draw from per-trial generators keyed
by (seed, trial index) so serial and parallel schedules produce
byte-identical output.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .backtracking import HyperParams, StepRule, StepRuleKind, StepSizeError
from .driver import (
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
from .objectives import (
    CriticalKind,
    MAX_DENSE_HESSIAN_DIM,
    Objective,
    QuadraticSpec,
    make_quadratic,
    make_quartic_saddle,
)
from .poisson import (
    EXACT_SOLUTIONS,
    GridSpec,
    apply_stencil,
    direct_solve,
    energy_objective,
    make_problem,
    solution_errors,
    write_node_values_csv,
)
from .sequence_space import Vec, conjugate_exponent

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "EXPERIMENTS",
    "OBJECTIVES",
    "McSummary",
    "make_objective",
    "saddle_mc",
    "run_experiment",
    "canonical_json",
]

EXPERIMENTS = ("descent", "poisson", "saddle-mc", "duality-check")
OBJECTIVES = (
    "identity-quadratic",
    "anisotropic-quadratic",
    "indefinite-quadratic",
    "quartic-saddle",
)

# A terminal point counts as a known critical point when it lies within
# this Euclidean distance of one; the built-in minima sit at distance 1
# from the built-in saddles, so the threshold is comfortably separating.
SADDLE_PROXIMITY = 1e-4

# Tail window used in descent summaries.
SUMMARY_TAIL_FRACTION = 0.05


class ConfigError(ValueError):
    """Invalid experiment configuration; carries the offending field name."""

    def __init__(self, fld: str, message: str):
        super().__init__(f"{fld}: {message}")
        self.field = fld


def make_objective(name: str, dim: int) -> Objective:
    """Construct a built-in objective by CLI name."""
    if name == "identity-quadratic":
        return make_quadratic(QuadraticSpec(np.eye(dim), np.zeros(dim)))
    if name == "anisotropic-quadratic":
        if dim < 2:
            raise ValueError("anisotropic-quadratic needs dim >= 2")
        diag = np.full(dim, 4.0)
        diag[0], diag[1] = 2.0, 8.0
        A = np.diag(diag)
        return make_quadratic(QuadraticSpec(A, -A @ np.ones(dim)))
    if name == "indefinite-quadratic":
        if dim < 2:
            raise ValueError("indefinite-quadratic needs dim >= 2")
        diag = np.ones(dim)
        diag[1] = -1.0
        return make_quadratic(QuadraticSpec(np.diag(diag), np.zeros(dim)))
    if name == "quartic-saddle":
        return make_quartic_saddle(dim)
    raise ValueError(f"unknown objective {name!r}; choose from {OBJECTIVES}")


@dataclass
class ExperimentConfig:
    experiment: str
    objective: str = "identity-quadratic"
    dim: int = 2
    p: float = 2.0
    alpha: float = 0.5
    beta: float = 0.5
    delta0: float = 1.0
    grad_tol: float = 1e-8
    step_tol: float = 1e-9
    max_iters: int = 200_000
    trials: int = 500
    radius: float = 1.0
    jitter: float = 0.05
    seed: int = 0
    out: str = "."
    keep_traces: bool = False
    grid_n: int = 63
    source: str = "sine"

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"must be one of {EXPERIMENTS}")
        if not self.p > 1.0:
            raise ConfigError("p", "must be > 1")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError("alpha", "must lie in (0, 1)")
        if not (0.0 < self.beta < 1.0):
            raise ConfigError("beta", "must lie in (0, 1)")
        if not self.delta0 > 0.0:
            raise ConfigError("delta0", "must be positive")
        if not self.grad_tol > 0.0:
            raise ConfigError("grad-tol", "must be positive")
        if not self.step_tol > 0.0:
            raise ConfigError("step-tol", "must be positive")
        if self.max_iters < 1:
            raise ConfigError("max-iters", "must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed", "must fit in an unsigned 64-bit integer")
        if self.experiment in ("descent", "saddle-mc"):
            if self.objective not in OBJECTIVES:
                raise ConfigError("objective", f"must be one of {OBJECTIVES}")
            if self.dim < 1:
                raise ConfigError("dim", "must be >= 1")
            if self.objective != "identity-quadratic" and self.dim < 2:
                raise ConfigError("dim", f"{self.objective} needs dim >= 2")
        if self.experiment == "saddle-mc":
            if self.trials < 0:
                raise ConfigError("trials", "must be >= 0")
            if not self.radius > 0.0:
                raise ConfigError("radius", "must be positive")
            if not (0.0 <= self.jitter < 1.0):
                raise ConfigError("jitter", "must lie in [0, 1)")
            if self.dim > 10:
                raise ConfigError("dim", "Monte Carlo sampling is limited to dim <= 10")
        if self.experiment == "poisson":
            if self.dim not in (1, 2):
                raise ConfigError("dim", "Poisson grid dimension must be 1 or 2")
            if self.grid_n < 1:
                raise ConfigError("grid-n", "must be >= 1")
            if self.source not in ("sine", "constant", "bump"):
                raise ConfigError("source", "must be one of sine, constant, bump")
            if self.p != 2.0:
                raise ConfigError("p", "the Poisson energy is fixed to p = 2 geometry")
        if self.experiment == "duality-check":
            if self.dim < 1:
                raise ConfigError("dim", "must be >= 1")
            if self.trials < 1:
                raise ConfigError("trials", "must be >= 1")

    def hyper(self) -> HyperParams:
        return HyperParams(self.alpha, self.beta, self.delta0)

    def stop(self) -> StopSpec:
        return StopSpec(
            max_iters=self.max_iters, grad_tol=self.grad_tol, step_tol=self.step_tol
        )


@dataclass
class McSummary:
    """Aggregate of a saddle-avoidance Monte Carlo study."""

    trials: int
    counts: dict
    saddle_trials: list
    other_trials: list  # (trial index, reason) pairs
    jitter: float

    def __post_init__(self):
        if sum(self.counts.values()) != self.trials:
            raise ValueError("classification counts must sum to the trial count")

    def as_dict(self) -> dict:
        return {
            "trials": self.trials,
            "counts": dict(sorted(self.counts.items())),
            "saddle_trials": list(self.saddle_trials),
            "other_trials": [[i, r] for i, r in self.other_trials],
            "jitter": self.jitter,
        }


def _sample_in_ball(rng: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    """Uniform draw from the Euclidean ball by rejection from the cube.

    Acceptance degrades with dimension (vol ratio ~ 0.0025 at dim 10);
    experiment configs cap the Monte Carlo dimension accordingly.
    """
    while True:
        cand = rng.uniform(-radius, radius, dim)
        if np.linalg.norm(cand) <= radius:
            return cand


def _clamp_unit(v: float) -> float:
    return min(max(v, 1e-12), 1.0 - 1e-12)


def _trial_setup(
    seed: int,
    t: int,
    dim: int,
    hp: HyperParams,
    jitter: float,
    radius: float,
    q: float,
    x0: Optional[Vec] = None,
) -> tuple[HyperParams, Vec]:
    """Per-trial jittered hyperparameters and start point.

    The generator is keyed by (seed, trial index) and consumes draws in a
    fixed order (three jitter factors, then rejection samples), so any
    schedule reproduces the same trial.
    """
    rng = np.random.default_rng((seed, t))
    factors = rng.uniform(1.0 - jitter, 1.0 + jitter, 3)
    hp_t = HyperParams(
        _clamp_unit(hp.alpha * factors[0]),
        _clamp_unit(hp.beta * factors[1]),
        hp.delta0 * factors[2],
    )
    start = x0 if x0 is not None else Vec(_sample_in_ball(rng, dim, radius), q)
    return hp_t, start


def saddle_mc(
    obj: Objective,
    trials: int,
    radius: float,
    hp: HyperParams,
    jitter: float,
    seed: int,
    stop: Optional[StopSpec] = None,
    p: float = 2.0,
    workers: int = 1,
    x0: Optional[Vec] = None,
) -> McSummary:
    """Monte Carlo study of where descent lands around a known saddle.

    Each trial draws its own generator from (seed, trial index), jitters
    alpha, beta, delta0 by independent factors uniform in
    [1-jitter, 1+jitter] (clamped to their valid ranges), samples a start
    uniformly in the ball of the given radius (or uses the forced start
    x0 when supplied, e.g. for deliberate stable-set control runs), runs
    descent, and classifies the terminal state:

      saddle    within SADDLE_PROXIMITY of a known saddle, gradient under
                the tolerance
      minimum   same test against the known minima
      diverging outcome DivergingValue or EscapingNorm
      other     anything else, including per-trial failures (the reason
                string is recorded)

    Trials are independent; any positive workers count yields the same
    summary as a serial run.
    """
    saddles = [z for z, kind in obj.known_critical_points if kind == CriticalKind.SADDLE]
    if not saddles:
        raise ValueError(f"objective {obj.name!r} declares no known saddle point")
    minima = [z for z, kind in obj.known_critical_points if kind == CriticalKind.MINIMUM]
    if stop is None:
        stop = StopSpec(step_tol=1e-12)
    q = conjugate_exponent(p)

    def run_trial(t: int):
        hp_t, start = _trial_setup(seed, t, obj.dim, hp, jitter, radius, q, x0)
        try:
            trace = run_descent(obj, start, StepRule(hyper=hp_t), stop)
        except (StepSizeError, NonFiniteError) as exc:
            return "other", f"{type(exc).__name__}: {exc}"
        if trace.outcome in (Outcome.DIVERGING_VALUE, Outcome.ESCAPING_NORM):
            return "diverging", None
        if trace.final_grad_norm <= stop.grad_tol:
            term = trace.terminal.coeffs
            if any(np.linalg.norm(term - z) <= SADDLE_PROXIMITY for z in saddles):
                return "saddle", None
            if any(np.linalg.norm(term - z) <= SADDLE_PROXIMITY for z in minima):
                return "minimum", None
            return "other", "converged away from every known critical point"
        return "other", f"outcome {trace.outcome.value}"

    if workers > 1 and trials > 0:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_trial, range(trials)))
    else:
        results = [run_trial(t) for t in range(trials)]

    counts = {"minimum": 0, "saddle": 0, "diverging": 0, "other": 0}
    saddle_trials = []
    other_trials = []
    for t, (label, reason) in enumerate(results):
        counts[label] += 1
        if label == "saddle":
            saddle_trials.append(t)
        elif label == "other":
            other_trials.append((t, reason))
    return McSummary(trials, counts, saddle_trials, other_trials, jitter)


def canonical_json(obj: dict) -> str:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(obj))


def _write_plot_data_csv(path: str, trace: DescentTrace) -> None:
    """Iteration vs f and gradient norm, for external plotting tools."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iter,f,grad_norm\n")
        for rec in trace.records:
            fh.write(f"{rec.iter},{rec.f:.17g},{rec.grad_norm:.17g}\n")


def _config_dict(cfg: ExperimentConfig) -> dict:
    return {
        "p": cfg.p,
        "hyper": {"alpha": cfg.alpha, "beta": cfg.beta, "delta0": cfg.delta0},
        "stop": {
            "max_iters": cfg.max_iters,
            "grad_tol": cfg.grad_tol,
            "step_tol": cfg.step_tol,
        },
        "seed": cfg.seed,
    }


def _run_descent_experiment(cfg: ExperimentConfig) -> dict:
    obj = make_objective(cfg.objective, cfg.dim)
    start = np.zeros(cfg.dim)
    start[0] = 1.0
    x0 = Vec(start, conjugate_exponent(cfg.p))
    trace = run_descent(obj, x0, StepRule(hyper=cfg.hyper()), cfg.stop())
    tail = tail_diagnostics(trace, SUMMARY_TAIL_FRACTION)

    audit = None
    if obj.hessian_action is not None and obj.dim <= MAX_DENSE_HESSIAN_DIM:
        audit = converged_point_audit(obj, trace).value

    summary = {
        "experiment": "descent",
        "objective": cfg.objective,
        "dim": cfg.dim,
        **_config_dict(cfg),
        **trace_summary(trace),
        "audit": audit,
        "tail": {
            "fraction": SUMMARY_TAIL_FRACTION,
            "max_step_norm": tail.max_step_norm,
            "diameter": tail.diameter,
        },
    }
    write_trace_csv(trace, os.path.join(cfg.out, "trace.csv"))
    _write_plot_data_csv(os.path.join(cfg.out, "plot_data.csv"), trace)
    _write_json(os.path.join(cfg.out, "summary.json"), summary)
    return summary


def _run_poisson_experiment(cfg: ExperimentConfig) -> dict:
    grid = GridSpec(cfg.dim, cfg.grid_n)
    prob = make_problem(grid, cfg.source)
    u_direct = direct_solve(prob)
    obj = energy_objective(prob)
    x0 = Vec(np.zeros(grid.num_unknowns), 2.0)
    trace = run_descent(obj, x0, StepRule(hyper=cfg.hyper()), cfg.stop())
    u_gd = trace.terminal.coeffs

    gd_vs_direct = float(
        np.linalg.norm(u_gd - u_direct) / max(1.0, np.linalg.norm(u_direct))
    )
    w = grid.h**grid.dim
    h1_seminorm = float(np.sqrt(w * np.dot(u_gd, apply_stencil(grid, u_gd))))

    errors = None
    exact = EXACT_SOLUTIONS.get((cfg.source, cfg.dim))
    if exact is not None:
        max_err, l2_err = solution_errors(u_direct, prob, exact)
        errors = {"direct_max_nodal": max_err, "direct_l2": l2_err}

    summary = {
        "experiment": "poisson",
        "dim": cfg.dim,
        "grid_n": cfg.grid_n,
        "h": grid.h,
        "source": cfg.source,
        **_config_dict(cfg),
        "outcome": trace.outcome.value,
        "iters": trace.iters,
        "final_f": trace.final_f,
        "final_grad_norm": trace.final_grad_norm,
        "gd_vs_direct_rel": gd_vs_direct,
        "h1_seminorm": h1_seminorm,
        "errors_vs_exact": errors,
    }
    write_node_values_csv(os.path.join(cfg.out, "solution_direct.csv"), grid, u_direct)
    write_node_values_csv(os.path.join(cfg.out, "solution_gd.csv"), grid, u_gd)
    write_trace_csv(trace, os.path.join(cfg.out, "trace.csv"))
    _write_plot_data_csv(os.path.join(cfg.out, "plot_data.csv"), trace)
    _write_json(os.path.join(cfg.out, "summary.json"), summary)
    return summary


def _run_saddle_mc_experiment(cfg: ExperimentConfig) -> dict:
    obj = make_objective(cfg.objective, cfg.dim)
    if not any(k == CriticalKind.SADDLE for _, k in obj.known_critical_points):
        raise ConfigError("objective", f"{cfg.objective} has no known saddle point")
    stop = cfg.stop()
    mc = saddle_mc(
        obj, cfg.trials, cfg.radius, cfg.hyper(), cfg.jitter, cfg.seed,
        stop=stop, p=cfg.p,
    )
    summary = {
        "experiment": "saddle-mc",
        "objective": cfg.objective,
        "dim": cfg.dim,
        "radius": cfg.radius,
        **_config_dict(cfg),
        **mc.as_dict(),
    }
    if cfg.keep_traces:
        tdir = os.path.join(cfg.out, "traces")
        os.makedirs(tdir, exist_ok=True)
        q = conjugate_exponent(cfg.p)
        for t in range(cfg.trials):
            hp_t, start = _trial_setup(
                cfg.seed, t, obj.dim, cfg.hyper(), cfg.jitter, cfg.radius, q
            )
            try:
                trace = run_descent(obj, start, StepRule(hyper=hp_t), stop)
            except (StepSizeError, NonFiniteError):
                continue
            write_trace_csv(trace, os.path.join(tdir, f"trial_{t:05d}.csv"))
    _write_json(os.path.join(cfg.out, "summary.json"), summary)
    return summary


def _run_duality_check_experiment(cfg: ExperimentConfig) -> dict:
    from .sequence_space import duality_map, norm, pairing  # local: keeps module deps flat

    rng = np.random.default_rng(cfg.seed)
    tol = 1e-12
    max_pairing_violation = 0.0
    max_norm_violation = 0.0
    for _ in range(cfg.trials):
        y = Vec(rng.standard_normal(cfg.dim), cfg.p)
        jy = duality_map(y)
        ny = norm(y)
        denom = max(1.0, ny * ny)
        max_pairing_violation = max(
            max_pairing_violation, abs(pairing(y, jy) - ny * ny) / denom
        )
        max_norm_violation = max(max_norm_violation, abs(norm(jy) - ny) / denom)
    min_monotone = np.inf
    for _ in range(cfg.trials):
        y1 = Vec(rng.standard_normal(cfg.dim), cfg.p)
        y2 = Vec(rng.standard_normal(cfg.dim), cfg.p)
        d = Vec._wrap(y1.coeffs - y2.coeffs, cfg.p)
        jd = Vec._wrap(duality_map(y1).coeffs - duality_map(y2).coeffs, conjugate_exponent(cfg.p))
        min_monotone = min(min_monotone, pairing(d, jd))
    passed = (
        max_pairing_violation <= tol
        and max_norm_violation <= tol
        and min_monotone >= -tol
    )
    summary = {
        "experiment": "duality-check",
        "p": cfg.p,
        "dim": cfg.dim,
        "samples": cfg.trials,
        "seed": cfg.seed,
        "tolerance": tol,
        "max_pairing_violation": float(max_pairing_violation),
        "max_norm_violation": float(max_norm_violation),
        "min_monotone_pairing": float(min_monotone),
        "passed": bool(passed),
    }
    _write_json(os.path.join(cfg.out, "summary.json"), summary)
    return summary


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Validate, dispatch, write artifacts under cfg.out, return the summary."""
    cfg.validate()
    try:
        os.makedirs(cfg.out, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {cfg.out!r}: {exc}") from exc
    if cfg.experiment == "descent":
        return _run_descent_experiment(cfg)
    if cfg.experiment == "poisson":
        return _run_poisson_experiment(cfg)
    if cfg.experiment == "saddle-mc":
        return _run_saddle_mc_experiment(cfg)
    return _run_duality_check_experiment(cfg)
