"""The cutting driver: iteratively solve relaxed subproblems and exclude
norm balls around infeasible incumbents until acceptance, certified
infeasibility, or the iteration limit.

The loop per iteration k:

1. The oracle minimizes the objective over the current relaxed region;
   Infeasible certifies the original problem infeasible.
2. The constraint vector is evaluated at the returned point.
3. Acceptance: every component <= 0 in exact mode (violations up to 1e-14
   are treated as zero to avoid degenerate zero-radius cuts), or
   <= epsilon in approximate mode.
4. Otherwise a cut is added at the point.  Vector mode uses radius
   ||r_+|| / L (or the point-dependent constant when enabled); component
   mode adds ONE cut with the maximal per-component radius
   max_p r_p(x)_+ / L_p, recording the attaining component and using that
   component's active-coordinate mask.  The maximal-radius ball contains
   all smaller concentric per-component balls, so a single cut yields the
   same region.  In approximate mode the radius is floored at epsilon by
   default so excluded balls never degenerate.

The driver loop is inherently sequential; each run owns its oracle.
Independent problems may run concurrently.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    ConstraintSpec,
    Cut,
    Problem,
    RelaxedRegion,
    cut_radius,
    norm_eval,
    positive_part,
)
from .oracle import OracleResult, OracleStatus, ResourceLimitError

_EXACT_FEAS_TOL = 1e-14


class CutMode(enum.Enum):
    Vector = "vector"
    Component = "component"


class SolveStatus(enum.Enum):
    InfeasibleCertified = "infeasible-certified"
    Solved = "solved"
    IterationLimit = "iteration-limit"


@dataclass(frozen=True)
class DriverConfig:
    """Driver behavior.

    ``epsilon`` = 0 requests exact constraint satisfaction; positive
    epsilon accepts points with every component violation <= epsilon.
    ``epsilon_floor`` (radius = max(radius, epsilon)) defaults to on in
    approximate mode and never applies in exact mode.  Component mode
    requires per-component Lipschitz constants.
    """

    epsilon: float = 0.0
    max_iterations: int = 100
    cut_mode: CutMode = CutMode.Vector
    epsilon_floor: bool | None = None
    use_pointwise_L: bool = False
    initial_start: np.ndarray | None = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.epsilon_floor is None:
            object.__setattr__(self, "epsilon_floor", self.epsilon > 0)
        if self.epsilon_floor and self.epsilon == 0:
            raise ValueError("the epsilon floor requires epsilon > 0")


@dataclass(frozen=True)
class IterationRecord:
    """One row of the solve trace.  ``radius`` is 0 exactly when the
    iterate was accepted as (epsilon-)feasible."""

    k: int
    point: np.ndarray
    objective: float
    violation_norm: float
    violation_max: float
    radius: float
    attaining_component: int | None
    oracle_nodes: int
    oracle_gap: float


@dataclass(frozen=True)
class SolveOutcome:
    """Driver outcome.  ``lower_bound`` is the last oracle value; with a
    global oracle every relaxed minimum bounds the true optimum from
    below."""

    status: SolveStatus
    trace: tuple
    final_point: np.ndarray | None
    lower_bound: float
    final_region: RelaxedRegion


class DriverResourceError(RuntimeError):
    """Oracle ran out of nodes mid-run; carries the partial trace."""

    def __init__(self, cause: ResourceLimitError, trace: tuple):
        self.cause = cause
        self.trace = trace
        super().__init__(str(cause))


def run(problem: Problem, oracle, config: DriverConfig | None = None) -> SolveOutcome:
    """Run the cutting loop on ``problem`` with the given subproblem oracle
    (an object exposing solve(objective, region, start))."""
    config = config or DriverConfig()
    constraint = problem.constraint
    if config.cut_mode is CutMode.Component and constraint.component_L is None:
        raise ValueError("component cut mode requires per-component Lipschitz constants")
    if config.use_pointwise_L and config.cut_mode is CutMode.Component:
        raise ValueError("point-dependent constants are supported in vector cut mode only")
    if config.use_pointwise_L and constraint.pointwise_L is None:
        raise ValueError("use_pointwise_L is set but the constraint has no pointwise evaluator")

    region = RelaxedRegion(problem.domain)
    trace: list[IterationRecord] = []
    start = config.initial_start if config.initial_start is not None else problem.domain.center
    accept_tol = config.epsilon if config.epsilon > 0 else _EXACT_FEAS_TOL

    for k in range(config.max_iterations):
        try:
            result: OracleResult = oracle.solve(problem.objective, region, start=np.asarray(start, dtype=float))
        except ResourceLimitError as exc:
            raise DriverResourceError(exc, tuple(trace)) from exc
        if result.status is OracleStatus.Infeasible:
            return SolveOutcome(
                SolveStatus.InfeasibleCertified,
                tuple(trace),
                None,
                trace[-1].objective if trace else math.inf,
                region,
            )

        x = np.asarray(result.point, dtype=float)
        violations = constraint.evaluate(x)
        viol_norm = norm_eval(constraint.image_norm, positive_part(violations))
        viol_max = float(violations.max())

        if viol_max <= accept_tol:
            trace.append(
                IterationRecord(k, x, result.value, viol_norm, viol_max, 0.0, None, result.nodes, result.gap)
            )
            return SolveOutcome(SolveStatus.Solved, tuple(trace), x, result.value, region)

        radius, component, mask = _cut_geometry(problem, violations, x, config)
        if config.epsilon_floor:
            radius = max(radius, config.epsilon)
        trace.append(
            IterationRecord(k, x, result.value, viol_norm, viol_max, radius, component, result.nodes, result.gap)
        )
        region = region.with_cut(Cut(x, radius, mask, problem.domain_norm))
        start = x

    return SolveOutcome(
        SolveStatus.IterationLimit,
        tuple(trace),
        None,
        trace[-1].objective if trace else math.inf,
        region,
    )


def _cut_geometry(problem: Problem, violations: np.ndarray, x: np.ndarray, config: DriverConfig):
    """Radius, attaining component and coordinate mask for the next cut."""
    constraint = problem.constraint
    if config.cut_mode is CutMode.Vector:
        L = constraint.global_L
        if config.use_pointwise_L:
            L_x = float(constraint.pointwise_L(x))
            if L_x > constraint.global_L:
                raise ValueError(
                    f"pointwise Lipschitz value {L_x} exceeds the global constant {constraint.global_L}"
                )
            if L_x <= 0:
                raise ValueError("pointwise Lipschitz value must be positive")
            L = L_x
        radius = cut_radius(violations, L, constraint.image_norm)
        mask = _union_mask(constraint, range(constraint.m), problem.domain.dimension)
        return radius, None, mask

    best_radius, best_component = 0.0, None
    for p, value in enumerate(violations):
        if value <= 0:
            continue
        radius = value / constraint.component_L[p]
        if radius > best_radius:
            best_radius, best_component = radius, p
    mask = _union_mask(constraint, [best_component], problem.domain.dimension)
    return best_radius, best_component, mask


def _union_mask(constraint: ConstraintSpec, components, dimension: int):
    if constraint.active_mask is None:
        return None
    mask = np.zeros(dimension, dtype=bool)
    for p in components:
        mask |= constraint.active_mask[p]
    return mask if mask.any() else None


def lower_bound_sequence(trace) -> list[float]:
    """Objective values per iteration.  With a global oracle these are
    nondecreasing (within twice the oracle tolerance) and each is a valid
    lower bound on the true optimum."""
    return [record.objective for record in trace]


def normalized_problem(problem: Problem) -> Problem:
    """Rescale the constraint by 1 / (rho(domain) * L): all violations and
    constants shrink by the same factor, so cut geometry is unchanged and
    epsilon acquires the scale-free interpretation."""
    from .bounds import box_radius

    scale = 1.0 / (box_radius(problem.domain, problem.domain_norm) * problem.constraint.global_L)
    old = problem.constraint

    def scaled(fn):
        return lambda x, _fn=fn: _fn(x) * scale

    constraint = replace(
        old,
        components=tuple(scaled(c) for c in old.components),
        global_L=old.global_L * scale,
        component_L=tuple(v * scale for v in old.component_L) if old.component_L is not None else None,
        pointwise_L=scaled(old.pointwise_L) if old.pointwise_L is not None else None,
        batch_components=tuple(scaled(c) for c in old.batch_components)
        if old.batch_components is not None
        else None,
    )
    return replace(problem, constraint=constraint)


# --------------------------------------------------------------------------
# trace serialization

def write_trace_csv(trace, dimension: int, stream) -> None:
    """CSV with header k,x1..xn,f,viol_norm,viol_max,radius,component,
    oracle_nodes,oracle_gap; 17 significant digits, UNIX newlines."""
    cols = ["k"] + [f"x{j + 1}" for j in range(dimension)] + [
        "f", "viol_norm", "viol_max", "radius", "component", "oracle_nodes", "oracle_gap",
    ]
    stream.write(",".join(cols) + "\n")
    for rec in trace:
        row = [str(rec.k)]
        row += [_fmt(v) for v in rec.point]
        row += [_fmt(rec.objective), _fmt(rec.violation_norm), _fmt(rec.violation_max), _fmt(rec.radius)]
        row.append("" if rec.attaining_component is None else str(rec.attaining_component))
        row.append(str(rec.oracle_nodes))
        row.append(_fmt(rec.oracle_gap))
        stream.write(",".join(row) + "\n")


def trace_to_csv(trace, dimension: int) -> str:
    buf = io.StringIO()
    write_trace_csv(trace, dimension, buf)
    return buf.getvalue()


def _fmt(value: float) -> str:
    return f"{value:.17g}"
