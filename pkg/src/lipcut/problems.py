"""Problem definitions: the YAML problem-file format and the builtin
catalog.

A problem file is one flat YAML document with the keys

    dimension: 2
    bounds: [[-1.0, 1.0], [-1.0, 1.0]]
    integral: [false, false]          # optional
    norm: "2"                         # domain norm: "1" | "2" | "inf"
    image_norm: "2"
    objective: "abs(x1 - x2) + x1"
    objective_L: 2.23606797749979     # optional; estimated when absent
    constraints:
      - expr: "-sin(x1) - x2"
        L: 1.4142135623730951         # optional per-component constant
        mask: [1, 2]                  # optional active coordinates (1-based)
    global_L: 1.4142135623730951      # optional; estimated when absent
    epsilon: 1.0e-4                   # optional
    max_iterations: 25                # optional
    cut_mode: "vector"                # optional: "vector" | "component"

Missing Lipschitz constants are estimated at load time (grid bound, 64
points per dimension, safety 1.05) and the estimates are reported back to
the caller.  Builtin problems carry their published constants verbatim so
solver traces stay reproducible and independent of estimator drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .core import BoxDomain, ConstraintSpec, NormKind, ObjectiveSpec, Problem
from .driver import CutMode
from .expr import batch_evaluator, parse
from .lipschitz import LipschitzEstimate, jacobian_sup_bound, slope_sampling_estimate

_KEYS = {
    "dimension", "bounds", "integral", "norm", "image_norm", "objective",
    "objective_L", "constraints", "global_L", "epsilon", "max_iterations", "cut_mode",
}
_CONSTRAINT_KEYS = {"expr", "L", "mask"}


@dataclass(frozen=True)
class ConstraintDef:
    expr: str
    L: float | None = None
    mask: tuple | None = None  # 1-based coordinate indices


@dataclass(frozen=True)
class ProblemDefinition:
    dimension: int
    bounds: tuple
    norm: NormKind
    image_norm: NormKind
    objective: str
    constraints: tuple
    integral: tuple | None = None
    objective_L: float | None = None
    global_L: float | None = None
    epsilon: float | None = None
    max_iterations: int | None = None
    cut_mode: CutMode | None = None
    name: str = ""


@dataclass
class BuiltProblem:
    """A ProblemDefinition compiled to evaluators, plus driver defaults and
    notes about any constants estimated at load time."""

    problem: Problem
    exprs: dict
    epsilon: float
    max_iterations: int
    cut_mode: CutMode
    estimated: dict = field(default_factory=dict)


def load_problem_file(path) -> ProblemDefinition:
    with open(path, "r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle)
    if not isinstance(data, dict):
        raise ValueError(f"problem file {path} is not a mapping")
    return definition_from_dict(data, name=str(path))


def definition_from_dict(data: dict, name: str = "") -> ProblemDefinition:
    unknown = set(data) - _KEYS
    if unknown:
        raise ValueError(f"unknown problem keys: {sorted(unknown)}")
    for key in ("dimension", "bounds", "norm", "image_norm", "objective", "constraints"):
        if key not in data:
            raise ValueError(f"problem file is missing required key {key!r}")
    dimension = int(data["dimension"])
    if dimension < 1:
        raise ValueError("dimension must be positive")
    bounds = tuple((float(lo), float(hi)) for lo, hi in data["bounds"])
    if len(bounds) != dimension:
        raise ValueError("bounds length does not match dimension")
    integral = None
    if data.get("integral") is not None:
        integral = tuple(bool(b) for b in data["integral"])
        if len(integral) != dimension:
            raise ValueError("integral length does not match dimension")
    constraints = []
    for entry in data["constraints"]:
        unknown = set(entry) - _CONSTRAINT_KEYS
        if unknown:
            raise ValueError(f"unknown constraint keys: {sorted(unknown)}")
        mask = tuple(int(i) for i in entry["mask"]) if entry.get("mask") else None
        if mask and not all(1 <= i <= dimension for i in mask):
            raise ValueError(f"constraint mask indices out of range: {mask}")
        constraints.append(
            ConstraintDef(str(entry["expr"]), float(entry["L"]) if entry.get("L") is not None else None, mask)
        )
    if not constraints:
        raise ValueError("a problem needs at least one constraint")
    cut_mode = CutMode(data["cut_mode"]) if data.get("cut_mode") else None
    return ProblemDefinition(
        dimension=dimension,
        bounds=bounds,
        norm=NormKind.from_string(data["norm"]),
        image_norm=NormKind.from_string(data["image_norm"]),
        objective=str(data["objective"]),
        constraints=tuple(constraints),
        integral=integral,
        objective_L=float(data["objective_L"]) if data.get("objective_L") is not None else None,
        global_L=float(data["global_L"]) if data.get("global_L") is not None else None,
        epsilon=float(data["epsilon"]) if data.get("epsilon") is not None else None,
        max_iterations=int(data["max_iterations"]) if data.get("max_iterations") is not None else None,
        cut_mode=cut_mode,
        name=name,
    )


def build(
    definition: ProblemDefinition,
    estimator: str = "grid",
    grid: int = 64,
    safety: float = 1.05,
    pairs: int = 10_000,
    inflation: float = 0.1,
    seed: int = 0,
    need_component_L: bool = False,
) -> BuiltProblem:
    """Compile a definition to a runnable Problem, estimating any missing
    Lipschitz constants with the chosen estimator."""
    box = BoxDomain(
        [b[0] for b in definition.bounds],
        [b[1] for b in definition.bounds],
        definition.integral,
    )
    objective_expr = parse(definition.objective, definition.dimension)
    constraint_exprs = [parse(c.expr, definition.dimension) for c in definition.constraints]
    estimated: dict[str, LipschitzEstimate] = {}

    def estimate(exprs, image_norm) -> LipschitzEstimate:
        if estimator == "grid":
            return jacobian_sup_bound(exprs, box, definition.norm, image_norm, grid_per_dim=grid, safety=safety)
        batch = _stack_batch([batch_evaluator(e) for e in exprs])
        return slope_sampling_estimate(
            lambda x: np.array([e.eval(x) for e in exprs]),
            box,
            definition.norm,
            image_norm,
            pairs=pairs,
            inflation=inflation,
            seed=seed,
            batch_evaluator=batch,
        )

    objective_L = definition.objective_L
    if objective_L is None:
        est = estimate([objective_expr], definition.image_norm)
        estimated["objective_L"] = est
        objective_L = est.value

    component_L = [c.L for c in definition.constraints]
    want_components = need_component_L or definition.cut_mode is CutMode.Component
    if want_components or all(v is not None for v in component_L):
        for p, value in enumerate(component_L):
            if value is None:
                est = estimate([constraint_exprs[p]], definition.image_norm)
                estimated[f"constraint_{p + 1}_L"] = est
                component_L[p] = est.value
        component_L_out = tuple(float(v) for v in component_L)
    else:
        component_L_out = None

    global_L = definition.global_L
    if global_L is None:
        est = estimate(constraint_exprs, definition.image_norm)
        estimated["global_L"] = est
        global_L = est.value

    masks = None
    if any(c.mask for c in definition.constraints):
        masks = []
        for c in definition.constraints:
            m = np.zeros(definition.dimension, dtype=bool)
            if c.mask:
                m[[i - 1 for i in c.mask]] = True
            else:
                m[:] = True
            masks.append(m)
        masks = tuple(masks)

    constraint = ConstraintSpec(
        components=tuple(_scalar_fn(e) for e in constraint_exprs),
        global_L=float(global_L),
        image_norm=definition.image_norm,
        component_L=component_L_out,
        active_mask=masks,
        batch_components=tuple(batch_evaluator(e) for e in constraint_exprs),
    )
    objective = ObjectiveSpec(
        evaluator=_scalar_fn(objective_expr),
        lipschitz_f=float(objective_L),
        batch_evaluator=batch_evaluator(objective_expr),
    )
    problem = Problem(domain=box, objective=objective, constraint=constraint, domain_norm=definition.norm)
    return BuiltProblem(
        problem=problem,
        exprs={"objective": objective_expr, "constraints": constraint_exprs},
        epsilon=definition.epsilon if definition.epsilon is not None else 0.0,
        max_iterations=definition.max_iterations if definition.max_iterations is not None else 100,
        cut_mode=definition.cut_mode or CutMode.Vector,
        estimated=estimated,
    )


def _scalar_fn(expression):
    return lambda x, _e=expression: _e.eval(np.asarray(x, dtype=float))


def _stack_batch(evaluators):
    def run(points):
        return np.stack([e(points) for e in evaluators], axis=1)

    return run


# --------------------------------------------------------------------------
# builtin catalog

_SQRT2 = math.sqrt(2.0)
_SQRT5 = math.sqrt(5.0)


def builtin_problems() -> dict[str, ProblemDefinition]:
    """The five builtin instances.  Lipschitz constants are the published
    values, fixed rather than re-estimated, so traces are reproducible."""
    catalog = {}
    catalog["sin-example"] = ProblemDefinition(
        name="sin-example",
        dimension=2,
        bounds=((-1.0, 1.0), (-1.0, 1.0)),
        norm=NormKind.Two,
        image_norm=NormKind.Two,
        objective="abs(x1 - x2) + x1",
        objective_L=_SQRT5,
        constraints=(ConstraintDef("-sin(x1) - x2", L=_SQRT2),),
        global_L=_SQRT2,
        epsilon=1e-4,
        max_iterations=25,
    )
    catalog["bad-local"] = ProblemDefinition(
        name="bad-local",
        dimension=1,
        bounds=((-1.0, 1.0),),
        norm=NormKind.Two,
        image_norm=NormKind.Two,
        objective="-abs(x1)",
        objective_L=1.0,
        constraints=(ConstraintDef("-(x1^3)/3", L=1.0),),
        global_L=1.0,
        epsilon=0.0,
        max_iterations=20,
    )
    catalog["comp-example"] = ProblemDefinition(
        name="comp-example",
        dimension=2,
        bounds=((1.0, 10.0), (0.0, 4.0)),
        norm=NormKind.Two,
        image_norm=NormKind.Two,
        objective="x1 + 4*x2",
        objective_L=math.sqrt(17.0),
        constraints=(
            ConstraintDef("cos(6*x1)/2 - x2 + 1.8", L=math.sqrt(10.0)),
            ConstraintDef("-2*sin(4*x1)/sqrt(x1) + x2 - 2", L=math.sqrt(42.83)),
        ),
        global_L=math.sqrt(50.83),
        epsilon=1e-6,
        max_iterations=100,
    )
    catalog["comp-example-manipulated"] = ProblemDefinition(
        name="comp-example-manipulated",
        dimension=2,
        bounds=((1.0, 10.0), (0.0, 4.0)),
        norm=NormKind.Two,
        image_norm=NormKind.Two,
        objective="x1 + 4*x2",
        objective_L=math.sqrt(17.0),
        constraints=(
            ConstraintDef("cos(6*x1)/2 - x2 + 1.8", L=math.sqrt(15.0)),
            ConstraintDef("cos(6*x1)/2 - x2 + 1.8", L=math.sqrt(15.0)),
        ),
        global_L=math.sqrt(20.0),
        epsilon=1e-6,
        max_iterations=100,
    )
    catalog["infeasible-1d"] = ProblemDefinition(
        name="infeasible-1d",
        dimension=1,
        bounds=((-1.0, 1.0),),
        norm=NormKind.Two,
        image_norm=NormKind.Two,
        objective="x1",
        objective_L=1.0,
        constraints=(ConstraintDef("x1^2 + 1", L=2.0),),
        global_L=2.0,
        epsilon=0.0,
        max_iterations=10,
    )
    return catalog


def get_builtin(name: str) -> ProblemDefinition:
    catalog = builtin_problems()
    if name not in catalog:
        raise KeyError(f"unknown builtin {name!r}; available: {', '.join(sorted(catalog))}")
    return catalog[name]
