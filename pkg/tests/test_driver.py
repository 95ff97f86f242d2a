import math

import numpy as np
import pytest

from lipcut.core import (
    BoxDomain,
    ConstraintSpec,
    Cut,
    NormKind,
    ObjectiveSpec,
    Problem,
    RelaxedRegion,
    region_membership,
)
from lipcut.driver import (
    CutMode,
    DriverConfig,
    DriverResourceError,
    SolveStatus,
    lower_bound_sequence,
    normalized_problem,
    run,
    trace_to_csv,
)
from lipcut.oracle import GlobalOracle, LocalOracle, OracleConfig
from lipcut.problems import build, get_builtin

SQRT2 = math.sqrt(2.0)


def sin_problem() -> Problem:
    return build(get_builtin("sin-example")).problem


def global_oracle(tol=1e-8):
    return GlobalOracle(OracleConfig(tolerance=tol), NormKind.Two)


def circle_intersections(a, R, b, r):
    """Analytic intersection points of two circles (independent reference
    for the third iterate of the 2-D sine example)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    d = np.linalg.norm(b - a)
    l = (d * d - r * r + R * R) / (2 * d)
    h = math.sqrt(R * R - l * l)
    u = (b - a) / d
    perp = np.array([-u[1], u[0]])
    return a + l * u + h * perp, a + l * u - h * perp


@pytest.fixture(scope="module")
def outcome():
    return run(sin_problem(), global_oracle(), DriverConfig(epsilon=1e-4, max_iterations=25))


class TestSinExampleTrace:
    """The 2-D sine problem with epsilon 1e-4 and an exact global oracle.

    Iterations 0 and 1 match the published table.  At iteration 2 the true
    subproblem minimum is the intersection of the two cut circles (value
    ~-3.5e-3), which the published run's solver missed; the exact oracle
    therefore needs one extra cut before accepting the near-origin point.
    Every expected value below is derived analytically in this test.
    """

    def test_status_and_length(self, outcome):
        assert outcome.status is SolveStatus.Solved
        assert len(outcome.trace) == 4

    def test_iteration_0(self, outcome):
        rec = outcome.trace[0]
        assert rec.point.tolist() == [-1.0, -1.0]
        expected_violation = math.sin(1.0) + 1.0
        assert rec.violation_max == pytest.approx(expected_violation, abs=1e-12)
        assert rec.radius == pytest.approx(expected_violation / SQRT2, abs=1e-12)
        assert rec.objective == pytest.approx(-1.0, abs=1e-12)

    def test_iteration_1_diagonal_boundary_point(self, outcome):
        rec0, rec1 = outcome.trace[0], outcome.trace[1]
        expected = np.array([-1.0, -1.0]) + rec0.radius / SQRT2
        assert np.allclose(rec1.point, expected, atol=1e-7)
        v = -math.sin(expected[0]) - expected[1]
        assert rec1.radius == pytest.approx(v / SQRT2, abs=1e-6)

    def test_iteration_2_is_the_circle_intersection(self, outcome):
        rec0, rec1, rec2 = outcome.trace[:3]
        upper, lower = circle_intersections(
            (-1.0, -1.0), rec0.radius, rec1.point, rec1.radius
        )
        candidates = [upper, lower]
        f = lambda p: abs(p[0] - p[1]) + p[0]
        best = min(candidates, key=f)
        assert np.allclose(rec2.point, best, atol=1e-6)
        assert rec2.objective == pytest.approx(f(best), abs=1e-6)

    def test_final_iteration_accepted_near_origin(self, outcome):
        rec = outcome.trace[-1]
        assert rec.radius == 0.0
        assert rec.violation_max <= 1e-4
        assert np.allclose(rec.point, 0.0, atol=1e-2)
        assert outcome.final_point is not None

    def test_lower_bounds_nondecreasing(self, outcome):
        seq = lower_bound_sequence(outcome.trace)
        assert len(seq) == 4
        for a, b in zip(seq, seq[1:]):
            assert b >= a - 2e-8

    def test_no_revisits(self, outcome):
        records = outcome.trace
        for i, earlier in enumerate(records):
            if earlier.radius == 0.0:
                continue
            for later in records[i + 1:]:
                dist = np.linalg.norm(later.point - earlier.point)
                assert dist >= earlier.radius - 1e-12

    def test_feasible_reference_point_survives_all_cuts(self, outcome):
        # (0.5, 0) is feasible for the original problem: every region keeps it
        assert -math.sin(0.5) - 0.0 <= 0
        assert region_membership(outcome.final_region, (0.5, 0.0))


class TestInfeasibleCertification:
    def test_infeasible_1d(self):
        built = build(get_builtin("infeasible-1d"))
        outcome = run(built.problem, global_oracle(), DriverConfig(max_iterations=10))
        assert outcome.status is SolveStatus.InfeasibleCertified
        assert len(outcome.trace) <= 5  # the box packing bound (L/delta)*2 + 1
        points = [rec.point[0] for rec in outcome.trace]
        assert points == pytest.approx([-1.0, 0.0, 0.5], abs=1e-9)
        delta_over_L = 1.0 / 2.0
        for i in range(len(points)):
            for j in range(i + 1, len(points)):
                assert abs(points[i] - points[j]) >= delta_over_L - 1e-12

    def test_lower_bound_of_infeasible_run(self):
        built = build(get_builtin("infeasible-1d"))
        outcome = run(built.problem, global_oracle(), DriverConfig(max_iterations=10))
        assert outcome.final_point is None
        assert outcome.lower_bound == pytest.approx(0.5)  # last relaxed minimum


class TestImmediateAcceptance:
    def test_always_feasible_constraint(self):
        problem = Problem(
            domain=BoxDomain((-1.0,), (1.0,)),
            objective=ObjectiveSpec(lambda x: x[0], 1.0, batch_evaluator=lambda p: p[:, 0]),
            constraint=ConstraintSpec(components=(lambda x: -1.0,), global_L=1.0),
            domain_norm=NormKind.Two,
        )
        outcome = run(problem, global_oracle(), DriverConfig())
        assert outcome.status is SolveStatus.Solved
        assert len(outcome.trace) == 1
        assert outcome.trace[0].radius == 0.0
        assert len(outcome.final_region.cuts) == 0

    def test_tiny_float_violation_treated_as_feasible(self):
        problem = Problem(
            domain=BoxDomain((-1.0,), (1.0,)),
            objective=ObjectiveSpec(lambda x: x[0], 1.0, batch_evaluator=lambda p: p[:, 0]),
            constraint=ConstraintSpec(components=(lambda x: 5e-15,), global_L=1.0),
            domain_norm=NormKind.Two,
        )
        outcome = run(problem, global_oracle(), DriverConfig(epsilon=0.0))
        assert outcome.status is SolveStatus.Solved


def two_component_problem(L1=1.0, L2=4.0, masks=None):
    comps = (
        lambda x: 0.5 - x[0],         # violated left of 0.5
        lambda x: x[1] - 0.5,         # violated above 0.5
    )
    return Problem(
        domain=BoxDomain((0.0, 0.0), (1.0, 1.0)),
        objective=ObjectiveSpec(lambda x: x[0] + x[1], SQRT2,
                                batch_evaluator=lambda p: p[:, 0] + p[:, 1]),
        constraint=ConstraintSpec(
            components=comps,
            global_L=math.hypot(L1, L2),
            component_L=(L1, L2),
            active_mask=masks,
            batch_components=(lambda p: 0.5 - p[:, 0], lambda p: p[:, 1] - 0.5),
        ),
        domain_norm=NormKind.Two,
    )


class TestComponentMode:
    def test_single_cut_with_maximal_radius(self):
        problem = two_component_problem(L1=1.0, L2=4.0)
        outcome = run(problem, global_oracle(1e-6),
                      DriverConfig(epsilon=1e-3, max_iterations=3, cut_mode=CutMode.Component))
        rec = outcome.trace[0]
        # at (0,0): violations (0.5, -0.5): only component 0 violated
        assert rec.attaining_component == 0
        assert rec.radius == pytest.approx(0.5 / 1.0, abs=1e-9)
        assert len(outcome.final_region.cuts) >= 1

    def test_component_mask_is_attached_to_the_cut(self):
        masks = (np.array([True, False]), np.array([False, True]))
        problem = two_component_problem(masks=masks)
        outcome = run(problem, global_oracle(1e-6),
                      DriverConfig(epsilon=1e-3, max_iterations=2, cut_mode=CutMode.Component))
        cut = outcome.final_region.cuts[0]
        assert cut.mask.tolist() == [True, False]

    def test_component_mode_needs_component_L(self):
        problem = two_component_problem()
        constraint = problem.constraint
        stripped = ConstraintSpec(
            components=constraint.components, global_L=constraint.global_L,
            batch_components=constraint.batch_components,
        )
        problem = Problem(problem.domain, problem.objective, stripped, problem.domain_norm)
        with pytest.raises(ValueError):
            run(problem, global_oracle(), DriverConfig(cut_mode=CutMode.Component))

    def test_max_radius_ball_equals_intersection_of_component_balls(self):
        # one cut of radius C_k = max_p r_p/L_p covers the same region as
        # all per-component concentric balls together
        rng = np.random.default_rng(53)
        for _ in range(20):
            center = rng.uniform(-1, 1, size=2)
            violations = rng.uniform(0.0, 1.5, size=3)
            Ls = rng.uniform(0.5, 3.0, size=3)
            radii = violations / Ls
            big = float(radii.max())
            box = BoxDomain((-2.0, -2.0), (2.0, 2.0))
            single = RelaxedRegion(box).with_cut(Cut(center, big, norm=NormKind.Two))
            multi = RelaxedRegion(box)
            for r in radii:
                multi = multi.with_cut(Cut(center, float(r), norm=NormKind.Two))
            pts = rng.uniform(-2, 2, size=(2000, 2))
            assert (single.membership_mask(pts) == multi.membership_mask(pts)).all()


class TestPointwiseL:
    def base_problem(self, pointwise):
        return Problem(
            domain=BoxDomain((0.0,), (1.0,)),
            objective=ObjectiveSpec(lambda x: x[0], 1.0, batch_evaluator=lambda p: p[:, 0]),
            constraint=ConstraintSpec(
                components=(lambda x: 0.5 - x[0],), global_L=2.0, pointwise_L=pointwise,
                batch_components=(lambda p: 0.5 - p[:, 0],),
            ),
            domain_norm=NormKind.Two,
        )

    def test_pointwise_constant_sharpens_the_radius(self):
        problem = self.base_problem(lambda x: 1.0)
        outcome = run(problem, global_oracle(1e-8),
                      DriverConfig(epsilon=1e-6, max_iterations=2, use_pointwise_L=True))
        # violation 0.5 at x=0 over pointwise L=1 (not global 2)
        assert outcome.trace[0].radius == pytest.approx(0.5, abs=1e-9)

    def test_pointwise_above_global_is_rejected(self):
        problem = self.base_problem(lambda x: 3.0)
        with pytest.raises(ValueError):
            run(problem, global_oracle(), DriverConfig(use_pointwise_L=True, max_iterations=2))

    def test_pointwise_with_component_mode_rejected(self):
        problem = two_component_problem()
        with pytest.raises(ValueError):
            run(problem, global_oracle(),
                DriverConfig(cut_mode=CutMode.Component, use_pointwise_L=True))

    def test_pointwise_requires_evaluator(self):
        problem = self.base_problem(None)
        with pytest.raises(ValueError):
            run(problem, global_oracle(), DriverConfig(use_pointwise_L=True))


class TestEpsilonFloor:
    def test_floor_applies_in_approximate_mode(self):
        problem = Problem(
            domain=BoxDomain((0.0,), (1.0,)),
            objective=ObjectiveSpec(lambda x: x[0], 1.0, batch_evaluator=lambda p: p[:, 0]),
            constraint=ConstraintSpec(
                components=(lambda x: 0.3 - x[0],), global_L=100.0,
                batch_components=(lambda p: 0.3 - p[:, 0],),
            ),
            domain_norm=NormKind.Two,
        )
        # raw radius 0.3/100 = 0.003 < eps: floored to eps
        outcome = run(problem, global_oracle(1e-8),
                      DriverConfig(epsilon=0.01, max_iterations=5))
        assert outcome.trace[0].radius == pytest.approx(0.01)

    def test_floor_disabled(self):
        problem = Problem(
            domain=BoxDomain((0.0,), (1.0,)),
            objective=ObjectiveSpec(lambda x: x[0], 1.0, batch_evaluator=lambda p: p[:, 0]),
            constraint=ConstraintSpec(
                components=(lambda x: 0.3 - x[0],), global_L=100.0,
                batch_components=(lambda p: 0.3 - p[:, 0],),
            ),
            domain_norm=NormKind.Two,
        )
        outcome = run(problem, global_oracle(1e-8),
                      DriverConfig(epsilon=0.01, epsilon_floor=False, max_iterations=3))
        assert outcome.trace[0].radius == pytest.approx(0.003)

    def test_floor_requires_positive_epsilon(self):
        with pytest.raises(ValueError):
            DriverConfig(epsilon=0.0, epsilon_floor=True)


class TestLocalOracleDriver:
    def test_bad_local_recurrence(self):
        built = build(get_builtin("bad-local"))
        outcome = run(built.problem, LocalOracle(),
                      DriverConfig(max_iterations=20, initial_start=np.array([-1.0])))
        assert outcome.status is SolveStatus.IterationLimit
        points = [rec.point[0] for rec in outcome.trace]
        assert len(points) == 20
        assert points[0] == -1.0
        for prev, current in zip(points, points[1:]):
            assert current == pytest.approx(prev - prev**3 / 3.0, abs=1e-5)
            assert current > prev
        assert all(p < 0 for p in points)

    def test_bad_local_global_oracle_finds_the_optimum(self):
        built = build(get_builtin("bad-local"))
        outcome = run(built.problem, global_oracle(), DriverConfig(max_iterations=20))
        assert outcome.status is SolveStatus.Solved
        assert len(outcome.trace) <= 2
        assert outcome.final_point[0] == pytest.approx(1.0, abs=1e-6)


class TestNormalization:
    def test_geometry_is_scale_invariant(self):
        problem = sin_problem()
        scaled = normalized_problem(problem)
        cfg = DriverConfig(epsilon=1e-4, max_iterations=25)
        a = run(problem, global_oracle(), cfg)
        # the scaled problem interprets epsilon differently; compare with
        # the equivalent scaled acceptance threshold
        rho_L = math.sqrt(2.0) * problem.constraint.global_L
        b = run(scaled, global_oracle(), DriverConfig(epsilon=1e-4 / rho_L, max_iterations=25))
        assert len(a.trace) == len(b.trace)
        for ra, rb in zip(a.trace, b.trace):
            assert np.allclose(ra.point, rb.point, atol=1e-9)
            assert ra.radius == pytest.approx(rb.radius, abs=1e-12)


class TestResourceError:
    def test_partial_trace_attached(self):
        built = build(get_builtin("sin-example"))
        oracle = GlobalOracle(OracleConfig(tolerance=1e-8, node_limit=200), NormKind.Two)
        with pytest.raises(DriverResourceError) as info:
            run(built.problem, oracle, DriverConfig(epsilon=1e-4, max_iterations=25))
        assert info.value.trace is not None
        assert info.value.cause.nodes > 0


class TestTraceCsv:
    def test_format_and_determinism(self):
        built = build(get_builtin("sin-example"))
        cfg = DriverConfig(epsilon=1e-4, max_iterations=25)
        a = run(built.problem, global_oracle(), cfg)
        b = run(built.problem, global_oracle(), cfg)
        csv_a = trace_to_csv(a.trace, 2)
        csv_b = trace_to_csv(b.trace, 2)
        assert csv_a == csv_b  # bit-for-bit reproducible
        lines = csv_a.splitlines()
        assert lines[0] == "k,x1,x2,f,viol_norm,viol_max,radius,component,oracle_nodes,oracle_gap"
        assert len(lines) == 1 + len(a.trace)
        assert "\r" not in csv_a
        first = lines[1].split(",")
        assert first[0] == "0"
        assert float(first[1]) == -1.0
        # 17 significant digits round-trip exactly
        assert float(first[6]) == a.trace[0].radius
        assert first[7] == ""  # vector mode: no attaining component

    def test_local_gap_serializes_as_inf(self):
        built = build(get_builtin("bad-local"))
        outcome = run(built.problem, LocalOracle(),
                      DriverConfig(max_iterations=2, initial_start=np.array([-1.0])))
        text = trace_to_csv(outcome.trace, 1)
        assert "inf" in text.splitlines()[1]
