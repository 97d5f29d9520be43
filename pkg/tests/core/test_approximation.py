import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.approximation import (
    bounded_simple_approx,
    build_admissible_map,
    domain_truncate,
    partition_average,
    pipeline_sup_error,
    radial_project,
    verify_f_admissible,
)
from app.core.fnorm import FNormSpec, norm_value
from app.core.measure import MeasureSpace, Partition, StepFunction, canonicalize, is_refinement
from app.core.sampling import random_partition, random_step_function
from app.errors import BudgetExhaustedError, DomainMismatchError, InvalidIndexError, MalformedInputError


def P(*intervals):
    return Partition.from_intervals(intervals)


@pytest.fixture
def lux(l1):
    return FNormSpec.luxemburg(l1)


class TestStages:
    def test_truncate(self, chi):
        space = MeasureSpace(alpha=float("inf"), exhaustion=(2.0, 5.0))
        assert domain_truncate(chi(0, 5, 1.0), space, 1) == chi(0, 2, 1.0)
        assert domain_truncate(chi(0, 1, 3.0), space, 1) == chi(0, 1, 3.0)
        with pytest.raises(InvalidIndexError):
            domain_truncate(chi(0, 1, 3.0), space, 3)

    def test_radial_rescales_to_sphere(self):
        f = StepFunction.indicator(0, 1, [3.0, 4.0])
        assert radial_project(f, 1.0).values[0] == pytest.approx([0.6, 0.8])
        small = StepFunction.indicator(0, 1, [0.3, 0.4])
        assert radial_project(small, 1.0) == small
        with pytest.raises(MalformedInputError):
            radial_project(f, 0.0)

    def test_partition_average(self, chi):
        f = chi(0, 1, 1.0) + chi(1, 2, 3.0)
        assert partition_average(f, P((0, 2))) == chi(0, 2, 2.0)
        assert partition_average(StepFunction.zero(), P((0, 2))).is_zero()

    def test_average_on_finer_partition_is_identity(self, chi):
        f = chi(0, 1, 1.0) + chi(1, 2, 3.0)
        G = Partition.from_breakpoints([0, 0.25, 0.5, 1, 1.5, 2])
        assert partition_average(f, G).equals_ae(f)

    def test_support_must_be_covered(self, chi):
        with pytest.raises(DomainMismatchError):
            partition_average(chi(0, 3, 1.0), P((0, 2)))

    def test_bounded_simple_approx(self, chi):
        assert bounded_simple_approx(chi(0, 1, 5.0), 1.0).sup_norm() == pytest.approx(2.0)
        assert bounded_simple_approx(chi(0, 1, 3.0), 1.0) == chi(0, 1, 3.0)
        assert bounded_simple_approx(StepFunction.zero(), 1.0).is_zero()
        with pytest.raises(MalformedInputError):
            bounded_simple_approx(chi(0, 1, 3.0), -1.0)


class TestStageInequalities:
    @pytest.fixture
    def pairs(self):
        rng = np.random.default_rng(21)
        return [(random_step_function(rng), random_step_function(rng)) for _ in range(100)]

    def test_truncation_contracts(self, lux, pairs):
        space = MeasureSpace(alpha=4.0, exhaustion=(1.5, 4.0))
        for f, g in pairs:
            lhs = norm_value(lux, domain_truncate(f, space, 1) - domain_truncate(g, space, 1))
            assert lhs <= norm_value(lux, f - g) + 1e-9

    def test_radial_is_two_lipschitz(self, lux, pairs):
        for f, g in pairs:
            lhs = norm_value(lux, radial_project(f, 1.0) - radial_project(g, 1.0))
            assert lhs <= 2 * norm_value(lux, f - g) + 1e-9

    def test_averaging_continuity_along_geometric_sequence(self, lux):
        rng = np.random.default_rng(4)
        f, g = random_step_function(rng), random_step_function(rng)
        K = random_partition(rng)
        base = partition_average(f, K)
        errors = [norm_value(lux, partition_average(f + g.scale(2.0 ** -n), K) - base) for n in range(1, 30, 4)]
        assert all(b <= a for a, b in zip(errors, errors[1:]))
        assert errors[-1] < 1e-3


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_averaging_preserves_integrals_and_sup_bound(seed):
    rng = np.random.default_rng(seed)
    f = random_step_function(rng, dim=2)
    K = random_partition(rng)
    averaged = partition_average(f, K)
    for block in K:
        region = Partition((block,))
        assert averaged.restrict(region).integral() == pytest.approx(f.restrict(region).integral(), abs=1e-9)
    assert averaged.sup_norm() <= f.sup_norm() + 1e-12


@pytest.mark.parametrize("seed", range(50))
def test_average_on_refinement_is_exact(seed):
    rng = np.random.default_rng(seed)
    coarse = random_partition(rng)
    s = StepFunction.on_partition(coarse, rng.uniform(-5, 5, size=(len(coarse), 2)), 2)
    G = Partition.from_breakpoints(np.concatenate((coarse.edges, rng.uniform(0.0, 4.0, size=5))))
    assert is_refinement(coarse, G)
    assert partition_average(s, G) == canonicalize(s)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_partition_average_is_linear(seed):
    rng = np.random.default_rng(seed)
    f, g = random_step_function(rng), random_step_function(rng)
    K = random_partition(rng)
    a, b = rng.uniform(-3, 3, size=2)
    lhs = partition_average(f.scale(a) + g.scale(b), K)
    rhs = partition_average(f, K).scale(a) + partition_average(g, K).scale(b)
    assert lhs.equals_ae(rhs, atol=1e-10)

class TestBuildAdmissibleMap:
    def test_certified_example(self, lux, chi):
        Z = [chi(0, 1, 4.0), chi(0, 1, 2.0) + chi(1, 2, 2.0)]
        space = MeasureSpace(alpha=2.0)
        H = build_admissible_map(Z, 0.1, lux, space)
        assert H.report.certified
        assert H.report.total_error < 0.1
        assert is_refinement(P((0, 1), (1, 2)), H.K)
        assert pipeline_sup_error(H, Z, lux) == pytest.approx(H.report.total_error)
        assert [s.stage for s in H.report.stages] == ["truncate", "radial", "average"]
        assert all(s.sup_error < 0.1 / 3 for s in H.report.stages)

    def test_identity_stages(self, lux, chi):
        f = chi(0, 1, 1.5) + chi(1, 2, -0.5)
        H = build_admissible_map([f], 0.01, lux, MeasureSpace(alpha=2.0), radius=1.5)
        assert (H.n, H.a) == (1, 1.5)
        assert H.K == P((0, 1), (1, 2))
        assert H.report.total_error == 0.0
        assert H.apply(f) == f
        assert H.rank() == 2

    def test_large_eps_allows_trivial_partition(self, lux, chi):
        f = chi(0, 1, 4.0)
        assert norm_value(lux, f) == pytest.approx(2.0)
        H = build_admissible_map([f], 7.0, lux, MeasureSpace(alpha=2.0), max_blocks=1)
        assert len(H.K) == 1
        assert H.report.total_error < 7.0

    def test_truncation_picks_smallest_cutoff(self, lux, chi):
        space = MeasureSpace(alpha=float("inf"), exhaustion=(1.0, 2.0, 4.0, 8.0))
        H = build_admissible_map([chi(0, 3, 1.0)], 0.1, lux, space)
        assert H.n == 3
        assert H.report.stages[0].parameter == 4.0

    def test_block_limit_exhausts_budget(self, lux, chi):
        with pytest.raises(BudgetExhaustedError):
            build_admissible_map([chi(0, 1, 4.0)], 0.1, lux, MeasureSpace(alpha=2.0), max_blocks=1)

    def test_small_radius_exhausts_budget(self, lux, chi):
        with pytest.raises(BudgetExhaustedError):
            build_admissible_map([chi(0, 1, 4.0)], 0.1, lux, MeasureSpace(alpha=2.0), radius=0.5)

    def test_dyadic_levels_within_block_limit(self, lux):
        ramp = StepFunction.on_partition(Partition.from_breakpoints(np.linspace(0, 1, 9)), np.arange(8) / 8)
        H = build_admissible_map([ramp], 1.0, lux, MeasureSpace(alpha=1.0), max_blocks=8)
        assert len(H.K) in (1, 2, 4, 8)
        assert H.report.certified

    @pytest.mark.parametrize("eps", [0.1, 0.01])
    @pytest.mark.parametrize("seed", range(20))
    def test_random_families(self, lux, seed, eps):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(1, 3))
        Z = [random_step_function(rng, dim=dim) for _ in range(int(rng.integers(1, 9)))]
        space = MeasureSpace(alpha=float("inf"), exhaustion=(2.0, 4.0, 8.0))
        H = build_admissible_map(Z, eps, lux, space)
        assert H.report.certified
        assert H.report.total_error < eps
        assert abs(pipeline_sup_error(H, Z, lux) - H.report.total_error) <= 1e-12

    def test_bad_arguments(self, lux, chi):
        with pytest.raises(MalformedInputError):
            build_admissible_map([], 0.1, lux, MeasureSpace(alpha=1.0))
        with pytest.raises(MalformedInputError):
            build_admissible_map([chi(0, 1, 1.0)], 0.0, lux, MeasureSpace(alpha=1.0))


def test_l1_modular_space_is_admissible(lux):
    report = verify_f_admissible(lux, [1.0], P((0, 1), (1, 3)), trials=5, seed=2)
    assert report.passed, report.violations
    assert report.checks == 11


def test_admissibility_needs_blocks(lux):
    with pytest.raises(MalformedInputError):
        verify_f_admissible(lux, [1.0], Partition())
