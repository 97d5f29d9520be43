import math

import numpy as np
import pytest

from app.core.fnorm import (
    Binder,
    FNormSpec,
    amemiya_norm,
    fnorm,
    fnorm_objective,
    luxemburg_fnorm,
    luxemburg_norm,
    minimize_objective,
    snorm,
    verify_binder_monotone,
    verify_fnorm_axioms,
)
from app.core.measure import StepFunction
from app.core.modular import Convexity, Orlicz, PhiFunction, Semimodular
from app.core.sampling import random_orlicz, random_step_function, random_step_functions
from app.errors import (
    AxiomViolationError,
    MalformedInputError,
    NotInSpaceError,
    WrongConvexityClassError,
)


class Infinite(Semimodular):
    convexity = Convexity.convex()

    def ray(self, f):
        return lambda c: 0.0 if c == 0 else math.inf


class Vanishing(Semimodular):
    convexity = Convexity.convex()

    def ray(self, f):
        return lambda c: 0.0


class TestBinder:
    def test_kinds(self):
        assert Binder.max(3)([1.0, -5.0, 2.0]) == 5.0
        assert Binder.lp(2.0)([3.0, 4.0]) == pytest.approx(5.0)
        assert Binder.wsum([1.0, 2.0])([1.0, 1.0]) == 3.0
        assert Binder.lp(math.inf).kind == "max"

    def test_infinite_coordinate(self):
        assert math.isinf(Binder.lp(1.0)([1.0, math.inf]))

    def test_negative_weight_rejected_at_construction(self):
        with pytest.raises(MalformedInputError):
            Binder.wsum([1.0, -1.0])

    def test_arity_checked(self):
        with pytest.raises(MalformedInputError):
            Binder.max(2)([1.0, 2.0, 3.0])

    @pytest.mark.parametrize("binder", [Binder.max(2), Binder.lp(1.0), Binder.lp(3.0), Binder.wsum([2.0, 0.5])])
    def test_monotone_suite_passes(self, binder):
        report = verify_binder_monotone(binder, trials=200, seed=11)
        assert report.passed, report.violations


class TestObjective:
    def test_max_binder_example(self, l1, chi):
        spec = FNormSpec.luxemburg(l1)
        assert fnorm_objective(spec, chi(0, 1, 4.0), 2.0) == 2.0

    def test_zero_function_gives_k(self, l2):
        spec = FNormSpec.luxemburg(l2)
        assert fnorm_objective(spec, StepFunction.zero(), 0.7) == 0.7
        wsum = FNormSpec((l2,), Binder.wsum([3.0, 1.0]))
        assert fnorm_objective(wsum, StepFunction.zero(), 0.5) == 1.5

    def test_l1_binder_example(self, l2, chi):
        spec = FNormSpec((l2,), Binder.lp(1.0))
        assert fnorm_objective(spec, chi(0, 1, 3.0), 3.0) == pytest.approx(4.0)

    def test_nonpositive_k(self, l1, chi):
        with pytest.raises(MalformedInputError):
            fnorm_objective(FNormSpec.luxemburg(l1), chi(0, 1, 1.0), 0.0)

    def test_modular_part_nonincreasing_in_k(self, l2, chi):
        ray = l2.ray(chi(0, 1, 3.0) + chi(1, 2, -0.5))
        values = [ray(1.0 / k) for k in np.logspace(-3, 3, 40)]
        assert all(b <= a for a, b in zip(values, values[1:]))

    def test_infimum_lower_bounds_every_probe(self, l2, chi):
        spec = FNormSpec((l2,), Binder.lp(2.0))
        x = chi(0, 1, 3.0) + chi(2, 3, 1.0)
        value = fnorm(spec, x)
        for k in np.logspace(-2, 2, 50):
            assert value <= fnorm_objective(spec, x, float(k)) * (1 + 1e-12)


class TestNorms:
    def test_luxemburg_fnorm_of_l1(self, l1, chi):
        assert fnorm(FNormSpec.luxemburg(l1), chi(0, 1, 4.0)) == pytest.approx(2.0, rel=1e-8)
        assert luxemburg_fnorm(l1, chi(0, 1, 4.0)) == pytest.approx(2.0, rel=1e-9)
        assert luxemburg_fnorm(l1, chi(0, 1, 9.0)) == pytest.approx(3.0, rel=1e-9)

    def test_zero_is_zero(self, l1, l2):
        zero = StepFunction.zero()
        assert fnorm(FNormSpec.luxemburg(l1), zero) == 0.0
        assert luxemburg_fnorm(l1, zero) == 0.0
        assert luxemburg_norm(l2, zero) == 0.0
        assert amemiya_norm(l2, zero) == 0.0
        assert minimize_objective(FNormSpec.luxemburg(l1), zero).k == 0.0

    def test_snorm_with_l1_binder(self, l2, chi):
        spec = FNormSpec((l2,), Binder.lp(1.0), mode="snorm", s=1.0)
        result = minimize_objective(spec, chi(0, 1, 3.0))
        assert result.value == pytest.approx(6.0, rel=1e-9)
        assert result.k == pytest.approx(3.0, rel=1e-4)
        assert snorm(spec, chi(0, 1, 3.0)) == pytest.approx(6.0, rel=1e-9)

    def test_luxemburg_norm(self, l1, l2, chi):
        assert luxemburg_norm(l2, chi(0, 1, 3.0)) == pytest.approx(3.0, rel=1e-9)
        assert luxemburg_norm(l1, chi(0, 2, 4.0)) == pytest.approx(8.0, rel=1e-9)

    def test_amemiya(self, l2, chi):
        assert amemiya_norm(l2, chi(0, 1, 3.0), p=1.0) == pytest.approx(6.0, rel=1e-9)
        # p = inf is the Luxemburg norm
        assert amemiya_norm(l2, chi(0, 1, 3.0), p=math.inf) == pytest.approx(3.0, rel=1e-8)

    def test_snorm_is_s_homogeneous(self, chi):
        # a convex modular is s-convex for every s <= 1
        rho = Orlicz(PhiFunction.power(1.0), convexity=Convexity("s-convex", 0.5))
        spec = FNormSpec((rho,), Binder.max(2), mode="snorm", s=0.5)
        x = chi(0, 1, 2.0) + chi(1, 3, 1.0)
        assert snorm(spec, x) == pytest.approx(2.0, rel=1e-8)
        assert snorm(spec, x.scale(4.0)) == pytest.approx(2.0 * snorm(spec, x), rel=1e-7)

    @pytest.mark.parametrize("seed", range(50))
    def test_max_binder_matches_luxemburg_crossing(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_orlicz(rng)
        x = random_step_function(rng)
        assert fnorm(FNormSpec.luxemburg(rho), x) == pytest.approx(luxemburg_fnorm(rho, x), rel=2e-9)

    @pytest.mark.parametrize("c", [1.0, 4.0, 9.0])
    def test_luxemburg_fnorm_of_l1_indicator_is_root(self, l1, chi, c):
        x = chi(0, 1, c)
        assert fnorm(FNormSpec.luxemburg(l1), x) == pytest.approx(math.sqrt(c), abs=1e-9)
        assert luxemburg_fnorm(l1, x) == pytest.approx(math.sqrt(c), abs=1e-9)

    @pytest.mark.parametrize("seed", range(20))
    def test_monotone_in_pointwise_norm(self, seed):
        rng = np.random.default_rng(seed)
        spec = FNormSpec.luxemburg(random_orlicz(rng))
        g = random_step_function(rng)
        f = g.with_values(g.values * rng.uniform(0.0, 1.0, size=(g.n_blocks, 1)))
        bound = fnorm(spec, g)
        assert fnorm(spec, f) <= bound + 1e-9 * max(1.0, bound)


class TestErrors:
    def test_snorm_needs_matching_convexity(self, chi):
        plain = Orlicz(PhiFunction.power(0.5))
        with pytest.raises(WrongConvexityClassError):
            FNormSpec((plain,), Binder.max(2), mode="snorm", s=1.0)

    def test_luxemburg_norm_needs_convex_modular(self, chi):
        with pytest.raises(WrongConvexityClassError):
            luxemburg_norm(Orlicz(PhiFunction.power(0.5)), chi(0, 1, 1.0))
        with pytest.raises(WrongConvexityClassError):
            amemiya_norm(Orlicz(PhiFunction.power(0.5)), chi(0, 1, 1.0))

    def test_arity_mismatch(self, l1, l2):
        with pytest.raises(MalformedInputError):
            FNormSpec((l1, l2), Binder.max(2))

    def test_outside_the_modular_space(self, chi):
        with pytest.raises(NotInSpaceError):
            fnorm(FNormSpec.luxemburg(Infinite()), chi(0, 1, 1.0))
        with pytest.raises(NotInSpaceError):
            luxemburg_fnorm(Infinite(), chi(0, 1, 1.0))

    def test_vanishing_modular_breaks_axiom_a(self, chi):
        with pytest.raises(AxiomViolationError):
            fnorm(FNormSpec.luxemburg(Vanishing()), chi(0, 1, 1.0))


class TestVerifyFNormAxioms:
    def test_luxemburg_over_l1_passes(self, l1):
        samples = random_step_functions(np.random.default_rng(7), 4)
        report = verify_fnorm_axioms(FNormSpec.luxemburg(l1), samples, scalars=(1.0, -0.5),
                                     trials=50, sequences=2, seed=7)
        assert report.passed, report.violations
        assert report.checks > 4 * 120

    def test_asymmetric_modular_breaks_symmetry(self, chi):
        class Asymmetric(Semimodular):
            convexity = Convexity.convex()

            def ray(self, f):
                weight = 2.0 if f.values.sum() > 0 else 1.0
                return lambda c: weight * abs(c) * f.sup_norm()

        report = verify_fnorm_axioms(FNormSpec.luxemburg(Asymmetric()), [chi(0, 1, 1.0)],
                                     trials=5, sequences=0, seed=0)
        assert report.axioms_violated() == ["ii"]

    def test_random_orlicz_instances(self):
        rng = np.random.default_rng(2024)
        for instance in range(200):
            rho = random_orlicz(rng)
            samples = random_step_functions(rng, 2)
            report = verify_fnorm_axioms(FNormSpec.luxemburg(rho), samples, trials=3,
                                         sequences=1 if instance < 20 else 0, seed=instance)
            assert report.passed, (instance, rho.phi.p, report.violations)
