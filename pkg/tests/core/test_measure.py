import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.core.measure import (
    Block,
    MeasureSpace,
    Partition,
    StepFunction,
    canonicalize,
    common_refinement,
    dyadic_chain,
    egorov_uniform_set,
    elementary_partition,
    is_refinement,
    refinement_chain,
)
from app.core.sampling import random_step_function
from app.errors import (
    IncomparableDomainsError,
    InvalidIndexError,
    MalformedInputError,
    NoWitnessError,
)


def P(*intervals):
    return Partition.from_intervals(intervals)


def step(*triples):
    return StepFunction.from_blocks(triples)


breakpoints = st.lists(
    st.integers(min_value=1, max_value=99), min_size=0, max_size=6, unique=True
).map(lambda pts: Partition.from_breakpoints([0.0, 1.0] + [p / 100 for p in pts]))


class TestBlocksAndPartitions:
    def test_block_rejects_null_interval(self):
        with pytest.raises(MalformedInputError):
            Block(1.0, 1.0)

    def test_overlapping_blocks_are_rejected(self):
        with pytest.raises(MalformedInputError):
            P((0, 1), (0.5, 2))

    def test_union_merges_touching_blocks(self):
        assert P((0, 1), (1, 2), (3, 4)).union == [(0.0, 2.0), (3.0, 4.0)]

    def test_measure_space_indexes_from_one(self):
        space = MeasureSpace(alpha=float("inf"), exhaustion=(1.0, 2.0, 4.0))
        assert space.cutoff(1) == 1.0
        assert space.truncation_block(3) == Block(0.0, 4.0)
        with pytest.raises(InvalidIndexError):
            space.cutoff(0)
        with pytest.raises(InvalidIndexError):
            space.cutoff(4)

    def test_finite_space_defaults_to_single_cutoff(self):
        assert MeasureSpace(alpha=1.0).exhaustion == (1.0,)

    def test_infinite_space_needs_exhaustion(self):
        with pytest.raises(MalformedInputError):
            MeasureSpace(alpha=float("inf"))


class TestCanonicalize:
    def test_merges_equal_neighbours(self):
        f = canonicalize(step((0, 1, 2.0), (1, 2, 2.0)))
        assert f.partition == P((0, 2))
        assert f.values.tolist() == [[2.0]]

    def test_empty_is_zero(self):
        assert canonicalize(StepFunction.zero()).n_blocks == 0

    def test_distinct_values_unchanged(self):
        f = step((0, 1, 1.0), (1, 2, 3.0))
        assert canonicalize(f) == f

    def test_blocks_given_out_of_order_are_sorted(self):
        f = step((1, 2, 3.0), (0, 1, 1.0))
        assert f.starts.tolist() == [0.0, 1.0]

    @given(st.lists(st.integers(-2, 2), min_size=1, max_size=8))
    def test_idempotent_and_measure_preserving(self, values):
        f = StepFunction.on_partition(Partition.from_breakpoints(range(len(values) + 1)), values)
        g = canonicalize(f)
        assert canonicalize(g) == g
        assert g.equals_ae(f)
        assert g.partition.measure == pytest.approx(f.partition.measure)


class TestRefinement:
    def test_split_refines_whole(self):
        assert is_refinement(P((0, 2)), P((0, 1), (1, 2)))

    def test_shifted_split_does_not_refine(self):
        assert not is_refinement(P((0, 1), (1, 2)), P((0, 1.5), (1.5, 2)))

    def test_reflexive(self):
        p = P((0, 1), (1, 2))
        assert is_refinement(p, p)

    def test_different_unions_are_incomparable(self):
        with pytest.raises(IncomparableDomainsError):
            is_refinement(P((0, 1)), P((0, 2)))

    def test_common_refinement_by_breakpoints(self):
        r = common_refinement(P((0, 1), (1, 2)), P((0, 0.5), (0.5, 2)))
        assert r == P((0, 0.5), (0.5, 1), (1, 2))

    def test_common_refinement_is_idempotent(self):
        p = P((0, 1), (1, 2))
        assert common_refinement(p, p) == p
        assert common_refinement(P((0, 2)), p) == p

    def test_chain_example(self):
        chain = refinement_chain([P((0, 2)), P((0, 1), (1, 2))])
        assert chain == [P((0, 2)), P((0, 1), (1, 2))]
        assert refinement_chain([P((0, 2))]) == [P((0, 2))]

    @settings(max_examples=50)
    @given(st.lists(breakpoints, min_size=3, max_size=3))
    def test_chain_is_increasing_and_absorbs_inputs(self, partitions):
        chain = refinement_chain(partitions)
        for i in range(len(chain)):
            assert is_refinement(partitions[i], chain[i])
            for j in range(i, len(chain)):
                assert is_refinement(chain[i], chain[j])

    @settings(max_examples=50)
    @given(st.lists(breakpoints, min_size=3, max_size=3))
    def test_transitive_and_antisymmetric(self, partitions):
        candidates = partitions + [common_refinement(*partitions[:2]), refinement_chain(partitions)[-1]]
        for p in candidates:
            for q in candidates:
                if is_refinement(p, q) and is_refinement(q, p):
                    assert p == q
                if not is_refinement(p, q):
                    continue
                for r in candidates:
                    if is_refinement(q, r):
                        assert is_refinement(p, r)

    def test_dyadic_chain_starts_with_whole_interval(self):
        chain = dyadic_chain(0.0, 1.0, 3)
        assert [len(p) for p in chain] == [1, 2, 4, 8]

    def test_elementary_partition_clips_to_window(self):
        f = step((0, 1, 1.0), (1, 3, 2.0))
        assert elementary_partition([f], 0.0, 2.0) == P((0, 1), (1, 2))


class TestStepFunction:
    def test_arithmetic_on_common_refinement(self):
        f = step((0, 2, 1.0))
        g = step((1, 3, 2.0))
        h = f + g
        assert h.values_at(np.array([0.5, 1.5, 2.5])).ravel().tolist() == [1.0, 3.0, 2.0]
        assert (h - g).equals_ae(f)

    def test_vector_norms(self):
        f = StepFunction.indicator(0, 1, [3.0, 4.0])
        assert f.sup_norm() == 5.0
        assert StepFunction.indicator(0, 1, [3.0, 4.0], value_norm="max").sup_norm() == 4.0
        assert StepFunction.indicator(0, 1, [3.0, -4.0], value_norm="sum").sup_norm() == 7.0

    def test_incompatible_dimensions(self):
        with pytest.raises(MalformedInputError):
            StepFunction.indicator(0, 1, [1.0, 2.0]) + StepFunction.indicator(0, 1, 1.0)

    def test_restrict_and_average(self):
        f = step((0, 1, 1.0), (1, 2, 3.0))
        assert f.average_over(Block(0, 2)).tolist() == [2.0]
        assert f.restrict(P((0.5, 1.5))).integral().tolist() == [2.0]

    def test_values_are_read_only(self):
        f = step((0, 1, 1.0))
        with pytest.raises(ValueError):
            f.values[0, 0] = 2.0



def assert_egorov_witness(fs, limit, A, n0, m, eps):
    """Off A every f_n with n >= n0 is within eps of the limit"""
    assert A.measure < m
    for f in fs[n0 - 1:]:
        diff = f - limit
        for block, norm in zip(diff.partition, diff.pointwise_norms()):
            if norm <= eps:
                continue
            pieces = (block.intersection(a) for a in A.blocks)
            covered = sum(piece.measure for piece in pieces if piece is not None)
            assert covered >= block.measure - 1e-12, (block, norm)


class TestEgorov:
    def test_shrinking_indicators(self):
        fs = [StepFunction.indicator(0, 1 / n, 1.0) for n in range(1, 51)]
        A, n0 = egorov_uniform_set(fs, StepFunction.zero(), m=0.1, eps=0.5)
        assert n0 == 11
        assert_egorov_witness(fs, StepFunction.zero(), A, n0, 0.1, 0.5)
        assert A.measure < 0.1
        assert A.blocks[0].start == 0.0
        assert A.blocks[-1].end == pytest.approx(1 / 11)

    def test_constant_sequence(self):
        g = step((0, 1, 1.0), (1, 2, -2.0))
        A, n0 = egorov_uniform_set([g, g, g], g, m=0.1, eps=0.5)
        assert A.is_empty()
        assert n0 == 1

    def test_no_pointwise_convergence(self):
        fs = [StepFunction.indicator(0, 1, 1.0)] * 10
        with pytest.raises(NoWitnessError):
            egorov_uniform_set(fs, StepFunction.zero(), m=0.5, eps=0.5)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_witness_holds_for_decaying_bumps(self, seed):
        rng = np.random.default_rng(seed)
        limit = random_step_function(rng)
        fs = []
        for n in range(1, 13):
            start = float(rng.uniform(0.0, 3.0))
            fs.append(limit + limit.scale(2.0 ** -n) + StepFunction.indicator(start, start + 4 * 2.0 ** -n, 1.0))
        A, n0 = egorov_uniform_set(fs, limit, m=0.5, eps=0.05)
        assert_egorov_witness(fs, limit, A, n0, 0.5, 0.05)
