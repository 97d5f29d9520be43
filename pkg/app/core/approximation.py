"""Finite-rank approximation of the identity on finite families of step functions.

The assembled map is H = P_K o T_a o F_n: truncation to T_n = [0, t_n),
radial projection onto the ball of radius a in W, and averaging over the
blocks of a partition K of T_n. Each stage is allowed an error below eps/3
in the F-norm; W is finite-dimensional so no further stage is needed.
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence

import numpy as np

from ..config import get_settings
from ..errors import BudgetExhaustedError, DomainMismatchError, MalformedInputError
from .fnorm import FNormSpec, norm_value
from .measure import (
    Block,
    MeasureSpace,
    Partition,
    StepFunction,
    canonicalize,
    dyadic_partition,
    elementary_partition,
)
from .reports import AxiomReport, PipelineReport, StageError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RadialParams:
    a: float

    def __post_init__(self):
        if not self.a > 0 or math.isinf(self.a):
            raise MalformedInputError(f"radius must be a positive real, got {self.a}")


def _rescale(f: StepFunction, threshold: float, target: float) -> StepFunction:
    norms = f.pointwise_norms()
    big = norms > threshold
    factors = np.where(big, target / np.where(big, norms, 1.0), 1.0)
    return canonicalize(f.with_values(f.values * factors[:, None]))


def domain_truncate(f: StepFunction, space: MeasureSpace, n: int) -> StepFunction:
    """F_n f = f chi_{T_n}."""
    return f.restrict(Partition((space.truncation_block(n),)))


def radial_project(f: StepFunction, a: float) -> StepFunction:
    """Blockwise R_a: w if ||w|| <= a, else a w / ||w||."""
    a = RadialParams(a).a
    return _rescale(f, a, a)


def partition_average(f: StepFunction, K: Partition) -> StepFunction:
    """P_K f: the mu-average of f on every block of K."""
    norms = f.pointwise_norms()
    for block, norm in zip(f.partition, norms):
        if norm > 0 and not K.covers(block):
            raise DomainMismatchError(
                f"support block [{block.start}, {block.end}) is not covered by the partition"
            )
    if not K.blocks:
        return StepFunction.zero(f.dim, f.value_norm)
    values = np.array([f.average_over(block) for block in K]).reshape(len(K), f.dim)
    return canonicalize(StepFunction(K, values, f.dim, f.value_norm))


def bounded_simple_approx(f: StepFunction, M: float) -> StepFunction:
    """Values of norm above 4M are pulled back to norm 2M; the rest are kept."""
    if not M > 0:
        raise MalformedInputError(f"M must be positive, got {M}")
    return _rescale(f, 4.0 * M, 2.0 * M)


@dataclass(frozen=True)
class PipelineH:
    space: MeasureSpace
    n: int
    a: float
    K: Partition
    report: PipelineReport

    def apply(self, f: StepFunction) -> StepFunction:
        truncated = domain_truncate(f, self.space, self.n)
        return partition_average(radial_project(truncated, self.a), self.K)

    def rank(self, dim: int = 1) -> int:
        return len(self.K) * dim


def _sup_distance(norm: FNormSpec, fs: Sequence[StepFunction], gs: Sequence[StepFunction]) -> float:
    return max(norm_value(norm, f.subtract(g)) for f, g in zip(fs, gs))


def pipeline_sup_error(H: PipelineH, Z: Sequence[StepFunction], norm: FNormSpec) -> float:
    """sup_{f in Z} |f - H f|_F, evaluated from scratch."""
    return _sup_distance(norm, Z, [H.apply(f) for f in Z])


def _candidate_partitions(
    functions: Sequence[StepFunction], t_n: float, max_blocks: Optional[int]
) -> Iterator[Partition]:
    exact = elementary_partition(functions, 0.0, t_n)
    if max_blocks is None:
        yield exact
        return
    for level in range(get_settings().REFINEMENT_DEPTH + 1):
        if 2 ** level > max_blocks:
            break
        yield dyadic_partition(0.0, t_n, level)
    if len(exact) <= max_blocks:
        yield exact


def build_admissible_map(
    Z: Sequence[StepFunction],
    eps: float,
    norm: FNormSpec,
    space: MeasureSpace,
    radius: Optional[float] = None,
    max_blocks: Optional[int] = None,
) -> PipelineH:
    """Find (n, a, K) with sup_{f in Z} |f - P_K T_a F_n f|_F < eps."""
    if not Z:
        raise MalformedInputError("the family Z must be nonempty")
    if not eps > 0:
        raise MalformedInputError(f"eps must be positive, got {eps}")
    if max_blocks is not None and max_blocks < 1:
        raise MalformedInputError(f"max_blocks must be at least 1, got {max_blocks}")
    third = eps / 3.0
    stages: List[StageError] = []

    for n in range(1, len(space.exhaustion) + 1):
        truncated = [domain_truncate(f, space, n) for f in Z]
        err = _sup_distance(norm, Z, truncated)
        if err < third:
            break
    else:
        raise BudgetExhaustedError(
            f"no cutoff of the exhaustion brings the truncation error below {third:g} (last {err:g})"
        )
    stages.append(StageError(stage="truncate", parameter=space.cutoff(n), sup_error=err))
    logger.info(f"stage truncate: n={n}, t_n={space.cutoff(n):g}, sup error {err:.3g}")

    if radius is None:
        radius = max(g.sup_norm() for g in truncated) or 1.0
    projected = [radial_project(g, radius) for g in truncated]
    err = _sup_distance(norm, truncated, projected)
    if not err < third:
        raise BudgetExhaustedError(f"radius {radius:g} leaves projection error {err:g} >= {third:g}")
    stages.append(StageError(stage="radial", parameter=radius, sup_error=err))
    logger.info(f"stage radial: a={radius:g}, sup error {err:.3g}")

    best = math.inf
    for K in _candidate_partitions(projected, space.cutoff(n), max_blocks):
        err = _sup_distance(norm, projected, [partition_average(h, K) for h in projected])
        best = min(best, err)
        if not err < third:
            logger.debug(f"partition with {len(K)} blocks: sup error {err:.3g}, refining")
            continue
        report = PipelineReport(
            eps=eps,
            stages=stages + [StageError(stage="average", parameter=len(K), sup_error=err)],
        )
        H = PipelineH(space=space, n=n, a=radius, K=K, report=report)
        report.total_error = pipeline_sup_error(H, Z, norm)
        if report.certified:
            logger.info(f"admissible map certified: {len(K)} blocks, total error {report.total_error:.3g}")
            return H
        logger.warning(f"stage budgets met but total error {report.total_error:g} >= eps {eps:g}")

    raise BudgetExhaustedError(
        f"no partition within the refinement limits certifies eps={eps:g} (best averaging error {best:g})"
    )


def _decays(values: List[float]) -> bool:
    nonincreasing = all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(values, values[1:]))
    return nonincreasing and values[-1] <= 0.1 * values[0]


def verify_f_admissible(
    norm: FNormSpec,
    w: Sequence[float],
    blocks: Partition,
    trials: int = 20,
    seed: int = 0,
    value_norm: str = "euclidean",
) -> AxiomReport:
    """Sample the three conditions that make the modular space an admissible F-space.

    For a block A and a vector w: |w_n chi_A|_F decays as ||w_n|| -> 0,
    |w chi_{A_n}|_F decays as mu(A_n) -> 0, and |x - x chi_{[0, t_n)}|_F
    decays as t_n increases to the end of the support of x.
    """
    if not blocks.blocks:
        raise MalformedInputError("verify_f_admissible needs at least one block")
    base = np.atleast_1d(np.asarray(w, dtype=float))
    if not np.any(base):
        raise MalformedInputError("w must be nonzero")
    rng = np.random.default_rng(seed)
    report = AxiomReport(suite="admissibility")

    def value(f: StepFunction) -> float:
        return norm_value(norm, f)

    whole = StepFunction.on_partition(blocks, np.tile(base, len(blocks)), len(base), value_norm)
    for _ in range(trials):
        block = blocks.blocks[int(rng.integers(len(blocks)))]
        vec = base * rng.uniform(0.5, 2.0)

        shrinking_values = [
            value(StepFunction.indicator(block.start, block.end, vec * 2.0 ** -k, value_norm))
            for k in range(0, 61, 4)
        ]
        report.check(_decays(shrinking_values), "small-values",
                     f"|w_n chi_A| does not decay: {shrinking_values}", block=[block.start, block.end])

        lengths = [block.measure * 2.0 ** -k for k in range(0, 37, 4) if block.measure * 2.0 ** -k > 1e-9]
        shrinking_sets = [
            value(StepFunction.indicator(block.start, block.start + length, vec, value_norm))
            for length in lengths
        ]
        report.check(_decays(shrinking_sets), "small-sets",
                     f"|w chi_A_n| does not decay: {shrinking_sets}", block=[block.start, block.end])

    end = whole.support_end()
    tails = []
    for k in range(1, 37, 5):
        t_k = end * (1.0 - 2.0 ** -k)
        tails.append(value(whole.subtract(whole.restrict(Partition((Block(0.0, t_k),))))))
    report.check(_decays(tails), "dominated-convergence",
                 f"|x - x chi_[0,t_n)| does not decay: {tails}")

    logger.info(f"admissibility suite: {report.checks} checks, {len(report.violations)} violations")
    return report
