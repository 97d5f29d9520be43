"""Rearrangements and averaging operators on symmetric (rearrangement-invariant) spaces.

Vector-valued functions are reduced to |x|(t) = ||x(t)|| through their
value norm before any rearrangement is taken.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..errors import (
    IncomparableDomainsError,
    InvalidChainError,
    MalformedInputError,
    NotOrderContinuousError,
)
from .fnorm import luxemburg_norm
from .measure import Partition, StepFunction, canonicalize, is_refinement
from .modular import Orlicz, PhiFunction
from .reports import ConvergenceRow

logger = logging.getLogger(__name__)

SYMMETRIC_KINDS = ("lp", "orlicz-luxemburg", "lorentz")


@dataclass(frozen=True)
class RearrangementProfile:
    """x* as knots 0 = tau_0 < ... < tau_m with x* = values[i] on [tau_i, tau_{i+1}).

    ``integrals[i]`` is the integral of x* over [0, tau_i). Past tau_m the
    rearrangement is 0, which is also its value at infinity.
    """
    knots: np.ndarray
    values: np.ndarray
    integrals: np.ndarray

    @property
    def domain_length(self) -> float:
        return float(self.knots[-1])

    @property
    def at_infinity(self) -> float:
        return 0.0

    def distribution(self, lam: float) -> float:
        return float(self.knots[int(np.count_nonzero(self.values > lam))])

    def xstar(self, t: float) -> float:
        if t >= self.domain_length:
            return self.at_infinity
        return float(self.values[np.searchsorted(self.knots, t, side="right") - 1])

    def integral_to(self, t: float) -> float:
        if t >= self.domain_length:
            return float(self.integrals[-1])
        i = int(np.searchsorted(self.knots, t, side="right") - 1)
        return float(self.integrals[i] + self.values[i] * (t - self.knots[i]))

    def maximal(self, t: float) -> float:
        return self.integral_to(t) / t

    def as_step_function(self) -> StepFunction:
        if self.values.size == 0:
            return StepFunction.zero()
        return StepFunction.on_partition(Partition.from_breakpoints(self.knots), self.values)


def rearrangement_profile(x: StepFunction) -> RearrangementProfile:
    norms = x.pointwise_norms()
    keep = norms > 0
    levels, measures = norms[keep], x.measures[keep]
    order = np.argsort(-levels, kind="stable")
    levels, measures = levels[order], measures[order]
    # one knot per distinct level
    values, grouped = [], []
    for level, mu in zip(levels, measures):
        if values and values[-1] == level:
            grouped[-1] += mu
        else:
            values.append(float(level))
            grouped.append(float(mu))
    values = np.array(values)
    knots = np.concatenate(([0.0], np.cumsum(grouped)))
    integrals = np.concatenate(([0.0], np.cumsum(values * np.array(grouped))))
    return RearrangementProfile(knots=knots, values=values, integrals=integrals)


def distribution_function(x: StepFunction, lam: float) -> float:
    """d_x(lam) = mu{t : |x(t)| > lam}."""
    if lam < 0:
        raise MalformedInputError(f"lambda must be nonnegative, got {lam}")
    norms = x.pointwise_norms()
    return float(np.sum(x.measures[norms > lam]))


def decreasing_rearrangement(x: StepFunction) -> StepFunction:
    return rearrangement_profile(x).as_step_function()


def maximal_function(x: StepFunction, t: float) -> float:
    """x**(t) = (1/t) int_0^t x*(s) ds."""
    if not t > 0:
        raise MalformedInputError(f"t must be positive, got {t}")
    return rearrangement_profile(x).maximal(t)


def hlp_majorizes(x: StepFunction, y: StepFunction) -> bool:
    """Decide x < y in the Hardy-Littlewood-Polya sense, i.e. x** <= y** on (0, inf).

    Checking the knots of both rearrangements is enough. Write
    I(t) = t x**(t) = int_0^t x*. Between consecutive knots of the merged grid
    both I_x and I_y are affine, so I_y - I_x is affine there and is
    nonnegative on the piece once it is nonnegative at both ends; at 0 both
    vanish and past the last knot both are constant.
    """
    px, py = rearrangement_profile(x), rearrangement_profile(y)
    for t in np.union1d(px.knots, py.knots)[1:]:
        ix, iy = px.integral_to(t), py.integral_to(t)
        if ix > iy + 1e-12 * max(1.0, abs(iy)):
            logger.debug(f"majorization fails at t={t:g}: {ix} > {iy}")
            return False
    return True


def _block_averages(x: StepFunction, blocks: Partition) -> StepFunction:
    if not blocks.blocks:
        return StepFunction.zero(x.dim, x.value_norm)
    values = np.array([x.average_over(block) for block in blocks]).reshape(len(blocks), x.dim)
    return canonicalize(StepFunction(blocks, values, x.dim, x.value_norm))


def averaging_operator(x: StepFunction, A: Partition) -> StepFunction:
    """T_A x: block averages on A, zero off the union of A."""
    return _block_averages(x, A)


def conditional_contraction(x: StepFunction, B: Partition) -> StepFunction:
    """S_B x: x off the union of B, its block average on each B_j."""
    if not B.blocks:
        return x
    off_b = x.subtract(x.restrict(B))
    return off_b.add(_block_averages(x, B))


@dataclass(frozen=True)
class SymmetricNorm:
    kind: str
    p: float = 2.0
    phi: Optional[PhiFunction] = None
    q: float = 2.0
    order_continuous: Optional[bool] = field(default=None)

    def __post_init__(self):
        if self.kind not in SYMMETRIC_KINDS:
            raise MalformedInputError(f"unknown symmetric norm '{self.kind}'")
        if self.kind == "lp" and not self.p >= 1:
            raise MalformedInputError(f"Lp norm needs p >= 1, got {self.p}")
        if self.kind == "orlicz-luxemburg" and self.phi is None:
            raise MalformedInputError("Orlicz norm needs a phi function")
        if self.kind == "lorentz" and not self.q >= 1:
            raise MalformedInputError(f"Lorentz norm needs q >= 1, got {self.q}")
        if self.order_continuous is None:
            declared = not (self.kind == "lp" and math.isinf(self.p))
            object.__setattr__(self, "order_continuous", declared)

    @classmethod
    def lp(cls, p: float) -> "SymmetricNorm":
        return cls("lp", p=float(p))

    @classmethod
    def orlicz(cls, phi: PhiFunction) -> "SymmetricNorm":
        return cls("orlicz-luxemburg", phi=phi)

    @classmethod
    def lorentz(cls, q: float) -> "SymmetricNorm":
        return cls("lorentz", q=float(q))

    def norm(self, x: StepFunction) -> float:
        if self.kind == "orlicz-luxemburg":
            return luxemburg_norm(Orlicz(self.phi), x)
        if self.kind == "lorentz":
            profile = rearrangement_profile(x)
            weights = np.diff(profile.knots ** (1.0 / self.q))
            return float(np.dot(profile.values, weights))
        norms = x.pointwise_norms()
        if not np.any(norms):
            return 0.0
        top = norms.max()
        if math.isinf(self.p):
            return float(top)
        return float(top * np.sum((norms / top) ** self.p * x.measures) ** (1.0 / self.p))

    def __call__(self, x: StepFunction) -> float:
        return self.norm(x)


def fundamental_function(E: SymmetricNorm, t: float, alpha: float = math.inf) -> float:
    """phi_E(t) = ||chi_(0,t)||_E."""
    if not 0 < t < alpha or math.isinf(t):
        raise MalformedInputError(f"t = {t} lies outside (0, {alpha})")
    return E.norm(StepFunction.indicator(0.0, t, 1.0))


def _check_chain(chain: Sequence[Partition]):
    for i, (coarse, fine) in enumerate(zip(chain, chain[1:]), start=1):
        try:
            refines = is_refinement(coarse, fine)
        except IncomparableDomainsError as e:
            raise InvalidChainError(f"levels {i} and {i + 1} cover different sets: {e.message}")
        if not refines:
            raise InvalidChainError(f"level {i + 1} does not refine level {i}")


def map_convergence_experiment(
    E: SymmetricNorm, x: StepFunction, chain: Sequence[Partition]
) -> List[ConvergenceRow]:
    """Rows (level, ||T_{A_level} x - x||_E) along a refinement chain, levels from 1."""
    if not E.order_continuous:
        raise NotOrderContinuousError(f"{E.kind} norm is not order continuous")
    if not chain:
        raise MalformedInputError("the chain must have at least one partition")
    _check_chain(chain)
    rows = []
    for level, A in enumerate(chain, start=1):
        error = E.norm(averaging_operator(x, A).subtract(x))
        rows.append(ConvergenceRow(level=level, error=error))
        logger.debug(f"level {level}: {len(A)} blocks, error {error:.6g}")
    return rows
