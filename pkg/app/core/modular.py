"""Integral semimodulars (Orlicz, Musielak-Orlicz, pointwise max) on step functions.

For a step function f = sum_i w_i chi(B_i) an integral semimodular is the
finite sum rho(f) = sum_i phi(||w_i||) mu(B_i), so evaluation is exact.
Values live in [0, +inf]; +inf is represented by ``math.inf``.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import MalformedInputError
from .measure import ATOL, StepFunction
from .reports import AxiomReport

logger = logging.getLogger(__name__)

ExtendedReal = float

PHI_KINDS = ("power", "exp_shift", "piecewise_linear")
CONVEXITY_KINDS = ("plain", "s-convex", "convex")

# 17 points of [0, 1], endpoints included
SIMPLEX_GRID = np.linspace(0.0, 1.0, 17)


@dataclass(frozen=True)
class Convexity:
    kind: str = "plain"
    s: Optional[float] = None

    def __post_init__(self):
        if self.kind not in CONVEXITY_KINDS:
            raise MalformedInputError(f"unknown convexity class '{self.kind}'")
        if self.kind == "convex":
            object.__setattr__(self, "s", 1.0)
        elif self.kind == "s-convex":
            if self.s is None or not 0 < self.s <= 1:
                raise MalformedInputError(f"s-convexity needs s in (0, 1], got {self.s}")
            object.__setattr__(self, "s", float(self.s))
        else:
            object.__setattr__(self, "s", None)

    @classmethod
    def convex(cls) -> "Convexity":
        return cls("convex")

    @property
    def rank(self) -> Tuple[int, float]:
        return (0, 0.0) if self.s is None else (1, self.s)

    @property
    def is_convex(self) -> bool:
        return self.s == 1.0

    @staticmethod
    def weakest(classes: Sequence["Convexity"]) -> "Convexity":
        return min(classes, key=lambda c: c.rank)


@dataclass(frozen=True)
class PhiFunction:
    """Nondecreasing phi: [0, inf) -> [0, inf] with phi(0) = 0."""
    kind: str
    p: float = 1.0
    knots: Tuple[float, ...] = ()
    slopes: Tuple[float, ...] = ()
    barrier: Optional[float] = None

    def __post_init__(self):
        if self.kind not in PHI_KINDS:
            raise MalformedInputError(f"unknown phi kind '{self.kind}'")
        if self.kind == "power" and not self.p > 0:
            raise MalformedInputError(f"power phi needs p > 0, got {self.p}")
        if self.kind == "piecewise_linear":
            knots = tuple(float(k) for k in self.knots)
            slopes = tuple(float(s) for s in self.slopes)
            if not knots or knots[0] != 0.0:
                raise MalformedInputError("piecewise-linear phi must start with a knot at 0")
            if any(b <= a for a, b in zip(knots, knots[1:])):
                raise MalformedInputError(f"knots {knots} are not increasing")
            if len(slopes) != len(knots) or any(s < 0 for s in slopes):
                raise MalformedInputError("need one nonnegative slope per knot")
            object.__setattr__(self, "knots", knots)
            object.__setattr__(self, "slopes", slopes)
        if self.barrier is not None and not self.barrier > 0:
            raise MalformedInputError(f"barrier must be positive, got {self.barrier}")

    @classmethod
    def power(cls, p: float) -> "PhiFunction":
        return cls("power", p=float(p))

    @classmethod
    def exp_shift(cls) -> "PhiFunction":
        return cls("exp_shift")

    @classmethod
    def piecewise_linear(
        cls, knots: Sequence[float], slopes: Sequence[float], barrier: Optional[float] = None
    ) -> "PhiFunction":
        return cls("piecewise_linear", knots=tuple(knots), slopes=tuple(slopes), barrier=barrier)

    @property
    def is_convex(self) -> bool:
        if self.kind == "power":
            return self.p >= 1
        if self.kind == "exp_shift":
            return True
        return all(b >= a for a, b in zip(self.slopes, self.slopes[1:]))

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore"):
            if self.kind == "power":
                out = np.power(u, self.p)
            elif self.kind == "exp_shift":
                out = np.expm1(u)
            else:
                knots = np.array(self.knots)
                widths = np.append(np.diff(knots), np.inf)
                pieces = np.clip(u[..., None] - knots, 0.0, widths)
                out = (pieces * np.array(self.slopes)).sum(axis=-1)
        if self.barrier is not None:
            out = np.where(u > self.barrier, np.inf, out)
        return out


class Semimodular(ABC):
    convexity: Convexity

    @abstractmethod
    def ray(self, f: StepFunction) -> Callable[[float], ExtendedReal]:
        """c -> rho(c f), with the per-block norms of f computed once."""

    def evaluate(self, f: StepFunction) -> ExtendedReal:
        return self.ray(f)(1.0)

    def __call__(self, f: StepFunction) -> ExtendedReal:
        return self.evaluate(f)

    def _check_dim(self, f: StepFunction, dim: Optional[int]):
        if dim is not None and f.dim != dim:
            raise MalformedInputError(f"modular expects R^{dim}-valued functions, got R^{f.dim}")


def _weighted_sum(phi: PhiFunction, norms: np.ndarray, measures: np.ndarray, c: float) -> float:
    if norms.size == 0:
        return 0.0
    return float(np.sum(phi(abs(c) * norms) * measures))


@dataclass(frozen=True)
class Orlicz(Semimodular):
    phi: PhiFunction
    convexity: Convexity = field(default=None)
    dim: Optional[int] = None

    def __post_init__(self):
        if self.convexity is None:
            declared = Convexity("convex") if self.phi.is_convex else Convexity("plain")
            object.__setattr__(self, "convexity", declared)

    def ray(self, f: StepFunction) -> Callable[[float], ExtendedReal]:
        self._check_dim(f, self.dim)
        norms, measures = f.pointwise_norms(), f.measures
        return lambda c: _weighted_sum(self.phi, norms, measures, c)


@dataclass(frozen=True)
class Musielak(Semimodular):
    """phi depends on t through finitely many zones [t_{j-1}, t_j)."""
    zones: Tuple[Tuple[float, PhiFunction], ...]
    convexity: Convexity = field(default=None)
    dim: Optional[int] = None

    def __post_init__(self):
        if not self.zones:
            raise MalformedInputError("Musielak-Orlicz modular needs at least one zone")
        ends = [float(t) for t, _ in self.zones]
        if any(t <= 0 for t in ends) or any(b <= a for a, b in zip(ends, ends[1:])):
            raise MalformedInputError(f"zone ends {ends} must be positive and increasing")
        if self.convexity is None:
            convex = all(phi.is_convex for _, phi in self.zones)
            object.__setattr__(self, "convexity", Convexity("convex" if convex else "plain"))

    def ray(self, f: StepFunction) -> Callable[[float], ExtendedReal]:
        self._check_dim(f, self.dim)
        norms = f.pointwise_norms()
        last_end = float(self.zones[-1][0])
        if np.any((f.ends > last_end + ATOL) & (norms > 0)):
            raise MalformedInputError(f"function is supported beyond the last zone end {last_end}")
        pieces = []
        lower = 0.0
        for upper, phi in self.zones:
            overlap = np.minimum(f.ends, upper) - np.maximum(f.starts, lower)
            hit = overlap > ATOL
            pieces.append((phi, norms[hit], overlap[hit]))
            lower = float(upper)
        return lambda c: float(sum(_weighted_sum(phi, n, mu, c) for phi, n, mu in pieces))


@dataclass(frozen=True)
class MaxModular(Semimodular):
    """rho = max_i rho_i."""
    members: Tuple[Semimodular, ...]

    @property
    def convexity(self) -> Convexity:
        return Convexity.weakest([m.convexity for m in self.members])

    def ray(self, f: StepFunction) -> Callable[[float], ExtendedReal]:
        rays = [m.ray(f) for m in self.members]
        return lambda c: max(r(c) for r in rays)


def evaluate_modular(rho: Semimodular, f: StepFunction) -> ExtendedReal:
    return rho.evaluate(f)


def max_combine(rhos: Sequence[Semimodular]) -> Semimodular:
    if not rhos:
        raise MalformedInputError("max_combine needs at least one semimodular")
    if len(rhos) == 1:
        return rhos[0]
    return MaxModular(tuple(rhos))


def _leq(lhs: float, rhs: float) -> bool:
    if math.isinf(rhs):
        return True
    return lhs <= rhs + 1e-12 * max(1.0, abs(rhs))


def _combo(weights: Sequence[float], values: Sequence[float]) -> float:
    # 0 * inf counts as 0
    return float(sum(w * v for w, v in zip(weights, values) if w > 0))


def verify_semimodular(
    rho: Semimodular, samples: Sequence[StepFunction], trials: int = 100, seed: int = 0
) -> AxiomReport:
    """Sample the semimodular axioms (a), (b), (c) and, for s-convex rho, (c1).

    (c1) is checked as rho(ax+by) <= a^s rho(x) + b^s rho(y) for a^s + b^s = 1.
    """
    rng = np.random.default_rng(seed)
    report = AxiomReport(suite="semimodular")
    dim = samples[0].dim if samples else 1
    value_norm = samples[0].value_norm if samples else "euclidean"

    at_zero = rho.evaluate(StepFunction.zero(dim, value_norm))
    report.check(at_zero == 0, "a", f"rho(0) = {at_zero}")

    rho_of = [rho.evaluate(x) for x in samples]
    for i, x in enumerate(samples):
        if not x.is_zero():
            ray = rho.ray(x)
            report.check(
                any(ray(d) > 0 for d in np.logspace(-3, 3, 13)),
                "a", "rho(d x) = 0 for every sampled d but x != 0", x=i,
            )
        flipped = rho.evaluate(x.scale(-1.0))
        report.check(
            flipped == rho_of[i] or abs(flipped - rho_of[i]) <= 1e-12 * max(1.0, rho_of[i]),
            "b", f"rho(-x) = {flipped} differs from rho(x) = {rho_of[i]}", x=i,
        )

    if not samples:
        return report

    s = rho.convexity.s
    if s is not None:
        # y = 0 on the interior grid: rho(a x) <= a^s rho(x) with a^s = theta
        for i, x in enumerate(samples):
            for theta in SIMPLEX_GRID[1:-1]:
                a = float(theta) ** (1.0 / s)
                lhs = rho.evaluate(x.scale(a))
                rhs = _combo((float(theta),), (rho_of[i],))
                report.check(_leq(lhs, rhs), "c1",
                             f"rho(ax) = {lhs} > a^s rho(x) = {rhs}", x=i, a=a, b=0.0, s=s)

    for _ in range(trials):
        i, j = (int(k) for k in rng.integers(len(samples), size=2))
        x, y = samples[i], samples[j]
        for theta in np.append(SIMPLEX_GRID, rng.uniform()):
            a, b = float(theta), float(1.0 - theta)
            lhs = rho.evaluate(x.scale(a).add(y.scale(b)))
            rhs = rho_of[i] + rho_of[j]
            report.check(_leq(lhs, rhs), "c",
                         f"rho(ax+by) = {lhs} > rho(x) + rho(y) = {rhs}", x=i, y=j, a=a, b=b)
            if s is not None:
                a, b = float(theta) ** (1.0 / s), float(1.0 - theta) ** (1.0 / s)
                lhs = rho.evaluate(x.scale(a).add(y.scale(b)))
                rhs = _combo((theta, 1.0 - theta), (rho_of[i], rho_of[j]))
                report.check(_leq(lhs, rhs), "c1",
                             f"rho(ax+by) = {lhs} > a^s rho(x) + b^s rho(y) = {rhs}",
                             x=i, y=j, a=a, b=b, s=s)

    logger.info(f"semimodular suite: {report.checks} checks, {len(report.violations)} violations")
    return report
