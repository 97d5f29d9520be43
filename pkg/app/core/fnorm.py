"""F-norms and s-norms generated by semimodulars.

Given semimodulars rho_1..rho_{n-1} and a monotone binder f on R^n,

    |x|_f = inf_{k>0} f(k, rho_1(x/k), ..., rho_{n-1}(x/k))            (F-norm)
    ||x||_f = inf_{k>0} k f(1, rho_1(x/k^{1/s}), ..., rho_{n-1}(x/k^{1/s}))  (s-norm)

The infimum is found numerically by ``search.minimize_positive``; the
Luxemburg forms have monotone crossings and are solved by bisection.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import AxiomViolationError, MalformedInputError, WrongConvexityClassError
from .measure import StepFunction
from .modular import ExtendedReal, Semimodular
from .reports import AxiomReport
from .search import SearchParams, SearchResult, bisect_crossing, minimize_positive

logger = logging.getLogger(__name__)

BINDER_KINDS = ("max", "lp", "wsum")
NORM_MODES = ("fnorm", "snorm")


@dataclass(frozen=True)
class Binder:
    kind: str
    arity: int = 2
    p: float = 1.0
    weights: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in BINDER_KINDS:
            raise MalformedInputError(f"unknown binder kind '{self.kind}'")
        if self.kind == "wsum":
            weights = tuple(float(w) for w in self.weights)
            if any(w <= 0 for w in weights):
                raise MalformedInputError(f"weighted-sum binder needs positive weights, got {weights}")
            object.__setattr__(self, "weights", weights)
            object.__setattr__(self, "arity", len(weights))
        if self.kind == "lp" and not self.p >= 1:
            raise MalformedInputError(f"lp binder needs p >= 1, got {self.p}")
        if self.arity < 2:
            raise MalformedInputError(f"binder arity must be at least 2, got {self.arity}")

    @classmethod
    def max(cls, arity: int = 2) -> "Binder":
        return cls("max", arity=arity)

    @classmethod
    def lp(cls, p: float, arity: int = 2) -> "Binder":
        if math.isinf(p):
            return cls("max", arity=arity)
        return cls("lp", arity=arity, p=float(p))

    @classmethod
    def wsum(cls, weights: Sequence[float]) -> "Binder":
        return cls("wsum", weights=tuple(weights))

    @property
    def is_convex(self) -> bool:
        # max, lp with p >= 1 and positive weighted sums are all norms on R^n
        return True

    @property
    def e1_weight(self) -> float:
        return self.weights[0] if self.kind == "wsum" else 1.0

    def __call__(self, coords: Sequence[float]) -> ExtendedReal:
        x = np.abs(np.asarray(coords, dtype=float))
        if x.shape != (self.arity,):
            raise MalformedInputError(f"binder of arity {self.arity} got {x.shape[0]} coordinates")
        if np.any(np.isinf(x)):
            return math.inf
        if self.kind == "max":
            return float(x.max())
        if self.kind == "wsum":
            return float(np.dot(self.weights, x))
        top = x.max()
        if top == 0:
            return 0.0
        return float(top * np.linalg.norm(x / top, ord=self.p))


@dataclass(frozen=True)
class FNormSpec:
    modulars: Tuple[Semimodular, ...]
    binder: Binder
    mode: str = "fnorm"
    s: float = 1.0
    search: Optional[SearchParams] = None

    def __post_init__(self):
        object.__setattr__(self, "modulars", tuple(self.modulars))
        if self.mode not in NORM_MODES:
            raise MalformedInputError(f"unknown norm mode '{self.mode}'")
        if not self.modulars:
            raise MalformedInputError("an F-norm needs at least one semimodular")
        if self.binder.arity != len(self.modulars) + 1:
            raise MalformedInputError(
                f"binder arity {self.binder.arity} does not match {len(self.modulars)} modulars + 1"
            )
        if self.mode == "snorm":
            if not 0 < self.s <= 1:
                raise MalformedInputError(f"s must lie in (0, 1], got {self.s}")
            for rho in self.modulars:
                declared = rho.convexity.s
                if declared is None or not math.isclose(declared, self.s, rel_tol=1e-12):
                    raise WrongConvexityClassError(
                        f"s-norm with s={self.s} needs {self.s}-convex modulars, got {rho.convexity}"
                    )
            if not self.binder.is_convex:
                raise WrongConvexityClassError("s-norm needs a convex binder")

    @classmethod
    def luxemburg(cls, rho: Semimodular, search: Optional[SearchParams] = None) -> "FNormSpec":
        """Max binder of arity 2: the Luxemburg F-norm."""
        return cls((rho,), Binder.max(2), search=search)

    @property
    def params(self) -> SearchParams:
        return self.search or SearchParams.from_settings()


def _objective(spec: FNormSpec, rays: List[Callable[[float], float]]) -> Callable[[float], float]:
    binder = spec.binder
    if spec.mode == "fnorm":
        return lambda k: binder([k] + [ray(1.0 / k) for ray in rays])
    exponent = -1.0 / spec.s

    def snorm_objective(k: float) -> float:
        with np.errstate(over="ignore"):
            c = k ** exponent
        inner = binder([1.0] + [ray(c) for ray in rays])
        return k * inner

    return snorm_objective


def fnorm_objective(spec: FNormSpec, x: StepFunction, k: float) -> ExtendedReal:
    if not k > 0:
        raise MalformedInputError(f"k must be positive, got {k}")
    return _objective(spec, [rho.ray(x) for rho in spec.modulars])(k)


def minimize_objective(spec: FNormSpec, x: StepFunction) -> SearchResult:
    """inf over k of the FNormSpec objective together with the achieving k."""
    if x.is_zero():
        return SearchResult(value=0.0, k=0.0, evaluations=0)
    rays = [rho.ray(x) for rho in spec.modulars]
    if all(ray(1e300) == 0 for ray in rays):
        raise AxiomViolationError("semimodular vanishes on every scaling of a nonzero function")
    return minimize_positive(_objective(spec, rays), spec.params)


def fnorm(spec: FNormSpec, x: StepFunction) -> float:
    if spec.mode != "fnorm":
        spec = replace(spec, mode="fnorm")
    return minimize_objective(spec, x).value


def snorm(spec: FNormSpec, x: StepFunction) -> float:
    if spec.mode != "snorm":
        raise MalformedInputError("snorm needs an FNormSpec in snorm mode")
    return minimize_objective(spec, x).value


def norm_value(spec: FNormSpec, x: StepFunction) -> float:
    """The FNormSpec's own functional: F-norm or s-norm according to its mode."""
    return minimize_objective(spec, x).value


def luxemburg_fnorm(rho: Semimodular, x: StepFunction, tol: Optional[float] = None) -> float:
    """inf{u > 0 : rho(x/u) <= u}."""
    if x.is_zero():
        return 0.0
    ray = rho.ray(x)
    return bisect_crossing(lambda u: ray(1.0 / u) <= u, SearchParams.from_settings(tol=tol))


def luxemburg_norm(rho: Semimodular, x: StepFunction, tol: Optional[float] = None) -> float:
    """inf{u > 0 : rho(x/u) <= 1}; rho must be convex."""
    if not rho.convexity.is_convex:
        raise WrongConvexityClassError(f"Luxemburg norm needs a convex modular, got {rho.convexity}")
    if x.is_zero():
        return 0.0
    ray = rho.ray(x)
    return bisect_crossing(lambda u: ray(1.0 / u) <= 1.0, SearchParams.from_settings(tol=tol))


def amemiya_norm(
    rho: Semimodular, x: StepFunction, p: float = 1.0, tol: Optional[float] = None
) -> float:
    """p-Orlicz-Amemiya norm inf_k k (1 + rho(x/k)^p)^{1/p}.

    p = 1 is the classical Orlicz-Amemiya norm, p = inf the Luxemburg norm.
    """
    if not rho.convexity.is_convex:
        raise WrongConvexityClassError(f"Amemiya norm needs a convex modular, got {rho.convexity}")
    if not p >= 1:
        raise MalformedInputError(f"Amemiya norm needs p in [1, inf], got {p}")
    spec = FNormSpec((rho,), Binder.lp(p, 2), mode="snorm", s=1.0,
                     search=SearchParams.from_settings(tol=tol))
    return snorm(spec, x)


def verify_binder_monotone(binder: Binder, trials: int = 100, seed: int = 0) -> AxiomReport:
    """Sample coordinatewise-ordered pairs on the positive orthant."""
    rng = np.random.default_rng(seed)
    report = AxiomReport(suite="binder-monotone")
    report.check(binder(np.zeros(binder.arity)) == 0, "zero", "f(0) != 0")
    for _ in range(trials):
        scale = 10.0 ** rng.uniform(-3, 3)
        x = rng.exponential(size=binder.arity) * scale
        bump = rng.exponential(size=binder.arity) * scale * (rng.uniform(size=binder.arity) < 0.5)
        y = x + bump
        fx, fy = binder(x), binder(y)
        report.check(fx > 0, "zero", f"f(x) = 0 for x = {x.tolist()}", x=x.tolist())
        report.check(fx <= fy * (1 + 1e-12), "monotone",
                     f"f(x) = {fx} > f(y) = {fy}", x=x.tolist(), y=y.tolist())
    logger.info(f"binder-monotone suite: {report.checks} checks, {len(report.violations)} violations")
    return report


def verify_fnorm_axioms(
    spec: FNormSpec,
    samples: Sequence[StepFunction],
    scalars: Sequence[float] = (1.0,),
    tol: Optional[float] = None,
    trials: int = 50,
    sequences: int = 20,
    seed: int = 0,
) -> AxiomReport:
    """Sample the F-norm axioms on the FNormSpec functional.

    (i) |x| = 0 iff x = 0, (ii) |-x| = |x|, (iii) triangle inequality on
    ``trials`` random pairs with slack 3 tol, (iv) |lambda_n x - lambda x| -> 0
    monotonically along lambda_n = lambda + 2^-n, with |lambda_n x| -> |lambda x|.
    """
    tol = tol if tol is not None else spec.params.tol
    rng = np.random.default_rng(seed)
    report = AxiomReport(suite="fnorm-axioms")

    def value(f: StepFunction) -> float:
        return norm_value(spec, f)

    if samples:
        zero = StepFunction.zero(samples[0].dim, samples[0].value_norm)
        report.check(value(zero) == 0, "i", "|0| != 0")
    norms = [value(x) for x in samples]
    for i, (x, nx) in enumerate(zip(samples, norms)):
        if not x.is_zero():
            report.check(nx > 0, "i", f"|x| = {nx} for nonzero x", x=i)
        flipped = value(x.scale(-1.0))
        report.check(abs(flipped - nx) <= tol * max(1.0, nx), "ii",
                     f"|-x| = {flipped} differs from |x| = {nx}", x=i)

    if len(samples) >= 1:
        for _ in range(trials):
            i, j = (int(k) for k in rng.integers(len(samples), size=2))
            lhs = value(samples[i].add(samples[j]))
            rhs = norms[i] + norms[j]
            report.check(lhs <= rhs + 3 * tol * max(1.0, rhs), "iii",
                         f"|x+y| = {lhs} > |x| + |y| = {rhs}", x=i, y=j)

    for i, x in enumerate(samples[:sequences]):
        for lam in scalars:
            base = value(x.scale(lam))
            previous = math.inf
            gap = math.inf
            for n in range(1, 61):
                delta = 2.0 ** -n
                # lambda_n - lambda is delta exactly
                gap = value(x.scale(delta))
                report.check(gap <= previous * (1 + 3 * tol) + 3 * tol * 1e-12, "iv",
                             f"|lambda_n x - lambda x| rose to {gap} at n = {n}", x=i, lam=lam, n=n)
                drift = abs(value(x.scale(lam + delta)) - base)
                report.check(drift <= gap + 3 * tol * max(1.0, base), "iv",
                             f"||lambda_n x| - |lambda x|| = {drift} exceeds {gap}", x=i, lam=lam, n=n)
                previous = gap
            report.check(gap < 1e-6, "iv", f"|lambda_n x - lambda x| = {gap} did not fall below 1e-6",
                         x=i, lam=lam)

    logger.info(f"fnorm-axioms suite: {report.checks} checks, {len(report.violations)} violations")
    return report
