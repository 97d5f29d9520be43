"""Approximate fixed points of compact self-maps through a finite-rank reduction.

A map T with bounded range is replaced by T_eps = H o T where H is an
admissible finite-rank map for a finite sample of T's range. On the block
coefficients of H's partition T_eps is a continuous self-map of a box,
which ``brouwer_solve`` handles when the box has at most a few dimensions.
"""
import json
import logging
import math
import subprocess
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..config import get_settings
from ..errors import (
    ConvergenceError,
    DimensionLimitError,
    ExternalOperatorError,
    IdempotenceError,
    MalformedInputError,
    ModularisError,
    SelfMapError,
)
from .approximation import build_admissible_map, radial_project
from .fnorm import FNormSpec, norm_value
from .measure import MeasureSpace, Partition, StepFunction, canonicalize, vector_norms
from .symmetric import averaging_operator

logger = logging.getLogger(__name__)

BUILTIN_NONLINEARITIES = {"sin_damped": np.sin, "tanh_damped": np.tanh}


class Operator(ABC):
    """A map on step functions with a declared sup-norm bound on its range."""
    dim: int = 1
    value_norm: str = "euclidean"

    @abstractmethod
    def __call__(self, f: StepFunction) -> StepFunction:
        ...

    @property
    def range_bound(self) -> Optional[float]:
        return None

    @property
    def range_partition(self) -> Optional[Partition]:
        return None

    @property
    def modulus(self) -> Optional[float]:
        """Declared Lipschitz constant in the sup norm, when known."""
        return None

    def zero(self) -> StepFunction:
        return StepFunction.zero(self.dim, self.value_norm)

    def close(self):
        """Release resources held by the operator or its parts."""


@dataclass(frozen=True)
class AffineAverageOperator(Operator):
    """f -> c + lam P_K f with |lam| < 1."""
    c: StepFunction
    lam: float
    K: Partition = field(default_factory=Partition)

    def __post_init__(self):
        if not abs(self.lam) < 1:
            raise MalformedInputError(f"affine operator needs |lam| < 1, got {self.lam}")

    @classmethod
    def constant(cls, c: StepFunction) -> "AffineAverageOperator":
        return cls(c, 0.0, Partition())

    @property
    def dim(self) -> int:
        return self.c.dim

    @property
    def value_norm(self) -> str:
        return self.c.value_norm

    def __call__(self, f: StepFunction) -> StepFunction:
        return self.c.add(averaging_operator(f, self.K).scale(self.lam))

    @property
    def range_bound(self) -> float:
        return self.c.sup_norm() / (1.0 - abs(self.lam))

    @property
    def range_partition(self) -> Partition:
        return self.K

    @property
    def modulus(self) -> float:
        return abs(self.lam)

    def solve(self) -> StepFunction:
        """f* = c + lam/(1 - lam) P_K c."""
        coefficients = averaging_operator(self.c, self.K)
        return self.c.add(coefficients.scale(self.lam / (1.0 - self.lam)))


@dataclass(frozen=True)
class BuiltinOperator(Operator):
    """f -> c + lam sigma(P_K f), sigma = sin or tanh taken componentwise."""
    name: str
    c: StepFunction
    lam: float
    K: Partition

    def __post_init__(self):
        if self.name not in BUILTIN_NONLINEARITIES:
            raise MalformedInputError(f"unknown builtin operator '{self.name}'")
        if not abs(self.lam) < 1:
            raise MalformedInputError(f"builtin operator needs |lam| < 1, got {self.lam}")

    @property
    def dim(self) -> int:
        return self.c.dim

    @property
    def value_norm(self) -> str:
        return self.c.value_norm

    def __call__(self, f: StepFunction) -> StepFunction:
        averaged = averaging_operator(f, self.K)
        sigma = BUILTIN_NONLINEARITIES[self.name]
        bent = canonicalize(averaged.with_values(sigma(averaged.values)))
        return self.c.add(bent.scale(self.lam))

    @property
    def range_bound(self) -> float:
        ones = vector_norms(np.ones((1, self.dim)), self.value_norm)[0]
        return self.c.sup_norm() + abs(self.lam) * float(ones)

    @property
    def range_partition(self) -> Partition:
        return self.K

    @property
    def modulus(self) -> float:
        return abs(self.lam)


@dataclass(frozen=True)
class RadialOperator(Operator):
    a: float
    dim: int = 1
    value_norm: str = "euclidean"

    def __call__(self, f: StepFunction) -> StepFunction:
        return radial_project(f, self.a)

    @property
    def range_bound(self) -> float:
        return self.a


@dataclass(frozen=True)
class IdentityOperator(Operator):
    dim: int = 1
    value_norm: str = "euclidean"

    def __call__(self, f: StepFunction) -> StepFunction:
        return f


@dataclass(frozen=True)
class ComposedOperator(Operator):
    """f -> outer(inner(f))."""
    outer: Operator
    inner: Operator

    @property
    def dim(self) -> int:
        return self.outer.dim

    @property
    def value_norm(self) -> str:
        return self.outer.value_norm

    def __call__(self, f: StepFunction) -> StepFunction:
        return self.outer(self.inner(f))

    def close(self):
        self.outer.close()
        self.inner.close()

    @property
    def range_bound(self) -> Optional[float]:
        return self.outer.range_bound

    @property
    def range_partition(self) -> Optional[Partition]:
        return self.outer.range_partition

    @property
    def modulus(self) -> Optional[float]:
        if self.outer.modulus is None or self.inner.modulus is None:
            return None
        return self.outer.modulus * self.inner.modulus


@dataclass(eq=False)
class ExternalOperator(Operator):
    """Operator served by a subprocess.

    The process reads one StepFunction JSON object per line on stdin and
    answers with one StepFunction JSON object per line on stdout.
    """
    command: Tuple[str, ...]
    bound: float
    dim: int = 1
    value_norm: str = "euclidean"
    partition: Optional[Partition] = None
    declared_modulus: Optional[float] = None
    _process: Optional[subprocess.Popen] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not self.command:
            raise MalformedInputError("external operator needs a command")
        self.command = tuple(self.command)

    def _ensure_started(self) -> subprocess.Popen:
        if self._process is None or self._process.poll() is not None:
            logger.info(f"starting external operator: {' '.join(self.command)}")
            try:
                self._process = subprocess.Popen(
                    list(self.command),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as e:
                raise ExternalOperatorError(f"cannot start {self.command[0]}: {e}")
        return self._process

    def __call__(self, f: StepFunction) -> StepFunction:
        from ..models import StepFunctionModel

        process = self._ensure_started()
        try:
            process.stdin.write(StepFunctionModel.from_domain(f).model_dump_json() + "\n")
            process.stdin.flush()
            reply = process.stdout.readline()
        except (BrokenPipeError, OSError) as e:
            raise ExternalOperatorError(f"external operator pipe failed: {e}")
        if not reply:
            raise ExternalOperatorError(f"external operator exited with status {process.poll()}")
        try:
            result = StepFunctionModel.model_validate(json.loads(reply)).to_domain()
        except (ValueError, ModularisError) as e:
            raise ExternalOperatorError(f"external operator sent an unreadable reply: {e}")
        if result.dim != self.dim:
            raise ExternalOperatorError(f"external operator answered in R^{result.dim}, expected R^{self.dim}")
        return result

    def close(self):
        if self._process is not None and self._process.poll() is None:
            self._process.stdin.close()
            try:
                self._process.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._process.kill()
        self._process = None

    def __enter__(self) -> "ExternalOperator":
        return self

    def __exit__(self, *exc):
        self.close()

    @property
    def range_bound(self) -> float:
        return self.bound

    @property
    def range_partition(self) -> Optional[Partition]:
        return self.partition

    @property
    def modulus(self) -> Optional[float]:
        return self.declared_modulus


@dataclass(frozen=True)
class BrouwerSolution:
    point: np.ndarray
    displacement: float
    iterations: int
    method: str


@dataclass(frozen=True)
class FixedPointResult:
    point: StepFunction
    residual: float
    iterations: int
    method: str


def _box_samples(lower: np.ndarray, upper: np.ndarray, rng: np.random.Generator, extra: int = 16) -> List[np.ndarray]:
    dim = len(lower)
    center = 0.5 * (lower + upper)
    points = [np.where(np.array([(mask >> j) & 1 for j in range(dim)], dtype=bool), upper, lower)
              for mask in range(2 ** dim)]
    for axis in range(dim):
        for end in (lower, upper):
            face = center.copy()
            face[axis] = end[axis]
            points.append(face)
    for _ in range(extra):
        p = rng.uniform(lower, upper)
        axis = int(rng.integers(dim))
        p[axis] = lower[axis] if rng.uniform() < 0.5 else upper[axis]
        points.append(p)
    return points


def _evaluate(g: Callable[[np.ndarray], np.ndarray], p: np.ndarray) -> np.ndarray:
    out = np.asarray(g(p), dtype=float).reshape(p.shape)
    if not np.all(np.isfinite(out)):
        raise SelfMapError(f"map is not finite at {p.tolist()}")
    return out


def _check_self_map(g, lower: np.ndarray, upper: np.ndarray, rng: np.random.Generator):
    slack = 1e-12 * max(1.0, float(np.max(np.abs(np.concatenate((lower, upper))))))
    for p in _box_samples(lower, upper, rng):
        gp = _evaluate(g, p)
        if np.any(gp < lower - slack) or np.any(gp > upper + slack):
            raise SelfMapError(f"map sends {p.tolist()} to {gp.tolist()}, outside the box")


def _nested_bisection(g, lower: np.ndarray, upper: np.ndarray, width: float, depth: int) -> np.ndarray:
    """Bisect the displacement sign along each axis, solving later axes recursively.

    With the first coordinates fixed, the remaining coordinates of g still
    map their sub-box into itself, so g_j - p_j is >= 0 at the lower end of
    axis j and <= 0 at the upper end.
    """
    dim = len(lower)

    def solve(axis: int, prefix: List[float]) -> np.ndarray:
        lo, hi = float(lower[axis]), float(upper[axis])

        def complete(t: float) -> np.ndarray:
            if axis == dim - 1:
                return np.array(prefix + [t])
            return solve(axis + 1, prefix + [t])

        for _ in range(depth):
            if hi - lo <= width:
                break
            mid = 0.5 * (lo + hi)
            p = complete(mid)
            if _evaluate(g, p)[axis] - mid > 0:
                lo = mid
            else:
                hi = mid
        return complete(0.5 * (lo + hi))

    return solve(0, [])


def brouwer_solve(
    g: Callable[[np.ndarray], np.ndarray],
    lower: Sequence[float],
    upper: Sequence[float],
    tol: float,
    max_iter: Optional[int] = None,
    damping: Optional[float] = None,
    seed: int = 0,
) -> BrouwerSolution:
    """Point p of the box with ||g(p) - p||_inf <= tol for a continuous self-map g.

    Damped Picard iteration from the box center; when it stalls or runs out
    of iterations the nested-bisection grid search takes over.
    """
    settings = get_settings()
    max_iter = settings.MAX_ITERS if max_iter is None else max_iter
    beta = settings.PICARD_DAMPING if damping is None else damping
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    if lower.shape != upper.shape or lower.size == 0:
        raise MalformedInputError("box bounds must be nonempty vectors of equal length")
    if np.any(upper <= lower):
        raise MalformedInputError("box needs lower < upper on every axis")
    if lower.size > settings.BROUWER_MAX_DIM:
        raise DimensionLimitError(
            f"{lower.size} coefficients exceed the solver limit of {settings.BROUWER_MAX_DIM}"
        )
    if not tol > 0:
        raise MalformedInputError(f"tol must be positive, got {tol}")

    _check_self_map(g, lower, upper, np.random.default_rng(seed))

    p = 0.5 * (lower + upper)
    history: List[float] = []
    window, improvement = settings.STALL_WINDOW, settings.STALL_IMPROVEMENT
    iterations = 0
    for iterations in range(max_iter + 1):
        gp = _evaluate(g, p)
        displacement = float(np.max(np.abs(gp - p)))
        if displacement <= tol:
            logger.debug(f"Picard converged in {iterations} iterations, displacement {displacement:.3g}")
            return BrouwerSolution(p, displacement, iterations, "picard")
        history.append(displacement)
        if len(history) > window and displacement > (1 - improvement) * history[-window - 1]:
            logger.warning(f"Picard stalled at displacement {displacement:.3g}; switching to grid subdivision")
            break
        p = np.clip((1 - beta) * p + beta * gp, lower, upper)
    else:
        logger.warning(f"Picard hit the iteration cap {max_iter}; switching to grid subdivision")

    width = tol * 1e-3
    p = _nested_bisection(g, lower, upper, width, settings.BROUWER_MAX_DEPTH)
    displacement = float(np.max(np.abs(_evaluate(g, p) - p)))
    if displacement <= tol:
        return BrouwerSolution(p, displacement, iterations, "grid")
    raise ConvergenceError(
        f"no point with displacement <= {tol:g} found (best {displacement:.3g}) "
        f"within {max_iter} iterations and depth {settings.BROUWER_MAX_DEPTH}"
    )


def picard_budget(modulus: Optional[float], diameter: float, tol: float, damping: Optional[float] = None) -> int:
    """Iterations damped Picard needs on a contraction: log(diam/tol)/log(1/q) plus a stall window."""
    settings = get_settings()
    if modulus is None or not 0 <= modulus < 1 or diameter <= tol:
        return settings.MAX_ITERS
    beta = settings.PICARD_DAMPING if damping is None else damping
    q = (1 - beta) + beta * modulus
    needed = math.ceil(math.log(diameter / tol) / math.log(1 / q)) + settings.STALL_WINDOW
    return max(settings.MAX_ITERS, needed)


def _marker(partition: Partition, dim: int, value_norm: str, bound: float) -> StepFunction:
    """Distinct levels in (0, bound] on every block, so averaging keeps the blocks apart."""
    levels = bound * np.arange(1, len(partition) + 1, dtype=float) / len(partition)
    unit = vector_norms(np.ones((1, dim)), value_norm)[0]
    values = np.repeat(levels / unit, dim)
    return StepFunction.on_partition(partition, values, dim, value_norm)


def approximate_fixed_point(
    T: Operator, eps: float, norm: FNormSpec, space: MeasureSpace
) -> FixedPointResult:
    """f with |T f - f|_F <= eps, certified by re-evaluation."""
    if not eps > 0:
        raise MalformedInputError(f"eps must be positive, got {eps}")
    if isinstance(T, AffineAverageOperator):
        point = T.solve()
        residual = norm_value(norm, T(point).subtract(point))
        logger.info(f"affine operator solved exactly, residual {residual:.3g}")
        return FixedPointResult(point=point, residual=residual, iterations=0, method="linear")

    bound = T.range_bound
    if bound is None or not 0 < bound < math.inf:
        raise MalformedInputError("operator must declare a finite positive range bound")

    first = T(T.zero())
    Z = [first, T(first)]
    if T.range_partition is not None and T.range_partition.blocks:
        Z.append(_marker(T.range_partition, T.dim, T.value_norm, bound))
    H = build_admissible_map(Z, eps / 2, norm, space, radius=bound)
    size = H.rank(T.dim)
    limit = get_settings().BROUWER_MAX_DIM
    if size > limit:
        raise DimensionLimitError(
            f"reduction has {size} coefficients (> {limit}); coarsen the partition or use an affine operator"
        )

    mids = 0.5 * (H.K.starts + H.K.ends)

    def lift(p: np.ndarray) -> StepFunction:
        return canonicalize(StepFunction.on_partition(H.K, p, T.dim, T.value_norm))

    def reduced(p: np.ndarray) -> np.ndarray:
        return H.apply(T(lift(p))).values_at(mids).ravel()

    lower, upper = np.full(size, -bound), np.full(size, bound)
    tol = eps / 2
    for _ in range(7):
        budget = picard_budget(T.modulus, 2 * bound, tol)
        solution = brouwer_solve(reduced, lower, upper, tol, max_iter=budget)
        point = lift(solution.point)
        residual = norm_value(norm, T(point).subtract(point))
        if residual <= eps:
            logger.info(f"fixed point by {solution.method}: residual {residual:.3g} "
                        f"after {solution.iterations} iterations on {size} coefficients")
            return FixedPointResult(point=point, residual=residual,
                                    iterations=solution.iterations, method=solution.method)
        logger.warning(f"residual {residual:.3g} > eps {eps:g} at coefficient tol {tol:g}; tightening")
        tol /= 100
    raise ConvergenceError(f"residual stayed above eps={eps:g} after tightening the coefficient tolerance")


def _check_idempotent(retract: Operator, samples: Sequence[StepFunction]):
    for f in samples:
        once = retract(f)
        twice = retract(once)
        if not twice.equals_ae(once, atol=1e-12 * max(1.0, once.sup_norm())):
            raise IdempotenceError(f"retract is not idempotent at {f!r}")


def retract_fixed_point(
    T: Operator, retract: Operator, eps: float, norm: FNormSpec, space: MeasureSpace
) -> FixedPointResult:
    """Fixed point of T o P, pushed through P once more so it lies in the retract's range."""
    if isinstance(retract, IdentityOperator):
        return approximate_fixed_point(T, eps, norm, space)
    first = T(T.zero())
    _check_idempotent(retract, [T.zero(), first, T(first), first.scale(3.0), first.scale(-10.0)])
    result = approximate_fixed_point(ComposedOperator(T, retract), eps, norm, space)
    point = retract(result.point)
    residual = norm_value(norm, T(point).subtract(point))
    return FixedPointResult(point=point, residual=residual, iterations=result.iterations, method=result.method)
