"""One-dimensional searches over k > 0 used by the norm engine.

Searches run in log k, so a bracket that spans 1e-9..1e9 is resolved
with the same relative precision everywhere.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from ..config import get_settings
from ..errors import AxiomViolationError, MalformedInputError, NotInSpaceError

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2
LOG_TEN = math.log(10.0)
LOG_K_MIN = math.log(1e-300)
LOG_K_MAX = math.log(1e300)


@dataclass(frozen=True)
class SearchParams:
    k_lo: float = 1e-9
    k_hi: float = 1e9
    tol: float = 1e-9
    max_iter: int = 200
    grid_points: int = 64

    def __post_init__(self):
        if not 0 < self.k_lo < self.k_hi:
            raise MalformedInputError(f"need 0 < k_lo < k_hi, got {self.k_lo}, {self.k_hi}")
        if not self.tol > 0:
            raise MalformedInputError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1 or self.grid_points < 2:
            raise MalformedInputError("max_iter must be >= 1 and grid_points >= 2")

    @classmethod
    def from_settings(cls, **overrides) -> "SearchParams":
        settings = get_settings()
        params = dict(
            k_lo=settings.K_LO,
            k_hi=settings.K_HI,
            tol=settings.TOL,
            max_iter=settings.MAX_ITERS,
            grid_points=settings.GRID_POINTS,
        )
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)


@dataclass(frozen=True)
class SearchResult:
    value: float
    k: float
    evaluations: int


class _Best:
    """Running minimum; ties go to the smaller abscissa."""

    def __init__(self):
        self.x = math.nan
        self.value = math.inf

    def offer(self, x: float, value: float):
        if value < self.value or (value == self.value and (math.isnan(self.x) or x < self.x)):
            self.x, self.value = x, value


def golden_section(
    f: Callable[[float], float], a: float, b: float, xtol: float, max_iter: int
) -> Tuple[float, float, int]:
    """Golden-section search on [a, b]; returns (x_best, f_best, evaluations).

    Where both probes are +inf the minimizer lies to the right: objectives
    here are infinite only on an initial segment of k.
    """
    a, b = min(a, b), max(a, b)
    c, d = b - INV_PHI * (b - a), a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    best = _Best()
    best.offer(c, fc)
    best.offer(d, fd)
    evaluations = 2
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc < fd or (fc == fd and not math.isinf(fc)):
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
            best.offer(c, fc)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
            best.offer(d, fd)
        evaluations += 1
    return best.x, best.value, evaluations


def _local_minima(values: np.ndarray) -> List[int]:
    n = len(values)
    minima = []
    for i in range(n):
        if not math.isfinite(values[i]):
            continue
        left = values[i - 1] if i > 0 else math.inf
        right = values[i + 1] if i < n - 1 else math.inf
        if values[i] <= left and values[i] <= right:
            minima.append(i)
    return minima


def minimize_positive(
    objective: Callable[[float], float], params: SearchParams, max_basins: int = 4
) -> SearchResult:
    """Approximate inf_{k>0} objective(k).

    Seeds a log-grid over [k_lo, k_hi] together with the decades reached by
    expanding from k = 1 while the objective improves, pushes the ends out
    while the best point sits on them, then refines the best basins by
    golden-section search.
    """
    evaluations = 0

    def in_log(s: float) -> float:
        nonlocal evaluations
        evaluations += 1
        return objective(math.exp(s))

    grid = np.linspace(math.log(params.k_lo), math.log(params.k_hi), params.grid_points)
    probes = {float(s): in_log(float(s)) for s in grid}

    # bracket expansion by decades from k = 1
    if 0.0 not in probes:
        probes[0.0] = in_log(0.0)
    for step in (-LOG_TEN, LOG_TEN):
        s = 0.0
        while LOG_K_MIN < s + step < LOG_K_MAX:
            nxt = s + step
            if nxt not in probes:
                probes[nxt] = in_log(nxt)
            if not probes[nxt] < probes[s]:
                break
            s = nxt

    if all(math.isinf(v) for v in probes.values()):
        raise NotInSpaceError(
            f"objective is +inf for every probed k in [{params.k_lo:g}, {params.k_hi:g}]"
        )

    # keep pushing an end outwards while the best probe sits on it
    for _ in range(2 * int((LOG_K_MAX - LOG_K_MIN) / LOG_TEN)):
        xs = sorted(probes)
        best_x = min(xs, key=lambda s: (probes[s], s))
        if best_x == xs[0] and xs[0] - LOG_TEN > LOG_K_MIN:
            probes[xs[0] - LOG_TEN] = in_log(xs[0] - LOG_TEN)
        elif best_x == xs[-1] and xs[-1] + LOG_TEN < LOG_K_MAX:
            probes[xs[-1] + LOG_TEN] = in_log(xs[-1] + LOG_TEN)
        else:
            break

    xs = np.array(sorted(probes))
    values = np.array([probes[s] for s in xs])
    if int(np.argmin(values)) == 0 and len(xs) > 1 and values[0] < values[1]:
        raise AxiomViolationError(
            f"objective keeps decreasing as k -> 0 (value {values[0]:g} at k = {math.exp(xs[0]):g})"
        )

    minima = sorted(_local_minima(values), key=lambda i: (values[i], xs[i]))[:max_basins]
    best = _Best()
    for i in minima:
        best.offer(float(xs[i]), float(values[i]))
        lo = xs[i - 1] if i > 0 else xs[i] - LOG_TEN
        hi = xs[i + 1] if i < len(xs) - 1 else xs[i] + LOG_TEN
        x, value, _ = golden_section(in_log, lo, hi, params.tol / 100, params.max_iter)
        best.offer(x, value)

    logger.debug(f"infimum search: value={best.value:.17g} at k={math.exp(best.x):.6g} "
                 f"after {evaluations} evaluations")
    return SearchResult(value=float(best.value), k=math.exp(best.x), evaluations=evaluations)


def bisect_crossing(feasible: Callable[[float], bool], params: SearchParams) -> float:
    """inf{u > 0 : feasible(u)} for a feasibility predicate that is monotone in u."""
    lo = hi = 1.0
    if feasible(1.0):
        while feasible(lo):
            hi, lo = lo, lo / 10.0
            if lo < 1e-300:
                raise AxiomViolationError("crossing condition holds for every u > 0")
    else:
        while not feasible(hi):
            lo, hi = hi, hi * 10.0
            if hi > 1e300:
                raise NotInSpaceError("crossing condition fails for every probed u")
    for _ in range(params.max_iter):
        if math.log(hi / lo) <= params.tol / 100:
            break
        mid = math.sqrt(lo * hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi
