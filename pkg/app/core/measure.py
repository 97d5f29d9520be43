"""Lebesgue measure on [0, alpha), interval partitions and step functions.

Every object the other modules touch is a step function: a finite list of
disjoint half-open blocks [start, end) carrying vectors in R^d. Outside its
blocks a step function is zero. Breakpoints closer than ``ATOL`` are merged
and blocks thinner than ``ATOL`` are treated as null sets and dropped.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import (
    IncomparableDomainsError,
    InvalidIndexError,
    MalformedInputError,
    NoWitnessError,
)

logger = logging.getLogger(__name__)

ATOL = 1e-12

VALUE_NORMS = ("euclidean", "max", "sum")
_NORM_ORD = {"euclidean": 2, "max": np.inf, "sum": 1}


def vector_norms(values: np.ndarray, value_norm: str) -> np.ndarray:
    """Row-wise norm of an (n, d) array in the chosen norm on R^d."""
    if values.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.norm(values, ord=_NORM_ORD[value_norm], axis=1)


def _merge_points(points: Iterable[float]) -> np.ndarray:
    pts = np.sort(np.asarray(list(points), dtype=float))
    if pts.size == 0:
        return pts
    keep = np.concatenate(([True], np.diff(pts) > ATOL))
    return pts[keep]


def _in_intervals(points: np.ndarray, intervals: Sequence[Tuple[float, float]]) -> np.ndarray:
    if not intervals:
        return np.zeros(points.shape, dtype=bool)
    lefts = np.array([a for a, _ in intervals])
    rights = np.array([b for _, b in intervals])
    idx = np.searchsorted(lefts, points, side="right") - 1
    safe = np.clip(idx, 0, None)
    return (idx >= 0) & (points < rights[safe])


@dataclass(frozen=True)
class Block:
    """Half-open interval [start, end) of positive length."""
    start: float
    end: float

    def __post_init__(self):
        start, end = float(self.start), float(self.end)
        if not (math.isfinite(start) and math.isfinite(end)):
            raise MalformedInputError(f"block [{start}, {end}) must have finite endpoints")
        if end - start <= ATOL:
            raise MalformedInputError(f"block [{start}, {end}) has no positive measure")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "end", end)

    @property
    def measure(self) -> float:
        return self.end - self.start

    def contains(self, other: "Block") -> bool:
        return self.start <= other.start + ATOL and other.end <= self.end + ATOL

    def intersection(self, other: "Block") -> Optional["Block"]:
        lo, hi = max(self.start, other.start), min(self.end, other.end)
        if hi - lo <= ATOL:
            return None
        return Block(lo, hi)


@dataclass(frozen=True)
class Partition:
    """Finite family of disjoint positive-measure blocks, kept sorted by start."""
    blocks: Tuple[Block, ...] = ()

    def __post_init__(self):
        blocks = tuple(sorted(self.blocks, key=lambda b: b.start))
        for prev, nxt in zip(blocks, blocks[1:]):
            if nxt.start < prev.end - ATOL:
                raise MalformedInputError(
                    f"blocks [{prev.start}, {prev.end}) and [{nxt.start}, {nxt.end}) overlap"
                )
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_breakpoints(cls, points: Iterable[float]) -> "Partition":
        pts = _merge_points(points)
        return cls(tuple(Block(a, b) for a, b in zip(pts[:-1], pts[1:])))

    @classmethod
    def from_intervals(cls, intervals: Iterable[Tuple[float, float]]) -> "Partition":
        return cls(tuple(Block(a, b) for a, b in intervals))

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    @cached_property
    def starts(self) -> np.ndarray:
        return np.array([b.start for b in self.blocks], dtype=float)

    @cached_property
    def ends(self) -> np.ndarray:
        return np.array([b.end for b in self.blocks], dtype=float)

    @property
    def measure(self) -> float:
        return float(np.sum(self.ends - self.starts))

    @property
    def edges(self) -> np.ndarray:
        return _merge_points(np.concatenate((self.starts, self.ends)))

    @cached_property
    def union(self) -> List[Tuple[float, float]]:
        """Maximal intervals making up the union of the blocks."""
        merged: List[Tuple[float, float]] = []
        for block in self.blocks:
            if merged and block.start <= merged[-1][1] + ATOL:
                merged[-1] = (merged[-1][0], max(merged[-1][1], block.end))
            else:
                merged.append((block.start, block.end))
        return merged

    def same_union(self, other: "Partition") -> bool:
        mine, theirs = self.union, other.union
        if len(mine) != len(theirs):
            return False
        return all(
            abs(a - c) <= ATOL and abs(b - d) <= ATOL
            for (a, b), (c, d) in zip(mine, theirs)
        )

    def covers(self, block: Block) -> bool:
        return any(a <= block.start + ATOL and block.end <= b + ATOL for a, b in self.union)

    def is_interval(self) -> bool:
        """True when the union is a single interval starting at 0."""
        return len(self.union) == 1 and abs(self.union[0][0]) <= ATOL


@dataclass(frozen=True)
class MeasurableSet:
    """Finite disjoint union of blocks, possibly empty."""
    blocks: Tuple[Block, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", Partition(self.blocks).blocks)

    @property
    def measure(self) -> float:
        return float(sum(b.measure for b in self.blocks))

    def is_empty(self) -> bool:
        return not self.blocks


@dataclass(frozen=True)
class MeasureSpace:
    """Lebesgue measure on [0, alpha) with an exhaustion T_n = [0, t_n)."""
    alpha: float = math.inf
    exhaustion: Tuple[float, ...] = ()

    def __post_init__(self):
        alpha = float(self.alpha)
        if not alpha > 0:
            raise MalformedInputError(f"alpha must be positive, got {alpha}")
        cutoffs = tuple(float(t) for t in self.exhaustion)
        if not cutoffs:
            if math.isinf(alpha):
                raise MalformedInputError("an infinite base interval needs an explicit exhaustion")
            cutoffs = (alpha,)
        for t in cutoffs:
            if not (0 < t < math.inf) or t > alpha:
                raise MalformedInputError(f"cutoff {t} lies outside (0, {alpha}]")
        if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
            raise MalformedInputError(f"exhaustion {cutoffs} is not strictly increasing")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "exhaustion", cutoffs)

    def cutoff(self, n: int) -> float:
        if not 1 <= n <= len(self.exhaustion):
            raise InvalidIndexError(
                f"truncation index {n} outside 1..{len(self.exhaustion)}"
            )
        return self.exhaustion[n - 1]

    def truncation_block(self, n: int) -> Block:
        return Block(0.0, self.cutoff(n))


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Piecewise-constant map [0, alpha) -> R^d, zero off its partition.

    ``values[i]`` is the vector carried by ``partition.blocks[i]``.
    """
    partition: Partition
    values: np.ndarray
    dim: int = 1
    value_norm: str = "euclidean"

    def __post_init__(self):
        if self.value_norm not in VALUE_NORMS:
            raise MalformedInputError(f"unknown value norm '{self.value_norm}'")
        dim = int(self.dim)
        if dim < 1:
            raise MalformedInputError(f"dimension must be positive, got {self.dim}")
        values = np.array(self.values, dtype=float)
        values = values.reshape(-1, dim) if values.size else np.zeros((0, dim))
        if values.shape[0] != len(self.partition):
            raise MalformedInputError(
                f"{values.shape[0]} value vectors for {len(self.partition)} blocks"
            )
        if not np.all(np.isfinite(values)):
            raise MalformedInputError("step function values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dim", dim)

    # -- construction -------------------------------------------------

    @classmethod
    def from_blocks(
        cls,
        blocks: Iterable[Tuple[float, float, Sequence[float]]],
        dim: Optional[int] = None,
        value_norm: str = "euclidean",
    ) -> "StepFunction":
        """Build from (start, end, value) triples in any order."""
        items = sorted(
            ((Block(a, b), np.atleast_1d(np.asarray(v, dtype=float))) for a, b, v in blocks),
            key=lambda item: item[0].start,
        )
        if dim is None:
            dim = len(items[0][1]) if items else 1
        for _, value in items:
            if value.shape != (dim,):
                raise MalformedInputError(f"value {value.tolist()} does not have dimension {dim}")
        partition = Partition(tuple(block for block, _ in items))
        values = np.array([v for _, v in items]).reshape(-1, dim) if items else np.zeros((0, dim))
        return cls(partition, values, dim, value_norm)

    @classmethod
    def zero(cls, dim: int = 1, value_norm: str = "euclidean") -> "StepFunction":
        return cls(Partition(), np.zeros((0, dim)), dim, value_norm)

    @classmethod
    def indicator(
        cls, start: float, end: float, value=1.0, value_norm: str = "euclidean"
    ) -> "StepFunction":
        vec = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(Partition((Block(start, end),)), vec.reshape(1, -1), len(vec), value_norm)

    @classmethod
    def on_partition(
        cls, partition: Partition, values, dim: int = 1, value_norm: str = "euclidean"
    ) -> "StepFunction":
        return cls(partition, np.asarray(values, dtype=float).reshape(len(partition), dim), dim, value_norm)

    def with_values(self, values: np.ndarray) -> "StepFunction":
        return StepFunction(self.partition, values, self.dim, self.value_norm)

    # -- inspection ---------------------------------------------------

    @property
    def n_blocks(self) -> int:
        return len(self.partition)

    @property
    def starts(self) -> np.ndarray:
        return self.partition.starts

    @property
    def ends(self) -> np.ndarray:
        return self.partition.ends

    @property
    def measures(self) -> np.ndarray:
        return self.partition.ends - self.partition.starts

    def pointwise_norms(self) -> np.ndarray:
        return vector_norms(self.values, self.value_norm)

    def sup_norm(self) -> float:
        norms = self.pointwise_norms()
        return float(norms.max()) if norms.size else 0.0

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def support_measure(self) -> float:
        return float(np.sum(self.measures[self.pointwise_norms() > 0]))

    def support_end(self) -> float:
        nonzero = self.pointwise_norms() > 0
        return float(self.ends[nonzero].max()) if nonzero.any() else 0.0

    def values_at(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        out = np.zeros((points.shape[0], self.dim))
        if self.n_blocks == 0:
            return out
        idx = np.searchsorted(self.starts, points, side="right") - 1
        safe = np.clip(idx, 0, None)
        valid = (idx >= 0) & (points < self.ends[safe])
        out[valid] = self.values[idx[valid]]
        return out

    def value_at(self, t: float) -> np.ndarray:
        return self.values_at(np.array([t]))[0]

    def check_compatible(self, other: "StepFunction"):
        if self.dim != other.dim or self.value_norm != other.value_norm:
            raise MalformedInputError(
                f"incompatible step functions: R^{self.dim}/{self.value_norm} "
                f"vs R^{other.dim}/{other.value_norm}"
            )

    # -- arithmetic ---------------------------------------------------

    def combine(
        self, other: "StepFunction", op: Callable[[np.ndarray, np.ndarray], np.ndarray]
    ) -> "StepFunction":
        """Apply ``op`` blockwise on the common refinement of both partitions."""
        self.check_compatible(other)
        pts = _merge_points(np.concatenate((self.partition.edges, other.partition.edges)))
        if pts.size < 2:
            return StepFunction.zero(self.dim, self.value_norm)
        lefts, rights = pts[:-1], pts[1:]
        mids = 0.5 * (lefts + rights)
        keep = _in_intervals(mids, self.partition.union) | _in_intervals(mids, other.partition.union)
        values = op(self.values_at(mids[keep]), other.values_at(mids[keep]))
        partition = Partition(tuple(Block(a, b) for a, b in zip(lefts[keep], rights[keep])))
        return canonicalize(StepFunction(partition, values, self.dim, self.value_norm))

    def add(self, other: "StepFunction") -> "StepFunction":
        return self.combine(other, np.add)

    def subtract(self, other: "StepFunction") -> "StepFunction":
        return self.combine(other, np.subtract)

    def scale(self, c: float) -> "StepFunction":
        return canonicalize(self.with_values(self.values * float(c)))

    def __add__(self, other: "StepFunction") -> "StepFunction":
        return self.add(other)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return self.subtract(other)

    def __mul__(self, c: float) -> "StepFunction":
        return self.scale(c)

    __rmul__ = __mul__

    def __neg__(self) -> "StepFunction":
        return self.scale(-1.0)

    def restrict(self, region: Partition) -> "StepFunction":
        """f on the union of ``region``, dropped elsewhere."""
        pts = _merge_points(np.concatenate((self.partition.edges, region.edges)))
        if pts.size < 2:
            return StepFunction.zero(self.dim, self.value_norm)
        lefts, rights = pts[:-1], pts[1:]
        mids = 0.5 * (lefts + rights)
        keep = _in_intervals(mids, self.partition.union) & _in_intervals(mids, region.union)
        partition = Partition(tuple(Block(a, b) for a, b in zip(lefts[keep], rights[keep])))
        return canonicalize(StepFunction(partition, self.values_at(mids[keep]), self.dim, self.value_norm))

    def average_over(self, block: Block) -> np.ndarray:
        """mu-average of f over ``block``.

        When a single vector fills the whole block it is returned as is, so
        averaging a function that is already constant there is exact.
        """
        if self.n_blocks == 0:
            return np.zeros(self.dim)
        overlap = np.minimum(self.ends, block.end) - np.maximum(self.starts, block.start)
        hit = overlap > ATOL
        if not hit.any():
            return np.zeros(self.dim)
        vals, weights = self.values[hit], overlap[hit]
        if weights.sum() >= block.measure - ATOL and np.all(vals == vals[0]):
            return vals[0].copy()
        return (weights[:, None] * vals).sum(axis=0) / block.measure

    def integral(self) -> np.ndarray:
        return (self.measures[:, None] * self.values).sum(axis=0)

    def equals_ae(self, other: "StepFunction", atol: float = 0.0) -> bool:
        """mu-almost-everywhere equality up to ``atol`` in every coordinate."""
        diff = self.subtract(other)
        return bool(np.all(np.abs(diff.values) <= atol))

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        return (
            self.partition == other.partition
            and self.dim == other.dim
            and self.value_norm == other.value_norm
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self) -> str:
        pieces = ", ".join(
            f"[{b.start:g},{b.end:g}):{v.tolist()}" for b, v in zip(self.partition, self.values)
        )
        return f"StepFunction({pieces})"


def canonicalize(f: StepFunction) -> StepFunction:
    """Merge touching blocks that carry equal vectors.

    Zero blocks are kept: they record where the function is known to vanish.
    """
    if f.n_blocks < 2:
        return f
    blocks: List[Block] = []
    values: List[np.ndarray] = []
    for block, value in zip(f.partition, f.values):
        if blocks and abs(blocks[-1].end - block.start) <= ATOL and np.array_equal(values[-1], value):
            blocks[-1] = Block(blocks[-1].start, block.end)
        else:
            blocks.append(block)
            values.append(value)
    if len(blocks) == f.n_blocks:
        return f
    return StepFunction(Partition(tuple(blocks)), np.array(values), f.dim, f.value_norm)


def _require_same_union(p1: Partition, p2: Partition):
    if not p1.same_union(p2):
        raise IncomparableDomainsError(
            f"partitions cover different sets: {p1.union} vs {p2.union}"
        )


def is_refinement(coarse: Partition, fine: Partition) -> bool:
    """True iff every block of ``coarse`` is a finite union of blocks of ``fine``."""
    _require_same_union(coarse, fine)
    if not fine.blocks:
        return True
    idx = np.searchsorted(coarse.starts, fine.starts + ATOL, side="right") - 1
    for i, block in zip(idx, fine.blocks):
        if i < 0 or not coarse.blocks[i].contains(block):
            return False
    return True


def common_refinement(p1: Partition, p2: Partition) -> Partition:
    """Coarsest partition refining both: the nonnull intersections of their blocks."""
    _require_same_union(p1, p2)
    pts = _merge_points(np.concatenate((p1.edges, p2.edges)))
    if pts.size < 2:
        return Partition()
    lefts, rights = pts[:-1], pts[1:]
    keep = _in_intervals(0.5 * (lefts + rights), p1.union)
    return Partition(tuple(Block(a, b) for a, b in zip(lefts[keep], rights[keep])))


def refinement_chain(seq: Sequence[Partition]) -> List[Partition]:
    """S^1 = K^1 and S^{n+1} = {S ∩ K : S in S^n, K in K^{n+1}}."""
    if not seq:
        raise MalformedInputError("refinement chain needs at least one partition")
    chain = [seq[0]]
    for partition in seq[1:]:
        chain.append(common_refinement(chain[-1], partition))
    return chain


def elementary_partition(
    functions: Iterable[StepFunction], start: float, end: float
) -> Partition:
    """Segments between all breakpoints of ``functions`` clipped to [start, end)."""
    points = [start, end]
    for f in functions:
        points.extend(t for t in f.partition.edges if start < t < end)
    return Partition.from_breakpoints(points)


def dyadic_partition(start: float, end: float, level: int) -> Partition:
    return Partition.from_breakpoints(np.linspace(start, end, 2 ** level + 1))


def dyadic_chain(start: float, end: float, levels: int) -> List[Partition]:
    return [dyadic_partition(start, end, j) for j in range(levels + 1)]


def _true_runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Inclusive (first, last) index pairs of the maximal runs of True."""
    runs: List[Tuple[int, int]] = []
    for i, flag in enumerate(mask):
        if not flag:
            continue
        if runs and runs[-1][1] == i - 1:
            runs[-1] = (runs[-1][0], i)
        else:
            runs.append((i, i))
    return runs


def egorov_uniform_set(
    fs: Sequence[StepFunction], limit: StepFunction, m: float, eps: float
) -> Tuple[MeasurableSet, int]:
    """Small set A and index n_0 with sup_{T \\ A} ||f_n - limit|| <= eps for n >= n_0.

    Scans suffix maxima of the pointwise deviations on the common refinement
    and returns the least 1-based n_0 whose exceptional set has measure < m.
    """
    if not m > 0 or not eps > 0:
        raise MalformedInputError(f"m and eps must be positive, got m={m}, eps={eps}")
    if not fs:
        raise MalformedInputError("egorov_uniform_set needs a nonempty sequence")
    for f in fs:
        f.check_compatible(limit)

    pts = _merge_points(np.concatenate([f.partition.edges for f in fs] + [limit.partition.edges]))
    if pts.size < 2:
        return MeasurableSet(), 1
    lefts, rights = pts[:-1], pts[1:]
    mids = 0.5 * (lefts + rights)
    target = limit.values_at(mids)
    deviations = np.array([
        vector_norms(f.values_at(mids) - target, limit.value_norm) for f in fs
    ])
    suffix_max = np.maximum.accumulate(deviations[::-1], axis=0)[::-1]

    for n, row in enumerate(suffix_max, start=1):
        # consecutive segments touch, so runs of bad segments are the blocks of A
        runs = [(lefts[i], rights[j]) for i, j in _true_runs(row > eps)]
        measure = float(sum(b - a for a, b in runs))
        if measure < m:
            logger.debug(f"Egorov witness n_0={n}, mu(A)={measure:.3g}")
            return MeasurableSet(tuple(Block(a, b) for a, b in runs)), n

    raise NoWitnessError(
        f"no index in the {len(fs)}-term prefix is uniform within eps={eps} off a set of measure < {m}"
    )
