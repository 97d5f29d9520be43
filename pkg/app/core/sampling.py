"""Seeded random instances for the verification suites."""
from typing import List

import numpy as np

from .measure import Partition, StepFunction
from .modular import Orlicz, PhiFunction


def random_partition(
    rng: np.random.Generator, start: float = 0.0, end: float = 4.0, max_blocks: int = 6
) -> Partition:
    n = int(rng.integers(1, max_blocks + 1))
    inner = rng.uniform(start, end, size=n - 1)
    return Partition.from_breakpoints(np.concatenate(([start, end], inner)))


def random_step_function(
    rng: np.random.Generator,
    start: float = 0.0,
    end: float = 4.0,
    max_blocks: int = 6,
    dim: int = 1,
    scale: float = 5.0,
    value_norm: str = "euclidean",
) -> StepFunction:
    partition = random_partition(rng, start, end, max_blocks)
    values = rng.uniform(-scale, scale, size=(len(partition), dim))
    return StepFunction.on_partition(partition, values, dim, value_norm)


def random_step_functions(rng: np.random.Generator, count: int, **kwargs) -> List[StepFunction]:
    return [random_step_function(rng, **kwargs) for _ in range(count)]


def random_orlicz(rng: np.random.Generator, p_range=(1.0, 3.0)) -> Orlicz:
    return Orlicz(PhiFunction.power(float(rng.uniform(*p_range))))
