"""JSON wire formats shared by the CLI, the HTTP API and external operators."""
import math
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from .core.fixed_point import (
    AffineAverageOperator,
    BuiltinOperator,
    ComposedOperator,
    ExternalOperator,
    IdentityOperator,
    Operator,
    RadialOperator,
)
from .core.fnorm import Binder, FNormSpec
from .core.measure import Block, MeasureSpace, Partition, StepFunction, canonicalize
from .core.modular import Convexity, MaxModular, Musielak, Orlicz, PhiFunction, Semimodular
from .core.reports import AxiomReport, ConvergenceRow, PipelineReport, StageError, Violation
from .core.search import SearchParams
from .core.symmetric import SymmetricNorm

__all__ = [
    "IntervalModel", "BlockValueModel", "StepFunctionModel", "PartitionModel", "PhiModel",
    "ZoneModel", "SemimodularModel", "BinderModel", "FNormSpecModel", "MeasureSpaceModel",
    "SymmetricNormModel", "OperatorModel", "Violation", "AxiomReport", "StageError",
    "PipelineReport", "ConvergenceRow",
]


class IntervalModel(BaseModel):
    start: float
    end: float


class BlockValueModel(BaseModel):
    start: float
    end: float
    value: List[float]

    @field_validator("value", mode="before")
    @classmethod
    def scalar_value(cls, v):
        return [v] if isinstance(v, (int, float)) else v


class StepFunctionModel(BaseModel):
    dim: int = 1
    value_norm: Literal["euclidean", "max", "sum"] = "euclidean"
    blocks: List[BlockValueModel] = Field(default_factory=list)

    def to_domain(self) -> StepFunction:
        triples = [(b.start, b.end, b.value) for b in self.blocks]
        return canonicalize(StepFunction.from_blocks(triples, dim=self.dim, value_norm=self.value_norm))

    @classmethod
    def from_domain(cls, f: StepFunction) -> "StepFunctionModel":
        return cls(
            dim=f.dim,
            value_norm=f.value_norm,
            blocks=[
                BlockValueModel(start=b.start, end=b.end, value=v.tolist())
                for b, v in zip(f.partition, f.values)
            ],
        )


class PartitionModel(BaseModel):
    blocks: List[IntervalModel] = Field(default_factory=list)

    @model_validator(mode="before")
    @classmethod
    def accept_bare_list(cls, data):
        if isinstance(data, list):
            return {"blocks": data}
        return data

    def to_domain(self) -> Partition:
        return Partition(tuple(Block(b.start, b.end) for b in self.blocks))

    @classmethod
    def from_domain(cls, partition: Partition) -> "PartitionModel":
        return cls(blocks=[IntervalModel(start=b.start, end=b.end) for b in partition])


class PhiModel(BaseModel):
    kind: Literal["power", "exp_shift", "piecewise_linear"]
    p: float = 1.0
    knots: List[float] = Field(default_factory=list)
    slopes: List[float] = Field(default_factory=list)
    barrier: Optional[float] = None

    def to_domain(self) -> PhiFunction:
        return PhiFunction(self.kind, p=self.p, knots=tuple(self.knots),
                           slopes=tuple(self.slopes), barrier=self.barrier)

    @classmethod
    def from_domain(cls, phi: PhiFunction) -> "PhiModel":
        return cls(kind=phi.kind, p=phi.p, knots=list(phi.knots),
                   slopes=list(phi.slopes), barrier=phi.barrier)


class ZoneModel(BaseModel):
    t_end: Optional[float] = None  # null: +inf
    phi: PhiModel


class SemimodularModel(BaseModel):
    kind: Literal["orlicz", "musielak", "custom-max"]
    phi: Optional[PhiModel] = None
    zones: List[ZoneModel] = Field(default_factory=list)
    members: List["SemimodularModel"] = Field(default_factory=list)
    convexity: Optional[Literal["plain", "s-convex", "convex"]] = None
    s: Optional[float] = None
    dim: Optional[int] = None

    @model_validator(mode="after")
    def check_payload(self):
        if self.kind == "orlicz" and self.phi is None:
            raise ValueError("orlicz modular needs 'phi'")
        if self.kind == "musielak" and not self.zones:
            raise ValueError("musielak modular needs 'zones'")
        if self.kind == "custom-max" and not self.members:
            raise ValueError("custom-max modular needs 'members'")
        return self

    def to_domain(self) -> Semimodular:
        convexity = Convexity(self.convexity, self.s) if self.convexity else None
        if self.kind == "orlicz":
            return Orlicz(self.phi.to_domain(), convexity, self.dim)
        if self.kind == "musielak":
            zones = tuple(
                (math.inf if z.t_end is None else z.t_end, z.phi.to_domain()) for z in self.zones
            )
            return Musielak(zones, convexity, self.dim)
        return MaxModular(tuple(m.to_domain() for m in self.members))


class BinderModel(BaseModel):
    kind: Literal["max", "lp", "wsum"] = "max"
    p: float = 1.0
    weights: List[float] = Field(default_factory=list)

    def to_domain(self, arity: int = 2) -> Binder:
        if self.kind == "wsum":
            return Binder.wsum(self.weights)
        if self.kind == "lp":
            return Binder.lp(self.p, arity)
        return Binder.max(arity)


class FNormSpecModel(BaseModel):
    modulars: List[SemimodularModel]
    binder: BinderModel = Field(default_factory=BinderModel)
    mode: Literal["fnorm", "snorm"] = "fnorm"
    s: float = 1.0
    tol: Optional[float] = None

    def to_domain(self) -> FNormSpec:
        modulars = tuple(m.to_domain() for m in self.modulars)
        return FNormSpec(
            modulars,
            self.binder.to_domain(len(modulars) + 1),
            mode=self.mode,
            s=self.s,
            search=SearchParams.from_settings(tol=self.tol),
        )


class MeasureSpaceModel(BaseModel):
    alpha: Optional[float] = None  # null: +inf
    exhaustion: List[float] = Field(default_factory=list)

    def to_domain(self) -> MeasureSpace:
        alpha = math.inf if self.alpha is None else self.alpha
        return MeasureSpace(alpha, tuple(self.exhaustion))


class SymmetricNormModel(BaseModel):
    kind: Literal["lp", "orlicz-luxemburg", "lorentz"]
    p: float = 2.0
    phi: Optional[PhiModel] = None
    q: float = 2.0
    order_continuous: Optional[bool] = None

    def to_domain(self) -> SymmetricNorm:
        phi = self.phi.to_domain() if self.phi else None
        return SymmetricNorm(self.kind, p=self.p, phi=phi, q=self.q,
                             order_continuous=self.order_continuous)


class OperatorModel(BaseModel):
    kind: Literal["affine-average", "builtin", "radial", "identity", "composed", "external"]
    name: Optional[Literal["sin_damped", "tanh_damped"]] = None
    c: Optional[StepFunctionModel] = None
    lam: float = 0.0
    K: Optional[PartitionModel] = None
    a: Optional[float] = None
    dim: int = 1
    value_norm: Literal["euclidean", "max", "sum"] = "euclidean"
    outer: Optional["OperatorModel"] = None
    inner: Optional["OperatorModel"] = None
    command: List[str] = Field(default_factory=list)
    range_bound: Optional[float] = None
    range_partition: Optional[PartitionModel] = None
    modulus: Optional[float] = None

    @model_validator(mode="after")
    def check_payload(self):
        needs = {
            "affine-average": ("c",),
            "builtin": ("name", "c", "K"),
            "radial": ("a",),
            "composed": ("outer", "inner"),
            "external": ("range_bound",),
        }.get(self.kind, ())
        missing = [f for f in needs if getattr(self, f) is None]
        if missing:
            raise ValueError(f"{self.kind} operator needs {', '.join(missing)}")
        if self.kind == "external" and not self.command:
            raise ValueError("external operator needs 'command'")
        return self

    def to_domain(self) -> Operator:
        K = self.K.to_domain() if self.K else Partition()
        if self.kind == "affine-average":
            return AffineAverageOperator(self.c.to_domain(), self.lam, K)
        if self.kind == "builtin":
            return BuiltinOperator(self.name, self.c.to_domain(), self.lam, K)
        if self.kind == "radial":
            return RadialOperator(self.a, self.dim, self.value_norm)
        if self.kind == "identity":
            return IdentityOperator(self.dim, self.value_norm)
        if self.kind == "composed":
            return ComposedOperator(self.outer.to_domain(), self.inner.to_domain())
        partition = self.range_partition.to_domain() if self.range_partition else None
        return ExternalOperator(tuple(self.command), self.range_bound, self.dim,
                                self.value_norm, partition, self.modulus)


SemimodularModel.model_rebuild()
OperatorModel.model_rebuild()
