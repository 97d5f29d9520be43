from fastapi import APIRouter
from pydantic import BaseModel, Field
from typing import List, Optional
import logging

from ..core import approximation, measure, symmetric
from ..errors import MalformedInputError
from ..models import (
    FNormSpecModel,
    MeasureSpaceModel,
    PartitionModel,
    PipelineReport,
    StepFunctionModel,
    SymmetricNormModel,
)

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/spaces", tags=["spaces"])

class RearrangeRequest(BaseModel):
    fn: StepFunctionModel
    t: List[float] = Field(default_factory=list)

class RearrangeSample(BaseModel):
    t: float
    xstar: float
    xstarstar: float

class RearrangeResponse(BaseModel):
    knots: List[float]
    values: List[float]
    samples: List[RearrangeSample]

class ApproxRequest(BaseModel):
    family: List[StepFunctionModel]
    norm: FNormSpecModel
    space: MeasureSpaceModel
    eps: float = Field(gt=0)
    radius: Optional[float] = Field(default=None, gt=0)
    max_blocks: Optional[int] = Field(default=None, ge=1)

class ApproxResponse(BaseModel):
    n: int
    a: float
    K: PartitionModel
    report: PipelineReport
    images: List[StepFunctionModel]

class MapRequest(BaseModel):
    norm: SymmetricNormModel
    fn: StepFunctionModel
    chain: List[PartitionModel] = Field(default_factory=list)
    dyadic_levels: Optional[int] = Field(default=None, ge=0)
    start: float = 0.0
    end: float = 1.0

class MapRow(BaseModel):
    level: int
    error: float

@router.post("/rearrange", response_model=RearrangeResponse)
def rearrange(request: RearrangeRequest):
    """Decreasing rearrangement of |x| with x* and x** sampled at ``t``."""
    profile = symmetric.rearrangement_profile(request.fn.to_domain())
    for t in request.t:
        if not t > 0:
            raise MalformedInputError(f"sample times must be positive, got {t}")
    samples = [RearrangeSample(t=t, xstar=profile.xstar(t), xstarstar=profile.maximal(t)) for t in request.t]
    return RearrangeResponse(knots=profile.knots.tolist(), values=profile.values.tolist(), samples=samples)

@router.post("/approx", response_model=ApproxResponse)
def approx(request: ApproxRequest):
    """Certified finite-rank map for a finite family; 422 when the budget cannot be met."""
    family = [f.to_domain() for f in request.family]
    H = approximation.build_admissible_map(
        family,
        request.eps,
        request.norm.to_domain(),
        request.space.to_domain(),
        radius=request.radius,
        max_blocks=request.max_blocks,
    )
    logger.info(f"approx: {len(family)} functions, {len(H.K)} blocks, total error {H.report.total_error:.3g}")
    return ApproxResponse(
        n=H.n,
        a=H.a,
        K=PartitionModel.from_domain(H.K),
        report=H.report,
        images=[StepFunctionModel.from_domain(H.apply(f)) for f in family],
    )

@router.post("/map", response_model=List[MapRow])
def map_convergence(request: MapRequest):
    if request.chain:
        chain = [p.to_domain() for p in request.chain]
    else:
        chain = measure.dyadic_chain(request.start, request.end, request.dyadic_levels or 0)
    rows = symmetric.map_convergence_experiment(request.norm.to_domain(), request.fn.to_domain(), chain)
    return [MapRow(level=r.level, error=r.error) for r in rows]
