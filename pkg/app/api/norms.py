from fastapi import APIRouter
from pydantic import BaseModel
from typing import Optional
import logging

from ..core import fnorm
from ..models import FNormSpecModel, SemimodularModel, StepFunctionModel

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/norms", tags=["norms"])

class FNormRequest(BaseModel):
    spec: FNormSpecModel
    fn: StepFunctionModel

class ModularNormRequest(BaseModel):
    modular: SemimodularModel
    fn: StepFunctionModel
    tol: Optional[float] = None

class AmemiyaRequest(ModularNormRequest):
    p: float = 1.0

class NormResponse(BaseModel):
    value: float
    k: Optional[float] = None
    evaluations: Optional[int] = None

@router.post("/fnorm", response_model=NormResponse)
def compute_fnorm(request: FNormRequest):
    """Binder-built F-norm (or s-norm, by its mode) and the achieving k."""
    spec = request.spec.to_domain()
    result = fnorm.minimize_objective(spec, request.fn.to_domain())
    logger.info(f"{spec.mode} of {len(request.fn.blocks)}-block function: {result.value:.6g}")
    return NormResponse(value=result.value, k=result.k, evaluations=result.evaluations)

@router.post("/luxemburg", response_model=NormResponse)
def compute_luxemburg(request: ModularNormRequest, homogeneous: bool = True):
    """Luxemburg norm; pass ``homogeneous=false`` for the Luxemburg F-norm."""
    rho, f = request.modular.to_domain(), request.fn.to_domain()
    if homogeneous:
        return NormResponse(value=fnorm.luxemburg_norm(rho, f, request.tol))
    return NormResponse(value=fnorm.luxemburg_fnorm(rho, f, request.tol))

@router.post("/amemiya", response_model=NormResponse)
def compute_amemiya(request: AmemiyaRequest):
    value = fnorm.amemiya_norm(request.modular.to_domain(), request.fn.to_domain(), request.p, request.tol)
    return NormResponse(value=value)
