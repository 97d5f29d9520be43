from typing import Any, Dict, List

from pydantic import BaseModel, Field


class Violation(BaseModel):
    axiom: str
    detail: str
    witness: Dict[str, Any] = Field(default_factory=dict)


class AxiomReport(BaseModel):
    """Outcome of a sampled axiom suite; an empty violation list means pass."""
    suite: str
    checks: int = 0
    violations: List[Violation] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def check(self, ok: bool, axiom: str, detail: str, **witness: Any) -> bool:
        self.checks += 1
        if not ok:
            self.violations.append(Violation(axiom=axiom, detail=detail, witness=witness))
        return ok

    def axioms_violated(self) -> List[str]:
        return sorted({v.axiom for v in self.violations})


class StageError(BaseModel):
    stage: str
    parameter: float
    sup_error: float


class PipelineReport(BaseModel):
    """Per-stage sup errors of an assembled finite-rank map."""
    eps: float
    stages: List[StageError] = Field(default_factory=list)
    total_error: float = 0.0

    @property
    def certified(self) -> bool:
        return self.total_error < self.eps


class ConvergenceRow(BaseModel):
    level: int
    error: float
