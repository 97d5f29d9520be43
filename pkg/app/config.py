from pydantic_settings import BaseSettings
from pydantic import Field
from functools import lru_cache
from typing import Optional


class Settings(BaseSettings):
    # Infimum search
    TOL: float = 1e-9
    MAX_ITERS: int = Field(
        default=200,
        description="Iteration cap shared by every solver (golden section, bisection, Picard)"
    )
    GRID_POINTS: int = 64
    K_LO: float = 1e-9
    K_HI: float = 1e9

    # Admissible map construction
    REFINEMENT_DEPTH: int = 12

    # Fixed point solver
    PICARD_DAMPING: float = 0.5
    STALL_WINDOW: int = 20
    STALL_IMPROVEMENT: float = 1e-3
    BROUWER_MAX_DIM: int = 3
    BROUWER_MAX_DEPTH: int = 40

    # Logging
    LOG_LEVEL: str = "WARNING"
    LOG_FILE: Optional[str] = None

    # CORS
    CORS_ORIGINS: list[str] = ["*"]

    class Config:
        env_prefix = "MODULARIS_"
        env_file = ".env"
        case_sensitive = True


@lru_cache()
def get_settings() -> Settings:
    return Settings()
