from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
import logging

from .config import get_settings
from .errors import ModularisError
from .api import norms, spaces
from .utils.log_config import setup_logging

settings = get_settings()
setup_logging(settings.LOG_LEVEL, settings.LOG_FILE)
logger = logging.getLogger(__name__)

app = FastAPI(
    title="Modularis API",
    description="F-norms, finite-rank approximation and rearrangements on modular spaces",
    version="1.0.0",
    default_response_class=JSONResponse
)

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

@app.exception_handler(ModularisError)
async def modularis_error_handler(request: Request, exc: ModularisError):
    logger.warning(f"{request.url.path}: {exc.code}: {exc.message}")
    return JSONResponse(status_code=422, content={"detail": exc.to_dict()})

# Include routers
app.include_router(norms.router)
app.include_router(spaces.router)

@app.get("/")
async def root():
    return {"message": "Modularis API", "routes": ["/norms", "/spaces"]}

@app.get("/health")
async def health():
    return {"status": "ok"}
