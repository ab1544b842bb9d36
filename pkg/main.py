from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from wfanet.api.endpoints import metrics, runs, wavelet
from wfanet.api.middleware.middleware import logger, logging_middleware
from wfanet.core.config import settings
from wfanet.core.errors import WfanetError
from wfanet.db.database import Base, engine

app = FastAPI(title="WFANet pansharpening toolkit")

frontend_origins = [origin.strip() for origin in settings.FRONTEND_ORIGINS.split(',') if origin.strip()]

app.add_middleware(
    CORSMiddleware,
    allow_origins=frontend_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


API_PREFIX = "/api/v1"

app.include_router(wavelet.router, prefix=API_PREFIX, tags=["Wavelet"])
app.include_router(metrics.router, prefix=API_PREFIX, tags=["Metrics"])
app.include_router(runs.router, prefix=API_PREFIX, tags=["Runs"])
app.middleware("http")(logging_middleware)


@app.on_event("startup")
def startup_db():
    Base.metadata.create_all(bind=engine)


@app.exception_handler(WfanetError)
async def wfanet_exception_handler(request: Request, exc: WfanetError):
    logger.warning("%s error on %s: %s", exc.kind, request.url.path, exc.detail)
    return JSONResponse(status_code=exc.status_code, content={"error": exc.detail, "kind": exc.kind})


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    logger.exception("Unhandled exception on %s", request.url.path)
    return JSONResponse(
        status_code=500,
        content={"error": "Internal server error"}
    )


@app.get("/")
def read_root():
    return {"message": "Welcome to the WFANet pansharpening API"}


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host=settings.BACKEND_HOST, port=settings.BACKEND_PORT)
