from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__, schemas, service
from .ga_attack import FitnessError
from .harness import ExperimentError
from .methods import METHOD_NAMES

app = FastAPI(title="mosattack", version=__version__)


@app.exception_handler(ValueError)
async def bad_input(request: Request, exc: ValueError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(ExperimentError)
@app.exception_handler(FitnessError)
async def run_failed(request: Request, exc: Exception):
    return JSONResponse(status_code=500, content={"detail": str(exc)})


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.get("/methods")
def methods():
    return {"methods": list(METHOD_NAMES)}


@app.post("/simulate", response_model=schemas.DatasetOut)
def simulate(req: schemas.SimulateRequest):
    return service.simulate(req)


@app.post("/detect", response_model=schemas.DetectResponse)
def detect(req: schemas.DetectRequest):
    return service.detect(req)


@app.post("/reconstruct", response_model=schemas.ReconstructResponse)
def reconstruct(req: schemas.ReconstructRequest):
    return service.reconstruct(req)


@app.post("/attack", response_model=schemas.AttackResponse)
def attack(req: schemas.AttackRequest):
    return service.attack(req)


@app.post("/experiments/worst-case", response_model=schemas.ReportOut)
def worst_case(req: schemas.ExperimentRequest):
    return service.worst_case(req)


@app.post("/experiments/spammers", response_model=schemas.ReportOut)
def spammers(req: schemas.ExperimentRequest):
    return service.spammers(req)


@app.post("/experiments/ablation", response_model=schemas.AblationResponse)
def ablation(req: schemas.AblationRequest):
    return service.ablation(req)
