"""HTTP service exposing the experiment runners.

One POST endpoint per run mode, all taking the same
:class:`~sqzlab.config.ExperimentConfig` body and returning a
:class:`RunResponse`.  Numerical-invariant violations map to HTTP 409 so
clients can distinguish them from request validation errors (422).
"""

from __future__ import annotations

from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import __version__
from .config import ExperimentConfig
from .experiments import RunResult, run_mode
from .states import InvariantViolation
from .tomography import WignerGrid


class TablePayload(BaseModel):
    columns: list[str]
    rows: list[list[Any]]


class WignerPayload(BaseModel):
    x_min: float
    x_max: float
    p_min: float
    p_max: float
    n_x: int
    n_p: int
    values: list[list[float]]


class RunResponse(BaseModel):
    mode: str
    seed: int
    config_hash: str
    summary: dict
    table: TablePayload
    record: Optional[TablePayload] = None
    record_meta: dict = {}
    wigner: Optional[WignerPayload] = None


class HealthResponse(BaseModel):
    status: str
    version: str


def _wigner_payload(grid: Optional[WignerGrid]) -> Optional[WignerPayload]:
    if grid is None:
        return None
    return WignerPayload(x_min=grid.x_min, x_max=grid.x_max,
                         p_min=grid.p_min, p_max=grid.p_max,
                         n_x=grid.n_x, n_p=grid.n_p,
                         values=grid.values.tolist())


def _response(result: RunResult) -> RunResponse:
    record = None
    if result.record is not None:
        record = TablePayload(columns=result.record.columns,
                              rows=result.record.rows)
    return RunResponse(
        mode=result.mode,
        seed=result.seed,
        config_hash=result.config_hash,
        summary=result.summary,
        table=TablePayload(columns=result.table.columns, rows=result.table.rows),
        record=record,
        record_meta=result.record_meta,
        wigner=_wigner_payload(result.wigner),
    )


app = FastAPI(
    title="sqzlab",
    version=__version__,
    description="Simulation service for the measurement-and-feedforward "
                "squeezer: protocol runs, parameter sweeps, homodyne "
                "tomography and gate compilation.",
)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


def _run(config: ExperimentConfig, mode: str) -> RunResponse:
    config = config.model_copy(update={"mode": mode})
    try:
        return _response(run_mode(config))
    except InvariantViolation as exc:
        raise HTTPException(status_code=409,
                            detail=f"numerical invariant violated: {exc}")
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.post("/run/reproduce-paper", response_model=RunResponse)
def reproduce_paper(config: ExperimentConfig) -> RunResponse:
    return _run(config, "reproduce-paper")


@app.post("/run/sweep", response_model=RunResponse)
def sweep(config: ExperimentConfig) -> RunResponse:
    return _run(config, "sweep")


@app.post("/run/tomography", response_model=RunResponse)
def tomography(config: ExperimentConfig) -> RunResponse:
    return _run(config, "tomography")


@app.post("/run/trajectory", response_model=RunResponse)
def trajectory(config: ExperimentConfig) -> RunResponse:
    return _run(config, "trajectory")


@app.post("/run/compile", response_model=RunResponse)
def compile_gates(config: ExperimentConfig) -> RunResponse:
    return _run(config, "compile")
