"""HTTP service wrapping the simulator: validation, sweeps, single runs,
post-processing. The bundled CLI talks to this app in-process by default; the
same app can be served with uvicorn for remote clients (``moteopt serve``).

Experiment artifacts are written on the machine running the service, under the
request's ``output_dir`` or ``$MOTEOPT_OUTPUT_ROOT/<config-hash>``.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import bench, energy, fxp, netsim, runner
from .config import load_config, parse_overrides

__version__ = "0.1.0"

app = FastAPI(
    title="moteopt",
    version=__version__,
    description="Island-model distributed optimization simulator for sensor networks",
)


def output_root() -> Path:
    return Path(os.environ.get("MOTEOPT_OUTPUT_ROOT", "moteopt-out"))


class HealthResponse(BaseModel):
    status: str
    version: str


class ProblemInfo(BaseModel):
    id: str
    name: str
    unimodal: bool
    separable: bool
    lower: float
    upper: float
    max_dimension: int


class ConfigRequest(BaseModel):
    config_text: str = ""
    overrides: list[str] = Field(default_factory=list)


class ValidateResponse(BaseModel):
    ok: bool
    errors: list[str]


class RunRequest(ConfigRequest):
    output_dir: Optional[str] = None


class RunResponse(BaseModel):
    artifact_dir: str
    config_hash: str
    runs: int
    summaries: list[str]


class SimulateRequest(BaseModel):
    problem: str
    dim: int = Field(ge=1)
    nodes: int = Field(5, ge=1)
    mode: Literal["sa", "ma"] = "sa"
    communicating: bool = True
    q: float = Field(0.9, ge=0.0, le=1.0)
    comm_period: float = Field(0.25, gt=0.0)
    eval_budget: int = Field(1000, ge=1)
    time_budget: float = Field(60.0, gt=0.0)
    topology: Literal["random_geometric", "complete", "ring"] = "complete"
    radio_range: float = Field(0.5, gt=0.0)
    loss_prob: float = Field(0.0, ge=0.0, le=1.0)
    collision_window: float = Field(0.0, ge=0.0)
    latency: float = Field(0.001, ge=0.0)
    seed: int = 0
    include_trace: bool = False


class NodeResult(BaseModel):
    node: int
    algorithm: str
    evals: int
    fitness: float
    x: list[float]
    t_cpu: float
    t_lpm: float
    t_tx: float
    t_rx: float
    duty_cycle: float
    power_mw: float
    energy_mj: float


class SimulateResponse(BaseModel):
    network_avg: float
    network_min: float
    end_time: float
    improvements: int
    sends: int
    receives: int
    accepts: int
    nodes: list[NodeResult]
    trace: Optional[str] = None


class AnalysisRequest(BaseModel):
    artifact_dir: str
    stride: int = Field(1, ge=1)


class FilesResponse(BaseModel):
    files: list[str]


def _load_or_400(req: ConfigRequest):
    try:
        overrides = parse_overrides(req.overrides)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail={"errors": [str(exc)]})
    cfg, errors = load_config(req.config_text, overrides)
    if errors:
        raise HTTPException(status_code=400, detail={"errors": errors})
    return cfg


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.get("/problems", response_model=list[ProblemInfo])
def problems() -> list[ProblemInfo]:
    out = []
    for fid, spec in bench.FUNCTIONS.items():
        out.append(
            ProblemInfo(
                id=fid,
                name=spec.name,
                unimodal=spec.unimodal,
                separable=spec.separable,
                lower=fxp.to_real(bench.DEFAULT_LOWER),
                upper=fxp.to_real(bench.DEFAULT_UPPER),
                max_dimension=bench.MAX_DIMENSION,
            )
        )
    return out


@app.post("/validate", response_model=ValidateResponse)
def validate(req: ConfigRequest) -> ValidateResponse:
    try:
        overrides = parse_overrides(req.overrides)
    except ValueError as exc:
        return ValidateResponse(ok=False, errors=[str(exc)])
    _, errors = load_config(req.config_text, overrides)
    return ValidateResponse(ok=not errors, errors=errors)


@app.post("/run", response_model=RunResponse)
def run_experiment(req: RunRequest) -> RunResponse:
    cfg = _load_or_400(req)
    target = req.output_dir or cfg.output_dir or str(output_root() / cfg.config_hash())
    try:
        result = runner.run_experiment(cfg, target)
    except Exception as exc:  # surfaced as a run failure, not a config error
        raise HTTPException(status_code=500, detail={"errors": [str(exc)]})
    return RunResponse(**result)


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    try:
        cfg = netsim.SimConfig(
            problem_id=req.problem,
            dim=req.dim,
            n_nodes=req.nodes,
            mode=req.mode,
            communicating=req.communicating,
            q=req.q,
            comm_period=req.comm_period,
            eval_budget=req.eval_budget,
            time_budget=req.time_budget,
            topology_kind=req.topology,
            radio_range=req.radio_range,
            channel=netsim.ChannelModel(
                loss_prob=req.loss_prob,
                collision_window=req.collision_window,
                latency=req.latency,
            ),
            seed=req.seed,
        )
        trace = netsim.run(cfg)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail={"errors": [str(exc)]})
    nodes = []
    for nid in sorted(trace.finals):
        fin = trace.finals[nid]
        power, joules = energy.energy(fin.ledger)
        nodes.append(
            NodeResult(
                node=nid,
                algorithm=fin.algorithm,
                evals=fin.evals,
                fitness=fxp.to_real(fin.fitness),
                x=[fxp.to_real(v) for v in fin.x],
                t_cpu=fin.ledger.t_cpu,
                t_lpm=fin.ledger.t_lpm,
                t_tx=fin.ledger.t_tx,
                t_rx=fin.ledger.t_rx,
                duty_cycle=energy.duty_cycle(fin.ledger),
                power_mw=power,
                energy_mj=joules,
            )
        )
    kinds = [r.kind for r in trace.net]
    return SimulateResponse(
        network_avg=trace.network_avg(),
        network_min=trace.network_min(),
        end_time=trace.end_time,
        improvements=len(trace.improvements),
        sends=kinds.count("SEND"),
        receives=kinds.count("RECV"),
        accepts=kinds.count("ACCEPT"),
        nodes=nodes,
        trace=trace.render() if req.include_trace else None,
    )


@app.post("/analysis/trend", response_model=FilesResponse)
def trend(req: AnalysisRequest) -> FilesResponse:
    try:
        paths = runner.emit_trend(req.artifact_dir, req.stride)
    except FileNotFoundError as exc:
        raise HTTPException(status_code=400, detail={"errors": [str(exc)]})
    return FilesResponse(files=[str(p) for p in paths])


@app.post("/analysis/tables", response_model=FilesResponse)
def tables(req: AnalysisRequest) -> FilesResponse:
    try:
        paths = runner.write_tables(req.artifact_dir)
    except FileNotFoundError as exc:
        raise HTTPException(status_code=400, detail={"errors": [str(exc)]})
    return FilesResponse(files=[str(p) for p in paths])
