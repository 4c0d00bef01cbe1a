"""HTTP service exposing the solver, the stability certifier, the
Mittag-Leffler evaluator and the verification suites.

All endpoints are stateless; the command-line client drives them either
in process or against a remote instance started with `fracdelay serve`.
"""

from typing import List, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import special
from .config import ConfigError, parse_config
from .errors import AccuracyError, DomainError, NonConvergence
from .problem import refute_lipschitz
from .solver import DiscreteOperator, picard_solve
from .stability import verify_uhml
from .verification import run_suite

app = FastAPI(title="fracdelay", version="0.1.0")


class MlfRequest(BaseModel):
    p: float
    q: Optional[float] = None
    theta: float


class MlfResponse(BaseModel):
    value: float


class SolveRequest(BaseModel):
    config: str


class SolveResponse(BaseModel):
    grid: List[float]
    values: List[float]
    history_len: int
    iterations: int
    final_residual: float
    contraction_ratios: List[float]


class StabilityRequest(BaseModel):
    config: str


class StabilityResponse(BaseModel):
    epsilon: float
    c_ml: float
    trials: int
    worst_ratio: float
    history_max_dev: float
    passed: bool


class VerifyRequest(BaseModel):
    suite: str


class CheckRow(BaseModel):
    name: str
    observed: float
    tolerance: float
    passed: bool


class VerifyResponse(BaseModel):
    checks: List[CheckRow]
    all_passed: bool


def _config_error(exc):
    return HTTPException(status_code=400, detail={
        "kind": "config_error", "field": exc.field, "message": exc.message})


def _domain_error(message, field="problem"):
    return HTTPException(status_code=400, detail={
        "kind": "config_error", "field": field, "message": message})


def _nonconvergence(exc):
    return HTTPException(status_code=400, detail={
        "kind": "non_convergence", "message": str(exc),
        "residual_history": list(exc.residual_history or [])})


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/mlf", response_model=MlfResponse)
def mlf(req: MlfRequest):
    try:
        if req.q is None:
            return MlfResponse(value=special.ml1(req.p, req.theta))
        return MlfResponse(value=special.ml2(req.p, req.q, req.theta))
    except (DomainError, OverflowError, AccuracyError) as e:
        raise HTTPException(status_code=400, detail={
            "kind": "domain_error", "message": str(e)})


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest):
    try:
        cfg = parse_config(req.config)
    except ConfigError as e:
        raise _config_error(e)
    try:
        result = picard_solve(cfg.problem, cfg.solver)
    except DomainError as e:
        raise _domain_error(str(e), field="solver")
    except NonConvergence as e:
        raise _nonconvergence(e)
    traj = result.trajectory
    return SolveResponse(
        grid=[float(x) for x in traj.grid],
        values=[float(x) for x in traj.values],
        history_len=traj.history_len,
        iterations=result.iterations,
        final_residual=result.final_residual,
        contraction_ratios=[float(r) for r in result.ratios],
    )


@app.post("/stability", response_model=StabilityResponse)
def stability(req: StabilityRequest):
    try:
        cfg = parse_config(req.config)
    except ConfigError as e:
        raise _config_error(e)
    if cfg.stability is None:
        raise _domain_error("stability block missing", field="stability.epsilon")
    witness = refute_lipschitz(cfg.problem, seed=cfg.stability.seed)
    if witness is not None:
        raise _domain_error(
            f"declared Lipschitz constant {witness['declared']} refuted: observed "
            f"ratio {witness['observed_ratio']:.6g} at l={witness['l']:.6g}, "
            f"states {witness['pair']}", field="problem.lipschitz")
    try:
        report = verify_uhml(cfg.problem, cfg.stability.epsilon,
                             cfg.stability.trials, cfg.solver,
                             seed=cfg.stability.seed)
    except DomainError as e:
        raise _domain_error(str(e), field="solver")
    except NonConvergence as e:
        raise _nonconvergence(e)
    return StabilityResponse(
        epsilon=report.eps, c_ml=report.c_ml, trials=report.trials,
        worst_ratio=report.worst_ratio, history_max_dev=report.history_max_dev,
        passed=report.pass_)


@app.post("/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest):
    try:
        checks = run_suite(req.suite)
    except ValueError as e:
        raise HTTPException(status_code=400, detail={
            "kind": "domain_error", "message": str(e)})
    rows = [CheckRow(name=c.name, observed=float(c.observed),
                     tolerance=float(c.tolerance), passed=bool(c.passed))
            for c in checks]
    return VerifyResponse(checks=rows, all_passed=all(r.passed for r in rows))
