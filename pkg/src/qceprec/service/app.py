"""HTTP service wrapping the precoding library.

Endpoints mirror the CLI subcommands one to one; the CLI is a thin client of
this app (in-process by default, over the network with --server).
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..ci import build_ci_matrix
from ..harness import (SweepConfig, SweepResult, SweepRow, draw_instance,
                       precode_instance, run_sweep)
from ..model import ProblemInstance, sample_instance
from ..selftest import run_selftest
from ..solver import default_params, lambda_threshold, spectral_norm
from .schemas import (CheckModel, ParamsRequest, ParamsResponse,
                      PrecodeRequest, PrecodeResponse, SelftestRequest,
                      SelftestResponse, SweepLRequest, SweepResponse,
                      SweepRowModel, SweepSnrRequest)

app = FastAPI(title="qceprec", version=__version__)


@app.exception_handler(ValueError)
async def _value_error(request: Request, exc: ValueError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


def _instance_from_request(req: PrecodeRequest) -> ProblemInstance:
    if req.instance is None:
        return sample_instance(req.k, req.n, req.m, req.l, req.p_t, req.seed)
    h = np.asarray(req.instance.h_re, dtype=np.float64) \
        + 1j * np.asarray(req.instance.h_im, dtype=np.float64)
    if h.shape != (req.k, req.n):
        raise HTTPException(status_code=400,
                            detail=f"instance channel shape {h.shape} does not "
                                   f"match k={req.k}, n={req.n}")
    return ProblemInstance(h=h, symbol_indices=req.instance.symbol_indices,
                           m_order=req.m, l_levels=req.l, p_t=req.p_t)


@app.post("/precode", response_model=PrecodeResponse)
def precode(req: PrecodeRequest) -> PrecodeResponse:
    inst = _instance_from_request(req)
    out = precode_instance(inst, req.algorithm, req.params)
    return PrecodeResponse(
        algorithm=out.algorithm, k=inst.k, n=inst.n, m=inst.m_order,
        l=inst.l_levels, seed=req.seed,
        symbol_indices=[int(i) for i in inst.symbol_indices],
        x=None if out.x is None else [float(v) for v in out.x],
        t_re=[float(v) for v in out.t.real],
        t_im=[float(v) for v in out.t.imag],
        feasible=out.feasible, objective=out.objective, margin=out.margin,
        iterations=out.iterations, outer_iterations=out.outer_iterations,
        final_lambda=out.final_lambda,
        solve_time_ms=out.solve_time_s * 1e3)


def _sweep_response(result: SweepResult) -> SweepResponse:
    rows = [SweepRowModel(
        algorithm=r.algorithm, k=r.k, n=r.n, m=r.m_order, l=r.l_levels,
        snr_db=r.snr_db, trials=r.trials, bit_errors=r.bit_errors,
        bits=r.bits, ber=r.ber, mean_margin=r.mean_margin,
        mean_time_ms=r.mean_time_ms, seed=r.seed) for r in result.rows]
    return SweepResponse(rows=rows, diagnostics=result.diagnostics)


def rows_from_models(rows: list[SweepRowModel]) -> SweepResult:
    """Rebuild a SweepResult from response rows (floats survive JSON exactly)."""
    return SweepResult(rows=[SweepRow(
        algorithm=r.algorithm, k=r.k, n=r.n, m_order=r.m, l_levels=r.l,
        snr_db=r.snr_db, trials=r.trials, bit_errors=r.bit_errors,
        bits=r.bits, ber=r.ber, mean_margin=r.mean_margin,
        mean_time_ms=r.mean_time_ms, seed=r.seed) for r in rows])


@app.post("/sweep/snr", response_model=SweepResponse)
def sweep_snr(req: SweepSnrRequest) -> SweepResponse:
    cfg = SweepConfig(
        k=req.k, n=req.n, m_order=req.m, l_values=(req.l,),
        snr_db_values=tuple(req.snr_db), trials=req.trials, seed=req.seed,
        algorithms=tuple(req.algorithms), p_t=req.p_t,
        params_overrides=req.params, measure_time=req.measure_time,
        workers=req.workers)
    return _sweep_response(run_sweep(cfg))


@app.post("/sweep/l", response_model=SweepResponse)
def sweep_l(req: SweepLRequest) -> SweepResponse:
    cfg = SweepConfig(
        k=req.k, n=req.n, m_order=req.m, l_values=tuple(req.l_values),
        snr_db_values=(req.snr_db,), trials=req.trials, seed=req.seed,
        algorithms=tuple(req.algorithms), p_t=req.p_t,
        params_overrides=req.params, measure_time=req.measure_time,
        workers=req.workers)
    return _sweep_response(run_sweep(cfg))


@app.post("/params", response_model=ParamsResponse)
def params(req: ParamsRequest) -> ParamsResponse:
    inst = sample_instance(req.k, req.n, req.m, req.l, req.p_t, req.seed)
    a = build_ci_matrix(inst)
    p = default_params(a, req.m)
    return ParamsResponse(
        lambda0=p.lambda0, delta=p.delta, rho=p.rho, c_scale=p.c_scale,
        c_exponent=p.c_exponent, tau_scale=p.tau_scale,
        tau_exponent=p.tau_exponent, inner_tol=p.inner_tol,
        inner_max_iters=p.inner_max_iters, outer_max_iters=p.outer_max_iters,
        feasibility_tol=p.feasibility_tol,
        spectral_norm=spectral_norm(a),
        mean_abs_entry=float(np.mean(np.abs(a))),
        lambda_threshold=lambda_threshold(a, req.l))


@app.post("/selftest", response_model=SelftestResponse)
def selftest(req: SelftestRequest) -> SelftestResponse:
    checks = run_selftest(fast=req.fast, seed=req.seed)
    return SelftestResponse(
        passed=all(c.passed for c in checks),
        checks=[CheckModel(name=c.name, passed=c.passed, detail=c.detail)
                for c in checks])
