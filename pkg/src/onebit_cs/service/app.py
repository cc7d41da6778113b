"""HTTP service exposing the request-scoped library operations.

Instance generation, recovery, metrics, and theory predictions are all cheap
at desk scale (milliseconds to a second), so they are served synchronously.
Batch experiment sweeps stay on the CLI, which owns file output and
parallelism.
"""

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..metrics import ZeroVector, compute_metrics
from ..model import ProblemInstance, SignalParams, make_instance
from ..recovery import (CisrConfig, RfpiConfig, cisr_recover,
                        naive_cavity_recover, rfpi_recover)
from ..theory import NoConvergence, RSParams, rs_predict
from . import schemas as S

app = FastAPI(title="onebit-cs", version=__version__)


@app.get("/health", response_model=S.HealthResponse)
def health():
    return S.HealthResponse(status="ok", version=__version__)


def _fixed_point_model(point) -> S.FixedPointModel:
    return S.FixedPointModel(m=point.m, chi=point.chi, q_hat=point.q_hat,
                             m_hat=point.m_hat, q_big_hat=point.q_big_hat,
                             residual=point.residual, iterations=point.iterations,
                             converged=point.converged)


@app.post("/theory/predict", response_model=S.TheoryResponse)
def theory_predict(req: S.TheoryRequest):
    try:
        pred = rs_predict(RSParams(alpha=req.alpha, rho=req.rho))
    except NoConvergence as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return S.TheoryResponse(alpha=req.alpha, rho=req.rho, mse=pred.mse,
                            direction_cosine=pred.direction_cosine, fp=pred.fp,
                            fn=pred.fn_, at_lhs=pred.at_lhs,
                            stable_rs=pred.stable_rs,
                            point=_fixed_point_model(pred.point))


@app.post("/theory/curves", response_model=S.TheoryCurvesResponse)
def theory_curves(req: S.TheoryCurvesRequest):
    points = []
    for rho in req.rhos:
        init = None
        for alpha in sorted(req.alphas):
            try:
                pred = rs_predict(RSParams(alpha=alpha, rho=rho), init=init)
            except NoConvergence:
                points.append(S.TheoryCurvePoint(alpha=alpha, rho=rho, converged=False))
                continue
            init = pred.point
            points.append(S.TheoryCurvePoint(
                alpha=alpha, rho=rho, converged=True, mse=pred.mse, fp=pred.fp,
                fn=pred.fn_, at_lhs=pred.at_lhs, stable_rs=pred.stable_rs,
                point=_fixed_point_model(pred.point)))
    return S.TheoryCurvesResponse(points=points)


@app.post("/instances", response_model=S.InstanceResponse)
def generate_instance(req: S.InstanceRequest):
    m = max(1, int(round(req.alpha * req.n)))
    k = req.k_exact
    if k is None and req.exact_support:
        k = max(1, int(round(req.rho * req.n)))
    try:
        params = SignalParams(n=req.n, rho=req.rho, k_exact=k)
        inst = make_instance(req.n, m, params, req.seed)
    except (ValueError, RuntimeError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return S.InstanceResponse(n=inst.n, m=inst.m, seed=inst.seed, alpha=inst.alpha,
                              x0=inst.x0.tolist(), phi=inst.phi.tolist(),
                              y=inst.y.tolist())


@app.post("/recover", response_model=S.RecoverResponse)
def recover(req: S.RecoverRequest):
    phi = np.asarray(req.phi, dtype=float)
    y = np.asarray(req.y, dtype=float)
    if phi.ndim != 2 or phi.shape[0] != y.size:
        raise HTTPException(status_code=422, detail="phi must be MxN with one y per row")
    if not np.all(np.abs(y) == 1.0):
        raise HTTPException(status_code=422, detail="y entries must be +-1")
    n = phi.shape[1]
    x0 = np.asarray(req.x0, dtype=float) if req.x0 is not None else None
    if x0 is not None and x0.size != n:
        raise HTTPException(status_code=422, detail="x0 length must match phi columns")
    # measurement-only instance: the recoverers never read x0
    inst = ProblemInstance(x0=x0 if x0 is not None else np.zeros(n), phi=phi,
                           y=y, seed=req.init_seed, alpha=phi.shape[0] / n)
    k_prior = req.k_prior or max(1, n // 8)
    try:
        if req.algorithm == "rfpi":
            cfg = RfpiConfig(
                delta=req.delta or RfpiConfig.delta,
                lambda0=req.lambda0 or RfpiConfig.lambda0,
                lambda_growth=req.lambda_growth or RfpiConfig.lambda_growth,
                inner_tol=req.tol or RfpiConfig.inner_tol,
                outer_tol=req.tol or RfpiConfig.outer_tol)
            res = rfpi_recover(inst, cfg)
        elif req.algorithm in ("cisr", "nort"):
            cfg = CisrConfig(
                b_shrink=req.b_shrink or CisrConfig.b_shrink,
                inner_tol=req.tol or CisrConfig.inner_tol,
                outer_tol=req.tol or CisrConfig.outer_tol,
                onsager_enabled=req.algorithm == "cisr")
            res = cisr_recover(inst, cfg, k_prior=k_prior)
        else:
            res, _ = naive_cavity_recover(inst, max_iters=req.max_iters or 500,
                                          tol=req.tol or 1e-8, k_prior=k_prior)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    metrics = None
    if x0 is not None and np.any(x0):
        try:
            tm = compute_metrics(x0, res.x_hat)
            metrics = S.MetricsModel(mse=tm.mse, direction_cosine=tm.direction_cosine,
                                     overlap_m=tm.overlap_m, fp=tm.fp, fn=tm.fn_,
                                     support_size_est=tm.support_size_est)
        except ZeroVector:
            metrics = None
    return S.RecoverResponse(algorithm=req.algorithm, x_hat=res.x_hat.tolist(),
                             converged=res.converged,
                             inner_iterations=res.inner_iterations_total,
                             outer_iterations=res.outer_iterations,
                             restarts=res.restarts, wall_time_s=res.wall_time,
                             metrics=metrics)


@app.post("/metrics", response_model=S.MetricsModel)
def metrics_endpoint(req: S.MetricsRequest):
    try:
        tm = compute_metrics(np.asarray(req.x0, dtype=float),
                             np.asarray(req.x_hat, dtype=float),
                             zero_tol=req.zero_tol)
    except (ValueError, ZeroVector) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return S.MetricsModel(mse=tm.mse, direction_cosine=tm.direction_cosine,
                          overlap_m=tm.overlap_m, fp=tm.fp, fn=tm.fn_,
                          support_size_est=tm.support_size_est)
