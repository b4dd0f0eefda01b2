"""FastAPI service exposing the occupation-time computations.

Every endpoint wraps a pure library call, so the service is stateless and
safe under concurrent requests.  Domain errors map to HTTP 422 with a
machine-readable code: "precision_guard" for 2 lam T >= 37, otherwise
"invalid_input".
"""

from __future__ import annotations

import warnings

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..analytic import PrecisionGuardError, expected_occupation_direct, expected_occupation_split
from ..estimation import (
    ObservationSet,
    OptimizerConfig,
    estimate_parameters,
    generate_synthetic_observations,
    recovery_table,
)
from ..occupation import ObservationWindow, mc_expected_occupation
from ..sde import OUParams, SimulationGrid, simulate_ou_path
from .schemas import (
    EstimateRequest,
    EstimateResponse,
    ExpectRequest,
    ExpectResponse,
    GenerateRequest,
    GenerateResponse,
    HealthResponse,
    ObservationModel,
    SimulateRequest,
    SimulateResponse,
    TableRequest,
    TableResponse,
    TableRow,
    TracePoint,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="outimes",
        description="Occupation times of the Ornstein-Uhlenbeck process",
        version=__version__,
    )

    @app.exception_handler(PrecisionGuardError)
    async def _guard_handler(request, exc):
        return JSONResponse(
            status_code=422,
            content={"detail": {"code": "precision_guard", "message": str(exc)}},
        )

    @app.exception_handler(ValueError)
    async def _value_handler(request, exc):
        return JSONResponse(
            status_code=422,
            content={"detail": {"code": "invalid_input", "message": str(exc)}},
        )

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(request: SimulateRequest):
        params = OUParams(lam=request.lam, sigma=request.sigma, mu=request.mu, u0=request.u0)
        grid = SimulationGrid.from_dt(request.t_end, request.dt)
        path = simulate_ou_path(params, grid, request.seed)
        return SimulateResponse(
            times=grid.times.tolist(), values=path.values.tolist(), seed=request.seed
        )

    @app.post("/occupation/expected", response_model=ExpectResponse)
    def expected_occupation(request: ExpectRequest):
        window = ObservationWindow(t_end=request.t_end, a=request.a, b=request.b)
        if request.method == "mc":
            params = OUParams(lam=request.lam, sigma=request.sigma)
            estimate = mc_expected_occupation(
                params, window, request.n_samples, request.dt, request.seed
            )
            return ExpectResponse(
                value=estimate.mean,
                method="mc",
                std_error=estimate.std_error,
                n_samples=estimate.n_samples,
                seed=estimate.seed,
            )
        params = OUParams(lam=request.lam, sigma=request.sigma)
        evaluate = (
            expected_occupation_direct if request.method == "direct" else expected_occupation_split
        )
        return ExpectResponse(value=evaluate(params, window), method=request.method)

    @app.post("/estimate", response_model=EstimateResponse)
    def estimate(request: EstimateRequest):
        entries = tuple(
            (ObservationWindow(t_end=obs.t_end, a=obs.a, b=obs.b), obs.g)
            for obs in request.observations
        )
        observations = ObservationSet(entries=entries)
        opt_config = OptimizerConfig(
            tol=request.tol,
            max_iters=request.max_iters,
            initial_point=tuple(request.start),
            initial_scale=request.initial_scale,
        )
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = estimate_parameters(
                observations, opt_config, collect_trace=request.trace
            )
        trace = None
        if request.trace and result.trace is not None:
            trace = [
                TracePoint(lam=lam, sigma=sigma, residual=res)
                for lam, sigma, res in result.trace
            ]
        return EstimateResponse(
            lambda_star=result.lambda_star,
            sigma_star=result.sigma_star,
            residual=result.residual,
            iterations=result.iterations,
            converged=result.converged,
            warnings=[str(w.message) for w in caught],
            trace=trace,
        )

    @app.post("/observations/generate", response_model=GenerateResponse)
    def generate(request: GenerateRequest):
        params = OUParams(lam=request.lam, sigma=request.sigma)
        windows = [
            ObservationWindow(t_end=w.t_end, a=w.a, b=w.b) for w in request.windows
        ]
        observations = generate_synthetic_observations(
            params,
            windows,
            request.method,
            n_samples=request.n_samples,
            dt=request.dt,
            seed=request.seed,
        )
        entries = [
            ObservationModel(t_end=window.t_end, a=window.a, b=window.b, g=g)
            for window, g in observations.entries
        ]
        return GenerateResponse(
            entries=entries,
            method=observations.method,
            seed=observations.seed,
            n_samples=observations.n_samples,
            dt=observations.dt,
        )

    @app.post("/table/reproduce", response_model=TableResponse)
    def reproduce_table(request: TableRequest):
        rows = recovery_table(seed=request.seed, n_samples=request.n_samples, dt=request.dt)
        return TableResponse(
            rows=[
                TableRow(
                    lambda_true=row.lambda_true,
                    sigma_true=row.sigma_true,
                    lambda_direct=row.lambda_direct,
                    sigma_direct=row.sigma_direct,
                    lambda_mc=row.lambda_mc,
                    sigma_mc=row.sigma_mc,
                )
                for row in rows
            ],
            seed=request.seed,
            n_samples=request.n_samples,
            dt=request.dt,
        )

    return app


app = create_app()
