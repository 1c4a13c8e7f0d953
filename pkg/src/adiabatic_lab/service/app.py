"""FastAPI front end wrapping the core package.

Schedule references in requests are either a built-in name, a server-side
config path, or an inline config object. Malformed configs come back as
400; physics-level failures (gap closure, undetermined derivative order,
integrator trouble, undersampled windows) come back as 422 with the failure
type spelled out.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse, PlainTextResponse

from .. import __version__
from ..asymptotics import typical_coefficient, typical_error_windowed
from ..errors import AdiabaticLabError, ConfigError
from ..experiments import (
    DIAGNOSTIC_FIELDS,
    SCENARIO_INTEGRATOR,
    TypicalSettings,
    all_failed,
    detect_hyperadiabatic,
    evaluate_diagnostics,
    format_csv,
    run_sweep,
    scenario_config,
)
from ..propagator import IntegratorConfig, true_error_result
from ..schedule import (
    BUILTIN_SCHEDULES,
    HamiltonianSchedule,
    average_gaps,
    endpoint_derivative_order,
    load_schedule,
    path_length,
    schedule_from_config,
    schedule_to_config,
    spectral_frame,
)
from . import schemas


def _pairs(matrix: np.ndarray) -> list:
    return np.stack([matrix.real, matrix.imag], axis=-1).tolist()


def _vector_pairs(vector: np.ndarray) -> list:
    return np.stack([vector.real, vector.imag], axis=-1).tolist()


def _resolve(ref) -> HamiltonianSchedule:
    if isinstance(ref, schemas.ScheduleConfigModel):
        return schedule_from_config(ref.model_dump())
    return load_schedule(ref)


def _integrator(model: schemas.IntegratorModel | None,
                fallback: IntegratorConfig | None = None) -> IntegratorConfig:
    if model is None:
        return fallback if fallback is not None else IntegratorConfig()
    return IntegratorConfig(**model.model_dump())


def _sweep_config(request: schemas.SweepRequest) -> SweepConfig:
    overrides = {
        "workers": request.workers,
        "quadrature_points": request.quadrature_points,
        "gap_floor": request.gap_floor,
    }
    if request.schedule is not None:
        overrides["schedule"] = _resolve(request.schedule)
    for name in ("t_min", "t_max", "points", "spacing"):
        value = getattr(request, name)
        if value is not None:
            overrides[name] = value
    if request.outputs is not None:
        overrides["outputs"] = tuple(request.outputs)
    if request.integrator is not None:
        overrides["integrator"] = _integrator(request.integrator)
    if request.typical is not None:
        overrides["typical"] = TypicalSettings(**request.typical.model_dump())
    try:
        return scenario_config(request.scenario, **overrides)
    except ValueError as bad:
        raise ConfigError(str(bad)) from None


def create_app() -> FastAPI:
    app = FastAPI(
        title="adiabatic-lab",
        version=__version__,
        description="Finite-time adiabatic evolution error diagnostics",
    )

    @app.exception_handler(ConfigError)
    async def _on_config_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _on_value_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(AdiabaticLabError)
    async def _on_domain_error(request, exc):
        return JSONResponse(
            status_code=422,
            content={"detail": {"error": type(exc).__name__, "message": str(exc)}},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.get("/schedules", response_model=schemas.ScheduleListResponse)
    def schedules():
        return schemas.ScheduleListResponse(builtin=sorted(BUILTIN_SCHEDULES))

    @app.post("/schedule/evaluate", response_model=schemas.MatrixResponse)
    def schedule_evaluate(request: schemas.EvaluateRequest):
        schedule = _resolve(request.schedule)
        matrix = schedule.matrix_at(request.s, order=request.order)
        return schemas.MatrixResponse(
            s=request.s, order=request.order, dim=schedule.dim,
            matrix=_pairs(matrix),
        )

    @app.post("/schedule/spectral", response_model=schemas.SpectralResponse)
    def schedule_spectral(request: schemas.SpectralRequest):
        schedule = _resolve(request.schedule)
        frame = spectral_frame(schedule, request.s, request.gap_floor)
        return schemas.SpectralResponse(
            s=frame.s,
            energies=frame.energies.tolist(),
            gaps=frame.gaps.tolist(),
            eigenvectors=[_vector_pairs(frame.eigenvectors[:, j])
                          for j in range(schedule.dim)],
        )

    @app.post("/schedule/inspect", response_model=schemas.InspectResponse)
    def schedule_inspect(request: schemas.InspectRequest):
        schedule = _resolve(request.schedule)
        gaps = average_gaps(schedule, request.quadrature_points, request.gap_floor)
        return schemas.InspectResponse(
            dim=schedule.dim,
            derivative_order=endpoint_derivative_order(schedule, request.zero_tol),
            average_gaps=gaps.values.tolist(),
            gap_error_estimate=gaps.error_estimate.tolist(),
            path_length=path_length(schedule, request.quadrature_points,
                                    request.gap_floor),
            config=schemas.ScheduleConfigModel(**schedule_to_config(schedule)),
        )

    @app.post("/asymptotics", response_model=schemas.AsymptoticsResponse)
    def asymptotics(request: schemas.AsymptoticsRequest):
        schedule = _resolve(request.schedule)
        data = typical_coefficient(
            schedule,
            quadrature_points=request.quadrature_points,
            zero_tol=request.zero_tol,
            gap_floor=request.gap_floor,
            order=request.order,
        )
        return schemas.AsymptoticsResponse(
            order=data.order,
            average_gaps=data.average_gaps.tolist(),
            bbar0=data.bbar0,
            bbar1=data.bbar1,
            bbar=data.bbar,
            amp0=_vector_pairs(data.amp0.c),
            amp1=_vector_pairs(data.amp1.c),
        )

    @app.post("/errors/true", response_model=schemas.TrueErrorResponse)
    def errors_true(request: schemas.TrueErrorRequest):
        schedule = _resolve(request.schedule)
        eps, result = true_error_result(
            schedule, request.T, _integrator(request.integrator),
            request.gap_floor,
        )
        return schemas.TrueErrorResponse(
            T=request.T, eps_true=eps, norm_drift=result.norm_drift,
            steps=result.steps, rejected=result.rejected,
        )

    @app.post("/errors/typical", response_model=schemas.TypicalErrorResponse)
    def errors_typical(request: schemas.TypicalErrorRequest):
        schedule = _resolve(request.schedule)
        value = typical_error_windowed(
            schedule, request.T,
            tau0=request.typical.tau0,
            mode=request.typical.mode,
            samples=request.typical.samples,
            config=_integrator(request.integrator),
            average=request.typical.average,
            gap_floor=request.gap_floor,
        )
        return schemas.TypicalErrorResponse(
            T=request.T, value=value, mode=request.typical.mode,
            average=request.typical.average, tau0=request.typical.tau0,
        )

    @app.post("/errors/diagnostics", response_model=schemas.RecordModel)
    def errors_diagnostics(request: schemas.DiagnosticsRequest):
        record = evaluate_diagnostics(
            _resolve(request.schedule), request.T,
            outputs=tuple(request.outputs) if request.outputs is not None
            else DIAGNOSTIC_FIELDS,
            integrator=_integrator(request.integrator, SCENARIO_INTEGRATOR),
            typical=TypicalSettings(**request.typical.model_dump()),
            quadrature_points=request.quadrature_points,
            gap_floor=request.gap_floor,
        )
        return schemas.RecordModel.from_record(record)

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(request: schemas.SweepRequest):
        config = _sweep_config(request)
        records = run_sweep(config)
        detected = None
        if {"eps_typical_closed", "eps_typical_windowed"} <= set(config.outputs):
            try:
                detected = detect_hyperadiabatic(records, request.detect_window,
                                                 request.detect_tol)
            except ValueError:
                detected = None
        return schemas.SweepResponse(
            scenario=request.scenario,
            rows=len(records),
            all_failed=all_failed(records),
            hyperadiabatic_T=detected,
            records=[schemas.RecordModel.from_record(r) for r in records],
        )

    @app.post("/sweep/csv", response_class=PlainTextResponse)
    def sweep_csv(request: schemas.SweepRequest):
        records = run_sweep(_sweep_config(request))
        return PlainTextResponse(format_csv(records, log10=request.log10),
                                 media_type="text/csv")

    return app


app = create_app()
