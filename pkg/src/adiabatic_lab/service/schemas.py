"""Pydantic request/response models for the HTTP service.

Complex numbers travel as [re, im] pairs, matching the on-disk schedule
config format. Diagnostics that failed or were not requested are null on
the wire and become nan again on the client side.
"""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, Field

from ..experiments import DIAGNOSTIC_FIELDS, SweepRecord

ComplexPair = tuple[float, float]


class EnvelopeModel(BaseModel):
    poly: list[float] = Field(min_length=1)
    smooth_wrap: int = Field(default=0, ge=0)


class TermModel(BaseModel):
    matrix: list[list[ComplexPair]]
    envelope: EnvelopeModel


class ScheduleConfigModel(BaseModel):
    """Inline schedule definition, H(s) = sum_k poly_k(u^k(s)) * matrix_k."""

    dim: int = Field(ge=2)
    terms: list[TermModel]


ScheduleRef = str | ScheduleConfigModel


class IntegratorModel(BaseModel):
    rel_tol: float = Field(default=1e-10, gt=0)
    abs_tol: float = Field(default=1e-12, gt=0)
    max_step: float = Field(default=1e-3, gt=0, le=1)
    norm_drift_limit: float = Field(default=1e-8, gt=0)
    fixed_step: float | None = Field(default=None, gt=0, le=1)


class TypicalModel(BaseModel):
    tau0: float = Field(default=1.0, gt=0)
    samples: int | None = Field(default=None, ge=3)
    mode: Literal["asymptotic", "true-error"] = "asymptotic"
    average: Literal["rms", "mean"] = "rms"


class EvaluateRequest(BaseModel):
    schedule: ScheduleRef
    s: float = Field(ge=0, le=1)
    order: int = Field(default=0, ge=0)


class MatrixResponse(BaseModel):
    s: float
    order: int
    dim: int
    matrix: list[list[ComplexPair]]


class SpectralRequest(BaseModel):
    schedule: ScheduleRef
    s: float = Field(ge=0, le=1)
    gap_floor: float = Field(default=1e-8, gt=0)


class SpectralResponse(BaseModel):
    s: float
    energies: list[float]
    gaps: list[float]
    eigenvectors: list[list[ComplexPair]]   # one inner list per eigenvector


class InspectRequest(BaseModel):
    schedule: ScheduleRef
    quadrature_points: int = Field(default=1025, ge=9)
    zero_tol: float = Field(default=1e-9, gt=0)
    gap_floor: float = Field(default=1e-8, gt=0)


class InspectResponse(BaseModel):
    dim: int
    derivative_order: int
    average_gaps: list[float]
    gap_error_estimate: list[float]
    path_length: float
    config: ScheduleConfigModel


class AsymptoticsRequest(BaseModel):
    schedule: ScheduleRef
    order: int | None = Field(default=None, ge=1)
    quadrature_points: int = Field(default=1025, ge=9)
    zero_tol: float = Field(default=1e-9, gt=0)
    gap_floor: float = Field(default=1e-8, gt=0)


class AsymptoticsResponse(BaseModel):
    order: int
    average_gaps: list[float]
    bbar0: float
    bbar1: float
    bbar: float
    amp0: list[ComplexPair]
    amp1: list[ComplexPair]


class TrueErrorRequest(BaseModel):
    schedule: ScheduleRef
    T: float = Field(gt=0)
    integrator: IntegratorModel = Field(default_factory=IntegratorModel)
    gap_floor: float = Field(default=1e-8, gt=0)


class TrueErrorResponse(BaseModel):
    T: float
    eps_true: float
    norm_drift: float
    steps: int
    rejected: int


class TypicalErrorRequest(BaseModel):
    schedule: ScheduleRef
    T: float = Field(gt=0)
    typical: TypicalModel = Field(default_factory=TypicalModel)
    integrator: IntegratorModel = Field(default_factory=IntegratorModel)
    gap_floor: float = Field(default=1e-8, gt=0)


class TypicalErrorResponse(BaseModel):
    T: float
    value: float
    mode: str
    average: str
    tau0: float


class RecordModel(BaseModel):
    T: float
    eps_true: float | None = None
    eps_switching: float | None = None
    eps_typical_closed: float | None = None
    eps_typical_windowed: float | None = None
    eps_bound_sqrt2: float | None = None
    eps_rigorous: float | None = None
    norm_drift: float | None = None
    error: str | None = None

    @classmethod
    def from_record(cls, record: SweepRecord) -> "RecordModel":
        fields = {"T": record.T, "error": record.error}
        for name in DIAGNOSTIC_FIELDS + ("norm_drift",):
            value = getattr(record, name)
            fields[name] = None if math.isnan(value) else value
        return cls(**fields)

    def to_record(self) -> SweepRecord:
        fields = {"T": self.T, "error": self.error}
        for name in DIAGNOSTIC_FIELDS + ("norm_drift",):
            value = getattr(self, name)
            fields[name] = float("nan") if value is None else value
        return SweepRecord(**fields)


class DiagnosticsRequest(BaseModel):
    schedule: ScheduleRef
    T: float = Field(gt=0)
    outputs: list[str] | None = None
    integrator: IntegratorModel | None = None
    typical: TypicalModel = Field(default_factory=TypicalModel)
    quadrature_points: int = Field(default=1025, ge=9)
    gap_floor: float = Field(default=1e-8, gt=0)


class SweepRequest(BaseModel):
    scenario: Literal["fig1", "fig2", "custom"] = "custom"
    schedule: ScheduleRef | None = None
    t_min: float | None = Field(default=None, gt=0)
    t_max: float | None = Field(default=None, gt=0)
    points: int | None = Field(default=None, ge=2)
    spacing: Literal["log", "linear"] | None = None
    outputs: list[str] | None = None
    integrator: IntegratorModel | None = None
    typical: TypicalModel | None = None
    workers: int = Field(default=1, ge=1)
    quadrature_points: int = Field(default=1025, ge=9)
    gap_floor: float = Field(default=1e-8, gt=0)
    detect_window: int = Field(default=5, ge=3)
    detect_tol: float = Field(default=0.1, gt=0)
    log10: bool = False   # /sweep/csv only: plot-data variant with log10 columns


class SweepResponse(BaseModel):
    scenario: str
    rows: int
    all_failed: bool
    hyperadiabatic_T: float | None
    records: list[RecordModel]


class HealthResponse(BaseModel):
    status: str
    version: str


class ScheduleListResponse(BaseModel):
    builtin: list[str]
