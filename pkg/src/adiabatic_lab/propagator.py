"""Rescaled Schrödinger integration, i dpsi/ds = T H(s) psi, and the true error.

The stepper is an embedded Dormand-Prince 5(4) pair. Its tableau has real
coefficients, so every stage update acts independently on the real and
imaginary parts of the state; the complex array is just the paired storage
of that real representation. Error control uses per-component complex
magnitudes, which keeps the accepted step sequence invariant under a global
phase of the state.

The norm of the state is never renormalized mid-run: unitarity drift is the
honest accuracy diagnostic and is checked against the configured limit.

States may be batched (shape (m, d)) with one timescale per row, which the
windowed typical-error average uses to advance all window samples in a
single sweep of s; a step is accepted only when every row passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationFailureError, StiffnessError
from .schedule import HamiltonianSchedule, spectral_frame

# Dormand-Prince 5(4): stage nodes, stage weights, 5th-order propagation
# weights, and the (b5 - b4) error weights. FSAL: the last stage evaluation
# is the first stage of the next step.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_ERR = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                 -17253 / 339200, 22 / 525, -1 / 40])
_A_C = [a.astype(np.complex128) for a in _A]
_B5_C = _B5.astype(np.complex128)
_ERR_C = _ERR.astype(np.complex128)

_NOMINAL_ORDER = 5          # order of the propagated solution
_MIN_STEP = 1e-14
_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and step policy for the adaptive stepper.

    ``fixed_step`` switches off error control and marches with that step,
    which exists for convergence-order verification.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 1e-3
    norm_drift_limit: float = 1e-8
    fixed_step: float | None = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.max_step <= 1.0:
            raise ValueError("max_step must lie in (0, 1]")
        if not self.norm_drift_limit > 0:
            raise ValueError("norm_drift_limit must be positive")
        if self.fixed_step is not None and not 0 < self.fixed_step <= 1.0:
            raise ValueError("fixed_step must lie in (0, 1]")


DEFAULT_INTEGRATOR = IntegratorConfig()


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    """Final state psi(s=1) for one timescale, plus integrator diagnostics."""

    T: float
    final_state: np.ndarray
    norm_drift: float
    steps: int
    rejected: int


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray,
                rel_tol: float, abs_tol: float) -> float:
    scale = abs_tol + rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    # worst row of the batch decides acceptance; inf just means "reject"
    with np.errstate(over="ignore"):
        ratios = np.abs(err) / scale
        return float(np.sqrt(np.mean(ratios * ratios, axis=-1)).max())


def solve_ode(rhs, y0: np.ndarray, rel_tol: float, abs_tol: float,
              max_step: float, first_step: float,
              fixed_step: float | None = None) -> tuple[np.ndarray, int, int]:
    """Integrate dy/ds = rhs(s, y) over s in [0, 1] with a DP 5(4) pair.

    ``y0`` is a complex array whose last axis is the system dimension.
    Returns (y(1), accepted steps, rejected steps).
    """
    y = np.array(y0, dtype=np.complex128)
    s = 0.0
    h = min(first_step, max_step, 1.0)
    if fixed_step is not None:
        h = min(fixed_step, 1.0)
    stages = np.empty((7,) + y.shape, dtype=np.complex128)
    flat = stages.reshape(7, -1)          # shared view for stage combination
    stages[0] = rhs(s, y)
    steps = 0
    rejected = 0
    while s < 1.0:
        # clamp onto the boundary so the final step lands on s = 1 exactly;
        # only interior steps can genuinely underflow
        remaining = 1.0 - s
        last = h >= remaining
        h_step = remaining if last else h
        if h_step < _MIN_STEP and not last:
            raise StiffnessError(
                f"step size underflow at s={s:.6g} (h={h_step:.3e})"
            )
        for i in range(1, 7):
            yi = y + h_step * (_A_C[i] @ flat[:i]).reshape(y.shape)
            stages[i] = rhs(s + _C[i] * h_step, yi)
        y_new = y + h_step * (_B5_C @ flat).reshape(y.shape)
        if fixed_step is not None:
            s = 1.0 if last else s + h_step
            y = y_new
            stages[0] = stages[6]
            steps += 1
            continue
        err = h_step * (_ERR_C @ flat).reshape(y.shape)
        err_norm = _error_norm(err, y, y_new, rel_tol, abs_tol)
        if err_norm <= 1.0:
            s = 1.0 if last else s + h_step
            y = y_new
            stages[0] = stages[6]   # FSAL
            steps += 1
            factor = _MAX_FACTOR if err_norm == 0.0 else min(
                _MAX_FACTOR, _SAFETY * err_norm ** (-1.0 / _NOMINAL_ORDER))
            h = min(h_step * factor, max_step)
        else:
            rejected += 1
            h = h_step * max(_MIN_FACTOR,
                             _SAFETY * err_norm ** (-1.0 / _NOMINAL_ORDER))
    return y, steps, rejected


def _initial_step(schedule: HamiltonianSchedule, T: float, max_step: float) -> float:
    # the dominant scale is phase rotation at rate T * E; resolve it from the start
    rate = T * schedule.energy_bound
    if rate <= 0.0:
        return max_step
    return min(max_step, 0.1 / rate)


def evolve_batch(schedule: HamiltonianSchedule, timescales: np.ndarray,
                 init: np.ndarray,
                 config: IntegratorConfig = DEFAULT_INTEGRATOR) -> list[EvolutionResult]:
    """Evolve one shared initial state under several timescales at once.

    All rows share the accepted step sequence in s; local error control
    covers every row, so each result meets the configured tolerances.
    """
    timescales = np.asarray(timescales, dtype=float)
    if timescales.ndim != 1 or timescales.size == 0:
        raise ValueError("timescales must be a nonempty 1-D array")
    if np.any(timescales <= 0.0):
        raise ValueError("all timescales must be positive")
    init = np.asarray(init, dtype=np.complex128)
    if init.shape != (schedule.dim,):
        raise ValueError(f"initial state must have shape ({schedule.dim},)")
    norm = np.linalg.norm(init)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"initial state must be normalized, got |psi|={norm:.12g}")

    scale = (-1j * timescales)[:, None]
    y0 = np.broadcast_to(init, (timescales.size, schedule.dim))

    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        return scale * (y @ schedule.matrix_at(s).T)

    first = _initial_step(schedule, float(timescales.max()), config.max_step)
    final, steps, rejected = solve_ode(
        rhs, y0, config.rel_tol, config.abs_tol, config.max_step, first,
        config.fixed_step,
    )
    drifts = np.abs(1.0 - np.linalg.norm(final, axis=1))
    worst = int(np.argmax(drifts))
    if drifts[worst] > config.norm_drift_limit:
        raise IntegrationFailureError(
            "norm drift exceeded the configured limit",
            T=float(timescales[worst]), norm_drift=float(drifts[worst]),
            steps=steps, rejected=rejected,
        )
    return [
        EvolutionResult(T=float(t), final_state=final[i].copy(),
                        norm_drift=float(drifts[i]), steps=steps, rejected=rejected)
        for i, t in enumerate(timescales)
    ]


def evolve(schedule: HamiltonianSchedule, T: float, init: np.ndarray,
           config: IntegratorConfig = DEFAULT_INTEGRATOR) -> EvolutionResult:
    """Integrate i dpsi/ds = T H(s) psi from s=0 to s=1.

    The state is not renormalized along the way; ``norm_drift`` reports
    |1 - |psi(1)|| and the run fails if it exceeds the configured limit.
    The global phase of the final state is unspecified.
    """
    if not T > 0.0:
        raise ValueError("timescale T must be positive")
    return evolve_batch(schedule, np.array([float(T)]), init, config)[0]


def projected_error(final_state: np.ndarray, ground: np.ndarray) -> float:
    """Norm of the component of the evolved state off the target ground level."""
    residual = final_state - ground * (ground.conj() @ final_state)
    return float(np.linalg.norm(residual))


def true_error_result(schedule: HamiltonianSchedule, T: float,
                      config: IntegratorConfig = DEFAULT_INTEGRATOR,
                      gap_floor: float = 1e-8) -> tuple[float, EvolutionResult]:
    """True diabatic error together with the underlying evolution record."""
    initial = spectral_frame(schedule, 0.0, gap_floor).ground_state
    result = evolve(schedule, T, initial, config)
    final_ground = spectral_frame(schedule, 1.0, gap_floor).ground_state
    return projected_error(result.final_state, final_ground), result


def true_error(schedule: HamiltonianSchedule, T: float,
               config: IntegratorConfig = DEFAULT_INTEGRATOR,
               gap_floor: float = 1e-8) -> float:
    """|| (1 - |g_f><g_f|) psi(1) || starting from the initial ground state."""
    eps, _ = true_error_result(schedule, T, config, gap_floor)
    return eps
