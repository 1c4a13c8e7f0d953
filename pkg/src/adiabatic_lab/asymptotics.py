"""Leading-order error asymptotics, typical-error averages, and bounds.

For a schedule whose first n-1 endpoint derivatives vanish, the leading
error coefficient combines one amplitude vector per endpoint,

    c_j(e) = <j(e)| H^(n)(e) |g(e)> / gap_j(e)^(n+1),   e in {0, 1},

with trajectory information entering only through phase factors
exp(i w_j T) built from the average gaps w_j. The oscillating coefficient

    b_n(T) = sqrt( sum_j | exp(i w_j T) c_j(1) - c_j(0) |^2 )

drives the leading error estimate b_n(T)/T^n, while the phase-free

    bbar_n = sqrt( sum_j |c_j(0)|^2 + sum_j |c_j(1)|^2 )

gives the typical error bbar_n/T^n and the sqrt(2) bbar_n/T^n envelope
(the parallelogram identity makes b_n(T) <= sqrt(2) bbar_n for any phases).

The windowed typical error averages the error over timescales
T' in [T - sqrt(T tau0), T + sqrt(T tau0)]. Two averaging senses are
offered: the quadratic "rms" average, whose window limit is exactly
bbar_n/T^n (the mean square of b_n over a phase period equals bbar_n^2),
and the plain "mean", which for a single dominant gap settles about 10%
lower, at (2 sqrt(2) / pi) bbar_n / T^n. The rms sense is the default
because it is the one with an exact closed-form counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GapClosureError, SamplingError
from .propagator import (
    DEFAULT_INTEGRATOR,
    IntegratorConfig,
    evolve_batch,
    projected_error,
)
from .quadrature import normalize_node_count, simpson_uniform
from .schedule import (
    DEFAULT_GAP_FLOOR,
    DEFAULT_QUADRATURE_POINTS,
    DEFAULT_ZERO_TOL,
    HamiltonianSchedule,
    average_gaps,
    endpoint_derivative_order,
    spectral_frame,
)

WINDOW_POINTS_PER_PERIOD = 8          # sampling floor for phase oscillations
_AUTO_MARGIN = 1.25                   # headroom applied when samples are auto-chosen


@dataclass(frozen=True, eq=False)
class EndpointAmplitudes:
    """Per-excited-state amplitudes c_j at one endpoint, in the fixed gauge."""

    endpoint: int
    order: int
    c: np.ndarray

    @property
    def magnitude(self) -> float:
        """Gauge-invariant euclidean magnitude sqrt(sum_j |c_j|^2)."""
        return float(np.linalg.norm(self.c))


@dataclass(frozen=True, eq=False)
class AsymptoticData:
    """Everything the leading-order error formulas need for one schedule."""

    order: int
    amp0: EndpointAmplitudes
    amp1: EndpointAmplitudes
    average_gaps: np.ndarray
    gap_error: np.ndarray

    @property
    def bbar0(self) -> float:
        return self.amp0.magnitude

    @property
    def bbar1(self) -> float:
        return self.amp1.magnitude

    @property
    def bbar(self) -> float:
        return math.hypot(self.bbar0, self.bbar1)

    @property
    def w_max(self) -> float:
        return float(np.max(self.average_gaps))


def endpoint_amplitudes(schedule: HamiltonianSchedule, order: int, endpoint: int,
                        gap_floor: float = DEFAULT_GAP_FLOOR) -> EndpointAmplitudes:
    """Amplitudes <j|H^(order)|g> / gap_j^(order+1) at endpoint 0 or 1."""
    if endpoint not in (0, 1):
        raise ValueError("endpoint must be 0 or 1")
    if int(order) < 1:
        raise ValueError("derivative order must be >= 1")
    frame = spectral_frame(schedule, float(endpoint), gap_floor)
    hn = schedule.matrix_at(float(endpoint), order=int(order))
    overlaps = frame.eigenvectors[:, 1:].conj().T @ (hn @ frame.ground_state)
    c = overlaps / frame.gaps ** (int(order) + 1)
    return EndpointAmplitudes(endpoint=int(endpoint), order=int(order), c=c)


def typical_coefficient(schedule: HamiltonianSchedule,
                        quadrature_points: int = DEFAULT_QUADRATURE_POINTS,
                        zero_tol: float = DEFAULT_ZERO_TOL,
                        gap_floor: float = DEFAULT_GAP_FLOOR,
                        order: int | None = None) -> AsymptoticData:
    """Assemble the endpoint amplitudes, average gaps, and leading order n.

    ``order`` overrides the automatic endpoint-derivative-order search.
    """
    n = int(order) if order is not None else endpoint_derivative_order(schedule, zero_tol)
    gaps = average_gaps(schedule, quadrature_points, gap_floor)
    return AsymptoticData(
        order=n,
        amp0=endpoint_amplitudes(schedule, n, 0, gap_floor),
        amp1=endpoint_amplitudes(schedule, n, 1, gap_floor),
        average_gaps=gaps.values,
        gap_error=gaps.error_estimate,
    )


def _check_timescale(T: float) -> float:
    T = float(T)
    if not T > 0.0:
        raise ValueError("timescale T must be positive")
    return T


def _switching_coefficient_many(data: AsymptoticData, T: np.ndarray) -> np.ndarray:
    phases = np.exp(1j * np.multiply.outer(np.asarray(T, dtype=float), data.average_gaps))
    mix = phases * data.amp1.c[None, :] - data.amp0.c[None, :]
    return np.linalg.norm(mix, axis=1)


def switching_coefficient(data: AsymptoticData, T: float) -> float:
    """b_n(T): endpoint amplitudes mixed by the average-gap phase factors."""
    return float(_switching_coefficient_many(data, np.array([_check_timescale(T)]))[0])


def switching_error(data: AsymptoticData, T: float) -> float:
    """Leading-order error estimate b_n(T) / T^n."""
    T = _check_timescale(T)
    return switching_coefficient(data, T) / T ** data.order


def typical_error_closed(data: AsymptoticData, T: float) -> float:
    """Closed-form typical error bbar_n / T^n."""
    return data.bbar / _check_timescale(T) ** data.order


def hyperadiabatic_bound(data: AsymptoticData, T: float) -> float:
    """sqrt(2) bbar_n / T^n.

    Bounds the error only once the leading term dominates; the value is
    returned unconditionally and callers decide whether it applies.
    """
    return math.sqrt(2.0) * typical_error_closed(data, T)


def window_samples(data: AsymptoticData, T: float, tau0: float,
                   samples: int | None) -> tuple[np.ndarray, float]:
    """Sample grid over [T - sqrt(T tau0), T + sqrt(T tau0)].

    The spacing must resolve the fastest phase oscillation with at least
    WINDOW_POINTS_PER_PERIOD points per period of the largest average gap.
    Explicit ``samples`` below that floor raise SamplingError; even counts
    are bumped up by one for the Simpson rule.
    """
    T = _check_timescale(T)
    if not tau0 > 0.0:
        raise ValueError("tau0 must be positive")
    half = math.sqrt(T * tau0)
    if T - half <= 0.0:
        raise ValueError(
            f"window [T - sqrt(T tau0), T + sqrt(T tau0)] reaches nonpositive "
            f"timescales for T={T:g}, tau0={tau0:g}"
        )
    if data.w_max > 0.0:
        max_spacing = (2.0 * math.pi / data.w_max) / WINDOW_POINTS_PER_PERIOD
        floor = int(math.ceil(2.0 * half / max_spacing)) + 1
    else:
        floor = 3
    floor = max(floor, 3)
    if samples is None:
        n = max(int(math.ceil(_AUTO_MARGIN * (floor - 1))) + 1, 9)
    else:
        n = int(samples)
        if n < floor:
            raise SamplingError(
                f"{n} samples cannot resolve the phase oscillation; "
                f"need at least {floor} over this window"
            )
    if n % 2 == 0:
        n += 1
    return np.linspace(T - half, T + half, n), half


def typical_error_windowed(schedule: HamiltonianSchedule, T: float,
                           tau0: float = 1.0,
                           mode: str = "true-error",
                           samples: int | None = None,
                           config: IntegratorConfig = DEFAULT_INTEGRATOR,
                           average: str = "rms",
                           data: AsymptoticData | None = None,
                           gap_floor: float = DEFAULT_GAP_FLOOR) -> float:
    """Window-averaged error over T' in [T - sqrt(T tau0), T + sqrt(T tau0)].

    ``mode`` selects the error being averaged: "true-error" integrates the
    Schrödinger equation at every sample (all samples advance in one batched
    sweep), "asymptotic" uses the cheap leading-order estimate b_n(T')/T'^n.

    ``average`` selects the sense: "rms" (default) matches the closed form
    bbar_n/T^n in the large-T limit; "mean" is the plain windowed average.

    ``data`` may carry precomputed coefficients to avoid recomputing them
    in sweep loops.
    """
    if average not in ("rms", "mean"):
        raise ValueError(f"unknown average sense {average!r}")
    if data is None:
        data = typical_coefficient(schedule, gap_floor=gap_floor)
    grid, half = window_samples(data, T, tau0, samples)
    if mode == "asymptotic":
        eps = _switching_coefficient_many(data, grid) / grid ** data.order
    elif mode == "true-error":
        initial = spectral_frame(schedule, 0.0, gap_floor).ground_state
        final_ground = spectral_frame(schedule, 1.0, gap_floor).ground_state
        results = evolve_batch(schedule, grid, initial, config)
        eps = np.array([projected_error(r.final_state, final_ground) for r in results])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    dx = grid[1] - grid[0]
    if average == "rms":
        return float(math.sqrt(simpson_uniform(eps * eps, dx) / (2.0 * half)))
    return float(simpson_uniform(eps, dx) / (2.0 * half))


def rigorous_bound(schedule: HamiltonianSchedule, T: float,
                   quadrature_points: int = DEFAULT_QUADRATURE_POINTS,
                   gap_floor: float = DEFAULT_GAP_FLOOR) -> float:
    """Derivative-norm/gap upper bound on the error, scaling as 1/T.

    eps_B = (1/T) [ |H'(0)|/gap(0)^2 + |H'(1)|/gap(1)^2
                    + int_0^1 ( |H''|/gap^2 + 7 |H'|^2/gap^3 ) ds ]

    with spectral norms and the ground-to-first-excited gap. This is the
    standard rigorous bound for a gapped, nondegenerate ground level; it is
    loose by design and typically overestimates the true error by a large
    factor.
    """
    T = _check_timescale(T)
    if quadrature_points < 9:
        raise ValueError("quadrature_points must be at least 9")
    nodes = normalize_node_count(quadrature_points)
    grid = np.linspace(0.0, 1.0, nodes)
    energies = np.linalg.eigvalsh(schedule.matrices_at(grid))
    gap = energies[:, 1] - energies[:, 0]
    bad = np.flatnonzero(gap < gap_floor)
    if bad.size:
        i = int(bad[0])
        raise GapClosureError(grid[i], float(gap[i]), gap_floor)
    norm1 = np.abs(np.linalg.eigvalsh(schedule.matrices_at(grid, order=1))).max(axis=1)
    norm2 = np.abs(np.linalg.eigvalsh(schedule.matrices_at(grid, order=2))).max(axis=1)
    integrand = norm2 / gap ** 2 + 7.0 * norm1 ** 2 / gap ** 3
    integral = float(simpson_uniform(integrand, grid[1] - grid[0]))
    endpoints = norm1[0] / gap[0] ** 2 + norm1[-1] / gap[-1] ** 2
    return (endpoints + integral) / T
