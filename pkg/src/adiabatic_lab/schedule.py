"""Time-dependent Hamiltonians H(s) on s in [0, 1] with exact derivatives.

A schedule is a sum of constant Hermitian matrices times scalar envelopes,

    H(s) = sum_k f_k(s) A_k,

where each envelope f_k is a real polynomial, optionally precomposed with
the cubic smoothstep u(s) = 3s^2 - 2s^3 one or more times. Composition with
u flattens the endpoint derivatives, which is the mechanism used to build
schedules whose first n-1 derivatives vanish at s=0 and s=1. Because every
envelope collapses to a plain polynomial in s, derivatives of any order are
exact, and H(s) inherits Hermiticity bit-for-bit from its terms.

The spectral side (instantaneous eigensystem, gaps, trajectory-averaged
gaps, ground-state path length) lives here too, together with ingestion of
schedules from JSON-compatible configurations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ConfigError, GapClosureError, OrderUndeterminedError
from .quadrature import normalize_node_count, simpson_with_estimate, simpson_uniform

HERMITICITY_ATOL = 1e-12
DEFAULT_GAP_FLOOR = 1e-8
DEFAULT_QUADRATURE_POINTS = 1025
DEFAULT_ZERO_TOL = 1e-9
DERIVATIVE_ORDER_CAP = 8

# cubic smoothstep u(s) = 3s^2 - 2s^3, ascending coefficients
_SMOOTHSTEP_COEF = np.array([0.0, 0.0, 3.0, -2.0])


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HermitianTerm:
    """A constant d x d Hermitian matrix (d >= 2)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {m.shape}")
        if m.shape[0] < 2:
            raise ValueError("matrix dimension must be at least 2")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_ATOL:
            raise ValueError(
                f"matrix is not Hermitian within {HERMITICITY_ATOL:g} per entry"
            )
        object.__setattr__(self, "matrix", _as_readonly(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Envelope:
    """Real polynomial envelope, optionally smoothstep-composed.

    ``poly`` holds ascending coefficients (c0, c1, ..., cp) of a polynomial
    evaluated at u_k(s), where u_0(s) = s and each extra ``smooth_wrap``
    level composes with the cubic smoothstep once more.
    """

    poly: tuple[float, ...]
    smooth_wrap: int = 0

    def __post_init__(self):
        if len(self.poly) == 0:
            raise ValueError("envelope needs at least one coefficient")
        coeffs = tuple(float(c) for c in self.poly)
        if not all(np.isfinite(coeffs)):
            raise ValueError("envelope coefficients must be finite")
        object.__setattr__(self, "poly", coeffs)
        if int(self.smooth_wrap) < 0:
            raise ValueError("smooth_wrap must be a nonnegative integer")
        object.__setattr__(self, "smooth_wrap", int(self.smooth_wrap))

    @cached_property
    def coefficients(self) -> np.ndarray:
        """Ascending coefficients of the envelope as a plain polynomial in s."""
        c = np.asarray(self.poly, dtype=float)
        for _ in range(self.smooth_wrap):
            # Horner composition: P(u) evaluated in polynomial arithmetic
            acc = np.array([c[-1]])
            for ck in c[-2::-1]:
                acc = npoly.polymul(acc, _SMOOTHSTEP_COEF)
                acc[0] += ck
            c = acc
        return c

    def value(self, s: float) -> float:
        return float(npoly.polyval(s, self.coefficients))

    def derivative(self, s: float, order: int) -> float:
        if order < 0:
            raise ValueError("derivative order must be nonnegative")
        return float(npoly.polyval(s, npoly.polyder(self.coefficients, order)))


@dataclass(frozen=True, eq=False)
class HamiltonianSchedule:
    """H(s) = sum_k f_k(s) A_k over s in [0, 1]; immutable and shareable."""

    dim: int
    terms: tuple[tuple[Envelope, HermitianTerm], ...]

    def __post_init__(self):
        if int(self.dim) < 2:
            raise ValueError("dim must be at least 2")
        object.__setattr__(self, "dim", int(self.dim))
        terms = tuple((env, term) for env, term in self.terms)
        for _, term in terms:
            if term.dim != self.dim:
                raise ValueError(
                    f"term dimension {term.dim} does not match schedule dim {self.dim}"
                )
        object.__setattr__(self, "terms", terms)

    @cached_property
    def _coef(self) -> np.ndarray:
        """Matrix-valued coefficients: H(s) = sum_m _coef[m] s^m, shape (deg+1, d, d)."""
        degree = 0
        for env, _ in self.terms:
            degree = max(degree, len(env.coefficients) - 1)
        out = np.zeros((degree + 1, self.dim, self.dim), dtype=np.complex128)
        for env, term in self.terms:
            c = env.coefficients
            out[: len(c)] += c[:, None, None] * term.matrix[None, :, :]
        out.setflags(write=False)
        return out

    def _derivative_coef(self, order: int) -> np.ndarray:
        if order == 0:
            return self._coef
        if order >= self._coef.shape[0]:
            return np.zeros((1, self.dim, self.dim), dtype=np.complex128)
        return npoly.polyder(self._coef, m=order, axis=0)

    def matrix_at(self, s: float, order: int = 0) -> np.ndarray:
        """H(s), or its order-th exact s-derivative, as a fresh (d, d) array."""
        coef = self._derivative_coef(order)
        acc = coef[-1].copy()
        for m in range(coef.shape[0] - 2, -1, -1):
            acc *= s
            acc += coef[m]
        return acc

    def matrices_at(self, s: np.ndarray, order: int = 0) -> np.ndarray:
        """Stacked H^(order)(s_i) for a 1-D grid, shape (len(s), d, d)."""
        coef = self._derivative_coef(order)
        powers = np.asarray(s, dtype=float)[:, None] ** np.arange(coef.shape[0])[None, :]
        return np.tensordot(powers, coef, axes=(1, 0))

    @cached_property
    def energy_bound(self) -> float:
        """Coarse upper estimate of max_s max_j |E_j(s)| from a 33-node scan."""
        grid = np.linspace(0.0, 1.0, 33)
        energies = np.linalg.eigvalsh(self.matrices_at(grid))
        return float(np.max(np.abs(energies)))


@dataclass(frozen=True, eq=False)
class SpectralFrame:
    """Instantaneous eigensystem of H(s) in the deterministic gauge.

    ``energies`` ascend; ``eigenvectors[:, j]`` belongs to energies[j];
    ``gaps[j-1]`` = E_j - E_0 for j = 1..d-1. The gauge makes the
    largest-magnitude entry of each eigenvector real and positive, ties
    resolved toward the lowest index.
    """

    s: float
    energies: np.ndarray
    eigenvectors: np.ndarray
    gaps: np.ndarray

    @property
    def ground_state(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])


_GAUGE_TIE_TOL = 1e-12


def gauge_fix(vectors: np.ndarray) -> np.ndarray:
    """Re-phase each column so its largest-magnitude entry is real positive.

    Entries within _GAUGE_TIE_TOL of the maximum count as tied and the
    lowest index wins, so the pivot choice is stable under re-phasing.
    """
    vectors = np.asarray(vectors)
    out = np.empty_like(vectors)
    for j in range(vectors.shape[1]):
        mags = np.abs(vectors[:, j])
        pivot = int(np.flatnonzero(mags >= mags.max() - _GAUGE_TIE_TOL)[0])
        z = vectors[pivot, j]
        out[:, j] = vectors[:, j] * (z.conjugate() / abs(z))
    return out


def _check_interval(s: float) -> float:
    s = float(s)
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"scaled time s={s:g} outside [0, 1]")
    return s


def evaluate(schedule: HamiltonianSchedule, s: float) -> HermitianTerm:
    """H(s) as a HermitianTerm; s must lie in [0, 1]."""
    return HermitianTerm(schedule.matrix_at(_check_interval(s)))


def derivative(schedule: HamiltonianSchedule, s: float, order: int) -> HermitianTerm:
    """Exact order-th derivative of H with respect to s, order >= 1."""
    if int(order) < 1:
        raise ValueError("derivative order must be >= 1")
    return HermitianTerm(schedule.matrix_at(_check_interval(s), order=int(order)))


def spectral_frame(schedule: HamiltonianSchedule, s: float,
                   gap_floor: float = DEFAULT_GAP_FLOOR) -> SpectralFrame:
    """Full eigendecomposition of H(s) with gauge-fixed eigenvectors.

    Raises GapClosureError when the first gap E_1 - E_0 falls below
    ``gap_floor``; degenerate excited levels are permitted.
    """
    s = _check_interval(s)
    if not gap_floor > 0.0:
        raise ValueError("gap_floor must be positive")
    energies, vectors = np.linalg.eigh(schedule.matrix_at(s))
    gaps = energies[1:] - energies[0]
    if gaps[0] < gap_floor:
        raise GapClosureError(s, float(gaps[0]), gap_floor)
    return SpectralFrame(
        s=s,
        energies=energies,
        eigenvectors=gauge_fix(vectors),
        gaps=gaps,
    )


@dataclass(frozen=True, eq=False)
class AverageGapResult:
    """Trajectory-averaged gaps w_j = int_0^1 (E_j(s) - E_0(s)) ds.

    ``error_estimate`` is the Richardson-style comparison against the
    half-resolution grid; doubling the node count should move each value
    by less than its estimate.
    """

    values: np.ndarray
    error_estimate: np.ndarray
    nodes: int

    @property
    def w_max(self) -> float:
        return float(np.max(self.values))


def _gap_grid(schedule: HamiltonianSchedule, quadrature_points: int,
              gap_floor: float) -> tuple[np.ndarray, np.ndarray]:
    if quadrature_points < 9:
        raise ValueError("quadrature_points must be at least 9")
    nodes = normalize_node_count(quadrature_points)
    grid = np.linspace(0.0, 1.0, nodes)
    energies = np.linalg.eigvalsh(schedule.matrices_at(grid))
    gaps = energies[:, 1:] - energies[:, :1]
    bad = np.flatnonzero(gaps[:, 0] < gap_floor)
    if bad.size:
        i = int(bad[0])
        raise GapClosureError(grid[i], float(gaps[i, 0]), gap_floor)
    return grid, gaps


def average_gaps(schedule: HamiltonianSchedule,
                 quadrature_points: int = DEFAULT_QUADRATURE_POINTS,
                 gap_floor: float = DEFAULT_GAP_FLOOR) -> AverageGapResult:
    """Composite-Simpson average gaps with a half-resolution error estimate."""
    grid, gaps = _gap_grid(schedule, quadrature_points, gap_floor)
    values, estimate = simpson_with_estimate(gaps, 0.0, 1.0, axis=0)
    return AverageGapResult(values=values, error_estimate=estimate, nodes=grid.size)


def endpoint_derivative_order(schedule: HamiltonianSchedule,
                              zero_tol: float = DEFAULT_ZERO_TOL) -> int:
    """Smallest n >= 1 with H^(n) nonzero at either endpoint, searched to order 8.

    "Nonzero" is judged on the Frobenius norm relative to the largest
    endpoint derivative norm found over the whole search range.
    """
    if not zero_tol > 0.0:
        raise ValueError("zero_tol must be positive")
    norms = np.zeros(DERIVATIVE_ORDER_CAP + 1)
    for n in range(1, DERIVATIVE_ORDER_CAP + 1):
        h0 = schedule.matrix_at(0.0, order=n)
        h1 = schedule.matrix_at(1.0, order=n)
        norms[n] = max(np.linalg.norm(h0), np.linalg.norm(h1))
    reference = norms.max()
    if reference == 0.0:
        raise OrderUndeterminedError(
            f"all endpoint derivatives vanish up to order {DERIVATIVE_ORDER_CAP}"
        )
    for n in range(1, DERIVATIVE_ORDER_CAP + 1):
        if norms[n] > zero_tol * reference:
            return n
    raise OrderUndeterminedError(
        f"no endpoint derivative exceeds {zero_tol:g} (relative) up to order "
        f"{DERIVATIVE_ORDER_CAP}"
    )


def path_length(schedule: HamiltonianSchedule,
                quadrature_points: int = DEFAULT_QUADRATURE_POINTS,
                gap_floor: float = DEFAULT_GAP_FLOOR) -> float:
    """Integrated norm of the ground state's covariant derivative.

    The derivative projected off the ground level comes from first-order
    perturbation theory, sum_j |j><j|H'|g> / (E_j - E_0), so the integrand
    sqrt(sum_j |<j|H'|g>|^2 / gap_j^2) is gauge invariant and insensitive
    to how the trajectory is parametrized.
    """
    if quadrature_points < 9:
        raise ValueError("quadrature_points must be at least 9")
    nodes = normalize_node_count(quadrature_points)
    grid = np.linspace(0.0, 1.0, nodes)
    energies, vectors = np.linalg.eigh(schedule.matrices_at(grid))
    gaps = energies[:, 1:] - energies[:, :1]
    bad = np.flatnonzero(gaps[:, 0] < gap_floor)
    if bad.size:
        i = int(bad[0])
        raise GapClosureError(grid[i], float(gaps[i, 0]), gap_floor)
    hprime = schedule.matrices_at(grid, order=1)
    ground = vectors[:, :, 0]
    hp_g = np.einsum("nij,nj->ni", hprime, ground)
    overlaps = np.einsum("nij,ni->nj", vectors.conj(), hp_g)[:, 1:]
    integrand = np.sqrt(np.sum(np.abs(overlaps / gaps) ** 2, axis=1))
    return float(simpson_uniform(integrand, grid[1] - grid[0]))


# ---------------------------------------------------------------------------
# Configuration ingestion
# ---------------------------------------------------------------------------

_PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
_COUPLING = np.array([[0.0, 0.2], [0.2, 0.0]], dtype=np.complex128)


def _quadratic_crossing(smooth_wrap: int) -> HamiltonianSchedule:
    return HamiltonianSchedule(
        dim=2,
        terms=(
            (Envelope((0.0, 1.0, -1.0), smooth_wrap), HermitianTerm(_PAULI_Z)),
            (Envelope((1.0,), smooth_wrap), HermitianTerm(_COUPLING)),
        ),
    )


BUILTIN_SCHEDULES = {
    "quadratic-crossing": lambda: _quadratic_crossing(0),
    "quadratic-crossing-smooth": lambda: _quadratic_crossing(1),
}


def builtin_schedule(name: str) -> HamiltonianSchedule:
    try:
        return BUILTIN_SCHEDULES[name]()
    except KeyError:
        raise ConfigError(
            f"unknown built-in schedule {name!r}; available: "
            + ", ".join(sorted(BUILTIN_SCHEDULES))
        ) from None


def _parse_matrix(raw, dim: int, index: int) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(
            f"terms[{index}].matrix must be a {dim}x{dim} array of [re, im] pairs"
        ) from None
    if arr.shape != (dim, dim, 2):
        raise ConfigError(
            f"terms[{index}].matrix has shape {arr.shape}, expected ({dim}, {dim}, 2)"
        )
    return arr[..., 0] + 1j * arr[..., 1]


def schedule_from_config(config: dict) -> HamiltonianSchedule:
    """Build a schedule from its JSON-compatible dictionary form.

    Expected shape::

        {"dim": d,
         "terms": [{"matrix": [[[re, im], ...], ...],
                    "envelope": {"poly": [c0, c1, ...], "smooth_wrap": k}},
                   ...]}
    """
    if not isinstance(config, dict):
        raise ConfigError("schedule config must be a JSON object")
    try:
        dim = int(config["dim"])
        raw_terms = config["terms"]
    except KeyError as missing:
        raise ConfigError(f"schedule config is missing field {missing}") from None
    if not isinstance(raw_terms, (list, tuple)):
        raise ConfigError("terms must be an array")
    terms = []
    for i, raw in enumerate(raw_terms):
        if not isinstance(raw, dict) or "matrix" not in raw or "envelope" not in raw:
            raise ConfigError(f"terms[{i}] needs 'matrix' and 'envelope' fields")
        env_raw = raw["envelope"]
        if not isinstance(env_raw, dict) or "poly" not in env_raw:
            raise ConfigError(f"terms[{i}].envelope needs a 'poly' field")
        try:
            envelope = Envelope(
                poly=tuple(env_raw["poly"]),
                smooth_wrap=int(env_raw.get("smooth_wrap", 0)),
            )
            term = HermitianTerm(_parse_matrix(raw["matrix"], dim, i))
        except (TypeError, ValueError) as bad:
            raise ConfigError(f"terms[{i}]: {bad}") from None
        terms.append((envelope, term))
    try:
        return HamiltonianSchedule(dim=dim, terms=tuple(terms))
    except ValueError as bad:
        raise ConfigError(str(bad)) from None


def schedule_to_config(schedule: HamiltonianSchedule) -> dict:
    """Inverse of schedule_from_config (up to float round-trips)."""
    terms = []
    for env, term in schedule.terms:
        matrix = np.stack([term.matrix.real, term.matrix.imag], axis=-1)
        terms.append({
            "matrix": matrix.tolist(),
            "envelope": {"poly": list(env.poly), "smooth_wrap": env.smooth_wrap},
        })
    return {"dim": schedule.dim, "terms": terms}


def load_schedule(ref) -> HamiltonianSchedule:
    """Resolve a schedule reference: built-in name, config path, or dict."""
    if isinstance(ref, HamiltonianSchedule):
        return ref
    if isinstance(ref, dict):
        return schedule_from_config(ref)
    if isinstance(ref, (str, Path)):
        name = str(ref)
        if name in BUILTIN_SCHEDULES:
            return BUILTIN_SCHEDULES[name]()
        path = Path(name)
        if path.exists():
            try:
                config = json.loads(path.read_text())
            except json.JSONDecodeError as bad:
                raise ConfigError(f"{path}: invalid JSON ({bad})") from None
            return schedule_from_config(config)
        raise ConfigError(
            f"schedule reference {name!r} is neither a built-in name nor an "
            "existing config path"
        )
    raise ConfigError(f"cannot interpret schedule reference of type {type(ref).__name__}")
