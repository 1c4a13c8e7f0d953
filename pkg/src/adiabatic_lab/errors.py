"""Exception types shared across the package."""

from __future__ import annotations


class AdiabaticLabError(Exception):
    """Base class for all domain-specific failures."""


class ConfigError(AdiabaticLabError):
    """A schedule or sweep configuration is malformed."""


class GapClosureError(AdiabaticLabError):
    """The gap between ground and first excited level fell below the floor.

    The whole analysis assumes a gapped, nondegenerate ground level; once the
    first gap closes, eigenvalue ordering (and every quantity that divides by
    a gap) loses meaning.
    """

    def __init__(self, s: float, gap: float, floor: float):
        self.s = float(s)
        self.gap = float(gap)
        self.floor = float(floor)
        super().__init__(
            f"ground-state gap {gap:.3e} below floor {floor:.3e} at s={s:.6g}"
        )


class OrderUndeterminedError(AdiabaticLabError):
    """All endpoint derivatives vanish up to the search cap."""


class IntegrationFailureError(AdiabaticLabError):
    """The propagator finished but violated its fidelity contract."""

    def __init__(self, message: str, *, T: float, norm_drift: float,
                 steps: int, rejected: int):
        self.T = float(T)
        self.norm_drift = float(norm_drift)
        self.steps = int(steps)
        self.rejected = int(rejected)
        super().__init__(
            f"{message} (T={T:g}, norm_drift={norm_drift:.3e}, "
            f"steps={steps}, rejected={rejected})"
        )


class StiffnessError(AdiabaticLabError):
    """Adaptive step size underflowed; the problem is too stiff as posed."""


class SamplingError(AdiabaticLabError):
    """A windowed average was requested with too few samples to resolve
    the phase oscillation."""
