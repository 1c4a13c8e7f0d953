"""Shared fixtures: reference schedules, random-schedule factory, service client."""

from __future__ import annotations

import asyncio

import httpx
import numpy as np
import pytest

from adiabatic_lab import (
    Envelope,
    HamiltonianSchedule,
    HermitianTerm,
    builtin_schedule,
)

# Frozen oracle values for the quadratic-crossing schedule
# H(s) = [[s(1-s), 0.2], [0.2, -s(1-s)]], computed from the analytic
# two-level eigensystem with 30-digit quadrature.
CROSSING_W = 0.53518998825248687          # average gap int_0^1 2 sqrt(0.04 + s^2(1-s)^2)
CROSSING_GAP_MID = 0.64031242374328487    # gap at s=0.5: 2 sqrt(0.25^2 + 0.2^2)
CROSSING_L = 0.89605538457134396          # path length int |1-2s| 0.2 / (2 (a^2+0.04)) ds
CROSSING_RIGOROUS_BRACKET = 45.954093397  # T * eps_B for the derivative-norm bound
CROSSING_AMP = 6.25                       # |<e|H'(0)|g>| / gap^2 = 1 / 0.4^2
SMOOTH_W = 0.49919495897715205            # average gap of the smoothstep-composed variant
SMOOTH_AMP2 = 93.75                       # 6 |<e|H'(0)|g>| / gap^3 = 6 / 0.4^3


@pytest.fixture(scope="session")
def crossing() -> HamiltonianSchedule:
    return builtin_schedule("quadratic-crossing")


@pytest.fixture(scope="session")
def crossing_smooth() -> HamiltonianSchedule:
    return builtin_schedule("quadratic-crossing-smooth")


def random_schedule(rng: np.random.Generator, dim: int | None = None,
                    n_terms: int | None = None,
                    max_degree: int = 3) -> HamiltonianSchedule:
    """Random dense schedule with polynomial envelopes, d <= 6."""
    dim = int(rng.integers(2, 7)) if dim is None else dim
    n_terms = int(rng.integers(1, 4)) if n_terms is None else n_terms
    terms = []
    for _ in range(n_terms):
        raw = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        matrix = (raw + raw.conj().T) / 2.0
        degree = int(rng.integers(0, max_degree + 1))
        poly = tuple(rng.standard_normal(degree + 1))
        terms.append((Envelope(poly), HermitianTerm(matrix)))
    return HamiltonianSchedule(dim=dim, terms=tuple(terms))


class ServiceClient:
    """Synchronous facade over the ASGI app for tests and examples."""

    def __init__(self, app):
        self._app = app

    def request(self, method: str, path: str, **kwargs) -> httpx.Response:
        async def _go() -> httpx.Response:
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(transport=transport, timeout=None,
                                         base_url="http://testserver") as client:
                return await client.request(method, path, **kwargs)

        return asyncio.run(_go())

    def get(self, path: str, **kwargs) -> httpx.Response:
        return self.request("GET", path, **kwargs)

    def post(self, path: str, **kwargs) -> httpx.Response:
        return self.request("POST", path, **kwargs)


@pytest.fixture(scope="session")
def service() -> ServiceClient:
    from adiabatic_lab.service.app import create_app

    return ServiceClient(create_app())
