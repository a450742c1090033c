"""Benchmark G-BSDEs with closed-form solutions."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .gbsde import ProblemSpec
from .glattice import UncertaintySpec


class UnknownProblemError(KeyError):
    pass


@dataclass(frozen=True)
class ProblemCatalogEntry:
    id: str
    spec: ProblemSpec
    description: str
    exact_y: Optional[Callable] = None


def example1(sigma_lo_sq: float = 0.25, horizon: float = 1.0) -> ProblemCatalogEntry:
    """-dY = -Y dt + Y/2 d<B> - Z dB - dK,  Y_T = e^T sin(B_T);  Y_t = e^t sin(B_t)."""
    spec = ProblemSpec(
        f=lambda t, y: -y,
        g=lambda t, y: 0.5 * y,
        terminal=lambda x: np.exp(horizon) * np.sin(x),
        horizon=horizon,
        uncertainty=UncertaintySpec(sigma_lo_sq, 1.0),
        exact_y0=0.0,
        lipschitz_bound=1.0,
        name="example1",
    )
    return ProblemCatalogEntry(
        "example1", spec, "linear G-BSDE with Y_t = exp(t) sin(B_t)",
        exact_y=lambda t, x: np.exp(t) * np.sin(x),
    )


def _logistic(s):
    return 1.0 / (1.0 + np.exp(-s))


def example2(sigma_lo_sq: float = 1.0, horizon: float = 1.0) -> ProblemCatalogEntry:
    """Nonlinear G-BSDE with b = 1 and logistic solution Y_t = e^{t+B}/(1+e^{t+B}).

    The dt-driver is y^2 - y: the equation carries (f(t, Y) - Y) dt with
    f(t, y) = y^2. The d<B>-driver is -y^3 + 2.5 y^2 - 1.5 y. On the range
    y in [-0.5, 1.5] both have slope at most 4.75, hence L = 5.
    """
    spec = ProblemSpec(
        f=lambda t, y: y * y - y,
        g=lambda t, y: -y ** 3 + 2.5 * y * y - 1.5 * y,
        terminal=lambda x: _logistic(horizon + x),
        horizon=horizon,
        uncertainty=UncertaintySpec(sigma_lo_sq, 1.0),
        b=lambda t, x: np.ones_like(np.asarray(x, dtype=float)),
        exact_y0=0.5,
        lipschitz_bound=5.0,
        name="example2",
    )
    return ProblemCatalogEntry(
        "example2", spec, "nonlinear G-BSDE with logistic solution",
        exact_y=lambda t, x: _logistic(t + np.asarray(x, dtype=float)),
    )


def _zero_driver(t, y):
    return np.zeros_like(np.asarray(y, dtype=float))


def martingale(sigma_lo_sq: float = 0.25, horizon: float = 1.0) -> ProblemCatalogEntry:
    spec = ProblemSpec(
        f=_zero_driver, g=_zero_driver, terminal=lambda x: np.asarray(x, dtype=float),
        horizon=horizon, uncertainty=UncertaintySpec(sigma_lo_sq, 1.0), exact_y0=0.0, name="martingale",
    )
    return ProblemCatalogEntry("martingale", spec, "f = g = 0, phi(x) = x", exact_y=lambda t, x: np.asarray(x, dtype=float))


def constant(c: float = 1.5, sigma_lo_sq: float = 0.25, horizon: float = 1.0) -> ProblemCatalogEntry:
    spec = ProblemSpec(
        f=_zero_driver, g=_zero_driver, terminal=lambda x: np.full_like(np.asarray(x, dtype=float), c),
        horizon=horizon, uncertainty=UncertaintySpec(sigma_lo_sq, 1.0), exact_y0=c, name="constant",
    )
    return ProblemCatalogEntry(
        "constant", spec, f"f = g = 0, phi = {c}",
        exact_y=lambda t, x: np.full_like(np.asarray(x, dtype=float), c),
    )


def variance(sigma_lo_sq: float = 0.25, sigma_hi_sq: float = 1.0, horizon: float = 1.0) -> ProblemCatalogEntry:
    """phi(x) = x^2 with zero drivers: Y_t = x^2 + sigma_hi_sq (T - t)."""
    spec = ProblemSpec(
        f=_zero_driver, g=_zero_driver, terminal=lambda x: np.asarray(x, dtype=float) ** 2,
        horizon=horizon, uncertainty=UncertaintySpec(sigma_lo_sq, sigma_hi_sq),
        exact_y0=sigma_hi_sq * horizon, name="variance",
    )
    return ProblemCatalogEntry(
        "variance", spec, "f = g = 0, phi(x) = x^2 (maximal variance)",
        exact_y=lambda t, x: np.asarray(x, dtype=float) ** 2 + sigma_hi_sq * (horizon - t),
    )


def trivial_cases(sigma_lo_sq: float = 0.25) -> list:
    return [martingale(sigma_lo_sq), constant(sigma_lo_sq=sigma_lo_sq), variance(sigma_lo_sq)]


CATALOG = {
    "example1": example1,
    "example2": example2,
    "martingale": martingale,
    "constant": constant,
    "variance": variance,
}


def get_problem(problem_id: str, sigma_lo_sq: Optional[float] = None) -> ProblemCatalogEntry:
    try:
        factory = CATALOG[problem_id]
    except KeyError:
        raise UnknownProblemError(f"unknown problem id {problem_id!r}; known: {', '.join(sorted(CATALOG))}") from None
    entry = factory()
    if sigma_lo_sq is not None:
        entry = replace(entry, spec=entry.spec.with_uncertainty(sigma_lo_sq, entry.spec.uncertainty.sigma_hi_sq))
    return entry
