"""Brute-force reference for the lattice engine.

Walks every path of the depth-M tree and maximises over q separately at
each history, with no state merging and no caching. Exponential in M, so
only small trees are accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .glattice import InvalidUncertaintyError, UncertaintySpec

MAX_DEPTH = 6


class OracleCapacityError(ValueError):
    pass


@dataclass(frozen=True)
class PolicyTreeValue:
    depth: int
    value: float

    def __post_init__(self):
        if self.depth > MAX_DEPTH:
            raise OracleCapacityError(f"oracle depth {self.depth} exceeds {MAX_DEPTH}")


def oracle_expectation(payoff, dt: float, depth: int, u: UncertaintySpec) -> float:
    if depth > MAX_DEPTH:
        raise OracleCapacityError(f"oracle depth {depth} exceeds {MAX_DEPTH}")
    if depth < 1 or dt <= 0:
        raise ValueError("need depth >= 1 and dt > 0")
    if u.sigma_lo_sq <= 0:
        raise InvalidUncertaintyError("sigma_lo_sq must be positive")
    h = math.sqrt(u.sigma_hi_sq * dt / depth)
    clock = u.sigma_hi_sq * dt / depth
    qs = (u.sigma_lo_sq / u.sigma_hi_sq, 1.0)

    def value(history):
        if len(history) == depth:
            b = h * sum(history)
            qv = clock * sum(abs(s) for s in history)
            return float(payoff(b, qv))
        up = value(history + (1,))
        flat = value(history + (0,))
        down = value(history + (-1,))
        return max(q / 2 * up + q / 2 * down + (1 - q) * flat for q in qs)

    return PolicyTreeValue(depth, value(())).value
