"""Sublinear expectations of (dB, d<B>) on the trinomial uncertainty lattice.

Each of the M sub-steps moves the walk by +h, 0 or -h with probabilities
q/2, 1-q, q/2, where q is picked from {q_lo, q_hi} at every node to
maximise the continuation value. With h = sqrt(sigma_hi_sq * dt / M) and
q_s = sigma_s_sq / sigma_hi_sq the per-step variance ranges over
[sigma_lo_sq, sigma_hi_sq] * dt / M, and the quadratic-variation clock
advances by sigma_hi_sq * dt / M on every jump.

Nodes are stored in (jumps j, up-moves u) coordinates with 0 <= u <= j; the
walk offset is k = 2u - j. A level-m value array has shape (..., m+1, m+1)
and only its lower triangle is meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


class InvalidUncertaintyError(ValueError):
    pass


class LatticeEvaluationError(ArithmeticError):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


@dataclass(frozen=True)
class UncertaintySpec:
    sigma_lo_sq: float
    sigma_hi_sq: float = 1.0

    def __post_init__(self):
        lo, hi = self.sigma_lo_sq, self.sigma_hi_sq
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise InvalidUncertaintyError("variance bounds must be finite")
        if lo <= 0:
            raise InvalidUncertaintyError(f"sigma_lo_sq must be positive, got {lo}")
        if lo > hi:
            raise InvalidUncertaintyError(f"sigma_lo_sq={lo} exceeds sigma_hi_sq={hi}")

    @property
    def q_lo(self) -> float:
        return self.sigma_lo_sq / self.sigma_hi_sq

    @property
    def q_hi(self) -> float:
        return 1.0

    @property
    def degenerate(self) -> bool:
        return self.sigma_lo_sq == self.sigma_hi_sq


@dataclass(frozen=True)
class IncrementPair:
    delta_b: float
    delta_qv: float


@dataclass(frozen=True)
class LatticeNodes:
    """Terminal-level geometry of a depth-M lattice for one time step."""

    depth: int
    dt: float
    sigma_hi_sq: float
    k: np.ndarray  # walk offset, shape (M+1, M+1)
    j: np.ndarray  # jump count
    valid: np.ndarray  # lower-triangle mask u <= j

    @property
    def jump(self) -> float:
        return math.sqrt(self.sigma_hi_sq * self.dt / self.depth)

    @property
    def delta_b(self) -> np.ndarray:
        return self.jump * self.k

    @property
    def delta_qv(self) -> np.ndarray:
        return (self.sigma_hi_sq * self.dt / self.depth) * self.j

    @property
    def offsets(self) -> np.ndarray:
        """Walk offsets -M..M; node (j, u) sits at offsets[k + M]."""
        return np.arange(-self.depth, self.depth + 1)


def lattice_nodes(dt: float, depth: int, sigma_hi_sq: float = 1.0) -> LatticeNodes:
    _check_step(dt, depth)
    j, u = np.indices((depth + 1, depth + 1))
    valid = u <= j
    k = np.where(valid, 2 * u - j, 0)
    return LatticeNodes(depth, float(dt), float(sigma_hi_sq), k, np.where(valid, j, 0), valid)


def lattice_endpoints(x0: float, dt: float, depth: int, sigma_hi_sq: float = 1.0):
    """Spatial points x0 + h*k, k = -M..M, reachable after one lattice step."""
    _check_step(dt, depth)
    h = math.sqrt(sigma_hi_sq * dt / depth)
    return [(k, x0 + h * k) for k in range(-depth, depth + 1)]


def backward_sweep(terminal: np.ndarray, q_lo: float, q_hi: float = 1.0) -> np.ndarray:
    """Run the max-over-q dynamic programme down to the root.

    ``terminal`` has shape (..., M+1, M+1) in (j, u) layout; leading axes are
    independent problems swept together. Returns the root values, shape (...).
    """
    v = terminal
    depth = v.shape[-1] - 1
    for _ in range(depth):
        stay = v[..., :-1, :-1]
        move = 0.5 * (v[..., 1:, 1:] + v[..., 1:, :-1]) - stay
        # linear in q, so the max sits at an endpoint; ties resolve to q_hi
        v = stay + np.maximum(q_hi * move, q_lo * move)
    return v[..., 0, 0]


def lattice_expectation(
    payoff: Callable, dt: float, depth: int, u: UncertaintySpec
) -> float:
    """E^M[payoff(dB, d<B>)] under adapted volatility maximisation.

    ``payoff(delta_b, delta_qv)`` is called once with numpy arrays holding the
    terminal node increments and must broadcast over them.
    """
    if u.q_lo <= 0:
        raise InvalidUncertaintyError("q_lo must be positive")
    nodes = lattice_nodes(dt, depth, u.sigma_hi_sq)
    db = nodes.delta_b[nodes.valid]
    dqv = nodes.delta_qv[nodes.valid]
    vals = np.broadcast_to(np.asarray(payoff(db, dqv), dtype=float), db.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        k, jj = int(nodes.k[nodes.valid][i]), int(nodes.j[nodes.valid][i])
        raise LatticeEvaluationError(
            f"payoff not finite at node k={k}, j={jj} (dB={db[i]:.6g}, d<B>={dqv[i]:.6g})",
            node=(k, jj),
        )
    terminal = np.zeros((depth + 1, depth + 1))
    terminal[nodes.valid] = vals
    return float(backward_sweep(terminal, u.q_lo, u.q_hi))


def _check_step(dt, depth):
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive, got {dt}")
    if int(depth) != depth or depth < 1:
        raise ValueError(f"lattice depth must be a positive integer, got {depth}")
