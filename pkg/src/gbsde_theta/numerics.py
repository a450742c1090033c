"""Small numeric helpers: not-a-knot splines, fixed-point iteration, rate fits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline


class SplineError(ValueError):
    pass


class DivergenceError(RuntimeError):
    """Fixed-point iteration did not settle within the iteration budget."""

    def __init__(self, message, previous, last):
        super().__init__(message)
        self.previous = previous
        self.last = last


class RateFitError(ValueError):
    pass


@dataclass(frozen=True)
class Spline1D:
    knots: np.ndarray
    values: np.ndarray
    _cs: CubicSpline

    @property
    def coefficients(self) -> np.ndarray:
        # shape (4, n-1): highest power first, local variable x - knots[i]
        return self._cs.c

    @property
    def boundary_rule(self) -> str:
        return "not-a-knot"

    def __call__(self, x):
        return spline_eval(self, x)


def spline_build(xs: Sequence[float], ys: Sequence[float]) -> Spline1D:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise SplineError(f"knots and values must be 1-d of equal length, got {xs.shape} and {ys.shape}")
    if xs.size < 4:
        raise SplineError(f"need at least 4 knots, got {xs.size}")
    if not np.all(np.diff(xs) > 0):
        raise SplineError("knots must be strictly increasing")
    if not np.all(np.isfinite(ys)):
        raise SplineError("spline values must be finite")
    cs = CubicSpline(xs, ys, bc_type="not-a-knot", extrapolate=False)
    return Spline1D(knots=xs, values=ys, _cs=cs)


def spline_eval(s: Spline1D, x):
    """Evaluate the spline; outside the knot range extend linearly with the end slope."""
    x = np.asarray(x, dtype=float)
    lo, hi = s.knots[0], s.knots[-1]
    inside = np.clip(x, lo, hi)
    out = s._cs(inside)
    below = x < lo
    above = x > hi
    if below.any():
        out = np.where(below, s.values[0] + s._cs(lo, 1) * (x - lo), out)
    if above.any():
        out = np.where(above, s.values[-1] + s._cs(hi, 1) * (x - hi), out)
    if out.ndim == 0:
        return float(out)
    return out


def fixed_point(fn: Callable, start, tol: float = 1e-12, max_iter: int = 100):
    """Picard iteration y <- fn(y).

    Works on scalars and on numpy arrays; for arrays every component has to
    settle. Returns ``(value, iterations)`` where ``iterations`` counts
    evaluations of ``fn``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    y = start
    for it in range(1, max_iter + 1):
        y_new = fn(y)
        gap = np.max(np.abs(np.asarray(y_new) - np.asarray(y)))
        if not np.isfinite(gap):
            raise DivergenceError(f"non-finite iterate after {it} iterations", y, y_new)
        if gap <= tol:
            return y_new, it
        if it == max_iter:
            break
        y = y_new
    raise DivergenceError(f"no convergence in {max_iter} iterations (last gap {gap:.3e})", y, y_new)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float


def fit_rate(ns: Sequence[int], errors: Sequence[float]) -> RateFit:
    """Least-squares slope of log(error) against log(1/N)."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if ns.size < 2 or ns.shape != errors.shape:
        raise RateFitError("need at least two (N, error) pairs")
    if np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        raise RateFitError("errors must be positive and finite")
    if np.any(ns <= 0):
        raise RateFitError("step counts must be positive")
    x = np.log(1.0 / ns)
    y = np.log(errors)
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(np.sqrt(res[0] / ns.size)) if res.size else 0.0
    return RateFit(float(slope), float(intercept), residual)
