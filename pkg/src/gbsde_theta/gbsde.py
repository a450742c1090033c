"""Fully discrete theta-scheme for G-BSDEs with Z-free representation.

Backward in time, each grid value is

    Y_i^n = theta1 f(t_n, Y_i^n) dt
            + E^M[ A_i + theta2 g(t_n, Y_i^n) d<B> ],
    A_i   = X (Yhat + (1-theta1) f(t_{n+1}, Yhat) dt + (1-theta2) g(t_{n+1}, Yhat) d<B>),

with Yhat the spline of Y^{n+1} at x_i + dB, X = exp(b dB - b^2 d<B> / 2)
the discount factor, and E^M the lattice sublinear expectation. The implicit
part is solved by Picard iteration started from E^M[A_i].

Only a == 0 is supported. A nonzero a needs a discrete companion walk for the
auxiliary motion with <B, B~>_t = t; X~_i = X_i / q on the same lattice is
the obvious candidate but has not been validated.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .glattice import UncertaintySpec, backward_sweep, lattice_nodes
from .numerics import DivergenceError, RateFit, fit_rate, fixed_point, spline_build

log = logging.getLogger(__name__)

NOISE_FLOOR = 1e-9


class ConfigurationError(ValueError):
    pass


class DiscountOverflowError(ArithmeticError):
    pass


class StepError(RuntimeError):
    """A backward step failed; carries the time level and grid location."""

    def __init__(self, message, t_n=None, x=None, n=None, iterates=None):
        super().__init__(message)
        self.t_n = t_n
        self.x = x
        self.n = n
        self.iterates = iterates


def _zero(t, x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ProblemSpec:
    """A G-BSDE
        Y_t = phi(B_T) + int_t^T f(s, Y_s) + a_s Z_s ds
                       + int_t^T g(s, Y_s) + b_s Z_s d<B>_s - int_t^T Z dB - (K_T - K_t).

    All callables must broadcast over numpy arrays.
    """

    f: Callable
    g: Callable
    terminal: Callable
    horizon: float = 1.0
    uncertainty: UncertaintySpec = field(default_factory=lambda: UncertaintySpec(1.0))
    b: Callable = _zero
    a: Callable = _zero
    exact_y0: Optional[float] = None
    lipschitz_bound: float = 1.0
    name: str = ""

    def with_uncertainty(self, sigma_lo_sq: float, sigma_hi_sq: float = 1.0) -> "ProblemSpec":
        return replace(self, uncertainty=UncertaintySpec(sigma_lo_sq, sigma_hi_sq))


@dataclass(frozen=True)
class GridSpec:
    """Uniform space grid on [-(D+pad), D+pad] containing x = 0.

    ``dx=None`` ties the spacing to the time step and ``pad=None`` uses
    3*sqrt(sigma_hi_sq*T); call :meth:`resolve` to pin both.
    """

    half_width: float = 3.0
    dx: Optional[float] = None
    pad: Optional[float] = None

    def resolve(self, problem: ProblemSpec, dt: float) -> "GridSpec":
        dx = dt if self.dx is None else self.dx
        pad = 3.0 * math.sqrt(problem.uncertainty.sigma_hi_sq * problem.horizon) if self.pad is None else self.pad
        return GridSpec(self.half_width, float(dx), float(pad))

    def points(self) -> np.ndarray:
        if self.dx is None or self.pad is None:
            raise ConfigurationError("grid not resolved; call GridSpec.resolve first")
        if not self.dx > 0 or self.half_width <= 0 or self.pad < 0:
            raise ConfigurationError(f"invalid grid {self}")
        n = int(math.ceil((self.half_width + self.pad) / self.dx - 1e-9))
        if 2 * n + 1 < 4:
            raise ConfigurationError("grid needs at least 4 points")
        return self.dx * np.arange(-n, n + 1)


@dataclass(frozen=True)
class SchemeParams:
    theta1: float = 0.0
    theta2: float = 0.0
    n_steps: int = 8
    lattice_depth: Union[int, str] = "auto"
    picard_tol: float = 1e-12
    picard_max_iter: int = 100
    # adaptive depth policy, used when lattice_depth == "auto"
    depth_tol: float = 1e-5
    depth_start: int = 4
    depth_cap: int = 128

    def __post_init__(self):
        for name in ("theta1", "theta2"):
            th = getattr(self, name)
            if not 0.0 <= th <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {th}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConfigurationError(f"n_steps must be a positive integer, got {self.n_steps}")
        if self.lattice_depth != "auto":
            if isinstance(self.lattice_depth, str) or int(self.lattice_depth) != self.lattice_depth or self.lattice_depth < 1:
                raise ConfigurationError(f"lattice_depth must be 'auto' or a positive integer, got {self.lattice_depth!r}")
        if not self.picard_tol > 0 or self.picard_max_iter < 1:
            raise ConfigurationError("picard_tol must be > 0 and picard_max_iter >= 1")
        if not self.depth_tol > 0 or self.depth_start < 1 or self.depth_cap < self.depth_start:
            raise ConfigurationError("invalid adaptive depth policy")

    @property
    def explicit(self) -> bool:
        return self.theta1 == 0.0 and self.theta2 == 0.0


@dataclass
class SolveResult:
    y0_at_origin: float
    y_grid_t0: np.ndarray
    x_grid: np.ndarray
    picard_iters_max: int
    wall_time: float
    m_used: int
    grid: GridSpec


@dataclass(frozen=True)
class DepthChoice:
    depth: int
    delta: float
    capped: bool
    history: tuple = ()

    def __index__(self):
        return self.depth

    def __int__(self):
        return self.depth


@dataclass
class ErrorTable:
    ns: list
    errors: list
    y0: list
    runtimes: list
    depths: list
    fit: Optional[RateFit]
    below_noise: bool

    @property
    def rate(self) -> Optional[float]:
        return None if self.fit is None else self.fit.slope


def validate(problem: ProblemSpec, params: SchemeParams, x: Optional[np.ndarray] = None):
    if not problem.horizon > 0:
        raise ConfigurationError("horizon must be positive")
    dt = problem.horizon / params.n_steps
    probe_t = np.linspace(0.0, problem.horizon, 5)
    probe_x = np.linspace(-3.0, 3.0, 13) if x is None else x
    for t in probe_t:
        if np.any(np.asarray(problem.a(t, probe_x)) != 0):
            raise ConfigurationError("nonzero a(t, x) is not supported")
    if not params.explicit:
        k = dt * problem.lipschitz_bound * (params.theta1 + params.theta2 * problem.uncertainty.sigma_hi_sq)
        if k >= 1:
            warnings.warn(f"Picard contraction not guaranteed: dt*L*(theta1+theta2)={k:.3g} >= 1", RuntimeWarning)


def discount_factor(b_val, dt, inc=None, *, delta_b=None, delta_qv=None):
    """exp(b dB - b^2 d<B> / 2), the Euler discount over one step (a == 0)."""
    if inc is not None:
        delta_b, delta_qv = inc.delta_b, inc.delta_qv
    b_val = np.asarray(b_val, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.exp(b_val * delta_b - 0.5 * b_val * b_val * delta_qv)
    if not np.all(np.isfinite(out)):
        raise DiscountOverflowError(f"discount factor overflow (b={b_val}, dt={dt})")
    if out.ndim == 0:
        return float(out)
    return out


def _step(y_next, knots, x_eval, t_n, problem, params, depth):
    """One backward step evaluated at ``x_eval``; returns (values, picard iterations)."""
    dt = problem.horizon / params.n_steps
    t_next = t_n + dt
    th1, th2 = params.theta1, params.theta2
    u = problem.uncertainty
    spline = spline_build(knots, y_next)

    nodes = lattice_nodes(dt, depth, u.sigma_hi_sq)
    x_eval = np.asarray(x_eval, dtype=float)
    ends = x_eval[:, None] + nodes.jump * nodes.offsets[None, :]
    y_hat = spline(ends)
    f_hat = problem.f(t_next, y_hat)
    g_hat = problem.g(t_next, y_hat)

    kidx = nodes.k + depth
    dqv = nodes.delta_qv
    y_hat, f_hat, g_hat = y_hat[:, kidx], f_hat[:, kidx], g_hat[:, kidx]
    payoff = y_hat + (1.0 - th1) * dt * f_hat + (1.0 - th2) * g_hat * dqv
    b_i = np.broadcast_to(np.asarray(problem.b(t_n, x_eval), dtype=float), x_eval.shape)
    if np.any(b_i != 0):
        disc = discount_factor(b_i[:, None, None], dt, delta_b=nodes.delta_b, delta_qv=dqv)
        payoff = disc * payoff
    payoff = np.where(nodes.valid, payoff, 0.0)
    if not np.all(np.isfinite(payoff)):
        bad = int(np.argmax(~np.isfinite(payoff).all(axis=(1, 2))))
        raise StepError(f"non-finite node payoff at x={x_eval[bad]:.6g}, t={t_n:.6g}", t_n=t_n, x=float(x_eval[bad]))

    predictor = backward_sweep(payoff, u.q_lo, u.q_hi)
    if params.explicit:
        return predictor, 1

    if th2 == 0.0:
        def implicit(y):
            return th1 * dt * problem.f(t_n, y) + predictor
    else:
        def implicit(y):
            shift = th2 * problem.g(t_n, y)
            return th1 * dt * problem.f(t_n, y) + backward_sweep(payoff + shift[:, None, None] * dqv, u.q_lo, u.q_hi)

    try:
        return fixed_point(implicit, predictor, params.picard_tol, params.picard_max_iter)
    except DivergenceError as err:
        gap = np.abs(np.asarray(err.last) - np.asarray(err.previous))
        gap = np.where(np.isfinite(gap), gap, np.inf)
        i = int(np.argmax(gap))
        raise StepError(
            f"Picard iteration failed at x={x_eval[i]:.6g}, t={t_n:.6g}: {err}",
            t_n=t_n, x=float(x_eval[i]), iterates=(np.asarray(err.previous)[i], np.asarray(err.last)[i]),
        ) from err


def step_backward(y_next, t_n, problem, grid, params, depth=None):
    """Advance grid values from t_{n+1} = t_n + dt back to t_n."""
    x = grid.points()
    y_next = np.asarray(y_next, dtype=float)
    if y_next.shape != x.shape:
        raise ConfigurationError(f"y_next has shape {y_next.shape}, grid has {x.shape}")
    if not np.all(np.isfinite(y_next)):
        raise StepError("y_next contains non-finite values", t_n=t_n)
    if depth is None:
        depth = _fixed_depth(params)
    return _step(y_next, x, x, t_n, problem, params, depth)[0]


def _fixed_depth(params):
    if params.lattice_depth == "auto":
        raise ConfigurationError("lattice_depth is 'auto'; pass an explicit depth or call select_depth")
    return int(params.lattice_depth)


def select_depth(problem, grid, params, t_probe=None, tol_m=None, start=None, cap=None) -> DepthChoice:
    """Smallest M in start, 2*start, ... whose one-step value at x=0 moves by <= tol_m when doubled.

    The probe steps from ``t_probe`` (default: terminal time, terminal data)
    back by one time step.
    """
    tol_m = params.depth_tol if tol_m is None else tol_m
    start = params.depth_start if start is None else start
    cap = params.depth_cap if cap is None else cap
    if not tol_m > 0:
        raise ConfigurationError("tol_m must be positive")
    dt = problem.horizon / params.n_steps
    grid = grid.resolve(problem, dt) if grid.dx is None or grid.pad is None else grid
    x = grid.points()
    t_probe = problem.horizon if t_probe is None else t_probe
    y_probe = np.asarray(problem.terminal(x), dtype=float) if t_probe == problem.horizon else None
    if y_probe is None:
        raise ConfigurationError("depth probing away from the terminal time needs grid data; use t_probe=T")
    origin = np.zeros(1)

    def value(m):
        return float(_step(y_probe, x, origin, t_probe - dt, problem, params, m)[0][0])

    m = start
    prev = value(m)
    history = [(m, prev)]
    delta = math.inf
    while 2 * m <= cap:
        cur = value(2 * m)
        history.append((2 * m, cur))
        delta = abs(cur - prev)
        if delta <= tol_m:
            return DepthChoice(m, delta, False, tuple(history))
        m, prev = 2 * m, cur
    warnings.warn(f"lattice depth cap {cap} reached with delta {delta:.3e} > {tol_m:.3e}", RuntimeWarning)
    return DepthChoice(m, delta, True, tuple(history))


def solve(problem: ProblemSpec, grid: GridSpec, params: SchemeParams) -> SolveResult:
    dt = problem.horizon / params.n_steps
    grid = grid.resolve(problem, dt)
    x = grid.points()
    validate(problem, params, x)
    t0 = time.perf_counter()
    if params.lattice_depth == "auto":
        depth = select_depth(problem, grid, params).depth
    else:
        depth = int(params.lattice_depth)

    y = np.asarray(problem.terminal(x), dtype=float)
    y = np.broadcast_to(y, x.shape).copy()
    iters_max = 0
    for n in range(params.n_steps - 1, -1, -1):
        t_n = n * dt
        try:
            y, iters = _step(y, x, x, t_n, problem, params, depth)
        except StepError as err:
            err.n = n
            raise
        iters_max = max(iters_max, iters)
        log.debug("step n=%d done (picard %d)", n, iters)
    wall = time.perf_counter() - t0

    if not np.all(np.isfinite(y)):
        raise StepError("non-finite values at t=0", t_n=0.0, n=0)
    i0 = int(np.argmin(np.abs(x)))
    return SolveResult(float(y[i0]), y, x, iters_max, wall, depth, grid)


def convergence_study(problem, grid, params_base, n_list: Sequence[int]) -> ErrorTable:
    if problem.exact_y0 is None:
        raise ConfigurationError(f"problem {problem.name or '?'} has no exact Y_0")
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigurationError("n_list must be increasing with at least two entries")
    errors, y0s, runtimes, depths = [], [], [], []
    for n in n_list:
        res = solve(problem, grid, replace(params_base, n_steps=n))
        y0s.append(res.y0_at_origin)
        errors.append(abs(res.y0_at_origin - problem.exact_y0))
        runtimes.append(res.wall_time)
        depths.append(res.m_used)
        log.info("N=%d  M=%d  error=%.3e  (%.1fs)", n, res.m_used, errors[-1], res.wall_time)
    below = max(errors) <= NOISE_FLOOR
    fit = None if below or min(errors) <= 0 else fit_rate(n_list, errors)
    return ErrorTable(n_list, errors, y0s, runtimes, depths, fit, below)
