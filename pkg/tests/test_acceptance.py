"""Exit criteria for the solver and the lattice engine.

Each test records one PASS/FAIL line, printed in the terminal summary.
The convergence studies take a few minutes in total.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from gbsde_theta.gbsde import GridSpec, ProblemSpec, SchemeParams, convergence_study, solve
from gbsde_theta.glattice import UncertaintySpec, lattice_expectation
from gbsde_theta.numerics import fit_rate
from gbsde_theta.oracle import oracle_expectation
from gbsde_theta.problems import example1, example2, trivial_cases

NS = [8, 16, 32, 64, 128]
TABLE1_EXPLICIT = [8.10e-3, 4.00e-3, 2.00e-3, 1.00e-3, 4.84e-4]


def _errors(table):
    return ", ".join(f"{e:.2e}" for e in table.errors)


def test_c1_table1_explicit(report):
    t0 = time.perf_counter()
    table = convergence_study(example1(0.25).spec, GridSpec(), SchemeParams(0.0, 0.0, depth_tol=1e-5), NS)
    elapsed = time.perf_counter() - t0
    e128 = table.errors[-1]
    ok = 0.85 <= table.rate <= 1.15 and 4.84e-4 / 3 <= e128 <= 3 * 4.84e-4 and elapsed <= 600
    report("C1 Table 1 explicit", ok,
           f"CR={table.rate:.3f} in [0.85,1.15], e(128)={e128:.2e} within x3 of 4.84e-4, {elapsed:.1f}s; M={table.depths}; errors {_errors(table)}")
    assert ok


@pytest.mark.parametrize("theta,paper", [((1.0, 1.0), 0.526), ((0.5, 1.0), 0.501)])
def test_c2_half_order(theta, paper, report):
    table = convergence_study(example1(0.25).spec, GridSpec(), SchemeParams(*theta), NS)
    ok = 0.35 <= table.rate <= 0.65
    report(f"C2 half order theta={theta}", ok, f"CR={table.rate:.3f} in [0.35,0.65] (paper {paper}); errors {_errors(table)}")
    assert ok


@pytest.mark.parametrize("s2,paper", [(0.25, 0.994), (0.5, 0.984), (0.75, 0.960)])
def test_c3_first_order_theta2_zero(s2, paper, report):
    table = convergence_study(example1(s2).spec, GridSpec(), SchemeParams(0.5, 0.0), NS)
    ok = 0.8 <= table.rate <= 1.2
    report(f"C3 first order sigma2={s2}", ok, f"CR={table.rate:.3f} in [0.8,1.2] (paper {paper}); errors {_errors(table)}")
    assert ok


def test_c4_classical_limit(report):
    # fixed depth: an N-dependent depth mixes lattice and time error
    table = convergence_study(example2(1.0).spec, GridSpec(), SchemeParams(0.5, 0.5, lattice_depth=16), NS)
    e128 = table.errors[-1]
    ok = 0.85 <= table.rate <= 1.25 and e128 <= 2e-4
    report("C4 classical limit", ok, f"CR={table.rate:.3f} in [0.85,1.25] (paper 1.066), |Y0-0.5|(128)={e128:.2e} <= 2e-4")
    assert ok


def test_c5_rate_fitter_on_published_errors(report):
    slope = fit_rate(NS, TABLE1_EXPLICIT).slope
    ok = abs(slope - 1.013) <= 0.05
    report("C5 rate fitter", ok, f"slope={slope:.4f} vs 1.013 +- 0.05")
    assert ok


def _random_payoff(rng):
    a = rng.normal(size=6)
    w = rng.uniform(0.2, 3.0, size=2)

    def payoff(b, q):
        return (a[0] + a[1] * b + a[2] * b * b + a[3] * np.sin(w[0] * b) * (1 + q)
                + a[4] * np.exp(-w[1] * b * b) + a[5] * q * np.cos(b))
    return payoff


def test_c6_oracle_equivalence(report):
    rng = np.random.default_rng(20240601)
    payoffs = [_random_payoff(rng) for _ in range(200)]
    t0 = time.perf_counter()
    worst = 0.0
    for s2 in (0.25, 0.5, 1.0):
        u = UncertaintySpec(s2)
        for f in payoffs:
            for depth in range(1, 6):
                lat = lattice_expectation(f, 1.0, depth, u)
                ref = oracle_expectation(f, 1.0, depth, u)
                worst = max(worst, abs(lat - ref))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed <= 60
    report("C6 oracle equivalence", ok, f"max |lattice-oracle|={worst:.2e} <= 1e-12 over 3000 cases, {elapsed:.1f}s <= 60s")
    assert ok


def test_c7_sublinear_axioms(report):
    rng = np.random.default_rng(7)
    depth, dt = 20, 1.0
    worst = {"constant": 0.0, "monotone": 0.0, "subadditive": 0.0, "homogeneous": 0.0}
    for _ in range(60):
        u = UncertaintySpec(float(rng.choice([0.1, 0.25, 0.5, 0.75, 1.0])))
        E = lambda h: lattice_expectation(h, dt, depth, u)
        f, g = _random_payoff(rng), _random_payoff(rng)
        c = float(rng.normal() * 10)
        worst["constant"] = max(worst["constant"], abs(E(lambda b, q: c) - c))
        bump = _random_payoff(rng)
        worst["monotone"] = max(worst["monotone"], E(f) - E(lambda b, q: f(b, q) + np.abs(bump(b, q))))
        worst["subadditive"] = max(worst["subadditive"], E(lambda b, q: f(b, q) + g(b, q)) - E(f) - E(g))
        lam = float(rng.uniform(0.01, 50))
        ef = E(f)
        worst["homogeneous"] = max(worst["homogeneous"], abs(E(lambda b, q: lam * f(b, q)) - lam * ef) / max(abs(lam * ef), 1.0))
    ok = worst["constant"] == 0.0 and all(worst[k] <= 1e-12 for k in ("monotone", "subadditive", "homogeneous"))
    report("C7 sublinear axioms", ok, ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))
    assert ok


def test_c8_moment_identities(report):
    checks = []
    for depth in (1, 5, 20, 60):
        for u in (UncertaintySpec(0.25), UncertaintySpec(0.5), UncertaintySpec(0.3, 2.0)):
            dt = 0.37
            hi = lattice_expectation(lambda b, q: b * b, dt, depth, u)
            lo = -lattice_expectation(lambda b, q: -b * b, dt, depth, u)
            checks.append(abs(hi - u.sigma_hi_sq * dt) <= 1e-9 and abs(lo - u.sigma_lo_sq * dt) <= 1e-9)
    skew = lattice_expectation(lambda b, q: b ** 3, 1.0, 20, UncertaintySpec(0.5))
    sym = lattice_expectation(lambda b, q: b ** 3, 1.0, 20, UncertaintySpec(1.0))
    ok = all(checks) and skew > 0 and abs(sym) <= 1e-12
    report("C8 moment identities", ok, f"variance bounds {sum(checks)}/{len(checks)}, E[dB^3]={skew:.4f} > 0 (sigma2=0.5), {sym:.1e} (sigma2=1)")
    assert ok


def test_c9_stability(report):
    zero = lambda t, y: np.zeros_like(np.asarray(y, dtype=float))
    base = ProblemSpec(f=zero, g=zero, terminal=lambda x: np.sin(x) + 0.2 * x * x, uncertainty=UncertaintySpec(0.25))
    params = SchemeParams(0.5, 0.5, n_steps=16, lattice_depth=8)
    r0 = solve(base, GridSpec(), params)
    shift_err = 0.0
    for delta in (1e-3, 1e-2):
        shifted = replace(base, terminal=lambda x, d=delta: np.sin(x) + 0.2 * x * x + d)
        shift_err = max(shift_err, float(np.max(np.abs(solve(shifted, GridSpec(), params).y_grid_t0 - r0.y_grid_t0 - delta))))

    ratios = []
    for entry in (example1(0.25), example2(0.25)):
        spec = entry.spec
        bound = 3 * math.exp(3 * spec.lipschitz_bound * spec.horizon)
        y0 = solve(spec, GridSpec(), params).y0_at_origin
        for delta in (1e-3, 1e-2):
            shifted = replace(spec, terminal=lambda x, d=delta, phi=spec.terminal: phi(x) + d)
            change = abs(solve(shifted, GridSpec(), params).y0_at_origin - y0)
            ratios.append(change / (bound * delta))
    ok = shift_err <= 1e-12 and max(ratios) <= 1.0
    report("C9 stability", ok, f"constant shift error {shift_err:.1e} <= 1e-12, worst change/bound {max(ratios):.2e} <= 1")
    assert ok


def test_c10_exact_cases(report):
    errs = {}
    for entry in trivial_cases(0.25):
        res = solve(entry.spec, GridSpec(), SchemeParams(n_steps=8))
        errs[entry.id] = abs(res.y0_at_origin - entry.spec.exact_y0)
    ok = max(errs.values()) <= 1e-9
    report("C10 exact cases", ok, ", ".join(f"{k}={v:.1e}" for k, v in errs.items()) + " <= 1e-9")
    assert ok
