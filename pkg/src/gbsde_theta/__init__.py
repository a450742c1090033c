"""Theta-schemes for BSDEs driven by G-Brownian motion, with a CLT lattice for G-expectations."""

__version__ = "0.1.0"

from .glattice import IncrementPair, UncertaintySpec, lattice_endpoints, lattice_expectation
from .gbsde import GridSpec, ProblemSpec, SchemeParams, convergence_study, select_depth, solve, step_backward
from .numerics import fit_rate, fixed_point, spline_build, spline_eval
from .oracle import oracle_expectation
from .problems import example1, example2, trivial_cases
