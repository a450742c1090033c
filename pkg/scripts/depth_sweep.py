#!/usr/bin/env python3
"""How Y0 and its error move with the lattice depth M at fixed N.

    python scripts/depth_sweep.py --problem example2 --sigma2 1 --theta1 .5 --theta2 .5 --N 32
"""

import argparse

from gbsde_theta.gbsde import GridSpec, SchemeParams, select_depth, solve
from gbsde_theta.problems import get_problem

ap = argparse.ArgumentParser()
ap.add_argument("--problem", default="example1")
ap.add_argument("--sigma2", type=float, default=0.25)
ap.add_argument("--theta1", type=float, default=0.0)
ap.add_argument("--theta2", type=float, default=0.0)
ap.add_argument("--N", type=int, default=16)
ap.add_argument("--depths", default="2,4,8,16,32")
args = ap.parse_args()

entry = get_problem(args.problem, args.sigma2)
params = SchemeParams(args.theta1, args.theta2, n_steps=args.N)
choice = select_depth(entry.spec, GridSpec(), params)
print(f"adaptive choice: M={choice.depth} (probe delta {choice.delta:.2e}); probe history {choice.history}")
for m in [int(v) for v in args.depths.split(",")]:
    res = solve(entry.spec, GridSpec(), SchemeParams(args.theta1, args.theta2, n_steps=args.N, lattice_depth=m))
    err = abs(res.y0_at_origin - entry.spec.exact_y0) if entry.spec.exact_y0 is not None else float("nan")
    print(f"M={m:4d}  y0={res.y0_at_origin:.10f}  error={err:.3e}  picard={res.picard_iters_max}  {res.wall_time:.1f}s")
