#!/usr/bin/env python3
"""Rerun the Example 1 / Example 2 error tables and print them in the published layout.

    python scripts/reproduce_tables.py              # both tables, every row
    python scripts/reproduce_tables.py --example 1 --sigma2 0.25

Example 1 rows use the adaptive lattice depth; Example 2 uses a fixed depth
(--depth2, default 16) so the lattice error scales with dt like the time error.
"""

import argparse
import logging
import time

from gbsde_theta.gbsde import GridSpec, SchemeParams, convergence_study
from gbsde_theta.problems import example1, example2

NS = [8, 16, 32, 64, 128]
ROWS = {
    1: [(0, 0), (0.5, 0), (1, 0), (0, 0.5), (0.5, 1), (1, 1)],
    2: [(0, 0), (0.5, 0), (0.75, 0), (0.25, 0.75), (0.5, 0.5), (0.15, 1)],
}
SIGMAS = {1: [0.25, 0.5, 0.75], 2: [0.25, 1.0]}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--example", type=int, choices=[1, 2])
    ap.add_argument("--sigma2", type=float)
    ap.add_argument("--depth2", type=int, default=16)
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    for ex in [args.example] if args.example else [1, 2]:
        for s2 in [args.sigma2] if args.sigma2 else SIGMAS[ex]:
            print(f"\nExample {ex}, sigma^2 = {s2}")
            print(f"{'theta1':>7} {'theta2':>7} " + " ".join(f"{n:>9}" for n in NS) + "      CR    secs")
            for th1, th2 in ROWS[ex]:
                entry = (example1 if ex == 1 else example2)(s2)
                depth = "auto" if ex == 1 else args.depth2
                t0 = time.perf_counter()
                tab = convergence_study(entry.spec, GridSpec(), SchemeParams(th1, th2, lattice_depth=depth), NS)
                cells = " ".join(f"{e:9.2E}" for e in tab.errors)
                rate = f"{tab.rate:6.3f}" if tab.rate is not None else "   n/a"
                print(f"{th1:7.2f} {th2:7.2f} {cells}  {rate}  {time.perf_counter() - t0:6.1f}", flush=True)


if __name__ == "__main__":
    main()
