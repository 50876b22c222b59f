#!/usr/bin/env python3
"""Reproduce the time-accuracy tables (scalar and 2D forced runs).

Writes one orders.csv per configuration under --out and prints the tables.
The 2D runs default to the full 128^2 grid; pass --grid 64 for a desk-scale
pass (the exact field is band-limited, so the numbers barely move).
"""

import argparse
import pathlib

from tfmbe import ode_convergence, pde_convergence

NS = [64, 128, 256, 512]


def show(tag, report):
    print(f"== {tag}")
    print("   N     tau_max      error      order")
    for row in report.rows:
        order = "  -  " if row.order != row.order else f"{row.order:5.2f}"
        print(f"{row.n_steps:6d}  {row.tau_max:.3e}  {row.error:.3e}  {order}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/tables")
    ap.add_argument("--grid", type=int, default=128)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    out = pathlib.Path(args.out)

    # smooth data, uniform mesh
    for alpha in (0.1, 0.5, 0.9):
        rep = ode_convergence(alpha, 2.5, NS, gamma=1.0,
                              out_dir=out / f"smooth_a{alpha}")
        show(f"scalar smooth sigma=2.5 alpha={alpha}", rep)

    # reduced regularity, uniform mesh
    for alpha in (0.1, 0.5, 0.9):
        rep = ode_convergence(alpha, 0.8, NS, gamma=1.0,
                              out_dir=out / f"rough_a{alpha}")
        show(f"scalar rough sigma=0.8 alpha={alpha}", rep)

    # graded meshes with random tails
    for alpha in (0.3, 0.7):
        for gamma in (2.0, 4.0, 5.0):
            rep = ode_convergence(alpha, 0.5, NS, gamma=gamma, seed=args.seed,
                                  out_dir=out / f"graded_a{alpha}_g{gamma}")
            show(f"scalar graded sigma=0.5 alpha={alpha} gamma={gamma}", rep)

    # forced growth models
    for model in ("slope", "noslope"):
        for gamma in (3.0, 5.0, 6.0):
            rep = pde_convergence(model, 0.8, 0.4, gamma, NS,
                                  grid_n=args.grid, seed=args.seed,
                                  out_dir=out / f"{model}_g{gamma}")
            show(f"{model} sigma=0.4 alpha=0.8 gamma={gamma}", rep)


if __name__ == "__main__":
    main()
