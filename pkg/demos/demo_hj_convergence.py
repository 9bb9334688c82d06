"""Convergence of the semi-Lagrangian scheme on a quadratic test problem.

Solves u_t + 0.5 |u_x|^2 = 0 with u(x, 0) = 0.5 x^2, whose exact solution
is u(x, t) = x^2 / (2 (1 + t)).  The time step is halved level by level
with the grid step slaved as k = h^2 / 4, and the measured sup errors are
fitted in log-log coordinates.
"""

import argparse
import os

import numpy as np

import semilag as sl


def run_level(h):
    k = h * h / 4.0
    spec = sl.make_spec(1, k, [-2.0], [2.0], 1.0)
    model = sl.schrodinger(1)
    u0 = sl.project(spec, lambda x: 0.5 * x[:, 0] ** 2)
    sol = sl.solve(u0, model, sl.HjSolverConfig(h=h, N=int(round(1.0 / h))))
    err = sl.sup_error(sol.fields[-1], lambda p: p[:, 0] ** 2 / 4.0)
    return k, err


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demo_out_hj", help="output directory")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    steps = [0.2, 0.1, 0.05, 0.025]
    pairs = []
    print("   h         k         sup error")
    for h in steps:
        k, err = run_level(h)
        pairs.append((h, err))
        print(f"  {h:<8.4g}  {k:<8.4g}  {err:.6e}")

    slope = sl.rate_regression(pairs)
    print(f"fitted rate: error ~ h^{slope:.3f}")

    from semilag.plots import line_plot

    svg = os.path.join(args.out, "convergence.svg")
    line_plot(svg, {"sup error": (np.array(steps), np.array([e for _, e in pairs]))},
              title="sup error vs time step", xlabel="h", ylabel="error",
              logx=True, logy=True)
    print(f"wrote {svg}")


if __name__ == "__main__":
    main()
