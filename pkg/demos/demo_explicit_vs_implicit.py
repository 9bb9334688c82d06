"""Implicit versus explicit Euler characteristics near a compressive kink.

Particles seeded symmetrically around the kink of u = -|x| should contract
monotonically.  The backward Euler update inherits the one-sided Lipschitz
stability of the mollified gradient, while the forward update lets nearby
pairs separate before they contract.  The script evolves both and prints
the maximal pair separation over time.
"""

import argparse

import numpy as np

import semilag as sl


def pair_spread(states, n):
    x = states[n][:, 0]
    return float(np.max(np.abs(x[:, None] - x[None, :])))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=0.02, help="time step")
    args = ap.parse_args()

    h = args.h
    k = 0.005
    eps = 0.15
    spec = sl.make_spec(1, k, [-2.0], [2.0], 1.0)
    model = sl.schrodinger(1)
    u0 = sl.project(spec, lambda x: -np.abs(x[:, 0]))
    sol = sl.solve(u0, model, sl.HjSolverConfig(h=h, N=10))

    fcfg = sl.make_flow_config(model, h, eps, 1.0, 1)
    seeds = np.array([[-0.04], [-0.01], [0.01], [0.04]])
    imp = sl.evolve(seeds, sol, model, fcfg)
    exp = sl.evolve(seeds, sol, model, fcfg, explicit=True)

    print(f"contraction guard C'' h / eps = {fcfg.contraction_guard:.3f} (must stay < 1)")
    print("   n    implicit spread   explicit spread")
    for n in range(imp.n_levels + 1):
        print(f"  {n:>2d}   {pair_spread(imp.states, n):<16.6e}  {pair_spread(exp.states, n):.6e}")

    d0 = pair_spread(imp.states, 0)
    print(f"initial spread {d0:.3e}; the implicit spread never exceeds it,")
    print("the explicit spread may overshoot by O(sqrt(h)) before contracting")


if __name__ == "__main__":
    main()
