"""Command-line run orchestration.

Subcommands: ``solve-hj`` (value iteration only), ``solve-system``
(value iteration, characteristics, measure transport), ``study``
(refinement study with slaved lattice and smoothing parameters).  All
numeric artifacts are CSV; plots are static SVG; every run writes a
reproducibility manifest.  Exit codes: 0 success, 2 configuration
error, 3 numerical guard failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from typing import Optional

import numpy as np

from . import diagnostics, flow as flow_mod, hj, measure as measure_mod, plots
from .config import (
    RunConfig,
    build_measure,
    build_model,
    build_u0,
    exact_gradient,
    exact_solution,
    load_config,
)
from .errors import ConfigError, NoContraction, SemilagError
from .hamiltonians import HamiltonianModel
from .lattice import LatticeField, field_to_csv, make_spec, project
from .mollify import SmoothedField

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3


def _version() -> str:
    try:
        from importlib.metadata import version

        return version("semilag")
    except Exception:
        return "unknown"


def _write_manifest(path, cfg: RunConfig, constants: dict, warnings: dict):
    with open(path, "w") as fh:
        fh.write("[config]\n")
        for key in sorted(cfg.raw):
            fh.write(f"{key} = {cfg.raw[key]}\n")
        fh.write("\n[constants]\n")
        for key in sorted(constants):
            fh.write(f"{key} = {constants[key]:.17g}\n")
        fh.write("\n[warnings]\n")
        for key in sorted(warnings):
            fh.write(f"{key} = {warnings[key]}\n")
        fh.write("\n[versions]\n")
        fh.write(f"semilag = {_version()}\n")
        fh.write(f"numpy = {np.__version__}\n")
        import scipy

        fh.write(f"scipy = {scipy.__version__}\n")


def _write_step_diagnostics(path, sol: hj.HjSolution):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["n", "t", "sup_norm", "lipschitz", "semiconcavity",
                     "time_diff", "xi_radius", "clamped"])
        for s in sol.steps:
            wr.writerow([s.n, f"{s.t:.17g}", f"{s.sup_norm:.17g}", f"{s.lipschitz:.17g}",
                         f"{s.semiconcavity:.17g}", f"{s.time_diff:.17g}",
                         f"{s.xi_radius:.17g}", s.clamped])


def _run_hj(cfg: RunConfig, model: HamiltonianModel, k: Optional[float] = None,
            h: Optional[float] = None, N: Optional[int] = None):
    spec = make_spec(cfg.dim, k if k is not None else cfg.k,
                     [cfg.box_lo] * cfg.dim, [cfg.box_hi] * cfg.dim, cfg.padding)
    u0 = project(spec, build_u0(cfg))
    solver_cfg = hj.HjSolverConfig(
        h=h if h is not None else cfg.h,
        N=N if N is not None else cfg.N,
        xi_grid_points=cfg.xi_points,
        xi_refine=cfg.xi_refine,
        record_argmin=cfg.record_argmin,
    )
    return hj.solve(u0, model, solver_cfg)


def _final_field_plot(path, sol: hj.HjSolution, exact, T: float):
    if sol.spec.dim != 1:
        return
    pts = sol.spec.nodes()
    mask = sol.spec.interior_mask()
    x = pts[mask, 0]
    series = {"computed": (x, sol.fields[-1].values[mask])}
    if exact is not None:
        series["exact"] = (x, exact(pts[mask], T))
    plots.line_plot(path, series, title="value function at final time",
                    xlabel="x", ylabel="u")


def cmd_solve_hj(cfg: RunConfig, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    model = build_model(cfg)
    sol = _run_hj(cfg, model)
    field_to_csv(sol.fields[-1], os.path.join(out_dir, "final_field.csv"))
    _write_step_diagnostics(os.path.join(out_dir, "diagnostics.csv"), sol)
    exact = exact_solution(cfg)
    _final_field_plot(os.path.join(out_dir, "final_field.svg"), sol, exact, cfg.T)
    constants = sol.constants()
    constants["semiconcavity_final"] = sol.steps[-1].semiconcavity
    if exact is not None:
        constants["sup_error"] = diagnostics.sup_error(
            sol.fields[-1], lambda p: exact(p, cfg.T))
        with open(os.path.join(out_dir, "error_summary.csv"), "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["T", "sup_error"])
            wr.writerow([f"{cfg.T:.17g}", f"{constants['sup_error']:.17g}"])
    warnings = {"clamped_feet": sum(s.clamped for s in sol.steps)}
    _write_manifest(os.path.join(out_dir, "manifest.txt"), cfg, constants, warnings)
    return EXIT_OK


def _check_epsilon(eps: float, k: float):
    if eps < 2.0 * k:
        raise ConfigError(
            f"smoothing radius eps={eps:g} violates the mollifier resolution rule "
            f"eps >= 2k (k={k:g}); raise mollify.epsilon or refine the time step"
        )


def _osl_prepass(cfg: RunConfig, model: HamiltonianModel, u0_field: LatticeField,
                 eps: float, h: float) -> float:
    """Estimated one-sided Lipschitz constant of the initial velocity field.

    The flow theory needs C'h < 1; a violation is a numerical-guard
    failure, not a configuration error.
    """
    sf = SmoothedField(u0_field, eps)
    rng = np.random.default_rng(cfg.seed)
    pairs = diagnostics.sample_pairs(u0_field.spec, 512, u0_field.spec.k, rng)
    c_prime = diagnostics.osl_constant(sf, model, pairs, u0_field.spec.k)
    if c_prime * h >= 1.0:
        raise NoContraction(
            f"one-sided Lipschitz guard C'h = {c_prime * h:.3g} >= 1 on the initial "
            "velocity field; reduce the time step",
            observed_factor=c_prime * h,
        )
    return c_prime


def _transport(cfg: RunConfig, model: HamiltonianModel, sol: hj.HjSolution,
               eps: float, h: float, times):
    """Evolve the measure support and push the weights to the given times.

    Returns (m0, measures at the requested times, ensemble, constants).
    """
    spec = sol.spec
    m0_desc = build_measure(cfg)
    if m0_desc is None:
        raise ConfigError("key 'initial.measure': solve-system needs an initial measure")
    m0 = measure_mod.project_measure(spec, m0_desc)

    u0_stats_lip = sol.steps[0].lipschitz
    c_prime = _osl_prepass(cfg, model, sol.fields[0], eps, h)
    fcfg = flow_mod.make_flow_config(model, h, eps, u0_stats_lip, cfg.dim,
                                     fp_tol=cfg.fp_tol, fp_max_iter=cfg.fp_max_iter)
    seeds = m0.positions()
    ens = flow_mod.evolve(seeds, sol, model, fcfg, seed_indices=m0.indices)

    out = []
    for t in times:
        n = int(round(t / h))
        mat = measure_mod.build_pushforward(ens, n, spec)
        out.append((t, measure_mod.pushforward(m0, mat)))
    constants = {
        "C_prime": c_prime,
        "C_double_prime_guard": fcfg.contraction_guard,
        "max_speed": float(np.max(np.linalg.norm(ens.velocities, axis=2)))
        if ens.velocities.size else 0.0,
    }
    return m0, out, ens, constants


def cmd_solve_system(cfg: RunConfig, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    model = build_model(cfg)
    eps = cfg.epsilon()
    _check_epsilon(eps, cfg.k)
    sol = _run_hj(cfg, model)
    m0, measures, ens, fconst = _transport(cfg, model, sol, eps, cfg.h, cfg.output_times)

    _write_step_diagnostics(os.path.join(out_dir, "diagnostics.csv"), sol)
    field_to_csv(sol.fields[-1], os.path.join(out_dir, "final_field.csv"))
    radius = eps + 2.0 * sol.spec.k
    with open(os.path.join(out_dir, "mass_ledger.csv"), "w", newline="") as fh, \
            open(os.path.join(out_dir, "concentration.csv"), "w", newline="") as fh2:
        wr = csv.writer(fh)
        wr.writerow(["t", "mass", "drift"])
        wr2 = csv.writer(fh2)
        wr2.writerow(["t", "radius", "near_origin_mass", "reference_2t", "relative_error"])
        for t, m in measures:
            total = measure_mod.mass(m)
            wr.writerow([f"{t:.17g}", f"{total:.17g}", f"{total - m.initial_mass:.17g}"])
            near = total - measure_mod.tail_mass(m, radius)
            ref = 2.0 * t
            rel = abs(near - ref) / ref if ref > 0 else float("nan")
            wr2.writerow([f"{t:.17g}", f"{radius:.17g}", f"{near:.17g}",
                          f"{ref:.17g}", f"{rel:.17g}"])
            measure_mod.measure_to_csv(
                m, os.path.join(out_dir, f"measure_n{int(round(t / cfg.h))}.csv"))
    flow_mod.trajectories_to_csv(ens, os.path.join(out_dir, "trajectories.csv"))

    constants = sol.constants()
    constants.update(fconst)
    constants["semiconcavity_final"] = sol.steps[-1].semiconcavity
    warnings = {"clamped_feet": sum(s.clamped for s in sol.steps)}
    _write_manifest(os.path.join(out_dir, "manifest.txt"), cfg, constants, warnings)
    return EXIT_OK


def cmd_convergence_study(cfg: RunConfig, out_dir: str, levels: Optional[int] = None) -> int:
    os.makedirs(out_dir, exist_ok=True)
    levels = levels if levels is not None else cfg.study_levels
    if levels < 1:
        raise ConfigError("flag '--levels': must be at least 1")
    model = build_model(cfg)
    exact = exact_solution(cfg)
    grad = exact_gradient(cfg)
    want_measure = cfg.measure_raw != "none"

    rows = []
    prev_measure = None
    probes = None
    for lev in range(levels):
        h = cfg.h / 2 ** lev
        k = cfg.slaved_k(h)
        eps = cfg.epsilon(h)
        _check_epsilon(eps, k)
        N = max(int(round(cfg.T / h)), 1)
        sol = _run_hj(cfg, model, k=k, h=h, N=N)
        row = {"level": lev, "h": h, "k": k, "eps": eps,
               "sup_error": float("nan"), "gradient_error": float("nan"),
               "weak_star_prev": float("nan")}
        if exact is not None:
            row["sup_error"] = diagnostics.sup_error(
                sol.fields[-1], lambda p: exact(p, cfg.T))
        if grad is not None:
            sf = SmoothedField(sol.fields[-1], eps)
            mask = sol.spec.interior_mask()
            samples = sol.spec.nodes()[mask]
            kinks = [np.zeros(cfg.dim)] if cfg.u0_name == "neg-abs" else None
            row["gradient_error"] = diagnostics.gradient_error(
                sf, lambda p: grad(p, cfg.T), samples, kinks=kinks,
                standoff=eps + 2.0 * k)
        if want_measure:
            _, measures, _, _ = _transport(cfg, model, sol, eps, h, [cfg.T])
            m = measures[0][1]
            if probes is None:
                probes = measure_mod.probe_dictionary(sol.spec)
            if prev_measure is not None:
                row["weak_star_prev"] = measure_mod.weak_star_distance(
                    prev_measure, m, probes)
            prev_measure = m
        rows.append(row)

    cols = ["level", "h", "k", "eps", "sup_error", "gradient_error", "weak_star_prev"]
    with open(os.path.join(out_dir, "rates.csv"), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(cols)
        for row in rows:
            wr.writerow([row["level"]] + [f"{row[c]:.17g}" for c in cols[1:]])

    constants = {}
    sup_pairs = [(r["h"], r["sup_error"]) for r in rows if math.isfinite(r["sup_error"])]
    if len(sup_pairs) >= 3:
        constants["sup_error_slope"] = diagnostics.rate_regression(sup_pairs)
    series = {}
    if sup_pairs:
        series["sup error"] = ([p[0] for p in sup_pairs], [p[1] for p in sup_pairs])
    ws_pairs = [(r["h"], r["weak_star_prev"]) for r in rows
                if math.isfinite(r["weak_star_prev"]) and r["weak_star_prev"] > 0]
    if ws_pairs:
        series["weak-star gap"] = ([p[0] for p in ws_pairs], [p[1] for p in ws_pairs])
    if series:
        plots.line_plot(os.path.join(out_dir, "rates.svg"), series,
                        title="refinement study", xlabel="h", ylabel="error",
                        logx=True, logy=True)
    _write_manifest(os.path.join(out_dir, "manifest.txt"), cfg, constants, {})
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semilag", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("solve-hj", "solve-system", "study"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="path to the run configuration")
        sp.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (overrides seed)")
        if name == "study":
            sp.add_argument("--levels", type=int, default=None,
                            help="number of refinement levels (overrides study.levels)")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = _replace(cfg, seed=args.seed)
        out_dir = args.out if args.out is not None else cfg.output_dir
        if args.command == "solve-hj":
            return cmd_solve_hj(cfg, out_dir)
        if args.command == "solve-system":
            return cmd_solve_system(cfg, out_dir)
        return cmd_convergence_study(cfg, out_dir, getattr(args, "levels", None))
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoContraction as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except SemilagError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD


def _replace(cfg: RunConfig, **kw) -> RunConfig:
    import dataclasses

    return dataclasses.replace(cfg, **kw)


if __name__ == "__main__":
    sys.exit(main())
