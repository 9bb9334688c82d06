"""Fully discrete semi-Lagrangian value iteration.

Each step updates every node i to

    min over candidate velocities xi of
        P1-interpolate(u, x_i - xi * h) + h * conjugate(x_i, t, xi)

with the candidate set a uniform grid on the admissible velocity ball,
optionally polished by a local golden-section descent.  Foot points that
leave the padded box are clamped to it and counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import List, Optional

import numpy as np

from . import diagnostics
from .errors import EmptyCandidateSet
from .hamiltonians import (
    HamiltonianModel,
    LinearAtInfinity,
    legendre_transform,
    xi_search_radius,
)
from .lattice import LatticeField, interpolate_many

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class HjSolverConfig:
    h: float
    N: int
    xi_grid_points: int = 21
    xi_refine: bool = True
    xi_refine_tol: float = 1e-8  # bracket width in xi at which the polish stops
    record_argmin: bool = False

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("time step must be positive")
        if self.N < 0:
            raise ValueError("step count must be nonnegative")
        if self.xi_grid_points < 3 or self.xi_grid_points % 2 == 0:
            raise ValueError("xi_grid_points must be odd and at least 3 (0 must be a grid point)")


@dataclass
class StepDiagnostics:
    n: int
    t: float
    sup_norm: float
    lipschitz: float
    semiconcavity: float
    time_diff: float
    xi_radius: float
    clamped: int


@dataclass
class HjSolution:
    fields: List[LatticeField]
    config: HjSolverConfig
    steps: List[StepDiagnostics] = dc_field(default_factory=list)
    argmins: Optional[List[np.ndarray]] = None

    @property
    def spec(self):
        return self.fields[0].spec

    def constants(self) -> dict:
        """Measured analogues of the uniform bounds: sup norm, Lipschitz
        constant, and time-Lipschitz constant of the iterates."""
        c0 = max(s.sup_norm for s in self.steps)
        c1 = max(s.lipschitz for s in self.steps)
        c2 = max((s.time_diff / self.config.h for s in self.steps if s.n > 0), default=0.0)
        return {"C0": c0, "C1": c1, "C2": c2}


def _interior_stats(u: LatticeField):
    spec = u.spec
    mask = spec.interior_mask().reshape(spec.shape)
    vals = u.values.reshape(spec.shape)
    sup = float(np.max(np.abs(vals[mask])))
    lip = 0.0
    for ax in range(spec.dim):
        d = np.abs(np.diff(vals, axis=ax)) / spec.k
        m = np.logical_and(np.take(mask, np.arange(mask.shape[ax] - 1), axis=ax),
                           np.take(mask, np.arange(1, mask.shape[ax]), axis=ax))
        if np.any(m):
            lip = max(lip, float(np.max(d[m])))
    return sup, lip


def _candidates(model: HamiltonianModel, radius: float, m: int) -> np.ndarray:
    """Uniform candidate grid on the admissible ball, ordered so that ties
    resolve to the smallest |xi| first, then lexicographically."""
    axis = np.linspace(-radius, radius, m)
    axis[m // 2] = 0.0
    if model.dim == 1:
        xs = axis.reshape(-1, 1)
    else:
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        xs = np.column_stack([gx.ravel(), gy.ravel()])
        if isinstance(model.growth, LinearAtInfinity):
            xs = xs[np.linalg.norm(xs, axis=1) <= model.growth.K * (1.0 + 1e-12)]
    norms = np.linalg.norm(xs, axis=1)
    order = np.lexsort(tuple(xs[:, ax] for ax in reversed(range(model.dim))) + (norms,))
    return xs[order]


def _objective(u, nodes, t, model, h, xi):
    """Value of the update objective at per-node velocities xi (n, d)."""
    feet = nodes - h * np.asarray(xi, dtype=float)
    vals, clamped = interpolate_many(u, feet, clamp=True)
    return vals + h * legendre_transform(model, nodes, t, xi), clamped


def _golden_polish(u, nodes, t, model, h, xi0, delta, radius, tol, best_vals):
    """Vectorized per-node golden-section descent around the grid argmin.

    The bracket is the grid argmin plus/minus one grid spacing, clipped
    to the admissible ball (axis-aligned for d=2, where the descent runs
    one coordinate at a time).
    """
    xi = np.array(xi0, dtype=float)
    vals = np.array(best_vals, dtype=float)
    clamped = 0
    dim = nodes.shape[1]
    sweeps = 1 if dim == 1 else 2
    for _ in range(sweeps):
        for ax in range(dim):
            lo = np.clip(xi[:, ax] - delta, -radius, radius)
            hi = np.clip(xi[:, ax] + delta, -radius, radius)
            c = hi - _GOLDEN * (hi - lo)
            d = lo + _GOLDEN * (hi - lo)

            def f(s):
                nonlocal clamped
                q = xi.copy()
                q[:, ax] = s
                v, cl = _objective(u, nodes, t, model, h, q)
                clamped += cl
                return v

            fc, fd = f(c), f(d)
            n_iter = int(math.ceil(math.log(max(2.0 * delta / tol, 2.0)) / math.log(1.0 / _GOLDEN)))
            for _ in range(n_iter):
                left = fc <= fd  # keep [lo, d] where True, [c, hi] where False
                hi = np.where(left, d, hi)
                lo = np.where(left, lo, c)
                d_new = np.where(left, c, lo + _GOLDEN * (hi - lo))
                c_new = np.where(left, hi - _GOLDEN * (hi - lo), d)
                fe = f(np.where(left, c_new, d_new))
                fc, fd = np.where(left, fe, fd), np.where(left, fc, fe)
                c, d = c_new, d_new
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            better = fm < vals
            xi[better, ax] = mid[better]
            vals = np.where(better, fm, vals)
    return xi, vals, clamped


def sl_step(u: LatticeField, t: float, model: HamiltonianModel, cfg: HjSolverConfig) -> LatticeField:
    """One value-iteration step; returns the new nodal field."""
    out, _info = _sl_step(u, t, model, cfg)
    return out


def _sl_step(u, t, model, cfg):
    spec = u.spec
    nodes = spec.nodes()
    sup_u, _ = _interior_stats(u)
    hstar0 = legendre_transform(model, nodes, t, np.zeros(spec.dim))
    sup_hstar0 = float(np.max(np.abs(hstar0)))
    corners = np.array(np.meshgrid(*[[lo, hi] for lo, hi in zip(spec.box_lo, spec.box_hi)],
                                   indexing="ij")).reshape(spec.dim, -1).T
    anchors = np.vstack([corners, np.zeros((1, spec.dim))])
    radius = xi_search_radius(model, float(np.max(np.abs(u.values))), sup_hstar0, cfg.h,
                              anchors=anchors, t=t)

    cands = _candidates(model, radius, cfg.xi_grid_points)
    best = np.full(spec.n_nodes, np.inf)
    best_xi = np.zeros((spec.n_nodes, spec.dim))
    clamped = 0
    any_finite = False
    for xi in cands:
        hs = legendre_transform(model, nodes, t, xi)
        if not np.any(np.isfinite(hs)):
            continue
        any_finite = True
        feet = nodes - cfg.h * xi
        vals, cl = interpolate_many(u, feet, clamp=True)
        clamped += cl
        vals = vals + cfg.h * hs
        improve = vals < best
        best[improve] = vals[improve]
        best_xi[improve] = xi
    if not any_finite:
        raise EmptyCandidateSet(
            "no candidate velocity has a finite conjugate; check the growth class"
        )

    if cfg.xi_refine and len(cands) > 1:
        delta = 2.0 * radius / (cfg.xi_grid_points - 1)
        best_xi, best, cl = _golden_polish(
            u, nodes, t, model, cfg.h, best_xi, delta, radius, cfg.xi_refine_tol, best
        )
        clamped += cl

    info = {"clamped": clamped, "xi_radius": radius, "argmin": best_xi}
    return LatticeField(spec, best), info


def solve(u0: LatticeField, model: HamiltonianModel, cfg: HjSolverConfig) -> HjSolution:
    """Run N value-iteration steps from the projected initial data.

    Per-step diagnostics record the interior sup norm, nodal Lipschitz
    estimate, discrete second-difference (semiconcavity) constant, step
    increment, velocity search radius, and clamp count.
    """
    sol = HjSolution(fields=[u0], config=cfg,
                     argmins=[] if cfg.record_argmin else None)
    sup, lip = _interior_stats(u0)
    sol.steps.append(StepDiagnostics(
        n=0, t=0.0, sup_norm=sup, lipschitz=lip,
        semiconcavity=diagnostics.discrete_semiconcavity_constant(u0),
        time_diff=0.0, xi_radius=0.0, clamped=0,
    ))
    u = u0
    for n in range(cfg.N):
        t = n * cfg.h
        u_next, info = _sl_step(u, t, model, cfg)
        if cfg.record_argmin:
            sol.argmins.append(info["argmin"])
        sup, lip = _interior_stats(u_next)
        mask = u0.spec.interior_mask()
        sol.steps.append(StepDiagnostics(
            n=n + 1, t=t + cfg.h, sup_norm=sup, lipschitz=lip,
            semiconcavity=diagnostics.discrete_semiconcavity_constant(u_next),
            time_diff=float(np.max(np.abs(u_next.values[mask] - u.values[mask]))),
            xi_radius=info["xi_radius"], clamped=info["clamped"],
        ))
        sol.fields.append(u_next)
        u = u_next
    return sol
