"""Implicit backward-Euler characteristics driven by the smoothed gradient.

Each step solves Y = X + h a(Y, grad u_eps(Y)) by fixed-point iteration;
the iteration contracts when h times the Lipschitz constant of the
velocity composition stays below one, which the configuration guard
checks up front from the model constants and the smoothing radius.  An
explicit forward-Euler step is provided only for the comparison
experiment showing that explicit characteristic pairs can separate.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .errors import NoContraction
from .hamiltonians import HamiltonianModel, as_points
from .hj import HjSolution
from .mollify import SmoothedField, bump_gradient_l1


def estimate_contraction_constant(model: HamiltonianModel, lip_u: float, dim: int) -> float:
    """Estimate of the constant C with step guard C h / eps < 1.

    The fixed-point map moves by h * Lip_p(a) * |D^2 u_eps|, and the
    smoothed Hessian is bounded by Lip(u) * (L1 norm of the kernel
    gradient) / eps; the eps factor is kept in the guard itself.
    """
    return model.lip_p_velocity * lip_u * bump_gradient_l1(dim)


@dataclass(frozen=True)
class FlowConfig:
    h: float
    eps: float
    fp_tol: float = 1e-12
    fp_max_iter: int = 200
    contraction_guard: float = 0.0  # estimated C'' h / eps; must stay below 1

    def __post_init__(self):
        if not (self.h > 0 and self.eps > 0):
            raise ValueError("step and smoothing radius must be positive")
        if self.contraction_guard >= 1.0:
            raise NoContraction(
                f"contraction guard C''h/eps = {self.contraction_guard:.3g} >= 1; "
                "reduce the time step or increase the smoothing radius",
                observed_factor=self.contraction_guard,
            )


def make_flow_config(model: HamiltonianModel, h: float, eps: float, lip_u: float,
                     dim: int, fp_tol: float = 1e-12, fp_max_iter: int = 200) -> FlowConfig:
    guard = estimate_contraction_constant(model, lip_u, dim) * h / eps
    return FlowConfig(h=h, eps=eps, fp_tol=fp_tol, fp_max_iter=fp_max_iter,
                      contraction_guard=guard)


@dataclass
class CharacteristicEnsemble:
    """Discrete trajectories of the seed points through all time levels.

    ``states`` has shape (N+1, n_seeds, d); ``velocities`` (N, n_seeds, d)
    holds the per-step velocity, so states[n+1] = states[n] + h * velocities[n]
    exactly and linear time interpolation is consistent with the steps.
    """

    seeds: np.ndarray
    h: float
    states: np.ndarray
    velocities: np.ndarray
    seed_indices: Optional[np.ndarray] = None  # lattice node index per seed, if seeded on nodes
    fp_iterations: list = dc_field(default_factory=list)

    @property
    def n_levels(self) -> int:
        return self.states.shape[0] - 1


def implicit_step(x_prev, u_next, model: HamiltonianModel, cfg: FlowConfig) -> np.ndarray:
    """Solve Y = x_prev + h a(Y, grad u_eps(Y)) by fixed-point iteration.

    ``u_next`` needs only a ``gradient(points)`` method (a SmoothedField,
    or any analytic stand-in in tests).  Raises NoContraction with the
    observed contraction factor when the tolerance is not met.
    """
    y, _, _ = _implicit_step_full(x_prev, u_next, model, cfg)
    return y


def _gradient(field, pts):
    try:
        return field.gradient(pts, clamp=True)
    except TypeError:
        return field.gradient(pts)


def _implicit_step_full(x_prev, field, model, cfg, v_guess=None):
    x_prev = as_points(x_prev, model.dim)
    # warm start from the previous step's velocity when available
    y = x_prev.copy() if v_guess is None else x_prev + cfg.h * np.asarray(v_guess)
    y_out = np.empty_like(x_prev)
    vel_out = np.empty_like(x_prev)
    # particles iterate only while unconverged; each converged batch gets
    # one more velocity evaluation at its fixed point so the stored state
    # and velocity stay exactly consistent
    active = np.arange(x_prev.shape[0])
    xa, ya = x_prev, y
    y_old = None
    prev_delta = None
    factor = None
    for it in range(cfg.fp_max_iter):
        vel = model.a(ya, _gradient(field, ya))
        y_new = xa + cfg.h * vel
        dist = np.linalg.norm(y_new - ya, axis=1)
        done = dist <= cfg.fp_tol
        if np.any(done):
            idx = active[done]
            vel_fin = model.a(y_new[done], _gradient(field, y_new[done]))
            vel_out[idx] = vel_fin
            y_out[idx] = x_prev[idx] + cfg.h * vel_fin
            keep = ~done
            if not np.any(keep):
                return y_out, vel_out, it + 1
            active, xa = active[keep], xa[keep]
            ya, y_new, dist = ya[keep], y_new[keep], dist[keep]
            if y_old is not None:
                y_old = y_old[keep]
        delta = float(np.max(dist))
        if prev_delta is not None and prev_delta > 0:
            factor = delta / prev_delta
        prev_delta = delta
        if y_old is not None:
            # Aitken extrapolation from three successive iterates; the map is
            # smooth, so the locally affine fixed point is a strong guess
            d1 = y_new - ya
            d0 = ya - y_old
            denom = d1 - d0
            ok = np.abs(denom) > 1e-14 * (np.abs(d1) + np.abs(d0)) + 1e-300
            ya = np.where(ok, y_new - d1 * d1 / np.where(ok, denom, 1.0), y_new)
            y_old = None
            prev_delta = None  # the jump breaks the plain-iteration sequence
        else:
            y_old = ya
            ya = y_new
    raise NoContraction(
        f"implicit step missed tolerance {cfg.fp_tol:g} after {cfg.fp_max_iter} "
        f"iterations (last observed contraction factor {factor})",
        observed_factor=factor,
    )


def explicit_step(x_prev, u_curr, model: HamiltonianModel, cfg: FlowConfig) -> np.ndarray:
    """Forward-Euler comparison step X + h a(X, grad u_eps(X))."""
    x_prev = as_points(x_prev, model.dim)
    return x_prev + cfg.h * model.a(x_prev, _gradient(u_curr, x_prev))


def evolve(seeds, hj_sol: HjSolution, model: HamiltonianModel, cfg: FlowConfig,
           seed_indices=None, explicit: bool = False) -> CharacteristicEnsemble:
    """Evolve the seeds through every time level of an HJ solution.

    The implicit scheme uses the smoothed field of the *next* level; the
    explicit comparison scheme uses the current one.
    """
    seeds = as_points(seeds, model.dim)
    n_steps = len(hj_sol.fields) - 1
    states = np.empty((n_steps + 1, seeds.shape[0], model.dim))
    velocities = np.empty((n_steps, seeds.shape[0], model.dim))
    states[0] = seeds
    ens = CharacteristicEnsemble(
        seeds=seeds, h=cfg.h, states=states, velocities=velocities,
        seed_indices=None if seed_indices is None else np.asarray(seed_indices),
    )
    for n in range(n_steps):
        if explicit:
            sf = SmoothedField(hj_sol.fields[n], cfg.eps)
            states[n + 1] = explicit_step(states[n], sf, model, cfg)
            velocities[n] = (states[n + 1] - states[n]) / cfg.h
            ens.fp_iterations.append(1)
        else:
            sf = SmoothedField(hj_sol.fields[n + 1], cfg.eps)
            guess = velocities[n - 1] if n > 0 else None
            y, vel, iters = _implicit_step_full(states[n], sf, model, cfg, v_guess=guess)
            states[n + 1] = y
            velocities[n] = vel
            ens.fp_iterations.append(iters)
    return ens


def interpolate_trajectory(ens: CharacteristicEnsemble, seed_index: int, t: float) -> np.ndarray:
    """Piecewise-linear in time: X^n + (t - t^n) * (stored step velocity)."""
    if t < -1e-12 or t > ens.n_levels * ens.h + 1e-12:
        raise ValueError("time outside the evolved horizon")
    n = min(int(t / ens.h), ens.n_levels - 1) if ens.n_levels > 0 else 0
    if ens.n_levels == 0:
        return ens.states[0, seed_index]
    return ens.states[n, seed_index] + (t - n * ens.h) * ens.velocities[n, seed_index]


def trajectories_to_csv(ens: CharacteristicEnsemble, path):
    """One row per (seed, level): seed id, level, time, coordinates."""
    import csv

    d = ens.states.shape[2]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["seed", "n", "t"] + [f"x{ax}" for ax in range(d)])
        for i in range(ens.states.shape[1]):
            for n in range(ens.states.shape[0]):
                wr.writerow([i, n, f"{n * ens.h:.17g}"] +
                            [f"{c:.17g}" for c in ens.states[n, i]])
