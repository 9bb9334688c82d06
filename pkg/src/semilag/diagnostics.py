"""Structural diagnostics: curvature constants, one-sided Lipschitz
constants of the velocity field, error norms, and rate regression."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateFit
from .hamiltonians import HamiltonianModel, as_points
from .lattice import LatticeField


def discrete_semiconcavity_constant(u: LatticeField, max_shift: int = 3) -> float:
    """Max over interior nodes and lattice shifts of the second-difference ratio.

    The ratio is [u(x + x_j) - 2 u(x) + u(x - x_j)] / |x_j|^2, taken over
    base nodes of the un-padded box (shifted neighbours may reach into
    the padding) and every shift with multi-index entries at most
    ``max_shift`` in magnitude.  Padded-boundary nodes are excluded:
    foot clamping there freezes the characteristic foot and stamps
    curvature 1/h into the iterate, which says nothing about the
    propagated constant.
    """
    spec = u.spec
    vals = u.values.reshape(spec.shape)
    interior = spec.interior_mask().reshape(spec.shape)
    k2 = spec.k ** 2
    best = -np.inf
    if spec.dim == 1:
        for j in range(1, max_shift + 1):
            if 2 * j >= spec.shape[0]:
                break
            second = vals[2 * j:] - 2.0 * vals[j:-j] + vals[:-2 * j]
            base = interior[j:-j]
            if not np.any(base):
                continue
            best = max(best, float(np.max(second[base])) / (j * j * k2))
        return best
    for jx in range(-max_shift, max_shift + 1):
        for jy in range(-max_shift, max_shift + 1):
            if (jx, jy) <= (0, 0):
                continue  # shifts come in +/- pairs; keep one of each
            if abs(2 * jx) >= spec.shape[0] or abs(2 * jy) >= spec.shape[1]:
                continue
            plus = np.roll(vals, (-jx, -jy), axis=(0, 1))
            minus = np.roll(vals, (jx, jy), axis=(0, 1))
            second = plus - 2.0 * vals + minus
            sx = slice(abs(jx), spec.shape[0] - abs(jx)) if jx else slice(None)
            sy = slice(abs(jy), spec.shape[1] - abs(jy)) if jy else slice(None)
            base = interior[sx, sy]
            if not np.any(base):
                continue
            best = max(best, float(np.max(second[sx, sy][base])) / ((jx * jx + jy * jy) * k2))
    return best


def sample_pairs(spec, n_pairs: int, min_sep: float, rng) -> tuple:
    """Point pairs stratified by separation decade in [min_sep, box diameter].

    Pairs are drawn inside the un-padded box; stratification over
    log-spaced separations makes localized one-sided Lipschitz
    violations (near kinks) visible.
    """
    lo = np.asarray(spec.box_lo)
    hi = np.asarray(spec.box_hi)
    diam = float(np.linalg.norm(hi - lo))
    seps = np.exp(rng.uniform(np.log(min_sep), np.log(diam), size=n_pairs))
    x = rng.uniform(lo, hi, size=(n_pairs, spec.dim))
    if spec.dim == 1:
        dirs = rng.choice([-1.0, 1.0], size=(n_pairs, 1))
    else:
        ang = rng.uniform(0.0, 2.0 * np.pi, size=n_pairs)
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    y = np.clip(x + seps[:, None] * dirs, lo, hi)
    keep = np.linalg.norm(x - y, axis=1) >= min_sep
    return x[keep], y[keep]


def osl_constant(field, model: HamiltonianModel, pairs, min_sep: float) -> float:
    """One-sided Lipschitz constant of x -> a(x, grad u_eps(x)) on sampled pairs.

    ``field`` must expose ``gradient(points)``; pairs closer than
    ``min_sep`` are discarded (the weak form of the condition only
    constrains separations of at least one cell).
    """
    x, y = pairs
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    sep = np.linalg.norm(d, axis=1)
    keep = sep >= min_sep
    x, y, d, sep = x[keep], y[keep], d[keep], sep[keep]
    if x.shape[0] == 0:
        raise ValueError("no pair satisfies the minimum separation")
    ax = model.a(x, field.gradient(x))
    ay = model.a(y, field.gradient(y))
    return float(np.max(np.sum((ax - ay) * d, axis=1) / sep ** 2))


def sup_error(u: LatticeField, exact) -> float:
    """Max nodal |u - exact| over the un-padded box interior."""
    mask = u.spec.interior_mask()
    pts = u.spec.nodes()[mask]
    return float(np.max(np.abs(u.values[mask] - np.asarray(exact(pts), dtype=float))))


def rate_regression(pairs) -> float:
    """Least-squares slope of log error against log step size."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise DegenerateFit("need at least 3 (h, error) pairs")
    h = np.array([p[0] for p in pairs], dtype=float)
    e = np.array([p[1] for p in pairs], dtype=float)
    if np.any(e <= 0):
        raise DegenerateFit("errors must be positive for a log-log fit")
    if np.allclose(h, h[0]):
        raise DegenerateFit("all step sizes are equal")
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def gradient_error(field, exact_grad, samples, kinks=None, standoff: float = 0.0) -> float:
    """Max |grad u_eps - exact gradient| over samples away from known kinks.

    ``kinks`` is the set of points where the exact solution is not
    differentiable; samples within ``standoff`` of any kink are skipped.
    """
    dim = field.base.spec.dim
    pts = as_points(samples, dim)
    if kinks is not None and len(kinks) > 0:
        kp = as_points(kinks, dim)
        dist = np.min(np.linalg.norm(pts[:, None, :] - kp[None, :, :], axis=-1), axis=1)
        pts = pts[dist > standoff]
    if pts.shape[0] == 0:
        raise ValueError("no sample survives the differentiability filter")
    g = field.gradient(pts)
    ge = np.asarray(exact_grad(pts), dtype=float).reshape(g.shape)
    return float(np.max(np.linalg.norm(g - ge, axis=1)))
