"""Hamiltonian models: H(x,t,p), its convex conjugate, and the velocity field.

A model bundles the Hamiltonian, an optional closed-form conjugate,
the velocity field a(x,p) driving the transport, a growth class that
controls where the conjugate is finite, and the structural constants
used by the solver and its diagnostics.

Conventions: points, momenta and velocity arguments are numpy arrays of
shape (n, d); ``as_points`` lifts scalars and flat arrays.  Model
callables return shape (n,) (values) or (n, d) (vectors) and must
broadcast a single momentum of shape (d,) against n points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import NonFiniteResult

INF = float("inf")


def as_points(x, dim: int) -> np.ndarray:
    """Return x as a float array of shape (n, dim)."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        if dim != 1:
            raise ValueError("scalar point only valid in dimension 1")
        return a.reshape(1, 1)
    if a.ndim == 1:
        if dim == 1:
            return a.reshape(-1, 1)
        if a.shape[0] == dim:
            return a.reshape(1, dim)
        raise ValueError(f"cannot interpret shape {a.shape} as points in R^{dim}")
    if a.ndim == 2 and a.shape[1] == dim:
        return a
    raise ValueError(f"cannot interpret shape {a.shape} as points in R^{dim}")


@dataclass(frozen=True)
class LinearAtInfinity:
    """H grows like K|p| at infinity; the conjugate is +inf outside |xi| <= K."""

    K: float

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError("asymptotic slope K must be positive")


@dataclass(frozen=True)
class Superlinear:
    """H/|p| -> +inf; ``p_radius(r)`` bounds the conjugate argmax for |xi| <= r."""

    p_radius: Callable[[float], float]


GrowthClass = Union[LinearAtInfinity, Superlinear]


@dataclass(frozen=True)
class Potential:
    """Closed-form potential V(x,t) with the bounds diagnostics need."""

    name: str
    v: Callable[[np.ndarray, float], np.ndarray]  # (n,d), t -> (n,)
    lip_within: Callable[[float], float]  # Lipschitz constant of V on |x| <= r
    sup_within: Callable[[float], float]  # sup |V| on |x| <= r
    convex: bool


def zero_potential() -> Potential:
    return Potential(
        name="zero",
        v=lambda x, t: np.zeros(x.shape[0]),
        lip_within=lambda r: 0.0,
        sup_within=lambda r: 0.0,
        convex=True,
    )


def quadratic_potential(omega: float) -> Potential:
    """V(x,t) = 0.5 * omega^2 |x|^2, the canonical convex test potential."""
    w2 = float(omega) ** 2
    return Potential(
        name=f"quadratic(omega={omega})",
        v=lambda x, t: 0.5 * w2 * np.sum(x * x, axis=-1),
        lip_within=lambda r: w2 * r,
        sup_within=lambda r: 0.5 * w2 * r * r,
        convex=True,
    )


@dataclass(frozen=True)
class HamiltonianModel:
    """A Hamiltonian, its conjugate, and the associated velocity field.

    ``conjugate`` may be None, in which case ``legendre_transform`` falls
    back to a bounded numeric maximization.  ``conc_hstar`` is the
    semiconcavity constant of the conjugate in x (0 for the built-in
    models with convex potential).  ``lip_p_velocity`` bounds the
    Lipschitz constant of a in p and feeds the contraction guard of the
    implicit characteristic step.
    """

    name: str
    dim: int
    hamiltonian: Callable[[np.ndarray, float, np.ndarray], np.ndarray]
    velocity: Callable[[np.ndarray, np.ndarray], np.ndarray]
    growth: GrowthClass
    potential: Potential
    conjugate: Optional[Callable[[np.ndarray, float, np.ndarray], np.ndarray]] = None
    conc_hstar: float = 0.0
    lip_p_velocity: float = 1.0
    # sup over |p| <= r of |a(x, p)|
    speed_bound: Callable[[float], float] = field(default=lambda r: r)
    # Lipschitz-in-x constant of H on |x| <= r (the (1+|p|)-free part)
    lip_x_within: Callable[[float], float] = field(default=lambda r: 0.0)
    # sup |H(x, t, 0)| on |x| <= r
    sup_h0_within: Callable[[float], float] = field(default=lambda r: 0.0)

    def H(self, x, t, p):
        x = as_points(x, self.dim)
        return self.hamiltonian(x, t, np.asarray(p, dtype=float))

    def a(self, x, p):
        x = as_points(x, self.dim)
        p = np.asarray(p, dtype=float)
        return self.velocity(x, np.broadcast_to(p, x.shape))


def _sumsq(p: np.ndarray) -> np.ndarray:
    return np.sum(np.asarray(p, dtype=float) ** 2, axis=-1)


def schrodinger(dim: int = 1, potential: Optional[Potential] = None) -> HamiltonianModel:
    """H = 0.5|p|^2 + V(x,t), a(x,p) = p.  Superlinear growth."""
    pot = potential or zero_potential()

    def H(x, t, p):
        return 0.5 * _sumsq(p) * np.ones(x.shape[0]) + pot.v(x, t)

    def conj(x, t, xi):
        return 0.5 * _sumsq(xi) * np.ones(x.shape[0]) - pot.v(x, t)

    return HamiltonianModel(
        name="schrodinger",
        dim=dim,
        hamiltonian=H,
        conjugate=conj,
        velocity=lambda x, p: np.array(p, dtype=float, copy=True),
        growth=Superlinear(p_radius=lambda r: r + 1.0),
        potential=pot,
        conc_hstar=0.0 if pot.convex else INF,
        lip_p_velocity=1.0,
        speed_bound=lambda r: r,
        lip_x_within=pot.lip_within,
        sup_h0_within=pot.sup_within,
    )


_BS_K = 1.0 / math.sqrt(2.0)


def bethe_salpeter(dim: int = 1, potential: Optional[Potential] = None) -> HamiltonianModel:
    """H = sqrt(|p|^2/2 + 1) + V, a(x,p) = p / sqrt(|p|^2/2 + 1).

    Linear growth with slope 1/sqrt(2); the conjugate is
    -sqrt(1 - 2|xi|^2) - V on |xi| <= 1/sqrt(2) and +inf outside.
    The speed is bounded by sqrt(2) for every momentum.
    """
    pot = potential or zero_potential()

    def H(x, t, p):
        return np.sqrt(0.5 * _sumsq(p) + 1.0) * np.ones(x.shape[0]) + pot.v(x, t)

    def conj(x, t, xi):
        s = 2.0 * _sumsq(xi) * np.ones(x.shape[0])
        out = np.full(x.shape[0], INF)
        ok = s <= 1.0 + 1e-14
        out[ok] = -np.sqrt(np.maximum(1.0 - s[ok], 0.0)) - pot.v(x, t)[ok]
        return out

    def a(x, p):
        return p / np.sqrt(0.5 * _sumsq(p) + 1.0)[..., None]

    return HamiltonianModel(
        name="bethe-salpeter",
        dim=dim,
        hamiltonian=H,
        conjugate=conj,
        velocity=a,
        growth=LinearAtInfinity(K=_BS_K),
        potential=pot,
        conc_hstar=0.0 if pot.convex else INF,
        lip_p_velocity=1.0,
        speed_bound=lambda r: min(r / math.sqrt(0.5 * r * r + 1.0), math.sqrt(2.0)),
        lip_x_within=pot.lip_within,
        sup_h0_within=lambda r: 1.0 + pot.sup_within(r),
    )


def eikonal(dim: int = 1) -> HamiltonianModel:
    """H = |p|, a(x,p) = p/|p| (0 at p = 0).  Conjugate is 0 on the unit ball."""
    pot = zero_potential()

    def H(x, t, p):
        return np.sqrt(_sumsq(p)) * np.ones(x.shape[0])

    def conj(x, t, xi):
        s = _sumsq(xi) * np.ones(x.shape[0])
        out = np.full(x.shape[0], INF)
        out[s <= 1.0 + 1e-14] = 0.0
        return out

    def a(x, p):
        n = np.sqrt(_sumsq(p))[..., None]
        return np.divide(p, n, out=np.zeros(np.broadcast_shapes(p.shape, n.shape)), where=n > 0)

    return HamiltonianModel(
        name="eikonal",
        dim=dim,
        hamiltonian=H,
        conjugate=conj,
        velocity=a,
        growth=LinearAtInfinity(K=1.0),
        potential=pot,
        conc_hstar=0.0,
        lip_p_velocity=INF,  # direction field is not Lipschitz at p = 0
        speed_bound=lambda r: 1.0,
        lip_x_within=lambda r: 0.0,
        sup_h0_within=lambda r: 0.0,
    )


BUILTIN_MODELS = {
    "schrodinger": schrodinger,
    "bethe-salpeter": bethe_salpeter,
    "eikonal": eikonal,
}


# -- Legendre transform -------------------------------------------------------

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max_1d(f, lo, hi, tol=1e-10, max_iter=200):
    """Golden-section maximization of a scalar unimodal function."""
    a, b = float(lo), float(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    xm = 0.5 * (a + b)
    return xm, f(xm)


def _numeric_conjugate_point(model, x, t, xi, radius, tol=1e-10):
    """Maximize xi.p - H(x,t,p) over the ball |p| <= radius for one point."""
    d = model.dim
    xi = np.asarray(xi, dtype=float).reshape(d)
    xrow = x.reshape(1, d)

    def obj(p):
        return float(xi @ p - model.hamiltonian(xrow, t, p.reshape(1, d))[0])

    # coarse grid scan, then local refinement (the inner problem is concave)
    grid = np.linspace(-radius, radius, 101)
    if d == 1:
        vals = xi[0] * grid - model.hamiltonian(np.repeat(xrow, grid.size, axis=0), t, grid.reshape(-1, 1))
        best = grid[int(np.argmax(vals))]
        span = grid[1] - grid[0]
        _, v = _golden_max_1d(lambda p: obj(np.array([p])), max(best - span, -radius), min(best + span, radius), tol)
        return max(v, float(np.max(vals)))
    gx, gy = np.meshgrid(grid, grid, indexing="ij")
    P = np.column_stack([gx.ravel(), gy.ravel()])
    vals = P @ xi - model.hamiltonian(np.repeat(xrow, P.shape[0], axis=0), t, P)
    p = P[int(np.argmax(vals))].copy()
    span = grid[1] - grid[0]
    best_val = float(np.max(vals))
    for _ in range(60):  # coordinate descent from the best grid point
        moved = 0.0
        for ax in range(d):
            def f(s, ax=ax):
                q = p.copy()
                q[ax] = s
                return obj(q)
            lo = max(p[ax] - span, -radius)
            hi = min(p[ax] + span, radius)
            s, v = _golden_max_1d(f, lo, hi, tol)
            moved = max(moved, abs(s - p[ax]))
            p[ax] = s
            best_val = max(best_val, v)
        if moved <= tol:
            break
    return best_val


def legendre_transform(model: HamiltonianModel, x, t: float, xi) -> np.ndarray:
    """Convex conjugate sup_p { xi.p - H(x,t,p) }.

    Uses the model's closed form when available, otherwise a bounded
    numeric maximization.  Returns +inf (the exact extended-real
    sentinel) where the conjugate is infinite, i.e. outside the speed
    ball of a linear-growth Hamiltonian.
    """
    x = as_points(x, model.dim)
    if model.conjugate is not None:
        return np.asarray(model.conjugate(x, t, np.asarray(xi, dtype=float)))

    xi_arr = np.broadcast_to(np.asarray(xi, dtype=float), x.shape)
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _numeric_conjugate_single(model, x[i], t, xi_arr[i])
    return out


def _numeric_conjugate_single(model, x, t, xi):
    r = float(np.linalg.norm(xi))
    if isinstance(model.growth, LinearAtInfinity):
        if r > model.growth.K + 1e-12:
            return INF
        # the sup may be approached only as |p| grows; enlarge the search
        # ball until the value stalls
        prev = -INF
        radius = 1.0
        while radius <= 1e6:
            val = _numeric_conjugate_point(model, x, t, xi, radius)
            if val - prev < 1e-10 and radius > 1.0:
                return val
            prev = val
            radius *= 4.0
        raise NonFiniteResult(
            f"conjugate maximization did not stall for |xi|={r:.6g}; "
            "growth class is probably misdeclared"
        )
    radius = float(model.growth.p_radius(r))
    return _numeric_conjugate_point(model, x, t, xi, radius)


def xi_search_radius(
    model: HamiltonianModel,
    sup_u: float,
    sup_hstar0: float,
    h: float,
    anchors=None,
    t: float = 0.0,
) -> float:
    """Radius R such that every value-update minimizer lies in B(0, R).

    Linear growth: the conjugate is +inf outside the speed ball, so R is
    its radius K.  Superlinear growth: the smallest R (up to bisection
    tolerance) with H*(x,t,xi) >= 2 sup|u|/h + sup H*(.,.,0) for
    |xi| > R, evaluated at the anchor points (worst case over the box).
    """
    if isinstance(model.growth, LinearAtInfinity):
        return model.growth.K
    bound = 2.0 * sup_u / h + sup_hstar0
    if anchors is None:
        anchors = np.zeros((1, model.dim))
    anchors = as_points(anchors, model.dim)
    dirs = _unit_directions(model.dim)

    def clears(R):
        xi_set = R * dirs
        worst = INF
        for xi in xi_set:
            worst = min(worst, float(np.min(legendre_transform(model, anchors, t, xi))))
        return worst >= bound

    lo, hi = 0.0, 1.0
    for _ in range(80):
        if clears(hi):
            break
        lo, hi = hi, hi * 2.0
    else:
        raise NonFiniteResult("conjugate never cleared the search bound; not superlinear?")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if clears(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _unit_directions(dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    s = 1.0 / math.sqrt(2.0)
    return np.array(
        [[1, 0], [-1, 0], [0, 1], [0, -1], [s, s], [s, -s], [-s, s], [-s, -s]],
        dtype=float,
    )


def velocity(model: HamiltonianModel, x, p) -> np.ndarray:
    """Evaluate the transport velocity a(x, p)."""
    return model.a(x, p)
