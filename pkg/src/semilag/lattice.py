"""Uniform simplicial lattice over a padded box, with P1 interpolation.

The lattice covers the user box enlarged by a padding margin, snapped to
multiples of the grid step so node coordinates are exact multiples of k
from the origin.  In dimension 2 every grid square is split into two
triangles along its main diagonal (a translation-invariant split, which
the discrete-semiconcavity diagnostic relies on).  Node indexing is
row-major over the padded box.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomain
from .hamiltonians import as_points

_SNAP = 1e-9  # tolerance (in units of k) for boundary membership


@dataclass(frozen=True)
class LatticeSpec:
    dim: int
    k: float
    box_lo: tuple  # user box, snapped to multiples of k
    box_hi: tuple
    padding: float  # snapped up to a whole number of cells
    origin: tuple  # lower corner of the padded box
    shape: tuple  # node count per axis

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    def nodes(self) -> np.ndarray:
        """All node coordinates, row-major, shape (n_nodes, dim)."""
        axes = [np.asarray(self.origin)[ax] + self.k * np.arange(self.shape[ax]) for ax in range(self.dim)]
        if self.dim == 1:
            return axes[0].reshape(-1, 1)
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    def flat_to_multi(self, idx):
        return np.unravel_index(np.asarray(idx), self.shape)

    def multi_to_flat(self, multi):
        return np.ravel_multi_index(multi, self.shape)

    def node_coords(self, idx) -> np.ndarray:
        multi = np.stack(self.flat_to_multi(idx), axis=-1)
        return np.asarray(self.origin) + self.k * multi

    def interior_mask(self) -> np.ndarray:
        """True on nodes of the un-padded user box."""
        pts = self.nodes()
        lo = np.asarray(self.box_lo) - _SNAP * self.k
        hi = np.asarray(self.box_hi) + _SNAP * self.k
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def padded_lo(self) -> np.ndarray:
        return np.asarray(self.origin)

    def padded_hi(self) -> np.ndarray:
        return np.asarray(self.origin) + self.k * (np.asarray(self.shape) - 1)


def make_spec(dim: int, k: float, box_lo, box_hi, padding: float = 0.0) -> LatticeSpec:
    """Build a lattice spec; box and padding are snapped to multiples of k."""
    if dim not in (1, 2):
        raise ValueError("only dimensions 1 and 2 are supported")
    if not k > 0:
        raise ValueError("grid step must be positive")
    if padding < 0:
        raise ValueError("padding must be nonnegative")
    lo = np.broadcast_to(np.asarray(box_lo, dtype=float), (dim,))
    hi = np.broadcast_to(np.asarray(box_hi, dtype=float), (dim,))
    if np.any(hi <= lo):
        raise ValueError("box must be non-degenerate")
    lo_i = np.floor(lo / k + _SNAP).astype(int)
    hi_i = np.ceil(hi / k - _SNAP).astype(int)
    pad_cells = int(math.ceil(padding / k - _SNAP))
    origin_i = lo_i - pad_cells
    shape = tuple(int(n) for n in hi_i - lo_i + 2 * pad_cells + 1)
    return LatticeSpec(
        dim=dim,
        k=float(k),
        box_lo=tuple(float(i) * k for i in lo_i),
        box_hi=tuple(float(i) * k for i in hi_i),
        padding=pad_cells * float(k),
        origin=tuple(float(i) * k for i in origin_i),
        shape=shape,
    )


@dataclass(frozen=True)
class LatticeField:
    """Nodal values of a continuous piecewise-linear function."""

    spec: LatticeSpec
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.shape != (self.spec.n_nodes,):
            raise ValueError("values must have one entry per lattice node")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("nodal values must be finite")


def project(spec: LatticeSpec, f) -> LatticeField:
    """Sample a function at every node of the padded lattice."""
    pts = spec.nodes()
    vals = np.asarray(f(pts), dtype=float)
    return LatticeField(spec, vals)


def _cells_and_fracs(spec: LatticeSpec, pts: np.ndarray):
    """Cell base multi-indices and in-cell fractions for points in the padded box."""
    rel = (pts - np.asarray(spec.origin)) / spec.k
    base = np.floor(rel + _SNAP).astype(int)
    top = np.asarray(spec.shape) - 1
    # points sitting exactly on the upper boundary belong to the last cell
    base = np.clip(base, 0, top - 1)
    frac = rel - base
    return base, frac


def _check_in_box(spec: LatticeSpec, pts: np.ndarray):
    lo = spec.padded_lo() - _SNAP * spec.k
    hi = spec.padded_hi() + _SNAP * spec.k
    bad = np.any((pts < lo) | (pts > hi), axis=1)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise OutOfDomain(f"point {pts[i]} is outside the padded box [{lo}, {hi}]")


def _snap_weights(w: np.ndarray) -> np.ndarray:
    """Zero roundoff-level weights, moving their mass to the row maximum.

    Points sitting exactly on a node otherwise leak ~1e-16 weight onto a
    neighbour, which would make the level-0 push-forward non-identical.
    The row sum is preserved exactly.
    """
    tiny = np.abs(w) < 1e-12
    if not np.any(tiny):
        return w
    residue = np.sum(np.where(tiny, w, 0.0), axis=1)
    w = np.where(tiny, 0.0, w)
    rows = np.nonzero(residue)[0]
    w[rows, np.argmax(w[rows], axis=1)] += residue[rows]
    return w


def barycentric_many(spec: LatticeSpec, pts: np.ndarray):
    """Vectorized barycentric decomposition.

    Returns (indices, weights) of shape (n, dim+1): flat node indices
    and the nonnegative convex weights reconstructing each point.
    """
    pts = as_points(pts, spec.dim)
    _check_in_box(spec, pts)
    base, frac = _cells_and_fracs(spec, pts)
    n = pts.shape[0]
    if spec.dim == 1:
        f = frac[:, 0]
        idx = np.stack([base[:, 0], base[:, 0] + 1], axis=1)
        w = np.stack([1.0 - f, f], axis=1)
        return idx, _snap_weights(w)
    fx, fy = frac[:, 0], frac[:, 1]
    lower = fy <= fx  # triangle below the main diagonal of the cell
    mi = np.empty((n, 3, 2), dtype=int)
    w = np.empty((n, 3))
    # lower triangle: vertices (0,0), (1,0), (1,1)
    mi[lower, 0] = base[lower]
    mi[lower, 1] = base[lower] + [1, 0]
    mi[lower, 2] = base[lower] + [1, 1]
    w[lower, 0] = 1.0 - fx[lower]
    w[lower, 1] = fx[lower] - fy[lower]
    w[lower, 2] = fy[lower]
    up = ~lower  # upper triangle: vertices (0,0), (0,1), (1,1)
    mi[up, 0] = base[up]
    mi[up, 1] = base[up] + [0, 1]
    mi[up, 2] = base[up] + [1, 1]
    w[up, 0] = 1.0 - fy[up]
    w[up, 1] = fy[up] - fx[up]
    w[up, 2] = fx[up]
    idx = np.ravel_multi_index((mi[..., 0], mi[..., 1]), spec.shape)
    return idx, _snap_weights(w)


def barycentric_weights(spec: LatticeSpec, x):
    """Barycentric weights of a single point: list of (node index, weight).

    Zero weights are dropped, so a point on a node returns [(i, 1.0)].
    """
    idx, w = barycentric_many(spec, as_points(x, spec.dim))
    out = []
    for i, wi in zip(idx[0], w[0]):
        if abs(wi) > _SNAP:
            out.append((int(i), float(wi)))
    # snap near-unit weights so nodes evaluate exactly
    if len(out) == 1:
        out = [(out[0][0], 1.0)]
    return out


def interpolate_many(field: LatticeField, pts, clamp: bool = False):
    """P1 interpolation at many points.

    With ``clamp`` the points are first projected onto the padded box and
    the number of clamped points is returned alongside the values.
    """
    pts = as_points(np.asarray(pts, dtype=float), field.spec.dim)
    clamped = 0
    if clamp:
        lo = field.spec.padded_lo()
        hi = field.spec.padded_hi()
        inside = np.all((pts >= lo) & (pts <= hi), axis=1)
        clamped = int(np.sum(~inside))
        if clamped:
            pts = np.clip(pts, lo, hi)
    idx, w = barycentric_many(field.spec, pts)
    vals = np.sum(field.values[idx] * w, axis=1)
    if clamp:
        return vals, clamped
    return vals


def interpolate(field: LatticeField, x) -> float:
    """P1 interpolation at a single point; exact for affine nodal data."""
    return float(interpolate_many(field, as_points(x, field.spec.dim))[0])


def interpolation_error_bound(spec: LatticeSpec, second_diff_bound: float) -> float:
    """Sup of the one-cell P1 interpolation error of the model quadratic |x|^2.

    Scaled by ``second_diff_bound`` (1 means |x|^2 itself).  Used to
    calibrate the slack of the weak form of the semiconcavity bound.
    """
    return second_diff_bound * spec.dim * spec.k ** 2 / 4.0


def field_to_csv(field: LatticeField, path):
    """One row per node: multi-index, coordinates, value."""
    spec = field.spec
    multi = np.stack(spec.flat_to_multi(np.arange(spec.n_nodes)), axis=-1)
    pts = spec.nodes()
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([f"i{ax}" for ax in range(spec.dim)] + [f"x{ax}" for ax in range(spec.dim)] + ["value"])
        for i in range(spec.n_nodes):
            wr.writerow(
                [int(m) for m in multi[i]]
                + [f"{c:.17g}" for c in pts[i]]
                + [f"{field.values[i]:.17g}"]
            )
