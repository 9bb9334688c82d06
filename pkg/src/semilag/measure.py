"""Discrete bounded measures on lattice nodes and their push-forward.

The initial measure is projected cell-by-cell (half-open cubes centered
on the nodes), evolved trajectories give a column-stochastic-transpose
interpolation matrix, and applying it transports the weights with exact
mass conservation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from .errors import MissingTrajectory, UnsupportedMeasure
from .flow import CharacteristicEnsemble
from .hamiltonians import as_points
from .lattice import LatticeSpec, barycentric_many


# -- initial measure descriptions --------------------------------------------

@dataclass(frozen=True)
class Atoms:
    """Finite list of (location, mass) point masses."""

    atoms: Sequence[Tuple[Sequence[float], float]]


@dataclass(frozen=True)
class PiecewiseConstant:
    """Constant densities on axis-aligned boxes: (lo, hi, density) triples."""

    pieces: Sequence[Tuple[Sequence[float], Sequence[float], float]]


@dataclass(frozen=True)
class DensityCallback:
    """Arbitrary density, integrated per cell with the midpoint rule."""

    density: Callable[[np.ndarray], np.ndarray]


MeasureDescription = Union[Atoms, PiecewiseConstant, DensityCallback]


@dataclass(frozen=True)
class DiscreteMeasure:
    """Sparse atomic measure: weight per lattice node index."""

    spec: LatticeSpec
    indices: np.ndarray
    weights: np.ndarray
    initial_mass: float

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=int))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if self.indices.shape != self.weights.shape:
            raise ValueError("indices and weights must align")

    def positions(self) -> np.ndarray:
        return self.spec.node_coords(self.indices)

    def pair(self, probe) -> float:
        """Integral of a test function against the measure."""
        if self.indices.size == 0:
            return 0.0
        return float(math.fsum(self.weights * np.asarray(probe(self.positions()), dtype=float)))


def mass(m: DiscreteMeasure) -> float:
    """Total mass, accumulated with compensated summation."""
    return float(math.fsum(m.weights))


def tail_mass(m: DiscreteMeasure, radius: float) -> float:
    """Total variation outside the ball |x| <= radius."""
    if m.indices.size == 0:
        return 0.0
    r = np.linalg.norm(m.positions(), axis=1)
    return float(math.fsum(np.abs(m.weights[r > radius])))


def project_measure(spec: LatticeSpec, m0: MeasureDescription) -> DiscreteMeasure:
    """Project an initial measure onto the lattice cells.

    Cell i is the half-open cube of side k centered on node i (points on
    a cell boundary belong to the upper neighbour).  Atom masses go to
    the containing cell; piecewise-constant densities are integrated
    exactly; callback densities use the midpoint rule.
    """
    k = spec.k
    origin = np.asarray(spec.origin)
    shape = np.asarray(spec.shape)
    buf = np.zeros(spec.n_nodes)
    if isinstance(m0, Atoms):
        for loc, w in m0.atoms:
            x = as_points(loc, spec.dim)[0]
            mi = np.floor((x - origin) / k + 0.5).astype(int)
            if np.any(mi < 0) or np.any(mi >= shape):
                raise UnsupportedMeasure(f"atom at {x} falls outside the padded box")
            buf[int(np.ravel_multi_index(tuple(mi), spec.shape))] += w
    elif isinstance(m0, PiecewiseConstant):
        nodes = spec.nodes()
        cell_lo = nodes - 0.5 * k
        cell_hi = nodes + 0.5 * k
        for lo, hi, rho in m0.pieces:
            lo = np.broadcast_to(np.asarray(lo, dtype=float), (spec.dim,))
            hi = np.broadcast_to(np.asarray(hi, dtype=float), (spec.dim,))
            overlap = np.clip(np.minimum(cell_hi, hi) - np.maximum(cell_lo, lo), 0.0, None)
            buf += rho * np.prod(overlap, axis=1)
    elif isinstance(m0, DensityCallback):
        nodes = spec.nodes()
        buf += np.asarray(m0.density(nodes), dtype=float) * k ** spec.dim
    else:
        raise UnsupportedMeasure(f"unsupported measure description {type(m0).__name__}")
    nz = np.nonzero(buf)[0]
    return DiscreteMeasure(spec=spec, indices=nz, weights=buf[nz],
                           initial_mass=float(math.fsum(buf[nz])))


@dataclass(frozen=True)
class PushForwardMatrix:
    """Per-source-node interpolation weights of the evolved positions.

    Column j holds the barycentric weights of the image of source node j;
    every column sums to 1 with at most dim+1 nonzero entries, which is
    what makes the transport monotone and exactly mass conserving.
    """

    spec: LatticeSpec
    cols: np.ndarray  # (n_src,) source node indices
    rows: np.ndarray  # (n_src, dim+1) target node indices
    vals: np.ndarray  # (n_src, dim+1) weights

    def column_sums(self) -> np.ndarray:
        return np.sum(self.vals, axis=1)


def build_pushforward(ens: CharacteristicEnsemble, level: int, spec: LatticeSpec) -> PushForwardMatrix:
    """Interpolation-weight matrix of the ensemble positions at one level."""
    if ens.seed_indices is None:
        raise MissingTrajectory("ensemble was not seeded on lattice nodes")
    pos = ens.states[level]
    lo, hi = spec.padded_lo(), spec.padded_hi()
    pos = np.clip(pos, lo, hi)  # trajectories may graze the padded edge
    rows, vals = barycentric_many(spec, pos)
    return PushForwardMatrix(spec=spec, cols=np.asarray(ens.seed_indices), rows=rows, vals=vals)


def pushforward(m: DiscreteMeasure, mat: PushForwardMatrix) -> DiscreteMeasure:
    """Transport the weights through the matrix; mass is conserved exactly."""
    col_pos = {int(c): i for i, c in enumerate(mat.cols)}
    buf = np.zeros(m.spec.n_nodes)
    for idx, w in zip(m.indices, m.weights):
        j = col_pos.get(int(idx))
        if j is None:
            raise MissingTrajectory(f"no trajectory for support node {int(idx)}")
        np.add.at(buf, mat.rows[j], w * mat.vals[j])
    nz = np.nonzero(buf)[0]
    return DiscreteMeasure(spec=m.spec, indices=nz, weights=buf[nz],
                           initial_mass=m.initial_mass)


# -- weak-star probe dictionary ----------------------------------------------

def probe_dictionary(spec: LatticeSpec, stride: int = 4, n_bumps: int = 3) -> List[Callable]:
    """Fixed probe set metrizing weak-star distances in a comparable way.

    Hat functions of radius stride*k at every stride-th node of the
    reference lattice, plus a few wide smooth bumps; the same dictionary
    must be reused across a refinement study so distances are comparable.
    """
    probes: List[Callable] = []
    nodes = spec.nodes()
    mask = spec.interior_mask()
    centers = nodes[mask][::stride]
    radius = stride * spec.k

    def make_hat(c):
        def hat(pts):
            pts = as_points(pts, spec.dim)
            return np.prod(np.clip(1.0 - np.abs(pts - c) / radius, 0.0, None), axis=1)
        return hat

    for c in centers:
        probes.append(make_hat(c.copy()))

    lo = np.asarray(spec.box_lo)
    hi = np.asarray(spec.box_hi)
    span = hi - lo
    for q in np.linspace(0.25, 0.75, n_bumps):
        c = lo + q * span
        r = float(np.min(span)) / 4.0

        def make_bump(c=c.copy(), r=r):
            def bump(pts):
                pts = as_points(pts, spec.dim)
                s = np.sum(((pts - c) / r) ** 2, axis=1)
                out = np.zeros(pts.shape[0])
                inside = s < 1.0
                out[inside] = np.exp(-1.0 / (1.0 - s[inside]))
                return out
            return bump

        probes.append(make_bump())
    return probes


def weak_star_distance(m_a: DiscreteMeasure, m_b: DiscreteMeasure, probes) -> float:
    """Max over the probe dictionary of |<m_a - m_b, probe>|."""
    return max(abs(m_a.pair(p) - m_b.pair(p)) for p in probes)


def measure_to_csv(m: DiscreteMeasure, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["index"] + [f"x{ax}" for ax in range(m.spec.dim)] + ["weight"])
        pos = m.positions() if m.indices.size else np.zeros((0, m.spec.dim))
        for i in range(m.indices.size):
            wr.writerow([int(m.indices[i])] + [f"{c:.17g}" for c in pos[i]] +
                        [f"{m.weights[i]:.17g}"])
