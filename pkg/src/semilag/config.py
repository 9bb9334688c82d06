"""Flat dotted-key run configuration.

Format: one ``key = value`` pair per line, ``#`` comments, blank lines
ignored.  Unknown keys are rejected.  The schema (defaults in brackets):

    model.name             schrodinger | bethe-salpeter | eikonal
    model.potential.type   zero | quadratic  [zero]
    model.potential.omega  real  [1.0]
    lattice.dim            1 | 2  [1]
    lattice.lo             real (same on both axes in 2d)  [-2.0]
    lattice.hi             real  [2.0]
    lattice.k              real, required
    lattice.padding        real  [quarter of the box width]
    time.T                 real, required
    time.h                 real (or give time.N)
    time.N                 integer step count (alternative to time.h)
    mollify.alpha          real in (0,1), sets eps = h^alpha  [0.5]
    mollify.epsilon        real, overrides the alpha rule
    hj.xi_points           odd integer >= 3  [21]
    hj.xi_refine           true | false  [true]
    hj.record_argmin       true | false  [false]
    flow.fp_tol            real  [1e-12]
    flow.fp_max_iter       integer  [200]
    initial.u0             neg-abs | quadratic | expr:<numpy expression in x0[,x1]>
    initial.measure        none | uniform:lo,hi | atoms:pos/coords:mass;...  [none]
    measure.output_times   comma list of reals  [T]
    study.levels           integer >= 1  [3]
    study.margin           real >= 0 added to the k-slaving exponent  [0.1]
    study.kc               prefactor c in k = c h^(1+alpha+margin)  [0.25]
    output.dir             path  [out]
    seed                   integer  [0]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .hamiltonians import BUILTIN_MODELS, HamiltonianModel, quadratic_potential, zero_potential
from .measure import Atoms, MeasureDescription, PiecewiseConstant

_KNOWN_KEYS = {
    "model.name", "model.potential.type", "model.potential.omega",
    "lattice.dim", "lattice.lo", "lattice.hi", "lattice.k", "lattice.padding",
    "time.T", "time.h", "time.N",
    "mollify.alpha", "mollify.epsilon",
    "hj.xi_points", "hj.xi_refine", "hj.record_argmin",
    "flow.fp_tol", "flow.fp_max_iter",
    "initial.u0", "initial.measure",
    "measure.output_times",
    "study.levels", "study.margin", "study.kc",
    "output.dir", "seed",
}


def parse_config_text(text: str) -> Dict[str, str]:
    """Parse dotted-key lines into a string map; reject unknown keys."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        out[key] = val
    return out


def _get_float(raw, key, default=None):
    if key not in raw:
        if default is None:
            raise ConfigError(f"missing required key '{key}'")
        return default
    try:
        return float(raw[key])
    except ValueError:
        raise ConfigError(f"key '{key}': expected a number, got {raw[key]!r}") from None


def _get_int(raw, key, default=None):
    if key not in raw:
        if default is None:
            raise ConfigError(f"missing required key '{key}'")
        return default
    try:
        return int(raw[key])
    except ValueError:
        raise ConfigError(f"key '{key}': expected an integer, got {raw[key]!r}") from None


def _get_bool(raw, key, default):
    if key not in raw:
        return default
    v = raw[key].lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise ConfigError(f"key '{key}': expected true/false, got {raw[key]!r}")


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run description."""

    model_name: str
    potential_type: str
    potential_omega: float
    dim: int
    box_lo: float
    box_hi: float
    k: float
    padding: float
    T: float
    h: float
    N: int
    alpha: float
    epsilon_override: Optional[float]
    xi_points: int
    xi_refine: bool
    record_argmin: bool
    fp_tol: float
    fp_max_iter: int
    u0_name: str
    measure_raw: str
    output_times: Tuple[float, ...]
    study_levels: int
    study_margin: float
    study_kc: float
    output_dir: str
    seed: int
    raw: Dict[str, str] = field(default_factory=dict)

    def epsilon(self, h: Optional[float] = None) -> float:
        """Smoothing radius: the override, or h^alpha."""
        if self.epsilon_override is not None:
            return self.epsilon_override
        return (self.h if h is None else h) ** self.alpha

    def slaved_k(self, h: float) -> float:
        """Lattice step slaved to the time step for refinement studies."""
        return self.study_kc * h ** (1.0 + self.alpha + self.study_margin)


def build_run_config(raw: Dict[str, str]) -> RunConfig:
    name = raw.get("model.name", "schrodinger")
    if name not in BUILTIN_MODELS:
        raise ConfigError(
            f"key 'model.name': unknown model {name!r}; choose from {sorted(BUILTIN_MODELS)}"
        )
    pot_type = raw.get("model.potential.type", "zero")
    if pot_type not in ("zero", "quadratic"):
        raise ConfigError(f"key 'model.potential.type': expected zero or quadratic, got {pot_type!r}")
    omega = _get_float(raw, "model.potential.omega", 1.0)
    if name == "eikonal" and pot_type != "zero":
        raise ConfigError("key 'model.potential.type': the eikonal model has no potential term")

    dim = _get_int(raw, "lattice.dim", 1)
    if dim not in (1, 2):
        raise ConfigError("key 'lattice.dim': only 1 and 2 are supported")
    lo = _get_float(raw, "lattice.lo", -2.0)
    hi = _get_float(raw, "lattice.hi", 2.0)
    if hi <= lo:
        raise ConfigError("key 'lattice.hi': must exceed lattice.lo")
    k = _get_float(raw, "lattice.k")
    if k <= 0:
        raise ConfigError("key 'lattice.k': must be positive")
    padding = _get_float(raw, "lattice.padding", 0.25 * (hi - lo))
    if padding < 0:
        raise ConfigError("key 'lattice.padding': must be nonnegative")

    T = _get_float(raw, "time.T")
    if T < 0:
        raise ConfigError("key 'time.T': must be nonnegative")
    if "time.h" in raw and "time.N" in raw:
        raise ConfigError("keys 'time.h' and 'time.N': give exactly one of the two")
    if "time.N" in raw:
        N = _get_int(raw, "time.N")
        if N < 0:
            raise ConfigError("key 'time.N': must be nonnegative")
        # with N = 0 the step is never taken; any positive placeholder works
        h = T / N if N > 0 else (T if T > 0 else 1.0)
    else:
        h = _get_float(raw, "time.h")
        if h <= 0:
            raise ConfigError("key 'time.h': must be positive")
        N = max(int(round(T / h)), 0)
        if abs(N * h - T) > 1e-9 * max(T, 1.0):
            raise ConfigError("key 'time.h': T must be an integer multiple of h")

    alpha = _get_float(raw, "mollify.alpha", 0.5)
    if not (0.0 < alpha < 1.0):
        raise ConfigError("key 'mollify.alpha': must lie in (0, 1)")
    eps_override = None
    if "mollify.epsilon" in raw:
        eps_override = _get_float(raw, "mollify.epsilon")
        if eps_override <= 0:
            raise ConfigError("key 'mollify.epsilon': must be positive")

    xi_points = _get_int(raw, "hj.xi_points", 21)
    if xi_points < 3 or xi_points % 2 == 0:
        raise ConfigError("key 'hj.xi_points': must be odd and at least 3")

    u0 = raw.get("initial.u0", "neg-abs")
    if u0 not in ("neg-abs", "quadratic") and not u0.startswith("expr:"):
        raise ConfigError(
            f"key 'initial.u0': expected neg-abs, quadratic, or expr:<expression>, got {u0!r}"
        )
    measure_raw = raw.get("initial.measure", "none")
    _parse_measure(measure_raw, dim)  # validate now, build later

    times_raw = raw.get("measure.output_times", "")
    if times_raw:
        try:
            times = tuple(sorted(float(s) for s in times_raw.split(",")))
        except ValueError:
            raise ConfigError("key 'measure.output_times': expected comma-separated numbers") from None
        if any(t < 0 or t > T + 1e-12 for t in times):
            raise ConfigError("key 'measure.output_times': every time must lie in [0, T]")
    else:
        times = (T,)

    levels = _get_int(raw, "study.levels", 3)
    if levels < 1:
        raise ConfigError("key 'study.levels': must be at least 1")
    margin = _get_float(raw, "study.margin", 0.1)
    if margin < 0:
        raise ConfigError("key 'study.margin': must be nonnegative")
    kc = _get_float(raw, "study.kc", 0.25)
    if kc <= 0:
        raise ConfigError("key 'study.kc': must be positive")

    return RunConfig(
        model_name=name,
        potential_type=pot_type,
        potential_omega=omega,
        dim=dim,
        box_lo=lo,
        box_hi=hi,
        k=k,
        padding=padding,
        T=T,
        h=h,
        N=N,
        alpha=alpha,
        epsilon_override=eps_override,
        xi_points=xi_points,
        xi_refine=_get_bool(raw, "hj.xi_refine", True),
        record_argmin=_get_bool(raw, "hj.record_argmin", False),
        fp_tol=_get_float(raw, "flow.fp_tol", 1e-12),
        fp_max_iter=_get_int(raw, "flow.fp_max_iter", 200),
        u0_name=u0,
        measure_raw=measure_raw,
        output_times=times,
        study_levels=levels,
        study_margin=margin,
        study_kc=kc,
        output_dir=raw.get("output.dir", "out"),
        seed=_get_int(raw, "seed", 0),
        raw=dict(raw),
    )


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return build_run_config(parse_config_text(fh.read()))


def build_model(cfg: RunConfig) -> HamiltonianModel:
    pot = zero_potential() if cfg.potential_type == "zero" else quadratic_potential(cfg.potential_omega)
    if cfg.model_name == "eikonal":
        return BUILTIN_MODELS["eikonal"](cfg.dim)
    return BUILTIN_MODELS[cfg.model_name](cfg.dim, pot)


def build_u0(cfg: RunConfig):
    """Initial-datum callable on (n, d) point arrays."""
    if cfg.u0_name == "neg-abs":
        return lambda x: -np.linalg.norm(x, axis=1)
    if cfg.u0_name == "quadratic":
        return lambda x: 0.5 * np.sum(x * x, axis=1)
    expr = cfg.u0_name[len("expr:"):]

    def f(x):
        env = {"np": np, "abs": np.abs, "pi": math.pi}
        env.update({f"x{ax}": x[:, ax] for ax in range(cfg.dim)})
        try:
            vals = eval(expr, {"__builtins__": {}}, env)  # config-supplied formula
        except Exception as exc:
            raise ConfigError(f"key 'initial.u0': expression failed: {exc}") from exc
        return np.broadcast_to(np.asarray(vals, dtype=float), (x.shape[0],))

    return f


def _parse_measure(raw: str, dim: int) -> Optional[MeasureDescription]:
    if raw == "none":
        return None
    if raw.startswith("uniform:"):
        parts = raw[len("uniform:"):].split(",")
        if len(parts) != 2:
            raise ConfigError("key 'initial.measure': uniform needs 'uniform:lo,hi'")
        try:
            lo, hi = float(parts[0]), float(parts[1])
        except ValueError:
            raise ConfigError("key 'initial.measure': uniform bounds must be numbers") from None
        if hi <= lo:
            raise ConfigError("key 'initial.measure': uniform upper bound must exceed the lower")
        return PiecewiseConstant(pieces=[([lo] * dim, [hi] * dim, 1.0)])
    if raw.startswith("atoms:"):
        atoms: List[Tuple[List[float], float]] = []
        for seg in raw[len("atoms:"):].split(";"):
            seg = seg.strip()
            if not seg:
                continue
            pos_s, _, mass_s = seg.rpartition(":")
            try:
                pos = [float(c) for c in pos_s.split("/")]
                m = float(mass_s)
            except ValueError:
                raise ConfigError(
                    "key 'initial.measure': atoms need 'atoms:x0/x1:mass;...'"
                ) from None
            if len(pos) != dim:
                raise ConfigError(f"key 'initial.measure': atom {seg!r} has wrong dimension")
            atoms.append((pos, m))
        if not atoms:
            raise ConfigError("key 'initial.measure': empty atom list")
        return Atoms(atoms=atoms)
    raise ConfigError(
        f"key 'initial.measure': expected none, uniform:lo,hi, or atoms:..., got {raw!r}"
    )


def build_measure(cfg: RunConfig) -> Optional[MeasureDescription]:
    return _parse_measure(cfg.measure_raw, cfg.dim)


def exact_solution(cfg: RunConfig):
    """Closed-form viscosity solution when the scenario has one, else None.

    Covers the quadratic-kinetic model without potential: by the min-plus
    (Hopf-Lax) formula, u0 = |x|^2/2 evolves to |x|^2/(2(1+t)) and
    u0 = -|x| to -|x| - t/2.
    """
    if cfg.model_name != "schrodinger" or cfg.potential_type != "zero":
        return None
    if cfg.u0_name == "quadratic":
        return lambda x, t: np.sum(x * x, axis=1) / (2.0 * (1.0 + t))
    if cfg.u0_name == "neg-abs":
        return lambda x, t: -np.linalg.norm(x, axis=1) - 0.5 * t
    return None


def exact_gradient(cfg: RunConfig):
    """Spatial gradient of ``exact_solution`` (away from kinks), else None."""
    if cfg.model_name != "schrodinger" or cfg.potential_type != "zero":
        return None
    if cfg.u0_name == "quadratic":
        return lambda x, t: x / (1.0 + t)

    if cfg.u0_name == "neg-abs":
        def g(x, t):
            n = np.linalg.norm(x, axis=1, keepdims=True)
            return -np.divide(x, n, out=np.zeros_like(x), where=n > 0)
        return g
    return None
