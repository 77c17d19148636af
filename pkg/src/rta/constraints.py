"""Safety constraint functions, normalization, and min-combination.

Five fixed-wing constraint kinds (load_min, load_max, alt_floor,
alt_ceiling, geofence) plus per-axis box constraints for the quadrotor.
Every constraint evaluates to a scalar that is >= 0 exactly when the
printed inequality is satisfied.

Cross-constraint normalization: raw values are divided by a per-constraint
`scale` so the combined minimum compares commensurable "margin units".
Defaults put fixed-wing margins in seconds (altitude margins divided by
V_T, geofence converted to a time-to-collision) and quadrotor box margins
in units of the squared half-length.  The geofence sign convention: n_g is
the unit normal pointing INTO the permitted region, so h > 0 on the safe
side.

Load-factor constraints are evaluable and reportable but the built-in
scenarios never place them in the combined minimum: they are enforced by
clamping the load-factor command downstream of blending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

EPS_V = 1.0      # m/s, closing-speed floor in the TTC transform
TTC_MAX = 120.0  # s, TTC cap

KIND_CODES = {"load_min": 0, "load_max": 1, "alt_floor": 2, "alt_ceiling": 3, "geofence": 4}
BOX_KINDS = ("box_x", "box_y", "box_z")


class MissingFieldError(KeyError):
    """The state of this model lacks a component the constraint needs."""


@dataclass
class ConstraintSpec:
    """One named constraint: kind, kind-specific params, normalization scale.

    params by kind:
        load_min:    N_z_min (g)
        load_max:    N_z_max (g)
        alt_floor:   H_min (m)
        alt_ceiling: H_max (m)
        geofence:    p_g (m, 2-vector N/E), n_g (unit 2-vector into safe side)
        box_x/y/z:   center (m), half (m)
    """

    name: str
    kind: str
    params: Dict[str, object]
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KIND_CODES and self.kind not in BOX_KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.kind == "geofence":
            n_g = np.asarray(self.params["n_g"], dtype=float)
            if abs(np.linalg.norm(n_g) - 1.0) > 1e-9:
                raise ValueError("geofence normal must be unit length within 1e-9")
            self.params = dict(self.params)
            self.params["n_g"] = n_g
            self.params["p_g"] = np.asarray(self.params["p_g"], dtype=float)


@dataclass
class SafetySpec:
    """Ordered constraints combined by pointwise minimum."""

    constraints: List[ConstraintSpec] = field(default_factory=list)

    def __post_init__(self):
        if not self.constraints:
            raise ValueError("safety spec needs at least one constraint")
        names = [c.name for c in self.constraints]
        if len(set(names)) != len(names):
            raise ValueError("constraint names must be unique")

    @property
    def names(self) -> List[str]:
        return [c.name for c in self.constraints]


def _fields(x: np.ndarray, model_kind: str, need: str):
    """Pull the state component a constraint kind needs, or raise."""
    if model_kind == "fixed_wing":
        access = {"H": x[5], "N_z": x[7]}
        if need in access:
            return access[need]
        if need == "pos":
            return x[3], x[4]
        if need == "vel_ne":
            V = None  # filled by caller
            return None
    elif model_kind == "simplified":
        access = {"H": x[0], "N_z": x[2]}
        if need in access:
            return access[need]
    elif model_kind == "quadrotor":
        if need in ("px", "py", "pz"):
            return x[{"px": 0, "py": 1, "pz": 2}[need]]
    raise MissingFieldError(f"{model_kind} state has no {need!r} component")


def eval_constraint(c: ConstraintSpec, x, model) -> float:
    """Raw constraint value divided by its scale; >= 0 iff satisfied.

    For geofence this is the signed distance (m) over scale; the TTC
    transform is applied separately (see geofence_ttc / combine).
    """
    xa = np.asarray(x, dtype=float) if not hasattr(x, "as_array") else x.as_array()
    mk = model.kind
    k = c.kind
    if k == "load_min":
        return (_fields(xa, mk, "N_z") - float(c.params["N_z_min"])) / c.scale
    if k == "load_max":
        return (float(c.params["N_z_max"]) - _fields(xa, mk, "N_z")) / c.scale
    if k == "alt_floor":
        return (_fields(xa, mk, "H") - float(c.params["H_min"])) / c.scale
    if k == "alt_ceiling":
        return (float(c.params["H_max"]) - _fields(xa, mk, "H")) / c.scale
    if k == "geofence":
        p_n, p_e = _fields(xa, mk, "pos")
        n_g = c.params["n_g"]
        p_g = c.params["p_g"]
        raw = n_g[0] * (p_n - p_g[0]) + n_g[1] * (p_e - p_g[1])
        return raw / c.scale
    if k in BOX_KINDS:
        axis = {"box_x": "px", "box_y": "py", "box_z": "pz"}[k]
        p_i = _fields(xa, mk, axis)
        r = float(c.params["half"])
        return (r * r - (p_i - float(c.params["center"])) ** 2) / c.scale
    raise ValueError(f"unknown constraint kind {k!r}")


def geofence_ttc(c: ConstraintSpec, x, model) -> float:
    """Signed distance to the fence converted to seconds of flight.

    ttc = raw / max(closing_speed, EPS_V), capped at TTC_MAX; the closing
    speed is the N/E velocity component against the inward normal, so it
    is nonpositive when flying away and the cap takes over.
    """
    if c.kind != "geofence":
        raise ValueError("geofence_ttc requires a geofence constraint")
    xa = np.asarray(x, dtype=float) if not hasattr(x, "as_array") else x.as_array()
    if model.kind != "fixed_wing":
        raise MissingFieldError(f"{model.kind} state has no N/E velocity")
    V_T = model.params.V_T
    n_g = c.params["n_g"]
    p_g = c.params["p_g"]
    raw = n_g[0] * (xa[3] - p_g[0]) + n_g[1] * (xa[4] - p_g[1])
    closing = -V_T * math.cos(xa[1]) * (math.cos(xa[2]) * n_g[0] + math.sin(xa[2]) * n_g[1])
    ttc = raw / max(closing, EPS_V)
    return min(ttc, TTC_MAX)


def constraint_margin(c: ConstraintSpec, x, model) -> float:
    """Normalized margin as used inside the combined minimum.

    Identical to eval_constraint except for geofence, where the margin is
    min(ttc, scaled distance): the TTC on the safe side, the (more
    negative) scaled distance once violating.  The min keeps
    combine(spec, .) <= eval_constraint(c, .) for every constraint.
    """
    if c.kind == "geofence":
        return min(geofence_ttc(c, x, model), eval_constraint(c, x, model))
    return eval_constraint(c, x, model)


def combine(spec: SafetySpec, x, model) -> Tuple[float, str]:
    """Minimum of all normalized margins and the name of the argmin.

    Exact ties resolve to the first-listed constraint.
    """
    best = math.inf
    best_name = spec.constraints[0].name
    for c in spec.constraints:
        m = constraint_margin(c, x, model)
        if m < best:
            best = m
            best_name = c.name
    return best, best_name


def margins_by_name(spec: SafetySpec, x, model) -> Dict[str, float]:
    return {c.name: constraint_margin(c, x, model) for c in spec.constraints}


# ---------------------------------------------------------------------------
# Discretization tolerance
# ---------------------------------------------------------------------------

# A-priori bounds on |d(margin)/dt| along feasible trajectories, in
# margin-units per second, used to size the discrete-time tolerance
# tol_inv = 2 * rate * dt.  Altitude margins (scaled by V_T) change at
# most |sin(theta)| <= 1 unit/s; the TTC loses one second per second of
# steady closing plus a curvature allowance; load margins are bounded by
# the lag dynamics; box margins by 2 r v / scale with v <= 40 m/s.


def margin_rate_bound(c: ConstraintSpec, model) -> float:
    if c.kind in ("alt_floor", "alt_ceiling"):
        return model.params.V_T / c.scale
    if c.kind == "geofence":
        # near the boundary the TTC branch binds: <= 1 unit/s of steady
        # closing plus an equal allowance for turn curvature
        return 2.0
    if c.kind in ("load_min", "load_max"):
        return 8.0 / c.scale
    if c.kind in BOX_KINDS:
        r = float(c.params["half"])
        return 2.0 * r * 40.0 / c.scale
    raise ValueError(c.kind)


def tol_inv(spec: SafetySpec, dt: float, model) -> float:
    """Discretization-aware margin tolerance: 2 * max margin-rate * dt."""
    rate = max(margin_rate_bound(c, model) for c in spec.constraints)
    return 2.0 * rate * dt


def raw_rate_bound(c: ConstraintSpec, model) -> float:
    """Bound on |d h_raw / dt| in the constraint's printed units per second
    (2 L_h V_max along feasible trajectories)."""
    if c.kind in ("alt_floor", "alt_ceiling", "geofence"):
        return model.params.V_T  # |H_dot| and plan-position speed are <= V_T
    if c.kind in ("load_min", "load_max"):
        # |Nz_dot| = |u_z - N_z| / tau_z over the command envelope
        return 7.0 / model.params.tau_z
    if c.kind in BOX_KINDS:
        return 2.0 * float(c.params["half"]) * 40.0
    raise ValueError(c.kind)


def violation_tolerances(spec: SafetySpec, dt: float, model) -> Dict[str, float]:
    """Per-constraint violation tolerance, in the same normalized units the
    margins are reported in: tol = 2 * raw-rate * dt / scale.

    On the violating side the geofence margin reduces to scaled distance,
    so its tolerance is a position allowance (2 V_T dt meters over scale);
    altitude tolerances likewise correspond to 2 V_T dt meters.
    """
    return {
        c.name: 2.0 * raw_rate_bound(c, model) * dt / c.scale for c in spec.constraints
    }


# ---------------------------------------------------------------------------
# Kernel packing
# ---------------------------------------------------------------------------


def pack_constraints(spec: SafetySpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pack fixed-wing constraints into the arrays the compiled loops take."""
    n = len(spec.constraints)
    kinds = np.zeros(n, dtype=np.int64)
    prm = np.zeros((n, 4))
    scales = np.ones(n)
    for i, c in enumerate(spec.constraints):
        if c.kind not in KIND_CODES:
            raise ValueError(f"constraint kind {c.kind!r} has no fixed-wing packing")
        kinds[i] = KIND_CODES[c.kind]
        scales[i] = c.scale
        if c.kind == "load_min":
            prm[i, 0] = float(c.params["N_z_min"])
        elif c.kind == "load_max":
            prm[i, 0] = float(c.params["N_z_max"])
        elif c.kind == "alt_floor":
            prm[i, 0] = float(c.params["H_min"])
        elif c.kind == "alt_ceiling":
            prm[i, 0] = float(c.params["H_max"])
        else:
            prm[i, 0] = c.params["p_g"][0]
            prm[i, 1] = c.params["p_g"][1]
            prm[i, 2] = c.params["n_g"][0]
            prm[i, 3] = c.params["n_g"][1]
    return kinds, prm, scales


def pack_box(spec: SafetySpec) -> Tuple[np.ndarray, np.ndarray]:
    """Pack quadrotor box constraints into (box[6], scales[3]) arrays.

    Expects exactly the three axis constraints in x, y, z order.
    """
    by_kind = {c.kind: c for c in spec.constraints}
    if set(by_kind) != set(BOX_KINDS) or len(spec.constraints) != 3:
        raise ValueError("quadrotor safety spec must be exactly box_x, box_y, box_z")
    box = np.zeros(6)
    scales = np.ones(3)
    for i, k in enumerate(BOX_KINDS):
        c = by_kind[k]
        box[i] = float(c.params["center"])
        box[3 + i] = float(c.params["half"])
        scales[i] = c.scale
    return box, scales
