"""JSON scenario files: schema, loading and the inverse serialization.

Units are SI throughout except the angle limits, which are given in
degrees (``angle_max_deg``, ``rate_max_deg``). Agent states ``x0`` follow
the model layout ``[px, dpx, theta, dtheta, py, dpy, phi, dphi]`` in
radians; an agent may instead give ``position`` and optional ``velocity``.
A ``null`` limit means that channel is unbounded.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from .coverage import ControllerGains, PlannerParams, SampleField
from .dynamics import ModelLimits
from .errors import InvalidParameter, ParseError, ScenarioInvalid, SchemaError
from .geometry import CIRCLE, RECT, Obstacle
from .safety import ApfGains, CbfParams
from .sim import FILTER_MODES, AgentSpec, Scenario, validate

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_VEC2 = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_POS_OR_NULL = {"anyOf": [_POS, {"type": "null"}]}


def _obj(properties: dict, required=()) -> dict:
    return {"type": "object", "properties": properties, "required": list(required), "additionalProperties": False}


SCHEMA = _obj(
    {
        "name": {"type": "string"},
        "model": _obj({"dt": _POS, "g": _POS, "J": _POS}),
        "limits": _obj(
            {
                "tau_max": _POS_OR_NULL,
                "speed_max": _POS_OR_NULL,
                "angle_max_deg": _POS_OR_NULL,
                "rate_max_deg": _POS_OR_NULL,
            }
        ),
        "agents": {
            "type": "array",
            "minItems": 1,
            "items": _obj(
                {
                    "x0": {"type": "array", "items": {"type": "number"}, "minItems": 8, "maxItems": 8},
                    "position": _VEC2,
                    "velocity": _VEC2,
                    "comm_range": _POS,
                }
            ),
        },
        "obstacles": {
            "type": "array",
            "items": {
                **_obj(
                    {
                        "type": {"enum": [CIRCLE, RECT]},
                        "center": _VEC2,
                        "radius": _POS,
                        "length": _POS,
                        "width": _POS,
                        "id": {"type": "integer"},
                    },
                    required=("type", "center"),
                ),
                "if": {"properties": {"type": {"const": CIRCLE}}},
                "then": {"required": ["radius"], "not": {"anyOf": [{"required": ["length"]}, {"required": ["width"]}]}},
                "else": {"required": ["length", "width"], "not": {"required": ["radius"]}},
            },
        },
        "field": _obj(
            {
                "points": {"type": "array", "minItems": 1, "items": _VEC2},
                "weights": {"type": "array", "minItems": 1, "items": _NONNEG},
            },
            required=("points", "weights"),
        ),
        "planner": _obj(
            {
                "n_lsp": {"type": "integer", "minimum": 1},
                "horizon": {"type": "integer", "minimum": 1},
                "discount": _POS,
                "cov_radius": _POS,
                "cov_rate": _POS,
                "goal_tol": _POS,
            }
        ),
        "gains": _obj(
            {
                "k_p": {"type": "number"},
                "k_d": {"type": "number"},
                "k_a": {"type": "number"},
                "k_r": {"type": "number"},
                "max_position_error": _POS_OR_NULL,
            },
            required=("k_p", "k_d", "k_a", "k_r"),
        ),
        "safety": _obj(
            {
                "mode": {"enum": list(FILTER_MODES)},
                "K_v": _NONNEG,
                "eps_den": _POS,
                "use_h2": {"type": "boolean"},
                "k_rep": _NONNEG,
                "d_0": _POS,
                "torque_per_force": _NONNEG,
                "inter_agent_radius": _POS,
                "collision_threshold": _NONNEG,
            }
        ),
        "steps": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer"},
    },
    required=("agents", "field", "steps"),
)

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def json_path(parts) -> str:
    """``["obstacles", 0, "radius"]`` -> ``"obstacles[0].radius"``."""
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "$"


def _check_schema(doc) -> None:
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if not errors:
        return
    err = jsonschema.exceptions.best_match(errors)
    # descend into the failing branch so the path names the offending leaf
    while err.context:
        err = jsonschema.exceptions.best_match(err.context)
    message = err.message
    if err.validator == "not" and isinstance(err.instance, dict):
        extra = sorted({"radius", "length", "width"} & set(err.instance))
        message = f"keys {extra} conflict for obstacle type {err.instance.get('type')!r}"
    raise SchemaError(json_path(err.absolute_path), message)


def _limit(value, default):
    if value is None:
        return math.inf
    return default if value is ... else value


def scenario_from_dict(doc: dict) -> Scenario:
    """Build and validate a Scenario from a parsed JSON document."""
    _check_schema(doc)
    try:
        return _build(doc)
    except InvalidParameter as exc:
        raise ScenarioInvalid(str(exc)) from exc


def _build(doc: dict) -> Scenario:
    model = doc.get("model", {})
    lim = doc.get("limits", {})
    tau = _limit(lim.get("tau_max", ...), 10.0)
    speed = _limit(lim.get("speed_max", ...), 1.75)
    angle = math.radians(_limit(lim.get("angle_max_deg", ...), 1.5))
    rate = math.radians(_limit(lim.get("rate_max_deg", ...), 15.0))
    limits = ModelLimits(
        np.array([tau, tau]),
        np.array([math.inf, speed, angle, rate, math.inf, speed, angle, rate]),
    )

    agents = []
    for i, a in enumerate(doc["agents"]):
        comm = a.get("comm_range", 100.0)
        if ("x0" in a) == ("position" in a):
            raise SchemaError(f"agents[{i}]", "give exactly one of 'x0' or 'position'")
        if "x0" in a:
            if "velocity" in a:
                raise SchemaError(f"agents[{i}].velocity", "'velocity' only goes with 'position'")
            agents.append(AgentSpec(np.array(a["x0"], dtype=float), comm))
        else:
            agents.append(AgentSpec.at(a["position"], a.get("velocity", (0.0, 0.0)), comm))

    obstacles = []
    for i, o in enumerate(doc.get("obstacles", [])):
        oid = o.get("id", i)
        if o["type"] == CIRCLE:
            obstacles.append(Obstacle.circle(o["center"], o["radius"], id=oid))
        else:
            obstacles.append(Obstacle.rect(o["center"], o["length"], o["width"], id=oid))

    fdoc = doc["field"]
    if len(fdoc["points"]) != len(fdoc["weights"]):
        raise SchemaError("field.weights", f"{len(fdoc['weights'])} weights for {len(fdoc['points'])} points")
    fld = SampleField(fdoc["points"], fdoc["weights"])

    gains = None
    if "gains" in doc:
        g = dict(doc["gains"])
        mpe = g.pop("max_position_error", None)
        gains = ControllerGains(**g, max_position_error=math.inf if mpe is None else mpe)

    safety = dict(doc.get("safety", {}))
    cbf_keys = ("K_v", "eps_den", "use_h2")
    apf_keys = ("k_rep", "d_0", "torque_per_force")
    sc = Scenario(
        agents=agents,
        obstacles=obstacles,
        field=fld,
        steps=doc["steps"],
        dt=model.get("dt", 0.1),
        g=model.get("g", 9.81),
        J=model.get("J", 1.0),
        limits=limits,
        planner=PlannerParams(**doc.get("planner", {})),
        gains=gains,
        cbf=CbfParams(**{k: safety[k] for k in cbf_keys if k in safety}),
        apf=ApfGains(**{k: safety[k] for k in apf_keys if k in safety}),
        filter_mode=safety.get("mode", "cbf"),
        inter_agent_radius=safety.get("inter_agent_radius", 5.0),
        collision_threshold=safety.get("collision_threshold", 5.0),
        seed=doc.get("seed", 0),
        name=doc.get("name", "scenario"),
    )
    validate(sc)
    return sc


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name} is not allowed")


def load_scenario(path) -> Scenario:
    """Read, schema-check and validate a scenario file.

    Raises ParseError for unreadable JSON, SchemaError naming the
    offending JSON path, and ScenarioInvalid for violated invariants.
    OSError propagates for I/O failures.
    """
    text = Path(path).read_bytes()
    try:
        doc = json.loads(text.decode("utf-8"), parse_constant=_reject_constant)
    except (UnicodeDecodeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return scenario_from_dict(doc)


def _finite_or_none(v: float):
    return None if math.isinf(v) else float(v)


def _degrees_exact(rad: float):
    """Shortest degree value that converts back to exactly ``rad``."""
    if math.isinf(rad):
        return None
    deg = math.degrees(rad)
    for digits in range(1, 18):
        d = float(f"{deg:.{digits}g}")
        if math.radians(d) == rad:
            return d
    return deg


def scenario_to_dict(sc: Scenario) -> dict:
    """Inverse of :func:`scenario_from_dict` with every default resolved."""
    model = sc.model()
    gains = sc.resolved_gains(model)
    u_max = sc.limits.u_max
    x_max = sc.limits.x_max if sc.limits.x_max is not None else np.full(8, math.inf)
    if u_max[0] != u_max[1] or not np.array_equal(x_max[:4], x_max[4:]) or np.isfinite(x_max[0]):
        raise ScenarioInvalid("limits are not expressible in the file format")
    obstacles = []
    for o in sc.obstacles:
        d = {"type": o.kind, "center": [float(c) for c in o.center], "id": int(o.id)}
        if o.kind == CIRCLE:
            d["radius"] = float(o.radius)
        else:
            d["length"], d["width"] = float(o.length), float(o.width)
        obstacles.append(d)
    return {
        "name": sc.name,
        "model": {"dt": sc.dt, "g": sc.g, "J": sc.J},
        "limits": {
            "tau_max": _finite_or_none(u_max[0]),
            "speed_max": _finite_or_none(x_max[1]),
            "angle_max_deg": _degrees_exact(float(x_max[2])),
            "rate_max_deg": _degrees_exact(float(x_max[3])),
        },
        "agents": [{"x0": [float(v) for v in a.x0], "comm_range": float(a.comm_range)} for a in sc.agents],
        "obstacles": obstacles,
        "field": {"points": sc.field.points.tolist(), "weights": sc.field.weights.tolist()},
        "planner": {
            "n_lsp": sc.planner.n_lsp,
            "horizon": sc.planner.horizon,
            "discount": sc.planner.discount,
            "cov_radius": sc.planner.cov_radius,
            "cov_rate": sc.planner.cov_rate,
            "goal_tol": sc.planner.goal_tol,
        },
        "gains": {
            "k_p": gains.k_p,
            "k_d": gains.k_d,
            "k_a": gains.k_a,
            "k_r": gains.k_r,
            "max_position_error": _finite_or_none(gains.max_position_error),
        },
        "safety": {
            "mode": sc.filter_mode,
            "K_v": sc.cbf.K_v,
            "eps_den": sc.cbf.eps_den,
            "use_h2": sc.cbf.use_h2,
            "k_rep": sc.apf.k_rep,
            "d_0": sc.apf.d_0,
            "torque_per_force": sc.apf.torque_per_force,
            "inter_agent_radius": sc.inter_agent_radius,
            "collision_threshold": sc.collision_threshold,
        },
        "steps": sc.steps,
        "seed": sc.seed,
    }
