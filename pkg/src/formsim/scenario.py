"""Declarative scenario configs: YAML schema, validation, serialization.

A scenario fully determines a run: robot count and coordination edges,
mode, per-robot initial conditions and desired-trajectory profiles, the
diagonal gain vectors, integration step and horizon, and trace sampling.
Gains may be given per robot (3, 2, or 6 numbers broadcast to all robots)
or in full stacked form. See the README for an annotated example.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .adaptive import RobotParams
from .graph import GraphError, validate_spanning_tree
from .trajectory import ConstantTwist, SampledTwist, SingularSpeed

__all__ = [
    "ParseError",
    "SchemaError",
    "ValidationError",
    "RobotSpec",
    "ScenarioConfig",
    "load_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "serialize_scenario",
]


class ParseError(ValueError):
    """Input text is not well-formed YAML."""


class SchemaError(ValueError):
    """Missing or wrongly typed fields."""


class ValidationError(ValueError):
    """Structurally valid config with inconsistent content."""


@dataclass(frozen=True)
class RobotSpec:
    """One robot's initial conditions, plant parameters, and profile."""

    start: tuple
    profile: object
    start_twist: tuple = None
    estimate0: tuple = None
    params: RobotParams = None


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    unit: str
    mode: str
    n: int
    edges: tuple
    robots: tuple
    formation_gain: tuple
    dt: float
    t_final: float
    sample_every: int
    twist_gain: tuple = None
    adapt_gain: tuple = None
    threshold: float = None
    tree: object = field(default=None, compare=False)


def _need(d, key, context):
    if key not in d:
        raise SchemaError(f"missing field {key!r} in {context}")
    return d[key]


def _floats(value, length, context):
    try:
        arr = [float(v) for v in np.asarray(value, dtype=float).reshape(-1)]
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{context}: expected numbers, got {value!r}") \
            from exc
    if len(arr) != length:
        raise SchemaError(f"{context}: expected {length} values, "
                          f"got {len(arr)}")
    if not all(np.isfinite(arr)):
        raise ValidationError(f"{context}: values must be finite")
    return tuple(arr)


def _gain(value, n, width, context):
    """Accept one per-robot block of ``width`` gains or the full vector."""
    flat = np.asarray(value, dtype=float).reshape(-1)
    if len(flat) == width:
        flat = np.tile(flat, n)
    if len(flat) != width * n:
        raise SchemaError(f"{context}: expected {width} or {width * n} "
                          f"values, got {len(flat)}")
    if not np.all(np.isfinite(flat)) or np.any(flat <= 0):
        raise ValidationError(f"{context}: gains must be positive")
    return tuple(float(v) for v in flat)


def _profile_from_dict(d, context):
    kind = _need(d, "kind", context)
    if kind == "constant_twist":
        start = _floats(_need(d, "start", context), 3, f"{context}.start")
        twist = _floats(_need(d, "twist", context), 2, f"{context}.twist")
        return ConstantTwist(pose0=start, v=twist[0], omega=twist[1])
    if kind == "sampled_twist":
        start = _floats(_need(d, "start", context), 3, f"{context}.start")
        times = np.asarray(_need(d, "times", context), dtype=float)
        twists = np.asarray(_need(d, "twists", context), dtype=float)
        rates = np.asarray(_need(d, "rates", context), dtype=float)
        kwargs = {}
        if "grid_dt" in d:
            kwargs["grid_dt"] = float(d["grid_dt"])
        return SampledTwist(pose0=start, times=times, twists=twists,
                            rates=rates, **kwargs)
    raise SchemaError(f"{context}: unknown trajectory kind {kind!r}")


def _profile_to_dict(p):
    if isinstance(p, ConstantTwist):
        return {"kind": "constant_twist", "start": list(p.pose0),
                "twist": [p.v, p.omega]}
    return {"kind": "sampled_twist", "start": list(p.pose0),
            "times": p.times.tolist(), "twists": p.twists.tolist(),
            "rates": p.rates.tolist(), "grid_dt": p.grid_dt}


def scenario_from_dict(doc):
    if not isinstance(doc, dict):
        raise SchemaError(f"top level must be a mapping, got "
                          f"{type(doc).__name__}")
    mode = _need(doc, "mode", "config")
    if mode not in ("kinematic", "dynamic"):
        raise SchemaError(f"mode must be kinematic or dynamic, got {mode!r}")
    robots_doc = _need(doc, "robots", "config")
    if not isinstance(robots_doc, list) or not robots_doc:
        raise SchemaError("robots must be a non-empty list")
    n = len(robots_doc)
    if "n" in doc and int(doc["n"]) != n:
        raise ValidationError(f"n={doc['n']} but {n} robots listed")
    edges = [tuple(int(v) for v in e) for e in doc.get("edges", [])]

    try:
        tree = validate_spanning_tree(n, edges)
    except GraphError as exc:
        raise ValidationError(f"bad coordination graph: {exc}") from exc

    dt = float(_need(doc, "dt", "config"))
    t_final = float(_need(doc, "t_final", "config"))
    sample_every = int(doc.get("sample_every", 10))
    if dt <= 0 or t_final <= 0:
        raise ValidationError("dt and t_final must be positive")
    if sample_every < 1:
        raise ValidationError("sample_every must be at least 1")
    threshold = doc.get("threshold")
    if threshold is not None:
        threshold = float(threshold)
        if threshold <= 0:
            raise ValidationError("threshold must be positive")

    gains = _need(doc, "gains", "config")
    formation_gain = _gain(_need(gains, "formation", "gains"), n, 3,
                           "gains.formation")
    twist_gain = adapt_gain = None
    if mode == "dynamic":
        twist_gain = _gain(_need(gains, "twist", "gains"), n, 2,
                           "gains.twist")
        adapt_gain = _gain(_need(gains, "adaptation", "gains"), n, 6,
                           "gains.adaptation")

    robots = []
    for idx, rd in enumerate(robots_doc, start=1):
        ctx = f"robots[{idx}]"
        try:
            profile = _profile_from_dict(_need(rd, "trajectory", ctx),
                                         f"{ctx}.trajectory")
        except SingularSpeed as exc:
            raise SingularSpeed(f"{ctx}: {exc}") from exc
        start = _floats(_need(rd, "start", ctx), 3, f"{ctx}.start")
        if mode == "kinematic":
            robots.append(RobotSpec(start=start, profile=profile))
            continue
        twist0 = _floats(rd.get("start_twist", (0.0, 0.0)), 2,
                         f"{ctx}.start_twist")
        est0 = _floats(rd.get("estimate0", (0.0,) * 6), 6,
                       f"{ctx}.estimate0")
        pd = _need(rd, "params", ctx)
        try:
            params = RobotParams(
                mass=float(_need(pd, "mass", f"{ctx}.params")),
                inertia=float(_need(pd, "inertia", f"{ctx}.params")),
                damping=np.asarray(_need(pd, "damping", f"{ctx}.params"),
                                   dtype=float),
            )
        except ValueError as exc:
            raise ValidationError(f"{ctx}.params: {exc}") from exc
        robots.append(RobotSpec(start=start, profile=profile,
                                start_twist=twist0, estimate0=est0,
                                params=params))

    for spec in robots:
        p = spec.profile
        if isinstance(p, SampledTwist) and p.span < t_final:
            raise ValidationError(
                f"sampled trajectory spans {p.span:g} < t_final {t_final:g}"
            )

    return ScenarioConfig(
        name=str(doc.get("name", "scenario")), unit=str(doc.get("unit", "m")),
        mode=mode, n=n, edges=tuple(edges), robots=tuple(robots),
        formation_gain=formation_gain, twist_gain=twist_gain,
        adapt_gain=adapt_gain, dt=dt, t_final=t_final,
        sample_every=sample_every, threshold=threshold, tree=tree,
    )


def scenario_to_dict(config):
    doc = {
        "name": config.name,
        "unit": config.unit,
        "mode": config.mode,
        "n": config.n,
        "edges": [list(e) for e in config.edges],
        "dt": config.dt,
        "t_final": config.t_final,
        "sample_every": config.sample_every,
        "gains": {"formation": list(config.formation_gain)},
        "robots": [],
    }
    if config.threshold is not None:
        doc["threshold"] = config.threshold
    if config.mode == "dynamic":
        doc["gains"]["twist"] = list(config.twist_gain)
        doc["gains"]["adaptation"] = list(config.adapt_gain)
    for spec in config.robots:
        rd = {"start": list(spec.start),
              "trajectory": _profile_to_dict(spec.profile)}
        if config.mode == "dynamic":
            rd["start_twist"] = list(spec.start_twist)
            rd["estimate0"] = list(spec.estimate0)
            rd["params"] = {"mass": spec.params.mass,
                            "inertia": spec.params.inertia,
                            "damping": spec.params.damping.tolist()}
        doc["robots"].append(rd)
    return doc


def serialize_scenario(config):
    return yaml.safe_dump(scenario_to_dict(config), sort_keys=False)


def load_scenario(source):
    """Load a config from a file path or from YAML text."""
    if isinstance(source, Path):
        text = source.read_text()
    elif isinstance(source, str) and "\n" not in source \
            and Path(source).exists():
        text = Path(source).read_text()
    else:
        text = source
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"config is not valid YAML: {exc}") from exc
    return scenario_from_dict(doc)
