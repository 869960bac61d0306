"""Declarative run configurations for the command-line front end.

Configs are JSON documents with nested keys (sets, operators, schedules,
stopping rules).  Parsing validates strictly: unknown keys are rejected with
their full path, method/schedule compatibility is enforced up front, and a
parsed config serializes back to a canonical document that reparses to an
identical value.

Box bounds use ``null`` for an absent (infinite) bound, since JSON has no
infinity literal.  Custom callable schedules are not expressible here; the
schema covers constant, p-series and harmonic schedules.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .convex_sets import (
    Ball,
    Box,
    ConvexSet,
    FullSpace,
    Halfspace,
    Intersection,
    Simplex,
    fields_equal,
)
from .operators import (
    SCALING_KINDS,
    Affine,
    ExpGrowth1D,
    Operator,
    OperatorConstants,
    ScaledAffine,
    SqrtSign1D,
)
from .solvers import Constant, PSeries, StepsizeSchedule, StopCriteria
from .vi import ViProblem

METHODS = ("gpm_constant", "gpm_variable", "gpm_unbounded")

DEFAULT_MAX_ITERS = 100_000


class ConfigError(ValueError):
    """A config document violates the schema; the message names the key path."""


@dataclass(frozen=True)
class OutputConfig:
    trace: str = "trace.csv"
    summary: str = "summary.json"
    trace_every: int | None = None


@dataclass(frozen=True, eq=False)
class RunConfig:
    problem: ViProblem
    method: str
    schedule: StepsizeSchedule
    start: np.ndarray
    stop: StopCriteria
    output: OutputConfig
    seed: int

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return fields_equal(self, other)

    __hash__ = None


# ---------------------------------------------------------------------------
# Low-level helpers.
# ---------------------------------------------------------------------------


def _require_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    return value


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _check_keys(mapping: dict, path: str, required: tuple, optional: tuple = ()) -> None:
    for key in mapping:
        if key not in required and key not in optional:
            raise ConfigError(f"unknown key '{_join(path, key)}'")
    for key in required:
        if key not in mapping:
            raise ConfigError(f"missing key '{_join(path, key)}'")


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer")
    return value


def _vector(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty array of numbers")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _matrix(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty array of rows")
    rows = [_vector(row, f"{path}[{i}]") for i, row in enumerate(value)]
    if len({row.size for row in rows}) != 1:
        raise ConfigError(f"{path}: rows have unequal lengths")
    return np.stack(rows)


# ---------------------------------------------------------------------------
# Sets.
# ---------------------------------------------------------------------------


def _parse_bound(value, path: str, sign: float) -> float:
    # null stands for the absent bound on that side
    if value is None:
        return sign * math.inf
    return _number(value, path)


def parse_set(doc, path: str = "set") -> ConvexSet:
    doc = _require_mapping(doc, path)
    if "type" not in doc:
        raise ConfigError(f"missing key '{path}.type'")
    kind = doc["type"]
    if kind == "box":
        _check_keys(doc, path, ("type", "lower", "upper"))
        if not isinstance(doc["lower"], list) or not isinstance(doc["upper"], list):
            raise ConfigError(f"{path}: box bounds must be arrays")
        lower = [_parse_bound(v, f"{path}.lower[{i}]", -1.0) for i, v in enumerate(doc["lower"])]
        upper = [_parse_bound(v, f"{path}.upper[{i}]", 1.0) for i, v in enumerate(doc["upper"])]
        try:
            return Box(lower, upper)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if kind == "ball":
        _check_keys(doc, path, ("type", "center", "radius"))
        try:
            return Ball(_vector(doc["center"], f"{path}.center"), _number(doc["radius"], f"{path}.radius"))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if kind == "halfspace":
        _check_keys(doc, path, ("type", "normal", "offset"))
        try:
            return Halfspace(_vector(doc["normal"], f"{path}.normal"), _number(doc["offset"], f"{path}.offset"))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if kind == "simplex":
        _check_keys(doc, path, ("type", "dim"))
        return Simplex(_integer(doc["dim"], f"{path}.dim"))
    if kind == "fullspace":
        _check_keys(doc, path, ("type", "dim"))
        return FullSpace(_integer(doc["dim"], f"{path}.dim"))
    if kind == "intersection":
        _check_keys(doc, path, ("type", "members"))
        if not isinstance(doc["members"], list):
            raise ConfigError(f"{path}.members: expected an array")
        members = tuple(
            parse_set(member, f"{path}.members[{i}]") for i, member in enumerate(doc["members"])
        )
        try:
            return Intersection(members)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.type: unknown set type {kind!r}")


def serialize_set(s: ConvexSet) -> dict:
    if isinstance(s, Box):
        return {
            "type": "box",
            "lower": [None if v == -math.inf else float(v) for v in s.lower],
            "upper": [None if v == math.inf else float(v) for v in s.upper],
        }
    if isinstance(s, Ball):
        return {"type": "ball", "center": [float(v) for v in s.center], "radius": s.radius}
    if isinstance(s, Halfspace):
        return {"type": "halfspace", "normal": [float(v) for v in s.normal], "offset": s.offset}
    if isinstance(s, Simplex):
        return {"type": "simplex", "dim": s.n}
    if isinstance(s, FullSpace):
        return {"type": "fullspace", "dim": s.n}
    if isinstance(s, Intersection):
        return {"type": "intersection", "members": [serialize_set(m) for m in s.members]}
    raise TypeError(f"cannot serialize set {type(s).__name__}")


# ---------------------------------------------------------------------------
# Operators.
# ---------------------------------------------------------------------------


def _parse_constants(doc, path: str) -> OperatorConstants:
    if doc is None:
        return OperatorConstants()
    doc = _require_mapping(doc, path)
    _check_keys(doc, path, (), ("gamma", "lipschitz", "value_bound"))
    kwargs = {}
    for key in ("gamma", "lipschitz", "value_bound"):
        if key in doc and doc[key] is not None:
            kwargs[key] = _number(doc[key], f"{path}.{key}")
    try:
        return OperatorConstants(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_operator(doc, constants: OperatorConstants, path: str = "operator") -> Operator:
    doc = _require_mapping(doc, path)
    if "type" not in doc:
        raise ConfigError(f"missing key '{path}.type'")
    kind = doc["type"]
    try:
        if kind == "affine":
            _check_keys(doc, path, ("type", "matrix", "offset"))
            return Affine(
                _matrix(doc["matrix"], f"{path}.matrix"),
                _vector(doc["offset"], f"{path}.offset"),
                constants=constants,
            )
        if kind == "sqrt_sign_1d":
            _check_keys(doc, path, ("type",))
            return SqrtSign1D(constants=constants)
        if kind == "exp_growth_1d":
            _check_keys(doc, path, ("type",))
            return ExpGrowth1D(constants=constants)
        if kind == "scaled_affine":
            _check_keys(doc, path, ("type", "matrix", "offset", "scaling"), ("scale_value",))
            scaling = doc["scaling"]
            if scaling not in SCALING_KINDS:
                raise ConfigError(
                    f"{path}.scaling: unknown scaling {scaling!r}; pick one of {SCALING_KINDS}"
                )
            return ScaledAffine(
                _matrix(doc["matrix"], f"{path}.matrix"),
                _vector(doc["offset"], f"{path}.offset"),
                scaling,
                _number(doc.get("scale_value", 1.0), f"{path}.scale_value"),
                constants=constants,
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.type: unknown operator type {kind!r}")


def serialize_operator(op: Operator) -> dict:
    if isinstance(op, Affine):
        return {
            "type": "affine",
            "matrix": [[float(v) for v in row] for row in op.matrix],
            "offset": [float(v) for v in op.offset],
        }
    if isinstance(op, SqrtSign1D):
        return {"type": "sqrt_sign_1d"}
    if isinstance(op, ExpGrowth1D):
        return {"type": "exp_growth_1d"}
    if isinstance(op, ScaledAffine):
        return {
            "type": "scaled_affine",
            "matrix": [[float(v) for v in row] for row in op.matrix],
            "offset": [float(v) for v in op.offset],
            "scaling": op.scaling,
            "scale_value": op.scale_value,
        }
    raise TypeError(f"cannot serialize operator {type(op).__name__}")


def _serialize_constants(constants: OperatorConstants) -> dict:
    return {
        "gamma": constants.gamma,
        "lipschitz": constants.lipschitz,
        "value_bound": constants.value_bound,
    }


# ---------------------------------------------------------------------------
# Problems, schedules, stopping rules.
# ---------------------------------------------------------------------------


def parse_problem(doc, path: str = "problem") -> ViProblem:
    doc = _require_mapping(doc, path)
    _check_keys(doc, path, ("set", "operator"), ("constants", "reference_solution"))
    constants = _parse_constants(doc.get("constants"), _join(path, "constants"))
    parsed_set = parse_set(doc["set"], _join(path, "set"))
    operator = parse_operator(doc["operator"], constants, _join(path, "operator"))
    reference = doc.get("reference_solution")
    if reference is not None:
        reference = _vector(reference, _join(path, "reference_solution"))
    try:
        return ViProblem(parsed_set, operator, reference_solution=reference)
    except ValueError as exc:
        raise ConfigError(f"{path or 'problem'}: {exc}") from exc


def serialize_problem(problem: ViProblem) -> dict:
    doc = {
        "set": serialize_set(problem.set),
        "operator": serialize_operator(problem.operator),
        "constants": _serialize_constants(problem.operator.constants),
    }
    if problem.reference_solution is not None:
        doc["reference_solution"] = [float(v) for v in problem.reference_solution]
    else:
        doc["reference_solution"] = None
    return doc


def parse_schedule(doc, path: str = "schedule") -> StepsizeSchedule:
    doc = _require_mapping(doc, path)
    if "type" not in doc:
        raise ConfigError(f"missing key '{path}.type'")
    kind = doc["type"]
    try:
        if kind == "constant":
            _check_keys(doc, path, ("type", "value"))
            return Constant(_number(doc["value"], f"{path}.value"))
        if kind == "p_series":
            _check_keys(doc, path, ("type", "p"))
            return PSeries(_number(doc["p"], f"{path}.p"))
        if kind == "harmonic":
            _check_keys(doc, path, ("type",))
            return PSeries(1.0)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.type: unknown schedule type {kind!r}")


def serialize_schedule(schedule: StepsizeSchedule) -> dict:
    if isinstance(schedule, Constant):
        return {"type": "constant", "value": schedule.value}
    if isinstance(schedule, PSeries):
        return {"type": "p_series", "p": schedule.p}
    raise TypeError(f"cannot serialize schedule {type(schedule).__name__}")


def parse_stop(doc, path: str = "stop") -> StopCriteria:
    if doc is None:
        return StopCriteria(max_iters=DEFAULT_MAX_ITERS)
    doc = _require_mapping(doc, path)
    _check_keys(doc, path, (), ("step_tol", "residual_tol", "max_iters", "divergence_radius"))
    kwargs = {"max_iters": DEFAULT_MAX_ITERS}
    if "max_iters" in doc:
        kwargs["max_iters"] = _integer(doc["max_iters"], f"{path}.max_iters")
    if "step_tol" in doc:
        kwargs["step_tol"] = _number(doc["step_tol"], f"{path}.step_tol")
    if "residual_tol" in doc and doc["residual_tol"] is not None:
        kwargs["residual_tol"] = _number(doc["residual_tol"], f"{path}.residual_tol")
    if "divergence_radius" in doc:
        kwargs["divergence_radius"] = _number(doc["divergence_radius"], f"{path}.divergence_radius")
    try:
        return StopCriteria(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def serialize_stop(stop: StopCriteria) -> dict:
    return {
        "max_iters": stop.max_iters,
        "step_tol": stop.step_tol,
        "residual_tol": stop.residual_tol,
        "divergence_radius": stop.divergence_radius,
    }


def parse_output(doc, path: str = "output") -> OutputConfig:
    if doc is None:
        return OutputConfig()
    doc = _require_mapping(doc, path)
    _check_keys(doc, path, (), ("trace", "summary", "trace_every"))
    kwargs = {}
    if "trace" in doc:
        if not isinstance(doc["trace"], str):
            raise ConfigError(f"{path}.trace: expected a string path")
        kwargs["trace"] = doc["trace"]
    if "summary" in doc:
        if not isinstance(doc["summary"], str):
            raise ConfigError(f"{path}.summary: expected a string path")
        kwargs["summary"] = doc["summary"]
    if "trace_every" in doc and doc["trace_every"] is not None:
        value = _integer(doc["trace_every"], f"{path}.trace_every")
        if value < 1:
            raise ConfigError(f"{path}.trace_every: must be >= 1")
        kwargs["trace_every"] = value
    return OutputConfig(**kwargs)


def serialize_output(output: OutputConfig) -> dict:
    return {"trace": output.trace, "summary": output.summary, "trace_every": output.trace_every}


# ---------------------------------------------------------------------------
# Whole run configs.
# ---------------------------------------------------------------------------


def parse_config_dict(doc: dict) -> RunConfig:
    doc = _require_mapping(doc, "")
    _check_keys(
        doc,
        "",
        ("problem", "method", "schedule"),
        ("start", "stop", "output", "seed"),
    )
    problem = parse_problem(doc["problem"])
    method = doc["method"]
    if method not in METHODS:
        raise ConfigError(f"method: unknown method {method!r}; pick one of {METHODS}")
    schedule = parse_schedule(doc["schedule"])

    if method == "gpm_constant" and not isinstance(schedule, Constant):
        raise ConfigError("schedule: gpm_constant requires a constant-stepsize schedule")
    if method in ("gpm_variable", "gpm_unbounded") and isinstance(schedule, Constant):
        raise ConfigError("schedule violates diminishing condition")
    if method == "gpm_unbounded" and problem.operator.constants.gamma is None:
        raise ConfigError("problem.constants.gamma: gpm_unbounded needs a declared modulus")

    if "start" in doc and doc["start"] is not None:
        start = _vector(doc["start"], "start")
        if start.size != problem.dim:
            raise ConfigError(f"start: expected dimension {problem.dim}, got {start.size}")
    else:
        # canonical default: the projection of the origin onto the set
        start = problem.set.project(np.zeros(problem.dim))

    stop = parse_stop(doc.get("stop"))
    output = parse_output(doc.get("output"))
    seed = _integer(doc.get("seed", 0), "seed")
    return RunConfig(
        problem=problem,
        method=method,
        schedule=schedule,
        start=start,
        stop=stop,
        output=output,
        seed=seed,
    )


def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config_dict(doc)


def serialize_config(config: RunConfig) -> dict:
    """Canonical document with every default filled in; reparses identically."""
    return {
        "problem": serialize_problem(config.problem),
        "method": config.method,
        "schedule": serialize_schedule(config.schedule),
        "start": [float(v) for v in config.start],
        "stop": serialize_stop(config.stop),
        "output": serialize_output(config.output),
        "seed": config.seed,
    }


def config_to_json(config: RunConfig) -> str:
    return json.dumps(serialize_config(config), indent=2) + "\n"


def parse_problem_document(text: str) -> ViProblem:
    """Parse a bare problem document ``{"set": ..., "operator": ..., ...}``.

    Used by subcommands that need a problem but no solver settings.  A full
    run config is also accepted; its problem section is extracted.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    doc = _require_mapping(doc, "")
    if "problem" in doc:
        return parse_problem(doc["problem"])
    return parse_problem(doc, path="")
