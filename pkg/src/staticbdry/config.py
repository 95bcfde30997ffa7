"""Run configuration: JSON document, schema validation, and metric construction."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import jsonschema

from . import catalog
from .cohomog1 import Cohomog1Metric
from .curvature import ChartMetric, Face
from .integrals import QuadratureSettings
from .static_ops import PotentialSpec, SamplePlan

__all__ = ["SCHEMA", "ConfigError", "RunConfig", "from_dict", "load_config", "read_document", "validate"]


class ConfigError(ValueError):
    """Invalid configuration; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


_bound = {"oneOf": [{"type": "number"}, {"enum": ["inf", "-inf"]}]}
_interval = {"type": "array", "items": _bound, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "metric": {
            "type": "object",
            "oneOf": [
                {"required": ["example"]},
                {"required": ["cohomog1"]},
                {"required": ["chart"]},
            ],
            "additionalProperties": False,
            "properties": {
                "example": {"enum": sorted(catalog.EXAMPLES)},
                "params": {"type": "object", "additionalProperties": {"type": ["number", "boolean"]}},
                "cohomog1": {
                    "type": "object",
                    "required": ["n", "A", "B"],
                    "additionalProperties": False,
                    "properties": {
                        "n": {"type": "integer", "minimum": 2},
                        "A": {"type": "string"},
                        "B": {"type": "string"},
                        "kappa": {"type": "number"},
                        "vol": {"type": "number", "exclusiveMinimum": 0},
                        "fiber_flat": {"type": "boolean"},
                        "domain": _interval,
                        "boundary": {"enum": ["lower", "upper"]},
                        "coord": {"type": "string", "pattern": "^[A-Za-z_][A-Za-z_0-9]*$"},
                    },
                },
                "chart": {
                    "type": "object",
                    "required": ["coords", "components", "domain", "face"],
                    "additionalProperties": False,
                    "properties": {
                        "coords": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                        "components": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
                        "domain": {"type": "array", "items": _interval},
                        "face": {
                            "type": "object",
                            "required": ["index", "end"],
                            "additionalProperties": False,
                            "properties": {"index": {"type": "integer", "minimum": 0},
                                           "end": {"enum": ["lower", "upper"]}},
                        },
                    },
                },
            },
        },
        "potential": {"type": "string"},
        "positivity": {"enum": ["interior", "everywhere"]},
        "H": {"type": "number"},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "samples": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "interior": {"type": "integer", "minimum": 1},
                "boundary": {"type": "integer", "minimum": 1},
                "extent": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rel_tol": {"type": "number", "exclusiveMinimum": 0},
                "abs_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_panels": {"type": "integer", "minimum": 8},
                "r_max": {"type": "number", "exclusiveMinimum": 0},
                "tail_points": {"type": "integer", "minimum": 4},
                "scan_points": {"type": "integer", "minimum": 4},
            },
        },
        "radii": {"type": "array", "items": {"type": "number"}},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"csv": {"type": "string"}}},
    },
    "required": ["metric"],
}


def _path(err) -> str:
    out = "$"
    for part in err.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def validate(doc: dict) -> None:
    v = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(v.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = max(errors, key=lambda e: len(e.absolute_path))
        raise ConfigError(err.message, _path(err))


def _num(x) -> float:
    return {"inf": math.inf, "-inf": -math.inf}.get(x, x) if isinstance(x, str) else float(x)


@dataclass
class RunConfig:
    doc: dict
    metric: object
    potential: PotentialSpec
    H: Optional[float]
    tolerance: float = 1e-8
    plan: SamplePlan = field(default_factory=SamplePlan)
    quad: QuadratureSettings = field(default_factory=QuadratureSettings)
    radii: tuple = (5.0, 10.0, 50.0)
    csv_path: Optional[str] = None
    descriptor: Optional[catalog.ExampleDescriptor] = None

    @property
    def face(self) -> Optional[Face]:
        return getattr(self.metric, "face", None)


def _build_metric(spec: dict):
    if "example" in spec:
        try:
            desc = catalog.build(spec["example"], **spec.get("params", {}))
        except TypeError as exc:
            raise ConfigError(str(exc), "$.metric.params") from None
        except (ValueError, ArithmeticError) as exc:
            raise ConfigError(str(exc), "$.metric") from None
        return desc.metric, desc
    if "params" in spec:
        raise ConfigError("params only apply to catalog examples", "$.metric.params")
    if "cohomog1" in spec:
        c = dict(spec["cohomog1"])
        if "domain" in c:
            c["domain"] = tuple(_num(x) for x in c["domain"])
        try:
            return Cohomog1Metric(**c), None
        except Exception as exc:
            raise ConfigError(str(exc), "$.metric.cohomog1") from None
    c = spec["chart"]
    try:
        return ChartMetric(c["coords"], c["components"], [tuple(_num(x) for x in d) for d in c["domain"]],
                           face=Face(c["face"]["index"], c["face"]["end"])), None
    except Exception as exc:
        raise ConfigError(str(exc), "$.metric.chart") from None


def from_dict(doc: dict) -> RunConfig:
    validate(doc)
    metric, desc = _build_metric(doc["metric"])
    if "potential" in doc:
        try:
            pot = PotentialSpec(doc["potential"], doc.get("positivity", "everywhere"))
        except Exception as exc:
            raise ConfigError(str(exc), "$.potential") from None
    elif desc is not None:
        pot = desc.potential
    else:
        raise ConfigError("a potential is required for a custom metric", "$.potential")
    H = doc.get("H")
    if H is None and desc is not None and "potential" not in doc:
        H = desc.H_const
    try:
        quad = QuadratureSettings(**doc.get("quadrature", {}))
    except ValueError as exc:
        raise ConfigError(str(exc), "$.quadrature") from None
    return RunConfig(
        doc=doc, metric=metric, potential=pot, H=H,
        tolerance=doc.get("tolerance", 1e-8),
        plan=SamplePlan(**doc.get("samples", {})),
        quad=quad,
        radii=tuple(doc.get("radii", (5.0, 10.0, 50.0))),
        csv_path=doc.get("output", {}).get("csv"),
        descriptor=desc,
    )


def read_document(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")
    return doc


def load_config(path: str) -> RunConfig:
    return from_dict(read_document(path))
