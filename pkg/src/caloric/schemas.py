"""JSON schemas for experiment configs and emitted reports."""
from __future__ import annotations

import jsonschema

NUM = {"type": "number"}
VEC = {"type": "array", "items": NUM, "minItems": 1}
POINT_ROW = {"type": "array", "items": NUM, "minItems": 2}
BOX = {"type": "object", "required": ["lo", "hi"],
       "properties": {"lo": POINT_ROW, "hi": POINT_ROW}}
GRID = {"type": "object", "required": ["lo", "hi", "counts"],
        "properties": {"lo": POINT_ROW, "hi": POINT_ROW,
                       "counts": {"oneOf": [{"type": "integer", "minimum": 1},
                                            {"type": "array", "items": {"type": "integer", "minimum": 1}}]}}}
ORDER = {"type": "object", "properties": {"j": {"type": "integer", "minimum": 0},
                                          "alpha": {"type": "array", "items": {"type": "integer", "minimum": 0}}}}
FIELD = {"type": "object"}
MAP = {"type": "object", "properties": {"a": {"oneOf": [NUM, {"type": "object", "required": ["p", "a"]}]},
                                        "U0": NUM, "U1": {"type": "number", "exclusiveMinimum": 0}}}
BOXPAIR = {"type": "object", "required": ["K", "U"], "properties": {"K": BOX, "U": BOX}}
REGION = {"type": "object", "properties": {
    "n": {"type": "integer", "minimum": 1},
    "ambient": {"oneOf": [{"type": "null"}, BOX]},
    "obstacles": {"type": "array", "items": BOX}}}
POLES = {"oneOf": [
    {"type": "array", "items": POINT_ROW},
    {"type": "object", "required": ["grid"], "properties": {
        "grid": GRID,
        "exclude": {"type": "array", "items": BOX},
        "shuffle_seed": {"type": "integer"}}}]}
DICTIONARY = {"type": "object", "properties": {
    "k_max": {"type": "number", "exclusiveMinimum": 0}, "dk": {"type": "number", "exclusiveMinimum": 0},
    "degree": {"type": "integer", "minimum": 0},
    "kinds": {"type": "array", "items": {"enum": ["exponential", "trig", "heat_polynomial"]}},
    "members": {"type": "array", "items": FIELD}}}
POS = {"type": "number", "exclusiveMinimum": 0}


COMMAND_NAMES = ("kernel-eval", "approx-riemann", "approx-fit", "burgers-transform", "burgers-compose",
                 "burgers-residual", "universal-ladder", "universal-series", "universal-translates",
                 "runge-jones", "runge-diaz", "poles-validate")


def _cfg(required, props):
    base = {"seed": {"type": "integer"}, "description": {"type": "string"},
            "command": {"enum": list(COMMAND_NAMES)}}
    base.update(props)
    return {"type": "object", "required": list(required), "properties": base}


CONFIG_SCHEMAS = {
    "kernel-eval": _cfg(["grid"], {"grid": GRID, "orders": {"type": "array", "items": ORDER},
                                   "j_max": {"type": "integer"}, "a_max": {"type": "integer"}}),
    "approx-riemann": _cfg(["target", "boxes"], {
        "target": FIELD, "boxes": BOXPAIR, "mesh": POS,
        "meshes": {"type": "array", "items": POS, "minItems": 1},
        "grid_count": {"type": "integer", "minimum": 2}}),
    "approx-fit": _cfg(["poles"], {
        "n": {"type": "integer", "minimum": 1}, "target": FIELD, "sample_grid": GRID,
        "samples_csv": {"type": "string"}, "poles": POLES,
        "orders": {"type": "array", "items": ORDER},
        "reg": POS, "method": {"enum": ["lstsq", "greedy"]},
        "max_terms": {"type": "integer", "minimum": 0}, "tol": {"type": "number", "minimum": 0}}),
    "burgers-transform": _cfg(["map", "heat_field", "grid"], {
        "map": MAP, "heat_field": FIELD, "grid": GRID, "h": POS,
        "residual_tol": POS}),
    "burgers-compose": _cfg(["map", "fields", "grid"], {
        "map": MAP, "fields": {"type": "array", "items": FIELD, "minItems": 2}, "grid": GRID,
        "h": POS, "residual_tol": POS}),
    "burgers-residual": _cfg(["map", "heat_field", "points"], {
        "map": MAP, "heat_field": FIELD, "points": {"type": "array", "items": POINT_ROW, "minItems": 1},
        "h": POS, "floor": {"type": "number", "minimum": 0}, "ratio": POS}),
    "universal-ladder": _cfg(["rungs"], {
        "n": {"type": "integer", "minimum": 1}, "dictionary": DICTIONARY,
        "grid_count": {"type": "integer", "minimum": 2}, "reg": POS,
        "rungs": {"type": "array", "items": {"type": "object", "required": ["target", "eps"], "properties": {
            "target": FIELD, "eps": POS, "box": BOX,
            "ball": {"type": "object", "required": ["center", "radius"],
                     "properties": {"center": POINT_ROW, "radius": POS}}}}}}),
    "universal-series": _cfg(["grid", "targets", "tols", "poles"], {
        "grid": GRID, "targets": {"type": "array", "items": FIELD},
        "tols": {"type": "array", "items": POS}, "poles": POLES,
        "block_size": {"type": "integer", "minimum": 1}, "reg": POS, "map": MAP}),
    "universal-translates": _cfg(["targets", "radii"], {
        "n": {"type": "integer", "minimum": 1}, "dictionary": DICTIONARY,
        "targets": {"type": "array", "items": FIELD}, "radii": {"type": "array", "items": POS},
        "gap": POS, "axis": {"type": "integer", "minimum": 0},
        "grid_count": {"type": "integer", "minimum": 2}, "reg": POS, "map": MAP}),
    "runge-jones": _cfg(["region"], {"region": REGION, "resolution": {"type": "integer", "minimum": 8}}),
    "runge-diaz": _cfg(["omega1", "omega2"], {"omega1": REGION, "omega2": REGION,
                                              "resolution": {"type": "integer", "minimum": 8}}),
    "poles-validate": _cfg(["K", "U", "poles"], {
        "K": {"type": "array", "items": BOX}, "U": BOX, "poles": POLES,
        "resolution": {"type": "integer", "minimum": 8}}),
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["command", "status", "exit_code", "inputs", "results", "display", "artifacts"],
    "properties": {
        "command": {"enum": sorted(CONFIG_SCHEMAS)},
        "status": {"enum": ["ok", "failed"]},
        "exit_code": {"enum": [0, 2]},
        "inputs": {"type": "object"},
        "results": {"type": "object"},
        "display": {"type": "object"},
        "artifacts": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}


def json_pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else "/"


def validate_config(command: str, doc) -> list:
    """Return a list of ``(json_pointer, message)`` schema violations."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMAS[command])
    errs = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    return [(json_pointer(e.absolute_path), e.message) for e in errs]


def validate_report(doc) -> list:
    validator = jsonschema.Draft202012Validator(REPORT_SCHEMA)
    return [(json_pointer(e.absolute_path), e.message) for e in validator.iter_errors(doc)]
