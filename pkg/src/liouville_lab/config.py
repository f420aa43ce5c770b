"""JSON schemas for run configs; every subcommand validates before computing.

Unknown keys are rejected everywhere (``additionalProperties: false``).  A
config may also carry ``seed`` and ``output_dir``; command-line flags win.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

NUMBER = {"type": "number"}
POS = {"type": "number", "exclusiveMinimum": 0}
INT1 = {"type": "integer", "minimum": 1}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


NONLINEARITY = _obj({
    "kind": {"enum": ["scalar-power", "scalar-quadratic", "gradient-coupled", "quadratic-system"]},
    "p": {"type": "number", "exclusiveMinimum": 1},
    "q": {"type": "number", "exclusiveMinimum": -1},
    "beta": NUMBER,
    "delta": NUMBER,
}, ["kind"])

GEOMETRY = _obj({
    "kind": {"enum": ["line", "half-line", "radial-ball", "radial-space"]},
    "size": POS,
    "n": INT1,
    "left": {"enum": ["dirichlet", "neumann", "symmetric"]},
    "right": {"enum": ["dirichlet", "neumann"]},
}, ["kind", "size"])

PERTURBATION = _obj({"lam": NUMBER, "gamma": NUMBER})

SOLVER = _obj({
    "nx": {"type": "integer", "minimum": 8},
    "safety": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    "dt_max": POS,
    "blowup_norm": POS,
    "dt_min": POS,
})

COMBO = _obj({
    "coeffs": {"type": "array", "items": NUMBER, "minItems": 1},
    "cap": {"type": "integer", "minimum": 0},
    "label": {"type": "string"},
}, ["coeffs", "cap"])

CONE = _obj({
    "preset": {"enum": ["K", "K+"]},
    "caps": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 4, "maxItems": 4},
    "cap": {"type": "integer", "minimum": 0},
    "sign_indices": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    "combos": {"type": "array", "items": COMBO},
})

AMPLITUDE = {"oneOf": [NUMBER, {"type": "array", "items": NUMBER, "minItems": 1}]}

PRESET = _obj({
    "kind": {"enum": ["gaussian", "eigenmode", "flat", "random-in-cone"]},
    "amplitude": AMPLITUDE,
    "center": NUMBER,
    "width": POS,
    "mode": INT1,
    "cone": CONE,
    "seed": {"type": "integer", "minimum": 0},
    "modes": INT1,
}, ["kind"])

COMMON = {"seed": {"type": "integer", "minimum": 0}, "output_dir": {"type": "string"}}

SIMULATION = {
    "nonlinearity": NONLINEARITY,
    "geometry": GEOMETRY,
    "perturbation": PERTURBATION,
    "solver": SOLVER,
    "initial_data": PRESET,
    "t_stop": POS,
    "sup_stop": POS,
    "save_every": {"type": "integer", "minimum": 0},
    "max_steps": INT1,
}

FRAME = _obj({
    "k": {"oneOf": [POS, {"const": "auto"}]},
    "a": {"oneOf": [NUMBER, {"const": "auto"}]},
    "span": POS,
    "ds": POS,
    "radius": POS,
    "h": POS,
})

XI_RANGE = _obj({"start": NUMBER, "stop": NUMBER, "num": INT1, "direction": {"type": "array", "items": NUMBER}},
                ["start", "stop", "num"])

SCHEMAS = {
    "nl-check": _obj({**COMMON, "nonlinearity": NONLINEARITY, "samples": INT1, "tol": POS, "fd_tol": POS},
                     ["nonlinearity"]),
    "simulate": _obj({**COMMON, **SIMULATION, "with_energy": {"type": "boolean"}},
                     ["nonlinearity", "geometry", "initial_data"]),
    "rescale": _obj({**COMMON, **SIMULATION, "frame": FRAME, "tol": POS},
                    ["nonlinearity", "geometry", "initial_data"]),
    "zeros": _obj({**COMMON, **SIMULATION, "cone": CONE}, ["nonlinearity", "geometry", "initial_data", "cone"]),
    "shoot": _obj({
        **COMMON, "nonlinearity": NONLINEARITY, "n": INT1, "mode": {"enum": ["radial", "half-line"]},
        "r_max": POS, "decay_tol": POS, "cone": CONE,
        "xi": {"oneOf": [XI_RANGE, {"type": "array", "minItems": 1,
                                    "items": {"oneOf": [NUMBER, {"type": "array", "items": NUMBER}]}}]},
    }, ["nonlinearity", "n", "xi"]),
    "schedule": _obj({**COMMON, "n": INT1, "p": {"type": "number", "exclusiveMinimum": 1}, "gamma": POS,
                      "ladder": {"type": "boolean"}, "eta": {"type": "number", "exclusiveMinimum": 0,
                                                             "exclusiveMaximum": 1}},
                     ["n", "p"]),
    "bounds": _obj({
        **COMMON, **{k: v for k, v in SIMULATION.items() if k != "initial_data"},
        "initial_data": {"oneOf": [PRESET, {"type": "array", "items": PRESET}]},
        "id": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "cone": CONE, "runs": INT1, "scale": POS,
    }, ["nonlinearity", "geometry", "initial_data"]),
    "report": _obj({**COMMON, "campaign_dir": {"type": "string"}}, ["campaign_dir"]),
}


class ConfigError(ValueError):
    def __init__(self, message: str, pointer: str = "", schema_path: str = ""):
        super().__init__(message)
        self.pointer = pointer
        self.schema_path = schema_path


def load(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("the config must be a JSON object")
    return data


def validate(command: str, config: dict) -> dict:
    """Validate against the subcommand's schema; raise ConfigError with a JSON pointer."""
    schema = SCHEMAS[command]
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(config), key=lambda e: ([str(q) for q in e.absolute_path], e.message))
    if errors:
        err = errors[0]
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise ConfigError(f"{err.message} (at {pointer})", pointer,
                          "/" + "/".join(str(p) for p in err.absolute_schema_path))
    return config


def schema_help(command: str) -> str:
    return json.dumps(SCHEMAS[command], indent=2, sort_keys=True)
