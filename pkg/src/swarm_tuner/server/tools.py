"""Tool registry: descriptors, input schemas and implementations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import jsonschema

from ..swarm.params import PARAM_NAMES, HyperParams, HyperParamError
from .rpc import INVALID_PARAMS, RpcError

_NUM = {"type": "number", "minimum": 0}

# service caps so one call cannot pin the worker indefinitely
MAX_P_NUM = 10_000
MAX_P_ITER = 10_000

RUN_SCHEMA = {
    "type": "object",
    "properties": {
        "p_num": {"type": "integer", "minimum": 2, "maximum": MAX_P_NUM,
                  "description": "number of particles (p_num ≥ 2)"},
        "omega": dict(_NUM, description="inertia weight"),
        "c1": dict(_NUM, description="cognitive coefficient"),
        "c2": dict(_NUM, description="social coefficient"),
        "k1": dict(_NUM, description="weight of the min sum-rate"),
        "k2": dict(_NUM, description="weight of the speed penalty"),
        "k3": dict(_NUM, description="weight of the turning-angle penalty"),
        "k4": dict(_NUM, description="weight of the building penalty"),
        "p_iter": {"type": "integer", "minimum": 0, "maximum": MAX_P_ITER, "default": 50,
                   "description": "optimizer iterations"},
        "seed": {"type": "integer", "minimum": 0, "default": 0,
                 "description": "optimizer random seed"},
    },
    "required": list(PARAM_NAMES),
    "additionalProperties": False,
}

HISTORY_SCHEMA = {
    "type": "object",
    "properties": {
        "limit": {"type": "integer", "minimum": 1, "default": 20,
                  "description": "maximum number of records, newest first"},
    },
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {"type": "object", "properties": {}, "additionalProperties": False}


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    input_schema: dict
    handler: Callable[[dict], Any]
    long_running: bool = False

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description,
                "inputSchema": self.input_schema}


def validate_arguments(tool: ToolDescriptor, arguments: Any) -> dict:
    """Schema check; raises ``INVALID_PARAMS`` naming the offending field."""
    if arguments is None:
        arguments = {}
    if not isinstance(arguments, dict):
        raise RpcError(INVALID_PARAMS, "Invalid params: arguments must be an object")
    validator = jsonschema.Draft202012Validator(tool.input_schema)
    errors = sorted(validator.iter_errors(arguments), key=lambda e: list(e.path))
    if errors:
        err = errors[0]
        if err.validator == "required":
            field = err.message.split("'")[1]
            msg = f"{field}: missing"
        elif err.validator == "additionalProperties":
            msg = f"unexpected argument: {err.message}"
            field = None
        else:
            field = ".".join(str(p) for p in err.path) or None
            msg = f"{field}: {_describe(err, tool.input_schema)}"
        raise RpcError(INVALID_PARAMS, f"Invalid params: {msg}", {"field": field})
    if tool.name == "run_ws_pso_cm":
        try:
            HyperParams.from_dict(arguments)
        except HyperParamError as exc:
            raise RpcError(INVALID_PARAMS, f"Invalid params: {exc}", {"field": exc.field}) from None
    return arguments


def _describe(err: jsonschema.ValidationError, schema: dict) -> str:
    name = err.path[-1] if err.path else None
    if err.validator == "minimum" and name is not None:
        return f"must satisfy {name} ≥ {err.validator_value}, got {err.instance!r}"
    if err.validator == "maximum" and name is not None:
        return f"must satisfy {name} ≤ {err.validator_value}, got {err.instance!r}"
    if err.validator == "type":
        return f"expected {err.validator_value}, got {err.instance!r}"
    return err.message


def published_tools(tools: list[ToolDescriptor]) -> list[dict]:
    return [t.to_dict() for t in tools]
