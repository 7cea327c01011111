"""JSON-RPC 2.0 envelopes and error codes."""

from __future__ import annotations

import json
from typing import Any

JSONRPC = "2.0"

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603
TOOL_FAILURE = -32000
BUSY = -32001
RATE_LIMITED = -32002

_MISSING = object()


class RpcError(Exception):
    def __init__(self, code: int, message: str, data: Any = None):
        super().__init__(f"[{code}] {message}")
        self.code = code
        self.message = message
        self.data = data

    def to_dict(self) -> dict:
        err = {"code": self.code, "message": self.message}
        if self.data is not None:
            err["data"] = self.data
        return err


def result_response(req_id, result) -> dict:
    return {"jsonrpc": JSONRPC, "id": req_id, "result": result}


def error_response(req_id, error: RpcError) -> dict:
    return {"jsonrpc": JSONRPC, "id": req_id, "error": error.to_dict()}


def request(method: str, params=None, req_id=_MISSING) -> dict:
    msg = {"jsonrpc": JSONRPC, "method": method}
    if params is not None:
        msg["params"] = params
    if req_id is not _MISSING:
        msg["id"] = req_id
    return msg


def encode(msg: dict) -> str:
    """One message per line; ``ensure_ascii`` keeps the line pure ASCII."""
    return json.dumps(msg, separators=(",", ":"), ensure_ascii=True, allow_nan=False)


def decode_line(line: bytes | str) -> Any:
    """Parse one transport line; raises :class:`RpcError` with ``PARSE_ERROR``."""
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise RpcError(PARSE_ERROR, f"Parse error: invalid UTF-8 ({exc.reason})") from None
    try:
        return json.loads(line)
    except (ValueError, RecursionError) as exc:
        raise RpcError(PARSE_ERROR, f"Parse error: {exc}") from None


def check_request(msg: Any) -> tuple[Any, str, Any, bool]:
    """Validate a decoded request; returns ``(id, method, params, is_notification)``."""
    if not isinstance(msg, dict):
        raise RpcError(INVALID_REQUEST, "Invalid Request: expected a JSON object")
    req_id = msg.get("id")
    if "id" in msg and not (req_id is None or isinstance(req_id, str)
                            or (isinstance(req_id, (int, float)) and not isinstance(req_id, bool))):
        raise RpcError(INVALID_REQUEST, "Invalid Request: id must be a string, number or null")
    if msg.get("jsonrpc") != JSONRPC:
        raise RpcError(INVALID_REQUEST, 'Invalid Request: "jsonrpc" must be "2.0"')
    method = msg.get("method")
    if not isinstance(method, str):
        raise RpcError(INVALID_REQUEST, 'Invalid Request: missing or non-string "method"')
    params = msg.get("params")
    if params is not None and not isinstance(params, (dict, list)):
        raise RpcError(INVALID_REQUEST, 'Invalid Request: "params" must be an object or array')
    return req_id, method, params, "id" not in msg
