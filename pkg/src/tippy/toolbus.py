"""Typed tool protocol: descriptors, discovery, argument validation, guarded
invocation, and a bit-exact JSON-RPC 2.0 wire codec over newline-delimited
UTF-8 JSON.

Tool-level failures (UnknownTool, InvalidParams, ExecutionFailed,
SafetyRejected) are values that travel inside successful wire responses;
protocol-level failures use JSON-RPC error codes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Callable

PARAM_TYPES = ("string", "number", "boolean", "enum", "object", "array")

UNKNOWN_TOOL = "UnknownTool"
INVALID_PARAMS = "InvalidParams"
EXECUTION_FAILED = "ExecutionFailed"
SAFETY_REJECTED = "SafetyRejected"

RPC_UNKNOWN_METHOD = -32601
RPC_MALFORMED_PARAMS = -32602
RPC_PARSE_ERROR = -32700

_NAME_PATTERN = re.compile(r"^[a-z][a-z0-9_]*(\.[a-z][a-z0-9_]*)+$")


class DuplicateName(ValueError):
    pass


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str
    required: bool = False
    values: tuple[str, ...] | None = None  # enum members
    minimum: float | None = None
    maximum: float | None = None
    pattern: str | None = None

    def __post_init__(self):
        if self.type not in PARAM_TYPES:
            raise ValueError(f"unknown param type {self.type!r}")
        if self.type == "enum" and not self.values:
            raise ValueError(f"enum param {self.name!r} needs values")


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    params: tuple[ParamSpec, ...] = ()
    safety_sensitive: bool = False

    def __post_init__(self):
        if not _NAME_PATTERN.match(self.name):
            raise ValueError(f"tool name {self.name!r} must be lowercase dot-separated")
        names = [p.name for p in self.params]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate param names on tool {self.name!r}")


@dataclass(frozen=True)
class ToolError:
    code: str
    detail: str
    data: dict | None = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"code": self.code, "detail": self.detail}
        if self.data is not None:
            out["data"] = self.data
        return out


# Guard contract: returns None to allow, or a denial reason string.
Guard = Callable[[str], str | None]
Handler = Callable[[dict], Any]
Sink = Callable[[str, dict], None]


def _check_type(spec: ParamSpec, value: Any) -> str | None:
    if spec.type == "string":
        if not isinstance(value, str):
            return f"parameter {spec.name}: expected string"
        if spec.pattern is not None and re.fullmatch(spec.pattern, value) is None:
            return f"parameter {spec.name}: does not match pattern {spec.pattern}"
    elif spec.type == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return f"parameter {spec.name}: expected number"
        if spec.minimum is not None and value < spec.minimum:
            return f"parameter {spec.name}: below minimum {spec.minimum}"
        if spec.maximum is not None and value > spec.maximum:
            return f"parameter {spec.name}: above maximum {spec.maximum}"
    elif spec.type == "boolean":
        if not isinstance(value, bool):
            return f"parameter {spec.name}: expected boolean"
    elif spec.type == "enum":
        if value not in spec.values:
            return f"parameter {spec.name}: expected one of {list(spec.values)}"
    elif spec.type == "object":
        if not isinstance(value, dict):
            return f"parameter {spec.name}: expected object"
    elif spec.type == "array":
        if not isinstance(value, list):
            return f"parameter {spec.name}: expected array"
    return None


def validate_args(descriptor: ToolDescriptor, args: dict) -> str | None:
    """Return a detail string naming the offending parameter, or None."""
    by_name = {p.name: p for p in descriptor.params}
    for spec in descriptor.params:
        if spec.required and spec.name not in args:
            return f"missing required parameter: {spec.name}"
    for key, value in args.items():
        spec = by_name.get(key)
        if spec is None:
            return f"unknown parameter: {key}"
        problem = _check_type(spec, value)
        if problem is not None:
            return problem
    return None


def render_call(name: str, args: dict) -> str:
    """Stable text rendering of a call, used for safety screening."""
    return f"{name} {json.dumps(args, sort_keys=True, default=str)}"


class ToolRegistry:
    """Registry of tools; immutable after startup by convention.

    The guard screens safety-sensitive calls; the sink receives tool.call /
    tool.result payloads for the session event log.
    """

    def __init__(self, guard: Guard | None = None, sink: Sink | None = None):
        self._tools: dict[str, tuple[ToolDescriptor, Handler]] = {}
        self.guard = guard
        self.sink = sink

    def register(self, descriptor: ToolDescriptor, handler: Handler) -> "ToolRegistry":
        if descriptor.name in self._tools:
            raise DuplicateName(descriptor.name)
        self._tools[descriptor.name] = (descriptor, handler)
        return self

    def list_tools(self) -> list[ToolDescriptor]:
        return [self._tools[name][0] for name in sorted(self._tools)]

    def descriptor(self, name: str) -> ToolDescriptor | None:
        entry = self._tools.get(name)
        return entry[0] if entry else None

    def call(self, name: str, args: dict, guard: Guard | None = None) -> Any:
        """Invoke a tool. Returns the handler payload, or a ToolError value.

        Validation is total: the handler never runs on arguments that fail its
        descriptor, and a denying guard means the handler is never invoked.
        """
        guard = guard if guard is not None else self.guard
        if self.sink is not None:
            self.sink("tool.call", {"tool": name, "args": args})
        entry = self._tools.get(name)
        if entry is None:
            return self._finish(name, ToolError(UNKNOWN_TOOL, f"no such tool: {name}"))
        descriptor, handler = entry
        problem = validate_args(descriptor, args)
        if problem is not None:
            return self._finish(name, ToolError(INVALID_PARAMS, problem))
        if descriptor.safety_sensitive and guard is not None:
            reason = guard(render_call(name, args))
            if reason is not None:
                return self._finish(name, ToolError(SAFETY_REJECTED, reason))
        try:
            result = handler(args)
        except Exception as exc:  # noqa: BLE001 - handler faults become protocol values
            return self._finish(
                name, ToolError(EXECUTION_FAILED, f"{type(exc).__name__}: {exc}")
            )
        return self._finish(name, result)

    def _finish(self, name: str, outcome: Any) -> Any:
        if self.sink is not None:
            if isinstance(outcome, ToolError):
                payload = {"tool": name, "ok": False, "error": outcome.to_dict()}
            else:
                payload = {"tool": name, "ok": True, "result": outcome}
            self.sink("tool.result", payload)
        return outcome


# --- wire protocol ----------------------------------------------------------


def descriptor_to_json(descriptor: ToolDescriptor) -> dict:
    params = []
    for p in descriptor.params:
        entry: dict[str, Any] = {"name": p.name, "type": p.type, "required": p.required}
        if p.values is not None:
            entry["values"] = list(p.values)
        if p.minimum is not None:
            entry["minimum"] = p.minimum
        if p.maximum is not None:
            entry["maximum"] = p.maximum
        if p.pattern is not None:
            entry["pattern"] = p.pattern
        params.append(entry)
    return {
        "name": descriptor.name,
        "description": descriptor.description,
        "params": params,
        "safety_sensitive": descriptor.safety_sensitive,
    }


def encode_message(message: dict) -> str:
    """Canonical one-line encoding: sorted keys, no whitespace, newline end."""
    return json.dumps(message, sort_keys=True, separators=(",", ":")) + "\n"


def decode_message(line: str) -> dict:
    message = json.loads(line)
    if not isinstance(message, dict):
        raise ValueError("protocol message must be a JSON object")
    return message


def _rpc_error(request_id: Any, code: int, message: str) -> dict:
    return {"jsonrpc": "2.0", "id": request_id, "error": {"code": code, "message": message}}


def _rpc_result(request_id: Any, result: dict) -> dict:
    return {"jsonrpc": "2.0", "id": request_id, "result": result}


def handle_message(registry: ToolRegistry, message: dict) -> dict:
    request_id = message.get("id")
    method = message.get("method")
    if method == "tools/list":
        tools = [descriptor_to_json(d) for d in registry.list_tools()]
        return _rpc_result(request_id, {"tools": tools})
    if method == "tools/call":
        params = message.get("params")
        if not isinstance(params, dict) or not isinstance(params.get("name"), str):
            return _rpc_error(request_id, RPC_MALFORMED_PARAMS, "params must carry a tool name")
        arguments = params.get("arguments", {})
        if not isinstance(arguments, dict):
            return _rpc_error(request_id, RPC_MALFORMED_PARAMS, "arguments must be an object")
        outcome = registry.call(params["name"], arguments)
        if isinstance(outcome, ToolError):
            return _rpc_result(request_id, {"error": outcome.to_dict()})
        return _rpc_result(request_id, {"value": outcome})
    return _rpc_error(request_id, RPC_UNKNOWN_METHOD, f"unknown method: {method!r}")


def handle_line(registry: ToolRegistry, line: str) -> str:
    """Dispatch one request line to one response line, bit-exactly."""
    try:
        message = decode_message(line)
    except ValueError:
        return encode_message(_rpc_error(None, RPC_PARSE_ERROR, "parse error"))
    return encode_message(handle_message(registry, message))


def serve_stdio(registry: ToolRegistry, stdin=None, stdout=None) -> None:
    """Blocking newline-delimited JSON-RPC loop over stdio."""
    import sys

    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        stdout.write(handle_line(registry, line))
        stdout.flush()
