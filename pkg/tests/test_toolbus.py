from __future__ import annotations

import json
from pathlib import Path

import pytest

from tippy.toolbus import (
    EXECUTION_FAILED,
    INVALID_PARAMS,
    SAFETY_REJECTED,
    UNKNOWN_TOOL,
    DuplicateName,
    ParamSpec,
    ToolDescriptor,
    ToolError,
    ToolRegistry,
    decode_message,
    encode_message,
    handle_line,
    validate_args,
)

FIXTURE_DIR = Path(__file__).parent.parent / "src" / "tippy" / "data" / "fixtures"


def echo_tool(name="demo.echo", safety_sensitive=False) -> ToolDescriptor:
    return ToolDescriptor(
        name=name,
        description="echo the arguments back",
        params=(
            ParamSpec("text", "string", required=True),
            ParamSpec("count", "number", minimum=0, maximum=10),
            ParamSpec("flag", "boolean"),
            ParamSpec("mode", "enum", values=("fast", "slow")),
            ParamSpec("extras", "object"),
            ParamSpec("items", "array"),
        ),
        safety_sensitive=safety_sensitive,
    )


class TestRegistry:
    def test_register_and_list(self):
        registry = ToolRegistry()
        registry.register(echo_tool("b.tool"), lambda args: args)
        registry.register(echo_tool("a.tool"), lambda args: args)
        assert [d.name for d in registry.list_tools()] == ["a.tool", "b.tool"]

    def test_duplicate_name(self):
        registry = ToolRegistry()
        registry.register(echo_tool(), lambda args: args)
        with pytest.raises(DuplicateName):
            registry.register(echo_tool(), lambda args: args)

    def test_empty_registry(self):
        assert ToolRegistry().list_tools() == []

    def test_list_stable(self):
        registry = ToolRegistry()
        registry.register(echo_tool(), lambda args: args)
        assert registry.list_tools() == registry.list_tools()


class TestCall:
    def test_unknown_tool(self):
        outcome = ToolRegistry().call("nope", {})
        assert isinstance(outcome, ToolError)
        assert outcome.code == UNKNOWN_TOOL

    def test_missing_required_names_parameter(self):
        registry = ToolRegistry()
        registry.register(echo_tool(), lambda args: args)
        outcome = registry.call("demo.echo", {})
        assert outcome.code == INVALID_PARAMS
        assert "text" in outcome.detail

    def test_unknown_key(self):
        registry = ToolRegistry()
        registry.register(echo_tool(), lambda args: args)
        outcome = registry.call("demo.echo", {"text": "x", "bogus": 1})
        assert outcome.code == INVALID_PARAMS
        assert "bogus" in outcome.detail

    @pytest.mark.parametrize(
        "args, fragment",
        [
            ({"text": 7}, "text"),
            ({"text": "x", "count": "many"}, "count"),
            ({"text": "x", "count": True}, "count"),  # bool is not a number
            ({"text": "x", "count": 99}, "count"),
            ({"text": "x", "flag": "yes"}, "flag"),
            ({"text": "x", "mode": "medium"}, "mode"),
            ({"text": "x", "extras": []}, "extras"),
            ({"text": "x", "items": {}}, "items"),
        ],
    )
    def test_validation_failures(self, args, fragment):
        registry = ToolRegistry()
        registry.register(echo_tool(), lambda args: args)
        outcome = registry.call("demo.echo", args)
        assert outcome.code == INVALID_PARAMS
        assert fragment in outcome.detail

    def test_handler_never_runs_on_invalid_args(self):
        calls = []
        registry = ToolRegistry()
        registry.register(echo_tool(), lambda args: calls.append(args))
        registry.call("demo.echo", {"wrong": True})
        assert calls == []

    def test_guard_denial_blocks_handler(self):
        calls = []
        registry = ToolRegistry(guard=lambda text: "denied by policy")
        registry.register(echo_tool(safety_sensitive=True), lambda args: calls.append(args))
        outcome = registry.call("demo.echo", {"text": "x"})
        assert outcome.code == SAFETY_REJECTED
        assert outcome.detail == "denied by policy"
        assert calls == []

    def test_guard_not_consulted_for_plain_tools(self):
        consulted = []
        registry = ToolRegistry(guard=lambda text: consulted.append(text) or None)
        registry.register(echo_tool(), lambda args: "ok")
        registry.call("demo.echo", {"text": "x"})
        assert consulted == []

    def test_handler_exception_becomes_execution_failed(self):
        registry = ToolRegistry()
        registry.register(
            echo_tool(), lambda args: (_ for _ in ()).throw(RuntimeError("boom"))
        )
        outcome = registry.call("demo.echo", {"text": "x"})
        assert outcome.code == EXECUTION_FAILED
        assert "boom" in outcome.detail

    def test_events_logged_to_sink(self):
        events = []
        registry = ToolRegistry(sink=lambda kind, payload: events.append((kind, payload)))
        registry.register(echo_tool(), lambda args: {"echoed": args["text"]})
        registry.call("demo.echo", {"text": "hello"})
        kinds = [kind for kind, _ in events]
        assert kinds == ["tool.call", "tool.result"]
        assert events[1][1]["ok"] is True


class TestWire:
    def test_roundtrip_all_fixture_messages(self):
        for name in ("wire_requests.jsonl", "wire_responses.jsonl"):
            for line in (FIXTURE_DIR / name).read_text().splitlines():
                message = decode_message(line)
                assert encode_message(message) == line + "\n"

    def test_golden_responses_bit_exact(self, runtime):
        requests = (FIXTURE_DIR / "wire_requests.jsonl").read_text().splitlines()
        expected = (FIXTURE_DIR / "wire_responses.jsonl").read_text().splitlines()
        for request_line, expected_line in zip(requests, expected, strict=True):
            assert handle_line(runtime.registry, request_line) == expected_line + "\n"

    def test_all_error_classes_in_fixtures(self):
        text = (FIXTURE_DIR / "wire_responses.jsonl").read_text()
        for code in (UNKNOWN_TOOL, INVALID_PARAMS, EXECUTION_FAILED, SAFETY_REJECTED):
            assert code in text
        assert "-32601" in text
        assert "-32602" in text

    def test_parse_error(self, runtime):
        response = json.loads(handle_line(runtime.registry, "not json at all {"))
        assert response["error"]["code"] == -32700

    def test_ids_echoed(self, runtime):
        line = encode_message({"jsonrpc": "2.0", "id": 42, "method": "tools/list"})
        response = json.loads(handle_line(runtime.registry, line))
        assert response["id"] == 42
