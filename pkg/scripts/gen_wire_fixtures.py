"""Regenerate the golden JSON-RPC wire fixture files.

Run from the repo root:  python scripts/gen_wire_fixtures.py
The fixtures pin the bit-exact wire behavior of a fresh default registry;
regenerating them is a deliberate protocol change.
"""

from __future__ import annotations

import json
from pathlib import Path

from tippy.service.runtime import RuntimeConfig, TippyRuntime
from tippy.toolbus import encode_message, handle_line

FIXTURE_DIR = Path(__file__).parent.parent / "src" / "tippy" / "data" / "fixtures"

REQUESTS = [
    {"jsonrpc": "2.0", "id": 1, "method": "tools/list"},
    {
        "jsonrpc": "2.0",
        "id": 2,
        "method": "tools/call",
        "params": {"name": "chem.parse_smiles", "arguments": {"smiles": "CCO"}},
    },
    {
        "jsonrpc": "2.0",
        "id": 3,
        "method": "tools/call",
        "params": {"name": "molgen.lookup_name", "arguments": {"name": "tippy-analog-1"}},
    },
    {
        "jsonrpc": "2.0",
        "id": 4,
        "method": "tools/call",
        "params": {"name": "molgen.generate_analogs", "arguments": {"smiles": "CC", "max_out": 3}},
    },
    # UnknownTool
    {"jsonrpc": "2.0", "id": 5, "method": "tools/call", "params": {"name": "nope.missing", "arguments": {}}},
    # InvalidParams: missing required "target"
    {
        "jsonrpc": "2.0",
        "id": 6,
        "method": "tools/call",
        "params": {"name": "lab.create_job", "arguments": {"kind": "Hplc"}},
    },
    # InvalidParams: unknown key
    {
        "jsonrpc": "2.0",
        "id": 7,
        "method": "tools/call",
        "params": {"name": "chem.parse_smiles", "arguments": {"smiles": "C", "bogus": 1}},
    },
    # InvalidParams: type mismatch
    {
        "jsonrpc": "2.0",
        "id": 8,
        "method": "tools/call",
        "params": {"name": "lab.job_status", "arguments": {"job_id": "two"}},
    },
    # InvalidParams: range violation
    {
        "jsonrpc": "2.0",
        "id": 9,
        "method": "tools/call",
        "params": {
            "name": "dmta.run_cycle",
            "arguments": {"seed": "CC", "target_rt_min": 99.0, "budget": 5},
        },
    },
    # SafetyRejected: safety-sensitive tool with a deny-listed rendering
    {
        "jsonrpc": "2.0",
        "id": 10,
        "method": "tools/call",
        "params": {
            "name": "lab.create_job",
            "arguments": {"kind": "Synthesis", "target": "CC", "params": {"solvent": "sarin"}},
        },
    },
    # ExecutionFailed: handler raises on an unclosed ring
    {
        "jsonrpc": "2.0",
        "id": 11,
        "method": "tools/call",
        "params": {"name": "chem.parse_smiles", "arguments": {"smiles": "C1CC"}},
    },
    # Protocol errors
    {"jsonrpc": "2.0", "id": 12, "method": "tools/rename"},
    {"jsonrpc": "2.0", "id": 13, "method": "tools/call", "params": {"arguments": {}}},
    {"jsonrpc": "2.0", "id": 14, "method": "tools/call", "params": "not-an-object"},
]


def main() -> None:
    runtime = TippyRuntime(RuntimeConfig())
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    request_lines = [encode_message(message) for message in REQUESTS]
    response_lines = [handle_line(runtime.registry, line) for line in request_lines]
    (FIXTURE_DIR / "wire_requests.jsonl").write_text("".join(request_lines), encoding="utf-8")
    (FIXTURE_DIR / "wire_responses.jsonl").write_text("".join(response_lines), encoding="utf-8")
    print(f"wrote {len(request_lines)} request/response pairs to {FIXTURE_DIR}")
    for line in response_lines:
        parsed = json.loads(line)
        marker = "error" if "error" in parsed else "result"
        print(f"  id={parsed.get('id')}: {marker}")


if __name__ == "__main__":
    main()
