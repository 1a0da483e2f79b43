"""Command-line entry points: serve, cycle, replay, tools, rpc."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .. import dmta as dmta_mod
from ..toolbus import serve_stdio
from .events import EventStore
from .runtime import RuntimeConfig, TippyRuntime
from .state import replay


def _state_path(state_dir: str | None) -> Path | None:
    if state_dir is None:
        return None
    directory = Path(state_dir)
    directory.mkdir(parents=True, exist_ok=True)
    return directory / "events.jsonl"


def _build_runtime(args: argparse.Namespace) -> TippyRuntime:
    return TippyRuntime(
        RuntimeConfig(
            state_path=_state_path(getattr(args, "state_dir", None)),
            rules_path=getattr(args, "rules", None),
            dictionary_path=getattr(args, "dict", None),
            token=os.environ.get("TIPPY_TOKEN"),
            realtime_minute_seconds=getattr(args, "realtime_minute_seconds", 0.0),
        )
    )


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    runtime = _build_runtime(args)
    app = create_app(runtime)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    runtime.close()
    return 0


def cmd_cycle(args: argparse.Namespace) -> int:
    objective = dmta_mod.Objective(
        target_rt_min=args.target_rt, rt_tolerance_min=args.tolerance
    )
    outcome = dmta_mod.run_cycle(args.seed, objective, args.budget)
    if args.json:
        print(dmta_mod.outcome_to_json(outcome))
        return 0
    print(f"stop reason: {outcome.stop_reason}")
    print(f"evaluations: {len(outcome.history)}")
    best = outcome.best
    print(
        f"best: {best.candidate.canonical_smiles}  "
        f"rt={best.hplc.main_peak_rt_min:g} min  "
        f"purity={best.hplc.purity_pct:g}%  "
        f"yield={best.synthesis.yield_pct}%  "
        f"score={best.score:.4f}"
    )
    print()
    print(dmta_mod.outcome_to_csv(outcome), end="")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    path = _state_path(args.state_dir)
    if path is None or not path.exists():
        print("no event log found", file=sys.stderr)
        return 1
    store = EventStore(path)
    state = replay(store)
    completed = sum(1 for j in state.jobs.values() if j.state.value == "Completed")
    print(f"events: {len(store)}")
    print(f"sessions: {len(state.sessions)}")
    print(f"jobs: {len(state.jobs)} ({completed} completed)")
    print(f"approvals: {len(state.approvals)}")
    print(f"reports: {len(state.reports)}")
    print(f"cycles: {len(state.cycles)}")
    for sid, ctx in sorted(state.sessions.items()):
        print(f"  session {sid}: {len(ctx.transcript)} transcript entries, "
              f"active agent {ctx.active_agent.value}")
    store.close()
    return 0


def cmd_tools(args: argparse.Namespace) -> int:
    runtime = _build_runtime(args)
    for descriptor in runtime.registry.list_tools():
        marker = " [safety-sensitive]" if descriptor.safety_sensitive else ""
        print(f"{descriptor.name}{marker}")
        print(f"    {descriptor.description}")
        for param in descriptor.params:
            required = " (required)" if param.required else ""
            print(f"    - {param.name}: {param.type}{required}")
    runtime.close()
    return 0


def cmd_rpc(args: argparse.Namespace) -> int:
    runtime = _build_runtime(args)
    serve_stdio(runtime.registry)
    runtime.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tippy", description="Multi-agent DMTA lab automation (simulated)."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the HTTP/WebSocket service")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--state-dir", default=None)
    p_serve.add_argument("--rules", default=None, help="guardrail rule file")
    p_serve.add_argument("--dict", default=None, help="name dictionary file")
    p_serve.add_argument(
        "--realtime-minute-seconds",
        type=float,
        default=0.0,
        help="wall seconds per simulated minute (0 = pure sim time)",
    )
    p_serve.set_defaults(func=cmd_serve)

    p_cycle = sub.add_parser("cycle", help="run one DMTA optimization cycle")
    p_cycle.add_argument("--seed", required=True, help="seed SMILES")
    p_cycle.add_argument("--target-rt", type=float, required=True)
    p_cycle.add_argument("--budget", type=int, required=True)
    p_cycle.add_argument("--tolerance", type=float, default=0.2)
    p_cycle.add_argument("--json", action="store_true")
    p_cycle.set_defaults(func=cmd_cycle)

    p_replay = sub.add_parser("replay", help="reconstruct state from an event log")
    p_replay.add_argument("--state-dir", required=True)
    p_replay.set_defaults(func=cmd_replay)

    p_tools = sub.add_parser("tools", help="list the tool registry")
    p_tools.add_argument("--rules", default=None)
    p_tools.add_argument("--dict", default=None)
    p_tools.set_defaults(func=cmd_tools)

    p_rpc = sub.add_parser("rpc", help="serve the tool registry as JSON-RPC on stdio")
    p_rpc.add_argument("--rules", default=None)
    p_rpc.add_argument("--dict", default=None)
    p_rpc.add_argument("--state-dir", default=None)
    p_rpc.set_defaults(func=cmd_rpc)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
