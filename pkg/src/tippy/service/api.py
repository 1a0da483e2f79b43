"""HTTP/WebSocket API for the operator console.

All endpoints are JSON over the documented paths; the WebSocket stream pushes
every event of one session as it is appended (clients de-duplicate by seq).
A static bearer token (TIPPY_TOKEN) guards everything except /healthz.
"""

from __future__ import annotations

import asyncio
from typing import Any

from fastapi import Depends, FastAPI, HTTPException, Query, Request, WebSocket
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .. import insights
from ..virtlab import HplcResult, trace_to_csv
from ..chem import parse_smiles, render_depiction
from .runtime import (
    AlreadyDecided,
    InvalidEditedParams,
    SafetyRefused,
    TippyRuntime,
    UnknownApproval,
    UnknownSession,
)
from .state import APPROVAL_PENDING


class MessageBody(BaseModel):
    text: str


class DecisionBody(BaseModel):
    decision: str
    params: dict[str, Any] | None = None
    decided_by: str = "operator"


class CycleBody(BaseModel):
    seed: str
    target_rt_min: float
    budget: int
    rt_tolerance_min: float = 0.2


def job_to_json(runtime: TippyRuntime, job, detail: bool = False) -> dict:
    data = {
        "id": job.id,
        "kind": job.kind.value,
        "target": job.target,
        "state": job.state.value,
        "created_at": job.created_at,
        "started_at": job.started_at,
        "finished_at": job.finished_at,
        "params": job.params,
        "slot": None
        if job.slot is None
        else {
            "resource_id": job.slot.resource_id,
            "start_min": job.slot.start_min,
            "end_min": job.slot.end_min,
        },
        "attachments": list(job.attachments),
        "cancelled": runtime.job_cancelled(job),
    }
    approval = next(
        (a for a in runtime.state.approvals.values() if a.job_id == job.id), None
    )
    data["approval"] = approval.to_dict() if approval else None
    if job.result is not None:
        if isinstance(job.result, HplcResult):
            data["result"] = {
                "type": "hplc",
                "main_peak_rt_min": job.result.main_peak_rt_min,
                "purity_pct": job.result.purity_pct,
                "duration_min": job.result.duration_min,
            }
        else:
            data["result"] = {
                "type": "synthesis",
                "yield_pct": job.result.yield_pct,
                "mass_mg": job.result.mass_mg,
                "duration_min": job.result.duration_min,
                "side_products_note": job.result.side_products_note,
            }
    else:
        data["result"] = None
    if detail:
        try:
            data["depiction_svg"] = render_depiction(parse_smiles(job.target))
        except ValueError:
            data["depiction_svg"] = None
    return data


def create_app(runtime: TippyRuntime) -> FastAPI:
    app = FastAPI(title="tippy", version="0.1.0")

    def check_token(request: Request) -> None:
        token = runtime.config.token
        if not token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or bad bearer token")

    guarded = Depends(check_token)

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/sessions", dependencies=[guarded])
    def create_session() -> dict:
        session_id = runtime.create_session()
        return {"session_id": session_id}

    @app.get("/sessions/{session_id}", dependencies=[guarded])
    def get_session(session_id: str) -> dict:
        ctx = _session_or_404(session_id)
        return {
            "session_id": ctx.session_id,
            "active_agent": ctx.active_agent.value,
            "transcript_len": len(ctx.transcript),
        }

    def _session_or_404(session_id: str):
        try:
            return runtime.get_session(session_id)
        except UnknownSession:
            raise HTTPException(status_code=404, detail=f"no session {session_id}") from None

    @app.post("/sessions/{session_id}/messages", dependencies=[guarded])
    def post_message(session_id: str, body: MessageBody) -> dict:
        _session_or_404(session_id)
        entries = runtime.handle_message(session_id, body.text)
        return {"session_id": session_id, "entries": entries}

    @app.get("/sessions/{session_id}/transcript", dependencies=[guarded])
    def transcript(session_id: str) -> dict:
        ctx = _session_or_404(session_id)
        return {
            "session_id": session_id,
            "entries": [
                {"speaker": e.speaker, "text": e.text, "ts": e.ts} for e in ctx.transcript
            ],
        }

    @app.get("/jobs", dependencies=[guarded])
    def jobs() -> dict:
        return {
            "jobs": [
                job_to_json(runtime, job)
                for _, job in sorted(runtime.state.jobs.items())
            ]
        }

    def _job_or_404(job_id: int):
        job = runtime.state.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no job {job_id}")
        return job

    @app.get("/jobs/{job_id}", dependencies=[guarded])
    def job_detail(job_id: int) -> dict:
        return job_to_json(runtime, _job_or_404(job_id), detail=True)

    @app.get("/jobs/{job_id}/timeline", dependencies=[guarded])
    def job_timeline(job_id: int) -> dict:
        _job_or_404(job_id)
        rows = insights.job_timeline(job_id, runtime.store.events())
        return {
            "job_id": job_id,
            "rows": [
                {"state": r.state, "entered_at": r.entered_at, "waited_min": r.waited_min}
                for r in rows
            ],
        }

    @app.get("/jobs/{job_id}/trace.csv", dependencies=[guarded])
    def job_trace(job_id: int) -> PlainTextResponse:
        job = _job_or_404(job_id)
        if not isinstance(job.result, HplcResult):
            raise HTTPException(status_code=404, detail="job has no chromatogram trace")
        return PlainTextResponse(trace_to_csv(job.result.trace), media_type="text/csv")

    @app.get("/approvals", dependencies=[guarded])
    def approvals(state: str | None = Query(default=None)) -> dict:
        rows = [
            a.to_dict()
            for a in runtime.state.approvals.values()
            if state is None or a.state == state
        ]
        rows.sort(key=lambda a: a["id"])
        return {"approvals": rows}

    @app.post("/approvals/{approval_id}/decision", dependencies=[guarded])
    def decide(approval_id: str, body: DecisionBody) -> dict:
        try:
            approval = runtime.decide_approval(
                approval_id, body.decision, params=body.params, decided_by=body.decided_by
            )
        except UnknownApproval:
            raise HTTPException(status_code=404, detail=f"no approval {approval_id}") from None
        except AlreadyDecided as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except InvalidEditedParams as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        except SafetyRefused as exc:
            raise HTTPException(status_code=403, detail=str(exc)) from None
        runtime.drain_notifications()
        job = runtime.state.jobs[approval.job_id]
        return {"approval": approval.to_dict(), "job": job_to_json(runtime, job)}

    @app.post("/cycles", dependencies=[guarded])
    def start_cycle(body: CycleBody) -> dict:
        try:
            return runtime.start_cycle(
                body.seed,
                body.target_rt_min,
                body.budget,
                rt_tolerance_min=body.rt_tolerance_min,
            )
        except SafetyRefused as exc:
            raise HTTPException(status_code=403, detail=str(exc)) from None
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None

    @app.get("/cycles/{cycle_id}", dependencies=[guarded])
    def cycle_detail(cycle_id: str) -> dict:
        cycle = runtime.state.cycles.get(cycle_id)
        if cycle is None:
            raise HTTPException(status_code=404, detail=f"no cycle {cycle_id}")
        return cycle

    @app.get("/analytics/durations", dependencies=[guarded])
    def analytics_durations() -> dict:
        rows = insights.activity_durations(runtime.store.events())
        return {
            "rows": [
                {
                    "kind": r.kind,
                    "count": r.count,
                    "mean_min": r.mean_min,
                    "p50_min": r.p50_min,
                    "p95_min": r.p95_min,
                }
                for r in rows
            ]
        }

    @app.get("/analytics/workload", dependencies=[guarded])
    def analytics_workload(start: int = Query(...), end: int = Query(...)) -> dict:
        try:
            fractions = insights.actor_workload(
                runtime.store.events(),
                (start, end),
                resources=[r.id for r in runtime.state.resources],
            )
        except insights.EmptyWindow as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return {"window": [start, end], "fractions": fractions}

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str) -> None:
        token = runtime.config.token
        if token:
            supplied = websocket.query_params.get("token") or websocket.headers.get(
                "authorization", ""
            ).removeprefix("Bearer ").strip()
            if supplied != token:
                await websocket.close(code=4401)
                return
        await websocket.accept()
        last_seq = int(websocket.query_params.get("after_seq", 0))
        try:
            while True:
                fresh = runtime.store.events_after(last_seq, session_id=session_id)
                for event in fresh:
                    await websocket.send_json(event.to_dict())
                    last_seq = event.seq
                await asyncio.sleep(0.02)
        except Exception:  # noqa: BLE001 - disconnects end the stream
            return

    @app.exception_handler(insights.UnknownJob)
    async def unknown_job_handler(request: Request, exc: insights.UnknownJob):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    return app
