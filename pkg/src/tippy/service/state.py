"""System state and the event fold that reconstructs it.

Session-scoped events (messages, verdicts, handoffs, blackboard puts) and
cycle progress are applied through `apply_event` on both the live path and
replay. Job, pool, and report mutations happen through the domain functions
on the live path, so `apply_event` performs them only when replaying.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Any

from ..agents import (
    AgentRole,
    BlackboardEntry,
    HandoffRecord,
    SessionContext,
    TranscriptEntry,
)
from ..insights import ReportDoc
from ..scheduler import Resource, ResourceKind, Slot
from ..virtlab import Job, JobKind, JobState, result_from_dict, result_to_dict, transition
from .events import Event, EventStore

APPROVAL_KEY_PREFIX = "approval/"

APPROVAL_PENDING = "Pending"
APPROVAL_APPROVED = "Approved"
APPROVAL_EDITED = "Edited"
APPROVAL_REJECTED = "Rejected"


@dataclass
class ApprovalRequest:
    id: str
    job_id: int
    proposed_params: dict[str, Any]
    state: str = APPROVAL_PENDING
    decided_by: str | None = None
    decided_at: int | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "job_id": self.job_id,
            "proposed_params": self.proposed_params,
            "state": self.state,
            "decided_by": self.decided_by,
            "decided_at": self.decided_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ApprovalRequest":
        return cls(
            id=data["id"],
            job_id=data["job_id"],
            proposed_params=data["proposed_params"],
            state=data["state"],
            decided_by=data.get("decided_by"),
            decided_at=data.get("decided_at"),
        )


DEFAULT_POOL = (
    ("synth-1", ResourceKind.SYNTH_STATION),
    ("hplc-1", ResourceKind.HPLC_INSTRUMENT),
)


@dataclass
class SystemState:
    sessions: dict[str, SessionContext] = field(default_factory=dict)
    jobs: dict[int, Job] = field(default_factory=dict)
    resources: list[Resource] = field(default_factory=list)
    approvals: dict[str, ApprovalRequest] = field(default_factory=dict)
    reports: dict[str, ReportDoc] = field(default_factory=dict)
    cycles: dict[str, dict] = field(default_factory=dict)

    @classmethod
    def initial(cls, pool: tuple[tuple[str, ResourceKind], ...] = DEFAULT_POOL) -> "SystemState":
        return cls(resources=[Resource(id=rid, kind=kind) for rid, kind in pool])

    def session(self, session_id: str) -> SessionContext:
        ctx = self.sessions.get(session_id)
        if ctx is None:
            ctx = SessionContext(session_id=session_id)
            self.sessions[session_id] = ctx
        return ctx

    def resource(self, resource_id: str, kind: str | None = None) -> Resource:
        for resource in self.resources:
            if resource.id == resource_id:
                return resource
        created = Resource(id=resource_id, kind=ResourceKind(kind or "operator"))
        self.resources.append(created)
        return created

    def next_job_id(self) -> int:
        return max(self.jobs, default=0) + 1

    def next_approval_id(self) -> str:
        return f"apr-{len(self.approvals) + 1}"

    def next_session_id(self) -> str:
        count = sum(1 for sid in self.sessions if sid.startswith("s-"))
        return f"s-{count + 1}"

    def next_cycle_id(self) -> str:
        count = sum(1 for sid in self.sessions if sid.startswith("cycle-"))
        return f"cycle-{count + 1}"

    def to_dict(self) -> dict:
        """Canonical serialization for field-for-field equality checks."""
        return {
            "sessions": {
                sid: _session_to_dict(ctx) for sid, ctx in sorted(self.sessions.items())
            },
            "jobs": {str(jid): _job_to_dict(job) for jid, job in sorted(self.jobs.items())},
            "resources": [
                {"id": r.id, "kind": r.kind.value, "busy": [list(b) for b in r.busy]}
                for r in sorted(self.resources, key=lambda r: r.id)
            ],
            "approvals": {
                aid: approval.to_dict() for aid, approval in sorted(self.approvals.items())
            },
            "reports": {
                doc_id: {
                    "id": doc.id,
                    "title": doc.title,
                    "body": doc.body,
                    "created_at": doc.created_at,
                    "attached_to": doc.attached_to,
                }
                for doc_id, doc in sorted(self.reports.items())
            },
            "cycles": {cid: data for cid, data in sorted(self.cycles.items())},
        }


def _session_to_dict(ctx: SessionContext) -> dict:
    return {
        "session_id": ctx.session_id,
        "active_agent": ctx.active_agent.value,
        "transcript": [
            {"speaker": e.speaker, "text": e.text, "ts": e.ts} for e in ctx.transcript
        ],
        "blackboard_version": ctx.blackboard_version,
        "handoffs": [
            {
                "from": h.from_role.value,
                "to": h.to_role.value,
                "reason": h.reason,
                "at_version": h.at_version,
            }
            for h in ctx.handoffs
        ],
        "board": {
            key: [
                {
                    "value": e.value,
                    "version": e.version,
                    "author": e.author.value,
                    "ts": e.ts,
                }
                for e in entries
            ]
            for key, entries in sorted(ctx.board.items())
        },
    }


def _job_to_dict(job: Job) -> dict:
    return {
        "id": job.id,
        "kind": job.kind.value,
        "params": job.params,
        "target": job.target,
        "state": job.state.value,
        "created_at": job.created_at,
        "started_at": job.started_at,
        "finished_at": job.finished_at,
        "slot": None
        if job.slot is None
        else {
            "resource_id": job.slot.resource_id,
            "start_min": job.slot.start_min,
            "end_min": job.slot.end_min,
            "resource_kind": job.slot.resource_kind,
        },
        "result": result_to_dict(job.result),
        "attachments": list(job.attachments),
    }


def apply_event(state: SystemState, event: Event, replaying: bool) -> None:
    kind = event.kind
    payload = event.payload
    if kind == "session.message":
        ctx = state.session(event.session_id)
        ctx.transcript.append(
            TranscriptEntry(speaker=payload["speaker"], text=payload["text"], ts=event.ts)
        )
    elif kind == "safety.verdict":
        state.session(event.session_id)  # journal-only, but the session exists
    elif kind == "agent.handoff":
        ctx = state.session(event.session_id)
        ctx.handoffs.append(
            HandoffRecord(
                from_role=AgentRole(payload["from"]),
                to_role=AgentRole(payload["to"]),
                reason=payload["reason"],
                at_version=payload["at_version"],
            )
        )
        ctx.active_agent = AgentRole(payload["to"])
    elif kind == "blackboard.put":
        ctx = state.session(event.session_id)
        entry = BlackboardEntry(
            key=payload["key"],
            value=payload["value"],
            version=payload["version"],
            author=AgentRole(payload["author"]),
            ts=payload["ts"],
        )
        ctx.board.setdefault(entry.key, []).append(entry)
        ctx.blackboard_version += 1
        if entry.key.startswith(APPROVAL_KEY_PREFIX):
            approval = ApprovalRequest.from_dict(entry.value)
            state.approvals[approval.id] = approval
    elif kind == "job.transition":
        if replaying:
            _replay_job_transition(state, payload)
    elif kind == "report.attached":
        if replaying:
            doc_data = payload["doc"]
            doc = ReportDoc(
                id=doc_data["id"],
                title=doc_data["title"],
                body=doc_data["body"],
                created_at=doc_data["created_at"],
                attached_to=payload["job_id"],
            )
            state.reports[doc.id] = doc
            state.jobs[payload["job_id"]].attachments.append(doc.id)
    elif kind == "cycle.progress":
        _apply_cycle_progress(state, event.session_id, payload)
    elif kind in ("tool.call", "tool.result"):
        pass  # journal-only


def _replay_job_transition(state: SystemState, payload: dict) -> None:
    to = payload["to"]
    if to == JobState.CREATED.value:
        job = Job(
            id=payload["job_id"],
            kind=JobKind(payload["kind"]),
            params=payload["params"],
            target=payload["target"],
            created_at=payload["at"],
        )
        state.jobs[job.id] = job
        return
    job = state.jobs[payload["job_id"]]
    if to == JobState.SCHEDULED.value:
        slot_data = payload["slot"]
        job.slot = Slot(
            resource_id=slot_data["resource_id"],
            start_min=slot_data["start_min"],
            end_min=slot_data["end_min"],
            resource_kind=payload.get("resource_kind") or "",
        )
        resource = state.resource(slot_data["resource_id"], payload.get("resource_kind"))
        bisect.insort(resource.busy, (slot_data["start_min"], slot_data["end_min"]))
        transition(job, JobState.SCHEDULED, at=payload["at"])
    elif to == JobState.RUNNING.value:
        transition(job, JobState.RUNNING, at=payload["at"])
    elif to == JobState.COMPLETED.value:
        transition(
            job,
            JobState.COMPLETED,
            at=payload["at"],
            result=result_from_dict(payload["result"]),
        )
    elif to == JobState.FAILED.value:
        transition(job, JobState.FAILED, at=payload["at"])


def _apply_cycle_progress(state: SystemState, session_id: str, payload: dict) -> None:
    phase = payload["phase"]
    if phase == "start":
        state.cycles[session_id] = {
            "cycle_id": session_id,
            "seed": payload["seed"],
            "target_rt_min": payload["target_rt_min"],
            "budget": payload["budget"],
            "status": "running",
            "evaluations": [],
            "adoptions": [],
            "stop_reason": None,
            "best": None,
        }
        return
    cycle = state.cycles[session_id]
    if phase == "eval":
        cycle["evaluations"].append(
            {k: payload[k] for k in ("iteration", "smiles", "rt_min", "purity_pct", "yield_pct", "score")}
        )
    elif phase == "adopt":
        cycle["adoptions"].append(
            {k: payload[k] for k in ("iteration", "smiles", "score")}
        )
    elif phase == "done":
        cycle["status"] = "done"
        cycle["stop_reason"] = payload["stop_reason"]
        cycle["best"] = {
            "smiles": payload["best_smiles"],
            "score": payload["best_score"],
            "evaluations": payload["evaluations"],
        }


def replay(
    store: EventStore, pool: tuple[tuple[str, ResourceKind], ...] = DEFAULT_POOL
) -> SystemState:
    """Fold the event log into a fresh SystemState. The defining property:
    this equals the live state at the same seq, field for field.
    """
    state = SystemState.initial(pool)
    for event in store.events():
        apply_event(state, event, replaying=True)
    return state
