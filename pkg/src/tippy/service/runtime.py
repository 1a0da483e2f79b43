"""The live system: a single-writer engine that runs sessions, tools, the
approval workflow, and DMTA cycles over an event-sourced store.

Every mutation is journaled: session-scoped events are applied through the
same fold replay uses; job/pool/report mutations happen in the domain modules
and are journaled alongside, so replay(log) reconstructs the identical state.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .. import dmta as dmta_mod
from .. import insights, molgen
from ..agents import (
    AgentRole,
    GuardrailRules,
    HandoffAction,
    SayAction,
    ScriptedPolicy,
    ScriptedRule,
    SessionContext,
    Stimulus,
    ToolCallAction,
    blackboard_value,
    guardrail_check,
    route,
)
from ..chem import compute_descriptors, parse_smiles, render_depiction, to_canonical
from ..molgen import NameDictionary
from ..scheduler import Resource, ResourceKind, schedule
from ..toolbus import ParamSpec, ToolDescriptor, ToolError, ToolRegistry, validate_args
from ..virtlab import (
    FAULT_INJECT,
    FAULT_PARAM,
    Job,
    JobKind,
    JobState,
    SimClock,
    predict_duration,
    simulate_hplc,
    simulate_synthesis,
    transition,
)
from .events import Event, EventStore
from .state import (
    APPROVAL_APPROVED,
    APPROVAL_EDITED,
    APPROVAL_PENDING,
    APPROVAL_REJECTED,
    ApprovalRequest,
    SystemState,
    apply_event,
    replay,
)


class UnknownSession(LookupError):
    pass


class UnknownApproval(LookupError):
    pass


class AlreadyDecided(ValueError):
    pass


class InvalidEditedParams(ValueError):
    pass


class SafetyRefused(PermissionError):
    pass


GREETING = "What would you like to do today?"

JOB_PARAM_SPECS: dict[JobKind, tuple[ParamSpec, ...]] = {
    JobKind.SYNTHESIS: (
        ParamSpec("temperature_c", "number", minimum=-20, maximum=250),
        ParamSpec("time_min", "number", minimum=1, maximum=600),
        ParamSpec("solvent", "string"),
        ParamSpec("reagent_equiv", "number", minimum=0.1, maximum=10),
        ParamSpec("fault", "enum", values=("inject",)),
    ),
    JobKind.HPLC: (
        ParamSpec("column", "string"),
        ParamSpec("flow_ml_min", "number", minimum=0.1, maximum=5),
        ParamSpec("gradient", "string"),
        ParamSpec("detection_nm", "number", minimum=190, maximum=800),
        ParamSpec("source_job_id", "number"),
        ParamSpec("fault", "enum", values=("inject",)),
    ),
}


def recommend_params(kind: JobKind, heavy_atoms: int) -> dict[str, Any]:
    """Deterministic parameter recommendation derived from the target size."""
    if kind is JobKind.SYNTHESIS:
        return {
            "temperature_c": 50 + heavy_atoms,
            "time_min": 120,
            "solvent": "acetonitrile",
            "reagent_equiv": 1.2,
        }
    return {
        "column": "C18 2.1x50mm",
        "flow_ml_min": 0.8,
        "gradient": "5-95% MeCN over 12 min",
        "detection_nm": 254,
    }


def params_text(params: dict[str, Any]) -> str:
    return "\n".join(f"- {key}: {params[key]}" for key in sorted(params))


def duration_text(kind: JobKind) -> str:
    minutes = predict_duration(kind)
    if minutes % 60 == 0:
        hours = minutes // 60
        return f"{hours} hour{'s' if hours != 1 else ''} ({minutes} minutes)"
    return f"{minutes} minutes"


@dataclass
class RuntimeConfig:
    state_path: str | Path | None = None
    rules_path: str | Path | None = None
    dictionary_path: str | Path | None = None
    token: str | None = None
    realtime_minute_seconds: float = 0.0  # 0 = pure sim time


@dataclass
class _Notification:
    session_id: str
    text: str
    data: dict = field(default_factory=dict)


_PLACEHOLDER = re.compile(r"\{([A-Za-z0-9_./-]+)\}")


class TippyRuntime:
    """Single-writer engine over one event store."""

    def __init__(self, config: RuntimeConfig | None = None):
        self.config = config or RuntimeConfig()
        self.store = EventStore(self.config.state_path)
        self.state: SystemState = replay(self.store)
        last_ts = max((e.ts for e in self.store.events()), default=0)
        self.clock = SimClock(last_ts)
        self.rules = (
            GuardrailRules.from_file(self.config.rules_path)
            if self.config.rules_path
            else GuardrailRules.default()
        )
        self.dictionary = (
            NameDictionary.from_file(self.config.dictionary_path)
            if self.config.dictionary_path
            else NameDictionary.default()
        )
        self.policy = build_default_policy()
        self._job_sessions: dict[int, str] = {}
        for event in self.store.events():
            if event.kind == "job.transition":
                self._job_sessions.setdefault(event.payload["job_id"], event.session_id)
        self._active_session = "system"
        self._notifications: list[_Notification] = []
        self._lock = threading.RLock()
        self.registry = build_registry(self)

    # --- event plumbing -----------------------------------------------------

    def _emit(self, session_id: str, kind: str, payload: dict, live_apply: bool = True) -> Event:
        event = self.store.append(kind, session_id, payload, ts=self.clock.now_min)
        if live_apply:
            apply_event(self.state, event, replaying=False)
        return event

    def _job_sink(self, session_id: str):
        def sink(kind: str, payload: dict) -> None:
            # Domain functions already mutated jobs/pool; journal only.
            self._emit(session_id, kind, payload, live_apply=False)

        return sink

    def _emit_put(
        self, session_id: str, key: str, value: Any, author: AgentRole | None = None
    ) -> int:
        ctx = self.state.session(session_id)
        history = ctx.board.get(key, [])
        version = (history[-1].version if history else 0) + 1
        self._emit(
            session_id,
            "blackboard.put",
            {
                "key": key,
                "value": value,
                "version": version,
                "author": (author or ctx.active_agent).value,
                "ts": self.clock.now_min,
            },
        )
        return version

    def _emit_handoff(self, session_id: str, to: AgentRole, reason: str) -> None:
        ctx = self.state.session(session_id)
        if to is ctx.active_agent:
            return
        self._emit(
            session_id,
            "agent.handoff",
            {
                "from": ctx.active_agent.value,
                "to": to.value,
                "reason": reason,
                "at_version": ctx.blackboard_version,
            },
        )

    def _emit_say(self, session_id: str, speaker: str, text: str) -> None:
        self._emit(session_id, "session.message", {"speaker": speaker, "text": text})

    def _emit_verdict(self, session_id: str, text: str, verdict) -> None:
        payload = {"decision": verdict.decision, "text": text}
        if verdict.category is not None:
            payload["category"] = verdict.category
            payload["matched_rule"] = verdict.matched_rule
        self._emit(session_id, "safety.verdict", payload)

    def guard(self, rendered_call: str) -> str | None:
        """toolbus guard hook: deny reason or None; denials are journaled."""
        verdict = guardrail_check(rendered_call, self.rules)
        if verdict.allowed:
            return None
        self._emit_verdict(self._active_session, rendered_call, verdict)
        return f"safety rule {verdict.matched_rule} ({verdict.category})"

    def tool_sink(self, kind: str, payload: dict) -> None:
        self._emit(self._active_session, kind, payload, live_apply=False)

    # --- sessions -------------------------------------------------------------

    def create_session(self) -> str:
        with self._lock:
            session_id = self.state.next_session_id()
            self.state.session(session_id)
            self._emit_put(session_id, "session/created", {"ts": self.clock.now_min})
            self._emit_say(session_id, AgentRole.SUPERVISOR.value, GREETING)
            return session_id

    def get_session(self, session_id: str) -> SessionContext:
        ctx = self.state.sessions.get(session_id)
        if ctx is None:
            raise UnknownSession(session_id)
        return ctx

    def handle_message(self, session_id: str, text: str) -> list[dict]:
        """Run one user message through guardrail, routing, and the active
        agent's policy. Returns the new transcript entries.
        """
        with self._lock:
            ctx = self.get_session(session_id)
            self._active_session = session_id
            base = len(ctx.transcript)
            ctx.now_min = self.clock.now_min
            self._emit_say(session_id, "user", text)
            verdict = guardrail_check(text, self.rules)
            self._emit_verdict(session_id, text, verdict)
            if not verdict.allowed:
                refusal = (
                    f"I can't help with that. The request was declined by safety "
                    f"rule {verdict.matched_rule} (category: {verdict.category})."
                )
                self._emit_say(session_id, AgentRole.SAFETY_GUARDRAIL.value, refusal)
                return self._entries_since(ctx, base)
            target = route(text, ctx)
            if target is not ctx.active_agent:
                self._emit_handoff(session_id, target, f"routing: {target.value} intent")
            stimulus = Stimulus(kind="user_message", text=text)
            ctx.last_stimulus = stimulus
            self._execute_policy(session_id, stimulus, clarify_on_empty=True)
            self.drain_notifications()
            return self._entries_since(ctx, base)

    def _entries_since(self, ctx: SessionContext, base: int) -> list[dict]:
        return [
            {"speaker": e.speaker, "text": e.text, "ts": e.ts}
            for e in ctx.transcript[base:]
        ]

    def drain_notifications(self) -> None:
        while self._notifications:
            note = self._notifications.pop(0)
            ctx = self.state.session(note.session_id)
            stimulus = Stimulus(kind="event", text=note.text, data=note.data)
            ctx.last_stimulus = stimulus
            previous = self._active_session
            self._active_session = note.session_id
            try:
                self._execute_policy(note.session_id, stimulus, clarify_on_empty=False)
            finally:
                self._active_session = previous

    # --- policy execution -------------------------------------------------------

    def _execute_policy(
        self, session_id: str, stimulus: Stimulus, clarify_on_empty: bool
    ) -> None:
        ctx = self.state.session(session_id)
        plan = self.policy.plan(ctx, stimulus)
        if not plan and clarify_on_empty:
            plan = [
                SayAction(
                    text=(
                        "I can help with molecule design, lab runs, analytics, "
                        "and reports. What would you like to do?"
                    )
                )
            ]
        saved: dict[str, Any] = {}
        for action in plan:
            if isinstance(action, HandoffAction):
                self._emit_handoff(session_id, action.to, action.reason)
            elif isinstance(action, SayAction):
                text = self._substitute(action.text, saved, ctx, stimulus)
                self._emit_say(session_id, ctx.active_agent.value, str(text))
            elif isinstance(action, ToolCallAction):
                args = self._substitute(action.args, saved, ctx, stimulus)
                args = self._coerce_args(action.tool, args)
                outcome = self.registry.call(action.tool, args)
                if isinstance(outcome, ToolError):
                    self._emit_say(
                        session_id,
                        ctx.active_agent.value,
                        f"Tool {action.tool} failed: {outcome.code}: {outcome.detail}",
                    )
                    break
                if action.save_as:
                    saved[action.save_as] = outcome

    def _resolve_token(
        self, token: str, saved: dict, ctx: SessionContext, stimulus: Stimulus
    ) -> Any:
        if token.startswith("board."):
            return blackboard_value(ctx, token[len("board."):])
        if token.startswith("event."):
            return stimulus.data.get(token[len("event."):])
        value: Any = saved
        for part in token.split("."):
            if isinstance(value, dict) and part in value:
                value = value[part]
            else:
                raise KeyError(f"unresolved placeholder {{{token}}}")
        return value

    def _substitute(self, obj: Any, saved: dict, ctx: SessionContext, stimulus: Stimulus):
        if isinstance(obj, str):
            full = _PLACEHOLDER.fullmatch(obj)
            if full:
                return self._resolve_token(full.group(1), saved, ctx, stimulus)
            return _PLACEHOLDER.sub(
                lambda m: str(self._resolve_token(m.group(1), saved, ctx, stimulus)), obj
            )
        if isinstance(obj, dict):
            return {k: self._substitute(v, saved, ctx, stimulus) for k, v in obj.items()}
        if isinstance(obj, list):
            return [self._substitute(v, saved, ctx, stimulus) for v in obj]
        return obj

    def _coerce_args(self, tool: str, args: dict) -> dict:
        descriptor = self.registry.descriptor(tool)
        if descriptor is None:
            return args
        specs = {p.name: p for p in descriptor.params}
        coerced = {}
        for key, value in args.items():
            spec = specs.get(key)
            if spec is not None and spec.type == "number" and isinstance(value, str):
                try:
                    value = int(value) if value.lstrip("-").isdigit() else float(value)
                except ValueError:
                    pass
            coerced[key] = value
        return coerced

    # --- lab execution -----------------------------------------------------------

    def _session_of_job(self, job_id: int) -> str:
        return self._job_sessions.get(job_id, self._active_session)

    def create_job(
        self, session_id: str, kind: JobKind, target: str, params: dict | None = None
    ) -> dict:
        canonical = to_canonical(parse_smiles(target))
        descriptors = compute_descriptors(parse_smiles(canonical))
        merged = recommend_params(kind, descriptors.heavy_atoms)
        merged.update(params or {})
        problem = validate_args(
            ToolDescriptor(
                name="lab.params_check",
                description="internal",
                params=JOB_PARAM_SPECS[kind],
            ),
            merged,
        )
        if problem is not None:
            raise ValueError(problem)
        job = Job(
            id=self.state.next_job_id(),
            kind=kind,
            params=merged,
            target=canonical,
            created_at=self.clock.now_min,
        )
        self.state.jobs[job.id] = job
        self._job_sessions[job.id] = session_id
        self._emit(
            session_id,
            "job.transition",
            {
                "job_id": job.id,
                "to": JobState.CREATED.value,
                "at": job.created_at,
                "kind": kind.value,
                "target": canonical,
                "params": merged,
            },
            live_apply=False,
        )
        approval = ApprovalRequest(
            id=self.state.next_approval_id(),
            job_id=job.id,
            proposed_params=dict(merged),
        )
        self._emit_put(session_id, f"approval/{approval.id}", approval.to_dict())
        self._emit_put(session_id, "lab/last_job_id", job.id)
        self._emit_put(session_id, "lab/last_target", canonical)
        self._emit_put(session_id, "lab/pending_approval_id", approval.id)
        if kind is JobKind.HPLC:
            self._emit_put(session_id, "lab/last_hplc_job_id", job.id)
        return {
            "job_id": job.id,
            "approval_id": approval.id,
            "kind": kind.value,
            "target": canonical,
            "params": merged,
            "params_text": params_text(merged),
            "predicted_min": predict_duration(kind),
        }

    def _run_scheduled_job(self, job: Job, session_id: str) -> None:
        sink = self._job_sink(session_id)
        slot = schedule(job, self.state.resources, now=self.clock.now_min, sink=sink)
        transition(job, JobState.RUNNING, at=slot.start_min, sink=sink)
        if self.config.realtime_minute_seconds > 0:
            # Real-time mode: one simulated minute takes a configured wall duration.
            import time

            time.sleep((slot.end_min - slot.start_min) * self.config.realtime_minute_seconds)
        if job.params.get(FAULT_PARAM) == FAULT_INJECT:
            transition(job, JobState.FAILED, at=slot.end_min, sink=sink)
            outcome_text = f"job.failed kind={job.kind.value} job_id={job.id}"
        else:
            descriptors = compute_descriptors(parse_smiles(job.target))
            if job.kind is JobKind.SYNTHESIS:
                result = simulate_synthesis(descriptors)
            else:
                result = simulate_hplc(descriptors)
            transition(job, JobState.COMPLETED, at=slot.end_min, result=result, sink=sink)
            outcome_text = f"job.completed kind={job.kind.value} job_id={job.id}"
        self.clock.advance(slot.end_min)
        self._notifications.append(
            _Notification(
                session_id=session_id,
                text=outcome_text,
                data={"job_id": job.id, "kind": job.kind.value, "state": job.state.value},
            )
        )

    def decide_approval(
        self,
        approval_id: str,
        decision: str,
        params: dict | None = None,
        decided_by: str = "operator",
    ) -> ApprovalRequest:
        """Resolve a Pending approval. Approved/Edited schedules and runs the
        job; Rejected cancels it (the job stays Created and is reported as
        cancelled). Raises AlreadyDecided or InvalidEditedParams.
        """
        with self._lock:
            approval = self.state.approvals.get(approval_id)
            if approval is None:
                raise UnknownApproval(approval_id)
            if approval.state != APPROVAL_PENDING:
                raise AlreadyDecided(f"approval {approval_id} is {approval.state}")
            if decision not in (APPROVAL_APPROVED, APPROVAL_EDITED, APPROVAL_REJECTED):
                raise ValueError(f"unknown decision {decision!r}")
            job = self.state.jobs[approval.job_id]
            session_id = self._session_of_job(job.id)
            rendered = f"approval decision {decision} for job {job.id} ({job.kind.value} {job.target})"
            verdict = guardrail_check(rendered, self.rules)
            self._emit_verdict(session_id, rendered, verdict)
            if not verdict.allowed:
                raise SafetyRefused(
                    f"decision declined by safety rule {verdict.matched_rule}"
                )

            effective = dict(approval.proposed_params)
            if decision == APPROVAL_EDITED:
                effective.update(params or {})
                problem = validate_args(
                    ToolDescriptor(
                        name="lab.params_check",
                        description="internal",
                        params=JOB_PARAM_SPECS[job.kind],
                    ),
                    effective,
                )
                if problem is not None:
                    raise InvalidEditedParams(problem)

            updated = ApprovalRequest(
                id=approval.id,
                job_id=approval.job_id,
                proposed_params=effective,
                state=decision,
                decided_by=decided_by,
                decided_at=self.clock.now_min,
            )
            self._emit_put(session_id, f"approval/{approval.id}", updated.to_dict())
            if decision == APPROVAL_EDITED:
                job.params = dict(effective)
            current_pending = blackboard_value(
                self.state.session(session_id), "lab/pending_approval_id"
            )
            if current_pending == approval.id:
                self._emit_put(session_id, "lab/pending_approval_id", None)
            if decision == APPROVAL_REJECTED:
                return updated
            self._run_scheduled_job(job, session_id)
            return updated

    def job_cancelled(self, job: Job) -> bool:
        return any(
            a.job_id == job.id and a.state == APPROVAL_REJECTED
            for a in self.state.approvals.values()
        )

    def job_status(self, job_id: int) -> dict:
        job = self.state.jobs.get(job_id)
        if job is None:
            raise insights.UnknownJob(f"no job {job_id}")
        info: dict[str, Any] = {
            "job_id": job.id,
            "kind": job.kind.value,
            "state": job.state.value,
            "target": job.target,
            "summary": f"Job {job.id} ({job.kind.value}) is {job.state.value}.",
        }
        if job.kind is JobKind.HPLC and job.state is JobState.COMPLETED:
            hplc = job.result
            info["rt_text"] = f"{hplc.main_peak_rt_min:g}"
            info["purity_text"] = f"{hplc.purity_pct:g}"
            source_id = job.params.get("source_job_id")
            source = self.state.jobs.get(source_id) if source_id is not None else None
            synth = source.result if source is not None and source.state is JobState.COMPLETED else None
            if synth is not None:
                info["yield_text"] = f"{synth.yield_pct:g}"
                info["mass_text"] = f"{synth.mass_mg:g}"
                info["side_note"] = synth.side_products_note
                info["summary"] = (
                    "The HPLC has completed and the results are within the "
                    "expected range of synthesis efficiency. The HPLC "
                    f"chromatogram showed a primary peak at {info['rt_text']} "
                    f"minutes with a purity of {info['purity_text']}%. The "
                    f"synthesis yielded {info['mass_text']} mg of material with "
                    f"{info['yield_text']}% yield. {info['side_note']} I have "
                    "uploaded the results to the session data store for "
                    "downstream analytics."
                )
            else:
                info["summary"] = (
                    f"The HPLC job {job.id} completed with a primary peak at "
                    f"{info['rt_text']} minutes and a purity of "
                    f"{info['purity_text']}%."
                )
        elif job.kind is JobKind.SYNTHESIS and job.state is JobState.COMPLETED:
            synth = job.result
            info["yield_text"] = f"{synth.yield_pct:g}"
            info["mass_text"] = f"{synth.mass_mg:g}"
            info["summary"] = (
                f"The synthesis job {job.id} completed: {synth.mass_mg} mg at "
                f"{synth.yield_pct}% yield. {synth.side_products_note}"
            )
        return info

    def attach_summary(self, session_id: str, job_id: int, title: str | None = None) -> dict:
        job = self.state.jobs.get(job_id)
        if job is None:
            raise insights.UnknownJob(f"no job {job_id}")
        related = None
        source_id = job.params.get("source_job_id")
        if source_id is not None:
            related = self.state.jobs.get(source_id)
        doc = insights.render_report(job, related=related, created_at=self.clock.now_min)
        if title:
            doc.title = title
        insights.attach_report(
            self.state.jobs, job_id, doc, sink=self._job_sink(session_id)
        )
        self.state.reports[doc.id] = doc
        self._emit_put(session_id, "reports/last_doc_id", doc.id)
        return {"doc_id": doc.id, "title": doc.title, "job_id": job_id}

    # --- cycles --------------------------------------------------------------

    def start_cycle(
        self,
        seed: str,
        target_rt_min: float,
        budget: int,
        rt_tolerance_min: float = 0.2,
    ) -> dict:
        with self._lock:
            cycle_id = self.state.next_cycle_id()
            ctx = self.state.session(cycle_id)
            rendered = f"run dmta cycle seed={seed} target_rt={target_rt_min} budget={budget}"
            verdict = guardrail_check(rendered, self.rules)
            previous = self._active_session
            self._active_session = cycle_id
            try:
                self._emit_verdict(cycle_id, rendered, verdict)
                if not verdict.allowed:
                    raise SafetyRefused(
                        f"cycle declined by safety rule {verdict.matched_rule}"
                    )
                objective = dmta_mod.Objective(
                    target_rt_min=target_rt_min, rt_tolerance_min=rt_tolerance_min
                )
                pool = [
                    Resource(id=f"{cycle_id}-synth-1", kind=ResourceKind.SYNTH_STATION),
                    Resource(id=f"{cycle_id}-hplc-1", kind=ResourceKind.HPLC_INSTRUMENT),
                ]
                self.state.resources.extend(pool)

                def cycle_sink(kind: str, payload: dict) -> None:
                    # dmta mutates the session blackboard itself; apply only
                    # cycle.progress so state.cycles stays the single source.
                    self._emit(
                        cycle_id, kind, payload, live_apply=(kind == "cycle.progress")
                    )

                env = dmta_mod.LabEnv(
                    pool=pool,
                    clock=SimClock(0),
                    jobs=self.state.jobs,
                    ctx=ctx,
                    sink=cycle_sink,
                    _next_id=self.state.next_job_id(),
                )
                outcome = dmta_mod.run_cycle(seed, objective, budget, env=env)
                for job_id in env.jobs:
                    self._job_sessions.setdefault(job_id, cycle_id)
                return {
                    "cycle_id": cycle_id,
                    "stop_reason": outcome.stop_reason,
                    "best_smiles": outcome.best.candidate.canonical_smiles,
                    "best_score": outcome.best.score,
                    "best_rt_min": outcome.best.hplc.main_peak_rt_min,
                    "evaluations": len(outcome.history),
                }
            finally:
                self._active_session = previous

    def close(self) -> None:
        self.store.close()


# --- tool registry -----------------------------------------------------------


def build_registry(runtime: TippyRuntime) -> ToolRegistry:
    registry = ToolRegistry(guard=runtime.guard, sink=runtime.tool_sink)

    def descriptors_of(args: dict) -> dict:
        graph = parse_smiles(args["smiles"])
        canonical = to_canonical(graph)
        d = compute_descriptors(graph)
        return {
            "canonical": canonical,
            "heavy_atoms": d.heavy_atoms,
            "aliphatic_c": d.aliphatic_c,
            "aromatic_c": d.aromatic_c,
            "n_count": d.n_count,
            "o_count": d.o_count,
            "other_hetero": d.other_hetero,
            "hetero_total": d.hetero_total,
            "ring_count": d.ring_count,
            "logp_surrogate": d.logp_surrogate,
        }

    registry.register(
        ToolDescriptor(
            name="chem.parse_smiles",
            description="Parse a SMILES string and return its canonical form and size.",
            params=(ParamSpec("smiles", "string", required=True),),
        ),
        lambda args: {
            "canonical": to_canonical(parse_smiles(args["smiles"])),
            "atoms": len(parse_smiles(args["smiles"]).atoms),
            "bonds": len(parse_smiles(args["smiles"]).bonds),
            "ring_closures": parse_smiles(args["smiles"]).ring_closure_count,
        },
    )
    registry.register(
        ToolDescriptor(
            name="chem.descriptors",
            description="Compute scalar descriptors for a structure.",
            params=(ParamSpec("smiles", "string", required=True),),
        ),
        descriptors_of,
    )

    def render(args: dict) -> dict:
        graph = parse_smiles(args["smiles"])
        canonical = to_canonical(graph)
        svg = render_depiction(graph)
        runtime._emit_put(
            runtime._active_session, f"depictions/{canonical}", svg
        )
        return {"canonical": canonical, "svg": svg}

    registry.register(
        ToolDescriptor(
            name="chem.render_depiction",
            description="Render a deterministic SVG depiction of a structure.",
            params=(ParamSpec("smiles", "string", required=True),),
        ),
        render,
    )
    registry.register(
        ToolDescriptor(
            name="molgen.lookup_name",
            description="Look up a known molecule name and return its SMILES.",
            params=(ParamSpec("name", "string", required=True),),
        ),
        lambda args: {
            "name": args["name"],
            "smiles": molgen.lookup_name(args["name"], runtime.dictionary),
        },
    )

    def gen_analogs(args: dict) -> dict:
        seed = parse_smiles(args["smiles"])
        out = molgen.generate_analogs(seed, int(args.get("max_out", 10)))
        return {
            "count": len(out),
            "analogs": [
                {
                    "smiles": c.canonical_smiles,
                    "edit": c.provenance.edit,
                    "druglikeness": molgen.score_druglikeness(c.descriptors),
                }
                for c in out
            ],
            "smiles_csv": ", ".join(c.canonical_smiles for c in out),
        }

    registry.register(
        ToolDescriptor(
            name="molgen.generate_analogs",
            description="Enumerate deterministic single-edit analogs of a seed structure.",
            params=(
                ParamSpec("smiles", "string", required=True),
                ParamSpec("max_out", "number", minimum=1, maximum=10_000),
            ),
        ),
        gen_analogs,
    )
    registry.register(
        ToolDescriptor(
            name="molgen.score_druglikeness",
            description="Score a structure's drug-likeness in [0, 1].",
            params=(ParamSpec("smiles", "string", required=True),),
        ),
        lambda args: {
            "canonical": to_canonical(parse_smiles(args["smiles"])),
            "score": molgen.score_druglikeness(
                compute_descriptors(parse_smiles(args["smiles"]))
            ),
        },
    )
    registry.register(
        ToolDescriptor(
            name="lab.create_job",
            description="Create a lab job (with recommended parameters) and a pending approval.",
            params=(
                ParamSpec("kind", "enum", required=True, values=("Synthesis", "Hplc")),
                ParamSpec("target", "string", required=True),
                ParamSpec("params", "object"),
            ),
            safety_sensitive=True,
        ),
        lambda args: runtime.create_job(
            runtime._active_session,
            JobKind(args["kind"]),
            args["target"],
            args.get("params"),
        ),
    )

    def decide(args: dict) -> dict:
        approval = runtime.decide_approval(
            args["approval_id"],
            args["decision"],
            params=args.get("params"),
            decided_by="user:chat",
        )
        job = runtime.state.jobs[approval.job_id]
        return {
            "approval_id": approval.id,
            "decision": approval.state,
            "job_id": job.id,
            "kind": job.kind.value,
            "state": job.state.value,
            "predicted_min": predict_duration(job.kind),
            "duration_text": duration_text(job.kind),
        }

    registry.register(
        ToolDescriptor(
            name="lab.decide_approval",
            description="Approve, edit, or reject a pending job approval; approval starts the job.",
            params=(
                ParamSpec("approval_id", "string", required=True),
                ParamSpec(
                    "decision",
                    "enum",
                    required=True,
                    values=(APPROVAL_APPROVED, APPROVAL_EDITED, APPROVAL_REJECTED),
                ),
                ParamSpec("params", "object"),
            ),
            safety_sensitive=True,
        ),
        decide,
    )
    registry.register(
        ToolDescriptor(
            name="lab.job_status",
            description="Report a job's state and, when complete, its results.",
            params=(ParamSpec("job_id", "number", required=True),),
        ),
        lambda args: runtime.job_status(int(args["job_id"])),
    )
    registry.register(
        ToolDescriptor(
            name="lab.predict_duration",
            description="Predicted duration in minutes for a workflow kind.",
            params=(
                ParamSpec("kind", "enum", required=True, values=("Synthesis", "Hplc")),
            ),
        ),
        lambda args: {
            "kind": args["kind"],
            "minutes": predict_duration(JobKind(args["kind"])),
        },
    )

    def durations(args: dict) -> dict:
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
            ],
            "summary": (
                "; ".join(
                    f"{r.kind}: n={r.count}, mean {r.mean_min:g} min, "
                    f"p50 {r.p50_min:g}, p95 {r.p95_min:g}"
                    for r in rows
                )
                or "No completed jobs yet."
            ),
        }

    registry.register(
        ToolDescriptor(
            name="analysis.activity_durations",
            description="Duration statistics per activity kind over completed jobs.",
        ),
        durations,
    )

    def workload(args: dict) -> dict:
        start = int(args.get("start", 0))
        end = int(args["end"]) if "end" in args else max(runtime.clock.now_min, start + 1)
        fractions = insights.actor_workload(
            runtime.store.events(),
            (start, end),
            resources=[r.id for r in runtime.state.resources],
        )
        return {
            "window": [start, end],
            "fractions": fractions,
            "summary": "; ".join(f"{rid}: {frac:.0%}" for rid, frac in fractions.items())
            or "No resources.",
        }

    registry.register(
        ToolDescriptor(
            name="analysis.actor_workload",
            description="Busy fraction per resource over a time window.",
            params=(
                ParamSpec("start", "number", minimum=0),
                ParamSpec("end", "number", minimum=1),
            ),
        ),
        workload,
    )

    def timeline(args: dict) -> dict:
        rows = insights.job_timeline(int(args["job_id"]), runtime.store.events())
        return {
            "job_id": int(args["job_id"]),
            "rows": [
                {"state": r.state, "entered_at": r.entered_at, "waited_min": r.waited_min}
                for r in rows
            ],
        }

    registry.register(
        ToolDescriptor(
            name="analysis.job_timeline",
            description="State timeline for one job with waiting times.",
            params=(ParamSpec("job_id", "number", required=True),),
        ),
        timeline,
    )
    registry.register(
        ToolDescriptor(
            name="report.attach_summary",
            description="Render a results summary document and attach it to a job.",
            params=(
                ParamSpec("job_id", "number", required=True),
                ParamSpec("title", "string"),
            ),
        ),
        lambda args: runtime.attach_summary(
            runtime._active_session, int(args["job_id"]), args.get("title")
        ),
    )
    def board_put(args: dict) -> dict:
        if args.get("clear"):
            value = None
        elif "value" in args:
            value = args["value"]
        else:
            value = args.get("text")
        return {
            "key": args["key"],
            "version": runtime._emit_put(runtime._active_session, args["key"], value),
        }

    registry.register(
        ToolDescriptor(
            name="board.put",
            description="Write a value to the session blackboard (object, text, or clear).",
            params=(
                ParamSpec("key", "string", required=True),
                ParamSpec("value", "object"),
                ParamSpec("text", "string"),
                ParamSpec("clear", "boolean"),
            ),
        ),
        board_put,
    )
    registry.register(
        ToolDescriptor(
            name="dmta.run_cycle",
            description="Run a closed-loop optimization cycle against a target retention time.",
            params=(
                ParamSpec("seed", "string", required=True),
                ParamSpec("target_rt_min", "number", required=True, minimum=0.5, maximum=14.5),
                ParamSpec("budget", "number", required=True, minimum=1, maximum=500),
            ),
            safety_sensitive=True,
        ),
        lambda args: runtime.start_cycle(
            args["seed"], float(args["target_rt_min"]), int(args["budget"])
        ),
    )
    return registry


# --- default scripted scenario -------------------------------------------------


def build_default_policy() -> ScriptedPolicy:
    """The declarative table that drives the golden conversation flow."""
    rules = [
        # Confirmation of a pending offer (e.g. "add a summary of the results?").
        ScriptedRule(
            trigger_kind="user_message",
            pattern=r"^\s*(yes|yep|sure|ok(ay)?|please do)\b",
            requires_board=("offers/pending", "lab/last_hplc_job_id"),
            actions=(
                {"type": "handoff", "to": "Report", "reason": "attach results summary"},
                {
                    "type": "tool",
                    "tool": "report.attach_summary",
                    "args": {"job_id": "{board.lab/last_hplc_job_id}"},
                    "save_as": "attached",
                },
                {
                    "type": "tool",
                    "tool": "board.put",
                    "args": {"key": "offers/pending", "clear": True},
                },
                {
                    "type": "say",
                    "text": (
                        "I have added a summary of the results to the job's data "
                        "store (document {attached.doc_id}). If you'd like to "
                        "improve the synthesis we could retry with different "
                        "parameters."
                    ),
                },
            ),
        ),
        # Polite close.
        ScriptedRule(
            trigger_kind="user_message",
            pattern=r"^\s*no( thanks|pe)?\b|looks great|that's all",
            actions=(
                {
                    "type": "say",
                    "text": (
                        "Great - glad it looks good. I'm here when you want to "
                        "start the next cycle."
                    ),
                },
            ),
        ),
        # Show a proposed structure.
        ScriptedRule(
            trigger_kind="user_message",
            agent=AgentRole.MOLECULE,
            pattern=r"(show|visuali[sz]e|depict).*(structure|molecule)|\bstructure\b",
            requires_board=("molecules/selected",),
            actions=(
                {
                    "type": "tool",
                    "tool": "chem.render_depiction",
                    "args": {"smiles": "{board.molecules/selected}"},
                    "save_as": "depiction",
                },
                {
                    "type": "say",
                    "text": (
                        "Here it is - I rendered {board.molecules/selected} and "
                        "stored the depiction on the session blackboard "
                        "(key depictions/{depiction.canonical})."
                    ),
                },
            ),
        ),
        # Analogs of an explicit structure.
        ScriptedRule(
            trigger_kind="user_message",
            agent=AgentRole.MOLECULE,
            pattern=r"(similar|analogs?|variations?)\s+(of|to|for)\s+(?P<smiles>[A-Za-z0-9()=#]+)",
            actions=(
                {
                    "type": "tool",
                    "tool": "molgen.generate_analogs",
                    "args": {"smiles": "{match.smiles}", "max_out": 5},
                    "save_as": "gen",
                },
                {
                    "type": "say",
                    "text": "Here are analogs of {match.smiles}: {gen.smiles_csv}",
                },
            ),
        ),
        # Design request: propose candidate molecules.
        ScriptedRule(
            trigger_kind="user_message",
            agent=AgentRole.MOLECULE,
            pattern=r"\b(propose|design|generate)\b.*\b(molecule|compound|candidate)",
            actions=(
                {
                    "type": "tool",
                    "tool": "molgen.lookup_name",
                    "args": {"name": "tippy-analog-1"},
                    "save_as": "a1",
                },
                {
                    "type": "tool",
                    "tool": "molgen.lookup_name",
                    "args": {"name": "tippy-analog-2"},
                    "save_as": "a2",
                },
                {
                    "type": "tool",
                    "tool": "molgen.lookup_name",
                    "args": {"name": "tippy-analog-3"},
                    "save_as": "a3",
                },
                {
                    "type": "tool",
                    "tool": "board.put",
                    "args": {
                        "key": "molecules/proposed",
                        "value": {"smiles": ["{a1.smiles}", "{a2.smiles}", "{a3.smiles}"]},
                    },
                },
                {
                    "type": "tool",
                    "tool": "board.put",
                    "args": {"key": "molecules/selected", "text": "{a1.smiles}"},
                },
                {
                    "type": "say",
                    "text": (
                        "Wonderful. Here are some generated candidate molecules:\n"
                        "- {a1.smiles}\n- {a2.smiles}\n- {a3.smiles}\n"
                        "Would you like to visualize their structures or "
                        "synthesize the molecules?"
                    ),
                },
            ),
        ),
        # Approve and start the pending job.
        ScriptedRule(
            trigger_kind="user_message",
            agent=AgentRole.LAB,
            pattern=r"\b(schedule|asap|proceed|go ahead)\b|run it",
            requires_board=("lab/pending_approval_id",),
            actions=(
                {
                    "type": "tool",
                    "tool": "lab.decide_approval",
                    "args": {
                        "approval_id": "{board.lab/pending_approval_id}",
                        "decision": "Approved",
                    },
                    "save_as": "decided",
                },
                {
                    "type": "say",
                    "text": (
                        "Great. I have scheduled and started the {decided.kind} "
                        "workflow with the parameters we discussed. The scheduler "
                        "is predicting that the workflow will take "
                        "{decided.duration_text}."
                    ),
                },
            ),
        ),
        # Check results: run HPLC on the last synthesis target.
        ScriptedRule(
            trigger_kind="user_message",
            agent=AgentRole.LAB,
            pattern=r"(check|verify).*(yield|purity|results)|run the hplc|hplc workflow",
            requires_board=("lab/last_target", "lab/last_job_id"),
            actions=(
                {
                    "type": "tool",
                    "tool": "lab.create_job",
                    "args": {
                        "kind": "Hplc",
                        "target": "{board.lab/last_target}",
                        "params": {"source_job_id": "{board.lab/last_job_id}"},
                    },
                    "save_as": "created",
                },
                {
                    "type": "say",
                    "text": (
                        "Great. I will pass the sample molecule to the Analysis "
                        "Lab, and run the HPLC workflow to check the purity of "
                        "your synthesized compounds by analyzing the retention "
                        "time. Given your molecule, I recommend these "
                        "parameters:\n{created.params_text}\nWould you like to "
                        "change any of these or should I proceed with scheduling "
                        "a job in the Analysis Lab on an HPLC?"
                    ),
                },
            ),
        ),
        # Synthesize the selected molecule.
        ScriptedRule(
            trigger_kind="user_message",
            agent=AgentRole.LAB,
            pattern=r"\bsynthesi",
            requires_board=("molecules/selected",),
            actions=(
                {
                    "type": "tool",
                    "tool": "lab.create_job",
                    "args": {"kind": "Synthesis", "target": "{board.molecules/selected}"},
                    "save_as": "created",
                },
                {
                    "type": "say",
                    "text": (
                        "I see you have a Synthesis Lab with a Synthesis Workflow "
                        "in it. To synthesize {board.molecules/selected}, here "
                        "are the parameters I recommend:\n{created.params_text}\n"
                        "Do you want to change any of these or would you like to "
                        "proceed with scheduling this work?"
                    ),
                },
            ),
        ),
        # Status question about the latest job.
        ScriptedRule(
            trigger_kind="user_message",
            agent=AgentRole.ANALYSIS,
            pattern=r"how'?s|how is|\bstatus\b|\bdoing\b|\bprogress\b",
            requires_board=("lab/last_job_id",),
            actions=(
                {
                    "type": "tool",
                    "tool": "lab.job_status",
                    "args": {"job_id": "{board.lab/last_job_id}"},
                    "save_as": "status",
                },
                {
                    "type": "tool",
                    "tool": "board.put",
                    "args": {"key": "offers/pending", "text": "attach_summary"},
                },
                {
                    "type": "say",
                    "text": (
                        "{status.summary} Would you also like me to add a summary "
                        "of the results into the job's associated data store?"
                    ),
                },
            ),
        ),
        # Analytics questions.
        ScriptedRule(
            trigger_kind="user_message",
            agent=AgentRole.ANALYSIS,
            pattern=r"duration",
            actions=(
                {
                    "type": "tool",
                    "tool": "analysis.activity_durations",
                    "args": {},
                    "save_as": "stats",
                },
                {"type": "say", "text": "{stats.summary}"},
            ),
        ),
        ScriptedRule(
            trigger_kind="user_message",
            agent=AgentRole.ANALYSIS,
            pattern=r"workload|busy|utili",
            actions=(
                {
                    "type": "tool",
                    "tool": "analysis.actor_workload",
                    "args": {},
                    "save_as": "load",
                },
                {"type": "say", "text": "Resource workload so far: {load.summary}"},
            ),
        ),
        ScriptedRule(
            trigger_kind="user_message",
            agent=AgentRole.ANALYSIS,
            pattern=r"timeline.*?(?P<job_id>\d+)",
            actions=(
                {
                    "type": "tool",
                    "tool": "analysis.job_timeline",
                    "args": {"job_id": "{match.job_id}"},
                    "save_as": "tl",
                },
                {"type": "say", "text": "Timeline for job {match.job_id}: {tl.rows}"},
            ),
        ),
        # Proactive notifications on completion events.
        ScriptedRule(
            trigger_kind="event",
            pattern=r"job\.completed kind=Synthesis",
            actions=(
                {
                    "type": "say",
                    "text": "The Synthesis Workflow (job {event.job_id}) has completed.",
                },
            ),
        ),
        ScriptedRule(
            trigger_kind="event",
            pattern=r"job\.completed kind=Hplc",
            actions=(
                {"type": "handoff", "to": "Analysis", "reason": "results ready for analysis"},
                {
                    "type": "tool",
                    "tool": "lab.job_status",
                    "args": {"job_id": "{event.job_id}"},
                    "save_as": "status",
                },
                {
                    "type": "tool",
                    "tool": "board.put",
                    "args": {"key": "offers/pending", "text": "attach_summary"},
                },
                {
                    "type": "say",
                    "text": (
                        "{status.summary} Would you also like me to add a summary "
                        "of the results into the job's associated data store?"
                    ),
                },
            ),
        ),
        ScriptedRule(
            trigger_kind="event",
            pattern=r"job\.failed",
            actions=(
                {
                    "type": "say",
                    "text": (
                        "Job {event.job_id} failed. You can adjust the parameters "
                        "and retry."
                    ),
                },
            ),
        ),
    ]
    return ScriptedPolicy(rules)
