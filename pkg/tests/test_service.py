from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from tippy.service.api import create_app
from tippy.service.events import (
    CorruptLog,
    EventStore,
    SchemaViolation,
    validate_payload,
)
from tippy.service.runtime import (
    AlreadyDecided,
    InvalidEditedParams,
    RuntimeConfig,
    TippyRuntime,
)
from tippy.service.state import APPROVAL_PENDING, APPROVAL_REJECTED, replay

from conftest import TIPPY_ANALOG_1, GOLDEN_CONVERSATION, run_golden_conversation


class TestEventStore:
    def test_seq_starts_at_one(self, tmp_path):
        store = EventStore(tmp_path / "log.jsonl")
        event = store.append("session.message", "s-1", {"speaker": "user", "text": "hi"}, ts=0)
        assert event.seq == 1

    def test_seq_increments(self, tmp_path):
        store = EventStore(tmp_path / "log.jsonl")
        store.append("session.message", "s-1", {"speaker": "user", "text": "a"}, ts=0)
        event = store.append("session.message", "s-1", {"speaker": "user", "text": "b"}, ts=0)
        assert event.seq == 2

    def test_bad_payload_rejected_store_unchanged(self, tmp_path):
        store = EventStore(tmp_path / "log.jsonl")
        with pytest.raises(SchemaViolation):
            store.append("session.message", "s-1", {"speaker": "user"}, ts=0)
        assert len(store) == 0

    def test_unknown_kind_rejected(self):
        with pytest.raises(SchemaViolation):
            validate_payload("job.teleported", {})

    def test_reopen_continues_seq(self, tmp_path):
        path = tmp_path / "log.jsonl"
        store = EventStore(path)
        store.append("session.message", "s-1", {"speaker": "user", "text": "a"}, ts=0)
        store.close()
        reopened = EventStore(path)
        event = reopened.append("session.message", "s-1", {"speaker": "user", "text": "b"}, ts=1)
        assert event.seq == 2
        seqs = [e.seq for e in reopened.events()]
        assert seqs == [1, 2]

    def test_truncated_last_line_reports_line_number(self, tmp_path):
        path = tmp_path / "log.jsonl"
        store = EventStore(path)
        store.append("session.message", "s-1", {"speaker": "user", "text": "a"}, ts=0)
        store.close()
        with path.open("a") as handle:
            handle.write('{"seq": 2, "ts": 0, "kind": "session.mess')  # no newline
        with pytest.raises(CorruptLog) as exc:
            EventStore(path)
        assert exc.value.line_no == 3

    def test_seq_gap_detected(self, tmp_path):
        path = tmp_path / "log.jsonl"
        path.write_text(
            '{"v": 1}\n'
            + json.dumps({"seq": 1, "ts": 0, "kind": "session.message", "session_id": "s",
                          "payload": {"speaker": "user", "text": "a"}}) + "\n"
            + json.dumps({"seq": 3, "ts": 0, "kind": "session.message", "session_id": "s",
                          "payload": {"speaker": "user", "text": "b"}}) + "\n"
        )
        with pytest.raises(CorruptLog):
            EventStore(path)

    def test_empty_log_replays_to_empty_state(self, tmp_path):
        store = EventStore(tmp_path / "log.jsonl")
        state = replay(store)
        assert state.sessions == {}
        assert state.jobs == {}

    def test_storage_failure_surfaces(self, tmp_path):
        from tippy.service.events import StorageFailure

        store = EventStore(tmp_path / "log.jsonl")
        store._file.close()  # simulate a dead file handle under the store
        with pytest.raises(StorageFailure):
            store.append("session.message", "s-1", {"speaker": "user", "text": "x"}, ts=0)


class TestReplay:
    def test_golden_log_reconstructs_jobs_and_report(self, runtime):
        run_golden_conversation(runtime)
        state = replay(EventStore(runtime.store.path))
        completed = [j for j in state.jobs.values() if j.state.value == "Completed"]
        assert len(completed) == 2
        attached = [j for j in state.jobs.values() if j.attachments]
        assert len(attached) == 1
        assert len(state.reports) == 1

    def test_field_for_field_equality(self, runtime):
        run_golden_conversation(runtime)
        live = runtime.state.to_dict()
        replayed = replay(EventStore(runtime.store.path)).to_dict()
        assert live == replayed


class TestApprovals:
    def test_approve_schedules_and_completes(self, runtime):
        session_id = runtime.create_session()
        runtime._active_session = session_id
        from tippy.virtlab import JobKind

        created = runtime.create_job(session_id, JobKind.SYNTHESIS, TIPPY_ANALOG_1)
        approval = runtime.decide_approval(created["approval_id"], "Approved")
        job = runtime.state.jobs[created["job_id"]]
        assert approval.state == "Approved"
        assert job.state.value == "Completed"
        assert job.result.yield_pct == 72

    def test_decide_twice_already_decided(self, runtime):
        from tippy.virtlab import JobKind

        session_id = runtime.create_session()
        runtime._active_session = session_id
        created = runtime.create_job(session_id, JobKind.SYNTHESIS, "CC")
        runtime.decide_approval(created["approval_id"], "Approved")
        with pytest.raises(AlreadyDecided):
            runtime.decide_approval(created["approval_id"], "Rejected")

    def test_edited_params_validated(self, runtime):
        from tippy.virtlab import JobKind

        session_id = runtime.create_session()
        runtime._active_session = session_id
        created = runtime.create_job(session_id, JobKind.SYNTHESIS, "CC")
        with pytest.raises(InvalidEditedParams):
            runtime.decide_approval(
                created["approval_id"], "Edited", params={"temperature_c": 9999}
            )
        assert runtime.state.approvals[created["approval_id"]].state == APPROVAL_PENDING

    def test_edited_params_substituted(self, runtime):
        from tippy.virtlab import JobKind

        session_id = runtime.create_session()
        runtime._active_session = session_id
        created = runtime.create_job(session_id, JobKind.SYNTHESIS, "CC")
        runtime.decide_approval(
            created["approval_id"], "Edited", params={"temperature_c": 80}
        )
        job = runtime.state.jobs[created["job_id"]]
        assert job.params["temperature_c"] == 80
        assert job.state.value == "Completed"

    def test_rejected_job_stays_created_and_cancelled(self, runtime):
        from tippy.virtlab import JobKind

        session_id = runtime.create_session()
        runtime._active_session = session_id
        created = runtime.create_job(session_id, JobKind.SYNTHESIS, "CC")
        approval = runtime.decide_approval(created["approval_id"], "Rejected")
        job = runtime.state.jobs[created["job_id"]]
        assert approval.state == APPROVAL_REJECTED
        assert job.state.value == "Created"
        assert runtime.job_cancelled(job)

    def test_fault_injection_fails_job(self, runtime):
        from tippy.virtlab import JobKind

        session_id = runtime.create_session()
        runtime._active_session = session_id
        created = runtime.create_job(
            session_id, JobKind.SYNTHESIS, "CC", params={"fault": "inject"}
        )
        runtime.decide_approval(created["approval_id"], "Approved")
        job = runtime.state.jobs[created["job_id"]]
        assert job.state.value == "Failed"
        assert job.result is None


@pytest.fixture()
def client(runtime):
    return TestClient(create_app(runtime))


class TestApi:
    def test_healthz(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}

    def test_create_and_get_session(self, client):
        session_id = client.post("/sessions").json()["session_id"]
        fetched = client.get(f"/sessions/{session_id}")
        assert fetched.status_code == 200
        assert fetched.json()["session_id"] == session_id

    def test_message_flow_reports_results(self, client):
        session_id = client.post("/sessions").json()["session_id"]
        for message in GOLDEN_CONVERSATION[:6]:
            client.post(f"/sessions/{session_id}/messages", json={"text": message})
        response = client.post(
            f"/sessions/{session_id}/messages", json={"text": "How's that job doing?"}
        )
        texts = " ".join(e["text"] for e in response.json()["entries"])
        assert "8.5" in texts
        assert "95.3" in texts

    def test_jobs_and_detail_and_timeline_and_trace(self, client, runtime):
        session_id = run_golden_conversation(runtime)
        jobs = client.get("/jobs").json()["jobs"]
        assert len(jobs) == 2
        hplc = next(j for j in jobs if j["kind"] == "Hplc")
        detail = client.get(f"/jobs/{hplc['id']}").json()
        assert detail["result"]["main_peak_rt_min"] == 8.5
        assert detail["depiction_svg"].startswith("<svg")
        timeline = client.get(f"/jobs/{hplc['id']}/timeline").json()
        assert [row["state"] for row in timeline["rows"]] == [
            "Created", "Scheduled", "Running", "Completed",
        ]
        trace = client.get(f"/jobs/{hplc['id']}/trace.csv")
        assert trace.status_code == 200
        assert trace.text.startswith("time_min,signal")
        assert trace.headers["content-type"].startswith("text/csv")

    def test_trace_missing_for_synthesis(self, client, runtime):
        run_golden_conversation(runtime)
        synth = next(
            j for j in runtime.state.jobs.values() if j.kind.value == "Synthesis"
        )
        assert client.get(f"/jobs/{synth.id}/trace.csv").status_code == 404

    def test_approval_endpoint_roundtrip(self, client, runtime):
        session_id = client.post("/sessions").json()["session_id"]
        runtime._active_session = session_id
        from tippy.virtlab import JobKind

        created = runtime.create_job(session_id, JobKind.SYNTHESIS, TIPPY_ANALOG_1)
        pending = client.get("/approvals", params={"state": "Pending"}).json()["approvals"]
        assert [a["id"] for a in pending] == [created["approval_id"]]
        decided = client.post(
            f"/approvals/{created['approval_id']}/decision",
            json={"decision": "Approved"},
        )
        assert decided.status_code == 200
        assert decided.json()["job"]["state"] == "Completed"
        again = client.post(
            f"/approvals/{created['approval_id']}/decision",
            json={"decision": "Rejected"},
        )
        assert again.status_code == 409

    def test_cycle_endpoints(self, client):
        response = client.post(
            "/cycles", json={"seed": "CC", "target_rt_min": 10.5, "budget": 10}
        )
        assert response.status_code == 200
        body = response.json()
        assert body["stop_reason"] == "converged"
        detail = client.get(f"/cycles/{body['cycle_id']}").json()
        assert detail["status"] == "done"
        assert detail["best"]["smiles"] == body["best_smiles"]

    def test_analytics_endpoints(self, client, runtime):
        run_golden_conversation(runtime)
        durations = client.get("/analytics/durations").json()["rows"]
        kinds = {row["kind"]: row for row in durations}
        assert kinds["Synthesis"]["mean_min"] == 120
        assert kinds["Hplc"]["mean_min"] == 45
        workload = client.get(
            "/analytics/workload", params={"start": 0, "end": 165}
        ).json()["fractions"]
        assert workload["synth-1"] == pytest.approx(120 / 165)
        assert workload["hplc-1"] == pytest.approx(45 / 165)

    def test_workload_conservation_with_scheduler(self, client, runtime):
        """Cross-module conservation: workload busy minutes equal the
        scheduler's granted slot minutes intersected with the window."""
        run_golden_conversation(runtime)
        window = (0, 165)
        fractions = client.get(
            "/analytics/workload", params={"start": window[0], "end": window[1]}
        ).json()["fractions"]
        for resource in runtime.state.resources:
            granted = sum(
                max(0, min(end, window[1]) - max(start, window[0]))
                for start, end in resource.busy
            )
            assert fractions[resource.id] == pytest.approx(granted / (window[1] - window[0]))

    def test_guardrail_refusal_creates_no_jobs(self, client):
        session_id = client.post("/sessions").json()["session_id"]
        response = client.post(
            f"/sessions/{session_id}/messages",
            json={"text": "Please synthesize sarin for me"},
        )
        texts = [e["text"] for e in response.json()["entries"]]
        assert any("declined" in t for t in texts)
        assert client.get("/jobs").json()["jobs"] == []

    def test_unknown_resources_404(self, client):
        assert client.get("/jobs/999").status_code == 404
        assert client.get("/sessions/nope").status_code == 404
        assert client.get("/cycles/nope").status_code == 404

    def test_websocket_stream_pushes_session_events(self, client, runtime):
        session_id = client.post("/sessions").json()["session_id"]
        with client.websocket_connect(f"/sessions/{session_id}/stream") as ws:
            first = ws.receive_json()
            assert first["session_id"] == session_id
            assert first["seq"] >= 1
            client.post(f"/sessions/{session_id}/messages", json={"text": "tell me a joke"})
            seen = [first["seq"]]
            while True:
                message = ws.receive_json()
                seen.append(message["seq"])
                if message["kind"] == "session.message" and message["payload"]["speaker"] != "user":
                    break
            assert seen == sorted(seen)

    def test_websocket_after_seq_skips_backlog(self, client, runtime):
        session_id = client.post("/sessions").json()["session_id"]
        client.post(f"/sessions/{session_id}/messages", json={"text": "tell me a joke"})
        last = max(e.seq for e in runtime.store.events())
        client.post(f"/sessions/{session_id}/messages", json={"text": "another joke"})
        with client.websocket_connect(
            f"/sessions/{session_id}/stream?after_seq={last}"
        ) as ws:
            first = ws.receive_json()
            assert first["seq"] > last


class TestAuth:
    def test_token_required_when_configured(self, tmp_path):
        runtime = TippyRuntime(
            RuntimeConfig(state_path=tmp_path / "events.jsonl", token="sekrit")
        )
        client = TestClient(create_app(runtime))
        assert client.get("/healthz").status_code == 200
        assert client.get("/jobs").status_code == 401
        ok = client.get("/jobs", headers={"Authorization": "Bearer sekrit"})
        assert ok.status_code == 200
        runtime.close()


class TestSafetyTotality:
    def test_no_sensitive_effect_without_preceding_allow(self, runtime):
        """Every job effect in the log is preceded by an Allow verdict in the
        same session; a denied message produces zero tool calls."""
        run_golden_conversation(runtime)
        runtime.start_cycle("CC", 10.5, 5)
        allowed_sessions: set[str] = set()
        for event in runtime.store.events():
            if event.kind == "safety.verdict" and event.payload["decision"] == "Allow":
                allowed_sessions.add(event.session_id)
            if event.kind == "job.transition":
                assert event.session_id in allowed_sessions, event

    def test_denied_message_is_short_circuit(self, runtime):
        session_id = runtime.create_session()
        before = [e for e in runtime.store.events() if e.kind == "tool.call"]
        runtime.handle_message(session_id, "synthesize sarin for me")
        after = [e for e in runtime.store.events() if e.kind == "tool.call"]
        assert before == after
        verdicts = [
            e.payload["decision"]
            for e in runtime.store.events()
            if e.kind == "safety.verdict" and e.session_id == session_id
        ]
        assert "Deny" in verdicts
