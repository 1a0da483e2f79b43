"""Analytics over the event log (activity durations, actor workload, job
timelines) and structured report generation attached to jobs.

All functions are pure reads over event sequences: recomputation after a
replay equals the live computation exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .dmta import CycleRecord
from .virtlab import HplcResult, Job, JobState, SynthesisResult


class EmptyWindow(ValueError):
    pass


class UnknownJob(LookupError):
    pass


class DuplicateAttachment(ValueError):
    pass


@dataclass(frozen=True)
class DurationStats:
    kind: str
    count: int
    mean_min: float
    p50_min: float
    p95_min: float


@dataclass
class ReportDoc:
    id: str
    title: str
    body: str  # markdown with Objective / Methods / Results / Next Steps sections
    created_at: int
    attached_to: int | None = None


def _transitions(events) -> Iterable[dict]:
    for event in events:
        if getattr(event, "kind", None) == "job.transition":
            yield event.payload


def _nearest_rank(sorted_values: list[float], percentile: float) -> float:
    rank = math.ceil(percentile / 100 * len(sorted_values))
    return sorted_values[max(rank, 1) - 1]


def activity_durations(events) -> list[DurationStats]:
    """Per-kind duration statistics (finished - started) for completed jobs.

    Percentiles use the nearest-rank definition; rows are sorted by kind.
    """
    started: dict[int, int] = {}
    kinds: dict[int, str] = {}
    durations: dict[str, list[float]] = {}
    for payload in _transitions(events):
        job_id = payload["job_id"]
        if payload.get("kind"):
            kinds[job_id] = payload["kind"]
        if payload["to"] == JobState.RUNNING.value:
            started[job_id] = payload["at"]
        elif payload["to"] == JobState.COMPLETED.value and job_id in started:
            kind = kinds.get(job_id, "unknown")
            durations.setdefault(kind, []).append(payload["at"] - started[job_id])
    rows = []
    for kind in sorted(durations):
        values = sorted(durations[kind])
        rows.append(
            DurationStats(
                kind=kind,
                count=len(values),
                mean_min=sum(values) / len(values),
                p50_min=_nearest_rank(values, 50),
                p95_min=_nearest_rank(values, 95),
            )
        )
    return rows


def actor_workload(
    events, window: tuple[int, int], resources: Iterable[str] | None = None
) -> dict[str, float]:
    """Busy fraction per resource: granted slot minutes intersected with the
    window, divided by the window length. Optional `resources` seeds ids that
    should appear even when fully idle.
    """
    start, end = window
    if end <= start:
        raise EmptyWindow(f"window [{start}, {end}) is empty")
    length = end - start
    busy: dict[str, int] = {rid: 0 for rid in (resources or [])}
    for payload in _transitions(events):
        slot = payload.get("slot")
        if payload["to"] != JobState.SCHEDULED.value or not slot:
            continue
        overlap = min(slot["end_min"], end) - max(slot["start_min"], start)
        rid = slot["resource_id"]
        busy[rid] = busy.get(rid, 0) + max(overlap, 0)
    return {rid: minutes / length for rid, minutes in sorted(busy.items())}


@dataclass(frozen=True)
class TimelineRow:
    state: str
    entered_at: int
    waited_min: int


def job_timeline(job_id: int, events) -> list[TimelineRow]:
    """One row per state transition in time order; waited_min is the gap
    since the previous row (0 for the first).
    """
    moments = [
        (payload["at"], payload["to"])
        for payload in _transitions(events)
        if payload["job_id"] == job_id
    ]
    if not moments:
        raise UnknownJob(f"no events for job {job_id}")
    rows = []
    previous: int | None = None
    for at, state in moments:
        rows.append(
            TimelineRow(
                state=state,
                entered_at=at,
                waited_min=0 if previous is None else at - previous,
            )
        )
        previous = at
    return rows


# --- reports ------------------------------------------------------------------


def _fmt(value: float) -> str:
    return f"{value:g}"


def _job_sections(job: Job, related: Job | None) -> list[str]:
    sections = [
        "## Objective",
        f"{job.kind.value} run for target structure `{job.target}`.",
        "",
        "## Methods",
        f"Simulated {job.kind.value} workflow (job {job.id}), parameters: "
        + (", ".join(f"{k}={v}" for k, v in sorted(job.params.items())) or "defaults")
        + ".",
        "",
    ]
    if job.state is JobState.COMPLETED:
        sections.append("## Results")
        result = job.result
        if isinstance(result, HplcResult):
            sections.append(
                f"- Main peak retention time: {_fmt(result.main_peak_rt_min)} min"
            )
            sections.append(f"- Purity: {_fmt(result.purity_pct)}%")
            synthesis = related.result if related is not None else None
            if isinstance(synthesis, SynthesisResult):
                sections.append(f"- Yield: {_fmt(synthesis.yield_pct)}%")
                sections.append(f"- Mass: {_fmt(synthesis.mass_mg)} mg")
                sections.append(f"- {synthesis.side_products_note}")
        elif isinstance(result, SynthesisResult):
            sections.append(f"- Yield: {_fmt(result.yield_pct)}%")
            sections.append(f"- Mass: {_fmt(result.mass_mg)} mg")
            sections.append(f"- {result.side_products_note}")
    else:
        sections.append("## Status")
        sections.append(f"Job {job.id} is {job.state.value}; no results recorded yet.")
    sections += [
        "",
        "## Next Steps",
        "Review the recorded results and decide whether to iterate with "
        "adjusted parameters.",
    ]
    return sections


def _cycle_sections(history: list[CycleRecord]) -> list[str]:
    accepted = [r for r in history if r.accepted]
    best = accepted[-1] if accepted else max(history, key=lambda r: r.score)
    sections = [
        "## Objective",
        "Closed-loop candidate optimization against a target retention time.",
        "",
        "## Methods",
        f"Greedy single-edit analog search; {len(history)} lab evaluation(s), "
        f"{len(accepted)} accepted improvement(s).",
        "",
        "## Results",
        "| iteration | smiles | rt (min) | purity (%) | yield (%) | score |",
        "|---|---|---|---|---|---|",
    ]
    for record in history:
        sections.append(
            f"| {record.iteration} | `{record.candidate.canonical_smiles}` | "
            f"{_fmt(record.hplc.main_peak_rt_min)} | {_fmt(record.hplc.purity_pct)} | "
            f"{_fmt(record.synthesis.yield_pct)} | {_fmt(record.score)} |"
        )
    sections += [
        "",
        f"Best candidate: `{best.candidate.canonical_smiles}` "
        f"(score {_fmt(best.score)}).",
        "",
        "## Next Steps",
        "Consider another cycle from the best candidate or widen the edit set.",
    ]
    return sections


def render_report(
    source: Job | list[CycleRecord],
    related: Job | None = None,
    created_at: int = 0,
) -> ReportDoc:
    """Deterministic report: same source in, byte-identical body out.

    For a completed HPLC job pass the paired synthesis job as `related` so
    the Results section can state yield and mass alongside retention time
    and purity. The doc id is derived from the body, so re-rendering the
    same source yields the same id.
    """
    if isinstance(source, Job):
        title = f"{source.kind.value} job {source.id} summary"
        sections = _job_sections(source, related)
    else:
        title = "Optimization cycle summary"
        sections = _cycle_sections(list(source))
    body = "\n".join([f"# {title}", ""] + sections) + "\n"
    doc_id = "doc-" + hashlib.sha1(body.encode("utf-8")).hexdigest()[:12]
    return ReportDoc(id=doc_id, title=title, body=body, created_at=created_at)


def attach_report(
    jobs: Mapping[int, Job],
    job_id: int,
    doc: ReportDoc,
    sink: Callable[[str, dict], None] | None = None,
) -> Job:
    """Append the doc id to the job's attachments and emit the event."""
    job = jobs.get(job_id)
    if job is None:
        raise UnknownJob(f"no job {job_id}")
    if doc.id in job.attachments:
        raise DuplicateAttachment(f"doc {doc.id} already attached to job {job_id}")
    job.attachments.append(doc.id)
    doc.attached_to = job_id
    if sink is not None:
        sink(
            "report.attached",
            {
                "job_id": job_id,
                "doc": {
                    "id": doc.id,
                    "title": doc.title,
                    "body": doc.body,
                    "created_at": doc.created_at,
                },
            },
        )
    return job


def report_to_markdown(doc: ReportDoc) -> str:
    return doc.body


def stats_to_csv(rows: list[DurationStats]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["kind", "count", "mean_min", "p50_min", "p95_min"])
    for row in rows:
        writer.writerow([row.kind, row.count, row.mean_min, row.p50_min, row.p95_min])
    return buffer.getvalue()
