"""Closed-loop Design-Make-Test-Analyze optimizer: greedy hill climbing over
single-edit analogs, scored by simulated HPLC retention time against a target,
with every evaluation run through the scheduler as real lab jobs.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable

from . import molgen
from .agents import SessionContext, blackboard_get, blackboard_put
from .chem import MolGraph, SmilesError, compute_descriptors, parse_smiles
from .molgen import Candidate, rank_candidates
from .scheduler import Resource, ResourceKind, schedule
from .virtlab import (
    HplcResult,
    Job,
    JobKind,
    JobState,
    SimClock,
    SynthesisResult,
    simulate_hplc,
    simulate_synthesis,
    transition,
)


class SeedParseError(ValueError):
    pass


ANALOGS_PER_ROUND = 10

STOP_CONVERGED = "converged"
STOP_NO_IMPROVEMENT = "no_improvement"
STOP_BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class Objective:
    """Target retention time with small purity/yield bonuses."""

    target_rt_min: float
    rt_tolerance_min: float = 0.2
    purity_weight: float = 0.01
    yield_weight: float = 0.01

    def __post_init__(self):
        if not 0.5 <= self.target_rt_min <= 14.5:
            raise ValueError("target_rt_min must be within [0.5, 14.5]")
        if self.rt_tolerance_min <= 0:
            raise ValueError("rt_tolerance_min must be positive")
        if self.purity_weight < 0 or self.yield_weight < 0:
            raise ValueError("weights must be non-negative")


@dataclass
class CycleRecord:
    iteration: int  # round ordinal; 0 is the seed evaluation
    candidate: Candidate
    synthesis: SynthesisResult
    hplc: HplcResult
    score: float
    accepted: bool = False


@dataclass
class CycleOutcome:
    best: CycleRecord
    history: list[CycleRecord]
    stop_reason: str


def score_candidate(
    hplc: HplcResult, synthesis: SynthesisResult, objective: Objective
) -> float:
    """-|rt - target| + purity_weight * purity + yield_weight * yield."""
    return (
        -abs(hplc.main_peak_rt_min - objective.target_rt_min)
        + objective.purity_weight * hplc.purity_pct
        + objective.yield_weight * synthesis.yield_pct
    )


@dataclass
class LabEnv:
    """Everything one cycle needs to run its Make/Test jobs: a resource pool,
    a discrete-event clock, a job store with an id allocator, a session
    context for blackboard entries, and an optional event sink.
    """

    pool: list[Resource]
    clock: SimClock
    jobs: dict[int, Job]
    ctx: SessionContext
    sink: Callable[[str, dict], None] | None = None
    _next_id: int = 1

    @classmethod
    def fresh(
        cls,
        sink: Callable[[str, dict], None] | None = None,
        ctx: SessionContext | None = None,
        pool: list[Resource] | None = None,
        clock: SimClock | None = None,
        next_id: int = 1,
    ) -> "LabEnv":
        return cls(
            pool=pool
            if pool is not None
            else [
                Resource(id="synth-1", kind=ResourceKind.SYNTH_STATION),
                Resource(id="hplc-1", kind=ResourceKind.HPLC_INSTRUMENT),
            ],
            clock=clock if clock is not None else SimClock(0),
            jobs={},
            ctx=ctx if ctx is not None else SessionContext(session_id="cycle-local"),
            sink=sink,
            _next_id=next_id,
        )

    def allocate_id(self) -> int:
        job_id = self._next_id
        self._next_id += 1
        return job_id

    def emit(self, kind: str, payload: dict) -> None:
        if self.sink is not None:
            self.sink(kind, payload)


def _run_job(env: LabEnv, kind: JobKind, target: str, result) -> Job:
    """Create, schedule, run, and complete one job, advancing the clock."""
    job = Job(
        id=env.allocate_id(),
        kind=kind,
        params={},
        target=target,
        created_at=env.clock.now_min,
    )
    env.jobs[job.id] = job
    env.emit(
        "job.transition",
        {
            "job_id": job.id,
            "to": JobState.CREATED.value,
            "at": job.created_at,
            "kind": kind.value,
            "target": target,
            "params": {},
        },
    )
    slot = schedule(job, env.pool, now=env.clock.now_min, sink=env.emit)
    transition(job, JobState.RUNNING, at=slot.start_min, sink=env.emit)
    transition(job, JobState.COMPLETED, at=slot.end_min, result=result, sink=env.emit)
    env.clock.advance(slot.end_min)
    return job


def _board_append(env: LabEnv, key: str, value) -> None:
    entry = blackboard_get(env.ctx, key)
    version = blackboard_put(
        env.ctx,
        key,
        value,
        expected_version=entry.version if entry else 0,
        ts=env.clock.now_min,
    )
    env.emit(
        "blackboard.put",
        {
            "key": key,
            "value": value,
            "version": version,
            "author": env.ctx.active_agent.value,
            "ts": env.clock.now_min,
        },
    )


def evaluate_candidate(
    env: LabEnv, candidate: Candidate, objective: Objective, iteration: int
) -> CycleRecord:
    """One Make/Test pass: a synthesis job then an HPLC job through the
    scheduler, scored against the objective and logged to the blackboard.
    """
    synthesis = simulate_synthesis(candidate.descriptors)
    hplc = simulate_hplc(candidate.descriptors)
    _run_job(env, JobKind.SYNTHESIS, candidate.canonical_smiles, synthesis)
    _run_job(env, JobKind.HPLC, candidate.canonical_smiles, hplc)
    score = score_candidate(hplc, synthesis, objective)
    _board_append(
        env,
        f"dmta/eval/{candidate.canonical_smiles}",
        {
            "iteration": iteration,
            "smiles": candidate.canonical_smiles,
            "rt_min": hplc.main_peak_rt_min,
            "purity_pct": hplc.purity_pct,
            "yield_pct": synthesis.yield_pct,
            "score": score,
        },
    )
    return CycleRecord(
        iteration=iteration,
        candidate=candidate,
        synthesis=synthesis,
        hplc=hplc,
        score=score,
    )


def run_cycle(
    seed: str, objective: Objective, budget: int, env: LabEnv | None = None
) -> CycleOutcome:
    """Greedy hill climbing from the seed structure.

    Each round enumerates single-edit analogs of the incumbent, keeps the top
    ANALOGS_PER_ROUND by drug-likeness, evaluates each as scheduled lab jobs,
    and adopts the round's best only on strict improvement. Stops on
    convergence (|rt - target| <= tolerance), no improvement, or an exhausted
    evaluation budget. Structures already evaluated in this cycle are not
    re-run (evaluation is deterministic, so the cached score is exact).
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if env is None:
        env = LabEnv.fresh()
    try:
        seed_graph = parse_smiles(seed)
    except SmilesError as exc:
        raise SeedParseError(f"seed {seed!r}: {exc}") from exc

    def progress(payload: dict) -> None:
        env.emit("cycle.progress", payload)

    progress(
        {
            "phase": "start",
            "seed": seed,
            "target_rt_min": objective.target_rt_min,
            "budget": budget,
        }
    )

    seed_candidate = molgen.make_candidate(seed)
    incumbent = evaluate_candidate(env, seed_candidate, objective, iteration=0)
    incumbent.accepted = True
    history = [incumbent]
    evaluated = {seed_candidate.canonical_smiles}
    used = 1
    _emit_eval(progress, incumbent, used)

    def finish(reason: str) -> CycleOutcome:
        progress(
            {
                "phase": "done",
                "stop_reason": reason,
                "best_smiles": incumbent.candidate.canonical_smiles,
                "best_score": incumbent.score,
                "evaluations": used,
            }
        )
        return CycleOutcome(best=incumbent, history=history, stop_reason=reason)

    def converged(record: CycleRecord) -> bool:
        return (
            abs(record.hplc.main_peak_rt_min - objective.target_rt_min)
            <= objective.rt_tolerance_min
        )

    if converged(incumbent):
        return finish(STOP_CONVERGED)
    if used >= budget:
        return finish(STOP_BUDGET_EXHAUSTED)

    round_no = 0
    while True:
        round_no += 1
        try:
            analogs = molgen.generate_analogs(
                parse_smiles(incumbent.candidate.canonical_smiles), max_out=10_000
            )
        except molgen.NoValidEdits:
            analogs = []
        shortlist = [
            c for c in rank_candidates(analogs) if c.canonical_smiles not in evaluated
        ][:ANALOGS_PER_ROUND]

        best_round: CycleRecord | None = None
        budget_hit = False
        for candidate in shortlist:
            if used >= budget:
                budget_hit = True
                break
            record = evaluate_candidate(env, candidate, objective, iteration=round_no)
            evaluated.add(candidate.canonical_smiles)
            history.append(record)
            used += 1
            _emit_eval(progress, record, used)
            if best_round is None or record.score > best_round.score:
                best_round = record

        improved = best_round is not None and best_round.score > incumbent.score
        if improved:
            best_round.accepted = True
            incumbent = best_round
            progress(
                {
                    "phase": "adopt",
                    "iteration": round_no,
                    "smiles": incumbent.candidate.canonical_smiles,
                    "score": incumbent.score,
                }
            )
        if improved and converged(incumbent):
            return finish(STOP_CONVERGED)
        if budget_hit or used >= budget:
            return finish(STOP_BUDGET_EXHAUSTED)
        if not improved:
            return finish(STOP_NO_IMPROVEMENT)


def _emit_eval(progress: Callable[[dict], None], record: CycleRecord, used: int) -> None:
    progress(
        {
            "phase": "eval",
            "iteration": record.iteration,
            "smiles": record.candidate.canonical_smiles,
            "rt_min": record.hplc.main_peak_rt_min,
            "purity_pct": record.hplc.purity_pct,
            "yield_pct": record.synthesis.yield_pct,
            "score": record.score,
            "evaluations": used,
        }
    )


# --- exports ------------------------------------------------------------------


def record_to_row(record: CycleRecord) -> dict:
    return {
        "iteration": record.iteration,
        "smiles": record.candidate.canonical_smiles,
        "rt_min": record.hplc.main_peak_rt_min,
        "purity_pct": record.hplc.purity_pct,
        "yield_pct": record.synthesis.yield_pct,
        "score": record.score,
        "accepted": record.accepted,
    }


def outcome_to_json(outcome: CycleOutcome) -> str:
    return json.dumps(
        {
            "stop_reason": outcome.stop_reason,
            "best": record_to_row(outcome.best),
            "history": [record_to_row(r) for r in outcome.history],
        },
        indent=2,
        sort_keys=True,
    )


def outcome_to_csv(outcome: CycleOutcome) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["iteration", "smiles", "rt", "purity", "yield", "score"])
    for record in outcome.history:
        writer.writerow(
            [
                record.iteration,
                record.candidate.canonical_smiles,
                record.hplc.main_peak_rt_min,
                record.hplc.purity_pct,
                record.synthesis.yield_pct,
                record.score,
            ]
        )
    return buffer.getvalue()
