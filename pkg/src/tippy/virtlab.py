"""Simulated laboratory: job lifecycle state machine, deterministic synthesis
and HPLC models, and a discrete-event clock.

All model constants are simulation calibration, not chemistry: identical
descriptor inputs always produce bit-identical results.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from .chem import Descriptors, logp_tenths


class JobKind(str, Enum):
    SYNTHESIS = "Synthesis"
    HPLC = "Hplc"


class JobState(str, Enum):
    CREATED = "Created"
    SCHEDULED = "Scheduled"
    RUNNING = "Running"
    COMPLETED = "Completed"
    FAILED = "Failed"


class IllegalTransition(ValueError):
    pass


class TimeRegression(ValueError):
    pass


_LEGAL_TRANSITIONS = {
    JobState.CREATED: {JobState.SCHEDULED},
    JobState.SCHEDULED: {JobState.RUNNING},
    JobState.RUNNING: {JobState.COMPLETED, JobState.FAILED},
    JobState.COMPLETED: set(),
    JobState.FAILED: set(),
}

SYNTHESIS_DURATION_MIN = 120
HPLC_DURATION_MIN = 45

DEFAULT_THEORETICAL_MG = 66.7

TRACE_STEP_MIN = 0.02
TRACE_END_MIN = 15.0
PEAK_SIGMA_MIN = 0.1

# Deterministic failure hook: a job fails iff params contain fault="inject".
FAULT_PARAM = "fault"
FAULT_INJECT = "inject"


@dataclass(frozen=True)
class SynthesisResult:
    yield_pct: int
    mass_mg: int
    duration_min: int
    side_products_note: str


@dataclass(frozen=True)
class HplcResult:
    main_peak_rt_min: float
    purity_pct: float
    duration_min: int
    trace: tuple[tuple[float, float], ...]


@dataclass
class Job:
    """A state-machined unit of lab work."""

    id: int
    kind: JobKind
    params: dict[str, Any]
    target: str  # canonical SMILES
    created_at: int
    state: JobState = JobState.CREATED
    started_at: int | None = None
    finished_at: int | None = None
    slot: "Any | None" = None  # scheduler.Slot, assigned at scheduling time
    result: SynthesisResult | HplcResult | None = None
    attachments: list[str] = field(default_factory=list)

    def latest_timestamp(self) -> int:
        latest = self.created_at
        for value in (self.started_at, self.finished_at):
            if value is not None:
                latest = max(latest, value)
        return latest


EventSink = Callable[[str, dict], None]


def transition(
    job: Job,
    to: JobState,
    at: int,
    result: SynthesisResult | HplcResult | None = None,
    sink: EventSink | None = None,
) -> Job:
    """Apply a legal state transition at a simulated time.

    Raises IllegalTransition on a move the state machine forbids and
    TimeRegression when `at` precedes the job's latest timestamp. A
    Completed transition requires a result; no other state carries one.
    """
    to = JobState(to)
    if to not in _LEGAL_TRANSITIONS[job.state]:
        raise IllegalTransition(f"{job.state.value} -> {to.value}")
    if at < job.latest_timestamp():
        raise TimeRegression(
            f"transition at {at} precedes latest timestamp {job.latest_timestamp()}"
        )
    if to is JobState.COMPLETED and result is None:
        raise ValueError("Completed transition requires a result")
    if to is not JobState.COMPLETED and result is not None:
        raise ValueError(f"{to.value} transition must not carry a result")

    job.state = to
    if to is JobState.RUNNING:
        job.started_at = at
    elif to in (JobState.COMPLETED, JobState.FAILED):
        job.finished_at = at
    if to is JobState.COMPLETED:
        job.result = result

    if sink is not None:
        payload: dict[str, Any] = {"job_id": job.id, "to": to.value, "at": at}
        if to is JobState.SCHEDULED and job.slot is not None:
            payload["slot"] = {
                "resource_id": job.slot.resource_id,
                "start_min": job.slot.start_min,
                "end_min": job.slot.end_min,
            }
            payload["resource_kind"] = getattr(job.slot, "resource_kind", None)
        if to is JobState.COMPLETED:
            payload["result"] = result_to_dict(result)
        sink("job.transition", payload)
    return job


def result_to_dict(result: SynthesisResult | HplcResult | None) -> dict | None:
    if result is None:
        return None
    if isinstance(result, SynthesisResult):
        return {
            "type": "synthesis",
            "yield_pct": result.yield_pct,
            "mass_mg": result.mass_mg,
            "duration_min": result.duration_min,
            "side_products_note": result.side_products_note,
        }
    return {
        "type": "hplc",
        "main_peak_rt_min": result.main_peak_rt_min,
        "purity_pct": result.purity_pct,
        "duration_min": result.duration_min,
        "trace": [[t, s] for t, s in result.trace],
    }


def result_from_dict(data: dict | None) -> SynthesisResult | HplcResult | None:
    if data is None:
        return None
    if data["type"] == "synthesis":
        return SynthesisResult(
            yield_pct=data["yield_pct"],
            mass_mg=data["mass_mg"],
            duration_min=data["duration_min"],
            side_products_note=data["side_products_note"],
        )
    return HplcResult(
        main_peak_rt_min=data["main_peak_rt_min"],
        purity_pct=data["purity_pct"],
        duration_min=data["duration_min"],
        trace=tuple((t, s) for t, s in data["trace"]),
    )


def predict_duration(kind: JobKind | str) -> int:
    """Predicted workflow duration in simulated minutes."""
    kind = JobKind(kind)
    return SYNTHESIS_DURATION_MIN if kind is JobKind.SYNTHESIS else HPLC_DURATION_MIN


def _clamp(x: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, x))


def simulate_synthesis(
    descriptors: Descriptors, theoretical_mg: float = DEFAULT_THEORETICAL_MG
) -> SynthesisResult:
    """Deterministic synthesis model.

    yield_pct = clamp(100 - heavy_atoms - hetero_total, 5, 98); the mass is
    the yield applied to the theoretical amount, rounded to whole milligrams.
    """
    if theoretical_mg <= 0:
        raise ValueError("theoretical_mg must be positive")
    yield_pct = int(_clamp(100 - descriptors.heavy_atoms - descriptors.hetero_total, 5, 98))
    mass_mg = round(theoretical_mg * yield_pct / 100)
    return SynthesisResult(
        yield_pct=yield_pct,
        mass_mg=mass_mg,
        duration_min=SYNTHESIS_DURATION_MIN,
        side_products_note="No major side products observed.",
    )


def _gaussian(t: float, center: float, amplitude: float) -> float:
    z = (t - center) / PEAK_SIGMA_MIN
    return amplitude * math.exp(-0.5 * z * z)


def simulate_hplc(descriptors: Descriptors) -> HplcResult:
    """Deterministic HPLC model.

    Retention time tracks the logP surrogate linearly (5.5 + 2.5 * logP) and
    purity falls with size (99.7 - 0.2 * heavy_atoms), both clamped to the
    instrument range. The trace is a main Gaussian at the retention time plus
    a smaller impurity Gaussian at 0.8 * rt, sampled every 0.02 min over
    [0, 15]. Formulas are evaluated in integer tenths with one final division
    so the calibration anchors are exact.
    """
    tenths = logp_tenths(
        descriptors.aliphatic_c,
        descriptors.aromatic_c,
        descriptors.n_count,
        descriptors.o_count,
        descriptors.other_hetero,
    )
    rt = _clamp((550 + 25 * tenths) / 100, 0.5, 14.5)
    purity = _clamp((997 - 2 * descriptors.heavy_atoms) / 10, 50.0, 99.7)
    impurity_center = max(0.5, 0.8 * rt)
    impurity_amplitude = (100.0 - purity) / purity
    samples = int(round(TRACE_END_MIN / TRACE_STEP_MIN)) + 1
    trace = []
    for i in range(samples):
        t = i * TRACE_STEP_MIN
        signal = _gaussian(t, rt, 1.0) + _gaussian(t, impurity_center, impurity_amplitude)
        trace.append((t, signal))
    return HplcResult(
        main_peak_rt_min=rt,
        purity_pct=purity,
        duration_min=HPLC_DURATION_MIN,
        trace=tuple(trace),
    )


def trace_to_csv(trace: tuple[tuple[float, float], ...]) -> str:
    """Render a chromatogram trace as CSV (time_min,signal; 6 decimals)."""
    rows = ["time_min,signal"]
    rows.extend(f"{t:.6f},{s:.6f}" for t, s in trace)
    return "\n".join(rows) + "\n"


@dataclass(order=True)
class _PendingEvent:
    time: int
    sequence: int
    item: Any = field(compare=False)


class SimClock:
    """Discrete-event clock: push items at future times, advance dispatches
    everything due in time order (ties by insertion order).
    """

    def __init__(self, now_min: int = 0):
        self.now_min = now_min
        self._pending: list[_PendingEvent] = []
        self._sequence = 0

    def push(self, at: int, item: Any) -> None:
        if at < self.now_min:
            raise TimeRegression(f"cannot push event at {at} before now {self.now_min}")
        heapq.heappush(self._pending, _PendingEvent(at, self._sequence, item))
        self._sequence += 1

    def advance(self, until: int) -> list[tuple[int, Any]]:
        if until < self.now_min:
            raise TimeRegression(f"cannot advance to {until} before now {self.now_min}")
        dispatched: list[tuple[int, Any]] = []
        while self._pending and self._pending[0].time <= until:
            event = heapq.heappop(self._pending)
            dispatched.append((event.time, event.item))
        self.now_min = until
        return dispatched

    @property
    def pending_count(self) -> int:
        return len(self._pending)
