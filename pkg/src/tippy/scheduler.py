"""Resource-constrained job placement: greedy earliest-start scheduling over
instrument/operator calendars, integer minutes, no preemption.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from enum import Enum

from .virtlab import EventSink, Job, JobKind, JobState, predict_duration, transition


class ResourceKind(str, Enum):
    SYNTH_STATION = "synth_station"
    HPLC_INSTRUMENT = "hplc_instrument"
    OPERATOR = "operator"


REQUIRED_KIND = {
    JobKind.SYNTHESIS: ResourceKind.SYNTH_STATION,
    JobKind.HPLC: ResourceKind.HPLC_INSTRUMENT,
}


class NoEligibleResource(LookupError):
    pass


class UnknownSlot(LookupError):
    pass


@dataclass
class Resource:
    id: str
    kind: ResourceKind
    busy: list[tuple[int, int]] = field(default_factory=list)  # disjoint, sorted [start, end)


@dataclass(frozen=True)
class Slot:
    resource_id: str
    start_min: int
    end_min: int
    resource_kind: str = ""


def earliest_start(busy: list[tuple[int, int]], now: int, duration: int) -> int:
    """Earliest start >= now at which `duration` fits between busy intervals."""
    t = now
    for start, end in busy:
        if end <= t:
            continue
        if start >= t + duration:
            break
        t = max(t, end)
    return t


def schedule(job: Job, pool: list[Resource], now: int, sink: EventSink | None = None) -> Slot:
    """Place a Created job on the eligible resource with the earliest feasible
    start (ties broken by ascending resource id), mark the interval busy, and
    transition the job to Scheduled.
    """
    if job.state is not JobState.CREATED:
        raise ValueError(f"only Created jobs can be scheduled, got {job.state.value}")
    required = REQUIRED_KIND[job.kind]
    duration = predict_duration(job.kind)
    best: tuple[int, str, Resource] | None = None
    for resource in pool:
        if resource.kind is not required:
            continue
        start = earliest_start(resource.busy, now, duration)
        key = (start, resource.id)
        if best is None or key < (best[0], best[1]):
            best = (start, resource.id, resource)
    if best is None:
        raise NoEligibleResource(f"no {required.value} in pool for {job.kind.value} job")
    start, _, resource = best
    interval = (start, start + duration)
    bisect.insort(resource.busy, interval)
    slot = Slot(
        resource_id=resource.id,
        start_min=start,
        end_min=start + duration,
        resource_kind=resource.kind.value,
    )
    job.slot = slot
    transition(job, JobState.SCHEDULED, at=now, sink=sink)
    return slot


def release(slot: Slot, pool: list[Resource]) -> list[Resource]:
    """Remove a previously granted slot's interval from its resource."""
    for resource in pool:
        if resource.id != slot.resource_id:
            continue
        interval = (slot.start_min, slot.end_min)
        try:
            resource.busy.remove(interval)
        except ValueError:
            raise UnknownSlot(f"slot {interval} not held by {resource.id}") from None
        return pool
    raise UnknownSlot(f"resource {slot.resource_id!r} not in pool")
