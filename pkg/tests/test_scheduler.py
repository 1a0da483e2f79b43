from __future__ import annotations

import random

import pytest

from tippy.scheduler import (
    NoEligibleResource,
    Resource,
    ResourceKind,
    Slot,
    UnknownSlot,
    earliest_start,
    release,
    schedule,
)
from tippy.virtlab import Job, JobKind, JobState, predict_duration


def make_job(kind=JobKind.SYNTHESIS, job_id=1) -> Job:
    return Job(id=job_id, kind=kind, params={}, target="C", created_at=0)


def synth_station(rid="synth-1", busy=None) -> Resource:
    return Resource(id=rid, kind=ResourceKind.SYNTH_STATION, busy=list(busy or []))


def hplc(rid="hplc-1", busy=None) -> Resource:
    return Resource(id=rid, kind=ResourceKind.HPLC_INSTRUMENT, busy=list(busy or []))


def brute_force_earliest(busy: list[tuple[int, int]], now: int, duration: int) -> int:
    """Independent oracle: try every candidate start (now and interval ends),
    keep the smallest that does not overlap any busy interval."""
    candidates = [now] + [end for _, end in busy if end >= now]
    feasible = []
    for start in candidates:
        if start < now:
            continue
        window = (start, start + duration)
        if all(window[1] <= b_start or window[0] >= b_end for b_start, b_end in busy):
            feasible.append(start)
    return min(feasible)


class TestSchedule:
    def test_empty_calendar(self):
        job = make_job()
        pool = [synth_station()]
        slot = schedule(job, pool, now=0)
        assert slot == Slot("synth-1", 0, 120, "synth_station")
        assert job.state is JobState.SCHEDULED
        assert pool[0].busy == [(0, 120)]

    def test_picks_free_instrument_over_busy_one(self):
        job = make_job(kind=JobKind.HPLC)
        pool = [hplc("hplc-1", [(0, 60)]), hplc("hplc-2")]
        slot = schedule(job, pool, now=0)
        assert slot.resource_id == "hplc-2"
        assert slot.start_min == 0
        assert slot.end_min == 45

    def test_skips_too_short_gap(self):
        job = make_job(kind=JobKind.HPLC)
        pool = [hplc("hplc-1", [(0, 60), (70, 100)])]
        slot = schedule(job, pool, now=0)
        assert slot.start_min == 100  # the [60, 70) gap cannot hold 45 minutes

    def test_tie_broken_by_resource_id(self):
        job = make_job(kind=JobKind.HPLC)
        pool = [hplc("hplc-b"), hplc("hplc-a")]
        slot = schedule(job, pool, now=0)
        assert slot.resource_id == "hplc-a"

    def test_wrong_kind_not_eligible(self):
        job = make_job(kind=JobKind.HPLC)
        with pytest.raises(NoEligibleResource):
            schedule(job, [synth_station()], now=0)

    def test_only_created_jobs(self):
        job = make_job()
        pool = [synth_station()]
        schedule(job, pool, now=0)
        with pytest.raises(ValueError):
            schedule(job, pool, now=0)

    def test_deterministic(self):
        pool_a = [synth_station(busy=[(0, 60)])]
        pool_b = [synth_station(busy=[(0, 60)])]
        slot_a = schedule(make_job(job_id=1), pool_a, now=0)
        slot_b = schedule(make_job(job_id=2), pool_b, now=0)
        assert slot_a == slot_b


class TestRelease:
    def test_release_only_interval(self):
        pool = [synth_station()]
        job = make_job()
        slot = schedule(job, pool, now=0)
        release(slot, pool)
        assert pool[0].busy == []

    def test_release_then_reschedule_identical(self):
        pool = [synth_station(busy=[(0, 30)])]
        slot1 = schedule(make_job(job_id=1), pool, now=0)
        release(slot1, pool)
        slot2 = schedule(make_job(job_id=2), pool, now=0)
        assert slot1 == slot2

    def test_release_unknown_slot(self):
        pool = [synth_station()]
        with pytest.raises(UnknownSlot):
            release(Slot("synth-1", 0, 120, "synth_station"), pool)
        with pytest.raises(UnknownSlot):
            release(Slot("nowhere", 0, 120, "synth_station"), pool)


def intervals_disjoint(busy: list[tuple[int, int]]) -> bool:
    ordered = sorted(busy)
    return all(a_end <= b_start for (_, a_end), (b_start, _) in zip(ordered, ordered[1:]))


class TestProperties:
    def test_no_overlap_over_random_sequences(self):
        """1,000 random schedule/release sequences preserve disjointness."""
        rng = random.Random(20260808)
        for _ in range(1000):
            pool = [
                synth_station("synth-1"),
                synth_station("synth-2"),
                hplc("hplc-1"),
            ]
            granted: list[Slot] = []
            job_id = 0
            for _ in range(rng.randint(1, 12)):
                if granted and rng.random() < 0.3:
                    slot = granted.pop(rng.randrange(len(granted)))
                    release(slot, pool)
                else:
                    job_id += 1
                    kind = rng.choice([JobKind.SYNTHESIS, JobKind.HPLC])
                    now = rng.randint(0, 300)
                    granted.append(schedule(make_job(kind, job_id), pool, now=now))
                for resource in pool:
                    assert intervals_disjoint(resource.busy), resource

    def test_greedy_matches_exhaustive_search(self):
        """Greedy earliest start equals the brute-force minimum for every
        enumerated configuration of up to 4 queued jobs and 2 resources."""
        rng = random.Random(7)
        cases = 0
        for n_resources in (1, 2):
            for n_jobs in (1, 2, 3, 4):
                for trial in range(40):
                    pools = []
                    for r in range(n_resources):
                        busy = []
                        t = rng.randint(0, 30)
                        for _ in range(rng.randint(0, 3)):
                            length = rng.randint(10, 90)
                            busy.append((t, t + length))
                            t += length + rng.randint(0, 60)
                        pools.append(hplc(f"hplc-{r}", busy))
                    now = rng.randint(0, 50)
                    for j in range(n_jobs):
                        job = make_job(JobKind.HPLC, job_id=j + 1)
                        duration = predict_duration(job.kind)
                        expected = min(
                            brute_force_earliest(resource.busy, now, duration)
                            for resource in pools
                        )
                        slot = schedule(job, pools, now=now)
                        assert slot.start_min == expected
                        cases += 1
        assert cases == 2 * (1 + 2 + 3 + 4) * 40

    def test_earliest_start_unit(self):
        assert earliest_start([], 5, 45) == 5
        assert earliest_start([(0, 60)], 0, 45) == 60
        assert earliest_start([(10, 60)], 0, 10) == 0
        assert earliest_start([(0, 60), (70, 100)], 0, 45) == 100
