import random

import pytest

from alock.core import (
    BUDGET, NEXT, TAIL_L, TAIL_R, VICTIM, BudgetPolicy, CohortId, alloc_alock, client,
    make_handle,
)
from alock.memory import LINE, NULL, AccessClass, Actor, Memory, StepKind, to_signed
from alock.scenarios import fig2, golden
from alock.sched import LivelockError, Process, run_random


def run_until(proc, memory, pred, limit=10_000):
    for _ in range(limit):
        if pred(proc):
            return
        proc.step(memory)
    raise AssertionError("predicate never became true")


def in_cs(p):
    return p.mark == "cs"


def spinning_on_budget(p):
    return p.pending is not None and p.pending.tag == "c3"


def test_layout():
    m = Memory(2)
    lock = alloc_alock(m, 1)
    assert lock.addr() % LINE == 0
    assert (TAIL_R, TAIL_L, VICTIM) == (0x0, 0x10, 0x20)
    assert (BUDGET, NEXT) == (0x0, 0x8)
    h = make_handle(m, Actor(0, 0), lock)
    assert h.desc.addr() % LINE == 0 and to_signed(m.peek(h.desc + BUDGET)) == -1


def test_cohort_by_node():
    m = Memory(3)
    lock = alloc_alock(m, 1)
    assert make_handle(m, Actor(0, 1), lock).cohort is CohortId.LOCAL
    assert make_handle(m, Actor(1, 2), lock).cohort is CohortId.REMOTE
    assert CohortId.LOCAL.other() is CohortId.REMOTE


def test_policy_validation():
    with pytest.raises(ValueError):
        BudgetPolicy(0, 5)
    assert BudgetPolicy().for_cohort(CohortId.REMOTE) == 20


def _uncontended(node):
    m = Memory(3, record=True)
    lock = alloc_alock(m, 0)
    h = make_handle(m, Actor(1, node), lock)
    p = Process(h.actor, client(h, 1))
    run_until(p, m, in_cs)
    acquire = list(m.trace)
    run_until(p, m, lambda q: q.done)
    return acquire, m.trace[len(acquire):], lock


def test_uncontended_remote_acquire_steps():
    acquire, _, lock = _uncontended(node=1)
    remote = [s for s in acquire if s.cls is AccessClass.REMOTE]
    kinds = [s.kind for s in remote]
    assert kinds.count(StepKind.CAS_READ) == 1 and kinds.count(StepKind.CAS_WRITE) == 1
    writes = [s for s in remote if s.kind is StepKind.WRITE]
    assert [s.target for s in writes] == [lock + VICTIM]
    others = [k for k in kinds if k not in (StepKind.CAS_READ, StepKind.CAS_WRITE, StepKind.WRITE)]
    assert others == [StepKind.READ]


def test_uncontended_release_is_one_cas():
    for node in (0, 1):
        _, release, _ = _uncontended(node)
        kinds = [s.kind for s in release]
        assert kinds in ([StepKind.CAS], [StepKind.CAS_READ, StepKind.CAS_WRITE])


def test_local_requester_is_purely_local():
    acquire, release, _ = _uncontended(node=0)
    assert all(s.cls is AccessClass.LOCAL for s in acquire + release)


def _queue(policy, node=0, n=3):
    m = Memory(2, record=True)
    lock = alloc_alock(m, 0)
    hs = [make_handle(m, Actor(i, node), lock, policy) for i in range(n)]
    ps = [Process(h.actor, client(h, 1)) for h in hs]
    run_until(ps[0], m, in_cs)
    for p in ps[1:]:
        run_until(p, m, spinning_on_budget)
    return m, lock, hs, ps


def test_pass_decrements_budget_and_exhaustion_reacquires():
    m, lock, hs, ps = _queue(BudgetPolicy(local_budget=2, remote_budget=9))
    assert hs[0].budget == 2 and not hs[0].passed
    run_until(ps[0], m, lambda p: p.done)
    run_until(ps[1], m, in_cs)
    assert hs[1].passed and hs[1].budget == 1
    run_until(ps[1], m, lambda p: p.done)
    mark = len(m.trace)
    run_until(ps[2], m, in_cs)
    # budget hit zero: the third requester re-ran the Peterson entry and refilled
    victim_writes = [s for s in m.trace[mark:] if s.target == lock + VICTIM and s.kind is StepKind.WRITE]
    assert [s.actor for s in victim_writes] == [2]
    assert hs[2].passed and hs[2].budget == 2


def test_successor_linked_before_pass():
    m, lock, hs, ps = _queue(BudgetPolicy(5, 5), n=2)
    assert m.peek(hs[0].desc + NEXT) == hs[1].desc
    assert m.peek(lock + TAIL_L) == hs[1].desc


def test_other_cohort_waits_for_holder():
    m = Memory(2)
    lock = alloc_alock(m, 0)
    local = make_handle(m, Actor(0, 0), lock)
    remote = make_handle(m, Actor(1, 1), lock)
    pl, pr = Process(local.actor, client(local, 1)), Process(remote.actor, client(remote, 1))
    run_until(pl, m, in_cs)
    for _ in range(50):
        pr.step(m)
    assert pr.mark != "cs"
    run_until(pl, m, lambda p: p.done)
    run_until(pr, m, in_cs)


def _stress(seed, nodes=3, per_node=2, rounds=6, policy=BudgetPolicy(2, 3)):
    m = Memory(nodes)
    lock = alloc_alock(m, 0)
    procs = []
    for n in range(nodes):
        for k in range(per_node):
            h = make_handle(m, Actor(n * per_node + k, n), lock, policy)
            procs.append(Process(h.actor, client(h, rounds)))

    def check(ps):
        assert sum(p.mark == "cs" for p in ps) <= 1

    steps = run_random(m, procs, random.Random(seed), max_steps=500_000, check=check)
    assert m.peek(lock + TAIL_L) == NULL and m.peek(lock + TAIL_R) == NULL
    return steps


@pytest.mark.parametrize("seed", range(40))
def test_random_stress_mutual_exclusion(seed):
    assert _stress(seed) > 0


def test_stress_with_budget_one():
    for seed in range(10):
        _stress(seed, policy=BudgetPolicy(1, 1))


def test_step_budget_aborts():
    m = Memory(2)
    lock = alloc_alock(m, 0)
    hs = [make_handle(m, Actor(i, i), lock) for i in range(2)]
    procs = [Process(h.actor, client(h, 1000)) for h in hs]
    with pytest.raises(LivelockError):
        run_random(m, procs, random.Random(0), max_steps=200)


def test_fig2_matches_golden():
    assert fig2() == golden("fig2")


def test_fig2_has_eight_frames():
    frames = [l for l in fig2() if l.startswith("frame ")]
    assert [f.split(":")[0] for f in frames] == [f"frame {i}" for i in range(1, 9)]
