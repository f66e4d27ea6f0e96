"""The asymmetric lock: two budgeted MCS cohort queues inside a Peterson lock.

Requests are split into a LOCAL cohort (requester on the lock's node, only
shared-memory accesses) and a REMOTE cohort (requester elsewhere, RDMA
accesses). Each cohort queues in its own MCS list whose tail doubles as that
cohort's Peterson flag, so the tail CAS in ``q_unlock`` releases the queue and
the flag at once. Cohort leaders compete through ``p_reacquire``.

All functions here are generators over :mod:`alock.sched` ops; every yield is
one memory access. The ``tag`` on each op names the matching label of the
reference transition system in :mod:`alock.checker.models` and is used only by
the bisimulation harness.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .memory import LINE, NULL, Actor, Memory, RdmaPtr, to_signed, to_word
from .sched import Mark, Program, cas, read, write

# ALock record layout (64B aligned, 8B fields)
TAIL_R = 0x00
TAIL_L = 0x10
VICTIM = 0x20
LOCK_WORDS = LINE // 8

# descriptor layout (64B aligned)
BUDGET = 0x00
NEXT = 0x08
DESC_WORDS = LINE // 8


class CohortId(enum.IntEnum):
    LOCAL = 0
    REMOTE = 1

    def other(self) -> "CohortId":
        return CohortId(1 - self)

    @property
    def letter(self) -> str:
        return "L" if self is CohortId.LOCAL else "R"


TAIL_OFFSET = {CohortId.LOCAL: TAIL_L, CohortId.REMOTE: TAIL_R}


@dataclass(frozen=True)
class BudgetPolicy:
    local_budget: int = 5
    remote_budget: int = 20

    def __post_init__(self):
        if self.local_budget < 1 or self.remote_budget < 1:
            raise ValueError("budgets must be >= 1")

    def for_cohort(self, cohort: CohortId) -> int:
        return self.local_budget if cohort is CohortId.LOCAL else self.remote_budget


def alloc_alock(memory: Memory, node: int) -> RdmaPtr:
    return memory.alloc(node, LOCK_WORDS, align=LINE)


def alloc_descriptor(memory: Memory, node: int) -> RdmaPtr:
    ptr = memory.alloc(node, DESC_WORDS, align=LINE)
    memory.poke(ptr + BUDGET, -1)
    return ptr


@dataclass
class LockHandle:
    """One actor's view of one ALock.

    Both descriptor kinds are allocated on the actor's own node; the one that
    matches the request's cohort is used.
    """

    actor: Actor
    lock: RdmaPtr
    policy: BudgetPolicy
    local_desc: RdmaPtr
    remote_desc: RdmaPtr
    passed: bool = False
    budget: int = field(default=-1, repr=False)

    @property
    def cohort(self) -> CohortId:
        return CohortId.LOCAL if self.lock.node() == self.actor.node else CohortId.REMOTE

    @property
    def desc(self) -> RdmaPtr:
        return self.local_desc if self.cohort is CohortId.LOCAL else self.remote_desc

    def tail(self, cohort: CohortId | None = None) -> int:
        return self.lock + TAIL_OFFSET[self.cohort if cohort is None else cohort]

    @property
    def victim(self) -> int:
        return self.lock + VICTIM


def make_handle(memory: Memory, actor: Actor, lock: RdmaPtr, policy: BudgetPolicy | None = None) -> LockHandle:
    return LockHandle(
        actor=actor,
        lock=RdmaPtr(lock),
        policy=policy or BudgetPolicy(),
        local_desc=alloc_descriptor(memory, actor.node),
        remote_desc=alloc_descriptor(memory, actor.node),
    )


def q_is_locked(h: LockHandle, cohort: CohortId, tag: str = "g2") -> Program:
    return (yield read(h.tail(cohort), tag)) != NULL


def p_reacquire(h: LockHandle) -> Program:
    """Peterson entry for a cohort leader: volunteer as victim, then wait."""
    me = h.cohort
    yield write(h.victim, me, "g1")
    while True:
        if not (yield from q_is_locked(h, me.other())):
            return
        if (yield read(h.victim, "g3")) != me:
            return


def _swap_tail(h: LockHandle) -> Program:
    # CAS-retry stands in for an atomic exchange
    expected = NULL
    while True:
        prev = yield cas(h.tail(), expected, h.desc, "swap")
        if prev == expected:
            return prev
        expected = prev


def q_lock(h: LockHandle) -> Program:
    """Join the cohort queue. Returns True iff the lock was passed to us."""
    desc = h.desc
    init_budget = h.policy.for_cohort(h.cohort)
    yield write(desc + BUDGET, to_word(-1), "c1")
    yield write(desc + NEXT, NULL, "c1")
    prev = yield from _swap_tail(h)
    if prev == NULL:
        yield write(desc + BUDGET, init_budget, "c8")
        h.budget, h.passed = init_budget, False
        return False
    yield write(prev + NEXT, desc, "c2")
    while True:
        budget = to_signed((yield read(desc + BUDGET, "c3")))
        if budget >= 0:
            break
    if budget == 0:
        # cohort used up its turns: let the other cohort in before continuing
        yield from p_reacquire(h)
        yield write(desc + BUDGET, init_budget, "c6")
        budget = init_budget
    h.budget, h.passed = budget, True
    return True


def q_unlock(h: LockHandle) -> Program:
    desc = h.desc
    if (yield cas(h.tail(), desc, NULL, "cas")) == desc:
        return
    while True:
        succ = yield read(desc + NEXT, "r1")
        if succ != NULL:
            break
    yield write(succ + BUDGET, to_word(h.budget - 1), "r2")


def lock(h: LockHandle) -> Program:
    if not (yield from q_lock(h)):
        yield from p_reacquire(h)


def unlock(h: LockHandle) -> Program:
    yield from q_unlock(h)


def client(h: LockHandle, rounds: int) -> Program:
    """Lock/unlock loop used by drivers; marks CS entry and exit."""
    for _ in range(rounds):
        yield Mark("enter")
        yield from lock(h)
        yield Mark("cs")
        yield from unlock(h)
        yield Mark("ncs")


def dump_lock(memory: Memory, lock: int) -> str:
    victim = CohortId(memory.peek(lock + VICTIM))
    return (
        f"alock addr={lock:#x} tail_r={memory.peek(lock + TAIL_R):#x} "
        f"tail_l={memory.peek(lock + TAIL_L):#x} victim={victim.letter}"
    )


def dump_descriptor(memory: Memory, actor_id: int, desc: int) -> str:
    budget = to_signed(memory.peek(desc + BUDGET))
    return f"desc actor={actor_id} budget={budget} next={memory.peek(desc + NEXT):#x}"
