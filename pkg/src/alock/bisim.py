"""Lock-step comparison of the core ALock against the checker's label machine.

The label machine picks the schedule. Whenever process ``p`` executes label
``L``, the core process mapped to ``p`` runs every pending op tagged ``L``.
Labels without memory effect (branches, calls, returns) run no core ops.
After every label the abstract states must agree.

Cohort slot 1 maps to LOCAL and slot 2 to REMOTE, so pids of even parity run
on the lock's node and odd pids run elsewhere.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .checker.models import ALockModel, BUDGET, COHORT, NEXT, PASSED, PC, STACK, VICTIM, us
from .core import NEXT as DESC_NEXT
from .core import BUDGET as DESC_BUDGET
from .core import TAIL_L, TAIL_R
from .core import VICTIM as LOCK_VICTIM
from .core import BudgetPolicy, CohortId, LockHandle, alloc_alock, lock, make_handle, unlock
from .memory import NULL, Actor, Memory, to_signed
from .sched import Process

SLOT_COHORT = {1: CohortId.LOCAL, 2: CohortId.REMOTE}
MEMORY_LABELS = frozenset(
    {"c1", "swap", "c2", "c3", "c6", "c8", "g1", "g2", "g3", "cas", "r1", "r2"}
)
# labels at which the core may already have recorded ``passed`` ahead of the model
_PASSED_PENDING = frozenset({"c4", "c5", "c6", "c7", "c9"})


class Divergence(AssertionError):
    pass


def _forever(h: LockHandle):
    while True:
        yield from lock(h)
        yield from unlock(h)


@dataclass
class Bisimulation:
    np: int
    budget: int
    victim0: int

    def __post_init__(self):
        self.model = ALockModel(self.np, self.budget)
        self.state = next(s for s in self.model.initial_states() if s[VICTIM] == self.victim0)
        self.memory = Memory(nodes=1 + self.np)
        self.lock = alloc_alock(self.memory, 0)
        policy = BudgetPolicy(self.budget, self.budget)
        self.handles: dict[int, LockHandle] = {}
        self.procs: dict[int, Process] = {}
        for pid in range(1, self.np + 1):
            node = 0 if SLOT_COHORT[us(pid)] is CohortId.LOCAL else pid
            h = make_handle(self.memory, Actor(pid, node), self.lock, policy)
            self.handles[pid] = h
        self.owner = {h.desc: pid for pid, h in self.handles.items()}
        self.owner[NULL] = 0
        self.memory.poke(self.lock + LOCK_VICTIM, SLOT_COHORT[us(self.victim0)])
        for pid, h in self.handles.items():
            self.procs[pid] = Process(h.actor, _forever(h))

    def enabled(self) -> list[int]:
        out = []
        for pid in range(1, self.np + 1):
            t = self.model.step(self.state, pid)
            if t is not None and t != self.state:
                out.append(pid)
        return out

    def advance(self, pid: int) -> str:
        label = self.model.pc(self.state, pid)
        self.state = self.model.step(self.state, pid)
        proc = self.procs[pid]
        if label in MEMORY_LABELS:
            ran = 0
            while proc.pending is not None and proc.pending.tag == label:
                proc.run_op(self.memory)
                ran += 1
                if ran > 64:
                    raise Divergence(f"pid {pid} spun on {label} while the model moved on")
            if ran == 0:
                tag = proc.pending.tag if proc.pending else None
                raise Divergence(f"pid {pid}: model ran {label} but core is at {tag}")
        self.compare(pid, label)
        return label

    def abstract_core(self) -> dict:
        m = self.memory
        return {
            "cohort": (
                self.owner.get(m.peek(self.lock + TAIL_L), -1),
                self.owner.get(m.peek(self.lock + TAIL_R), -1),
            ),
            "victim": CohortId(m.peek(self.lock + LOCK_VICTIM)),
            "budget": tuple(to_signed(m.peek(h.desc + DESC_BUDGET)) for h in self.handles.values()),
            "next": tuple(self.owner.get(m.peek(h.desc + DESC_NEXT), -1) for h in self.handles.values()),
            "passed": tuple(h.passed for h in self.handles.values()),
        }

    def abstract_model(self) -> dict:
        s = self.state
        return {
            "cohort": s[COHORT],
            "victim": SLOT_COHORT[us(s[VICTIM])],
            "budget": s[BUDGET],
            "next": s[NEXT],
            "passed": s[PASSED],
        }

    def compare(self, pid: int, label: str) -> None:
        core, model = self.abstract_core(), self.abstract_model()
        for p in range(1, self.np + 1):
            pc = self.state[PC][p - 1]
            stack = self.state[STACK][p - 1]
            if pc in _PASSED_PENDING or (stack and stack[0] == "c6"):
                core["passed"] = core["passed"][: p - 1] + (None,) + core["passed"][p:]
                model["passed"] = model["passed"][: p - 1] + (None,) + model["passed"][p:]
        if core != model:
            diff = {k: (model[k], core[k]) for k in core if core[k] != model[k]}
            raise Divergence(f"after pid {pid} ran {label}: model vs core {diff}")


def run_schedule(np_: int, budget: int, seed: int, steps: int = 400) -> list[tuple[int, str]]:
    """One random schedule; raises :class:`Divergence` on the first mismatch."""
    rng = random.Random(seed)
    sim = Bisimulation(np_, budget, rng.choice((1, 2)))
    sim.compare(0, "init")
    taken = []
    for _ in range(steps):
        pid = rng.choice(sim.enabled())
        taken.append((pid, sim.advance(pid)))
    return taken


def run_many(np_: int = 2, budget: int = 2, schedules: int = 1000, steps: int = 400, seed: int = 0) -> int:
    """Number of schedules on which the core and the model diverged."""
    failures = 0
    for k in range(schedules):
        try:
            run_schedule(np_, budget, seed * 1_000_003 + k, steps)
        except Divergence:
            failures += 1
    return failures
