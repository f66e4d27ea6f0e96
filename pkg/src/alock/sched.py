"""Step-yielding programs and the drivers that interleave them.

Lock algorithms are generators that yield :class:`Op` requests and receive
each op's result via ``send``. They may also yield :class:`Mark` objects,
which name a program point (``"cs"``, ``"ncs"``...) without touching memory.

A :class:`Process` turns one such generator into a sequence of MemSteps. The
scheduler above it (random stress driver, bisimulation harness, simulator)
decides which process moves next.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Callable, Generator, Iterable

from .memory import AccessClass, Actor, Memory, classify


class OpKind(enum.Enum):
    READ = "read"
    WRITE = "write"
    CAS = "cas"


@dataclass(frozen=True)
class Op:
    kind: OpKind
    target: int
    value: int = 0
    expected: int = 0
    loopback: bool = False  # force the RDMA path even for co-located memory
    tag: str = ""


@dataclass(frozen=True)
class Mark:
    label: str


def read(target: int, tag: str = "", loopback: bool = False) -> Op:
    return Op(OpKind.READ, target, loopback=loopback, tag=tag)


def write(target: int, value: int, tag: str = "", loopback: bool = False) -> Op:
    return Op(OpKind.WRITE, target, value, loopback=loopback, tag=tag)


def cas(target: int, expected: int, desired: int, tag: str = "", loopback: bool = False) -> Op:
    return Op(OpKind.CAS, target, desired, expected, loopback=loopback, tag=tag)


Program = Generator["Op | Mark", int, None]


class LivelockError(RuntimeError):
    """A driver exceeded its step budget."""


class Process:
    """Drives one program generator, one MemStep at a time.

    After every step the generator is advanced eagerly to its next op, so
    ``mark`` always reflects the program point the process has reached.
    """

    def __init__(self, actor: Actor, program: Program):
        self.actor = actor
        self.program = program
        self.pending: Op | None = None
        self.mid_cas = False
        self.done = False
        self.mark: str | None = None
        self.new_marks: list[str] = []
        self.ops_done = 0
        self._advance(None, first=True)

    def _advance(self, result, first: bool = False) -> None:
        self.new_marks = []
        try:
            item = next(self.program) if first else self.program.send(result)
            while isinstance(item, Mark):
                self.mark = item.label
                self.new_marks.append(item.label)
                item = next(self.program)
        except StopIteration:
            self.pending = None
            self.done = True
            return
        self.pending = item

    def op_class(self, op: Op | None = None) -> AccessClass:
        op = op or self.pending
        return AccessClass.REMOTE if op.loopback else classify(self.actor, op.target)

    def enabled(self, memory: Memory) -> bool:
        if self.done:
            return False
        if self.mid_cas:
            return True
        # remote accesses to a word queue behind another actor's remote CAS on it
        if self.op_class() is AccessClass.REMOTE:
            return not memory.remote_cas_in_flight(self.pending.target, self.actor.id)
        return True

    def step(self, memory: Memory) -> None:
        """Execute exactly one MemStep of the pending op."""
        op = self.pending
        if op is None:
            raise RuntimeError("process has finished")
        if self.mid_cas:
            self.mid_cas = False
            self._complete(memory.cas_write(self.actor))
            return
        cls = self.op_class(op)
        if op.kind is OpKind.READ:
            self._complete(memory.read(self.actor, op.target, cls))
        elif op.kind is OpKind.WRITE:
            memory.write(self.actor, op.target, op.value, cls)
            self._complete(None)
        elif cls is AccessClass.REMOTE:
            memory.cas_read(self.actor, op.target, op.expected, op.value)
            self.mid_cas = True
        else:
            self._complete(memory.cas(self.actor, op.target, op.expected, op.value, cls))

    def run_op(self, memory: Memory) -> None:
        """Execute the whole pending op (both halves of a remote CAS)."""
        self.step(memory)
        if self.mid_cas:
            self.step(memory)

    def _complete(self, result) -> None:
        self.ops_done += 1
        self._advance(result)


def run_random(
    memory: Memory,
    procs: list[Process],
    rng: random.Random,
    max_steps: int = 1_000_000,
    check: Callable[[list[Process]], None] | None = None,
) -> int:
    """Hostile scheduler: at every step pick a uniformly random enabled process.

    ``check`` runs after each step (for invariants such as mutual exclusion).
    Returns the number of steps taken; raises :class:`LivelockError` when the
    budget is exhausted before every process finishes.
    """
    steps = 0
    while True:
        live = [p for p in procs if p.enabled(memory)]
        if not live:
            if any(not p.done for p in procs):
                raise LivelockError("no enabled process but some are unfinished (deadlock)")
            return steps
        if steps >= max_steps:
            raise LivelockError(f"step budget {max_steps} exhausted")
        rng.choice(live).step(memory)
        steps += 1
        if check is not None:
            check(procs)


def run_schedule(memory: Memory, procs: list[Process], schedule: Iterable[int]) -> None:
    """Replay a fixed schedule given as a sequence of process indices."""
    for i in schedule:
        proc = procs[i]
        if not proc.enabled(memory):
            raise ValueError(f"process {i} is not enabled at this point of the schedule")
        proc.step(memory)
