"""Two-actor litmus tests for the local/remote atomicity matrix.

A local actor (on the word's node) and a remote actor each run a short
program against one shared word. Every interleaving of their MemSteps is
enumerated; an outcome is the pair of returned values plus the final word.
A pair of operations is *atomic* iff each interleaved outcome also arises
from one of the serial orders.
"""

from __future__ import annotations

from itertools import combinations
from typing import Callable, Iterator

from .memory import Actor, Memory
from .sched import Op, Process, cas, read, write

INITIAL = 0

# op builders over the shared word; values chosen so every op is observable
LOCAL_OPS: dict[str, Callable[[int], Op]] = {
    "Read": lambda w: read(w),
    "Write": lambda w: write(w, 7),
    "RMW": lambda w: cas(w, INITIAL, 7),
}
REMOTE_OPS: dict[str, Callable[[int], Op]] = {
    "Read": lambda w: read(w),
    "Write": lambda w: write(w, 5),
    "CAS": lambda w: cas(w, INITIAL, 5),
}

# expected atomicity; True means every outcome is serializable
MATRIX = {
    ("Read", "Read"): True, ("Read", "Write"): True, ("Read", "CAS"): True,
    ("Write", "Read"): True, ("Write", "Write"): True, ("Write", "CAS"): False,
    ("RMW", "Read"): True, ("RMW", "Write"): True, ("RMW", "CAS"): False,
}

Outcome = tuple[tuple[int | None, ...], int]


def _program(ops: list[Op], results: list):
    for op in ops:
        results.append((yield op))


def _setup(local_ops, remote_ops):
    memory = Memory(nodes=2)
    word = memory.alloc(0, 1)
    memory.poke(word, INITIAL)
    outs: tuple[list, list] = ([], [])
    procs = [
        Process(Actor(0, 0), _program([f(word) for f in local_ops], outs[0])),
        Process(Actor(1, 1), _program([f(word) for f in remote_ops], outs[1])),
    ]
    return memory, word, procs, outs


def _step_count(local_ops, remote_ops) -> tuple[int, int]:
    """Steps each actor will take: a remote CAS costs two."""
    memory, _, procs, _ = _setup(local_ops, remote_ops)
    counts = []
    for p in procs:
        n = 0
        while not p.done:
            p.step(memory)
            n += 1
        counts.append(n)
    return counts[0], counts[1]


def interleavings(a: int, b: int) -> Iterator[tuple[int, ...]]:
    """All schedules of ``a`` steps by actor 0 and ``b`` steps by actor 1."""
    for picks in combinations(range(a + b), a):
        chosen = set(picks)
        yield tuple(0 if i in chosen else 1 for i in range(a + b))


def run(local_ops, remote_ops, schedule) -> Outcome:
    memory, word, procs, outs = _setup(local_ops, remote_ops)
    for who in schedule:
        procs[who].step(memory)
    return (tuple(outs[0]) + tuple(outs[1]), memory.peek(word))


def outcomes(local_ops, remote_ops) -> tuple[set[Outcome], set[Outcome]]:
    """(serial outcomes, all interleaved outcomes)."""
    a, b = _step_count(local_ops, remote_ops)
    serial = {run(local_ops, remote_ops, (0,) * a + (1,) * b), run(local_ops, remote_ops, (1,) * b + (0,) * a)}
    every = {run(local_ops, remote_ops, s) for s in interleavings(a, b)}
    return serial, every


def cell_is_atomic(local: str, remote: str) -> bool:
    serial, every = outcomes([LOCAL_OPS[local]], [REMOTE_OPS[remote]])
    return every <= serial


def witness(local: str, remote: str) -> tuple[tuple[int, ...], Outcome] | None:
    """A schedule producing a non-serializable outcome, if one exists."""
    lo, ro = [LOCAL_OPS[local]], [REMOTE_OPS[remote]]
    serial, _ = outcomes(lo, ro)
    a, b = _step_count(lo, ro)
    for s in interleavings(a, b):
        out = run(lo, ro, s)
        if out not in serial:
            return s, out
    return None
