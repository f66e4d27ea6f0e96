"""Scripted executions with frame-by-frame state dumps."""

from __future__ import annotations

from importlib import resources

from .core import alloc_alock, client, dump_descriptor, dump_lock, make_handle
from .memory import Actor, Memory
from .sched import Process

# (caption, actor index, steps to run, expected in-CS actor indices afterwards)
FIG2_FRAMES = [
    ("t1 swaps its descriptor onto the remote tail of l2", 0, 4, ()),
    ("t1 sets victim=REMOTE, sees local tail null, holds the lock", 0, 3, (0,)),
    ("t1 in critical section; t2 swaps its descriptor onto the local tail", 1, 3, (0,)),
    ("t2 sets victim=LOCAL and spins while the remote tail is set", 1, 4, (0,)),
    ("t1 unlocks by CASing the remote tail back to null", 0, 2, ()),
    ("t2 sees the remote tail null and enters its critical section", 1, 1, (1,)),
]


def fig2() -> list[str]:
    """Two nodes, one lock and one thread per node; t1 locks l2 remotely, then t2 locally."""
    memory = Memory(nodes=3, record=True)
    l1 = alloc_alock(memory, 1)
    l2 = alloc_alock(memory, 2)
    t1, t2 = Actor(1, 1), Actor(2, 2)
    h1 = make_handle(memory, t1, l2)
    h2 = make_handle(memory, t2, l2)
    procs = [Process(t1, client(h1, 1)), Process(t2, client(h2, 1))]

    def snapshot() -> list[str]:
        return [
            dump_lock(memory, l2),
            dump_descriptor(memory, t1.id, h1.desc),
            dump_descriptor(memory, t2.id, h2.desc),
        ]

    out = ["# scenario fig2: t1 (node 1) remote-locks l2 (node 2); t2 (node 2) local-locks l2"]
    out.append("frame 1: two nodes, lock l1 on node 1, lock l2 on node 2")
    out += [dump_lock(memory, l1), dump_lock(memory, l2)]
    out.append("frame 2: t1 remote descriptor and t2 local descriptor initialized")
    out += snapshot()
    for n, (caption, who, steps, in_cs) in enumerate(FIG2_FRAMES, start=3):
        out.append(f"frame {n}: {caption}")
        start = len(memory.trace)
        for _ in range(steps):
            procs[who].step(memory)
        out += [s.line() for s in memory.trace[start:]]
        out += snapshot()
        actual = tuple(i for i, p in enumerate(procs) if p.mark == "cs")
        if actual != in_cs:
            raise AssertionError(f"frame {n}: expected actors {in_cs} in cs, found {actual}")
    return out


SCENARIOS = {"fig2": fig2}


def golden(name: str) -> list[str]:
    text = resources.files("alock.data").joinpath(f"{name}.golden").read_text()
    return text.splitlines()
