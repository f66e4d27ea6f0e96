"""RDMA spinlock and RDMA MCS lock used as comparison points.

Both route every access through the NIC (``loopback=True``), including accesses
to memory on the requester's own node, which is how RDMA-only locks keep local
and remote atomics consistent.
"""

from __future__ import annotations

from dataclasses import dataclass

from .memory import LINE, NULL, Actor, Memory, RdmaPtr
from .sched import Mark, Program, cas, read, write

LOCKED = 0x00
NEXT = 0x08


def alloc_spinlock(memory: Memory, node: int) -> RdmaPtr:
    return memory.alloc(node, 1, align=LINE)


def alloc_mcs(memory: Memory, node: int) -> RdmaPtr:
    return memory.alloc(node, 1, align=LINE)


@dataclass
class SpinHandle:
    actor: Actor
    lock: RdmaPtr

    @property
    def token(self) -> int:
        return self.actor.id + 1


def spin_lock(h: SpinHandle) -> Program:
    while (yield cas(h.lock, 0, h.token, "enter", loopback=True)) != 0:
        pass


def spin_unlock(h: SpinHandle) -> Program:
    yield write(h.lock, 0, "exit", loopback=True)


@dataclass
class McsHandle:
    actor: Actor
    lock: RdmaPtr
    desc: RdmaPtr


def make_mcs_handle(memory: Memory, actor: Actor, lock: RdmaPtr) -> McsHandle:
    return McsHandle(actor, RdmaPtr(lock), memory.alloc(actor.node, LINE // 8, align=LINE))


def mcs_lock(h: McsHandle) -> Program:
    d = h.desc
    yield write(d + NEXT, NULL, "m1", loopback=True)
    yield write(d + LOCKED, 1, "m1", loopback=True)
    expected = NULL
    while True:
        prev = yield cas(h.lock, expected, d, "mswap", loopback=True)
        if prev == expected:
            break
        expected = prev
    if prev == NULL:
        return
    yield write(prev + NEXT, d, "m2", loopback=True)
    while (yield read(d + LOCKED, "m3", loopback=True)) != 0:
        pass


def mcs_unlock(h: McsHandle) -> Program:
    d = h.desc
    if (yield cas(h.lock, d, NULL, "u1", loopback=True)) == d:
        return
    while True:
        succ = yield read(d + NEXT, "u2", loopback=True)
        if succ != NULL:
            break
    yield write(succ + LOCKED, 0, "u3", loopback=True)


def spin_client(h: SpinHandle, rounds: int) -> Program:
    for _ in range(rounds):
        yield Mark("enter")
        yield from spin_lock(h)
        yield Mark("cs")
        yield from spin_unlock(h)
        yield Mark("ncs")


def mcs_client(h: McsHandle, rounds: int) -> Program:
    for _ in range(rounds):
        yield Mark("enter")
        yield from mcs_lock(h)
        yield Mark("cs")
        yield from mcs_unlock(h)
        yield Mark("ncs")
