"""Simulated operation-asymmetric global memory.

Every node owns a flat arena of 64-bit words. Actors touch words through
three operations (read, write, compare-and-swap); each access is classified
Local or Remote from the issuing actor's node and the target pointer's node.

The atomicity guarantees are deliberately weak:

* a Local CAS is one indivisible step;
* a Remote CAS is two steps (``CAS_READ`` then ``CAS_WRITE``) and other
  actors' *local* steps may be scheduled in between, so a local write can be
  lost underneath it;
* remote CASes on the same word are serialized with each other (the NIC
  owns remote atomics), which the step driver in :mod:`alock.sched` enforces.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

NODE_BITS = 4
ADDR_BITS = 60
MAX_NODES = 1 << NODE_BITS
ADDR_MASK = (1 << ADDR_BITS) - 1
WORD_MASK = (1 << 64) - 1
WORD = 8
LINE = 64
NULL = 0


class MemoryFault(Exception):
    """Access to an address that was never allocated."""


class AllocationError(MemoryError):
    """The per-node arena is exhausted."""


class RdmaPtr(int):
    """64-bit pointer: top 4 bits name the node, low 60 bits the byte offset."""

    __slots__ = ()

    def __new__(cls, raw: int = 0) -> "RdmaPtr":
        if not 0 <= raw <= WORD_MASK:
            raise ValueError(f"pointer out of 64-bit range: {raw:#x}")
        return super().__new__(cls, raw)

    @classmethod
    def make(cls, node: int, addr: int) -> "RdmaPtr":
        if not 0 <= node < MAX_NODES:
            raise ValueError(f"node id {node} does not fit in {NODE_BITS} bits")
        if not 0 <= addr <= ADDR_MASK:
            raise ValueError(f"address {addr:#x} does not fit in {ADDR_BITS} bits")
        return cls((node << ADDR_BITS) | addr)

    def node(self) -> int:
        return int(self) >> ADDR_BITS

    def addr(self) -> int:
        return int(self) & ADDR_MASK

    def offset(self, nbytes: int) -> "RdmaPtr":
        return RdmaPtr.make(self.node(), self.addr() + nbytes)

    def __repr__(self) -> str:
        return f"RdmaPtr(node={self.node()}, addr={self.addr():#x})"


def ptr_node(raw: int) -> int:
    return raw >> ADDR_BITS


def to_word(value: int) -> int:
    """Two's-complement encode a signed integer into a 64-bit word."""
    return value & WORD_MASK


def to_signed(word: int) -> int:
    return word - (1 << 64) if word >> 63 else word


class AccessClass(enum.Enum):
    LOCAL = "L"
    REMOTE = "R"


class StepKind(enum.Enum):
    READ = "read"
    WRITE = "write"
    CAS = "cas"  # local CAS, one indivisible step
    CAS_READ = "cas_read"
    CAS_WRITE = "cas_write"


@dataclass(frozen=True)
class Actor:
    id: int
    node: int


@dataclass(frozen=True)
class MemStep:
    seq: int
    actor: int
    node: int
    cls: AccessClass
    kind: StepKind
    target: int
    value: int | None  # None marks a CAS_WRITE whose compare failed

    def line(self) -> str:
        value = "-" if self.value is None else f"{self.value:#x}"
        return (
            f"{self.seq} {self.actor} {self.node} {self.cls.value} "
            f"{self.kind.value} {self.target:#x} {value}"
        )


def classify(actor: Actor, target: int) -> AccessClass:
    """Local iff the target word lives on the actor's node."""
    return AccessClass.LOCAL if ptr_node(target) == actor.node else AccessClass.REMOTE


class Memory:
    """Word-granular memory image shared by every node in the simulated cluster.

    ``arena_words`` bounds each node's arena. Byte offsets below 64 are never
    handed out, so ``NULL`` can never alias a real allocation.
    """

    def __init__(self, nodes: int, arena_words: int = 1 << 16, record: bool = False):
        if not 1 <= nodes <= MAX_NODES:
            raise ValueError(f"nodes must be in [1, {MAX_NODES}], got {nodes}")
        self.nodes = nodes
        self.arena_words = arena_words
        self._words: list[list[int]] = [[] for _ in range(nodes)]
        self._cursor = [LINE] * nodes
        self._pending: dict[int, tuple[int, int, int, int]] = {}
        self.seq = 0
        self.counts = {AccessClass.LOCAL: 0, AccessClass.REMOTE: 0}
        self.trace: list[MemStep] | None = [] if record else None
        self.listeners: list[Callable[[MemStep], None]] = []

    # -- allocation -----------------------------------------------------

    def alloc(self, node: int, words: int, align: int = WORD) -> RdmaPtr:
        if align not in (WORD, LINE):
            raise ValueError(f"alignment must be 8 or 64 bytes, got {align}")
        if not 0 <= node < self.nodes:
            raise ValueError(f"no such node {node}")
        if words < 1:
            raise ValueError("allocation must span at least one word")
        start = -(-self._cursor[node] // align) * align
        end = start + words * WORD
        if end > self.arena_words * WORD:
            raise AllocationError(f"node {node} arena exhausted ({self.arena_words} words)")
        arena = self._words[node]
        arena.extend([0] * (end // WORD - len(arena)))
        self._cursor[node] = end
        return RdmaPtr.make(node, start)

    def _slot(self, target: int) -> tuple[list[int], int]:
        node, addr = target >> ADDR_BITS, target & ADDR_MASK
        if (
            node >= self.nodes
            or addr % WORD
            or addr < LINE
            or addr >= self._cursor[node]
        ):
            raise MemoryFault(f"unallocated address node={node} addr={addr:#x}")
        return self._words[node], addr // WORD

    def peek(self, target: int) -> int:
        """Inspect a word without emitting a step (debugging and dumps only)."""
        arena, i = self._slot(target)
        return arena[i]

    def poke(self, target: int, value: int) -> None:
        """Set a word without emitting a step (test and scenario setup only)."""
        arena, i = self._slot(target)
        arena[i] = to_word(value)

    # -- steps ----------------------------------------------------------

    def _emit(self, actor: Actor, cls: AccessClass, kind: StepKind, target: int, value):
        self.seq += 1
        self.counts[cls] += 1
        if self.trace is None and not self.listeners:
            return None
        step = MemStep(self.seq, actor.id, actor.node, cls, kind, target, value)
        if self.trace is not None:
            self.trace.append(step)
        for fn in self.listeners:
            fn(step)
        return step

    def read(self, actor: Actor, target: int, cls: AccessClass | None = None) -> int:
        arena, i = self._slot(target)
        value = arena[i]
        self._emit(actor, cls or classify(actor, target), StepKind.READ, target, value)
        return value

    def write(self, actor: Actor, target: int, value: int, cls: AccessClass | None = None) -> None:
        arena, i = self._slot(target)
        arena[i] = value = to_word(value)
        self._emit(actor, cls or classify(actor, target), StepKind.WRITE, target, value)

    def cas(
        self,
        actor: Actor,
        target: int,
        expected: int,
        desired: int,
        cls: AccessClass | None = None,
    ) -> int:
        """Full CAS. A remote CAS still emits its two steps, back to back."""
        cls = cls or classify(actor, target)
        if cls is AccessClass.REMOTE:
            self.cas_read(actor, target, expected, desired)
            return self.cas_write(actor)
        arena, i = self._slot(target)
        prior = arena[i]
        if prior == to_word(expected):
            arena[i] = to_word(desired)
        self._emit(actor, cls, StepKind.CAS, target, arena[i])
        return prior

    def cas_read(self, actor: Actor, target: int, expected: int, desired: int) -> int:
        """First half of a remote CAS: capture the prior value and decide."""
        if actor.id in self._pending:
            raise RuntimeError(f"actor {actor.id} already has a remote CAS in flight")
        arena, i = self._slot(target)
        prior = arena[i]
        self._pending[actor.id] = (target, to_word(expected), to_word(desired), prior)
        self._emit(actor, AccessClass.REMOTE, StepKind.CAS_READ, target, prior)
        return prior

    def cas_write(self, actor: Actor) -> int:
        """Second half of a remote CAS: write iff the first half saw ``expected``.

        The compare is *not* re-evaluated here; anything written locally since
        the first half is overwritten.
        """
        target, expected, desired, prior = self._pending.pop(actor.id)
        arena, i = self._slot(target)
        if prior == expected:
            arena[i] = desired
            self._emit(actor, AccessClass.REMOTE, StepKind.CAS_WRITE, target, desired)
        else:
            self._emit(actor, AccessClass.REMOTE, StepKind.CAS_WRITE, target, None)
        return prior

    def remote_cas_in_flight(self, target: int, other_than: int | None = None) -> bool:
        return any(
            t == target for aid, (t, *_rest) in self._pending.items() if aid != other_than
        )

    def image(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(words) for words in self._words)


def write_trace(steps, fh) -> None:
    """Write steps one per line as ``seq actor node class kind addr value``."""
    for step in steps:
        fh.write(step.line() + "\n")
