"""Label-level transition systems for the checker.

Each model is a PlusCal-style program: every process has a program counter
ranging over labels, and one step executes exactly one label atomically.
Process ids are 1-based; id 0 means "nobody" wherever a pid is stored.

States are plain nested tuples so they hash quickly and deduplicate exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

NCS = "ncs"
CS = "cs"
ENTER = "enter"

# ALock state layout
VICTIM, COHORT, BUDGET, NEXT, PASSED, PC, PRED, STACK = range(8)

MUTATIONS = ("no_victim_write", "skip_next_wait", "no_decrement", "no_reacquire")


def _set(t: tuple, i: int, v) -> tuple:
    return t[:i] + (v,) + t[i + 1 :]


def us(pid: int) -> int:
    """Cohort slot (1 or 2) of a process: cohorts are split by pid parity."""
    return pid % 2 + 1


def them(pid: int) -> int:
    return (pid + 1) % 2 + 1


@dataclass(frozen=True)
class ALockModel:
    """Reference label machine for the ALock.

    ``victim`` holds the pid of the last process to volunteer, exactly as the
    label ``g1: victim := self`` does; its cohort is ``us(victim)``.
    """

    np: int
    budget: int
    mutations: frozenset[str] = field(default_factory=frozenset)
    name: str = "alock"

    def __post_init__(self):
        if self.np < 1 or self.budget < 1:
            raise ValueError("need at least one process and a positive budget")
        unknown = set(self.mutations) - set(MUTATIONS)
        if unknown:
            raise ValueError(f"unknown mutations: {sorted(unknown)}")

    labels = (
        "p1", NCS, ENTER, "p2", CS, "exit",
        "g1", "gwait", "g2", "g3", "g4",
        "c1", "swap", "cwait", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9", "c10",
        "cas", "r1", "r2", "r3",
    )

    def initial_states(self) -> list[tuple]:
        n = self.np
        base = (
            None,
            (0, 0),
            (-1,) * n,
            (0,) * n,
            (False,) * n,
            ("p1",) * n,
            (0,) * n,
            ((),) * n,
        )
        return [_set(base, VICTIM, v) for v in (1, 2)]

    def pc(self, s: tuple, pid: int) -> str:
        return s[PC][pid - 1]

    def step(self, s: tuple, pid: int) -> tuple | None:
        """Successor of ``s`` when ``pid`` executes its current label, or None."""
        i = pid - 1
        victim, cohort, budget, nxt, passed, pc, pred, stack = s
        label = pc[i]
        u, t = us(pid) - 1, them(pid) - 1

        def go(new_pc: str, **upd) -> tuple:
            out = list(s)
            out[PC] = _set(pc, i, new_pc)
            for k, v in upd.items():
                out[_FIELDS[k]] = v
            return tuple(out)

        def call(proc_entry: str, ret: str, **upd) -> tuple:
            return go(proc_entry, stack=_set(stack, i, (ret,) + stack[i]), pred=_set(pred, i, 0), **upd)

        def ret(**upd) -> tuple:
            return go(stack[i][0], stack=_set(stack, i, stack[i][1:]), pred=_set(pred, i, 0), **upd)

        if label == "p1":
            return go(NCS)
        if label == NCS:
            return go(ENTER)
        if label == ENTER:
            return call("c1", "p2")
        if label == "p2":
            return go(CS) if passed[i] else call("g1", CS)
        if label == CS:
            return go("exit")
        if label == "exit":
            return call("cas", "p1")
        # AcquireGlobal
        if label == "g1":
            if "no_victim_write" in self.mutations:
                return go("gwait")
            return go("gwait", victim=pid)
        if label == "gwait":
            return go("g2")
        if label == "g2":
            return go("g4") if cohort[t] == 0 else go("g3")
        if label == "g3":
            return go("g4") if victim != pid else go("gwait")
        if label == "g4":
            return ret()
        # AcquireCohort
        if label == "c1":
            return go("swap", budget=_set(budget, i, -1), nxt=_set(nxt, i, 0))
        if label == "swap":
            return go("cwait", pred=_set(pred, i, cohort[u]), cohort=_set(cohort, u, pid))
        if label == "cwait":
            return go("c2") if pred[i] != 0 else go("c8")
        if label == "c2":
            return go("c3", nxt=_set(nxt, pred[i] - 1, pid))
        if label == "c3":
            return go("c4") if budget[i] >= 0 else None
        if label == "c4":
            if budget[i] == 0 and "no_reacquire" not in self.mutations:
                return go("c5")
            return go("c7")
        if label == "c5":
            return call("g1", "c6")
        if label == "c6":
            return go("c7", budget=_set(budget, i, self.budget))
        if label == "c7":
            return go("c10", passed=_set(passed, i, True))
        if label == "c8":
            return go("c9", budget=_set(budget, i, self.budget))
        if label == "c9":
            return go("c10", passed=_set(passed, i, False))
        if label == "c10":
            return ret()
        # ReleaseCohort
        if label == "cas":
            if cohort[u] == pid:
                return go("r3", cohort=_set(cohort, u, 0))
            return go("r1")
        if label == "r1":
            if nxt[i] == 0 and "skip_next_wait" not in self.mutations:
                return None
            return go("r2")
        if label == "r2":
            succ = nxt[i]
            if succ == 0:
                # successor not linked yet: the hand-off is lost
                return go("r3")
            passed_budget = budget[i] if "no_decrement" in self.mutations else budget[i] - 1
            return go("r3", budget=_set(budget, succ - 1, passed_budget))
        if label == "r3":
            return ret()
        raise ValueError(f"unknown label {label!r}")

    def describe(self, s: tuple) -> str:
        victim, cohort, budget, nxt, passed, pc, pred, stack = s
        procs = " ".join(
            f"p{p}={pc[p - 1]}/b{budget[p - 1]}/n{nxt[p - 1]}{'/P' if passed[p - 1] else ''}"
            for p in range(1, self.np + 1)
        )
        return f"victim={victim} cohort={list(cohort)} {procs}"


_FIELDS = {
    "victim": VICTIM,
    "cohort": COHORT,
    "budget": BUDGET,
    "nxt": NEXT,
    "passed": PASSED,
    "pred": PRED,
    "stack": STACK,
}


@dataclass(frozen=True)
class SpinlockModel:
    """Test-and-set over a remote CAS; a failed CAS leaves the state unchanged."""

    np: int
    name: str = "spinlock"
    doorway: str = NCS

    def initial_states(self) -> list[tuple]:
        return [(0, ("p1",) * self.np)]

    def pc(self, s: tuple, pid: int) -> str:
        return s[1][pid - 1]

    def step(self, s: tuple, pid: int) -> tuple | None:
        lock, pc = s
        i = pid - 1
        label = pc[i]
        if label == "p1":
            return (lock, _set(pc, i, NCS))
        if label == NCS:
            return (lock, _set(pc, i, ENTER))
        if label == ENTER:
            if lock == 0:
                return (pid, _set(pc, i, CS))
            return s
        if label == CS:
            return (lock, _set(pc, i, "exit"))
        if label == "exit":
            return (0, _set(pc, i, "p1"))
        raise ValueError(f"unknown label {label!r}")

    def describe(self, s: tuple) -> str:
        return f"lock={s[0]} pc={list(s[1])}"


@dataclass(frozen=True)
class McsModel:
    """Classic MCS queue lock: enqueue by atomic swap, hand off by flag write."""

    np: int
    name: str = "mcs"
    doorway: str = "mswap"

    def initial_states(self) -> list[tuple]:
        n = self.np
        return [(0, (0,) * n, (0,) * n, ("p1",) * n, (0,) * n)]

    def pc(self, s: tuple, pid: int) -> str:
        return s[3][pid - 1]

    def step(self, s: tuple, pid: int) -> tuple | None:
        tail, locked, nxt, pc, pred = s
        i = pid - 1
        label = pc[i]

        def go(new_pc, tail=tail, locked=locked, nxt=nxt, pred=pred):
            return (tail, locked, nxt, _set(pc, i, new_pc), pred)

        if label == "p1":
            return go(NCS)
        if label == NCS:
            return go(ENTER)
        if label == ENTER:
            return go("mswap", locked=_set(locked, i, 1), nxt=_set(nxt, i, 0))
        if label == "mswap":
            return go("mwait", tail=pid, pred=_set(pred, i, tail))
        if label == "mwait":
            if pred[i] == 0:
                return go(CS)
            return go("m2")
        if label == "m2":
            return go("m3", nxt=_set(nxt, pred[i] - 1, pid))
        if label == "m3":
            if locked[i]:
                return None
            return go(CS, pred=_set(pred, i, 0))
        if label == CS:
            return go("exit", pred=_set(pred, i, 0))
        if label == "exit":
            if tail == pid:
                return go("p1", tail=0)
            return go("u2")
        if label == "u2":
            return go("u3") if nxt[i] != 0 else None
        if label == "u3":
            return go("p1", locked=_set(locked, nxt[i] - 1, 0))
        raise ValueError(f"unknown label {label!r}")

    def describe(self, s: tuple) -> str:
        return f"tail={s[0]} locked={list(s[1])} next={list(s[2])} pc={list(s[3])}"


@dataclass(frozen=True)
class ArrivalOrder:
    """Wraps a model with a ghost FIFO of arrivals at its doorway label.

    The ghost state records whether any process has ever entered the critical
    section ahead of an earlier arrival; FIFO is the invariant ``not overtaken``.
    """

    inner: object

    @property
    def np(self) -> int:
        return self.inner.np

    @property
    def name(self) -> str:
        return self.inner.name + "+order"

    def initial_states(self) -> list[tuple]:
        return [(s, (), False) for s in self.inner.initial_states()]

    def pc(self, s: tuple, pid: int) -> str:
        return self.inner.pc(s[0], pid)

    def step(self, s: tuple, pid: int) -> tuple | None:
        inner, order, overtaken = s
        nxt = self.inner.step(inner, pid)
        if nxt is None:
            return None
        label = self.inner.pc(inner, pid)
        if label == self.inner.doorway:
            order = order + (pid,)
        if self.inner.pc(nxt, pid) == CS and label != CS:
            if order and order[0] != pid:
                overtaken = True
            order = tuple(p for p in order if p != pid)
        return (nxt, order, overtaken)

    def describe(self, s: tuple) -> str:
        return f"{self.inner.describe(s[0])} order={list(s[1])}"


def make_model(algo: str, np: int, budget: int = 1, mutations: Iterator[str] = ()) -> object:
    if algo == "alock":
        return ALockModel(np, budget, frozenset(mutations))
    if mutations:
        raise ValueError("mutations apply to the alock model only")
    if algo == "spinlock":
        return SpinlockModel(np)
    if algo == "mcs":
        return McsModel(np)
    raise ValueError(f"unknown algorithm {algo!r}")
