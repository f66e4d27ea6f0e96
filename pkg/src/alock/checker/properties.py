"""Safety and liveness verdicts over an explored state graph.

Liveness follows TLA+ semantics for ``fair process`` with a ``ncs:-`` label:
every process's non-ncs action is weakly fair. A behaviour may stutter
forever in a state only if no fair action is enabled there, so a process is
allowed to stay in its non-critical section indefinitely.

``P ~> Q`` fails iff some reachable P-state that is not a Q-state can reach,
without visiting a Q-state, a strongly connected set of non-Q states that
admits a fair cycle: for each process, it either takes a fair step inside the
set or is disabled somewhere in it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .explore import StateGraph
from .models import CS, ENTER, NCS


class IncompleteGraph(RuntimeError):
    """Liveness was requested on a graph cut short by the state cap."""


@dataclass
class PropertyReport:
    name: str
    holds: bool
    states: int
    trace: list[tuple[int, str]] = field(default_factory=list)
    cycle: list[tuple[int, str]] = field(default_factory=list)
    partial: bool = False
    note: str = ""

    @property
    def verdict(self) -> str:
        return "holds" if self.holds else "violated"

    def line(self) -> str:
        extra = " partial=1" if self.partial else ""
        return f"property={self.name} verdict={self.verdict} states={self.states}{extra}"

    def counterexample(self) -> list[str]:
        out = [f"{i} pid={pid} label={label}" for i, (pid, label) in enumerate(self.trace)]
        if self.cycle:
            out.append("-- cycle --")
            base = len(self.trace)
            out += [
                f"{base + i} pid={pid} label={label}" for i, (pid, label) in enumerate(self.cycle)
            ]
        return out


StatePred = Callable[[StateGraph, int], bool]


def pc_is(pid: int, label: str) -> StatePred:
    return lambda g, s: g.pc(s, pid) == label


def any_pc_is(label: str) -> StatePred:
    return lambda g, s: any(g.pc(s, p) == label for p in range(1, g.model.np + 1))


def mutual_exclusion_violation(g: StateGraph, s: int) -> bool:
    return sum(1 for p in range(1, g.model.np + 1) if g.pc(s, p) == CS) > 1


def check_invariant(g: StateGraph, name: str, bad: StatePred) -> PropertyReport:
    """States are in BFS order, so the first bad state has a shortest trace."""
    for sid in range(len(g)):
        if bad(g, sid):
            return PropertyReport(name, False, len(g), g.schedule_to(sid), partial=not g.complete)
    return PropertyReport(name, True, len(g), partial=not g.complete)


def check_mutual_exclusion(g: StateGraph) -> PropertyReport:
    return check_invariant(g, "MutualExclusion", mutual_exclusion_violation)


class _Liveness:
    """Cached per-target analysis: SCCs of the subgraph avoiding a target set."""

    def __init__(self, g: StateGraph):
        if not g.complete:
            raise IncompleteGraph("liveness verdicts need the full reachable graph")
        self.g = g
        self.n = len(g)
        self.src = np.frombuffer(g.src, dtype=np.int64)
        self.dst = np.frombuffer(g.dst, dtype=np.int64)
        self.pid = np.frombuffer(g.pid, dtype=np.int64)
        self.fair = np.frombuffer(g.fair, dtype=np.int8).astype(bool)
        self.enabled = np.frombuffer(g.enabled, dtype=np.int64)
        self.full = (1 << g.model.np) - 1
        self._cache: dict[object, tuple] = {}
        self.succ = self._adjacency(np.ones(len(self.src), dtype=bool))

    def _adjacency(self, keep: np.ndarray) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for e in np.nonzero(keep)[0].tolist():
            out[self.src[e]].append(e)
        return out

    def mask(self, pred: StatePred) -> np.ndarray:
        return np.fromiter((pred(self.g, s) for s in range(self.n)), dtype=bool, count=self.n)

    def fair_region(self, key, avoid: np.ndarray):
        """States outside ``avoid`` from which a fair cycle avoiding it is reachable."""
        if key in self._cache:
            return self._cache[key]
        ok = ~avoid
        inner = ok[self.src] & ok[self.dst]
        n = self.n
        graph = csr_matrix(
            (np.ones(int(inner.sum()), dtype=np.int8), (self.src[inner], self.dst[inner])),
            shape=(n, n),
        )
        _, comp = connected_components(graph, directed=True, connection="strong")
        ncomp = int(comp.max()) + 1 if n else 0
        # processes that take a fair step inside each component
        taken = np.zeros(ncomp, dtype=np.int64)
        intra = inner & self.fair & (comp[self.src] == comp[self.dst])
        np.bitwise_or.at(taken, comp[self.src[intra]], np.left_shift(1, self.pid[intra] - 1))
        # processes disabled at some state of each component
        disabled = np.zeros(ncomp, dtype=np.int64)
        okidx = np.nonzero(ok)[0]
        np.bitwise_or.at(disabled, comp[okidx], self.full & ~self.enabled[okidx])
        comp_fair = (taken | disabled) == self.full
        seeds = okidx[comp_fair[comp[okidx]]]
        # backward closure inside the allowed region
        pred_edges: list[list[int]] = [[] for _ in range(n)]
        for e in np.nonzero(inner)[0].tolist():
            pred_edges[self.dst[e]].append(int(self.src[e]))
        reach = np.zeros(n, dtype=bool)
        reach[seeds] = True
        queue = deque(seeds.tolist())
        while queue:
            v = queue.popleft()
            for u in pred_edges[v]:
                if not reach[u]:
                    reach[u] = True
                    queue.append(u)
        result = (reach, comp, comp_fair, inner, taken, disabled)
        self._cache[key] = result
        return result

    def lasso(self, start: int, avoid: np.ndarray, key) -> tuple[list, list]:
        """Prefix from an initial state through ``start`` into a fair component, plus its cycle."""
        g = self.g
        reach, comp, comp_fair, inner, taken, disabled = self.fair_region(key, avoid)
        prefix = g.schedule_to(start)
        # shortest path inside the allowed region to a fair component
        prev = {start: None}
        queue = deque([start])
        hit = start if comp_fair[comp[start]] else None
        while queue and hit is None:
            v = queue.popleft()
            for e in self.succ[v]:
                if not inner[e]:
                    continue
                w = int(self.dst[e])
                if w not in prev:
                    prev[w] = e
                    if comp_fair[comp[w]]:
                        hit = w
                        break
                    queue.append(w)
        steps = []
        v = hit
        while prev[v] is not None:
            e = prev[v]
            steps.append(e)
            v = int(self.src[e])
        prefix += [(int(self.pid[e]), g.pc(int(self.src[e]), int(self.pid[e]))) for e in reversed(steps)]
        cycle = self._cover(hit, comp, inner, taken[comp[hit]])
        return prefix, [(int(self.pid[e]), g.pc(int(self.src[e]), int(self.pid[e]))) for e in cycle]

    def _cover(self, root: int, comp, inner, taken_mask: int) -> list[int]:
        """A closed walk from ``root`` inside its component taking each required fair step."""
        c = comp[root]
        targets = []
        for p in range(1, self.g.model.np + 1):
            if taken_mask >> (p - 1) & 1:
                for e in range(len(self.src)):
                    if (
                        inner[e] and self.fair[e] and self.pid[e] == p
                        and comp[self.src[e]] == c and comp[self.dst[e]] == c
                    ):
                        targets.append(e)
                        break
        walk: list[int] = []
        here = root
        for e in targets:
            walk += self._path(here, int(self.src[e]), comp, inner)
            walk.append(e)
            here = int(self.dst[e])
        walk += self._path(here, root, comp, inner)
        return walk

    def _path(self, a: int, b: int, comp, inner) -> list[int]:
        if a == b:
            return []
        c = comp[a]
        prev = {a: None}
        queue = deque([a])
        while queue:
            v = queue.popleft()
            for e in self.succ[v]:
                w = int(self.dst[e])
                if inner[e] and comp[w] == c and w not in prev:
                    prev[w] = e
                    if w == b:
                        queue.clear()
                        break
                    queue.append(w)
        out = []
        v = b
        while prev[v] is not None:
            out.append(prev[v])
            v = int(self.src[prev[v]])
        return out[::-1]


class LivenessChecker:
    def __init__(self, g: StateGraph):
        self.g = g
        self.live = _Liveness(g)

    def leads_to(self, name: str, p: StatePred | np.ndarray, q: StatePred, key=None) -> PropertyReport:
        lv = self.live
        qmask = lv.mask(q)
        pmask = p if isinstance(p, np.ndarray) else lv.mask(p)
        key = key if key is not None else name
        reach = lv.fair_region(key, qmask)[0]
        bad = np.nonzero(pmask & ~qmask & reach)[0]
        if len(bad) == 0:
            return PropertyReport(name, True, lv.n)
        prefix, cycle = lv.lasso(int(bad[0]), qmask, key)
        return PropertyReport(name, False, lv.n, prefix, cycle)

    def forward_closure(self, seeds: np.ndarray, allowed: np.ndarray) -> np.ndarray:
        """States reachable from ``seeds`` through ``allowed`` states only."""
        seen = seeds & allowed
        queue = deque(np.nonzero(seeds)[0].tolist())
        while queue:
            v = queue.popleft()
            for e in self.live.succ[v]:
                w = int(self.live.dst[e])
                if allowed[w] and not seen[w]:
                    seen[w] = True
                    queue.append(w)
        return seen

    def conditional_leads_to(self, name: str, premise_labels: tuple[str, str]) -> PropertyReport:
        """For all i, j: from any state with pc[i]=a and pc[j]=b, once i reaches
        cs (before j does), j reaches cs too.

        The written formula puts a state predicate in front of the leads-to;
        read literally at the initial state it is vacuous. Here the premise is
        checked at every reachable state, and the obligation covers the first
        critical section of i that follows it.
        """
        g, lv = self.g, self.live
        a, b = premise_labels
        np_ = g.model.np
        worst = None
        for i in range(1, np_ + 1):
            for j in range(1, np_ + 1):
                if i == j:
                    continue
                premise = lv.mask(lambda gg, s: gg.pc(s, i) == a and gg.pc(s, j) == b)
                if not premise.any():
                    continue
                j_cs = lv.mask(pc_is(j, CS))
                after = self.forward_closure(premise, ~j_cs)
                src = after & lv.mask(pc_is(i, CS))
                rep = self.leads_to(name, src, pc_is(j, CS), key=("cs", j))
                if not rep.holds:
                    rep.note = f"i={i} j={j}"
                    return rep
                worst = rep
        return worst or PropertyReport(name, True, lv.n, note="premise unreachable")


def starvation_free(lc: LivenessChecker) -> PropertyReport:
    for i in range(1, lc.g.model.np + 1):
        rep = lc.leads_to("StarvationFree", pc_is(i, ENTER), pc_is(i, CS), key=("cs", i))
        if not rep.holds:
            rep.note = f"i={i}"
            return rep
    return PropertyReport("StarvationFree", True, len(lc.g))


def dead_and_livelock_free(lc: LivenessChecker) -> PropertyReport:
    return lc.leads_to("DeadAndLivelockFree", any_pc_is(ENTER), any_pc_is(CS))


def execs_cs_infinitely_often(lc: LivenessChecker) -> PropertyReport:
    for i in range(1, lc.g.model.np + 1):
        rep = lc.leads_to(
            "ExecsCriticalSectionInfinitelyOften", lambda g, s: True, pc_is(i, CS), key=("cs", i)
        )
        if not rep.holds:
            rep.note = f"i={i}: a process may stay in {NCS} forever"
            return rep
    return PropertyReport("ExecsCriticalSectionInfinitelyOften", True, len(lc.g))


def cohort_fairness(lc: LivenessChecker, wait_label: str = "cwait") -> PropertyReport:
    name = "CohortFairness" if wait_label == "cwait" else f"CohortFairness[{wait_label}]"
    return lc.conditional_leads_to(name, (wait_label, ENTER))


def global_fairness(lc: LivenessChecker) -> PropertyReport:
    return lc.conditional_leads_to("GlobalFairness", ("gwait", ENTER))
