"""Breadth-first reachability with exact deduplication."""

from __future__ import annotations

import logging
from array import array
from collections import deque
from dataclasses import dataclass, field

log = logging.getLogger(__name__)


@dataclass
class StateGraph:
    model: object
    states: list[tuple]
    init: list[int]
    # BFS tree: parent state id and the (pid, label) that produced the state
    parent: array
    parent_pid: array
    # flat edge list; ``fair`` is 0 for ncs steps and for stutter steps
    src: array
    dst: array
    pid: array
    fair: array
    complete: bool
    # per-state bitmask of processes whose fair action is enabled
    enabled: array = field(default_factory=lambda: array("q"))

    def __len__(self) -> int:
        return len(self.states)

    def pc(self, sid: int, pid: int) -> str:
        return self.model.pc(self.states[sid], pid)

    def path_to(self, sid: int) -> list[int]:
        path = [sid]
        while self.parent[path[-1]] >= 0:
            path.append(self.parent[path[-1]])
        return path[::-1]

    def schedule_to(self, sid: int) -> list[tuple[int, str]]:
        """(pid, label) pairs driving some initial state to ``sid``."""
        path = self.path_to(sid)
        return [
            (self.parent_pid[b], self.pc(a, self.parent_pid[b]))
            for a, b in zip(path, path[1:])
        ]


def explore(model, max_states: int = 10_000_000) -> StateGraph:
    """Enumerate every reachable state of ``model`` (up to ``max_states``)."""
    np_ = model.np
    states: list[tuple] = []
    index: dict[tuple, int] = {}
    parent, parent_pid = array("q"), array("q")
    src, dst, pids, fair = array("q"), array("q"), array("q"), array("b")
    enabled = array("q")
    init = []

    def add(s, par, by):
        sid = index.get(s)
        if sid is None:
            sid = len(states)
            index[s] = sid
            states.append(s)
            parent.append(par)
            parent_pid.append(by)
            queue.append(sid)
        return sid

    queue: deque[int] = deque()
    for s in model.initial_states():
        init.append(add(s, -1, 0))
    complete = True
    while queue:
        sid = queue.popleft()
        s = states[sid]
        mask = 0
        for pid in range(1, np_ + 1):
            t = model.step(s, pid)
            if t is None:
                continue
            is_ncs = model.pc(s, pid) == "ncs"
            if t == s:
                # a step that changes nothing is a stutter, neither enabling nor fair
                continue
            if len(states) >= max_states and t not in index:
                complete = False
                continue
            tid = add(t, sid, pid)
            src.append(sid)
            dst.append(tid)
            pids.append(pid)
            fair.append(0 if is_ncs else 1)
            if not is_ncs:
                mask |= 1 << (pid - 1)
        enabled.append(mask)
    if not complete:
        log.warning("state cap %d reached; graph is partial", max_states)
    return StateGraph(
        model, states, init, parent, parent_pid, src, dst, pids, fair, complete, enabled
    )
