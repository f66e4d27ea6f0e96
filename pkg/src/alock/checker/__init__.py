"""Explicit-state checking of the ALock label machine and the two baselines."""

from __future__ import annotations

from dataclasses import dataclass, field

from .explore import StateGraph, explore
from .models import ALockModel, ArrivalOrder, McsModel, SpinlockModel, make_model
from .properties import (
    IncompleteGraph,
    LivenessChecker,
    PropertyReport,
    check_invariant,
    check_mutual_exclusion,
    cohort_fairness,
    dead_and_livelock_free,
    execs_cs_infinitely_often,
    global_fairness,
    starvation_free,
)

__all__ = [
    "ALockModel",
    "CheckResult",
    "CheckerConfig",
    "IncompleteGraph",
    "McsModel",
    "PropertyReport",
    "SpinlockModel",
    "StateGraph",
    "explore",
    "make_model",
    "run_checks",
]


@dataclass(frozen=True)
class CheckerConfig:
    num_processes: int = 2
    initial_budget: int = 1
    algo: str = "alock"
    max_states: int = 10_000_000
    mutations: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.num_processes < 1:
            raise ValueError("num_processes must be >= 1")
        if self.initial_budget < 1:
            raise ValueError("initial_budget must be >= 1")


@dataclass
class CheckResult:
    config: CheckerConfig
    states: int
    complete: bool
    required: list[PropertyReport]
    informational: list[PropertyReport]

    @property
    def ok(self) -> bool:
        return all(r.holds for r in self.required)

    def lines(self) -> list[str]:
        out = [r.line() for r in self.required]
        out += [r.line() + " info=1" for r in self.informational]
        return out


def _fifo(model, max_states: int) -> PropertyReport:
    g = explore(ArrivalOrder(model), max_states)
    rep = check_invariant(g, "FIFO", lambda gg, s: gg.states[s][2])
    return rep


def run_checks(cfg: CheckerConfig) -> CheckResult:
    model = make_model(cfg.algo, cfg.num_processes, cfg.initial_budget, cfg.mutations)
    g = explore(model, cfg.max_states)
    required = [check_mutual_exclusion(g)]
    info: list[PropertyReport] = []
    if not g.complete:
        skipped = PropertyReport("Liveness", False, len(g), partial=True, note="state cap hit; liveness refused")
        return CheckResult(cfg, len(g), False, required + [skipped], info)
    lc = LivenessChecker(g)
    if cfg.algo == "alock":
        required += [
            starvation_free(lc),
            dead_and_livelock_free(lc),
            cohort_fairness(lc),
            global_fairness(lc),
        ]
        info += [execs_cs_infinitely_often(lc), cohort_fairness(lc, "c3")]
    elif cfg.algo == "mcs":
        required += [starvation_free(lc), dead_and_livelock_free(lc), _fifo(model, cfg.max_states)]
        info += [execs_cs_infinitely_often(lc)]
    else:
        required += [dead_and_livelock_free(lc)]
        info += [starvation_free(lc), _fifo(model, cfg.max_states), execs_cs_infinitely_often(lc)]
    return CheckResult(cfg, len(g), True, required, info)
