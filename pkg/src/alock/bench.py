"""Discrete-event simulation of a distributed lock table.

Every simulated thread loops lock -> critical section -> unlock on a lock drawn
from the table. Each memory op is charged by class: local ops at
``local_op_cost``; RDMA ops at ``remote_op_cost`` (or ``loopback_op_cost``
when they target the issuer's own node) times a NIC congestion penalty.

Times are in nanoseconds of simulated time.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
import random
from dataclasses import asdict, dataclass, field, replace
from itertools import product
from typing import Iterable

from . import baselines
from .core import BudgetPolicy, alloc_alock, lock as alock_lock, make_handle, unlock as alock_unlock
from .memory import AccessClass, Actor, Memory
from .sched import LivelockError, Mark, Process

ALGOS = ("alock", "spinlock", "mcs")
CSV_HEADER = [
    "algo", "nodes", "threads", "locks", "locality", "budget_l", "budget_r",
    "throughput", "p50", "p99", "p999", "remote_steps", "local_steps",
]
CONTENTION = {"high": 20, "medium": 100, "low": 1000}


@dataclass(frozen=True)
class WorkloadSpec:
    nodes: int = 1
    threads_per_node: int = 8
    lock_count: int = 20
    locality_pct: float = 100.0
    duration: float = 2_000_000.0
    cs_cost: float = 100.0
    seed: int = 42

    def __post_init__(self):
        if not 1 <= self.nodes <= 16:
            raise ValueError("nodes must be in [1, 16]")
        if self.threads_per_node < 0:
            raise ValueError("threads_per_node must be >= 0")
        if self.lock_count < self.nodes:
            raise ValueError("need at least one lock per node")
        if not 0 <= self.locality_pct <= 100:
            raise ValueError("locality_pct must be in [0, 100]")
        if self.duration <= 0 or self.cs_cost < 0:
            raise ValueError("duration must be positive and cs_cost non-negative")


@dataclass(frozen=True)
class LatencyModel:
    local_op_cost: float = 100.0
    remote_op_cost: float = 1000.0
    loopback_op_cost: float = 1000.0
    # NIC requests in flight before the congestion penalty kicks in
    nic_capacity: float = 4.0
    # queue pairs a NIC caches before thrashing, and the per-QP overflow penalty
    qp_capacity: int = 64
    qp_penalty: float = 0.5

    def __post_init__(self):
        if self.local_op_cost <= 0 or self.remote_op_cost < self.local_op_cost:
            raise ValueError("need 0 < local_op_cost <= remote_op_cost")
        if self.loopback_op_cost <= 0 or self.nic_capacity <= 0 or self.qp_capacity <= 0:
            raise ValueError("costs and capacities must be positive")
        if self.qp_penalty < 0:
            raise ValueError("qp_penalty must be non-negative")

    def penalty(self, in_flight: int, connections: int) -> float:
        """Multiplicative slowdown of an RDMA op; nondecreasing in both arguments."""
        load = max(1.0, in_flight / self.nic_capacity)
        thrash = 1.0 + self.qp_penalty * max(0, connections - self.qp_capacity) / self.qp_capacity
        return load * thrash


@dataclass(frozen=True)
class Algo:
    name: str
    policy: BudgetPolicy = BudgetPolicy()

    def __post_init__(self):
        if self.name not in ALGOS:
            raise ValueError(f"unknown algorithm {self.name!r}; choose from {ALGOS}")


@dataclass
class RunMetrics:
    algo: str
    workload: WorkloadSpec
    policy: BudgetPolicy
    sim_time: float
    completed: int
    latencies: list[float]
    steps: dict[str, int]
    charged: list[float] = field(repr=False, default_factory=list)
    clocks: list[float] = field(repr=False, default_factory=list)

    @property
    def throughput(self) -> float:
        """Completed lock+unlock pairs per simulated second."""
        return self.completed / (self.sim_time * 1e-9) if self.sim_time > 0 else 0.0

    def quantile(self, q: float) -> float:
        if not self.latencies:
            return 0.0
        ordered = sorted(self.latencies)
        return ordered[max(0, math.ceil(q * len(ordered)) - 1)]

    def row(self) -> list:
        w = self.workload
        return [
            self.algo, w.nodes, w.threads_per_node, w.lock_count, _num(w.locality_pct),
            self.policy.local_budget, self.policy.remote_budget,
            f"{self.throughput:.1f}", _num(self.quantile(0.5)), _num(self.quantile(0.99)),
            _num(self.quantile(0.999)), self.steps["remote"], self.steps["local"],
        ]


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.3f}"


class _LockTable:
    def __init__(self, memory: Memory, workload: WorkloadSpec, algo: Algo):
        self.memory = memory
        self.algo = algo
        n = workload.nodes
        alloc = {
            "alock": alloc_alock,
            "spinlock": baselines.alloc_spinlock,
            "mcs": baselines.alloc_mcs,
        }[algo.name]
        # lock k lives on node k % nodes
        self.locks = [alloc(memory, k % n) for k in range(workload.lock_count)]
        self.by_node = [[k for k in range(workload.lock_count) if k % n == node] for node in range(n)]
        self.handles: dict[tuple[int, int], object] = {}

    def handle(self, actor: Actor, k: int):
        key = (actor.id, k)
        h = self.handles.get(key)
        if h is None:
            lock = self.locks[k]
            if self.algo.name == "alock":
                h = make_handle(self.memory, actor, lock, self.algo.policy)
            elif self.algo.name == "mcs":
                h = baselines.make_mcs_handle(self.memory, actor, lock)
            else:
                h = baselines.SpinHandle(actor, lock)
            self.handles[key] = h
        return h

    def acquire(self, h):
        if self.algo.name == "alock":
            return alock_lock(h)
        if self.algo.name == "mcs":
            return baselines.mcs_lock(h)
        return baselines.spin_lock(h)

    def release(self, h):
        if self.algo.name == "alock":
            return alock_unlock(h)
        if self.algo.name == "mcs":
            return baselines.mcs_unlock(h)
        return baselines.spin_unlock(h)


def _thread(table: _LockTable, actor: Actor, workload: WorkloadSpec, rng: random.Random):
    local = table.by_node[actor.node]
    remote = [k for node, ks in enumerate(table.by_node) if node != actor.node for k in ks]
    while True:
        if not remote or rng.random() * 100 < workload.locality_pct:
            k = rng.choice(local)
        else:
            k = rng.choice(remote)
        h = table.handle(actor, k)
        yield Mark("start")
        yield from table.acquire(h)
        yield Mark("cs")
        yield from table.release(h)
        yield Mark("done")


def run(
    workload: WorkloadSpec,
    model: LatencyModel | None = None,
    algo: Algo | str = "alock",
    max_idle_events: int = 2_000_000,
) -> RunMetrics:
    """Simulate ``workload.duration`` ns; deterministic in its inputs."""
    model = model or LatencyModel()
    algo = Algo(algo) if isinstance(algo, str) else algo
    n_threads = workload.nodes * workload.threads_per_node
    memory = Memory(workload.nodes, arena_words=1 << 24)
    table = _LockTable(memory, workload, algo)
    actors = [Actor(i, i // workload.threads_per_node) for i in range(n_threads)]
    procs = []
    for a in actors:
        rng = random.Random(f"{workload.seed}:{a.id}")
        procs.append(Process(a, _thread(table, a, workload, rng)))

    in_flight = [0] * workload.nodes
    qps: list[set[int]] = [set() for _ in range(workload.nodes)]
    charged = [0.0] * n_threads
    clocks = [0.0] * n_threads
    started = [0.0] * n_threads
    nic_of: list[int | None] = [None] * n_threads
    latencies: list[float] = []
    heap: list[tuple[float, int, int]] = []
    seq = 0

    def issue(i: int, now: float, extra: float = 0.0) -> None:
        nonlocal seq
        proc = procs[i]
        op = proc.pending
        if proc.op_class() is AccessClass.LOCAL:
            cost = model.local_op_cost
            nic_of[i] = None
        else:
            nic = op.target >> 60
            base = model.loopback_op_cost if nic == proc.actor.node else model.remote_op_cost
            qps[nic].add(proc.actor.id)
            in_flight[nic] += 1
            nic_of[i] = nic
            cost = base * model.penalty(in_flight[nic], len(qps[nic]))
        delay = extra + cost
        charged[i] += delay
        clocks[i] = now + delay
        seq += 1
        heapq.heappush(heap, (clocks[i], i, seq))

    for i in range(n_threads):
        if "start" in procs[i].new_marks:
            started[i] = 0.0
        issue(i, 0.0)

    completed = 0
    idle = 0
    end = workload.duration if n_threads else 0.0
    while heap and heap[0][0] <= end:
        now, i, _ = heapq.heappop(heap)
        if nic_of[i] is not None:
            in_flight[nic_of[i]] -= 1
        proc = procs[i]
        proc.run_op(memory)
        idle += 1
        extra = 0.0
        for mark in proc.new_marks:
            if mark == "cs":
                extra += workload.cs_cost
            elif mark == "done":
                latencies.append(now - started[i])
                completed += 1
                idle = 0
            elif mark == "start":
                started[i] = now
        if idle > max_idle_events:
            raise LivelockError(f"no operation completed in {max_idle_events} events ({algo.name})")
        issue(i, now, extra)

    steps = {"local": memory.counts[AccessClass.LOCAL], "remote": memory.counts[AccessClass.REMOTE]}
    return RunMetrics(algo.name, workload, algo.policy, end, completed, latencies, steps, charged, clocks)


@dataclass(frozen=True)
class Cdf:
    points: tuple[tuple[float, float], ...]

    @property
    def empty(self) -> bool:
        return not self.points

    def csv(self) -> str:
        if self.empty:
            return "latency,cdf\n# empty\n"
        return "latency,cdf\n" + "".join(f"{_num(x)},{p:.6f}\n" for x, p in self.points)


def latency_cdf(metrics: RunMetrics | Iterable[float]) -> Cdf:
    """Step CDF: one point per distinct latency, holding the fraction at or below it."""
    samples = sorted(metrics.latencies if isinstance(metrics, RunMetrics) else metrics)
    n = len(samples)
    points = []
    for idx, x in enumerate(samples):
        if idx + 1 == n or samples[idx + 1] != x:
            points.append((x, (idx + 1) / n))
    return Cdf(tuple(points))


def budget_sweep(
    base: WorkloadSpec,
    model: LatencyModel | None = None,
    local_budgets: Iterable[int] = (5,),
    remote_budgets: Iterable[int] = (5, 10, 20),
    localities: Iterable[float] = (95, 90, 85),
) -> dict[tuple[int, int], float]:
    """Throughput of each (local, remote) budget cell relative to (5, 5).

    The ratio is taken per locality level and then averaged.
    """
    local_budgets, remote_budgets = list(local_budgets), list(remote_budgets)
    localities = list(localities)
    if 5 not in local_budgets or 5 not in remote_budgets:
        raise ValueError("the sweep must include the (5, 5) baseline cell")
    tput: dict[tuple[int, int, float], float] = {}
    for lb, rb, loc in product(local_budgets, remote_budgets, localities):
        w = replace(base, locality_pct=loc)
        tput[lb, rb, loc] = run(w, model, Algo("alock", BudgetPolicy(lb, rb))).throughput
    table = {}
    for lb, rb in product(local_budgets, remote_budgets):
        ratios = [tput[lb, rb, loc] / tput[5, 5, loc] for loc in localities]
        table[lb, rb] = sum(ratios) / len(ratios)
    return table


def metrics_csv(rows: Iterable[RunMetrics]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for m in rows:
        writer.writerow(m.row())
    return buf.getvalue()


def sweep_csv(table: dict[tuple[int, int], float]) -> str:
    lines = ["budget_l,budget_r,speedup"]
    lines += [f"{lb},{rb},{ratio:.4f}" for (lb, rb), ratio in sorted(table.items())]
    return "\n".join(lines) + "\n"


def long_format(rows: Iterable[RunMetrics]) -> str:
    """Whitespace-separated ``algo threads locality throughput`` lines for gnuplot."""
    out = []
    for m in rows:
        w = m.workload
        out.append(f"{m.algo} {w.threads_per_node} {_num(w.locality_pct)} {m.throughput:.1f}")
    return "\n".join(out) + "\n"


def describe(workload: WorkloadSpec, model: LatencyModel) -> dict:
    return {**asdict(workload), **asdict(model)}
