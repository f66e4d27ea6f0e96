import pytest

from alock import baselines
from alock.bench import (
    CSV_HEADER, Algo, LatencyModel, WorkloadSpec, budget_sweep, latency_cdf, metrics_csv, run,
)
from alock.core import BudgetPolicy, alloc_alock, lock, make_handle, unlock
from alock.memory import Actor, Memory
from alock.sched import Process

SMALL = WorkloadSpec(nodes=2, threads_per_node=3, lock_count=10, locality_pct=80, duration=100_000)


def _price(program, actor, model):
    """Cost of one uncontended pass, pricing each op by class (a CAS counts once)."""
    m = Memory(2)
    obj = program(m)
    p = Process(actor, obj)
    total = 0.0
    while not p.done:
        local = p.op_class().value == "L"
        total += model.local_op_cost if local else model.loopback_op_cost
        p.run_op(m)
    return total


def _alock_pass(m):
    h = make_handle(m, Actor(0, 0), alloc_alock(m, 0))
    yield from lock(h)
    yield from unlock(h)


def _mcs_pass(m):
    h = baselines.make_mcs_handle(m, Actor(0, 0), baselines.alloc_mcs(m, 0))
    yield from baselines.mcs_lock(h)
    yield from baselines.mcs_unlock(h)


def test_single_thread_matches_analytic_cost():
    model = LatencyModel()
    w = WorkloadSpec(nodes=1, threads_per_node=1, lock_count=20, duration=1_000_000)
    for algo, prog in (("alock", _alock_pass), ("mcs", _mcs_pass)):
        per_op = _price(prog, Actor(0, 0), model) + w.cs_cost
        m = run(w, model, algo)
        assert m.completed == int(w.duration // per_op)
        assert m.quantile(0.5) == per_op


def test_alock_headroom_over_mcs_at_full_locality():
    model = LatencyModel()
    bound = (_price(_mcs_pass, Actor(0, 0), model) + 100) / (_price(_alock_pass, Actor(0, 0), model) + 100)
    w = WorkloadSpec(nodes=1, threads_per_node=8, lock_count=20, duration=500_000)
    ratio = run(w, model, "alock").throughput / run(w, model, "mcs").throughput
    assert ratio >= bound


def test_zero_threads():
    m = run(WorkloadSpec(threads_per_node=0))
    assert (m.completed, m.sim_time, m.throughput, m.latencies) == (0, 0.0, 0.0, [])
    assert latency_cdf(m).empty and "# empty" in latency_cdf(m).csv()


@pytest.mark.parametrize("algo", ["alock", "spinlock", "mcs"])
def test_deterministic(algo):
    a, b = run(SMALL, algo=algo), run(SMALL, algo=algo)
    assert metrics_csv([a]) == metrics_csv([b]) and a.latencies == b.latencies


def test_seed_changes_run():
    other = WorkloadSpec(**{**SMALL.__dict__, "seed": 7})
    assert run(SMALL).latencies != run(other).latencies


def test_throughput_definition_and_conservation():
    m = run(SMALL, algo="mcs")
    assert m.throughput == pytest.approx(m.completed / (m.sim_time * 1e-9))
    for charged, clock in zip(m.charged, m.clocks):
        assert charged == pytest.approx(clock) and clock >= m.sim_time
    assert min(m.latencies) > 0


def test_full_locality_has_no_remote_steps():
    w = WorkloadSpec(nodes=3, threads_per_node=4, lock_count=12, locality_pct=100, duration=100_000)
    m = run(w, algo="alock")
    assert m.steps["remote"] == 0 and m.completed > 0


@pytest.mark.parametrize("algo", ["alock", "spinlock", "mcs"])
def test_raising_remote_cost_never_helps(algo):
    slow = LatencyModel(remote_op_cost=3000.0)
    assert run(SMALL, LatencyModel(), algo).throughput >= run(SMALL, slow, algo).throughput


def test_cdf_shape():
    cdf = latency_cdf(run(SMALL, algo="spinlock"))
    xs = [x for x, _ in cdf.points]
    ps = [p for _, p in cdf.points]
    assert xs == sorted(set(xs)) and ps == sorted(ps) and ps[-1] == 1.0


def test_cdf_of_equal_samples_is_one_step():
    assert latency_cdf([5.0, 5.0, 5.0]).points == ((5.0, 1.0),)


def test_penalty_monotone():
    m = LatencyModel()
    vals = [m.penalty(i, c) for i in range(20) for c in (0, 100)]
    assert m.penalty(0, 0) == 1.0
    assert all(m.penalty(i, 10) <= m.penalty(i + 1, 10) for i in range(30))
    assert all(m.penalty(3, c) <= m.penalty(3, c + 1) for c in range(200))
    assert min(vals) >= 1.0


def test_spec_validation():
    with pytest.raises(ValueError):
        WorkloadSpec(locality_pct=101)
    with pytest.raises(ValueError):
        LatencyModel(local_op_cost=10, remote_op_cost=5)
    with pytest.raises(ValueError):
        Algo("ticket")


def test_baseline_cell_is_unity():
    base = WorkloadSpec(nodes=2, threads_per_node=2, lock_count=10, duration=50_000)
    table = budget_sweep(base, remote_budgets=[5, 20], localities=[90])
    assert table[5, 5] == 1.0 and set(table) == {(5, 5), (5, 20)}


def test_sweep_requires_baseline():
    with pytest.raises(ValueError):
        budget_sweep(SMALL, local_budgets=[5], remote_budgets=[10])


def test_csv_header_and_row():
    text = metrics_csv([run(SMALL, algo=Algo("alock", BudgetPolicy(5, 20)))])
    header, row = text.splitlines()
    assert header == ",".join(CSV_HEADER)
    assert row.startswith("alock,2,3,10,80,5,20,")
