from collections import Counter

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from alock.checker import CheckerConfig, explore, make_model, run_checks
from alock.checker.models import them, us

# reachable state counts, frozen from full exploration
STATE_COUNTS = {(1, 1): 33, (2, 1): 730, (2, 2): 730}


def by_name(result):
    return {r.name: r for r in result.required + result.informational}


def test_cohort_helpers():
    assert [us(p) for p in (1, 2, 3, 4)] == [2, 1, 2, 1]
    assert [them(p) for p in (1, 2, 3, 4)] == [1, 2, 1, 2]


def test_single_process_graph_is_one_cycle():
    g = explore(make_model("alock", 1, 1))
    assert len(g) == 33 and g.complete
    assert set(Counter(g.src.tolist()).values()) == {1}
    adj = csr_matrix((np.ones(len(g.src)), (g.src, g.dst)), shape=(len(g), len(g)))
    n, labels = connected_components(adj, directed=True, connection="strong")
    sizes = Counter(labels.tolist())
    cyclic = [c for c, k in sizes.items() if k > 1]
    assert len(cyclic) == 1
    on_cycle = {g.pc(s, 1) for s in range(len(g)) if labels[s] == cyclic[0]}
    assert {"ncs", "cs", "c1", "swap", "cas"} <= on_cycle


@pytest.mark.parametrize("np_,b", sorted(STATE_COUNTS))
def test_state_counts(np_, b):
    assert len(explore(make_model("alock", np_, b))) == STATE_COUNTS[np_, b]


def test_budget_only_matters_with_a_cohort_peer():
    # with one process per cohort budgets never pass, so B only relabels states
    assert len(explore(make_model("alock", 2, 2))) == len(explore(make_model("alock", 2, 1)))


@pytest.mark.slow
def test_budget_grows_state_space_at_three_processes():
    assert len(explore(make_model("alock", 3, 2))) > len(explore(make_model("alock", 3, 1)))


def test_np2_all_required_hold():
    r = run_checks(CheckerConfig(2, 1))
    assert r.ok and r.complete
    names = [p.name for p in r.required]
    assert names == ["MutualExclusion", "StarvationFree", "DeadAndLivelockFree", "CohortFairness", "GlobalFairness"]


def test_execs_cs_fails_only_through_ncs_parking():
    r = by_name(run_checks(CheckerConfig(2, 1)))["ExecsCriticalSectionInfinitelyOften"]
    assert not r.holds
    assert "ncs" in r.note


@pytest.mark.parametrize(
    "mutation,broken",
    [
        ("no_victim_write", "MutualExclusion"),
        ("skip_next_wait", "StarvationFree"),
        ("no_decrement", "StarvationFree"),
    ],
)
def test_mutations_caught_with_counterexample(mutation, broken):
    r = run_checks(CheckerConfig(3, 1, mutations=frozenset({mutation})))
    rep = by_name(r)[broken]
    assert not r.ok and not rep.holds
    assert rep.counterexample()


def test_spinlock_is_not_starvation_free():
    r = by_name(run_checks(CheckerConfig(3, 1, algo="spinlock")))
    assert r["MutualExclusion"].holds and r["DeadAndLivelockFree"].holds
    assert not r["StarvationFree"].holds and not r["FIFO"].holds


def test_mcs_is_fifo_and_starvation_free():
    r = run_checks(CheckerConfig(3, 1, algo="mcs"))
    assert r.ok and by_name(r)["FIFO"].holds


def test_state_cap_refuses_liveness():
    r = run_checks(CheckerConfig(2, 1, max_states=50))
    assert not r.complete and not r.ok
    assert any(p.partial for p in r.required)


def test_report_line_format():
    r = run_checks(CheckerConfig(2, 1))
    assert r.lines()[0] == "property=MutualExclusion verdict=holds states=730"


def test_config_validation():
    with pytest.raises(ValueError):
        CheckerConfig(0, 1)
    with pytest.raises(ValueError):
        CheckerConfig(2, 0)
