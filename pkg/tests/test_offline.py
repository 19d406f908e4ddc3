import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from algoportfolio.core import RESTART, SR, CoverageState, Schedule, evaluate
from algoportfolio.offline import (
    OracleBudgetError,
    best_single_heuristic,
    candidate_durations,
    greedy_cost,
    greedy_schedule,
    greedy_step,
    optimal_schedule_oracle,
    parallel_schedule,
    single_heuristic_schedule,
)

from conftest import det_instances, sampled_instance


def pairs(schedule):
    return [(s.heuristic, s.tau) for s in schedule.segments]


def test_greedy_three_by_two(three_by_two):
    schedule, trace = greedy_schedule(three_by_two, SR, 10)
    assert pairs(schedule) == [(1, 1), (1, 1), (0, 2)]
    assert trace.densities == pytest.approx([1.0, 1.0, 0.5])
    assert evaluate(schedule, three_by_two, 10) == 7


def test_greedy_single_heuristic_walks_distinct_times():
    xs = det_instances((3,), (1,), (3,), (7,))
    schedule, _ = greedy_schedule(xs, SR, 20)
    assert pairs(schedule) == [(0, 1), (0, 2), (0, 4)]
    assert evaluate(schedule, xs, 20) == 1 + 3 + 3 + 7


def test_greedy_empty_instance_set():
    schedule, trace = greedy_schedule([], SR, 10)
    assert schedule.segments == () and trace.steps == []


def test_greedy_respects_length_cap(three_by_two):
    schedule, _ = greedy_schedule(three_by_two, SR, 3)
    assert schedule.length <= 3


def test_greedy_tie_breaks_to_smaller_tau_then_index():
    # both heuristics solve the only instance at time 2: density 1/2 either way
    xs = det_instances((2, 2))
    schedule, _ = greedy_schedule(xs, SR, 10)
    assert pairs(schedule) == [(0, 2)]
    # a 1-unit run and a 2-unit run with equal density: the shorter wins
    xs = det_instances((1, 2), (9, 2))
    step = greedy_step(CoverageState.empty(2, 2), xs, SR)
    assert (step.segment.heuristic, step.segment.tau) == (0, 1)


def test_candidate_durations_are_residual_sample_times():
    x = sampled_instance("x", [[2, 5, None]])
    state = CoverageState((1.0,), (2,))
    assert candidate_durations(0, state, [x], [SR]) == [3]
    assert candidate_durations(0, CoverageState((1.0,), (0,)), [x], [RESTART]) == [2, 5]


def test_greedy_trace_keeps_candidates(three_by_two):
    _, trace = greedy_schedule(three_by_two, SR, 10, keep_candidates=True)
    assert trace.steps[0].candidates


def test_oracle_examples(three_by_two, tied_pair):
    best = optimal_schedule_oracle(three_by_two, SR, 10)
    assert evaluate(best, three_by_two, 10) == 7
    best = optimal_schedule_oracle(tied_pair, SR, 10)
    assert pairs(best) == [(0, 3)] and evaluate(best, tied_pair, 10) == 3


def test_oracle_rejects_big_inputs():
    xs = det_instances(*[(1, 2, 3, 4)] * 2)
    with pytest.raises(OracleBudgetError):
        optimal_schedule_oracle(xs, SR, 10)
    with pytest.raises(OracleBudgetError):
        optimal_schedule_oracle(det_instances((1,)), SR, 10, max_segments=7)


def test_best_single_examples(three_by_two):
    assert best_single_heuristic(three_by_two, 10) == (1, 8.0)
    assert best_single_heuristic(det_instances((4,)), 10) == (0, 4.0)
    assert best_single_heuristic(det_instances((3, 3)), 10)[0] == 0


def test_parallel_schedule_examples(tied_pair):
    s = parallel_schedule(2, SR, 1, 4)
    assert pairs(s) == [(0, 1), (1, 1), (0, 1), (1, 1)]
    assert parallel_schedule(1, SR, 1, 3).length == 3
    # both heuristics need 3: h0 finishes at the 5th unit of round-robin
    assert evaluate(parallel_schedule(2, SR, 1, 10), tied_pair, 10) == 5
    assert evaluate(parallel_schedule(2, SR, 1, 10), tied_pair[::-1], 10) in (5, 6)
    with pytest.raises(ValueError):
        parallel_schedule(2, SR, 0, 4)


def test_single_heuristic_schedule():
    s = single_heuristic_schedule(1, 3, 9)
    assert pairs(s) == [(1, 9)]


def brute_optimum(xs, k, cap, max_segments):
    """Minimum cost over every suspend-resume schedule with integer durations."""
    best = evaluate(Schedule((), (SR,) * k), xs, cap)
    for n in range(1, max_segments + 1):
        for hs in itertools.product(range(k), repeat=n):
            for taus in itertools.product(range(1, cap + 1), repeat=n):
                if sum(taus) > cap:
                    continue
                best = min(best, evaluate(Schedule.of(zip(hs, taus), SR, k), xs, cap))
    return best


det_rows = st.lists(st.tuples(st.integers(1, 6), st.one_of(st.none(), st.integers(1, 6))), min_size=1, max_size=3)


@given(det_rows, st.integers(3, 6))
def test_oracle_matches_brute_force(rows, cap):
    xs = det_instances(*rows, limit=cap)
    got = evaluate(optimal_schedule_oracle(xs, SR, cap, max_segments=3), xs, cap)
    assert got == pytest.approx(brute_optimum(xs, 2, cap, 3), abs=1e-9)


sampled = st.lists(st.one_of(st.none(), st.integers(1, 8)), min_size=1, max_size=3)


@st.composite
def small_inputs(draw):
    k = draw(st.integers(1, 3))
    n = draw(st.integers(1, 3))
    xs = [sampled_instance(f"x{i}", [draw(sampled) for _ in range(k)]) for i in range(n)]
    models = [draw(st.sampled_from([SR, RESTART])) for _ in range(k)]
    return xs, models, draw(st.integers(2, 12))


@given(small_inputs())
def test_greedy_is_deterministic(inp):
    xs, models, cap = inp
    a = greedy_schedule(xs, models, cap)
    b = greedy_schedule(xs, models, cap)
    assert pairs(a[0]) == pairs(b[0]) and a[1].densities == b[1].densities


@given(small_inputs())
def test_greedy_not_worse_than_best_single(inp):
    xs, _, cap = inp
    models = [SR] * xs[0].k
    _, single = best_single_heuristic(xs, cap)
    assert greedy_cost(xs, models, cap) <= single + 1e-9


@given(small_inputs())
def test_restart_density_non_increasing(inp):
    xs, _, cap = inp
    _, trace = greedy_schedule(xs, RESTART, cap)
    d = trace.densities
    assert all(b <= a + 1e-9 for a, b in zip(d, d[1:]))


@given(small_inputs())
def test_oracle_never_worse_than_greedy(inp):
    xs, models, cap = inp
    greedy = greedy_cost(xs, models, cap)
    best = evaluate(optimal_schedule_oracle(xs, models, cap, max_segments=4), xs, cap)
    # the oracle is limited to 4 segments; compare with a greedy prefix of the same size
    g4 = evaluate(greedy_schedule(xs, models, cap)[0].prefix(4), xs, cap)
    assert best <= g4 + 1e-9
    assert greedy <= g4 + 1e-9
