import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from algoportfolio.anytime import ObjectiveSpec, expand_instances, speedup_csv, speedup_factors, uniform_objectives
from algoportfolio.core import SR, Instance, RuntimeProfile, Schedule, evaluate, expected_capped_time
from algoportfolio.synth import SynthSpec, generate_anytime


def base(ids, k):
    return [Instance(i, tuple(RuntimeProfile((1,)) for _ in range(k))) for i in ids]


def objectives_from(table, names, weights=None):
    """``table[name][(id, h)]`` = time or None."""
    out = []
    for j, o in enumerate(names):
        times = {key: RuntimeProfile.deterministic(t, 50) for key, t in table[o].items()}
        out.append(ObjectiveSpec(o, weights[j] if weights else 1 / len(names), times))
    return out


def test_single_heuristic_three_objectives():
    names = ["f", "o", "p"]
    table = {o: {("x", 0): t} for o, t in zip(names, (2, 5, 9))}
    xs = expand_instances(base(["x"], 1), objectives_from(table, names))
    s = Schedule.of([(0, 20)], [SR])
    assert evaluate(s, xs, 20) == pytest.approx(16 / 3)
    assert [x.id for x in xs] == ["x#f", "x#o", "x#p"]
    assert [x.weight for x in xs] == pytest.approx([1 / 3] * 3)


def test_single_objective_keeps_ids():
    table = {"only": {("x", 0): 3}}
    xs = expand_instances(base(["x"], 1), objectives_from(table, ["only"], [1.0]))
    assert [x.id for x in xs] == ["x"] and xs[0].weight == 1.0


def test_missing_data_is_an_error():
    table = {"f": {("x", 0): 3}}
    with pytest.raises(ValueError):
        expand_instances(base(["x"], 2), objectives_from(table, ["f"]))
    with pytest.raises(ValueError):
        expand_instances(base(["x"], 1), [])
    with pytest.raises(ValueError):
        ObjectiveSpec("bad", 0.0)


def test_nesting_violation_warns_but_expands():
    table = {"f": {("x", 0): 7}, "o": {("x", 0): 3}}
    with pytest.warns(UserWarning):
        xs = expand_instances(base(["x"], 1), objectives_from(table, ["f", "o"]))
    assert len(xs) == 2
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        expand_instances(base(["x"], 1), objectives_from(table, ["f", "o"]), check_nesting=False)


def test_uniform_objectives():
    objs = uniform_objectives(["a", "b"], {"a": {}, "b": {}})
    assert [o.weight for o in objs] == [0.5, 0.5]


@st.composite
def fixtures(draw):
    n = draw(st.integers(1, 3))
    k = draw(st.integers(1, 3))
    n_obj = draw(st.integers(1, 3))
    names = [f"o{j}" for j in range(n_obj)]
    table = {o: {} for o in names}
    for i in range(n):
        for h in range(k):
            for o in names:
                table[o][(f"x{i}", h)] = draw(st.one_of(st.none(), st.integers(1, 12)))
    weights = [draw(st.integers(1, 5)) for _ in names]
    inst_w = [draw(st.integers(1, 4)) for _ in range(n)]
    pairs = draw(st.lists(st.tuples(st.integers(0, k - 1), st.integers(1, 6)), max_size=5))
    return n, k, names, table, weights, inst_w, pairs


def direct_time(pairs, times, cap):
    """Timeline walk for deterministic suspend-resume runs."""
    used = {}
    t = 0
    for h, tau in pairs:
        if t >= cap:
            break
        need = times[h]
        if need is not None and need - used.get(h, 0) <= tau:
            return min(cap, t + need - used.get(h, 0))
        used[h] = used.get(h, 0) + tau
        t += tau
    return cap


@given(fixtures(), st.integers(1, 20))
def test_expansion_equals_weighted_double_sum(fx, cap):
    n, k, names, table, weights, inst_w, pairs = fx
    total_w = sum(weights)
    objs = objectives_from(table, names, [w / total_w for w in weights])
    xs = [Instance(f"x{i}", tuple(RuntimeProfile((1,)) for _ in range(k)), inst_w[i]) for i in range(n)]
    got = evaluate(Schedule.of(pairs, SR, k), expand_instances(xs, objs, check_nesting=False), cap)
    want = Fraction(0)
    for i in range(n):
        for j, o in enumerate(names):
            times = [table[o][(f"x{i}", h)] for h in range(k)]
            want += Fraction(inst_w[i]) * Fraction(weights[j], total_w) * direct_time(pairs, times, cap)
    assert got == pytest.approx(float(want), abs=1e-9)


def clone_fixture():
    names = ["feasible", "optimal", "proof"]
    slow = {"feasible": 4, "optimal": 10, "proof": 16}
    table = {o: {} for o in names}
    ids = [f"c{i}" for i in range(4)]
    for i in ids:
        for o in names:
            table[o][(i, 0)] = slow[o]
            table[o][(i, 1)] = slow[o] // 2
    return base(ids, 2), objectives_from(table, names)


def test_clone_fixture_factor_is_one():
    xs, objs = clone_fixture()
    rows = speedup_factors(xs, objs, SR, 40)
    assert [r.fastest_heuristic for r in rows] == [1, 1, 1]
    assert [r.factor for r in rows] == [1.0, 1.0, 1.0]


def test_speedup_needs_two_instances():
    xs, objs = clone_fixture()
    with pytest.raises(ValueError):
        speedup_factors(xs[:1], objs, SR, 40)


def test_speedup_above_one_on_synthetic_data():
    data = generate_anytime(SynthSpec(kind="anytime", n_instances=40, n_heuristics=3, limit=64), 0)
    rows = speedup_factors(data.instances, data.objectives, SR, 64)
    assert all(r.factor > 1 for r in rows)
    text = speedup_csv(rows, data.heuristics)
    assert text.splitlines()[0] == "objective,fastest_heuristic,numerator,denominator,factor"


def test_leave_one_out_uses_only_other_instances():
    # two instances, each solved only by its own heuristic: the held-out one is never covered
    names = ["f"]
    table = {"f": {("a", 0): 2, ("a", 1): None, ("b", 0): None, ("b", 1): 3}}
    xs = base(["a", "b"], 2)
    rows = speedup_factors(xs, objectives_from(table, names, [1.0]), SR, 10)
    # greedy trained on "b" runs h1 for 3 then stops: "a" costs 10; symmetric for "b"
    assert rows[0].denominator == pytest.approx(10.0)
    assert rows[0].numerator == pytest.approx((2 + 10) / 2)
