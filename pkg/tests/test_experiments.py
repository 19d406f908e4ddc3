import numpy as np
import pytest

from algoportfolio.core import Instance, RuntimeProfile
from algoportfolio.data import Dataset
from algoportfolio.experiments import ExperimentConfig, powers_below, run_curve, run_feature_curve
from algoportfolio.experts import ALWAYS
from algoportfolio.synth import SynthSpec, generate_decision

from conftest import det_instances


def test_powers_below():
    assert powers_below(40) == [1, 2, 4, 8, 16, 32]
    assert powers_below(2) == [1]


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(methods=("magic",))
    with pytest.raises(ValueError):
        ExperimentConfig(repetitions=0)
    with pytest.raises(ValueError):
        ExperimentConfig(m_values=[5]).resolved_m(5)


def test_best_single_leave_one_out_deterministic():
    xs = det_instances((2, 6), (4, 1), (3, 3))
    ds = Dataset(xs, ["a", "b"], None)
    report = run_curve(ds, ExperimentConfig(methods=("best-single",), m_values=[2], repetitions=6, cap=10))
    for _, m, rep, v in report.rows:
        perm = np.random.default_rng([0, m, rep]).permutation(3)
        train = [xs[i] for i in perm[:2]]
        held = xs[perm[2]]
        costs = [sum(x.profiles[h].solved[0] for x in train) for h in range(2)]
        h = int(np.argmin(costs))
        assert v == held.profiles[h].solved[0]


def test_rows_are_complete_and_sorted():
    ds = generate_decision(SynthSpec(n_instances=12), 0)
    cfg = ExperimentConfig(methods=("parallel", "greedy-sr"), m_values=[2, 4], repetitions=3)
    report = run_curve(ds, cfg)
    keys = [(r[0], r[1], r[2]) for r in report.rows]
    assert keys == [(meth, m, rep) for meth in cfg.methods for m in (2, 4) for rep in range(3)]
    assert report.to_csv().splitlines()[0] == "method,m,repetition,avg_capped_time"
    agg = report.aggregate()
    assert set(agg) == {(meth, m) for meth in cfg.methods for m in (2, 4)}


def test_serial_and_parallel_agree():
    ds = generate_decision(SynthSpec(n_instances=16, samples=2, home_rate=0.8, other_rate=0.2), 1)
    methods = ("greedy-sr", "og", "ogse", "features-only", "best-single")
    serial = run_curve(ds, ExperimentConfig(methods=methods, m_values=[2, 8], repetitions=3, seed=4))
    parallel = run_curve(ds, ExperimentConfig(methods=methods, m_values=[2, 8], repetitions=3, seed=4, workers=2))
    assert serial.to_csv() == parallel.to_csv()


def test_feature_methods_need_features():
    ds = Dataset(det_instances((1, 2), (2, 1), (3, 3)), ["a", "b"])
    with pytest.raises(ValueError):
        run_curve(ds, ExperimentConfig(methods=("ogse",), m_values=[1], repetitions=1))


def test_always_only_feature_curve_tracks_plain_online():
    ds = generate_decision(SynthSpec(n_instances=40, features=False), 3)
    cfg = ExperimentConfig(methods=("ogse", "og"), m_values=[16], repetitions=30, seed=2)
    agg = run_curve(ds, cfg).aggregate()
    assert agg[("ogse", 16)] == pytest.approx(agg[("og", 16)], rel=0.15)


def test_feature_curve_m1_runs():
    ds = generate_decision(SynthSpec(n_instances=20), 0)
    report = run_feature_curve(ds, ExperimentConfig(methods=("features-only", "parallel"), m_values=[1], repetitions=5))
    assert len(report.rows) == 10


def test_greedy_beats_baselines_with_enough_training():
    spec = SynthSpec(fast=(2, 12), slow_censor_rate=0.6, tail_rate=0.1, limit=100)
    ds = generate_decision(spec, 0)
    cfg = ExperimentConfig(methods=("greedy-sr", "best-single", "parallel"), m_values=[64], repetitions=10)
    agg = run_curve(ds, cfg).aggregate()
    assert agg[("greedy-sr", 64)] < min(agg[("best-single", 64)], agg[("parallel", 64)])
