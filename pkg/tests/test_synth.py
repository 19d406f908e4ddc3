import pytest

from algoportfolio.data import InputError, load_runtimes, runtimes_csv
from algoportfolio.experts import ALWAYS
from algoportfolio.synth import SynthSpec, generate_decision, home_heuristics, load_spec, spec_dict, synth_generate


def test_same_seed_same_data():
    spec = SynthSpec(n_instances=30, samples=3, noise=0.3, home_rate=0.8, other_rate=0.2)
    a = runtimes_csv(generate_decision(spec, 4))
    assert a == runtimes_csv(generate_decision(spec, 4))
    assert a != runtimes_csv(generate_decision(spec, 5))


def test_noise_free_single_cluster_is_deterministic():
    ds = generate_decision(SynthSpec(n_instances=20, clusters=1), 0)
    assert all(p.n_samples == 1 for x in ds.instances for p in x.profiles)
    # the home heuristic always solves within the fast range
    assert all(1 <= x.profiles[0].solved[0] <= 4 for x in ds.instances)


def test_clusters_and_features():
    spec = SynthSpec(n_instances=60, clusters=3, n_heuristics=4)
    ds = generate_decision(spec, 1)
    assert ds.k == 4 and ds.n == 60
    assert ds.features() == [ALWAYS, "cluster0", "cluster1", "cluster2"]
    assert home_heuristics(spec) == [(0, 3), (1, 0), (2, 1)]
    assert any("cluster0 best heuristic: h0" == n for n in ds.notes)


def test_generated_data_round_trips_through_csv():
    ds = generate_decision(SynthSpec(n_instances=15, samples=2, home_rate=0.7), 2)
    text = runtimes_csv(ds)
    assert runtimes_csv(load_runtimes(text)) == text


def test_anytime_kind_nests():
    data = synth_generate(SynthSpec(kind="anytime", n_instances=10), 0)
    for x in data.instances:
        for h in range(len(data.heuristics)):
            times = [o.times[(x.id, h)] for o in data.objectives]
            reached = [p.solved[0] if p.solved else None for p in times]
            seen_none = False
            prev = 0
            for t in reached:
                if t is None:
                    seen_none = True
                    continue
                assert not seen_none and t >= prev
                prev = t


def test_load_spec_with_overrides(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text('n_instances = 12\nfast = [2, 3]\nunit = "seconds"\n')
    spec = load_spec(p, n_instances=7, clusters=None)
    assert spec.n_instances == 7 and spec.fast == (2, 3) and spec.unit == "seconds"
    assert spec_dict(spec)["fast"] == (2, 3)
    p.write_text("bogus = 1\n")
    with pytest.raises(InputError):
        load_spec(p)
    p.write_text("n_instances = \n")
    with pytest.raises(InputError):
        load_spec(p)


@pytest.mark.parametrize(
    "kw",
    [{"kind": "other"}, {"n_instances": 0}, {"fast": (3, 2)}, {"fast": (1, 100)}, {"home_rate": 1.5}],
)
def test_bad_specs(kw):
    with pytest.raises(InputError):
        SynthSpec(**kw)
