"""Reproducible synthetic runtime data.

Decision data: instances fall into clusters, each cluster has a home heuristic
that is fast on it; other heuristics are slow or never finish.  A ``tail_rate``
fraction of instances defeat the home heuristic and are solved quickly by a
backup heuristic instead.  Every run is randomised: a home (or tail backup)
run is fast with probability ``home_rate``, any other run with probability
``other_rate``; runs that are not fast are slow or hang.  ``samples`` runs are
recorded per pair and each time is jittered by ``noise``.

Anytime data: every instance has a home heuristic that reaches each objective
quickly.  Elsewhere a heuristic takes a fast step towards its specialist
objective with probability ``specialist_rate`` and towards any other objective
with probability ``good_rate``; objective times accumulate, so they nest.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .anytime import ObjectiveSpec
from .core import Instance, RuntimeProfile
from .data import AnytimeData, Dataset, InputError
from .experts import ALWAYS
from .offline import best_single_heuristic

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class SynthSpec:
    kind: str = "decision"
    n_instances: int = 200
    n_heuristics: int = 4
    clusters: int = 2
    fast: tuple[int, int] = (1, 4)
    slow: tuple[int, int] = (20, 60)
    slow_censor_rate: float = 0.5
    tail_rate: float = 0.0
    samples: int = 1
    noise: float = 0.0
    home_rate: float = 1.0
    other_rate: float = 0.0
    limit: int = 64
    features: bool = True
    unit: str = "ticks"
    objectives: list[str] = field(default_factory=lambda: ["feasible", "optimal", "proof"])
    good_rate: float = 0.25
    specialist_rate: float = 0.6

    def __post_init__(self):
        self.fast = tuple(self.fast)
        self.slow = tuple(self.slow)
        self.objectives = list(self.objectives)
        if self.kind not in ("decision", "anytime"):
            raise InputError(f"unknown synth kind {self.kind!r}")
        if self.n_instances < 1 or self.n_heuristics < 1 or self.clusters < 1 or self.samples < 1:
            raise InputError("sizes must be positive")
        if not (0 <= self.home_rate <= 1 and 0 <= self.other_rate <= 1):
            raise InputError("rates must lie in [0, 1]")
        for lo, hi in (self.fast, self.slow):
            if not 1 <= lo <= hi:
                raise InputError(f"bad time range ({lo}, {hi})")
        if self.fast[1] > self.limit:
            raise InputError("fast times must fit under the limit")


def load_spec(path, **overrides) -> SynthSpec:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise InputError(f"{path}: {e}") from None
    raw.update({k: v for k, v in overrides.items() if v is not None})
    names = {f.name for f in fields(SynthSpec)}
    unknown = set(raw) - names
    if unknown:
        raise InputError(f"unknown synth keys {sorted(unknown)}")
    return SynthSpec(**raw)


def _run_time(rng, fast_rate: float, spec: SynthSpec) -> int | None:
    if rng.random() < fast_rate:
        base = int(rng.integers(spec.fast[0], spec.fast[1] + 1))
    elif rng.random() < spec.slow_censor_rate:
        return None
    else:
        base = int(rng.integers(spec.slow[0], spec.slow[1] + 1))
    if spec.noise:
        base = max(1, int(round(base * float(np.exp(spec.noise * rng.standard_normal())))))
    return base if base <= spec.limit else None


def _profile(rng, fast_rate: float, spec: SynthSpec) -> RuntimeProfile:
    times = [_run_time(rng, fast_rate, spec) for _ in range(spec.samples)]
    return RuntimeProfile.from_records([(t is not None, spec.limit if t is None else t) for t in times])


def home_heuristics(spec: SynthSpec) -> list[tuple[int, int]]:
    """(home, backup) heuristic of every cluster."""
    k, c = spec.n_heuristics, spec.clusters
    out = []
    for j in range(c):
        home = j % k
        backup = (j + c) % k if c < k else (home + 1) % k
        out.append((home, backup))
    return out


def generate_decision(spec: SynthSpec, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    roles = home_heuristics(spec)
    instances = []
    clusters = []
    for i in range(spec.n_instances):
        c = int(rng.integers(spec.clusters))
        home, backup = roles[c]
        tail = spec.tail_rate > 0 and rng.random() < spec.tail_rate
        profiles = []
        for h in range(spec.n_heuristics):
            strong = h == (backup if tail else home)
            profiles.append(_profile(rng, spec.home_rate if strong else spec.other_rate, spec))
        if not any(p.solved for p in profiles):
            profiles[home] = RuntimeProfile((spec.fast[1],))
        feats = {ALWAYS}
        if spec.features:
            feats.add(f"cluster{c}")
        instances.append(Instance(f"x{i:04d}", tuple(profiles), 1.0, frozenset(feats)))
        clusters.append(c)
    notes = [f"time unit: {spec.unit}", f"seed: {seed}"]
    for c in range(spec.clusters):
        members = [x for x, cc in zip(instances, clusters) if cc == c]
        if members:
            h, _ = best_single_heuristic(members, spec.limit)
            notes.append(f"cluster{c} best heuristic: h{h}")
    heuristics = [f"h{h}" for h in range(spec.n_heuristics)]
    return Dataset(instances, heuristics, spec.limit, notes)


def generate_anytime(spec: SynthSpec, seed: int) -> AnytimeData:
    rng = np.random.default_rng(seed)
    n_obj = len(spec.objectives)
    values: dict[str, dict] = {o: {} for o in spec.objectives}
    ids = [f"x{i:04d}" for i in range(spec.n_instances)]
    for iid in ids:
        home = int(rng.integers(spec.n_heuristics))
        for h in range(spec.n_heuristics):
            t: int | None = 0
            for j, o in enumerate(spec.objectives):
                if h == home:
                    rate = 1.0
                else:
                    rate = spec.specialist_rate if j == h % n_obj else spec.good_rate
                if rng.random() < rate:
                    d = int(rng.integers(spec.fast[0], spec.fast[1] + 1))
                elif rng.random() < spec.slow_censor_rate:
                    d = None
                else:
                    d = int(rng.integers(spec.slow[0], spec.slow[1] + 1))
                t = None if d is None or t is None or t + d > spec.limit else t + d
                values[o][(iid, h)] = RuntimeProfile.deterministic(t, spec.limit)
    objectives = [ObjectiveSpec(o, 1.0 / n_obj, values[o]) for o in spec.objectives]
    instances = [
        Instance(iid, tuple(objectives[0].times[(iid, h)] for h in range(spec.n_heuristics)))
        for iid in ids
    ]
    return AnytimeData(instances, [f"h{h}" for h in range(spec.n_heuristics)], objectives, spec.limit)


def synth_generate(spec: SynthSpec, seed: int):
    if spec.kind == "anytime":
        return generate_anytime(spec, seed)
    return generate_decision(spec, seed)


def spec_dict(spec: SynthSpec) -> dict:
    return asdict(spec)
