"""Feature-conditioned schedule selection with sleeping experts.

Each Boolean feature is an expert that is awake exactly on instances where the
feature is true.  Every feature owns an ``OnlineGreedy`` learner that is only
ever shown instances carrying that feature; a sleeping-experts layer decides
which awake feature's proposed schedule to execute.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (
    SR,
    Instance,
    Schedule,
    as_table,
    capped_single_times,
    expected_capped_time,
    simulate_capped_time,
)
from .offline import greedy_cost
from .online import OnlineGreedy, Proposal, default_gamma

ALWAYS = "ALL"


def default_beta(n_experts: int, horizon: int) -> float:
    return 1.0 / (1.0 + math.sqrt(2.0 * math.log(max(n_experts, 1)) / max(horizon, 1)))


class SleepingExperts:
    """Multiplicative weights where only awake experts are ranked and charged.

    After an update the awake experts' total weight is restored, so mass only
    moves among experts that were awake together.
    """

    def __init__(self, experts: Sequence[str], beta: float):
        if not 0 < beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        self.experts = list(experts)
        self.index = {e: i for i, e in enumerate(self.experts)}
        self.beta = beta
        self.weights = np.ones(len(self.experts))

    def probabilities(self, awake: Iterable[str]) -> dict[str, float]:
        awake = self._awake(awake)
        w = self.weights[[self.index[e] for e in awake]]
        return dict(zip(awake, w / w.sum()))

    def _awake(self, awake: Iterable[str]) -> list[str]:
        awake = sorted(set(awake), key=self.index.__getitem__)
        if not awake:
            raise ValueError("no awake experts")
        return awake

    def select(self, awake: Iterable[str], rng: np.random.Generator) -> str:
        awake = self._awake(awake)
        if len(awake) == 1:
            return awake[0]
        w = self.weights[[self.index[e] for e in awake]]
        return awake[int(rng.choice(len(awake), p=w / w.sum()))]

    def update(self, losses: dict[str, float]) -> None:
        """Charge each awake expert ``beta ** loss``; ``losses`` keys are the awake set."""
        if not losses:
            return
        idx = [self.index[e] for e in self._awake(losses)]
        ell = np.array([losses[self.experts[i]] for i in idx], dtype=float)
        if np.any(ell < 0) or np.any(ell > 1):
            raise ValueError(f"losses must lie in [0, 1], got {ell}")
        before = self.weights[idx].sum()
        w = self.weights[idx] * self.beta**ell
        self.weights[idx] = w * (before / w.sum())


@dataclass
class RoundInfo:
    expert: str
    proposals: dict[str, Proposal]
    explore: bool
    losses: dict[str, float]
    charged_time: float
    exploration_time: int


class FeatureGreedy:
    """One online learner per feature plus the sleeping-experts combiner."""

    def __init__(
        self,
        k: int,
        features: Sequence[str],
        cap: int,
        horizon: int,
        gamma: float | None = None,
        explore_c: float = 1.0,
        beta: float | None = None,
        models=SR,
        horizons: dict[str, int] | None = None,
        **learner_kwargs,
    ):
        """``horizons`` optionally gives each feature's learner its own number of
        rounds (how often that feature is expected to be awake)."""
        self.features = list(features)
        self.cap = cap
        self.gamma = default_gamma(horizon, explore_c) if gamma is None else min(1.0, max(0.0, gamma))
        beta = default_beta(len(self.features), horizon) if beta is None else beta
        self.experts = SleepingExperts(self.features, beta)
        self.learners = {
            f: OnlineGreedy(
                k, cap, max(1, (horizons or {}).get(f, horizon)), gamma=self.gamma, models=models, **learner_kwargs
            )
            for f in self.features
        }

    def awake(self, instance: Instance) -> list[str]:
        awake = [f for f in self.features if f in instance.features]
        if not awake:
            raise ValueError(f"instance {instance.id!r} has no known true feature")
        return awake

    def propose(self, instance: Instance, rng: np.random.Generator) -> tuple[str, dict[str, Proposal]]:
        awake = self.awake(instance)
        proposals = {f: self.learners[f].propose(rng) for f in awake}
        return self.experts.select(awake, rng), proposals

    def step(self, instance: Instance, rng: np.random.Generator, gamma: float | None = None) -> RoundInfo:
        """Select, execute and (maybe) learn from one instance."""
        gamma = self.gamma if gamma is None else gamma
        chosen, proposals = self.propose(instance, rng)
        explore = bool(rng.random() < gamma)
        losses = {f: 0.0 for f in proposals}
        probe = 0
        if explore:
            for f, prop in proposals.items():
                losses[f] = expected_capped_time(prop.schedule, instance, self.cap) / self.cap
                self.learners[f].learn(instance, prop)
            probe = self.learners[chosen].exploration_cost
        self.experts.update(losses)
        charged = simulate_capped_time(proposals[chosen].schedule, instance, self.cap, rng)
        return RoundInfo(chosen, proposals, explore, losses, charged, probe)

    def schedule_for(self, instance: Instance, rng: np.random.Generator) -> Schedule:
        chosen, proposals = self.propose(instance, rng)
        return proposals[chosen].schedule


@dataclass(frozen=True)
class FeatureRow:
    feature: str
    n_instances: int
    charged_time: float
    greedy_benchmark: float

    @property
    def ratio(self) -> float:
        return self.charged_time / self.greedy_benchmark if self.greedy_benchmark > 0 else math.inf


@dataclass
class PerFeatureReport:
    rows: list[FeatureRow] = field(default_factory=list)
    rounds: list[RoundInfo] = field(default_factory=list)

    def row(self, feature: str) -> FeatureRow:
        return next(r for r in self.rows if r.feature == feature)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature", "n_instances", "charged_time", "greedy_benchmark", "ratio"])
        for r in self.rows:
            w.writerow([r.feature, r.n_instances, f"{r.charged_time:.9f}", f"{r.greedy_benchmark:.9f}", f"{r.ratio:.9f}"])
        return buf.getvalue()


def feature_universe(instances: Iterable[Instance]) -> list[str]:
    instances = list(instances)
    found = sorted({f for x in instances for f in x.features} - {ALWAYS})
    return ([ALWAYS] if any(ALWAYS in x.features for x in instances) else []) + found


def run_ogse(
    stream: Sequence[Instance],
    features: Sequence[str] | None,
    cap: int,
    seed: int | np.random.Generator = 0,
    models=SR,
    **kwargs,
) -> PerFeatureReport:
    """Play the stream and compare each feature's charge with 4x its greedy cost."""
    stream = list(stream)
    features = feature_universe(stream) if features is None else list(features)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    k = stream[0].k if stream else 1
    algo = FeatureGreedy(k, features, cap, len(stream), models=models, **kwargs)
    report = PerFeatureReport()
    charged = {f: 0.0 for f in features}
    for x in stream:
        info = algo.step(x, rng)
        report.rounds.append(info)
        for f in features:
            if f in x.features:
                charged[f] += info.charged_time
    for f in features:
        subset = [x for x in stream if f in x.features]
        bench = 4.0 * greedy_cost(subset, models, cap) if subset else 0.0
        report.rows.append(FeatureRow(f, len(subset), charged[f], bench))
    return report


class FeaturesOnly:
    """Pick one heuristic per instance: each feature advises its training-best heuristic."""

    def __init__(self, features: Sequence[str], cap: int, beta: float | None = None, horizon: int = 1):
        self.features = list(features)
        self.cap = cap
        beta = default_beta(len(self.features), horizon) if beta is None else beta
        self.experts = SleepingExperts(self.features, beta)
        self.advice: dict[str, int] = {}

    def fit(self, train: Sequence[Instance]) -> "FeaturesOnly":
        train = list(train)
        fallback = self._best(train)
        for f in self.features:
            subset = [x for x in train if f in x.features]
            self.advice[f] = self._best(subset) if subset else fallback
        for x in train:
            awake = [f for f in self.features if f in x.features]
            if awake:
                self.experts.update({f: self._time(x, self.advice[f]) / self.cap for f in awake})
        return self

    def _best(self, instances: Sequence[Instance]) -> int:
        if not instances:
            return 0
        table = as_table(instances)
        costs = [float(np.dot(table.weights, capped_single_times(table, h, self.cap))) for h in range(table.k)]
        return int(np.argmin(costs))

    def _time(self, x: Instance, h: int) -> float:
        return float(capped_single_times([x], h, self.cap)[0])

    def choose(self, x: Instance, rng: np.random.Generator) -> int:
        awake = [f for f in self.features if f in x.features]
        return self.advice[self.experts.select(awake, rng)]

    def cost(self, x: Instance, rng: np.random.Generator) -> float:
        return self._time(x, self.choose(x, rng))


def features_only_baseline(
    train: Sequence[Instance],
    test: Sequence[Instance],
    features: Sequence[str] | None,
    cap: int,
    seed: int | np.random.Generator = 0,
) -> list[tuple[str, int, float]]:
    """Per test instance: (id, heuristic run, expected capped time)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    features = feature_universe(list(train) + list(test)) if features is None else features
    model = FeaturesOnly(features, cap, horizon=len(train)).fit(train)
    out = []
    for x in test:
        h = model.choose(x, rng)
        out.append((x.id, h, model._time(x, h)))
    return out
