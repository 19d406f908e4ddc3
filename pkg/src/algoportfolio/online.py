"""Online schedule selection.

Instances arrive one at a time and each must be solved (or given up on at the
cap ``B``) before the next is seen.  The learner keeps one multiplicative
weights distribution per schedule slot over a grid of ``(heuristic, 2**i)``
actions.  A schedule is built by sampling one action per slot.  With
probability ``gamma`` a round explores: every slot's learner is credited, for
every action, with the probability that the action would solve the instance
after the already-sampled earlier slots, divided by its duration.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (
    RESTART,
    SR,
    ExecutionModel,
    Instance,
    RunSegment,
    Schedule,
    _as_models,
    evaluate,
    simulate_capped_time,
)
from .offline import greedy_schedule


@dataclass(frozen=True)
class ActionGrid:
    actions: tuple[RunSegment, ...]
    k: int
    durations: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.actions)


def make_grid(k: int, cap: int) -> ActionGrid:
    """All ``(h, tau)`` with tau a power of two no larger than ``cap``."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    durations = tuple(2**i for i in range(int(math.floor(math.log2(cap))) + 1))
    actions = tuple(RunSegment(h, tau) for h in range(k) for tau in durations)
    return ActionGrid(actions, k, durations)


def default_eta(grid_size: int, horizon: int) -> float:
    return math.sqrt(8.0 * math.log(grid_size) / max(horizon, 1))


def default_gamma(horizon: int, c: float = 1.0) -> float:
    return min(1.0, max(0.0, c * max(horizon, 1) ** -0.25))


class SlotLearner:
    """Exponential weights over the action grid, kept in log space."""

    def __init__(self, size: int, eta: float):
        self.eta = eta
        self.log_w = np.zeros(size)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_w - self.log_w.max())

    def distribution(self) -> np.ndarray:
        w = self.weights
        return w / w.sum()

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.choice(len(self.log_w), p=self.distribution()))

    def update(self, rewards: np.ndarray) -> None:
        self.log_w = self.log_w + self.eta * np.asarray(rewards, dtype=float)


@dataclass(frozen=True)
class Proposal:
    schedule: Schedule
    actions: tuple[int, ...]


class OnlineGreedy:
    """Per-slot experts learner producing one schedule per instance."""

    def __init__(
        self,
        k: int,
        cap: int,
        horizon: int,
        n_slots: int | None = None,
        gamma: float | None = None,
        explore_c: float = 1.0,
        eta: float | None = None,
        models=SR,
    ):
        self.k = k
        self.cap = cap
        self.horizon = horizon
        self.grid = make_grid(k, cap)
        self.models = _as_models(models, k)
        self.n_slots = n_slots if n_slots is not None else math.ceil(math.log2(cap)) + k
        self.gamma = default_gamma(horizon, explore_c) if gamma is None else min(1.0, max(0.0, gamma))
        self.eta = default_eta(len(self.grid), horizon) if eta is None else eta
        self.slots = [SlotLearner(len(self.grid), self.eta) for _ in range(self.n_slots)]
        self.round = 0

    @property
    def exploration_cost(self) -> int:
        return self.k * self.cap * math.ceil(math.log2(self.cap)) if self.cap > 1 else self.k

    def propose(self, rng: np.random.Generator) -> Proposal:
        picks = tuple(slot.sample(rng) for slot in self.slots)
        segs = tuple(self.grid.actions[i] for i in picks)
        return Proposal(Schedule(segs, self.models), picks)

    def select(self, rng: np.random.Generator) -> tuple[Proposal, bool]:
        proposal = self.propose(rng)
        explore = bool(rng.random() < self.gamma)
        return proposal, explore

    def slot_rewards(self, instance: Instance, proposal: Proposal) -> np.ndarray:
        """``(n_slots, grid)`` rewards for one instance given the sampled prefix."""
        B = self.cap
        taus = np.array(self.grid.durations, dtype=float)
        n_tau = len(taus)
        solved = [np.asarray(p.solved, dtype=float) for p in instance.profiles]
        counts = [p.n_samples for p in instance.profiles]

        def F(h, t):
            return np.searchsorted(solved[h], t, side="right") / counts[h]

        rewards = np.zeros((self.n_slots, len(self.grid)))
        q, t = 1.0, 0
        a = [0] * self.k
        for j, pick in enumerate(proposal.actions):
            if t >= B or q <= 1e-15:
                break
            room = B - t
            eff = np.minimum(taus, room)
            row = rewards[j]
            for h in range(self.k):
                if self.models[h] is RESTART:
                    succ = F(h, eff)
                else:
                    f_a = F(h, a[h])
                    surv = 1.0 - f_a
                    succ = (F(h, a[h] + eff) - f_a) / surv if surv > 1e-12 else np.zeros(n_tau)
                row[h * n_tau:(h + 1) * n_tau] = q * succ / taus
            seg = self.grid.actions[pick]
            tau = min(seg.tau, room)
            h = seg.heuristic
            if self.models[h] is RESTART:
                succ = F(h, tau)
            else:
                f_a = F(h, a[h])
                succ = (F(h, a[h] + tau) - f_a) / (1.0 - f_a) if f_a < 1 - 1e-12 else 0.0
                a[h] += tau
            q *= 1.0 - float(succ)
            t += tau
        return rewards

    def learn(self, instance: Instance, proposal: Proposal) -> None:
        rewards = self.slot_rewards(instance, proposal)
        for slot, r in zip(self.slots, rewards):
            slot.update(r)

    def observe(
        self, instance: Instance, proposal: Proposal, explore: bool, rng: np.random.Generator
    ) -> tuple[float, int]:
        """Charged (capped, realised) time and bookkept exploration cost of a round."""
        if explore:
            self.learn(instance, proposal)
        charged = simulate_capped_time(proposal.schedule, instance, self.cap, rng)
        self.round += 1
        return charged, self.exploration_cost if explore else 0


@dataclass(frozen=True)
class RoundRecord:
    round: int
    instance_id: str
    charged_time: float
    exploration_time: int
    cumulative_avg: float


@dataclass
class OnlineReport:
    rounds: list[RoundRecord] = field(default_factory=list)
    cap: int = 0
    greedy_benchmark: float = float("nan")

    @property
    def charged(self) -> np.ndarray:
        return np.array([r.charged_time for r in self.rounds])

    @property
    def total_charged(self) -> float:
        return float(self.charged.sum())

    @property
    def total_exploration(self) -> int:
        return sum(r.exploration_time for r in self.rounds)

    @property
    def total_cost(self) -> float:
        return self.total_charged + self.total_exploration

    @property
    def average(self) -> float:
        return float(self.charged.mean()) if self.rounds else 0.0

    def quarter_averages(self) -> tuple[float, float]:
        c = self.charged
        q = max(len(c) // 4, 1)
        return float(c[:q].mean()), float(c[-q:].mean())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "charged_time", "exploration_time", "cumulative_avg"])
        for r in self.rounds:
            w.writerow([r.round, f"{r.charged_time:.9f}", r.exploration_time, f"{r.cumulative_avg:.9f}"])
        return buf.getvalue()


def run_online(
    stream: Sequence[Instance],
    cap: int,
    seed: int | np.random.Generator = 0,
    learner: OnlineGreedy | None = None,
    benchmark: bool = True,
    **learner_kwargs,
) -> OnlineReport:
    """Play the whole stream in order; the horizon is the stream length."""
    stream = list(stream)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if learner is None:
        k = stream[0].k if stream else 1
        learner = OnlineGreedy(k, cap, len(stream), **learner_kwargs)
    report = OnlineReport(cap=cap)
    total = 0.0
    for i, x in enumerate(stream, 1):
        proposal, explore = learner.select(rng)
        charged, probe = learner.observe(x, proposal, explore, rng)
        total += charged
        report.rounds.append(RoundRecord(i, x.id, charged, probe, total / i))
    if benchmark and stream:
        report.greedy_benchmark = greedy_average(stream, learner.models, cap)
    return report


def greedy_average(instances: Sequence[Instance], models, cap: int) -> float:
    """Average capped time of the offline greedy schedule fitted on ``instances``."""
    schedule, _ = greedy_schedule(instances, models, cap)
    return evaluate(schedule, instances, cap) / sum(x.weight for x in instances)


def train_online(learner: OnlineGreedy, instances: Iterable[Instance], rng: np.random.Generator) -> None:
    """Full-feedback pass: every instance is an exploration round."""
    for x in instances:
        learner.learn(x, learner.propose(rng))
