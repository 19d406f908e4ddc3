"""Schedules, runtime profiles and the exact semantics of executing a schedule.

Times are dimensionless positive integers.  A heuristic's behaviour on an
instance is an empirical distribution over recorded solve times; a censored
record means the run hit the collection limit and is treated as never solving.

Heuristics run either in the suspend-and-resume model (one persistent run that
segments keep extending) or the restart model (every segment is a fresh,
independent run).  Runs of different heuristics are independent, so the
probability that an instance is still unsolved after a schedule prefix is a
product of per-run survival probabilities.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

# Probabilities closer than this are considered equal.
TOL = 1e-9
# A run whose survival probability drops below this is considered exhausted.
_EXHAUSTED = 1e-12


class ExecutionModel(enum.Enum):
    SUSPEND_RESUME = "sr"
    RESTART = "restart"

    @classmethod
    def parse(cls, text: str) -> "ExecutionModel":
        key = text.strip().lower().replace("-", "_")
        aliases = {
            "sr": cls.SUSPEND_RESUME,
            "suspend_resume": cls.SUSPEND_RESUME,
            "suspendresume": cls.SUSPEND_RESUME,
            "restart": cls.RESTART,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown execution model {text!r}") from None


SR = ExecutionModel.SUSPEND_RESUME
RESTART = ExecutionModel.RESTART


@dataclass(frozen=True)
class HeuristicId:
    index: int
    name: str


@dataclass(frozen=True)
class RuntimeProfile:
    """Empirical solve-time distribution of one heuristic on one instance.

    ``solved`` holds the sorted solve times; ``n_censored`` runs never finished
    before ``limit``.
    """

    solved: tuple[int, ...]
    n_censored: int = 0
    limit: int | None = None

    def __post_init__(self):
        solved = tuple(sorted(int(t) for t in self.solved))
        object.__setattr__(self, "solved", solved)
        if not solved and self.n_censored == 0:
            raise ValueError("a runtime profile needs at least one sample")
        if any(t < 1 for t in solved):
            raise ValueError(f"solve times must be positive integers: {solved}")
        if self.n_censored < 0:
            raise ValueError("n_censored must be non-negative")
        if self.limit is not None and self.limit < 1:
            raise ValueError("censoring limit must be positive")

    @classmethod
    def deterministic(cls, t: int | None, limit: int | None = None) -> "RuntimeProfile":
        """Single-sample profile; ``t=None`` means censored at ``limit``."""
        if t is None:
            return cls((), 1, limit)
        return cls((t,))

    @classmethod
    def from_records(cls, records: Iterable[tuple[bool, int]]) -> "RuntimeProfile":
        """Build from ``(solved, time)`` pairs; for censored pairs time is the limit."""
        solved, limits, n_cens = [], set(), 0
        for ok, t in records:
            if ok:
                solved.append(int(t))
            else:
                limits.add(int(t))
                n_cens += 1
        if len(limits) > 1:
            raise ValueError(f"inconsistent censoring limits {sorted(limits)}")
        return cls(tuple(solved), n_cens, limits.pop() if limits else None)

    @property
    def n_samples(self) -> int:
        return len(self.solved) + self.n_censored

    @property
    def max_solved(self) -> int | None:
        return self.solved[-1] if self.solved else None

    def records(self) -> list[tuple[bool, int]]:
        out = [(True, t) for t in self.solved]
        out += [(False, self.limit)] * self.n_censored
        return out


def cdf(profile: RuntimeProfile, t: float) -> float:
    """Fraction of samples solved within ``t`` time units."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return bisect.bisect_right(profile.solved, t) / profile.n_samples


def mean_clipped(profile: RuntimeProfile, lo: int, width: int) -> float:
    """Mean over samples of clip(t - lo, 0, width); censored samples count ``width``."""
    total = profile.n_censored * width
    for t in profile.solved:
        total += min(max(t - lo, 0), width)
    return total / profile.n_samples


@dataclass(frozen=True)
class Instance:
    id: str
    profiles: tuple[RuntimeProfile, ...]
    weight: float = 1.0
    features: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        object.__setattr__(self, "features", frozenset(self.features))
        if not self.weight > 0:
            raise ValueError(f"instance {self.id!r}: weight must be positive")
        if not self.profiles:
            raise ValueError(f"instance {self.id!r}: no runtime profiles")

    @property
    def k(self) -> int:
        return len(self.profiles)


@dataclass(frozen=True)
class RunSegment:
    heuristic: int
    tau: int

    def __post_init__(self):
        if self.tau < 1 or int(self.tau) != self.tau:
            raise ValueError(f"segment duration must be a positive integer, got {self.tau}")
        if self.heuristic < 0:
            raise ValueError("heuristic index must be non-negative")


def _as_models(models, k: int | None = None) -> tuple[ExecutionModel, ...]:
    if isinstance(models, ExecutionModel):
        if k is None:
            raise ValueError("need the portfolio size to broadcast a single model")
        return (models,) * k
    if isinstance(models, Mapping):
        size = k if k is not None else max(models) + 1
        return tuple(models.get(h, SR) for h in range(size))
    return tuple(models)


@dataclass(frozen=True)
class Schedule:
    """Ordered run segments plus the execution model of every heuristic."""

    segments: tuple[RunSegment, ...]
    models: tuple[ExecutionModel, ...]

    def __post_init__(self):
        segs = tuple(s if isinstance(s, RunSegment) else RunSegment(*s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "models", tuple(self.models))
        for s in segs:
            if s.heuristic >= len(self.models):
                raise ValueError(f"no execution model for heuristic {s.heuristic}")

    @classmethod
    def of(cls, pairs: Iterable[tuple[int, int]], models, k: int | None = None) -> "Schedule":
        pairs = [RunSegment(h, t) for h, t in pairs]
        if k is None and not isinstance(models, (Mapping, ExecutionModel)):
            k = len(models)
        if k is None:
            k = max((s.heuristic for s in pairs), default=-1) + 1
        return cls(tuple(pairs), _as_models(models, k))

    @property
    def length(self) -> int:
        return sum(s.tau for s in self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def append(self, segment: RunSegment) -> "Schedule":
        return Schedule(self.segments + (segment,), self.models)

    def prefix(self, n: int) -> "Schedule":
        return Schedule(self.segments[:n], self.models)


class RuntimeTable:
    """Column-oriented view of an instance set used by the vectorised routines.

    For heuristic ``h``, ``times[h]`` is an ``(n, r)`` float array of sample
    times (``inf`` for censored samples and padding) and ``sample_w[h]`` holds
    ``1/n_samples`` for real samples and ``0`` for padding.
    """

    def __init__(self, instances: Sequence[Instance]):
        instances = list(instances)
        self.instances = instances
        self.n = len(instances)
        self.k = instances[0].k if instances else 0
        for x in instances:
            if x.k != self.k:
                raise ValueError(f"instance {x.id!r} has {x.k} profiles, expected {self.k}")
        self.weights = np.array([x.weight for x in instances], dtype=float)
        self.times: list[np.ndarray] = []
        self.sample_w: list[np.ndarray] = []
        for h in range(self.k):
            r = max((x.profiles[h].n_samples for x in instances), default=1)
            t = np.full((self.n, r), np.inf)
            w = np.zeros((self.n, r))
            for i, x in enumerate(instances):
                p = x.profiles[h]
                t[i, : len(p.solved)] = p.solved
                w[i, : p.n_samples] = 1.0 / p.n_samples
            self.times.append(t)
            self.sample_w.append(w)

    def cdf(self, h: int, t: float) -> np.ndarray:
        return np.minimum((self.sample_w[h] * (self.times[h] <= t)).sum(axis=1), 1.0)

    def clipped_mean(self, h: int, lo: float, width: float) -> np.ndarray:
        return (self.sample_w[h] * np.clip(self.times[h] - lo, 0.0, width)).sum(axis=1)

    def segment(self, h: int, model: ExecutionModel, a: int, tau: int):
        """Per-instance (success probability, expected busy time) of one segment.

        Both are conditional on the instance being unsolved when the segment
        starts.  ``a`` is the heuristic's accumulated suspend-resume time.
        """
        if model is RESTART:
            return self.cdf(h, tau), self.clipped_mean(h, 0, tau)
        f_a = self.cdf(h, a)
        surv = 1.0 - f_a
        live = surv > _EXHAUSTED
        safe = np.where(live, surv, 1.0)
        succ = np.where(live, (self.cdf(h, a + tau) - f_a) / safe, 0.0)
        busy = np.where(live, self.clipped_mean(h, a, tau) / safe, 0.0)
        return np.clip(succ, 0.0, 1.0), busy


def as_table(instances) -> RuntimeTable:
    return instances if isinstance(instances, RuntimeTable) else RuntimeTable(instances)


@dataclass(frozen=True)
class CoverageState:
    """Survival probabilities and accumulated run times along a schedule prefix."""

    q: np.ndarray
    a: tuple[int, ...]
    elapsed: int = 0

    @classmethod
    def empty(cls, n: int, k: int) -> "CoverageState":
        return cls(np.ones(n), (0,) * k, 0)

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "a", tuple(self.a))


def segment_success(
    state: CoverageState,
    profile: RuntimeProfile,
    model: ExecutionModel,
    tau: int,
    heuristic: int = 0,
) -> float:
    """Probability that the segment solves the instance given it is unsolved so far."""
    if tau < 1:
        raise ValueError("tau must be at least 1")
    if model is RESTART:
        return cdf(profile, tau)
    a = state.a[heuristic]
    surv = 1.0 - cdf(profile, a)
    if surv <= _EXHAUSTED:
        return 0.0
    return (cdf(profile, a + tau) - cdf(profile, a)) / surv


def advance(state: CoverageState, segment: RunSegment, instances, models) -> CoverageState:
    """State after executing ``segment``; the input state is left untouched."""
    table = as_table(instances)
    models = _as_models(models, table.k)
    h, tau = segment.heuristic, segment.tau
    model = models[h]
    succ, _ = table.segment(h, model, state.a[h], tau)
    q = state.q * (1.0 - succ)
    a = list(state.a)
    if model is SR:
        a[h] += tau
    return CoverageState(q, tuple(a), state.elapsed + tau)


def run_states(schedule: Schedule, instances) -> list[CoverageState]:
    """States at every prefix boundary, starting with the empty prefix."""
    table = as_table(instances)
    state = CoverageState.empty(table.n, table.k)
    states = [state]
    for seg in schedule.segments:
        state = advance(state, seg, table, schedule.models)
        states.append(state)
    return states


def coverage(schedule: Schedule, instances) -> float:
    """Expected weighted number of instances the schedule solves."""
    table = as_table(instances)
    if table.n == 0:
        return 0.0
    final = run_states(schedule, table)[-1]
    return float(np.dot(table.weights, 1.0 - final.q))


def expected_capped_times(schedule: Schedule, instances, cap: int) -> np.ndarray:
    """E[min(cap, T(S, x))] for every instance, computed analytically."""
    if cap < 1:
        raise ValueError(f"cap must be at least 1, got {cap}")
    table = as_table(instances)
    total = np.zeros(table.n)
    q = np.ones(table.n)
    a = [0] * table.k
    t = 0
    for seg in schedule.segments:
        if t >= cap:
            break
        h = seg.heuristic
        model = schedule.models[h]
        tau = min(seg.tau, cap - t)
        succ, busy = table.segment(h, model, a[h], tau)
        total += q * busy
        q = q * (1.0 - succ)
        if model is SR:
            a[h] += tau
        t += tau
    if t < cap:
        total += q * (cap - t)
    return np.minimum(total, cap)


def expected_capped_time(schedule: Schedule, instance: Instance, cap: int) -> float:
    return float(expected_capped_times(schedule, [instance], cap)[0])


def evaluate(schedule: Schedule, instances, cap: int) -> float:
    """Weighted sum over instances of E[min(cap, T(S, x))]."""
    table = as_table(instances)
    if table.n == 0:
        return 0.0
    return float(np.dot(table.weights, expected_capped_times(schedule, table, cap)))


def capped_single_times(instances, h: int, cap: int) -> np.ndarray:
    """E[min(cap, T(h, x))] per instance when ``h`` runs alone."""
    table = as_table(instances)
    return table.clipped_mean(h, 0, cap)


def draw_time(profile: RuntimeProfile, rng: np.random.Generator) -> float:
    """One sampled solve time; censored samples come back as ``inf``."""
    i = int(rng.integers(profile.n_samples))
    return float(profile.solved[i]) if i < len(profile.solved) else math.inf


def simulate_capped_time(
    schedule: Schedule, instance: Instance, cap: int, rng: np.random.Generator
) -> float:
    """One realisation of min(cap, T(S, x)) by sampling the instance's profiles."""
    sr_draws: dict[int, float] = {}
    used: dict[int, int] = {}
    t = 0
    for seg in schedule.segments:
        if t >= cap:
            break
        h = seg.heuristic
        profile = instance.profiles[h]
        if schedule.models[h] is SR:
            if h not in sr_draws:
                sr_draws[h] = draw_time(profile, rng)
            remaining = sr_draws[h] - used.get(h, 0)
            used[h] = used.get(h, 0) + seg.tau
        else:
            remaining = draw_time(profile, rng)
        if remaining <= seg.tau:
            return float(min(cap, t + remaining))
        t += seg.tau
    return float(cap)


@dataclass
class Portfolio:
    names: list[str] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def ids(self) -> list[HeuristicId]:
        return [HeuristicId(i, n) for i, n in enumerate(self.names)]
