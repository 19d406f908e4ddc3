"""Offline schedule construction: the greedy density rule, an exhaustive oracle
for tiny inputs, and the two simple baselines (best single heuristic and
round-robin time sharing)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    RESTART,
    SR,
    TOL,
    CoverageState,
    ExecutionModel,
    RunSegment,
    Schedule,
    _as_models,
    advance,
    as_table,
    capped_single_times,
    evaluate,
)

# Densities at or below this mean nothing is left to gain.
MIN_DENSITY = 1e-12


@dataclass(frozen=True)
class GreedyStep:
    segment: RunSegment
    density: float
    candidates: tuple[tuple[RunSegment, float], ...] | None = None


@dataclass
class GreedyTrace:
    steps: list[GreedyStep] = field(default_factory=list)

    @property
    def segments(self) -> list[RunSegment]:
        return [s.segment for s in self.steps]

    @property
    def densities(self) -> list[float]:
        return [s.density for s in self.steps]


def _gain_curve(table, state: CoverageState, h: int, model: ExecutionModel):
    """Distinct useful durations for ``h`` and the weighted coverage gain of each."""
    t = table.times[h]
    sw = table.sample_w[h]
    if model is RESTART:
        resid = t
        coef = table.weights * state.q
    else:
        a = state.a[h]
        resid = t - a
        surv = 1.0 - table.cdf(h, a)
        live = surv > 1e-12
        coef = np.where(live, table.weights * state.q / np.where(live, surv, 1.0), 0.0)
    mask = np.isfinite(resid) & (resid > 0) & (sw > 0)
    if not mask.any():
        return np.empty(0, dtype=np.int64), np.empty(0)
    r = resid[mask]
    c = (coef[:, None] * sw)[mask]
    order = np.argsort(r, kind="stable")
    r, c = r[order], np.cumsum(c[order])
    last = np.flatnonzero(np.r_[r[1:] != r[:-1], True])
    return r[last].astype(np.int64), c[last]


def candidate_durations(heuristic: int, state: CoverageState, instances, models) -> list[int]:
    """Sorted durations at which a segment of ``heuristic`` can gain coverage."""
    table = as_table(instances)
    models = _as_models(models, table.k)
    taus, _ = _gain_curve(table, state, heuristic, models[heuristic])
    return [int(x) for x in taus]


def greedy_step(state: CoverageState, instances, models, keep_candidates: bool = False):
    """Best segment to append by gain per unit time, or ``None`` when nothing helps.

    Ties go to the shorter segment, then to the lower heuristic index.
    """
    table = as_table(instances)
    models = _as_models(models, table.k)
    best = None  # (density, tau, h)
    pool = []
    for h in range(table.k):
        taus, gains = _gain_curve(table, state, h, models[h])
        if not len(taus):
            continue
        dens = gains / taus
        if keep_candidates:
            pool.extend((RunSegment(h, int(tau)), float(d)) for tau, d in zip(taus, dens))
        top = dens.max()
        i = int(np.flatnonzero(dens >= top - TOL * top)[0])
        cand = (float(dens[i]), int(taus[i]), h)
        if best is None or _beats(cand, best):
            best = cand
    if best is None or best[0] <= MIN_DENSITY:
        return None
    density, tau, h = best
    return GreedyStep(RunSegment(h, tau), density, tuple(pool) if keep_candidates else None)


def _beats(a, b) -> bool:
    # a, b are (density, tau, h)
    scale = max(a[0], b[0])
    if a[0] > b[0] + TOL * scale:
        return True
    if b[0] > a[0] + TOL * scale:
        return False
    return (a[1], a[2]) < (b[1], b[2])


def greedy_schedule(
    instances, models, length_cap: int, keep_candidates: bool = False
) -> tuple[Schedule, GreedyTrace]:
    """Greedy schedule, grown until nothing helps or ``length_cap`` is reached.

    A winning segment that would overrun the cap is truncated to end exactly at
    it (the trace keeps the winner's untruncated density); evaluation with any
    cap ``B <= length_cap`` is unaffected.
    """
    if length_cap < 1:
        raise ValueError("length_cap must be at least 1")
    table = as_table(instances)
    models = _as_models(models, table.k)
    schedule = Schedule((), models)
    trace = GreedyTrace()
    if table.n == 0:
        return schedule, trace
    state = CoverageState.empty(table.n, table.k)
    while state.elapsed < length_cap:
        step = greedy_step(state, table, models, keep_candidates)
        if step is None:
            break
        seg = step.segment
        room = length_cap - state.elapsed
        if seg.tau > room:
            seg = RunSegment(seg.heuristic, room)
            step = GreedyStep(seg, step.density, step.candidates)
        trace.steps.append(step)
        schedule = schedule.append(seg)
        state = advance(state, seg, table, models)
    return schedule, trace


class OracleBudgetError(ValueError):
    pass


def optimal_schedule_oracle(
    instances,
    models,
    length_cap: int,
    max_segments: int = 6,
    max_heuristics: int = 3,
    max_instances: int = 5,
    max_states: int = 200_000,
) -> Schedule:
    """Exhaustive optimum of ``evaluate(., instances, B=length_cap)``.

    Searches segment sequences whose durations come from the candidate sets of
    each prefix.  Cost-to-go depends only on accumulated suspend-resume times
    and the multiset of restart runs, so those states are memoised.  Ties go to
    the shorter schedule, then the lexicographically smaller one.
    """
    table = as_table(instances)
    models = _as_models(models, table.k)
    if table.k > max_heuristics or table.n > max_instances or max_segments > 6:
        raise OracleBudgetError(
            f"oracle limited to {max_heuristics} heuristics, {max_instances} instances, "
            f"6 segments; got {table.k}, {table.n}, {max_segments}"
        )
    B = length_cap
    memo: dict = {}

    def better(x, y):
        if x[0] < y[0] - 1e-9:
            return True
        if x[0] > y[0] + 1e-9:
            return False
        return (x[1], x[2]) < (y[1], y[2])

    def solve(state: CoverageState, restarts: tuple, left: int):
        key = (state.a, restarts, left)
        if key in memo:
            return memo[key]
        if len(memo) >= max_states:
            raise OracleBudgetError(f"oracle exceeded {max_states} states")
        mass = float(np.dot(table.weights, state.q))
        best = (mass * (B - state.elapsed), 0, ())
        if left > 0 and mass > 1e-12:
            for h in range(table.k):
                taus, _ = _gain_curve(table, state, h, models[h])
                for tau in taus:
                    tau = int(tau)
                    if state.elapsed + tau > B:
                        break
                    succ, busy = table.segment(h, models[h], state.a[h], tau)
                    here = float(np.dot(table.weights, state.q * busy))
                    nxt = advance(state, RunSegment(h, tau), table, models)
                    r = restarts
                    if models[h] is RESTART:
                        r = tuple(sorted(restarts + ((h, tau),)))
                    cost, length, seq = solve(nxt, r, left - 1)
                    cand = (here + cost, length + tau, ((h, tau),) + seq)
                    if better(cand, best):
                        best = cand
        memo[key] = best
        return best

    _, _, seq = solve(CoverageState.empty(table.n, table.k), (), max_segments)
    return Schedule.of(seq, models, table.k)


def best_single_heuristic(instances, cap: int) -> tuple[int, float]:
    """Heuristic with the lowest weighted expected capped time when run alone."""
    table = as_table(instances)
    if table.k == 0:
        raise ValueError("empty portfolio")
    costs = [float(np.dot(table.weights, capped_single_times(table, h, cap))) for h in range(table.k)]
    h = int(np.argmin(costs))
    return h, costs[h]


def single_heuristic_schedule(h: int, k: int, cap: int, model: ExecutionModel = SR) -> Schedule:
    models = [SR] * k
    models[h] = model
    return Schedule((RunSegment(h, cap),), tuple(models))


def parallel_schedule(k: int, models, quantum: int, length_cap: int) -> Schedule:
    """Round-robin time sharing: each heuristic in turn for ``quantum`` units."""
    if quantum < 1:
        raise ValueError("quantum must be at least 1")
    if k < 1:
        raise ValueError("empty portfolio")
    models = _as_models(models, k)
    segs: list[RunSegment] = []
    total, h = 0, 0
    while total < length_cap:
        tau = min(quantum, length_cap - total)
        segs.append(RunSegment(h, tau))
        total += tau
        h = (h + 1) % k
    return Schedule(tuple(segs), models)


def greedy_cost(instances, models, cap: int) -> float:
    """Weighted evaluation of the greedy schedule fitted on the same instances."""
    schedule, _ = greedy_schedule(instances, models, cap)
    return evaluate(schedule, instances, cap)


__all__: Sequence[str] = [
    "GreedyStep",
    "GreedyTrace",
    "OracleBudgetError",
    "best_single_heuristic",
    "candidate_durations",
    "greedy_cost",
    "greedy_schedule",
    "greedy_step",
    "optimal_schedule_oracle",
    "parallel_schedule",
    "single_heuristic_schedule",
]
