"""Anytime objectives as weighted fictitious instances.

For an instance ``x`` and objectives ``o_1..o_k`` (say: find a feasible
solution, find the optimum, prove optimality) we create one fictitious
instance per objective whose "solve time" under heuristic ``h`` is the time
``h`` needs to reach that objective on ``x``.  Any decision-time machinery then
optimises the weighted average time to reach each objective.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import Instance, RuntimeProfile, as_table, capped_single_times, expected_capped_times
from .offline import greedy_schedule


@dataclass(frozen=True)
class ObjectiveSpec:
    """One objective: its weight and, per ``(instance_id, heuristic)``, the
    profile of times needed to achieve it."""

    name: str
    weight: float
    times: Mapping[tuple[str, int], RuntimeProfile] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"objective {self.name!r}: weight must be positive")


def uniform_objectives(names: Sequence[str], times: Mapping[str, Mapping]) -> list[ObjectiveSpec]:
    """Objectives with equal weights 1/k."""
    k = len(names)
    return [ObjectiveSpec(n, 1.0 / k, times[n]) for n in names]


def _fictitious_id(x: Instance, objective: ObjectiveSpec, k: int) -> str:
    return x.id if k == 1 else f"{x.id}#{objective.name}"


def _check_nesting(x: Instance, objectives: Sequence[ObjectiveSpec]) -> None:
    for h in range(x.k):
        prev = 0.0
        for o in objectives:
            p = o.times[(x.id, h)]
            t = float(p.max_solved) if p.n_censored == 0 else float("inf")
            if t < prev:
                warnings.warn(
                    f"instance {x.id!r}, heuristic {h}: objective {o.name!r} reached before an earlier one",
                    stacklevel=3,
                )
                return
            prev = t


def expand_instances(
    instances: Sequence[Instance], objectives: Sequence[ObjectiveSpec], check_nesting: bool = True
) -> list[Instance]:
    """One weighted fictitious instance per (instance, objective)."""
    if not objectives:
        raise ValueError("need at least one objective")
    k = len(objectives)
    out = []
    for x in instances:
        missing = [(o.name, h) for o in objectives for h in range(x.k) if (x.id, h) not in o.times]
        if missing:
            raise ValueError(f"instance {x.id!r}: no achievement data for {missing}")
        if check_nesting and k > 1:
            _check_nesting(x, objectives)
        for o in objectives:
            out.append(
                Instance(
                    _fictitious_id(x, o, k),
                    tuple(o.times[(x.id, h)] for h in range(x.k)),
                    x.weight * o.weight,
                    x.features,
                )
            )
    return out


@dataclass(frozen=True)
class SpeedupRow:
    objective: str
    fastest_heuristic: int
    numerator: float
    denominator: float

    @property
    def factor(self) -> float:
        return self.numerator / self.denominator


def speedup_factors(
    instances: Sequence[Instance],
    objectives: Sequence[ObjectiveSpec],
    models,
    cap: int,
) -> list[SpeedupRow]:
    """Per objective: best single heuristic's average capped time divided by the
    leave-one-out greedy schedule's average capped time."""
    instances = list(instances)
    if len(instances) < 2:
        raise ValueError("leave-one-out needs at least two instances")
    k_obj = len(objectives)
    wsum = sum(x.weight for x in instances)
    expanded = expand_instances(instances, objectives)
    # expanded is instance-major: row i * k_obj + j is (instance i, objective j)
    loo = np.zeros((len(instances), k_obj))
    for i, x in enumerate(instances):
        train = expanded[: i * k_obj] + expanded[(i + 1) * k_obj:]
        schedule, _ = greedy_schedule(train, models, cap)
        loo[i] = expected_capped_times(schedule, expanded[i * k_obj:(i + 1) * k_obj], cap)
    weights = np.array([x.weight for x in instances])
    rows = []
    for j, o in enumerate(objectives):
        table = as_table(expanded[j::k_obj])
        per_h = [float(np.dot(weights, capped_single_times(table, h, cap))) / wsum for h in range(table.k)]
        best = int(np.argmin(per_h))
        rows.append(SpeedupRow(o.name, best, per_h[best], float(np.dot(weights, loo[:, j])) / wsum))
    return rows


def speedup_csv(rows: Sequence[SpeedupRow], names: Sequence[str] | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["objective", "fastest_heuristic", "numerator", "denominator", "factor"])
    for r in rows:
        h = names[r.fastest_heuristic] if names else r.fastest_heuristic
        w.writerow([r.objective, h, f"{r.numerator:.9f}", f"{r.denominator:.9f}", f"{r.factor:.9f}"])
    return buf.getvalue()
