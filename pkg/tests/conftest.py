from __future__ import annotations

import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import settings

from algoportfolio.core import RESTART, SR, Instance, RuntimeProfile

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def det_instances(*rows, limit=None):
    """``rows[i][h]`` is the time of heuristic h on instance i (None = censored)."""
    return [
        Instance(f"x{i}", tuple(RuntimeProfile.deterministic(t, limit) for t in row))
        for i, row in enumerate(rows)
    ]


def sampled_instance(iid, samples_per_h, weight=1.0):
    """``samples_per_h[h]`` lists sample times, None for a censored sample."""
    profiles = []
    for samples in samples_per_h:
        solved = tuple(t for t in samples if t is not None)
        profiles.append(RuntimeProfile(solved, sum(t is None for t in samples), 99))
    return Instance(iid, tuple(profiles), weight)


def _walk(pairs, models, draws, cap):
    """Solve time of one fully specified run: ``draws[(h,)]`` for suspend-resume
    heuristics, ``draws[(h, j)]`` for the restart run of segment j."""
    t = 0
    used = {}
    for j, (h, tau) in enumerate(pairs):
        if t >= cap:
            break
        if models[h] is SR:
            need = draws[(h,)] - used.get(h, 0)
            used[h] = used.get(h, 0) + tau
        else:
            need = draws[(h, j)]
        if need <= tau:
            return min(cap, t + need)
        t += tau
    return cap


def brute_expected(pairs, models, samples_per_h, cap):
    """Exact E[min(cap, T)] by enumerating every joint sample draw, in fractions."""
    keys = [(h,) for h in sorted({h for h, _ in pairs}) if models[h] is SR]
    keys += [(h, j) for j, (h, _) in enumerate(pairs) if models[h] is RESTART]
    pools = []
    for key in keys:
        pool = [math.inf if t is None else t for t in samples_per_h[key[0]]]
        pools.append(pool)
    total = Fraction(0)
    count = 0
    for combo in itertools.product(*pools):
        draws = dict(zip(keys, combo))
        total += Fraction(_walk(pairs, models, draws, cap))
        count += 1
    return total / count


@pytest.fixture
def tied_pair():
    return det_instances((3, 3))


@pytest.fixture
def three_by_two():
    # h0 times (2, 9, 9), h1 times (5, 1, 2)
    return det_instances((2, 5), (9, 1), (9, 2))
