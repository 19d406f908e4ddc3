"""Training-size experiments: fit a method on ``m`` random instances, measure
its average capped time on the other ``n - m``, repeat and aggregate."""

from __future__ import annotations

import csv
import io
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import RESTART, SR, capped_single_times, expected_capped_time, expected_capped_times
from .data import Dataset
from .experts import FeatureGreedy, FeaturesOnly
from .offline import best_single_heuristic, greedy_schedule, parallel_schedule
from .online import OnlineGreedy, train_online

METHODS = ("greedy-sr", "greedy-restart", "best-single", "parallel", "og", "ogse", "features-only")
TRAINING_METHODS = ("greedy-sr", "greedy-restart", "best-single", "parallel")
FEATURE_METHODS = ("ogse", "features-only")


def powers_below(n: int) -> list[int]:
    out, m = [], 1
    while m < n:
        out.append(m)
        m *= 2
    return out


@dataclass
class ExperimentConfig:
    methods: Sequence[str] = TRAINING_METHODS
    m_values: Sequence[int] | None = None
    repetitions: int = 100
    cap: int | None = None
    seed: int = 0
    quantum: int = 1
    workers: int = 1

    def resolved_m(self, n: int) -> list[int]:
        ms = powers_below(n) if self.m_values is None else sorted(set(int(m) for m in self.m_values))
        bad = [m for m in ms if not 0 < m < n]
        if bad:
            raise ValueError(f"training sizes must lie in [1, {n - 1}], got {bad}")
        return ms

    def __post_init__(self):
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")


@dataclass
class ExperimentReport:
    rows: list[tuple[str, int, int, float]] = field(default_factory=list)

    def aggregate(self) -> dict[tuple[str, int], float]:
        cells: dict[tuple[str, int], list[float]] = {}
        for method, m, _, v in self.rows:
            cells.setdefault((method, m), []).append(v)
        return {key: float(np.mean(v)) for key, v in cells.items()}

    def mean(self, method: str, m: int) -> float:
        return self.aggregate()[(method, m)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "m", "repetition", "avg_capped_time"])
        for method, m, rep, v in self.rows:
            w.writerow([method, m, rep, f"{v:.9f}"])
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "m", "mean_avg_capped_time"])
        for (method, m), v in sorted(self.aggregate().items()):
            w.writerow([method, m, f"{v:.9f}"])
        return buf.getvalue()


def _method_rng(seed: int, m: int, rep: int, method: str) -> np.random.Generator:
    return np.random.default_rng([seed, m, rep, zlib.crc32(method.encode())])


def _weighted_mean(values: np.ndarray, instances) -> float:
    w = np.array([x.weight for x in instances])
    return float(np.dot(w, values) / w.sum())


def _fit_and_test(method: str, train, test, dataset: Dataset, cap: int, cfg: ExperimentConfig, rng, static):
    k = dataset.k
    if method in ("greedy-sr", "greedy-restart"):
        model = SR if method == "greedy-sr" else RESTART
        schedule, _ = greedy_schedule(train, model, cap)
        return expected_capped_times(schedule, test, cap)
    if method == "best-single":
        h, _ = best_single_heuristic(train, cap)
        return static["single"][h][[static["pos"][x.id] for x in test]]
    if method == "parallel":
        return static["parallel"][[static["pos"][x.id] for x in test]]
    if method == "og":
        learner = OnlineGreedy(k, cap, horizon=len(train))
        train_online(learner, train, rng)
        return np.array([expected_capped_time(learner.propose(rng).schedule, x, cap) for x in test])
    features = dataset.features()
    if method == "ogse":
        awake = {f: sum(f in x.features for x in train) for f in features}
        algo = FeatureGreedy(k, features, cap, horizon=len(train), horizons=awake)
        for x in train:
            algo.step(x, rng, gamma=1.0)
        return np.array([expected_capped_time(algo.schedule_for(x, rng), x, cap) for x in test])
    if method == "features-only":
        fo = FeaturesOnly(features, cap, horizon=len(train)).fit(train)
        return np.array([fo.cost(x, rng) for x in test])
    raise ValueError(f"unknown method {method!r}")


def _cell(args):
    dataset, cfg, cap, m, rep, static = args
    split = np.random.default_rng([cfg.seed, m, rep]).permutation(dataset.n)
    train = [dataset.instances[i] for i in split[:m]]
    test = [dataset.instances[i] for i in split[m:]]
    out = []
    for method in cfg.methods:
        rng = _method_rng(cfg.seed, m, rep, method)
        vals = _fit_and_test(method, train, test, dataset, cap, cfg, rng, static)
        out.append((method, m, rep, _weighted_mean(vals, test)))
    return out


def _static_tables(dataset: Dataset, cfg: ExperimentConfig, cap: int) -> dict:
    static = {"pos": {x.id: i for i, x in enumerate(dataset.instances)}}
    if "best-single" in cfg.methods:
        static["single"] = [capped_single_times(dataset.instances, h, cap) for h in range(dataset.k)]
    if "parallel" in cfg.methods:
        sched = parallel_schedule(dataset.k, SR, cfg.quantum, cap)
        static["parallel"] = expected_capped_times(sched, dataset.instances, cap)
    return static


def run_curve(dataset: Dataset, cfg: ExperimentConfig) -> ExperimentReport:
    """Every (m, repetition) cell uses one random split shared by all methods.

    Cells are seeded from ``(seed, m, repetition)`` alone, so running them in
    parallel gives the same rows as running them serially.
    """
    cap = dataset.cap(cfg.cap)
    if any(m in FEATURE_METHODS for m in cfg.methods) and not dataset.features():
        raise ValueError("feature methods need feature labels")
    static = _static_tables(dataset, cfg, cap)
    jobs = [(dataset, cfg, cap, m, rep, static) for m in cfg.resolved_m(dataset.n) for rep in range(cfg.repetitions)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_cell, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    else:
        results = [_cell(j) for j in jobs]
    rows = sorted((r for cell in results for r in cell), key=lambda r: (cfg.methods.index(r[0]), r[1], r[2]))
    return ExperimentReport(rows)


def run_training_curve(dataset: Dataset, cfg: ExperimentConfig | None = None) -> ExperimentReport:
    return run_curve(dataset, cfg or ExperimentConfig())


def run_feature_curve(dataset: Dataset, cfg: ExperimentConfig | None = None) -> ExperimentReport:
    cfg = cfg or ExperimentConfig(methods=FEATURE_METHODS)
    return run_curve(dataset, cfg)
