"""CSV formats: recorded runtimes, Boolean features, anytime achievement times
and schedules."""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .anytime import ObjectiveSpec
from .core import ExecutionModel, Instance, RuntimeProfile, Schedule, RunSegment
from .experts import ALWAYS

log = logging.getLogger(__name__)

RUNTIME_HEADER = ["instance_id", "heuristic_id", "sample_index", "time", "censored"]
FEATURE_HEADER = ["instance_id", "feature_name", "value"]
ANYTIME_HEADER = ["instance_id", "heuristic_id", "objective_name", "time_or_censored"]
SCHEDULE_HEADER = ["step", "heuristic", "tau", "model"]


class InputError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass
class Dataset:
    instances: list[Instance]
    heuristics: list[str]
    limit: int | None = None
    notes: list[str] = field(default_factory=list)
    discarded: list[str] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.heuristics)

    @property
    def n(self) -> int:
        return len(self.instances)

    def default_cap(self) -> int:
        if self.limit is not None:
            return self.limit
        return max(p.max_solved or 1 for x in self.instances for p in x.profiles)

    def cap(self, requested: int | None = None) -> int:
        """Requested cap clamped to the censoring limit."""
        cap = self.default_cap() if requested is None else int(requested)
        if cap < 1:
            raise InputError("cap must be at least 1")
        if self.limit is not None and cap > self.limit:
            log.warning("cap %d exceeds censoring limit %d; clamping", cap, self.limit)
            cap = self.limit
        return cap

    def features(self) -> list[str]:
        names = sorted({f for x in self.instances for f in x.features} - {ALWAYS})
        return ([ALWAYS] if any(ALWAYS in x.features for x in self.instances) else []) + names


def _read_text(source) -> str:
    """``source`` is a path, or CSV text when it is a string containing a newline."""
    if isinstance(source, str) and "\n" in source:
        return source
    if hasattr(source, "read"):
        return source.read()
    return Path(source).read_text()


def _rows(source, header: Sequence[str], optional: Sequence[str] = (), allow_empty: bool = False):
    """Yield ``(line_no, dict)`` rows, skipping ``#`` comment lines."""
    text = _read_text(source)
    comments = []
    lines = []
    for no, line in enumerate(text.splitlines(), 1):
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif line.strip():
            lines.append((no, line))
    if not lines:
        if allow_empty:
            return comments, []
        raise InputError("missing CSV header")
    got = next(csv.reader([lines[0][1]]))
    got = [c.strip() for c in got]
    if got[: len(header)] != list(header) or any(c not in optional for c in got[len(header):]):
        raise InputError(f"expected header {','.join(header)}, got {','.join(got)}")
    rows = []
    for no, line in lines[1:]:
        vals = next(csv.reader([line]))
        if len(vals) != len(got):
            raise InputError(f"line {no}: expected {len(got)} fields, got {len(vals)}")
        rows.append((no, dict(zip(got, (v.strip() for v in vals)))))
    return comments, rows


def _int(value: str, what: str, no: int) -> int:
    try:
        v = int(value)
    except ValueError:
        raise InputError(f"line {no}: {what} must be an integer, got {value!r}") from None
    return v


def load_runtimes(source) -> Dataset:
    """Parse a runtimes CSV; instances no heuristic solves are dropped."""
    comments, rows = _rows(source, RUNTIME_HEADER, optional=("weight",))
    samples: dict[tuple[str, str], dict[int, tuple[bool, int]]] = defaultdict(dict)
    inst_order: dict[str, None] = {}
    heur_order: dict[str, None] = {}
    weights: dict[str, float] = {}
    limits = set()
    for no, r in rows:
        iid, hid = r["instance_id"], r["heuristic_id"]
        if not iid or not hid:
            raise InputError(f"line {no}: empty instance or heuristic id")
        idx = _int(r["sample_index"], "sample_index", no)
        t = _int(r["time"], "time", no)
        if t < 1:
            raise InputError(f"line {no}: time must be positive")
        cens = r["censored"]
        if cens not in ("0", "1"):
            raise InputError(f"line {no}: censored must be 0 or 1, got {cens!r}")
        if cens == "1":
            limits.add(t)
        key = (iid, hid)
        if idx in samples[key]:
            raise InputError(f"line {no}: duplicate sample {idx} for {iid}/{hid}")
        samples[key][idx] = (cens == "0", t)
        inst_order.setdefault(iid)
        heur_order.setdefault(hid)
        if "weight" in r and r["weight"]:
            try:
                w = float(r["weight"])
            except ValueError:
                raise InputError(f"line {no}: bad weight {r['weight']!r}") from None
            if not w > 0:
                raise InputError(f"line {no}: weight must be positive")
            if weights.setdefault(iid, w) != w:
                raise InputError(f"line {no}: conflicting weights for {iid}")
    if len(limits) > 1:
        raise InputError(f"inconsistent censoring limits {sorted(limits)}")
    limit = limits.pop() if limits else None
    heuristics = list(heur_order)
    instances, discarded = [], []
    for iid in inst_order:
        profiles = []
        for hid in heuristics:
            recs = samples.get((iid, hid))
            if not recs:
                raise InputError(f"no samples for instance {iid!r}, heuristic {hid!r}")
            recs = [recs[i] for i in sorted(recs)]
            if limit is not None and any(ok and t > limit for ok, t in recs):
                raise InputError(f"{iid}/{hid}: solve time beyond censoring limit {limit}")
            profiles.append(RuntimeProfile.from_records(recs))
        if not any(p.solved for p in profiles):
            discarded.append(iid)
            continue
        instances.append(Instance(iid, tuple(profiles), weights.get(iid, 1.0)))
    if discarded:
        log.info("discarded %d instances no heuristic solves", len(discarded))
    return Dataset(instances, heuristics, limit, comments, discarded)


def _fmt_weight(w: float) -> str:
    return repr(float(w))


def runtimes_csv(dataset: Dataset, with_weights: bool | None = None) -> str:
    if with_weights is None:
        with_weights = any(x.weight != 1.0 for x in dataset.instances)
    buf = io.StringIO()
    for note in dataset.notes:
        buf.write(f"# {note}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUNTIME_HEADER + (["weight"] if with_weights else []))
    for x in dataset.instances:
        for h, name in enumerate(dataset.heuristics):
            p = x.profiles[h]
            for i, (ok, t) in enumerate(p.records()):
                if t is None:
                    t = dataset.limit
                row = [x.id, name, i, t, 0 if ok else 1]
                if with_weights:
                    row.append(_fmt_weight(x.weight))
                w.writerow(row)
    return buf.getvalue()


def load_features(source, dataset: Dataset) -> Dataset:
    """Attach Boolean features; every instance also gets the always-true feature."""
    _, rows = _rows(source, FEATURE_HEADER, allow_empty=True)
    known = {x.id for x in dataset.instances}
    dropped = set(dataset.discarded)
    true: dict[str, set[str]] = defaultdict(set)
    for no, r in rows:
        iid = r["instance_id"]
        if iid not in known and iid not in dropped:
            raise InputError(f"line {no}: unknown instance {iid!r}")
        if r["value"] not in ("0", "1"):
            raise InputError(f"line {no}: feature value must be 0 or 1, got {r['value']!r}")
        if not r["feature_name"]:
            raise InputError(f"line {no}: empty feature name")
        if r["value"] == "1":
            true[iid].add(r["feature_name"])
    instances = [replace(x, features=frozenset(true[x.id]) | {ALWAYS}) for x in dataset.instances]
    return replace(dataset, instances=instances)


def features_csv(dataset: Dataset) -> str:
    names = [f for f in dataset.features() if f != ALWAYS]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FEATURE_HEADER)
    for x in dataset.instances:
        for f in names:
            w.writerow([x.id, f, int(f in x.features)])
    return buf.getvalue()


@dataclass
class AnytimeData:
    instances: list[Instance]
    heuristics: list[str]
    objectives: list[ObjectiveSpec]
    limit: int | None = None


def load_anytime(source, weights: dict[str, float] | None = None) -> AnytimeData:
    """Parse achievement times; objectives keep first-appearance order and get
    uniform weights unless ``weights`` says otherwise."""
    comments, rows = _rows(source, ANYTIME_HEADER)
    limit = None
    for c in comments:
        if c.startswith("limit"):
            limit = _int(c.split("=", 1)[-1].split(":", 1)[-1].strip(), "limit", 0)
    inst: dict[str, None] = {}
    heur: dict[str, None] = {}
    objs: dict[str, None] = {}
    values: dict[tuple[str, str, str], RuntimeProfile] = {}
    for no, r in rows:
        iid, hid, obj, v = r["instance_id"], r["heuristic_id"], r["objective_name"], r["time_or_censored"]
        inst.setdefault(iid)
        heur.setdefault(hid)
        objs.setdefault(obj)
        if (iid, hid, obj) in values:
            raise InputError(f"line {no}: duplicate entry for {iid}/{hid}/{obj}")
        if v.lower() in ("censored", "inf", "-", ""):
            values[(iid, hid, obj)] = RuntimeProfile((), 1, limit)
        else:
            t = _int(v, "time", no)
            if t < 1:
                raise InputError(f"line {no}: time must be positive")
            values[(iid, hid, obj)] = RuntimeProfile((t,))
    heuristics = list(heur)
    names = list(objs)
    weights = weights or {}
    unknown = set(weights) - set(names)
    if unknown:
        raise InputError(f"weights given for unknown objectives {sorted(unknown)}")
    objectives = []
    for o in names:
        times = {}
        for iid in inst:
            for h, hid in enumerate(heuristics):
                if (iid, hid, o) not in values:
                    raise InputError(f"missing achievement time for {iid}/{hid}/{o}")
                times[(iid, h)] = values[(iid, hid, o)]
        objectives.append(ObjectiveSpec(o, weights.get(o, 1.0 / len(names)), times))
    # base instances only carry identity; expand_instances supplies the profiles
    instances = [
        Instance(iid, tuple(objectives[0].times[(iid, h)] for h in range(len(heuristics))))
        for iid in inst
    ]
    return AnytimeData(instances, heuristics, objectives, limit)


def anytime_csv(data: AnytimeData) -> str:
    buf = io.StringIO()
    if data.limit is not None:
        buf.write(f"# limit: {data.limit}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ANYTIME_HEADER)
    for x in data.instances:
        for h, name in enumerate(data.heuristics):
            for o in data.objectives:
                p = o.times[(x.id, h)]
                w.writerow([x.id, name, o.name, p.solved[0] if p.solved else "censored"])
    return buf.getvalue()


def schedule_csv(schedule: Schedule, names: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCHEDULE_HEADER)
    for i, seg in enumerate(schedule.segments, 1):
        w.writerow([i, names[seg.heuristic], seg.tau, schedule.models[seg.heuristic].value])
    return buf.getvalue()


def load_schedule(source, names: Sequence[str]) -> Schedule:
    """Parse a schedule CSV; heuristics missing from it default to suspend-resume."""
    _, rows = _rows(source, SCHEDULE_HEADER)
    index = {n: i for i, n in enumerate(names)}
    models: list[ExecutionModel | None] = [None] * len(names)
    segs = []
    for expected, (no, r) in enumerate(rows, 1):
        if _int(r["step"], "step", no) != expected:
            raise InputError(f"line {no}: steps must be numbered 1, 2, ...")
        if r["heuristic"] not in index:
            raise InputError(f"line {no}: unknown heuristic {r['heuristic']!r}")
        h = index[r["heuristic"]]
        try:
            model = ExecutionModel.parse(r["model"])
            seg = RunSegment(h, _int(r["tau"], "tau", no))
        except ValueError as e:
            raise InputError(f"line {no}: {e}") from None
        if models[h] is not None and models[h] is not model:
            raise InputError(f"line {no}: heuristic {r['heuristic']!r} changes execution model")
        models[h] = model
        segs.append(seg)
    return Schedule(tuple(segs), tuple(m or ExecutionModel.SUSPEND_RESUME for m in models))
