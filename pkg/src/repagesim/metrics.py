"""Per-turn observables, experiment drivers and CSV output."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Set

from .agents import Level
from .engine import SimConfig, TurnEvents, run

TURN_HEADER = ("turn", "avg_quality", "idk_count", "good_sellers_discovered", "contracts")
COMPARE_HEADER = ("level", "seed") + TURN_HEADER
SWEEP_HEADER = ("cheater_fraction", "level", "seed", "steady_quality")


@dataclass(frozen=True)
class MetricsRecord:
    turn: int
    avg_quality: float
    idk_count: int
    good_sellers_discovered: int
    contracts: int


@dataclass(frozen=True)
class SweepRow:
    cheater_fraction: float
    level: Level
    seed: int
    steady_quality: float


def metric_idk_count(events: TurnEvents) -> int:
    return sum(1 for _, _, _, a in events.answers if a.is_idk)


def metric_good_sellers_discovered(events: TurnEvents, history: Set[int], threshold: float = 75.0) -> int:
    """Count good sellers whose first-ever contract happened this turn.

    ``history`` holds every seller id that had a contract before; it is
    updated in place.
    """
    found = set()
    for c in events.contracts:
        if c.seller not in history:
            history.add(c.seller)
            if c.quality >= threshold:
                found.add(c.seller)
    return len(found)


def metric_avg_quality(events: TurnEvents) -> float:
    if not events.contracts:
        return float("nan")
    return math.fsum(c.quality for c in events.contracts) / len(events.contracts)


class MetricsTracker:
    def __init__(self, config: SimConfig):
        self.threshold = config.good_seller_threshold
        self.history: Set[int] = set()
        self.records: List[MetricsRecord] = []

    def observe(self, events: TurnEvents) -> MetricsRecord:
        rec = MetricsRecord(
            turn=events.turn,
            avg_quality=metric_avg_quality(events),
            idk_count=metric_idk_count(events),
            good_sellers_discovered=metric_good_sellers_discovered(events, self.history, self.threshold),
            contracts=len(events.contracts),
        )
        self.records.append(rec)
        return rec


def metrics_from_log(config: SimConfig, log: Iterable[TurnEvents]) -> List[MetricsRecord]:
    tracker = MetricsTracker(config)
    for ev in log:
        tracker.observe(ev)
    return tracker.records


def steady_quality(records: Sequence[MetricsRecord], window_frac: float = 0.25) -> float:
    """Mean avg_quality over the last ``ceil(turns * window_frac)`` turns."""
    if not records:
        return float("nan")
    k = max(1, math.ceil(len(records) * window_frac))
    return math.fsum(r.avg_quality for r in records[-k:]) / k


def turns_to_reach(records: Sequence[MetricsRecord], target: float, window: int = 5) -> int:
    """First turn index whose trailing ``window``-turn mean quality reaches
    ``target``; ``len(records)`` if never."""
    for i in range(window - 1, len(records)):
        m = math.fsum(r.avg_quality for r in records[i - window + 1:i + 1]) / window
        if m >= target:
            return i
    return len(records)


# -- experiment drivers --------------------------------------------------

def _steady_job(args) -> SweepRow:
    config, window_frac = args
    return SweepRow(config.cheater_fraction, config.level, config.seed,
                    steady_quality(run(config), window_frac))


def _records_job(config: SimConfig) -> List[MetricsRecord]:
    return run(config)


def _map(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def sweep_cheaters(base: SimConfig, fractions: Sequence[float], seeds: Sequence[int],
                   workers: int = 1, window_frac: float = 0.25) -> List[SweepRow]:
    """Run L1 and L2 at every (fraction, seed); rows sorted by
    (fraction, level, seed)."""
    for f in fractions:
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"cheater fraction {f} outside [0, 1]")
    jobs = [
        (base.replace(cheater_fraction=float(f), level=level, seed=int(s)), window_frac)
        for f in fractions for level in (Level.L1, Level.L2) for s in seeds
    ]
    rows = _map(_steady_job, jobs, workers)
    return sorted(rows, key=lambda r: (r.cheater_fraction, r.level.value, r.seed))


def compare_levels(base: SimConfig, seeds: Sequence[int], workers: int = 1):
    """Per-turn records for L1 and L2 on a shared seed set.

    Returns ``[(level, seed, records)]`` sorted by level then seed.
    """
    keys = [(level, int(s)) for level in (Level.L1, Level.L2) for s in seeds]
    results = _map(_records_job, [base.replace(level=l, seed=s) for l, s in keys], workers)
    return sorted(((l, s, r) for (l, s), r in zip(keys, results)), key=lambda t: (t[0].value, t[1]))


# -- CSV -------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, Level):
        return x.value
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def _turn_fields(r: MetricsRecord):
    return (r.turn, r.avg_quality, r.idk_count, r.good_sellers_discovered, r.contracts)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit_csv(items: Sequence, path) -> Path:
    """Write metrics records or sweep rows as CSV (6-decimal reals)."""
    items = list(items)
    if items and isinstance(items[0], SweepRow):
        return write_rows(path, SWEEP_HEADER, (
            (r.cheater_fraction, r.level, r.seed, r.steady_quality) for r in items))
    return write_rows(path, TURN_HEADER, (_turn_fields(r) for r in items))


def emit_compare_csv(results, path) -> Path:
    return write_rows(path, COMPARE_HEADER, (
        (level, seed) + _turn_fields(r) for level, seed, recs in results for r in recs))


def read_csv(path) -> List[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
