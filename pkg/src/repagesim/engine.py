"""Seeded discrete-turn scheduler."""

from __future__ import annotations

import dataclasses
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple

from .agents import (
    BuyerState,
    Level,
    Question,
    answer_request,
    choose_query,
    choose_seller,
    ingest_answer,
    verify_informers,
)
from .market import DEFAULT_STOCK, Contract, InvalidChoice, MarketState, QualityDistribution, new_market
from .memory import Answer, RepageMemory, Role


QUESTION_MODES = ("recommend", "specific")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    n_sellers: int = 100
    n_buyers: int = 15
    turns: int = 100
    level: Level = Level.L2
    cheater_fraction: float = 0.0
    stock: int = DEFAULT_STOCK
    epsilon: float = 0.1
    idk_threshold: float = 0.3
    question_split: float = 0.8
    question_mode: str = "specific"
    good_seller_threshold: float = 75.0
    quality_distribution: QualityDistribution = field(default_factory=QualityDistribution)
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.level, Level):
            object.__setattr__(self, "level", parse_level(self.level))
        if isinstance(self.quality_distribution, str):
            object.__setattr__(self, "quality_distribution", QualityDistribution.parse(self.quality_distribution))
        self.validate()

    def validate(self) -> None:
        checks = [
            ("n_sellers", self.n_sellers >= 1, "must be >= 1"),
            ("n_buyers", self.n_buyers >= 2, "must be >= 2"),
            ("turns", self.turns >= 0, "must be >= 0"),
            ("cheater_fraction", 0.0 <= self.cheater_fraction <= 1.0, "must be in [0, 1]"),
            ("stock", self.stock >= 1, "must be >= 1"),
            ("epsilon", 0.0 <= self.epsilon <= 1.0, "must be in [0, 1]"),
            ("idk_threshold", 0.0 <= self.idk_threshold <= 1.0, "must be in [0, 1]"),
            ("question_mode", self.question_mode in QUESTION_MODES, f"must be one of {QUESTION_MODES}"),
            ("question_split", 0.0 <= self.question_split <= 1.0, "must be in [0, 1]"),
            ("good_seller_threshold", 1.0 <= self.good_seller_threshold <= 100.0, "must be in [1, 100]"),
            ("seed", 0 <= self.seed < 2**64, "must be a 64-bit unsigned integer"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigError(f"{name}={getattr(self, name)!r}: {msg}")

    @property
    def n_cheaters(self) -> int:
        return int(round(self.cheater_fraction * self.n_buyers))

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


def parse_level(value) -> Level:
    try:
        return Level(str(value).upper())
    except ValueError:
        raise ConfigError(f"level={value!r}: expected L1 or L2") from None


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SimConfig)}


def coerce_config_value(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        if key in ("n_sellers", "n_buyers", "turns", "stock", "seed"):
            return int(raw)
        if key == "level":
            return parse_level(raw)
        if key == "question_mode":
            return raw
        if key == "quality_distribution":
            return QualityDistribution.parse(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}={raw!r}: {exc}") from None


def read_config_file(path) -> Dict[str, object]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values: Dict[str, object] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        try:
            values[key] = coerce_config_value(key, raw)
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def make_config(file_values: Optional[Dict[str, object]] = None, **overrides) -> SimConfig:
    values = dict(file_values or {})
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return SimConfig(**values)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def stream(seed: int, name: str) -> random.Random:
    """Independent RNG stream for one subsystem, derived from the master seed.

    String seeds are hashed with SHA-512 by :mod:`random`, so streams are
    stable across processes and platforms.
    """
    return random.Random(f"repagesim:{seed}:{name}")


def derive_seeds(master: int, n: int) -> List[int]:
    rng = stream(master, "seeds")
    return [rng.getrandbits(63) for _ in range(n)]


@dataclass
class TurnEvents:
    turn: int
    answers: List[Tuple[int, int, Question, Answer]] = field(default_factory=list)
    contracts: List[Contract] = field(default_factory=list)
    retirements: int = 0
    invalid_choices: int = 0


@dataclass
class World:
    config: SimConfig
    market: MarketState
    buyers: List[BuyerState]
    rng_query: random.Random
    rng_select: random.Random
    rng_order: random.Random
    turn: int = 0
    events: Optional[TurnEvents] = None

    @property
    def buyer_ids(self) -> List[int]:
        return [b.id for b in self.buyers]

    def buyer(self, bid: int) -> BuyerState:
        return self.buyers[bid]


def init(config: SimConfig) -> World:
    config.validate()
    buyers = [
        BuyerState(i, RepageMemory(i, config.idk_threshold), epsilon=config.epsilon)
        for i in range(config.n_buyers)
    ]
    order = list(range(config.n_buyers))
    stream(config.seed, "cheaters").shuffle(order)
    for bid in order[: config.n_cheaters]:
        buyers[bid].is_cheater = True
    market = new_market(
        config.n_sellers, stream(config.seed, "market"),
        config.quality_distribution, config.stock, first_id=config.n_buyers,
    )
    return World(
        config, market, buyers,
        rng_query=stream(config.seed, "query"),
        rng_select=stream(config.seed, "select"),
        rng_order=stream(config.seed, "order"),
    )


def _purchase_with_retry(world: World, buyer: BuyerState, live: List[int],
                         events: TurnEvents) -> Contract:
    market, level, turn = world.market, world.config.level, world.turn
    candidates = list(live)
    while True:
        choice = choose_seller(buyer, candidates, world.rng_select, level)
        try:
            return market.purchase(buyer.id, choice, turn)
        except InvalidChoice:
            events.invalid_choices += 1
            candidates.remove(choice)
            if not candidates:
                raise


def gossip_phase(world: World, order: List[int], events: TurnEvents) -> None:
    """Every buyer asks one question; answers read pre-phase memories."""
    cfg = world.config
    live = world.market.live_ids()
    ids = world.buyer_ids
    asked = []
    for bid in order:
        informer, q = choose_query(world.buyers[bid], ids, live, world.rng_query, cfg.question_split, cfg.question_mode)
        asked.append((bid, informer, q, answer_request(world.buyers[informer], q, cfg.level, live)))
    for bid, informer, q, a in asked:
        ingest_answer(world.buyers[bid], informer, q, a, cfg.level, world.turn)
        events.answers.append((bid, informer, q, a))


def tick(world: World, snapshot_answers: bool = True) -> TurnEvents:
    """Advance one turn.

    ``snapshot_answers=False`` lets answers see gossip ingested earlier in
    the same phase; it exists only to test the snapshot rule.
    """
    events = TurnEvents(world.turn)
    world.events = events
    order = world.buyer_ids
    world.rng_order.shuffle(order)
    if snapshot_answers:
        gossip_phase(world, order, events)
    else:
        cfg = world.config
        live = world.market.live_ids()
        for bid in order:
            informer, q = choose_query(world.buyers[bid], world.buyer_ids, live, world.rng_query, cfg.question_split, cfg.question_mode)
            a = answer_request(world.buyers[informer], q, cfg.level, live)
            ingest_answer(world.buyers[bid], informer, q, a, cfg.level, world.turn)
            events.answers.append((bid, informer, q, a))

    order = world.buyer_ids
    world.rng_order.shuffle(order)
    live = world.market.live_ids()
    for bid in order:
        buyer = world.buyers[bid]
        contract = _purchase_with_retry(world, buyer, live, events)
        buyer.memory.record_outcome(contract.seller, Role.SELLER, contract.quality, world.turn)
        verify_informers(buyer, contract, world.turn)
        events.contracts.append(contract)

    events.retirements = len(world.market.replace_exhausted())
    world.turn += 1
    return events


def simulate(config: SimConfig, keep_events: bool = False):
    """Run ``config.turns`` turns; returns ``(world, records, events)``.

    ``events`` is empty unless ``keep_events`` is set.
    """
    from .metrics import MetricsTracker

    world = init(config)
    tracker = MetricsTracker(config)
    log: List[TurnEvents] = []
    for _ in range(config.turns):
        ev = tick(world)
        tracker.observe(ev)
        if keep_events:
            log.append(ev)
    return world, tracker.records, log


def run(config: SimConfig, keep_events: bool = False):
    """One metrics record per turn; ``(records, events)`` with ``keep_events``."""
    _, records, log = simulate(config, keep_events)
    return (records, log) if keep_events else records
