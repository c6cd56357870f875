"""Buyer behaviour: asking, answering, choosing sellers, judging informers."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .evaluation import Distribution, distance, expected_quality, quality_to_distribution, reverse
from .market import Contract
from .memory import IDK, Answer, Evaluation, Kind, RepageMemory, Role

OPTIMISM_PRIOR = 60.0


class Level(str, enum.Enum):
    L1 = "L1"  # image only
    L2 = "L2"  # image and reputation


class ProtocolViolation(Exception):
    pass


@dataclass(frozen=True)
class Question:
    """``about=None`` with the seller role asks for a recommendation."""

    about: Optional[int]
    role: Role

    @property
    def is_recommendation(self) -> bool:
        return self.about is None


@dataclass
class BuyerState:
    id: int
    memory: RepageMemory
    is_cheater: bool = False
    epsilon: float = 0.1
    #: seller id -> [(informer, told distribution)] awaiting a purchase
    pending_reports: Dict[int, List[Tuple[int, Distribution]]] = field(default_factory=dict)


def choose_query(buyer: BuyerState, buyer_ids: Sequence[int], live_sellers: Sequence[int],
                 rng: random.Random, seller_share: float = 0.8,
                 mode: str = "recommend") -> Tuple[int, Question]:
    others = [b for b in buyer_ids if b != buyer.id]
    if not others:
        raise ValueError("need at least two buyers to exchange information")
    informer = rng.choice(others)
    if rng.random() < seller_share:
        if mode == "recommend":
            return informer, Question(None, Role.SELLER)
        return informer, Question(rng.choice(live_sellers), Role.SELLER)
    return informer, Question(rng.choice(others), Role.INFORMER)


def _scored_sellers(buyer: BuyerState, live: Sequence[int], level: Level) -> Dict[int, float]:
    live_set = set(live)
    mem = buyer.memory
    scores = {t: expected_quality(d) for t, d in mem.usable(Role.SELLER, Kind.IMAGE) if t in live_set}
    if level is Level.L2:
        for t, d in mem.usable(Role.SELLER, Kind.REPUTATION):
            if t in live_set and t not in scores:
                scores[t] = expected_quality(d)
    return scores


def best_known_seller(buyer: BuyerState, live: Sequence[int], level: Level) -> Optional[int]:
    """Live seller with the highest usable evaluation (ties: smallest id)."""
    scores = _scored_sellers(buyer, live, level)
    if not scores:
        return None
    return max(scores.items(), key=lambda kv: (kv[1], -kv[0]))[0]


def worst_known_seller(buyer: BuyerState, live: Sequence[int], level: Level) -> Optional[int]:
    scores = _scored_sellers(buyer, live, level)
    if not scores:
        return None
    return min(scores.items(), key=lambda kv: (kv[1], kv[0]))[0]


def honest_answer(answerer: BuyerState, q: Question, level: Level,
                  live: Sequence[int] = (), pick=best_known_seller) -> Answer:
    about = q.about
    if about is None:
        about = pick(answerer, live, level)
        if about is None:
            return IDK
    answer = answerer.memory.query(about, q.role)
    answer = Answer(answer.image, answer.reputation, about)
    if level is Level.L1 and answer.reputation is not None:
        return IDK if answer.image is None else Answer(answer.image, None, about)
    return answer if not answer.is_idk else IDK


def _lie(ev):
    return None if ev is None else Evaluation(reverse(ev.distribution), ev.strength)


def answer_request(answerer: BuyerState, q: Question, level: Level,
                   live: Sequence[int] = ()) -> Answer:
    if not answerer.is_cheater:
        return honest_answer(answerer, q, level, live)
    # a cheater recommends the seller it rates worst, dressed up as the best
    answer = honest_answer(answerer, q, level, live, pick=worst_known_seller)
    if answer.is_idk:
        return answer
    return Answer(_lie(answer.image), _lie(answer.reputation), answer.about)


def ingest_answer(buyer: BuyerState, informer: int, q: Question, a: Answer,
                  level: Level, turn: int) -> List[int]:
    """Feed an answer into the asker's memory.

    In L2 a told image is also evidence that the evaluation circulates, so
    it is recorded as a voice as well unless the answer carries its own
    reputation part.
    """
    if a.is_idk:
        return []
    if a.reputation is not None and level is Level.L1:
        raise ProtocolViolation("reputation answer in an image-only run")
    about = a.about if a.about is not None else q.about
    if about is None or about == buyer.id:
        return []
    mem = buyer.memory
    changed: List[int] = []
    if a.image is not None:
        changed += mem.record_told_image(informer, about, q.role, a.image.distribution, turn)
        if q.role is Role.SELLER:
            buyer.pending_reports.setdefault(about, []).append((informer, a.image.distribution))
    if level is Level.L2:
        voice = a.reputation if a.reputation is not None else a.image
        changed += mem.record_told_reputation(informer, about, q.role, voice.distribution, turn)
    return changed


def choose_seller(buyer: BuyerState, live_sellers: Sequence[int], rng: random.Random,
                  level: Level) -> int:
    """Epsilon-greedy pick; ties go to the smallest seller id.

    Sellers without a usable evaluation score ``OPTIMISM_PRIOR``.
    """
    if not live_sellers:
        raise ValueError("no live sellers")
    if rng.random() < buyer.epsilon:
        return rng.choice(list(live_sellers))
    scores = _scored_sellers(buyer, live_sellers, level)
    best = None
    for sid in sorted(live_sellers):
        if sid not in scores:
            best = (OPTIMISM_PRIOR, -sid)
            break
    for sid, s in scores.items():
        if best is None or (s, -sid) > best:
            best = (s, -sid)
    return -best[1]  # type: ignore[index]


def verify_informers(buyer: BuyerState, contract: Contract, turn: int) -> List[int]:
    """Score every informer whose report about this seller is now checkable."""
    if contract.buyer != buyer.id:
        raise ValueError("contract belongs to another buyer")
    reports = buyer.pending_reports.pop(contract.seller, [])
    if not reports:
        return []
    observed = quality_to_distribution(contract.quality)
    changed: List[int] = []
    for informer, told in reports:
        accuracy = 1.0 - distance(told, observed)
        changed += buyer.memory.record_outcome(informer, Role.INFORMER, 10.0 + 80.0 * accuracy, turn)
    return changed
