"""Sellers, stock and purchases."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .evaluation import QUALITY_MAX, QUALITY_MIN

DEFAULT_STOCK = 150


class InvalidChoice(Exception):
    """Purchase attempted from a retired, unknown or sold-out seller."""


@dataclass(frozen=True)
class QualityDistribution:
    """Stationary distribution of seller qualities.

    ``kind`` is one of ``uniform`` (integers ``a..b``), ``normal`` (mean
    ``a``, sd ``b``, rounded and truncated to [1, 100] by resampling) or
    ``point`` (always ``a``).
    """

    kind: str = "uniform"
    a: float = 1.0
    b: float = 100.0

    KINDS = ("uniform", "normal", "point")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown quality distribution {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "uniform":
            if not (QUALITY_MIN <= self.a <= self.b <= QUALITY_MAX) or self.a != int(self.a) or self.b != int(self.b):
                raise ValueError(f"uniform bounds must be integers with 1 <= a <= b <= 100, got {self.a}, {self.b}")
        elif self.kind == "point":
            if not QUALITY_MIN <= self.a <= QUALITY_MAX:
                raise ValueError(f"point quality {self.a} outside [1, 100]")
        elif self.b <= 0:
            raise ValueError("normal sd must be positive")

    @classmethod
    def parse(cls, text: str) -> "QualityDistribution":
        """Parse ``uniform:1:100``, ``normal:60:20`` or ``point:50``."""
        parts = text.strip().split(":")
        try:
            if parts[0] == "point" and len(parts) == 2:
                return cls("point", float(parts[1]), float(parts[1]))
            if len(parts) == 3:
                return cls(parts[0], float(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise ValueError(f"bad quality distribution {text!r}: {exc}") from None
        raise ValueError(f"bad quality distribution {text!r}; use uniform:A:B, normal:MEAN:SD or point:Q")

    def __str__(self) -> str:
        if self.kind == "point":
            return f"point:{self.a:g}"
        return f"{self.kind}:{self.a:g}:{self.b:g}"

    def sample(self, rng: random.Random) -> float:
        if self.kind == "point":
            return float(self.a)
        if self.kind == "uniform":
            return float(rng.randint(int(self.a), int(self.b)))
        while True:
            q = round(rng.gauss(self.a, self.b))
            if QUALITY_MIN <= q <= QUALITY_MAX:
                return float(q)

    def mean_above(self, threshold: float) -> float:
        """Mean quality of sellers at or above ``threshold``."""
        if self.kind == "point":
            return float(self.a)
        if self.kind == "uniform":
            lo = max(int(self.a), int(-(-threshold // 1)))
            hi = int(self.b)
            if lo > hi:
                return float("nan")
            return (lo + hi) / 2.0
        support = [q for q in range(max(1, int(-(-threshold // 1))), 101)]
        w = [math.exp(-0.5 * ((q - self.a) / self.b) ** 2) for q in support]
        return sum(q * x for q, x in zip(support, w)) / sum(w) if support else float("nan")


@dataclass
class Seller:
    id: int
    quality: float
    stock: int
    initial_stock: int


@dataclass(frozen=True)
class Contract:
    buyer: int
    seller: int
    quality: float
    turn: int


@dataclass
class MarketState:
    """Live sellers, keyed by id.  Ids come from a shared agent-id counter
    so they never collide with buyers and are never reused."""

    rng: random.Random
    quality: QualityDistribution = field(default_factory=QualityDistribution)
    stock: int = DEFAULT_STOCK
    next_id: int = 0
    sellers: Dict[int, Seller] = field(default_factory=dict)
    retired_count: int = 0
    created: List[Seller] = field(default_factory=list)

    def draw_seller(self) -> Seller:
        seller = Seller(self.next_id, self.quality.sample(self.rng), self.stock, self.stock)
        self.next_id += 1
        self.sellers[seller.id] = seller
        self.created.append(seller)
        return seller

    def live_ids(self) -> List[int]:
        return sorted(self.sellers)

    def purchase(self, buyer: int, seller_id: int, turn: int) -> Contract:
        seller = self.sellers.get(seller_id)
        if seller is None or seller.stock < 1:
            raise InvalidChoice(f"seller {seller_id} cannot sell")
        seller.stock -= 1
        return Contract(buyer, seller.id, seller.quality, turn)

    def retire_and_replace(self, seller_id: int) -> Seller:
        seller = self.sellers[seller_id]
        if seller.stock != 0:
            raise ValueError(f"seller {seller_id} still has stock {seller.stock}")
        del self.sellers[seller_id]
        self.retired_count += 1
        return self.draw_seller()

    def replace_exhausted(self) -> List[Tuple[int, int]]:
        """Retire every sold-out seller; returns (old id, new id) pairs."""
        out = []
        for sid in sorted(self.sellers):
            if self.sellers[sid].stock == 0:
                out.append((sid, self.retire_and_replace(sid).id))
        return out

    def units_sold(self) -> int:
        return sum(s.initial_stock - s.stock for s in self.created)


def new_market(n_sellers: int, rng: random.Random, quality: Optional[QualityDistribution] = None,
               stock: int = DEFAULT_STOCK, first_id: int = 0) -> MarketState:
    market = MarketState(rng, quality or QualityDistribution(), stock, first_id)
    for _ in range(n_sellers):
        market.draw_seller()
    return market
