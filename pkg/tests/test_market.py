import random

import pytest
from hypothesis import given, settings, strategies as st

from repagesim.market import (
    InvalidChoice,
    QualityDistribution,
    new_market,
)


def market(n=5, stock=25, quality=None, seed=1):
    return new_market(n, random.Random(seed), quality, stock)


class TestQualityDistribution:
    def test_point(self):
        m = market(quality=QualityDistribution.parse("point:50"))
        s = m.draw_seller()
        assert (s.quality, s.stock) == (50, 25)

    def test_uniform_range(self):
        rng = random.Random(3)
        qs = [QualityDistribution().sample(rng) for _ in range(5000)]
        assert min(qs) >= 1 and max(qs) <= 100
        assert all(q == int(q) for q in qs)
        assert {1.0, 100.0} <= set(qs)

    def test_normal_truncated(self):
        rng = random.Random(3)
        d = QualityDistribution.parse("normal:95:30")
        assert all(1 <= d.sample(rng) <= 100 for _ in range(2000))

    @pytest.mark.parametrize("text", ["uniform:1:100", "normal:60:20", "point:50"])
    def test_round_trip(self, text):
        assert str(QualityDistribution.parse(text)) == text

    @pytest.mark.parametrize("text", ["beta:1:2", "uniform:0:100", "uniform:50:10", "point:101", "normal:50:0", "uniform:a:b", "point"])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            QualityDistribution.parse(text)

    def test_mean_above_uniform(self):
        assert QualityDistribution().mean_above(75) == 87.5
        assert QualityDistribution.parse("point:40").mean_above(75) == 40

    def test_mean_above_matches_enumeration(self):
        d = QualityDistribution.parse("uniform:20:80")
        good = [q for q in range(20, 81) if q >= 61.5]
        assert d.mean_above(61.5) == pytest.approx(sum(good) / len(good))


class TestPurchase:
    def test_decrements_stock(self):
        m = market(stock=2)
        sid = m.live_ids()[0]
        c = m.purchase(7, sid, 3)
        assert m.sellers[sid].stock == 1
        assert (c.buyer, c.seller, c.quality, c.turn) == (7, sid, m.sellers[sid].quality, 3)

    def test_last_unit_then_replacement(self):
        m = market(stock=1)
        sid = m.live_ids()[0]
        m.purchase(0, sid, 0)
        pairs = m.replace_exhausted()
        assert len(pairs) == 1 and pairs[0][0] == sid
        assert sid not in m.sellers
        new = pairs[0][1]
        assert new == 5 and new in m.sellers
        assert m.sellers[new].stock == 1
        assert m.retired_count == 1
        assert len(m.sellers) == 5

    def test_race_second_buyer_rejected(self):
        m = market(stock=1)
        sid = m.live_ids()[0]
        m.purchase(0, sid, 0)
        with pytest.raises(InvalidChoice):
            m.purchase(1, sid, 0)

    def test_unknown_seller(self):
        with pytest.raises(InvalidChoice):
            market().purchase(0, 999, 0)

    def test_retire_with_stock_is_an_error(self):
        m = market()
        with pytest.raises(ValueError):
            m.retire_and_replace(m.live_ids()[0])

    def test_first_id_offset(self):
        m = new_market(3, random.Random(0), stock=5, first_id=15)
        assert m.live_ids() == [15, 16, 17]

    def test_replacement_quality_is_a_fresh_draw(self):
        # identical retiree qualities, replacements follow the distribution
        m = market(n=1, stock=1, seed=11)
        qs = []
        for t in range(400):
            sid = m.live_ids()[0]
            m.purchase(0, sid, t)
            m.replace_exhausted()
            qs.append(m.sellers[m.live_ids()[0]].quality)
        assert len(set(qs)) > 50


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(1, 4), st.lists(st.integers(0, 50), max_size=120), st.integers(0, 2**32))
def test_market_invariants(n, stock, picks, seed):
    m = market(n=n, stock=stock, seed=seed)
    ever = set(m.live_ids())
    contracts = []
    for i, p in enumerate(picks):
        live = m.live_ids()
        sid = live[p % len(live)]
        contracts.append(m.purchase(0, sid, i))
        for old, new in m.replace_exhausted():
            assert new not in ever
            ever.add(new)
        assert len(m.sellers) == n
    assert m.units_sold() == len(contracts)
    by_seller = {}
    for c in contracts:
        by_seller.setdefault(c.seller, set()).add(c.quality)
    assert all(len(q) == 1 for q in by_seller.values())
