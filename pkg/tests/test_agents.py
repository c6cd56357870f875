import random
from collections import Counter

import pytest
from scipy.stats import chisquare

from repagesim.agents import (
    OPTIMISM_PRIOR,
    BuyerState,
    Level,
    ProtocolViolation,
    Question,
    answer_request,
    choose_query,
    choose_seller,
    honest_answer,
    ingest_answer,
    verify_informers,
)
from repagesim.evaluation import one_hot, quality_to_distribution, reverse
from repagesim.market import Contract
from repagesim.memory import IDK, Answer, Evaluation, Kind, RepageMemory, Role

VB, VG = one_hot(0), one_hot(4)
SELLERS = list(range(100, 110))


def buyer(bid=0, cheater=False, epsilon=0.0):
    return BuyerState(bid, RepageMemory(bid), is_cheater=cheater, epsilon=epsilon)


def knows(b, seller, q, times=1):
    for t in range(times):
        b.memory.record_outcome(seller, Role.SELLER, q, t)


class TestChooseQuery:
    def test_two_buyers_forced_informer(self):
        rng = random.Random(0)
        for _ in range(50):
            informer, q = choose_query(buyer(0), [0, 1], SELLERS, rng, mode="specific")
            assert informer == 1
            assert q.about != 0

    def test_needs_two_buyers(self):
        with pytest.raises(ValueError):
            choose_query(buyer(0), [0], SELLERS, random.Random(0))

    def test_deterministic(self):
        a = [choose_query(buyer(0), range(15), SELLERS, random.Random(4), mode="specific") for _ in range(3)]
        b = [choose_query(buyer(0), range(15), SELLERS, random.Random(4), mode="specific") for _ in range(3)]
        assert a == b

    def test_split_close_to_configured(self):
        rng = random.Random(2026)
        qs = [choose_query(buyer(0), range(15), SELLERS, rng, 0.8, "specific")[1] for _ in range(10_000)]
        frac = sum(q.role is Role.SELLER for q in qs) / len(qs)
        assert abs(frac - 0.8) <= 0.02
        assert all(q.about in SELLERS for q in qs if q.role is Role.SELLER)
        assert all(q.about in range(1, 15) for q in qs if q.role is Role.INFORMER)

    def test_recommend_mode_leaves_target_open(self):
        rng = random.Random(1)
        qs = [choose_query(buyer(0), range(5), SELLERS, rng, 1.0, "recommend")[1] for _ in range(20)]
        assert all(q.is_recommendation for q in qs)


class TestAnswer:
    def test_honest_passthrough(self):
        b = buyer(1)
        knows(b, 100, 90)
        a = answer_request(b, Question(100, Role.SELLER), Level.L1)
        assert a.image.distribution == pytest.approx(VG)
        assert a.reputation is None

    def test_cheater_reverses(self):
        b = buyer(1, cheater=True)
        knows(b, 100, 90)
        a = answer_request(b, Question(100, Role.SELLER), Level.L1)
        assert a.image.distribution == pytest.approx(VB)

    def test_l1_strips_reputation(self):
        b = buyer(1)
        b.memory.record_told_reputation(2, 100, Role.SELLER, VG, 0)
        q = Question(100, Role.SELLER)
        assert answer_request(b, q, Level.L1) is IDK
        assert answer_request(b, q, Level.L2).reputation is not None

    def test_unknown_is_idk_for_cheaters_too(self):
        q = Question(100, Role.SELLER)
        assert answer_request(buyer(1), q, Level.L2) is IDK
        assert answer_request(buyer(1, cheater=True), q, Level.L2) is IDK

    def test_cheater_mirrors_honest_on_same_state(self):
        rng = random.Random(5)
        for _ in range(50):
            honest, cheat = buyer(1), buyer(1, cheater=True)
            for t in range(rng.randint(0, 6)):
                s, q = rng.choice(SELLERS), rng.randint(1, 100)
                voice = one_hot(rng.randrange(5))
                for b in (honest, cheat):
                    b.memory.record_outcome(s, Role.SELLER, q, t)
                    b.memory.record_told_reputation(3, s, Role.SELLER, voice, t)
            for s in SELLERS:
                q = Question(s, Role.SELLER)
                h, c = answer_request(honest, q, Level.L2), answer_request(cheat, q, Level.L2)
                if h.is_idk:
                    assert c.is_idk
                    continue
                for part in ("image", "reputation"):
                    hp, cp = getattr(h, part), getattr(c, part)
                    assert (hp is None) == (cp is None)
                    if hp is not None:
                        assert cp.distribution == reverse(hp.distribution)
                        assert cp.strength == hp.strength

    def test_recommendation_names_best_and_cheater_names_worst(self):
        honest, cheat = buyer(1), buyer(2, cheater=True)
        for b in (honest, cheat):
            knows(b, 101, 90)
            knows(b, 102, 10)
        q = Question(None, Role.SELLER)
        assert honest_answer(honest, q, Level.L1, SELLERS).about == 101
        lie = answer_request(cheat, q, Level.L1, SELLERS)
        assert lie.about == 102
        assert lie.image.distribution == pytest.approx(VG)


class TestIngest:
    def test_idk_changes_nothing(self):
        b = buyer()
        assert ingest_answer(b, 1, Question(100, Role.SELLER), IDK, Level.L2, 0) == []
        assert len(b.memory) == 0 and not b.pending_reports

    def test_image_answer_wires_pending_report(self):
        b = buyer()
        a = Answer(Evaluation(VG, 1 / 3), None)
        ingest_answer(b, 1, Question(100, Role.SELLER), a, Level.L1, 0)
        assert b.memory.node_for(100, Role.SELLER, Kind.SHARED_EVALUATION) is not None
        assert b.pending_reports == {100: [(1, VG)]}

    def test_reputation_in_l1_is_a_violation(self):
        a = Answer(None, Evaluation(VG, 1 / 3))
        with pytest.raises(ProtocolViolation):
            ingest_answer(buyer(), 1, Question(100, Role.SELLER), a, Level.L1, 0)

    def test_l2_image_answer_also_counts_as_voice(self):
        b = buyer()
        ingest_answer(b, 1, Question(100, Role.SELLER), Answer(Evaluation(VG, 1.0), None), Level.L2, 0)
        rep = b.memory.reputation(100, Role.SELLER)
        assert rep is not None and rep.distribution == pytest.approx(VG)

    def test_informer_questions_not_pending(self):
        b = buyer()
        ingest_answer(b, 1, Question(5, Role.INFORMER), Answer(Evaluation(VG, 1.0), None), Level.L1, 0)
        assert not b.pending_reports


class TestChooseSeller:
    def test_known_good_beats_prior(self):
        b = buyer()
        knows(b, 105, 90)
        assert choose_seller(b, SELLERS, random.Random(0), Level.L1) == 105

    def test_all_unknown_smallest_id(self):
        assert choose_seller(buyer(), SELLERS, random.Random(0), Level.L2) == SELLERS[0]

    def test_known_bad_avoided(self):
        b = buyer()
        knows(b, 100, 10)
        assert choose_seller(b, SELLERS, random.Random(0), Level.L1) == 101

    def test_reputation_only_counts_in_l2(self):
        b = buyer()
        b.memory.record_told_reputation(1, 107, Role.SELLER, VG, 0)
        assert choose_seller(b, SELLERS, random.Random(0), Level.L2) == 107
        assert choose_seller(b, SELLERS, random.Random(0), Level.L1) == 100

    def test_image_overrides_reputation(self):
        b = buyer()
        b.memory.record_told_reputation(1, 107, Role.SELLER, VG, 0)
        knows(b, 107, 30)
        assert choose_seller(b, SELLERS, random.Random(0), Level.L2) == 100

    def test_prior_tie_goes_to_smaller_id(self):
        b = buyer()
        knows(b, 104, OPTIMISM_PRIOR)
        assert choose_seller(b, SELLERS, random.Random(0), Level.L1) == 100

    def test_retired_sellers_ignored(self):
        b = buyer()
        knows(b, 99, 90)
        assert choose_seller(b, SELLERS, random.Random(0), Level.L1) == 100

    def test_epsilon_one_is_uniform(self):
        rng = random.Random(99)
        b = buyer(epsilon=1.0)
        knows(b, 105, 90)
        counts = Counter(choose_seller(b, SELLERS, rng, Level.L1) for _ in range(10_000))
        assert set(counts) == set(SELLERS)
        assert chisquare([counts[s] for s in SELLERS]).pvalue > 0.01


class TestVerify:
    @pytest.mark.parametrize("told, expected_q", [
        (VG, 90),
        (VB, 10),
        ((0, 0, 0, 0.5, 0.5), 50),
    ])
    def test_accuracy_to_outcome(self, told, expected_q):
        b = buyer()
        b.pending_reports[100] = [(3, told)]
        before = {n.id for n in b.memory.nodes.values() if n.role is Role.SELLER}
        verify_informers(b, Contract(0, 100, 90, 4), 4)
        assert 100 not in b.pending_reports
        leaf = b.memory.nodes_of(3, Role.INFORMER, Kind.OUTCOME)
        assert len(leaf) == 1
        assert leaf[0].distribution == pytest.approx(quality_to_distribution(expected_q))
        assert {n.id for n in b.memory.nodes.values() if n.role is Role.SELLER} == before

    def test_foreign_contract_rejected(self):
        with pytest.raises(ValueError):
            verify_informers(buyer(0), Contract(1, 100, 50, 0), 0)

    def test_nothing_pending(self):
        assert verify_informers(buyer(), Contract(0, 100, 50, 0), 0) == []
