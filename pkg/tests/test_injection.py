"""Backbone injection: gating decisions, cost accounting, clique load sharing."""

import random

import pytest

from learnmesh.injection import (
    BudgetExceeded,
    CostLedger,
    CostModel,
    Defer,
    EmptyClique,
    Inject,
    InjectionPolicy,
    decide_injection,
    fetch_cost,
    inject_collect_status,
    inject_fetch,
    plan_clique_share,
)
from learnmesh.quiz import Player
from learnmesh.resources import (
    ComponentDescriptor,
    MaterialUnit,
    Question,
    ResourceId,
    Store,
)
from learnmesh.syncproto import Peer, WantRecord
from oracles import exact_makespan


def rid(origin, seq):
    return ResourceId(origin, seq)


M1 = MaterialUnit(rid("t", 0), frozenset({"algebra"}), size=5)
COMP = ComponentDescriptor(rid("t", 1), renders="mc", size=2)
Q1 = Question(
    rid("t", 2),
    qtype="mc",
    anchors=frozenset({M1.id}),
    component=COMP.id,
    author="t",
)
CATALOG = {r.id: r for r in (M1, COMP, Q1)}
MODEL = CostModel(backbone_unit_cost=1.0, backbone_message_cost=2.0)


def want(node, rids, since=0):
    return WantRecord(node, frozenset(rids), blocked_since=since)


def decide(blocked, wants, partition, *, policy, now, ledger=None):
    return decide_injection(
        frozenset(blocked),
        wants,
        partition,
        MODEL,
        policy,
        now,
        CATALOG,
        ledger if ledger is not None else CostLedger(),
    )


class TestDecisions:
    POLICY = InjectionPolicy(budget=100.0, demand_threshold=1, deadlock_grace=3)

    def test_young_blockage_defers_for_grace(self):
        got = decide(
            [M1.id], [want("a", [M1.id], since=2)], [Peer("a", Store())],
            policy=self.POLICY, now=5,
        )
        assert got == [Defer(M1.id, "grace")]

    def test_injects_strictly_after_grace(self):
        got = decide(
            [M1.id], [want("a", [M1.id], since=0)], [Peer("a", Store())],
            policy=self.POLICY, now=4,
        )
        assert got == [Inject(M1.id, "a", 7.0)]

    def test_no_want_records_defers_on_demand(self):
        got = decide([M1.id], [], [Peer("a", Store())], policy=self.POLICY, now=50)
        assert got == [Defer(M1.id, "demand")]

    def test_demand_threshold_counts_distinct_nodes(self):
        policy = InjectionPolicy(budget=100.0, demand_threshold=2, deadlock_grace=0)
        peers = [Peer("a", Store()), Peer("b", Store())]
        one = decide([M1.id], [want("a", [M1.id])], peers, policy=policy, now=9)
        assert one == [Defer(M1.id, "demand")]
        two = decide(
            [M1.id], [want("a", [M1.id]), want("b", [M1.id])], peers,
            policy=policy, now=9,
        )
        assert isinstance(two[0], Inject)

    def test_cost_above_budget_defers(self):
        policy = InjectionPolicy(budget=6.0, demand_threshold=1, deadlock_grace=0)
        got = decide(
            [M1.id], [want("a", [M1.id])], [Peer("a", Store())],
            policy=policy, now=9,
        )
        assert got == [Defer(M1.id, "budget")]

    def test_fetcher_has_most_remaining_budget(self):
        ledger = CostLedger()
        ledger.charge("a", 50.0, "deadlock")
        peers = [Peer("a", Store()), Peer("b", Store())]
        got = decide(
            [M1.id], [want("a", [M1.id]), want("b", [M1.id])], peers,
            policy=self.POLICY, now=9, ledger=ledger,
        )
        assert got == [Inject(M1.id, "b", 7.0)]

    def test_fetcher_tie_breaks_to_lowest_id(self):
        peers = [Peer("b", Store()), Peer("a", Store())]
        got = decide(
            [M1.id], [want("b", [M1.id]), want("a", [M1.id])], peers,
            policy=self.POLICY, now=9,
        )
        assert got[0].fetcher == "a"

    def test_session_cost_skips_held_dependencies(self):
        store = Store([M1, COMP])
        got = decide(
            [Q1.id], [want("a", [Q1.id])], [Peer("a", store)],
            policy=self.POLICY, now=9,
        )
        # only the question itself travels: message 2 + 1 unit
        assert got == [Inject(Q1.id, "a", 3.0)]


class TestFetchCost:
    def test_closure_priced_in(self):
        assert fetch_cost(Q1.id, frozenset(), CATALOG, MODEL) == 2.0 + (5 + 2 + 1)

    def test_held_parts_free(self):
        held = frozenset({M1.id, COMP.id})
        assert fetch_cost(Q1.id, held, CATALOG, MODEL) == 2.0 + 1


class TestInjectFetch:
    def test_single_material_charges_message_plus_units(self):
        node = Peer("a", Store())
        ledger = CostLedger()
        receipt = inject_fetch(node, [M1.id], MODEL, ledger, CATALOG)
        assert receipt.charge == 7.0 and receipt.units == 5
        assert M1.id in node.store
        assert ledger.spent("a") == 7.0

    def test_repeat_fetch_still_pays_message_cost(self):
        node = Peer("a", Store([M1]))
        ledger = CostLedger()
        receipt = inject_fetch(node, [M1.id], MODEL, ledger, CATALOG)
        assert receipt.units == 0 and receipt.charge == 2.0
        assert receipt.added == ()

    def test_closure_rides_along_dependencies_first(self):
        node = Peer("a", Store())
        receipt = inject_fetch(node, [Q1.id], MODEL, CostLedger(), CATALOG)
        ids = [r.id for r in receipt.added]
        assert set(ids) == {M1.id, COMP.id, Q1.id}
        assert ids.index(M1.id) < ids.index(Q1.id)
        assert node.store.dangling() == {}

    def test_budget_guard_raises_before_mutation(self):
        node = Peer("a", Store())
        ledger = CostLedger()
        with pytest.raises(BudgetExceeded):
            inject_fetch(node, [M1.id], MODEL, ledger, CATALOG, budget=5.0)
        assert len(node.store) == 0 and ledger.total == 0.0

    def test_fetch_clears_wants(self):
        node = Peer("a", Store(), wants={M1.id: 0})
        inject_fetch(node, [M1.id], MODEL, CostLedger(), CATALOG)
        assert node.wants == {}

    def test_cause_recorded_in_ledger(self):
        ledger = CostLedger()
        inject_fetch(
            Peer("a", Store()), [M1.id], MODEL, ledger, CATALOG, cause="clique_share"
        )
        assert ledger.by_cause["clique_share"] == 7.0


class TestCliqueShare:
    def test_worked_example_two_members(self):
        sizes = [5, 4, 3, 3, 1]
        items = [
            MaterialUnit(rid("t", 10 + i), frozenset({"x"}), size=s)
            for i, s in enumerate(sizes)
        ]
        plan = plan_clique_share(["a", "b"], items, MODEL)
        assert plan.makespan == 8
        assert sorted(plan.loads.values()) == [8, 8]
        assert exact_makespan(sizes, 2) == 8

    def test_every_item_assigned_exactly_once(self):
        items = [
            MaterialUnit(rid("t", 20 + i), frozenset({"x"}), size=s)
            for i, s in enumerate((7, 3, 3, 2))
        ]
        plan = plan_clique_share(["a", "b", "c"], items, MODEL)
        assigned = [r for share in plan.shares.values() for r in share]
        assert sorted(assigned) == sorted(r.id for r in items)

    def test_empty_clique_rejected(self):
        with pytest.raises(EmptyClique):
            plan_clique_share([], [M1], MODEL)

    def test_lpt_within_four_thirds_of_optimum(self):
        rng = random.Random(8)
        for _ in range(60):
            k = rng.choice((2, 3, 5))
            sizes = [rng.randint(1, 9) for _ in range(rng.randint(1, 10))]
            items = [
                MaterialUnit(rid("t", 30 + i), frozenset({"x"}), size=s)
                for i, s in enumerate(sizes)
            ]
            plan = plan_clique_share([f"n{j}" for j in range(k)], items, MODEL)
            best = exact_makespan(sizes, k)
            assert plan.makespan <= (4 * best) // 3 + (1 if (4 * best) % 3 else 0)
            assert plan.makespan >= best


class TestCollectStatus:
    def test_six_players_two_partitions(self):
        players = [Player(n, knowledge_points=i) for i, n in enumerate("abcdef")]
        ledger = CostLedger()
        reports = inject_collect_status(players, MODEL, ledger)
        assert len(reports) == 6
        assert [r.node for r in reports] == sorted("abcdef")
        assert ledger.total == 6 * MODEL.backbone_message_cost
        assert ledger.by_cause["quiz_status"] == ledger.total

    def test_no_players_no_charges(self):
        ledger = CostLedger()
        assert inject_collect_status([], MODEL, ledger) == ()
        assert ledger.total == 0.0


class TestLedger:
    def test_remaining_tracks_policy_budget(self):
        ledger = CostLedger()
        policy = InjectionPolicy(budget=10.0)
        ledger.charge("a", 4.0, "deadlock")
        assert ledger.remaining("a", policy) == 6.0
        assert ledger.remaining("b", policy) == 10.0

    def test_totals_split_by_cause(self):
        ledger = CostLedger()
        ledger.charge("a", 4.0, "deadlock")
        ledger.charge("b", 1.5, "quiz_status")
        assert ledger.total == 5.5
        assert ledger.by_cause["deadlock"] == 4.0
        assert ledger.per_node["a"] == 4.0


def test_cost_model_validation():
    with pytest.raises(ValueError):
        CostModel(backbone_unit_cost=-1.0, backbone_message_cost=1.0)
    with pytest.raises(ValueError):
        CostModel(backbone_unit_cost=1.0, backbone_message_cost=1.0, adhoc_cost=0.5)
