"""Deliberate, cost-charged use of the backbone link.

The ad-hoc network is free but gives no guarantees; the backbone reaches any
device at any time but every use is charged. Three situations justify paying:
a wanted resource no partition member can supply (deadlock), a clique sharing
one fetch bill instead of fetching redundantly, and collecting quiz status
from all partitions at the deadline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple, Union

from .quiz import Player, StatusReport
from .resources import LearningResource, ResourceId, dependencies_of, transfer_size
from .syncproto import Peer, WantRecord


class BudgetExceeded(Exception):
    """A fetch would cost more than the fetcher's remaining budget."""


class EmptyClique(Exception):
    """A share plan needs at least one member."""


@dataclass(frozen=True)
class CostModel:
    backbone_unit_cost: float
    backbone_message_cost: float
    adhoc_cost: float = 0.0  # by design: ad-hoc transfers are never charged

    def __post_init__(self):
        if self.backbone_unit_cost <= 0 or self.backbone_message_cost <= 0:
            raise ValueError("backbone costs must be positive")
        if self.adhoc_cost != 0.0:
            raise ValueError("ad-hoc transfers are free by definition")


@dataclass(frozen=True)
class InjectionPolicy:
    budget: float  # per node
    demand_threshold: int = 1
    deadlock_grace: int = 3

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget cannot be negative")
        if self.demand_threshold < 0 or self.deadlock_grace < 0:
            raise ValueError("thresholds cannot be negative")


@dataclass
class CostLedger:
    """Cumulative backbone spend, per node and per cause."""

    per_node: Dict[str, float] = field(default_factory=dict)
    by_cause: Dict[str, float] = field(default_factory=dict)

    def charge(self, node: str, amount: float, cause: str) -> None:
        if amount < 0:
            raise ValueError("charges cannot be negative")
        self.per_node[node] = self.per_node.get(node, 0.0) + amount
        self.by_cause[cause] = self.by_cause.get(cause, 0.0) + amount

    def spent(self, node: str) -> float:
        return self.per_node.get(node, 0.0)

    @property
    def total(self) -> float:
        return sum(self.per_node.values())

    def remaining(self, node: str, policy: InjectionPolicy) -> float:
        return policy.budget - self.spent(node)


@dataclass(frozen=True)
class Inject:
    rid: ResourceId
    fetcher: str
    cost: float


@dataclass(frozen=True)
class Defer:
    rid: ResourceId
    reason: str  # grace | demand | budget


Decision = Union[Inject, Defer]


@dataclass(frozen=True)
class FetchReceipt:
    node: str
    added: Tuple[LearningResource, ...]
    units: int
    charge: float
    cause: str
    displaced: Tuple[LearningResource, ...] = ()


def _closure_from_catalog(
    roots: Iterable[ResourceId],
    held: FrozenSet[ResourceId],
    catalog: Mapping[ResourceId, LearningResource],
) -> List[LearningResource]:
    """Catalog resources needed so the roots arrive valid, dependencies first.

    Ids the fetcher already holds are satisfied locally and not fetched.
    """
    needed: List[ResourceId] = []
    seen: Set[ResourceId] = set()
    frontier = sorted(roots)
    while frontier:
        rid = frontier.pop()
        if rid in seen or rid in held:
            continue
        seen.add(rid)
        if rid not in catalog:
            raise KeyError(f"resource {rid} unknown to the backbone catalog")
        needed.append(rid)
        frontier.extend(sorted(dependencies_of(catalog[rid])))
    order: Dict[ResourceId, int] = {}
    for rid in needed:
        _mark_depth(rid, catalog, held, order)
    needed.sort(key=lambda r: (order[r], r))
    return [catalog[rid] for rid in needed]


def _mark_depth(rid, catalog, held, order, _stack=None):
    if rid in order:
        return order[rid]
    stack = _stack or set()
    if rid in stack:  # defensive: catalog cycles cannot be sequenced anyway
        order[rid] = 0
        return 0
    depth = 0
    for dep in dependencies_of(catalog[rid]):
        if dep in held or dep not in catalog:
            continue
        depth = max(depth, 1 + _mark_depth(dep, catalog, held, order, stack | {rid}))
    order[rid] = depth
    return depth


def fetch_cost(
    rid: ResourceId,
    held: FrozenSet[ResourceId],
    catalog: Mapping[ResourceId, LearningResource],
    model: CostModel,
) -> float:
    """Price of one injection session delivering rid and its missing closure."""
    needed = _closure_from_catalog([rid], held, catalog)
    units = sum(transfer_size(r) for r in needed)
    return model.backbone_message_cost + units * model.backbone_unit_cost


def decide_injection(
    blocked: FrozenSet[ResourceId],
    wants: Iterable[WantRecord],
    partition: Iterable[Peer],
    model: CostModel,
    policy: InjectionPolicy,
    now: int,
    catalog: Mapping[ResourceId, LearningResource],
    ledger: CostLedger,
) -> List[Decision]:
    """One decision per blocked resource, in id order.

    A resource is injected only when it has been blocked strictly longer than
    the grace period, enough distinct nodes want it, and the designated
    fetcher (the wanting node with the most remaining budget, lowest id on
    ties) can still afford the session.
    """
    records = list(wants)
    peers = {p.id: p for p in partition}
    decisions: List[Decision] = []
    for rid in sorted(blocked):
        wanting = [rec for rec in records if rid in rec.wanted and rec.node in peers]
        if not wanting:
            decisions.append(Defer(rid, "demand"))
            continue
        if now - min(r.blocked_since for r in wanting) <= policy.deadlock_grace:
            decisions.append(Defer(rid, "grace"))
            continue
        if len({rec.node for rec in wanting}) < policy.demand_threshold:
            decisions.append(Defer(rid, "demand"))
            continue
        fetcher = min(
            (rec.node for rec in wanting),
            key=lambda n: (-ledger.remaining(n, policy), n),
        )
        held = frozenset(r.id for r in peers[fetcher].store)
        cost = fetch_cost(rid, held, catalog, model)
        if cost > ledger.remaining(fetcher, policy):
            decisions.append(Defer(rid, "budget"))
            continue
        decisions.append(Inject(rid, fetcher, cost))
    return decisions


@dataclass(frozen=True)
class SharePlan:
    shares: Dict[str, Tuple[ResourceId, ...]]
    loads: Dict[str, int]

    @property
    def makespan(self) -> int:
        return max(self.loads.values()) if self.loads else 0


def plan_clique_share(
    clique: Iterable[str],
    wanted: Iterable[LearningResource],
    model: CostModel,
) -> SharePlan:
    """Split a shared fetch across clique members, balancing per-node units.

    Greedy longest-processing-time assignment: resources in decreasing size
    order each go to the currently least loaded member. Total backbone units
    equal the set's size once, instead of once per member; the clique spreads
    the rest over the free ad-hoc links.
    """
    members = sorted(set(clique))
    if not members:
        raise EmptyClique("share plan needs at least one clique member")
    items = sorted(wanted, key=lambda r: (-transfer_size(r), r.id))
    shares: Dict[str, List[ResourceId]] = {m: [] for m in members}
    loads: Dict[str, int] = {m: 0 for m in members}
    for res in items:
        target = min(members, key=lambda m: (loads[m], m))
        shares[target].append(res.id)
        loads[target] += transfer_size(res)
    return SharePlan(
        shares={m: tuple(v) for m, v in shares.items()}, loads=dict(loads)
    )


def inject_fetch(
    node: Peer,
    resources: Iterable[ResourceId],
    model: CostModel,
    ledger: CostLedger,
    catalog: Mapping[ResourceId, LearningResource],
    cause: str = "deadlock",
    budget: Optional[float] = None,
) -> FetchReceipt:
    """Fetch the resources (closure included) over the backbone and charge it.

    Unit cost applies only to resources actually new to the store; the
    per-session message cost applies regardless, so repeating a fetch still
    costs something. All-or-nothing: if the charge would break the budget,
    nothing is stored and nothing is charged.
    """
    held = frozenset(r.id for r in node.store)
    needed = _closure_from_catalog(sorted(set(resources)), held, catalog)
    units = sum(transfer_size(r) for r in needed)
    charge = model.backbone_message_cost + units * model.backbone_unit_cost
    if budget is not None and charge > budget - ledger.spent(node.id):
        raise BudgetExceeded(
            f"{node.id}: fetch costs {charge}, remaining budget "
            f"{budget - ledger.spent(node.id)}"
        )
    displaced: List[LearningResource] = []
    for res in needed:
        _, dropped = node.store.admit(res)
        displaced.extend(dropped)
        node.wants.pop(res.id, None)
    ledger.charge(node.id, charge, cause)
    return FetchReceipt(
        node.id, tuple(needed), units, charge, cause, tuple(displaced)
    )


def inject_collect_status(
    players: Iterable[Player],
    model: CostModel,
    ledger: CostLedger,
) -> Tuple[StatusReport, ...]:
    """Pull one status report per player over the backbone, one message each.

    The backbone reaches every device regardless of partition, so the report
    set is always complete.
    """
    reports = []
    for player in sorted(players, key=lambda p: p.node):
        ledger.charge(player.node, model.backbone_message_cost, "quiz_status")
        reports.append(
            StatusReport(
                node=player.node,
                knowledge_points=player.knowledge_points,
                cooperation_points=player.cooperation_points,
            )
        )
    return tuple(reports)
