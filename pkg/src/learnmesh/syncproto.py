"""Pairwise information matching and dependency-ordered exchange within a partition.

A contact starts with both sides exchanging digests (store summaries plus
outstanding wants and tombstones). Matching schedules everything the peer is
interested in or explicitly wants, pulls dependency closures along regardless
of topic so stores stay valid, orders transfers so dependencies land first,
and executes them alternately under a shared transfer-unit budget. Deadlock
detection reports wanted ids that nobody in the partition can supply.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .resources import (
    KIND_PRIORITY,
    LearningResource,
    ResourceId,
    Store,
    closure_or_missing,
    dependencies_of,
    transfer_size,
)


@dataclass
class Peer:
    """Protocol-facing view of one node."""

    id: str
    store: Store
    interests: FrozenSet[str] = frozenset()
    wants: Dict[ResourceId, int] = field(default_factory=dict)  # rid -> tick it arose
    tombstones: Dict[ResourceId, int] = field(default_factory=dict)  # rid -> expiry


@dataclass(frozen=True)
class DigestEntry:
    rid: ResourceId
    kind: str
    topics: FrozenSet[str]
    deps: FrozenSet[ResourceId]
    size: int


@dataclass(frozen=True)
class Digest:
    holder: str
    entries: Dict[ResourceId, DigestEntry]
    wants: FrozenSet[ResourceId] = frozenset()
    tombstones: FrozenSet[ResourceId] = frozenset()


@dataclass(frozen=True)
class ExchangePlan:
    to_a: Tuple[DigestEntry, ...]
    to_b: Tuple[DigestEntry, ...]
    total_units: int
    cycle_dropped: FrozenSet[ResourceId] = frozenset()


@dataclass(frozen=True)
class ExchangeResult:
    applied_to_a: Tuple[LearningResource, ...]
    applied_to_b: Tuple[LearningResource, ...]
    units: int
    aborted: bool = False  # contact lost mid-plan; the applied prefix is kept
    displaced_at_a: Tuple[LearningResource, ...] = ()
    displaced_at_b: Tuple[LearningResource, ...] = ()


@dataclass(frozen=True)
class WantRecord:
    node: str
    wanted: FrozenSet[ResourceId]
    blocked_since: int


def effective_topics(store: Store, rid: ResourceId) -> FrozenSet[str]:
    """Topics of all material units in the resource's dependency closure.

    Derived content (questions, annotations, links, ...) inherits the topics
    of the material it ultimately hangs off; missing dependencies contribute
    nothing.
    """
    closed, _ = closure_or_missing(store, [rid])
    topics: Set[str] = set()
    for cid in closed:
        res = store.get(cid)
        if res is not None and res.kind == "material":
            topics |= res.topics
    return frozenset(topics)


def make_digest(peer: Peer, now: Optional[int] = None) -> Digest:
    """Faithful summary of the peer's store plus its wants and active tombstones."""
    entries = {}
    for res in peer.store:
        entries[res.id] = DigestEntry(
            rid=res.id,
            kind=res.kind,
            topics=effective_topics(peer.store, res.id),
            deps=dependencies_of(res),
            size=transfer_size(res),
        )
    tombs = {
        rid for rid, expiry in peer.tombstones.items() if now is None or expiry > now
    }
    return Digest(
        holder=peer.id,
        entries=entries,
        wants=frozenset(peer.wants),
        tombstones=frozenset(tombs),
    )


def order_plan(
    transfers: Iterable[DigestEntry], receiver_ids: FrozenSet[ResourceId]
) -> Tuple[List[DigestEntry], FrozenSet[ResourceId]]:
    """Topologically order transfers so every dependency precedes its dependents.

    Dependencies already at the receiver (or outside the transfer set) impose
    no ordering. Ties break by kind priority, then id. Members of dependency
    cycles cannot be transferred validly; they are dropped and reported in the
    second return value.
    """
    by_id = {e.rid: e for e in transfers}
    indeg = {rid: 0 for rid in by_id}
    dependents: Dict[ResourceId, List[ResourceId]] = {rid: [] for rid in by_id}
    for entry in by_id.values():
        for dep in entry.deps:
            if dep in by_id and dep not in receiver_ids:
                indeg[entry.rid] += 1
                dependents[dep].append(entry.rid)
    ready = [
        (KIND_PRIORITY[by_id[rid].kind], rid) for rid, d in indeg.items() if d == 0
    ]
    heapq.heapify(ready)
    ordered: List[DigestEntry] = []
    while ready:
        _, rid = heapq.heappop(ready)
        ordered.append(by_id[rid])
        for nxt in dependents[rid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(ready, (KIND_PRIORITY[by_id[nxt].kind], nxt))
    dropped = frozenset(by_id) - {e.rid for e in ordered}
    return ordered, dropped


def _sendable_closure(
    src: Digest, dst_ids: FrozenSet[ResourceId], root: ResourceId,
    dst_tombstones: FrozenSet[ResourceId],
) -> Optional[Set[ResourceId]]:
    """Ids to ship so that root arrives valid, or None when that is impossible.

    Impossible means some transitive dependency is tombstoned at the receiver
    or missing at the sender; shipping the root would leave a dangling
    reference, so the whole candidate is withheld.
    """
    needed: Set[ResourceId] = set()
    frontier = [root]
    while frontier:
        rid = frontier.pop()
        if rid in needed or rid in dst_ids:
            continue
        if rid in dst_tombstones:
            return None
        entry = src.entries.get(rid)
        if entry is None:
            return None
        needed.add(rid)
        frontier.extend(entry.deps)
    return needed


def match_information(
    dig_a: Digest,
    dig_b: Digest,
    prof_a: FrozenSet[str],
    prof_b: FrozenSet[str],
) -> ExchangePlan:
    """Plan both transfer directions for one contact.

    A resource is scheduled toward a peer when the peer lacks it and either
    its topics intersect the peer's interests or the peer explicitly wants it;
    its dependency closure rides along regardless of topic. Nothing the peer
    already holds or has tombstoned is ever scheduled.
    """

    def one_way(src: Digest, dst: Digest, dst_prof: FrozenSet[str]):
        dst_ids = frozenset(dst.entries)
        chosen: Set[ResourceId] = set()
        for rid in sorted(src.entries):
            if rid in dst_ids or rid in dst.tombstones:
                continue
            entry = src.entries[rid]
            if not (entry.topics & dst_prof) and rid not in dst.wants:
                continue
            closure_ids = _sendable_closure(src, dst_ids, rid, dst.tombstones)
            if closure_ids is not None:
                chosen |= closure_ids
        ordered, dropped = order_plan(
            [src.entries[r] for r in chosen], dst_ids
        )
        return tuple(ordered), dropped

    to_b, dropped_b = one_way(dig_a, dig_b, prof_b)
    to_a, dropped_a = one_way(dig_b, dig_a, prof_a)
    total = sum(e.size for e in to_a) + sum(e.size for e in to_b)
    return ExchangePlan(
        to_a=to_a, to_b=to_b, total_units=total, cycle_dropped=dropped_a | dropped_b
    )


def execute_exchange(
    peer_a: Peer,
    peer_b: Peer,
    plan: ExchangePlan,
    contact_budget: int,
    link=None,
) -> ExchangeResult:
    """Apply the plan alternately in both directions until the budget runs out.

    The initiating side (A) sends first. The exchange stops as soon as the
    next scheduled transfer no longer fits the remaining budget, and aborts
    early when the link callable reports the contact lost; either way the
    applied prefix is kept, which is valid by construction of the plan order.

    A transfer can fizzle without breaking the plan: the sender may have
    replaced the entry since the digest (an evaluation superseded by a newer
    one), or the receiver may reject it as stale. Only evaluations can change
    that way and nothing depends on them, so skipping is safe; transferred
    units are charged whenever bytes actually moved.
    """
    queue_b = deque(plan.to_b)  # A -> B
    queue_a = deque(plan.to_a)  # B -> A
    applied_a: List[LearningResource] = []
    applied_b: List[LearningResource] = []
    displaced_a: List[LearningResource] = []
    displaced_b: List[LearningResource] = []
    remaining = contact_budget
    units = 0
    toward_b = True
    aborted = False
    while queue_a or queue_b:
        queue = queue_b if (toward_b and queue_b) or not queue_a else queue_a
        entry = queue[0]
        if entry.size > remaining:
            break
        if link is not None and not link():
            aborted = True
            break
        queue.popleft()
        sender, receiver, applied, displaced = (
            (peer_a, peer_b, applied_b, displaced_b)
            if queue is queue_b
            else (peer_b, peer_a, applied_a, displaced_a)
        )
        resource = sender.store.get(entry.rid)
        if resource is None:
            continue  # vanished at the sender since the digest; nothing sent
        added, dropped = receiver.store.admit(resource)
        if added:
            applied.append(resource)
            displaced.extend(dropped)
        remaining -= entry.size
        units += entry.size
        toward_b = not toward_b
    return ExchangeResult(
        tuple(applied_a),
        tuple(applied_b),
        units,
        aborted,
        tuple(displaced_a),
        tuple(displaced_b),
    )


def detect_deadlock(
    partition: Iterable[Peer], wants: Iterable[WantRecord]
) -> FrozenSet[ResourceId]:
    """Wanted ids no node in the partition can supply.

    The wanted set is closed transitively: explicit wants, dependencies of
    everything held in the partition (a held link whose endpoint is missing
    everywhere counts), and dependencies of held resources reachable from
    wants. Anything in that closure without a holder is blocked.
    """
    peers = sorted(partition, key=lambda p: p.id)

    def find(rid: ResourceId):
        for p in peers:
            res = p.store.get(rid)
            if res is not None:
                return res
        return None

    needed: Set[ResourceId] = set()
    for rec in wants:
        needed |= rec.wanted
    for p in peers:
        for res in p.store:
            needed |= dependencies_of(res)
    frontier = list(needed)
    seen = set(needed)
    while frontier:
        rid = frontier.pop()
        res = find(rid)
        if res is None:
            continue
        for dep in dependencies_of(res):
            if dep not in seen:
                seen.add(dep)
                frontier.append(dep)
    return frozenset(rid for rid in seen if find(rid) is None)


def interest_view(store: Store, interests: FrozenSet[str]) -> FrozenSet[ResourceId]:
    """Ids matching the interest profile plus their dependency closure."""
    roots = [r.id for r in store if effective_topics(store, r.id) & interests]
    closed, _ = closure_or_missing(store, roots)
    return closed
