"""Learning-resource data model: typed resources, dependency rules, ratings, TTL eviction.

Every unit that moves through the network is one of the resource types below.
Dependencies between resources ("a link needs both endpoints", "a question
needs its anchors and its rendering component") drive both transfer ordering
and cascading eviction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, Iterator, Optional, Set, Tuple, Union

ANNOTATION_SYMBOLS = frozenset({"agreement", "disagreement", "new-fact", "issue"})

# Tie-break precedence used when several resources are otherwise equal in a
# transfer plan: infrastructure first, derived content last.
KIND_PRIORITY = {
    "component": 0,
    "material": 1,
    "question": 2,
    "annotation": 3,
    "link": 4,
    "evaluation": 5,
    "course": 6,
}


@dataclass(frozen=True, order=True)
class ResourceId:
    """Globally unique id: originating node plus a per-origin counter."""

    origin: str
    seq: int

    def __str__(self) -> str:
        return f"{self.origin}:{self.seq}"

    @classmethod
    def parse(cls, text: str) -> "ResourceId":
        origin, _, seq = text.rpartition(":")
        return cls(origin, int(seq))


@dataclass(frozen=True)
class MaterialUnit:
    kind = "material"
    id: ResourceId
    topics: FrozenSet[str]
    size: int = 1
    staff_origin: bool = False

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"material size must be >= 1, got {self.size}")
        if not self.topics:
            raise ValueError("material needs at least one topic")


@dataclass(frozen=True)
class ComponentDescriptor:
    """Software component able to render one question type."""

    kind = "component"
    id: ResourceId
    renders: str
    size: int = 1

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"component size must be >= 1, got {self.size}")


@dataclass(frozen=True)
class Question:
    kind = "question"
    id: ResourceId
    qtype: str
    anchors: FrozenSet[ResourceId]
    component: ResourceId
    author: str

    def __post_init__(self):
        if not self.anchors:
            raise ValueError("question must be anchored to at least one resource")


@dataclass(frozen=True)
class Annotation:
    kind = "annotation"
    id: ResourceId
    target: ResourceId
    symbol: str
    size: int = 1

    def __post_init__(self):
        if self.symbol not in ANNOTATION_SYMBOLS:
            raise ValueError(f"unknown annotation symbol {self.symbol!r}")
        if self.target == self.id:
            raise ValueError("annotation cannot target itself")
        if self.size < 1:
            raise ValueError(f"annotation size must be >= 1, got {self.size}")


@dataclass(frozen=True)
class Link:
    """Student-authored relationship between two resources."""

    kind = "link"
    id: ResourceId
    source: ResourceId
    dest: ResourceId
    author: str

    def __post_init__(self):
        if self.source == self.dest:
            raise ValueError("link endpoints must differ")


@dataclass(frozen=True)
class Evaluation:
    """Peer rating of a resource, on a fixed [0, 1] scale."""

    kind = "evaluation"
    id: ResourceId
    target: ResourceId
    score: float
    evaluator: str

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be within [0, 1], got {self.score}")


@dataclass(frozen=True)
class Course:
    """Pre-defined training/testing behavior over a set of questions.

    ``program`` holds selection directives (see the paradigms module); members
    are the question ids the program may draw from.
    """

    kind = "course"
    id: ResourceId
    program: tuple
    members: FrozenSet[ResourceId]


LearningResource = Union[
    MaterialUnit, ComponentDescriptor, Question, Annotation, Link, Evaluation, Course
]


def transfer_size(resource: LearningResource) -> int:
    """Abstract transfer units; resources without an explicit size cost one unit."""
    return getattr(resource, "size", 1)


def dependencies_of(resource: LearningResource) -> FrozenSet[ResourceId]:
    """Ids this resource requires to be valid and displayable."""
    if isinstance(resource, Link):
        return frozenset({resource.source, resource.dest})
    if isinstance(resource, Annotation):
        return frozenset({resource.target})
    if isinstance(resource, Question):
        return resource.anchors | {resource.component}
    if isinstance(resource, Evaluation):
        return frozenset({resource.target})
    if isinstance(resource, Course):
        return resource.members
    return frozenset()


class DanglingReference(Exception):
    """A dependency closure escaped the store."""

    def __init__(self, missing: Iterable[ResourceId]):
        self.missing = frozenset(missing)
        ids = ", ".join(str(r) for r in sorted(self.missing))
        super().__init__(f"missing dependencies: {ids}")


class Store:
    """A node's resource store, keyed by id.

    Adding an evaluation replaces any earlier evaluation by the same evaluator
    of the same target (last write wins).
    """

    def __init__(self, resources: Iterable[LearningResource] = ()):
        self._items: Dict[ResourceId, LearningResource] = {}
        for r in resources:
            self.add(r)

    def __contains__(self, rid: ResourceId) -> bool:
        return rid in self._items

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[LearningResource]:
        return iter(self._items.values())

    def get(self, rid: ResourceId) -> Optional[LearningResource]:
        return self._items.get(rid)

    def __getitem__(self, rid: ResourceId) -> LearningResource:
        return self._items[rid]

    def ids(self) -> FrozenSet[ResourceId]:
        return frozenset(self._items)

    def admit(self, resource: LearningResource):
        """Insert a resource; returns (added, displaced).

        Duplicate ids are rejected. For evaluations, the highest id per
        (evaluator, target) wins regardless of arrival order, so replicas
        converge on the evaluator's latest verdict; older ones are displaced
        on insert, and an older arrival is rejected outright.
        """
        if resource.id in self._items:
            return False, ()
        displaced: Tuple[LearningResource, ...] = ()
        if isinstance(resource, Evaluation):
            rivals = [
                r
                for r in self._items.values()
                if isinstance(r, Evaluation)
                and r.evaluator == resource.evaluator
                and r.target == resource.target
            ]
            if any(r.id > resource.id for r in rivals):
                return False, ()
            for r in rivals:
                del self._items[r.id]
            displaced = tuple(sorted(rivals, key=lambda r: r.id))
        self._items[resource.id] = resource
        return True, displaced

    def add(self, resource: LearningResource) -> bool:
        """Insert a resource; returns False when the store did not change."""
        added, _ = self.admit(resource)
        return added

    def remove(self, rid: ResourceId) -> Optional[LearningResource]:
        return self._items.pop(rid, None)

    def evaluations_of(self, target: ResourceId) -> Tuple[Evaluation, ...]:
        return tuple(
            r
            for r in self._items.values()
            if isinstance(r, Evaluation) and r.target == target
        )

    def dangling(self) -> Dict[ResourceId, FrozenSet[ResourceId]]:
        """Resources whose dependencies are missing, mapped to the missing ids."""
        out = {}
        for rid, resource in self._items.items():
            missing = dependencies_of(resource) - self._items.keys()
            if missing:
                out[rid] = frozenset(missing)
        return out


def closure_or_missing(
    store: Store, roots: Iterable[ResourceId]
) -> Tuple[FrozenSet[ResourceId], FrozenSet[ResourceId]]:
    """Transitive dependency closure of roots; second element lists ids not in the store."""
    closed: Set[ResourceId] = set()
    missing: Set[ResourceId] = set()
    frontier = list(roots)
    while frontier:
        rid = frontier.pop()
        if rid in closed or rid in missing:
            continue
        resource = store.get(rid)
        if resource is None:
            missing.add(rid)
            continue
        closed.add(rid)
        frontier.extend(dependencies_of(resource))
    return frozenset(closed), frozenset(missing)


def closure(store: Store, roots: Iterable[ResourceId]) -> FrozenSet[ResourceId]:
    """Smallest superset of roots closed under dependencies; raises on dangling ids."""
    closed, missing = closure_or_missing(store, roots)
    if missing:
        raise DanglingReference(missing)
    return closed


def is_displayable(question: Question, store: Store) -> bool:
    """A question renders only when its component and all anchors are present."""
    if question.component not in store:
        return False
    return all(anchor in store for anchor in question.anchors)


class _Unrated:
    def __repr__(self) -> str:
        return "Unrated"


UNRATED = _Unrated()

Rating = Union[float, _Unrated]


def aggregate_score(target: ResourceId, evals: Iterable[Evaluation]) -> Rating:
    """Arithmetic mean of the scores rating ``target``; UNRATED when none exist."""
    scores = [e.score for e in evals if e.target == target]
    if not scores:
        return UNRATED
    return sum(scores) / len(scores)


@dataclass(frozen=True)
class TtlRecord:
    resource: ResourceId
    expiry: int
    ttl_base: int


@dataclass(frozen=True)
class EvictionParams:
    keep_threshold: float = 0.5


def refresh_ttl(
    rec: TtlRecord, now: int, rating: Rating, params: EvictionParams = EvictionParams()
) -> TtlRecord:
    """Extend the record's life when the resource is rated well (or not yet rated).

    Unrated content refreshes so that fresh contributions get a full grace
    period before anyone has scored them; badly rated content is left to expire.
    """
    if rating is UNRATED or rating >= params.keep_threshold:
        return replace(rec, expiry=now + rec.ttl_base)
    return rec


def evict_expired(
    store: Store, ttl_records: Dict[ResourceId, TtlRecord], now: int
) -> FrozenSet[ResourceId]:
    """Remove resources whose TTL lapsed, cascading to anything they supported.

    Only ids carrying a TtlRecord can expire (staff-origin material never
    does); the cascade then removes resources whose dependencies were removed
    here, transitively, so the store never ends up with references dangling
    because of an eviction. Mutates both the store and ttl_records; returns
    everything removed.
    """
    removed: Set[ResourceId] = set()
    for rid, rec in list(ttl_records.items()):
        if rec.expiry < now and rid in store:
            resource = store[rid]
            if isinstance(resource, MaterialUnit) and resource.staff_origin:
                continue  # exempt even if a record was created by mistake
            store.remove(rid)
            removed.add(rid)
    # Cascade relative to what was just removed: references that were already
    # dangling beforehand (e.g. seeded partial deliveries) are left alone.
    changed = bool(removed)
    while changed:
        changed = False
        for resource in list(store):
            if dependencies_of(resource) & removed:
                store.remove(resource.id)
                removed.add(resource.id)
                changed = True
    for rid in removed:
        ttl_records.pop(rid, None)
    return frozenset(removed)
