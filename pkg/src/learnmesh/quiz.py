"""Game/quiz layer: per-question scoring with joker halving, cooperation points, ranking.

Players earn knowledge points for correct answers; every joker used on a
question halves what that question is still worth (integer floor). Cooperation
points reward authored contributions, weighted by how peers rated them. At the
deadline the collected status reports are ranked; the highest total wins.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .resources import (
    UNRATED,
    Annotation,
    Evaluation,
    Link,
    Question,
    ResourceId,
    Store,
    aggregate_score,
    is_displayable,
)


class JokerKind(enum.Enum):
    LINK = "link"
    ANNOTATION = "annotation"
    STATISTICS = "statistics"


class NothingAvailable(Exception):
    """No hint material exists locally; the joker is consumed anyway."""


class JokerLimitReached(Exception):
    pass


class NotDisplayable(Exception):
    """Question component or anchors missing from the local store."""


@dataclass
class Player:
    node: str
    knowledge_points: int = 0
    cooperation_points: float = 0.0
    joker_uses: Dict[ResourceId, int] = field(default_factory=dict)


@dataclass
class QuizState:
    players: Dict[str, Player]
    deadline: int
    base_points: int = 100
    joker_limit: Optional[int] = None
    finished: bool = False


@dataclass(frozen=True)
class StatusReport:
    node: str
    knowledge_points: int
    cooperation_points: float


@dataclass(frozen=True)
class RankEntry:
    rank: int
    node: str
    knowledge_points: int
    cooperation_points: float
    total: int


@dataclass(frozen=True)
class FinalizeResult:
    ranking: Tuple[RankEntry, ...]
    missing: Tuple[str, ...]


def question_value(base: int, jokers_used: int) -> int:
    """Points still attainable: the base halved once per joker, floored."""
    if jokers_used < 0:
        raise ValueError("joker count cannot be negative")
    return base // (2 ** jokers_used)


def use_joker(
    player: Player,
    question: Question,
    kind: JokerKind,
    store: Store,
    answers: Iterable[Tuple[ResourceId, float]] = (),
    limit: Optional[int] = None,
):
    """Return hint material for the question, consuming one joker use.

    Link jokers expose links touching the question or its anchors, annotation
    jokers reveal annotations targeting it, and the statistics joker returns
    the (right, wrong) answer fractions over locally known answers. The use is
    counted even when no hint material exists (NothingAvailable).
    """
    used = player.joker_uses.get(question.id, 0)
    if limit is not None and used >= limit:
        raise JokerLimitReached(f"{player.node} exhausted jokers for {question.id}")
    player.joker_uses[question.id] = used + 1

    if kind is JokerKind.LINK:
        touched = {question.id} | question.anchors
        hints = sorted(
            (r for r in store if isinstance(r, Link)
             and (r.source in touched or r.dest in touched)),
            key=lambda r: r.id,
        )
    elif kind is JokerKind.ANNOTATION:
        hints = sorted(
            (r for r in store if isinstance(r, Annotation) and r.target == question.id),
            key=lambda r: r.id,
        )
    else:
        outcomes = [o for qid, o in answers if qid == question.id]
        if not outcomes:
            raise NothingAvailable(f"no known answers for {question.id}")
        right = sum(1 for o in outcomes if o >= 0.5)
        return (right / len(outcomes), (len(outcomes) - right) / len(outcomes))

    if not hints:
        raise NothingAvailable(f"no {kind.value} hints for {question.id}")
    return hints


def answer_question(
    player: Player,
    question: Question,
    outcome: float,
    store: Store,
    base_points: int = 100,
) -> int:
    """Credit the question's (possibly halved) value on a correct answer; returns points gained."""
    if not is_displayable(question, store):
        raise NotDisplayable(f"{question.id} not displayable at {player.node}")
    gained = 0
    if outcome >= 0.5:
        gained = question_value(base_points, player.joker_uses.get(question.id, 0))
    player.knowledge_points += gained
    return gained


@dataclass(frozen=True)
class CoopWeights:
    question: float = 10.0
    link: float = 5.0
    annotation: float = 3.0
    unrated: float = 0.5  # rating assumed for content nobody scored yet


def cooperation_points(
    player: Player,
    contributions: Iterable,
    evaluations: Iterable[Evaluation],
    weights: CoopWeights = CoopWeights(),
) -> float:
    """Sum of kind-weight x peer rating over the player's contributions.

    Only questions, links and annotations earn; zero-rated spam earns nothing.
    """
    evals = list(evaluations)
    total = 0.0
    for res in contributions:
        if res.id.origin != player.node:
            continue
        if isinstance(res, Question):
            weight = weights.question
        elif isinstance(res, Link):
            weight = weights.link
        elif isinstance(res, Annotation):
            weight = weights.annotation
        else:
            continue
        rating = aggregate_score(res.id, evals)
        if rating is UNRATED:
            rating = weights.unrated
        total += weight * rating
    return total


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


class MissingReports(Exception):
    def __init__(self, nodes: Sequence[str]):
        self.nodes = tuple(nodes)
        super().__init__(f"no status report from: {', '.join(nodes)}")


def finalize(
    quiz: QuizState, now: int, status_reports: Iterable[StatusReport]
) -> FinalizeResult:
    """Rank all players by knowledge + rounded cooperation points; marks the quiz finished.

    Players without a report keep their last known totals and are listed as
    missing; the game still finalizes. Ties break by node id.
    """
    if now < quiz.deadline:
        raise ValueError(f"cannot finalize before the deadline ({now} < {quiz.deadline})")
    by_node = {r.node: r for r in status_reports}
    missing = sorted(n for n in quiz.players if n not in by_node)
    rows = []
    for node, player in quiz.players.items():
        report = by_node.get(
            node,
            StatusReport(node, player.knowledge_points, player.cooperation_points),
        )
        total = report.knowledge_points + _round_half_up(report.cooperation_points)
        rows.append((node, report, total))
    rows.sort(key=lambda r: (-r[2], r[0]))
    ranking = tuple(
        RankEntry(i + 1, node, rep.knowledge_points, rep.cooperation_points, total)
        for i, (node, rep, total) in enumerate(rows)
    )
    quiz.finished = True
    return FinalizeResult(ranking, tuple(missing))
