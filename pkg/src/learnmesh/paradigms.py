"""Question-selection paradigms and course execution.

Five directive kinds are supported: free selection (bank order), causal links
(right/wrong answers steer to different follow-ups), ordering constraints
(chains plus forced sub/reference pairs), dynamic ordering (random choice
among chains), and the balanced gate (the mean of the last n outcomes must
beat a threshold or those n questions repeat).

All selection is deterministic given the course, bank, answer oracle and rng
seed. "Bank order" throughout means the order questions appear in the bank
sequence handed in, which mirrors their declaration order.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

from .resources import ResourceId

QuestionId = ResourceId


class _Sentinel:
    def __init__(self, name: str):
        self._name = name

    def __repr__(self) -> str:
        return self._name


EXHAUSTED = _Sentinel("Exhausted")
FALLBACK = _Sentinel("Fallback")
CONTINUE = _Sentinel("Continue")


class NoEligible(Exception):
    """Constraints admit no next question although unasked ones remain."""


@dataclass(frozen=True)
class Repeat:
    """Gate verdict: re-queue these question ids, oldest first."""

    window: Tuple[QuestionId, ...]


GateVerdict = Union[_Sentinel, Repeat]


@dataclass(frozen=True)
class BalancedParams:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"window length must be >= 1, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"threshold must be within [0, 1], got {self.p}")


@dataclass(frozen=True)
class CausalEdge:
    """Follow-ups for one question; either branch may be absent."""

    correct: Optional[QuestionId] = None
    wrong: Optional[QuestionId] = None


@dataclass(frozen=True)
class FreeDirective:
    kind = "free"


@dataclass(frozen=True)
class CausalDirective:
    kind = "causal"
    edges: Mapping[QuestionId, CausalEdge] = field(default_factory=dict)


@dataclass(frozen=True)
class OrderingDirective:
    kind = "ordering"
    chains: Tuple[Tuple[QuestionId, ...], ...] = ()
    forced: FrozenSet[Tuple[QuestionId, QuestionId]] = frozenset()


@dataclass(frozen=True)
class DynamicDirective:
    kind = "dynamic"
    chains: Tuple[Tuple[QuestionId, ...], ...] = ()


@dataclass(frozen=True)
class BalancedDirective:
    kind = "balanced"
    params: BalancedParams = BalancedParams(2, 0.5)


ParadigmDirective = Union[
    FreeDirective, CausalDirective, OrderingDirective, DynamicDirective, BalancedDirective
]


class SelectorState:
    """Ask history: ordered (question, outcome) pairs plus the asked-id set."""

    def __init__(self):
        self.asked: List[Tuple[QuestionId, float]] = []
        self.asked_ids: set = set()

    def record(self, qid: QuestionId, outcome: float) -> None:
        self.asked.append((qid, outcome))
        self.asked_ids.add(qid)


def next_free(state: SelectorState, bank: Sequence[QuestionId]):
    """First bank question not yet asked, or EXHAUSTED."""
    for qid in bank:
        if qid not in state.asked_ids:
            return qid
    return EXHAUSTED


def next_causal(
    state: SelectorState,
    edges: Mapping[QuestionId, CausalEdge],
    last: Tuple[QuestionId, float],
):
    """Follow the correct/wrong edge of the last answer; FALLBACK when it leads nowhere."""
    last_q, outcome = last
    edge = edges.get(last_q)
    if edge is None:
        return FALLBACK
    target = edge.correct if outcome >= 0.5 else edge.wrong
    if target is None or target in state.asked_ids:
        return FALLBACK
    return target


def next_ordering(
    state: SelectorState,
    bank: Sequence[QuestionId],
    chains: Sequence[Sequence[QuestionId]],
    forced: FrozenSet[Tuple[QuestionId, QuestionId]] = frozenset(),
) -> FrozenSet[QuestionId]:
    """Questions eligible now: unasked, chain predecessors asked, forced references asked.

    Bank questions outside every chain are unconstrained. The caller selects
    the first eligible question in bank order.
    """
    asked = state.asked_ids
    blocked_subs = {sub for sub, ref in forced if ref not in asked}
    eligible = set()
    for qid in bank:
        if qid in asked or qid in blocked_subs:
            continue
        ok = True
        for chain in chains:
            if qid in chain:
                pos = chain.index(qid)
                if any(prev not in asked for prev in chain[:pos]):
                    ok = False
                    break
        if ok:
            eligible.add(qid)
    return frozenset(eligible)


def next_dynamic(
    state: SelectorState,
    chains: Sequence[Sequence[QuestionId]],
    rng: random.Random,
) -> QuestionId:
    """Uniform pick among chains that still have an unasked question; returns its head.

    Draws exactly one rng.randrange over the eligible chains in ascending
    chain-index order, so results are reproducible from the seed.
    """
    asked = state.asked_ids
    heads = []
    for chain in chains:
        for qid in chain:
            if qid not in asked:
                heads.append(qid)
                break
    if not heads:
        raise NoEligible("all constraint chains are exhausted")
    return heads[rng.randrange(len(heads))]


def balanced_gate(
    history: Sequence[Tuple[QuestionId, float]], params: BalancedParams
) -> GateVerdict:
    """Mean of the last n outcomes must strictly exceed p, otherwise those n repeat.

    With fewer than n answers the gate is bypassed (Continue).
    """
    if len(history) < params.n:
        return CONTINUE
    window = history[-params.n :]
    a = sum(outcome for _, outcome in window) / params.n
    if a > params.p:
        return CONTINUE
    return Repeat(tuple(qid for qid, _ in window))


@dataclass(frozen=True)
class TranscriptEntry:
    time: int
    question: QuestionId
    directive: str
    outcome: float
    verdict: Optional[str]  # "continue"/"repeat" under a balanced directive


@dataclass(frozen=True)
class Transcript:
    entries: Tuple[TranscriptEntry, ...]
    flags: Tuple[str, ...]


class CourseRunner:
    """Steps a course program one question at a time.

    Call select() to obtain the next question (None once the program is done),
    then record() with the answer outcome. The bank may differ between calls;
    a directive ends when its selection rule admits nothing from the current
    bank. Chains referencing questions missing from the bank are skipped whole
    and flagged; under an ordering directive the members of a skipped chain
    are not asked at all. A balanced directive replays its window verbatim
    before the gate is consulted again; three consecutive repeats of the same
    window truncate the directive.
    """

    def __init__(
        self,
        course,
        rng: Optional[random.Random] = None,
        repeat_cap: int = 3,
    ):
        self.course = course
        self.rng = rng if rng is not None else random.Random(0)
        self.repeat_cap = repeat_cap
        self.state = SelectorState()
        self.flags: List[str] = []
        self.finished = False
        self._idx = 0
        self._causal_last: Optional[Tuple[QuestionId, float]] = None
        self._replay: deque = deque()
        self._streak = 0
        self._last_window: Optional[Tuple[QuestionId, ...]] = None
        self._usable_chains: Dict[int, Tuple[Tuple[QuestionId, ...], ...]] = {}
        self._excluded: Dict[int, FrozenSet[QuestionId]] = {}

    def select(self, bank: Sequence[QuestionId]):
        """Next (question, directive kind), or None when the program is finished."""
        if self.finished:
            return None
        members = self.course.members
        bank_list = [q for q in bank if q in members]
        while self._idx < len(self.course.program):
            directive = self.course.program[self._idx]
            qid = self._select_for(directive, bank_list)
            if qid is not None:
                return qid, directive.kind
            self._advance()
        self.finished = True
        return None

    def record(self, qid: QuestionId, outcome: float) -> Optional[str]:
        """Record an answer; returns the gate verdict when a balanced directive is active."""
        self.state.record(qid, outcome)
        if self._is_current("causal"):
            self._causal_last = (qid, outcome)
        if not self._is_current("balanced") or self._replay:
            return None
        directive = self.course.program[self._idx]
        verdict = balanced_gate(self.state.asked, directive.params)
        if verdict is CONTINUE:
            self._streak = 0
            self._last_window = None
            return "continue"
        if verdict.window == self._last_window:
            self._streak += 1
        else:
            self._streak = 1
            self._last_window = verdict.window
        if self._streak >= self.repeat_cap:
            self.flags.append("truncated")
            self._advance()
        else:
            self._replay.extend(verdict.window)
        return "repeat"

    def _is_current(self, kind: str) -> bool:
        return (
            self._idx < len(self.course.program)
            and self.course.program[self._idx].kind == kind
        )

    def _advance(self) -> None:
        self._idx += 1
        self._causal_last = None
        self._replay.clear()
        self._streak = 0
        self._last_window = None

    def _vet_chains(self, directive, bank_list: Sequence[QuestionId]):
        """Drop chains with unavailable members (checked once per directive)."""
        if self._idx not in self._usable_chains:
            bank_set = set(bank_list)
            usable = []
            excluded = set()
            for ci, chain in enumerate(directive.chains):
                if all(q in bank_set for q in chain):
                    usable.append(tuple(chain))
                else:
                    self.flags.append(f"constraint-unavailable:d{self._idx}c{ci}")
                    excluded.update(chain)
            self._usable_chains[self._idx] = tuple(usable)
            self._excluded[self._idx] = frozenset(excluded)
        return self._usable_chains[self._idx], self._excluded[self._idx]

    def _select_for(self, directive, bank_list: Sequence[QuestionId]):
        kind = directive.kind
        if kind == "free":
            qid = next_free(self.state, bank_list)
            return None if qid is EXHAUSTED else qid

        if kind == "causal":
            if self._causal_last is not None:
                target = next_causal(self.state, directive.edges, self._causal_last)
                if target is not FALLBACK and target in bank_list:
                    return target
            qid = next_free(self.state, bank_list)
            return None if qid is EXHAUSTED else qid

        if kind == "ordering":
            chains, excluded = self._vet_chains(directive, bank_list)
            scope = [q for q in bank_list if q not in excluded]
            eligible = next_ordering(self.state, scope, chains, directive.forced)
            for qid in scope:  # first eligible in bank order
                if qid in eligible:
                    return qid
            return None

        if kind == "dynamic":
            chains, _ = self._vet_chains(directive, bank_list)
            try:
                return next_dynamic(self.state, chains, self.rng)
            except NoEligible:
                return None

        if kind == "balanced":
            bank_set = set(bank_list)
            while self._replay:
                qid = self._replay.popleft()
                if qid in bank_set:
                    return qid
            qid = next_free(self.state, bank_list)
            return None if qid is EXHAUSTED else qid

        raise ValueError(f"unknown directive kind {kind!r}")


def run_course(
    course,
    bank: Sequence[QuestionId],
    answer_oracle,
    rng: Optional[random.Random] = None,
    repeat_cap: int = 3,
) -> Transcript:
    """Execute the whole program against a fixed bank, one oracle call per ask."""
    runner = CourseRunner(course, rng=rng, repeat_cap=repeat_cap)
    entries = []
    t = 0
    while True:
        sel = runner.select(bank)
        if sel is None:
            break
        qid, kind = sel
        outcome = float(answer_oracle(qid))
        verdict = runner.record(qid, outcome)
        entries.append(TranscriptEntry(t, qid, kind, outcome, verdict))
        t += 1
    return Transcript(tuple(entries), tuple(runner.flags))
