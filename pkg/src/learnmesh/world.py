"""The simulation engine: one deterministic world per (scenario, seed).

Tick pipeline, in fixed order (tick 0 keeps the initial placement so
lectures scheduled there hit the starting topology):

 1. movement (from tick 1 on) and per-node position records
 2. partition record for the tick
 3. lecture releases scheduled for the tick
 4. student authoring draws
 5. pairwise exchanges: each node syncs with at most one neighbor, the
    nearest one whose digest is stale (tie: lowest id)
 6. want registration from dangling references
 7. per-partition deadlock detection and injection decisions
 8. scheduled clique fetches
 9. quiz: one answer per player per tick until the deadline tick, which
    collects status over the backbone and finalizes the ranking
10. TTL refresh and eviction

Randomness comes from four streams derived from the run seed (mobility,
authoring, answers, course selection); every draw happens in documented
node-id or node-index order, so the full event sequence is a pure function
of (scenario, seed).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from . import quiz as quizmod
from .injection import (
    BudgetExceeded,
    CostLedger,
    Inject,
    decide_injection,
    inject_collect_status,
    inject_fetch,
    plan_clique_share,
)
from .metrics import MetricsReport, TraceMeta, TraceRecord, build_report, fmt_payload, ranking_csv, serialize_trace
from .mobility import MotionSpec, RandomWaypointField
from .paradigms import CourseRunner
from .quiz import JokerKind, JokerLimitReached, NothingAvailable, Player, QuizState
from .resources import (
    ANNOTATION_SYMBOLS,
    Annotation,
    Course,
    Evaluation,
    EvictionParams,
    LearningResource,
    Link,
    MaterialUnit,
    Question,
    ResourceId,
    Store,
    TtlRecord,
    aggregate_score,
    evict_expired,
    is_displayable,
    refresh_ttl,
)
from .scenario import Scenario
from .syncproto import (
    Peer,
    WantRecord,
    detect_deadlock,
    execute_exchange,
    make_digest,
    match_information,
)

_EVAL_SCORES = (0.0, 0.25, 0.5, 0.75, 1.0)
_TTL_KINDS = ("question", "annotation", "link")


class NodeState:
    def __init__(self, spec, index: int):
        self.spec = spec
        self.index = index
        self.peer = Peer(id=spec.id, store=Store(), interests=spec.interests)
        self.version = 0  # bumps on any store change; drives digest staleness
        self.ttl: Dict[ResourceId, TtlRecord] = {}
        self.runner: Optional[CourseRunner] = None


@dataclass
class RunResult:
    scenario: Scenario
    seed: int
    meta: TraceMeta
    records: List[TraceRecord]
    trace_text: str
    report: MetricsReport
    ranking_text: str
    world: "World"


class World:
    def __init__(self, scenario: Scenario, seed: int):
        self.scenario = scenario
        self.seed = seed
        self.rng_authoring = random.Random(seed * 1000003 + 1)
        self.rng_answers = random.Random(seed * 1000003 + 2)
        self.rng_course = random.Random(seed * 1000003 + 3)
        self.field = RandomWaypointField(
            scenario.width,
            scenario.height,
            [
                MotionSpec(
                    speed_min=n.speed[0],
                    speed_max=n.speed[1],
                    pause_min=n.pause[0],
                    pause_max=n.pause[1],
                    radio_range=n.radio_range,
                    position=n.position,
                )
                for n in scenario.nodes
            ],
            random.Random(seed * 1000003 + 0),
        )
        self.nodes: Dict[str, NodeState] = {
            n.id: NodeState(n, i) for i, n in enumerate(scenario.nodes)
        }
        self.node_order = [n.id for n in scenario.nodes]
        self.by_index = {ns.index: ns for ns in self.nodes.values()}
        self.student_ids = {n.id for n in scenario.nodes if n.role == "student"}
        self.catalog: Dict[ResourceId, LearningResource] = dict(scenario.catalog)
        self.next_seq: Dict[str, int] = {}
        for rid in self.catalog:
            self.next_seq[rid.origin] = max(
                self.next_seq.get(rid.origin, 0), rid.seq + 1
            )
        self.ledger = CostLedger()
        self.records: List[TraceRecord] = []
        self.answer_log: List[Tuple[ResourceId, float]] = []
        self._last_sync: Dict[Tuple[str, str], Tuple[int, int]] = {}
        self._labels: List[int] = []
        self.quiz: Optional[QuizState] = None
        self.finalize_result = None
        if scenario.quiz is not None:
            self.quiz = QuizState(
                players={
                    p: Player(node=p) for p in sorted(scenario.quiz.players)
                },
                deadline=scenario.quiz.deadline,
                base_points=scenario.quiz.base_points,
                joker_limit=scenario.quiz.joker_limit,
            )
        self._seed_initial_state()

    # -- trace helpers ----------------------------------------------------

    def _emit(self, tick: int, kind: str, subject: str, pairs) -> None:
        self.records.append(TraceRecord(tick, kind, subject, fmt_payload(pairs)))

    # -- store bookkeeping -------------------------------------------------

    def _post_add(self, ns: NodeState, resource: LearningResource, src: str,
                  tick: int) -> None:
        """Bookkeeping for a resource that just entered ns's store."""
        ns.version += 1
        ns.peer.wants.pop(resource.id, None)
        self._emit(tick, "add", ns.spec.id,
                   [("resource", resource.id), ("src", src)])
        if resource.kind in _TTL_KINDS and resource.id.origin in self.student_ids:
            ns.ttl[resource.id] = TtlRecord(
                resource.id, tick + self.scenario.ttl_base, self.scenario.ttl_base
            )

    def _emit_drops(self, ns: NodeState, displaced, tick: int) -> None:
        # A newer evaluation replaced these on insert; record the removal so
        # the trace stays a complete account of every store mutation.
        for old in displaced:
            self._emit(tick, "drop", ns.spec.id, [("resource", old.id)])

    def _store_add(self, ns: NodeState, resource: LearningResource, src: str,
                   tick: int) -> bool:
        added, displaced = ns.peer.store.admit(resource)
        if added:
            self._post_add(ns, resource, src, tick)
            self._emit_drops(ns, displaced, tick)
            return True
        return False

    def _seed_initial_state(self) -> None:
        for nid in self.node_order:
            rids = self.scenario.initial_stores.get(nid, ())
            ns = self.nodes[nid]
            for rid in rids:
                self._store_add(ns, self.catalog[rid], "seed", 0)
        if self.scenario.quiz is not None:
            for player in self.scenario.quiz.players:
                course_rid = self._course_for(player)
                ns = self.nodes[player]
                if course_rid is not None and course_rid not in ns.peer.store:
                    ns.peer.wants[course_rid] = 0
                    self._emit(0, "want", player,
                               [("resource", course_rid), ("since", 0)])

    def _course_for(self, player: str) -> Optional[ResourceId]:
        rid = self.scenario.course_assignments.get(player)
        if rid is None and self.scenario.quiz is not None:
            rid = self.scenario.quiz.course
        return rid

    # -- per-tick phases ---------------------------------------------------

    def _phase_move(self, t: int) -> None:
        if t > 0:
            self.field.step()
        for i, nid in enumerate(self.node_order):
            self._emit(t, "move", nid,
                       [("x", float(self.field.x[i])), ("y", float(self.field.y[i]))])

    def _phase_partitions(self, t: int) -> None:
        self._labels = self.field.partition_labels()
        groups: Dict[int, List[str]] = {}
        for i, label in enumerate(self._labels):
            groups.setdefault(label, []).append(self.node_order[i])
        parts = [sorted(groups[label]) for label in sorted(groups)]
        text = ";".join("|".join(p) for p in parts)
        self._emit(t, "partitions", "world",
                   [("count", len(parts)), ("groups", text)])

    def _phase_lectures(self, t: int) -> None:
        for lec in self.scenario.lectures:
            if lec.tick != t:
                continue
            material = self.catalog[lec.material]
            topics = material.topics if isinstance(material, MaterialUnit) else ()
            self._emit(t, "release", lec.staff,
                       [("material", lec.material),
                        ("topics", sorted(topics)),
                        ("attendees", list(lec.attendees))])
            receivers = [lec.staff] + list(lec.attendees)
            for nid in receivers:
                self._store_add(self.nodes[nid], material, "release", t)

    def _phase_authoring(self, t: int) -> None:
        rates = self.scenario.authoring
        for nid in self.node_order:
            if nid not in self.student_ids:
                continue
            ns = self.nodes[nid]
            if self.rng_authoring.random() < rates.question:
                self._author_question(ns, t)
            if self.rng_authoring.random() < rates.annotation:
                self._author_annotation(ns, t)
            if self.rng_authoring.random() < rates.link:
                self._author_link(ns, t)
            if self.rng_authoring.random() < rates.evaluation:
                self._author_evaluation(ns, t)

    def _fresh_id(self, origin: str) -> ResourceId:
        seq = self.next_seq.get(origin, 0)
        self.next_seq[origin] = seq + 1
        return ResourceId(origin, seq)

    def _sorted_of_kind(self, store: Store, kinds) -> List[LearningResource]:
        return sorted((r for r in store if r.kind in kinds), key=lambda r: r.id)

    def _register_authored(self, ns: NodeState, resource: LearningResource,
                           t: int, extra_pairs) -> None:
        self.catalog[resource.id] = resource
        self._emit(t, "author", ns.spec.id,
                   [("resource", resource.id), ("rkind", resource.kind)]
                   + extra_pairs)
        self._store_add(ns, resource, "author", t)

    def _author_question(self, ns: NodeState, t: int) -> None:
        materials = self._sorted_of_kind(ns.peer.store, ("material",))
        components = self._sorted_of_kind(ns.peer.store, ("component",))
        if not materials or not components:
            return
        anchor = self.rng_authoring.choice(materials)
        component = self.rng_authoring.choice(components)
        q = Question(
            id=self._fresh_id(ns.spec.id),
            qtype=component.renders,
            anchors=frozenset({anchor.id}),
            component=component.id,
            author=ns.spec.id,
        )
        self._register_authored(
            ns, q, t,
            [("qtype", q.qtype), ("anchors", [anchor.id]),
             ("component", component.id)],
        )

    def _author_annotation(self, ns: NodeState, t: int) -> None:
        targets = self._sorted_of_kind(
            ns.peer.store, ("material", "question", "link")
        )
        if not targets:
            return
        target = self.rng_authoring.choice(targets)
        symbol = self.rng_authoring.choice(sorted(ANNOTATION_SYMBOLS))
        a = Annotation(
            id=self._fresh_id(ns.spec.id), target=target.id, symbol=symbol
        )
        self._register_authored(
            ns, a, t, [("target", target.id), ("symbol", symbol)]
        )

    def _author_link(self, ns: NodeState, t: int) -> None:
        candidates = self._sorted_of_kind(ns.peer.store, ("material", "question"))
        if len(candidates) < 2:
            return
        source = self.rng_authoring.choice(candidates)
        rest = [r for r in candidates if r.id != source.id]
        dest = self.rng_authoring.choice(rest)
        link = Link(
            id=self._fresh_id(ns.spec.id), source=source.id, dest=dest.id,
            author=ns.spec.id,
        )
        self._register_authored(
            ns, link, t, [("source", source.id), ("dest", dest.id)]
        )

    def _author_evaluation(self, ns: NodeState, t: int) -> None:
        candidates = [
            r
            for r in self._sorted_of_kind(ns.peer.store, _TTL_KINDS)
            if r.id.origin in self.student_ids and r.id.origin != ns.spec.id
        ]
        if not candidates:
            return
        target = self.rng_authoring.choice(candidates)
        score = self.rng_authoring.choice(_EVAL_SCORES)
        ev = Evaluation(
            id=self._fresh_id(ns.spec.id), target=target.id, score=score,
            evaluator=ns.spec.id,
        )
        self._register_authored(
            ns, ev, t, [("target", target.id), ("score", score)]
        )

    def _phase_exchanges(self, t: int) -> None:
        neighbors: Dict[str, List[str]] = {nid: [] for nid in self.node_order}
        for i, j in self.field.contacts():
            u, v = self.node_order[i], self.node_order[j]
            neighbors[u].append(v)
            neighbors[v].append(u)
        paired = set()
        for u in sorted(self.node_order):
            if u in paired:
                continue
            candidates = [
                v for v in neighbors[u] if v not in paired and self._stale(u, v)
            ]
            if not candidates:
                continue
            v = min(candidates, key=lambda w: (self._dist2(u, w), w))
            self._run_exchange(u, v, t)
            paired.add(u)
            paired.add(v)

    def _dist2(self, u: str, v: str) -> float:
        iu, iv = self.nodes[u].index, self.nodes[v].index
        dx = float(self.field.x[iv]) - float(self.field.x[iu])
        dy = float(self.field.y[iv]) - float(self.field.y[iu])
        return dx * dx + dy * dy

    def _pair_key(self, u: str, v: str) -> Tuple[str, str]:
        return (u, v) if u < v else (v, u)

    def _stale(self, u: str, v: str) -> bool:
        a, b = self._pair_key(u, v)
        seen = self._last_sync.get((a, b))
        return seen != (self.nodes[a].version, self.nodes[b].version)

    def _run_exchange(self, u: str, v: str, t: int) -> None:
        nu, nv = self.nodes[u], self.nodes[v]
        dig_u = make_digest(nu.peer, now=t)
        dig_v = make_digest(nv.peer, now=t)
        plan = match_information(dig_u, dig_v, nu.peer.interests, nv.peer.interests)
        if plan.to_a or plan.to_b:
            result = execute_exchange(
                nu.peer, nv.peer, plan, self.scenario.exchange_budget
            )
            for res in result.applied_to_a:
                self._post_add(nu, res, "exchange", t)
            for res in result.applied_to_b:
                self._post_add(nv, res, "exchange", t)
            self._emit_drops(nu, result.displaced_at_a, t)
            self._emit_drops(nv, result.displaced_at_b, t)
            self._emit(t, "exchange", f"{u}|{v}",
                       [("to_" + u, [r.id for r in result.applied_to_a]),
                        ("to_" + v, [r.id for r in result.applied_to_b]),
                        ("units", result.units),
                        ("aborted", int(result.aborted))])
        a, b = self._pair_key(u, v)
        self._last_sync[(a, b)] = (self.nodes[a].version, self.nodes[b].version)

    def _phase_wants(self, t: int) -> None:
        for nid in self.node_order:
            ns = self.nodes[nid]
            dangling = ns.peer.store.dangling()
            missing_ids = sorted({m for ms in dangling.values() for m in ms})
            for rid in missing_ids:
                if rid in ns.peer.wants:
                    continue
                expiry = ns.peer.tombstones.get(rid)
                if expiry is not None and expiry > t:
                    continue  # deliberately dropped; do not re-request yet
                ns.peer.wants[rid] = t
                self._emit(t, "want", nid, [("resource", rid), ("since", t)])

    def _partition_groups(self) -> List[List[str]]:
        groups: Dict[int, List[str]] = {}
        for i, label in enumerate(self._labels):
            groups.setdefault(label, []).append(self.node_order[i])
        return [groups[label] for label in sorted(groups)]

    def _phase_deadlocks(self, t: int) -> None:
        policy = self.scenario.policy
        model = self.scenario.cost_model
        for group in self._partition_groups():
            peers = [self.nodes[nid].peer for nid in group]
            want_records = [
                WantRecord(nid, frozenset({rid}), since)
                for nid in sorted(group)
                for rid, since in sorted(self.nodes[nid].peer.wants.items())
            ]
            blocked = detect_deadlock(peers, want_records)
            if not blocked:
                continue
            label = min(group)
            self._emit(t, "deadlock", label,
                       [("blocked", sorted(blocked))])
            decisions = decide_injection(
                blocked, want_records, peers, model, policy, t,
                self.catalog, self.ledger,
            )
            for decision in decisions:
                if not isinstance(decision, Inject):
                    continue
                if any(decision.rid in p.store for p in peers):
                    continue  # an earlier fetch this tick already covered it
                ns = self.nodes[decision.fetcher]
                receipt = inject_fetch(
                    ns.peer, [decision.rid], model, self.ledger, self.catalog,
                    cause="deadlock", budget=policy.budget,
                )
                for res in receipt.added:
                    self._post_add(ns, res, "inject", t)
                self._emit_drops(ns, receipt.displaced, t)
                self._emit(t, "inject", decision.fetcher,
                           [("resource", [decision.rid]),
                            ("added", [r.id for r in receipt.added]),
                            ("units", receipt.units),
                            ("charge", receipt.charge),
                            ("cause", "deadlock")])

    def _phase_cliques(self, t: int) -> None:
        model = self.scenario.cost_model
        for spec in self.scenario.cliques:
            if spec.tick != t:
                continue
            labels = {self._labels[self.nodes[m].index] for m in spec.members}
            if len(labels) != 1:
                continue  # members scattered across partitions; no shared fetch
            plan = plan_clique_share(
                spec.members, [self.catalog[rid] for rid in spec.wanted], model
            )
            for member in sorted(plan.shares):
                share = plan.shares[member]
                if not share:
                    continue
                ns = self.nodes[member]
                try:
                    receipt = inject_fetch(
                        ns.peer, share, model, self.ledger, self.catalog,
                        cause="clique_share", budget=self.scenario.policy.budget,
                    )
                except BudgetExceeded:
                    continue
                for res in receipt.added:
                    self._post_add(ns, res, "inject", t)
                self._emit_drops(ns, receipt.displaced, t)
                self._emit(t, "inject", member,
                           [("resource", list(share)),
                            ("added", [r.id for r in receipt.added]),
                            ("units", receipt.units),
                            ("charge", receipt.charge),
                            ("cause", "clique_share")])

    def _phase_quiz(self, t: int) -> None:
        if self.quiz is None or self.quiz.finished:
            return
        if t == self.quiz.deadline:
            self._finalize_quiz(t)
            return
        if t > self.quiz.deadline:
            return
        spec = self.scenario.quiz
        for nid in sorted(self.quiz.players):
            player = self.quiz.players[nid]
            ns = self.nodes[nid]
            runner = self._runner_for(ns)
            if runner is None:
                continue
            bank = sorted(
                qid
                for qid in runner.course.members
                if qid in ns.peer.store
                and is_displayable(ns.peer.store[qid], ns.peer.store)
            )
            selection = runner.select(bank)
            if selection is None:
                continue
            qid, paradigm = selection
            question = ns.peer.store[qid]
            self._maybe_joker(player, question, ns, t, spec)
            outcome = 1.0 if self.rng_answers.random() < ns.spec.skill else 0.0
            gained = quizmod.answer_question(
                player, question, outcome, ns.peer.store,
                base_points=self.quiz.base_points,
            )
            runner.record(qid, outcome)
            self.answer_log.append((qid, outcome))
            self._emit(t, "answer", nid,
                       [("question", qid), ("paradigm", paradigm),
                        ("outcome", int(outcome)), ("gained", gained),
                        ("knowledge", player.knowledge_points)])

    def _runner_for(self, ns: NodeState) -> Optional[CourseRunner]:
        if ns.runner is not None:
            return ns.runner
        course_rid = self._course_for(ns.spec.id)
        if course_rid is None:
            return None
        course = ns.peer.store.get(course_rid)
        if not isinstance(course, Course):
            return None
        ns.runner = CourseRunner(course, self.rng_course)
        return ns.runner

    def _maybe_joker(self, player: Player, question: Question, ns: NodeState,
                     t: int, spec) -> None:
        if spec.joker_rate <= 0.0:
            return
        if self.rng_answers.random() >= spec.joker_rate:
            return
        kind = self.rng_answers.choice(
            [JokerKind.LINK, JokerKind.ANNOTATION, JokerKind.STATISTICS]
        )
        try:
            quizmod.use_joker(
                player, question, kind, ns.peer.store,
                answers=self.answer_log, limit=self.quiz.joker_limit,
            )
            hit = 1
        except JokerLimitReached:
            return
        except NothingAvailable:
            hit = 0
        self._emit(t, "joker", ns.spec.id,
                   [("question", question.id), ("kind", kind.value),
                    ("uses", player.joker_uses.get(question.id, 0)),
                    ("hit", hit)])

    def _finalize_quiz(self, t: int) -> None:
        model = self.scenario.cost_model
        for nid in sorted(self.quiz.players):
            player = self.quiz.players[nid]
            store = self.nodes[nid].peer.store
            contributions = [r for r in store if r.id.origin == nid]
            evaluations = [r for r in store if isinstance(r, Evaluation)]
            player.cooperation_points = quizmod.cooperation_points(
                player, contributions, evaluations
            )
        reports = inject_collect_status(
            self.quiz.players.values(), model, self.ledger
        )
        for report in reports:
            self._emit(t, "collect", report.node,
                       [("charge", model.backbone_message_cost),
                        ("knowledge", report.knowledge_points),
                        ("cooperation", report.cooperation_points),
                        ("cause", "quiz_status")])
        result = quizmod.finalize(self.quiz, t, reports)
        self.finalize_result = result
        for entry in result.ranking:
            self._emit(t, "rank", entry.node,
                       [("rank", entry.rank),
                        ("knowledge", entry.knowledge_points),
                        ("cooperation", entry.cooperation_points),
                        ("total", entry.total)])

    def _phase_eviction(self, t: int) -> None:
        params = EvictionParams(keep_threshold=self.scenario.keep_threshold)
        for nid in self.node_order:
            ns = self.nodes[nid]
            store = ns.peer.store
            for rid, rec in list(ns.ttl.items()):
                rating = aggregate_score(rid, store.evaluations_of(rid))
                ns.ttl[rid] = refresh_ttl(rec, t, rating, params)
            removed = evict_expired(store, ns.ttl, t)
            for rid in sorted(removed):
                ns.version += 1
                ns.peer.tombstones[rid] = t + self.scenario.tombstone_window
                ns.peer.wants.pop(rid, None)
                self._emit(t, "evict", nid, [("resource", rid)])

    # -- driver ------------------------------------------------------------

    def tick(self, t: int) -> None:
        self._phase_move(t)
        self._phase_partitions(t)
        self._phase_lectures(t)
        self._phase_authoring(t)
        self._phase_exchanges(t)
        self._phase_wants(t)
        self._phase_deadlocks(t)
        self._phase_cliques(t)
        self._phase_quiz(t)
        self._phase_eviction(t)

    def run_all(self) -> RunResult:
        ticks = self.scenario.ticks
        for t in range(ticks):
            self.tick(t)
        self._emit(max(ticks - 1, 0), "end", "world", [("ticks", ticks)])
        meta = TraceMeta(
            scenario=self.scenario.name,
            seed=self.seed,
            node_interests={
                n.id: n.interests for n in self.scenario.nodes
            },
        )
        report = build_report(meta, self.records)
        return RunResult(
            scenario=self.scenario,
            seed=self.seed,
            meta=meta,
            records=list(self.records),
            trace_text=serialize_trace(meta, self.records),
            report=report,
            ranking_text=ranking_csv(self.records),
            world=self,
        )


def run(scenario: Scenario, seed: int) -> RunResult:
    """Simulate the scenario to its horizon; the result is reproducible."""
    return World(scenario, seed).run_all()
