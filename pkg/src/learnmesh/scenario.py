"""Scenario documents: the JSON tree describing one simulated deployment.

A scenario names the field, the nodes, the resource catalog with its aliases,
who holds what initially, the lecture schedule, the quiz, authoring rates,
eviction and cost parameters. ``scenario_diagnostics`` collects every problem
with a document path; ``parse_scenario`` builds the typed form only from a
clean document.

Catalog entries use file-local alias strings; the loader assigns each origin
node a sequence counter and turns aliases into stable (origin, seq) ids in
document order, so the same file always yields the same ids.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

from .injection import CostModel, InjectionPolicy
from .paradigms import (
    BalancedDirective,
    BalancedParams,
    CausalDirective,
    CausalEdge,
    DynamicDirective,
    FreeDirective,
    OrderingDirective,
)
from .resources import (
    ANNOTATION_SYMBOLS,
    Annotation,
    ComponentDescriptor,
    Course,
    Evaluation,
    LearningResource,
    Link,
    MaterialUnit,
    Question,
    ResourceId,
)


class InvalidScenario(Exception):
    def __init__(self, diagnostics: List[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics) or "invalid scenario")


# Node ids, topics, and question types end up in trace payloads and CSV cells;
# the charset keeps them free of the framing characters (tab, space, comma,
# colon, equals).
_IDENT = re.compile(r"^[A-Za-z0-9_.-]+$")


def _ident_list(doc, key, path, diags, default=()):
    values = _str_list(doc, key, path, diags, default)
    if values is None:
        return None
    bad = [v for v in values if not _IDENT.match(v)]
    if bad:
        diags.append(f"{path}.{key}: invalid identifiers: {', '.join(bad)}")
        return None
    return values


@dataclass(frozen=True)
class NodeSpec:
    id: str
    role: str
    interests: FrozenSet[str]
    radio_range: float
    speed: Tuple[float, float]
    pause: Tuple[int, int]
    position: Optional[Tuple[float, float]]
    backbone: bool
    budget: float
    skill: float


@dataclass(frozen=True)
class LectureSpec:
    tick: int
    staff: str
    material: ResourceId
    attendees: Tuple[str, ...]


@dataclass(frozen=True)
class QuizSpec:
    deadline: int
    base_points: int
    joker_limit: Optional[int]
    players: Tuple[str, ...]
    course: Optional[ResourceId]
    joker_rate: float = 0.0  # per-answer chance a player burns a joker first


@dataclass(frozen=True)
class CliqueFetchSpec:
    tick: int
    members: Tuple[str, ...]
    wanted: Tuple[ResourceId, ...]


@dataclass(frozen=True)
class AuthoringRates:
    question: float = 0.0
    annotation: float = 0.0
    link: float = 0.0
    evaluation: float = 0.0


@dataclass
class Scenario:
    name: str
    width: float
    height: float
    ticks: int
    nodes: Tuple[NodeSpec, ...]
    catalog: Dict[ResourceId, LearningResource]
    aliases: Dict[str, ResourceId]
    initial_stores: Dict[str, Tuple[ResourceId, ...]]
    lectures: Tuple[LectureSpec, ...]
    quiz: Optional[QuizSpec]
    course_assignments: Dict[str, ResourceId]
    authoring: AuthoringRates
    ttl_base: int
    keep_threshold: float
    cost_model: CostModel
    policy: InjectionPolicy
    cliques: Tuple[CliqueFetchSpec, ...]
    exchange_budget: int
    tombstone_window: int


_CATALOG_SECTIONS = (
    "materials",
    "components",
    "questions",
    "annotations",
    "links",
    "evaluations",
    "courses",
)


def load_document(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise InvalidScenario(["document root must be an object"])
    return doc


def _num(doc, key, path, diags, default=None, minimum=None, maximum=None,
         integer=False, strict_min=False):
    where = f"{path}.{key}" if path else key
    if key not in doc:
        if default is not None:
            return default
        diags.append(f"{where}: missing")
        return None
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        diags.append(f"{where}: must be a number")
        return None
    if integer and not isinstance(v, int):
        diags.append(f"{where}: must be an integer")
        return None
    if minimum is not None and (v <= minimum if strict_min else v < minimum):
        bound = "greater than" if strict_min else "at least"
        diags.append(f"{where}: must be {bound} {minimum}")
        return None
    if maximum is not None and v > maximum:
        diags.append(f"{where}: must be at most {maximum}")
        return None
    return v


def _pair(doc, key, path, diags, default, integer=False):
    v = doc.get(key, default)
    ok = (
        isinstance(v, (list, tuple))
        and len(v) == 2
        and all(isinstance(e, (int, float)) and not isinstance(e, bool) for e in v)
        and (not integer or all(isinstance(e, int) for e in v))
    )
    if not ok:
        kind = "integers" if integer else "numbers"
        diags.append(f"{path}.{key}: must be a pair of {kind}")
        return None
    if v[0] > v[1] or v[0] < 0:
        diags.append(f"{path}.{key}: must satisfy 0 <= low <= high")
        return None
    return (v[0], v[1])


def _str_list(doc, key, path, diags, default=()):
    v = doc.get(key, list(default))
    if not isinstance(v, list) or not all(isinstance(e, str) for e in v):
        diags.append(f"{path}.{key}: must be a list of strings")
        return None
    return list(v)


class _AliasTable:
    """Assigns (origin, seq) ids to catalog aliases in document order."""

    def __init__(self):
        self.by_alias: Dict[str, ResourceId] = {}
        self._counters: Dict[str, int] = {}

    def assign(self, alias: str, origin: str) -> ResourceId:
        seq = self._counters.get(origin, 0)
        self._counters[origin] = seq + 1
        rid = ResourceId(origin, seq)
        self.by_alias[alias] = rid
        return rid

    def resolve(self, alias, path, diags) -> Optional[ResourceId]:
        if not isinstance(alias, str):
            diags.append(f"{path}: resource reference must be a string")
            return None
        rid = self.by_alias.get(alias)
        if rid is None:
            diags.append(f"{path}: unknown resource id '{alias}'")
        return rid


def _parse_nodes(doc, diags) -> List[NodeSpec]:
    nodes = []
    raw = doc.get("nodes", [])
    if not isinstance(raw, list):
        diags.append("nodes: must be a list")
        return nodes
    seen = set()
    for i, nd in enumerate(raw):
        path = f"nodes[{i}]"
        if not isinstance(nd, dict):
            diags.append(f"{path}: must be an object")
            continue
        nid = nd.get("id")
        if not isinstance(nid, str) or not _IDENT.match(nid or ""):
            diags.append(f"{path}.id: must match {_IDENT.pattern}")
            continue
        if nid in seen:
            diags.append(f"{path}.id: duplicate node id '{nid}'")
            continue
        seen.add(nid)
        role = nd.get("role", "student")
        if role not in ("staff", "student"):
            diags.append(f"{path}.role: must be 'staff' or 'student'")
            continue
        interests = _ident_list(nd, "interests", path, diags)
        rng_m = _num(nd, "radio_range", path, diags, minimum=0, strict_min=True)
        speed = _pair(nd, "speed", path, diags, default=[0.0, 0.0])
        pause = _pair(nd, "pause", path, diags, default=[0, 0], integer=True)
        budget = _num(nd, "budget", path, diags, default=0.0, minimum=0)
        skill = _num(
            nd, "skill", path, diags,
            default=1.0 if role == "staff" else 0.5, minimum=0, maximum=1,
        )
        backbone = nd.get("backbone", role == "staff")
        if not isinstance(backbone, bool):
            diags.append(f"{path}.backbone: must be a boolean")
            continue
        if role == "staff" and not backbone:
            diags.append(f"{path}.backbone: staff nodes must have backbone access")
            continue
        position = None
        if "position" in nd:
            pos = nd["position"]
            if (
                not isinstance(pos, (list, tuple))
                or len(pos) != 2
                or not all(
                    isinstance(c, (int, float)) and not isinstance(c, bool)
                    for c in pos
                )
            ):
                diags.append(f"{path}.position: must be a coordinate pair")
                continue
            position = (float(pos[0]), float(pos[1]))
        if None in (interests, rng_m, speed, pause, budget, skill):
            continue
        nodes.append(
            NodeSpec(
                id=nid,
                role=role,
                interests=frozenset(interests),
                radio_range=float(rng_m),
                speed=(float(speed[0]), float(speed[1])),
                pause=(int(pause[0]), int(pause[1])),
                position=position,
                backbone=backbone,
                budget=float(budget),
                skill=float(skill),
            )
        )
    return nodes


def _parse_program(raw, path, table, members, diags):
    program = []
    if not isinstance(raw, list):
        diags.append(f"{path}: must be a list of directives")
        return program

    def member_ref(alias, p):
        rid = table.resolve(alias, p, diags)
        if rid is not None and rid not in members:
            diags.append(f"{p}: '{alias}' is not a member of this course")
            return None
        return rid

    def chains_of(d, p):
        chains = []
        raw_chains = d.get("chains", [])
        if not isinstance(raw_chains, list):
            diags.append(f"{p}.chains: must be a list of lists")
            return None
        for ci, ch in enumerate(raw_chains):
            if not isinstance(ch, list) or not ch:
                diags.append(f"{p}.chains[{ci}]: must be a non-empty list")
                return None
            rids = [member_ref(a, f"{p}.chains[{ci}][{k}]") for k, a in enumerate(ch)]
            if any(r is None for r in rids):
                return None
            chains.append(tuple(rids))
        return tuple(chains)

    for di, d in enumerate(raw):
        p = f"{path}[{di}]"
        if not isinstance(d, dict) or "kind" not in d:
            diags.append(f"{p}: directive needs a 'kind'")
            continue
        kind = d["kind"]
        if kind == "free":
            program.append(FreeDirective())
        elif kind == "causal":
            edges = {}
            raw_edges = d.get("edges", {})
            if not isinstance(raw_edges, dict):
                diags.append(f"{p}.edges: must be an object")
                continue
            ok = True
            for alias, branch in raw_edges.items():
                src = member_ref(alias, f"{p}.edges.{alias}")
                if not isinstance(branch, dict):
                    diags.append(f"{p}.edges.{alias}: must be an object")
                    ok = False
                    continue
                correct = branch.get("correct")
                wrong = branch.get("wrong")
                c = member_ref(correct, f"{p}.edges.{alias}.correct") if correct else None
                w = member_ref(wrong, f"{p}.edges.{alias}.wrong") if wrong else None
                if src is None or (correct and c is None) or (wrong and w is None):
                    ok = False
                    continue
                edges[src] = CausalEdge(correct=c, wrong=w)
            if ok:
                program.append(CausalDirective(edges=edges))
        elif kind in ("ordering", "dynamic"):
            chains = chains_of(d, p)
            if chains is None:
                continue
            if kind == "dynamic":
                program.append(DynamicDirective(chains=chains))
                continue
            forced = []
            raw_forced = d.get("forced", [])
            if not isinstance(raw_forced, list):
                diags.append(f"{p}.forced: must be a list of [sub, reference] pairs")
                continue
            ok = True
            for fi, pair in enumerate(raw_forced):
                if not isinstance(pair, list) or len(pair) != 2:
                    diags.append(f"{p}.forced[{fi}]: must be a [sub, reference] pair")
                    ok = False
                    continue
                sub = member_ref(pair[0], f"{p}.forced[{fi}][0]")
                ref = member_ref(pair[1], f"{p}.forced[{fi}][1]")
                if sub is None or ref is None:
                    ok = False
                    continue
                forced.append((sub, ref))
            if ok:
                program.append(OrderingDirective(chains=chains, forced=tuple(forced)))
        elif kind == "balanced":
            n = _num(d, "n", p, diags, minimum=1, integer=True)
            pv = _num(d, "p", p, diags, minimum=0, maximum=1)
            if n is not None and pv is not None:
                program.append(BalancedDirective(params=BalancedParams(n=n, p=float(pv))))
        else:
            diags.append(f"{p}.kind: unknown directive kind '{kind}'")
    return program


def _parse_catalog(doc, node_ids, staff_ids, diags):
    catalog: Dict[ResourceId, LearningResource] = {}
    table = _AliasTable()
    raw = doc.get("catalog", {})
    if not isinstance(raw, dict):
        diags.append("catalog: must be an object")
        return catalog, table

    entries = {}
    for section in _CATALOG_SECTIONS:
        sec = raw.get(section, [])
        if not isinstance(sec, list):
            diags.append(f"catalog.{section}: must be a list")
            continue
        entries[section] = []
        for i, item in enumerate(sec):
            path = f"catalog.{section}[{i}]"
            if not isinstance(item, dict):
                diags.append(f"{path}: must be an object")
                continue
            alias = item.get("id")
            origin = item.get("origin")
            if not isinstance(alias, str) or not alias:
                diags.append(f"{path}.id: must be a non-empty string")
                continue
            if alias in table.by_alias:
                diags.append(f"{path}.id: duplicate catalog id '{alias}'")
                continue
            if origin not in node_ids:
                diags.append(f"{path}.origin: unknown node '{origin}'")
                continue
            rid = table.assign(alias, origin)
            entries[section].append((path, item, rid, origin))

    def build(section, fn):
        for path, item, rid, origin in entries.get(section, []):
            res = fn(path, item, rid, origin)
            if res is not None:
                catalog[rid] = res

    def mk_material(path, item, rid, origin):
        topics = _ident_list(item, "topics", path, diags)
        size = _num(item, "size", path, diags, default=1, minimum=1, integer=True)
        if topics is None or size is None:
            return None
        if not topics:
            diags.append(f"{path}.topics: at least one topic required")
            return None
        return MaterialUnit(
            id=rid,
            topics=frozenset(topics),
            size=size,
            staff_origin=origin in staff_ids,
        )

    def mk_component(path, item, rid, origin):
        renders = item.get("renders")
        size = _num(item, "size", path, diags, default=1, minimum=1, integer=True)
        if not isinstance(renders, str) or not _IDENT.match(renders or ""):
            diags.append(f"{path}.renders: must name a question type")
            return None
        if size is None:
            return None
        return ComponentDescriptor(id=rid, renders=renders, size=size)

    def mk_question(path, item, rid, origin):
        qtype = item.get("qtype")
        if not isinstance(qtype, str) or not _IDENT.match(qtype or ""):
            diags.append(f"{path}.qtype: must be a non-empty identifier")
            return None
        anchors = _str_list(item, "anchors", path, diags)
        if anchors is None or not anchors:
            diags.append(f"{path}.anchors: at least one anchor required")
            return None
        anchor_ids = [
            table.resolve(a, f"{path}.anchors[{k}]", diags)
            for k, a in enumerate(anchors)
        ]
        comp = table.resolve(item.get("component"), f"{path}.component", diags)
        if comp is None or any(a is None for a in anchor_ids):
            return None
        if not isinstance(catalog.get(comp), ComponentDescriptor):
            diags.append(f"{path}.component: must reference a component")
            return None
        if catalog[comp].renders != qtype:
            diags.append(
                f"{path}.component: component renders "
                f"'{catalog[comp].renders}', question needs '{qtype}'"
            )
            return None
        return Question(
            id=rid, qtype=qtype, anchors=frozenset(anchor_ids),
            component=comp, author=origin,
        )

    def mk_annotation(path, item, rid, origin):
        target = table.resolve(item.get("target"), f"{path}.target", diags)
        symbol = item.get("symbol")
        size = _num(item, "size", path, diags, default=1, minimum=1, integer=True)
        if symbol not in ANNOTATION_SYMBOLS:
            diags.append(
                f"{path}.symbol: must be one of {sorted(ANNOTATION_SYMBOLS)}"
            )
            return None
        if target is None or size is None:
            return None
        return Annotation(id=rid, target=target, symbol=symbol, size=size)

    def mk_link(path, item, rid, origin):
        source = table.resolve(item.get("source"), f"{path}.source", diags)
        dest = table.resolve(item.get("dest"), f"{path}.dest", diags)
        if source is None or dest is None:
            return None
        if source == dest:
            diags.append(f"{path}: source and dest must differ")
            return None
        return Link(id=rid, source=source, dest=dest, author=origin)

    def mk_evaluation(path, item, rid, origin):
        target = table.resolve(item.get("target"), f"{path}.target", diags)
        score = _num(item, "score", path, diags, minimum=0, maximum=1)
        if target is None or score is None:
            return None
        return Evaluation(id=rid, target=target, score=float(score), evaluator=origin)

    def mk_course(path, item, rid, origin):
        member_aliases = _str_list(item, "members", path, diags)
        if member_aliases is None:
            return None
        member_ids = [
            table.resolve(a, f"{path}.members[{k}]", diags)
            for k, a in enumerate(member_aliases)
        ]
        if any(m is None for m in member_ids):
            return None
        for k, m in enumerate(member_ids):
            if not isinstance(catalog.get(m), Question):
                diags.append(f"{path}.members[{k}]: course members must be questions")
                return None
        members = frozenset(member_ids)
        program = _parse_program(
            item.get("program", [{"kind": "free"}]), f"{path}.program",
            table, members, diags,
        )
        return Course(id=rid, program=tuple(program), members=members)

    build("materials", mk_material)
    build("components", mk_component)
    build("questions", mk_question)
    build("annotations", mk_annotation)
    build("links", mk_link)
    build("evaluations", mk_evaluation)
    build("courses", mk_course)
    return catalog, table


def scenario_diagnostics(doc: dict) -> List[str]:
    """Every problem found in the document, each tagged with its path."""
    diags: List[str] = []
    parse_scenario(doc, _diags=diags)
    return diags


def parse_scenario(doc: dict, _diags: Optional[List[str]] = None) -> Optional[Scenario]:
    """Build the typed scenario; raises InvalidScenario unless collecting."""
    diags: List[str] = [] if _diags is None else _diags

    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        diags.append("name: must be a string")
        name = "scenario"
    area = doc.get("area", {})
    if not isinstance(area, dict):
        diags.append("area: must be an object")
        area = {}
    width = _num(area, "width", "area", diags, minimum=0, strict_min=True)
    height = _num(area, "height", "area", diags, minimum=0, strict_min=True)
    ticks = _num(doc, "ticks", "", diags, minimum=1, integer=True)

    nodes = _parse_nodes(doc, diags)
    node_ids = {n.id for n in nodes}
    staff_ids = {n.id for n in nodes if n.role == "staff"}
    student_ids = node_ids - staff_ids
    if width is not None and height is not None:
        for i, n in enumerate(nodes):
            if n.position is not None:
                px, py = n.position
                if not (0 <= px <= width and 0 <= py <= height):
                    diags.append(f"nodes[{i}].position: outside the area")

    catalog, table = _parse_catalog(doc, node_ids, staff_ids, diags)

    initial_stores: Dict[str, Tuple[ResourceId, ...]] = {}
    raw_stores = doc.get("initial_stores", {})
    if not isinstance(raw_stores, dict):
        diags.append("initial_stores: must be an object")
        raw_stores = {}
    for nid, aliases in raw_stores.items():
        path = f"initial_stores.{nid}"
        if nid not in node_ids:
            diags.append(f"{path}: unknown node")
            continue
        if not isinstance(aliases, list):
            diags.append(f"{path}: must be a list of resource ids")
            continue
        rids = [table.resolve(a, f"{path}[{k}]", diags) for k, a in enumerate(aliases)]
        if all(r is not None for r in rids):
            initial_stores[nid] = tuple(rids)

    lectures: List[LectureSpec] = []
    raw_lect = doc.get("lectures", [])
    if not isinstance(raw_lect, list):
        diags.append("lectures: must be a list")
        raw_lect = []
    for i, lec in enumerate(raw_lect):
        path = f"lectures[{i}]"
        if not isinstance(lec, dict):
            diags.append(f"{path}: must be an object")
            continue
        tick = _num(lec, "tick", path, diags, minimum=0, integer=True)
        staff = lec.get("staff")
        if staff not in staff_ids:
            diags.append(f"{path}.staff: must name a staff node")
            continue
        material = table.resolve(lec.get("material"), f"{path}.material", diags)
        if material is not None and not isinstance(
            catalog.get(material), MaterialUnit
        ):
            diags.append(f"{path}.material: must reference a material")
            continue
        attendees = _str_list(lec, "attendees", path, diags)
        if attendees is not None:
            outside = [a for a in attendees if a not in student_ids]
            if outside:
                diags.append(
                    f"{path}.attendees: not student nodes: {', '.join(outside)}"
                )
                continue
        if None in (tick, material, attendees):
            continue
        lectures.append(LectureSpec(tick, staff, material, tuple(attendees)))

    quiz: Optional[QuizSpec] = None
    raw_quiz = doc.get("quiz")
    if raw_quiz is not None:
        if not isinstance(raw_quiz, dict):
            diags.append("quiz: must be an object")
        else:
            deadline = _num(raw_quiz, "deadline", "quiz", diags, minimum=1, integer=True)
            base = _num(
                raw_quiz, "base_points", "quiz", diags, default=100, minimum=1,
                integer=True,
            )
            limit = None
            if raw_quiz.get("joker_limit") is not None:
                limit = _num(
                    raw_quiz, "joker_limit", "quiz", diags, minimum=0, integer=True
                )
            players = _str_list(raw_quiz, "players", "quiz", diags)
            joker_rate = _num(
                raw_quiz, "joker_rate", "quiz", diags, default=0.0, minimum=0,
                maximum=1,
            )
            course_rid = None
            if raw_quiz.get("course") is not None:
                course_rid = table.resolve(raw_quiz["course"], "quiz.course", diags)
                if course_rid is not None and not isinstance(
                    catalog.get(course_rid), Course
                ):
                    diags.append("quiz.course: must reference a course")
                    course_rid = None
            if players is not None:
                outside = [p for p in players if p not in node_ids]
                if outside:
                    diags.append(f"quiz.players: unknown nodes: {', '.join(outside)}")
                elif deadline is not None and base is not None and joker_rate is not None:
                    if ticks is not None and deadline >= ticks:
                        diags.append(
                            "quiz.deadline: must fall before the run's tick count"
                        )
                    else:
                        quiz = QuizSpec(
                            deadline, base, limit, tuple(players), course_rid,
                            float(joker_rate),
                        )

    course_assignments: Dict[str, ResourceId] = {}
    raw_assign = doc.get("course_assignments", {})
    if not isinstance(raw_assign, dict):
        diags.append("course_assignments: must be an object")
        raw_assign = {}
    for nid, alias in raw_assign.items():
        path = f"course_assignments.{nid}"
        if nid not in node_ids:
            diags.append(f"{path}: unknown node")
            continue
        rid = table.resolve(alias, path, diags)
        if rid is None:
            continue
        if not isinstance(catalog.get(rid), Course):
            diags.append(f"{path}: must reference a course")
            continue
        course_assignments[nid] = rid
    if quiz is not None:
        for p in quiz.players:
            if p not in course_assignments and quiz.course is None:
                diags.append(
                    f"quiz.players: '{p}' has no course assignment and no default course"
                )

    raw_auth = doc.get("authoring", {})
    if not isinstance(raw_auth, dict):
        diags.append("authoring: must be an object")
        raw_auth = {}
    rates = {}
    for kind in ("question", "annotation", "link", "evaluation"):
        rates[kind] = _num(
            raw_auth, kind, "authoring", diags, default=0.0, minimum=0, maximum=1
        )
    authoring = AuthoringRates(
        **{k: float(v) for k, v in rates.items() if v is not None}
    )

    raw_evict = doc.get("eviction", {})
    if not isinstance(raw_evict, dict):
        diags.append("eviction: must be an object")
        raw_evict = {}
    ttl_base = _num(raw_evict, "ttl_base", "eviction", diags, default=50, minimum=1,
                    integer=True)
    keep = _num(raw_evict, "keep_threshold", "eviction", diags, default=0.5,
                minimum=0, maximum=1)

    raw_cost = doc.get("cost_model", {})
    if not isinstance(raw_cost, dict):
        diags.append("cost_model: must be an object")
        raw_cost = {}
    unit = _num(raw_cost, "unit", "cost_model", diags, default=1.0, minimum=0,
                strict_min=True)
    message = _num(raw_cost, "message", "cost_model", diags, default=1.0, minimum=0,
                   strict_min=True)

    raw_policy = doc.get("policy", {})
    if not isinstance(raw_policy, dict):
        diags.append("policy: must be an object")
        raw_policy = {}
    budget = _num(raw_policy, "budget", "policy", diags, default=100.0, minimum=0)
    demand = _num(raw_policy, "demand_threshold", "policy", diags, default=1,
                  minimum=0, integer=True)
    grace = _num(raw_policy, "deadlock_grace", "policy", diags, default=3,
                 minimum=0, integer=True)

    cliques: List[CliqueFetchSpec] = []
    raw_cliques = doc.get("cliques", [])
    if not isinstance(raw_cliques, list):
        diags.append("cliques: must be a list")
        raw_cliques = []
    for i, cl in enumerate(raw_cliques):
        path = f"cliques[{i}]"
        if not isinstance(cl, dict):
            diags.append(f"{path}: must be an object")
            continue
        tick = _num(cl, "tick", path, diags, minimum=0, integer=True)
        members = _str_list(cl, "members", path, diags)
        if members is not None:
            outside = [m for m in members if m not in node_ids]
            if outside:
                diags.append(f"{path}.members: unknown nodes: {', '.join(outside)}")
                continue
            if not members:
                diags.append(f"{path}.members: must not be empty")
                continue
        wanted_aliases = _str_list(cl, "wanted", path, diags)
        if wanted_aliases is not None:
            wanted = [
                table.resolve(a, f"{path}.wanted[{k}]", diags)
                for k, a in enumerate(wanted_aliases)
            ]
        else:
            wanted = [None]
        if tick is None or members is None or any(w is None for w in wanted):
            continue
        cliques.append(CliqueFetchSpec(tick, tuple(members), tuple(wanted)))

    exchange_budget = _num(doc, "exchange_budget", "", diags, default=50, minimum=1,
                           integer=True)
    tombstone_window = _num(doc, "tombstone_window", "", diags, default=10,
                            minimum=0, integer=True)

    if diags:
        if _diags is None:
            raise InvalidScenario(diags)
        return None

    return Scenario(
        name=name,
        width=float(width),
        height=float(height),
        ticks=ticks,
        nodes=tuple(nodes),
        catalog=catalog,
        aliases=dict(table.by_alias),
        initial_stores=initial_stores,
        lectures=tuple(lectures),
        quiz=quiz,
        course_assignments=course_assignments,
        authoring=authoring,
        ttl_base=ttl_base,
        keep_threshold=float(keep),
        cost_model=CostModel(backbone_unit_cost=float(unit),
                             backbone_message_cost=float(message)),
        policy=InjectionPolicy(budget=float(budget), demand_threshold=demand,
                               deadlock_grace=grace),
        cliques=tuple(cliques),
        exchange_budget=exchange_budget,
        tombstone_window=tombstone_window,
    )


def load_scenario(path: str) -> Scenario:
    """Load, validate, and build a scenario; raises InvalidScenario on problems."""
    doc = load_document(path)
    scenario = parse_scenario(doc)
    assert scenario is not None
    return scenario
