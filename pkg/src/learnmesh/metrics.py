"""Event trace format and the metrics report folded from it.

The trace is the ground truth of a run: a prologue of '#' meta lines (format
version, run identity, node interest profiles) followed by one tab-separated
record per event (tick, kind, subject, payload) and a closing ``end`` record.
The live report and the ``report`` subcommand both call the same fold over
the same record sequence, so replaying a trace file reproduces the live
report exactly, by construction.

Record payloads are ``key=value`` tokens separated by single spaces; list
values join their elements with commas. Identifiers (node ids, topics,
resource kinds) are restricted by scenario validation to a charset that can
never collide with this framing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

VERSION_LINE = "# learnmesh-trace v1"

INJECTION_CAUSES = ("deadlock", "clique_share", "quiz_status")


class TruncatedTrace(Exception):
    """The trace file is malformed or ends before its closing record."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    kind: str
    subject: str
    payload: str

    def line(self) -> str:
        return f"{self.tick}\t{self.kind}\t{self.subject}\t{self.payload}"


@dataclass(frozen=True)
class TraceMeta:
    scenario: str
    seed: int
    node_interests: Dict[str, FrozenSet[str]]


def fmt_payload(pairs: Iterable[Tuple[str, object]]) -> str:
    """key=value tokens in the given order; lists join with commas."""
    tokens = []
    for key, value in pairs:
        if isinstance(value, (list, tuple, frozenset, set)):
            items = sorted(str(v) for v in value) if isinstance(
                value, (set, frozenset)
            ) else [str(v) for v in value]
            tokens.append(f"{key}={','.join(items)}")
        elif isinstance(value, float):
            tokens.append(f"{key}={value!r}")
        else:
            tokens.append(f"{key}={value}")
    return " ".join(tokens)


def parse_payload(payload: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    if not payload:
        return out
    for token in payload.split(" "):
        key, _, value = token.partition("=")
        out[key] = value
    return out


def split_list(value: str) -> List[str]:
    return value.split(",") if value else []


def serialize_trace(meta: TraceMeta, records: Iterable[TraceRecord]) -> str:
    name = meta.scenario.replace("\t", " ").replace("\n", " ")
    lines = [VERSION_LINE, f"# run scenario={name} seed={meta.seed}"]
    for node in meta.node_interests:
        topics = ",".join(sorted(meta.node_interests[node]))
        lines.append(f"# node {node} interests={topics}")
    lines.extend(r.line() for r in records)
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> Tuple[TraceMeta, List[TraceRecord]]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != VERSION_LINE:
        raise TruncatedTrace(1, "missing trace version line")
    scenario = "?"
    seed = -1
    interests: Dict[str, FrozenSet[str]] = {}
    records: List[TraceRecord] = []
    for idx, line in enumerate(lines[1:], start=2):
        if line.startswith("# run "):
            body = line[len("# run "):]
            head, sep, seed_text = body.rpartition(" seed=")
            if not sep or not head.startswith("scenario="):
                raise TruncatedTrace(idx, "malformed run line")
            scenario = head[len("scenario="):]
            try:
                seed = int(seed_text)
            except ValueError:
                raise TruncatedTrace(idx, "malformed seed") from None
            continue
        if line.startswith("# node "):
            body = line[len("# node "):]
            node, sep, topics = body.partition(" interests=")
            if not sep:
                raise TruncatedTrace(idx, "malformed node line")
            interests[node] = frozenset(t for t in topics.split(",") if t)
            continue
        if line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise TruncatedTrace(idx, "expected 4 tab-separated fields")
        try:
            tick = int(parts[0])
        except ValueError:
            raise TruncatedTrace(idx, "tick is not an integer") from None
        records.append(TraceRecord(tick, parts[1], parts[2], parts[3]))
    if not records or records[-1].kind != "end":
        raise TruncatedTrace(len(lines), "trace ends without its closing record")
    return TraceMeta(scenario, seed, interests), records


@dataclass(frozen=True)
class MetricsReport:
    """Ordered (metric, tick_or_scope, value) rows; equality is row equality."""

    rows: Tuple[Tuple[str, str, str], ...]

    def value(self, metric: str, scope: str) -> Optional[str]:
        for m, s, v in self.rows:
            if m == metric and s == scope:
                return v
        return None

    def series(self, metric: str) -> List[Tuple[str, str]]:
        return [(s, v) for m, s, v in self.rows if m == metric]


def build_report(meta: TraceMeta, records: Iterable[TraceRecord]) -> MetricsReport:
    """Fold the record sequence into the metrics report.

    Coverage is measured at end of tick: the fraction of interested nodes
    holding a released material, averaged over released materials.
    Dissemination latency is the tick count from release to the first
    end-of-tick coverage of at least 0.9 for that material (-1 if never).
    """
    interests = meta.node_interests
    partition_rows: List[Tuple[str, str, str]] = []
    coverage_rows: List[Tuple[str, str, str]] = []
    released: Dict[str, Tuple[int, FrozenSet[str]]] = {}  # rid -> (tick, interested)
    holders: Dict[str, set] = {}
    latency: Dict[str, int] = {}
    cost_per_node: Dict[str, float] = {n: 0.0 for n in interests}
    cost_by_cause: Dict[str, float] = {c: 0.0 for c in INJECTION_CAUSES}
    injections_by_cause: Dict[str, int] = {c: 0 for c in INJECTION_CAUSES}
    deadlocked: set = set()
    resolved: set = set()
    evictions = 0
    rank_rows: List[Tuple[int, str]] = []

    pending_tick: Optional[int] = None
    pending_partitions: Optional[str] = None

    def flush() -> None:
        nonlocal pending_partitions
        if pending_tick is None:
            return
        t = str(pending_tick)
        if pending_partitions is not None:
            partition_rows.append(("partitions", t, pending_partitions))
            pending_partitions = None
        fracs = []
        for rid in sorted(released):
            release_tick, audience = released[rid]
            if not audience or release_tick > pending_tick:
                continue
            frac = len(holders.get(rid, set()) & audience) / len(audience)
            fracs.append(frac)
            if frac >= 0.9 and rid not in latency:
                latency[rid] = pending_tick - release_tick
        if fracs:
            coverage_rows.append(("coverage", t, repr(sum(fracs) / len(fracs))))

    def charge_of(fields: Dict[str, str]) -> float:
        return float(fields.get("charge", "0"))

    for rec in records:
        if rec.tick != pending_tick:
            flush()
            pending_tick = rec.tick
        fields = parse_payload(rec.payload)
        if rec.kind == "partitions":
            pending_partitions = fields.get("count", "0")
        elif rec.kind == "release":
            rid = fields["material"]
            if rid not in released:
                topics = frozenset(split_list(fields.get("topics", "")))
                audience = frozenset(
                    n for n, prof in interests.items() if prof & topics
                )
                released[rid] = (rec.tick, audience)
        elif rec.kind == "add":
            holders.setdefault(fields["resource"], set()).add(rec.subject)
        elif rec.kind == "evict":
            rid = fields["resource"]
            holders.get(rid, set()).discard(rec.subject)
            evictions += 1
        elif rec.kind == "drop":
            # replaced by a newer evaluation; a store mutation but not an eviction
            holders.get(fields["resource"], set()).discard(rec.subject)
        elif rec.kind == "deadlock":
            deadlocked.update(split_list(fields.get("blocked", "")))
        elif rec.kind == "inject":
            cause = fields.get("cause", "deadlock")
            injections_by_cause[cause] = injections_by_cause.get(cause, 0) + 1
            cost_by_cause[cause] = cost_by_cause.get(cause, 0.0) + charge_of(fields)
            node = rec.subject
            cost_per_node[node] = cost_per_node.get(node, 0.0) + charge_of(fields)
            touched = set(split_list(fields.get("added", "")))
            touched.update(split_list(fields.get("resource", "")))
            resolved.update(touched & deadlocked)
        elif rec.kind == "collect":
            injections_by_cause["quiz_status"] += 1
            cost_by_cause["quiz_status"] += charge_of(fields)
            node = rec.subject
            cost_per_node[node] = cost_per_node.get(node, 0.0) + charge_of(fields)
        elif rec.kind == "rank":
            rank_rows.append((int(fields["rank"]), rec.subject))
    flush()

    rows: List[Tuple[str, str, str]] = []
    rows.extend(partition_rows)
    rows.extend(coverage_rows)
    for rid in sorted(released):
        rows.append(("latency", rid, str(latency.get(rid, -1))))
    rows.append(("backbone_cost", "total", repr(sum(cost_per_node.values()))))
    for node in sorted(cost_per_node):
        rows.append(("backbone_cost", node, repr(cost_per_node[node])))
    for cause in INJECTION_CAUSES:
        rows.append(("backbone_cost_cause", cause, repr(cost_by_cause[cause])))
    for cause in INJECTION_CAUSES:
        rows.append(("injections", cause, str(injections_by_cause[cause])))
    rows.append(("deadlocks", "detected", str(len(deadlocked))))
    rows.append(("deadlocks", "resolved", str(len(resolved))))
    rows.append(("evictions", "total", str(evictions)))
    for rank, node in sorted(rank_rows):
        rows.append(("quiz_rank", node, str(rank)))
    return MetricsReport(rows=tuple(rows))


def report_csv(report: MetricsReport) -> str:
    lines = ["metric,tick_or_scope,value"]
    lines.extend(f"{m},{s},{v}" for m, s, v in report.rows)
    return "\n".join(lines) + "\n"


def report_json(report: MetricsReport) -> str:
    import json

    return json.dumps(
        {"rows": [list(row) for row in report.rows]}, indent=2, sort_keys=True
    ) + "\n"


def ranking_csv(rank_records: Iterable[TraceRecord]) -> str:
    """Ranking table rebuilt from rank records, ordered by rank."""
    lines = ["rank,node,knowledge,cooperation,total"]
    entries = []
    for rec in rank_records:
        if rec.kind != "rank":
            continue
        fields = parse_payload(rec.payload)
        entries.append(
            (
                int(fields["rank"]),
                rec.subject,
                fields["knowledge"],
                fields["cooperation"],
                fields["total"],
            )
        )
    for rank, node, knowledge, coop, total in sorted(entries):
        lines.append(f"{rank},{node},{knowledge},{coop},{total}")
    return "\n".join(lines) + "\n"
