"""Build exportable semantic graphs over a procedure's parses.

Nodes are predicates, entity mentions, and noun phrases, one graph per
procedure.  Frame-based parses contribute untyped predicate-argument and
argument-argument edges; logical-form parses contribute role-typed edges,
with a single synthesized edge (labels of the shortest connecting path,
joined by "|") standing in for pairs only connected through nodes that
did not survive the simplification.  Mentions of the same phrase or the
same entity are linked across sentences ("SAME" / "COREF").

A question-answering extension adds one question node tied to the queried
entity's nodes and one node per step tied to that step's nodes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .corpus import Entity, Procedure, Step, find_mentions, normalize
from .errors import SchemaError
from .parses import LogicalFormGraph, SrlDoc

logger = logging.getLogger(__name__)

SAME = "SAME"
COREF = "COREF"
QUESTION_EDGE = "QUESTION"
STEP_EDGE = "STEP"


@dataclass(frozen=True)
class GNode:
    id: str
    kind: str  # predicate | entity_mention | noun_phrase | question | step
    step_index: int | None
    span: tuple[int, int] | None
    text: str


@dataclass(frozen=True)
class GEdge:
    src: str
    dst: str
    type_label: str


@dataclass
class SemanticGraph:
    nodes: list[GNode] = field(default_factory=list)
    edges: list[GEdge] = field(default_factory=list)

    def add_node(self, node: GNode) -> None:
        if any(n.id == node.id for n in self.nodes):
            raise ValueError(f"duplicate node id {node.id!r}")
        self.nodes.append(node)

    def add_edge(self, src: str, dst: str, type_label: str) -> None:
        if src == dst:
            return
        edge = GEdge(src, dst, type_label)
        if edge not in self.edges:
            self.edges.append(edge)

    def node(self, node_id: str) -> GNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind,
                    "step": n.step_index,
                    "span": list(n.span) if n.span is not None else None,
                    "text": n.text,
                }
                for n in self.nodes
            ],
            "edges": [{"src": e.src, "dst": e.dst, "type": e.type_label} for e in self.edges],
        }


def _mention_spans(procedure: Procedure, step: Step) -> dict[tuple[int, int], str]:
    """Spans in a step that mention a tracked entity, span -> entity name."""
    out: dict[tuple[int, int], str] = {}
    for entity in procedure.entities:
        for span in find_mentions(entity, step):
            out.setdefault(span, entity.canonical_name)
    return out


def _check_span(span: tuple[int, int], step: Step, what: str) -> None:
    if span[0] < 0 or span[1] > len(step.tokens) or span[0] >= span[1]:
        raise SchemaError(
            f"step {step.index}: {what} span {span} outside sentence of {len(step.tokens)} tokens"
        )


def _overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def build_srl_graph(
    procedure: Procedure,
    srl_docs: list[SrlDoc],
    include_adjunct_pairs: bool = True,
) -> SemanticGraph:
    """Graph over frame parses: untyped edges inside each verb frame, plus
    cross-sentence mention links."""
    by_index = {d.sentence_index: d for d in srl_docs}
    _require_all_steps(procedure, by_index)
    graph = SemanticGraph()
    for step in procedure.steps:
        doc = by_index[step.index]
        mentions = _mention_spans(procedure, step)
        span_to_id: dict[tuple[int, int], str] = {}

        def ensure(span: tuple[int, int], text: str, kind: str) -> str:
            _check_span(span, step, kind)
            if span in span_to_id:
                return span_to_id[span]
            node_id = f"s{step.index}.{span[0]}.{span[1]}"
            resolved = kind
            if kind != "predicate" and any(_overlaps(span, m) for m in mentions):
                resolved = "entity_mention"
            graph.add_node(GNode(node_id, resolved, step.index, span, text))
            span_to_id[span] = node_id
            return node_id

        for frame in doc.frames:
            pred_id = ensure(frame.predicate_span, frame.predicate_text, "predicate")
            arg_ids = []
            for arg in frame.args:
                arg_ids.append((ensure(arg.span, arg.text, "noun_phrase"), arg.role))
            for arg_id, _role in arg_ids:
                graph.add_edge(pred_id, arg_id, "")
            for i in range(len(arg_ids)):
                for j in range(i + 1, len(arg_ids)):
                    if not include_adjunct_pairs and (
                        arg_ids[i][1].startswith("ARGM") or arg_ids[j][1].startswith("ARGM")
                    ):
                        continue
                    graph.add_edge(arg_ids[i][0], arg_ids[j][0], "")
        for span in sorted(mentions):
            if span not in span_to_id and not any(_overlaps(span, s) for s in span_to_id):
                text = " ".join(step.tokens[span[0] : span[1]])
                ensure(span, text, "entity_mention")
    _link_across_sentences(graph, procedure)
    return graph


def build_trips_graph(procedure: Procedure, lf_graphs: list[LogicalFormGraph]) -> SemanticGraph:
    """Graph over logical-form parses, keeping role labels on the edges."""
    by_index = {g.sentence_index: g for g in lf_graphs}
    _require_all_steps(procedure, by_index)
    graph = SemanticGraph()
    for step in procedure.steps:
        lf = by_index[step.index]
        mentions = _mention_spans(procedure, step)
        included: dict[str, str] = {}  # lf node id -> graph node id
        for node in lf.nodes:
            if not node.word or node.span is None:
                continue
            _check_span(node.span, step, f"node {node.id}")
            if node.is_predicate:
                kind = "predicate"
            elif any(_overlaps(node.span, m) for m in mentions):
                kind = "entity_mention"
            else:
                kind = "noun_phrase"
            gid = f"s{step.index}.{node.id}"
            graph.add_node(GNode(gid, kind, step.index, node.span, node.word))
            included[node.id] = gid

        adjacency: dict[str, list[tuple[str, str]]] = {n.id: [] for n in lf.nodes}
        direct: set[frozenset] = set()
        for edge in lf.edges:
            adjacency[edge.src].append((edge.dst, edge.label))
            adjacency[edge.dst].append((edge.src, edge.label))
            if edge.src in included and edge.dst in included:
                graph.add_edge(included[edge.src], included[edge.dst], edge.label)
                direct.add(frozenset((edge.src, edge.dst)))

        order = [n.id for n in lf.nodes if n.id in included]
        for i in range(len(order)):
            for j in range(i + 1, len(order)):
                a, b = order[i], order[j]
                if frozenset((a, b)) in direct:
                    continue
                labels = _shortest_labels(adjacency, a, b)
                if labels is not None:
                    graph.add_edge(included[a], included[b], "|".join(labels))
    _link_across_sentences(graph, procedure)
    return graph


def _shortest_labels(adjacency, start: str, goal: str) -> list[str] | None:
    """Labels along the shortest undirected path, smallest label sequence
    among equally short paths; None when disconnected."""
    if start == goal:
        return []
    assigned: dict[str, tuple[str, ...]] = {start: ()}
    layer = [start]
    while layer:
        candidates: dict[str, tuple[str, ...]] = {}
        for node in layer:
            for neighbor, label in adjacency.get(node, []):
                if neighbor in assigned:
                    continue
                cand = assigned[node] + (label,)
                if neighbor not in candidates or cand < candidates[neighbor]:
                    candidates[neighbor] = cand
        for node, seq in candidates.items():
            assigned[node] = seq
        if goal in assigned:
            return list(assigned[goal])
        layer = list(candidates)
    return None


def _link_across_sentences(graph: SemanticGraph, procedure: Procedure) -> None:
    """SAME edges for equal phrases, COREF edges for same-entity mentions."""
    phrase_nodes = [n for n in graph.nodes if n.kind in ("entity_mention", "noun_phrase")]
    entity_of: dict[str, set[str]] = {}
    for entity in procedure.entities:
        for step in procedure.steps:
            spans = find_mentions(entity, step)
            for node in phrase_nodes:
                if node.step_index == step.index and any(
                    _overlaps(node.span, s) for s in spans
                ):
                    entity_of.setdefault(node.id, set()).add(entity.canonical_name)
    for i in range(len(phrase_nodes)):
        for j in range(i + 1, len(phrase_nodes)):
            a, b = phrase_nodes[i], phrase_nodes[j]
            if a.step_index == b.step_index:
                continue
            if normalize(a.text) == normalize(b.text):
                graph.add_edge(a.id, b.id, SAME)
            elif entity_of.get(a.id, set()) & entity_of.get(b.id, set()):
                graph.add_edge(a.id, b.id, COREF)


def extend_qa_graph(graph: SemanticGraph, entity: Entity, procedure: Procedure) -> SemanticGraph:
    """Add a question node for the entity and one node per step.

    The question node connects to every node that mentions the entity; each
    step node connects to every node of its step.  Always adds exactly
    (number of steps + 1) nodes.
    """
    out = SemanticGraph(nodes=list(graph.nodes), edges=list(graph.edges))
    question_id = "question"
    out.add_node(
        GNode(question_id, "question", None, None, f"where is {entity.canonical_name}")
    )
    linked = 0
    for step in procedure.steps:
        spans = find_mentions(entity, step)
        for node in graph.nodes:
            if node.step_index != step.index or node.span is None:
                continue
            if node.kind == "predicate":
                continue
            if any(_overlaps(node.span, s) for s in spans) or normalize(node.text) in entity.aliases:
                out.add_edge(question_id, node.id, QUESTION_EDGE)
                linked += 1
    if linked == 0:
        logger.warning(
            "entity %r has no node in the graph; question node left unconnected",
            entity.canonical_name,
        )
    for step in procedure.steps:
        step_id = f"step.{step.index}"
        out.add_node(GNode(step_id, "step", step.index, None, step.text))
        for node in graph.nodes:
            if node.step_index == step.index:
                out.add_edge(step_id, node.id, STEP_EDGE)
    return out


def _require_all_steps(procedure: Procedure, by_index: dict) -> None:
    missing = [s.index for s in procedure.steps if s.index not in by_index]
    if missing:
        raise SchemaError(f"procedure {procedure.id}: no parse for step(s) {missing}")
