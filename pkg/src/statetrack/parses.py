"""Ingest semantic parses from files: logical-form graphs with typed nodes
and role-labeled edges, plus shallow predicate-argument frames.

The parsers themselves are external systems; this module only loads and
validates their output, and resolves ontology types to action classes by
walking the type hierarchy upward until a mapped ancestor is found.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import InputFileError, SchemaError

CONFIG_DIR_ENV = "STATETRACK_CONFIG_DIR"


class ActionClass(str, Enum):
    CREATE = "CREATE"
    MOVE = "MOVE"
    DESTROY = "DESTROY"
    CHANGE = "CHANGE"
    OTHER = "OTHER"


# ---------------------------------------------------------------------------
# Logical-form graphs

@dataclass(frozen=True)
class LfNode:
    id: str
    indicator: str       # term indicator; "F" marks predicate/function nodes
    onto_type: str
    word: str
    span: tuple[int, int] | None

    @property
    def is_predicate(self) -> bool:
        return self.indicator.upper() == "F"


@dataclass(frozen=True)
class LfEdge:
    src: str
    label: str
    dst: str


@dataclass(frozen=True)
class LogicalFormGraph:
    sentence_index: int
    nodes: tuple[LfNode, ...]
    edges: tuple[LfEdge, ...]
    root: str | None

    def node(self, node_id: str) -> LfNode:
        return self._by_id[node_id]

    @property
    def _by_id(self) -> dict[str, LfNode]:
        return {n.id: n for n in self.nodes}

    def out_edges(self, node_id: str) -> list[LfEdge]:
        return [e for e in self.edges if e.src == node_id]

    def noun_phrases(self) -> list[tuple[tuple[int, int], str]]:
        """(span, text) for every non-predicate node carrying surface text."""
        out = []
        for n in self.nodes:
            if not n.is_predicate and n.word and n.span is not None:
                out.append((n.span, n.word))
        return out

    def to_dict(self) -> dict:
        return {
            "sentence_index": self.sentence_index,
            "root": self.root,
            "nodes": [
                {
                    "id": n.id,
                    "indicator": n.indicator,
                    "type": n.onto_type,
                    "word": n.word,
                    "span": list(n.span) if n.span is not None else None,
                }
                for n in self.nodes
            ],
            "edges": [{"src": e.src, "label": e.label, "dst": e.dst} for e in self.edges],
        }


def load_trips(path) -> list[LogicalFormGraph]:
    """Load logical-form graphs, one per sentence, sorted by sentence index."""
    data = _read_json(path)
    if isinstance(data, dict):
        data = [data]
    graphs = []
    for obj in data:
        graphs.append(_parse_lf_obj(obj, str(path)))
    graphs.sort(key=lambda g: g.sentence_index)
    return graphs


def _parse_lf_obj(obj: dict, source: str) -> LogicalFormGraph:
    idx = int(obj["sentence_index"])
    nodes = []
    ids = set()
    for n in obj.get("nodes", []):
        nid = str(n["id"])
        if nid in ids:
            raise SchemaError(f"{source}: sentence {idx}: duplicate node id {nid!r}")
        ids.add(nid)
        span = tuple(n["span"]) if n.get("span") is not None else None
        nodes.append(
            LfNode(
                id=nid,
                indicator=str(n.get("indicator", "")),
                onto_type=str(n.get("type", "")).upper(),
                word=str(n.get("word", "")),
                span=span,
            )
        )
    edges = []
    for e in obj.get("edges", []):
        src, dst = str(e["src"]), str(e["dst"])
        for endpoint in (src, dst):
            if endpoint not in ids:
                raise SchemaError(
                    f"{source}: sentence {idx}: edge references unknown node {endpoint!r}"
                )
        edges.append(LfEdge(src=src, label=str(e["label"]).upper(), dst=dst))
    root = obj.get("root")
    if root is not None and str(root) not in ids:
        raise SchemaError(f"{source}: sentence {idx}: root {root!r} is not a node")
    return LogicalFormGraph(
        sentence_index=idx,
        nodes=tuple(nodes),
        edges=tuple(edges),
        root=str(root) if root is not None else None,
    )


# ---------------------------------------------------------------------------
# Role-labeled frames

@dataclass(frozen=True)
class SrlArg:
    role: str
    span: tuple[int, int]
    text: str


@dataclass(frozen=True)
class SrlFrame:
    predicate_span: tuple[int, int]
    predicate_text: str
    args: tuple[SrlArg, ...]


@dataclass(frozen=True)
class SrlDoc:
    sentence_index: int
    frames: tuple[SrlFrame, ...]

    def noun_phrases(self) -> list[tuple[tuple[int, int], str]]:
        out = []
        for f in self.frames:
            for a in f.args:
                out.append((a.span, a.text))
        return out

    def to_dict(self) -> dict:
        return {
            "sentence_index": self.sentence_index,
            "frames": [
                {
                    "predicate": {"span": list(f.predicate_span), "text": f.predicate_text},
                    "args": [
                        {"role": a.role, "span": list(a.span), "text": a.text} for a in f.args
                    ],
                }
                for f in self.frames
            ],
        }


def load_srl(path) -> list[SrlDoc]:
    """Load predicate-argument frame documents, sorted by sentence index."""
    data = _read_json(path)
    if isinstance(data, dict):
        data = [data]
    docs = []
    for obj in data:
        idx = int(obj["sentence_index"])
        frames = []
        for f in obj.get("frames", []):
            pred = f["predicate"]
            pspan = tuple(pred["span"])
            args = []
            for a in f.get("args", []):
                aspan = tuple(a["span"])
                if _overlaps(aspan, pspan):
                    raise SchemaError(
                        f"{path}: sentence {idx}: argument span {aspan} overlaps predicate {pspan}"
                    )
                args.append(SrlArg(role=str(a["role"]).upper(), span=aspan, text=str(a["text"])))
            frames.append(
                SrlFrame(predicate_span=pspan, predicate_text=str(pred["text"]), args=tuple(args))
            )
        docs.append(SrlDoc(sentence_index=idx, frames=tuple(frames)))
    docs.sort(key=lambda d: d.sentence_index)
    return docs


def _overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def _read_json(path):
    path = Path(path)
    if not path.exists():
        raise InputFileError(f"parse file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# Ontology and action-class resolution

class Ontology:
    """A forest of types, child -> single parent."""

    def __init__(self, parents: dict[str, str]):
        self.parents = {k.upper(): v.upper() for k, v in parents.items()}

    @classmethod
    def from_file(cls, path) -> "Ontology":
        parents = {}
        path = Path(path)
        if not path.exists():
            raise InputFileError(f"ontology file not found: {path}")
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise SchemaError(f"{path}:{lineno}: expected 'child<TAB>parent'")
            child, parent = (p.strip().upper() for p in parts)
            if child in parents:
                raise SchemaError(f"{path}:{lineno}: duplicate child {child!r}")
            parents[child] = parent
        return cls(parents)

    def ancestors(self, onto_type: str):
        """Yield the type, then each ancestor walking up; error on a cycle."""
        seen = set()
        current = onto_type.upper()
        while True:
            if current in seen:
                raise SchemaError(f"ontology cycle detected at {current!r}")
            seen.add(current)
            yield current
            if current not in self.parents:
                return
            current = self.parents[current]


class ActionClassMap:
    def __init__(self, entries: dict[str, ActionClass]):
        self.entries = {k.upper(): v for k, v in entries.items()}

    @classmethod
    def from_file(cls, path) -> "ActionClassMap":
        entries: dict[str, ActionClass] = {}
        path = Path(path)
        if not path.exists():
            raise InputFileError(f"action-class map not found: {path}")
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise SchemaError(f"{path}:{lineno}: expected 'type<TAB>class'")
            onto_type, cls_name = (p.strip().upper() for p in parts)
            if onto_type in entries:
                raise SchemaError(f"{path}:{lineno}: duplicate type {onto_type!r}")
            if cls_name not in ("CREATE", "MOVE", "DESTROY", "CHANGE"):
                raise SchemaError(f"{path}:{lineno}: unknown class {cls_name!r}")
            entries[onto_type] = ActionClass(cls_name)
        return cls(entries)


def ontology_class(onto_type: str, ontology: Ontology, class_map: ActionClassMap) -> ActionClass:
    """Resolve a type to its action class via the nearest mapped ancestor.

    A direct entry wins; otherwise the walk goes strictly upward through the
    parent chain; a type with no mapped ancestor is OTHER.
    """
    for ancestor in ontology.ancestors(onto_type):
        if ancestor in class_map.entries:
            return class_map.entries[ancestor]
    return ActionClass.OTHER


# ---------------------------------------------------------------------------
# Default configuration files (shipped as editable data, overridable via the
# STATETRACK_CONFIG_DIR environment variable)

def _config_path(name: str, override) -> Path:
    if override is not None:
        return Path(override)
    env_dir = os.environ.get(CONFIG_DIR_ENV)
    if env_dir:
        return Path(env_dir) / name
    with resources.as_file(resources.files("statetrack").joinpath("data", name)) as p:
        return Path(p)


def default_ontology(path=None) -> Ontology:
    return Ontology.from_file(_config_path("ontology.tsv", path))


def default_class_map(path=None) -> ActionClassMap:
    return ActionClassMap.from_file(_config_path("action_classes.tsv", path))
