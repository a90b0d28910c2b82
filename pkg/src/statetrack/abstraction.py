"""Reduce a logical-form graph to the event frames that matter for entity
tracking: which predicate happened, in which action class, with which role
fillers and locations.

Noun-attached locative modifiers ("the book on the shelf") do not describe
an event; they come out separately as passive location facts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import normalize
from .errors import InputFileError, SchemaError
from .parses import (
    CONFIG_DIR_ENV,
    ActionClass,
    ActionClassMap,
    LogicalFormGraph,
    Ontology,
    ontology_class,
)

TO_LOC = "TO_LOC"
FROM_LOC = "FROM_LOC"
LOCATION = "LOCATION"

_LOCATION_CATEGORIES = (TO_LOC, FROM_LOC, LOCATION)


@dataclass(frozen=True)
class ArgRef:
    """A role filler: its surface text, token span, and source node."""

    text: str
    span: tuple[int, int] | None
    node_id: str

    @property
    def norm(self) -> str:
        return normalize(self.text)


@dataclass
class EventFrame:
    step_index: int
    predicate_word: str
    onto_type: str
    action_class: ActionClass
    roles: dict[str, ArgRef] = field(default_factory=dict)
    to_loc: ArgRef | None = None
    from_loc: ArgRef | None = None
    node_id: str = ""

    def to_dict(self) -> dict:
        return {
            "step": self.step_index,
            "predicate": self.predicate_word,
            "type": self.onto_type,
            "class": self.action_class.value,
            "roles": {k: v.text for k, v in sorted(self.roles.items())},
            "to_loc": self.to_loc.text if self.to_loc else None,
            "from_loc": self.from_loc.text if self.from_loc else None,
        }


@dataclass(frozen=True)
class PassiveLocationFact:
    """An entity sitting somewhere, stated without an action."""

    step_index: int
    holder: ArgRef
    location: ArgRef

    def to_dict(self) -> dict:
        return {"step": self.step_index, "holder": self.holder.text, "location": self.location.text}


class RoleSynonyms:
    """Maps raw edge labels to canonical roles or location categories."""

    def __init__(self, entries: dict[str, str]):
        self.entries = {k.upper(): v.upper() for k, v in entries.items()}

    @classmethod
    def from_file(cls, path) -> "RoleSynonyms":
        path = Path(path)
        if not path.exists():
            raise InputFileError(f"role-synonym file not found: {path}")
        entries = {}
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise SchemaError(f"{path}:{lineno}: expected 'raw_label<TAB>target'")
            entries[parts[0].strip().upper()] = parts[1].strip().upper()
        return cls(entries)

    def canonical(self, raw_label: str) -> str:
        label = raw_label.upper()
        return self.entries.get(label, label)


def default_role_synonyms(path=None) -> RoleSynonyms:
    if path is not None:
        return RoleSynonyms.from_file(path)
    env_dir = os.environ.get(CONFIG_DIR_ENV)
    if env_dir:
        return RoleSynonyms.from_file(Path(env_dir) / "role_synonyms.tsv")
    with resources.as_file(
        resources.files("statetrack").joinpath("data", "role_synonyms.tsv")
    ) as p:
        return RoleSynonyms.from_file(p)


def abstract_events(
    graph: LogicalFormGraph,
    ontology: Ontology,
    class_map: ActionClassMap,
    synonyms: RoleSynonyms,
) -> tuple[list[EventFrame], list[PassiveLocationFact]]:
    """Extract event frames and passive location facts from one parse.

    One frame is produced per predicate node whose type resolves to a
    tracked action class; predicate nodes resolving to OTHER are skipped.
    Location-category edges on a frame go to to_loc/from_loc (on destroy
    frames every attached location counts as the from side); all other
    edges land in the role map under their canonical label.  Locative
    edges hanging off non-predicate nodes become passive facts.
    """
    frames: list[EventFrame] = []
    facts: list[PassiveLocationFact] = []
    for node in graph.nodes:
        if node.is_predicate:
            cls = ontology_class(node.onto_type, ontology, class_map)
            if cls is ActionClass.OTHER:
                continue
            frame = EventFrame(
                step_index=graph.sentence_index,
                predicate_word=node.word,
                onto_type=node.onto_type,
                action_class=cls,
                node_id=node.id,
            )
            for edge in graph.out_edges(node.id):
                target = graph.node(edge.dst)
                arg = ArgRef(text=target.word, span=target.span, node_id=target.id)
                category = synonyms.canonical(edge.label)
                if cls is ActionClass.DESTROY and category in _LOCATION_CATEGORIES:
                    if frame.from_loc is None:
                        frame.from_loc = arg
                elif category == TO_LOC:
                    if frame.to_loc is None:
                        frame.to_loc = arg
                elif category == FROM_LOC:
                    if frame.from_loc is None:
                        frame.from_loc = arg
                else:
                    frame.roles.setdefault(category, arg)
            frames.append(frame)
        else:
            for edge in graph.out_edges(node.id):
                if synonyms.canonical(edge.label) != LOCATION:
                    continue
                target = graph.node(edge.dst)
                if target.is_predicate or not target.word:
                    continue
                holder = ArgRef(text=node.word, span=node.span, node_id=node.id)
                location = ArgRef(text=target.word, span=target.span, node_id=target.id)
                if holder.norm == location.norm:
                    continue
                facts.append(
                    PassiveLocationFact(
                        step_index=graph.sentence_index, holder=holder, location=location
                    )
                )
    return frames, facts
