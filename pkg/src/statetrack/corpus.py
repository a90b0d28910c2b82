"""Procedural corpus model: procedures, entities, location grids, gold actions.

A procedure is an ordered list of steps; for every entity we track one
location value per step, plus a column 0 for the state before the process
starts.  Location values are plain strings with two reserved literals:
"-" (the entity does not exist) and "?" (it exists somewhere unknown).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import InputFileError, SchemaError

NONEXISTENT = "-"
UNKNOWN = "?"

_ARTICLES = ("the", "a", "an")
_TOKEN_RE = re.compile(r"[A-Za-z0-9_'-]+|[^\sA-Za-z0-9_]")


def normalize(text: str) -> str:
    """Normalize a location or phrase: lowercase, collapse whitespace, strip
    leading articles.  The reserved literals "-" and "?" pass through."""
    if text in (NONEXISTENT, UNKNOWN):
        return text
    out = " ".join(text.lower().split())
    parts = out.split(" ")
    while len(parts) > 1 and parts[0] in _ARTICLES:
        parts = parts[1:]
    return " ".join(parts)


def is_known(loc: str) -> bool:
    return loc not in (NONEXISTENT, UNKNOWN)


def exists(loc: str) -> bool:
    return loc != NONEXISTENT


def tokenize(text: str) -> list[str]:
    """Whitespace plus punctuation splitting, nothing smarter."""
    return _TOKEN_RE.findall(text)


class Action(str, Enum):
    NONE = "NONE"
    CREATE = "CREATE"
    DESTROY = "DESTROY"
    MOVE = "MOVE"


class CrfTag(str, Enum):
    """Per-step existence tags in the standard five-value scheme."""

    O_D = "O_D"  # does not exist, after destruction
    O_C = "O_C"  # does not exist, before creation
    E = "E"      # exists, unchanged
    C = "C"      # created at this step
    D = "D"      # destroyed at this step


@dataclass(frozen=True)
class StepAction:
    """One action applied to one entity at one step.

    CREATE and MOVE carry a target location (possibly "?"); DESTROY may
    carry the location it happened at; NONE carries neither.
    """

    action: Action
    from_loc: str | None = None
    to_loc: str | None = None

    def __post_init__(self):
        if self.action is Action.NONE and (self.from_loc or self.to_loc):
            raise ValueError("NONE carries no locations")


@dataclass(frozen=True)
class Step:
    index: int
    text: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class Entity:
    """A tracked entity.  The canonical name is the first alias; extra
    aliases come from ";"-separated annotation names.  Coreference mentions
    are annotation input, keyed (step_index, token_span)."""

    canonical_name: str
    aliases: tuple[str, ...]
    coref_mentions: tuple[tuple[int, tuple[int, int]], ...] = ()

    def coref_spans(self, step_index: int) -> list[tuple[int, int]]:
        return [span for idx, span in self.coref_mentions if idx == step_index]

    def with_coref(self, mentions) -> "Entity":
        return Entity(self.canonical_name, self.aliases, tuple(mentions))


@dataclass(frozen=True)
class Procedure:
    id: str
    steps: tuple[Step, ...]
    entities: tuple[Entity, ...]

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    def step(self, index: int) -> Step:
        return self.steps[index - 1]

    def entity(self, name: str) -> Entity:
        for ent in self.entities:
            if ent.canonical_name == name:
                return ent
        raise KeyError(name)


@dataclass
class StateGrid:
    """Locations per (entity, step).  Each row has num_steps + 1 cells;
    cell 0 is the pre-process state."""

    procedure_id: str
    rows: dict[str, list[str]]

    @property
    def num_steps(self) -> int:
        first = next(iter(self.rows.values()))
        return len(first) - 1

    def row(self, entity_name: str) -> list[str]:
        return self.rows[entity_name]


def make_entity(raw_name: str) -> Entity:
    """Split a ";"-separated annotation name into canonical name + aliases."""
    aliases = tuple(normalize(part) for part in raw_name.split(";") if part.strip())
    if not aliases or any(not a for a in aliases):
        raise SchemaError(f"entity name {raw_name!r} empty after normalization")
    return Entity(canonical_name=aliases[0], aliases=aliases)


# ---------------------------------------------------------------------------
# Gold action derivation and replay

def derive_actions(row: list[str]) -> list[StepAction]:
    """Infer the per-step actions implied by a location row.

    For each step t, comparing cell t-1 to cell t: appearing from "-" is a
    CREATE, vanishing to "-" is a DESTROY, any other change of value (including
    known <-> unknown) is a MOVE, and identical values mean no action.
    """
    if len(row) < 2:
        raise ValueError("row needs at least 2 cells")
    actions = []
    for t in range(1, len(row)):
        before, after = row[t - 1], row[t]
        if not exists(before) and exists(after):
            actions.append(StepAction(Action.CREATE, to_loc=after))
        elif exists(before) and not exists(after):
            actions.append(StepAction(Action.DESTROY, from_loc=before))
        elif exists(before) and exists(after) and before != after:
            actions.append(StepAction(Action.MOVE, from_loc=before, to_loc=after))
        else:
            actions.append(StepAction(Action.NONE))
    return actions


def replay_actions(initial: str, actions: list[StepAction]) -> list[str]:
    """Apply actions to an initial location, returning the full row."""
    row = [initial]
    for act in actions:
        if act.action is Action.CREATE:
            row.append(act.to_loc if act.to_loc is not None else UNKNOWN)
        elif act.action is Action.DESTROY:
            row.append(NONEXISTENT)
        elif act.action is Action.MOVE:
            row.append(act.to_loc if act.to_loc is not None else UNKNOWN)
        else:
            row.append(row[-1])
    return row


def derive_tags(row: list[str]) -> list[CrfTag]:
    """Per-step five-value existence tags for a location row."""
    tags = []
    for act, cell in zip(derive_actions(row), row[1:]):
        if act.action is Action.CREATE:
            tags.append(CrfTag.C)
        elif act.action is Action.DESTROY:
            tags.append(CrfTag.D)
        elif exists(cell):
            tags.append(CrfTag.E)
        else:
            tags.append(CrfTag.O_C if NONEXISTENT == cell and _before_creation(row, len(tags)) else CrfTag.O_D)
    return tags


def _before_creation(row: list[str], step_pos: int) -> bool:
    # Nonexistent cell: O_C if the entity appears later, O_D otherwise.
    return any(exists(c) for c in row[step_pos + 2 :])


# ---------------------------------------------------------------------------
# Mention detection

def find_mentions(entity: Entity, step: Step) -> list[tuple[int, int]]:
    """Token spans where the entity is mentioned in a step.

    Aliases match on token boundaries, case-insensitively, longest alias
    first; registered coreference mentions for the step are added.  The
    result is sorted and never contains overlapping spans.
    """
    tokens = [t.lower() for t in step.tokens]
    spans: list[tuple[int, int]] = []
    for alias in sorted(entity.aliases, key=len, reverse=True):
        alias_toks = alias.split(" ")
        n = len(alias_toks)
        for start in range(0, len(tokens) - n + 1):
            if tokens[start : start + n] == alias_toks:
                spans.append((start, start + n))
    spans.extend(entity.coref_spans(step.index))
    spans.sort(key=lambda s: (s[0], -(s[1] - s[0])))
    kept: list[tuple[int, int]] = []
    for span in spans:
        if all(span[1] <= k[0] or span[0] >= k[1] for k in kept):
            kept.append(span)
    return sorted(kept)


def location_candidates(procedure: Procedure, parses) -> list[str]:
    """Union of normalized noun-phrase texts across all step parses,
    deduplicated, in (step, token position) order.

    Accepts either logical-form graphs or role-labeled frame documents; both
    expose ``noun_phrases()`` yielding (token_span, text) pairs.
    """
    by_index = {p.sentence_index: p for p in parses}
    missing = [s.index for s in procedure.steps if s.index not in by_index]
    if missing:
        raise SchemaError(
            f"procedure {procedure.id}: no parse for step(s) {missing}"
        )
    seen: dict[str, None] = {}
    for step in procedure.steps:
        phrases = sorted(by_index[step.index].noun_phrases(), key=lambda p: p[0])
        for _span, text in phrases:
            norm = normalize(text)
            if norm and norm not in seen:
                seen[norm] = None
    return list(seen)


# ---------------------------------------------------------------------------
# Loading

def load_procedures(path, fmt: str = "json") -> list[tuple[Procedure, StateGrid]]:
    """Load procedures with their gold grids.

    ``fmt`` is "json" for the corpus JSON model or "propara-tsv" for a
    directory holding ``paragraphs.tsv`` (id, sentence index, sentence) and
    ``grids.tsv`` in the six-column action layout (id, step, entity, action,
    before location, after location).
    """
    path = Path(path)
    if not path.exists():
        raise InputFileError(f"corpus path not found: {path}")
    if fmt == "json":
        return _load_json_corpus(path)
    if fmt == "propara-tsv":
        return _load_propara_tsv(path)
    raise ValueError(f"unknown corpus format {fmt!r}")


def _load_json_corpus(path: Path) -> list[tuple[Procedure, StateGrid]]:
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if isinstance(data, dict):
        data = [data]
    out = []
    for obj in data:
        out.append(_parse_procedure_obj(obj, str(path)))
    return out


def _parse_procedure_obj(obj: dict, source: str) -> tuple[Procedure, StateGrid]:
    try:
        pid = str(obj["id"])
        raw_steps = obj["steps"]
        raw_entities = obj["entities"]
        raw_grid = obj["gold_grid"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{source}: procedure object missing key {exc}") from exc
    if not raw_steps:
        raise SchemaError(f"{source}: procedure {pid}: needs at least one step")
    steps = []
    for i, s in enumerate(raw_steps, start=1):
        idx = int(s["index"])
        if idx != i:
            raise SchemaError(
                f"{source}: procedure {pid}: step indices must be contiguous from 1,"
                f" got {idx} at position {i}"
            )
        tokens = tuple(s["tokens"]) if "tokens" in s else tuple(tokenize(s["text"]))
        steps.append(Step(index=idx, text=s["text"], tokens=tokens))
    m = len(steps)
    entities = []
    seen_names = set()
    for e in raw_entities:
        raw_name = e["name"] if isinstance(e, dict) else e
        ent = make_entity(raw_name)
        if isinstance(e, dict) and e.get("aliases"):
            extra = tuple(normalize(a) for a in e["aliases"])
            ent = Entity(ent.canonical_name, tuple(dict.fromkeys(ent.aliases + extra)))
        if ent.canonical_name in seen_names:
            raise SchemaError(f"{source}: procedure {pid}: duplicate entity {ent.canonical_name!r}")
        seen_names.add(ent.canonical_name)
        entities.append(ent)
    rows: dict[str, list[str]] = {}
    for raw_name, cells in raw_grid.items():
        key = make_entity(raw_name).canonical_name
        if key not in seen_names:
            raise SchemaError(f"{source}: procedure {pid}: grid row for unknown entity {raw_name!r}")
        if len(cells) != m + 1:
            raise SchemaError(
                f"{source}: procedure {pid}: entity {key!r}: expected {m + 1} cells, got {len(cells)}"
            )
        rows[key] = [normalize(c) for c in cells]
    for ent in entities:
        if ent.canonical_name not in rows:
            raise SchemaError(f"{source}: procedure {pid}: no grid row for entity {ent.canonical_name!r}")
    proc = Procedure(id=pid, steps=tuple(steps), entities=tuple(entities))
    grid = StateGrid(procedure_id=pid, rows={e.canonical_name: rows[e.canonical_name] for e in entities})
    return proc, grid


def _load_propara_tsv(path: Path) -> list[tuple[Procedure, StateGrid]]:
    if not path.is_dir():
        raise InputFileError(f"propara-tsv format expects a directory, got {path}")
    para_file = path / "paragraphs.tsv"
    grid_file = path / "grids.tsv"
    for f in (para_file, grid_file):
        if not f.exists():
            raise InputFileError(f"missing required file: {f}")

    sentences: dict[str, dict[int, str]] = {}
    for lineno, line in enumerate(para_file.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise SchemaError(f"{para_file}:{lineno}: expected 3 columns, got {len(parts)}")
        pid, idx, text = parts
        sentences.setdefault(pid, {})[int(idx)] = text

    raw = read_action_tsv(grid_file)
    out = []
    for pid in sentences:
        sent_map = sentences[pid]
        m = max(sent_map)
        if sorted(sent_map) != list(range(1, m + 1)):
            raise SchemaError(f"{para_file}: paragraph {pid}: sentence indices not contiguous")
        steps = tuple(
            Step(index=i, text=sent_map[i], tokens=tuple(tokenize(sent_map[i])))
            for i in range(1, m + 1)
        )
        if pid not in raw:
            raise SchemaError(f"{grid_file}: no grid rows for paragraph {pid}")
        entities = []
        rows = {}
        for raw_name, per_step in raw[pid].items():
            ent = make_entity(raw_name)
            entities.append(ent)
            row = _assemble_row(per_step, m, f"{grid_file}: paragraph {pid}, entity {raw_name!r}")
            rows[ent.canonical_name] = [normalize(c) for c in row]
        proc = Procedure(id=pid, steps=steps, entities=tuple(entities))
        out.append((proc, StateGrid(procedure_id=pid, rows=rows)))
    extra = set(raw) - set(sentences)
    if extra:
        raise SchemaError(f"{grid_file}: grid rows for unknown paragraph(s) {sorted(extra)}")
    return out


def _assemble_row(per_step: dict[int, tuple[str, str]], m: int, where: str) -> list[str]:
    if sorted(per_step) != list(range(1, m + 1)):
        raise SchemaError(f"{where}: expected {m + 1} cells, steps 1..{m} present, got {sorted(per_step)}")
    row = [per_step[1][0]]
    for t in range(1, m + 1):
        before, after = per_step[t]
        if t > 1 and before != row[-1]:
            raise SchemaError(f"{where}: step {t} before-location {before!r} != prior after-location {row[-1]!r}")
        row.append(after)
    return row


def load_coref(path, procedures: list[Procedure]) -> list[Procedure]:
    """Attach sidecar coreference mentions to the matching procedures."""
    path = Path(path)
    if not path.exists():
        raise InputFileError(f"coref sidecar not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if isinstance(data, dict):
        data = [data]
    by_id = {p.id: p for p in procedures}
    mentions: dict[str, dict[str, list]] = {}
    for obj in data:
        pid = str(obj["procedure_id"])
        if pid not in by_id:
            raise SchemaError(f"{path}: coref for unknown procedure {pid!r}")
        for men in obj.get("mentions", []):
            ent_name = normalize(men["entity"])
            step = int(men["step"])
            span = tuple(men["span"])
            if len(span) != 2 or span[0] >= span[1]:
                raise SchemaError(f"{path}: bad span {span} for {ent_name!r}")
            mentions.setdefault(pid, {}).setdefault(ent_name, []).append((step, span))
    out = []
    for proc in procedures:
        per_entity = mentions.get(proc.id, {})
        if not per_entity:
            out.append(proc)
            continue
        new_entities = []
        for ent in proc.entities:
            extra = [m for alias in ent.aliases for m in per_entity.get(alias, [])]
            for step, span in extra:
                if not 1 <= step <= proc.num_steps:
                    raise SchemaError(f"{path}: coref step {step} out of range for {proc.id}")
                if span[1] > len(proc.step(step).tokens):
                    raise SchemaError(f"{path}: coref span {span} exceeds step {step} tokens")
            new_entities.append(ent.with_coref(sorted(set(list(ent.coref_mentions) + extra))))
        out.append(Procedure(proc.id, proc.steps, tuple(new_entities)))
    return out


# ---------------------------------------------------------------------------
# Action-file interchange (the six-column TSV shared by prediction and
# evaluation: id, step, entity, action, before location, after location)

def read_action_tsv(path) -> dict[str, dict[str, dict[int, tuple[str, str]]]]:
    """Parse an action TSV into {procedure: {entity: {step: (before, after)}}}."""
    path = Path(path)
    if not path.exists():
        raise InputFileError(f"action file not found: {path}")
    out: dict[str, dict[str, dict[int, tuple[str, str]]]] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise SchemaError(f"{path}:{lineno}: expected 6 columns, got {len(parts)}")
        pid, step, entity, action, before, after = parts
        if action not in Action.__members__:
            raise SchemaError(f"{path}:{lineno}: unknown action {action!r}")
        per_step = out.setdefault(pid, {}).setdefault(entity, {})
        t = int(step)
        if t in per_step:
            raise SchemaError(f"{path}:{lineno}: duplicate row for ({pid}, {entity}, step {t})")
        per_step[t] = (normalize(before), normalize(after))
    return out


def grids_from_action_tsv(path) -> dict[str, StateGrid]:
    """Read an action TSV and assemble one StateGrid per procedure."""
    raw = read_action_tsv(path)
    grids = {}
    for pid, per_entity in raw.items():
        rows = {}
        for name, per_step in per_entity.items():
            m = max(per_step)
            rows[name] = _assemble_row(per_step, m, f"{path}: {pid}/{name}")
        grids[pid] = StateGrid(procedure_id=pid, rows=rows)
    return grids


def write_action_tsv(path, rows: list[tuple[str, int, str, str, str, str]]) -> None:
    lines = ["\t".join([r[0], str(r[1]), r[2], r[3], r[4], r[5]]) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")
