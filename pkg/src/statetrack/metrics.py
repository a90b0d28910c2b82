"""The three evaluation tiers over location grids.

Sentence tier: per entity and event kind (created / destroyed / moved),
whether the event happens (cat1), at which steps (cat2, asked only where
the gold says it happens), and where (cat3, same scope).

Document tier: precision / recall / F1 on the sets of process inputs,
outputs, conversions, and moves, averaged into one F1.

Decision tier: every gold non-NONE decision is bucketed by whether the
entity and its location are mentioned in the step, then scored for action
and location correctness per bucket.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import (
    NONEXISTENT,
    UNKNOWN,
    Action,
    Procedure,
    StateGrid,
    derive_actions,
    exists,
    find_mentions,
    normalize,
)
from .errors import SchemaError
from .parses import ActionClass, ontology_class

EVENT_KINDS = ("created", "destroyed", "moved")

CATEGORY_NAMES = (
    "local",
    "global_loc",
    "global_ent",
    "global_loc_and_ent",
    "uncategorized",
)


def event_steps(row: list[str], kind: str) -> list[int]:
    """Steps at which the row shows the event happening."""
    steps = []
    for t in range(1, len(row)):
        before, after = row[t - 1], row[t]
        if kind == "created" and not exists(before) and exists(after):
            steps.append(t)
        elif kind == "destroyed" and exists(before) and not exists(after):
            steps.append(t)
        elif kind == "moved" and exists(before) and exists(after) and before != after:
            steps.append(t)
    return steps


def _validate_alignment(pred: dict[str, StateGrid], gold: dict[str, StateGrid]) -> None:
    if set(pred) != set(gold):
        only_pred = sorted(set(pred) - set(gold))
        only_gold = sorted(set(gold) - set(pred))
        raise SchemaError(
            f"procedure sets differ: only in predictions {only_pred}, only in gold {only_gold}"
        )
    for pid in sorted(gold):
        p_ents, g_ents = set(pred[pid].rows), set(gold[pid].rows)
        if p_ents != g_ents:
            raise SchemaError(
                f"procedure {pid}: entity sets differ: only in predictions "
                f"{sorted(p_ents - g_ents)}, only in gold {sorted(g_ents - p_ents)}"
            )
        for ent in sorted(g_ents):
            if len(pred[pid].rows[ent]) != len(gold[pid].rows[ent]):
                raise SchemaError(f"procedure {pid}: entity {ent!r}: row lengths differ")


# ---------------------------------------------------------------------------
# Sentence tier

@dataclass
class SentenceScores:
    cat1: float
    cat2: float
    cat3: float
    macro_avg: float
    micro_avg: float
    counts: dict[str, tuple[int, int]]  # category -> (credits, questions)

    def to_dict(self) -> dict:
        return {
            "cat1": self.cat1,
            "cat2": self.cat2,
            "cat3": self.cat3,
            "macro_avg": self.macro_avg,
            "micro_avg": self.micro_avg,
            "counts": {k: list(v) for k, v in self.counts.items()},
        }


def eval_sentence_level(pred: dict[str, StateGrid], gold: dict[str, StateGrid]) -> SentenceScores:
    _validate_alignment(pred, gold)
    credits = {"cat1": 0, "cat2": 0, "cat3": 0}
    totals = {"cat1": 0, "cat2": 0, "cat3": 0}
    for pid in sorted(gold):
        for ent in sorted(gold[pid].rows):
            gold_row = gold[pid].rows[ent]
            pred_row = pred[pid].rows[ent]
            for kind in EVENT_KINDS:
                gold_steps = event_steps(gold_row, kind)
                pred_steps = event_steps(pred_row, kind)
                totals["cat1"] += 1
                credits["cat1"] += int(bool(gold_steps) == bool(pred_steps))
                if not gold_steps:
                    continue
                totals["cat2"] += 1
                credits["cat2"] += int(pred_steps == gold_steps)
                totals["cat3"] += 1
                credits["cat3"] += int(
                    _event_locations(pred_row, gold_steps, kind)
                    == _event_locations(gold_row, gold_steps, kind)
                )
    scores = {
        cat: (100.0 * credits[cat] / totals[cat]) if totals[cat] else 100.0
        for cat in ("cat1", "cat2", "cat3")
    }
    all_credits = sum(credits.values())
    all_totals = sum(totals.values())
    return SentenceScores(
        cat1=scores["cat1"],
        cat2=scores["cat2"],
        cat3=scores["cat3"],
        macro_avg=(scores["cat1"] + scores["cat2"] + scores["cat3"]) / 3,
        micro_avg=(100.0 * all_credits / all_totals) if all_totals else 100.0,
        counts={cat: (credits[cat], totals[cat]) for cat in ("cat1", "cat2", "cat3")},
    )


def _event_locations(row: list[str], steps: list[int], kind: str):
    # Where the event happened: the new cell for creations and moves (plus
    # the old cell for moves), the last cell the entity held for destructions.
    if kind == "created":
        return [row[t] for t in steps]
    if kind == "destroyed":
        return [row[t - 1] for t in steps]
    return [(row[t - 1], row[t]) for t in steps]


# ---------------------------------------------------------------------------
# Document tier

@dataclass
class CriterionScore:
    precision: float
    recall: float
    f1: float
    predicted: int
    gold: int
    matched: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "predicted": self.predicted,
            "gold": self.gold,
            "matched": self.matched,
        }


@dataclass
class DocumentScores:
    criteria: dict[str, CriterionScore]
    avg_precision: float
    avg_recall: float
    avg_f1: float

    def to_dict(self) -> dict:
        return {
            "criteria": {k: v.to_dict() for k, v in self.criteria.items()},
            "avg_precision": self.avg_precision,
            "avg_recall": self.avg_recall,
            "avg_f1": self.avg_f1,
        }


def eval_document_level(pred: dict[str, StateGrid], gold: dict[str, StateGrid]) -> DocumentScores:
    _validate_alignment(pred, gold)
    criteria = {}
    for name, extract in (
        ("inputs", _input_set),
        ("outputs", _output_set),
        ("conversions", _conversion_set),
        ("moves", _move_set),
    ):
        criteria[name] = _prf(extract(pred), extract(gold))
    k = len(criteria)
    return DocumentScores(
        criteria=criteria,
        avg_precision=sum(c.precision for c in criteria.values()) / k,
        avg_recall=sum(c.recall for c in criteria.values()) / k,
        avg_f1=sum(c.f1 for c in criteria.values()) / k,
    )


def _prf(pred_set: set, gold_set: set) -> CriterionScore:
    matched = len(pred_set & gold_set)
    precision = (100.0 * matched / len(pred_set)) if pred_set else 100.0
    recall = (100.0 * matched / len(gold_set)) if gold_set else 100.0
    f1 = (2 * precision * recall / (precision + recall)) if precision + recall else 0.0
    return CriterionScore(precision, recall, f1, len(pred_set), len(gold_set), matched)


def _input_set(grids: dict[str, StateGrid]) -> set:
    # Existed before the process, destroyed during it, never (re)created.
    out = set()
    for pid, grid in grids.items():
        for ent, row in grid.rows.items():
            if exists(row[0]) and event_steps(row, "destroyed") and not event_steps(row, "created"):
                out.add((pid, ent))
    return out


def _output_set(grids: dict[str, StateGrid]) -> set:
    out = set()
    for pid, grid in grids.items():
        for ent, row in grid.rows.items():
            if event_steps(row, "created") and exists(row[-1]):
                out.add((pid, ent))
    return out


def _conversion_set(grids: dict[str, StateGrid]) -> set:
    # A destroy and a create at the same step whose location evidence
    # agrees (including both unknown) reads as one entity becoming another.
    out = set()
    for pid, grid in grids.items():
        for old_ent, old_row in grid.rows.items():
            for t in event_steps(old_row, "destroyed"):
                for new_ent, new_row in grid.rows.items():
                    if new_ent == old_ent:
                        continue
                    if t in event_steps(new_row, "created") and old_row[t - 1] == new_row[t]:
                        out.add((pid, t, old_ent, new_ent))
    return out


def _move_set(grids: dict[str, StateGrid]) -> set:
    out = set()
    for pid, grid in grids.items():
        for ent, row in grid.rows.items():
            for t in event_steps(row, "moved"):
                out.add((pid, ent, t, row[t - 1], row[t]))
    return out


# ---------------------------------------------------------------------------
# Decision tier

@dataclass(frozen=True)
class DecisionCategory:
    name: str
    ambiguous: bool


def categorize_decisions(
    gold: dict[str, StateGrid],
    procedures: list[Procedure],
    parses: dict[str, list],
    ontology,
    class_map,
) -> dict[tuple[str, str, int], DecisionCategory]:
    """Bucket every gold non-NONE decision.

    Moves and creations split on entity/location mention presence; a
    destruction counts as a global-entity decision when the entity is not
    mentioned and is otherwise left uncategorized.  The ambiguity flag
    marks mentioned entities in steps whose parse holds two or more
    action-class verbs.
    """
    by_id = {p.id: p for p in procedures}
    missing = sorted(set(gold) - set(by_id))
    if missing:
        raise SchemaError(f"no procedure loaded for gold grid(s) {missing}")
    out: dict[tuple[str, str, int], DecisionCategory] = {}
    for pid in sorted(gold):
        proc = by_id[pid]
        verbs_per_step = _action_verb_counts(proc, parses.get(pid), ontology, class_map)
        for ent_name in sorted(gold[pid].rows):
            row = gold[pid].rows[ent_name]
            entity = proc.entity(ent_name)
            actions = derive_actions(row)
            for t in range(1, len(row)):
                tag = actions[t - 1].action
                if tag is Action.NONE:
                    continue
                step = proc.step(t)
                entity_mentioned = bool(find_mentions(entity, step))
                location = NONEXISTENT if tag is Action.DESTROY else row[t]
                location_mentioned = _location_mentioned(location, step)
                if tag in (Action.MOVE, Action.CREATE):
                    if entity_mentioned and location_mentioned:
                        name = "local"
                    elif entity_mentioned:
                        name = "global_loc"
                    elif location_mentioned:
                        name = "global_ent"
                    else:
                        name = "global_loc_and_ent"
                else:
                    name = "global_ent" if not entity_mentioned else "uncategorized"
                ambiguous = entity_mentioned and verbs_per_step[t] >= 2
                out[(pid, ent_name, t)] = DecisionCategory(name=name, ambiguous=ambiguous)
    return out


def _location_mentioned(location: str, step) -> bool:
    if location in (NONEXISTENT, UNKNOWN):
        return False
    tokens = [normalize(t) for t in step.tokens]
    loc_tokens = location.split(" ")
    n = len(loc_tokens)
    return any(tokens[i : i + n] == loc_tokens for i in range(0, len(tokens) - n + 1))


def _action_verb_counts(proc: Procedure, lf_graphs, ontology, class_map) -> dict[int, int]:
    counts = {}
    by_index = {g.sentence_index: g for g in lf_graphs or []}
    for step in proc.steps:
        if step.index not in by_index:
            raise SchemaError(
                f"procedure {proc.id}: ambiguity check needs a parse for step {step.index}"
            )
        lf = by_index[step.index]
        counts[step.index] = sum(
            1
            for node in lf.nodes
            if node.is_predicate
            and ontology_class(node.onto_type, ontology, class_map) is not ActionClass.OTHER
        )
    return counts


@dataclass
class CategoryScore:
    action_acc: float | None
    location_acc: float | None
    both_acc: float | None
    action_support: int
    location_support: int

    def to_dict(self) -> dict:
        return {
            "action_acc": self.action_acc,
            "location_acc": self.location_acc,
            "both_acc": self.both_acc,
            "action_support": self.action_support,
            "location_support": self.location_support,
        }


@dataclass
class DecisionScores:
    categories: dict[str, CategoryScore]
    ambiguous_action_acc: float | None
    ambiguous_support: int

    def to_dict(self) -> dict:
        return {
            "categories": {k: v.to_dict() for k, v in self.categories.items()},
            "ambiguous_action_acc": self.ambiguous_action_acc,
            "ambiguous_support": self.ambiguous_support,
        }


def eval_decision_level(
    pred: dict[str, StateGrid],
    gold: dict[str, StateGrid],
    categories: dict[tuple[str, str, int], DecisionCategory],
) -> DecisionScores:
    """Per-category accuracy of the predicted actions and after-locations.

    Destructions carry no location, so they are excluded from location and
    both denominators; the ambiguous overlay reports action accuracy only.
    """
    _validate_alignment(pred, gold)
    tally = {
        name: {"a": 0, "a_ok": 0, "l": 0, "l_ok": 0, "b_ok": 0} for name in CATEGORY_NAMES
    }
    amb_total = amb_ok = 0
    for (pid, ent, t), category in sorted(categories.items()):
        gold_row = gold[pid].rows[ent]
        pred_row = pred[pid].rows[ent]
        gold_action = derive_actions(gold_row)[t - 1].action
        pred_action = derive_actions(pred_row)[t - 1].action
        action_ok = pred_action is gold_action
        bucket = tally[category.name]
        bucket["a"] += 1
        bucket["a_ok"] += int(action_ok)
        if gold_action is not Action.DESTROY:
            location_ok = pred_row[t] == gold_row[t]
            bucket["l"] += 1
            bucket["l_ok"] += int(location_ok)
            bucket["b_ok"] += int(action_ok and location_ok)
        if category.ambiguous:
            amb_total += 1
            amb_ok += int(action_ok)
    scores = {}
    for name in CATEGORY_NAMES:
        bucket = tally[name]
        scores[name] = CategoryScore(
            action_acc=(100.0 * bucket["a_ok"] / bucket["a"]) if bucket["a"] else None,
            location_acc=(100.0 * bucket["l_ok"] / bucket["l"]) if bucket["l"] else None,
            both_acc=(100.0 * bucket["b_ok"] / bucket["l"]) if bucket["l"] else None,
            action_support=bucket["a"],
            location_support=bucket["l"],
        )
    return DecisionScores(
        categories=scores,
        ambiguous_action_acc=(100.0 * amb_ok / amb_total) if amb_total else None,
        ambiguous_support=amb_total,
    )


# ---------------------------------------------------------------------------
# Report assembly

@dataclass
class MetricReport:
    sentence: SentenceScores | None = None
    document: DocumentScores | None = None
    decision: DecisionScores | None = None

    def to_dict(self) -> dict:
        return {
            "sentence": self.sentence.to_dict() if self.sentence else None,
            "document": self.document.to_dict() if self.document else None,
            "decision": self.decision.to_dict() if self.decision else None,
        }

    def render_table(self) -> str:
        lines = []
        if self.sentence:
            s = self.sentence
            lines.append("sentence-level")
            header = f"{'cat1':>8} {'cat2':>8} {'cat3':>8} {'macro':>8} {'micro':>8}"
            values = (
                f"{s.cat1:8.2f} {s.cat2:8.2f} {s.cat3:8.2f} "
                f"{s.macro_avg:8.2f} {s.micro_avg:8.2f}"
            )
            lines.extend([header, values, ""])
        if self.document:
            lines.append("document-level")
            lines.append(f"{'criterion':<14} {'P':>8} {'R':>8} {'F1':>8}")
            for name, c in self.document.criteria.items():
                lines.append(f"{name:<14} {c.precision:8.2f} {c.recall:8.2f} {c.f1:8.2f}")
            d = self.document
            lines.append(
                f"{'average':<14} {d.avg_precision:8.2f} {d.avg_recall:8.2f} {d.avg_f1:8.2f}"
            )
            lines.append("")
        if self.decision:
            lines.append("decision-level")
            lines.append(f"{'category':<20} {'A':>8} {'L':>8} {'Both':>8} {'nA':>5} {'nL':>5}")
            for name in CATEGORY_NAMES:
                c = self.decision.categories[name]
                lines.append(
                    f"{name:<20} {_fmt(c.action_acc)} {_fmt(c.location_acc)} "
                    f"{_fmt(c.both_acc)} {c.action_support:5d} {c.location_support:5d}"
                )
            lines.append(
                f"{'ambiguous':<20} {_fmt(self.decision.ambiguous_action_acc)} "
                f"{'':>8} {'':>8} {self.decision.ambiguous_support:5d}"
            )
            lines.append("")
        return "\n".join(lines)


def _fmt(value: float | None) -> str:
    return f"{value:8.2f}" if value is not None else f"{'-':>8}"


def export_official_format(
    pred: dict[str, StateGrid], gold: dict[str, StateGrid], out_dir
) -> tuple[str, str]:
    """Write both grid sets as six-column action TSVs for differential
    checking against external evaluators that read this layout."""
    from pathlib import Path

    from .reasoning import grid_to_action_rows
    from .corpus import write_action_tsv

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, grids in (("predictions.tsv", pred), ("answers.tsv", gold)):
        rows = []
        for pid in sorted(grids):
            rows.extend(grid_to_action_rows(grids[pid], sorted(grids[pid].rows)))
        path = out_dir / name
        write_action_tsv(path, rows)
        paths.append(str(path))
    return paths[0], paths[1]
