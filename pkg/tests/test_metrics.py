import copy

import pytest

from statetrack.corpus import StateGrid, grids_from_action_tsv
from statetrack.errors import SchemaError
from statetrack.metrics import (
    MetricReport,
    categorize_decisions,
    eval_decision_level,
    eval_document_level,
    eval_sentence_level,
)
from statetrack.parses import default_class_map, default_ontology


def _grids(spec):
    return {
        pid: StateGrid(pid, {ent: list(row) for ent, row in rows.items()})
        for pid, rows in spec.items()
    }


@pytest.fixture(scope="module")
def seeded_pred(data_dir):
    return grids_from_action_tsv(data_dir / "pred_seeded.tsv")


@pytest.fixture(scope="module")
def categories(small_corpus, small_parses):
    procedures, gold = small_corpus
    return categorize_decisions(
        gold, procedures, small_parses, default_ontology(), default_class_map()
    )


class TestSentenceLevel:
    def test_perfect_prediction_scores_100(self, small_corpus):
        _, gold = small_corpus
        scores = eval_sentence_level(copy.deepcopy(gold), gold)
        assert (scores.cat1, scores.cat2, scores.cat3) == (100.0, 100.0, 100.0)
        assert scores.macro_avg == 100.0
        assert scores.micro_avg == 100.0

    def test_right_event_wrong_step(self):
        gold = _grids({"p": {"e": ["-", "-", "x", "x"]}})  # created at 2
        pred = _grids({"p": {"e": ["-", "-", "-", "x"]}})  # created at 3
        scores = eval_sentence_level(pred, gold)
        assert scores.counts["cat1"] == (3, 3)  # created yes, others no
        assert scores.counts["cat2"] == (0, 1)

    def test_seeded_fixture_matches_hand_sheet(self, seeded_pred, small_corpus, hand_sheet):
        _, gold = small_corpus
        scores = eval_sentence_level(seeded_pred, gold)
        sheet = hand_sheet["sentence"]
        assert {k: list(v) for k, v in scores.counts.items()} == sheet["counts"]
        for key in ("cat1", "cat2", "cat3", "macro_avg", "micro_avg"):
            assert getattr(scores, key) == pytest.approx(sheet[key], abs=1e-9)

    def test_mismatched_entities_listed(self, small_corpus):
        _, gold = small_corpus
        pred = copy.deepcopy(gold)
        pred["p1"].rows["lost"] = pred["p1"].rows.pop("water")
        with pytest.raises(SchemaError, match="lost"):
            eval_sentence_level(pred, gold)


class TestDocumentLevel:
    def test_perfect_prediction(self, small_corpus):
        _, gold = small_corpus
        scores = eval_document_level(copy.deepcopy(gold), gold)
        assert scores.avg_f1 == 100.0
        assert all(c.f1 == 100.0 for c in scores.criteria.values())

    def test_missing_only_move_zeroes_moves_f1(self):
        gold = _grids({"p": {"e": ["a", "b"], "f": ["-", "f1"]}})
        pred = _grids({"p": {"e": ["a", "a"], "f": ["-", "f1"]}})
        scores = eval_document_level(pred, gold)
        assert scores.criteria["moves"].f1 == 0.0
        assert scores.criteria["outputs"].f1 == 100.0
        assert scores.criteria["inputs"].f1 == 100.0  # both sides empty

    def test_relabeling_procedures_is_score_neutral(self, seeded_pred, small_corpus):
        _, gold = small_corpus
        base = eval_document_level(seeded_pred, gold)
        renamed_pred = {f"x-{pid}": g for pid, g in seeded_pred.items()}
        renamed_gold = {f"x-{pid}": g for pid, g in gold.items()}
        renamed = eval_document_level(renamed_pred, renamed_gold)
        assert renamed.to_dict() == base.to_dict()

    def test_official_format_export(self, seeded_pred, small_corpus, tmp_path):
        from statetrack.corpus import grids_from_action_tsv
        from statetrack.metrics import export_official_format

        _, gold = small_corpus
        pred_path, gold_path = export_official_format(seeded_pred, gold, tmp_path)
        assert grids_from_action_tsv(pred_path)["p1"].rows == seeded_pred["p1"].rows
        assert grids_from_action_tsv(gold_path)["p2"].rows == gold["p2"].rows

    def test_seeded_fixture_matches_hand_sheet(self, seeded_pred, small_corpus, hand_sheet):
        _, gold = small_corpus
        scores = eval_document_level(seeded_pred, gold)
        sheet = hand_sheet["document"]
        for name, expected in sheet["criteria"].items():
            got = scores.criteria[name]
            assert got.predicted == expected["predicted"]
            assert got.gold == expected["gold"]
            assert got.matched == expected["matched"]
            assert got.precision == pytest.approx(expected["precision"], abs=1e-9)
            assert got.recall == pytest.approx(expected["recall"], abs=1e-9)
            assert got.f1 == pytest.approx(expected["f1"], abs=1e-9)
        assert scores.avg_precision == pytest.approx(sheet["avg_precision"], abs=1e-9)
        assert scores.avg_recall == pytest.approx(sheet["avg_recall"], abs=1e-9)
        assert scores.avg_f1 == pytest.approx(sheet["avg_f1"], abs=1e-9)


class TestCategorize:
    def test_every_gold_decision_categorized_once(self, categories, small_corpus):
        _, gold = small_corpus
        assert len(categories) == 8
        # spot checks from the hand sheet derivation
        assert categories[("p1", "water", 1)].name == "local"
        assert categories[("p1", "water", 3)].name == "global_ent"
        assert categories[("p2", "lava", 2)].name == "global_loc"
        assert categories[("p2", "magma", 2)].name == "uncategorized"
        assert categories[("p3", "rock", 2)].name == "global_loc_and_ent"

    def test_ambiguity_flags(self, categories):
        flagged = {key for key, cat in categories.items() if cat.ambiguous}
        assert flagged == {("p1", "vapor", 3), ("p2", "magma", 2), ("p2", "lava", 2)}

    def test_missing_parse_rejected(self, small_corpus, small_parses):
        procedures, gold = small_corpus
        parses = dict(small_parses)
        parses["p2"] = parses["p2"][:1]
        with pytest.raises(SchemaError, match="step 2"):
            categorize_decisions(
                gold, procedures, parses, default_ontology(), default_class_map()
            )


class TestDecisionLevel:
    def test_perfect_prediction(self, small_corpus, categories):
        _, gold = small_corpus
        scores = eval_decision_level(copy.deepcopy(gold), gold, categories)
        for cat in scores.categories.values():
            if cat.action_support:
                assert cat.action_acc == 100.0
            if cat.location_support:
                assert cat.location_acc == 100.0
                assert cat.both_acc == 100.0
        assert scores.ambiguous_action_acc == 100.0
        supports = {
            name: cat.action_support for name, cat in scores.categories.items()
        }
        from collections import Counter

        counted = Counter(c.name for c in categories.values())
        assert supports == {name: counted.get(name, 0) for name in supports}

    def test_right_action_wrong_location_split(self):
        gold = _grids({"p": {"e": ["-", "x", "y"]}})
        pred = _grids({"p": {"e": ["-", "x", "z"]}})
        from statetrack.metrics import DecisionCategory

        categories = {
            ("p", "e", 1): DecisionCategory("local", False),
            ("p", "e", 2): DecisionCategory("local", False),
        }
        scores = eval_decision_level(pred, gold, categories)
        local = scores.categories["local"]
        assert local.action_acc == 100.0
        assert local.location_acc == 50.0
        assert local.both_acc == 50.0

    def test_seeded_fixture_matches_hand_sheet(
        self, seeded_pred, small_corpus, categories, hand_sheet
    ):
        _, gold = small_corpus
        scores = eval_decision_level(seeded_pred, gold, categories)
        sheet = hand_sheet["decision"]
        for name, expected in sheet["categories"].items():
            got = scores.categories[name]
            assert got.action_support == expected["action_support"]
            assert got.location_support == expected["location_support"]
            for field in ("action_acc", "location_acc", "both_acc"):
                want = expected[field]
                if want is None:
                    assert getattr(got, field) is None
                else:
                    assert getattr(got, field) == pytest.approx(want, abs=1e-9)
        assert scores.ambiguous_support == sheet["ambiguous_support"]
        assert scores.ambiguous_action_acc == pytest.approx(
            sheet["ambiguous_action_acc"], abs=1e-9
        )


class TestReport:
    def test_table_rendering_covers_all_tiers(self, seeded_pred, small_corpus, categories):
        _, gold = small_corpus
        report = MetricReport(
            sentence=eval_sentence_level(seeded_pred, gold),
            document=eval_document_level(seeded_pred, gold),
            decision=eval_decision_level(seeded_pred, gold, categories),
        )
        table = report.render_table()
        assert "sentence-level" in table
        assert "document-level" in table
        assert "decision-level" in table
        assert "global_loc_and_ent" in table
        data = report.to_dict()
        assert data["decision"]["categories"]["global_ent"]["location_acc"] is None
