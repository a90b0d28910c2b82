import json
from pathlib import Path

import pytest

from statetrack import corpus as corpus_mod
from statetrack import parses as parses_mod
from statetrack.abstraction import default_role_synonyms

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def small_corpus():
    """The seeded-metrics fixture: procedures (coref attached) and gold grids."""
    pairs = corpus_mod.load_procedures(DATA / "corpus_small.json")
    procedures = corpus_mod.load_coref(DATA / "coref_small.json", [p for p, _ in pairs])
    gold = {g.procedure_id: g for _, g in pairs}
    return procedures, gold


@pytest.fixture(scope="session")
def predict_corpus():
    pairs = corpus_mod.load_procedures(DATA / "corpus_predict.json")
    procedures = [p for p, _ in pairs]
    gold = {g.procedure_id: g for _, g in pairs}
    return procedures, gold


@pytest.fixture(scope="session")
def configs():
    return (
        parses_mod.default_ontology(),
        parses_mod.default_class_map(),
        default_role_synonyms(),
    )


@pytest.fixture(scope="session")
def hand_sheet():
    return json.loads((DATA / "hand_sheet.json").read_text())


@pytest.fixture(scope="session")
def small_parses():
    return {
        pid: parses_mod.load_trips(DATA / "parses" / f"{pid}.trips.json")
        for pid in ("p1", "p2", "p3")
    }
