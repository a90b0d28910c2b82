"""Batch command-line entry points.

Subcommands: predict (write the action TSV for a corpus), abstract (dump
event frames), build-graph (export semantic graphs, optionally extended
with question nodes), evaluate (run the scoring tiers), and gat-check
(run the attention-layer invariant suite).

Exit codes: 0 success, 2 usage or configuration error, 3 missing input
file, 4 schema or validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import corpus as corpus_mod
from . import gat, metrics, reasoning, semgraph
from .abstraction import abstract_events, default_role_synonyms
from .errors import ConfigError, InputFileError, SchemaError
from .parses import default_class_map, default_ontology, load_srl, load_trips

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_SCHEMA = 4


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputFileError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statetrack",
        description="Track entity locations through procedural text from semantic parses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    predict = sub.add_parser("predict", help="run the pipeline and write an action TSV")
    _add_corpus_args(predict)
    _add_parse_args(predict)
    predict.add_argument("--output", required=True)
    predict.add_argument("--format", choices=["tsv", "json"], default="tsv")
    predict.add_argument("--strict-destroy", action="store_true",
                         help="drop (instead of rewriting to MOVE) a repeated destroy at a new location")
    predict.add_argument("--rules-off", default=None,
                         help="file listing local rule names to disable, one per line")
    predict.add_argument("--jobs", type=int, default=1)
    predict.set_defaults(func=cmd_predict)

    abstract = sub.add_parser("abstract", help="dump abstracted event frames as JSON")
    _add_corpus_args(abstract)
    _add_parse_args(abstract)
    abstract.add_argument("--output", required=True)
    abstract.add_argument("--format", choices=["json"], default="json")
    abstract.set_defaults(func=cmd_abstract)

    graph = sub.add_parser("build-graph", help="export semantic graphs as JSON")
    _add_corpus_args(graph)
    graph.add_argument("--parses", required=True, help="directory of per-procedure parse files")
    graph.add_argument("--parser", choices=["trips", "srl"], default="trips")
    graph.add_argument("--output", required=True)
    graph.add_argument("--format", choices=["json"], default="json")
    graph.add_argument("--qa-entity", action="append", default=[],
                       help="extend with a question node for this entity (repeatable)")
    graph.set_defaults(func=cmd_build_graph)

    ev = sub.add_parser("evaluate", help="score a prediction TSV against gold grids")
    ev.add_argument("--pred", required=True, help="prediction action TSV")
    _add_corpus_args(ev)
    ev.add_argument("--tier", choices=["sentence", "document", "decision", "all"], default="all")
    ev.add_argument("--parses", default=None, help="parse dir (needed for the decision tier)")
    ev.add_argument("--ontology", default=None)
    ev.add_argument("--classes", default=None)
    ev.add_argument("--roles", default=None)
    ev.add_argument("--output", default=None, help="write the report here instead of stdout")
    ev.add_argument("--format", choices=["json", "table"], default="json")
    ev.set_defaults(func=cmd_evaluate)

    check = sub.add_parser("gat-check", help="run the attention-layer invariant suite")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--rounds", type=int, default=100)
    check.add_argument("--format", choices=["text", "json"], default="text")
    check.set_defaults(func=cmd_gat_check)
    return parser


def _add_corpus_args(cmd) -> None:
    cmd.add_argument("--corpus", required=True)
    cmd.add_argument("--corpus-format", choices=["json", "propara-tsv"], default="json")
    cmd.add_argument("--coref", default=None, help="coreference sidecar JSON")


def _add_parse_args(cmd) -> None:
    cmd.add_argument("--parses", required=True, help="directory of per-procedure parse files")
    cmd.add_argument("--parser", choices=["trips", "srl"], default="trips")
    cmd.add_argument("--ontology", default=None)
    cmd.add_argument("--classes", default=None)
    cmd.add_argument("--roles", default=None)


def _load_corpus(args):
    pairs = corpus_mod.load_procedures(args.corpus, args.corpus_format)
    procedures = [p for p, _ in pairs]
    if args.coref:
        procedures = corpus_mod.load_coref(args.coref, procedures)
    grids = {g.procedure_id: g for _, g in pairs}
    return procedures, grids


def _parse_file(parse_dir: str, procedure_id: str, kind: str) -> Path:
    path = Path(parse_dir) / f"{procedure_id}.{kind}.json"
    if not path.exists():
        raise InputFileError(f"parse file not found: {path}")
    return path


def _load_configs(args):
    ontology = default_ontology(args.ontology)
    class_map = default_class_map(args.classes)
    synonyms = default_role_synonyms(args.roles)
    return ontology, class_map, synonyms


def _predict_one(payload):
    procedure, parse_path, ontology, class_map, synonyms, disabled, strict = payload
    graphs = load_trips(parse_path)
    grid = reasoning.predict(
        procedure, graphs, ontology, class_map, synonyms,
        disabled_rules=disabled, strict_destroy=strict,
    )
    order = [e.canonical_name for e in procedure.entities]
    return reasoning.grid_to_action_rows(grid, order)


def cmd_predict(args) -> int:
    if args.parser != "trips":
        raise ConfigError("predict requires logical-form parses (--parser trips)")
    procedures, _ = _load_corpus(args)
    ontology, class_map, synonyms = _load_configs(args)
    disabled = frozenset()
    if args.rules_off:
        path = Path(args.rules_off)
        if not path.exists():
            raise InputFileError(f"rule override file not found: {path}")
        disabled = frozenset(
            line.strip() for line in path.read_text().splitlines() if line.strip()
        )
    payloads = [
        (
            proc,
            _parse_file(args.parses, proc.id, "trips"),
            ontology,
            class_map,
            synonyms,
            disabled,
            args.strict_destroy,
        )
        for proc in procedures
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            per_proc = list(pool.map(_predict_one, payloads))
    else:
        per_proc = [_predict_one(p) for p in payloads]
    rows = [row for chunk in per_proc for row in chunk]
    if args.format == "tsv":
        corpus_mod.write_action_tsv(args.output, rows)
    else:
        records = [
            {"procedure": r[0], "step": r[1], "entity": r[2],
             "action": r[3], "before": r[4], "after": r[5]}
            for r in rows
        ]
        _write_json(args.output, records)
    return EXIT_OK


def cmd_abstract(args) -> int:
    if args.parser != "trips":
        raise ConfigError("abstract requires logical-form parses (--parser trips)")
    procedures, _ = _load_corpus(args)
    ontology, class_map, synonyms = _load_configs(args)
    out = []
    for proc in procedures:
        graphs = load_trips(_parse_file(args.parses, proc.id, "trips"))
        for graph in graphs:
            frames, facts = abstract_events(graph, ontology, class_map, synonyms)
            out.append(
                {
                    "procedure": proc.id,
                    "step": graph.sentence_index,
                    "frames": [f.to_dict() for f in frames],
                    "passive": [f.to_dict() for f in facts],
                }
            )
    _write_json(args.output, out)
    return EXIT_OK


def cmd_build_graph(args) -> int:
    procedures, _ = _load_corpus(args)
    out = []
    for proc in procedures:
        if args.parser == "trips":
            graphs = load_trips(_parse_file(args.parses, proc.id, "trips"))
            graph = semgraph.build_trips_graph(proc, graphs)
        else:
            docs = load_srl(_parse_file(args.parses, proc.id, "srl"))
            graph = semgraph.build_srl_graph(proc, docs)
        if args.qa_entity:
            for name in args.qa_entity:
                key = corpus_mod.normalize(name)
                matches = [e for e in proc.entities if key in e.aliases]
                if not matches:
                    continue
                extended = semgraph.extend_qa_graph(graph, matches[0], proc)
                out.append(
                    {"procedure": proc.id, "entity": matches[0].canonical_name,
                     "graph": extended.to_dict()}
                )
        else:
            out.append({"procedure": proc.id, "entity": None, "graph": graph.to_dict()})
    _write_json(args.output, out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    procedures, gold = _load_corpus(args)
    pred = corpus_mod.grids_from_action_tsv(args.pred)
    report = metrics.MetricReport()
    if args.tier in ("sentence", "all"):
        report.sentence = metrics.eval_sentence_level(pred, gold)
    if args.tier in ("document", "all"):
        report.document = metrics.eval_document_level(pred, gold)
    if args.tier in ("decision", "all"):
        if not args.parses:
            raise ConfigError("the decision tier needs --parses for mention and ambiguity checks")
        ontology = default_ontology(args.ontology)
        class_map = default_class_map(args.classes)
        parses = {
            proc.id: load_trips(_parse_file(args.parses, proc.id, "trips"))
            for proc in procedures
        }
        categories = metrics.categorize_decisions(gold, procedures, parses, ontology, class_map)
        report.decision = metrics.eval_decision_level(pred, gold, categories)
    if args.format == "json":
        rendered = json.dumps(report.to_dict(), indent=2) + "\n"
    else:
        rendered = report.render_table()
    if args.output:
        Path(args.output).write_text(rendered)
    else:
        sys.stdout.write(rendered)
    return EXIT_OK


def cmd_gat_check(args) -> int:
    failures = gat.check_invariants(seed=args.seed, rounds=args.rounds)
    if args.format == "json":
        print(json.dumps({"seed": args.seed, "rounds": args.rounds, "failures": failures}))
    else:
        for failure in failures:
            print(f"FAIL {failure}")
        status = "ok" if not failures else f"{len(failures)} failure(s)"
        print(f"gat-check seed={args.seed} rounds={args.rounds}: {status}")
    return EXIT_OK if not failures else 1


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


if __name__ == "__main__":
    sys.exit(main())
