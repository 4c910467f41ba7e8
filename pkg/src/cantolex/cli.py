"""Command-line pipeline driver.

Each subcommand wraps one pipeline stage; stages communicate only through
files, all randomized steps take explicit seeds, and identical inputs plus
seeds produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import annotation, corpus, evaluator, extractor, lexicon, llm, reliability, service
from .fileio import atomic_write, read_ndjson, write_ndjson

log = logging.getLogger("cantolex")


def _read_words(path: str) -> list[str]:
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word:
                words.append(word)
    return words


def _log_stage(name: str, args: argparse.Namespace) -> None:
    shown = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    log.info("stage %s config: %s", name, json.dumps(shown, ensure_ascii=False, default=str))


# ---------------------------------------------------------------- mine-terms


def cmd_mine_terms(args: argparse.Namespace) -> int:
    _log_stage("mine-terms", args)
    corp = corpus.load_corpus(args.corpus)
    dictionary = corpus.SegmenterDictionary.load(args.dict)
    allowed = None if args.pos is None else frozenset(args.pos.split(","))
    scores = corpus.mine_terms(
        corp, dictionary, allowed_pos=allowed, top_k=args.top_k, aggregate=args.aggregate
    )
    corpus.write_term_scores(scores, args.out)
    log.info("mined %d terms from %d documents -> %s", len(scores), len(corp), args.out)
    return 0


# ------------------------------------------------------------- lexicon-stats


def cmd_lexicon_stats(args: argparse.Namespace) -> int:
    _log_stage("lexicon-stats", args)
    lex = lexicon.parse_lexicon(args.lexicon)
    base = lexicon.parse_lexicon(args.base) if args.base else None
    tmap = None
    if args.tmap:
        with open(args.tmap, encoding="utf-8") as fh:
            tmap = lexicon.TranslationMap.from_json(fh.read())
    report = lexicon.lexicon_stats(lex, base=base, tmap=tmap)
    if args.json:
        atomic_write(args.json, report.to_json() + "\n")
    sys.stdout.write(report.to_table())
    return 0


# ---------------------------------------------------------------- make-tasks


def cmd_make_tasks(args: argparse.Namespace) -> int:
    _log_stage("make-tasks", args)
    if args.kind == "emotion-annotation":
        if not args.words:
            raise annotation.AnnotationError("--words is required for emotion-annotation tasks")
        items = _read_words(args.words)
        payloads = [{"word": w} for w in items]
        prefix = "em"
    else:
        if not args.translations:
            raise annotation.AnnotationError(
                "--translations is required for translation-validation tasks"
            )
        payloads = []
        with open(args.translations, encoding="utf-8") as fh:
            for row_no, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise annotation.AnnotationError(
                        f"{args.translations}:{row_no}: expected 'word<TAB>translation'"
                    )
                payloads.append({"source_word": parts[0], "given_translation": parts[1]})
        prefix = "tr"

    if args.sample_half:
        sample_seed = args.sample_seed if args.sample_seed is not None else args.seed
        payloads = annotation.sample_half(payloads, seed=sample_seed)
        log.info("sampled half: %d items", len(payloads))

    tasks = [
        annotation.Task(id=f"{prefix}-{i:05d}", kind=args.kind, payload=p)
        for i, p in enumerate(payloads, start=1)
    ]
    portions = annotation.make_portions(tasks, args.portions, seed=args.seed)
    groups = args.groups.split(",")
    roster = {g: [f"{g}-{i + 1:02d}" for i in range(args.portions)] for g in groups}
    assignments = annotation.build_assignments(portions, roster)

    annotation.tasks_to_jsonl(tasks, args.out_tasks)
    manifest = []
    for assign in assignments:
        task_ids = [t.id for t in portions[assign.portion_index]]
        for group in groups:
            manifest.append(
                {
                    "portion_index": assign.portion_index,
                    "group": group,
                    "annotator_id": assign.annotators[group],
                    "task_ids": task_ids,
                }
            )
    atomic_write(
        args.out_assignments,
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
    )
    log.info(
        "%d tasks in %d portions x %d groups -> %s, %s",
        len(tasks),
        args.portions,
        len(groups),
        args.out_tasks,
        args.out_assignments,
    )
    return 0


# --------------------------------------------------------------------- serve


def cmd_serve(args: argparse.Namespace) -> int:
    _log_stage("serve", args)
    tasks = {t.id: t for t in annotation.tasks_from_jsonl(args.tasks)}
    assignments = service.load_assignment_manifest(args.assignments)
    store = service.SessionStore(tasks, assignments, args.journal)
    server = service.make_server(
        store, host=args.host, port=args.port, static_dir=args.static_dir
    )
    host, port = server.server_address[:2]
    print(f"listening on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        store.close()
    return 0


# -------------------------------------------------------------- llm-annotate


def cmd_llm_annotate(args: argparse.Namespace) -> int:
    _log_stage("llm-annotate", args)
    words = _read_words(args.words)
    if args.replay:
        transport = llm.ReplayTransport.load(args.replay)
    elif args.live:
        transport = llm.HttpTransport(
            base_url=args.base_url,
            api_key_env=args.api_key_env,
            timeout=args.timeout,
            requests_per_minute=args.rpm,
        )
    else:
        raise llm.LlmError("choose a transport: --replay FIXTURES or --live")
    params = llm.GenerationParams(model=args.model, temperature=args.temperature)
    run = llm.annotate_batch(
        transport,
        args.kind,
        words,
        retries=args.retries,
        batch_cap=args.batch_cap,
        params=params,
        rater_id=args.rater_id,
        concurrency=args.concurrency,
    )
    annotation.records_to_jsonl(run.records, args.out)
    if args.out_words:
        accepted = [w for w in words if w in run.accepted]
        atomic_write(args.out_words, "".join(w + "\n" for w in accepted))
    if args.report:
        atomic_write(
            args.report,
            json.dumps(run.report(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        )
    log.info(
        "annotated %d/%d words (%d rejected, %d unannotated) -> %s",
        len(run.records),
        len(words),
        len(run.rejected),
        len(run.unannotated),
        args.out,
    )
    return 0


# ----------------------------------------------------------------- aggregate


def _word_of_map(tasks_path: str | None) -> dict[str, str]:
    if not tasks_path:
        return {}
    return {t.id: t.word for t in annotation.tasks_from_jsonl(tasks_path)}


def cmd_aggregate(args: argparse.Namespace) -> int:
    _log_stage("aggregate", args)
    word_of = _word_of_map(args.tasks)
    by_word: dict[str, list[annotation.AnnotationRecord]] = {}
    for records_path in args.records:
        for record in annotation.records_from_jsonl(records_path):
            if record.kind != "emotion-annotation":
                continue
            word = word_of.get(record.task_id, record.task_id)
            by_word.setdefault(word, []).append(record)
    if not by_word:
        raise annotation.AnnotationError("no emotion-annotation records found")
    rows = []
    for word in sorted(by_word):
        records = by_word[word]
        raters = len({r.annotator_id for r in records}) if args.raters == "auto" else int(args.raters)
        outcome = annotation.aggregate_majority(records, raters)
        rows.append(
            {
                "word": word,
                "labels": sorted(outcome.labels),
                "dropped": outcome.dropped,
                "raters": raters,
            }
        )
    write_ndjson(args.out, rows)
    log.info("aggregated %d words -> %s", len(rows), args.out)
    return 0


# --------------------------------------------------------------------- alpha


def cmd_alpha(args: argparse.Namespace) -> int:
    _log_stage("alpha", args)
    if args.matrix:
        matrix = reliability.read_matrix(args.matrix)
    elif args.records:
        raters = args.raters.split(",")
        records = [
            r
            for path in args.records
            for r in annotation.records_from_jsonl(path)
            if r.kind == "emotion-annotation"
        ]
        matrix = reliability.build_reliability_matrix(
            records, raters, word_of=_word_of_map(args.tasks) or None
        )
        if args.write_matrix:
            reliability.write_matrix(matrix, args.write_matrix)
    else:
        raise reliability.ReliabilityError("provide --matrix or --records with --raters")
    report = reliability.krippendorff_alpha(matrix)
    payload = json.dumps(report.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    if args.out:
        atomic_write(args.out, payload)
    sys.stdout.write(payload)
    return 0


# --------------------------------------------------------------------- kappa


def cmd_kappa(args: argparse.Namespace) -> int:
    _log_stage("kappa", args)
    a = _read_words(args.a)
    b = _read_words(args.b)
    report = reliability.cohens_kappa(a, b)
    payload = json.dumps(report.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    if args.out:
        atomic_write(args.out, payload)
    sys.stdout.write(payload)
    return 0


# ------------------------------------------------------------- build-lexicon


def cmd_build_lexicon(args: argparse.Namespace) -> int:
    _log_stage("build-lexicon", args)
    if args.base:
        lex = lexicon.parse_lexicon(args.base, name=args.name)
        for entry in lex.entries.values():
            entry.provenance = frozenset({"nrc-translated"})
    else:
        lex = lexicon.Lexicon(name=args.name)
    if args.tmap:
        with open(args.tmap, encoding="utf-8") as fh:
            tmap = lexicon.TranslationMap.from_json(fh.read())
        lex = lexicon.merge_expressions(lex, tmap)
    if args.aggregated:
        provenance = frozenset(args.provenance.split(","))
        for _, row in read_ndjson(args.aggregated):
            if row.get("dropped"):
                continue
            lex.add(row["word"], row.get("labels", []), provenance)
    if not args.keep_neutral:
        lex = lexicon.filter_non_neutral(lex)
    lexicon.write_lexicon(lex, args.out)
    log.info("built lexicon %r with %d entries -> %s", args.name, len(lex), args.out)
    return 0


# ------------------------------------------------------------------- extract


def cmd_extract(args: argparse.Namespace) -> int:
    _log_stage("extract", args)
    lex = lexicon.parse_lexicon(args.lexicon)
    matcher = extractor.LexiconMatcher(lex)
    if args.text is not None:
        profile = extractor.extract(args.text, matcher, args.mode)
        sys.stdout.write(
            json.dumps(profile.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"
        )
        return 0
    if not args.infile:
        raise extractor.ExtractionError("provide --text or --in")
    rows = []
    for line_no, obj in read_ndjson(args.infile):
        profile = extractor.extract(obj["text"], matcher, args.mode)
        rows.append({"id": obj.get("id", str(line_no)), **profile.to_dict()})
    write_ndjson(args.out, rows)
    log.info("extracted %d documents -> %s", len(rows), args.out)
    return 0


# ------------------------------------------------------------------ evaluate


def _parse_lexicon_spec(spec: str) -> tuple[str, str, str, str]:
    # NAME=PATH:LANG:MODE
    try:
        name, rest = spec.split("=", 1)
        path, lang, mode = rest.rsplit(":", 2)
    except ValueError:
        raise evaluator.EvaluationError(
            f"invalid lexicon spec {spec!r}; expected NAME=PATH:LANG:MODE"
        ) from None
    return name, path, lang, mode


def cmd_evaluate(args: argparse.Namespace) -> int:
    _log_stage("evaluate", args)
    datasets = [evaluator.load_dataset(p) for p in args.datasets]
    lexicons = []
    for spec in args.lexicon:
        name, path, lang, mode = _parse_lexicon_spec(spec)
        lexicons.append((lexicon.parse_lexicon(path, name=name), lang, mode))
    base_name, base_path, base_lang, base_mode = _parse_lexicon_spec(args.baseline)
    baseline = (lexicon.parse_lexicon(base_path, name=base_name), base_lang, base_mode)
    report = evaluator.evaluate_matrix(datasets, lexicons, baseline)
    table = report.to_table(reference=args.reference)
    if args.out_json:
        atomic_write(args.out_json, report.to_json(reference=args.reference) + "\n")
    if args.out_table:
        atomic_write(args.out_table, table)
    sys.stdout.write(table)
    return 0


# ---------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cantolex",
        description="Emotion lexicon construction and validation pipeline",
    )
    parser.add_argument("--config", help="JSON config file; explicit flags override it")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress progress logging")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    p = sub.add_parser("mine-terms", help="rank corpus terms by TF-IDF")
    p.add_argument("--corpus", required=True, help="newline-delimited JSON thread records")
    p.add_argument("--dict", required=True, help="TSV term<TAB>pos segmentation dictionary")
    p.add_argument("--top-k", type=int, default=corpus.DEFAULT_TOP_K, help="terms to keep (default %(default)s)")
    p.add_argument(
        "--pos",
        default=None,
        help="comma-separated POS whitelist (default: "
        + ",".join(sorted(corpus.DEFAULT_POS_FILTER))
        + ")",
    )
    p.add_argument("--aggregate", choices=("sum", "max"), default="sum", help="per-term corpus score (default %(default)s)")
    p.add_argument("--out", required=True, help="output TSV term<TAB>pos<TAB>tfidf")
    p.set_defaults(func=cmd_mine_terms)

    p = sub.add_parser("lexicon-stats", help="label proportions and expansion statistics")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--base", help="base lexicon for expansion statistics")
    p.add_argument("--tmap", help="translation map JSON for expansion statistics")
    p.add_argument("--json", help="write the report as JSON here")
    p.set_defaults(func=cmd_lexicon_stats)

    p = sub.add_parser("make-tasks", help="create tasks, portions, and group assignments")
    p.add_argument("--kind", choices=annotation.TASK_KINDS, default="emotion-annotation")
    p.add_argument("--words", help="word list, one per line (emotion-annotation)")
    p.add_argument("--translations", help="TSV word<TAB>translation (translation-validation)")
    p.add_argument("--portions", type=int, required=True)
    p.add_argument("--groups", default="A,B,C", help="comma-separated group names (default %(default)s)")
    p.add_argument("--seed", type=int, required=True, help="shuffle seed (mandatory for reproducibility)")
    p.add_argument("--sample-half", action="store_true", help="sample half the items before portioning")
    p.add_argument("--sample-seed", type=int, help="separate seed for --sample-half (default: --seed)")
    p.add_argument("--out-tasks", required=True)
    p.add_argument("--out-assignments", required=True)
    p.set_defaults(func=cmd_make_tasks)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--tasks", required=True)
    p.add_argument("--assignments", required=True)
    p.add_argument("--journal", required=True, help="append-only submission journal")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8710)
    p.add_argument("--static-dir", help="serve the annotator UI bundle from this directory")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("llm-annotate", help="batch-annotate words through a chat-completion endpoint")
    p.add_argument("--kind", choices=llm.PROMPT_KINDS, required=True)
    p.add_argument("--words", required=True, help="word list, one per line")
    p.add_argument("--replay", help="replay fixture JSON (deterministic)")
    p.add_argument("--live", action="store_true", help="use the live HTTP endpoint")
    p.add_argument("--base-url", default="https://api.openai.com/v1")
    p.add_argument("--model", default="gpt-3.5-turbo")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--api-key-env", default="LLM_API_KEY", help="environment variable holding the API key")
    p.add_argument("--rpm", type=float, default=60.0, help="request rate limit per minute")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--batch-cap", type=int, default=llm.DEFAULT_BATCH_CAP)
    p.add_argument("--rater-id", default=llm.DEFAULT_LLM_RATER_ID)
    p.add_argument("--concurrency", type=int, default=1)
    p.add_argument("--out", required=True, help="output records NDJSON")
    p.add_argument("--out-words", help="write the accepted words here, one per line")
    p.add_argument("--report", help="write the coverage report JSON here")
    p.set_defaults(func=cmd_llm_annotate)

    p = sub.add_parser("aggregate", help="majority-vote aggregation of emotion records")
    p.add_argument("--records", nargs="+", required=True, help="one or more record NDJSON files")
    p.add_argument("--tasks", help="tasks file mapping task ids to words")
    p.add_argument(
        "--raters",
        default="auto",
        help="rater count k for the majority rule, or 'auto' for per-word distinct raters",
    )
    p.add_argument("--out", required=True, help="output NDJSON {word, labels, dropped}")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("alpha", help="Krippendorff's alpha of a reliability matrix")
    p.add_argument("--matrix", help="TSV matrix (unit rows, rater columns, empty = missing)")
    p.add_argument("--records", nargs="+", help="emotion record NDJSON files to binarize")
    p.add_argument("--raters", help="comma-separated rater ids (with --records)")
    p.add_argument("--tasks", help="tasks file mapping task ids to words (with --records)")
    p.add_argument("--write-matrix", help="dump the binarized matrix TSV here")
    p.add_argument("--out", help="write the report JSON here")
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("kappa", help="Cohen's kappa between two label sequences")
    p.add_argument("--a", required=True, help="first sequence, one label per line")
    p.add_argument("--b", required=True, help="second sequence, one label per line")
    p.add_argument("--out", help="write the report JSON here")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("build-lexicon", help="assemble a lexicon from base + expressions + labels")
    p.add_argument("--name", required=True)
    p.add_argument("--base", help="base lexicon TSV")
    p.add_argument("--tmap", help="translation map JSON to merge")
    p.add_argument("--aggregated", help="aggregated labels NDJSON from 'aggregate'")
    p.add_argument("--provenance", default="human,llm", help="provenance classes for aggregated entries")
    p.add_argument("--keep-neutral", action="store_true", help="keep entries with no labels")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_lexicon)

    p = sub.add_parser("extract", help="keyword-matching emotion extraction")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--mode", choices=extractor.MODES, required=True)
    p.add_argument("--text", help="extract from this text and print the profile")
    p.add_argument("--in", dest="infile", help="batch mode: NDJSON documents {id, text}")
    p.add_argument("--out", help="batch mode: output profiles NDJSON")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="consistency evaluation grid against a baseline")
    p.add_argument("--datasets", nargs="+", required=True, help="parallel dataset NDJSON files")
    p.add_argument(
        "--lexicon",
        action="append",
        required=True,
        metavar="NAME=PATH:LANG:MODE",
        help="candidate lexicon (repeatable)",
    )
    p.add_argument("--baseline", required=True, metavar="NAME=PATH:LANG:MODE")
    p.add_argument("--reference", help="lexicon name for relative-change columns")
    p.add_argument("--out-json")
    p.add_argument("--out-table")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        with open(known.config, encoding="utf-8") as fh:
            defaults = json.load(fh)
        normalized = {k.replace("-", "_"): v for k, v in defaults.items()}
        for action in parser._subparsers._group_actions:
            for sub_parser in action.choices.values():
                sub_parser.set_defaults(**normalized)
                for sub_action in sub_parser._actions:
                    if sub_action.dest in normalized:
                        sub_action.required = False

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
