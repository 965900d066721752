"""Command-line interface: ``specreq <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or configuration, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from specreq.annotations import (
    ENTITY_LABELS,
    RELATION_TYPES,
    label_histogram,
    load_jsonl,
    save_jsonl,
    split_corpus,
    split_histograms,
)
from specreq.docmodel import load_document
from specreq.evaluation import classification_report, validate_predictions, validate_rule_based, wide_table
from specreq.ner.crf import CrfModel, crf_predict, crf_train
from specreq.ner.matchers import DictionaryPack, RulePack
from specreq.pipeline import Extractor, NerEngine, PipelineConfig, PipelineError, segment_document
from specreq.preprocess import CleanDocument, apply_preprocessing
from specreq.relations.features import ParsePaths, RelationFeaturizer, WordVectors
from specreq.relations.pairs import corpus_pairs
from specreq.relations.search import (
    DEFAULT_PARAMS,
    PARAM_GRIDS,
    RelationModel,
    combination_sweep,
    grid_search,
    train_relation_model,
)
from specreq.segment import build_hierarchy, extract_raw_requirements
from specreq.textproc import bilou_decode, bilou_encode, tokenize

logger = logging.getLogger("specreq")

# all input/config validation errors in the library derive from ValueError
VALIDATION_ERRORS = (ValueError, OSError)


class UsageError(ValueError):
    """Bad argument combination detected after parsing."""


def _emit(data: Any, output: str | None) -> None:
    text = json.dumps(data, ensure_ascii=False, indent=2, sort_keys=False)
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def _write_text(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")


def _config(args: argparse.Namespace) -> PipelineConfig:
    if args.config:
        return PipelineConfig.from_file(args.config)
    config = PipelineConfig()
    config.seed = args.seed if args.seed is not None else 0
    return config


def _seed(args: argparse.Namespace, config: PipelineConfig | None = None) -> int:
    if args.seed is not None:
        return args.seed
    return config.seed if config is not None else 0


def _json_arg(value: str | None, what: str) -> Any:
    if value is None:
        return None
    try:
        return json.loads(value)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} is not valid JSON: {exc}") from None


# ------------------------------------------------------------ subcommands


def cmd_preprocess(args: argparse.Namespace) -> int:
    config = _config(args)
    if args.threshold is not None:
        config.threshold = args.threshold
    doc = load_document(args.input)
    if args.no_toc:
        clean, toc = apply_preprocessing(doc, None, threshold=config.threshold), None
    else:
        seg = segment_document(doc, config)
        clean, toc = seg.clean, seg.toc_region
    _emit(clean.to_dict(), args.output)
    report = clean.provenance.to_dict()
    report["toc_region"] = list(toc) if toc else None
    if args.report:
        _emit(report, args.report)
    elif args.output:
        _emit(report, None)
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    data = json.loads(Path(args.input).read_text(encoding="utf-8"))
    if "provenance" in data:
        clean = CleanDocument.from_dict(data)
        root = build_hierarchy(clean)
        requirements = extract_raw_requirements(root, clean.doc_id)
        warnings = root.warnings
    else:
        seg = segment_document(load_document(args.input), _config(args))
        requirements, warnings = seg.requirements, seg.warnings
    lines = [json.dumps(r.to_dict(), ensure_ascii=False) for r in requirements]
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.warnings:
        _emit([w.to_dict() for w in warnings], args.warnings)
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    samples = load_jsonl(args.input)
    split = split_corpus(samples, _seed(args, _config(args)), stratify=args.stratify)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, part in split.parts().items():
            save_jsonl(part, out / f"{name}.jsonl")
    _emit(
        {"seed": split.seed, **{name: [s.id for s in part] for name, part in split.parts().items()}},
        None,
    )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    samples = load_jsonl(args.input)
    out: dict[str, Any] = {"samples": len(samples), "corpus": label_histogram(samples)}
    if len(samples) >= 10:
        split = split_corpus(samples, _seed(args, _config(args)))
        out["splits"] = split_histograms(split)
        out["sizes"] = {name: len(part) for name, part in split.parts().items()}
    _emit(out, args.output)
    return 0


def cmd_train_ner_crf(args: argparse.Namespace) -> int:
    samples = load_jsonl(args.train)
    data = []
    for s in samples:
        tokens = tokenize(s.text)
        data.append((tokens, bilou_encode(tokens, s.entities)))
    labels = sorted(ENTITY_LABELS) if args.all_labels else None
    model = crf_train(data, c1=args.c1, c2=args.c2, max_iter=args.max_iter, labels=labels)
    model.save(args.output)
    _emit(
        {
            "output": args.output,
            "iterations": model.iterations,
            "converged": model.converged,
            "tags": len(model.tags),
            "attributes": len(model.attributes),
        },
        None,
    )
    return 0


def cmd_eval_ner(args: argparse.Namespace) -> int:
    test = load_jsonl(args.test)
    config = _config(args) if args.config else None
    dictionary = DictionaryPack.load(args.dictionary) if args.dictionary else (
        DictionaryPack.load(config.dictionary) if config and config.dictionary else DictionaryPack.default()
    )
    rules = RulePack.load(args.rules) if args.rules else (
        RulePack.load(config.rules) if config and config.rules else RulePack.default()
    )
    if args.engine == "rules":
        result = validate_rule_based(test, dictionary, rules, labels=ENTITY_LABELS)
    else:
        crf_path = args.crf_model or (config.crf_model if config else None)
        if crf_path is None:
            raise UsageError(f"--engine {args.engine} needs --crf-model")
        crf = CrfModel.load(crf_path)
        if args.engine == "crf":
            predictions = []
            for s in test:
                tokens = tokenize(s.text)
                predictions.append(bilou_decode(tokens, crf_predict(crf, tokens), text=s.text))
        else:
            engine = NerEngine("union", dictionary, rules, crf)
            predictions = [engine(s.text) for s in test]
        result = validate_predictions(test, predictions, labels=ENTITY_LABELS)
    report = result.to_dict()
    report["engine"] = args.engine
    _emit(report, args.output)
    if args.csv:
        _write_text(
            wide_table({f"{args.engine}/token": result.token, f"{args.engine}/span": result.span}, ENTITY_LABELS),
            args.csv,
        )
    if args.confusion:
        _write_text(result.token.confusion.to_csv(), args.confusion)
    return 0


def _providers(args: argparse.Namespace) -> tuple[WordVectors | None, ParsePaths | None]:
    embeddings = WordVectors.load(args.embeddings) if getattr(args, "embeddings", None) else None
    paths = ParsePaths.load(args.parse_paths) if getattr(args, "parse_paths", None) else None
    return embeddings, paths


def cmd_train_re(args: argparse.Namespace) -> int:
    pairs = corpus_pairs(load_jsonl(args.train))
    params = _json_arg(args.params, "--params")
    embeddings, paths = _providers(args)
    model = train_relation_model(
        pairs,
        args.kind,
        params if params is not None else DEFAULT_PARAMS[args.kind],
        args.combination,
        embeddings,
        paths,
        seed=_seed(args),
        allow_svm=args.enable_svm,
    )
    model.save(args.output)
    _emit({"output": args.output, "instances": len(pairs), "features": len(model.featurizer.manifest())}, None)
    return 0


def cmd_eval_re(args: argparse.Namespace) -> int:
    embeddings, paths = _providers(args)
    model = RelationModel.load(args.model, embeddings, paths)
    pairs = corpus_pairs(load_jsonl(args.test))
    report = classification_report([p.label for p in pairs], model.predict(pairs), labels=RELATION_TYPES)
    _emit(report.to_dict(), args.output)
    if args.csv:
        _write_text(wide_table({model.classifier.kind: report}, RELATION_TYPES), args.csv)
    return 0


def cmd_grid_search(args: argparse.Namespace) -> int:
    embeddings, paths = _providers(args)
    train = corpus_pairs(load_jsonl(args.train))
    validation = corpus_pairs(load_jsonl(args.validation))
    if not train or not validation:
        raise UsageError("train and validation sets must both yield relation pairs")
    featurizer = RelationFeaturizer(args.combination, embeddings, paths).fit(train)
    grid = _json_arg(args.grid, "--grid")
    result = grid_search(
        args.kind,
        grid if grid is not None else PARAM_GRIDS[args.kind],
        featurizer.transform(train),
        [p.label for p in train],
        featurizer.transform(validation),
        [p.label for p in validation],
        seed=_seed(args),
        allow_svm=args.enable_svm,
    )
    _emit(result.to_dict(), args.output)
    return 0


def cmd_sweep_combos(args: argparse.Namespace) -> int:
    embeddings, paths = _providers(args)
    params = _json_arg(args.params, "--params")
    report = combination_sweep(
        load_jsonl(args.train),
        load_jsonl(args.test),
        kind=args.kind,
        params=params,
        embeddings=embeddings,
        parse_paths=paths,
        seed=_seed(args),
        allow_svm=args.enable_svm,
    )
    _emit(report.to_dict(), args.output)
    if args.csv:
        _write_text(report.to_csv(), args.csv)
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    config = _config(args)
    if args.seed is not None:
        config.seed = args.seed
    extractor = Extractor(config)
    results = [extractor.extract(load_document(path)).to_dict() for path in args.input]
    _emit(results[0] if len(results) == 1 else results, args.output)
    return 0


# ------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specreq", description="Structured requirement extraction.")
    parser.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    parser.add_argument("--config", default=None, help="pipeline INI config")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="remove cover, blank pages, headers/footers and the TOC")
    p.add_argument("--input", required=True)
    p.add_argument("--threshold", type=int, default=None)
    p.add_argument("--output")
    p.add_argument("--report")
    p.add_argument("--no-toc", action="store_true", help="skip TOC location")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("segment", help="raw requirements from a cleaned (or raw) document")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--warnings")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("split", help="seeded 70/20/10 split of an annotation corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--output-dir")
    p.add_argument("--stratify", default=None, help="entity label to balance across parts")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("stats", help="label counts for a corpus and its split")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train-ner-crf", help="train the CRF tagger")
    p.add_argument("--train", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--c1", type=float, default=0.1)
    p.add_argument("--c2", type=float, default=0.1)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--all-labels", action="store_true", help="use all 16 entity labels, not only those seen")
    p.set_defaults(func=cmd_train_ner_crf)

    p = sub.add_parser("eval-ner", help="token- and span-level NER metrics")
    p.add_argument("--engine", choices=("rules", "crf", "union"), default="rules")
    p.add_argument("--test", required=True)
    p.add_argument("--crf-model")
    p.add_argument("--dictionary")
    p.add_argument("--rules")
    p.add_argument("--output")
    p.add_argument("--csv")
    p.add_argument("--confusion")
    p.set_defaults(func=cmd_eval_ner)

    def re_common(p: argparse.ArgumentParser, with_kind: bool = True) -> None:
        if with_kind:
            p.add_argument("--kind", choices=("dt", "rf", "knn", "svm"), default="rf")
        p.add_argument("--embeddings")
        p.add_argument("--parse-paths")
        p.add_argument("--enable-svm", action="store_true")

    p = sub.add_parser("train-re", help="train a relation classifier")
    p.add_argument("--train", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--combination", type=int, default=3)
    p.add_argument("--params", help="JSON hyperparameters")
    re_common(p)
    p.set_defaults(func=cmd_train_re)

    p = sub.add_parser("eval-re", help="evaluate a relation classifier")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--output")
    p.add_argument("--csv")
    re_common(p, with_kind=False)
    p.set_defaults(func=cmd_eval_re)

    p = sub.add_parser("grid-search", help="hyperparameter grid search on a validation set")
    p.add_argument("--train", required=True)
    p.add_argument("--validation", required=True)
    p.add_argument("--combination", type=int, default=3)
    p.add_argument("--grid", help="JSON grid {param: [values]}")
    p.add_argument("--output")
    re_common(p)
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("sweep-combos", help="compare the seven feature combinations")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--params", help="JSON hyperparameters")
    p.add_argument("--output")
    p.add_argument("--csv")
    re_common(p)
    p.set_defaults(func=cmd_sweep_combos)

    p = sub.add_parser("extract", help="formal requirements from page-lines documents")
    p.add_argument("--input", required=True, nargs="+")
    p.add_argument("--output")
    p.set_defaults(func=cmd_extract)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except PipelineError as exc:
        logger.error("%s", exc)
        return 2 if isinstance(exc.__cause__, VALIDATION_ERRORS) else 1
    except (UsageError, *VALIDATION_ERRORS) as exc:
        logger.error("%s", exc)
        return 2
    except Exception:
        logger.exception("internal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
