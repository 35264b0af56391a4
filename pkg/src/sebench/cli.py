"""Unified command-line entry point.

Subcommands cover the whole workflow: preprocess, train-vocab, tokenize,
prep, stats, analyze-vocab, mlm-run, eval, compare, serve. Every
subcommand is a thin adapter over the library functions; runtime failures
print a one-line JSON diagnostic to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from . import bayes, evaluation, mlm, pipeline, pretrain, service
from . import vocab_analysis as va
from .wordpiece import TokenizerModel, Vocabulary, VocabError, tokenize, train_vocab

PROG = "sebench"


class CliError(Exception):
    pass


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if p.suffix == ".toml":
        with open(p, "rb") as f:
            return tomllib.load(f)
    with open(p, encoding="utf-8") as f:
        return json.load(f)


def _pipeline_config(path: str | None) -> pipeline.PipelineConfig:
    if path is None:
        return pipeline.PipelineConfig()
    raw = _load_config_file(path)
    kwargs = {}
    if "steps" in raw:
        kwargs["steps"] = tuple(pipeline.Step(s) for s in raw["steps"])
    if "matrix" in raw:
        kwargs["per_source_matrix"] = {
            pipeline.Source(src): frozenset(pipeline.Step(s) for s in steps)
            for src, steps in raw["matrix"].items()}
    if "stopword_threshold" in raw:
        kwargs["stopword_threshold"] = float(raw["stopword_threshold"])
    return pipeline.PipelineConfig(**kwargs)


def _read_sentences(path: str) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]


def _parse_mlm_backend(spec: str) -> mlm.MlmBackend:
    kind, _, rest = spec.partition(":")
    if kind == "baseline":
        if not rest:
            raise CliError("baseline backend needs a corpus path: baseline:<txt>")
        return mlm.baseline_backend(_read_sentences(rest))
    if kind == "http":
        name, _, url = rest.partition("=")
        if not name or not url:
            raise CliError("http backend spec is http:<name>=<url>")
        return mlm.http_backend(url, name)
    raise CliError(f"unknown backend spec {spec!r}; use baseline:<txt> or "
                   f"http:<name>=<url>")


def _parse_eval_backend(spec: str) -> evaluation.ClassifierBackend:
    if spec == "majority":
        return evaluation.MajorityBackend()
    if spec in ("unigram", "unigram_count"):
        return evaluation.UnigramCountBackend()
    if spec.startswith("cmd:"):
        command = spec[len("cmd:"):]
        if not command:
            raise CliError("command backend spec is cmd:<executable ...>")
        return evaluation.CommandBackend(command)
    raise CliError(f"unknown backend {spec!r}; use majority, unigram or cmd:<exe>")


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def cmd_preprocess(args) -> int:
    config = _pipeline_config(args.config)
    report = pipeline.PipelineReport()
    docs = pipeline.read_documents_jsonl(args.infile)
    cleaned = pipeline.run_corpus(docs, config, report=report)
    written = pipeline.write_corpus(cleaned, args.out)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump(report.as_dict(), f, indent=2)
            f.write("\n")
    print(f"wrote {written} documents to {args.out} "
          f"({sum(report.drops.values())} dropped)")
    return 0


def cmd_train_vocab(args) -> int:
    sentences = _read_sentences(args.infile)
    vocab = train_vocab(sentences, target_size=args.size,
                        min_frequency=args.min_freq)
    vocab.to_file(args.out)
    print(f"wrote {vocab.size} tokens to {args.out}")
    return 0


def cmd_tokenize(args) -> int:
    vocab = Vocabulary.from_file(args.vocab)
    model = TokenizerModel(vocab=vocab, cased=args.cased)
    pieces = tokenize(model, args.text)
    print(" ".join(pieces))
    return 0


def cmd_prep(args) -> int:
    vocab = Vocabulary.from_file(args.vocab)
    model = TokenizerModel(vocab=vocab)
    corpus = pipeline.read_corpus(args.infile)
    instances = pretrain.make_instances(
        corpus, model, max_seq_len=args.max_len, dupe_factor=args.dupe,
        mask_prob=args.mask_prob, seed=args.seed)
    n = pretrain.write_instances_jsonl(instances, args.out)
    print(f"wrote {n} instances to {args.out}")
    return 0


def cmd_stats(args) -> int:
    vocab = Vocabulary.from_file(args.vocab)
    model = TokenizerModel(vocab=vocab)
    corpus = pipeline.read_corpus(args.infile)
    hist = pretrain.length_stats(corpus, model)
    payload = hist.as_dict()
    payload["fraction_below_128"] = hist.fraction_below(128)
    payload["fraction_below_256"] = hist.fraction_below(256)
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    print(f"histogram over {hist.total} sequences written to {args.out}")
    return 0


def cmd_analyze_vocab(args) -> int:
    vocab_a = Vocabulary.from_file(args.a)
    vocab_b = Vocabulary.from_file(args.b)
    payload: dict = {
        "a": args.a, "b": args.b,
        "continuation_pieces_a": va.count_continuation_pieces(vocab_a),
        "continuation_pieces_b": va.count_continuation_pieces(vocab_b),
    }
    if args.uncase_b or vocab_a.size != vocab_b.size:
        payload["coverage"] = va.coverage(
            vocab_a, vocab_b, uncase_b=args.uncase_b).as_dict()
    else:
        payload["overlap"] = va.overlap(vocab_a, vocab_b).as_dict()
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    if args.cross_tokenize_out:
        model_b = TokenizerModel(vocab=vocab_b, cased=args.cased_b)
        rows = va.cross_tokenize_oov(vocab_a, vocab_b, model_b)
        table = va.render_cross_tokenization_markdown(
            rows, name_a=Path(args.a).stem, name_b=Path(args.b).stem)
        with open(args.cross_tokenize_out, "w", encoding="utf-8") as f:
            f.write(table)
    print(f"analysis written to {args.out}")
    return 0


def cmd_mlm_run(args) -> int:
    examples = mlm.load_examples(args.examples)
    backends = [_parse_mlm_backend(spec) for spec in args.backend]
    if not backends:
        raise CliError("at least one --backend is required")
    result = mlm.run_benchmark(examples, backends, top_k=args.top_k)
    fmt = "json" if args.out.endswith(".json") else "markdown"
    rendered = mlm.render_report(result, fmt=fmt)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(rendered)
    print(f"benchmark report ({fmt}) written to {args.out}")
    return 0


def cmd_eval(args) -> int:
    data = evaluation.LabeledDataset.from_jsonl(
        args.data, positive_label=args.positive_label)
    if args.scheme == "lopo":
        splits = evaluation.lopo_folds(data)
    elif args.scheme == "10x10":
        splits = evaluation.repeated_cv_folds(data, seed=args.seed)
    else:
        raise CliError(f"unknown scheme {args.scheme!r}")
    backend = _parse_eval_backend(args.backend)
    results = evaluation.run_eval(data, splits, backend, seed=args.seed)
    evaluation.write_results_json(results, args.out)
    ok = [r for r in results if not r.failed]
    print(f"{len(ok)}/{len(results)} folds succeeded; results in {args.out}")
    if ok:
        print(f"median F1: {evaluation.median_f1(results):.4f}")
    return 0


def cmd_compare(args) -> int:
    f1_a = evaluation.load_results_f1(args.a)
    f1_b = evaluation.load_results_f1(args.b)
    lo, _, hi = args.rope.partition(",")
    try:
        rope = (float(lo), float(hi))
    except ValueError:
        raise CliError(f"--rope must be LO,HI (got {args.rope!r})")
    diffs = bayes.PairedDifferences.from_results(f1_a, f1_b, rho=args.rho)
    if args.method == "corr-t":
        summary = bayes.correlated_t_test(diffs, rope, rho=args.rho)
    else:
        summary = bayes.signed_rank_test(
            diffs, rope, mc_samples=args.samples, seed=args.seed)
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(summary.as_dict(), f, indent=2)
        f.write("\n")
    print(f"p(left)={summary.p_left:.4f} p(rope)={summary.p_rope:.4f} "
          f"p(right)={summary.p_right:.4f} -> {args.out}")
    return 0


def build_service_config(config_path: str | None, backend_specs: list[str],
                         listen: str | None, top_k: int) -> service.ServiceConfig:
    backends: dict[str, mlm.MlmBackend] = {}
    effective_listen = listen or service.DEFAULT_LISTEN
    cors: tuple[str, ...] = ("*",)
    if config_path:
        raw = _load_config_file(config_path)
        effective_listen = listen or raw.get("listen", effective_listen)
        top_k = raw.get("top_k", top_k)
        cors = tuple(raw.get("cors_allow", cors))
        for name, spec in raw.get("backends", {}).items():
            if "corpus" in spec:
                backend = mlm.baseline_backend(
                    _read_sentences(spec["corpus"]), name=name)
            elif "url" in spec:
                backend = mlm.http_backend(spec["url"], name)
            else:
                raise CliError(
                    f"backend {name!r} needs a 'corpus' path or an 'url'")
            backends[name] = backend
    for spec in backend_specs:
        backend = _parse_mlm_backend(spec)
        backends[backend.name] = backend
    return service.ServiceConfig(
        listen=effective_listen, backends=backends, top_k=top_k,
        cors_allow=cors)


def cmd_serve(args) -> int:
    config = build_service_config(args.config, args.backend or [],
                                  args.listen, args.top_k)
    service.serve(config)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Corpus construction and validation toolkit for "
                    "SE-domain language models.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("preprocess", help="clean a JSONL document corpus")
    p.add_argument("--in", dest="infile", required=True, metavar="JSONL")
    p.add_argument("--out", required=True, metavar="TXT")
    p.add_argument("--config", metavar="TOML/JSON")
    p.add_argument("--report", metavar="JSON")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train-vocab", help="learn a WordPiece vocabulary")
    p.add_argument("--in", dest="infile", required=True, metavar="TXT")
    p.add_argument("--size", type=int, default=30522)
    p.add_argument("--min-freq", type=int, default=1)
    p.add_argument("--out", required=True, metavar="VOCAB")
    p.set_defaults(func=cmd_train_vocab)

    p = sub.add_parser("tokenize", help="segment text with a vocabulary")
    p.add_argument("--vocab", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--cased", action="store_true")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("prep", help="generate masked pre-training instances")
    p.add_argument("--in", dest="infile", required=True, metavar="TXT")
    p.add_argument("--vocab", required=True)
    p.add_argument("--max-len", type=int, default=128)
    p.add_argument("--dupe", type=int, default=5)
    p.add_argument("--mask-prob", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="JSONL")
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("stats", help="sequence-length histogram of a corpus")
    p.add_argument("--in", dest="infile", required=True, metavar="TXT")
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True, metavar="JSON")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("analyze-vocab", help="compare two vocabularies")
    p.add_argument("--a", required=True, metavar="VOCAB")
    p.add_argument("--b", required=True, metavar="VOCAB")
    p.add_argument("--uncase-b", action="store_true")
    p.add_argument("--cased-b", action="store_true",
                   help="treat b as a cased model for cross-tokenization")
    p.add_argument("--cross-tokenize-out", metavar="MD",
                   help="write the out-of-vocabulary segmentation table")
    p.add_argument("--out", required=True, metavar="JSON")
    p.set_defaults(func=cmd_analyze_vocab)

    p = sub.add_parser("mlm-run", help="run the masked-sentence benchmark")
    p.add_argument("--examples", metavar="JSON",
                   help="benchmark file (default: bundled 30 sentences)")
    p.add_argument("--backend", action="append", default=[],
                   metavar="baseline:<txt>|http:<name>=<url>")
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--out", required=True, metavar="MD/JSON")
    p.set_defaults(func=cmd_mlm_run)

    p = sub.add_parser("eval", help="cross-validated classifier evaluation")
    p.add_argument("--data", required=True, metavar="JSONL")
    p.add_argument("--scheme", required=True, choices=["lopo", "10x10"])
    p.add_argument("--backend", required=True,
                   metavar="majority|unigram|cmd:<exe>")
    p.add_argument("--positive-label", metavar="LABEL")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="Bayesian comparison of two result files")
    p.add_argument("--a", required=True, metavar="JSON")
    p.add_argument("--b", required=True, metavar="JSON")
    p.add_argument("--metric", default="f1", choices=["f1"])
    p.add_argument("--method", required=True,
                   choices=["signed-rank", "corr-t"])
    p.add_argument("--rope", required=True, metavar="LO,HI")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--samples", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="JSON")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="run the prediction HTTP service")
    p.add_argument("--config", metavar="TOML/JSON")
    p.add_argument("--backend", action="append", default=[],
                   metavar="baseline:<txt>|http:<name>=<url>")
    p.add_argument("--listen", metavar="HOST:PORT")
    p.add_argument("--top-k", type=int, default=5)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_help()
        return 0
    try:
        return args.func(args)
    except (CliError, pipeline.PipelineError, pipeline.ConfigError,
            mlm.BenchmarkError, evaluation.EvalError, bayes.CompareError,
            service.ServiceError, pretrain.PrepError, VocabError,
            va.AnalysisError, OSError) as exc:
        print(json.dumps({"error": str(exc), "command": args.command}),
              file=sys.stderr)
        return 1
    except Exception as exc:  # anything else is a bug, but stay structured
        print(json.dumps({"error": f"internal error: {exc}",
                          "command": args.command}), file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
