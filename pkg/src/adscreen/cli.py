"""Command line front end.

Subcommands: ``generate`` a synthetic corpus, ``dump`` parsed transcripts
as JSON, ``train`` one pipeline, ``evaluate`` a saved model against a
corpus, ``stability`` for the repeated-split study, ``serve`` the HTTP
scoring service.  Exit codes: 0 success, 1 usage, 2 data error, 3
numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .chat import load_corpus, parse_chat, transcript_to_dict, RawChatDocument
from .container import load_container, score_transcript
from .corpus import SyntheticCorpusSpec, generate_synthetic_corpus
from .errors import (
    AdscreenError,
    DivergenceDetectedError,
    NonFiniteFeaturesError,
)
from .evaluate import confusion, roc_auc
from .pipeline import (
    PipelineConfig,
    config_from_mapping,
    default_search_space,
    parse_config_file,
    prepare_corpus,
    run_pipeline,
    run_search,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _load_config(args) -> PipelineConfig:
    """Config file first, then explicit flags on top."""
    overrides = {}
    if getattr(args, "config", None):
        overrides.update(parse_config_file(args.config))
    for flag in ("pipeline", "seed", "repetitions"):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[flag] = value
    return config_from_mapping(overrides)


def cmd_generate(args) -> int:
    preset = SyntheticCorpusSpec.null if args.null else SyntheticCorpusSpec.standard
    spec = preset(docs_per_class=args.docs_per_class, seed=args.seed)
    paths, metadata = generate_synthetic_corpus(spec, args.out)
    print(f"wrote {len(paths)} transcripts and {metadata}")
    return EXIT_OK


def cmd_dump(args) -> int:
    docs = []
    for path in args.paths:
        text = Path(path).read_text(encoding="utf-8")
        t = parse_chat(RawChatDocument.from_text(text, source_id=Path(path).stem))
        docs.append(transcript_to_dict(t))
    payload = json.dumps(docs, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    return EXIT_OK


def _apply_best(cfg: PipelineConfig, best: dict) -> PipelineConfig:
    renames = {
        "c": None,  # becomes a one-point grid below
        "vec_size": "vec_size",
        "alpha": "doc2vec_alpha",
        "min_alpha": "doc2vec_min_alpha",
    }
    fields = {}
    for key, value in best.items():
        target = renames.get(key, key)
        if key == "c":
            fields["c_grid"] = (float(value),)
        elif target:
            fields[target] = value
    return dataclasses.replace(cfg, **fields)


def _train(args, stability: bool) -> int:
    cfg = _load_config(args)
    metadata = args.metadata or str(Path(args.corpus) / "metadata.json")

    if args.grid or args.random_search is not None:
        space = default_search_space(cfg)
        if args.grid:
            candidates = space.grid()
        else:
            candidates = space.sample(args.random_search, seed=cfg.seed)
        prepared = prepare_corpus(load_corpus(args.corpus, metadata))
        best, results = run_search(prepared, cfg, candidates)
        kept = [r for r in results if r.error is None]
        print(f"searched {len(results)} candidates ({len(kept)} trainable)")
        print(f"best: {json.dumps(best, sort_keys=True)}")
        cfg = _apply_best(cfg, best)

    workers = getattr(args, "workers", None) or 1
    report = run_pipeline(cfg, args.corpus, metadata,
                          out_dir=args.out, stability=stability,
                          workers=workers)
    line = (
        f"pipeline {report['pipeline']}: "
        f"test accuracy {report['test']['accuracy']:.4f}, "
        f"test AUC {report['test']['auc']:.4f}, c={report['selected_c']:g}"
    )
    if stability:
        stab = report["stability"]
        line += (
            f"; over {stab['repetitions']} repetitions "
            f"accuracy {stab['accuracy']['mean']:.4f}±{stab['accuracy']['std']:.4f}, "
            f"AUC {stab['auc']['mean']:.4f}±{stab['auc']['std']:.4f}"
        )
    print(line)
    if args.out:
        print(f"artifacts in {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    return _train(args, stability=False)


def cmd_stability(args) -> int:
    return _train(args, stability=True)


def cmd_evaluate(args) -> int:
    box = load_container(args.model)
    metadata = args.metadata or str(Path(args.corpus) / "metadata.json")
    prepared = prepare_corpus(load_corpus(args.corpus, metadata))
    scores = np.array(
        [score_transcript(box, t) for t in prepared.transcripts]
    )
    pred = (scores >= 0.5).astype(int)
    _, auc = roc_auc(prepared.labels, scores)
    out = {
        "model_version": box.version,
        "n_documents": len(prepared),
        "accuracy": float(np.mean(pred == prepared.labels)),
        "auc": auc,
        "confusion": confusion(prepared.labels, pred).to_dict(),
    }
    payload = json.dumps(out, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, _, port = args.bind.rpartition(":")
    app = create_app(args.model, allowed_origins=tuple(args.origins.split(",")))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="adscreen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("generate", help="write a synthetic screening corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--docs-per-class", type=int, default=150)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--null", action="store_true",
                   help="identical class distributions (nothing to learn)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("dump", help="parse transcripts and print them as JSON")
    p.add_argument("paths", nargs="+", help="transcript files")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_dump)

    for name, func, help_text in (
        ("train", cmd_train, "train one pipeline and write its artifacts"),
        ("stability", cmd_stability,
         "train plus the repeated-split stability study"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--corpus", required=True, help="corpus directory")
        p.add_argument("--metadata", help="metadata file "
                       "(default: CORPUS/metadata.json)")
        p.add_argument("--out", help="artifact directory")
        p.add_argument("--pipeline", type=int, choices=(1, 2, 3, 4))
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--repetitions", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        search = p.add_mutually_exclusive_group()
        search.add_argument("--grid", action="store_true",
                            help="exhaustive hyperparameter search first")
        search.add_argument("--random-search", type=int, metavar="BUDGET",
                            help="sampled hyperparameter search first")
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="score a saved model over a corpus")
    p.add_argument("--model", required=True, help="model container file")
    p.add_argument("--corpus", required=True, help="corpus directory")
    p.add_argument("--metadata", help="metadata file "
                   "(default: CORPUS/metadata.json)")
    p.add_argument("--out", help="write the JSON summary here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the HTTP scoring service")
    p.add_argument("--model", help="model container file")
    p.add_argument("--bind", default="127.0.0.1:8000", metavar="HOST:PORT")
    p.add_argument("--origins", default="*",
                   help="comma-separated allowed CORS origins")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.error("a subcommand is required")
    try:
        return args.func(args)
    except (DivergenceDetectedError, NonFiniteFeaturesError, FloatingPointError) as exc:
        print(f"adscreen: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (AdscreenError, OSError, ValueError) as exc:
        print(f"adscreen: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
