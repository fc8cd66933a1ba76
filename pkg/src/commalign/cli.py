"""Command line surface.

Subcommands: `gen` writes a synthetic corpus, `align` runs the full
pipeline, `eval` rescoring of an alignment file against truth, `inspect`
prints the top weights of stored models, `sweep` re-runs the search for a
range of cardinality budgets. All parameters come from one YAML config
file; `--set section.key=value` overrides individual entries.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from .corpus import (
    Corpus,
    CorpusConfig,
    load_commentary,
    load_events,
    load_ground_truth,
    write_commentary,
    write_events,
    write_ground_truth,
)
from .exemplar import inspect_model, load_models
from .metrics import AlignmentResult, compute_metrics
from .pipeline import PipelineError, parse_config, run_pipeline, run_sweep
from .synth import SynthParams, generate_synthetic_corpus


def _load_config(path: str, overrides: list[str], seed: int | None) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"config root of {path} must be a mapping")
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form section.key=value")
        dotted, raw_value = item.split("=", 1)
        keys = dotted.split(".")
        target = data
        for key in keys[:-1]:
            target = target.setdefault(key, {})
        target[keys[-1]] = yaml.safe_load(raw_value)
    if seed is not None:
        data["seed"] = seed
    return data


def _cmd_gen(args: argparse.Namespace) -> int:
    data = _load_config(args.config, args.set, args.seed)
    synth_args = dict(data.get("corpus", {}).get("synth", {}))
    synth_args["seed"] = int(data.get("seed", args.seed))
    params = SynthParams(**synth_args)
    sentences, events, truth = generate_synthetic_corpus(params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_commentary(sentences, out / "commentary.jsonl")
    write_events(events, out / "events.jsonl")
    write_ground_truth(truth, out / "truth.jsonl")
    print(
        f"wrote {len(sentences)} sentences, {len(events)} events, "
        f"{truth.total_pairs()} truth pairs to {out}"
    )
    return 0


def _cmd_align(args: argparse.Namespace) -> int:
    data = _load_config(args.config, args.set, args.seed)
    if args.workers is not None:
        data["workers"] = args.workers
    config = parse_config(data)
    alignment, report = run_pipeline(config, out_dir=args.out)
    print(report.to_json())
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    sentences = load_commentary(args.commentary)
    events = load_events(args.events)
    corpus = Corpus.build(sentences, events, CorpusConfig(window_half=args.window_half))
    truth = load_ground_truth(args.truth, list(corpus.buckets))
    predictions: dict[str, frozenset[str]] = {}
    with open(args.alignment, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            predictions[str(rec["sentence_id"])] = frozenset(
                str(e) for e in rec["event_ids"]
            )
    game_of = {s.sentence_id: s.game_id for s in sentences}
    report = compute_metrics(AlignmentResult(predictions), truth, None, game_of)
    print(report.to_json())
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    run_dir = Path(args.run)
    models = load_models(run_dir / "models.npz")
    space_doc = json.loads((run_dir / "space.json").read_text())
    from .corpus import Vocabulary
    from .features import FeatureSpace

    space = FeatureSpace(
        Vocabulary.from_words(space_doc["words"]),
        tuple(space_doc["event_types"]),
        tuple((a, v) for a, v in space_doc["categorical_symbols"]),
        space_doc["string_mode"],
    )
    selected = models
    if args.key:
        sid, _, eids = args.key.partition(":")
        wanted = tuple(eids.split("+")) if eids else ()
        selected = [
            m
            for m in models
            if m.key.sentence_id == sid and (not wanted or m.key.event_ids == wanted)
        ]
        if not selected:
            print(f"no model matches {args.key!r}", file=sys.stderr)
            return 1
    for model in selected[: args.limit]:
        print(f"{model.key.sentence_id}:{'+'.join(model.key.event_ids)}")
        for name, weight in inspect_model(model, space, args.top):
            print(f"  {name}\t{weight:+.6f}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    data = _load_config(args.config, args.set, args.seed)
    ks = [int(k) for k in args.ks.split(",")] if args.ks else None
    table = run_sweep(data, out_dir=args.out, ks=ks)
    best_k = max(table, key=lambda row: row[1].f1)[0]
    print("k\tprecision\trecall\tf1")
    for k, report in table:
        print(f"{k}\t{report.precision:.4f}\t{report.recall:.4f}\t{report.f1:.4f}")
    print(f"best_k\t{best_k}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="commalign",
        description="Align commentary sentences with structured event logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, seed_required: bool) -> None:
        p.add_argument("--config", required=True, help="YAML config file")
        p.add_argument(
            "--seed", type=int, required=seed_required, help="master RNG seed"
        )
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="section.key=value",
            help="override a config entry",
        )

    p_gen = sub.add_parser("gen", help="generate a synthetic corpus")
    common(p_gen, seed_required=True)
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=_cmd_gen)

    p_align = sub.add_parser("align", help="run the full alignment pipeline")
    common(p_align, seed_required=True)
    p_align.add_argument("--out", required=True, help="artifact directory")
    p_align.add_argument("--workers", type=int, default=None)
    p_align.set_defaults(func=_cmd_align)

    p_eval = sub.add_parser("eval", help="rescore an alignment file")
    p_eval.add_argument("--alignment", required=True)
    p_eval.add_argument("--commentary", required=True)
    p_eval.add_argument("--events", required=True)
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--window-half", type=float, default=75.0)
    p_eval.set_defaults(func=_cmd_eval)

    p_inspect = sub.add_parser("inspect", help="print model top weights")
    p_inspect.add_argument("--run", required=True, help="align output directory")
    p_inspect.add_argument("--key", default=None, help="sentence_id:event_id")
    p_inspect.add_argument("--top", type=int, default=10)
    p_inspect.add_argument("--limit", type=int, default=5)
    p_inspect.set_defaults(func=_cmd_inspect)

    p_sweep = sub.add_parser("sweep", help="cardinality budget sweep")
    common(p_sweep, seed_required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--ks", default=None, help="comma list, e.g. 1,2,3,4")
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error in stage {exc.stage!r}: {exc.cause}", file=sys.stderr)
        return 1
    except Exception as exc:  # argparse-level and input errors
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
