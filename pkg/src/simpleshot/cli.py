"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 data or runtime error.
Errors are reported as a single ``error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dataio
from .ecoc import (
    decode_batch,
    decode_cosine,
    extend_codebook,
    predict_code,
    random_codebook,
    soft_code,
    train_linear_ecoc,
)
from .episodic import EpisodeSpec, evaluate
from .errors import CodeTooShortError, ConfigError, FewShotError
from .features import TransformKind
from .multiway import evaluate_multiway
from .synthetic import PRESETS, SyntheticSpec, gen_synthetic, preset

THREADS_ENV = "FEWSHOT_THREADS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _emit(text: str, output: str):
    if output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _render(fields: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(fields, indent=2) + "\n"
    flat = {k: v for k, v in fields.items() if not isinstance(v, (list, dict))}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(flat.keys())
    writer.writerow(flat.values())
    return buf.getvalue()


def _load_base(args, kind: TransformKind):
    if args.base is None:
        if kind is TransformKind.CL2N:
            raise ConfigError("--base is required with --transform cl2n")
        return None
    return dataio.load_features(args.base, role="base")


def _add_report_args(p):
    p.add_argument("--output", default="-", help="report path, '-' for stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def _add_transform_args(p):
    p.add_argument("--base", help="base-class features (required for cl2n)")
    p.add_argument("--transform", choices=[k.value for k in TransformKind], default="un")


def cmd_eval_fewshot(args) -> int:
    kind = TransformKind.parse(args.transform)
    spec = EpisodeSpec(args.ways, args.shots, args.queries, args.episodes, args.seed)
    threads = args.threads if args.threads is not None else _default_threads()
    if threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {threads}")
    base = _load_base(args, kind)
    novel = dataio.load_features(args.novel, role="novel")
    report = evaluate(novel, base, spec, kind, threads=threads)
    fields = {
        "transform": kind.value,
        "ways": spec.ways,
        "shots": spec.shots,
        "queries": spec.queries,
        "episodes": spec.episodes,
        "seed": spec.seed,
        "mean_accuracy": report.mean_accuracy,
        "ci95": report.ci95_halfwidth,
    }
    if args.emit_episodes:
        fields["per_episode"] = list(report.per_episode_accuracies)
    _emit(_render(fields, args.format), args.output)
    return 0


def cmd_eval_multiway(args) -> int:
    kind = TransformKind.parse(args.transform)
    base = _load_base(args, kind)
    features = dataio.load_features(args.features, role="novel")
    split = dataio.read_multiway_split(args.split, features)
    report = evaluate_multiway(split, base, kind)
    fields = {
        "transform": kind.value,
        "num_classes": len(report.class_breakdown),
        "num_test": int(sum(r.test_count for r in report.class_breakdown)),
        "per_class_accuracy": report.per_class_accuracy,
        "mean_accuracy": report.mean_accuracy,
        "class_breakdown": [
            {"class": r.class_id, "test_count": r.test_count, "correct": r.correct}
            for r in report.class_breakdown
        ],
    }
    _emit(_render(fields, args.format), args.output)
    return 0


def cmd_ecoc_codebook(args) -> int:
    if args.labels_from:
        ids = dataio.load_features(args.labels_from).classes().tolist()
        if args.classes is not None and args.classes != len(ids):
            raise ConfigError(
                f"--classes {args.classes} disagrees with {len(ids)} labels in {args.labels_from}"
            )
    elif args.classes is None:
        raise ConfigError("give --classes or --labels-from")
    else:
        ids = list(range(args.classes))
    try:
        book = random_codebook(len(ids), args.bits, args.seed, ids)
    except CodeTooShortError as exc:
        # the bit count came straight from the command line
        raise ConfigError(str(exc)) from None
    _emit(dataio.format_codebook(book), args.output)
    return 0


def cmd_ecoc_train(args) -> int:
    train = dataio.load_features(args.features, role="base")
    book = dataio.read_codebook(args.codebook)
    model, trace = train_linear_ecoc(train, book, args.learning_rate, args.epochs, args.seed)
    _emit(dataio.model_to_json(model, trace), args.output)
    return 0


def cmd_ecoc_eval(args) -> int:
    if (args.add_class is None) != (args.shots is None):
        raise ConfigError("--add-class and --shots must be given together")
    model = dataio.read_model(args.model)
    book = dataio.read_codebook(args.codebook)
    if model.code_length != book.code_length:
        raise ConfigError(
            f"model predicts {model.code_length} bits, codebook has {book.code_length}"
        )
    if args.add_class is not None:
        shots = dataio.load_features(args.shots)
        book = extend_codebook(book, args.add_class, soft_code(model, shots.vectors))
    queries = dataio.load_features(args.queries)
    codes = predict_code(model, queries.vectors.astype(np.float64))
    if args.decoder == "cosine":
        predicted = np.array([decode_cosine(book, c) for c in codes], dtype=np.int64)
    else:
        predicted = decode_batch(book, codes)
    correct = int(np.count_nonzero(predicted == queries.labels))
    fields = {
        "decoder": args.decoder,
        "num_classes": book.num_classes,
        "code_length": book.code_length,
        "added_class": args.add_class,
        "queries": len(queries),
        "correct": correct,
        "accuracy": correct / len(queries) if len(queries) else 0.0,
    }
    _emit(_render(fields, args.format), args.output)
    return 0


_SYNTH_FLAGS = {
    "classes": "num_classes",
    "dimension": "dimension",
    "records_per_class": "records_per_class",
    "class_spread": "class_spread",
    "within_spread": "within_spread",
    "offset_norm": "offset_norm",
    "seed": "seed",
}


def cmd_gen_synthetic(args) -> int:
    given = {
        field: getattr(args, flag)
        for flag, field in _SYNTH_FLAGS.items()
        if getattr(args, flag) is not None
    }
    if args.preset:
        spec = preset(args.preset, **given)
    else:
        missing = [f"--{f.replace('_', '-')}" for f, n in _SYNTH_FLAGS.items()
                   if n not in given and n != "seed"]
        if missing:
            raise ConfigError(f"missing {', '.join(missing)} (or use --preset)")
        spec = SyntheticSpec(**given)
    # check both output extensions before doing any work
    dataio.feature_format(args.base_out)
    dataio.feature_format(args.novel_out)
    base, novel = gen_synthetic(spec)
    dataio.save_features(base, args.base_out)
    dataio.save_features(novel, args.novel_out)
    return 0


def cmd_convert(args) -> int:
    dataio.feature_format(args.out)
    fs = dataio.load_features(args.input)
    dataio.save_features(fs, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="simpleshot",
        description="Nearest-centroid few-shot evaluation, ECOC tools and feature-file utilities.",
        epilog="exit status: 0 ok, 1 bad configuration, 2 bad data or runtime failure",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval-fewshot", help="episodic K-shot C-way evaluation")
    p.add_argument("--novel", required=True)
    _add_transform_args(p)
    p.add_argument("--ways", type=int, default=5)
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--queries", type=int, default=15)
    p.add_argument("--episodes", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    p.add_argument("--emit-episodes", action="store_true")
    _add_report_args(p)
    p.set_defaults(func=cmd_eval_fewshot)

    p = sub.add_parser("eval-multiway", help="all-way evaluation on a fixed split")
    p.add_argument("--features", required=True)
    p.add_argument("--split", required=True)
    _add_transform_args(p)
    _add_report_args(p)
    p.set_defaults(func=cmd_eval_multiway)

    ecoc = sub.add_parser("ecoc", help="error-correcting output codes")
    esub = ecoc.add_subparsers(dest="ecoc_command", required=True, parser_class=_Parser)

    p = esub.add_parser("codebook", help="sample a random codebook")
    p.add_argument("--classes", type=int)
    p.add_argument("--labels-from", help="take class ids from a feature file")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_ecoc_codebook)

    p = esub.add_parser("train", help="train the linear code predictor")
    p.add_argument("--features", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_ecoc_train)

    p = esub.add_parser("eval", help="decode queries, optionally adding a class")
    p.add_argument("--model", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--add-class", type=int)
    p.add_argument("--shots", help="feature file with the new class's shots")
    p.add_argument("--decoder", choices=("l1", "cosine"), default="l1")
    _add_report_args(p)
    p.set_defaults(func=cmd_ecoc_eval)

    p = sub.add_parser("gen-synthetic", help="write synthetic base/novel feature files")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--classes", type=int)
    p.add_argument("--dimension", type=int)
    p.add_argument("--records-per-class", type=int)
    p.add_argument("--class-spread", type=float)
    p.add_argument("--within-spread", type=float)
    p.add_argument("--offset-norm", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--base-out", required=True)
    p.add_argument("--novel-out", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("convert", help="convert between .csv and .fsfv feature files")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        code, msg = 1, str(exc)
    except (FewShotError, OSError, ValueError, KeyError) as exc:
        code, msg = 2, str(exc) or type(exc).__name__
    print(f"error: {' '.join(msg.split())}", file=sys.stderr)
    return code
