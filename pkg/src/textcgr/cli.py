"""Command-line pipeline: encode, render, train, evaluate, attribute,
self-similarity, fingerprints, and multi-trial experiments.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
failure. Every flag can also be set in a TOML config file (--config);
precedence is CLI flag > config file > default.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import attribute as attribute_mod
from . import classify, corpus as corpus_mod
from .alphabet import EquivalenceTable, digit_stats, encode, format_stats, \
    normalize_text
from .cgr import fcgr, feature_vector, image_filename, render, write_image
from .chunker import chunk as chunk_seq
from .config import RunConfig, merge_config
from .errors import ConfigError, DataError, NumericalError

try:
    import tomllib
except ModuleNotFoundError:        # Python < 3.11
    import tomli as tomllib


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; route through ConfigError
    # so the documented exit code 1 applies.
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


_CONFIG_FLAGS = {
    "classifier": dict(choices=("lr", "svm", "ftt")),
    "k": dict(type=int, help="pixelation order; image side is 2^k"),
    "chunk_size": dict(type=int,
                       help="chunk length in base-4 digits (0 = whole document)"),
    "noa": dict(action="store_true", default=None,
                help="enable none-of-the-above thresholding"),
    "min_prob": dict(type=float),
    "margin_factor": dict(type=float),
    "ftt_kind": dict(choices=("cosine", "sine")),
    "ftt_freq": dict(type=int, help="low-frequency crop side"),
    "ftt_components": dict(type=int),
    "ftt_neighbors": dict(type=int),
    "seed": dict(type=int),
    "trials": dict(type=int),
    "strip_diacritics": dict(action="store_true", default=None),
    "header_strip": dict(type=int,
                         help="characters to drop from each document head"),
    "label_mode": dict(choices=("author", "genre")),
    "dedup": dict(action="store_true", default=None),
    "lr_l2": dict(type=float),
    "lr_tol": dict(type=float),
    "lr_max_iter": dict(type=int),
    "svm_c": dict(type=float),
}


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="FILE", help="TOML config file")
    p.add_argument("--table", metavar="FILE",
                   help="equivalence-table override file")
    p.add_argument("--chunk-chars", type=int, default=None,
                   help="chunk length in original characters (= 2x digits)")
    for name, kw in _CONFIG_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name,
                       default=None, **kw)
    return p


def _resolve_config(args) -> RunConfig:
    file_values = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                file_values = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{args.config}: {exc}")
    cli_values = {name: getattr(args, name) for name in _CONFIG_FLAGS
                  if getattr(args, name, None) is not None}
    if args.chunk_chars is not None:
        if "chunk_size" in cli_values:
            raise ConfigError("give either --chunk-size or --chunk-chars")
        cli_values["chunk_size"] = 2 * args.chunk_chars
    return merge_config(file_values, cli_values)


def _resolve_table(args) -> EquivalenceTable:
    if getattr(args, "table", None):
        return EquivalenceTable.from_file(args.table)
    return EquivalenceTable.default()


def _load_corpus(args, cfg: RunConfig) -> corpus_mod.Corpus:
    return corpus_mod.load_corpus(args.corpus, dedup=cfg.dedup,
                                  header_strip=cfg.header_strip)


def _read_input_text(path) -> str:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"{path}: {exc}")
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 at byte offset {exc.start}")


# ---------------------------------------------------------------------------
# commands

def cmd_encode(args) -> int:
    cfg = _resolve_config(args)
    table = _resolve_table(args)
    text = normalize_text(_read_input_text(args.input), cfg.strip_diacritics)
    seq = encode(text, table, source_doc=str(args.input))
    with open(args.output, "wb") as fh:
        fh.write((seq.digits + ord("0")).astype(np.uint8).tobytes())
    print(format_stats(digit_stats(seq), table), file=sys.stderr)
    return 0


def cmd_render(args) -> int:
    cfg = _resolve_config(args)
    table = _resolve_table(args)
    text = normalize_text(_read_input_text(args.input), cfg.strip_diacritics)
    seq = encode(text, table, source_doc=Path(args.input).stem)
    out = Path(args.out)
    if cfg.chunk_size and out.is_dir():
        records = chunk_seq(seq, cfg.chunk_size, label="")
        if not records:
            raise DataError(f"{args.input}: shorter than one chunk "
                            f"({cfg.chunk_size} digits)")
        ext = "png" if args.png else "pgm"
        for rec in records:
            name = image_filename(rec.doc_id, rec.chunk_index, cfg.k, ext)
            write_image(render(fcgr(rec.seq, cfg.k)), out / name)
        print(f"wrote {len(records)} images to {out}")
    else:
        write_image(render(fcgr(seq, cfg.k)), out)
        print(f"wrote {out}")
    return 0


def _stamp(model, cfg: RunConfig, table: EquivalenceTable):
    model.table_hash = table.table_hash
    model.order = cfg.k
    return model


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    table = _resolve_table(args)
    images = corpus_mod.build_images(_load_corpus(args, cfg), cfg, table)
    model = _stamp(corpus_mod.train_classifier(cfg, images.images), cfg, table)
    classify.save_model(model, args.out)
    print(f"trained {model.kind} on {len(images.images)} images, "
          f"{len(model.class_ids)} classes -> {args.out}")
    return 0


def _rank_of_truth(result, truth: str) -> int:
    return result.ranked.index(truth) + 1 if truth in result.ranked else 0


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    table = _resolve_table(args)
    model = classify.load_model(args.model, table.table_hash)
    image_set = corpus_mod.build_images(_load_corpus(args, cfg), cfg, table)
    chunk_acc = corpus_mod.chunk_accuracy(model, image_set.images)
    results = corpus_mod.attribute_documents(
        model, image_set, sorted(image_set.doc_labels), cfg)
    ranks = {d: _rank_of_truth(r, image_set.doc_labels[d])
             for d, r in results.items()}
    n = len(ranks)
    histogram = {
        "1": sum(1 for r in ranks.values() if r == 1),
        "2": sum(1 for r in ranks.values() if r == 2),
        "3_or_4": sum(1 for r in ranks.values() if r in (3, 4)),
        "beyond": sum(1 for r in ranks.values() if r == 0 or r > 4),
    }
    max_k = min(4, len(model.class_ids))
    report = {
        "num_documents": n,
        "num_chunks": len(image_set.images),
        "chunk_accuracy": chunk_acc,
        "document_accuracy": histogram["1"] / n if n else None,
        "rank_histogram": histogram,
        "top_k_accuracy": {
            str(k): sum(1 for r in ranks.values() if 1 <= r <= k) / n
            for k in range(1, max_k + 1)
        } if n else {},
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, sort_keys=True, indent=2)
            fh.write("\n")
    print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def cmd_attribute(args) -> int:
    cfg = _resolve_config(args)
    table = _resolve_table(args)
    model = classify.load_model(args.model, table.table_hash)
    image_set = corpus_mod.build_images(_load_corpus(args, cfg), cfg, table)
    results = corpus_mod.attribute_documents(
        model, image_set, sorted(image_set.doc_labels), cfg)
    if args.out:
        attribute_mod.write_report_csv(results.values(), args.out)
    if args.json:
        attribute_mod.write_report_json(results.values(), args.json)
    for doc_id, r in sorted(results.items()):
        print(f"{doc_id}: {r.decision} "
              f"(top {r.aggregated.scores.max():.3f}, {r.num_chunks} chunks)")
    return 0


def cmd_selfsim(args) -> int:
    cfg = _resolve_config(args)
    table = _resolve_table(args)
    image_set = corpus_mod.build_images(_load_corpus(args, cfg), cfg, table)
    images = image_set.images
    if len(images) < 2:
        raise DataError("self-similarity needs at least two chunks")
    m = args.m
    components = min(cfg.ftt_components, len(images),
                     cfg.effective_ftt_freq ** 2)
    model = classify.train_ftt_pca(
        images, freq_side=cfg.effective_ftt_freq, n_components=components,
        kind=cfg.ftt_kind, num_neighbors=m)
    histogram = {i: 0 for i in range(m + 1)}
    per_chunk = []
    for i, img in enumerate(images):
        neighbors = classify.nearest_chunks(
            model, model.points[i], m, exclude=(img.doc_id, img.chunk_index))
        same = sum(1 for nb in neighbors if nb.doc_id == img.doc_id)
        histogram[same] += 1
        per_chunk.append({"doc_id": img.doc_id, "chunk": img.chunk_index,
                          "same_doc_neighbors": same})
    single = sorted(d for d, c in image_set.chunk_counts.items() if c < 2)
    report = {
        "m": m,
        "total_chunks": len(images),
        "histogram": {str(k): v for k, v in sorted(histogram.items(),
                                                   reverse=True)},
        "fraction_all_same": histogram[m] / len(images),
        "single_chunk_docs": single,
        "chunks": per_chunk,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, sort_keys=True, indent=2)
            fh.write("\n")
    for count in range(m, -1, -1):
        print(f"{count}/{m} neighbors from own document: {histogram[count]}")
    print(f"all-{m} fraction: {report['fraction_all_same']:.4f}")
    if single:
        print(f"documents with < 2 chunks (own-document neighbors "
              f"impossible): {', '.join(single)}")
    return 0


def cmd_fingerprint(args) -> int:
    cfg = _resolve_config(args)
    table = _resolve_table(args)
    model = classify.load_model(args.model, table.table_hash)
    if model.kind != "ftt_pca":
        raise ConfigError(f"model {args.model} lacks the transform/PCA "
                          "components needed for signatures")
    k = model.order or int(np.log2(model.image_side))
    lines = []
    for path in args.inputs:
        text = normalize_text(_read_input_text(path), cfg.strip_diacritics)
        seq = encode(text, table, source_doc=str(path))
        sig = classify.signature(model, feature_vector(fcgr(seq, k)))
        lines.append(",".join(repr(float(v)) for v in sig))
        if args.query:
            m = min(args.m or model.num_neighbors, len(model.points) - 1)
            for nb in classify.nearest_chunks(model, sig, m):
                lines.append(f"# {nb.doc_id}[{nb.chunk_index}] "
                             f"label={nb.label} distance={nb.distance!r}")
    out_text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(out_text, encoding="utf-8")
    else:
        sys.stdout.write(out_text)
    return 0


def _parse_sweep(spec: str) -> list:
    lo, hi, step = (int(v) for v in spec.split(":"))
    if step < 1 or hi < lo:
        raise ConfigError(f"bad sweep range {spec!r}")
    return list(range(lo, hi + 1, step))


def cmd_trials(args) -> int:
    cfg = _resolve_config(args)
    table = _resolve_table(args)
    corp = _load_corpus(args, cfg)
    if args.sweep_chunks or args.sweep_k:
        chunk_sizes = (_parse_sweep(args.sweep_chunks)
                       if args.sweep_chunks else [cfg.chunk_size])
        orders = ([int(v) for v in args.sweep_k.split(",")]
                  if args.sweep_k else [cfg.k])
        rows = []
        for size in chunk_sizes:
            for k in orders:
                sub = replace(cfg, chunk_size=size, k=k).validate()
                reports = corpus_mod.run_trials(corp, sub,
                                                protocol=args.protocol,
                                                table=table)
                mean = corpus_mod.summarize_trials(reports)
                rows.append((size, k, mean))
                print(f"chunk={size} k={k}: {mean}")
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write("chunk_size,k,classifier,mean_validation1,"
                         "mean_validation2,mean_test\n")
                for size, k, mean in rows:
                    fh.write(f"{size},{k},{cfg.classifier},"
                             f"{_csv_num(mean['validation1'])},"
                             f"{_csv_num(mean['validation2'])},"
                             f"{_csv_num(mean['test'])}\n")
        return 0

    reports = corpus_mod.run_trials(corp, cfg, protocol=args.protocol,
                                    table=table)
    if args.out:
        corpus_mod.write_trials_jsonl(reports, args.out)
    mean = corpus_mod.summarize_trials(reports)
    print(json.dumps({"trials": len(reports), "mean_accuracy": mean},
                     sort_keys=True))
    return 0


def _csv_num(v) -> str:
    return "" if v is None else repr(v)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = _Parser(prog="textcgr",
                     description="chaos-game text images and attribution")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("encode", parents=[common],
                       help="write a document's base-4 digits")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("render", parents=[common],
                       help="write an FCGR image (PGM, or PNG via --png)")
    p.add_argument("input")
    p.add_argument("out", help="output file, or directory when chunking")
    p.add_argument("--png", action="store_true")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("train", parents=[common], help="fit a classifier")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="model file (.npz)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common],
                       help="accuracy and top-k tables on a labeled corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("attribute", parents=[common],
                       help="per-document decisions (CSV/JSON reports)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="CSV report path")
    p.add_argument("--json", help="JSON report path")
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("selfsim", parents=[common],
                       help="nearest-neighbor self-similarity experiment")
    p.add_argument("--corpus", required=True)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(func=cmd_selfsim)

    p = sub.add_parser("fingerprint", parents=[common],
                       help="emit signature vectors (and neighbors with --query)")
    p.add_argument("--model", required=True)
    p.add_argument("inputs", nargs="+")
    p.add_argument("--query", action="store_true")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fingerprint)

    p = sub.add_parser("trials", parents=[common],
                       help="seeded multi-trial experiments and sweeps")
    p.add_argument("--corpus", required=True)
    p.add_argument("--protocol", choices=("federalist", "holdout"),
                   default="federalist")
    p.add_argument("--out", help="JSONL report (or CSV grid when sweeping)")
    p.add_argument("--sweep-chunks", metavar="LO:HI:STEP")
    p.add_argument("--sweep-k", metavar="K1,K2,...")
    p.set_defaults(func=cmd_trials)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
