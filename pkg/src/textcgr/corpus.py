"""Corpus loading, train/validation/test split protocols, and the
multi-trial experiment driver."""

from __future__ import annotations

import csv
import hashlib
import json
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import attribute as attribute_mod
from .alphabet import EquivalenceTable, encode, normalize_text
from .cgr import fcgr, feature_vector
from .chunker import chunk, whole_document
from .classify import (LabeledImage, predict, train_ftt_pca, train_lr,
                       train_svm)
from .config import RunConfig
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class Document:
    doc_id: str
    author: str
    text: str
    genre: str | None = None

    def label(self, mode: str = "author") -> str:
        if mode == "author":
            return self.author
        if self.genre is None:
            raise DataError(f"{self.doc_id}: no genre recorded")
        return self.genre


@dataclass
class Corpus:
    documents: list
    provenance: str = ""
    dedup: bool = False

    def __len__(self):
        return len(self.documents)

    def authors(self) -> tuple:
        return tuple(sorted({d.author for d in self.documents}))

    def by_author(self) -> dict:
        out = {}
        for doc in sorted(self.documents, key=lambda d: d.doc_id):
            out.setdefault(doc.author, []).append(doc)
        return out


def strip_header(text: str, n_chars: int = 50) -> str:
    """Drop the first n characters (boilerplate headers, bylines)."""
    if n_chars < 0:
        raise ConfigError(f"header strip length must be >= 0, got {n_chars}")
    if n_chars and len(text) < n_chars:
        warnings.warn(f"text shorter than the {n_chars}-character header strip")
        return ""
    return text[n_chars:]


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 at byte offset {exc.start}")
    except OSError as exc:
        raise DataError(f"{path}: {exc}")


def load_corpus(root, layout: str = "auto", dedup: bool = False,
                header_strip: int = 0) -> Corpus:
    """Load labeled documents from a directory tree or a manifest CSV.

    Tree layout: one subdirectory per author, one UTF-8 file per document.
    Manifest layout: CSV with columns path,label and optional genre; paths
    are relative to the CSV's directory.
    """
    root = Path(root)
    if layout == "auto":
        layout = "manifest" if root.is_file() else "tree"
    docs = []
    if layout == "manifest":
        with open(root, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            cols = reader.fieldnames or []
            for required in ("path", "label"):
                if required not in cols:
                    raise DataError(f"{root}: manifest lacks column {required!r}")
            for row in reader:
                path = root.parent / row["path"]
                docs.append(Document(doc_id=row["path"], author=row["label"],
                                     genre=(row.get("genre") or None),
                                     text=_read_text(path)))
    elif layout == "tree":
        if not root.is_dir():
            raise DataError(f"{root}: not a directory")
        for author_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            for f in sorted(p for p in author_dir.rglob("*") if p.is_file()):
                docs.append(Document(doc_id=f"{author_dir.name}/{f.name}",
                                     author=author_dir.name,
                                     text=_read_text(f)))
    else:
        raise ConfigError(f"layout must be 'auto', 'tree' or 'manifest', "
                          f"got {layout!r}")

    seen_ids = set()
    for doc in docs:
        if doc.doc_id in seen_ids:
            raise DataError(f"duplicate doc_id {doc.doc_id!r}")
        seen_ids.add(doc.doc_id)

    if dedup:
        by_text = {}
        for doc in sorted(docs, key=lambda d: d.doc_id):
            by_text.setdefault(doc.text, doc)
        removed = len(docs) - len(by_text)
        if removed:
            warnings.warn(f"removed {removed} duplicate document(s)")
        docs = sorted(by_text.values(), key=lambda d: d.doc_id)

    if header_strip:
        docs = [Document(d.doc_id, d.author, strip_header(d.text, header_strip),
                         d.genre) for d in docs]

    kept = []
    for doc in docs:
        if doc.text.strip():
            kept.append(doc)
        else:
            warnings.warn(f"{doc.doc_id}: empty after loading, skipped")
    if not kept:
        raise DataError(f"{root}: no usable documents")
    return Corpus(documents=kept, provenance=str(root), dedup=dedup)


def federalist_categories() -> dict:
    """Essay number -> category from the shipped label manifest."""
    out = {}
    text = resources.files("textcgr").joinpath(
        "data/federalist_labels.csv").read_text(encoding="utf-8")
    for row in csv.DictReader(text.splitlines()):
        out[int(row["essay"])] = row["category"]
    return out


# ---------------------------------------------------------------------------
# image building

@dataclass
class ImageSet:
    """All per-chunk images of a corpus plus the bookkeeping around them."""

    images: list                          # LabeledImage, corpus order
    chunk_counts: dict                    # doc_id -> number of chunks
    doc_labels: dict                      # doc_id -> label
    doc_authors: dict                     # doc_id -> author (split grouping)

    def by_doc(self, doc_id: str) -> list:
        return [img for img in self.images if img.doc_id == doc_id]

    def index(self) -> dict:
        return {(img.doc_id, img.chunk_index): img for img in self.images}


def build_images(corpus: Corpus, config: RunConfig,
                 table: EquivalenceTable | None = None) -> ImageSet:
    """Encode, chunk, and rasterize every document of a corpus."""
    table = table or EquivalenceTable.default()
    images, counts, labels, authors = [], {}, {}, {}
    for doc in sorted(corpus.documents, key=lambda d: d.doc_id):
        label = doc.label(config.label_mode)
        seq = encode(normalize_text(doc.text, config.strip_diacritics),
                     table, source_doc=doc.doc_id)
        if config.chunk_size:
            records = chunk(seq, config.chunk_size, label)
        else:
            if len(seq) < config.k:
                warnings.warn(f"{doc.doc_id}: too short for order {config.k}, "
                              "skipped")
                records = []
            else:
                records = [whole_document(seq, label, config.k)]
        counts[doc.doc_id] = len(records)
        labels[doc.doc_id] = label
        authors[doc.doc_id] = doc.author
        for rec in records:
            images.append(LabeledImage(
                features=feature_vector(fcgr(rec.seq, config.k)),
                label=rec.label, doc_id=rec.doc_id,
                chunk_index=rec.chunk_index))
    return ImageSet(images=images, chunk_counts=counts, doc_labels=labels,
                    doc_authors=authors)


# ---------------------------------------------------------------------------
# split protocols

@dataclass(frozen=True)
class SplitPlan:
    """Chunk-level train/validation membership plus test documents."""

    train: tuple          # (doc_id, chunk_index) pairs
    validation1: tuple    # final chunk of each training document
    validation2: tuple    # all chunks of held-out documents
    test: tuple           # doc_ids judged by aggregated chunk scores
    seed: int = 0
    trial_index: int = 0

    def sizes(self) -> dict:
        return {"train": len(self.train), "validation1": len(self.validation1),
                "validation2": len(self.validation2), "test": len(self.test)}


def _all_chunks(doc_id: str, count: int) -> list:
    return [(doc_id, i) for i in range(count)]


def federalist_split(corpus: Corpus, chunk_counts: dict, seed: int,
                     trial_index: int = 0, held_out_madison: int = 3,
                     held_out_hamilton: int = 8) -> SplitPlan:
    """Disputed essays are the test set; a seeded selection of known essays
    is withheld as validation 2; the final chunk of every remaining known
    essay is validation 1 and its other chunks train."""
    groups = {}
    for doc in corpus.documents:
        groups.setdefault(doc.author.lower(), []).append(doc.doc_id)
    for required in ("hamilton", "madison", "disputed"):
        if required not in groups:
            raise DataError(
                f"corpus lacks {required!r} documents (found {sorted(groups)})")
    rng = np.random.default_rng(seed)
    held = []
    for author, want in (("madison", held_out_madison),
                         ("hamilton", held_out_hamilton)):
        pool = sorted(groups[author])
        if len(pool) < want:
            raise DataError(f"cannot hold out {want} of {len(pool)} "
                            f"{author} documents")
        held.extend(pool[i] for i in rng.choice(len(pool), want, replace=False))
    held_set = set(held)

    train, val1, val2 = [], [], []
    for author in ("hamilton", "madison"):
        for doc_id in sorted(groups[author]):
            n = chunk_counts.get(doc_id, 0)
            if n == 0:
                warnings.warn(f"{doc_id}: no usable chunks")
                continue
            if doc_id in held_set:
                val2.extend(_all_chunks(doc_id, n))
            else:
                train.extend(_all_chunks(doc_id, n - 1))
                val1.append((doc_id, n - 1))
    return SplitPlan(train=tuple(train), validation1=tuple(val1),
                     validation2=tuple(val2),
                     test=tuple(sorted(groups["disputed"])),
                     seed=seed, trial_index=trial_index)


def holdout_split(corpus: Corpus, chunk_counts: dict, seed: int,
                  trial_index: int = 0, val2_fraction: float = 0.2) -> SplitPlan:
    """Generic seeded protocol: a per-author slice of documents becomes
    validation 2; the rest contribute their final chunk to validation 1 and
    the remainder to training. No test documents."""
    rng = np.random.default_rng(seed)
    train, val1, val2 = [], [], []
    for author, docs in sorted(corpus.by_author().items()):
        ids = sorted(d.doc_id for d in docs)
        n_held = int(round(val2_fraction * len(ids))) if len(ids) >= 2 else 0
        held = {ids[i] for i in rng.choice(len(ids), n_held, replace=False)}
        for doc_id in ids:
            n = chunk_counts.get(doc_id, 0)
            if n == 0:
                continue
            if doc_id in held:
                val2.extend(_all_chunks(doc_id, n))
            else:
                train.extend(_all_chunks(doc_id, n - 1))
                val1.append((doc_id, n - 1))
    return SplitPlan(train=tuple(train), validation1=tuple(val1),
                     validation2=tuple(val2), test=(),
                     seed=seed, trial_index=trial_index)


def fixed_split(corpus: Corpus, pattern: str = "blocks-of-five",
                chunk_counts: dict | None = None) -> SplitPlan:
    """Deterministic doc-level splits.

    blocks-of-five: per author, in doc_id order, withhold the 2nd and 4th
    document of each block of five for testing, except the sixth block where
    the 2nd and 3rd are withheld. half: first half trains, second half tests.
    """
    if pattern not in ("blocks-of-five", "half"):
        raise ConfigError(f"unknown split pattern {pattern!r}")
    train_docs, test_docs = [], []
    for author, docs in sorted(corpus.by_author().items()):
        ids = sorted(d.doc_id for d in docs)
        if not ids:
            warnings.warn(f"{author}: no documents")
            continue
        if pattern == "half":
            cut = (len(ids) + 1) // 2
            train_docs.extend(ids[:cut])
            test_docs.extend(ids[cut:])
            continue
        if len(ids) < 30:
            warnings.warn(f"{author}: only {len(ids)} documents for the "
                          "block-of-five pattern; assigning best-effort")
        for start in range(0, len(ids), 5):
            block = ids[start : start + 5]
            withheld = {1, 2} if start // 5 == 5 else {1, 3}
            for pos, doc_id in enumerate(block):
                (test_docs if pos in withheld else train_docs).append(doc_id)

    if chunk_counts is None:
        chunk_counts = {d: 1 for d in train_docs}
    train = []
    for doc_id in sorted(train_docs):
        train.extend(_all_chunks(doc_id, chunk_counts.get(doc_id, 1)))
    return SplitPlan(train=tuple(train), validation1=(), validation2=(),
                     test=tuple(sorted(test_docs)))


# ---------------------------------------------------------------------------
# trials

def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Stable per-trial seed: first 8 bytes of sha256("master:trial")."""
    digest = hashlib.sha256(f"{master_seed}:{trial_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def train_classifier(config: RunConfig, images: list):
    if config.classifier == "lr":
        return train_lr(images, l2_strength=config.lr_l2, tol=config.lr_tol,
                        max_iter=config.lr_max_iter)
    if config.classifier == "svm":
        return train_svm(images, c_reg=config.svm_c)
    return train_ftt_pca(images, freq_side=config.effective_ftt_freq,
                         n_components=config.ftt_components,
                         kind=config.ftt_kind,
                         num_neighbors=config.ftt_neighbors)


def chunk_accuracy(model, images: list) -> float | None:
    if not images:
        return None
    hits = sum(predict(model, img.features).top_label() == img.label
               for img in images)
    return hits / len(images)


def attribute_documents(model, image_set: ImageSet, doc_ids,
                        config: RunConfig) -> dict:
    """Aggregate chunk scores per document; returns doc_id -> AttributionResult."""
    out = {}
    for doc_id in doc_ids:
        imgs = image_set.by_doc(doc_id)
        if not imgs:
            warnings.warn(f"{doc_id}: no chunks to attribute")
            continue
        result = attribute_mod.aggregate(
            doc_id, [predict(model, img.features) for img in imgs])
        if config.noa:
            result = attribute_mod.apply_noa(result, config.min_prob,
                                             config.margin_factor)
        out[doc_id] = result
    return out


def run_trials(corpus: Corpus, config: RunConfig, num_trials: int | None = None,
               protocol: str = "federalist",
               table: EquivalenceTable | None = None,
               test_truth: str | None = None) -> list:
    """Run the train/validate/attribute pipeline across seeded trials.

    Images are computed once; only the split membership varies per trial.
    For the federalist protocol the test ground truth defaults to the
    scholarly consensus that every disputed essay is Madison's.
    """
    num_trials = config.trials if num_trials is None else num_trials
    image_set = build_images(corpus, config, table)
    lookup = image_set.index()
    if protocol == "federalist" and test_truth is None:
        test_truth = "madison"

    reports = []
    for trial in range(num_trials):
        seed = derive_trial_seed(config.seed, trial)
        if protocol == "federalist":
            plan = federalist_split(corpus, image_set.chunk_counts, seed, trial)
        elif protocol == "holdout":
            plan = holdout_split(corpus, image_set.chunk_counts, seed, trial)
        else:
            raise ConfigError(f"unknown protocol {protocol!r}")

        model = train_classifier(config, [lookup[key] for key in plan.train])
        val1_acc = chunk_accuracy(model, [lookup[k] for k in plan.validation1])
        val2_acc = chunk_accuracy(model, [lookup[k] for k in plan.validation2])

        decisions = attribute_documents(model, image_set, plan.test, config)
        test_acc = None
        if decisions:
            truth = {d: (test_truth or image_set.doc_labels[d])
                     for d in decisions}
            test_acc = (sum(r.decision == truth[d]
                            for d, r in decisions.items()) / len(decisions))

        reports.append({
            "trial": trial,
            "seed": seed,
            "config": config.echo(),
            "protocol": protocol,
            "split_sizes": plan.sizes(),
            "accuracy": {"validation1": val1_acc, "validation2": val2_acc,
                         "test": test_acc},
            "decisions": {d: r.decision for d, r in sorted(decisions.items())},
        })
    return reports


def summarize_trials(reports: list) -> dict:
    """Mean accuracy per set over trials (ignoring absent sets)."""
    out = {}
    for key in ("validation1", "validation2", "test"):
        vals = [r["accuracy"][key] for r in reports
                if r["accuracy"][key] is not None]
        out[key] = float(np.mean(vals)) if vals else None
    return out


def write_trials_jsonl(reports: list, path) -> None:
    """One JSON object per line, key-sorted so reruns are byte-identical."""
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(json.dumps(report, sort_keys=True) + "\n")
