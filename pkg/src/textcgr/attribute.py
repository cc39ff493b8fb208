"""Document-level attribution: aggregate per-chunk scores, rank, and
optionally reject with a none-of-the-above decision."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

from .classify import ScoreVector
from .errors import ConfigError, DataError

NOA = "NoA"

DEFAULT_MIN_PROB = 0.3
DEFAULT_MARGIN_FACTOR = 1.5


@dataclass(frozen=True)
class AttributionResult:
    doc_id: str
    aggregated: ScoreVector
    ranked: tuple
    decision: str
    num_chunks: int
    tie_warning: bool = False


def aggregate(doc_id: str, chunk_scores) -> AttributionResult:
    """Sum scores over a document's chunks, renormalize, pick the argmax.

    Ties go to the lowest class id and set `tie_warning`.
    """
    chunk_scores = list(chunk_scores)
    if not chunk_scores:
        raise DataError(f"{doc_id}: no chunk scores to aggregate")
    class_ids = chunk_scores[0].class_ids
    for sv in chunk_scores[1:]:
        if sv.class_ids != class_ids:
            raise DataError(f"{doc_id}: chunk score class sets differ")
    total = np.sum([sv.scores for sv in chunk_scores], axis=0)
    total = total / total.sum()
    best = int(np.argmax(total))
    tie = bool(np.sum(total == total[best]) > 1)
    agg = ScoreVector(total, class_ids)
    return AttributionResult(doc_id=doc_id, aggregated=agg,
                             ranked=agg.ranked(), decision=class_ids[best],
                             num_chunks=len(chunk_scores), tie_warning=tie)


def apply_noa(result: AttributionResult,
              min_prob: float = DEFAULT_MIN_PROB,
              margin_factor: float = DEFAULT_MARGIN_FACTOR) -> AttributionResult:
    """Keep the top label only if it is probable enough and clear of the
    runner-up; otherwise decide none-of-the-above."""
    scores = np.sort(result.aggregated.scores)[::-1]
    top = scores[0]
    second = scores[1] if scores.size > 1 else 0.0
    if top >= min_prob and top >= margin_factor * second:
        decision = result.ranked[0]
    else:
        decision = NOA
    return replace(result, decision=decision)


def top_k(result: AttributionResult, k: int) -> tuple:
    """First k labels of the ranking."""
    if k > len(result.ranked):
        raise ConfigError(f"k={k} exceeds the {len(result.ranked)} classes")
    return result.ranked[:k]


def write_report_csv(results, path) -> None:
    """doc_id, decision, num_chunks, then one score column per class."""
    results = list(results)
    if not results:
        raise DataError("no attribution results to report")
    class_ids = results[0].aggregated.class_ids
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "decision", "num_chunks",
                         *[f"score_{c}" for c in class_ids]])
        for r in sorted(results, key=lambda r: r.doc_id):
            writer.writerow([r.doc_id, r.decision, r.num_chunks,
                             *[repr(float(s)) for s in r.aggregated.scores]])


def report_record(r: AttributionResult) -> dict:
    return {
        "doc_id": r.doc_id,
        "decision": r.decision,
        "num_chunks": r.num_chunks,
        "scores": r.aggregated.as_dict(),
        "ranked": list(r.ranked),
        "tie_warning": r.tie_warning,
    }


def write_report_json(results, path) -> None:
    records = [report_record(r) for r in sorted(results, key=lambda r: r.doc_id)]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(records, fh, sort_keys=True, indent=2)
        fh.write("\n")
