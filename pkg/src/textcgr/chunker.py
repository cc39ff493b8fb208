"""Split encoded documents into fixed-length chunks with label bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass

from .alphabet import Base4Sequence
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class ChunkRecord:
    """One fixed-length slice of a document's encoding plus its provenance."""

    seq: Base4Sequence
    doc_id: str
    label: str
    chunk_index: int


def chunk(doc: Base4Sequence, size: int, label: str) -> list:
    """Non-overlapping chunks of exactly `size` digits; the tail is discarded.

    A document shorter than `size` yields no chunks at all.
    """
    if size < 1:
        raise ConfigError(f"chunk size must be >= 1, got {size}")
    count = len(doc) // size
    return [
        ChunkRecord(
            seq=doc.slice(i * size, (i + 1) * size),
            doc_id=doc.source_doc,
            label=label,
            chunk_index=i,
        )
        for i in range(count)
    ]


def whole_document(doc: Base4Sequence, label: str, order: int = 1) -> ChunkRecord:
    """Single chunk covering the entire encoding (for unchunked corpora)."""
    if len(doc) < order:
        raise DataError(
            f"{doc.source_doc or 'document'}: {len(doc)} digits cannot form "
            f"any {order}-mer"
        )
    return ChunkRecord(seq=doc, doc_id=doc.source_doc, label=label, chunk_index=0)
