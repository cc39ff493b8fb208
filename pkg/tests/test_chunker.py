import numpy as np
import pytest

from textcgr.alphabet import Base4Sequence
from textcgr.chunker import chunk, whole_document
from textcgr.errors import ConfigError, DataError


def seq_of(n, doc="doc"):
    return Base4Sequence(np.arange(n, dtype=np.int64) % 4, source_doc=doc)


def test_floor_division_and_tail_discard():
    records = chunk(seq_of(20000), 8500, label="x")
    assert len(records) == 2
    assert [r.seq.offset for r in records] == [0, 8500]
    assert all(len(r.seq) == 8500 for r in records)


def test_below_threshold_yields_nothing():
    assert chunk(seq_of(8499), 8500, label="x") == []


def test_zero_size_is_a_config_error():
    with pytest.raises(ConfigError):
        chunk(seq_of(10), 0, label="x")


def test_chunks_partition_a_prefix(rng):
    for _ in range(25):
        n = int(rng.integers(0, 5000))
        size = int(rng.integers(1, 700))
        doc = seq_of(n)
        records = chunk(doc, size, label="a")
        assert len(records) == n // size
        for i, r in enumerate(records):
            assert r.chunk_index == i
            assert r.seq.offset == i * size
            assert np.array_equal(r.seq.digits,
                                  doc.digits[i * size : (i + 1) * size])


def test_labels_and_doc_ids_propagate():
    records = chunk(seq_of(30, doc="author/file.txt"), 10, label="author")
    assert all(r.doc_id == "author/file.txt" for r in records)
    assert all(r.label == "author" for r in records)


def test_whole_document():
    rec = whole_document(seq_of(700), label="a", order=7)
    assert rec.chunk_index == 0
    assert len(rec.seq) == 700


def test_whole_document_too_short():
    with pytest.raises(DataError):
        whole_document(seq_of(5), label="a", order=7)
