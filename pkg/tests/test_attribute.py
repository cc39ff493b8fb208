import csv
import json

import numpy as np
import pytest

from textcgr.attribute import (NOA, aggregate, apply_noa, top_k,
                               write_report_csv, write_report_json)
from textcgr.classify import ScoreVector
from textcgr.errors import ConfigError, DataError


def sv(*scores, classes=None):
    scores = np.asarray(scores, dtype=float)
    classes = tuple(classes or [chr(ord("A") + i) for i in range(len(scores))])
    return ScoreVector(scores, classes)


def test_aggregate_arithmetic():
    res = aggregate("doc", [sv(0.6, 0.4), sv(0.2, 0.8)])
    assert np.allclose(res.aggregated.scores, [0.4, 0.6])
    assert res.decision == "B"
    assert res.num_chunks == 2
    assert not res.tie_warning


def test_single_chunk_passthrough():
    res = aggregate("doc", [sv(0.3, 0.7)])
    assert np.allclose(res.aggregated.scores, [0.3, 0.7])


def test_aggregate_is_order_independent(rng):
    chunks = [sv(*rng.dirichlet(np.ones(4))) for _ in range(6)]
    a = aggregate("doc", chunks)
    b = aggregate("doc", chunks[::-1])
    assert np.allclose(a.aggregated.scores, b.aggregated.scores)
    assert a.decision == b.decision and a.ranked == b.ranked


def test_decision_is_scale_invariant(rng):
    # unnormalized chunk scores scaled by any positive constant rank the same
    chunks = [sv(*rng.random(3)) for _ in range(4)]
    scaled = [ScoreVector(c.scores * 37.5, c.class_ids) for c in chunks]
    assert aggregate("d", chunks).ranked == aggregate("d", scaled).ranked
    assert aggregate("d", chunks).decision == aggregate("d", scaled).decision


def test_tie_breaks_to_lowest_class_id():
    res = aggregate("doc", [sv(0.5, 0.5)])
    assert res.decision == "A"
    assert res.tie_warning


def test_aggregate_errors():
    with pytest.raises(DataError):
        aggregate("doc", [])
    with pytest.raises(DataError):
        aggregate("doc", [sv(1.0, 0.0), sv(0.5, 0.5, classes=("X", "Y"))])


def test_noa_thresholds():
    keep = apply_noa(aggregate("d", [sv(0.60, 0.30, 0.10)]))
    assert keep.decision == "A"  # 0.60 >= 0.3 and 0.60 >= 1.5 * 0.30

    margin_fail = apply_noa(aggregate("d", [sv(0.35, 0.30, 0.20, 0.15)]))
    assert margin_fail.decision == NOA  # 0.35 < 1.5 * 0.30

    # margin is satisfied (0.29 >= 1.5 * 0.19) so only the 0.3 floor rejects
    low_top = apply_noa(aggregate("d", [sv(0.29, 0.19, 0.18, 0.17, 0.17)]))
    assert low_top.decision == NOA


def test_noa_boundary_is_non_strict():
    res = apply_noa(aggregate("d", [sv(0.30, 0.20, 0.50)]))
    # top is 0.50 >= 0.3 and 0.50 >= 1.5*0.30 fails (0.45 <= 0.5 holds): keep
    assert res.decision == "C"
    exact = apply_noa(aggregate("d", [sv(0.45, 0.30, 0.25)]))
    assert exact.decision == "A"  # 0.45 == 1.5 * 0.30 exactly, "at least"


def test_degenerate_thresholds_never_reject(rng):
    for _ in range(50):
        res = aggregate("d", [sv(*rng.dirichlet(np.ones(5)))])
        assert apply_noa(res, min_prob=0.0, margin_factor=1.0).decision != NOA


def test_noa_single_class():
    res = apply_noa(aggregate("d", [sv(1.0, classes=("only",))]))
    assert res.decision == "only"


def test_top_k():
    res = aggregate("d", [sv(0.1, 0.5, 0.4)])
    assert top_k(res, 1) == ("B",)
    assert top_k(res, 3) == ("B", "C", "A")
    with pytest.raises(ConfigError):
        top_k(res, 4)


def test_csv_report(tmp_path):
    results = [aggregate("doc2", [sv(0.2, 0.8)]),
               aggregate("doc1", [sv(0.9, 0.1)])]
    path = tmp_path / "report.csv"
    write_report_csv(results, path)
    rows = list(csv.DictReader(path.open()))
    assert [r["doc_id"] for r in rows] == ["doc1", "doc2"]
    assert rows[0]["decision"] == "A"
    assert float(rows[1]["score_B"]) == pytest.approx(0.8)
    assert rows[0]["num_chunks"] == "1"


def test_json_report(tmp_path):
    results = [apply_noa(aggregate("q", [sv(0.52, 0.48)]))]
    path = tmp_path / "report.json"
    write_report_json(results, path)
    records = json.loads(path.read_text())
    assert records[0]["decision"] == NOA
    assert records[0]["ranked"] == ["A", "B"]
    assert records[0]["scores"]["A"] == pytest.approx(0.52)
