import string

import numpy as np
import pytest

from textcgr.alphabet import (Base4Sequence, EquivalenceTable, digit_stats,
                              encode, format_stats, normalize_text)
from textcgr.errors import ConfigError

TABLE = EquivalenceTable.default()

PINNED_CODES = {
    "b": "00", "d": "00", "a": "01", "e": "22", "t": "33", "o": "23",
    " ": "10", "\t": "10", "\n": "10", "i": "02", "y": "02", "l": "11",
    "m": "13", "n": "13", "p": "20", "r": "21", "s": "31", "u": "30",
    "v": "30", "w": "30", "c": "12", "k": "12", "q": "12", "x": "12",
    "z": "12", "0": "32", "9": "32", ",": "32", ".": "32", "(": "32",
}


def code_str(ch):
    cid = TABLE.class_of[ch]
    return f"{cid // 4}{cid % 4}"


def test_pinned_table_codes():
    for ch, code in PINNED_CODES.items():
        assert code_str(ch) == code, ch


def test_sixteen_classes_cover_all_code_pairs():
    assert len(TABLE.members) == 16
    codes = {EquivalenceTable.code_of(cid) for cid in range(16)}
    assert codes == {(a, b) for a in range(4) for b in range(4)}


def test_every_letter_digit_punctuation_and_whitespace_maps():
    domain = string.ascii_lowercase + string.digits + " \t\n\r" + "()-+[]?!:;,."
    for ch in domain:
        assert not TABLE.is_omitted(ch), ch
    # encoding the whole domain drops nothing
    assert len(encode(domain, TABLE)) == 2 * len(domain)


def test_whitespace_shares_one_class_and_digits_join_punctuation():
    ws_ids = {TABLE.class_of[c] for c in " \t\n\r"}
    assert len(ws_ids) == 1
    punct_ids = {TABLE.class_of[c] for c in string.digits + "()-+[]?!:;,."}
    assert len(punct_ids) == 1


def test_normalize_lowercases():
    assert normalize_text("The") == "the"


def test_normalize_strips_diacritics():
    assert normalize_text("São", strip_diacritics=True) == "sao"
    assert normalize_text("ação Çédille", strip_diacritics=True) == "acao cedille"
    # uppercase accents lowercase first, then fold
    assert normalize_text("É", strip_diacritics=True) == "e"


def test_normalize_empty_and_passthrough():
    assert normalize_text("") == ""
    assert normalize_text("naïve 数", strip_diacritics=False) == "naïve 数"
    assert normalize_text("naïve 数", strip_diacritics=True) == "naive 数"


def test_encode_examples():
    assert encode("at", TABLE).digits.tolist() == [0, 1, 3, 3]
    assert encode("e o", TABLE).digits.tolist() == [2, 2, 1, 0, 2, 3]
    assert encode("@@@", TABLE).digits.tolist() == []


def test_apostrophes_and_quotes_are_omitted():
    assert len(encode("don't \"quote\"", TABLE)) == 2 * len("dont quote")


def test_crlf_both_map_to_whitespace():
    assert encode("\r\n", TABLE).digits.tolist() == [1, 0, 1, 0]


def test_round_trip_cardinality(rng):
    pool = list("the quick brown fox, 42! @#$%^&*ß—\u00e9\n\t")
    for _ in range(50):
        text = "".join(rng.choice(pool, size=rng.integers(0, 200)))
        kept = sum(1 for c in text if not TABLE.is_omitted(c))
        assert len(encode(text, TABLE)) == 2 * kept


def test_encoding_is_concatenative(rng):
    pool = list("abcdefgh ij.?!9")
    for _ in range(25):
        s1 = "".join(rng.choice(pool, size=rng.integers(0, 60)))
        s2 = "".join(rng.choice(pool, size=rng.integers(0, 60)))
        joined = encode(s1 + s2, TABLE).digits
        parts = np.concatenate([encode(s1, TABLE).digits,
                                encode(s2, TABLE).digits])
        assert np.array_equal(joined, parts)


def test_digit_stats_examples():
    s = digit_stats(encode("aa", TABLE))
    assert s.class_counts[TABLE.class_of["a"]] == 2
    assert s.leading.tolist() == [2, 0, 0, 0]

    s = digit_stats(encode("at", TABLE))
    assert s.leading.tolist() == [1, 0, 0, 1]
    assert s.trailing.tolist() == [0, 1, 0, 1]

    empty = digit_stats(encode("", TABLE))
    assert empty.class_counts.sum() == 0
    assert empty.num_chars == 0


def test_digit_stats_marginals_consistent(rng):
    pool = list("once upon a time, 7 dwarfs!")
    for _ in range(20):
        text = "".join(rng.choice(pool, size=rng.integers(1, 300)))
        s = digit_stats(encode(text, TABLE))
        assert s.class_counts.sum() == s.leading.sum() == s.trailing.sum()


def test_format_stats_mentions_counts():
    out = format_stats(digit_stats(encode("at", TABLE)), TABLE)
    assert "encoded characters: 2" in out


def test_table_hash_is_stable_and_member_sensitive():
    again = EquivalenceTable.default()
    assert TABLE.table_hash == again.table_hash
    moved = [(m, f"{cid // 4}{cid % 4}") for cid, m in enumerate(TABLE.members)]
    moved[1], moved[2] = (moved[2][0], "01"), (moved[1][0], "02")
    assert EquivalenceTable.from_classes(moved).table_hash != TABLE.table_hash


def test_table_override_file(tmp_path):
    lines = []
    for cid, members in enumerate(TABLE.members):
        shown = (members.replace("\\", "\\\\").replace(" ", "\\s")
                 .replace("\t", "\\t").replace("\n", "\\n")
                 .replace("\r", "\\r"))
        lines.append(f"{shown} {cid // 4}{cid % 4}")
    # swap the codes of {a} and {i,y}
    lines[1] = lines[1].rsplit(" ", 1)[0] + " 02"
    lines[2] = lines[2].rsplit(" ", 1)[0] + " 01"
    path = tmp_path / "table.txt"
    path.write_text("# custom\n" + "\n".join(lines) + "\n", encoding="utf-8")
    table = EquivalenceTable.from_file(path)
    assert encode("a", table).digits.tolist() == [0, 2]
    assert encode("i", table).digits.tolist() == [0, 1]
    assert encode(" ", table).digits.tolist() == [1, 0]


def test_table_validation_errors(tmp_path):
    with pytest.raises(ConfigError):
        EquivalenceTable.from_classes([("a", "01")])
    dup = [(m, f"{c // 4}{c % 4}") for c, m in enumerate(TABLE.members)]
    dup[0] = ("ba", "00")  # 'a' now in two classes
    with pytest.raises(ConfigError):
        EquivalenceTable.from_classes(dup)
    bad = tmp_path / "bad.txt"
    bad.write_text("abc 07\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        EquivalenceTable.from_file(bad)


def test_sequence_slice_tracks_offset():
    seq = encode("attention", TABLE, source_doc="d1")
    part = seq.slice(4, 10)
    assert part.offset == 4 and part.source_doc == "d1"
    assert len(part) == 6
    assert isinstance(part, Base4Sequence)
