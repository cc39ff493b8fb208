"""Text normalization and base-4 encoding over 16 character equivalence classes.

Characters are grouped into 16 classes, each tagged with a distinct pair of
base-4 digits, so any text becomes a sequence over the alphabet {0,1,2,3}.
Characters outside every class are dropped.
"""

from __future__ import annotations

import hashlib
import re
import unicodedata
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# Default classes: one line per class, members then the two-digit code.
# Rare letters share a class when their sounds or typical usage are close
# (f rides with g/h/j: "gh"/"ph" spellings), common letters stand alone,
# whitespace is one class, digits and listed punctuation another.
_DEFAULT_CLASSES = (
    ("bd", "00"),
    ("a", "01"),
    ("iy", "02"),
    ("fghj", "03"),
    (" \t\n\r", "10"),
    ("l", "11"),
    ("ckqxz", "12"),
    ("mn", "13"),
    ("p", "20"),
    ("r", "21"),
    ("e", "22"),
    ("o", "23"),
    ("uvw", "30"),
    ("s", "31"),
    ("()-+[]0123456789?!:;,.", "32"),
    ("t", "33"),
)

_ESCAPES = {"\\s": " ", "\\t": "\t", "\\n": "\n", "\\r": "\r", "\\\\": "\\"}


def _build_diacritic_map():
    # Latin-1 Supplement and Latin Extended-A letters whose NFD form starts
    # with a plain ASCII letter, plus the handful with no decomposition.
    table = {}
    for cp in range(0xC0, 0x180):
        ch = chr(cp)
        base = unicodedata.normalize("NFD", ch)[0]
        if base != ch and "a" <= base.lower() <= "z":
            table[cp] = base
    for src, dst in {"ø": "o", "đ": "d", "ħ": "h", "ı": "i", "ł": "l",
                     "ŋ": "n", "ŧ": "t"}.items():
        table[ord(src)] = dst
        table[ord(src.upper())] = dst.upper()
    return table


_DIACRITIC_MAP = _build_diacritic_map()


@dataclass(frozen=True)
class Base4Sequence:
    """A document (or slice of one) as digits in {0,1,2,3}."""

    digits: np.ndarray
    source_doc: str = ""
    offset: int = 0

    def __len__(self):
        return int(self.digits.shape[0])

    def slice(self, start: int, stop: int) -> "Base4Sequence":
        return Base4Sequence(self.digits[start:stop], self.source_doc,
                             self.offset + start)


@dataclass(frozen=True)
class EquivalenceTable:
    """Immutable character -> base-4 digit-pair table.

    Class ids are 0..15; class id ``4*hi + lo`` carries the code ``(hi, lo)``,
    so the id <-> code map is fixed and only the membership varies between
    tables.
    """

    class_of: dict = field(repr=False)
    members: tuple

    def __post_init__(self):
        if len(self.members) != 16:
            raise ConfigError(f"expected 16 classes, got {len(self.members)}")
        seen = {}
        for cid, chars in enumerate(self.members):
            for ch in chars:
                if ch in seen:
                    raise ConfigError(f"character {ch!r} appears in two classes")
                seen[ch] = cid

    @staticmethod
    def code_of(class_id: int) -> tuple:
        return divmod(class_id, 4)

    def class_members(self, class_id: int) -> str:
        return self.members[class_id]

    def is_omitted(self, ch: str) -> bool:
        return ch not in self.class_of

    @property
    def domain(self) -> str:
        return "".join(self.members)

    @property
    def table_hash(self) -> str:
        lines = [f"{''.join(sorted(chars))}:{cid:02d}"
                 for cid, chars in enumerate(self.members)]
        return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()

    @classmethod
    def from_classes(cls, classes) -> "EquivalenceTable":
        """Build a table from (members, two-digit-code) pairs."""
        if len(classes) != 16:
            raise ConfigError(f"expected 16 classes, got {len(classes)}")
        members = [None] * 16
        for chars, code in classes:
            if len(code) != 2 or not set(code) <= set("0123"):
                raise ConfigError(f"bad base-4 code {code!r}")
            cid = int(code[0]) * 4 + int(code[1])
            if members[cid] is not None:
                raise ConfigError(f"duplicate code {code}")
            members[cid] = chars
        class_of = {}
        for cid, chars in enumerate(members):
            for ch in chars:
                class_of[ch] = cid
        return cls(class_of=class_of, members=tuple(members))

    @classmethod
    def default(cls) -> "EquivalenceTable":
        return _DEFAULT_TABLE

    @classmethod
    def from_file(cls, path) -> "EquivalenceTable":
        """Read a table override: one line per class, members then the code.

        Member strings use ``\\s \\t \\n \\r \\\\`` escapes for whitespace and
        backslash; blank lines and ``#`` comments are skipped.
        """
        classes = []
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                try:
                    chars, code = line.rsplit(maxsplit=1)
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: expected 'members code'")
                for esc, real in _ESCAPES.items():
                    chars = chars.replace(esc, real)
                classes.append((chars, code))
        return cls.from_classes(classes)


_DEFAULT_TABLE = EquivalenceTable.from_classes(_DEFAULT_CLASSES)


def normalize_text(raw: str, strip_diacritics: bool = False) -> str:
    """Lowercase the text; optionally fold accented Latin letters to their base.

    Everything outside the targeted accent ranges passes through unchanged.
    """
    text = raw.lower()
    if strip_diacritics:
        text = text.translate(_DIACRITIC_MAP)
    return text


class _Codec:
    # Per-table compiled machinery for fast encoding; tables are immutable,
    # so one codec per table hash is safe to cache.
    def __init__(self, table: EquivalenceTable):
        self.table = table
        self.drop_re = re.compile(f"[^{re.escape(table.domain)}]+")
        self.digit_map = {ord(ch): f"{cid // 4}{cid % 4}"
                          for ch, cid in table.class_of.items()}


_CODECS: dict = {}


def _codec(table: EquivalenceTable) -> _Codec:
    key = table.table_hash
    codec = _CODECS.get(key)
    if codec is None:
        codec = _CODECS[key] = _Codec(table)
    return codec


def encode(text: str, table: EquivalenceTable | None = None,
           source_doc: str = "") -> Base4Sequence:
    """Encode normalized text: two digits per in-table character, rest dropped."""
    codec = _codec(table or EquivalenceTable.default())
    kept = codec.drop_re.sub("", text)
    digit_str = kept.translate(codec.digit_map)
    digits = np.frombuffer(digit_str.encode("ascii"), dtype=np.uint8) - ord("0")
    return Base4Sequence(digits=digits, source_doc=source_doc, offset=0)


@dataclass(frozen=True)
class DigitStats:
    """Occurrence counts of the 16 digit pairs plus per-digit marginals."""

    class_counts: np.ndarray  # 16 entries, index = 4*hi + lo
    leading: np.ndarray       # 4 entries: count of pairs starting with digit d
    trailing: np.ndarray      # 4 entries: count of pairs ending with digit d

    @property
    def num_chars(self) -> int:
        return int(self.class_counts.sum())


def digit_stats(seq: Base4Sequence) -> DigitStats:
    """Tally digit pairs of an encoded sequence (pairs at even offsets)."""
    d = seq.digits
    npairs = len(d) // 2
    hi = d[0 : 2 * npairs : 2].astype(np.intp)
    lo = d[1 : 2 * npairs : 2].astype(np.intp)
    return DigitStats(
        class_counts=np.bincount(4 * hi + lo, minlength=16),
        leading=np.bincount(hi, minlength=4),
        trailing=np.bincount(lo, minlength=4),
    )


def format_stats(stats: DigitStats, table: EquivalenceTable | None = None) -> str:
    """Render digit statistics as a small text table."""
    table = table or EquivalenceTable.default()
    lines = [f"encoded characters: {stats.num_chars}"]
    for cid in range(16):
        hi, lo = divmod(cid, 4)
        shown = "".join(_visible(ch) for ch in table.class_members(cid))
        lines.append(f"  {hi}{lo}  {{{shown}}}: {int(stats.class_counts[cid])}")
    lines.append("  leading digits:  " + " ".join(str(int(c)) for c in stats.leading))
    lines.append("  trailing digits: " + " ".join(str(int(c)) for c in stats.trailing))
    return "\n".join(lines)


def _visible(ch: str) -> str:
    return {" ": "\\s", "\t": "\\t", "\n": "\\n", "\r": "\\r"}.get(ch, ch)
