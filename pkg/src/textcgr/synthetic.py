"""Seeded synthetic corpora: character-level Markov "authors" for demos and
for exercising the experiment protocols without any downloaded data."""

from __future__ import annotations

from bisect import bisect_right

import numpy as np

from .corpus import Corpus, Document

SYMBOLS = "etaoin shrdluc"


def style_matrix(rng: np.random.Generator, n_symbols: int = len(SYMBOLS),
                 concentration: float = 0.25) -> np.ndarray:
    """Random row-stochastic transition matrix; low concentration gives each
    synthetic author a strongly individual character statistics."""
    return rng.dirichlet(np.full(n_symbols, concentration), size=n_symbols)


def blend(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """Interpolated style: (1-t)*a + t*b."""
    return (1.0 - t) * a + t * b


def markov_text(rng: np.random.Generator, transition: np.ndarray,
                length: int, symbols: str = SYMBOLS) -> str:
    cum = np.cumsum(transition, axis=1).tolist()
    draws = rng.random(length).tolist()
    state = 0
    out = []
    for u in draws:
        state = bisect_right(cum[state], u)
        if state >= len(symbols):      # guard against rounding at the top end
            state = len(symbols) - 1
        out.append(symbols[state])
    return "".join(out)


def federalist_like_corpus(seed: int = 7, doc_chars: tuple = (1500, 3200),
                           counts: dict | None = None) -> Corpus:
    """Two distinct generated authors arranged like the historical corpus:
    hamilton/madison/jay/joint solo groups plus "disputed" documents that are
    really drawn from the madison generator."""
    counts = counts or {"hamilton": 51, "madison": 14, "jay": 5, "joint": 3,
                        "disputed": 12}
    rng = np.random.default_rng(seed)
    styles = {
        "hamilton": style_matrix(rng),
        "madison": style_matrix(rng),
        "jay": style_matrix(rng),
    }
    styles["joint"] = blend(styles["hamilton"], styles["madison"], 0.5)
    styles["disputed"] = styles["madison"]
    docs = []
    for category in ("hamilton", "madison", "jay", "joint", "disputed"):
        for i in range(counts[category]):
            length = int(rng.integers(doc_chars[0], doc_chars[1] + 1))
            docs.append(Document(
                doc_id=f"{category}/doc{i:02d}",
                author=category,
                text=markov_text(rng, styles[category], length)))
    return Corpus(documents=docs, provenance=f"synthetic(seed={seed})")


def held_out_author_fixture(seed: int = 11, docs_per_author: int = 8,
                            doc_chars: int = 2400) -> tuple:
    """Training corpus of two sharply distinct authors plus one query text
    from a third author whose style sits halfway between them."""
    rng = np.random.default_rng(seed)
    alpha = style_matrix(rng)
    beta = style_matrix(rng)
    docs = []
    for name, style in (("alpha", alpha), ("beta", beta)):
        for i in range(docs_per_author):
            docs.append(Document(doc_id=f"{name}/doc{i}", author=name,
                                 text=markov_text(rng, style, doc_chars)))
    query = markov_text(rng, blend(alpha, beta, 0.5), doc_chars)
    return Corpus(documents=docs, provenance="synthetic-heldout"), query


def newspaper_like_corpus(seed: int = 23, num_authors: int = 100,
                          per_author: int = 30, num_genres: int = 10,
                          doc_chars: tuple = (500, 900),
                          duplicate_plan: dict | None = None) -> Corpus:
    """Authors nested in genres, with optional exact-duplicate articles.

    duplicate_plan maps author index -> number of that author's articles to
    overwrite with copies of its first article (so deduplication leaves
    per_author - n distinct texts).
    """
    if num_authors % num_genres:
        raise ValueError("num_authors must be a multiple of num_genres")
    duplicate_plan = duplicate_plan or {}
    rng = np.random.default_rng(seed)
    genre_styles = [style_matrix(rng) for _ in range(num_genres)]
    docs = []
    for a in range(num_authors):
        genre = a // (num_authors // num_genres)
        author_style = blend(genre_styles[genre], style_matrix(rng), 0.4)
        name = f"a{a:03d}"
        texts = []
        for j in range(per_author):
            length = int(rng.integers(doc_chars[0], doc_chars[1] + 1))
            texts.append(markov_text(rng, author_style, length))
        for j in range(duplicate_plan.get(a, 0)):
            texts[j + 1] = texts[0]
        for j, text in enumerate(texts):
            docs.append(Document(doc_id=f"{name}/art{j:02d}", author=name,
                                 genre=f"g{genre}", text=text))
    return Corpus(documents=docs, provenance=f"synthetic(seed={seed})")
