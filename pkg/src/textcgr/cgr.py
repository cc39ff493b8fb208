"""Frequency chaos-game matrices for base-4 sequences, and grayscale rendering.

A sequence over {0,1,2,3} is read as nucleotides 0=A, 1=C, 2=G, 3=T on the
classic square with corners A, C, G, T. The order-k matrix counts every
overlapping k-mer in its own cell of a 2^k x 2^k grid: the first-order layout
is [[C, G], [A, T]] and each refinement splits a cell into the same 2x2
pattern, so the symbol at position i of a k-mer contributes bit i-1 of the
cell's row/column indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .alphabet import Base4Sequence
from .errors import DataError

# Corner bits per digit: row bit set for A(0) and T(3), column bit for G(2), T(3).
_ROWBIT = np.array([1, 0, 0, 1], dtype=np.int64)
_COLBIT = np.array([0, 0, 1, 1], dtype=np.int64)


@dataclass(frozen=True)
class FcgrMatrix:
    """2^order x 2^order grid of k-mer occurrence counts."""

    order: int
    counts: np.ndarray
    total_kmers: int


@dataclass(frozen=True)
class GrayImage:
    """Square intensity grid in [0, 1]; 1 marks the most frequent k-mer."""

    side: int
    intensity: np.ndarray


def kmer_cell(word) -> tuple:
    """Grid cell of one k-mer; symbol i of the word sets bit i of row/col."""
    w = np.asarray(word, dtype=np.int64)
    if w.ndim != 1 or w.size < 1:
        raise DataError("k-mer must be a non-empty 1-D digit sequence")
    if w.min() < 0 or w.max() > 3:
        raise DataError("k-mer digits must lie in 0..3")
    weights = 1 << np.arange(w.size, dtype=np.int64)
    return int(_ROWBIT[w] @ weights), int(_COLBIT[w] @ weights)


@lru_cache(maxsize=None)
def _bit_weights(k: int) -> np.ndarray:
    return 1 << np.arange(k, dtype=np.int64)


def fcgr(seq, k: int) -> FcgrMatrix:
    """Count all overlapping k-mers of `seq` into the order-k grid."""
    digits = seq.digits if isinstance(seq, Base4Sequence) else np.asarray(seq)
    digits = digits.astype(np.int64, copy=False)
    if k < 1:
        raise DataError(f"order must be >= 1, got {k}")
    n = digits.shape[0]
    if n < k:
        name = getattr(seq, "source_doc", "") or "sequence"
        raise DataError(f"{name}: length {n} cannot hold any {k}-mer")
    if n and (digits.min() < 0 or digits.max() > 3):
        raise DataError("sequence digits must lie in 0..3")
    windows = np.lib.stride_tricks.sliding_window_view(digits, k)
    w = _bit_weights(k)
    rows = _ROWBIT[windows] @ w
    cols = _COLBIT[windows] @ w
    side = 1 << k
    counts = np.bincount(rows * side + cols, minlength=side * side)
    return FcgrMatrix(order=k, counts=counts.reshape(side, side),
                      total_kmers=n - k + 1)


def render(m: FcgrMatrix) -> GrayImage:
    """Scale counts by the per-image maximum so the peak intensity is 1."""
    peak = m.counts.max() if m.counts.size else 0
    if peak > 0:
        intensity = m.counts / float(peak)
    else:
        intensity = np.zeros_like(m.counts, dtype=np.float64)
    return GrayImage(side=m.counts.shape[0], intensity=intensity)


def feature_vector(m: FcgrMatrix) -> np.ndarray:
    """Row-major flattening of the rendered intensities (length 4^order)."""
    return render(m).intensity.reshape(-1)


def write_pgm(img: GrayImage, path) -> None:
    """Binary 8-bit PGM; intensity 1 maps to black (frequent = dark)."""
    pixels = np.round(255.0 * (1.0 - img.intensity)).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.side} {img.side}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def write_png(img: GrayImage, path) -> None:
    """PNG export with the same intensity-to-gray mapping as the PGM writer."""
    from PIL import Image

    pixels = np.round(255.0 * (1.0 - img.intensity)).astype(np.uint8)
    Image.fromarray(pixels, mode="L").save(path, format="PNG")


def write_image(img: GrayImage, path) -> None:
    """Dispatch on file extension: .png via Pillow, anything else as PGM."""
    if str(path).lower().endswith(".png"):
        write_png(img, path)
    else:
        write_pgm(img, path)


def image_filename(doc_id: str, chunk_index: int, k: int, ext: str = "pgm") -> str:
    safe = "".join(ch if ch.isalnum() or ch in "-._" else "_" for ch in doc_id)
    return f"{safe}_{chunk_index}_k{k}.{ext}"
