"""Run configuration shared by the CLI and the experiment driver."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError

CLASSIFIERS = ("lr", "svm", "ftt")
TRANSFORM_KINDS = ("cosine", "sine")
LABEL_MODES = ("author", "genre")


@dataclass
class RunConfig:
    classifier: str = "lr"
    k: int = 7                      # pixelation order; image side is 2^k
    chunk_size: int = 8500          # base-4 digits per chunk; 0 = whole document
    noa: bool = False
    min_prob: float = 0.3
    margin_factor: float = 1.5
    ftt_kind: str = "cosine"
    ftt_freq: int = 100             # low-frequency crop side, clamped to 2^k
    ftt_components: int = 28
    ftt_neighbors: int = 12
    seed: int = 0
    trials: int = 1
    strip_diacritics: bool = False
    header_strip: int = 0
    label_mode: str = "author"
    dedup: bool = False
    lr_l2: float = 1.0
    lr_tol: float = 1e-6
    lr_max_iter: int = 500
    svm_c: float = 1.0
    explicit: frozenset = field(default_factory=frozenset, repr=False)

    @property
    def image_side(self) -> int:
        return 1 << self.k

    @property
    def effective_ftt_freq(self) -> int:
        return min(self.ftt_freq, self.image_side)

    def validate(self) -> "RunConfig":
        """Check invariants; raise ConfigError with one actionable message."""
        if self.classifier not in CLASSIFIERS:
            raise ConfigError(
                f"classifier must be one of {CLASSIFIERS}, got {self.classifier!r}")
        if not 1 <= self.k <= 10:
            raise ConfigError(f"k must lie in 1..10, got {self.k}")
        if self.chunk_size != 0 and self.chunk_size < 2 * self.k:
            raise ConfigError(
                f"chunk size must be 0 (whole document) or >= 2k={2 * self.k} "
                f"base-4 digits, got {self.chunk_size}")
        if self.ftt_kind not in TRANSFORM_KINDS:
            raise ConfigError(
                f"transform kind must be one of {TRANSFORM_KINDS}, got "
                f"{self.ftt_kind!r}")
        if "ftt_freq" in self.explicit and self.ftt_freq > self.image_side:
            raise ConfigError(
                f"frequency crop {self.ftt_freq} exceeds the image side "
                f"2^{self.k}={self.image_side}; lower it or raise k")
        if self.ftt_freq < 1:
            raise ConfigError(f"frequency crop must be >= 1, got {self.ftt_freq}")
        if self.ftt_components < 1:
            raise ConfigError(
                f"number of components must be >= 1, got {self.ftt_components}")
        if self.ftt_neighbors < 1:
            raise ConfigError(
                f"number of neighbors must be >= 1, got {self.ftt_neighbors}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.label_mode not in LABEL_MODES:
            raise ConfigError(
                f"label mode must be one of {LABEL_MODES}, got {self.label_mode!r}")
        if self.header_strip < 0:
            raise ConfigError(
                f"header strip length must be >= 0, got {self.header_strip}")
        return self

    def echo(self) -> dict:
        """Config as a plain dict for report files."""
        out = {}
        for f in fields(self):
            if f.name == "explicit":
                continue
            out[f.name] = getattr(self, f.name)
        return out


def merge_config(file_values: dict | None = None,
                 cli_values: dict | None = None) -> RunConfig:
    """Layer config sources: CLI flag > config file > default."""
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)} - {"explicit"}
    explicit = set()
    for source, name in ((file_values, "config file"), (cli_values, "flags")):
        if not source:
            continue
        unknown = set(source) - known
        if unknown:
            raise ConfigError(f"unknown {name} option(s): {sorted(unknown)}")
        cfg = replace(cfg, **source)
        explicit |= set(source)
    return replace(cfg, explicit=frozenset(explicit)).validate()
