"""Pipeline configuration shared by the CLI and the experiment runner."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import GenRetError

ID_SCHEMES = ("first_k", "bm25_top_k", "cluster", "acid")
SCORERS = ("memorizing", "overlap", "remote", "joint")
KEYPHRASE_SOURCES = ("tfidf", "fixture", "remote")


@dataclass
class Config:
    documents_path: str = ""
    pairs_path: str = ""
    output_dir: str = "out"
    id_scheme: str = "first_k"
    k: int = 30
    branching: int = 10
    leaf_max: int = 100
    scorer: str = "memorizing"
    small_scorer: str = "memorizing"
    alpha: float = 0.85
    beam_width: int = 20
    max_len: int = 0  # 0 means "longest ID in the trie"
    seed: int = 0
    workers: int = 1
    remote_addr: str = ""
    exemplar_count: int = 8
    dedup: bool = True
    dedup_prefix_len: int = 512
    dedup_threshold: float = 0.95
    max_doc_tokens: int = 4000
    queries_per_doc: int = 5
    include_spans: bool = False
    spans_per_doc: int = 2
    span_len: int = 64
    sample_pairs: int = 0  # 0 means "use all training pairs"
    eval_split: str = "dev"
    dev_fraction: float = 0.2
    keyphrase_source: str = "tfidf"
    keyphrase_fixture: str = ""
    embed_dim: int = 64
    figures: bool = True

    def validate(self) -> None:
        if self.id_scheme not in ID_SCHEMES:
            raise GenRetError(f"unknown id_scheme {self.id_scheme!r}; expected one of {ID_SCHEMES}")
        if self.scorer not in SCORERS:
            raise GenRetError(f"unknown scorer {self.scorer!r}; expected one of {SCORERS}")
        if self.small_scorer not in ("memorizing", "overlap"):
            raise GenRetError("small_scorer must be an in-process scorer (memorizing or overlap)")
        if not 0.0 <= self.alpha <= 1.0:
            raise GenRetError(f"alpha must be within [0, 1], got {self.alpha}")
        if self.beam_width < 1:
            raise GenRetError("beam_width must be >= 1")
        if self.k < 1 or self.branching < 2 or self.leaf_max < 1:
            raise GenRetError("k must be >= 1, branching >= 2, leaf_max >= 1")
        if self.workers < 1:
            raise GenRetError("workers must be >= 1")
        if self.eval_split not in ("train", "dev", "test"):
            raise GenRetError(f"eval_split must be train, dev, or test, got {self.eval_split!r}")
        if self.scorer in ("remote", "joint") and not self.remote_addr:
            raise GenRetError(f"scorer {self.scorer!r} requires remote_addr")
        if self.keyphrase_source not in KEYPHRASE_SOURCES:
            raise GenRetError(f"unknown keyphrase_source {self.keyphrase_source!r}")
        if self.keyphrase_source == "fixture" and not self.keyphrase_fixture:
            raise GenRetError("keyphrase_source=fixture requires keyphrase_fixture path")


def _coerce(raw: str, kind: type):
    if kind is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return kind(raw)


def load_config_file(path: str | Path) -> dict[str, object]:
    """Parse a key=value config file into typed Config field overrides."""
    defaults = Config()
    types = {f.name: type(getattr(defaults, f.name)) for f in dataclasses.fields(Config)}
    overrides: dict[str, object] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise GenRetError(f"{path}:{lineno}: expected key=value")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in types:
            raise GenRetError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            overrides[key] = _coerce(raw, types[key])
        except ValueError as e:
            raise GenRetError(f"{path}:{lineno}: bad value for {key!r}: {e}") from e
    return overrides


def make_config(file_path: str | None = None, **flag_overrides) -> Config:
    """Defaults, then config-file values, then explicit flags."""
    values: dict[str, object] = {}
    if file_path:
        values.update(load_config_file(file_path))
    values.update({k: v for k, v in flag_overrides.items() if v is not None})
    cfg = Config(**values)
    cfg.validate()
    return cfg
