"""Reader for the retrieval toolkit's persisted vocabulary (token<TAB>id lines)."""

from __future__ import annotations

from pathlib import Path

EOS_TOKEN = "<eos>"


def load_artifact_vocab(path: str | Path) -> dict[int, str]:
    """Map token ids to their surface strings."""
    id_to_token: dict[int, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line:
            continue
        try:
            token, raw_id = line.split("\t")
            token_id = int(raw_id)
        except ValueError as e:
            raise ValueError(f"{path}:{lineno}: malformed vocabulary line") from e
        if token_id in id_to_token:
            raise ValueError(f"{path}:{lineno}: duplicate token id {token_id}")
        id_to_token[token_id] = token
    return id_to_token
