"""NDJSON bridge exposing a causal LM as a next-token scorer and keyphrase generator."""

from .backend import CausalLMBackend
from .config import BridgeConfig
from .prompts import (
    EXEMPLAR_TEMPLATE_VERSION,
    KEYPHRASE_INSTRUCTION,
    keyphrase_prompt,
    parse_phrases,
    scoring_prompt,
)
from .server import BridgeServer, serve_stdio, serve_tcp
from .vocab import load_artifact_vocab

__version__ = "0.1.0"
