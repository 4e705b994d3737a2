"""Bridge runtime settings."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class BridgeConfig:
    model: str
    vocab_path: str = ""
    device: str = "cpu"
    max_prompt_tokens: int = 512
    max_new_tokens: int = 96
    exemplar_limit: int = 8
    listen: str = ""  # "host:port" for TCP; empty with stdio=True for standard streams
    stdio: bool = False
    request_timeout: float = 120.0
    capture_path: str = ""
