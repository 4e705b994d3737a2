"""Command-line entry point for the bridge server."""

from __future__ import annotations

import argparse
import logging
import sys
import threading

import torch

from .backend import CausalLMBackend
from .config import BridgeConfig
from .server import BridgeServer, serve_stdio, serve_tcp
from .vocab import load_artifact_vocab


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lmbridge", description=__doc__)
    parser.add_argument("--model", required=True, help="model identifier or local path")
    parser.add_argument("--vocab", default="", help="artifact vocabulary (token<TAB>id); required for logprobs")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-prompt-tokens", type=int, default=512)
    parser.add_argument("--max-new-tokens", type=int, default=96)
    parser.add_argument("--exemplar-limit", type=int, default=8)
    parser.add_argument("--listen", default="", help="host:port to serve over TCP")
    parser.add_argument("--stdio", action="store_true", help="serve over standard streams")
    parser.add_argument("--timeout", type=float, default=120.0, help="per-connection idle timeout (s)")
    parser.add_argument("--capture", default="", help="append keyphrase responses to this fixture file")
    return parser


def config_from_args(args: argparse.Namespace) -> BridgeConfig:
    return BridgeConfig(
        model=args.model,
        vocab_path=args.vocab,
        device=args.device,
        max_prompt_tokens=args.max_prompt_tokens,
        max_new_tokens=args.max_new_tokens,
        exemplar_limit=args.exemplar_limit,
        listen=args.listen,
        stdio=args.stdio,
        request_timeout=args.timeout,
        capture_path=args.capture,
    )


def make_server(config: BridgeConfig) -> BridgeServer:
    torch.manual_seed(0)
    backend = CausalLMBackend(
        config.model, device=config.device, max_prompt_tokens=config.max_prompt_tokens
    )
    vocab = load_artifact_vocab(config.vocab_path) if config.vocab_path else None
    return BridgeServer(
        backend,
        artifact_vocab=vocab,
        exemplar_limit=config.exemplar_limit,
        capture_path=config.capture_path,
        max_new_tokens=config.max_new_tokens,
    )


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO)
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    if not config.stdio and not config.listen:
        print("error: choose --stdio or --listen host:port", file=sys.stderr)
        return 2
    try:
        server = make_server(config)
    except Exception as e:  # noqa: BLE001
        print(f"error: {e}", file=sys.stderr)
        return 1
    if config.stdio:
        serve_stdio(server, sys.stdin, sys.stdout)
        return 0
    host, _, port = config.listen.rpartition(":")
    tcp = serve_tcp(server, host or "127.0.0.1", int(port), config.request_timeout)
    bound_host, bound_port = tcp.server_address
    print(f"listening on {bound_host}:{bound_port}", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        tcp.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())
