"""Request handling and the stdio/TCP serving loops.

One JSON object per line in, one per line out. Failures become {"error": ...}
responses; the bridge never fabricates a distribution.
"""

from __future__ import annotations

import json
import logging
import math
import socketserver
import threading

from .prompts import keyphrase_prompt, parse_phrases, scoring_prompt
from .vocab import EOS_TOKEN

logger = logging.getLogger(__name__)

MAX_PHRASES = 5
NORMALIZATION_GUARD = 1e-9


class BridgeServer:
    """Dispatches wire requests onto a causal LM backend.

    Inference is serialized on one lock: a single device services every
    connection's requests in arrival order.
    """

    def __init__(
        self,
        backend,
        artifact_vocab: dict[int, str] | None = None,
        exemplar_limit: int = 8,
        capture_path: str = "",
        max_new_tokens: int = 96,
    ):
        self.backend = backend
        self.vocab = artifact_vocab or {}
        self.exemplar_limit = exemplar_limit
        self.capture_path = capture_path
        self.max_new_tokens = max_new_tokens
        self._infer_lock = threading.Lock()
        self._capture_lock = threading.Lock()

    def handle(self, request: dict) -> dict:
        try:
            kind = request.get("type")
            if kind == "logprobs":
                return self._logprobs(request)
            if kind == "keyphrases":
                return self._keyphrases(request)
            return {"error": f"unknown request type {kind!r}"}
        except Exception as e:  # noqa: BLE001 - every failure must become an error object
            logger.exception("request failed")
            return {"error": str(e)}

    def handle_line(self, line: str) -> str:
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request is not a JSON object")
        except ValueError as e:
            return json.dumps({"error": f"malformed request: {e}"})
        return json.dumps(self.handle(request), ensure_ascii=False)

    def _token_text(self, token_id: int) -> str:
        try:
            text = self.vocab[int(token_id)]
        except (KeyError, ValueError):
            raise ValueError(f"token id {token_id!r} not in the artifact vocabulary") from None
        if text == EOS_TOKEN:
            return self.backend.eos_text
        return text

    def _logprobs(self, request: dict) -> dict:
        if not self.vocab:
            return {"error": "server started without an artifact vocabulary"}
        allowed = request.get("allowed_tokens")
        if not isinstance(allowed, list) or not allowed:
            return {"error": "allowed_tokens must be a non-empty list"}
        prefix = request.get("prefix_tokens", [])
        allowed_texts = [self._token_text(t) for t in allowed]
        prefix_text = " ".join(self._token_text(t) for t in prefix)
        if len(allowed) == 1:
            return {"logprobs": {str(int(allowed[0])): 0.0}}
        exemplars = [tuple(e) for e in request.get("exemplars", [])][: self.exemplar_limit]
        prompt = scoring_prompt(
            str(request.get("query", "")), exemplars, prefix_text, limit=self.exemplar_limit
        )
        continuations = [" " + text for text in allowed_texts]
        with self._infer_lock:
            raw = self.backend.continuation_logprobs(prompt, continuations)
        peak = max(raw)
        lse = peak + math.log(sum(math.exp(x - peak) for x in raw))
        logprobs = {str(int(t)): x - lse for t, x in zip(allowed, raw)}
        total = sum(math.exp(v) for v in logprobs.values())
        if abs(total - 1.0) > 1e-6 + NORMALIZATION_GUARD:
            return {"error": f"internal normalization failure (sum={total})"}
        return {"logprobs": logprobs}

    def _keyphrases(self, request: dict) -> dict:
        text = request.get("text")
        if not isinstance(text, str) or not text.strip():
            return {"error": "keyphrase request requires non-empty text"}
        prompt = keyphrase_prompt(text)
        with self._infer_lock:
            output = self.backend.generate(prompt, max_new_tokens=self.max_new_tokens)
        phrases = parse_phrases(output, limit=MAX_PHRASES)
        if not phrases:
            return {"error": "model output contained no parseable phrases"}
        doc_key = request.get("doc_key")
        if self.capture_path and isinstance(doc_key, str):
            self._capture(doc_key, phrases)
        return {"phrases": phrases}

    def _capture(self, doc_key: str, phrases: list[str]) -> None:
        record = json.dumps({"doc_key": doc_key, "phrases": phrases}, ensure_ascii=False)
        with self._capture_lock:
            with open(self.capture_path, "a", encoding="utf-8") as f:
                f.write(record + "\n")


def serve_stdio(server: BridgeServer, stdin, stdout) -> None:
    """Answer requests on standard streams until EOF."""
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        stdout.write(server.handle_line(line) + "\n")
        stdout.flush()


class _TcpHandler(socketserver.StreamRequestHandler):
    def handle(self):
        timeout = self.server.request_timeout  # type: ignore[attr-defined]
        if timeout:
            self.connection.settimeout(timeout)
        try:
            for raw in self.rfile:
                line = raw.decode("utf-8").strip()
                if not line:
                    continue
                response = self.server.bridge.handle_line(line)  # type: ignore[attr-defined]
                self.wfile.write((response + "\n").encode("utf-8"))
                self.wfile.flush()
        except (TimeoutError, OSError):
            return


class TcpBridge(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], bridge: BridgeServer, request_timeout: float = 0.0):
        super().__init__(address, _TcpHandler)
        self.bridge = bridge
        self.request_timeout = request_timeout


def serve_tcp(
    server: BridgeServer, host: str, port: int, request_timeout: float = 0.0
) -> TcpBridge:
    """Bind and start serving in a background thread; caller owns shutdown()."""
    tcp = TcpBridge((host, port), server, request_timeout)
    thread = threading.Thread(target=tcp.serve_forever, daemon=True)
    thread.start()
    return tcp
