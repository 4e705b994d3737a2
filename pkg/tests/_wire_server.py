"""Minimal NDJSON scorer server used to exercise the remote client in primary tests."""

from __future__ import annotations

import json
import socketserver
import threading

from genret.scorer import Scorer, ScoreRequest


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            try:
                response = self.server.respond(json.loads(line))  # type: ignore[attr-defined]
            except Exception as e:  # noqa: BLE001 - protocol demands an error object
                response = {"error": str(e)}
            self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))
            self.wfile.flush()


class FakeScorerServer(socketserver.ThreadingTCPServer):
    """Wraps an in-process Scorer behind the wire protocol, with optional fault injection."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, scorer: Scorer, phrases: dict[str, list[str]] | None = None, vocab=None):
        super().__init__(("127.0.0.1", 0), _Handler)
        self.scorer = scorer
        self.phrases = phrases or {}
        self.vocab = vocab
        self.fail_next = 0
        self.hang = False
        self.requests_seen: list[dict] = []
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)

    @property
    def address(self) -> str:
        host, port = self.server_address
        return f"{host}:{port}"

    def respond(self, request: dict) -> dict:
        self.requests_seen.append(request)
        if self.hang:
            threading.Event().wait(3600)
        if self.fail_next > 0:
            self.fail_next -= 1
            return {"error": "injected failure"}
        if request.get("type") == "keyphrases":
            doc_key = request.get("doc_key", "")
            if doc_key not in self.phrases:
                return {"error": f"no phrases for {doc_key!r}"}
            return {"phrases": self.phrases[doc_key]}
        if request.get("type") == "logprobs":
            query_tokens = tuple(self.vocab.encode(request["query"])) if self.vocab else ()
            req = ScoreRequest(
                query_tokens=query_tokens,
                exemplars=tuple(tuple(e) for e in request.get("exemplars", [])),
                prefix=tuple(request["prefix_tokens"]),
                allowed=tuple(request["allowed_tokens"]),
            )
            resp = self.scorer.next_logprobs(req)
            return {"logprobs": {str(t): lp for t, lp in resp.logprobs.items()}}
        return {"error": f"unknown request type {request.get('type')!r}"}

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.shutdown()
        self.server_close()
