"""Shared bridge-test helpers: word lists, the artifact vocabulary, and a wire client."""

import json
import socket

WORD_PALETTE = [
    "amber", "basil", "cedar", "dunes", "ember", "fjord", "grove", "heron",
    "indigo", "juniper", "karst", "lagoon", "maple", "nectar", "ocean",
    "prairie", "quartz", "raven", "sienna", "tundra", "umber", "velvet",
    "willow", "xenon", "yarrow", "zephyr", "harbor", "meadow", "summit", "canyon",
]

EXTRA_WORDS = [
    "query", "id", "find", "what", "about", "the", "entry", "is", "known",
    "key", "phrases", "document", "topics", "sep",
]

PUNCT = ["<", ">", ":", ",", ".", "(", ")", "?", "-"]

ARTIFACT_SPECIALS = ["<bos>", "<eos>", "<unk>", "<sep>"]


def artifact_vocab_tokens() -> list[str]:
    return ARTIFACT_SPECIALS + [str(d) for d in range(10)] + WORD_PALETTE


def warmup_text() -> str:
    # A few enumerated-phrase and query/ID lines; brief seeded training on this
    # keeps greedy generation word-like instead of degenerate punctuation.
    lines = []
    for i in range(0, 24, 4):
        a, b, c, d = (WORD_PALETTE[(i + j) % len(WORD_PALETTE)] for j in range(4))
        lines.append(f"Query: find the {a} {b} entry\nID: {a} {b} {c} {d} </s>")
        lines.append(f"Key phrases:\n(1) {a} {b} (2) {c} {d}")
    return "\n".join(lines)


class WireClient:
    def __init__(self, host: str, port: int, timeout: float = 60.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.reader = self.sock.makefile("rb")

    def request(self, obj: dict) -> dict:
        self.sock.sendall((json.dumps(obj) + "\n").encode("utf-8"))
        line = self.reader.readline()
        if not line:
            raise ConnectionError("server closed the connection")
        return json.loads(line)

    def send_raw(self, payload: str) -> dict:
        self.sock.sendall((payload + "\n").encode("utf-8"))
        return json.loads(self.reader.readline())

    def close(self):
        self.reader.close()
        self.sock.close()
