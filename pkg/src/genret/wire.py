"""Newline-delimited JSON client transports for remote scorer and keyphrase servers.

One request object per line, one response object per line, UTF-8. Requests:

    {"type": "logprobs", "query": str, "exemplars": [[str, str], ...],
     "prefix_tokens": [int, ...], "allowed_tokens": [int, ...]}
    {"type": "keyphrases", "text": str}

Responses: {"logprobs": {"<token_id>": float, ...}} / {"phrases": [str, ...]}
or {"error": str}.
"""

from __future__ import annotations

import json
import queue
import socket
import subprocess
import threading
from typing import Protocol

from .errors import ProtocolError, ScorerTransportError


class Transport(Protocol):
    def request(self, obj: dict) -> dict: ...

    def close(self) -> None: ...


def _encode_line(obj: dict) -> bytes:
    return (json.dumps(obj, ensure_ascii=False) + "\n").encode("utf-8")


def _decode_line(line: bytes | str) -> dict:
    if isinstance(line, bytes):
        line = line.decode("utf-8")
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"response is not valid JSON: {line!r}") from e
    if not isinstance(obj, dict):
        raise ProtocolError(f"response is not a JSON object: {line!r}")
    return obj


class _TcpConnection:
    def __init__(self, host: str, port: int, timeout: float):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._reader = self._sock.makefile("rb")

    def round_trip(self, obj: dict) -> dict:
        self._sock.sendall(_encode_line(obj))
        line = self._reader.readline()
        if not line:
            raise ScorerTransportError("server closed the connection")
        return _decode_line(line)

    def close(self) -> None:
        try:
            self._reader.close()
            self._sock.close()
        except OSError:
            pass


class TcpTransport:
    """TCP client with a small connection pool for concurrent outstanding requests."""

    def __init__(self, address: str, timeout: float = 30.0, max_connections: int = 1):
        host, _, port = address.rpartition(":")
        if not host or not port.isdigit():
            raise ScorerTransportError(f"bad address {address!r}; expected host:port")
        self._host, self._port = host, int(port)
        self._timeout = timeout
        self._max = max(1, max_connections)
        self._pool: queue.LifoQueue[_TcpConnection] = queue.LifoQueue()
        self._created = 0
        self._lock = threading.Lock()
        self._closed = False

    def _checkout(self) -> _TcpConnection:
        try:
            return self._pool.get_nowait()
        except queue.Empty:
            pass
        with self._lock:
            if self._created < self._max:
                self._created += 1
                try:
                    return _TcpConnection(self._host, self._port, self._timeout)
                except OSError as e:
                    self._created -= 1
                    raise ScorerTransportError(f"cannot connect to {self._host}:{self._port}: {e}") from e
        return self._pool.get()

    def request(self, obj: dict) -> dict:
        if self._closed:
            raise ScorerTransportError("transport already closed")
        conn = self._checkout()
        try:
            response = conn.round_trip(obj)
        except (OSError, ScorerTransportError) as e:
            conn.close()
            with self._lock:
                self._created -= 1
            if isinstance(e, ScorerTransportError):
                raise
            raise ScorerTransportError(f"request failed: {e}") from e
        self._pool.put(conn)
        return response

    def close(self) -> None:
        self._closed = True
        while True:
            try:
                self._pool.get_nowait().close()
            except queue.Empty:
                break


class StdioTransport:
    """Runs a server subprocess and exchanges messages over its standard streams."""

    def __init__(self, argv: list[str], timeout: float = 60.0):
        self._proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=False
        )
        self._timeout = timeout
        self._lock = threading.Lock()

    def request(self, obj: dict) -> dict:
        with self._lock:
            if self._proc.poll() is not None:
                raise ScorerTransportError("server process exited")
            assert self._proc.stdin and self._proc.stdout
            try:
                self._proc.stdin.write(_encode_line(obj))
                self._proc.stdin.flush()
                line = self._proc.stdout.readline()
            except (OSError, ValueError) as e:
                raise ScorerTransportError(f"stdio request failed: {e}") from e
            if not line:
                raise ScorerTransportError("server closed its output stream")
            return _decode_line(line)

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                assert self._proc.stdin
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
