"""Client for external scorer processes.

Speaks the newline-delimited JSON protocol over a child process's
stdin/stdout or a TCP stream:

    request:  {"id": n, "op": "score", "pairs": [{"hyp", "ref", "src"}, ...]}
    response: {"id": n, "values": [...]}        (arity must equal pairs)
    error:    {"id": n, "error": "..."}
    perplexity shares the channel: {"id": n, "op": "ppl", "texts": [...]}

Ids strictly increase per connection; responses are never reordered.
"""

from __future__ import annotations

import json
import os
import queue
import socket
import subprocess
import threading
from typing import Optional, Sequence

from ..errors import ProtocolError, ScorerError, ScorerTimeout
from . import ScorePair

DEFAULT_TIMEOUT_S = float(os.environ.get("METRICPROBE_SCORER_TIMEOUT_MS", "30000")) / 1000.0


class SubprocessTransport:
    """Line transport over a child process's stdin/stdout."""

    def __init__(self, cmd: Sequence[str]):
        self.cmd = list(cmd)
        self._proc = None
        self._lines = None

    def connect(self):
        self.close()
        self._proc = subprocess.Popen(
            self.cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lines = queue.Queue()

        def pump(proc, q):
            for line in proc.stdout:
                q.put(line)
            q.put(None)

        threading.Thread(target=pump, args=(self._proc, self._lines), daemon=True).start()

    def send_line(self, line: str):
        if self._proc is None:
            self.connect()
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ConnectionError(str(exc)) from exc

    def recv_line(self, timeout: float) -> str:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise ScorerTimeout(f"no response within {timeout}s")
        if line is None:
            raise ConnectionError("scorer process closed its output")
        return line

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.terminate()
            self._proc.wait(timeout=5)
            self._proc = None


class TcpTransport:
    """Line transport over a TCP stream."""

    def __init__(self, host: str, port: int):
        self.host = host
        self.port = port
        self._sock = None
        self._reader = None

    def connect(self):
        self.close()
        self._sock = socket.create_connection((self.host, self.port))
        self._reader = self._sock.makefile("r", encoding="utf-8")

    def send_line(self, line: str):
        if self._sock is None:
            self.connect()
        try:
            self._sock.sendall((line + "\n").encode("utf-8"))
        except OSError as exc:
            raise ConnectionError(str(exc)) from exc

    def recv_line(self, timeout: float) -> str:
        self._sock.settimeout(timeout)
        try:
            line = self._reader.readline()
        except socket.timeout:
            raise ScorerTimeout(f"no response within {timeout}s")
        if not line:
            raise ConnectionError("scorer connection closed")
        return line

    def close(self):
        if self._sock is not None:
            self._sock.close()
            self._sock = None
            self._reader = None


class ScorerClient:
    """Serially-used session against one external scorer.

    Requests are retried on transport failure (reconnect + resend);
    scoring must therefore be idempotent on the scorer side.
    """

    def __init__(self, transport, max_retries: int = 2, timeout: float = DEFAULT_TIMEOUT_S,
                 name: str = "external"):
        self.transport = transport
        self.max_retries = max_retries
        self.timeout = timeout
        self.name = name
        self._next_id = 0
        self._lock = threading.Lock()

    def _roundtrip(self, payload: dict, expected_arity: int) -> list[float]:
        with self._lock:
            req_id = self._next_id
            self._next_id += 1
            payload = {"id": req_id, **payload}
            line = json.dumps(payload)
            last_exc = None
            for attempt in range(self.max_retries + 1):
                try:
                    self.transport.send_line(line)
                    raw = self.transport.recv_line(self.timeout)
                except ConnectionError as exc:
                    last_exc = exc
                    self.transport.connect()
                    continue
                return self._parse(raw, req_id, expected_arity)
            raise ProtocolError(f"transport failed after {self.max_retries + 1} attempts: {last_exc}")

    @staticmethod
    def _parse(raw: str, req_id: int, expected_arity: int) -> list[float]:
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed response: {raw!r}") from exc
        if not isinstance(msg, dict) or msg.get("id") != req_id:
            raise ProtocolError(f"response id mismatch: expected {req_id}, got {msg!r}")
        if "error" in msg:
            raise ScorerError(msg["error"])
        values = msg.get("values")
        if not isinstance(values, list) or len(values) != expected_arity:
            raise ProtocolError(
                f"expected {expected_arity} values, got {values!r}"
            )
        try:
            return [float(v) for v in values]
        except (TypeError, ValueError) as exc:
            raise ProtocolError(f"non-numeric value in response: {values!r}") from exc

    def score_batch(self, pairs: Sequence[ScorePair]) -> list[float]:
        payload = {
            "op": "score",
            "pairs": [
                {"hyp": p.hypothesis, "ref": p.reference, "src": p.source}
                for p in pairs
            ],
        }
        return self._roundtrip(payload, len(pairs))

    def score(self, pair: ScorePair) -> float:
        return self.score_batch([pair])[0]

    def ppl_batch(self, texts: Sequence[str]) -> list[float]:
        return self._roundtrip({"op": "ppl", "texts": list(texts)}, len(texts))

    def perplexity(self, text: str) -> float:
        return self.ppl_batch([text])[0]

    def close(self):
        self.transport.close()


def external_score_batch(client: ScorerClient, pairs: Sequence[ScorePair]) -> list[float]:
    return client.score_batch(pairs)
