import json
import socket
import sys
import threading
from pathlib import Path

import pytest

from metricprobe.errors import ProtocolError, ScorerError
from metricprobe.metrics import ScorePair
from metricprobe.metrics.client import ScorerClient, SubprocessTransport, TcpTransport

FAKE = str(Path(__file__).parent / "fake_scorer.py")


def make_client(mode="ok", retries=2, sentinel=None):
    cmd = [sys.executable, FAKE, mode]
    if sentinel:
        cmd.append(str(sentinel))
    return ScorerClient(SubprocessTransport(cmd), max_retries=retries, timeout=10)


def test_score_batch_order_aligned():
    client = make_client()
    pairs = [ScorePair("a b", "a b"), ScorePair("x y", "a b")]
    assert client.score_batch(pairs) == [1.0, 0.0]
    client.close()


def test_ppl_op_shares_channel():
    client = make_client()
    assert client.ppl_batch(["a b c", "d"]) == [3.0, 1.0]
    client.close()


def test_ids_increase_across_requests():
    client = make_client()
    client.score_batch([ScorePair("a", "a")])
    client.score_batch([ScorePair("b", "b")])
    assert client._next_id == 2
    client.close()


def test_arity_mismatch_is_protocol_error():
    client = make_client("short")
    with pytest.raises(ProtocolError):
        client.score_batch([ScorePair("a b", "a b"), ScorePair("c", "c")])
    client.close()


def test_id_mismatch_is_protocol_error():
    client = make_client("badid")
    with pytest.raises(ProtocolError):
        client.score_batch([ScorePair("a", "a")])
    client.close()


def test_malformed_response():
    client = make_client("garbage")
    with pytest.raises(ProtocolError):
        client.score_batch([ScorePair("a", "a")])
    client.close()


def test_scorer_error_surfaced():
    client = make_client("error")
    with pytest.raises(ScorerError, match="exploded"):
        client.score_batch([ScorePair("a", "a")])
    client.close()


def test_retry_after_crash(tmp_path):
    client = make_client("crash_once", sentinel=tmp_path / "crashed")
    # first process dies before answering; retry reconnects and succeeds
    assert client.score_batch([ScorePair("a b", "a b")]) == [1.0]
    client.close()


def test_no_retries_fails(tmp_path):
    client = make_client("crash_once", retries=0, sentinel=tmp_path / "crashed")
    with pytest.raises(ProtocolError):
        client.score_batch([ScorePair("a", "a")])
    client.close()


class _TcpScorer(threading.Thread):
    def __init__(self):
        super().__init__(daemon=True)
        self.sock = socket.socket()
        self.sock.bind(("127.0.0.1", 0))
        self.sock.listen(1)
        self.port = self.sock.getsockname()[1]

    def run(self):
        conn, _ = self.sock.accept()
        fh = conn.makefile("r", encoding="utf-8")
        for line in fh:
            req = json.loads(line)
            values = [1.0] * len(req.get("pairs", req.get("texts", [])))
            conn.sendall((json.dumps({"id": req["id"], "values": values}) + "\n").encode())


def test_tcp_transport():
    server = _TcpScorer()
    server.start()
    client = ScorerClient(TcpTransport("127.0.0.1", server.port), timeout=10)
    assert client.score_batch([ScorePair("a", "b")]) == [1.0]
    client.close()
