"""Deterministic stand-in scorer speaking the NDJSON protocol.

Usage: python3 fake_scorer.py [mode]
Modes: ok (default), short, badid, error, crash_once, garbage.
"""

import json
import sys


def score(pair):
    hyp = pair["hyp"].split()
    ref = pair["ref"].split()
    rset = set(ref)
    return sum(1 for t in hyp if t in rset) / len(hyp)


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "ok"
    sentinel = sys.argv[2] if len(sys.argv) > 2 else None
    for line in sys.stdin:
        req = json.loads(line)
        if mode == "crash_once" and sentinel:
            import os

            if not os.path.exists(sentinel):
                open(sentinel, "w").close()
                sys.exit(1)
        if mode == "garbage":
            print("not json at all")
            sys.stdout.flush()
            continue
        if mode == "error":
            print(json.dumps({"id": req["id"], "error": "scorer exploded"}))
            sys.stdout.flush()
            continue
        if req["op"] == "score":
            values = [score(p) for p in req["pairs"]]
        else:
            values = [float(len(t.split())) for t in req["texts"]]
        if mode == "short" and values:
            values = values[:-1]
        rid = req["id"] + 1 if mode == "badid" else req["id"]
        print(json.dumps({"id": rid, "values": values}))
        sys.stdout.flush()


if __name__ == "__main__":
    main()
