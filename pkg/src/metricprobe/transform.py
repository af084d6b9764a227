"""Perturbation primitives: token edits, character edits, candidate
providers, neighbor tables, and the LCS diff used for highlighting."""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Optional, Protocol

from .errors import InvalidMerge, OutOfBounds, WouldEmpty

WORD_KINDS = ("replace", "insert", "merge", "delete")
CHAR_KINDS = ("char_swap", "char_sub", "char_del", "char_ins")


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[str, ...]

    def __post_init__(self):
        for tok in self.tokens:
            if not tok or any(c.isspace() for c in tok):
                raise ValueError(f"invalid token {tok!r}")

    @classmethod
    def from_text(cls, text: str) -> "TokenSeq":
        return cls(tuple(text.split()))

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class EditOp:
    kind: str
    position: int
    payload: Optional[str] = None
    char_index: Optional[int] = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "position": self.position}
        if self.payload is not None:
            d["payload"] = self.payload
        if self.char_index is not None:
            d["char_index"] = self.char_index
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EditOp":
        return cls(
            kind=d["kind"],
            position=d["position"],
            payload=d.get("payload"),
            char_index=d.get("char_index"),
        )


class CandidateProvider(Protocol):
    """Deterministic proposal source for replace/insert/merge payloads."""

    def propose(self, seq: TokenSeq, position: int, kind: str, top_k: int) -> list[str]: ...


def apply_edit(seq: TokenSeq, op: EditOp) -> TokenSeq:
    """Apply one edit; raises rather than ever producing an empty token
    or empty sequence."""
    tokens = list(seq.tokens)
    n = len(tokens)
    if op.kind == "replace":
        if not 0 <= op.position < n:
            raise OutOfBounds(f"replace at {op.position} in length {n}")
        tokens[op.position] = op.payload
    elif op.kind == "insert":
        if not 0 <= op.position <= n:
            raise OutOfBounds(f"insert at {op.position} in length {n}")
        tokens.insert(op.position, op.payload)
    elif op.kind == "merge":
        if not 0 <= op.position < n - 1:
            raise InvalidMerge(f"merge at {op.position} needs two adjacent tokens")
        tokens[op.position : op.position + 2] = [op.payload]
    elif op.kind == "delete":
        if not 0 <= op.position < n:
            raise OutOfBounds(f"delete at {op.position} in length {n}")
        if n == 1:
            raise WouldEmpty("delete on singleton sequence")
        del tokens[op.position]
    elif op.kind in CHAR_KINDS:
        if not 0 <= op.position < n:
            raise OutOfBounds(f"{op.kind} at token {op.position} in length {n}")
        tokens[op.position] = _apply_char_edit(tokens[op.position], op)
    else:
        raise ValueError(f"unknown edit kind {op.kind!r}")
    return TokenSeq(tuple(tokens))


def _apply_char_edit(token: str, op: EditOp) -> str:
    chars = list(token)
    i = op.char_index
    if op.kind == "char_swap":
        if not 0 <= i < len(chars) - 1:
            raise OutOfBounds(f"char_swap at {i} in token of length {len(chars)}")
        chars[i], chars[i + 1] = chars[i + 1], chars[i]
    elif op.kind == "char_sub":
        if not 0 <= i < len(chars):
            raise OutOfBounds(f"char_sub at {i} in token of length {len(chars)}")
        chars[i] = op.payload
    elif op.kind == "char_del":
        if not 0 <= i < len(chars):
            raise OutOfBounds(f"char_del at {i} in token of length {len(chars)}")
        if len(chars) == 1:
            raise WouldEmpty("char_del would empty token")
        del chars[i]
    elif op.kind == "char_ins":
        if not 0 <= i <= len(chars):
            raise OutOfBounds(f"char_ins at {i} in token of length {len(chars)}")
        chars.insert(i, op.payload)
    return "".join(chars)


_ALPHABET = string.ascii_lowercase


def char_perturbations(token: str, position: int = 0) -> list[EditOp]:
    """Enumerate single-character edits of one token.

    All adjacent swaps, all deletions (unless they would empty the
    token), and one substitution plus one insertion per position. The
    substituted/inserted character comes from the lowercase alphabet
    cycled by character position; a substitution never reproduces the
    original character.
    """
    if not token:
        raise ValueError("token must be non-empty")
    ops = []
    for i in range(len(token) - 1):
        ops.append(EditOp("char_swap", position, char_index=i))
    if len(token) > 1:
        for i in range(len(token)):
            ops.append(EditOp("char_del", position, char_index=i))
    for i in range(len(token)):
        c = _ALPHABET[i % 26]
        if c == token[i]:
            c = _ALPHABET[(i + 1) % 26]
        ops.append(EditOp("char_sub", position, payload=c, char_index=i))
    for i in range(len(token) + 1):
        ops.append(EditOp("char_ins", position, payload=_ALPHABET[i % 26], char_index=i))
    return ops


class NeighborTable:
    """token -> neighbors sorted ascending by distance."""

    def __init__(self, neighbors: dict[str, list[tuple[str, float]]]):
        self._neighbors = {}
        for tok, lst in neighbors.items():
            for _, dist in lst:
                if dist < 0:
                    raise ValueError("negative neighbor distance")
            self._neighbors[tok] = sorted(lst, key=lambda nd: (nd[1], nd[0]))

    @classmethod
    def from_tsv(cls, path) -> "NeighborTable":
        table: dict[str, list[tuple[str, float]]] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                tok, neighbor, dist = line.split("\t")
                table.setdefault(tok, []).append((neighbor, float(dist)))
        return cls(table)

    def get(self, token: str) -> list[tuple[str, float]]:
        return self._neighbors.get(token, [])

    def tokens(self):
        return self._neighbors.keys()


def neighbors_within(table: NeighborTable, token: str, delta: float, max_n: int) -> list[str]:
    """Up to ``max_n`` neighbors within distance ``delta``, nearest first."""
    if delta < 0 or max_n < 0:
        raise ValueError("delta and max_n must be >= 0")
    out = [tok for tok, dist in table.get(token) if dist <= delta]
    return out[:max_n]


def diff_highlight(original: TokenSeq, perturbed: TokenSeq) -> set[int]:
    """Indices of perturbed tokens not matched to an equal original token
    under an LCS alignment (earlier matches preferred on ties)."""
    a, b = original.tokens, perturbed.tokens
    n, m = len(a), len(b)
    # dp over suffixes
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                dp[i][j] = dp[i + 1][j + 1] + 1
            else:
                dp[i][j] = max(dp[i + 1][j], dp[i][j + 1])
    matched = set()
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j] and dp[i][j] == dp[i + 1][j + 1] + 1:
            matched.add(j)
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1
        else:
            j += 1
    return set(range(m)) - matched


class SynonymProvider:
    """Candidate provider from an explicit substitution map (testing aid).

    Replacement candidates come from the map entry of the token at the
    site; insert/merge candidates from the "*" entry when present.
    """

    def __init__(self, synonyms: dict[str, list[str]]):
        self.synonyms = synonyms

    @classmethod
    def from_tsv(cls, path) -> "SynonymProvider":
        table: dict[str, list[str]] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                tok, cand = line.split("\t")
                table.setdefault(tok, []).append(cand)
        return cls(table)

    def propose(self, seq: TokenSeq, position: int, kind: str, top_k: int) -> list[str]:
        if kind == "replace":
            cands = [c for c in self.synonyms.get(seq.tokens[position], [])
                     if c != seq.tokens[position]]
        elif kind in ("insert", "merge"):
            cands = list(self.synonyms.get("*", []))
        else:
            return []
        return cands[:top_k]


class NgramProvider:
    """Candidate provider ranking vocabulary tokens by trigram probability
    in the left context of the edit site."""

    def __init__(self, lm, exclude_sentinels: bool = True):
        from .lm import BOS, EOS, UNK

        self.lm = lm
        skip = {BOS, EOS, UNK} if exclude_sentinels else set()
        self.candidates = sorted(t for t in lm.vocabulary if t not in skip)

    def propose(self, seq: TokenSeq, position: int, kind: str, top_k: int) -> list[str]:
        from .lm import BOS

        left = [BOS, BOS] + list(seq.tokens[:position])
        ctx = (left[-2], left[-1])
        original = seq.tokens[position] if position < len(seq) else None
        scored = [
            (-self.lm.prob(ctx, tok), tok)
            for tok in self.candidates
            if not (kind == "replace" and tok == original)
        ]
        scored.sort()
        return [tok for _, tok in scored[:top_k]]
