"""Victim-metric abstraction.

Contains the deterministic surrogate metric (greedy embedding matching
with BERTScore-like precision/recall/F1), the symmetric wrapper for
directed metrics, corpus z-normalization, and the client for external
scorer processes (see ``client``).

The matching kernel is compiled (Cython) when available; set
METRICPROBE_PURE_PYTHON=1 to force the pure-Python fallback.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from ..errors import DegenerateScores, EmptyText

if os.environ.get("METRICPROBE_PURE_PYTHON"):
    from ._match_py import greedy_match as _greedy_match

    KERNEL = "python"
else:
    try:
        from ._matchkernel import greedy_match as _greedy_match

        KERNEL = "cython"
    except ImportError:
        from ._match_py import greedy_match as _greedy_match

        KERNEL = "python"


@dataclass(frozen=True)
class ScorePair:
    hypothesis: str
    reference: str
    source: Optional[str] = None

    def __post_init__(self):
        if not self.hypothesis or not self.reference:
            raise EmptyText("hypothesis and reference must be non-empty")


@dataclass(frozen=True)
class CorpusStats:
    """Normalization parameters: mean and population standard deviation."""

    mean: float
    std: float

    def __post_init__(self):
        if self.std <= 0:
            raise DegenerateScores("std must be > 0")


class MetricScorer(Protocol):
    """A deterministic scoring capability for (hypothesis, reference[, source])."""

    name: str

    def score(self, pair: ScorePair) -> float: ...

    def score_batch(self, pairs: Sequence[ScorePair]) -> list[float]: ...


class EmbeddingTable:
    """Token -> vector table with unit-normalized rows.

    Tokens outside the table act as one-hot axes of their own.
    """

    def __init__(self, vectors: dict[str, Sequence[float]], dimension: int):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        for tok, vec in vectors.items():
            if len(vec) != dimension:
                raise ValueError(f"vector for {tok!r} has wrong dimension")
        self.dimension = dimension
        self._row_of = {tok: i for i, tok in enumerate(vectors)}
        if vectors:
            mat = np.asarray([vectors[t] for t in self._row_of], dtype=np.float64)
            norms = np.linalg.norm(mat, axis=1, keepdims=True)
            norms[norms == 0] = 1.0  # zero vectors stay zero => similarity 0
            self.matrix = mat / norms
        else:
            self.matrix = np.zeros((0, dimension), dtype=np.float64)

    def row(self, token: str) -> int:
        return self._row_of.get(token, -1)

    def __contains__(self, token: str) -> bool:
        return token in self._row_of


def _tokenize(text: str) -> list[str]:
    tokens = text.split()
    if not tokens:
        raise EmptyText("text has no tokens")
    return tokens


def greedy_embed_score(hypothesis: str, reference: str, table: EmbeddingTable) -> dict:
    """Surrogate metric: greedy max-cosine matching precision/recall/F1.

    Cosine similarities are clamped to [0, 1]; F1 is 0 when P + R = 0.
    """
    hyp = _tokenize(hypothesis)
    ref = _tokenize(reference)
    intern: dict[str, int] = {}

    def encode(tokens):
        rows = np.empty(len(tokens), dtype=np.int64)
        ids = np.empty(len(tokens), dtype=np.int64)
        for i, tok in enumerate(tokens):
            rows[i] = table.row(tok)
            ids[i] = intern.setdefault(tok, len(intern))
        return rows, ids

    h_rows, h_ids = encode(hyp)
    r_rows, r_ids = encode(ref)
    precision, recall = _greedy_match(h_rows, r_rows, h_ids, r_ids, table.matrix)
    denom = precision + recall
    f1 = 2 * precision * recall / denom if denom > 0 else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


EMPTY_TABLE = EmbeddingTable({}, 1)


class GreedyEmbedScorer:
    """MetricScorer backed by the greedy embedding surrogate (F1 output)."""

    def __init__(self, table: EmbeddingTable = EMPTY_TABLE, name: str = "surrogate"):
        self.table = table
        self.name = name

    def score(self, pair: ScorePair) -> float:
        return greedy_embed_score(pair.hypothesis, pair.reference, self.table)["f1"]

    def score_batch(self, pairs: Sequence[ScorePair]) -> list[float]:
        return [self.score(p) for p in pairs]


def symmetric_score(metric: MetricScorer, a: str, b: str) -> float:
    """Average of the two directed scores of ``metric`` on (a, b)."""
    fwd = metric.score(ScorePair(hypothesis=a, reference=b))
    bwd = metric.score(ScorePair(hypothesis=b, reference=a))
    return (fwd + bwd) / 2.0


def fit_normalizer(raw_scores: Sequence[float]) -> CorpusStats:
    """Fit mean-0/std-1 normalization stats (population std)."""
    if len(raw_scores) < 2:
        raise DegenerateScores("need at least 2 scores")
    mean = sum(raw_scores) / len(raw_scores)
    var = sum((s - mean) ** 2 for s in raw_scores) / len(raw_scores)
    if var == 0:
        raise DegenerateScores("zero variance")
    return CorpusStats(mean=mean, std=math.sqrt(var))


def normalize(score: float, stats: CorpusStats) -> float:
    return (score - stats.mean) / stats.std
