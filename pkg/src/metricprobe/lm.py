"""Trigram language model with add-k smoothing.

Desk-scale stand-in for a neural LM behind the fluency constraint; the
real thing attaches through the scorer protocol's "ppl" op.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import EmptyCorpus, EmptyText

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

ORDER = 3


@dataclass
class NGramLM:
    vocabulary: frozenset[str]
    smoothing_k: float
    # counts[context][token] and context totals
    ngram_counts: dict = field(repr=False, default_factory=dict)
    context_counts: dict = field(repr=False, default_factory=dict)

    def prob(self, context: tuple[str, str], token: str) -> float:
        """Add-k conditional probability P(token | context)."""
        token = token if token in self.vocabulary else UNK
        context = tuple(t if t in self.vocabulary else UNK for t in context)
        k = self.smoothing_k
        num = self.ngram_counts.get(context, {}).get(token, 0) + k
        den = self.context_counts.get(context, 0) + k * len(self.vocabulary)
        return num / den


def train_trigram(texts, smoothing_k: float = 1.0) -> NGramLM:
    """Train a trigram model over whitespace tokens.

    Each sentence is padded with two BOS and one EOS. The vocabulary is
    all training tokens plus the sentinels; query-time unknowns map to UNK.
    """
    if smoothing_k <= 0:
        raise ValueError("smoothing_k must be > 0")
    streams = []
    for text in texts:
        tokens = text.split()
        if tokens:
            streams.append(tokens)
    if not streams:
        raise EmptyCorpus("no non-empty training text")

    vocab = {BOS, EOS, UNK}
    ngram_counts: dict = {}
    context_counts: dict = {}
    for tokens in streams:
        vocab.update(tokens)
        padded = [BOS, BOS] + tokens + [EOS]
        for i in range(2, len(padded)):
            ctx = (padded[i - 2], padded[i - 1])
            tok = padded[i]
            ngram_counts.setdefault(ctx, {})
            ngram_counts[ctx][tok] = ngram_counts[ctx].get(tok, 0) + 1
            context_counts[ctx] = context_counts.get(ctx, 0) + 1
    return NGramLM(
        vocabulary=frozenset(vocab),
        smoothing_k=smoothing_k,
        ngram_counts=ngram_counts,
        context_counts=context_counts,
    )


def perplexity(lm: NGramLM, text: str) -> float:
    """exp of the mean negative log-probability per predicted token.

    Predicted tokens are every text token plus EOS, conditioned on
    trigram contexts padded with two BOS.
    """
    tokens = text.split()
    if not tokens:
        raise EmptyText("text has no tokens")
    padded = [BOS, BOS] + tokens + [EOS]
    nll = 0.0
    n_predicted = len(tokens) + 1
    for i in range(2, len(padded)):
        p = lm.prob((padded[i - 2], padded[i - 1]), padded[i])
        nll -= math.log(p)
    return math.exp(nll / n_predicted)
