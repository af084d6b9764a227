import math

import pytest

from metricprobe.errors import EmptyCorpus, EmptyText
from metricprobe.lm import BOS, EOS, UNK, NGramLM, perplexity, train_trigram


def test_vocabulary_enumeration():
    lm = train_trigram(["a b"])
    assert lm.vocabulary == frozenset({"a", "b", BOS, EOS, UNK})


def test_zero_smoothing_rejected():
    with pytest.raises(ValueError):
        train_trigram(["a b"], smoothing_k=0)


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        train_trigram(["   ", ""])


def test_retraining_deterministic():
    a = train_trigram(["a b c", "b c d"])
    b = train_trigram(["a b c", "b c d"])
    assert a.prob(("a", "b"), "c") == b.prob(("a", "b"), "c")


def test_uniform_model_perplexity_is_vocab_size():
    # zero counts everywhere: P(w|h) = k/(k|V|) = 1/|V|, so ppl = |V|
    vocab = frozenset({"a", "b", BOS, EOS, UNK})
    lm = NGramLM(vocabulary=vocab, smoothing_k=1.0)
    assert perplexity(lm, "a b a") == pytest.approx(5.0)
    assert perplexity(lm, "b") == pytest.approx(5.0)


def test_memorized_sentence_low_perplexity():
    # with tiny k the deterministic continuations approach probability 1
    lm = train_trigram(["a b c d"], smoothing_k=1e-9)
    assert perplexity(lm, "a b c d") == pytest.approx(1.0, abs=1e-5)


def test_whitespace_invariance():
    lm = train_trigram(["a b c"])
    assert perplexity(lm, "a b") == perplexity(lm, "  a b  ")


def test_empty_text():
    lm = train_trigram(["a b"])
    with pytest.raises(EmptyText):
        perplexity(lm, "   ")


def test_conditional_distributions_sum_to_one():
    lm = train_trigram(["a b c d", "b c a", "d a b"], smoothing_k=0.3)
    contexts = [(BOS, BOS), (BOS, "a"), ("a", "b"), ("b", "c"), ("zzz", "a")]
    for ctx in contexts:
        total = sum(lm.prob(ctx, w) for w in lm.vocabulary)
        assert total == pytest.approx(1.0, abs=1e-9)


def test_perplexity_at_least_one():
    lm = train_trigram(["a b c", "c b a"], smoothing_k=0.5)
    for text in ["a", "a b", "c b a", "zzz yyy"]:
        assert perplexity(lm, text) >= 1.0


def test_low_probability_token_monotonicity():
    # appending the least likely continuation cannot lower per-token NLL
    lm = train_trigram(["a a a a a", "a a b"], smoothing_k=0.1)
    base = "a a"
    base_nll = math.log(perplexity(lm, base))
    worst = min(lm.vocabulary - {BOS, EOS},
                key=lambda w: lm.prob(("a", "a"), w))
    extended_nll = math.log(perplexity(lm, f"{base} {worst}"))
    assert extended_nll >= base_nll - 1e-9
