"""Constructed mini-corpora with known-vulnerable tuples.

Each builder returns a World whose planted tuples are vulnerable to a
single provider edit by construction, so searches can be checked against
a brute-force oracle over the same edit space.
"""

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from metricprobe.attack import (
    INCONSISTENCY,
    OVERPENALIZE,
    GoalSpec,
    Scorers,
    evaluate_goal,
    make_instance,
)
from metricprobe.corpus import Corpus, TranslationTuple
from metricprobe.lm import perplexity, train_trigram
from metricprobe.metrics import (
    EMPTY_TABLE,
    EmbeddingTable,
    GreedyEmbedScorer,
    ScorePair,
    fit_normalizer,
)
from metricprobe.transform import EditOp, NeighborTable, SynonymProvider, TokenSeq, apply_edit

BASE = [f"w{k:02d}" for k in range(16)]


@dataclass
class World:
    corpus: Corpus
    scorers: Scorers
    goal: GoalSpec
    planted: set
    provider: Optional[SynonymProvider] = None
    neighbor_table: Optional[NeighborTable] = None
    extras: dict = field(default_factory=dict)


def _tuple(i, hyp, ref, year="wmt17", system="sysA"):
    return TranslationTuple(
        id=f"{year}:{system}:{i}", year=year, system=system,
        source=f"src {i}", hypothesis=" ".join(hyp), reference=" ".join(ref),
    )


def _fit(metric, tuples):
    return fit_normalizer([metric.score(ScorePair(t.hypothesis, t.reference)) for t in tuples])


def build_overpenalize_world(n=60, seed=0) -> World:
    """Planted tuples equal their reference and contain "alpha"; swapping
    alpha -> omega drops F1 by 1/8 raw, well past one corpus sigma, and
    costs nothing in perplexity because the LM sees omega in the same
    contexts. Fillers either lack alpha (no candidates) or carry alpha
    only on the hypothesis side (swap changes nothing)."""
    rng = random.Random(f"overpen:{seed}")
    tuples = []
    planted = set()
    lm_texts = []
    for i in range(n):
        ref = [rng.choice(BASE) for _ in range(8)]
        if i % 4 == 0:
            ref[rng.randrange(8)] = "alpha"
            hyp = list(ref)
            planted.add(f"wmt17:sysA:{i}")
        elif i % 8 == 3:
            hyp = list(ref)
            hyp[rng.randrange(8)] = "alpha"
        else:
            hyp = list(ref)
            for j in rng.sample(range(8), 1 + (i % 2)):
                hyp[j] = f"junk{i}_{j}"
        tuples.append(_tuple(i, hyp, ref))
        lm_texts.append(" ".join(hyp))
        if "alpha" in hyp:
            lm_texts.append(" ".join("omega" if t == "alpha" else t for t in hyp))
    metric = GreedyEmbedScorer(EMPTY_TABLE)
    lm = train_trigram(lm_texts)
    scorers = Scorers(metric=metric, stats=_fit(metric, tuples),
                      ppl_fn=lambda text: perplexity(lm, text))
    goal = GoalSpec(variant=OVERPENALIZE, drop_sigma=1.0, ppl_delta_max=10.0)
    provider = SynonymProvider({"alpha": ["omega"]})
    return World(Corpus(tuples=tuples), scorers, goal, planted,
                 provider=provider, extras={"lm": lm, "lm_texts": lm_texts})


def build_inconsistency_world(n=40, seed=0) -> World:
    """Planted hypotheses hold two "alpha" tokens plus "omg2"; swapping
    one alpha for "omg1" (cosine 0.98 to omg2) barely moves the metric
    as a similarity to the original but opens a large drop against the
    reference, because the greedy matcher lets both reference alphas
    reuse the one remaining hypothesis alpha."""
    rng = random.Random(f"incons:{seed}")
    angle = math.acos(0.98)
    table = EmbeddingTable(
        {"omg1": (1.0, 0.0), "omg2": (math.cos(angle), math.sin(angle))}, 2
    )
    tuples = []
    planted = set()
    for i in range(n):
        body = [rng.choice(BASE) for _ in range(5)]
        if i % 4 == 0:
            hyp = body + ["alpha", "alpha", "omg2"]
            ref = body + ["alpha", "alpha", "rho"]
            planted.add(f"wmt17:sysA:{i}")
        else:
            ref = body + [rng.choice(BASE) for _ in range(3)]
            hyp = list(ref)
            if i % 4 != 1:
                for j in rng.sample(range(8), 1 + (i % 2)):
                    hyp[j] = f"junk{i}_{j}"
        tuples.append(_tuple(i, hyp, ref))
    metric = GreedyEmbedScorer(table)
    scorers = Scorers(metric=metric, stats=_fit(metric, tuples))
    goal = GoalSpec(variant=INCONSISTENCY, score_drop=0.4, similarity_gap_max=0.3)
    provider = SynonymProvider({"alpha": ["omg1"]})
    return World(Corpus(tuples=tuples), scorers, goal, planted, provider=provider)


def build_genetic_world(n=12, seed=0, drop_subs=2, ppl_delta_max=1000.0) -> World:
    """Every base word has one in-threshold neighbor ("<word>x", distance
    0.3) and one out-of-threshold neighbor (distance 0.9). Hypotheses
    equal their references, so each accepted substitution lowers raw F1
    by exactly 1/8; drop_sigma is pinned so success needs ``drop_subs``
    substitutions."""
    rng = random.Random(f"genetic:{seed}")
    tuples = []
    planted = set()
    for i in range(n):
        ref = [rng.choice(BASE) for _ in range(8)]
        if i % 2 == 0:
            hyp = list(ref)
            planted.add(f"wmt17:sysA:{i}")
        else:
            hyp = list(ref)
            hyp[rng.randrange(8)] = f"junk{i}"
        tuples.append(_tuple(i, hyp, ref))
    metric = GreedyEmbedScorer(EMPTY_TABLE)
    stats = _fit(metric, tuples)
    lm = train_trigram([t.hypothesis for t in tuples])
    scorers = Scorers(metric=metric, stats=stats, ppl_fn=lambda text: perplexity(lm, text))
    # k substitutions drop raw F1 by k/8; require strictly more than
    # (drop_subs - 0.5) of those units so exactly drop_subs suffice
    per_sub = (1.0 / 8.0) / stats.std
    goal = GoalSpec(variant=OVERPENALIZE, drop_sigma=(drop_subs - 0.5) * per_sub,
                    ppl_delta_max=ppl_delta_max)
    table = NeighborTable({w: [(w + "x", 0.3), (w + "zz", 0.9)] for w in BASE})
    return World(Corpus(tuples=tuples), scorers, goal, planted,
                 neighbor_table=table, extras={"per_sub": per_sub})


def single_edit_oracle(tup, goal, scorers, provider, top_k=8):
    """Best successful single provider edit, or None.

    Returns (objective, perturbed_text) maximizing the objective over
    every replace/insert/merge payload the provider offers anywhere.
    """
    instance = make_instance(tup, goal, scorers)
    seq = TokenSeq.from_text(tup.hypothesis)
    n = len(seq)
    sites = (
        [("replace", i) for i in range(n)]
        + [("insert", i) for i in range(n + 1)]
        + [("merge", i) for i in range(n - 1)]
    )
    best = None
    for kind, site in sites:
        for payload in provider.propose(seq, site, kind, top_k):
            try:
                new_seq = apply_edit(seq, EditOp(kind, site, payload=payload))
            except Exception:
                continue
            ev = evaluate_goal(instance, new_seq.text, goal, scorers)
            if ev.success and (best is None or ev.objective > best[0]):
                best = (ev.objective, new_seq.text)
    return best
