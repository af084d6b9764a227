import random

import pytest

from metricprobe.corpus import Corpus, TranslationTuple

WORDS = [
    "anchor", "breeze", "candle", "drift", "ember", "fable", "glade",
    "harbor", "inlet", "jasper", "kestrel", "lantern", "meadow", "nectar",
    "orchard", "pebble", "quarry", "ripple", "saddle", "thicket",
]


def make_tuple(i, hypothesis, reference, year="wmt17", system="sysA", source=None):
    return TranslationTuple(
        id=f"{year}:{system}:{i}",
        year=year,
        system=system,
        source=source or f"quelle {i}",
        hypothesis=hypothesis,
        reference=reference,
    )


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def small_corpus():
    tuples = [
        make_tuple(0, "anchor breeze candle drift", "anchor breeze candle drift"),
        make_tuple(1, "ember fable glade harbor", "ember fable glade thicket"),
        make_tuple(2, "inlet jasper kestrel lantern", "inlet jasper meadow nectar"),
    ]
    return Corpus(tuples=tuples)


def random_sentence(rng, n_min=3, n_max=10):
    n = rng.randint(n_min, n_max)
    return " ".join(rng.choice(WORDS) for _ in range(n))
