import pytest

from metricprobe.corpus import (
    Corpus,
    filter_by_reference_length,
    ingest_tsv,
    load_jsonl,
    sample_per_system,
    save_jsonl,
)
from metricprobe.errors import DuplicateId, EmptyField, MissingColumn

from conftest import make_tuple

FULL_MAP = {"id": 0, "year": 1, "system": 2, "source": 3, "hypothesis": 4, "reference": 5}
NO_ID_MAP = {"year": 0, "system": 1, "source": 2, "hypothesis": 3, "reference": 4}


def write_tsv(path, rows):
    path.write_text("\n".join("\t".join(r) for r in rows) + "\n", encoding="utf-8")


def test_ingest_basic(tmp_path):
    f = tmp_path / "c.tsv"
    write_tsv(f, [
        ["t1", "wmt12", "sysA", "s1", "h1", "r1"],
        ["t2", "wmt12", "sysA", "s2", "h2", "r2"],
        ["t3", "wmt12", "sysB", "s3", "h3", "r3"],
    ])
    corpus = ingest_tsv(f, FULL_MAP)
    assert [t.id for t in corpus] == ["t1", "t2", "t3"]
    assert corpus.tuples[2].system == "sysB"


def test_ingest_empty_reference_names_row(tmp_path):
    f = tmp_path / "c.tsv"
    write_tsv(f, [
        ["t1", "wmt12", "sysA", "s1", "h1", "r1"],
        ["t2", "wmt12", "sysA", "s2", "h2", "  "],
    ])
    with pytest.raises(EmptyField, match="row 1"):
        ingest_tsv(f, FULL_MAP)


def test_ingest_synthesizes_ids(tmp_path):
    f = tmp_path / "c.tsv"
    write_tsv(f, [
        ["wmt17", "sysA", "s1", "h1", "r1"],
        ["wmt17", "sysA", "s2", "h2", "r2"],
    ])
    corpus = ingest_tsv(f, NO_ID_MAP)
    assert [t.id for t in corpus] == ["wmt17:sysA:0", "wmt17:sysA:1"]


def test_ingest_duplicate_id(tmp_path):
    f = tmp_path / "c.tsv"
    write_tsv(f, [
        ["t1", "wmt12", "sysA", "s1", "h1", "r1"],
        ["t1", "wmt12", "sysA", "s2", "h2", "r2"],
    ])
    with pytest.raises(DuplicateId):
        ingest_tsv(f, FULL_MAP)


def test_ingest_missing_column(tmp_path):
    f = tmp_path / "c.tsv"
    write_tsv(f, [["t1", "wmt12", "sysA", "s1", "h1"]])
    with pytest.raises(MissingColumn):
        ingest_tsv(f, FULL_MAP)


def test_ingest_byte_stable(tmp_path):
    f = tmp_path / "c.tsv"
    write_tsv(f, [["t1", "wmt12", "sysA", "s1", "h1", "r1"]])
    assert ingest_tsv(f, FULL_MAP).tuples == ingest_tsv(f, FULL_MAP).tuples


def test_filter_strictly_greater():
    eleven = " ".join(["w"] * 11)
    ten = " ".join(["w"] * 10)
    corpus = Corpus(tuples=[
        make_tuple(0, "h", eleven),
        make_tuple(1, "h", ten),
    ])
    out = filter_by_reference_length(corpus, min_words=10)
    assert [t.id for t in out] == [corpus.tuples[0].id]


def test_filter_zero_boundary():
    corpus = Corpus(tuples=[make_tuple(0, "h", "a")])
    assert len(filter_by_reference_length(corpus, min_words=0)) == 1


def test_filter_idempotent(small_corpus):
    once = filter_by_reference_length(small_corpus, min_words=3)
    twice = filter_by_reference_length(once, min_words=3)
    assert once.tuples == twice.tuples


def test_sample_keeps_small_groups(small_corpus):
    out = sample_per_system(small_corpus, n=500, seed=7)
    assert len(out) == 3


def test_sample_deterministic():
    tuples = [make_tuple(i, f"h {i}", f"r {i}") for i in range(50)]
    corpus = Corpus(tuples=tuples)
    a = sample_per_system(corpus, n=10, seed=42)
    b = sample_per_system(corpus, n=10, seed=42)
    assert [t.id for t in a] == [t.id for t in b]


def test_sample_caps_per_group():
    tuples = [make_tuple(i, f"h {i}", f"r {i}", system="sysA") for i in range(1000)]
    tuples += [make_tuple(i + 1000, f"h {i}", f"r {i}", system="sysB") for i in range(1000)]
    corpus = Corpus(tuples=tuples)
    out = sample_per_system(corpus, n=500, seed=3)
    assert len(out) == 1000
    assert sum(1 for t in out if t.system == "sysA") == 500
    assert {t.id for t in out} <= {t.id for t in corpus}


def test_sample_group_isolation():
    """Adding a new system must not reshuffle existing systems' samples."""
    base = [make_tuple(i, f"h {i}", f"r {i}", system="sysA") for i in range(100)]
    extra = [make_tuple(i + 100, f"h {i}", f"r {i}", system="sysB") for i in range(100)]
    only_a = sample_per_system(Corpus(tuples=base), n=20, seed=5)
    both = sample_per_system(Corpus(tuples=base + extra), n=20, seed=5)
    a_ids = [t.id for t in only_a]
    assert [t.id for t in both if t.system == "sysA"] == a_ids


def test_jsonl_round_trip(tmp_path, small_corpus):
    path = tmp_path / "corpus.jsonl"
    save_jsonl(small_corpus, path)
    loaded = load_jsonl(path)
    assert loaded.tuples == small_corpus.tuples
