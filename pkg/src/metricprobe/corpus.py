"""Corpus ingestion, filtering, and per-system sampling.

A corpus is an ordered collection of (source, hypothesis, reference)
tuples with year/system provenance. All operations are pure: they
return new Corpus objects and never mutate their inputs.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field

from .errors import DuplicateId, EmptyField, MissingColumn


@dataclass(frozen=True)
class TranslationTuple:
    id: str
    year: str
    system: str
    source: str
    hypothesis: str
    reference: str


@dataclass
class Corpus:
    tuples: list[TranslationTuple] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.tuples)

    def __len__(self):
        return len(self.tuples)


def save_jsonl(corpus: Corpus, path):
    """One tuple per line, deterministic key order."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in corpus:
            fh.write(json.dumps(asdict(t), sort_keys=True) + "\n")


def load_jsonl(path) -> Corpus:
    tuples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                tuples.append(TranslationTuple(**json.loads(line)))
    return Corpus(tuples=tuples, provenance={"path": str(path)})


#: columns understood by ingest_tsv; "id" is optional.
REQUIRED_COLUMNS = ("year", "system", "source", "hypothesis", "reference")


def ingest_tsv(path, column_map: dict[str, int], skip_header: bool = False) -> Corpus:
    """Read a tab-separated file into a Corpus.

    ``column_map`` maps field names to 0-based column indices. When no
    "id" column is mapped, ids are synthesized as "<year>:<system>:<row#>".
    """
    for name in REQUIRED_COLUMNS:
        if name not in column_map:
            raise MissingColumn(f"column map lacks required field {name!r}")

    tuples = []
    seen_ids = set()
    with open(path, encoding="utf-8") as fh:
        rows = enumerate(fh)
        if skip_header:
            next(rows, None)
        for row_num, line in rows:
            line = line.rstrip("\n")
            if not line:
                continue
            cells = line.split("\t")
            values = {}
            for name, idx in column_map.items():
                if idx >= len(cells):
                    raise MissingColumn(
                        f"row {row_num}: column {idx} for {name!r} out of range"
                    )
                values[name] = cells[idx]
            for name in ("source", "hypothesis", "reference"):
                if not values[name].strip():
                    raise EmptyField(f"row {row_num}: empty {name!r}")
            tid = values.get("id")
            if tid is None:
                tid = f"{values['year']}:{values['system']}:{row_num}"
            if tid in seen_ids:
                raise DuplicateId(f"row {row_num}: duplicate id {tid!r}")
            seen_ids.add(tid)
            tuples.append(
                TranslationTuple(
                    id=tid,
                    year=values["year"],
                    system=values["system"],
                    source=values["source"],
                    hypothesis=values["hypothesis"],
                    reference=values["reference"],
                )
            )
    return Corpus(tuples=tuples, provenance={"path": str(path)})


def filter_by_reference_length(corpus: Corpus, min_words: int = 10) -> Corpus:
    """Keep tuples whose reference has strictly more than ``min_words`` words.

    Words are maximal whitespace-delimited tokens.
    """
    if min_words < 0:
        raise ValueError("min_words must be >= 0")
    kept = [t for t in corpus.tuples if len(t.reference.split()) > min_words]
    return Corpus(tuples=kept, provenance=dict(corpus.provenance))


def sample_per_system(corpus: Corpus, n: int = 500, seed: int = 0) -> Corpus:
    """Sample up to ``n`` tuples per (year, system) group without replacement.

    Each group gets its own generator seeded from (seed, year, system),
    so adding a new system never reshuffles the samples of other systems.
    Output is ordered by (year, system, original position).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    groups: dict[tuple[str, str], list[tuple[int, TranslationTuple]]] = {}
    for pos, t in enumerate(corpus.tuples):
        groups.setdefault((t.year, t.system), []).append((pos, t))

    sampled = []
    for key in sorted(groups):
        members = groups[key]
        rng = random.Random(f"{seed}:{key[0]}:{key[1]}")
        take = min(n, len(members))
        chosen = rng.sample(range(len(members)), take)
        for i in sorted(chosen):
            sampled.append(members[i][1])
    return Corpus(tuples=sampled, provenance=dict(corpus.provenance))
