"""HIT assembly, annotator quality control, and dataset finalization.

A HIT bundles 100 annotation items: 70 payload tuples plus 30 controls
(15 duplicates of payload items, 15 degraded copies with four words
dropped from each translation). Control links drive the rank-sum QC
gate: an annotator is accepted only when their duplicate-pair rating
differences are significantly smaller than their degraded-pair ones.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

from .errors import IncompleteRatings, TooShortForDegradation, WrongPayloadCount
from .stats import (
    RatingRecord,
    TestResult,
    aggregate_ratings,
    rank_sum,
    z_normalize_by_annotator,
)
from .transform import TokenSeq, diff_highlight

PAYLOAD_COUNT = 70
DUPLICATE_COUNT = 15
DEGRADED_COUNT = 15
HIT_SIZE = PAYLOAD_COUNT + DUPLICATE_COUNT + DEGRADED_COUNT
DEGRADE_DROPS = 4
QC_ALPHA = 0.05


@dataclass(frozen=True)
class PayloadTuple:
    """One attacked tuple offered for annotation."""

    tuple_id: str
    reference: str
    original: str
    perturbed: str
    meta: dict = field(default_factory=dict)  # e.g. metric / year / method


@dataclass
class HITItem:
    index: int
    kind: str  # payload | duplicate | degraded
    tuple_id: str
    reference: str
    left: str
    right: str
    left_is_original: bool
    highlight_left: list[int]
    highlight_right: list[int]
    control_link: Optional[int] = None  # final index of the linked payload item

    def side_text(self, which: str) -> str:
        return self.left if which == "left" else self.right

    def side_of(self, translation: str) -> str:
        """Display side ("left"/"right") holding the given translation role."""
        if translation == "original":
            return "left" if self.left_is_original else "right"
        return "right" if self.left_is_original else "left"


@dataclass
class HIT:
    hit_id: str
    seed: int
    items: list[HITItem]

    def to_dict(self) -> dict:
        return {"hit_id": self.hit_id, "seed": self.seed,
                "items": [asdict(it) for it in self.items]}

    @classmethod
    def from_dict(cls, d: dict) -> "HIT":
        return cls(hit_id=d["hit_id"], seed=d["seed"],
                   items=[HITItem(**it) for it in d["items"]])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)

    @classmethod
    def load(cls, path) -> "HIT":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _highlights(original: str, perturbed: str) -> tuple[list[int], list[int]]:
    orig_seq = TokenSeq.from_text(original)
    pert_seq = TokenSeq.from_text(perturbed)
    on_perturbed = sorted(diff_highlight(orig_seq, pert_seq))
    on_original = sorted(diff_highlight(pert_seq, orig_seq))
    return on_original, on_perturbed


def _make_item(kind: str, payload: PayloadTuple, original: str, perturbed: str,
               rng: random.Random) -> HITItem:
    hl_orig, hl_pert = _highlights(original, perturbed)
    left_is_original = rng.random() < 0.5
    if left_is_original:
        left, right = original, perturbed
        hl_left, hl_right = hl_orig, hl_pert
    else:
        left, right = perturbed, original
        hl_left, hl_right = hl_pert, hl_orig
    return HITItem(
        index=-1,
        kind=kind,
        tuple_id=payload.tuple_id,
        reference=payload.reference,
        left=left,
        right=right,
        left_is_original=left_is_original,
        highlight_left=hl_left,
        highlight_right=hl_right,
    )


def _drop_words(text: str, rng: random.Random) -> str:
    words = text.split()
    drop = set(rng.sample(range(len(words)), DEGRADE_DROPS))
    return " ".join(w for i, w in enumerate(words) if i not in drop)


def build_hit(payload: Sequence[PayloadTuple], seed: int, hit_id: Optional[str] = None) -> HIT:
    """Assemble one 100-item HIT from exactly 70 payload tuples.

    Duplicate and degraded links are drawn without replacement within
    each kind (cross-kind overlap allowed); degraded copies drop four
    word positions independently per side. All randomness derives from
    ``seed``.
    """
    if len(payload) != PAYLOAD_COUNT:
        raise WrongPayloadCount(f"need exactly {PAYLOAD_COUNT} payload tuples, got {len(payload)}")
    rng = random.Random(seed)

    entries = []  # (item, payload_index or None)
    for p in payload:
        entries.append((_make_item("payload", p, p.original, p.perturbed, rng), None))

    dup_links = sorted(rng.sample(range(PAYLOAD_COUNT), DUPLICATE_COUNT))
    eligible = [
        i for i, p in enumerate(payload)
        if len(p.original.split()) >= 2 * DEGRADE_DROPS
        and len(p.perturbed.split()) >= 2 * DEGRADE_DROPS
    ]
    if len(eligible) < DEGRADED_COUNT:
        raise TooShortForDegradation(
            f"only {len(eligible)} payload tuples have >= {2 * DEGRADE_DROPS} words per side"
        )
    deg_links = sorted(rng.sample(eligible, DEGRADED_COUNT))

    for link in dup_links:
        p = payload[link]
        entries.append((_make_item("duplicate", p, p.original, p.perturbed, rng), link))
    for link in deg_links:
        p = payload[link]
        degraded_original = _drop_words(p.original, rng)
        degraded_perturbed = _drop_words(p.perturbed, rng)
        entries.append((_make_item("degraded", p, degraded_original, degraded_perturbed, rng), link))

    order = list(range(HIT_SIZE))
    rng.shuffle(order)
    final_index_of_payload = {}
    items: list[HITItem] = [None] * HIT_SIZE
    for new_idx, old_idx in enumerate(order):
        item, link = entries[old_idx]
        item.index = new_idx
        items[new_idx] = item
        if old_idx < PAYLOAD_COUNT:
            final_index_of_payload[old_idx] = new_idx
    for new_idx, old_idx in enumerate(order):
        _, link = entries[old_idx]
        if link is not None:
            items[new_idx].control_link = final_index_of_payload[link]

    if hit_id is None:
        hit_id = f"hit-{seed}"
    return HIT(hit_id=hit_id, seed=seed, items=items)


def qc_hit(hit: HIT, ratings: dict) -> tuple[TestResult, bool]:
    """Quality-control gate for one annotator's complete HIT ratings.

    ``ratings`` maps (item index, display side) -> raw rating. Rating
    differences are computed against the linked payload item per
    translation role (original / perturbed) and pooled; the annotator is
    accepted iff the one-sided rank-sum p (duplicate diffs smaller than
    degraded diffs) is <= 0.05.
    """
    for item in hit.items:
        for side in ("left", "right"):
            if (item.index, side) not in ratings:
                raise IncompleteRatings(f"missing rating for item {item.index} side {side}")

    def rating_for(item: HITItem, role: str) -> float:
        return ratings[(item.index, item.side_of(role))]

    dup_diffs, deg_diffs = [], []
    by_index = {it.index: it for it in hit.items}
    for item in hit.items:
        if item.kind == "payload":
            continue
        linked = by_index[item.control_link]
        sink = dup_diffs if item.kind == "duplicate" else deg_diffs
        for role in ("original", "perturbed"):
            sink.append(abs(rating_for(item, role) - rating_for(linked, role)))

    pooled = dup_diffs + deg_diffs
    if min(pooled) == max(pooled):
        # no separation signal at all: cannot validate the annotator
        result = TestResult(statistic=float("nan"), p_value=1.0,
                            method="degenerate", alternative="a_less")
        return result, False
    result = rank_sum(dup_diffs, deg_diffs, alternative="a_less")
    return result, result.p_value <= QC_ALPHA


def payload_rating_records(hit: HIT, annotator: str, ratings: dict) -> list[RatingRecord]:
    """Extract RatingRecords for payload items only (controls excluded),
    keyed by tuple id and translation role."""
    records = []
    for item in hit.items:
        if item.kind != "payload":
            continue
        for role in ("original", "perturbed"):
            side = item.side_of(role)
            records.append(RatingRecord(
                annotator=annotator,
                item=f"{item.tuple_id}:{role}",
                raw=ratings[(item.index, side)],
            ))
    return records


def finalize_dataset(accepted: Sequence[tuple[HIT, str, dict]],
                     min_annotations: int = 3,
                     metadata: Optional[dict] = None) -> dict:
    """Aggregate accepted HIT ratings into per-item mean z-scores.

    ``accepted`` holds (hit, annotator, ratings) triples that passed QC.
    ``metadata`` optionally maps tuple id -> {metric, year, method} for
    the balance report.
    """
    records: list[RatingRecord] = []
    for hit, annotator, ratings in accepted:
        records.extend(payload_rating_records(hit, annotator, ratings))
    records = z_normalize_by_annotator(records)
    aggregated, dropped = aggregate_ratings(records, min_annotations=min_annotations)

    balance: dict[str, int] = {}
    if metadata:
        for item in aggregated:
            tuple_id = item.rsplit(":", 1)[0]
            meta = metadata.get(tuple_id, {})
            key = "/".join(str(meta.get(k, "?")) for k in ("metric", "year", "method"))
            balance[key] = balance.get(key, 0) + 1

    return {"aggregated": aggregated, "dropped": dropped, "balance": balance}
