"""Statistical analysis battery.

Pearson correlation with bootstrap standard error, one-sided
Wilcoxon/Mann-Whitney rank-sum tests (exact enumeration for small
samples, tie-corrected normal approximation otherwise), per-annotator
z-scoring and aggregation, dispersion comparison, and sentence-length
subset analysis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateAnnotator, DegenerateInput, TooLarge

EXACT_LIMIT = 14


@dataclass
class RatingRecord:
    annotator: str
    item: str
    raw: float
    z: Optional[float] = None
    degenerate: bool = False

    def __post_init__(self):
        if not 0 <= self.raw <= 100:
            raise ValueError(f"raw rating {self.raw} outside [0, 100]")


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str  # "exact" | "normal_approx"
    alternative: str  # "a_less" | "a_greater"


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation."""
    if len(x) != len(y) or len(x) < 3:
        raise DegenerateInput("need equal-length samples of size >= 3")
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    xd = xa - xa.mean()
    yd = ya - ya.mean()
    sxx = float((xd * xd).sum())
    syy = float((yd * yd).sum())
    if sxx == 0 or syy == 0:
        raise DegenerateInput("constant input")
    r = float((xd * yd).sum()) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def bootstrap_se(x: Sequence[float], y: Sequence[float], resamples: int = 10_000,
                 seed: int = 0) -> float:
    """Standard error of pearson(x, y) by paired bootstrap.

    Each resample uses its own counter-derived generator, so the result
    is seed-deterministic regardless of evaluation order. Degenerate
    draws (constant x or y) are redrawn up to 10 times, then skipped.
    """
    if len(x) != len(y) or len(x) < 3:
        raise DegenerateInput("need equal-length samples of size >= 3")
    pearson(x, y)  # validate nonconstant input
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    n = len(xa)
    stats = []
    skipped = 0
    for i in range(resamples):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        for _ in range(11):
            idx = rng.integers(0, n, size=n)
            xs, ys = xa[idx], ya[idx]
            if np.ptp(xs) > 0 and np.ptp(ys) > 0:
                stats.append(pearson(xs, ys))
                break
        else:
            skipped += 1
    if not stats:
        raise DegenerateInput("all bootstrap resamples degenerate")
    return float(np.std(stats))


def _midranks(pooled: Sequence[float]) -> list[float]:
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def rank_sum_exact(a: Sequence[float], b: Sequence[float],
                   alternative: str = "a_less") -> TestResult:
    """Exact one-sided rank-sum test by enumeration of all rank splits.

    p is the fraction of all C(n1+n2, n1) assignments of the pooled
    midranks whose a-rank-sum is as extreme as the observed one.
    """
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise DegenerateInput("empty sample")
    if n1 + n2 > EXACT_LIMIT:
        raise TooLarge(f"exact enumeration limited to n1+n2 <= {EXACT_LIMIT}")
    if alternative not in ("a_less", "a_greater"):
        raise ValueError(f"unknown alternative {alternative!r}")
    ranks = _midranks(list(a) + list(b))
    observed = sum(ranks[:n1])
    total = 0
    extreme = 0
    for combo in itertools.combinations(range(n1 + n2), n1):
        s = sum(ranks[i] for i in combo)
        total += 1
        if alternative == "a_less":
            extreme += s <= observed + 1e-12
        else:
            extreme += s >= observed - 1e-12
    return TestResult(statistic=observed, p_value=extreme / total,
                      method="exact", alternative=alternative)


def rank_sum_approx(a: Sequence[float], b: Sequence[float],
                    alternative: str = "a_less") -> TestResult:
    """Normal approximation of the one-sided Mann-Whitney rank-sum test
    with midranks, tie-corrected variance, and continuity correction."""
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise DegenerateInput("empty sample")
    if alternative not in ("a_less", "a_greater"):
        raise ValueError(f"unknown alternative {alternative!r}")
    pooled = list(a) + list(b)
    if min(pooled) == max(pooled):
        raise DegenerateInput("all pooled values identical")
    ranks = _midranks(pooled)
    r1 = sum(ranks[:n1])
    n = n1 + n2
    mean = n1 * (n + 1) / 2.0
    # tie correction: subtract sum(t^3 - t) / (n (n-1)) from (n+1) term
    tie_sum = 0.0
    seen: dict[float, int] = {}
    for v in pooled:
        seen[v] = seen.get(v, 0) + 1
    for t in seen.values():
        tie_sum += t**3 - t
    var = n1 * n2 / 12.0 * ((n + 1) - tie_sum / (n * (n - 1)))
    sd = math.sqrt(var)
    if alternative == "a_less":
        z = (r1 - mean + 0.5) / sd
        p = 0.5 * math.erfc(-z / math.sqrt(2))  # Phi(z)
    else:
        z = (r1 - mean - 0.5) / sd
        p = 0.5 * math.erfc(z / math.sqrt(2))  # 1 - Phi(z)
    return TestResult(statistic=r1, p_value=min(max(p, 0.0), 1.0),
                      method="normal_approx", alternative=alternative)


def rank_sum(a: Sequence[float], b: Sequence[float],
             alternative: str = "a_less") -> TestResult:
    """Exact when the pooled sample is small enough, else approximate."""
    if len(a) + len(b) <= EXACT_LIMIT:
        return rank_sum_exact(a, b, alternative)
    return rank_sum_approx(a, b, alternative)


def z_normalize_by_annotator(records: Sequence[RatingRecord]) -> list[RatingRecord]:
    """Fill per-annotator z-scores (sample standard deviation, N-1).

    Records of a constant-rating annotator are flagged degenerate
    rather than crashing; their z stays None.
    """
    by_annotator: dict[str, list[RatingRecord]] = {}
    for rec in records:
        by_annotator.setdefault(rec.annotator, []).append(rec)
    out = []
    for rec in records:
        group = by_annotator[rec.annotator]
        raws = [r.raw for r in group]
        mean = sum(raws) / len(raws)
        if len(raws) < 2:
            out.append(RatingRecord(rec.annotator, rec.item, rec.raw, z=None, degenerate=True))
            continue
        var = sum((v - mean) ** 2 for v in raws) / (len(raws) - 1)
        if var == 0:
            out.append(RatingRecord(rec.annotator, rec.item, rec.raw, z=None, degenerate=True))
            continue
        z = (rec.raw - mean) / math.sqrt(var)
        out.append(RatingRecord(rec.annotator, rec.item, rec.raw, z=z))
    return out


def aggregate_ratings(records: Sequence[RatingRecord], min_annotations: int = 3):
    """Mean z per item for items with >= min_annotations ratings.

    Returns (aggregated: item -> mean z, dropped: list of item ids).
    Degenerate (un-z-scored) records are ignored.
    """
    by_item: dict[str, list[float]] = {}
    for rec in records:
        if rec.z is None:
            if not rec.degenerate:
                raise DegenerateAnnotator(f"record for {rec.item} lacks a z-score")
            continue
        by_item.setdefault(rec.item, []).append(rec.z)
    aggregated = {}
    dropped = []
    for item, zs in by_item.items():
        if len(zs) >= min_annotations:
            aggregated[item] = sum(zs) / len(zs)
        else:
            dropped.append(item)
    return aggregated, dropped


def dispersion_compare(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """One-sided rank-sum on absolute deviations from each sample's median.

    Larger deviations in ``a`` (small p under "a_greater") mean ``a`` is
    the less consistent sample.
    """
    if len(a) < 3 or len(b) < 3:
        raise DegenerateInput("need >= 3 values per sample")
    med_a = float(np.median(a))
    med_b = float(np.median(b))
    dev_a = [abs(v - med_a) for v in a]
    dev_b = [abs(v - med_b) for v in b]
    return rank_sum(dev_a, dev_b, alternative="a_greater")


def length_analysis(subsets: dict[str, Sequence[str]]) -> dict:
    """Word-count summaries per subset plus pairwise one-sided rank-sum
    p-values on the counts (row subset tested as smaller)."""
    counts = {}
    for name, texts in subsets.items():
        if not texts:
            raise DegenerateInput(f"subset {name!r} is empty")
        counts[name] = [len(t.split()) for t in texts]
    summaries = {}
    for name, c in counts.items():
        summaries[name] = {
            "n": len(c),
            "min": int(min(c)),
            "median": float(np.median(c)),
            "mean": float(np.mean(c)),
            "max": int(max(c)),
        }
    pairwise = {}
    names = sorted(counts)
    for x in names:
        for y in names:
            if x == y:
                continue
            try:
                res = rank_sum_approx(counts[x], counts[y], alternative="a_less")
                pairwise[f"{x}<{y}"] = res.p_value
            except DegenerateInput:
                # constant pooled counts carry no evidence either way
                pairwise[f"{x}<{y}"] = 0.5
    return {"summaries": summaries, "pairwise_p": pairwise}
