"""Analysis report assembly.

Joins attack results with aggregated human ratings and produces the
JSON report: Pearson correlations (with bootstrap SE) on original and
perturbed translations, one-sided rank-sum comparisons of metric vs
human score drops, dispersion comparisons, and sentence-length subset
summaries. A CSV companion of the same tables can be emitted for
plotting.
"""

from __future__ import annotations

import csv
import json
from typing import Optional

from .errors import DegenerateInput
from .stats import (
    bootstrap_se,
    dispersion_compare,
    length_analysis,
    pearson,
    rank_sum_approx,
)

DISAGREEMENT_SUBSET_SIZE = 500


def load_results(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def _year_of(result: dict, year_by_id: Optional[dict]) -> str:
    if year_by_id and result["id"] in year_by_id:
        return year_by_id[result["id"]]
    return result["id"].split(":", 1)[0]


def _safe_pearson(x, y, resamples, seed):
    try:
        r = pearson(x, y)
        se = bootstrap_se(x, y, resamples=resamples, seed=seed)
        return {"r": r, "se": se, "n": len(x)}
    except DegenerateInput:
        return {"r": None, "se": None, "n": len(x)}


def build_report(results_by_metric: dict[str, list[dict]],
                 human: Optional[dict[str, float]] = None,
                 year_by_id: Optional[dict[str, str]] = None,
                 bootstrap_resamples: int = 10_000,
                 seed: int = 0) -> dict:
    """Assemble the full analysis report.

    ``results_by_metric`` maps a metric label to its attack-result
    records; ``human`` maps "<tuple_id>:original|perturbed" to the
    aggregated human z-score.
    """
    human = human or {}
    pearson_section = []
    wilcoxon_section = []
    lengths_section = {}

    for metric, results in sorted(results_by_metric.items()):
        by_combo: dict[tuple[str, str], list[dict]] = {}
        for res in results:
            key = (_year_of(res, year_by_id), res["method"])
            by_combo.setdefault(key, []).append(res)

        for (year, method), combo in sorted(by_combo.items()):
            rows = []
            for res in combo:
                if not res["success"]:
                    continue
                h_orig = human.get(f"{res['id']}:original")
                h_pert = human.get(f"{res['id']}:perturbed")
                if h_orig is None or h_pert is None:
                    continue
                rows.append({
                    "metric_orig": res["score_orig_norm"],
                    "metric_pert": res["score_pert_norm"],
                    "human_orig": h_orig,
                    "human_pert": h_pert,
                })
            entry = {"metric": metric, "year": year, "method": method}
            if len(rows) >= 3:
                entry["original"] = _safe_pearson(
                    [r["metric_orig"] for r in rows], [r["human_orig"] for r in rows],
                    bootstrap_resamples, seed)
                entry["perturbed"] = _safe_pearson(
                    [r["metric_pert"] for r in rows], [r["human_pert"] for r in rows],
                    bootstrap_resamples, seed)
            else:
                entry["original"] = entry["perturbed"] = {"r": None, "se": None, "n": len(rows)}
            pearson_section.append(entry)

            w_entry = {"metric": metric, "year": year, "method": method,
                       "n": len(rows), "p_drop_greater": None, "p_dispersion": None}
            if len(rows) >= 3:
                metric_drops = [r["metric_orig"] - r["metric_pert"] for r in rows]
                human_drops = [r["human_orig"] - r["human_pert"] for r in rows]
                try:
                    w_entry["p_drop_greater"] = rank_sum_approx(
                        metric_drops, human_drops, alternative="a_greater").p_value
                    w_entry["p_dispersion"] = dispersion_compare(
                        metric_drops, human_drops).p_value
                except DegenerateInput:
                    pass
            wilcoxon_section.append(w_entry)

        # length subsets over all results for this metric
        all_originals = [r["original"] for r in results]
        eligible = [r["original"] for r in results if r["success"]]
        scored = []
        for r in results:
            if not r["success"]:
                continue
            h_orig = human.get(f"{r['id']}:original")
            h_pert = human.get(f"{r['id']}:perturbed")
            if h_orig is None or h_pert is None:
                continue
            metric_drop = r["score_orig_norm"] - r["score_pert_norm"]
            scored.append((abs(metric_drop - (h_orig - h_pert)), r["original"]))
        scored.sort(key=lambda s: -s[0])
        disagreement = [t for _, t in scored[:DISAGREEMENT_SUBSET_SIZE]]
        subsets = {"all_originals": all_originals}
        if eligible:
            subsets["eligible"] = eligible
        if disagreement:
            subsets["most_disagreement"] = disagreement
        lengths_section[metric] = length_analysis(subsets)

    return {"pearson": pearson_section, "wilcoxon": wilcoxon_section,
            "lengths": lengths_section}


def write_report_csv(report: dict, base_path: str):
    """Emit the report tables as CSV files next to ``base_path``."""
    with open(base_path + ".pearson.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "year", "method", "side", "r", "se", "n"])
        for entry in report["pearson"]:
            for side in ("original", "perturbed"):
                s = entry[side]
                w.writerow([entry["metric"], entry["year"], entry["method"],
                            side, s["r"], s["se"], s["n"]])
    with open(base_path + ".wilcoxon.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "year", "method", "n", "p_drop_greater", "p_dispersion"])
        for entry in report["wilcoxon"]:
            w.writerow([entry["metric"], entry["year"], entry["method"],
                        entry["n"], entry["p_drop_greater"], entry["p_dispersion"]])
    with open(base_path + ".lengths.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "subset", "n", "min", "median", "mean", "max"])
        for metric, section in report["lengths"].items():
            for subset, s in section["summaries"].items():
                w.writerow([metric, subset, s["n"], s["min"], s["median"],
                            s["mean"], s["max"]])
