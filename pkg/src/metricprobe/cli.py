"""Command-line entry point.

Pipeline: ingest -> normalize -> attack -> analyze -> hit-build ->
serve -> qc -> aggregate. Every subcommand drops a RunManifest next to
its outputs. Exit codes: 0 success, 1 validation/usage error, 2 runtime
error. Flags override environment variables (METRICPROBE_*), which
override defaults.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from . import __version__
from .attack import AttackConfig, GoalSpec, Scorers, run_campaign
from .corpus import filter_by_reference_length, ingest_tsv, load_jsonl, sample_per_system, save_jsonl
from .errors import MetricProbeError
from .hits import HIT, PayloadTuple, build_hit, finalize_dataset, qc_hit
from .lm import perplexity, train_trigram
from .metrics import (
    CorpusStats,
    EmbeddingTable,
    GreedyEmbedScorer,
    ScorePair,
    fit_normalizer,
)
from .metrics.client import ScorerClient, SubprocessTransport, TcpTransport
from .report import build_report, load_results, write_report_csv
from .transform import NeighborTable, SynonymProvider


def _write_manifest(out_path, command: str, params: dict):
    manifest = {
        "command": command,
        "params": {k: (str(v) if isinstance(v, Path) else v) for k, v in params.items()},
        "tool_version": __version__,
        "timestamp": time.time(),
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _parse_columns(spec: str) -> dict[str, int]:
    out = {}
    for part in spec.split(","):
        name, _, idx = part.partition("=")
        if not idx:
            raise click.UsageError(f"bad column mapping {part!r}; expected name=index")
        out[name.strip()] = int(idx)
    return out


def _load_embeddings(path) -> EmbeddingTable:
    vectors = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            token, _, rest = line.partition("\t")
            vec = [float(v) for v in rest.split()]
            if dim is None:
                dim = len(vec)
            vectors[token] = vec
    if dim is None:
        raise click.UsageError(f"empty embedding file {path}")
    return EmbeddingTable(vectors, dim)


def _build_metric(spec: str, embeddings):
    """Returns (scorer, external client or None)."""
    if spec == "surrogate":
        table = _load_embeddings(embeddings) if embeddings else None
        scorer = GreedyEmbedScorer(table) if table else GreedyEmbedScorer()
        return scorer, None
    if spec.startswith("external:"):
        target = spec[len("external:"):]
        host, _, port = target.rpartition(":")
        if host and port.isdigit() and "/" not in host and " " not in host:
            transport = TcpTransport(host, int(port))
        else:
            transport = SubprocessTransport(target.split())
        client = ScorerClient(transport)
        return client, client
    raise click.UsageError(f"unknown metric {spec!r}; use surrogate or external:<cmd-or-addr>")


def _load_stats(path) -> CorpusStats:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return CorpusStats(mean=data["mean"], std=data["std"])


@click.group()
@click.version_option(__version__)
def cli():
    """Adversarial robustness probing for MT evaluation metrics."""


@cli.command()
@click.option("--tsv", required=True, type=click.Path(exists=True))
@click.option("--columns", required=True, help="e.g. id=0,year=1,system=2,source=3,hypothesis=4,reference=5")
@click.option("--skip-header", is_flag=True, default=False)
@click.option("--min-ref-words", type=int, default=None,
              help="keep tuples with reference strictly longer than this many words")
@click.option("--sample-per-system", "sample_n", type=int, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, type=click.Path())
def ingest(tsv, columns, skip_header, min_ref_words, sample_n, seed, out):
    """Read a TSV corpus into the canonical JSONL form."""
    corpus = ingest_tsv(tsv, _parse_columns(columns), skip_header=skip_header)
    if min_ref_words is not None:
        corpus = filter_by_reference_length(corpus, min_words=min_ref_words)
    if sample_n is not None:
        corpus = sample_per_system(corpus, n=sample_n, seed=seed)
    save_jsonl(corpus, out)
    _write_manifest(out, "ingest", {
        "tsv": tsv, "columns": columns, "skip_header": skip_header,
        "min_ref_words": min_ref_words, "sample_per_system": sample_n,
        "seed": seed, "out": out,
    })
    click.echo(f"wrote {len(corpus)} tuples to {out}")


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--metric", default="surrogate", show_default=True)
@click.option("--embeddings", type=click.Path(exists=True), default=None)
@click.option("--out-stats", required=True, type=click.Path())
def normalize(corpus_path, metric, embeddings, out_stats):
    """Fit mean-0/std-1 normalization stats for a metric on a corpus."""
    corpus = load_jsonl(corpus_path)
    scorer, client = _build_metric(metric, embeddings)
    pairs = [ScorePair(t.hypothesis, t.reference, t.source) for t in corpus]
    scores = scorer.score_batch(pairs)
    stats = fit_normalizer(scores)
    Path(out_stats).write_text(json.dumps(
        {"metric": scorer.name, "mean": stats.mean, "std": stats.std, "n": len(scores)},
        sort_keys=True, indent=2) + "\n", encoding="utf-8")
    _write_manifest(out_stats, "normalize", {
        "corpus": corpus_path, "metric": metric, "out_stats": out_stats,
    })
    if client:
        client.close()
    click.echo(f"fitted stats on {len(scores)} scores")


_METHOD_ALIASES = {
    "clare": "clare_beam",
    "genetic": "genetic",
    "reduction": "input_reduction",
    "charbug": "char_greedy",
}


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--stats", "stats_path", required=True, type=click.Path(exists=True))
@click.option("--metric", default="surrogate", show_default=True)
@click.option("--embeddings", type=click.Path(exists=True), default=None)
@click.option("--method", type=click.Choice(sorted(_METHOD_ALIASES)), required=True)
@click.option("--goal", type=click.Choice(["overpenalize", "inconsistency"]), required=True)
@click.option("--synonyms", type=click.Path(exists=True), default=None,
              help="synonym TSV for the clare provider")
@click.option("--neighbors", type=click.Path(exists=True), default=None,
              help="neighbor TSV for the genetic method")
@click.option("--lm-texts", type=click.Path(exists=True), default=None,
              help="training texts for the trigram LM (default: corpus hypotheses)")
@click.option("--symmetric-similarity", is_flag=True, default=False,
              help="use the symmetric wrapper as the self-inconsistency constraint")
@click.option("--beam-width", type=int, default=2, show_default=True)
@click.option("--max-iterations", type=int, default=10, show_default=True)
@click.option("--population", type=int, default=30, show_default=True)
@click.option("--generations", type=int, default=15, show_default=True)
@click.option("--top-k", type=int, default=8, show_default=True)
@click.option("--neighbor-delta", type=float, default=0.5, show_default=True)
@click.option("--char-budget", type=int, default=30, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True, envvar="METRICPROBE_JOBS")
@click.option("--out", required=True, type=click.Path())
def attack(corpus_path, stats_path, metric, embeddings, method, goal, synonyms,
           neighbors, lm_texts, symmetric_similarity, beam_width, max_iterations,
           population, generations, top_k, neighbor_delta, char_budget, seed,
           jobs, out):
    """Run an attack campaign over a corpus and emit NDJSON results."""
    corpus = load_jsonl(corpus_path)
    stats = _load_stats(stats_path)
    scorer, client = _build_metric(metric, embeddings)

    goal_spec = GoalSpec(variant=goal)
    if goal == "overpenalize":
        if client is not None:
            ppl_fn = client.perplexity
        else:
            if lm_texts:
                texts = Path(lm_texts).read_text(encoding="utf-8").splitlines()
            else:
                texts = [t.hypothesis for t in corpus]
            lm = train_trigram(texts)
            ppl_fn = lambda text: perplexity(lm, text)
    else:
        ppl_fn = None
    scorers = Scorers(metric=scorer, stats=stats, ppl_fn=ppl_fn,
                      symmetric_similarity=symmetric_similarity)

    config = AttackConfig(
        method=_METHOD_ALIASES[method], beam_width=beam_width,
        max_iterations=max_iterations, population=population,
        generations=generations, top_k=top_k, neighbor_delta=neighbor_delta,
        char_budget=char_budget, seed=seed,
    )
    provider = SynonymProvider.from_tsv(synonyms) if synonyms else None
    table = NeighborTable.from_tsv(neighbors) if neighbors else None
    if config.method == "clare_beam" and provider is None:
        raise click.UsageError("--method clare requires --synonyms")
    if config.method == "genetic" and table is None:
        raise click.UsageError("--method genetic requires --neighbors")

    summary = run_campaign(corpus, config, goal_spec, scorers, out,
                           provider=provider, neighbor_table=table, jobs=jobs)
    summary_path = Path(str(out) + ".summary.json")
    summary_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n",
                            encoding="utf-8")
    _write_manifest(out, "attack", {
        "corpus": corpus_path, "stats": stats_path, "metric": metric,
        "method": method, "goal": goal, "seed": seed, "jobs": jobs, "out": out,
        "beam_width": beam_width, "max_iterations": max_iterations,
        "population": population, "generations": generations, "top_k": top_k,
        "neighbor_delta": neighbor_delta, "char_budget": char_budget,
    })
    if client:
        client.close()
    click.echo(f"{summary['successes']}/{summary['attempts']} successful attacks")


@cli.command()
@click.option("--results", multiple=True, required=True,
              help="label=path of an attack results NDJSON; repeatable")
@click.option("--ratings", type=click.Path(exists=True), default=None,
              help="aggregated human ratings JSON from the aggregate command")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None,
              help="corpus JSONL for year lookup")
@click.option("--resamples", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--csv", "emit_csv", is_flag=True, default=False)
@click.option("--report", "report_path", required=True, type=click.Path())
def analyze(results, ratings, corpus_path, resamples, seed, emit_csv, report_path):
    """Produce the statistical analysis report."""
    results_by_metric = {}
    for spec in results:
        label, _, path = spec.partition("=")
        if not path:
            raise click.UsageError(f"bad --results {spec!r}; expected label=path")
        results_by_metric[label] = load_results(path)
    human = None
    if ratings:
        human = json.loads(Path(ratings).read_text(encoding="utf-8")).get("aggregated")
    year_by_id = None
    if corpus_path:
        year_by_id = {t.id: t.year for t in load_jsonl(corpus_path)}
    report = build_report(results_by_metric, human=human, year_by_id=year_by_id,
                          bootstrap_resamples=resamples, seed=seed)
    Path(report_path).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n",
                                 encoding="utf-8")
    if emit_csv:
        write_report_csv(report, str(report_path))
    _write_manifest(report_path, "analyze", {
        "results": list(results), "ratings": ratings, "corpus": corpus_path,
        "resamples": resamples, "seed": seed, "csv": emit_csv,
    })
    click.echo(f"report written to {report_path}")


@cli.command("hit-build")
@click.option("--pairs", required=True, type=click.Path(exists=True),
              help="NDJSON of 70 payload records {id, reference, original, perturbed, meta?}")
@click.option("--seed", type=int, required=True)
@click.option("--out", required=True, type=click.Path())
def hit_build(pairs, seed, out):
    """Assemble one 100-item HIT from 70 payload tuples."""
    payload = []
    with open(pairs, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            payload.append(PayloadTuple(
                tuple_id=rec["id"], reference=rec["reference"],
                original=rec["original"], perturbed=rec["perturbed"],
                meta=rec.get("meta", {}),
            ))
    hit = build_hit(payload, seed=seed)
    hit.save(out)
    _write_manifest(out, "hit-build", {"pairs": pairs, "seed": seed, "out": out})
    click.echo(f"built {hit.hit_id} with {len(hit.items)} items")


@cli.command()
@click.option("--hits", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--store", required=True, type=click.Path())
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(hits, store, port, host):
    """Serve annotation sessions over HTTP."""
    from .service import serve as run_serve

    _write_manifest(store, "serve", {"hits": list(hits), "store": store, "port": port})
    run_serve(hits, store, port=port, host=host)


def _load_ratings_ndjson(path) -> dict:
    """Group ratings by (hit, annotator) -> {(item, side): raw}."""
    grouped: dict[tuple[str, str], dict] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            key = (rec["hit"], rec["annotator"])
            grouped.setdefault(key, {})[(rec["item"], rec["side"])] = rec["raw"]
    return grouped


@cli.command()
@click.option("--hit", "hit_path", required=True, type=click.Path(exists=True))
@click.option("--ratings", required=True, type=click.Path(exists=True))
def qc(hit_path, ratings):
    """Run the QC gate for every annotator of one HIT."""
    hit = HIT.load(hit_path)
    grouped = _load_ratings_ndjson(ratings)
    any_found = False
    for (hit_id, annotator), rmap in sorted(grouped.items()):
        if hit_id != hit.hit_id:
            continue
        any_found = True
        result, accepted = qc_hit(hit, rmap)
        verdict = "ACCEPT" if accepted else "REJECT"
        click.echo(f"{annotator}: {verdict} (p={result.p_value:.5f}, {result.method})")
    if not any_found:
        raise click.UsageError(f"no ratings for HIT {hit.hit_id!r} in {ratings}")


@cli.command()
@click.option("--ratings", required=True, type=click.Path(exists=True))
@click.option("--hits", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--meta", type=click.Path(exists=True), default=None,
              help="JSON map tuple id -> {metric, year, method} for the balance report")
@click.option("--min", "min_annotations", type=int, default=3, show_default=True)
@click.option("--out", required=True, type=click.Path())
def aggregate(ratings, hits, meta, min_annotations, out):
    """QC-gate annotators and aggregate accepted ratings into z-score means."""
    hit_by_id = {}
    for path in hits:
        hit = HIT.load(path)
        hit_by_id[hit.hit_id] = hit
    grouped = _load_ratings_ndjson(ratings)
    accepted = []
    rejected = []
    for (hit_id, annotator), rmap in sorted(grouped.items()):
        hit = hit_by_id.get(hit_id)
        if hit is None:
            raise click.UsageError(f"ratings reference unknown HIT {hit_id!r}")
        _, ok = qc_hit(hit, rmap)
        if ok:
            accepted.append((hit, annotator, rmap))
        else:
            rejected.append({"hit": hit_id, "annotator": annotator})
    metadata = json.loads(Path(meta).read_text(encoding="utf-8")) if meta else None
    dataset = finalize_dataset(accepted, min_annotations=min_annotations, metadata=metadata)
    dataset["rejected"] = rejected
    Path(out).write_text(json.dumps(dataset, sort_keys=True, indent=2) + "\n",
                         encoding="utf-8")
    _write_manifest(out, "aggregate", {
        "ratings": ratings, "hits": list(hits), "meta": meta,
        "min": min_annotations, "out": out,
    })
    click.echo(f"{len(accepted)} accepted, {len(rejected)} rejected HIT ratings; "
               f"{len(dataset['aggregated'])} aggregated items")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False, auto_envvar_prefix="METRICPROBE")
        return 0
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return 1
    except (MetricProbeError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:  # runtime failure
        click.echo(f"runtime error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
