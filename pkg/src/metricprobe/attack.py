"""Attack goals, constraints, search strategies, and the campaign runner.

Two probes are supported. Overpenalization searches for a perturbed
hypothesis whose normalized metric score drops by more than a threshold
while staying within a perplexity budget. Self-inconsistency searches
for a perturbed hypothesis the metric still judges as close to the
original (as a similarity measure) yet scores far worse against the
reference.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Callable, Optional

from .corpus import Corpus, TranslationTuple
from .errors import NoEligibleSites
from .metrics import CorpusStats, MetricScorer, ScorePair, normalize, symmetric_score
from .transform import (
    CandidateProvider,
    EditOp,
    NeighborTable,
    TokenSeq,
    apply_edit,
    char_perturbations,
    neighbors_within,
)

OVERPENALIZE = "overpenalize"
INCONSISTENCY = "inconsistency"


@dataclass(frozen=True)
class GoalSpec:
    variant: str = OVERPENALIZE
    drop_sigma: float = 1.0
    ppl_delta_max: float = 10.0
    score_drop: float = 0.4
    similarity_gap_max: float = 0.3

    def __post_init__(self):
        if self.variant not in (OVERPENALIZE, INCONSISTENCY):
            raise ValueError(f"unknown goal variant {self.variant!r}")
        for name in ("drop_sigma", "ppl_delta_max", "score_drop", "similarity_gap_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def threshold(self) -> float:
        return self.drop_sigma if self.variant == OVERPENALIZE else self.score_drop


@dataclass
class AttackConfig:
    method: str = "clare_beam"  # clare_beam | genetic | input_reduction | char_greedy
    beam_width: int = 2
    max_iterations: int = 10
    population: int = 30
    generations: int = 15
    top_k: int = 8
    neighbor_delta: float = 0.5
    seed: int = 0
    char_budget: int = 30
    retry_cap: int = 25
    selection_temperature: float = 0.3

    def __post_init__(self):
        for name in ("beam_width", "max_iterations", "population", "generations", "top_k"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class Scorers:
    """Handles the searches score against: victim metric, normalization
    stats, and a perplexity function for the fluency constraint."""

    metric: MetricScorer
    stats: CorpusStats
    ppl_fn: Optional[Callable[[str], float]] = None
    symmetric_similarity: bool = False

    def metric_norm(self, hypothesis: str, reference: str, source: Optional[str] = None) -> float:
        raw = self.metric.score(ScorePair(hypothesis, reference, source))
        return normalize(raw, self.stats)

    def similarity_norm(self, a: str, b: str) -> float:
        if self.symmetric_similarity:
            raw = symmetric_score(self.metric, a, b)
        else:
            raw = self.metric.score(ScorePair(a, b))
        return normalize(raw, self.stats)


@dataclass
class AttackInstance:
    tuple: TranslationTuple
    metric_name: str
    original_score_norm: float
    self_sim_norm: Optional[float] = None  # normalized m(original, original)
    ppl_original: Optional[float] = None


@dataclass
class AttackResult:
    instance_id: str
    method: str
    goal: str
    original_text: str
    perturbed_text: str
    edits: list[EditOp]
    original_score_norm: float
    perturbed_score_norm: float
    constraint_values: dict
    iterations_used: int
    success: bool
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "id": self.instance_id,
            "method": self.method,
            "goal": self.goal,
            "original": self.original_text,
            "perturbed": self.perturbed_text,
            "edits": [e.to_dict() for e in self.edits],
            "score_orig_norm": self.original_score_norm,
            "score_pert_norm": self.perturbed_score_norm,
            "constraints": self.constraint_values,
            "iterations": self.iterations_used,
            "success": self.success,
            "error": self.error,
        }


@dataclass(frozen=True)
class GoalEval:
    objective: float
    feasible: bool
    success: bool
    constraint_values: dict


def make_instance(tup: TranslationTuple, goal: GoalSpec, scorers: Scorers) -> AttackInstance:
    inst = AttackInstance(
        tuple=tup,
        metric_name=scorers.metric.name,
        original_score_norm=scorers.metric_norm(tup.hypothesis, tup.reference, tup.source),
    )
    if goal.variant == OVERPENALIZE:
        if scorers.ppl_fn is None:
            raise ValueError("overpenalization goal requires a perplexity function")
        inst.ppl_original = scorers.ppl_fn(tup.hypothesis)
    else:
        inst.self_sim_norm = scorers.similarity_norm(tup.hypothesis, tup.hypothesis)
    return inst


def evaluate_goal(instance: AttackInstance, candidate_text: str, goal: GoalSpec,
                  scorers: Scorers) -> GoalEval:
    """Score one candidate against the goal and its constraints."""
    if not candidate_text.strip():
        raise ValueError("candidate text is empty")
    tup = instance.tuple
    cand_norm = scorers.metric_norm(candidate_text, tup.reference, tup.source)
    objective = instance.original_score_norm - cand_norm
    if goal.variant == OVERPENALIZE:
        ppl_cand = scorers.ppl_fn(candidate_text)
        feasible = (ppl_cand - instance.ppl_original) <= goal.ppl_delta_max
        constraints = {
            "ppl_original": instance.ppl_original,
            "ppl_perturbed": ppl_cand,
        }
        success = feasible and objective > goal.drop_sigma
    else:
        sim_norm = scorers.similarity_norm(candidate_text, tup.hypothesis)
        gap = instance.self_sim_norm - sim_norm
        feasible = gap < goal.similarity_gap_max
        constraints = {"similarity_gap": gap}
        success = feasible and objective > goal.score_drop
    constraints["perturbed_score_norm"] = cand_norm
    return GoalEval(objective=objective, feasible=feasible, success=success,
                    constraint_values=constraints)


class _EvalCache:
    """Memoizes evaluate_goal per candidate text within one search."""

    def __init__(self, instance, goal, scorers):
        self.instance = instance
        self.goal = goal
        self.scorers = scorers
        self._cache: dict[str, GoalEval] = {}

    def __call__(self, text: str) -> GoalEval:
        hit = self._cache.get(text)
        if hit is None:
            hit = evaluate_goal(self.instance, text, self.goal, self.scorers)
            self._cache[text] = hit
        return hit


def _result(instance, method, goal, tokens: TokenSeq, edits, ev: GoalEval,
            iterations: int, success: bool) -> AttackResult:
    return AttackResult(
        instance_id=instance.tuple.id,
        method=method,
        goal=goal.variant,
        original_text=TokenSeq.from_text(instance.tuple.hypothesis).text,
        perturbed_text=tokens.text,
        edits=list(edits),
        original_score_norm=instance.original_score_norm,
        perturbed_score_norm=ev.constraint_values["perturbed_score_norm"],
        constraint_values=ev.constraint_values,
        iterations_used=iterations,
        success=success,
    )


_WORD_KIND_ORDER = {"replace": 0, "insert": 1, "merge": 2}


def clare_beam_search(instance: AttackInstance, config: AttackConfig,
                      provider: CandidateProvider, goal: GoalSpec,
                      scorers: Scorers) -> Optional[AttackResult]:
    """Beam search over replace/insert/merge edits, stopping at the first
    iteration that yields a successful candidate."""
    evaluate = _EvalCache(instance, goal, scorers)
    start = TokenSeq.from_text(instance.tuple.hypothesis)
    beam: list[tuple[TokenSeq, tuple[EditOp, ...]]] = [(start, ())]
    seen = {start.text}

    for iteration in range(1, config.max_iterations + 1):
        candidates = []  # (sort key, seq, edits, eval)
        for seq, edits in beam:
            n = len(seq)
            sites = (
                [("replace", i) for i in range(n)]
                + [("insert", i) for i in range(n + 1)]
                + [("merge", i) for i in range(n - 1)]
            )
            for kind, site in sites:
                for payload in provider.propose(seq, site, kind, config.top_k):
                    op = EditOp(kind, site, payload=payload)
                    try:
                        new_seq = apply_edit(seq, op)
                    except Exception:
                        continue
                    if new_seq.text in seen:
                        continue
                    seen.add(new_seq.text)
                    ev = evaluate(new_seq.text)
                    if not ev.feasible:
                        continue
                    key = (-ev.objective, site, _WORD_KIND_ORDER[kind], payload)
                    candidates.append((key, new_seq, edits + (op,), ev))
        if not candidates:
            return None
        candidates.sort(key=lambda c: c[0])
        successes = [c for c in candidates if c[3].success]
        if successes:
            _, seq, edits, ev = successes[0]
            return _result(instance, "clare_beam", goal, seq, edits, ev,
                           iterations=iteration, success=True)
        beam = [(seq, edits) for _, seq, edits, _ in candidates[: config.beam_width]]
    return None


def _substitution_sites(tokens: tuple[str, ...], table: NeighborTable,
                        config: AttackConfig) -> dict[int, list[str]]:
    """Per-position substitution vocabulary from the original tokens."""
    allowed = {}
    for i, tok in enumerate(tokens):
        cands = neighbors_within(table, tok, config.neighbor_delta, config.top_k)
        cands = [c for c in cands if c != tok]
        if cands:
            allowed[i] = cands
    return allowed


def genetic_search(instance: AttackInstance, config: AttackConfig,
                   table: NeighborTable, goal: GoalSpec,
                   scorers: Scorers,
                   trace: Optional[list] = None) -> Optional[AttackResult]:
    """Population search over word substitutions from a neighbor table.

    Elitism keeps the best individual; parents are sampled by softmax of
    the objective; children get uniform position-wise crossover plus one
    random eligible substitution as mutation. Infeasible children are
    resampled up to a retry cap. When ``trace`` is given, the best
    objective of each generation is appended to it.
    """
    evaluate = _EvalCache(instance, goal, scorers)
    original = TokenSeq.from_text(instance.tuple.hypothesis)
    allowed = _substitution_sites(original.tokens, table, config)
    if not allowed:
        raise NoEligibleSites("no token has an in-threshold neighbor")
    sites = sorted(allowed)
    rng = random.Random(f"{config.seed}:{instance.tuple.id}")

    def mutate(tokens: tuple[str, ...]) -> Optional[tuple[str, ...]]:
        for _ in range(config.retry_cap):
            site = rng.choice(sites)
            cands = [c for c in allowed[site] if c != tokens[site]]
            if not cands:
                continue
            new = list(tokens)
            new[site] = rng.choice(cands)
            new = tuple(new)
            if evaluate(" ".join(new)).feasible:
                return new
        return None

    population: list[tuple[str, ...]] = []
    for _ in range(config.population):
        child = mutate(original.tokens)
        population.append(child if child is not None else original.tokens)

    def finish(tokens: tuple[str, ...], generation: int) -> AttackResult:
        seq = TokenSeq(tokens)
        edits = [
            EditOp("replace", i, payload=tokens[i])
            for i in range(len(tokens))
            if tokens[i] != original.tokens[i]
        ]
        return _result(instance, "genetic", goal, seq, edits,
                       evaluate(seq.text), iterations=generation, success=True)

    for generation in range(1, config.generations + 1):
        scored = [(evaluate(" ".join(ind)).objective, i, ind)
                  for i, ind in enumerate(population)]
        scored.sort(key=lambda s: (-s[0], s[1]))
        if trace is not None:
            trace.append(scored[0][0])
        for obj, _, ind in scored:
            if evaluate(" ".join(ind)).success:
                return finish(ind, generation)
        elite = scored[0][2]
        # softmax selection over objectives
        objs = [s[0] for s in scored]
        t = config.selection_temperature
        mx = max(objs)
        weights = [math.exp((o - mx) / t) for o in objs]
        total = sum(weights)
        probs = [w / total for w in weights]

        def pick_parent() -> tuple[str, ...]:
            r = rng.random()
            acc = 0.0
            for p, s in zip(probs, scored):
                acc += p
                if r <= acc:
                    return s[2]
            return scored[-1][2]

        next_pop = [elite]
        while len(next_pop) < config.population:
            child = None
            for _ in range(config.retry_cap):
                pa, pb = pick_parent(), pick_parent()
                crossed = tuple(
                    pa[i] if rng.random() < 0.5 else pb[i] for i in range(len(pa))
                )
                mutated = mutate(crossed)
                if mutated is not None:
                    child = mutated
                    break
                if evaluate(" ".join(crossed)).feasible:
                    child = crossed
                    break
            next_pop.append(child if child is not None else elite)
        population = next_pop
    return None


def input_reduction(instance: AttackInstance, config: AttackConfig,
                    goal: GoalSpec, scorers: Scorers) -> Optional[AttackResult]:
    """Iteratively deletes the word whose removal changes the normalized
    score the least, until the goal is met or one token remains."""
    evaluate = _EvalCache(instance, goal, scorers)
    current = TokenSeq.from_text(instance.tuple.hypothesis)
    if len(current) < 2:
        raise ValueError("input reduction needs a hypothesis of >= 2 tokens")
    current_norm = instance.original_score_norm
    edits: list[EditOp] = []

    for iteration in range(1, config.max_iterations + 1):
        if len(current) < 2:
            return None
        best = None  # (abs change, position, seq, eval)
        for i in range(len(current)):
            seq = apply_edit(current, EditOp("delete", i))
            ev = evaluate(seq.text)
            if not ev.feasible:
                continue
            cand_norm = ev.constraint_values["perturbed_score_norm"]
            key = (abs(cand_norm - current_norm), i)
            if best is None or key < best[0:2]:
                best = (key[0], i, seq, ev)
        if best is None:
            return None
        _, pos, current, ev = best
        current_norm = ev.constraint_values["perturbed_score_norm"]
        edits.append(EditOp("delete", pos))
        if ev.success:
            return _result(instance, "input_reduction", goal, current, edits, ev,
                           iterations=iteration, success=True)
    return None


def char_greedy_search(instance: AttackInstance, config: AttackConfig,
                       goal: GoalSpec, scorers: Scorers) -> Optional[AttackResult]:
    """Character-level greedy attack.

    Word importance is the leave-one-out drop in the normalized score;
    words are visited in descending importance, committing the feasible
    character edit with the highest objective whenever it improves on
    the current objective. Total commits are capped by the budget.
    """
    evaluate = _EvalCache(instance, goal, scorers)
    current = TokenSeq.from_text(instance.tuple.hypothesis)
    edits: list[EditOp] = []
    budget = config.char_budget
    current_obj = 0.0

    for iteration in range(1, config.max_iterations + 1):
        if budget <= 0:
            return None
        # leave-one-out saliency on the current sequence
        importance = []
        for i in range(len(current)):
            if len(current) < 2:
                importance.append((0.0, i))
                continue
            seq = apply_edit(current, EditOp("delete", i))
            drop = evaluate(seq.text).objective - current_obj
            importance.append((drop, i))
        order = sorted(range(len(current)), key=lambda i: (-importance[i][0], i))

        committed = False
        for i in order:
            if budget <= 0:
                break
            best = None  # (-objective, op index, op, seq, eval)
            for op_idx, op in enumerate(char_perturbations(current.tokens[i], position=i)):
                try:
                    seq = apply_edit(current, op)
                except Exception:
                    continue
                ev = evaluate(seq.text)
                if not ev.feasible or ev.objective <= current_obj:
                    continue
                key = (-ev.objective, op_idx)
                if best is None or key < best[0:2]:
                    best = (key[0], op_idx, op, seq, ev)
            if best is None:
                continue
            _, _, op, current, ev = best
            edits.append(op)
            current_obj = ev.objective
            budget -= 1
            committed = True
            if ev.success:
                return _result(instance, "char_greedy", goal, current, edits, ev,
                               iterations=iteration, success=True)
        if not committed:
            return None
    return None


METHODS = {
    "clare_beam": clare_beam_search,
    "genetic": genetic_search,
    "input_reduction": input_reduction,
    "char_greedy": char_greedy_search,
}


def run_attack(instance: AttackInstance, config: AttackConfig, goal: GoalSpec,
               scorers: Scorers, provider: Optional[CandidateProvider] = None,
               neighbor_table: Optional[NeighborTable] = None) -> Optional[AttackResult]:
    if config.method == "clare_beam":
        if provider is None:
            raise ValueError("clare_beam requires a candidate provider")
        return clare_beam_search(instance, config, provider, goal, scorers)
    if config.method == "genetic":
        if neighbor_table is None:
            raise ValueError("genetic requires a neighbor table")
        return genetic_search(instance, config, neighbor_table, goal, scorers)
    if config.method == "input_reduction":
        return input_reduction(instance, config, goal, scorers)
    if config.method == "char_greedy":
        return char_greedy_search(instance, config, goal, scorers)
    raise ValueError(f"unknown method {config.method!r}")


def verify_result(result: AttackResult, instance: AttackInstance, goal: GoalSpec,
                  scorers: Scorers) -> bool:
    """Independent re-check of a claimed success with fresh scorer calls."""
    ev = evaluate_goal(instance, result.perturbed_text, goal, scorers)
    return ev.success


def _attack_one(tup: TranslationTuple, config: AttackConfig, goal: GoalSpec,
                scorers: Scorers, provider, neighbor_table) -> tuple[str, bool]:
    """Attack one tuple; returns (ndjson line, verified success flag)."""
    try:
        instance = make_instance(tup, goal, scorers)
        result = run_attack(instance, config, goal, scorers,
                            provider=provider, neighbor_table=neighbor_table)
    except NoEligibleSites:
        return _failure_line(tup, config, goal), False
    except Exception as exc:
        return _failure_line(tup, config, goal, error=str(exc)), False
    if result is None or not result.success:
        return _failure_line(tup, config, goal), False
    if not verify_result(result, instance, goal, scorers):
        # claimed success fails independent verification: demote
        result.success = False
        result.error = "verification_failed"
        return json.dumps(result.to_dict(), sort_keys=True), False
    return json.dumps(result.to_dict(), sort_keys=True), True


def run_campaign(corpus: Corpus, config: AttackConfig, goal: GoalSpec,
                 scorers: Scorers, results_path,
                 provider: Optional[CandidateProvider] = None,
                 neighbor_table: Optional[NeighborTable] = None,
                 jobs: int = 1) -> dict:
    """Attack every tuple; re-verify successes before writing.

    Emits one newline-delimited JSON AttackResult per tuple and returns
    a summary with per-(year, system) attempt/success counts. Output is
    identical for any ``jobs`` value: results are written in corpus order.
    """
    tuples = list(corpus)
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(
                lambda t: _attack_one(t, config, goal, scorers, provider, neighbor_table),
                tuples,
            ))
    else:
        outcomes = [_attack_one(t, config, goal, scorers, provider, neighbor_table)
                    for t in tuples]

    per_group: dict[tuple[str, str], dict[str, int]] = {}
    lines = []
    for tup, (line, success) in zip(tuples, outcomes):
        group = per_group.setdefault((tup.year, tup.system), {"attempts": 0, "successes": 0})
        group["attempts"] += 1
        group["successes"] += int(success)
        lines.append(line)

    with open(results_path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")

    summary = {
        "method": config.method,
        "goal": goal.variant,
        "metric": scorers.metric.name,
        "groups": [
            {
                "year": year,
                "system": system,
                "attempts": counts["attempts"],
                "successes": counts["successes"],
                "success_rate": (
                    counts["successes"] / counts["attempts"] if counts["attempts"] else 0.0
                ),
            }
            for (year, system), counts in sorted(per_group.items())
        ],
        "attempts": sum(c["attempts"] for c in per_group.values()),
        "successes": sum(c["successes"] for c in per_group.values()),
    }
    return summary


def _failure_line(tup: TranslationTuple, config: AttackConfig, goal: GoalSpec,
                  error: Optional[str] = None) -> str:
    record = {
        "id": tup.id,
        "method": config.method,
        "goal": goal.variant,
        "original": TokenSeq.from_text(tup.hypothesis).text,
        "perturbed": None,
        "edits": [],
        "score_orig_norm": None,
        "score_pert_norm": None,
        "constraints": {},
        "iterations": 0,
        "success": False,
        "error": error,
    }
    return json.dumps(record, sort_keys=True)
