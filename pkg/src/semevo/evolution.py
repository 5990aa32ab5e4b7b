"""Memetic evolution of semantic networks toward analogy with a base network.

Generational loop: tournament selection with elitism, two commonsense
crossover operators (subgraph interchange, graph merging) and six mutation
types, all constrained so that every relation in every individual exists in
the knowledge base. All randomness flows through one seeded stream consumed
in a fixed order, so runs are reproducible; fitness evaluation is a pure
function and may be parallelized without changing results.
"""

from __future__ import annotations

import math
import multiprocessing
import random
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

from .kb import KnowledgeBase
from .semnet import (
    Relation,
    SemanticNetwork,
    extract_crossover_subgraph,
    grow_random,
    substituted,
)
from .sme import (
    DEFAULT_LIMITS,
    DEFAULT_WEIGHTS,
    MappingResult,
    ScoreWeights,
    SearchLimits,
    best_gmap,
    fitness,
)


@dataclass(frozen=True)
class EvolutionConfig:
    """Run parameters; defaults follow the experiment settings."""

    pop_size: int = 200
    p_c: float = 0.85
    p_m: float = 0.15
    c_max: int = 5
    r_min: float = 2.0
    timeout: int = 10
    s_size: int = 8
    s_prob: float = 0.8
    elitism: bool = True
    max_generations: int = 50
    no_improvement_window: int = 20
    rng_seed: int = 0
    score_weights: ScoreWeights = field(default_factory=ScoreWeights)
    search_limits: SearchLimits = field(default_factory=SearchLimits)

    def __post_init__(self):
        if abs(self.p_c + self.p_m - 1.0) > 1e-9:
            raise ValueError(f"p_c + p_m must equal 1 (got {self.p_c} + {self.p_m})")
        if not 0.0 <= self.p_c <= 1.0:
            raise ValueError("p_c must be in [0, 1]")
        if self.pop_size < 1:
            raise ValueError("pop_size must be >= 1")
        if self.c_max < 1:
            raise ValueError("c_max must be >= 1")
        if self.timeout < 1:
            raise ValueError("timeout must be >= 1")
        if self.s_size < 1:
            raise ValueError("s_size must be >= 1")
        if not 0.5 <= self.s_prob <= 1.0:
            raise ValueError("s_prob must be in [0.5, 1]")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")
        if self.no_improvement_window < 1:
            raise ValueError("no_improvement_window must be >= 1")

    def to_dict(self) -> dict:
        return {
            "pop_size": self.pop_size,
            "p_c": self.p_c,
            "p_m": self.p_m,
            "c_max": self.c_max,
            "r_min": self.r_min,
            "timeout": self.timeout,
            "s_size": self.s_size,
            "s_prob": self.s_prob,
            "elitism": self.elitism,
            "max_generations": self.max_generations,
            "no_improvement_window": self.no_improvement_window,
            "rng_seed": self.rng_seed,
            "w_base": self.score_weights.w_base,
            "w_conn": self.score_weights.w_conn,
            "exact_limit": self.search_limits.exact_limit,
            "beam_width": self.search_limits.beam_width,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvolutionConfig":
        data = dict(data)
        weights = ScoreWeights(
            w_base=data.pop("w_base", DEFAULT_WEIGHTS.w_base),
            w_conn=data.pop("w_conn", DEFAULT_WEIGHTS.w_conn),
        )
        limits = SearchLimits(
            exact_limit=data.pop("exact_limit", DEFAULT_LIMITS.exact_limit),
            beam_width=data.pop("beam_width", DEFAULT_LIMITS.beam_width),
        )
        return cls(score_weights=weights, search_limits=limits, **data)


@dataclass
class Individual:
    """One member of the meme pool."""

    genome: SemanticNetwork
    cached_fitness: Optional[float] = None

    def copy(self) -> "Individual":
        return Individual(self.genome.copy(), self.cached_fitness)


class GenerationStats(NamedTuple):
    best_fitness: float
    avg_fitness: float
    best_size: int
    avg_size: float


@dataclass
class RunStats:
    """Per-generation fitness and size trajectory."""

    rows: list[GenerationStats] = field(default_factory=list)

    CSV_HEADER = "generation,best_fitness,avg_fitness,best_size,avg_size"

    def append(self, row: GenerationStats) -> None:
        self.rows.append(row)

    @property
    def best_fitness_series(self) -> list[float]:
        return [r.best_fitness for r in self.rows]

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for t, r in enumerate(self.rows):
            lines.append(
                f"{t},{r.best_fitness!r},{r.avg_fitness!r},{r.best_size},{r.avg_size!r}"
            )
        return "\n".join(lines) + "\n"


def _fitness_task(args) -> float:
    genome, base, weights, limits = args
    return fitness(base, genome, weights, limits)


def evaluate_population(
    pop: Sequence[Individual],
    base: SemanticNetwork,
    cfg: EvolutionConfig,
    map_fn: Callable = map,
) -> list[float]:
    """Fill fitness caches (in population order) and return all fitnesses."""
    todo = [i for i, ind in enumerate(pop) if ind.cached_fitness is None]
    tasks = [
        (pop[i].genome, base, cfg.score_weights, cfg.search_limits) for i in todo
    ]
    for i, value in zip(todo, map_fn(_fitness_task, tasks)):
        pop[i].cached_fitness = value
    return [ind.cached_fitness for ind in pop]


def initialize(
    cfg: EvolutionConfig, kb: KnowledgeBase, rng: random.Random
) -> list[Individual]:
    """Population of independently grown random networks."""
    return [
        Individual(grow_random(kb, (), cfg.c_max, cfg.timeout, rng))
        for _ in range(cfg.pop_size)
    ]


def tournament_select(
    pop: Sequence[Individual],
    fitnesses: Sequence[float],
    s_size: int,
    s_prob: float,
    rng: random.Random,
) -> Individual:
    """Pairwise-reduction tournament over a uniform sample with replacement.

    Successive pairs are reduced, the fitter side winning with probability
    ``s_prob``; odd entrants get a bye. A tournament of one is a uniform
    random draw.
    """
    contenders = [rng.randrange(len(pop)) for _ in range(s_size)]
    while len(contenders) > 1:
        survivors = []
        for i in range(0, len(contenders) - 1, 2):
            a, b = contenders[i], contenders[i + 1]
            if fitnesses[a] >= fitnesses[b]:
                fitter, lesser = a, b
            else:
                fitter, lesser = b, a
            survivors.append(fitter if rng.random() < s_prob else lesser)
        if len(contenders) % 2:
            survivors.append(contenders[-1])
        contenders = survivors
    return pop[contenders[0]]


# -- crossover ------------------------------------------------------------


def _common_relations(
    net: SemanticNetwork, root: str, other_net: SemanticNetwork, other_root: str
) -> set[Relation]:
    """Root-incident relations mirrored (under root swap) in the other parent."""
    common = set()
    for r in net.relations:
        if root in (r.head, r.tail):
            if substituted(r, root, other_root) in other_net.relations:
                common.add(r)
    return common


def interchangeable_pairs(
    p1: SemanticNetwork, p2: SemanticNetwork, kb: KnowledgeBase, min_shared: int = 1
) -> list[tuple[str, str]]:
    """All cross-parent concept pairs eligible as type I crossover concepts."""
    pairs = []
    for a in sorted(p1.concepts):
        rels_a = p1.relations_involving(a)
        if not rels_a:
            continue
        for b in sorted(p2.concepts):
            if b == a:
                continue
            rels_b = p2.relations_involving(b)
            if not rels_b:
                continue
            if kb.interchangeable(a, rels_a, b, rels_b, min_shared):
                pairs.append((a, b))
    return pairs


def _transplant(
    parent: SemanticNetwork,
    root: str,
    sub,
    common: set[Relation],
    new_root: str,
    incoming,
) -> SemanticNetwork:
    """Parent with its crossover subgraph swapped for the other parent's.

    The root's common relations are rewritten onto the incoming root; the
    departing subgraph's relations and the severed ones are dropped.
    """
    net = SemanticNetwork()
    for r in parent.relations:
        if root in (r.head, r.tail):
            if r in common:
                net.add_relation(*substituted(r, root, new_root))
        elif r not in sub.relations and r not in sub.severed:
            net.add_relation(*r)
    common_concepts = {r.head if r.head != root else r.tail for r in common}
    departing = sub.concepts - {root} - common_concepts
    for c in parent.concepts:
        if c != root and c not in departing:
            net.add_concept(c)
    for r in incoming.relations:
        net.add_relation(*r)
    for c in incoming.concepts:
        net.add_concept(c)
    return net


def crossover_type1(
    p1: SemanticNetwork,
    p2: SemanticNetwork,
    kb: KnowledgeBase,
    rng: random.Random,
) -> Optional[tuple[SemanticNetwork, SemanticNetwork]]:
    """Subgraph interchange at a random interchangeable concept pair.

    Returns None when the parents have no interchangeable pair.
    """
    pairs = interchangeable_pairs(p1, p2, kb)
    if not pairs:
        return None
    a, b = pairs[rng.randrange(len(pairs))]
    common_a = _common_relations(p1, a, p2, b)
    common_b = _common_relations(p2, b, p1, a)
    sub_a = extract_crossover_subgraph(p1, a, common_a)
    sub_b = extract_crossover_subgraph(p2, b, common_b)
    o1 = _transplant(p1, a, sub_a, common_a, b, sub_b)
    o2 = _transplant(p2, b, sub_b, common_b, a, sub_a)
    return o1, o2


def bridge_candidates(
    p1: SemanticNetwork, p2: SemanticNetwork, kb: KnowledgeBase
) -> list:
    """KB assertions able to connect a concept of one parent to the other."""
    union_rels = p1.relations | p2.relations
    found = set()
    for c in p1.concepts:
        for a in kb.assertions_involving(c):
            if a.relation in union_rels:
                continue
            cross = (a.head in p1.concepts and a.tail in p2.concepts) or (
                a.head in p2.concepts and a.tail in p1.concepts
            )
            if cross:
                found.add(a)
    return sorted(found)


def crossover_type2(
    p1: SemanticNetwork,
    p2: SemanticNetwork,
    kb: KnowledgeBase,
    rng: random.Random,
) -> tuple[SemanticNetwork, SemanticNetwork]:
    """Graph merging: each offspring is the parent union plus one bridge.

    The bridge is a KB assertion attaching a concept of one parent to a
    concept of the other, picked uniformly; without any candidate the
    parents merge as separate clusters.
    """
    candidates = bridge_candidates(p1, p2, kb)

    def merged() -> SemanticNetwork:
        net = SemanticNetwork(concepts=p1.concepts | p2.concepts)
        for r in p1.relations | p2.relations:
            net.add_relation(*r)
        if candidates:
            bridge = candidates[rng.randrange(len(candidates))]
            net.add_relation(bridge.label, bridge.head, bridge.tail)
        return net

    return merged(), merged()


def crossover(
    p1: SemanticNetwork,
    p2: SemanticNetwork,
    kb: KnowledgeBase,
    rng: random.Random,
) -> tuple[SemanticNetwork, SemanticNetwork]:
    """Type I subgraph interchange, falling back to type II merging."""
    result = crossover_type1(p1, p2, kb, rng)
    if result is None:
        result = crossover_type2(p1, p2, kb, rng)
    return result


# -- mutation -------------------------------------------------------------


def mutate_attach_concept(
    net: SemanticNetwork, kb: KnowledgeBase, rng: random.Random
) -> Optional[SemanticNetwork]:
    """Type I: attach an attachable new concept through a new relation."""
    pairs = kb.attachable_concepts(net)
    if not pairs:
        return None
    assertion, _ = pairs[rng.randrange(len(pairs))]
    out = net.copy()
    out.add_relation(assertion.label, assertion.head, assertion.tail)
    return out


def mutate_add_relation(
    net: SemanticNetwork, kb: KnowledgeBase, rng: random.Random
) -> Optional[SemanticNetwork]:
    """Type IIa: add a new KB relation between two existing concepts."""
    candidates = set()
    for c in net.concepts:
        for a in kb.assertions_involving(c):
            rel = a.relation
            if (
                rel not in net.relations
                and rel.head in net.concepts
                and rel.tail in net.concepts
            ):
                candidates.add(rel)
    if not candidates:
        return None
    ordered = sorted(candidates)
    rel = ordered[rng.randrange(len(ordered))]
    out = net.copy()
    out.add_relation(*rel)
    return out


def mutate_delete_relation(
    net: SemanticNetwork, kb: KnowledgeBase, rng: random.Random
) -> Optional[SemanticNetwork]:
    """Type IIb: delete a random relation."""
    if not net.relations:
        return None
    ordered = sorted(net.relations)
    rel = ordered[rng.randrange(len(ordered))]
    out = net.copy()
    out.remove_relation(*rel)
    return out


def mutate_add_concept(
    net: SemanticNetwork, kb: KnowledgeBase, rng: random.Random
) -> Optional[SemanticNetwork]:
    """Type IIIa: add a random new concept as its own cluster."""
    candidates = [c for c in kb.concepts if c not in net.concepts]
    if not candidates:
        return None
    out = net.copy()
    out.add_concept(candidates[rng.randrange(len(candidates))])
    return out


def mutate_delete_concept(
    net: SemanticNetwork, kb: KnowledgeBase, rng: random.Random
) -> Optional[SemanticNetwork]:
    """Type IIIb: delete a random concept with all its relations."""
    if not net.concepts:
        return None
    ordered = sorted(net.concepts)
    out = net.copy()
    out.remove_concept(ordered[rng.randrange(len(ordered))])
    return out


def mutate_replace_concept(
    net: SemanticNetwork, kb: KnowledgeBase, rng: random.Random
) -> Optional[SemanticNetwork]:
    """Type IV: swap a concept for an interchangeable one.

    Relations the replacement cannot satisfy (substituted triple unknown to
    the KB) are deleted.
    """
    feasible = []
    for c in sorted(net.concepts):
        rels_c = net.relations_involving(c)
        if not rels_c:
            continue
        candidates = kb.interchangeable_concepts(c, rels_c)
        if candidates:
            feasible.append((c, rels_c, candidates))
    if not feasible:
        return None
    c, rels_c, candidates = feasible[rng.randrange(len(feasible))]
    replacement = candidates[rng.randrange(len(candidates))]
    out = net.copy()
    out.remove_concept(c)
    out.add_concept(replacement)
    for r in rels_c:
        rewritten = substituted(r, c, replacement)
        if rewritten in kb:
            out.add_relation(*rewritten)
    return out


MUTATION_OPERATORS = (
    mutate_attach_concept,
    mutate_add_relation,
    mutate_delete_relation,
    mutate_add_concept,
    mutate_delete_concept,
    mutate_replace_concept,
)


def mutate_detailed(
    parent: SemanticNetwork,
    kb: KnowledgeBase,
    timeout: int,
    rng: random.Random,
) -> tuple[SemanticNetwork, Optional[str]]:
    """Apply one uniformly chosen mutation, repicking on infeasibility.

    After ``timeout`` failed trials the parent is returned unchanged. Also
    reports the name of the operator that fired, or None.
    """
    for _ in range(timeout):
        op = MUTATION_OPERATORS[rng.randrange(len(MUTATION_OPERATORS))]
        result = op(parent, kb, rng)
        if result is not None:
            return result, op.__name__
    return parent.copy(), None


def mutate(
    parent: SemanticNetwork,
    kb: KnowledgeBase,
    timeout: int,
    rng: random.Random,
) -> SemanticNetwork:
    return mutate_detailed(parent, kb, timeout, rng)[0]


# -- generational loop ----------------------------------------------------


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _summarize(pop: Sequence[Individual], fits: Sequence[float]) -> GenerationStats:
    best_idx = max(range(len(pop)), key=lambda i: fits[i])
    sizes = [ind.genome.size for ind in pop]
    return GenerationStats(
        best_fitness=fits[best_idx],
        avg_fitness=sum(fits) / len(fits),
        best_size=sizes[best_idx],
        avg_size=sum(sizes) / len(sizes),
    )


def step(
    pop: Sequence[Individual],
    base: SemanticNetwork,
    cfg: EvolutionConfig,
    kb: KnowledgeBase,
    rng: random.Random,
    map_fn: Callable = map,
) -> tuple[list[Individual], GenerationStats]:
    """One generation: evaluate, select, vary, apply elitism.

    ``round(pop_size * p_c)`` offspring come from crossover (two per parent
    pair; an odd quota drops one of the final pair at random) and the rest
    from mutation. With elitism the current best replaces one random
    offspring. Random draws happen in a fixed order so runs reproduce.
    """
    if len(pop) != cfg.pop_size:
        raise ValueError(f"population size {len(pop)} != configured {cfg.pop_size}")
    fits = evaluate_population(pop, base, cfg, map_fn)
    stats = _summarize(pop, fits)

    n_cross = _round_half_up(cfg.pop_size * cfg.p_c)
    n_mut = cfg.pop_size - n_cross
    offspring: list[Individual] = []
    for _ in range((n_cross + 1) // 2):
        parent1 = tournament_select(pop, fits, cfg.s_size, cfg.s_prob, rng)
        parent2 = tournament_select(pop, fits, cfg.s_size, cfg.s_prob, rng)
        o1, o2 = crossover(parent1.genome, parent2.genome, kb, rng)
        offspring.append(Individual(o1))
        offspring.append(Individual(o2))
    if len(offspring) > n_cross:
        drop = len(offspring) - 2 + rng.randrange(2)
        del offspring[drop]
    for _ in range(n_mut):
        parent = tournament_select(pop, fits, cfg.s_size, cfg.s_prob, rng)
        offspring.append(Individual(mutate(parent.genome, kb, cfg.timeout, rng)))
    if cfg.elitism:
        best_idx = max(range(len(pop)), key=lambda i: fits[i])
        offspring[rng.randrange(len(offspring))] = pop[best_idx].copy()
    return offspring, stats


def run(
    base: SemanticNetwork,
    cfg: EvolutionConfig,
    kb: KnowledgeBase,
    workers: int = 1,
) -> tuple[Individual, MappingResult, RunStats]:
    """Full evolution run; returns the all-time best, its mapping, and stats.

    Stops after ``max_generations`` or once the best fitness has not
    improved for ``no_improvement_window`` consecutive generations.
    """
    if not base.concepts:
        raise ValueError("base network is empty")
    rng = random.Random(cfg.rng_seed)
    pop = initialize(cfg, kb, rng)
    stats = RunStats()
    best: Optional[Individual] = None
    best_fitness = -math.inf
    last_improvement = 0
    pool = None
    try:
        if workers > 1:
            pool = multiprocessing.Pool(workers)
            map_fn: Callable = pool.map
        else:
            map_fn = map
        for t in range(cfg.max_generations + 1):
            fits = evaluate_population(pop, base, cfg, map_fn)
            stats.append(_summarize(pop, fits))
            gen_best = max(range(len(pop)), key=lambda i: fits[i])
            if fits[gen_best] > best_fitness:
                best_fitness = fits[gen_best]
                best = pop[gen_best]
                last_improvement = t
            if t == cfg.max_generations:
                break
            if t - last_improvement >= cfg.no_improvement_window:
                break
            next_pop, _ = step(pop, base, cfg, kb, rng, map_fn)
            pop = next_pop
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    mapping = best_gmap(base, best.genome, cfg.score_weights, cfg.search_limits)
    return best, mapping, stats
