"""Structure mapping between semantic networks.

Analogical matching adapted to concept--relation graphs: relations match
only on identical labels with aligned argument positions (IsA edges
participate like any other relation), concept correspondences must be
one-to-one, and interconnected matches score higher than isolated ones.
The best mapping's score is the memetic fitness.

Search is exact (branch and bound over consistent hypothesis subsets) up to
a configurable hypothesis count, and falls back to a deterministic beam
search beyond it; beam results are flagged approximate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

from .semnet import Relation, SemanticNetwork


class MatchHypothesis(NamedTuple):
    """A candidate pairing of one base relation with one target relation."""

    base_rel: Relation
    target_rel: Relation


class ConceptCorrespondence(NamedTuple):
    base_concept: str
    target_concept: str


@dataclass(frozen=True)
class ScoreWeights:
    """Systematicity scoring parameters.

    ``w_base`` is credited per matched relation, ``w_conn`` per unordered
    pair of matched relations that share a mapped concept.
    """

    w_base: float = 0.2
    w_conn: float = 0.05

    def __post_init__(self):
        if self.w_base <= 0:
            raise ValueError("w_base must be > 0")
        if self.w_conn < 0:
            raise ValueError("w_conn must be >= 0")


@dataclass(frozen=True)
class SearchLimits:
    """Thresholds steering exact vs. beam search."""

    exact_limit: int = 24
    beam_width: int = 32

    def __post_init__(self):
        if self.exact_limit < 0:
            raise ValueError("exact_limit must be >= 0")
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")


DEFAULT_WEIGHTS = ScoreWeights()
DEFAULT_LIMITS = SearchLimits()


@dataclass(frozen=True)
class GMap:
    """A consistent set of match hypotheses with induced correspondences."""

    hypotheses: frozenset[MatchHypothesis]
    correspondences: tuple[ConceptCorrespondence, ...]
    score: float

    @property
    def mapping(self) -> dict[str, str]:
        return {c.base_concept: c.target_concept for c in self.correspondences}


@dataclass(frozen=True)
class MappingResult:
    """Best gmap found for a network pair, plus score breakdown."""

    best: GMap
    fitness: float
    correspondence_table: tuple[ConceptCorrespondence, ...]
    exact: bool
    base_term: float
    connectivity_term: float

    def to_dict(self) -> dict:
        return {
            "score": self.fitness,
            "exact": self.exact,
            "base_term": self.base_term,
            "connectivity_term": self.connectivity_term,
            "matched_relation_count": len(self.best.hypotheses),
            "correspondences": [
                {"base": c.base_concept, "target": c.target_concept}
                for c in self.correspondence_table
            ],
            "matched_relations": [
                {
                    "label": h.base_rel.label,
                    "base": [h.base_rel.head, h.base_rel.tail],
                    "target": [h.target_rel.head, h.target_rel.tail],
                }
                for h in sorted(self.best.hypotheses)
            ],
        }


def enumerate_hypotheses(
    base: SemanticNetwork, target: SemanticNetwork
) -> list[MatchHypothesis]:
    """All base/target relation pairs with identical labels, sorted."""
    by_label: dict[str, list[Relation]] = {}
    for t in target.relations:
        by_label.setdefault(t.label, []).append(t)
    hyps = [
        MatchHypothesis(b, t)
        for b in base.relations
        for t in by_label.get(b.label, ())
    ]
    hyps.sort()
    return hyps


def induced_mapping(hyps: Iterable[MatchHypothesis]) -> Optional[dict[str, str]]:
    """Concept mapping induced by hypotheses, or None if inconsistent.

    Consistency requires the mapping to be functional and injective and
    every base and target relation to be matched at most once.
    """
    mapping: dict[str, str] = {}
    reverse: dict[str, str] = {}
    used_base: set[Relation] = set()
    used_target: set[Relation] = set()
    for h in hyps:
        if h.base_rel in used_base or h.target_rel in used_target:
            return None
        used_base.add(h.base_rel)
        used_target.add(h.target_rel)
        for bc, tc in (
            (h.base_rel.head, h.target_rel.head),
            (h.base_rel.tail, h.target_rel.tail),
        ):
            if mapping.get(bc, tc) != tc or reverse.get(tc, bc) != bc:
                return None
            mapping[bc] = tc
            reverse[tc] = bc
    return mapping


def consistent(hyps: Iterable[MatchHypothesis]) -> bool:
    """Whether a hypothesis set admits a one-to-one concept mapping."""
    return induced_mapping(hyps) is not None


def _adjacent(h1: MatchHypothesis, h2: MatchHypothesis, mapping: dict[str, str]) -> bool:
    """Whether two matched relations share a correspondingly mapped concept."""
    ends2_base = (h2.base_rel.head, h2.base_rel.tail)
    ends1_tgt = (h1.target_rel.head, h1.target_rel.tail)
    ends2_tgt = (h2.target_rel.head, h2.target_rel.tail)
    for c in (h1.base_rel.head, h1.base_rel.tail):
        if c in ends2_base:
            m = mapping[c]
            if m in ends1_tgt and m in ends2_tgt:
                return True
    return False


def _adjacency_count(hyps: list[MatchHypothesis], mapping: dict[str, str]) -> int:
    n = 0
    for i, h1 in enumerate(hyps):
        for h2 in hyps[i + 1 :]:
            if _adjacent(h1, h2, mapping):
                n += 1
    return n


def score(gmap: GMap, w: ScoreWeights = DEFAULT_WEIGHTS) -> float:
    """Systematicity score of a consistent gmap.

    ``|hypotheses| * w_base + w_conn * A`` where A counts unordered pairs of
    hypotheses whose base relations share a concept whose image is shared by
    both target relations.
    """
    hyps = sorted(gmap.hypotheses)
    mapping = induced_mapping(hyps)
    if mapping is None:
        raise ValueError("gmap is not structurally consistent")
    return len(hyps) * w.w_base + _adjacency_count(hyps, mapping) * w.w_conn


def _correspondence_table(mapping: dict[str, str]) -> tuple[ConceptCorrespondence, ...]:
    return tuple(ConceptCorrespondence(b, t) for b, t in sorted(mapping.items()))


class _SearchState:
    """Shared state for exact and beam searches over hypothesis subsets."""

    __slots__ = ("w", "best_n", "best_adj", "best_score", "best_hyps", "best_table")

    def __init__(self, w: ScoreWeights):
        self.w = w
        self.best_n = 0
        self.best_adj = 0
        self.best_score = 0.0
        self.best_hyps: tuple[MatchHypothesis, ...] = ()
        self.best_table: tuple = ()

    def offer(
        self,
        chosen: tuple[MatchHypothesis, ...],
        n: int,
        adj: int,
        mapping: dict[str, str],
    ) -> None:
        cand_score = n * self.w.w_base + adj * self.w.w_conn
        if cand_score < self.best_score:
            return
        table = _correspondence_table(mapping)
        # Prefer higher score, then more hypotheses, then lexicographically
        # smallest correspondence table.
        if (
            cand_score > self.best_score
            or (cand_score == self.best_score and n > self.best_n)
            or (
                cand_score == self.best_score
                and n == self.best_n
                and table < self.best_table
            )
        ):
            self.best_score = cand_score
            self.best_n = n
            self.best_adj = adj
            self.best_hyps = chosen
            self.best_table = table


def _exact_search(hyps: list[MatchHypothesis], w: ScoreWeights) -> _SearchState:
    n_total = len(hyps)
    state = _SearchState(w)
    base_ends = [(h.base_rel.head, h.base_rel.tail) for h in hyps]
    tgt_ends = [(h.target_rel.head, h.target_rel.tail) for h in hyps]

    mapping: dict[str, str] = {}
    reverse: dict[str, str] = {}
    used_base: set[Relation] = set()
    used_target: set[Relation] = set()
    chosen: list[MatchHypothesis] = []

    def dfs(i: int, n: int, adj: int) -> None:
        if i == n_total:
            state.offer(tuple(chosen), n, adj, mapping)
            return
        remaining = n_total - i
        # At most one hypothesis per unused base/target relation can still
        # be added, and every added pair could be adjacent at best.
        free = min(
            remaining,
            len({h.base_rel for h in hyps[i:]} - used_base),
            len({h.target_rel for h in hyps[i:]} - used_target),
        )
        cap_n = n + free
        cap_adj = adj + free * (free - 1) // 2 + free * n
        if cap_n * w.w_base + cap_adj * w.w_conn < state.best_score:
            return
        if free == 0:
            state.offer(tuple(chosen), n, adj, mapping)
            return
        h = hyps[i]
        if h.base_rel not in used_base and h.target_rel not in used_target:
            (bh, bt), (th, tt) = base_ends[i], tgt_ends[i]
            if (
                mapping.get(bh, th) == th
                and reverse.get(th, bh) == bh
                and mapping.get(bt, tt) == tt
                and reverse.get(tt, bt) == bt
            ):
                added = [
                    (bc, tc)
                    for bc, tc in ((bh, th), (bt, tt))
                    if bc not in mapping
                ]
                for bc, tc in added:
                    mapping[bc] = tc
                    reverse[tc] = bc
                used_base.add(h.base_rel)
                used_target.add(h.target_rel)
                new_adj = sum(1 for g in chosen if _adjacent(h, g, mapping))
                chosen.append(h)
                dfs(i + 1, n + 1, adj + new_adj)
                chosen.pop()
                used_base.remove(h.base_rel)
                used_target.remove(h.target_rel)
                for bc, tc in added:
                    del mapping[bc]
                    del reverse[tc]
        dfs(i + 1, n, adj)

    dfs(0, 0, 0)
    return state


def _beam_search(
    hyps: list[MatchHypothesis], w: ScoreWeights, beam_width: int
) -> _SearchState:
    # Each beam item: (n, adj, chosen tuple, mapping, reverse, used_base, used_target)
    empty = (0, 0, (), {}, {}, frozenset(), frozenset())
    beams = [empty]
    for h in hyps:
        extended = []
        for n, adj, chosen, mapping, reverse, used_b, used_t in beams:
            if h.base_rel in used_b or h.target_rel in used_t:
                continue
            (bh, bt) = (h.base_rel.head, h.base_rel.tail)
            (th, tt) = (h.target_rel.head, h.target_rel.tail)
            if (
                mapping.get(bh, th) != th
                or reverse.get(th, bh) != bh
                or mapping.get(bt, tt) != tt
                or reverse.get(tt, bt) != bt
            ):
                continue
            new_mapping = dict(mapping)
            new_reverse = dict(reverse)
            new_mapping[bh] = th
            new_reverse[th] = bh
            new_mapping[bt] = tt
            new_reverse[tt] = bt
            new_adj = adj + sum(1 for g in chosen if _adjacent(h, g, new_mapping))
            extended.append(
                (
                    n + 1,
                    new_adj,
                    chosen + (h,),
                    new_mapping,
                    new_reverse,
                    used_b | {h.base_rel},
                    used_t | {h.target_rel},
                )
            )
        if extended:
            pool = beams + extended
            pool.sort(
                key=lambda item: (
                    -(item[0] * w.w_base + item[1] * w.w_conn),
                    -item[0],
                    _correspondence_table(item[3]),
                )
            )
            beams = pool[:beam_width]
    state = _SearchState(w)
    for n, adj, chosen, mapping, _, _, _ in beams:
        state.offer(chosen, n, adj, mapping)
    return state


def best_gmap(
    base: SemanticNetwork,
    target: SemanticNetwork,
    w: ScoreWeights = DEFAULT_WEIGHTS,
    limits: SearchLimits = DEFAULT_LIMITS,
) -> MappingResult:
    """Highest-scoring consistent gmap between two networks.

    Exact when the hypothesis count is within ``limits.exact_limit``;
    otherwise a beam search whose result is a lower bound, with the result
    flagged approximate. Ties prefer more hypotheses, then the smallest
    correspondence table.
    """
    hyps = enumerate_hypotheses(base, target)
    exact = len(hyps) <= limits.exact_limit
    if not hyps:
        empty = GMap(frozenset(), (), 0.0)
        return MappingResult(empty, 0.0, (), True, 0.0, 0.0)
    if exact:
        state = _exact_search(hyps, w)
    else:
        state = _beam_search(hyps, w, limits.beam_width)
    gmap = GMap(frozenset(state.best_hyps), state.best_table, state.best_score)
    return MappingResult(
        best=gmap,
        fitness=state.best_score,
        correspondence_table=state.best_table,
        exact=exact,
        base_term=state.best_n * w.w_base,
        connectivity_term=state.best_adj * w.w_conn,
    )


def fitness(
    base: SemanticNetwork,
    individual: SemanticNetwork,
    w: ScoreWeights = DEFAULT_WEIGHTS,
    limits: SearchLimits = DEFAULT_LIMITS,
) -> float:
    """Analogical matching score of ``individual`` against ``base``."""
    return best_gmap(base, individual, w, limits).fitness
