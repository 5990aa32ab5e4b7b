"""Commonsense knowledge base: scored assertions with structural queries.

A knowledge base is a read-only, score-filtered collection of directed
assertions like ``IsA(bird, animal)``. It answers the queries that drive
network growth and the variation operators: which assertions involve a
concept, which outside concepts can attach to a network, and whether two
concepts can stand in for each other.
"""

from __future__ import annotations

import logging
import random
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .semnet import Relation, SemanticNetwork, substituted

logger = logging.getLogger(__name__)

_EDGE_PUNCT = string.punctuation


class KBFormatError(ValueError):
    """Raised for unparseable knowledge base files."""


def normalize_concept(label: str) -> str:
    """Canonical form of a concept label.

    Lowercases, collapses internal whitespace to single spaces, and strips
    punctuation from the edges of each word. Idempotent.
    """
    words = []
    for token in label.lower().split():
        token = token.strip(_EDGE_PUNCT)
        if token:
            words.append(token)
    return " ".join(words)


@dataclass(frozen=True, order=True)
class ScoredAssertion:
    """One commonsense fact: a directed labeled relation plus reliability."""

    label: str
    head: str
    tail: str
    score: float

    @property
    def relation(self) -> Relation:
        return Relation(self.label, self.head, self.tail)

    def other(self, concept: str) -> str:
        """The endpoint that is not ``concept``."""
        return self.tail if self.head == concept else self.head


class KnowledgeBase:
    """Immutable, indexed store of score-filtered assertions.

    Assertions below ``r_min`` are dropped at construction; duplicate
    (label, head, tail) triples keep the maximum score. Safe for concurrent
    readers.
    """

    def __init__(self, assertions: Iterable[ScoredAssertion], r_min: float = 0.0):
        best: dict[Relation, ScoredAssertion] = {}
        for a in assertions:
            if a.score < r_min:
                continue
            key = a.relation
            held = best.get(key)
            if held is None or a.score > held.score:
                best[key] = a
        self.r_min = r_min
        self._by_relation = best
        self._assertions: tuple[ScoredAssertion, ...] = tuple(
            best[k] for k in sorted(best)
        )
        by_concept: dict[str, list[ScoredAssertion]] = {}
        by_slot: dict[tuple[str, str, str], list[ScoredAssertion]] = {}
        for a in self._assertions:
            by_concept.setdefault(a.head, []).append(a)
            by_concept.setdefault(a.tail, []).append(a)
            by_slot.setdefault((a.label, "head", a.head), []).append(a)
            by_slot.setdefault((a.label, "tail", a.tail), []).append(a)
        self._by_concept = {c: tuple(rels) for c, rels in by_concept.items()}
        self._by_slot = {k: tuple(rels) for k, rels in by_slot.items()}
        self._concepts: tuple[str, ...] = tuple(sorted(self._by_concept))

    @property
    def assertions(self) -> tuple[ScoredAssertion, ...]:
        return self._assertions

    @property
    def concepts(self) -> tuple[str, ...]:
        return self._concepts

    def __len__(self) -> int:
        return len(self._assertions)

    def __iter__(self) -> Iterator[ScoredAssertion]:
        return iter(self._assertions)

    def __contains__(self, relation: Relation) -> bool:
        return relation in self._by_relation

    def has_relation(self, label: str, head: str, tail: str) -> bool:
        return Relation(label, head, tail) in self._by_relation

    def has_concept(self, concept: str) -> bool:
        return concept in self._by_concept

    def assertions_involving(self, concept: str) -> list[ScoredAssertion]:
        """All assertions where ``concept`` is head or tail.

        Sorted by label, then the other endpoint, then the full triple, so
        seeded runs are reproducible. Unknown concepts yield an empty list.
        """
        found = self._by_concept.get(concept, ())
        return sorted(found, key=lambda a: (a.label, a.other(concept), a.head, a.tail))

    def iter_involving(self, concept: str) -> tuple[ScoredAssertion, ...]:
        """Unsorted variant of assertions_involving for hot paths."""
        return self._by_concept.get(concept, ())

    def attachable_concepts(
        self, net: SemanticNetwork
    ) -> list[tuple[ScoredAssertion, str]]:
        """Each (assertion, new concept) pair that could extend ``net``.

        A pair lists an assertion with exactly one endpoint in the network;
        the other endpoint is the attachable concept. Canonically sorted.
        """
        out = []
        for c in net.concepts:
            for a in self._by_concept.get(c, ()):
                other = a.other(c)
                if other not in net.concepts:
                    out.append((a, other))
        out.sort(key=lambda pair: (pair[0].label, pair[0].head, pair[0].tail))
        return out

    def interchangeable(
        self,
        a: str,
        rels_a: Sequence,
        b: str,
        rels_b: Sequence,
        min_shared: int = 1,
    ) -> bool:
        """Whether ``a`` and ``b`` can stand in for each other.

        True when substituting ``a`` for ``b`` turns at least ``min_shared``
        of ``rels_b`` into known assertions, and vice versa. ``rels_a`` and
        ``rels_b`` are the relations each concept is involved in (network
        relations or assertions; anything with label/head/tail).
        """
        if a == b:
            raise ValueError("interchangeable requires two distinct concepts")
        return (
            self._substitution_count(a, b, rels_b) >= min_shared
            and self._substitution_count(b, a, rels_a) >= min_shared
        )

    def _substitution_count(self, new: str, old: str, rels: Sequence) -> int:
        n = 0
        for r in rels:
            if old != r.head and old != r.tail:
                continue
            if substituted(r, old, new) in self._by_relation:
                n += 1
        return n

    def interchangeable_concepts(
        self, concept: str, rels: Sequence, min_shared: int = 1
    ) -> list[str]:
        """KB concepts interchangeable with ``concept`` given its relations.

        A candidate's own relations are taken from the knowledge base. Used
        by concept-replacement mutation.
        """
        # Prescreen: a partner must fit into at least one of the given
        # relations, which the slot index answers directly.
        partners: set[str] = set()
        for r in rels:
            if r.head == concept:
                for a in self._by_slot.get((r.label, "tail", r.tail), ()):
                    partners.add(a.head)
            if r.tail == concept:
                for a in self._by_slot.get((r.label, "head", r.head), ()):
                    partners.add(a.tail)
        partners.discard(concept)
        return [
            other
            for other in sorted(partners)
            if self.interchangeable(
                concept, rels, other, self._by_concept[other], min_shared
            )
        ]

    def random_concept(self, rng: random.Random) -> str:
        """Uniform draw over the distinct concepts in the knowledge base."""
        if not self._concepts:
            raise ValueError("knowledge base has no concepts")
        return self._concepts[rng.randrange(len(self._concepts))]


def parse_kb_line(line: str, lineno: int, source: str) -> ScoredAssertion | None:
    """Parse one TSV assertion line; None for comments/blanks."""
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 4:
        raise KBFormatError(
            f"{source}:{lineno}: expected 4 tab-separated fields, got {len(parts)}"
        )
    label = parts[0].strip()
    head = normalize_concept(parts[1])
    tail = normalize_concept(parts[2])
    if not label or not head or not tail:
        raise KBFormatError(f"{source}:{lineno}: empty relation label or concept")
    try:
        score = float(parts[3])
    except ValueError:
        raise KBFormatError(f"{source}:{lineno}: bad score {parts[3]!r}") from None
    if score < 0:
        raise KBFormatError(f"{source}:{lineno}: negative score {score}")
    return ScoredAssertion(label, head, tail, score)


def load_kb(source: str | Path, r_min: float) -> KnowledgeBase:
    """Load a TSV assertion file, keeping assertions with score >= r_min.

    Lines are ``label<TAB>head<TAB>tail<TAB>score``; ``#`` starts a comment.
    Concept labels are normalized and duplicates keep the maximum score.
    Self-loop lines are dropped with a warning. Malformed lines raise
    KBFormatError with the line number.
    """
    path = Path(source)
    parsed: list[ScoredAssertion] = []
    self_loops = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            assertion = parse_kb_line(line, lineno, str(path))
            if assertion is None:
                continue
            if assertion.head == assertion.tail:
                self_loops += 1
                continue
            parsed.append(assertion)
    if self_loops:
        logger.warning("%s: dropped %d self-loop assertion(s)", path, self_loops)
    kb = KnowledgeBase(parsed, r_min=r_min)
    if parsed and not kb.assertions:
        logger.warning(
            "%s: knowledge base is empty after filtering; %d assertion(s) below r_min=%g",
            path,
            len(parsed),
            r_min,
        )
    return kb
