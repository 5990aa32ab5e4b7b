"""Semantic networks: directed labeled graphs of concepts and binary relations.

A SemanticNetwork is the evolving individual. It supports growth from a
knowledge base, editing under the variation operators, weakly connected
component analysis, and canonical JSON/DOT serialization.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, NamedTuple, Sequence

if TYPE_CHECKING:
    from .kb import KnowledgeBase


class Relation(NamedTuple):
    """A directed labeled edge between two concepts."""

    label: str
    head: str
    tail: str


def substituted(rel, old: str, new: str) -> Relation:
    """``rel`` with ``old`` replaced by ``new`` at whichever ends it occupies."""
    head = new if rel.head == old else rel.head
    tail = new if rel.tail == old else rel.tail
    return Relation(rel.label, head, tail)


class SemanticNetwork:
    """Mutable directed labeled graph; single-owner, value semantics."""

    def __init__(
        self,
        concepts: Iterable[str] = (),
        relations: Iterable[Relation | tuple[str, str, str]] = (),
    ):
        self.concepts: set[str] = set(concepts)
        self.relations: set[Relation] = set()
        for r in relations:
            self.add_relation(*r)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SemanticNetwork):
            return NotImplemented
        return self.concepts == other.concepts and self.relations == other.relations

    def __repr__(self) -> str:
        return (
            f"SemanticNetwork({len(self.concepts)} concepts, "
            f"{len(self.relations)} relations)"
        )

    @property
    def size(self) -> int:
        """Network size: the number of relations (edges)."""
        return len(self.relations)

    @property
    def concept_count(self) -> int:
        return len(self.concepts)

    def copy(self) -> "SemanticNetwork":
        dup = SemanticNetwork.__new__(SemanticNetwork)
        dup.concepts = set(self.concepts)
        dup.relations = set(self.relations)
        return dup

    def add_concept(self, concept: str) -> bool:
        """Insert a concept; False if already present."""
        if concept in self.concepts:
            return False
        self.concepts.add(concept)
        return True

    def add_relation(self, label: str, head: str, tail: str) -> bool:
        """Insert a relation, adding endpoints as needed.

        Returns False (no-op) for a duplicate triple. Self-loops are
        rejected.
        """
        if head == tail:
            raise ValueError(f"self-loop rejected: {label}({head}, {tail})")
        rel = Relation(label, head, tail)
        if rel in self.relations:
            return False
        self.concepts.add(head)
        self.concepts.add(tail)
        self.relations.add(rel)
        return True

    def remove_relation(self, label: str, head: str, tail: str) -> None:
        rel = Relation(label, head, tail)
        if rel not in self.relations:
            raise KeyError(f"relation not in network: {label}({head}, {tail})")
        self.relations.remove(rel)

    def remove_concept(self, concept: str) -> None:
        """Delete a concept together with every relation it is involved in."""
        if concept not in self.concepts:
            raise KeyError(f"concept not in network: {concept!r}")
        self.concepts.remove(concept)
        self.relations = {
            r for r in self.relations if r.head != concept and r.tail != concept
        }

    def relations_involving(self, concept: str) -> list[Relation]:
        """Relations with ``concept`` as head or tail, canonically sorted."""
        return sorted(r for r in self.relations if concept in (r.head, r.tail))

    def components(self) -> list[set[str]]:
        """Weakly connected components, ordered by smallest concept label."""
        remaining = set(self.concepts)
        neighbors: dict[str, set[str]] = {c: set() for c in self.concepts}
        for r in self.relations:
            neighbors[r.head].add(r.tail)
            neighbors[r.tail].add(r.head)
        parts = []
        while remaining:
            seed = next(iter(remaining))
            seen = {seed}
            stack = [seed]
            while stack:
                for n in neighbors[stack.pop()]:
                    if n not in seen:
                        seen.add(n)
                        stack.append(n)
            remaining -= seen
            parts.append(seen)
        parts.sort(key=min)
        return parts

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "concepts": sorted(self.concepts),
            "relations": [
                {"label": r.label, "head": r.head, "tail": r.tail}
                for r in sorted(self.relations)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SemanticNetwork":
        net = cls(concepts=data.get("concepts", ()))
        for entry in data.get("relations", ()):
            net.add_relation(entry["label"], entry["head"], entry["tail"])
        return net

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SemanticNetwork":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SemanticNetwork":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def to_dot(self, name: str = "semnet") -> str:
        """GraphViz DOT export: one directed edge per relation."""

        def quoted(s: str) -> str:
            return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'

        lines = [f"digraph {name} {{"]
        for c in sorted(self.concepts):
            lines.append(f"  {quoted(c)};")
        for r in sorted(self.relations):
            lines.append(
                f"  {quoted(r.head)} -> {quoted(r.tail)} [label={quoted(r.label)}];"
            )
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Subgraph:
    """The crossover-concept-specific part of a network.

    ``severed`` lists relations that linked the subgraph to the remainder
    without passing through the root; they belong to neither side.
    """

    root: str
    relations: frozenset[Relation]
    concepts: frozenset[str]
    severed: frozenset[Relation] = field(default_factory=frozenset)


def extract_crossover_subgraph(
    net: SemanticNetwork,
    crossover_concept: str,
    common_relations: Iterable[Relation],
) -> Subgraph:
    """Collect the information specific to a crossover concept.

    Starting from the crossover concept's incident relations that are not
    common with the other crossover concept, the subgraph absorbs everything
    reachable without crossing the root or a common-relation concept.
    Relations that would connect the subgraph to a common-relation concept
    are severed.
    """
    if crossover_concept not in net.concepts:
        raise KeyError(f"concept not in network: {crossover_concept!r}")
    root = crossover_concept
    common = set(common_relations)
    incident = {r for r in net.relations if root in (r.head, r.tail)}
    common_concepts = set()
    for r in common & incident:
        common_concepts.add(r.head if r.head != root else r.tail)

    specific = incident - common
    sub_rels = set(specific)
    sub_concepts = {root}
    severed = set()
    frontier = []
    for r in specific:
        for c in (r.head, r.tail):
            if c != root and c not in sub_concepts:
                sub_concepts.add(c)
                if c not in common_concepts:
                    frontier.append(c)
    while frontier:
        c = frontier.pop()
        for r in net.relations:
            if c not in (r.head, r.tail) or r in sub_rels or r in severed:
                continue
            if root in (r.head, r.tail):
                continue
            other = r.head if r.head != c else r.tail
            if other in common_concepts:
                severed.add(r)
                continue
            sub_rels.add(r)
            if other not in sub_concepts:
                sub_concepts.add(other)
                frontier.append(other)
    return Subgraph(
        root=root,
        relations=frozenset(sub_rels),
        concepts=frozenset(sub_concepts),
        severed=frozenset(severed),
    )


def grow_random(
    kb: "KnowledgeBase",
    seeds: Sequence[str],
    c_max: int,
    timeout: int,
    rng: random.Random,
) -> SemanticNetwork:
    """Grow a random network by repeated knowledge base expansion.

    Starts from the seed concepts (or one random KB concept when none are
    given) and repeatedly appends a random unused assertion involving a
    randomly picked network concept. Stops once the network has ``c_max``
    concepts or after ``timeout`` consecutive failed expansion attempts.
    """
    if c_max < 1:
        raise ValueError("c_max must be >= 1")
    if timeout < 1:
        raise ValueError("timeout must be >= 1")
    for seed in seeds:
        if not kb.has_concept(seed):
            raise ValueError(f"seed concept not in knowledge base: {seed!r}")
    net = SemanticNetwork()
    if seeds:
        for seed in seeds:
            net.add_concept(seed)
    else:
        net.add_concept(kb.random_concept(rng))
    failures = 0
    while net.concept_count < c_max and failures < timeout:
        ordered = sorted(net.concepts)
        picked = ordered[rng.randrange(len(ordered))]
        candidates = [
            a
            for a in kb.assertions_involving(picked)
            if a.relation not in net.relations
        ]
        if not candidates:
            failures += 1
            continue
        failures = 0
        chosen = candidates[rng.randrange(len(candidates))]
        net.add_relation(chosen.label, chosen.head, chosen.tail)
    return net
