"""Heterogeneous event graphs: trigger/argument nodes, typed edges."""

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from pglee.corpus import EmbeddingTable, phrase_embedding
from pglee.promptgen import CandidateEvent


class Role(str, Enum):
    TRIGGER = "trigger"
    ARGUMENT = "argument"


@dataclass
class Node:
    role: Role
    text: str
    span: tuple[int, int] | None
    embedding: np.ndarray
    encoded: np.ndarray | None = None


@dataclass
class EventGraph:
    scope_id: str
    nodes: list[Node] = field(default_factory=list)
    adjacency: list[set[int]] = field(default_factory=list)

    def add_edge(self, i: int, j: int) -> None:
        if i == j:
            return
        self.adjacency[i].add(j)
        self.adjacency[j].add(i)

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(len(self.nodes)) for j in self.adjacency[i] if i < j]

    def to_json(self) -> str:
        return json.dumps(
            {
                "scope_id": self.scope_id,
                "nodes": [
                    {"role": n.role.value, "text": n.text, "span": list(n.span) if n.span else None}
                    for n in self.nodes
                ],
                "edges": [list(e) for e in self.edges()],
            },
            sort_keys=True,
        )


def build_graph(events: list[CandidateEvent], table: EmbeddingTable, scope_id: str) -> EventGraph:
    """One trigger node per event, one argument node per mention; triggers
    form a complete subgraph within the scope. Exact duplicate mentions
    (same role, text and span) are merged with their edges unioned."""
    graph = EventGraph(scope_id)
    index: dict[tuple[Role, str, tuple[int, int] | None], int] = {}

    def node_for(role: Role, text: str, span) -> int:
        key = (role, text, span)
        if key in index:
            return index[key]
        graph.nodes.append(Node(role, text, span, phrase_embedding(text, table)))
        graph.adjacency.append(set())
        index[key] = len(graph.nodes) - 1
        return index[key]

    trigger_ids = []
    for ev in events:
        t = node_for(Role.TRIGGER, ev.trigger_text, ev.trigger_span)
        trigger_ids.append(t)
        for arg in ev.arguments:
            a = node_for(Role.ARGUMENT, arg.text, arg.span)
            graph.add_edge(t, a)
    for i in range(len(trigger_ids)):
        for j in range(i + 1, len(trigger_ids)):
            graph.add_edge(trigger_ids[i], trigger_ids[j])
    return graph
