"""Cluster naming, threshold-based schema induction, gold mapping, micro-F1."""

import json
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from pglee.corpus import GoldEvent
from pglee.eventgraph import Role


class SchemaError(ValueError):
    pass


@dataclass
class SchemaConfig:
    theta: float = 0.3
    argument_name_map: dict[int, str] | None = None

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise SchemaError("theta must lie in (0, 1)")

    def role_label(self, arg_cluster: int) -> str:
        if self.argument_name_map and arg_cluster in self.argument_name_map:
            return self.argument_name_map[arg_cluster]
        return f"role-{arg_cluster}"


@dataclass
class ArgumentRole:
    role_label: str
    support: int
    peak_attention: float


@dataclass
class EventSchema:
    event_type_label: str
    argument_roles: list[ArgumentRole] = field(default_factory=list)
    example_scope_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "event_type": self.event_type_label,
            "roles": [
                {"role": r.role_label, "support": r.support, "peak_attention": r.peak_attention}
                for r in self.argument_roles
            ],
            "examples": self.example_scope_ids,
        }


@dataclass
class SubtaskScore:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def to_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
        }


@dataclass
class EvalReport:
    trig_i: SubtaskScore = field(default_factory=SubtaskScore)
    trig_c: SubtaskScore = field(default_factory=SubtaskScore)
    arg_i: SubtaskScore = field(default_factory=SubtaskScore)
    arg_c: SubtaskScore = field(default_factory=SubtaskScore)

    def to_json(self) -> str:
        return json.dumps(
            {
                "Trig-I": self.trig_i.to_dict(),
                "Trig-C": self.trig_c.to_dict(),
                "Arg-I": self.arg_i.to_dict(),
                "Arg-C": self.arg_c.to_dict(),
            },
            sort_keys=True,
        )


@dataclass
class PredictedEvent:
    trigger_span: tuple[int, int]
    event_label: str
    arguments: list[tuple[tuple[int, int], str]] = field(default_factory=list)


def name_trigger_clusters(model, texts: list[str], points: np.ndarray) -> dict[int, str]:
    """Label each cluster with the text of its member nearest the centroid;
    distance ties break lexicographically."""
    points = np.asarray(points, dtype=np.float64)
    names: dict[int, str] = {}
    for c in range(model.k):
        members = [i for i in range(len(texts)) if model.assignments[i] == c]
        if not members:
            warnings.warn(f"trigger cluster {c} is empty; using placeholder label")
            names[c] = f"cluster-{c}"
            continue
        best = min(
            members,
            key=lambda i: (float(np.linalg.norm(points[i] - model.centroids[c])), texts[i]),
        )
        names[c] = texts[best]
    return names


def induce_schemas(graphs, attention_records, trig_assign, arg_assign,
                   trigger_names: dict[int, str], config: SchemaConfig,
                   k_trig: int) -> list[EventSchema]:
    """Collect, per trigger cluster, the argument clusters reachable over a
    trigger-argument edge whose trigger-side head-averaged attention clears
    the threshold. Emits one schema per non-empty trigger cluster.

    trig_assign / arg_assign map (graph_index, node_index) to cluster ids.
    """
    # cluster -> arg cluster -> (support, peak)
    hits: dict[int, dict[int, list]] = {}
    seen_clusters: set[int] = set()
    examples: dict[int, list[str]] = {}
    for g_idx, (graph, record) in enumerate(zip(graphs, attention_records)):
        for i, node in enumerate(graph.nodes):
            if node.role != Role.TRIGGER:
                continue
            t_cluster = trig_assign.get((g_idx, i))
            if t_cluster is None:
                continue
            seen_clusters.add(t_cluster)
            examples.setdefault(t_cluster, [])
            if graph.scope_id not in examples[t_cluster]:
                examples[t_cluster].append(graph.scope_id)
            for j in graph.adjacency[i]:
                if graph.nodes[j].role != Role.ARGUMENT:
                    continue
                alpha = record.averaged.get((i, j))
                if alpha is None or alpha < config.theta:
                    continue
                a_cluster = arg_assign.get((g_idx, j))
                if a_cluster is None:
                    continue
                entry = hits.setdefault(t_cluster, {}).setdefault(a_cluster, [0, 0.0])
                entry[0] += 1
                entry[1] = max(entry[1], alpha)
    schemas = []
    for t_cluster in sorted(seen_clusters):
        roles = [
            ArgumentRole(config.role_label(a_cluster), support, peak)
            for a_cluster, (support, peak) in sorted(hits.get(t_cluster, {}).items())
        ]
        schemas.append(
            EventSchema(
                trigger_names.get(t_cluster, f"cluster-{t_cluster}"),
                roles,
                examples.get(t_cluster, []),
            )
        )
    return schemas


def map_clusters_to_gold(assignments, gold_labels) -> dict[int, str]:
    """Optimal one-to-one cluster-to-label mapping on the contingency matrix;
    clusters without a matched label map to "other"."""
    pairs = [(c, g) for c, g in zip(assignments, gold_labels) if g is not None]
    if not pairs:
        raise SchemaError("no gold labels available for mapping")
    clusters = sorted({c for c, _ in pairs})
    labels = sorted({g for _, g in pairs})
    counts = Counter(pairs)
    matrix = np.zeros((len(clusters), len(labels)))
    for (c, g), n in counts.items():
        matrix[clusters.index(c), labels.index(g)] = n
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    mapping = {c: "other" for c in clusters}
    for r, c in zip(rows, cols):
        mapping[clusters[r]] = labels[c]
    return mapping


def _greedy_match(pred_keys, gold_keys) -> int:
    """One-to-one exact-key matching count (multiset intersection)."""
    gold_pool = Counter(gold_keys)
    matched = 0
    for key in pred_keys:
        if gold_pool[key] > 0:
            gold_pool[key] -= 1
            matched += 1
    return matched


def evaluate(predictions: dict[str, list[PredictedEvent]],
             gold: dict[str, list[GoldEvent]],
             mapping: dict[str, str] | None = None) -> EvalReport:
    """Micro-averaged P/R/F1 over the four subtasks.

    predictions/gold map a sentence key to its event lists. When mapping is
    given, predicted labels (event types and roles) are translated first.
    Argument scoring only considers arguments of correctly identified
    events (predicted trigger span matching a gold trigger span).
    """
    report = EvalReport()

    def translate(label: str) -> str:
        if mapping is None:
            return label
        return mapping.get(label, label)

    for key in set(predictions) | set(gold):
        preds = predictions.get(key, [])
        golds = gold.get(key, [])
        pred_spans = [tuple(p.trigger_span) for p in preds]
        gold_spans = [tuple(g.trigger_span) for g in golds]
        ti = _greedy_match(pred_spans, gold_spans)
        tc = _greedy_match(
            [(tuple(p.trigger_span), translate(p.event_label)) for p in preds],
            [(tuple(g.trigger_span), g.event_type) for g in golds],
        )
        report.trig_i.tp += ti
        report.trig_i.fp += len(preds) - ti
        report.trig_i.fn += len(golds) - ti
        report.trig_c.tp += tc
        report.trig_c.fp += len(preds) - tc
        report.trig_c.fn += len(golds) - tc

        # pair identified events one-to-one on trigger span
        gold_pool: dict[tuple, list[GoldEvent]] = {}
        for g in golds:
            gold_pool.setdefault(tuple(g.trigger_span), []).append(g)
        ai = ac = 0
        pred_arg_total = sum(len(p.arguments) for p in preds)
        gold_arg_total = sum(len(g.arguments) for g in golds)
        for p in preds:
            bucket = gold_pool.get(tuple(p.trigger_span))
            if not bucket:
                continue
            g = bucket.pop(0)
            ai += _greedy_match(
                [tuple(span) for span, _ in p.arguments],
                [tuple(span) for span, _ in g.arguments],
            )
            ac += _greedy_match(
                [(tuple(span), translate(role)) for span, role in p.arguments],
                [(tuple(span), role) for span, role in g.arguments],
            )
        report.arg_i.tp += ai
        report.arg_i.fp += pred_arg_total - ai
        report.arg_i.fn += gold_arg_total - ai
        report.arg_c.tp += ac
        report.arg_c.fp += pred_arg_total - ac
        report.arg_c.fn += gold_arg_total - ac
    return report
