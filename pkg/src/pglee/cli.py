"""Pipeline orchestration: extract / induce / sweep / eval subcommands.

All stochastic components are driven by the single config seed, so a rerun
with an identical config produces byte-identical artifacts. Outputs are
written atomically (temp file + rename).
"""

import argparse
import copy
import json
import os
import sys
import tempfile

import numpy as np

from pglee import clustering, corpus, encoder, eventgraph, promptgen, schema

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_BACKEND = 4
EXIT_DIVERGENCE = 5


class ConfigError(ValueError):
    pass


DEFAULT_CONFIG = {
    "paths": {
        "corpus": None,
        "embeddings": None,
        "verbs": None,
        "nouns": None,
        "gazetteer": None,
        "output": "out",
    },
    "backend": {"mode": "rule", "url": None, "timeout": 10.0, "fallback": True},
    "encoder": {"heads": 4, "d_out": None, "leaky_slope": 0.2, "activation": "elu"},
    "train": {
        "epochs": 30,
        "learning_rate": 1e-3,
        "weight_decay": 1e-4,
        "batch_size": 16,
        "edge_loss_weight": 0.5,
        "cluster_iterations": 10,
        "cluster_batch": 256,
    },
    "clustering": {
        "k_trig": 38,
        "k_arg": 24,
        "sweep_min": 2,
        "sweep_max": 10,
        "iterations": 10,
        "batch": 256,
    },
    "schema": {"theta": 0.3, "argument_name_map": {}},
    "soft_tokens": 20,
    "seed": 0,
}


def load_config(path: str | None, overrides: dict) -> dict:
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        _deep_update(config, user)
    _deep_update(config, overrides)
    for key in ("corpus", "embeddings", "verbs", "nouns", "gazetteer"):
        value = config["paths"].get(key)
        if value is None:
            raise ConfigError(f"paths.{key} is required")
        if not os.path.exists(value):
            raise ConfigError(f"paths.{key} does not exist: {value}")
    return config


def _deep_update(base: dict, extra: dict) -> None:
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value


def atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Pipeline:
    """Shared state across subcommands for a single run."""

    def __init__(self, config: dict):
        self.config = config
        self.documents = corpus.load_corpus(config["paths"]["corpus"])
        self.lexicon = corpus.load_lexicon(
            config["paths"]["verbs"], config["paths"]["nouns"], config["paths"]["gazetteer"]
        )
        self.table = corpus.load_embeddings(config["paths"]["embeddings"], oov_seed=config["seed"])
        self.out_dir = config["paths"]["output"]

    # -- candidate generation ------------------------------------------------

    def sentences(self):
        for doc in self.documents:
            for sent in doc.sentences:
                yield doc, sent

    def generate_candidates(self):
        """Per-sentence candidate events via the configured backend."""
        backend = self.config["backend"]
        results = []
        warned = False
        for doc, sent in self.sentences():
            if backend["mode"] == "external":
                instance = promptgen.build_prompt(sent, self.lexicon, self.config["soft_tokens"])
                try:
                    y = promptgen.generate_external(instance, backend["url"], backend["timeout"])
                    events, _ = promptgen.parse_candidates(y, sent)
                except promptgen.GenerationError as exc:
                    if not backend.get("fallback", False):
                        raise
                    if not warned:
                        print(f"warning: external backend failed ({exc}); "
                              "falling back to the rule backend", file=sys.stderr)
                        warned = True
                    events = promptgen.generate_rule_based(sent, self.lexicon)
            else:
                events = promptgen.generate_rule_based(sent, self.lexicon)
            results.append((doc, sent, events))
        return results

    def build_graphs(self, candidates):
        graphs = []
        sents = []
        for doc, sent, events in candidates:
            scope = f"{doc.doc_id}/{sent.sent_id}"
            graphs.append(eventgraph.build_graph(events, self.table, scope))
            sents.append(sent)
        return graphs, sents

    # -- encoding + clustering ----------------------------------------------

    def init_params(self) -> encoder.EncoderParams:
        enc = self.config["encoder"]
        return encoder.EncoderParams.initialize(
            self.table.dimension,
            enc.get("d_out"),
            enc["heads"],
            seed=self.config["seed"],
            leaky_slope=enc["leaky_slope"],
            activation=enc["activation"],
        )

    def train_config(self) -> encoder.TrainConfig:
        tr = self.config["train"]
        return encoder.TrainConfig(
            epochs=tr["epochs"],
            learning_rate=tr["learning_rate"],
            weight_decay=tr["weight_decay"],
            batch_size=tr["batch_size"],
            seed=self.config["seed"],
            edge_loss_weight=tr["edge_loss_weight"],
            cluster_iterations=tr["cluster_iterations"],
            cluster_batch=tr["cluster_batch"],
        )

    def role_points(self, graphs, encodings):
        """Split encodings by role; returns per-role (points, texts, node_map)."""
        out = {}
        for role in (eventgraph.Role.TRIGGER, eventgraph.Role.ARGUMENT):
            points, texts, node_map = [], [], {}
            for g_idx, graph in enumerate(graphs):
                for i, node in enumerate(graph.nodes):
                    if node.role == role:
                        node_map[(g_idx, i)] = len(points)
                        points.append(encodings[g_idx][i])
                        texts.append(node.text)
            out[role] = (np.array(points) if points else np.zeros((0, 1)), texts, node_map)
        return out

    def resolve_k(self, setting, points, role_name: str) -> int:
        cl = self.config["clustering"]
        if setting == "sweep":
            if len(points) <= 2:
                raise corpus.CorpusError(f"not enough {role_name} nodes to sweep k")
            k_max = min(cl["sweep_max"], len(points))
            result = clustering.sweep_k(
                points, cl["sweep_min"], k_max, seed=self.config["seed"],
                iterations=cl["iterations"], batch=cl["batch"],
            )
            return result.best_k
        return int(setting)

    def run_induction(self):
        candidates = self.generate_candidates()
        graphs, sents = self.build_graphs(candidates)
        nonempty = [g for g in graphs if g.nodes]
        if not nonempty:
            raise corpus.CorpusError("no candidate events found in the corpus")
        params = self.init_params()
        by_role = self.role_points(nonempty, [ [n.embedding for n in g.nodes] for g in nonempty ])
        cl = self.config["clustering"]
        k_trig = self.resolve_k(cl["k_trig"], by_role[eventgraph.Role.TRIGGER][0], "trigger")
        k_arg_points = by_role[eventgraph.Role.ARGUMENT][0]
        k_arg = self.resolve_k(cl["k_arg"], k_arg_points, "argument") if len(k_arg_points) else 1
        result = encoder.train(params, nonempty, self.train_config(), k_trig=k_trig, k_arg=k_arg)
        params = result.params
        records = [encoder.encode_graph(params, g) for g in nonempty]
        encodings = [np.array([n.encoded for n in g.nodes]) for g in nonempty]
        by_role = self.role_points(nonempty, encodings)
        trig_pts, trig_texts, trig_map = by_role[eventgraph.Role.TRIGGER]
        arg_pts, arg_texts, arg_map = by_role[eventgraph.Role.ARGUMENT]
        cl = self.config["clustering"]
        trig_model = clustering.minibatch_kmeans(
            trig_pts, min(k_trig, len(trig_pts)), cl["iterations"], cl["batch"], seed=self.config["seed"]
        )
        trig_model.role = "trigger"
        arg_model = None
        if len(arg_pts):
            arg_model = clustering.minibatch_kmeans(
                arg_pts, min(k_arg, len(arg_pts)), cl["iterations"], cl["batch"],
                seed=self.config["seed"] + 1,
            )
            arg_model.role = "argument"
        return {
            "candidates": candidates,
            "graphs": nonempty,
            "sentences": sents,
            "params": params,
            "records": records,
            "trig_model": trig_model,
            "trig_texts": trig_texts,
            "trig_points": trig_pts,
            "trig_map": trig_map,
            "arg_model": arg_model,
            "arg_texts": arg_texts,
            "arg_points": arg_pts,
            "arg_map": arg_map,
        }

    def induce_schemas(self, state):
        config = self.config["schema"]
        name_map = {int(k): v for k, v in (config.get("argument_name_map") or {}).items()}
        schema_config = schema.SchemaConfig(config["theta"], name_map or None)
        names = schema.name_trigger_clusters(
            state["trig_model"], state["trig_texts"], state["trig_points"]
        )
        trig_assign = {
            key: int(state["trig_model"].assignments[pos]) for key, pos in state["trig_map"].items()
        }
        arg_assign = {}
        if state["arg_model"] is not None:
            arg_assign = {
                key: int(state["arg_model"].assignments[pos]) for key, pos in state["arg_map"].items()
            }
        schemas = schema.induce_schemas(
            state["graphs"], state["records"], trig_assign, arg_assign,
            names, schema_config, state["trig_model"].k,
        )
        return schemas, trig_assign, arg_assign

    def write_manifest(self):
        atomic_write(
            os.path.join(self.out_dir, "manifest.json"),
            json.dumps(self.config, sort_keys=True, indent=2),
        )


def _candidates_jsonl(candidates) -> str:
    lines = []
    for doc, sent, events in candidates:
        lines.append(json.dumps({
            "doc_id": doc.doc_id,
            "sent_id": sent.sent_id,
            "events": [
                {
                    "trigger": ev.trigger_text,
                    "span": list(ev.trigger_span) if ev.trigger_span else None,
                    "args": [
                        {"text": a.text, "span": list(a.span) if a.span else None}
                        for a in ev.arguments
                    ],
                }
                for ev in events
            ],
        }, sort_keys=True))
    return "".join(line + "\n" for line in lines)


def cmd_extract(config: dict) -> int:
    pipeline = Pipeline(config)
    candidates = pipeline.generate_candidates()
    atomic_write(os.path.join(pipeline.out_dir, "candidates.jsonl"), _candidates_jsonl(candidates))
    pipeline.write_manifest()
    return EXIT_OK


def cmd_induce(config: dict) -> int:
    pipeline = Pipeline(config)
    state = pipeline.run_induction()
    schemas, _, _ = pipeline.induce_schemas(state)
    out = pipeline.out_dir
    atomic_write(os.path.join(out, "candidates.jsonl"), _candidates_jsonl(state["candidates"]))
    state["params"].save(os.path.join(out, "encoder.json"))
    state["trig_model"].save(os.path.join(out, "clusters_trigger.json"))
    if state["arg_model"] is not None:
        state["arg_model"].save(os.path.join(out, "clusters_argument.json"))
    atomic_write(
        os.path.join(out, "schemas.json"),
        json.dumps([s.to_dict() for s in schemas], sort_keys=True, indent=2),
    )
    pipeline.write_manifest()
    return EXIT_OK


def cmd_sweep(config: dict) -> int:
    pipeline = Pipeline(config)
    candidates = pipeline.generate_candidates()
    graphs, _ = pipeline.build_graphs(candidates)
    nonempty = [g for g in graphs if g.nodes]
    if not nonempty:
        raise corpus.CorpusError("no candidate events found in the corpus")
    params = pipeline.init_params()
    for g in nonempty:
        encoder.encode_graph(params, g)
    encodings = [np.array([n.encoded for n in g.nodes]) for g in nonempty]
    by_role = pipeline.role_points(nonempty, encodings)
    cl = config["clustering"]
    report = {}
    if cl["sweep_min"] < 2 or cl["sweep_min"] > cl["sweep_max"]:
        raise ConfigError(f"sweep range [{cl['sweep_min']}, {cl['sweep_max']}] is invalid")
    for role, role_name in ((eventgraph.Role.TRIGGER, "trigger"), (eventgraph.Role.ARGUMENT, "argument")):
        points = by_role[role][0]
        if len(points) == 0:
            report[role_name] = None
            continue
        if cl["sweep_max"] > len(points):
            raise ConfigError(f"sweep range [{cl['sweep_min']}, {cl['sweep_max']}] is invalid "
                              f"for {len(points)} {role_name} points")
        result = clustering.sweep_k(points, cl["sweep_min"], cl["sweep_max"], seed=config["seed"],
                                    iterations=cl["iterations"], batch=cl["batch"])
        report[role_name] = {
            "candidates": [[k, score] for k, score in result.candidates],
            "best_k": result.best_k,
        }
    atomic_write(os.path.join(pipeline.out_dir, "sweep.json"),
                 json.dumps(report, sort_keys=True, indent=2))
    pipeline.write_manifest()
    return EXIT_OK


def _gold_label_for_span(sent, span, kind: str):
    if not sent.gold_events or span is None:
        return None
    for ev in sent.gold_events:
        if kind == "trigger" and tuple(ev.trigger_span) == tuple(span):
            return ev.event_type
        if kind == "argument":
            for arg_span, role in ev.arguments:
                if tuple(arg_span) == tuple(span):
                    return role
    return None


def cmd_eval(config: dict) -> int:
    pipeline = Pipeline(config)
    gold_present = any(
        sent.gold_events for _, sent in pipeline.sentences()
    )
    if not gold_present:
        raise corpus.CorpusError("corpus carries no gold events; nothing to evaluate")

    # supervised mode: fix k to the gold label counts
    event_types = set()
    role_types = set()
    for _, sent in pipeline.sentences():
        for ev in sent.gold_events or []:
            event_types.add(ev.event_type)
            for _, role in ev.arguments:
                role_types.add(role)
    pipeline.config["clustering"]["k_trig"] = max(1, len(event_types))
    pipeline.config["clustering"]["k_arg"] = max(1, len(role_types))

    state = pipeline.run_induction()
    _, trig_assign, arg_assign = pipeline.induce_schemas(state)

    # gold labels per clustered node, for the contingency mapping
    graphs = state["graphs"]
    sent_by_scope = {}
    for (doc, sent, _events) in state["candidates"]:
        sent_by_scope[f"{doc.doc_id}/{sent.sent_id}"] = sent

    def gold_pairs(assign, kind):
        clusters, labels = [], []
        for (g_idx, i), cluster in assign.items():
            graph = graphs[g_idx]
            sent = sent_by_scope[graph.scope_id]
            label = _gold_label_for_span(sent, graph.nodes[i].span, kind)
            clusters.append(cluster)
            labels.append(label)
        return clusters, labels

    trig_mapping = schema.map_clusters_to_gold(*gold_pairs(trig_assign, "trigger"))
    arg_mapping = {}
    if arg_assign:
        try:
            arg_mapping = schema.map_clusters_to_gold(*gold_pairs(arg_assign, "argument"))
        except schema.SchemaError:
            arg_mapping = {}

    predictions: dict[str, list[schema.PredictedEvent]] = {}
    gold: dict[str, list] = {}
    for g_idx, graph in enumerate(graphs):
        sent = sent_by_scope[graph.scope_id]
        preds = []
        for i, node in enumerate(graph.nodes):
            if node.role != eventgraph.Role.TRIGGER:
                continue
            span = node.span if node.span else (-1, -1)
            label = trig_mapping.get(trig_assign.get((g_idx, i)), "other")
            args = []
            for j in graph.adjacency[i]:
                if graphs[g_idx].nodes[j].role != eventgraph.Role.ARGUMENT:
                    continue
                a_span = graph.nodes[j].span if graph.nodes[j].span else (-1, -1)
                a_label = arg_mapping.get(arg_assign.get((g_idx, j)), "other")
                args.append((tuple(a_span), a_label))
            preds.append(schema.PredictedEvent(tuple(span), label, sorted(args)))
        predictions[graph.scope_id] = preds
    for doc, sent, _ in state["candidates"]:
        gold[f"{doc.doc_id}/{sent.sent_id}"] = list(sent.gold_events or [])

    report = schema.evaluate(predictions, gold)
    atomic_write(os.path.join(pipeline.out_dir, "eval.json"), report.to_json())
    pipeline.write_manifest()
    print(report.to_json())
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pglee", description=__doc__)
    parser.add_argument("command", choices=["extract", "induce", "sweep", "eval"])
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="override the output directory")
    args = parser.parse_args(argv)

    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides.setdefault("paths", {})["output"] = args.out

    try:
        config = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    handlers = {
        "extract": cmd_extract,
        "induce": cmd_induce,
        "sweep": cmd_sweep,
        "eval": cmd_eval,
    }
    try:
        return handlers[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (corpus.CorpusError, clustering.ClusteringError, schema.SchemaError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except promptgen.GenerationError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except encoder.DivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
