"""Role-typed multi-head graph attention encoder with hand-written gradients.

Forward pass per head: project node embeddings with the role-selected
matrix, score edges by inner product, LeakyReLU + softmax over each
neighborhood, aggregate neighbor projections, apply the nonlinearity.
Head outputs are averaged. The training loss combines a soft cluster
assignment term (inverse-distance memberships) with edge reconstruction
against sampled non-edges; gradients are propagated analytically all the
way back to the two role transforms of every head.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from pglee.eventgraph import EventGraph, Role

CHECKPOINT_VERSION = 1
_DIST_EPS = 1e-12


class EncoderError(ValueError):
    pass


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


def _elu(x):
    return np.where(x > 0, x, np.expm1(x))


def _elu_grad(x):
    return np.where(x > 0, 1.0, np.exp(x))


def _leaky(x, slope):
    return np.where(x >= 0, x, slope * x)


def _leaky_grad(x, slope):
    return np.where(x >= 0, 1.0, slope)


@dataclass
class EncoderParams:
    w_trig: np.ndarray  # (K, d_out, d)
    w_arg: np.ndarray  # (K, d_out, d)
    leaky_slope: float = 0.2
    activation: str = "elu"  # "elu" or "leaky_relu"

    def __post_init__(self):
        if self.w_trig.shape != self.w_arg.shape:
            raise EncoderError("trigger/argument transforms must share shape")
        if self.w_trig.ndim != 3:
            raise EncoderError("head matrices must be (K, d_out, d)")
        if not (0.0 < self.leaky_slope < 1.0):
            raise EncoderError("leaky_slope must lie in (0, 1)")
        if self.activation not in ("elu", "leaky_relu"):
            raise EncoderError(f"unknown activation {self.activation!r}")

    @property
    def heads(self) -> int:
        return self.w_trig.shape[0]

    @property
    def d_in(self) -> int:
        return self.w_trig.shape[2]

    @property
    def d_out(self) -> int:
        return self.w_trig.shape[1]

    def matrix(self, role: Role, head: int) -> np.ndarray:
        return self.w_trig[head] if role == Role.TRIGGER else self.w_arg[head]

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.w_trig.copy(), self.w_arg.copy(), self.leaky_slope, self.activation)

    def _act(self, x):
        if self.activation == "elu":
            return _elu(x)
        return _leaky(x, self.leaky_slope)

    def _act_grad(self, x):
        if self.activation == "elu":
            return _elu_grad(x)
        return _leaky_grad(x, self.leaky_slope)

    @classmethod
    def initialize(cls, d_in: int, d_out: int | None = None, heads: int = 4,
                   seed: int = 0, leaky_slope: float = 0.2, activation: str = "elu"):
        d_out = d_in if d_out is None else d_out
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(d_in)
        return cls(
            rng.normal(0.0, scale, (heads, d_out, d_in)),
            rng.normal(0.0, scale, (heads, d_out, d_in)),
            leaky_slope,
            activation,
        )

    def save(self, path) -> None:
        payload = {
            "version": CHECKPOINT_VERSION,
            "heads": self.heads,
            "d_in": self.d_in,
            "d_out": self.d_out,
            "leaky_slope": self.leaky_slope,
            "activation": self.activation,
            "w_trig": self.w_trig.tolist(),
            "w_arg": self.w_arg.tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path) -> "EncoderParams":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("version") != CHECKPOINT_VERSION:
            raise EncoderError(f"unsupported checkpoint version {payload.get('version')}")
        return cls(
            np.array(payload["w_trig"], dtype=np.float64),
            np.array(payload["w_arg"], dtype=np.float64),
            payload["leaky_slope"],
            payload["activation"],
        )


@dataclass
class AttentionRecord:
    # (i, j) -> alpha_ij, i.e. node i's attention over neighbor j
    per_head: list[dict[tuple[int, int], float]]
    averaged: dict[tuple[int, int], float]


@dataclass
class TrainConfig:
    epochs: int = 30
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 16
    seed: int = 0
    edge_loss_weight: float = 0.5
    cluster_iterations: int = 10
    cluster_batch: int = 256

    def __post_init__(self):
        if self.epochs < 1:
            raise EncoderError("epochs must be >= 1")
        if self.learning_rate < 0 or self.weight_decay < 0:
            raise EncoderError("rates must be non-negative")


def score_edge(params: EncoderParams, head: int, node_i, node_j) -> float:
    """Inner product of the role-projected embeddings of two nodes."""
    w_i = params.matrix(node_i.role, head)
    w_j = params.matrix(node_j.role, head)
    if node_i.embedding.shape[0] != params.d_in or node_j.embedding.shape[0] != params.d_in:
        raise EncoderError(
            f"embedding dimension mismatch: expected {params.d_in}, "
            f"got {node_i.embedding.shape[0]} and {node_j.embedding.shape[0]}"
        )
    return float(np.dot(w_i @ node_i.embedding, w_j @ node_j.embedding))


def normalize_attention(scores: dict, slope: float = 0.2) -> dict:
    """LeakyReLU + max-stabilized softmax over one neighborhood."""
    if not scores:
        raise EncoderError("cannot normalize attention over an empty neighbor set")
    keys = list(scores)
    raw = np.array([scores[k] for k in keys], dtype=np.float64)
    act = _leaky(raw, slope)
    shifted = np.exp(act - act.max())
    alphas = shifted / shifted.sum()
    return dict(zip(keys, alphas))


class _HeadCache:
    """All per-head intermediates needed by the backward pass."""

    __slots__ = ("proj", "neigh", "escore", "alpha", "pre_act")

    def __init__(self, proj, neigh, escore, alpha, pre_act):
        self.proj = proj  # (n, d_out) role-projected embeddings
        self.neigh = neigh  # list of neighbor index arrays per node
        self.escore = escore  # list of raw e_ij arrays per node
        self.alpha = alpha  # list of alpha arrays per node
        self.pre_act = pre_act  # (n, d_out) aggregated messages, before sigma


def _forward(params: EncoderParams, graph: EventGraph):
    """Returns (encoded (n, d_out), head caches)."""
    n = len(graph.nodes)
    d_out = params.d_out
    embeddings = np.array([node.embedding for node in graph.nodes]) if n else np.zeros((0, params.d_in))
    trig_mask = np.array([node.role == Role.TRIGGER for node in graph.nodes], dtype=bool)
    neigh = [np.array(sorted(graph.adjacency[i]), dtype=np.int64) for i in range(n)]
    encoded = np.zeros((n, d_out))
    caches = []
    for head in range(params.heads):
        proj = np.empty((n, d_out))
        if n:
            proj[trig_mask] = embeddings[trig_mask] @ params.w_trig[head].T
            proj[~trig_mask] = embeddings[~trig_mask] @ params.w_arg[head].T
        escore, alpha = [], []
        pre_act = np.zeros((n, d_out))
        for i in range(n):
            nb = neigh[i]
            if nb.size == 0:
                escore.append(np.zeros(0))
                alpha.append(np.zeros(0))
                continue
            e = proj[nb] @ proj[i]
            act = _leaky(e, params.leaky_slope)
            shifted = np.exp(act - act.max())
            a = shifted / shifted.sum()
            escore.append(e)
            alpha.append(a)
            pre_act[i] = a @ proj[nb]
        encoded += params._act(pre_act)
        caches.append(_HeadCache(proj, neigh, escore, alpha, pre_act))
    if params.heads:
        encoded /= params.heads
    return encoded, caches


def encode_node(params: EncoderParams, head: int, graph: EventGraph, i: int) -> np.ndarray:
    """Single-head encoding of one node (isolated nodes map to sigma(0))."""
    nb = sorted(graph.adjacency[i])
    agg = np.zeros(params.d_out)
    if nb:
        scores = {j: score_edge(params, head, graph.nodes[i], graph.nodes[j]) for j in nb}
        alphas = normalize_attention(scores, params.leaky_slope)
        for j, a in alphas.items():
            node_j = graph.nodes[j]
            agg += a * (params.matrix(node_j.role, head) @ node_j.embedding)
    return params._act(agg)


def encode_graph(params: EncoderParams, graph: EventGraph) -> AttentionRecord:
    """Encode all nodes in place (node.encoded) and record attention."""
    encoded, caches = _forward(params, graph)
    per_head = []
    for cache in caches:
        head_map = {}
        for i, nb in enumerate(cache.neigh):
            for pos, j in enumerate(nb):
                head_map[(i, int(j))] = float(cache.alpha[i][pos])
        per_head.append(head_map)
    averaged = {}
    if per_head:
        for key in per_head[0]:
            averaged[key] = sum(m[key] for m in per_head) / len(per_head)
    for i, node in enumerate(graph.nodes):
        node.encoded = encoded[i]
    return AttentionRecord(per_head, averaged)


def _logsigmoid(x: float) -> float:
    return -np.logaddexp(0.0, -x)


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + np.exp(-x)) if x >= 0 else np.exp(x) / (1.0 + np.exp(x))


def _non_edge_pairs(graph: EventGraph) -> list[tuple[int, int]]:
    n = len(graph.nodes)
    return [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if j not in graph.adjacency[i]
    ]


def sample_non_edges(graph: EventGraph, count: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """One uniform non-adjacent pair per requested count (with replacement)."""
    pool = _non_edge_pairs(graph)
    if not pool or count == 0:
        return []
    picks = rng.integers(0, len(pool), size=count)
    return [pool[p] for p in picks]


def _graph_loss_terms(params, graph, encoded, trig_model, arg_model, assignment,
                      edge_loss_weight, non_edges):
    """Loss contribution of one graph plus its gradient w.r.t. encoded vectors."""
    n = len(graph.nodes)
    loss = 0.0
    g_enc = np.zeros_like(encoded)

    # soft-assignment clustering term: -log p(assigned cluster)
    for i, node in enumerate(graph.nodes):
        model = trig_model if node.role == Role.TRIGGER else arg_model
        if model is None:
            continue
        a = int(assignment[i])
        diff = encoded[i][None, :] - model.centroids  # (k, d_out)
        dist = np.maximum(np.sqrt(np.einsum("kd,kd->k", diff, diff)), _DIST_EPS)
        inv = 1.0 / dist
        loss += np.log(dist[a]) + np.log(inv.sum())
        g_enc[i] += diff[a] / dist[a] ** 2
        g_enc[i] -= (diff * (inv**3)[:, None]).sum(axis=0) / inv.sum()

    # edge reconstruction with sampled non-edges
    if edge_loss_weight != 0.0 and n:
        edge_loss = 0.0
        for i, j in graph.edges():
            x = float(encoded[i] @ encoded[j])
            edge_loss += -_logsigmoid(x)
            gx = edge_loss_weight * (_sigmoid(x) - 1.0)
            g_enc[i] += gx * encoded[j]
            g_enc[j] += gx * encoded[i]
        for i, j in non_edges:
            x = float(encoded[i] @ encoded[j])
            edge_loss += -_logsigmoid(-x)
            gx = edge_loss_weight * _sigmoid(x)
            g_enc[i] += gx * encoded[j]
            g_enc[j] += gx * encoded[i]
        loss += edge_loss_weight * edge_loss

    return loss, g_enc


def _backward(params: EncoderParams, graph: EventGraph, caches, g_enc):
    """Propagate d(loss)/d(encoded) back to the head transforms."""
    n = len(graph.nodes)
    g_wt = np.zeros_like(params.w_trig)
    g_wa = np.zeros_like(params.w_arg)
    if n == 0:
        return g_wt, g_wa
    embeddings = np.array([node.embedding for node in graph.nodes])
    trig_mask = np.array([node.role == Role.TRIGGER for node in graph.nodes], dtype=bool)
    gz = g_enc / params.heads
    for head, cache in enumerate(caches):
        g_pre = gz * params._act_grad(cache.pre_act)
        g_proj = np.zeros_like(cache.proj)
        for i in range(n):
            nb = cache.neigh[i]
            if nb.size == 0:
                continue
            alpha = cache.alpha[i]
            # m_i = sum_j alpha_j proj_j
            g_proj[nb] += alpha[:, None] * g_pre[i][None, :]
            g_alpha = cache.proj[nb] @ g_pre[i]
            g_s = alpha * (g_alpha - float(alpha @ g_alpha))
            g_e = g_s * _leaky_grad(cache.escore[i], params.leaky_slope)
            # e_ij = proj_i . proj_j
            g_proj[i] += g_e @ cache.proj[nb]
            g_proj[nb] += g_e[:, None] * cache.proj[i][None, :]
        if trig_mask.any():
            g_wt[head] += g_proj[trig_mask].T @ embeddings[trig_mask]
        if (~trig_mask).any():
            g_wa[head] += g_proj[~trig_mask].T @ embeddings[~trig_mask]
    return g_wt, g_wa


def training_loss(params, graphs, trig_model, arg_model, assignments, *,
                  edge_loss_weight=0.5, weight_decay=0.0, neg_seed=0):
    """Scalar training loss; see loss_and_grads for the gradient version."""
    loss, _, _ = loss_and_grads(
        params, graphs, trig_model, arg_model, assignments,
        edge_loss_weight=edge_loss_weight, weight_decay=weight_decay, neg_seed=neg_seed,
    )
    return loss


def loss_and_grads(params, graphs, trig_model, arg_model, assignments, *,
                   edge_loss_weight=0.5, weight_decay=0.0, neg_seed=0):
    """Loss plus analytical gradients (d loss / d w_trig, d loss / d w_arg).

    Non-edge sampling is driven entirely by neg_seed and the graph order,
    so the function is deterministic in its arguments.
    """
    rng = np.random.default_rng(neg_seed)
    total = 0.0
    g_wt = np.zeros_like(params.w_trig)
    g_wa = np.zeros_like(params.w_arg)
    for graph, assignment in zip(graphs, assignments):
        encoded, caches = _forward(params, graph)
        non_edges = sample_non_edges(graph, len(graph.edges()), rng)
        loss, g_enc = _graph_loss_terms(
            params, graph, encoded, trig_model, arg_model, assignment,
            edge_loss_weight, non_edges,
        )
        total += loss
        dwt, dwa = _backward(params, graph, caches, g_enc)
        g_wt += dwt
        g_wa += dwa
    if weight_decay:
        total += weight_decay * (np.sum(params.w_trig**2) + np.sum(params.w_arg**2)) / 2.0
        g_wt += weight_decay * params.w_trig
        g_wa += weight_decay * params.w_arg
    return float(total), g_wt, g_wa


@dataclass
class TrainResult:
    params: EncoderParams
    trig_model: object
    arg_model: object
    loss_history: list[float] = field(default_factory=list)


class _AdamW:
    """Decoupled-weight-decay adaptive moment updates."""

    def __init__(self, shapes, lr, weight_decay, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.wd = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.step_count = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, tensors, grads):
        self.step_count += 1
        b1c = 1.0 - self.beta1**self.step_count
        b2c = 1.0 - self.beta2**self.step_count
        for idx, (p, g) in enumerate(zip(tensors, grads)):
            self.m[idx] = self.beta1 * self.m[idx] + (1.0 - self.beta1) * g
            self.v[idx] = self.beta2 * self.v[idx] + (1.0 - self.beta2) * g * g
            mhat = self.m[idx] / b1c
            vhat = self.v[idx] / b2c
            p -= self.lr * (mhat / (np.sqrt(vhat) + self.eps) + self.wd * p)


def train(params: EncoderParams, graphs: list[EventGraph], config: TrainConfig,
          k_trig: int = 2, k_arg: int = 2) -> TrainResult:
    """Alternating schedule per epoch: encode, re-cluster with a fixed number
    of mini-batch iterations, then one pass of AdamW steps over graph batches.
    Deterministic given config.seed."""
    from pglee import clustering

    if not graphs:
        raise EncoderError("train requires at least one graph")
    params = params.copy()
    opt = _AdamW([params.w_trig.shape, params.w_arg.shape], config.learning_rate, config.weight_decay)
    order_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x7261696E]))
    history: list[float] = []
    trig_model = arg_model = None
    for epoch in range(config.epochs):
        # (a) encode every graph with current parameters
        encodings = [_forward(params, g)[0] for g in graphs]
        trig_pts, arg_pts, node_index = [], [], []
        for g_idx, graph in enumerate(graphs):
            for i, node in enumerate(graph.nodes):
                if node.role == Role.TRIGGER:
                    node_index.append((g_idx, i, Role.TRIGGER, len(trig_pts)))
                    trig_pts.append(encodings[g_idx][i])
                else:
                    node_index.append((g_idx, i, Role.ARGUMENT, len(arg_pts)))
                    arg_pts.append(encodings[g_idx][i])
        # (b) fixed mini-batch k-means iterations on the fresh encodings
        trig_model = clustering.minibatch_kmeans(
            np.array(trig_pts), min(k_trig, len(trig_pts)), config.cluster_iterations,
            config.cluster_batch, seed=config.seed + 7 * epoch + 1,
        ) if trig_pts else None
        arg_model = clustering.minibatch_kmeans(
            np.array(arg_pts), min(k_arg, len(arg_pts)), config.cluster_iterations,
            config.cluster_batch, seed=config.seed + 7 * epoch + 2,
        ) if arg_pts else None
        assignments = [np.zeros(len(g.nodes), dtype=np.int64) for g in graphs]
        for g_idx, i, role, pos in node_index:
            model = trig_model if role == Role.TRIGGER else arg_model
            assignments[g_idx][i] = model.assignments[pos]
        # (c) one pass of gradient steps over shuffled graph batches
        perm = order_rng.permutation(len(graphs))
        epoch_loss = 0.0
        for b_start in range(0, len(perm), config.batch_size):
            batch = perm[b_start : b_start + config.batch_size]
            loss, g_wt, g_wa = loss_and_grads(
                params,
                [graphs[i] for i in batch],
                trig_model,
                arg_model,
                [assignments[i] for i in batch],
                edge_loss_weight=config.edge_loss_weight,
                weight_decay=0.0,  # decay is decoupled into the optimizer
                neg_seed=config.seed * 1000003 + epoch * 1009 + b_start,
            )
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch offset {b_start}"
                )
            epoch_loss += loss
            opt.step([params.w_trig, params.w_arg], [g_wt, g_wa])
        history.append(epoch_loss)
    return TrainResult(params, trig_model, arg_model, history)
