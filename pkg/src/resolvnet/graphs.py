"""Node-weighted graphs, Laplacians, and the weighted norms used everywhere else.

All operator norms in this package are norms between mu-weighted spaces,
computed through the similarity transform M^{1/2} A M^{-1/2}. This is the
unique convention under which the resolvent has norm 1/|z| and the
projection/interpolation operators have norm exactly one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Edge weights below this are numerical noise and treated as absent.
WEIGHT_FLOOR = 1e-15


class GraphDocumentError(ValueError):
    """Raised when a graph document cannot be turned into a valid graph."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with positive node weights and non-negative edge weights.

    Attributes
    ----------
    n : int
        Node count.
    mu : (n,) array
        Strictly positive node weights.
    W : (n, n) array
        Symmetric edge-weight matrix with zero diagonal.
    node_features : (n, F) array, optional
    labels : (n,) int array, optional
        Per-node class indices.
    target : float, optional
        Per-graph regression target.
    ids : tuple of str
        Stable node identifiers (document round trips).
    """

    n: int
    mu: np.ndarray
    W: np.ndarray
    node_features: np.ndarray | None = None
    labels: np.ndarray | None = None
    target: float | None = None
    ids: tuple[str, ...] = field(default=())

    @staticmethod
    def from_arrays(W, mu=None, node_features=None, labels=None, target=None,
                    ids=None) -> "WeightedGraph":
        W = np.asarray(W, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise GraphDocumentError("weight matrix must be square")
        n = W.shape[0]
        if not np.all(np.isfinite(W)):
            raise GraphDocumentError("non-finite edge weight")
        if np.max(np.abs(W - W.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(W), initial=0.0)):
            raise GraphDocumentError("weight matrix is not symmetric")
        W = 0.5 * (W + W.T)
        if np.max(np.abs(np.diag(W)), initial=0.0) != 0.0:
            raise GraphDocumentError("self-loops are not supported")
        if np.min(W, initial=0.0) < 0.0:
            raise GraphDocumentError("negative edge weight")
        W = np.where(W < WEIGHT_FLOOR, 0.0, W)
        if mu is None:
            mu = np.ones(n)
        mu = np.asarray(mu, dtype=np.float64).reshape(n)
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0.0):
            raise GraphDocumentError("non-positive node weight")
        if node_features is not None:
            node_features = _frozen(np.atleast_2d(np.asarray(node_features, dtype=np.float64)))
            if node_features.shape[0] != n:
                raise GraphDocumentError("feature row count does not match node count")
        if labels is not None:
            labels = np.asarray(labels)
            labels.setflags(write=False)
        if ids is None:
            ids = tuple(str(i) for i in range(n))
        return WeightedGraph(n=n, mu=_frozen(mu), W=_frozen(W),
                             node_features=node_features, labels=labels,
                             target=target, ids=tuple(ids))

    @property
    def degrees(self) -> np.ndarray:
        return self.W.sum(axis=1)

    @property
    def total_weight(self) -> float:
        """mu(G), the total node weight."""
        return float(self.mu.sum())

    def norm_context(self) -> "WeightedNormContext":
        return WeightedNormContext(self.mu)


@dataclass(frozen=True)
class WeightedNormContext:
    """Carries the node weights defining <x, y>_mu = sum_i mu_i x_i y_i."""

    mu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64).reshape(-1)
        if np.any(mu <= 0.0):
            raise ValueError("non-positive node weight")
        object.__setattr__(self, "mu", _frozen(mu))

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    @property
    def sqrt_mu(self) -> np.ndarray:
        return np.sqrt(self.mu)


def load_graph(source) -> WeightedGraph:
    """Build a graph from a document.

    Accepts a dict (parsed JSON document), a JSON string, a path to a file,
    or whitespace-separated edge-list text (``u v w`` per line, unit node
    weights). JSON schema::

        {"nodes": [{"id": str, "mu": float?, "features": [float]?, "label": ...}],
         "edges": [{"u": str, "v": str, "w": float}]}
    """
    if isinstance(source, dict):
        return _graph_from_document(source)
    if isinstance(source, Path):
        return load_graph(source.read_text())
    if isinstance(source, str):
        text = source
        if "\n" not in text and not text.lstrip().startswith("{") and Path(text).is_file():
            text = Path(text).read_text()
        stripped = text.lstrip()
        if stripped.startswith("{"):
            try:
                doc = json.loads(text)
            except json.JSONDecodeError as e:
                raise GraphDocumentError(f"graph document does not parse: {e}") from e
            return _graph_from_document(doc)
        return _graph_from_edge_list(text)
    raise GraphDocumentError(f"unsupported graph source type: {type(source)!r}")


def _graph_from_document(doc: dict) -> WeightedGraph:
    try:
        nodes = doc["nodes"]
        edges = doc.get("edges", [])
    except (TypeError, KeyError) as e:
        raise GraphDocumentError("graph document must contain a 'nodes' list") from e
    ids = [str(nd["id"]) for nd in nodes]
    if len(set(ids)) != len(ids):
        raise GraphDocumentError("duplicate node id")
    index = {node_id: i for i, node_id in enumerate(ids)}
    n = len(ids)
    mu = np.ones(n)
    features = None
    labels = None
    for i, nd in enumerate(nodes):
        if "mu" in nd and nd["mu"] is not None:
            mu[i] = float(nd["mu"])
            if not np.isfinite(mu[i]) or mu[i] <= 0.0:
                raise GraphDocumentError(f"non-positive node weight for node {ids[i]!r}")
        if "features" in nd and nd["features"] is not None:
            row = np.asarray(nd["features"], dtype=np.float64)
            if features is None:
                features = np.zeros((n, row.shape[0]))
            features[i] = row
        if "label" in nd and nd["label"] is not None:
            if labels is None:
                labels = np.zeros(n)
            labels[i] = nd["label"]
    W = np.zeros((n, n))
    seen: dict[tuple[int, int], float] = {}
    for e in edges:
        try:
            u, v, w = index[str(e["u"])], index[str(e["v"])], float(e["w"])
        except KeyError as missing:
            raise GraphDocumentError(f"edge references unknown node {missing}") from missing
        if not np.isfinite(w):
            raise GraphDocumentError("non-finite edge weight")
        if w < 0.0:
            raise GraphDocumentError("negative edge weight")
        if u == v:
            raise GraphDocumentError("self-loops are not supported")
        key = (min(u, v), max(u, v))
        if key in seen and seen[key] != w:
            raise GraphDocumentError(
                f"conflicting weights for edge ({e['u']}, {e['v']}): {seen[key]} vs {w}")
        seen[key] = w
        W[u, v] = W[v, u] = w
    if labels is not None and np.allclose(labels, np.round(labels)):
        labels = labels.astype(np.int64)
    return WeightedGraph.from_arrays(W, mu=mu, node_features=features,
                                     labels=labels, ids=ids)


def _graph_from_edge_list(text: str) -> WeightedGraph:
    ids: list[str] = []
    index: dict[str, int] = {}
    rows: list[tuple[int, int, float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphDocumentError(f"line {lineno}: expected 'u v w'")
        u, v, w_str = parts
        try:
            w = float(w_str)
        except ValueError as e:
            raise GraphDocumentError(f"line {lineno}: bad weight {w_str!r}") from e
        for name in (u, v):
            if name not in index:
                index[name] = len(ids)
                ids.append(name)
        rows.append((index[u], index[v], w))
    n = len(ids)
    W = np.zeros((n, n))
    seen: dict[tuple[int, int], float] = {}
    for u, v, w in rows:
        if u == v:
            raise GraphDocumentError("self-loops are not supported")
        key = (min(u, v), max(u, v))
        if key in seen and seen[key] != w:
            raise GraphDocumentError(f"conflicting weights for edge ({ids[u]}, {ids[v]})")
        seen[key] = w
        W[u, v] = W[v, u] = w
    return WeightedGraph.from_arrays(W, ids=ids)


def graph_to_document(g: WeightedGraph) -> dict:
    """Inverse of :func:`load_graph` for the JSON document form."""
    nodes = []
    for i in range(g.n):
        nd: dict = {"id": g.ids[i], "mu": float(g.mu[i])}
        if g.node_features is not None:
            nd["features"] = [float(x) for x in g.node_features[i]]
        if g.labels is not None:
            nd["label"] = g.labels[i].item()
        nodes.append(nd)
    edges = []
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if g.W[i, j] > 0.0:
                edges.append({"u": g.ids[i], "v": g.ids[j], "w": float(g.W[i, j])})
    return {"nodes": nodes, "edges": edges}


def laplacian(g: WeightedGraph) -> np.ndarray:
    """Graph Laplacian M^{-1}(D - W); self-adjoint w.r.t. <.,.>_mu."""
    L = np.diag(g.degrees) - g.W
    return L / g.mu[:, None]


def weighted_vector_norm(x, ctx: WeightedNormContext) -> float:
    """sqrt(sum_ij |x_ij|^2 mu_i) for a vector or an n x F feature matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != ctx.n:
        raise ValueError(f"dimension mismatch: {x.shape[0]} rows vs {ctx.n} weights")
    if x.ndim == 1:
        return float(np.sqrt(np.sum(ctx.mu * x * x)))
    return float(np.sqrt(np.sum(ctx.mu[:, None] * x * x)))


def weighted_operator_norm(A, ctx_out: WeightedNormContext,
                           ctx_in: WeightedNormContext) -> float:
    """Largest singular value of M_out^{1/2} A M_in^{-1/2}.

    Equals sup ||A x||_{mu_out} / ||x||_{mu_in}.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.shape != (ctx_out.n, ctx_in.n):
        raise ValueError(f"dimension mismatch: {A.shape} vs ({ctx_out.n}, {ctx_in.n})")
    B = ctx_out.sqrt_mu[:, None] * A / ctx_in.sqrt_mu[None, :]
    if min(B.shape) == 0:
        return 0.0
    return float(np.linalg.svd(B, compute_uv=False)[0])
