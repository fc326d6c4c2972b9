"""Resolvent-filter network: layers, forward pass, and reverse-mode gradients.

A layer maps X to ReLU(sum_k R_z^k X W_k + 1 beta^T). Biases are constant
per column by construction so that they translate exactly between a graph
and its coarse-grained version. Graph-level readout is the node-weighted
absolute aggregation Psi(X)_j = sum_i |X_ij| mu_i.

Gradients are computed analytically: the Euclidean adjoint of R_z^k is
M R_z^k M^{-1} (the resolvent is self-adjoint in the mu-inner product), so
the backward pass reuses the same factorization as the forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import WeightedGraph, laplacian
from .spectral import ResolventFactorization, lambda_max


@dataclass
class ResolvNetLayer:
    """One resolvent-filter layer; weights W_k for k = a..K plus bias coefficients."""

    a: int
    K: int
    z: float
    weights: list[np.ndarray]
    beta: np.ndarray

    def __post_init__(self):
        if self.a not in (0, 1):
            raise ValueError("starting index must be 0 or 1")
        if self.K < self.a:
            raise ValueError("max power must be >= starting index")
        if self.z >= 0.0:
            raise ValueError("shift z must be negative")
        if len(self.weights) != self.K - self.a + 1:
            raise ValueError("need one weight matrix per power k = a..K")
        shapes = {w.shape for w in self.weights}
        if len(shapes) != 1:
            raise ValueError("all weight matrices of a layer must share a shape")
        (f_in, f_out), = shapes
        if self.beta.shape != (f_out,):
            raise ValueError("bias length must equal output width")

    @property
    def f_in(self) -> int:
        return self.weights[0].shape[0]

    @property
    def f_out(self) -> int:
        return self.weights[0].shape[1]

    @staticmethod
    def zeros(a: int, K: int, z: float, f_in: int, f_out: int) -> "ResolvNetLayer":
        return ResolvNetLayer(a=a, K=K, z=z,
                              weights=[np.zeros((f_in, f_out)) for _ in range(K - a + 1)],
                              beta=np.zeros(f_out))

    def init(self, rng: np.random.Generator) -> None:
        s = 1.0 / np.sqrt(self.f_in)
        for k in range(len(self.weights)):
            self.weights[k] = rng.uniform(-s, s, size=self.weights[k].shape)
        self.beta = np.zeros_like(self.beta)


def aggregate(X, mu) -> np.ndarray:
    """Graph-level readout Psi(X)_j = sum_i |X_ij| mu_i."""
    X = np.asarray(X, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if X.shape[0] != mu.shape[0]:
        raise ValueError("dimension mismatch")
    if X.ndim == 1:
        X = X[:, None]
    return np.abs(X).T @ mu


def aggregate_backward(X, mu, grad_psi) -> np.ndarray:
    """d Psi / dX contracted with grad_psi; sign(0) taken as 0."""
    X = np.asarray(X, dtype=np.float64)
    return np.sign(X) * mu[:, None] * np.asarray(grad_psi)[None, :]


def layer_forward(layer: ResolvNetLayer, fact: ResolventFactorization, X,
                  cache: dict | None = None) -> np.ndarray:
    """ReLU(sum_k R_z^k X W_k + 1 beta^T); caches pre-activation and powers."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != layer.f_in:
        raise ValueError(f"expected {layer.f_in} input features, got {X.shape[1]}")
    if abs(layer.z - fact.z) > 0.0:
        raise ValueError("layer shift does not match factorization")
    powers = []
    P = X
    if layer.a == 1:
        P = fact.apply(P)
    powers.append(P)
    for _ in range(layer.a + 1, layer.K + 1):
        P = fact.apply(P)
        powers.append(P)
    Z = np.ones(X.shape[0])[:, None] * layer.beta[None, :]
    for P, Wk in zip(powers, layer.weights):
        Z = Z + P @ Wk
    if cache is not None:
        cache["input"] = X
        cache["powers"] = powers
        cache["pre"] = Z
    return np.maximum(Z, 0.0)


def layer_backward(layer: ResolvNetLayer, fact: ResolventFactorization,
                   cache: dict, grad_out: np.ndarray
                   ) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
    """Gradients (w.r.t. input, weights, bias) from the cached forward pass."""
    if "pre" not in cache:
        raise ValueError("missing forward cache")
    G = np.where(cache["pre"] > 0.0, grad_out, 0.0)
    grad_W = [P.T @ G for P in cache["powers"]]
    grad_beta = G.sum(axis=0)
    grad_X = np.zeros_like(cache["input"])
    adj = G
    last_k = 0
    for k, Wk in zip(range(layer.a, layer.K + 1), layer.weights):
        if k > last_k:
            adj = fact.adjoint_power_apply(k - last_k, adj)
            last_k = k
        grad_X = grad_X + adj @ Wk.T
    return grad_X, grad_W, grad_beta


@dataclass
class ResolvNetModel:
    """Stack of resolvent layers plus a linear (or one-hidden-layer) head.

    ``mode`` is "node" (per-node outputs) or "graph" (aggregate then predict);
    ``c_nf_fraction`` optionally rescales the Laplacian by that fraction of
    its norm before factorization.
    """

    layers: list[ResolvNetLayer]
    head_W: np.ndarray
    head_b: np.ndarray
    mode: str = "node"
    c_nf_fraction: float | None = None
    head_hidden_W: np.ndarray | None = None
    head_hidden_b: np.ndarray | None = None
    _initialized: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.mode not in ("node", "graph"):
            raise ValueError("mode must be 'node' or 'graph'")
        zs = {layer.z for layer in self.layers}
        if len(zs) > 1:
            raise ValueError("all layers must share the same shift z")
        starts = {layer.a for layer in self.layers}
        if len(starts) > 1:
            raise ValueError("all layers must share the same filter type")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.f_out != nxt.f_in:
                raise ValueError("consecutive layer widths do not chain")

    @property
    def z(self) -> float:
        return self.layers[0].z

    @property
    def filter_type(self) -> int:
        return self.layers[0].a

    @staticmethod
    def build(widths: list[int], out_dim: int, a: int, K: int, z: float,
              mode: str = "node", c_nf_fraction: float | None = None,
              head_hidden: int | None = None) -> "ResolvNetModel":
        """Uninitialized model with layer widths [F_0, F_1, ..., F_L]."""
        layers = [ResolvNetLayer.zeros(a, K, z, f_in, f_out)
                  for f_in, f_out in zip(widths, widths[1:])]
        f_last = widths[-1]
        if head_hidden is None:
            return ResolvNetModel(layers=layers, head_W=np.zeros((f_last, out_dim)),
                                  head_b=np.zeros(out_dim), mode=mode,
                                  c_nf_fraction=c_nf_fraction)
        return ResolvNetModel(layers=layers,
                              head_W=np.zeros((head_hidden, out_dim)),
                              head_b=np.zeros(out_dim),
                              head_hidden_W=np.zeros((f_last, head_hidden)),
                              head_hidden_b=np.zeros(head_hidden),
                              mode=mode, c_nf_fraction=c_nf_fraction)

    def init(self, rng: np.random.Generator) -> None:
        for layer in self.layers:
            layer.init(rng)
        fan_in = self.head_W.shape[0]
        if self.head_hidden_W is not None:
            s = 1.0 / np.sqrt(self.head_hidden_W.shape[0])
            self.head_hidden_W = rng.uniform(-s, s, size=self.head_hidden_W.shape)
            self.head_hidden_b = np.zeros_like(self.head_hidden_b)
        s = 1.0 / np.sqrt(fan_in)
        self.head_W = rng.uniform(-s, s, size=self.head_W.shape)
        self.head_b = np.zeros_like(self.head_b)
        self._initialized = True

    def operator(self, graph: WeightedGraph) -> ResolventFactorization:
        """Factorization of the (optionally rescaled) Laplacian of the graph."""
        delta = laplacian(graph)
        if self.c_nf_fraction is not None:
            c = self.c_nf_fraction * lambda_max(delta, graph.norm_context())
            if c <= 0.0:
                raise ValueError("cannot rescale the Laplacian of an edgeless graph")
            delta = delta / c
        return ResolventFactorization.build(delta, graph.mu, self.z)

    def feature_map(self, fact: ResolventFactorization, X, caches=None,
                    drop_masks=None) -> np.ndarray:
        """All layers, no head. ``drop_masks`` are training-time input masks."""
        H = np.asarray(X, dtype=np.float64)
        for li, layer in enumerate(self.layers):
            if drop_masks is not None:
                H = H * drop_masks[li]
            cache = {} if caches is not None else None
            H = layer_forward(layer, fact, H, cache)
            if caches is not None:
                caches.append(cache)
        return H

    def head_forward(self, feats: np.ndarray, mu, cache: dict | None = None):
        if self.mode == "graph":
            pooled = aggregate(feats, mu)
        else:
            pooled = feats
        hidden = None
        if self.head_hidden_W is not None:
            hidden = np.maximum(pooled @ self.head_hidden_W + self.head_hidden_b, 0.0)
            out = hidden @ self.head_W + self.head_b
        else:
            out = pooled @ self.head_W + self.head_b
        if cache is not None:
            cache["feats"] = feats
            cache["pooled"] = pooled
            cache["hidden"] = hidden
        return out

    def head_backward(self, cache: dict, grad_out, mu) -> tuple[np.ndarray, dict]:
        grads: dict[str, np.ndarray] = {}
        pooled = cache["pooled"]
        if pooled.ndim == 1:
            pooled = pooled[None, :]
            grad_out = np.atleast_2d(grad_out)
        if self.head_hidden_W is not None:
            hidden = np.atleast_2d(cache["hidden"])
            grads["head_W"] = hidden.T @ grad_out
            grads["head_b"] = grad_out.sum(axis=0)
            grad_hidden = grad_out @ self.head_W.T
            grad_hidden = np.where(hidden > 0.0, grad_hidden, 0.0)
            grads["head_hidden_W"] = pooled.T @ grad_hidden
            grads["head_hidden_b"] = grad_hidden.sum(axis=0)
            grad_pooled = grad_hidden @ self.head_hidden_W.T
        else:
            grads["head_W"] = pooled.T @ grad_out
            grads["head_b"] = grad_out.sum(axis=0)
            grad_pooled = grad_out @ self.head_W.T
        if self.mode == "graph":
            grad_feats = aggregate_backward(cache["feats"], mu, grad_pooled[0])
        else:
            grad_feats = grad_pooled
        return grad_feats, grads

    def backward_layers(self, fact: ResolventFactorization, caches, grad_feats,
                        drop_masks=None) -> dict:
        grads: dict[str, np.ndarray] = {}
        g = grad_feats
        for li in range(len(self.layers) - 1, -1, -1):
            g, grad_W, grad_beta = layer_backward(self.layers[li], fact, caches[li], g)
            if drop_masks is not None:
                g = g * drop_masks[li]
            for ki, gw in enumerate(grad_W):
                grads[f"layer{li}.W{ki}"] = gw
            grads[f"layer{li}.beta"] = grad_beta
        grads["input"] = g
        return grads

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        """Ordered live parameter references; names match gradient keys."""
        params = []
        for li, layer in enumerate(self.layers):
            for ki in range(len(layer.weights)):
                params.append((f"layer{li}.W{ki}", layer.weights[ki]))
            params.append((f"layer{li}.beta", layer.beta))
        if self.head_hidden_W is not None:
            params.append(("head_hidden_W", self.head_hidden_W))
            params.append(("head_hidden_b", self.head_hidden_b))
        params.append(("head_W", self.head_W))
        params.append(("head_b", self.head_b))
        return params

    def get_param(self, name: str) -> np.ndarray:
        for pname, arr in self.parameters():
            if pname == name:
                return arr
        raise KeyError(name)

    def set_param(self, name: str, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=np.float64)
        if name.startswith("layer"):
            loc, attr = name.split(".")
            layer = self.layers[int(loc[5:])]
            if attr == "beta":
                layer.beta = value
            else:
                layer.weights[int(attr[1:])] = value
        else:
            setattr(self, name, value)

    def state_copy(self) -> dict:
        return {name: arr.copy() for name, arr in self.parameters()}

    def load_state(self, state: dict) -> None:
        for name, arr in state.items():
            self.set_param(name, arr.copy())

    def to_dict(self) -> dict:
        d = {
            "layers": [{"a": layer.a, "K": layer.K, "z": layer.z,
                        "W_k": [w.tolist() for w in layer.weights],
                        "beta": layer.beta.tolist()} for layer in self.layers],
            "head": self.head_W.tolist(),
            "head_bias": self.head_b.tolist(),
            "mode": self.mode,
            "c_nf": self.c_nf_fraction,
        }
        if self.head_hidden_W is not None:
            d["head_hidden"] = self.head_hidden_W.tolist()
            d["head_hidden_bias"] = self.head_hidden_b.tolist()
        return d

    @staticmethod
    def from_dict(d: dict) -> "ResolvNetModel":
        layers = [ResolvNetLayer(a=int(sd["a"]), K=int(sd["K"]), z=float(sd["z"]),
                                 weights=[np.asarray(w, dtype=np.float64)
                                          for w in sd["W_k"]],
                                 beta=np.asarray(sd["beta"], dtype=np.float64))
                  for sd in d["layers"]]
        model = ResolvNetModel(
            layers=layers,
            head_W=np.asarray(d["head"], dtype=np.float64),
            head_b=np.asarray(d["head_bias"], dtype=np.float64),
            mode=d["mode"],
            c_nf_fraction=d.get("c_nf"),
            head_hidden_W=(np.asarray(d["head_hidden"], dtype=np.float64)
                           if "head_hidden" in d else None),
            head_hidden_b=(np.asarray(d["head_hidden_bias"], dtype=np.float64)
                           if "head_hidden_bias" in d else None),
        )
        model._initialized = True
        return model


def model_forward(model: ResolvNetModel, graph: WeightedGraph, X,
                  fact: ResolventFactorization | None = None) -> np.ndarray:
    """Deterministic forward pass through layers and head."""
    X = np.asarray(X, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite input features")
    if fact is None:
        fact = model.operator(graph)
    feats = model.feature_map(fact, X)
    return model.head_forward(feats, graph.mu)


def backward(model: ResolvNetModel, graph: WeightedGraph, X, upstream,
             fact: ResolventFactorization | None = None) -> dict:
    """Gradients of <upstream, model_forward(...)> for every parameter."""
    if fact is None:
        fact = model.operator(graph)
    caches: list[dict] = []
    feats = model.feature_map(fact, np.asarray(X, dtype=np.float64), caches=caches)
    head_cache: dict = {}
    model.head_forward(feats, graph.mu, cache=head_cache)
    grad_feats, grads = model.head_backward(head_cache, np.asarray(upstream, dtype=np.float64),
                                            graph.mu)
    grads.update(model.backward_layers(fact, caches, grad_feats))
    return grads
