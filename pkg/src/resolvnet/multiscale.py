"""Two-scale decomposition, connected components, and graph coarse-graining.

The coarse graph lives on the connected components of the strongly connected
part; the translation operators between the two resolutions are

    (J_down x)_R = <1_R, x>_mu / mu_R      (component-wise weighted average)
    J_up u       = sum_R u_R 1_R           (broadcast)

so that J_down J_up = Id on the coarse graph and J_up J_down is the spectral
projection onto the kernel of the high-scale Laplacian.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .graphs import WeightedGraph, laplacian
from .spectral import lambda_1_nonzero, lambda_max


class UnionFind:
    """Disjoint sets over 0..n-1 with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]


@dataclass(frozen=True)
class ScaleDecomposition:
    """Disjoint split W = W_reg + W_high with both Laplacians on the same mu."""

    base: WeightedGraph
    tau: float | None
    W_reg: np.ndarray
    W_high: np.ndarray
    delta_reg: np.ndarray
    delta_high: np.ndarray
    lambda_max_reg: float
    lambda_1_high: float | None

    @property
    def has_high_part(self) -> bool:
        return self.lambda_1_high is not None


def _finish_decomposition(g: WeightedGraph, tau, W_high: np.ndarray) -> ScaleDecomposition:
    W_reg = g.W - W_high
    d_reg = _sub_laplacian(W_reg, g.mu)
    d_high = _sub_laplacian(W_high, g.mu)
    lam_max_reg = lambda_max(d_reg, g.norm_context()) if g.n else 0.0
    lam1 = None
    if np.any(W_high > 0.0):
        comps = _components_of(W_high)
        lam1 = lambda_1_nonzero(d_high, g.mu, comps)
    for a in (W_reg, W_high, d_reg, d_high):
        a.setflags(write=False)
    return ScaleDecomposition(base=g, tau=tau, W_reg=W_reg, W_high=W_high,
                              delta_reg=d_reg, delta_high=d_high,
                              lambda_max_reg=float(max(lam_max_reg, 0.0)),
                              lambda_1_high=lam1)


def _sub_laplacian(W: np.ndarray, mu: np.ndarray) -> np.ndarray:
    return (np.diag(W.sum(axis=1)) - W) / mu[:, None]


def decompose(g: WeightedGraph, tau: float) -> ScaleDecomposition:
    """Split edges by weight threshold: weights >= tau form the high part."""
    if tau <= 0.0:
        raise ValueError("threshold must be positive")
    W_high = np.where(g.W >= tau, g.W, 0.0)
    return _finish_decomposition(g, tau, W_high)


def decompose_by_partition(g: WeightedGraph, groups) -> ScaleDecomposition:
    """Split by an explicit node partition: intra-group edges form the high part.

    Covers unweighted graphs with dense blocks, where no weight threshold can
    separate the scales.
    """
    member = np.full(g.n, -1, dtype=np.intp)
    for gi, group in enumerate(groups):
        for node in group:
            if member[node] != -1:
                raise ValueError(f"node {node} appears in two groups")
            member[node] = gi
    if np.any(member == -1):
        raise ValueError("partition does not cover all nodes")
    same = member[:, None] == member[None, :]
    W_high = np.where(same, g.W, 0.0)
    return _finish_decomposition(g, None, W_high)


def separation_ratio(d: ScaleDecomposition) -> float:
    """lambda_max(Delta_reg) / lambda_1(Delta_high); < 1 certifies scale separation."""
    if not d.has_high_part:
        raise ValueError("no high-scale part")
    ratio = d.lambda_max_reg / d.lambda_1_high
    if ratio >= 1.0:
        warnings.warn(f"scales are not separated (ratio {ratio:.3g} >= 1)",
                      stacklevel=2)
    return ratio


def _components_of(W_high: np.ndarray) -> tuple[tuple[int, ...], ...]:
    n = W_high.shape[0]
    uf = UnionFind(n)
    rows, cols = np.nonzero(W_high > 0.0)
    for i, j in zip(rows.tolist(), cols.tolist()):
        if i < j:
            uf.union(i, j)
    groups: dict[int, list[int]] = {}
    for node in range(n):
        groups.setdefault(uf.find(node), []).append(node)
    return tuple(tuple(sorted(members)) for _, members in
                 sorted(groups.items(), key=lambda kv: min(kv[1])))


def high_components(d: ScaleDecomposition) -> tuple[tuple[int, ...], ...]:
    """Connected components of the high-scale graph, ordered by smallest member.

    Nodes without an incident high edge are singleton components.
    """
    return _components_of(d.W_high)


@dataclass(frozen=True)
class Coarsening:
    """Coarse graph on the high-scale components plus the J operators."""

    decomposition: ScaleDecomposition
    components: tuple[tuple[int, ...], ...]
    coarse: WeightedGraph
    membership: np.ndarray
    j_down: np.ndarray
    j_up: np.ndarray


def coarsen(d: ScaleDecomposition) -> Coarsening:
    """Aggregate edge and node weight over the high-scale components."""
    g = d.base
    comps = high_components(d)
    nc = len(comps)
    membership = np.zeros(g.n, dtype=np.intp)
    for ci, comp in enumerate(comps):
        for node in comp:
            membership[node] = ci
    mu_c = np.zeros(nc)
    for ci, comp in enumerate(comps):
        mu_c[ci] = g.mu[list(comp)].sum()
    agg = np.zeros((nc, nc))
    rows, cols = np.nonzero(g.W > 0.0)
    for i, j in zip(rows.tolist(), cols.tolist()):
        R, P = membership[i], membership[j]
        if R != P:
            agg[R, P] += g.W[i, j]
    agg = 0.5 * (agg + agg.T)  # exact: both orientations were accumulated
    ids = tuple("+".join(g.ids[i] for i in comp) for comp in comps)
    coarse = WeightedGraph.from_arrays(agg, mu=mu_c, ids=ids)
    j_down = np.zeros((nc, g.n))
    j_up = np.zeros((g.n, nc))
    for ci, comp in enumerate(comps):
        idx = list(comp)
        j_down[ci, idx] = g.mu[idx] / mu_c[ci]
        j_up[idx, ci] = 1.0
    membership.setflags(write=False)
    j_down.setflags(write=False)
    j_up.setflags(write=False)
    return Coarsening(decomposition=d, components=comps, coarse=coarse,
                      membership=membership, j_down=j_down, j_up=j_up)


def project_down(c: Coarsening, X) -> np.ndarray:
    """mu-weighted component averages of the rows of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != c.decomposition.base.n:
        raise ValueError("dimension mismatch")
    return c.j_down @ X


def lift_up(c: Coarsening, X_coarse) -> np.ndarray:
    """Broadcast each coarse row to every node of its component."""
    X_coarse = np.asarray(X_coarse, dtype=np.float64)
    if X_coarse.shape[0] != c.coarse.n:
        raise ValueError("dimension mismatch")
    return c.j_up @ X_coarse


def zero_projection(c: Coarsening) -> np.ndarray:
    """J_up J_down: the mu-orthogonal projection onto span{1_R}."""
    return c.j_up @ c.j_down


def excl_reg_graph(d: ScaleDecomposition) -> WeightedGraph:
    """Regular edges whose endpoints touch no high edge at all."""
    attached = d.W_high.sum(axis=1) > 0.0
    keep = ~attached
    W = np.where(np.outer(keep, keep), d.W_reg, 0.0)
    return WeightedGraph.from_arrays(W, mu=d.base.mu, ids=d.base.ids)


def coarsening_to_document(c: Coarsening) -> dict:
    """Export {"components": [[node ids]], "coarse_graph": <graph document>}."""
    from .graphs import graph_to_document

    g = c.decomposition.base
    return {
        "components": [[g.ids[i] for i in comp] for comp in c.components],
        "coarse_graph": graph_to_document(c.coarse),
    }
