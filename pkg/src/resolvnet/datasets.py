"""Synthetic data: the standard two-scale family, a labeled SBM for node
classification, and molecule-like Coulomb graphs for the collapse experiment.

All generators are deterministic given their parameters and seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import WeightedGraph
from .multiscale import ScaleDecomposition, decompose

MAX_CHARGE = 8
FEATURE_DIM = MAX_CHARGE + 1  # one-hot slot per nuclear charge 0..8


def synth_two_scale_family(n_clusters: int, cluster_size: int, S: float,
                           bridge_weight: float = 1.0) -> WeightedGraph:
    """S-weight cliques joined by unit-weight bridges on a ring.

    Cluster c occupies nodes [c*cluster_size, (c+1)*cluster_size); bridges
    connect the first node of consecutive clusters. Unit node weights.
    """
    if n_clusters < 1 or cluster_size < 1 or S <= 0.0:
        raise ValueError("family parameters must be positive")
    n = n_clusters * cluster_size
    W = np.zeros((n, n))
    for c in range(n_clusters):
        lo = c * cluster_size
        for i in range(lo, lo + cluster_size):
            for j in range(i + 1, lo + cluster_size):
                W[i, j] = W[j, i] = S
    if n_clusters == 2:
        W[0, cluster_size] = W[cluster_size, 0] = bridge_weight
    elif n_clusters > 2:
        for c in range(n_clusters):
            u, v = c * cluster_size, ((c + 1) % n_clusters) * cluster_size
            W[u, v] = W[v, u] = bridge_weight
    return WeightedGraph.from_arrays(W)


def standard_family_decomposition(S: float, n_clusters: int = 3,
                                  cluster_size: int = 4) -> ScaleDecomposition:
    """The standard scan family, split at the midpoint threshold."""
    g = synth_two_scale_family(n_clusters, cluster_size, S)
    return decompose(g, 0.5 * (1.0 + S))


@dataclass(frozen=True)
class SbmTaskData:
    graph: WeightedGraph
    features: np.ndarray
    labels: np.ndarray
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray


def sbm_classification_data(seed: int, n_communities: int = 4,
                            community_size: int = 60, p_in: float = 0.10,
                            p_out: float = 0.01, feat_dim: int = 5,
                            mean_scale: float = 1.0, noise_scale: float = 2.0
                            ) -> SbmTaskData:
    """Labeled stochastic block model with weak per-node Gaussian features.

    Features alone are deliberately noisy: solving the task well requires
    mixing information over each community, which is what the clique
    expansion later disrupts for degree-discounting propagation. Split is
    60/20/20 stratified per class.
    """
    rng = np.random.default_rng(seed)
    n = n_communities * community_size
    labels = np.repeat(np.arange(n_communities), community_size)
    upper = rng.random((n, n))
    prob = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    W = np.where(np.triu(upper, 1) < np.triu(prob, 1), 1.0, 0.0)
    W = W + W.T
    # keep the graph connected enough: wire consecutive communities once
    for c in range(n_communities - 1):
        u, v = c * community_size, (c + 1) * community_size
        W[u, v] = W[v, u] = 1.0
    means = rng.normal(size=(n_communities, feat_dim))
    means *= mean_scale / np.linalg.norm(means, axis=1, keepdims=True)
    X = means[labels] + noise_scale * rng.normal(size=(n, feat_dim))
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    for c in range(n_communities):
        idx = rng.permutation(np.nonzero(labels == c)[0])
        n_train = int(0.6 * idx.size)
        n_val = int(0.2 * idx.size)
        train[idx[:n_train]] = True
        val[idx[n_train:n_train + n_val]] = True
        test[idx[n_train + n_val:]] = True
    g = WeightedGraph.from_arrays(W, node_features=X, labels=labels)
    return SbmTaskData(graph=g, features=X, labels=labels,
                       train_mask=train, val_mask=val, test_mask=test)


@dataclass(frozen=True)
class MoleculeLikeGraph:
    """Atoms with 3-D positions and nuclear charges; edges are Coulomb weights."""

    positions: np.ndarray
    charges: np.ndarray
    target: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        charges = np.asarray(self.charges, dtype=np.int64).reshape(-1)
        if pos.shape[0] != charges.shape[0]:
            raise ValueError("positions and charges disagree on atom count")
        if np.any(charges < 1) or np.any(charges > MAX_CHARGE):
            raise ValueError(f"charges must lie in 1..{MAX_CHARGE}")
        pos.setflags(write=False)
        charges.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "charges", charges)

    @property
    def n(self) -> int:
        return self.charges.shape[0]

    @property
    def heavy_mask(self) -> np.ndarray:
        return self.charges > 1

    def coulomb_weights(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=2))
        with np.errstate(divide="ignore"):
            W = np.where(dist > 0.0,
                         self.charges[:, None] * self.charges[None, :] / np.where(dist > 0, dist, 1.0),
                         0.0)
        np.fill_diagonal(W, 0.0)
        if np.any(~np.isfinite(W)) or np.any((W == 0.0) & (dist == 0.0) & ~np.eye(self.n, dtype=bool)):
            raise ValueError("coincident atoms produce infinite Coulomb weight")
        return W

    def one_hot_features(self) -> np.ndarray:
        X = np.zeros((self.n, FEATURE_DIM))
        X[np.arange(self.n), self.charges] = 1.0
        return X

    def to_weighted_graph(self) -> WeightedGraph:
        return WeightedGraph.from_arrays(self.coulomb_weights(),
                                         mu=self.charges.astype(np.float64),
                                         node_features=self.one_hot_features(),
                                         target=self.target)

    def nearest_heavy(self) -> np.ndarray:
        """For each atom, the index of the nearest heavy atom (itself if heavy)."""
        heavy_idx = np.nonzero(self.heavy_mask)[0]
        if heavy_idx.size == 0:
            raise ValueError("molecule has no heavy atom")
        out = np.arange(self.n)
        for i in np.nonzero(~self.heavy_mask)[0]:
            d = np.linalg.norm(self.positions[heavy_idx] - self.positions[i], axis=1)
            out[i] = heavy_idx[np.argmin(d)]
        return out


def molecule_deflect(m: MoleculeLikeGraph, t: float) -> MoleculeLikeGraph:
    """Move every hydrogen a fraction t of the way to its nearest heavy atom."""
    if not 0.0 <= t < 1.0:
        raise ValueError("deflection parameter must lie in [0, 1)")
    anchors = m.nearest_heavy()
    pos = m.positions.copy()
    for i in np.nonzero(~m.heavy_mask)[0]:
        pos[i] = pos[i] + t * (m.positions[anchors[i]] - pos[i])
    return MoleculeLikeGraph(positions=pos, charges=m.charges, target=m.target)


def molecule_collapse(m: MoleculeLikeGraph) -> WeightedGraph:
    """Coarse description: each heavy atom absorbs its hydrogens.

    Node weight of a super-node is the summed charge, features are the
    charge-weighted bag of one-hot rows, and edge weights are Coulomb
    repulsions of the aggregated charges at the heavy-atom positions (hence
    independent of any hydrogen deflection). This is the limit of aggregating
    the fine edge weights as the hydrogens reach their heavy atoms.
    """
    heavy_idx = np.nonzero(m.heavy_mask)[0]
    if heavy_idx.size == 0:
        raise ValueError("molecule has no heavy atom")
    anchors = m.nearest_heavy()
    nc = heavy_idx.size
    group_of = {int(h): gi for gi, h in enumerate(heavy_idx)}
    member_group = np.array([group_of[int(anchors[i])] for i in range(m.n)])
    mu_c = np.zeros(nc)
    feats = np.zeros((nc, FEATURE_DIM))
    for i in range(m.n):
        gi = member_group[i]
        mu_c[gi] += m.charges[i]
        feats[gi, m.charges[i]] += m.charges[i]
    feats = feats / mu_c[:, None]
    pos = m.positions[heavy_idx]
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    with np.errstate(divide="ignore"):
        W = np.where(dist > 0.0, mu_c[:, None] * mu_c[None, :] / np.where(dist > 0, dist, 1.0), 0.0)
    np.fill_diagonal(W, 0.0)
    return WeightedGraph.from_arrays(W, mu=mu_c, node_features=feats, target=m.target)


def methane_like(heavy_charge: int = 6, n_hydrogens: int = 4,
                 bond_length: float = 0.08) -> MoleculeLikeGraph:
    """One heavy atom with hydrogens on a small tetrahedral-ish shell."""
    dirs = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0],
                     [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]) / np.sqrt(3.0)
    pos = [np.zeros(3)]
    charges = [heavy_charge]
    for h in range(n_hydrogens):
        pos.append(bond_length * dirs[h % 4] * (1.0 + 0.05 * (h // 4)))
        charges.append(1)
    return MoleculeLikeGraph(positions=np.array(pos), charges=np.array(charges),
                             target=0.0)


def _target_from_coarse(mu_total: float, n_h: int, n_heavy: int,
                        noise: float) -> float:
    return 1.0 + 0.04 * mu_total + 0.35 * n_h + 0.15 * n_heavy + noise


def random_molecule(rng: np.random.Generator, noise_scale: float = 0.02
                    ) -> MoleculeLikeGraph:
    """Heavy atoms on a jittered lattice with 0-3 close-in hydrogens each.

    Hydrogens sit at ~0.06-0.10 units from their heavy atom while heavy-heavy
    spacing is ~1.2 units, so the Coulomb graph is two-scale already at
    equilibrium. The target is a smooth function of coarse-graph invariants
    plus noise, so it is preserved under collapse.
    """
    n_heavy = int(rng.integers(3, 9))
    lattice = [(i, j, k) for k in range(2) for j in range(2) for i in range(2)]
    positions = []
    charges = []
    for a in range(n_heavy):
        base = np.array(lattice[a % len(lattice)], dtype=np.float64) * 1.2
        base[0] += 2.4 * (a // len(lattice))
        positions.append(base + rng.uniform(-0.15, 0.15, size=3))
        charges.append(int(rng.choice([6, 7, 8])))
    heavy_positions = list(positions)
    n_h = 0
    for a in range(n_heavy):
        for _ in range(int(rng.integers(0, 4))):
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            positions.append(heavy_positions[a] + rng.uniform(0.06, 0.10) * direction)
            charges.append(1)
            n_h += 1
    mu_total = float(np.sum(charges))
    target = _target_from_coarse(mu_total, n_h, n_heavy,
                                 noise_scale * float(rng.normal()))
    return MoleculeLikeGraph(positions=np.array(positions),
                             charges=np.array(charges), target=target)


def random_molecule_set(seed: int, count: int) -> list[MoleculeLikeGraph]:
    rng = np.random.default_rng(seed)
    return [random_molecule(rng) for _ in range(count)]
