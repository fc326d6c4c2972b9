"""Executable verification of the stability and consistency inequalities.

The constants C1 and C2 are assembled by literally running the proof
recursions layer by layer: with per-layer aggregates

    ||W^l||_z = sum_k ||W_k|| / |z|^k          (Lipschitz factor)
    D^l       = sum_k k ||W_k|| / |z|^{k-1}    (resolvent-gap factor)
    D^l_pert  = sum_k k ||W_k|| / |z|^{k+2}    (Laplacian-perturbation factor)

the hidden-feature norm obeys N_l = ||W^l||_z N_{l-1} + ||B^l|| and the
deviation between the two networks obeys e_l = D^l N_{l-1} g + ||W^l||_z e_{l-1}
with g the controlling operator distance, so every bound is (C1 ||X|| + C2) g.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import (WeightedGraph, laplacian, weighted_operator_norm,
                     weighted_vector_norm)
from .model import ResolvNetLayer, ResolvNetModel, aggregate
from .multiscale import Coarsening, ScaleDecomposition, lift_up, project_down
from .reports import CheckReport
from .spectral import ResolventFactorization, resolvent_gap

REL_TOL = 1e-9  # inequalities are exact in real arithmetic; this absorbs roundoff


def weight_norm_z(layer: ResolvNetLayer) -> float:
    """Per-layer Lipschitz aggregate sum_k ||W_k|| / |z|^k."""
    az = abs(layer.z)
    return float(sum(np.linalg.norm(Wk, 2) / az ** k
                     for k, Wk in zip(range(layer.a, layer.K + 1), layer.weights)))


def _gap_factor(layer: ResolvNetLayer, extra_power: int = 0) -> float:
    """sum_k k ||W_k|| / |z|^{k - 1 + extra_power}; the k = 0 term drops out."""
    az = abs(layer.z)
    total = 0.0
    for k, Wk in zip(range(layer.a, layer.K + 1), layer.weights):
        if k >= 1:
            total += k * np.linalg.norm(Wk, 2) / az ** (k - 1 + extra_power)
    return float(total)


def bias_norm(layer: ResolvNetLayer, mu_total: float) -> float:
    """||B||_mu for B = 1_G beta^T: sqrt(mu(G)) ||beta||_2."""
    return float(np.sqrt(mu_total) * np.linalg.norm(layer.beta))


@dataclass(frozen=True)
class StabilityConstants:
    layer_weight_norms: tuple[float, ...]
    layer_bias_norms: tuple[float, ...]
    layer_gap_factors: tuple[float, ...]
    c1: float
    c2: float


def assemble_constants(model: ResolvNetModel, mu_total: float,
                       kind: str = "scale") -> StabilityConstants:
    """Run the layer recursion; ``kind`` selects the controlling distance:
    "scale" for the resolvent gap, "laplacian" for ||Delta - Delta~||."""
    extra = 0 if kind == "scale" else 3
    w_norms, b_norms, d_factors = [], [], []
    p, q = 1.0, 0.0   # ||X^l|| <= p ||X|| + q
    a, b = 0.0, 0.0   # e_l <= (a ||X|| + b) * g
    for layer in model.layers:
        wn = weight_norm_z(layer)
        bn = bias_norm(layer, mu_total)
        dl = _gap_factor(layer, extra_power=extra)
        a, b = dl * p + wn * a, dl * q + wn * b
        p, q = wn * p, wn * q + bn
        w_norms.append(wn)
        b_norms.append(bn)
        d_factors.append(dl)
    return StabilityConstants(layer_weight_norms=tuple(w_norms),
                              layer_bias_norms=tuple(b_norms),
                              layer_gap_factors=tuple(d_factors),
                              c1=a, c2=b)


def forward_norm_bound(model: ResolvNetModel, mu_total: float, x_norm: float) -> float:
    bound = x_norm
    for layer in model.layers:
        bound = weight_norm_z(layer) * bound + bias_norm(layer, mu_total)
    return bound


def _passes(lhs: float, rhs: float) -> bool:
    return lhs <= rhs * (1.0 + REL_TOL) + 1e-14


def input_stability_check(model: ResolvNetModel, graph: WeightedGraph, X, Y,
                          fact: ResolventFactorization | None = None) -> CheckReport:
    """||Phi(X) - Phi(Y)|| <= ||X - Y|| * prod_l ||W^l||_z."""
    if fact is None:
        fact = ResolventFactorization.build(laplacian(graph), graph.mu, model.z)
    ctx = graph.norm_context()
    lhs = weighted_vector_norm(model.feature_map(fact, X) - model.feature_map(fact, Y), ctx)
    lip = float(np.prod([weight_norm_z(layer) for layer in model.layers]))
    rhs = weighted_vector_norm(np.asarray(X, dtype=np.float64) - Y, ctx) * lip
    return CheckReport(name="input_stability", passed=_passes(lhs, rhs),
                       lhs=lhs, rhs_bound=rhs)


def forward_norm_bound_check(model: ResolvNetModel, graph: WeightedGraph, X,
                             fact: ResolventFactorization | None = None) -> CheckReport:
    """||Phi(X)|| <= layer recursion over ||W^l||_z and ||B^l||."""
    if fact is None:
        fact = ResolventFactorization.build(laplacian(graph), graph.mu, model.z)
    ctx = graph.norm_context()
    lhs = weighted_vector_norm(model.feature_map(fact, X), ctx)
    rhs = forward_norm_bound(model, graph.total_weight,
                             weighted_vector_norm(np.asarray(X, dtype=np.float64), ctx))
    return CheckReport(name="forward_norm_bound", passed=_passes(lhs, rhs),
                       lhs=lhs, rhs_bound=rhs)


def resolvent_difference_lemma_check(delta_a, delta_b, mu, z: float) -> CheckReport:
    """||R_z - R~_z|| <= ||Delta - Delta~|| / |z|^3 (dense oracle on both sides)."""
    from .graphs import WeightedNormContext

    ctx = WeightedNormContext(mu)
    n = np.asarray(delta_a).shape[0]
    Ra = ResolventFactorization.build(delta_a, mu, z).apply(np.eye(n))
    Rb = ResolventFactorization.build(delta_b, mu, z).apply(np.eye(n))
    lhs = weighted_operator_norm(Ra - Rb, ctx, ctx)
    rhs = weighted_operator_norm(np.asarray(delta_a) - np.asarray(delta_b), ctx, ctx) / abs(z) ** 3
    return CheckReport(name="resolvent_difference_lemma", passed=_passes(lhs, rhs),
                       lhs=lhs, rhs_bound=rhs)


def resolvent_power_lemma_check(delta_a, delta_b, mu, z: float, k: int) -> CheckReport:
    """||R^k - R~^k|| <= (k / |z|^{k-1}) ||R - R~||."""
    from .graphs import WeightedNormContext

    ctx = WeightedNormContext(mu)
    n = np.asarray(delta_a).shape[0]
    fa = ResolventFactorization.build(delta_a, mu, z)
    fb = ResolventFactorization.build(delta_b, mu, z)
    eye = np.eye(n)
    lhs = weighted_operator_norm(fa.power_apply(k, eye) - fb.power_apply(k, eye), ctx, ctx)
    base = weighted_operator_norm(fa.apply(eye) - fb.apply(eye), ctx, ctx)
    rhs = k / abs(z) ** (k - 1) * base
    return CheckReport(name=f"resolvent_power_lemma_k{k}", passed=_passes(lhs, rhs),
                       lhs=lhs, rhs_bound=rhs)


def laplacian_perturbation_check(model: ResolvNetModel, graph: WeightedGraph,
                                 delta, delta_tilde, X) -> CheckReport:
    """||Phi(X) - Phi~(X)|| <= (C1 ||X|| + C2) ||Delta - Delta~||, with the two
    building-block lemmas checked independently and folded into ``passed``."""
    delta = np.asarray(delta, dtype=np.float64)
    delta_tilde = np.asarray(delta_tilde, dtype=np.float64)
    if delta.shape != delta_tilde.shape or delta.shape[0] != graph.n:
        raise ValueError("Laplacians must share the node set of the graph")
    ctx = graph.norm_context()
    fa = ResolventFactorization.build(delta, graph.mu, model.z)
    fb = ResolventFactorization.build(delta_tilde, graph.mu, model.z)
    lhs = weighted_vector_norm(model.feature_map(fa, X) - model.feature_map(fb, X), ctx)
    consts = assemble_constants(model, graph.total_weight, kind="laplacian")
    x_norm = weighted_vector_norm(np.asarray(X, dtype=np.float64), ctx)
    pert = weighted_operator_norm(delta - delta_tilde, ctx, ctx)
    rhs = (consts.c1 * x_norm + consts.c2) * pert
    lemma1 = resolvent_difference_lemma_check(delta, delta_tilde, graph.mu, model.z)
    k_max = max(layer.K for layer in model.layers)
    lemma2 = resolvent_power_lemma_check(delta, delta_tilde, graph.mu, model.z,
                                         max(k_max, 2))
    return CheckReport(name="laplacian_perturbation", lhs=lhs, rhs_bound=rhs,
                       passed=_passes(lhs, rhs) and lemma1.passed and lemma2.passed,
                       details={"lemmas": [lemma1.to_dict(), lemma2.to_dict()],
                                "c1": consts.c1, "c2": consts.c2,
                                "perturbation": pert})


def _coarse_model(model: ResolvNetModel, coarse: WeightedGraph) -> ResolventFactorization:
    return ResolventFactorization.build(laplacian(coarse), coarse.mu, model.z)


def scale_consistency_check(model: ResolvNetModel, d: ScaleDecomposition,
                            c: Coarsening, X, equation: int) -> CheckReport:
    """Node-level consistency between a graph and its coarse-graining.

    ``equation`` 0 compares Phi(J_up Xbar) with J_up Phibar(Xbar) for Type-0
    nets (X is the coarse input); ``equation`` 1 compares Phi(X) with
    J_up Phibar(J_down X) for Type-I nets (X lives on the fine graph).
    """
    if equation not in (0, 1):
        raise ValueError("equation must be 0 or 1")
    if model.filter_type != equation:
        kind = "Type-0" if equation == 0 else "Type-I"
        raise ValueError(f"filter-type mismatch: this equation requires {kind} "
                         f"filters in all layers")
    g = d.base
    ctx = g.norm_context()
    fact_fine = ResolventFactorization.build(laplacian(g), g.mu, model.z)
    fact_coarse = _coarse_model(model, c.coarse)
    X = np.asarray(X, dtype=np.float64)
    if equation == 0:
        fine_in = lift_up(c, X)
        lhs_mat = (model.feature_map(fact_fine, fine_in)
                   - lift_up(c, model.feature_map(fact_coarse, X)))
        x_norm = weighted_vector_norm(fine_in, ctx)
    else:
        lhs_mat = (model.feature_map(fact_fine, X)
                   - lift_up(c, model.feature_map(fact_coarse, project_down(c, X))))
        x_norm = weighted_vector_norm(X, ctx)
    lhs = weighted_vector_norm(lhs_mat, ctx)
    gap = resolvent_gap(d, c, model.z, 1)
    consts = assemble_constants(model, g.total_weight, kind="scale")
    rhs = (consts.c1 * x_norm + consts.c2) * gap
    return CheckReport(name=f"scale_consistency_eq{equation}", lhs=lhs, rhs_bound=rhs,
                       passed=_passes(lhs, rhs),
                       details={"gap": gap, "c1": consts.c1, "c2": consts.c2})


def graph_consistency_check(model: ResolvNetModel, d: ScaleDecomposition,
                            c: Coarsening, X) -> CheckReport:
    """Graph-level consistency of the aggregated feature vectors (Type-I only)."""
    if model.filter_type != 1:
        raise ValueError("graph-level consistency requires a Type-I model")
    g = d.base
    ctx = g.norm_context()
    fact_fine = ResolventFactorization.build(laplacian(g), g.mu, model.z)
    fact_coarse = _coarse_model(model, c.coarse)
    X = np.asarray(X, dtype=np.float64)
    psi_fine = aggregate(model.feature_map(fact_fine, X), g.mu)
    psi_coarse = aggregate(model.feature_map(fact_coarse, project_down(c, X)),
                           c.coarse.mu)
    lhs = float(np.linalg.norm(psi_fine - psi_coarse))
    gap = resolvent_gap(d, c, model.z, 1)
    consts = assemble_constants(model, g.total_weight, kind="scale")
    rhs = np.sqrt(g.total_weight) * (consts.c1 * weighted_vector_norm(X, ctx)
                                     + consts.c2) * gap
    return CheckReport(name="graph_consistency", lhs=lhs, rhs_bound=rhs,
                       passed=_passes(lhs, rhs),
                       details={"gap": gap, "c1": consts.c1, "c2": consts.c2})
