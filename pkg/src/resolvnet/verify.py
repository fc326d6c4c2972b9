"""Verification suites: every convergence and stability statement as an
executable check returning CheckReports.

The CLI `verify` subcommands and the acceptance test suite both run these,
so the command-line tool and the test suite cannot drift apart.
"""

from __future__ import annotations

import numpy as np

from .baselines import (ShiftOperatorKind, limit_gap_scan, limit_operator,
                        mpnn_scale_demo, shift_operator)
from .datasets import standard_family_decomposition, synth_two_scale_family
from .graphs import (WeightedGraph, WeightedNormContext, laplacian,
                     weighted_vector_norm)
from .model import ResolvNetLayer, ResolvNetModel
from .multiscale import Coarsening, ScaleDecomposition, coarsen, decompose
from .reports import CheckReport, fitted_loglog_slope
from .spectral import (ResolventFactorization, resolvent_gap,
                       second_resolvent_identity_check, spectrum)
from .stability import (forward_norm_bound_check, graph_consistency_check,
                        input_stability_check, laplacian_perturbation_check,
                        scale_consistency_check)

IDENTITY_TOL = 1e-9
S_SCAN = (10.0, 100.0, 1000.0, 10000.0)


def random_two_scale_graph(rng: np.random.Generator, n_max: int = 12,
                           high_scale: float = 100.0) -> tuple[WeightedGraph, float]:
    """Random graph with mixed node weights whose edges split cleanly at tau = 10."""
    n = int(rng.integers(4, n_max + 1))
    mu = rng.uniform(0.5, 2.0, size=n)
    W = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.5:
                W[i, j] = W[j, i] = rng.uniform(0.1, 1.0)
    nodes = rng.permutation(n)
    pos = 0
    n_clusters = int(rng.integers(1, 4))
    placed_high = False
    for _ in range(n_clusters):
        size = int(rng.integers(2, 5))
        cluster = nodes[pos:pos + size]
        pos += size
        if cluster.size < 2:
            break
        for a in range(cluster.size):
            for b in range(a + 1, cluster.size):
                i, j = cluster[a], cluster[b]
                W[i, j] = W[j, i] = high_scale * rng.uniform(0.5, 1.5)
                placed_high = True
    if not placed_high:
        W[0, 1] = W[1, 0] = high_scale
    return WeightedGraph.from_arrays(W, mu=mu), 10.0


def kernel_projection(delta, mu) -> np.ndarray:
    """mu-orthogonal eigenprojection onto the kernel, via dense eigendecomposition."""
    ctx = WeightedNormContext(mu)
    w, V = spectrum(delta, ctx)
    tol = 1e-9 * max(float(w[-1]), 1.0)
    Vk = V[:, w < tol]
    return Vk @ (np.asarray(mu)[:, None] * Vk).T


def random_model(rng: np.random.Generator, f_in: int, a: int, K: int, z: float,
                 n_layers: int = 2, width: int = 3, zero_weights: bool = False,
                 mode: str = "node") -> ResolvNetModel:
    widths = [f_in] + [width] * n_layers
    model = ResolvNetModel.build(widths, 1, a=a, K=K, z=z, mode=mode)
    for layer in model.layers:
        s = 0.8 / np.sqrt(layer.f_in)
        for ki in range(len(layer.weights)):
            layer.weights[ki] = (np.zeros_like(layer.weights[ki]) if zero_weights
                                 else rng.uniform(-s, s, size=layer.weights[ki].shape))
        layer.beta = rng.uniform(-0.5, 0.5, size=layer.beta.shape)
    model.head_W = rng.uniform(-0.5, 0.5, size=model.head_W.shape)
    model._initialized = True
    return model


def _standard_scan(z: float = -1.0, s_values=S_SCAN) -> list[dict]:
    rows = []
    for S in s_values:
        d = standard_family_decomposition(S)
        c = coarsen(d)
        rows.append({"S": S, "gap": resolvent_gap(d, c, z, 1),
                     "lambda_1_high": d.lambda_1_high})
    return rows


def two_node_collapse_setup(S: float) -> tuple[ScaleDecomposition, Coarsening]:
    g = synth_two_scale_family(1, 2, S)
    d = decompose(g, S / 2.0)
    return d, coarsen(d)


def applied_collapse_gap(S: float, z: float = -1.0) -> float:
    """mu-norm of (R_z(Delta) - lifted coarse resolvent) applied to (1, 0)."""
    d, c = two_node_collapse_setup(S)
    g = d.base
    fact = ResolventFactorization.build(laplacian(g), g.mu, z)
    x = np.array([1.0, 0.0])
    coarse_fact = ResolventFactorization.build(laplacian(c.coarse), c.coarse.mu, z)
    lifted = c.j_up @ coarse_fact.apply(c.j_down @ x)
    return weighted_vector_norm(fact.apply(x) - lifted, g.norm_context())


def verify_resolvent_convergence(seed: int = 0, n_random: int = 100,
                                 s_values=S_SCAN) -> list[CheckReport]:
    """Resolvent convergence to the coarse description plus its algebraic
    building blocks (J identities, coarse Laplacian, second resolvent formula,
    power lemma) on random two-scale graphs."""
    reports = []
    scan = _standard_scan(s_values=s_values)
    slope = fitted_loglog_slope([r["lambda_1_high"] for r in scan],
                                [r["gap"] for r in scan])
    reports.append(CheckReport(
        name="resolvent_gap_decay", scan=[{"S": r["S"], "gap": r["gap"]} for r in scan],
        slope=slope, lhs=scan[-1]["gap"], rhs_bound=1e-3,
        passed=slope <= -0.9 and scan[-1]["gap"] < 1e-3))

    worst = 0.0
    for S in (10.0, 100.0):
        exact = 1.0 / (np.sqrt(2.0) * (2.0 * S + 1.0))
        worst = max(worst, abs(applied_collapse_gap(S) - exact) / exact)
    reports.append(CheckReport(name="two_node_closed_form", lhs=worst,
                               rhs_bound=1e-9, passed=worst <= 1e-9))

    rng = np.random.default_rng(seed)
    dev_round_trip = dev_projection = dev_coarse_lap = dev_second = dev_power = 0.0
    for _ in range(n_random):
        g, tau = random_two_scale_graph(rng)
        d = decompose(g, tau)
        c = coarsen(d)
        nc = c.coarse.n
        dev_round_trip = max(dev_round_trip, float(np.max(np.abs(
            c.j_down @ c.j_up - np.eye(nc)))))
        P0 = c.j_up @ c.j_down
        dev_projection = max(dev_projection, float(np.max(np.abs(
            P0 - kernel_projection(d.delta_high, g.mu)))))
        dev_coarse_lap = max(dev_coarse_lap, float(np.max(np.abs(
            laplacian(c.coarse) - c.j_down @ d.delta_reg @ c.j_up))))
        dev_second = max(dev_second, second_resolvent_identity_check(d, -1.0))
        gap1 = resolvent_gap(d, c, -1.0, 1)
        gap2 = resolvent_gap(d, c, -1.0, 2)
        dev_power = max(dev_power, gap2 - 2.0 * gap1)
    for name, dev in (("round_trip_identity", dev_round_trip),
                      ("zero_projection_vs_eigenprojection", dev_projection),
                      ("coarse_laplacian_identity", dev_coarse_lap),
                      ("second_resolvent_formula", dev_second)):
        reports.append(CheckReport(name=name, lhs=dev, rhs_bound=IDENTITY_TOL,
                                   passed=dev <= IDENTITY_TOL))
    reports.append(CheckReport(name="resolvent_power_gap_lemma", lhs=dev_power,
                               rhs_bound=0.0, passed=dev_power <= 1e-12))
    return reports


def _random_instance(rng, a, K=2, n_layers=2):
    g, tau = random_two_scale_graph(rng)
    d = decompose(g, tau)
    c = coarsen(d)
    f_in = int(rng.integers(1, 5))
    model = random_model(rng, f_in, a=a, K=K, z=-1.0,
                         n_layers=n_layers, width=int(rng.integers(2, 5)))
    return g, d, c, model, f_in


def verify_scale_consistency(seed: int = 0, n_random: int = 100,
                             s_values=S_SCAN) -> list[CheckReport]:
    """Node-level consistency: random-instance slack, scale decay, and exact
    bias transferability."""
    rng = np.random.default_rng(seed)
    reports = []
    min_slack = np.inf
    all_pass = True
    for i in range(n_random):
        equation = i % 2
        g, d, c, model, f_in = _random_instance(rng, a=equation)
        if equation == 0:
            X = rng.normal(size=(c.coarse.n, f_in))
        else:
            X = rng.normal(size=(g.n, f_in))
        rep = scale_consistency_check(model, d, c, X, equation)
        min_slack = min(min_slack, rep.rhs_bound - rep.lhs)
        all_pass = all_pass and rep.passed
    reports.append(CheckReport(name="scale_consistency_random_instances",
                               lhs=-min_slack, rhs_bound=0.0, passed=all_pass,
                               details={"n": n_random}))

    scan_rng = np.random.default_rng(seed + 1)
    model = random_model(scan_rng, 3, a=1, K=2, z=-1.0)
    X = scan_rng.normal(size=(12, 3))
    scan = []
    for S in s_values:
        d = standard_family_decomposition(S)
        c = coarsen(d)
        rep = scale_consistency_check(model, d, c, X, 1)
        scan.append({"S": S, "gap": rep.lhs})
    slope = fitted_loglog_slope([r["S"] for r in scan], [r["gap"] for r in scan])
    reports.append(CheckReport(name="scale_consistency_decay", scan=scan,
                               slope=slope, passed=slope <= -0.9))

    d = standard_family_decomposition(100.0)
    c = coarsen(d)
    bias_model = random_model(np.random.default_rng(seed + 2), 3, a=1, K=2,
                              z=-1.0, zero_weights=True)
    rep = scale_consistency_check(bias_model, d, c,
                                  np.random.default_rng(seed + 3).normal(size=(12, 3)), 1)
    reports.append(CheckReport(name="bias_transferability", lhs=rep.lhs,
                               rhs_bound=1e-12, passed=rep.lhs <= 1e-12))
    return reports


def verify_graph_consistency(seed: int = 0, n_random: int = 100,
                             s_values=S_SCAN) -> list[CheckReport]:
    """Graph-level consistency of aggregated features for Type-I networks."""
    rng = np.random.default_rng(seed)
    reports = []
    min_slack = np.inf
    all_pass = True
    for _ in range(n_random):
        g, d, c, model, f_in = _random_instance(rng, a=1)
        X = rng.normal(size=(g.n, f_in))
        rep = graph_consistency_check(model, d, c, X)
        min_slack = min(min_slack, rep.rhs_bound - rep.lhs)
        all_pass = all_pass and rep.passed
    reports.append(CheckReport(name="graph_consistency_random_instances",
                               lhs=-min_slack, rhs_bound=0.0, passed=all_pass,
                               details={"n": n_random}))

    scan_rng = np.random.default_rng(seed + 1)
    model = random_model(scan_rng, 3, a=1, K=2, z=-1.0)
    X = scan_rng.normal(size=(12, 3))
    scan = []
    for S in s_values:
        d = standard_family_decomposition(S)
        c = coarsen(d)
        rep = graph_consistency_check(model, d, c, X)
        scan.append({"S": S, "gap": rep.lhs})
    slope = fitted_loglog_slope([r["S"] for r in scan], [r["gap"] for r in scan])
    reports.append(CheckReport(name="graph_consistency_decay", scan=scan,
                               slope=slope, passed=slope <= -0.9))

    d = standard_family_decomposition(1e8)
    c = coarsen(d)
    model = random_model(np.random.default_rng(seed + 2), 3, a=1, K=2, z=-1.0)
    X_lifted = c.j_up @ np.random.default_rng(seed + 3).normal(size=(c.coarse.n, 3))
    rep = graph_consistency_check(model, d, c, X_lifted)
    reports.append(CheckReport(name="graph_consistency_full_separation",
                               lhs=rep.lhs, rhs_bound=1e-5, passed=rep.lhs < 1e-5))
    return reports


def verify_perturbation_stability(seed: int = 0, n_random: int = 100) -> list[CheckReport]:
    """Input stability, the forward-norm bound, and Laplacian-perturbation
    stability with its two lemmas, on random instances plus a shrinking scan."""
    rng = np.random.default_rng(seed)
    reports = []
    for name, runner in (("input_stability", _run_input_stability),
                         ("forward_norm_bound", _run_forward_norm),
                         ("laplacian_perturbation", _run_laplacian_perturbation)):
        min_slack = np.inf
        all_pass = True
        for _ in range(n_random):
            rep = runner(rng)
            min_slack = min(min_slack, rep.rhs_bound - rep.lhs)
            all_pass = all_pass and rep.passed
        reports.append(CheckReport(name=f"{name}_random_instances", lhs=-min_slack,
                                   rhs_bound=0.0, passed=all_pass,
                                   details={"n": n_random}))
    reports.append(_perturbation_shrink_scan(np.random.default_rng(seed + 1)))
    return reports


def _run_input_stability(rng) -> CheckReport:
    g, d, c, model, f_in = _random_instance(rng, a=int(rng.integers(0, 2)))
    X = rng.normal(size=(g.n, f_in))
    Y = rng.normal(size=(g.n, f_in))
    return input_stability_check(model, g, X, Y)


def _run_forward_norm(rng) -> CheckReport:
    g, d, c, model, f_in = _random_instance(rng, a=int(rng.integers(0, 2)))
    X = rng.normal(size=(g.n, f_in))
    return forward_norm_bound_check(model, g, X)


def _perturbed_laplacians(rng, g, d, eps):
    bump = np.zeros((g.n, g.n))
    rows, cols = np.nonzero(np.triu(g.W, 1))
    for i, j in zip(rows.tolist(), cols.tolist()):
        bump[i, j] = bump[j, i] = rng.uniform(0.0, 1.0)
    W_tilde = g.W + eps * bump
    g_tilde = WeightedGraph.from_arrays(W_tilde, mu=g.mu)
    return laplacian(g), laplacian(g_tilde)


def _run_laplacian_perturbation(rng) -> CheckReport:
    g, d, c, model, f_in = _random_instance(rng, a=int(rng.integers(0, 2)))
    X = rng.normal(size=(g.n, f_in))
    delta, delta_tilde = _perturbed_laplacians(rng, g, d, eps=rng.uniform(0.01, 0.5))
    return laplacian_perturbation_check(model, g, delta, delta_tilde, X)


def _perturbation_shrink_scan(rng) -> CheckReport:
    g, tau = random_two_scale_graph(rng)
    d = decompose(g, tau)
    model = random_model(rng, 3, a=1, K=2, z=-1.0)
    X = rng.normal(size=(g.n, 3))
    scan = []
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        delta, delta_tilde = _perturbed_laplacians(np.random.default_rng(7), g, d, eps)
        rep = laplacian_perturbation_check(model, g, delta, delta_tilde, X)
        scan.append({"S": rep.details["perturbation"], "gap": max(rep.lhs, 1e-300)})
    slope = fitted_loglog_slope([r["S"] for r in scan], [r["gap"] for r in scan])
    return CheckReport(name="laplacian_perturbation_shrink_scan", scan=scan,
                       slope=slope, passed=slope >= 0.9)


def verify_baseline_limits(seed: int = 0, s_values=S_SCAN) -> list[CheckReport]:
    """Appendix-limit scans for the three shift operators plus the 2-node
    renormalized-adjacency closed form (per-entry gap 1/(S+1))."""
    reports = []
    for kind in ShiftOperatorKind:
        reports.append(limit_gap_scan(kind, standard_family_decomposition, s_values))
    worst = 0.0
    for S in (9.0, 99.0, 999.0):
        d, _ = two_node_collapse_setup(S)
        gap_matrix = (shift_operator(ShiftOperatorKind.GCN_RENORMALIZED, d.base)
                      - limit_operator(ShiftOperatorKind.GCN_RENORMALIZED, d))
        expected = 1.0 / (S + 1.0)
        worst = max(worst, float(np.max(np.abs(np.abs(gap_matrix) - expected))))
    reports.append(CheckReport(name="gcn_two_node_closed_form", lhs=worst,
                               rhs_bound=1e-9, passed=worst <= 1e-9))
    return reports


def verify_mpnn_demo() -> list[CheckReport]:
    """Message-passing scale blindness vs the vanishing resolvent distance."""
    rows = mpnn_scale_demo((1.0, 10.0, 100.0))
    mpnn_dists = [r["mpnn_distance"] for r in rows]
    spread = max(mpnn_dists) - min(mpnn_dists)
    res_1 = rows[0]["resolvent_distance"]
    res_100 = rows[-1]["resolvent_distance"]
    reports = [
        CheckReport(name="mpnn_distance_constant_in_scale", lhs=spread,
                    rhs_bound=1e-12, passed=spread <= 1e-12,
                    scan=[{"S": r["S"], "gap": r["mpnn_distance"]} for r in rows]),
        CheckReport(name="resolvent_distance_decays", lhs=res_100,
                    rhs_bound=0.05 * res_1, passed=res_100 < 0.05 * res_1,
                    scan=[{"S": r["S"], "gap": r["resolvent_distance"]} for r in rows]),
    ]
    return reports


VERIFY_SUITES = {
    "thm31": verify_resolvent_convergence,
    "thm41": verify_scale_consistency,
    "thm42": verify_graph_consistency,
    "appA": verify_baseline_limits,
    "appD": verify_perturbation_stability,
    "mpnn": lambda seed=0: verify_mpnn_demo(),
}
