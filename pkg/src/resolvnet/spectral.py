"""Eigenvalue computations in the mu-weighted geometry and resolvent machinery.

Resolvents (Delta - z Id)^{-1} for z < 0 are applied through a Cholesky
factorization of the symmetrized matrix, never by forming a dense inverse
(test oracles excepted). The factorization is positive definite because
Laplacian spectra are non-negative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
import scipy.linalg

from .graphs import WeightedNormContext, weighted_operator_norm

if TYPE_CHECKING:  # pragma: no cover
    from .multiscale import Coarsening, ScaleDecomposition

# Relative eigenvalue threshold below which a Laplacian eigenvalue counts as zero.
KERNEL_RTOL = 1e-9


def _check_self_adjoint(A: np.ndarray, ctx: WeightedNormContext, tol=1e-8) -> np.ndarray:
    """Return the symmetrized matrix M^{1/2} A M^{-1/2}, validating self-adjointness."""
    A = np.asarray(A, dtype=np.float64)
    s = ctx.sqrt_mu
    B = s[:, None] * A / s[None, :]
    scale = max(1.0, float(np.max(np.abs(B), initial=0.0)))
    if np.max(np.abs(B - B.T), initial=0.0) > tol * scale:
        raise ValueError("matrix is not self-adjoint in the mu-weighted inner product")
    return 0.5 * (B + B.T)


def spectrum(A, ctx: WeightedNormContext) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and a mu-orthonormal eigenbasis of A.

    A must be self-adjoint w.r.t. <.,.>_mu; eigenvectors are returned as
    columns in the original (unsymmetrized) coordinates.
    """
    B = _check_self_adjoint(A, ctx)
    w, V = np.linalg.eigh(B)
    return w, V / ctx.sqrt_mu[:, None]


def lambda_max(A, ctx: WeightedNormContext) -> float:
    return float(spectrum(A, ctx)[0][-1]) if ctx.n else 0.0


def lambda_1_nonzero(delta_high, mu, components: Sequence[Sequence[int]]) -> float:
    """Smallest non-zero eigenvalue of Delta_high across its connected components.

    Eigenvalues below KERNEL_RTOL times the largest one are treated as zero;
    each non-singleton component contributes its second-smallest eigenvalue.
    """
    delta_high = np.asarray(delta_high, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    candidates = []
    for comp in components:
        idx = np.asarray(list(comp), dtype=np.intp)
        if idx.size < 2:
            continue
        sub = delta_high[np.ix_(idx, idx)]
        w, _ = spectrum(sub, WeightedNormContext(mu[idx]))
        tol = KERNEL_RTOL * max(float(w[-1]), 1e-300)
        nonzero = w[w > tol]
        if nonzero.size != idx.size - 1:
            # Component is connected by construction, so the kernel is 1-dim.
            raise ValueError("component kernel dimension does not match connectivity")
        candidates.append(float(nonzero[0]))
    if not candidates:
        raise ValueError("no high-scale part")
    return min(candidates)


def gershgorin_bound(delta_reg) -> float:
    """Circle-theorem bound 2 * max_i sum_j (W_reg)_ij / mu_i >= lambda_max(Delta_reg).

    The diagonal of the Laplacian already equals degree/mu, so the bound is
    twice its largest diagonal entry.
    """
    delta_reg = np.asarray(delta_reg, dtype=np.float64)
    if delta_reg.size == 0:
        return 0.0
    return 2.0 * float(np.max(np.diag(delta_reg), initial=0.0))


@dataclass(frozen=True)
class ResolventFactorization:
    """Cholesky factorization of M^{1/2} (Delta - z Id) M^{-1/2} for z < 0."""

    z: float
    n: int
    mu: np.ndarray
    _cho: tuple

    @staticmethod
    def build(delta, mu, z: float) -> "ResolventFactorization":
        if z >= 0.0:
            raise ValueError(f"resolvent requires z < 0, got z={z}")
        delta = np.asarray(delta, dtype=np.float64)
        mu = np.asarray(mu, dtype=np.float64).reshape(delta.shape[0])
        s = np.sqrt(mu)
        B = s[:, None] * delta / s[None, :]
        B = 0.5 * (B + B.T) - z * np.eye(delta.shape[0])
        try:
            cho = scipy.linalg.cho_factor(B, lower=True, check_finite=False)
        except scipy.linalg.LinAlgError as e:
            raise ValueError("factorization failed: matrix is not a Laplacian "
                             "shifted by negative z") from e
        return ResolventFactorization(z=float(z), n=delta.shape[0], mu=mu, _cho=cho)

    def _solve(self, Y: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(self._cho, Y, check_finite=False)

    def apply(self, X) -> np.ndarray:
        """(Delta - z Id)^{-1} X via two triangular solves per column."""
        X = np.asarray(X, dtype=np.float64)
        squeeze = X.ndim == 1
        X2 = X[:, None] if squeeze else X
        if X2.shape[0] != self.n:
            raise ValueError("dimension mismatch")
        s = np.sqrt(self.mu)
        out = self._solve(s[:, None] * X2) / s[:, None]
        return out[:, 0] if squeeze else out

    def power_apply(self, k: int, X) -> np.ndarray:
        """k successive resolvent applications."""
        if k < 1:
            raise ValueError("power must be a positive integer")
        out = np.asarray(X, dtype=np.float64)
        for _ in range(k):
            out = self.apply(out)
        return out

    def adjoint_apply(self, X) -> np.ndarray:
        """Euclidean adjoint R_z^T X = M R_z M^{-1} X (R_z is mu-self-adjoint)."""
        X = np.asarray(X, dtype=np.float64)
        squeeze = X.ndim == 1
        X2 = X[:, None] if squeeze else X
        s = np.sqrt(self.mu)
        out = s[:, None] * self._solve(X2 / s[:, None])
        return out[:, 0] if squeeze else out

    def adjoint_power_apply(self, k: int, X) -> np.ndarray:
        out = np.asarray(X, dtype=np.float64)
        for _ in range(k):
            out = self.adjoint_apply(out)
        return out

    def as_matrix(self) -> np.ndarray:
        return self.apply(np.eye(self.n))


def resolvent_apply(fact: ResolventFactorization, X) -> np.ndarray:
    return fact.apply(X)


def resolvent_power_apply(fact: ResolventFactorization, k: int, X) -> np.ndarray:
    return fact.power_apply(k, X)


def coarse_resolvent_matrix(c: "Coarsening", z: float, k: int = 1) -> np.ndarray:
    """J_up R_z(coarse Laplacian)^k J_down as a dense n x n matrix."""
    from .graphs import laplacian

    fact = ResolventFactorization.build(laplacian(c.coarse), c.coarse.mu, z)
    return c.j_up @ fact.power_apply(k, np.eye(c.coarse.n)) @ c.j_down


def resolvent_gap(d: "ScaleDecomposition", c: "Coarsening", z: float, k: int = 1) -> float:
    """|| R_z(Delta)^k - J_up R_z(coarse Delta)^k J_down || in the weighted norm.

    For k = 1 this is the quantity that controls every consistency bound;
    it decays at rate lambda_max(Delta_reg) / lambda_1(Delta_high).
    """
    from .graphs import laplacian

    g = d.base
    fact = ResolventFactorization.build(laplacian(g), g.mu, z)
    R_k = fact.power_apply(k, np.eye(g.n))
    ctx = g.norm_context()
    return weighted_operator_norm(R_k - coarse_resolvent_matrix(c, z, k), ctx, ctx)


def second_resolvent_identity_check(d: "ScaleDecomposition", z: float) -> float:
    """Max deviation of R_z(Delta) from [Id + R_z(Delta_high) Delta_reg]^{-1} R_z(Delta_high).

    The bracket is invertible for every z < 0 because Laplacian spectra are
    non-negative; dense inverses are fine here since this is a check.
    """
    if z >= 0.0:
        raise ValueError("second resolvent identity requires z < 0")
    g = d.base
    n = g.n
    eye = np.eye(n)
    lhs = ResolventFactorization.build(d.delta_reg + d.delta_high, g.mu, z).apply(eye)
    r_high = ResolventFactorization.build(d.delta_high, g.mu, z).apply(eye)
    rhs = np.linalg.solve(eye + r_high @ d.delta_reg, r_high)
    ctx = g.norm_context()
    return weighted_operator_norm(lhs - rhs, ctx, ctx)


def coarse_resolvent_identity_check(d: "ScaleDecomposition", c: "Coarsening",
                                    z: float) -> float:
    """Deviation of J_up R_z(coarse) J_down from [P0 Delta_reg - z Id]^{-1} P0."""
    if z >= 0.0:
        raise ValueError("requires z < 0")
    g = d.base
    P0 = c.j_up @ c.j_down
    rhs = np.linalg.solve(P0 @ d.delta_reg - z * np.eye(g.n), P0)
    ctx = g.norm_context()
    return weighted_operator_norm(coarse_resolvent_matrix(c, z, 1) - rhs, ctx, ctx)


def eigenvalue_lipschitz_check(A, B, ctx: WeightedNormContext) -> dict:
    """Check |lambda_k(A) - lambda_k(B)| <= ||A - B|| for every k.

    Both matrices must be self-adjoint in the same mu-geometry. Returns the
    per-k worst case together with the norm of the difference; ``slack`` is
    rhs - lhs and must be non-negative up to roundoff.
    """
    wa, _ = spectrum(A, ctx)
    wb, _ = spectrum(B, ctx)
    diff_norm = weighted_operator_norm(np.asarray(A) - np.asarray(B), ctx, ctx)
    max_diff = float(np.max(np.abs(wa - wb), initial=0.0))
    return {
        "lhs": max_diff,
        "rhs": diff_norm,
        "slack": diff_norm - max_diff,
        "passed": max_diff <= diff_norm + 1e-12 * max(1.0, diff_norm),
    }
