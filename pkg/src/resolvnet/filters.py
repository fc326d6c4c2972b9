"""Resolvent-polynomial filters: scalar evaluation, operator application, fitting.

A filter is f(lambda) = sum_{k=a}^K theta_k (lambda - z)^{-k} with z < 0.
Type-0 filters (a = 0) tend to theta_0 at infinity; Type-I filters (a = 1)
vanish there. Function approximation is realized constructively by least
squares on a lambda-grid in the basis {(lambda - z)^{-k}}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import ResolventFactorization


@dataclass(frozen=True)
class ResolventFilterSpec:
    """Coefficients theta_a..theta_K of a resolvent polynomial at shift z < 0."""

    z: float
    a: int
    K: int
    theta: np.ndarray

    def __post_init__(self):
        if self.a not in (0, 1):
            raise ValueError("starting index must be 0 (Type-0) or 1 (Type-I)")
        if self.K < self.a:
            raise ValueError("max power must be >= starting index")
        if self.z >= 0.0:
            raise ValueError("shift z must be negative")
        theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        if theta.shape[0] != self.K - self.a + 1:
            raise ValueError("coefficient count must be K - a + 1")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    def to_dict(self) -> dict:
        return {"z": self.z, "a": self.a, "K": self.K,
                "theta": [float(t) for t in self.theta]}

    @staticmethod
    def from_dict(d: dict) -> "ResolventFilterSpec":
        return ResolventFilterSpec(z=float(d["z"]), a=int(d["a"]), K=int(d["K"]),
                                   theta=np.asarray(d["theta"], dtype=np.float64))


def filter_scalar_eval(spec: ResolventFilterSpec, lam) -> np.ndarray | float:
    """Evaluate sum_k theta_k (lambda - z)^{-k} on scalar or array input."""
    lam = np.asarray(lam, dtype=np.float64)
    shifted = lam - spec.z
    out = np.zeros_like(shifted)
    for k, t in zip(range(spec.a, spec.K + 1), spec.theta):
        out = out + t * shifted ** (-k)
    return float(out) if out.ndim == 0 else out


def filter_apply(spec: ResolventFilterSpec, fact: ResolventFactorization, X) -> np.ndarray:
    """Apply the filter to the operator underlying ``fact``.

    Horner-style accumulation in the resolvent: one solve per power.
    """
    if spec.z != fact.z:
        raise ValueError(f"filter shift {spec.z} does not match factorization {fact.z}")
    X = np.asarray(X, dtype=np.float64)
    coeff = {k: t for k, t in zip(range(spec.a, spec.K + 1), spec.theta)}
    out = np.zeros_like(X)
    for k in range(spec.K, 0, -1):
        out = fact.apply(out + coeff.get(k, 0.0) * X)
    if spec.a == 0:
        out = out + coeff[0] * X
    return out


def fit_filter_to_function(lam_grid, values, z: float, a: int, K: int
                           ) -> tuple[ResolventFilterSpec, float]:
    """Least-squares fit of sampled target values in the resolvent basis.

    Returns the fitted spec and the sup-norm error on the grid. The grid must
    contain at least K - a + 1 distinct points; duplicates make the basis
    rank-deficient and raise.
    """
    lam_grid = np.asarray(lam_grid, dtype=np.float64).reshape(-1)
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if lam_grid.shape != values.shape:
        raise ValueError("grid and target sample counts differ")
    if np.any(lam_grid < 0.0):
        raise ValueError("grid points must be non-negative")
    if not np.all(np.isfinite(values)):
        raise ValueError("target values must be finite")
    n_coeff = K - a + 1
    powers = np.arange(a, K + 1)
    V = (lam_grid[:, None] - z) ** (-powers[None, :])
    theta, _, rank, _ = np.linalg.lstsq(V, values, rcond=None)
    if rank < n_coeff:
        raise ValueError("rank-deficient basis (duplicate grid points)")
    spec = ResolventFilterSpec(z=z, a=a, K=K, theta=theta)
    sup_error = float(np.max(np.abs(V @ theta - values)))
    return spec, sup_error
