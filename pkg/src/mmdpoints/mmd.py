"""Squared MMD between a particle set and a target, and its gradients.

The central object is the per-particle gradient field

    F(z) = (1/n) sum_j grad1 k(z, x_j) - grad m(z),

where m is the target mean embedding.  A point set is stationary exactly
when F vanishes at every particle; ``grad_particles`` scales F by 2/n to
give the full derivative of squared MMD, while ``stationarity_residual``
reports max_i |F(x_i)| unscaled so it is independent of n.

Particle-sum reductions run in a canonical (lexicographically sorted)
particle order with compensated outer accumulation, which makes
``mmd_squared`` and ``stationarity_residual`` bitwise invariant under
particle reordering.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .kernels import CenteredKernel
from .targets import _check_centered, double_integral, grad_mean_embedding, mean_embedding

__all__ = [
    "MmdReport",
    "as_point_set",
    "mmd_squared",
    "gradient_field",
    "grad_particles",
    "stationarity_residual",
    "phi",
]


def as_point_set(points):
    """Validate an (n, d) particle array: 2-d, non-empty, finite."""
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"point set must be a non-empty (n, d) matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("point set must be finite")
    return X


@dataclass(frozen=True)
class MmdReport:
    """Squared MMD and its three terms: kxx - 2 kxmu + kmumu."""

    mmd_squared: float
    mmd: float
    kxx: float
    kxmu: float
    kmumu: float

    def to_dict(self):
        return {
            "mmd": self.mmd,
            "mmd_squared": self.mmd_squared,
            "kxx": self.kxx,
            "kxmu": self.kxmu,
            "kmumu": self.kmumu,
        }

    def to_json(self):
        return json.dumps(self.to_dict())


def _canonical(X):
    order = np.lexsort(X.T[::-1])
    return X[order]


def _base_kernel(kernel, target):
    """Unwrap a centered kernel for gradient paths.

    Centering shifts the kernel by functions whose signed-measure integrals
    vanish, so the gradient field is that of the base kernel.
    """
    if isinstance(kernel, CenteredKernel):
        _check_centered(kernel, target)
        return kernel.base
    return kernel


def mmd_squared(kernel, points, target):
    """Squared MMD between the empirical measure of ``points`` and ``target``.

    Returns an :class:`MmdReport`; ``mmd`` is the clamped square root since
    cancellation can leave mmd_squared a hair below zero at stationarity.
    """
    X = _canonical(as_point_set(points))
    n = X.shape[0]
    if isinstance(kernel, CenteredKernel):
        _check_centered(kernel, target)
        gram = kernel.gram(X, X)
        kxmu = 0.0
        kmumu = 0.0
    else:
        gram = kernel.gram(X, X)
        kxmu = math.fsum(mean_embedding(target, kernel, X)) / n
        kmumu = float(double_integral(target, kernel))
    kxx = math.fsum(gram.sum(axis=1)) / (float(n) * float(n))
    ms = kxx - 2.0 * kxmu + kmumu
    return MmdReport(
        mmd_squared=ms,
        mmd=math.sqrt(max(ms, 0.0)),
        kxx=kxx,
        kxmu=kxmu,
        kmumu=kmumu,
    )


def gradient_field(kernel, points, target, at=None):
    """Per-particle field F(z) = (1/n) sum_j grad1 k(z, x_j) - grad m(z).

    The pair term always sums over ``points``; ``at`` (default: the points
    themselves) sets the evaluation locations, which is what the noisy
    descent update needs.  Row i of the result is the field at ``at[i]``.
    """
    base = _base_kernel(kernel, target)
    X = as_point_set(points)
    Z = X if at is None else as_point_set(at)
    pair = base.grad1_sum(Z, X) / X.shape[0]
    return pair - grad_mean_embedding(target, base, Z)


def grad_particles(kernel, points, target):
    """Gradient of mmd_squared with respect to each particle: (2/n) F(x_i)."""
    X = as_point_set(points)
    return (2.0 / X.shape[0]) * gradient_field(kernel, X, target)


def stationarity_residual(kernel, points, target):
    """max_i |F(x_i)|: zero exactly at stationary MMD point sets."""
    X = _canonical(as_point_set(points))
    F = gradient_field(kernel, X, target)
    return float(np.sqrt(np.einsum("nd,nd->n", F, F)).max())


def phi(kernel, target, z, w):
    """Displacement field Phi(z, w) = grad m(z) - grad1 k(z, w).

    Averaging over w = x_j recovers the negated gradient field:
    (1/n) sum_j Phi(x_i, x_j) = -F(x_i).
    """
    base = _base_kernel(kernel, target)
    z = np.asarray(z, dtype=float)
    return grad_mean_embedding(target, base, z) - base.grad1(z, w)
