"""Baseline point-set constructors: i.i.d. sampling, kernel herding and
support points (energy-distance particle descent).

All constructors are deterministic under a fixed seed.  Kernel thinning and
quasi-Monte-Carlo sets are deliberately not implemented; the benchmark
schema reserves the method names ``kt`` and ``qmc`` for externally produced
results.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from .descent import DivergenceError
from .kernels import CenteredKernel
from .mmd import as_point_set
from .targets import (
    EmpiricalTarget,
    grad_mean_embedding,
    mean_embedding,
    sample,
)

__all__ = [
    "HerdingConfig",
    "SupportPointsConfig",
    "iid_points",
    "kernel_herding",
    "support_points",
    "energy_distance",
]

# Pool size used when herding must sample its own candidates.
_DEFAULT_POOL = 4096
# Monte-Carlo sample count for the target expectation in support points
# when the target is analytic.
_SP_TARGET_SAMPLES = 10_000


@dataclass(frozen=True)
class HerdingConfig:
    """Greedy herding over a seeded candidate pool.

    ``candidate_pool = None`` uses the dataset rows themselves for an
    empirical target and ``_DEFAULT_POOL`` fresh target draws otherwise.
    ``local_refine`` polishes each selected point with a bounded quasi-Newton
    ascent of the herding objective (at most ``refine_steps`` iterations).
    """

    n: int
    candidate_pool: int | None = None
    local_refine: bool = False
    refine_steps: int = 25
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.candidate_pool is not None and self.candidate_pool < self.n:
            raise ValueError("candidate_pool must be >= n when set")
        if self.refine_steps < 0:
            raise ValueError("refine_steps must be >= 0")


@dataclass(frozen=True)
class SupportPointsConfig:
    """Fixed-step particle descent on the energy functional with
    rho(x, y) = -|x - y|; ``smoothing`` guards the gradient at exact ties."""

    n: int
    steps: int = 1000
    step: float = 0.1
    smoothing: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.smoothing > 0:
            raise ValueError("smoothing must be positive")


def iid_points(target, n, seed):
    """n i.i.d. draws from the target under a fresh seeded generator."""
    return sample(target, n, np.random.default_rng(seed))


def _herding_pool(target, cfg, rng):
    if cfg.candidate_pool is None:
        if isinstance(target, EmpiricalTarget):
            return np.array(target.data)
        return sample(target, _DEFAULT_POOL, rng)
    return sample(target, cfg.candidate_pool, rng)


def _grad1_sum_any(kernel, Z, C):
    if isinstance(kernel, CenteredKernel):
        pair = kernel.base.grad1_sum(Z, C)
        return pair - C.shape[0] * kernel.target.grad_mean_embedding(kernel.base, Z)
    return kernel.grad1_sum(Z, C)


def _refine(x, count, chosen, kernel, target, max_iter):
    """Quasi-Newton polish of the herding objective around a pool argmax."""

    def objective(z):
        val = mean_embedding(target, kernel, z)
        grad = grad_mean_embedding(target, kernel, z)
        if count:
            val -= kernel.gram(z[None, :], chosen).sum() / (count + 1)
            grad = grad - _grad1_sum_any(kernel, z[None, :], chosen)[0] / (count + 1)
        return -val, -grad

    result = minimize(objective, x, jac=True, method="L-BFGS-B",
                      options={"maxiter": max_iter})
    if result.fun <= objective(x)[0] and np.isfinite(result.x).all():
        return result.x
    return x


def kernel_herding(kernel, target, cfg):
    """Greedy herding: x_{m+1} maximises m(x) - (1/(m+1)) sum_{j<=m} k(x, x_j).

    The search runs over a seeded candidate pool (ties broken toward the
    lowest index), optionally followed by local refinement of each pick.
    """
    rng = np.random.default_rng(cfg.seed)
    pool = as_point_set(_herding_pool(target, cfg, rng))
    if pool.shape[0] == 0:
        raise ValueError("empty candidate pool")
    pool_embedding = np.atleast_1d(mean_embedding(target, kernel, pool))
    running = np.zeros(pool.shape[0])
    chosen = np.empty((cfg.n, pool.shape[1]))
    for m in range(cfg.n):
        objective = pool_embedding - running / (m + 1)
        pick = pool[int(np.argmax(objective))]
        if cfg.local_refine and cfg.refine_steps > 0:
            pick = _refine(pick, m, chosen[:m], kernel, target, cfg.refine_steps)
        chosen[m] = pick
        running += kernel.gram(pool, pick[None, :])[:, 0]
    return chosen


def _unit_direction_sums(X, Y, eps):
    """rows i: sum_j (x_i - y_j) / max(|x_i - y_j|, eps).

    Exact ties (the self pair included) contribute a zero direction; zeroing
    their weights outright keeps the huge 1/eps factors out of the row sums.
    """
    D = cdist(X, Y)
    W = 1.0 / np.maximum(D, eps)
    W[D == 0.0] = 0.0
    return W.sum(axis=1)[:, None] * X - W @ Y


def support_points(target, cfg):
    """Particle descent on the energy functional.

    Each step moves x_i along
    (1/n) sum_{j != i} u(x_i - x_j) - E_Y u(x_i - Y), u(v) = v / max(|v|, eps),
    with the target expectation exact for empirical targets and a fixed
    seeded Monte-Carlo average otherwise.  Coincident pairs contribute a
    zero direction through the smoothing guard.
    """
    rng = np.random.default_rng(cfg.seed)
    X = sample(target, cfg.n, rng)
    if isinstance(target, EmpiricalTarget):
        Y = target.data
    else:
        Y = sample(target, _SP_TARGET_SAMPLES, rng)
    n = X.shape[0]
    for t in range(cfg.steps):
        repulsion = _unit_direction_sums(X, X, cfg.smoothing) / n
        attraction = _unit_direction_sums(X, Y, cfg.smoothing) / Y.shape[0]
        X = X + cfg.step * (repulsion - attraction)
        if not np.isfinite(X).all() or np.abs(X).max() > 1e8:
            raise DivergenceError(f"support-point descent diverged at step {t + 1}")
    return X


def energy_distance(X, Y):
    """Energy distance 2 E|X - Y| - E|X - X'| - E|Y - Y'| between the
    empirical measures of two point arrays (non-negative)."""
    X = as_point_set(X)
    Y = as_point_set(Y)
    return float(
        2.0 * cdist(X, Y).mean() - cdist(X, X).mean() - cdist(Y, Y).mean()
    )
