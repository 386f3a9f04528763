"""Target distributions: Gaussian mixtures and empirical datasets.

A target supplies sampling, the kernel mean embedding m(x) = E k(x, Y), its
gradient, and the double integral E k(Y, Y').  For a Gaussian mixture with a
Gaussian kernel these are closed forms built from per-component Gaussian
convolution identities; for an empirical dataset they are exact averages
over the rows.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import CenteredKernel, Gaussian

__all__ = [
    "GaussianMixture",
    "EmpiricalTarget",
    "UnsupportedPairError",
    "sample",
    "mean_embedding",
    "grad_mean_embedding",
    "double_integral",
    "as_empirical",
    "benchmark_mixture",
]

# Empirical double integrals switch from the exact N^2 average to a seeded
# pair subsample above this many rows; the estimate is a constant in MMD^2
# and affects no gradient.
SUBSAMPLE_THRESHOLD = 20_000
SUBSAMPLE_PAIRS = 1_000_000
_SUBSAMPLE_SEED = 0x5EED_9A17


class UnsupportedPairError(ValueError):
    """Raised when a kernel/target combination has no supported embedding."""


def _surrogate_hint(kernel, target):
    return (
        f"mean embedding of {type(kernel).__name__} under {type(target).__name__} "
        "has no closed form; replace the mixture by an empirical surrogate, e.g. "
        "as_empirical(target, 100_000, seed=0)"
    )


@dataclass(eq=False)
class GaussianMixture:
    """Mixture of Gaussians sum_m w_m N(mu_m, Sigma_m).

    Weights must be positive and sum to one; covariances must be symmetric
    positive definite (a Cholesky factorisation is taken at construction and
    reused for sampling).  Instances are immutable in use; internal caches
    hold per-lengthscale embedding factors.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    _chols: np.ndarray = field(init=False, repr=False)
    _embed_cache: dict = field(init=False, repr=False, default_factory=dict)
    _double_cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.means = np.asarray(self.means, dtype=float)
        self.covs = np.asarray(self.covs, dtype=float)
        if self.weights.ndim != 1 or self.weights.size == 0:
            raise ValueError("weights must be a non-empty 1-d array")
        m = self.weights.size
        if self.means.ndim != 2 or self.means.shape[0] != m or self.means.shape[1] < 1:
            raise ValueError(f"means must have shape ({m}, d), got {self.means.shape}")
        d = self.means.shape[1]
        if self.covs.shape != (m, d, d):
            raise ValueError(f"covs must have shape ({m}, {d}, {d}), got {self.covs.shape}")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.means).all()
                and np.isfinite(self.covs).all()):
            raise ValueError("mixture parameters must be finite")
        if np.any(self.weights <= 0) or np.any(self.weights > 1):
            raise ValueError("weights must lie in (0, 1]")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {self.weights.sum()!r}")
        asym = np.abs(self.covs - self.covs.transpose(0, 2, 1)).max()
        if asym > 1e-10 * (1.0 + np.abs(self.covs).max()):
            raise ValueError("covariances must be symmetric")
        try:
            self._chols = np.linalg.cholesky(self.covs)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariances must be positive definite") from exc

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def n_components(self):
        return self.weights.size

    def sample(self, n, rng):
        """n i.i.d. draws: inverse-CDF component pick, then Cholesky transform."""
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        comp = np.searchsorted(cum, rng.random(n), side="right")
        z = rng.standard_normal((n, self.dim))
        return self.means[comp] + np.einsum("nij,nj->ni", self._chols[comp], z)

    def _gauss_factors(self, ell):
        """Per-component inverse Cholesky factors of Sigma_m + ell^2 I and the
        determinant factors det(I + Sigma_m/ell^2)^(-1/2), cached per ell."""
        key = float(ell)
        hit = self._embed_cache.get(key)
        if hit is not None:
            return hit
        d = self.dim
        A = self.covs + key**2 * np.eye(d)
        L = np.linalg.cholesky(A)
        L_inv = np.linalg.inv(L)
        diag = np.diagonal(L, axis1=1, axis2=2)
        det_factor = np.exp(d * math.log(key) - np.log(diag).sum(axis=1))
        self._embed_cache[key] = (L_inv, det_factor)
        return L_inv, det_factor

    def _require_gaussian(self, kernel):
        if not isinstance(kernel, Gaussian):
            raise UnsupportedPairError(_surrogate_hint(kernel, self))

    def _embed(self, ell, X, want_grad):
        L_inv, det_factor = self._gauss_factors(ell)
        n = X.shape[0]
        vals = np.zeros(n)
        grads = np.zeros_like(X) if want_grad else None
        for m in range(self.n_components):
            diff = X - self.means[m]
            u = diff @ L_inv[m].T
            q = np.einsum("nd,nd->n", u, u)
            e = self.weights[m] * det_factor[m] * np.exp(-0.5 * q)
            vals += e
            if want_grad:
                grads -= e[:, None] * (u @ L_inv[m])
        return vals, grads

    def mean_embedding(self, kernel, x):
        """E_{Y~mixture} k(x, Y); closed form, Gaussian kernels only."""
        self._require_gaussian(kernel)
        X, single = _as_batch(x, self.dim)
        vals, _ = self._embed(kernel.lengthscale, X, want_grad=False)
        return float(vals[0]) if single else vals

    def grad_mean_embedding(self, kernel, x):
        """Gradient of the mean embedding with respect to the query point."""
        self._require_gaussian(kernel)
        X, single = _as_batch(x, self.dim)
        _, grads = self._embed(kernel.lengthscale, X, want_grad=True)
        return grads[0] if single else grads

    def double_integral(self, kernel):
        """E k(Y, Y') over two independent mixture draws (closed form)."""
        self._require_gaussian(kernel)
        key = float(kernel.lengthscale)
        hit = self._double_cache.get(key)
        if hit is not None:
            return hit
        d = self.dim
        eye = np.eye(d)
        terms = []
        for a in range(self.n_components):
            for b in range(self.n_components):
                C = key**2 * eye + self.covs[a] + self.covs[b]
                L = np.linalg.cholesky(C)
                delta = self.means[a] - self.means[b]
                u = np.linalg.solve(L, delta)
                log_term = d * math.log(key) - np.log(np.diagonal(L)).sum() - 0.5 * u @ u
                terms.append(self.weights[a] * self.weights[b] * math.exp(log_term))
        value = math.fsum(terms)
        self._double_cache[key] = value
        return value


@dataclass(eq=False)
class EmpiricalTarget:
    """Empirical measure of a dataset: one point per row.

    Embeddings are exact averages over the rows, for any kernel.  The double
    integral is the exact N^2 average up to ``SUBSAMPLE_THRESHOLD`` rows and
    a seeded ``SUBSAMPLE_PAIRS``-pair estimate above it (see
    ``double_integral_is_subsampled``).
    """

    data: np.ndarray
    _double_cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError(f"data must be a non-empty (N, d) matrix, got shape {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise ValueError("data must be finite")

    @property
    def dim(self):
        return self.data.shape[1]

    @property
    def n_rows(self):
        return self.data.shape[0]

    @property
    def double_integral_is_subsampled(self):
        return self.n_rows > SUBSAMPLE_THRESHOLD

    def sample(self, n, rng):
        """n rows drawn uniformly with replacement."""
        return self.data[rng.integers(0, self.n_rows, size=n)]

    def mean_embedding(self, kernel, x):
        X, single = _as_batch(x, self.dim)
        out = np.empty(X.shape[0])
        for lo in range(0, X.shape[0], 1024):
            block = X[lo:lo + 1024]
            out[lo:lo + block.shape[0]] = kernel.gram(block, self.data).mean(axis=1)
        return float(out[0]) if single else out

    def grad_mean_embedding(self, kernel, x):
        X, single = _as_batch(x, self.dim)
        out = np.empty_like(X)
        for lo in range(0, X.shape[0], 1024):
            block = X[lo:lo + 1024]
            out[lo:lo + block.shape[0]] = kernel.grad1_sum(block, self.data) / self.n_rows
        return out[0] if single else out

    def double_integral(self, kernel):
        hit = self._double_cache.get(kernel)
        if hit is not None:
            return hit
        n = self.n_rows
        if not self.double_integral_is_subsampled:
            block = max(1, 2**23 // max(n, 1))
            parts = []
            for lo in range(0, n, block):
                rows = kernel.gram(self.data[lo:lo + block], self.data)
                parts.append(float(rows.sum()))
            value = math.fsum(parts) / (float(n) * float(n))
        else:
            rng = np.random.default_rng(_SUBSAMPLE_SEED)
            i = rng.integers(0, n, size=SUBSAMPLE_PAIRS)
            j = rng.integers(0, n, size=SUBSAMPLE_PAIRS)
            value = float(kernel.pair_eval(self.data[i], self.data[j]).mean())
        self._double_cache[kernel] = value
        return value


Target = GaussianMixture | EmpiricalTarget


def _as_batch(x, dim):
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        if X.shape[0] != dim:
            raise ValueError(f"dimension mismatch: point of dim {X.shape[0]}, target dim {dim}")
        return X[None, :], True
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(f"expected points of dim {dim}, got array of shape {X.shape}")
    return X, False


def _check_centered(kernel, target):
    if kernel.target is not target:
        raise UnsupportedPairError(
            "centered kernel is bound to a different target; re-center it against "
            "this target before use"
        )


def sample(target, n, rng):
    """Draw n i.i.d. points from the target; deterministic for a fixed rng."""
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(rng)
    return target.sample(int(n), rng)


def mean_embedding(target, kernel, x):
    """E_{Y~target} k(x, Y); accepts a single point (d,) or a batch (n, d)."""
    if isinstance(kernel, CenteredKernel):
        _check_centered(kernel, target)
        X, single = _as_batch(x, target.dim)
        return 0.0 if single else np.zeros(X.shape[0])
    return target.mean_embedding(kernel, x)


def grad_mean_embedding(target, kernel, x):
    """Gradient of the mean embedding; shape matches the input point(s)."""
    if isinstance(kernel, CenteredKernel):
        _check_centered(kernel, target)
        X, single = _as_batch(x, target.dim)
        return np.zeros(target.dim) if single else np.zeros_like(X)
    return target.grad_mean_embedding(kernel, x)


def double_integral(target, kernel):
    """E k(Y, Y') over two independent target draws."""
    if isinstance(kernel, CenteredKernel):
        _check_centered(kernel, target)
        return 0.0
    return target.double_integral(kernel)


def as_empirical(target, n_samples=100_000, seed=0):
    """Empirical surrogate for an analytic target.

    The documented route for kernel/target pairs without closed-form
    embeddings (for example Matern kernels with a Gaussian mixture).
    """
    return EmpiricalTarget(sample(target, n_samples, np.random.default_rng(seed)))


def benchmark_mixture(n_components=10, dim=2, seed=7):
    """The stock multimodal benchmark target: a seeded random mixture of
    ``n_components`` Gaussians with uniform weights, means spread over
    [-3, 3]^dim and anisotropic covariances with eigenvalues around
    0.05 - 0.5."""
    rng = np.random.default_rng(seed)
    means = rng.uniform(-3.0, 3.0, size=(n_components, dim))
    a = rng.standard_normal((n_components, dim, dim))
    covs = 0.12 * a @ a.transpose(0, 2, 1) / dim + 0.05 * np.eye(dim)
    weights = np.full(n_components, 1.0 / n_components)
    return GaussianMixture(weights=weights, means=means, covs=covs)
