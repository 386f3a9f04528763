"""Kernel families with closed-form gradients and derivative bounds.

All kernels here are isotropic, positive semi-definite and differentiable,
so they support both MMD evaluation and particle descent.  Each family
exposes

* ``eval(x, y)`` / ``gram(X, Y)`` -- kernel values,
* ``grad1(x, y)`` / ``grad1_sum(X, Y)`` -- gradients with respect to the
  first argument,
* ``kappa_bound()`` -- a uniform bound on the diagonal kernel value and its
  mixed second/fourth derivatives (used by the theory-condition checkers),
* ``grad_bound()`` -- a uniform bound on ``|grad1|`` (runtime diagnostics).

A :class:`CenteredKernel` wraps a base kernel so that its mean embedding
under a fixed target is identically zero.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

__all__ = [
    "Gaussian",
    "Matern32",
    "InverseMultiquadric",
    "CenteredKernel",
    "center",
    "parse_kernel",
    "kernel_spec",
]


def _check_point_pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("kernel arguments must be 1-d points")
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: point of dim {x.shape[0]} vs {y.shape[0]}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("kernel arguments must be finite")
    return x, y


class RadialKernel:
    """Shared machinery for kernels of the form k(x, y) = profile(|x-y|^2).

    Subclasses implement ``_profile`` (kernel value from squared distance)
    and ``_grad_factor`` (scalar g such that grad1 k(x, y) = g * (x - y)).
    Both must accept scalars or arrays of squared distances.
    """

    def _profile(self, sq):
        raise NotImplementedError

    def _grad_factor(self, sq):
        raise NotImplementedError

    def eval(self, x, y):
        """Kernel value k(x, y) for two points."""
        x, y = _check_point_pair(x, y)
        diff = x - y
        return float(self._profile(float(np.dot(diff, diff))))

    def grad1(self, x, y):
        """Gradient of k with respect to its first argument, at (x, y)."""
        x, y = _check_point_pair(x, y)
        diff = x - y
        return self._grad_factor(float(np.dot(diff, diff))) * diff

    def gram(self, X, Y):
        """Kernel matrix between the rows of X (n, d) and Y (m, d)."""
        return self._profile(cdist(X, Y, "sqeuclidean"))

    def pair_eval(self, X, Y):
        """Row-wise kernel values k(X[i], Y[i])."""
        diff = np.asarray(X, dtype=float) - np.asarray(Y, dtype=float)
        return self._profile(np.einsum("nd,nd->n", diff, diff))

    def grad1_factor(self, X, Y):
        """Matrix of scalar factors g_ij with grad1 k(x_i, y_j) = g_ij (x_i - y_j)."""
        return self._grad_factor(cdist(X, Y, "sqeuclidean"))

    def grad1_sum(self, X, Y):
        """Row-wise sums over columns: out[i] = sum_j grad1 k(X[i], Y[j])."""
        G = self.grad1_factor(X, Y)
        return G.sum(axis=1)[:, None] * X - G @ Y


def _check_lengthscale(ell):
    if not (np.isfinite(ell) and ell > 0):
        raise ValueError(f"lengthscale must be a positive finite real, got {ell}")


@dataclass(frozen=True)
class Gaussian(RadialKernel):
    """Gaussian kernel exp(-|x - y|^2 / (2 l^2))."""

    lengthscale: float = 1.0

    def __post_init__(self):
        _check_lengthscale(self.lengthscale)

    def _profile(self, sq):
        return np.exp(-0.5 * sq / self.lengthscale**2)

    def _grad_factor(self, sq):
        return -self._profile(sq) / self.lengthscale**2

    def kappa_bound(self):
        """Uniform diagonal bound: max of 1, the mixed second derivative
        1/l^2 and the largest mixed fourth derivative 3/l^4."""
        ell = self.lengthscale
        return max(1.0, ell**-2, 3.0 * ell**-4)

    def grad_bound(self):
        """sup |grad1 k|, attained at distance l."""
        return math.exp(-0.5) / self.lengthscale


@dataclass(frozen=True)
class Matern32(RadialKernel):
    """Matern kernel of smoothness 3/2: (1 + a r) exp(-a r), a = sqrt(3)/l.

    Once differentiable at coincident points, which is all the descent
    update needs.  Fourth-order diagonal derivatives do not exist for this
    family, so ``kappa_bound`` covers the kernel value and the mixed second
    derivative only.
    """

    lengthscale: float = 1.0

    def __post_init__(self):
        _check_lengthscale(self.lengthscale)

    @property
    def _a(self):
        return math.sqrt(3.0) / self.lengthscale

    def _profile(self, sq):
        r = np.sqrt(np.maximum(sq, 0.0))
        ar = self._a * r
        return (1.0 + ar) * np.exp(-ar)

    def _grad_factor(self, sq):
        # grad1 k = -a^2 exp(-a r) (x - y); smooth through r = 0.
        r = np.sqrt(np.maximum(sq, 0.0))
        return -self._a**2 * np.exp(-self._a * r)

    def kappa_bound(self):
        return max(1.0, 3.0 / self.lengthscale**2)

    def grad_bound(self):
        # sup of a^2 r exp(-a r) over r >= 0 is a/e.
        return self._a / math.e


@dataclass(frozen=True)
class InverseMultiquadric(RadialKernel):
    """Inverse multiquadric kernel (c^2 + |x - y|^2 / l^2)^(-1/2)."""

    lengthscale: float = 1.0
    offset: float = 1.0

    def __post_init__(self):
        _check_lengthscale(self.lengthscale)
        if not (np.isfinite(self.offset) and self.offset > 0):
            raise ValueError(f"offset must be a positive finite real, got {self.offset}")

    def _profile(self, sq):
        return (self.offset**2 + sq / self.lengthscale**2) ** -0.5

    def _grad_factor(self, sq):
        return -(self.offset**2 + sq / self.lengthscale**2) ** -1.5 / self.lengthscale**2

    def kappa_bound(self):
        ell, c = self.lengthscale, self.offset
        return max(1.0 / c, c**-3 / ell**2, 9.0 * c**-5 / ell**4)

    def grad_bound(self):
        ell, c = self.lengthscale, self.offset
        return 2.0 / (3.0 * math.sqrt(3.0) * ell * c**2)


@dataclass(frozen=True, eq=False)
class CenteredKernel:
    """Base kernel recentred so its mean embedding under ``target`` is zero.

    k~(x, y) = k(x, y) - m(x) - m(y) + E k(Y, Y') with m the base mean
    embedding under the target.  The instance is bound to the target it was
    centered against; embedding queries under a different target are
    rejected by the target-side dispatchers.
    """

    base: RadialKernel
    target: object
    target_double_integral: float

    def eval(self, x, y):
        x, y = _check_point_pair(x, y)
        mx = float(self.target.mean_embedding(self.base, x))
        my = float(self.target.mean_embedding(self.base, y))
        return self.base.eval(x, y) - mx - my + self.target_double_integral

    def grad1(self, x, y):
        return self.base.grad1(x, y) - self.target.grad_mean_embedding(self.base, x)

    def gram(self, X, Y):
        mX = self.target.mean_embedding(self.base, np.asarray(X, dtype=float))
        mY = self.target.mean_embedding(self.base, np.asarray(Y, dtype=float))
        return self.base.gram(X, Y) - mX[:, None] - mY[None, :] + self.target_double_integral

    def pair_eval(self, X, Y):
        mX = self.target.mean_embedding(self.base, np.asarray(X, dtype=float))
        mY = self.target.mean_embedding(self.base, np.asarray(Y, dtype=float))
        return self.base.pair_eval(X, Y) - mX - mY + self.target_double_integral

    def kappa_bound(self):
        # Centering leaves mixed derivatives untouched; only the diagonal
        # value can grow, by at most 2 sup|m| + E k <= 3 sup k(x,x).
        diag = float(self.base._profile(0.0))
        return max(self.base.kappa_bound(), 3.0 * diag + abs(self.target_double_integral))

    def grad_bound(self):
        return 2.0 * self.base.grad_bound()


def center(kernel, target):
    """Build the centered version of ``kernel`` under ``target``.

    Raises the target's pairing error if the kernel/target combination has
    no mean embedding (for example a Matern kernel under an analytic
    Gaussian mixture).
    """
    if isinstance(kernel, CenteredKernel):
        raise ValueError("kernel is already centered")
    return CenteredKernel(
        base=kernel,
        target=target,
        target_double_integral=float(target.double_integral(kernel)),
    )


_LENGTH_KEYS = ("ℓ", "l", "ell", "lengthscale")
_OFFSET_KEYS = ("c", "offset")


def parse_kernel(spec):
    """Parse a kernel spec string.

    Accepted forms: ``gaussian:ℓ=<float>``, ``matern32:ℓ=<float>``,
    ``imq:ℓ=<float>,c=<float>``, each with an optional trailing
    ``,centered`` flag.  ASCII aliases ``l=`` and ``ell=`` are accepted for
    the lengthscale.  Returns ``(kernel, centered)`` where ``centered``
    signals that the caller should wrap the kernel via :func:`center` once
    the target is known.
    """
    text = spec.strip()
    if not text:
        raise ValueError("empty kernel spec")
    family, _, param_text = text.partition(":")
    family = family.strip().lower()
    params = {}
    centered = False
    for token in filter(None, (p.strip() for p in param_text.split(","))):
        if token.lower() == "centered":
            centered = True
            continue
        key, eq, value = token.partition("=")
        if not eq:
            raise ValueError(f"malformed kernel parameter {token!r} in spec {spec!r}")
        try:
            params[key.strip().lower()] = float(value)
        except ValueError:
            raise ValueError(f"non-numeric kernel parameter {token!r} in spec {spec!r}") from None

    def pop(keys, default=None):
        for k in keys:
            if k in params:
                return params.pop(k)
        return default

    ell = pop(_LENGTH_KEYS, 1.0)
    if family == "gaussian":
        kernel = Gaussian(lengthscale=ell)
    elif family == "matern32":
        kernel = Matern32(lengthscale=ell)
    elif family == "imq":
        kernel = InverseMultiquadric(lengthscale=ell, offset=pop(_OFFSET_KEYS, 1.0))
    else:
        raise ValueError(
            f"unknown kernel family {family!r}; expected gaussian, matern32 or imq"
        )
    if params:
        raise ValueError(f"unused kernel parameters {sorted(params)} in spec {spec!r}")
    return kernel, centered


def kernel_spec(kernel):
    """Canonical spec string for a kernel (inverse of :func:`parse_kernel`)."""
    if isinstance(kernel, CenteredKernel):
        return kernel_spec(kernel.base) + ",centered"
    if isinstance(kernel, Gaussian):
        return f"gaussian:ℓ={kernel.lengthscale:g}"
    if isinstance(kernel, Matern32):
        return f"matern32:ℓ={kernel.lengthscale:g}"
    if isinstance(kernel, InverseMultiquadric):
        return f"imq:ℓ={kernel.lengthscale:g},c={kernel.offset:g}"
    raise TypeError(f"not a known kernel: {kernel!r}")
