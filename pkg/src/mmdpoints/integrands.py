"""Test integrands with known integrals against the supported targets.

Four kinds:

* ``F1``: exp(-|x|^2 / 2), a unit-lengthscale Gaussian bump at the origin
  (an RKHS element of the unit Gaussian kernel);
* ``F2``: |x|^2, outside the RKHS of any bounded kernel;
* ``GradSpan``: sums of first-argument kernel partial derivatives anchored
  at a point set -- the span on which stationary point sets integrate
  exactly;
* ``RkhsElement``: finite kernel expansions with a computable RKHS norm,
  used to exercise the worst-case integration bound.
"""

import math
from dataclasses import dataclass

import numpy as np

from .kernels import CenteredKernel, Gaussian
from .mmd import as_point_set
from .targets import (
    EmpiricalTarget,
    GaussianMixture,
    grad_mean_embedding,
    mean_embedding,
)

__all__ = [
    "F1",
    "F2",
    "GradSpan",
    "RkhsElement",
    "eval_integrand",
    "true_integral",
    "integration_error",
    "rkhs_norm",
    "parse_integrand",
    "metric_label",
    "GRADSPAN_SELF",
]

# Sentinel accepted by the harness: anchor a GradSpan at the point set
# under evaluation.
GRADSPAN_SELF = "gradspan:self"


@dataclass(frozen=True)
class F1:
    """f(x) = exp(-0.5 |x|^2)."""


@dataclass(frozen=True)
class F2:
    """f(x) = |x|^2."""


@dataclass(frozen=True, eq=False)
class GradSpan:
    """f(x) = sum_j sum_l d_l k(a_j, x): coordinate-summed first-argument
    kernel gradients anchored at the rows of ``anchors``.

    Plain (non-centered) kernels only.
    """

    anchors: np.ndarray
    kernel: object

    def __post_init__(self):
        object.__setattr__(self, "anchors", as_point_set(self.anchors))
        if isinstance(self.kernel, CenteredKernel):
            raise ValueError("GradSpan integrands use plain kernels")


@dataclass(frozen=True, eq=False)
class RkhsElement:
    """f(x) = sum_j c_j k(z_j, x) with centers z_j and coefficients c_j."""

    coeffs: np.ndarray
    centers: np.ndarray
    kernel: object

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.atleast_1d(np.asarray(self.coeffs, dtype=float)))
        object.__setattr__(self, "centers", as_point_set(self.centers))
        if self.coeffs.ndim != 1 or self.coeffs.size != self.centers.shape[0]:
            raise ValueError("coeffs and centers must have equal length")


def _as_rows(x, dim):
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = X[None, :] if single else X
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(f"expected points of dim {dim}, got shape {np.shape(x)}")
    return X, single


def eval_integrand(f, x):
    """Evaluate an integrand at a point (d,) or batch (n, d)."""
    if isinstance(f, F1):
        X = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.exp(-0.5 * np.einsum("nd,nd->n", X, X))
    elif isinstance(f, F2):
        X = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.einsum("nd,nd->n", X, X)
    elif isinstance(f, GradSpan):
        X, _ = _as_rows(x, f.anchors.shape[1])
        # sum_j 1' grad1 k(a_j, x_i) with grad1 k(a, x) = g(a, x) (a - x)
        G = f.kernel.grad1_factor(f.anchors, X)
        out = G.T @ f.anchors.sum(axis=1) - X.sum(axis=1) * G.sum(axis=0)
    elif isinstance(f, RkhsElement):
        X, _ = _as_rows(x, f.centers.shape[1])
        out = f.kernel.gram(X, f.centers) @ f.coeffs
    else:
        raise TypeError(f"not an integrand: {f!r}")
    return float(out[0]) if np.asarray(x).ndim == 1 else out


def true_integral(f, target):
    """Exact integral of ``f`` against the target.

    Gaussian mixtures use the per-component closed forms (GradSpan and
    RkhsElement additionally require a Gaussian kernel there); empirical
    targets integrate everything by exact averaging over the dataset.
    """
    if isinstance(f, F1):
        # f1 is the unit Gaussian kernel evaluated against the origin.
        dim = target.dim
        return float(mean_embedding(target, Gaussian(1.0), np.zeros(dim)))
    if isinstance(f, F2):
        if isinstance(target, GaussianMixture):
            per_comp = np.trace(target.covs, axis1=1, axis2=2) + np.einsum(
                "md,md->m", target.means, target.means
            )
            return float(target.weights @ per_comp)
        if isinstance(target, EmpiricalTarget):
            return float(np.einsum("nd,nd->n", target.data, target.data).mean())
        raise TypeError(f"unsupported target {target!r}")
    if isinstance(f, GradSpan):
        grads = grad_mean_embedding(target, f.kernel, f.anchors)
        return math.fsum(np.asarray(grads).ravel())
    if isinstance(f, RkhsElement):
        vals = np.atleast_1d(mean_embedding(target, f.kernel, f.centers))
        return math.fsum(f.coeffs * vals)
    raise TypeError(f"not an integrand: {f!r}")


def integration_error(f, points, target):
    """| (1/n) sum_i f(x_i) - integral of f d(target) |."""
    X = as_point_set(points)
    estimate = math.fsum(np.atleast_1d(eval_integrand(f, X))) / X.shape[0]
    return abs(estimate - true_integral(f, target))


def rkhs_norm(f):
    """RKHS norm sqrt(c' K c) of a kernel expansion.

    Only RkhsElement carries a computable norm; in particular |x|^2 lies
    outside the RKHS of the bounded kernels used here.
    """
    if not isinstance(f, RkhsElement):
        raise TypeError(
            f"rkhs_norm is only defined for RkhsElement integrands, got {type(f).__name__}"
        )
    K = f.kernel.gram(f.centers, f.centers)
    return math.sqrt(max(float(f.coeffs @ K @ f.coeffs), 0.0))


def _load_csv(path):
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return data


def parse_integrand(spec, kernel, points=None):
    """Build an integrand from a spec string.

    Accepted: ``f1``, ``f2``, ``gradspan:self`` (anchor at ``points``),
    ``gradspan:<points.csv>`` and ``rkhs:<coeffs-and-centers.csv>`` (first
    column coefficients, remaining columns center coordinates).
    """
    text = spec.strip()
    low = text.lower()
    if low == "f1":
        return F1()
    if low == "f2":
        return F2()
    if low.startswith("gradspan:"):
        ref = text.split(":", 1)[1]
        if ref.strip().lower() == "self":
            if points is None:
                raise ValueError("gradspan:self needs a point set to anchor at")
            anchors = points
        else:
            anchors = _load_csv(ref.strip())
        return GradSpan(anchors=anchors, kernel=kernel)
    if low.startswith("rkhs:"):
        table = _load_csv(text.split(":", 1)[1].strip())
        if table.shape[1] < 2:
            raise ValueError("rkhs csv needs a coefficient column plus center coordinates")
        return RkhsElement(coeffs=table[:, 0], centers=table[:, 1:], kernel=kernel)
    raise ValueError(f"unknown integrand spec {spec!r}")


def metric_label(spec):
    """Result-row label for an error metric: gradspan variants collapse to
    ``err:gradspan``; everything else keeps its spec string."""
    low = spec.strip().lower()
    if low.startswith("gradspan"):
        return "err:gradspan"
    if low.startswith("rkhs"):
        return "err:rkhs"
    return f"err:{low}"
