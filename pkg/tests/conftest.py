import numpy as np
import pytest

from mmdpoints import GaussianMixture, benchmark_mixture


def random_gmm(rng, dim=None, max_components=3, spread=2.0):
    """Random small mixture with well-conditioned covariances."""
    d = dim if dim is not None else int(rng.integers(1, 4))
    m = int(rng.integers(1, max_components + 1))
    weights = rng.uniform(0.2, 1.0, size=m)
    weights /= weights.sum()
    means = rng.uniform(-spread, spread, size=(m, d))
    a = rng.standard_normal((m, d, d))
    covs = a @ a.transpose(0, 2, 1) / d + 0.3 * np.eye(d)
    return GaussianMixture(weights=weights, means=means, covs=covs)


def standard_normal_target(dim):
    return GaussianMixture(
        weights=np.ones(1),
        means=np.zeros((1, dim)),
        covs=np.eye(dim)[None],
    )


@pytest.fixture(scope="session")
def bench_target():
    return benchmark_mixture()
