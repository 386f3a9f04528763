import json
import math

import numpy as np
import pytest

from mmdpoints import (
    EmpiricalTarget,
    Gaussian,
    RkhsElement,
    center,
    grad_particles,
    gradient_field,
    mmd_squared,
    phi,
    rkhs_norm,
    stationarity_residual,
)
from conftest import random_gmm, standard_normal_target


class TestMmdSquared:
    def test_point_set_equals_target_support(self):
        y0 = np.array([[0.5, -2.0]])
        target = EmpiricalTarget(y0)
        rep = mmd_squared(Gaussian(1.0), y0, target)
        assert abs(rep.mmd_squared) <= 1e-14
        assert rep.mmd == 0.0

    def test_single_particle_standard_normal(self):
        target = standard_normal_target(2)
        rep = mmd_squared(Gaussian(1.0), np.zeros((1, 2)), target)
        assert rep.kxx == pytest.approx(1.0, abs=1e-15)
        assert rep.kxmu == pytest.approx(0.5, abs=1e-14)
        assert rep.kmumu == pytest.approx(1.0 / 3.0, abs=1e-14)
        assert rep.mmd_squared == pytest.approx(1.0 / 3.0, abs=1e-13)

    def test_nonnegative_on_random_instances(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            target = random_gmm(rng)
            X = rng.normal(size=(int(rng.integers(1, 8)), target.dim))
            rep = mmd_squared(Gaussian(1.0), X, target)
            assert rep.mmd_squared >= -1e-12
            assert rep.mmd == math.sqrt(max(rep.mmd_squared, 0.0))
            assert rep.mmd_squared == rep.kxx - 2 * rep.kxmu + rep.kmumu

    def test_permutation_invariance_bitwise(self):
        rng = np.random.default_rng(1)
        target = random_gmm(rng, dim=2)
        X = rng.normal(size=(17, 2))
        kernel = Gaussian(1.0)
        a = mmd_squared(kernel, X, target)
        b = mmd_squared(kernel, X[rng.permutation(17)], target)
        assert a.mmd_squared == b.mmd_squared
        assert a.kxx == b.kxx

    def test_report_serialization_keys(self):
        target = standard_normal_target(1)
        rep = mmd_squared(Gaussian(1.0), np.zeros((1, 1)), target)
        decoded = json.loads(rep.to_json())
        assert list(decoded) == ["mmd", "mmd_squared", "kxx", "kxmu", "kmumu"]

    def test_centered_kernel_matches_base_mmd(self):
        rng = np.random.default_rng(2)
        target = random_gmm(rng, dim=2)
        kernel = Gaussian(1.0)
        X = rng.normal(size=(9, 2))
        base = mmd_squared(kernel, X, target)
        centered = mmd_squared(center(kernel, target), X, target)
        assert centered.kxmu == 0.0 and centered.kmumu == 0.0
        assert centered.mmd_squared == pytest.approx(base.mmd_squared, abs=1e-12)


class TestGradients:
    def test_single_symmetric_particle_is_stationary(self):
        target = standard_normal_target(2)
        G = grad_particles(Gaussian(1.0), np.zeros((1, 2)), target)
        assert np.abs(G).max() <= 1e-15

    def test_coincident_particles_on_own_support(self):
        X = np.array([[0.3, 0.3], [0.3, 0.3]])
        target = EmpiricalTarget(X)
        G = grad_particles(Gaussian(1.0), X, target)
        assert np.abs(G).max() <= 1e-14

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        kernel = Gaussian(1.0)
        target = random_gmm(rng, dim=2)
        X = rng.normal(size=(5, 2))
        G = grad_particles(kernel, X, target)
        h = 1e-6
        fd = np.zeros_like(X)
        for i in range(5):
            for l in range(2):
                up, dn = X.copy(), X.copy()
                up[i, l] += h
                dn[i, l] -= h
                fd[i, l] = (
                    mmd_squared(kernel, up, target).mmd_squared
                    - mmd_squared(kernel, dn, target).mmd_squared
                ) / (2 * h)
        assert np.abs(G - fd).max() <= 1e-5 * (1 + np.abs(G).max())

    def test_gradient_is_two_over_n_times_field(self):
        rng = np.random.default_rng(4)
        target = random_gmm(rng, dim=2)
        X = rng.normal(size=(7, 2))
        kernel = Gaussian(1.0)
        F = gradient_field(kernel, X, target)
        assert np.allclose(grad_particles(kernel, X, target), (2.0 / 7.0) * F, atol=1e-15)


class TestResidual:
    def test_zero_at_stationary_configuration(self):
        target = standard_normal_target(2)
        assert stationarity_residual(Gaussian(1.0), np.zeros((1, 2)), target) <= 1e-14

    def test_reorder_invariance_bitwise(self):
        rng = np.random.default_rng(5)
        target = random_gmm(rng, dim=3)
        X = rng.normal(size=(11, 3))
        kernel = Gaussian(1.0)
        a = stationarity_residual(kernel, X, target)
        b = stationarity_residual(kernel, X[rng.permutation(11)], target)
        assert a == b

    def test_residual_is_max_field_norm(self):
        rng = np.random.default_rng(6)
        target = random_gmm(rng, dim=2)
        X = rng.normal(size=(6, 2))
        kernel = Gaussian(1.0)
        F = gradient_field(kernel, X, target)
        assert stationarity_residual(kernel, X, target) == pytest.approx(
            np.linalg.norm(F, axis=1).max(), rel=1e-12
        )


class TestPhi:
    def test_zero_for_one_point_target(self):
        y0 = np.array([1.0, -1.0])
        target = EmpiricalTarget(y0[None, :])
        val = phi(Gaussian(1.0), target, np.array([0.2, 0.2]), y0)
        assert np.abs(val).max() <= 1e-15

    def test_average_phi_is_negative_field(self):
        rng = np.random.default_rng(7)
        target = random_gmm(rng, dim=2)
        kernel = Gaussian(1.0)
        X = rng.normal(size=(6, 2))
        F = gradient_field(kernel, X, target)
        for i in range(6):
            avg = np.mean([phi(kernel, target, X[i], X[j]) for j in range(6)], axis=0)
            assert np.abs(avg + F[i]).max() <= 1e-14

    def test_norm_bounded_by_twice_grad_bound(self):
        rng = np.random.default_rng(8)
        target = random_gmm(rng, dim=3)
        kernel = Gaussian(1.0)
        bound = 2 * 3 * kernel.grad_bound()
        for _ in range(50):
            z, w = rng.normal(scale=2.0, size=(2, 3))
            assert np.linalg.norm(phi(kernel, target, z, w)) <= bound


class TestWorstCaseBound:
    def test_integration_error_bounded_by_norm_times_mmd(self):
        rng = np.random.default_rng(9)
        kernel = Gaussian(1.0)
        for _ in range(20):
            target = random_gmm(rng, dim=2)
            X = rng.normal(size=(int(rng.integers(2, 10)), 2))
            f = RkhsElement(
                coeffs=rng.normal(size=3),
                centers=rng.normal(size=(3, 2)),
                kernel=kernel,
            )
            from mmdpoints import integration_error

            err = integration_error(f, X, target)
            bound = rkhs_norm(f) * mmd_squared(kernel, X, target).mmd
            assert err <= bound + 1e-10


class TestExactnessLink:
    def test_gradspan_error_bounded_by_residual(self):
        # the span of kernel partial derivatives anchored at the particles
        # integrates with error at most n * d * residual for any point set
        from mmdpoints import GradSpan, integration_error

        rng = np.random.default_rng(10)
        kernel = Gaussian(1.0)
        for _ in range(10):
            target = random_gmm(rng, dim=2)
            n = int(rng.integers(2, 10))
            X = rng.normal(size=(n, 2))
            f = GradSpan(anchors=X, kernel=kernel)
            err = integration_error(f, X, target)
            res = stationarity_residual(kernel, X, target)
            assert err <= n * 2 * res + 1e-12
