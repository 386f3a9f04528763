import numpy as np
import pytest

from mmdpoints import (
    EmpiricalTarget,
    F1,
    F2,
    Gaussian,
    GaussianMixture,
    GradSpan,
    Matern32,
    RkhsElement,
    UnsupportedPairError,
    center,
    eval_integrand,
    integration_error,
    mmd_squared,
    parse_integrand,
    rkhs_norm,
    sample,
    true_integral,
)
from conftest import random_gmm, standard_normal_target


class TestEval:
    def test_f1_at_origin(self):
        assert eval_integrand(F1(), np.zeros(3)) == 1.0

    def test_f2_pythagorean(self):
        assert eval_integrand(F2(), np.array([3.0, 4.0])) == 25.0

    def test_gradspan_vanishes_at_anchor(self):
        anchor = np.array([[0.4, -0.2]])
        f = GradSpan(anchors=anchor, kernel=Gaussian(1.0))
        assert eval_integrand(f, anchor[0]) == pytest.approx(0.0, abs=1e-15)

    def test_gradspan_matches_manual_sum(self):
        rng = np.random.default_rng(0)
        anchors = rng.normal(size=(3, 2))
        kernel = Gaussian(1.0)
        f = GradSpan(anchors=anchors, kernel=kernel)
        x = rng.normal(size=2)
        manual = sum(kernel.grad1(a, x).sum() for a in anchors)
        assert eval_integrand(f, x) == pytest.approx(manual, rel=1e-12)

    def test_rkhs_element_matches_manual_sum(self):
        rng = np.random.default_rng(1)
        kernel = Gaussian(0.8)
        f = RkhsElement(coeffs=rng.normal(size=4), centers=rng.normal(size=(4, 2)),
                        kernel=kernel)
        x = rng.normal(size=2)
        manual = sum(c * kernel.eval(z, x) for c, z in zip(f.coeffs, f.centers))
        assert eval_integrand(f, x) == pytest.approx(manual, rel=1e-12)

    def test_batch_evaluation(self):
        X = np.array([[0.0, 0.0], [3.0, 4.0]])
        assert np.allclose(eval_integrand(F2(), X), [0.0, 25.0])

    def test_gradspan_dimension_mismatch(self):
        f = GradSpan(anchors=np.zeros((1, 2)), kernel=Gaussian(1.0))
        with pytest.raises(ValueError, match="dim"):
            eval_integrand(f, np.zeros(3))

    def test_gradspan_rejects_centered_kernel(self):
        target = standard_normal_target(2)
        ck = center(Gaussian(1.0), target)
        with pytest.raises(ValueError, match="plain kernels"):
            GradSpan(anchors=np.zeros((1, 2)), kernel=ck)


class TestTrueIntegral:
    def test_f2_standard_normal(self):
        assert true_integral(F2(), standard_normal_target(2)) == pytest.approx(2.0, abs=1e-14)

    def test_f2_mixture_formula(self):
        target = GaussianMixture(
            weights=[0.4, 0.6],
            means=np.array([[1.0, 2.0], [0.0, -1.0]]),
            covs=np.stack([np.diag([0.5, 1.5]), np.eye(2) * 2.0]),
        )
        expected = 0.4 * (2.0 + 5.0) + 0.6 * (4.0 + 1.0)
        assert true_integral(F2(), target) == pytest.approx(expected, abs=1e-12)

    def test_f1_standard_normal(self):
        assert true_integral(F1(), standard_normal_target(2)) == pytest.approx(0.5, abs=1e-14)

    def test_f1_and_f2_monte_carlo_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(3):
            target = random_gmm(rng)
            draws = sample(target, 10**6, rng)
            for f in (F1(), F2()):
                vals = np.atleast_1d(eval_integrand(f, draws))
                se = vals.std(ddof=1) / 1000.0
                assert abs(true_integral(f, target) - vals.mean()) <= 4 * se

    def test_gradspan_symmetric_anchors_integrate_to_zero(self):
        target = standard_normal_target(2)
        anchors = np.array([[1.0, 0.5], [-1.0, -0.5]])
        f = GradSpan(anchors=anchors, kernel=Gaussian(1.0))
        assert true_integral(f, target) == pytest.approx(0.0, abs=1e-14)

    def test_gradspan_empirical_average(self):
        rng = np.random.default_rng(3)
        data = rng.normal(size=(100, 2))
        target = EmpiricalTarget(data)
        anchors = rng.normal(size=(2, 2))
        for kernel in (Gaussian(1.0), Matern32(1.0)):
            f = GradSpan(anchors=anchors, kernel=kernel)
            direct = np.mean([eval_integrand(f, row) for row in data])
            assert true_integral(f, target) == pytest.approx(direct, rel=1e-10)

    def test_gradspan_mixture_needs_gaussian_kernel(self):
        target = standard_normal_target(2)
        f = GradSpan(anchors=np.zeros((1, 2)), kernel=Matern32(1.0))
        with pytest.raises(UnsupportedPairError):
            true_integral(f, target)

    def test_full_dataset_integrates_exactly(self):
        rng = np.random.default_rng(4)
        data = rng.normal(size=(50, 2))
        target = EmpiricalTarget(data)
        kernel = Gaussian(1.0)
        for f in (F1(), F2(), GradSpan(anchors=data[:3], kernel=kernel),
                  RkhsElement(coeffs=[1.0, -2.0], centers=data[:2], kernel=kernel)):
            assert integration_error(f, data, target) <= 1e-14


class TestIntegrationError:
    def test_zero_coefficient_element_is_exact(self):
        target = standard_normal_target(2)
        f = RkhsElement(coeffs=[0.0], centers=np.zeros((1, 2)), kernel=Gaussian(1.0))
        X = np.random.default_rng(5).normal(size=(7, 2))
        assert integration_error(f, X, target) == 0.0

    def test_f1_single_particle(self):
        target = standard_normal_target(2)
        err = integration_error(F1(), np.zeros((1, 2)), target)
        assert err == pytest.approx(0.5, abs=1e-14)  # |1 - 0.5|


class TestRkhsNorm:
    def test_single_unit_center(self):
        f = RkhsElement(coeffs=[1.0], centers=np.zeros((1, 2)), kernel=Gaussian(1.0))
        assert rkhs_norm(f) == 1.0

    def test_coincident_cancellation(self):
        f = RkhsElement(coeffs=[1.0, -1.0], centers=np.zeros((2, 2)), kernel=Gaussian(1.0))
        assert rkhs_norm(f) == 0.0

    def test_norm_unavailable_for_other_kinds(self):
        for f in (F1(), F2()):
            with pytest.raises(TypeError, match="RkhsElement"):
                rkhs_norm(f)

    def test_worst_case_bound_on_random_instances(self):
        rng = np.random.default_rng(6)
        kernel = Gaussian(1.0)
        target = random_gmm(rng, dim=2)
        for _ in range(10):
            f = RkhsElement(coeffs=rng.normal(size=4), centers=rng.normal(size=(4, 2)),
                            kernel=kernel)
            X = rng.normal(size=(6, 2))
            bound = rkhs_norm(f) * mmd_squared(kernel, X, target).mmd
            assert integration_error(f, X, target) <= bound + 1e-10

    def test_f1_equals_unit_rkhs_element(self):
        # f1 is the unit-lengthscale Gaussian kernel anchored at the origin
        f = RkhsElement(coeffs=[1.0], centers=np.zeros((1, 2)), kernel=Gaussian(1.0))
        X = np.random.default_rng(7).normal(size=(10, 2))
        assert np.allclose(eval_integrand(f, X), eval_integrand(F1(), X), atol=1e-15)


class TestParse:
    def test_simple_names(self):
        assert isinstance(parse_integrand("f1", Gaussian(1.0)), F1)
        assert isinstance(parse_integrand("f2", Gaussian(1.0)), F2)

    def test_gradspan_self_anchors_at_points(self):
        X = np.random.default_rng(8).normal(size=(4, 2))
        f = parse_integrand("gradspan:self", Gaussian(1.0), points=X)
        assert isinstance(f, GradSpan)
        assert np.array_equal(f.anchors, X)

    def test_gradspan_self_requires_points(self):
        with pytest.raises(ValueError, match="point set"):
            parse_integrand("gradspan:self", Gaussian(1.0))

    def test_csv_round_trips(self, tmp_path):
        anchors = np.array([[0.1, 0.2], [0.3, 0.4]])
        anchor_path = tmp_path / "anchors.csv"
        np.savetxt(anchor_path, anchors, delimiter=",")
        f = parse_integrand(f"gradspan:{anchor_path}", Gaussian(1.0))
        assert np.allclose(f.anchors, anchors)

        table = np.array([[1.5, 0.0, 1.0], [-0.5, 2.0, -1.0]])
        rkhs_path = tmp_path / "element.csv"
        np.savetxt(rkhs_path, table, delimiter=",")
        g = parse_integrand(f"rkhs:{rkhs_path}", Gaussian(1.0))
        assert np.allclose(g.coeffs, table[:, 0])
        assert np.allclose(g.centers, table[:, 1:])

    def test_unknown_spec(self):
        with pytest.raises(ValueError, match="unknown integrand"):
            parse_integrand("f3", Gaussian(1.0))
