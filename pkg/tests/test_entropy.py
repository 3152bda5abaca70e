import math

import numpy as np
import pytest

from element import (DegenerateDistance, EmptyInput, EntropyValue,
                     EstimatorKind, InvalidArgument, KernelConfig, LogBase,
                     gram_matrix, kde_entropy, kernel_sum_gap, knn_entropy,
                     renyi_matrix_entropy, subsample_states,
                     symmetric_eigenvalues)

SIGMA_HALF = KernelConfig(0.5)

# hand-derived two-point values, d=1, points {0, 1}
KDE_TWO_POINT = -math.log((1.0 + math.exp(-1.0)) / 2.0)        # 0.3798854930417225
KNN_TWO_POINT = math.log(4.0) + np.euler_gamma                 # 1.9635100260214235
RENYI_TWO_POINT = -math.log2((1.0 + math.exp(-2.0)) / 2.0)     # 0.8168815879184038


class TestGramMatrix:
    def test_single_point(self):
        g = gram_matrix([[2.0, 3.0]], SIGMA_HALF)
        assert np.array_equal(g.entries, [[1.0]])

    def test_identical_points(self):
        g = gram_matrix([[1.0], [1.0]], SIGMA_HALF)
        assert np.array_equal(g.entries, np.ones((2, 2)))

    def test_two_point_off_diagonal(self):
        g = gram_matrix([[0.0], [1.0]], SIGMA_HALF)
        assert g.entries[0, 1] == pytest.approx(math.exp(-1.0), abs=1e-12)
        assert g.entries[0, 0] == 1.0

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            gram_matrix([], SIGMA_HALF)

    def test_mixed_dimensions_rejected(self):
        with pytest.raises((InvalidArgument, ValueError)):
            gram_matrix([[0.0], [0.0, 1.0]], SIGMA_HALF)

    def test_normalized_trace_and_spectrum(self):
        rng = np.random.default_rng(0)
        g = gram_matrix(rng.normal(size=(12, 3)), KernelConfig(1.0)).normalized()
        assert np.trace(g.entries) == pytest.approx(1.0, abs=1e-12)
        vals = symmetric_eigenvalues(g.entries)
        assert vals.min() >= -1e-10 and vals.max() <= 1.0 + 1e-10


class TestKdeEntropy:
    def test_single_point_zero(self):
        assert kde_entropy([[5.0]], SIGMA_HALF).value == 0.0

    def test_identical_points_zero(self):
        assert kde_entropy([[2.0, 2.0]] * 7, SIGMA_HALF).value == pytest.approx(0.0, abs=1e-12)

    def test_two_point_value(self):
        got = kde_entropy([[0.0], [1.0]], SIGMA_HALF).value
        assert got == pytest.approx(KDE_TWO_POINT, abs=1e-12)

    def test_natural_log_base(self):
        v = kde_entropy([[0.0], [1.0]], SIGMA_HALF)
        assert v.log_base == LogBase.NATURAL and v.estimator == EstimatorKind.KDE


class TestKnnEntropy:
    def test_two_point_value(self):
        got = knn_entropy([[0.0], [1.0]], 1).value
        assert got == pytest.approx(KNN_TWO_POINT, abs=1e-10)

    def test_scaling_law(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(40, 3))
        for c in (2.0, 0.5, 7.25):
            base = knn_entropy(pts, 4).value
            scaled = knn_entropy(c * pts, 4).value
            assert scaled == pytest.approx(base + 3 * math.log(c), abs=1e-10)

    def test_duplicates_rejected(self):
        with pytest.raises(DegenerateDistance):
            knn_entropy([[0.0], [0.0]], 1)

    def test_too_few_points_rejected(self):
        with pytest.raises(InvalidArgument):
            knn_entropy([[0.0], [1.0]], 2)

    def test_gaussian_consistency_smoke(self):
        rng = np.random.default_rng(7)
        samples = rng.standard_normal((2000, 2))
        analytic = math.log(2.0 * math.pi * math.e)
        assert knn_entropy(samples, 5).value == pytest.approx(analytic, abs=0.2)


class TestRenyiEntropy:
    def test_identical_points_zero(self):
        got = renyi_matrix_entropy([[1.0, 1.0]] * 6, 2.0, SIGMA_HALF).value
        assert got == pytest.approx(0.0, abs=1e-10)

    def test_well_separated_log2_n(self):
        pts = (np.arange(8)[:, None] * 100.0)
        got = renyi_matrix_entropy(pts, 2.0, KernelConfig(1.0)).value
        assert got == pytest.approx(3.0, abs=1e-9)

    def test_two_point_value(self):
        got = renyi_matrix_entropy([[0.0], [1.0]], 2.0, SIGMA_HALF).value
        assert got == pytest.approx(RENYI_TWO_POINT, abs=1e-12)

    def test_alpha_one_rejected(self):
        with pytest.raises(InvalidArgument):
            renyi_matrix_entropy([[0.0], [1.0]], 1.0, SIGMA_HALF)

    def test_base2(self):
        v = renyi_matrix_entropy([[0.0], [1.0]], 2.0, SIGMA_HALF)
        assert v.log_base == LogBase.BASE2

    def test_integer_alpha_matches_eigen_path(self):
        rng = np.random.default_rng(11)
        for alpha in (2, 3):
            pts = rng.normal(size=(20, 2))
            got = renyi_matrix_entropy(pts, float(alpha), KernelConfig(1.0)).value
            a = gram_matrix(pts, KernelConfig(1.0)).normalized().entries
            vals = np.clip(symmetric_eigenvalues(a), 0.0, None)
            expected = math.log2(float(np.sum(vals ** alpha))) / (1 - alpha)
            assert got == pytest.approx(expected, abs=1e-8)

    def test_range_bounds(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(2, 30))
            pts = rng.normal(size=(n, 2)) * rng.uniform(0.01, 10)
            for alpha in (0.5, 1.001, 2.0, 5.0):
                h = renyi_matrix_entropy(pts, alpha, KernelConfig(1.0)).value
                assert 0.0 <= h <= math.log2(n) + 1e-9

    def test_alpha_monotonicity(self):
        rng = np.random.default_rng(9)
        alphas = (0.5, 0.9, 1.001, 2.0, 3.0, 6.0)
        for _ in range(10):
            pts = rng.normal(size=(15, 2))
            values = [renyi_matrix_entropy(pts, a, KernelConfig(1.0)).value
                      for a in alphas]
            for lo, hi in zip(values, values[1:]):
                assert hi <= lo + 1e-9


class TestSymmetricEigenvalues:
    def test_identity(self):
        assert np.allclose(symmetric_eigenvalues(np.eye(3)), [1, 1, 1], atol=1e-12)

    def test_diagonal_sorted_descending(self):
        got = symmetric_eigenvalues(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(got, [3, 2, 1], atol=1e-12)

    def test_two_by_two_closed_form(self):
        got = symmetric_eigenvalues(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(got, [3.0, 1.0], atol=1e-10)

    def test_asymmetric_rejected(self):
        with pytest.raises(InvalidArgument):
            symmetric_eigenvalues(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_matches_characteristic_sum_and_product(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(6, 6))
        m = m + m.T
        vals = symmetric_eigenvalues(m)
        assert np.sum(vals) == pytest.approx(np.trace(m), abs=1e-9)
        assert np.prod(vals) == pytest.approx(np.linalg.det(m), rel=1e-8)


class TestInvariances:
    estimators = [
        lambda pts: kde_entropy(pts, KernelConfig(1.0)).value,
        lambda pts: knn_entropy(pts, 2).value,
        lambda pts: renyi_matrix_entropy(pts, 2.0, KernelConfig(1.0)).value,
    ]

    def test_permutation_invariance(self):
        rng = np.random.default_rng(13)
        pts = rng.normal(size=(15, 2))
        shuffled = pts[rng.permutation(15)]
        for est in self.estimators:
            assert est(shuffled) == pytest.approx(est(pts), abs=1e-9)

    def test_translation_invariance_exact_on_dyadics(self):
        # dyadic coordinates plus a dyadic shift keep float arithmetic exact
        rng = np.random.default_rng(17)
        pts = rng.integers(0, 1024, size=(12, 2)) / 1024.0
        shifted = pts + 4.0
        for est in self.estimators:
            assert est(shifted) == est(pts)

    def test_translation_invariance_general(self):
        rng = np.random.default_rng(19)
        pts = rng.normal(size=(12, 3))
        shifted = pts + np.array([1.7, -2.3, 0.9])
        for est in self.estimators:
            assert est(shifted) == pytest.approx(est(pts), abs=1e-9)


class TestKernelSumGap:
    def test_full_neighborhood_zero_gap(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        gap, _ = kernel_sum_gap(pts, 3, KernelConfig(1.0))
        assert gap == pytest.approx(0.0, abs=1e-15)

    def test_coincident_points(self):
        # N = k + 1 so the truncated sum is the full sum: gap exactly zero,
        # but the kth distance is zero so the threshold cannot hold
        pts = np.zeros((3, 2))
        gap, ok = kernel_sum_gap(pts, 2, KernelConfig(1.0))
        assert gap == pytest.approx(0.0, abs=1e-15)
        assert ok is False

    def test_clustered_plus_far_configuration(self):
        # k+1 clustered points,远 points beyond the threshold from everything
        sigma, k, eps = 1.0, 3, 1e-6
        rng = np.random.default_rng(23)
        n_far = 9
        n = k + n_far
        thr = math.sqrt(2 * sigma * math.log((n - k) / eps))
        # exactly k clustered points, so each cluster point's kth nearest
        # neighbor is already a far point
        cluster = 1e-3 * rng.standard_normal((k, 2))
        far = [np.array([(i + 2) * 2.1 * thr, 0.0]) + 0.05 * rng.standard_normal(2)
               for i in range(n_far)]
        pts = np.vstack([cluster, far])
        gap, ok = kernel_sum_gap(pts, k, KernelConfig(sigma), eps)
        assert ok is True
        assert gap <= eps

    def test_threshold_soundness_randomized(self):
        # whenever the threshold condition holds, the gap must be <= epsilon
        sigma, k, eps = 1.0, 3, 1e-6
        rng = np.random.default_rng(29)
        thr = None
        checked = 0
        while checked < 100:
            n = int(rng.integers(6, 25))
            thr = math.sqrt(2 * sigma * math.log((n - k) / eps))
            # grid spacing above the threshold guarantees the condition
            cells = rng.permutation(100)[:n]
            pts = np.stack([[(c % 10) * 1.1 * thr, (c // 10) * 1.1 * thr]
                            for c in cells])
            pts = pts + 0.01 * thr * rng.standard_normal(pts.shape)
            gap, ok = kernel_sum_gap(pts, k, KernelConfig(sigma), eps)
            assert ok is True
            assert gap <= eps
            checked += 1

    def test_too_few_points_rejected(self):
        with pytest.raises(InvalidArgument):
            kernel_sum_gap(np.zeros((3, 2)), 3, KernelConfig(1.0))


class TestConversionsAndSubsample:
    def test_base_conversion_exact(self):
        v = EntropyValue(1.386294361119890, LogBase.NATURAL, EstimatorKind.KDE)
        assert v.in_base(LogBase.BASE2).value == v.value / math.log(2.0)
        assert v.in_base(LogBase.NATURAL) is v

    def test_subsample_deterministic_and_spaced(self):
        pts = np.arange(1000, dtype=float)[:, None]
        sub = subsample_states(pts, 256)
        assert sub.shape == (256, 1)
        assert np.array_equal(sub, subsample_states(pts, 256))
        assert len(np.unique(sub)) == 256

    def test_subsample_identity_when_small(self):
        pts = np.arange(10, dtype=float)[:, None]
        assert np.array_equal(subsample_states(pts, 256), pts)
