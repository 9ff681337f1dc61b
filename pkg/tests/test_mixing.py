import numpy as np
import pytest

from src.channel import Dist, Policy
from src.errors import EmptySet, NotStrictlyPositive, ShapeMismatch
from src.mixing import (contraction_coeff, contraction_envelope,
                        deterministic_policies, hausdorff, policy_matrix,
                        reachable_sets, thin, tv, verify_tv_contraction)
from src.zoo import (BINARY, identity_dmc, maj_z_1d, maj_z_2d,
                     memoryless_lift, random_kernel, smoothed, uniform_kernel)

QUARTER = memoryless_lift(np.array([[0.75, 0.25], [0.25, 0.75]]), 1)
IDENTITY = memoryless_lift(identity_dmc(), 1)


class TestContractionCoefficient:
    def test_quarter_kernel(self):
        assert contraction_coeff(QUARTER) == pytest.approx((0.25, 0.5))

    def test_uniform_kernel(self):
        assert contraction_coeff(uniform_kernel(BINARY, 1)) == pytest.approx((0.5, 0.0))

    @pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0])
    def test_zero_entries(self, alpha):
        with pytest.raises(NotStrictlyPositive):
            contraction_coeff(maj_z_1d(alpha))

    def test_line_only(self):
        with pytest.raises(ShapeMismatch):
            contraction_coeff(maj_z_2d(0.3))


class TestPolicyMatrix:
    def test_identity_copy_policy(self):
        copy = Policy(BINARY, 1, np.eye(2))
        assert np.allclose(policy_matrix(IDENTITY, copy).matrix, np.eye(2))

    def test_uniform_policy_averages_inputs(self):
        k = maj_z_1d(0.4)
        A = policy_matrix(k, Policy.uniform(BINARY, 1)).matrix
        assert np.allclose(A, k.table.mean(axis=0).T)

    def test_entries_at_least_gamma(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            k = random_kernel(BINARY, 1, rng, min_entry=0.1)
            policy = Policy(BINARY, 1, rng.dirichlet(np.ones(2), size=2).T)
            assert policy_matrix(k, policy).matrix.min() >= k.gamma - 1e-15

    def test_columns_are_distributions(self):
        A = policy_matrix(QUARTER, Policy.uniform(BINARY, 1))
        assert np.allclose(A.apply(np.array([0.2, 0.8])).sum(), 1.0)


class TestTV:
    def test_examples(self):
        assert tv(Dist([0.3, 0.7]), Dist([0.3, 0.7])) == 0.0
        assert tv(Dist([1.0, 0.0]), Dist([0.0, 1.0])) == 1.0
        assert tv(Dist([0.6, 0.4]), Dist([0.5, 0.5])) == pytest.approx(0.1)

    def test_metric_properties(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            p, q, r = rng.dirichlet(np.ones(3), size=3)
            assert tv(p, q) == pytest.approx(tv(q, p))
            assert tv(p, r) <= tv(p, q) + tv(q, r) + 1e-15

    def test_support_mismatch(self):
        with pytest.raises(ShapeMismatch):
            tv(np.array([1.0, 0.0]), np.array([1.0, 0.0, 0.0]))


class TestVerifyContraction:
    def test_uniform_kernel(self):
        assert verify_tv_contraction(uniform_kernel(BINARY, 1), 100, seed=0) == pytest.approx(0.0, abs=1e-12)

    def test_quarter_kernel(self):
        assert verify_tv_contraction(QUARTER, 1000, seed=7) <= 0.5 + 1e-12

    def test_smoothed_identity(self):
        k = smoothed(IDENTITY, 0.1)
        assert verify_tv_contraction(k, 1000, seed=7) <= 0.9 + 1e-12

    def test_random_positive_kernels(self):
        rng = np.random.default_rng(99)
        for i in range(10):
            k = random_kernel(BINARY, 1, rng, min_entry=0.05)
            _, alpha = contraction_coeff(k)
            assert verify_tv_contraction(k, 10_000, seed=i) <= alpha + 1e-12

    def test_deterministic_for_seed(self):
        assert verify_tv_contraction(QUARTER, 200, seed=3) == verify_tv_contraction(QUARTER, 200, seed=3)


class TestReachableSets:
    def test_zero_steps(self):
        sets = reachable_sets(QUARTER, Dist([0.9, 0.1]), 0, 10, seed=0)
        assert len(sets) == 1
        assert np.allclose(sets[0].points, [[0.9, 0.1]])

    def test_uniform_kernel_collapses(self):
        sets = reachable_sets(uniform_kernel(BINARY, 1), Dist([0.9, 0.1]), 1, 10, seed=0)
        assert np.allclose(sets[1].points, 0.5)

    def test_deterministic_policies_included(self):
        assert len(deterministic_policies(QUARTER)) == 4

    def test_hausdorff_decay_within_envelope(self):
        _, alpha = contraction_coeff(QUARTER)
        a = reachable_sets(QUARTER, Dist([1.0, 0.0]), 4, 20, seed=5)
        b = reachable_sets(QUARTER, Dist([0.2, 0.8]), 4, 20, seed=5)
        bounds = contraction_envelope(a, b, alpha)
        for sa, sb, bound in zip(a, b, bounds):
            assert hausdorff(sa, sb) <= bound + 1e-12
        assert bounds[0] == pytest.approx(0.8)

    def test_random_kernel_envelope(self):
        rng = np.random.default_rng(12)
        for seed in range(3):
            k = random_kernel(BINARY, 1, rng, min_entry=0.1)
            _, alpha = contraction_coeff(k)
            a = reachable_sets(k, Dist([0.5, 0.5]), 3, 10, seed=seed)
            b = reachable_sets(k, Dist([0.0, 1.0]), 3, 10, seed=seed)
            bounds = contraction_envelope(a, b, alpha)
            assert all(hausdorff(x, y) <= bound + 1e-12 for x, y, bound in zip(a, b, bounds))

    def test_envelope_length_mismatch(self):
        a = reachable_sets(QUARTER, Dist([1.0, 0.0]), 2, 5, seed=0)
        with pytest.raises(ShapeMismatch):
            contraction_envelope(a, a[:2], 0.5)


class TestThin:
    def test_under_limit_untouched(self):
        pts = np.array([[1.0, 0.0], [0.0, 1.0]])
        kept, moved = thin(pts, limit=5)
        assert kept is pts and moved == 0.0

    def test_farthest_points_kept(self):
        grid = np.linspace(0.0, 1.0, 11)
        pts = np.stack([grid, 1.0 - grid], axis=1)
        kept, moved = thin(pts, limit=3)
        assert len(kept) == 3
        assert moved == pytest.approx(0.2)


class TestHausdorff:
    def test_identical_sets(self):
        s = [Dist([0.2, 0.8]), Dist([0.6, 0.4])]
        assert hausdorff(s, s) == 0.0

    def test_singletons(self):
        p, q = Dist([0.6, 0.4]), Dist([0.5, 0.5])
        assert hausdorff([p], [q]) == pytest.approx(tv(p, q))

    def test_two_against_one(self):
        a = [Dist([1.0, 0.0]), Dist([0.0, 1.0])]
        assert hausdorff(a, [Dist([0.5, 0.5])]) == pytest.approx(0.5)

    def test_symmetric(self):
        a = [Dist([1.0, 0.0]), Dist([0.3, 0.7])]
        b = [Dist([0.5, 0.5])]
        assert hausdorff(a, b) == hausdorff(b, a)

    def test_empty(self):
        with pytest.raises(EmptySet):
            hausdorff([], [Dist([0.5, 0.5])])
