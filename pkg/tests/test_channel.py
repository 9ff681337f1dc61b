import math

import numpy as np
import pytest

from src.channel import (Alphabet, Dist, JointDist, Kernel, Policy,
                         conditional_mi, conditional_mi_array,
                         decode_context, encode_context, entropy,
                         grad_conditional_mi, joint_from_policy, kl,
                         marginal_context, output_dist, policy_from_joint)
from src.errors import (AbsoluteContinuityViolated, BadSubset,
                        InvalidDistribution, ShapeMismatch)
from src.zoo import (BINARY, bsc_dmc, identity_dmc, maj_z_1d, maj_z_2d,
                     memoryless_lift, random_kernel, uniform_kernel,
                     yprime_asym)


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


IDENTITY = memoryless_lift(identity_dmc(), 1)


class TestDist:
    def test_rejects_negative_and_unnormalized(self):
        with pytest.raises(InvalidDistribution):
            Dist([1.2, -0.2])
        with pytest.raises(InvalidDistribution):
            Dist([0.5, 0.6])

    def test_tolerates_rounding(self):
        Dist([0.5, 0.5 + 5e-10])

    def test_probs_are_read_only(self):
        d = Dist([0.25, 0.75])
        with pytest.raises(ValueError):
            d.probs[0] = 1.0


class TestKernel:
    def test_gamma_is_min_entry(self):
        k = memoryless_lift(np.array([[0.75, 0.25], [0.25, 0.75]]), 1)
        assert k.gamma == pytest.approx(0.25)
        assert k.is_strictly_positive

    def test_row_sum_violation(self):
        table = np.full((2, 2, 2), 0.5)
        table[0, 0] = [0.6, 0.5]
        with pytest.raises(InvalidDistribution):
            Kernel(BINARY, 1, table)

    def test_wrong_size(self):
        with pytest.raises(ShapeMismatch):
            Kernel(BINARY, 2, np.full((2, 2, 2), 0.5))

    def test_context_lookup_uses_first_parent_as_most_significant(self):
        k = maj_z_2d(0.3)
        assert k.context_index((1, 0)) == 2
        assert np.allclose(k.conditional(1, (1, 1)), [0.3, 0.7])


@pytest.mark.parametrize("ctx", [(0,), (1, 0), (2, 1, 0), (1, 1, 1, 0)])
def test_context_encoding_round_trip(ctx):
    index = encode_context(ctx, 3)
    assert decode_context(index, 3, len(ctx)) == ctx


class TestEntropy:
    def test_uniform_binary(self):
        assert entropy(Dist([0.5, 0.5])) == pytest.approx(1.0)

    def test_point_mass(self):
        assert entropy(Dist([1.0, 0.0])) == 0.0

    def test_closed_form(self):
        assert entropy(Dist([0.9, 0.1])) == pytest.approx(h2(0.1), abs=1e-12)
        assert entropy(Dist([0.9, 0.1])) == pytest.approx(0.46899559358928, abs=1e-12)


class TestKL:
    def test_equal(self):
        p = Dist([0.3, 0.7])
        assert kl(p, p) == 0.0

    def test_point_vs_uniform(self):
        assert kl(Dist([1.0, 0.0]), Dist([0.5, 0.5])) == pytest.approx(1.0)

    def test_direct_value(self):
        assert kl(Dist([0.75, 0.25]), Dist([0.5, 0.5])) == pytest.approx(0.18872187554086717, abs=1e-12)

    def test_absolute_continuity(self):
        p, q = Dist([0.5, 0.5]), Dist([1.0, 0.0])
        assert kl(p, q) == math.inf
        with pytest.raises(AbsoluteContinuityViolated):
            kl(p, q, strict=True)


class TestOutputDist:
    def test_identity_uniform(self):
        out = output_dist(JointDist.uniform(BINARY, 1), IDENTITY)
        assert out.allclose(Dist.uniform(2))

    def test_output_independent_of_input(self):
        rng = np.random.default_rng(3)
        joint = JointDist(BINARY, 1, rng.dirichlet(np.ones(4)))
        assert output_dist(joint, uniform_kernel(BINARY, 1)).allclose(Dist.uniform(2))

    def test_maj_z_1d_brute_force(self):
        k = maj_z_1d(0.5)
        expected0 = sum(k.table[x, c, 0] for x in range(2) for c in range(2)) / 4.0
        out = output_dist(JointDist.uniform(BINARY, 1), k)
        assert expected0 == pytest.approx(0.75)
        assert out.probs[0] == pytest.approx(expected0, abs=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            output_dist(JointDist.uniform(BINARY, 2), IDENTITY)


class TestMarginalContext:
    def test_single_parent(self):
        joint = JointDist(BINARY, 1, [0.1, 0.2, 0.3, 0.4])
        assert np.allclose(marginal_context(joint, (1,)).probs, [0.4, 0.6])

    def test_uniform_reordered(self):
        joint = JointDist.uniform(BINARY, 2)
        assert marginal_context(joint, (2, 1)).allclose(Dist.uniform(4))

    def test_asymmetric_table(self):
        pair = np.array([[0.1, 0.2], [0.3, 0.4]])  # P(y1, y2)
        joint = JointDist(BINARY, 2, 0.5 * np.stack([pair.reshape(-1)] * 2))
        assert np.allclose(marginal_context(joint, (1,)).probs, [0.3, 0.7])
        assert np.allclose(marginal_context(joint, (2,)).probs, [0.4, 0.6])
        assert np.allclose(marginal_context(joint, (2, 1)).probs, [0.1, 0.3, 0.2, 0.4])

    @pytest.mark.parametrize("subset", [(), (1, 1), (3,), (0,)])
    def test_bad_subsets(self, subset):
        with pytest.raises(BadSubset):
            marginal_context(JointDist.uniform(BINARY, 2), subset)


class TestConditionalMI:
    def test_identity_uniform(self):
        assert conditional_mi(JointDist.uniform(BINARY, 1), IDENTITY) == pytest.approx(1.0)

    def test_input_independent_kernel(self):
        rng = np.random.default_rng(5)
        joint = JointDist(BINARY, 1, rng.dirichlet(np.ones(4)))
        assert conditional_mi(joint, uniform_kernel(BINARY, 1)) == pytest.approx(0.0, abs=1e-15)

    def test_bsc(self):
        k = memoryless_lift(bsc_dmc(0.1), 1)
        joint = JointDist(BINARY, 1, [0.2, 0.3, 0.2, 0.3])
        assert conditional_mi(joint, k) == pytest.approx(1.0 - h2(0.1), abs=1e-12)

    def test_zero_mass_context_contributes_nothing(self):
        k = maj_z_1d(0.3)
        joint = JointDist(BINARY, 1, [0.5, 0.0, 0.5, 0.0])
        single = k.table[:, 0, :]
        p_y = 0.5 * single[0] + 0.5 * single[1]
        expected = sum(
            0.5 * single[x, y] * math.log2(single[x, y] / p_y[y])
            for x in range(2)
            for y in range(2)
            if single[x, y] > 0
        )
        assert conditional_mi(joint, k) == pytest.approx(expected, abs=1e-12)

    def test_array_form_is_homogeneous(self):
        rng = np.random.default_rng(7)
        k = yprime_asym(0.4)
        probs = rng.dirichlet(np.ones(8)).reshape(2, 4)
        assert conditional_mi_array(3.0 * probs, k.table) == pytest.approx(
            3.0 * conditional_mi_array(probs, k.table)
        )


class TestGradient:
    def test_uniform_output_kernel(self):
        rng = np.random.default_rng(11)
        joint = JointDist(BINARY, 1, rng.dirichlet(np.ones(4)))
        assert np.allclose(grad_conditional_mi(joint, uniform_kernel(BINARY, 1)), 0.0)

    def test_identity_uniform(self):
        grad = grad_conditional_mi(JointDist.uniform(BINARY, 1), IDENTITY)
        assert np.allclose(grad, 1.0)

    @pytest.mark.parametrize("make", [maj_z_1d, maj_z_2d, yprime_asym])
    def test_matches_central_differences(self, make):
        rng = np.random.default_rng(2024)
        step = 1e-6
        for alpha in np.linspace(0.05, 0.95, 7):
            k = make(alpha)
            for _ in range(5):
                probs = rng.dirichlet(np.ones(2 * k.num_contexts)).reshape(2, -1)
                probs = 0.9 * probs + 0.1 / probs.size
                grad = grad_conditional_mi(JointDist(k.alphabet, k.d, probs), k)
                numeric = np.zeros_like(probs)
                for idx in np.ndindex(probs.shape):
                    up, down = probs.copy(), probs.copy()
                    up[idx] += step
                    down[idx] -= step
                    numeric[idx] = (
                        conditional_mi_array(up, k.table) - conditional_mi_array(down, k.table)
                    ) / (2 * step)
                assert np.allclose(grad, numeric, rtol=1e-5, atol=1e-7)


def relabel(k, joint, x_perm, y_perm):
    """Rename input i to x_perm[i] and output j to y_perm[j], contexts included."""
    X, Y, d = k.alphabet.x_size, k.alphabet.y_size, k.d
    xi, yi = np.argsort(x_perm), np.argsort(y_perm)
    table = k.table.reshape((X,) + (Y,) * (d + 1))[xi]
    probs = joint.probs.reshape((X,) + (Y,) * d)[xi]
    for axis in range(1, d + 2):
        table = np.take(table, yi, axis=axis)
    for axis in range(1, d + 1):
        probs = np.take(probs, yi, axis=axis)
    return Kernel(k.alphabet, d, table.reshape(-1)), JointDist(k.alphabet, d, probs.reshape(-1))


class TestInvariants:
    @pytest.mark.parametrize("alphabet, d", [(Alphabet(3, 2), 2), (Alphabet(2, 3), 1)])
    def test_conditional_mi_is_concave(self, alphabet, d):
        rng = np.random.default_rng(3)
        k = random_kernel(alphabet, d, rng)
        size = alphabet.x_size * alphabet.num_contexts(d)
        for _ in range(50):
            p, q = rng.dirichlet(np.ones(size), size=2)
            lam = rng.uniform()
            mixed = conditional_mi(JointDist(alphabet, d, lam * p + (1 - lam) * q), k)
            ends = lam * conditional_mi(JointDist(alphabet, d, p), k) + (1 - lam) * conditional_mi(
                JointDist(alphabet, d, q), k
            )
            assert mixed >= ends - 1e-12

    def test_output_dist_is_linear(self):
        rng = np.random.default_rng(6)
        alphabet = Alphabet(3, 2)
        k = random_kernel(alphabet, 2, rng)
        for _ in range(50):
            p, q = rng.dirichlet(np.ones(12), size=2)
            lam = rng.uniform()
            mixed = output_dist(JointDist(alphabet, 2, lam * p + (1 - lam) * q), k).probs
            ends = lam * output_dist(JointDist(alphabet, 2, p), k).probs + (1 - lam) * output_dist(
                JointDist(alphabet, 2, q), k
            ).probs
            assert np.allclose(mixed, ends, rtol=0.0, atol=1e-12)

    def test_entropy_and_kl_ignore_symbol_names(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            p, q = rng.dirichlet(np.ones(4), size=2)
            perm = rng.permutation(4)
            assert entropy(Dist(p[perm])) == pytest.approx(entropy(Dist(p)), abs=1e-12)
            assert kl(Dist(p[perm]), Dist(q[perm])) == pytest.approx(kl(Dist(p), Dist(q)), abs=1e-12)

    @pytest.mark.parametrize("alphabet, d", [(Alphabet(3, 2), 2), (Alphabet(2, 3), 1)])
    def test_conditional_mi_ignores_symbol_names(self, alphabet, d):
        rng = np.random.default_rng(21)
        size = alphabet.x_size * alphabet.num_contexts(d)
        for _ in range(10):
            k = random_kernel(alphabet, d, rng)
            joint = JointDist(alphabet, d, rng.dirichlet(np.ones(size)))
            k2, joint2 = relabel(k, joint, rng.permutation(alphabet.x_size), rng.permutation(alphabet.y_size))
            assert conditional_mi(joint2, k2) == pytest.approx(conditional_mi(joint, k), abs=1e-12)


class TestPolicies:
    def test_round_trip(self):
        policy = Policy(BINARY, 1, [[0.2, 0.7], [0.8, 0.3]])
        joint = joint_from_policy(policy, Dist([0.4, 0.6]))
        assert np.allclose(joint.probs, [[0.08, 0.42], [0.32, 0.18]])
        assert np.allclose(policy_from_joint(joint).table, policy.table)

    def test_uniform_where_context_has_no_mass(self):
        joint = JointDist(BINARY, 1, [1.0, 0.0, 0.0, 0.0])
        table = policy_from_joint(joint).table
        assert np.allclose(table[:, 1], [0.5, 0.5])
        assert np.allclose(table[:, 0], [1.0, 0.0])

    def test_policy_columns_must_be_distributions(self):
        with pytest.raises(InvalidDistribution):
            Policy(BINARY, 1, [[0.5, 0.5], [0.6, 0.5]])

    def test_alphabet_validation(self):
        with pytest.raises(ShapeMismatch):
            Alphabet(0, 2)
