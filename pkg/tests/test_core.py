import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eclasso.core import (
    RegressionInstance,
    gram,
    noise_score,
    objective,
    partition_gram,
    vn_decomposition,
    vn_value,
)
from eclasso.exceptions import DegeneratePartitionError, InvalidInputError, MissingGroundTruthError
from eclasso.solver import solve_lasso


def naive_gram(X):
    n, p = X.shape
    C = np.zeros((p, p))
    for a in range(p):
        for b in range(p):
            s = 0.0
            for i in range(n):
                s += X[i, a] * X[i, b]
            C[a, b] = s / n
    return C


def synthetic(rng, n=30, p=6, q=2):
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:q] = rng.uniform(1, 3, q) * rng.choice([-1, 1], q)
    eps = rng.standard_normal(n)
    return RegressionInstance(X=X, y=X @ beta + eps, beta_true=beta, noise=eps)


class TestGram:
    def test_identity(self):
        np.testing.assert_array_equal(gram(np.eye(3)), np.eye(3) / 3)

    def test_ones_column(self):
        assert gram(np.ones((7, 1))).tolist() == [[1.0]]

    def test_matches_double_loop(self):
        X = np.random.default_rng(1).standard_normal((50, 10))
        np.testing.assert_allclose(gram(X), naive_gram(X), atol=1e-12, rtol=0)

    def test_non_finite_rejected(self):
        X = np.ones((3, 2))
        X[1, 1] = np.nan
        with pytest.raises(InvalidInputError):
            gram(X)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 40), st.integers(1, 12), st.integers(0, 2**32 - 1))
    def test_symmetric_psd(self, n, p, seed):
        C = gram(np.random.default_rng(seed).standard_normal((n, p)))
        assert np.max(np.abs(C - C.T)) == 0.0
        assert np.linalg.eigvalsh(C).min() >= -1e-10


class TestPartition:
    def test_identity_blocks(self):
        part = partition_gram(np.eye(4), [0, 1])
        np.testing.assert_array_equal(part.C11, np.eye(2))
        np.testing.assert_array_equal(part.C12, np.zeros((2, 2)))

    def test_example1_population(self):
        # population covariance of (X1, X2, 2/3 X1 + 2/3 X2 + 1/3 e)
        C = np.array([[1, 0, 2 / 3], [0, 1, 2 / 3], [2 / 3, 2 / 3, 1]])
        part = partition_gram(C, [0, 1])
        np.testing.assert_allclose(part.C11, np.eye(2))
        np.testing.assert_allclose(part.C12.ravel(), [2 / 3, 2 / 3])

    def test_example1_population_by_monte_carlo(self):
        rng = np.random.default_rng(5)
        n = 100_000
        X1, X2, e = rng.standard_normal((3, n))
        X = np.column_stack([X1, X2, 2 / 3 * X1 + 2 / 3 * X2 + e / 3])
        part = partition_gram(gram(X), [0, 1])
        np.testing.assert_allclose(part.C11, np.eye(2), atol=0.01)
        np.testing.assert_allclose(part.C12.ravel(), [2 / 3, 2 / 3], atol=0.01)

    def test_arbitrary_support_matches_explicit_permutation(self):
        C = gram(np.random.default_rng(2).standard_normal((20, 4)))
        part = partition_gram(C, [1, 2])
        P = np.zeros((4, 4))
        for row, col in enumerate([1, 2, 0, 3]):
            P[row, col] = 1.0
        Cp = P @ C @ P.T
        np.testing.assert_array_equal(part.C11, Cp[:2, :2])
        np.testing.assert_array_equal(part.C12, Cp[:2, 2:])
        np.testing.assert_array_equal(part.C22, Cp[2:, 2:])
        np.testing.assert_array_equal(part.perm, [1, 2, 0, 3])

    def test_round_trip_and_transpose(self):
        C = gram(np.random.default_rng(3).standard_normal((15, 7)))
        part = partition_gram(C, [0, 3, 5])
        np.testing.assert_array_equal(part.assemble(), C[np.ix_(part.perm, part.perm)])
        np.testing.assert_array_equal(part.C21, part.C12.T)

    @pytest.mark.parametrize("S", [[], [0, 1, 2]])
    def test_degenerate(self, S):
        with pytest.raises(DegeneratePartitionError):
            partition_gram(np.eye(3), S)


class TestNoiseScore:
    def test_zero_noise(self):
        X = np.random.default_rng(0).standard_normal((9, 4))
        np.testing.assert_array_equal(noise_score(X, np.zeros(9)), np.zeros(4))

    def test_identity_design(self):
        eps = np.arange(1.0, 5.0)
        np.testing.assert_allclose(noise_score(np.eye(4), eps), eps / 2.0)

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            noise_score(np.ones((3, 2)), np.ones(4))

    def test_variance_by_monte_carlo(self):
        rng = np.random.default_rng(11)
        n, p, sigma = 40, 3, 1.5
        X = rng.standard_normal((n, p))
        W = np.array([noise_score(X, sigma * rng.standard_normal(n)) for _ in range(10_000)])
        expected = sigma**2 * np.einsum("ij,ij->j", X, X) / n
        np.testing.assert_allclose(W.var(axis=0), expected, rtol=0.05)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**32 - 1))
    def test_linearity(self, a, b, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((12, 5))
        e1, e2 = rng.standard_normal((2, 12))
        lhs = noise_score(X, a * e1 + b * e2)
        rhs = a * noise_score(X, e1) + b * noise_score(X, e2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestObjective:
    def test_zero_beta(self):
        y = np.array([1.0, -2.0, 3.0])
        assert objective(np.ones((3, 2)), y, np.zeros(2), 4.0) == pytest.approx(7.0)

    def test_ols_at_zero_lambda(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((30, 4))
        y = rng.standard_normal(30)
        b, rss, *_ = np.linalg.lstsq(X, y, rcond=None)
        assert objective(X, y, b, 0.0) == pytest.approx(0.5 * rss[0])

    def test_linear_in_lambda(self):
        rng = np.random.default_rng(6)
        X, y, b = rng.standard_normal((10, 3)), rng.standard_normal(10), rng.standard_normal(3)
        diff = objective(X, y, b, 2.0) - objective(X, y, b, 1.0)
        assert diff == pytest.approx(np.abs(b).sum(), rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            objective(np.ones((3, 2)), np.ones(3), np.ones(3), 1.0)


class TestVn:
    def test_zero_at_truth(self):
        inst = synthetic(np.random.default_rng(0))
        assert vn_value(inst, inst.beta_true, 3.0) == 0.0
        assert vn_decomposition(inst, inst.beta_true, 3.0) == (0.0, 0.0, 0.0)

    def test_nonpositive_at_minimiser(self):
        inst = synthetic(np.random.default_rng(1))
        lam = 5.0
        fit = solve_lasso(inst.X, inst.y, lam)
        assert vn_value(inst, fit.beta_hat, lam) <= 1e-9

    def test_decomposition_identity(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            inst = synthetic(rng, n=int(rng.integers(5, 40)), p=int(rng.integers(2, 8)), q=1)
            beta = inst.beta_true + rng.standard_normal(inst.p) * rng.uniform(0.01, 2)
            lam = rng.uniform(0, 20)
            direct = vn_value(inst, beta, lam)
            total = sum(vn_decomposition(inst, beta, lam))
            assert abs(total - direct) <= 1e-8 * (1 + abs(direct))

    def test_missing_ground_truth(self):
        inst = RegressionInstance(X=np.eye(3), y=np.ones(3))
        with pytest.raises(MissingGroundTruthError):
            vn_value(inst, np.zeros(3), 1.0)


def test_instance_invariants():
    inst = synthetic(np.random.default_rng(8), n=25, p=5, q=3)
    assert inst.support_true.tolist() == np.flatnonzero(inst.beta_true).tolist()
    np.testing.assert_allclose(inst.y, inst.X @ inst.beta_true + inst.noise, atol=1e-12)
    with pytest.raises(ValueError):
        inst.X[0, 0] = 1.0
    with pytest.raises(InvalidInputError):
        RegressionInstance(X=np.ones((3, 2)), y=np.ones(4))
