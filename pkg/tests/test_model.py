"""Likelihood calculus: parameterization, gradient, Hessian, information."""

import numpy as np
import pytest

from ricf import (
    ErrorCovariance,
    MixedGraph,
    NotPositiveDefiniteError,
    ParameterVectorization,
    PathCoefficients,
    ShapeError,
    conditional_regression,
    fisher_information,
    hessian,
    implied_covariance,
    log_likelihood,
    quartet_constraint_residual,
    score,
)
from ricf.errors import ModelMismatchError
from ricf.simulate import sample_mvn

from conftest import (
    fd_gradient,
    loglik_of_theta,
    random_instance,
    random_spd,
    score_of_theta,
)


class TestParameterContainers:
    def test_support_enforced_on_b(self, quartet):
        bad = np.zeros((4, 4))
        bad[0, 3] = 1.0  # no edge 3 -> 0
        with pytest.raises(ShapeError):
            PathCoefficients(quartet, bad)

    def test_support_enforced_on_omega(self, quartet):
        bad = np.eye(4)
        bad[0, 1] = bad[1, 0] = 0.3  # no edge 0 <-> 1
        with pytest.raises(ShapeError):
            ErrorCovariance(quartet, bad)

    def test_omega_must_be_pd(self, quartet):
        om = np.eye(4)
        om[1, 3] = om[3, 1] = 1.5  # breaks positive definiteness
        with pytest.raises(NotPositiveDefiniteError):
            ErrorCovariance(quartet, om)

    def test_omega_must_be_symmetric(self, quartet):
        om = np.eye(4)
        om[1, 3] = 0.2
        with pytest.raises(ShapeError):
            ErrorCovariance(quartet, om)

    def test_values_read_only(self, quartet):
        b = PathCoefficients(quartet, np.zeros((4, 4)))
        with pytest.raises(ValueError):
            b.values[0, 0] = 1.0

    def test_vectorization_enumerates_free_entries(self, quartet):
        vec = ParameterVectorization(quartet)
        assert vec.beta_index == [(1, 0), (2, 0), (2, 1), (3, 2)]
        assert vec.omega_index == [(0, 0), (1, 1), (1, 3), (2, 2), (3, 3)]
        theta = np.arange(1.0, 10.0)
        b, o = vec.unpack(theta)
        assert np.array_equal(vec.pack(b, o), theta)


class TestImpliedCovariance:
    def test_no_directed_edges(self):
        g = MixedGraph(2)
        o = ErrorCovariance(g, np.diag([2.0, 3.0]))
        b = PathCoefficients(g, np.zeros((2, 2)))
        assert np.allclose(implied_covariance(b, o), np.diag([2.0, 3.0]))

    def test_two_chain(self):
        g = MixedGraph(2, directed=[(0, 1)])
        b = PathCoefficients(g, np.array([[0.0, 0.0], [2.0, 0.0]]))
        o = ErrorCovariance(g, np.eye(2))
        assert np.allclose(implied_covariance(b, o),
                           np.array([[1.0, 2.0], [2.0, 5.0]]))

    def test_matches_inverse_product_oracle(self, quartet):
        bmat = np.zeros((4, 4))
        for j, i in quartet.directed:
            bmat[i, j] = 1.0
        om = np.eye(4)
        om[1, 3] = om[3, 1] = 0.5
        b = PathCoefficients(quartet, bmat)
        o = ErrorCovariance(quartet, om)
        ainv = np.linalg.inv(np.eye(4) - bmat)
        oracle = ainv @ om @ ainv.T
        assert np.allclose(implied_covariance(b, o), oracle, atol=1e-12)

    def test_result_is_pd(self):
        for seed in range(5):
            g, b, o = random_instance(seed, p=6)
            np.linalg.cholesky(implied_covariance(b, o))

    def test_graph_mismatch(self, quartet, sur_graph):
        b = PathCoefficients(quartet, np.zeros((4, 4)))
        o = ErrorCovariance(sur_graph, np.eye(5))
        with pytest.raises(ModelMismatchError):
            implied_covariance(b, o)


class TestLogLikelihood:
    def test_identity_inputs(self):
        g = MixedGraph(3)
        b = PathCoefficients(g, np.zeros((3, 3)))
        o = ErrorCovariance(g, np.eye(3))
        assert log_likelihood(b, o, np.eye(3), 2) == pytest.approx(-3.0)

    def test_saturated_value(self):
        rng = np.random.default_rng(1)
        p, n = 4, 10
        s = random_spd(rng, p)
        g = MixedGraph(p, bidirected=[(i, j) for i in range(p)
                                      for j in range(i + 1, p)])
        b = PathCoefficients(g, np.zeros((p, p)))
        o = ErrorCovariance(g, s)
        expected = -0.5 * n * (np.linalg.slogdet(s)[1] + p)
        assert log_likelihood(b, o, s, n) == pytest.approx(expected)

    def test_linear_in_n(self, quartet):
        rng = np.random.default_rng(2)
        s = random_spd(rng, 4)
        b = PathCoefficients(quartet, np.zeros((4, 4)))
        om = np.eye(4)
        om[1, 3] = om[3, 1] = 0.2
        o = ErrorCovariance(quartet, om)
        assert log_likelihood(b, o, s, 20) == pytest.approx(
            2 * log_likelihood(b, o, s, 10))


class TestScore:
    def test_saturated_stationarity(self):
        rng = np.random.default_rng(3)
        p = 3
        s = random_spd(rng, p)
        g = MixedGraph(p, bidirected=[(i, j) for i in range(p)
                                      for j in range(i + 1, p)])
        b = PathCoefficients(g, np.zeros((p, p)))
        o = ErrorCovariance(g, s)
        assert np.max(np.abs(score(b, o, s, 7))) < 1e-10

    def test_dag_ols_stationarity(self):
        from ricf import dag_starting_values
        rng = np.random.default_rng(4)
        g = MixedGraph(4, directed=[(0, 1), (0, 2), (1, 2), (2, 3)])
        s = random_spd(rng, 4)
        b, o = dag_starting_values(g, s)
        assert np.max(np.abs(score(b, o, s, 11))) < 1e-9

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_finite_differences(self, seed):
        g, b, o = random_instance(seed, p=5)
        rng = np.random.default_rng(seed + 100)
        s = random_spd(rng, 5)
        n = 37
        vec = ParameterVectorization(g)
        theta = vec.pack(b.values, o.values)
        fd = fd_gradient(loglik_of_theta(g, vec, s, n), theta)
        got = score(b, o, s, n, vec)
        np.testing.assert_allclose(got, fd, rtol=1e-6, atol=1e-6)


class TestHessian:
    def test_single_vertex_closed_form(self):
        g = MixedGraph(1)
        omega, s, n = 1.7, 2.3, 9
        b = PathCoefficients(g, np.zeros((1, 1)))
        o = ErrorCovariance(g, np.array([[omega]]))
        h = hessian(b, o, np.array([[s]]), n)
        expected = -0.5 * n * (2 * s / omega ** 3 - 1 / omega ** 2)
        assert h[0, 0] == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_fd_of_score(self, seed):
        g, b, o = random_instance(seed + 20, p=4)
        rng = np.random.default_rng(seed + 300)
        s = random_spd(rng, 4)
        n = 23
        vec = ParameterVectorization(g)
        theta = vec.pack(b.values, o.values)
        sf = score_of_theta(g, vec, s, n)
        fd = np.column_stack([
            fd_gradient(lambda t, k=k: sf(t)[k], theta)
            for k in range(vec.size)
        ]).T
        got = hessian(b, o, s, n, vec)
        scale = np.max(np.abs(got))
        np.testing.assert_allclose(got, fd, rtol=1e-4, atol=1e-4 * scale)

    @pytest.mark.parametrize("seed", range(4))
    def test_fisher_identity_at_model_covariance(self, seed):
        g, b, o = random_instance(seed + 40, p=5)
        sigma = implied_covariance(b, o)
        n = 13
        h = hessian(b, o, sigma, n)
        info = fisher_information(b, o)
        np.testing.assert_allclose(-h / n, info.matrix, rtol=1e-10,
                                   atol=1e-10)

    def test_symmetric(self):
        g, b, o = random_instance(60, p=5)
        rng = np.random.default_rng(61)
        s = random_spd(rng, 5)
        h = hessian(b, o, s, 8)
        np.testing.assert_allclose(h, h.T, atol=1e-12)


class TestFisherInformation:
    def test_edgeless_graph_diag(self):
        g = MixedGraph(3)
        b = PathCoefficients(g, np.zeros((3, 3)))
        o = ErrorCovariance(g, np.diag([1.0, 2.0, 4.0]))
        info = fisher_information(b, o)
        assert info.beta_beta.shape == (0, 0)
        assert np.allclose(info.omega_omega,
                           np.diag([0.5, 1 / 8, 1 / 32]))

    def test_sur_beta_omega_block_zero(self, sur_graph):
        from ricf.simulate import random_parameters
        b, o = random_parameters(sur_graph, seed=7)
        info = fisher_information(b, o)
        assert np.max(np.abs(info.beta_omega)) <= 1e-12

    def test_quartet_beta_omega_block_nonzero(self, quartet):
        from ricf.simulate import random_parameters
        b, o = random_parameters(quartet, seed=8)
        info = fisher_information(b, o)
        assert np.max(np.abs(info.beta_omega)) > 1e-3

    def test_psd(self):
        g, b, o = random_instance(70, p=6)
        info = fisher_information(b, o)
        eigvals = np.linalg.eigvalsh(info.matrix)
        assert eigvals.min() > -1e-10

    @pytest.mark.slow
    def test_score_covariance_monte_carlo(self):
        """Empirical covariance of the score over simulated data equals
        n times the information, to sampling error."""
        g = MixedGraph(3, directed=[(0, 1)], bidirected=[(1, 2)])
        from ricf.simulate import random_parameters
        b, o = random_parameters(g, seed=9)
        sigma = implied_covariance(b, o)
        vec = ParameterVectorization(g)
        n, reps = 25, 10_000
        rng_seeds = np.random.SeedSequence(10).spawn(reps)
        scores = np.empty((reps, vec.size))
        for r in range(reps):
            y = sample_mvn(sigma, n, seed=rng_seeds[r]).values
            s = y @ y.T / n
            scores[r] = score(b, o, s, n, vec)
        emp = np.cov(scores.T, bias=True)
        expected = n * fisher_information(b, o, vec).matrix
        diag_emp = np.diag(emp)
        diag_exp = np.diag(expected)
        assert np.all(np.abs(diag_emp - diag_exp) <= 0.05 * diag_exp)


class TestConditionalRegression:
    def test_identity_covariance(self):
        coef, var = conditional_regression(np.eye(3), 0, [1, 2])
        assert np.allclose(coef, 0.0)
        assert var == pytest.approx(1.0)

    def test_univariate(self):
        sigma = np.array([[2.0, 0.8], [0.8, 1.5]])
        coef, var = conditional_regression(sigma, 0, [1])
        assert coef[0] == pytest.approx(0.8 / 1.5)
        assert var == pytest.approx(2.0 - 0.8 ** 2 / 1.5)

    def test_response_in_covariates_rejected(self):
        with pytest.raises(ValueError):
            conditional_regression(np.eye(3), 1, [1, 2])

    def test_singular_block_rejected(self):
        sigma = np.ones((3, 3))
        with pytest.raises(NotPositiveDefiniteError):
            conditional_regression(sigma, 0, [1, 2])

    @pytest.mark.parametrize("seed", range(4))
    def test_trial_model_adjusted_coefficients(self, trial_graph, seed):
        """Regressing the outcome on the two randomized treatments gives
        coefficients shifted by the confounding term; the closed forms
        are reproduced from the model covariance."""
        rng = np.random.default_rng(seed + 500)
        beta1, gamma1, gamma2, delta1, delta2 = rng.standard_normal(5)
        s_ex, s_bp, s_bmi, s_y = rng.uniform(0.5, 2.0, size=4)
        s_bpy = rng.uniform(-0.4, 0.4) * np.sqrt(s_bp * s_y)

        bmat = np.zeros((4, 4))
        bmat[1, 0] = beta1
        bmat[2, 0] = gamma1
        bmat[2, 1] = gamma2
        bmat[3, 0] = delta1
        bmat[3, 2] = delta2
        om = np.diag([s_ex, s_bp, s_bmi, s_y])
        om[1, 3] = om[3, 1] = s_bpy
        b = PathCoefficients(trial_graph, bmat)
        o = ErrorCovariance(trial_graph, om)
        sigma = implied_covariance(b, o)

        denom = gamma2 ** 2 * s_bp + s_bmi
        expected1 = delta1 - gamma2 * s_bpy * (beta1 * gamma2 + gamma1) / denom
        expected2 = delta2 + gamma2 * s_bpy / denom
        coef, _ = conditional_regression(sigma, 3, [0, 2])
        assert coef[0] == pytest.approx(expected1, abs=1e-10)
        assert coef[1] == pytest.approx(expected2, abs=1e-10)

        # conditioning on all three: outcome coefficient on the second
        # treatment is unbiased, on the first it shifts by the
        # confounding regression
        coef3, _ = conditional_regression(sigma, 3, [0, 1, 2])
        assert coef3[2] == pytest.approx(delta2, abs=1e-10)
        assert coef3[0] == pytest.approx(delta1 - beta1 * s_bpy / s_bp,
                                         abs=1e-10)


class TestQuartetConstraint:
    def test_identity_satisfies(self):
        assert quartet_constraint_residual(np.eye(4)) == pytest.approx(0.0)

    def test_model_covariances_satisfy(self, quartet):
        from ricf.simulate import random_parameters
        for seed in range(5):
            b, o = random_parameters(quartet, seed=seed)
            sigma = implied_covariance(b, o)
            bound = 1e-10 * np.linalg.norm(sigma) ** 2
            assert abs(quartet_constraint_residual(sigma)) <= bound

    def test_generic_covariance_violates(self):
        rng = np.random.default_rng(11)
        sigma = random_spd(rng, 4)
        assert abs(quartet_constraint_residual(sigma)) > 1e-4

    def test_shape_checked(self):
        with pytest.raises(ShapeError):
            quartet_constraint_residual(np.eye(3))
