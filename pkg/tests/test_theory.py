import math

import numpy as np
import pytest

from ecopt import theory


class TestParamSets:
    def test_ecsgd_substitution(self):
        params = theory.params_ecsgd_as(L=1.0, L_exp=2.0, n=4, sigma_star_sq=0.0)
        assert params.A == 2.0
        assert params.D1 == 0.0
        assert params.F == 0.0
        assert params.rho == 1.0

    def test_ecsgd_noise_term(self):
        params = theory.params_ecsgd_as(L=1.0, L_exp=2.0, n=6, sigma_star_sq=3.0)
        assert params.D1 == pytest.approx(1.0)

    def test_eclsvrg_substitution(self):
        n, p = 4, 0.25
        params = theory.params_eclsvrg(L=1.0, L_exp=2.0, n=n, p=p)
        assert params.B == pytest.approx(8 / n)
        assert params.rho == p
        assert params.C == pytest.approx(p * 2.0)
        assert params.F == pytest.approx(32 / (3 * n * p))

    def test_eclsvrg_cap_matches_closed_form(self):
        # A + C F = L + 2 Lexp/n + 32 Lexp/(3n); cap = (4L + 152 Lexp/(3n))^-1
        rng = np.random.default_rng(0)
        for _ in range(100):
            L = float(rng.uniform(0.1, 10))
            L_exp = float(rng.uniform(0.1, 50))
            n = int(rng.integers(1, 40))
            p = float(rng.uniform(0.01, 1.0))
            params = theory.params_eclsvrg(L, L_exp, n, p)
            closed = 1.0 / (4 * L + 152 * L_exp / (3 * n))
            assert params.stepsize_cap == pytest.approx(closed, rel=1e-12)

    def test_eclsvrg_n1_special_case(self):
        # n = 1, p = 1, L_exp = L: A + CF = 3L + 32L/3 = 41L/3
        params = theory.params_eclsvrg(L=1.0, L_exp=1.0, n=1, p=1.0)
        assert params.A + params.C * params.F == pytest.approx(41.0 / 3.0)

    def test_eclsvrg_p_zero_rejected(self):
        with pytest.raises(ValueError):
            theory.params_eclsvrg(1.0, 1.0, 4, 0.0)

    def test_msigma_preset(self):
        params = theory.params_msigma(L=2.0, max_Li=5.0, M=0.0, sigma_sq=0.3,
                                      zeta_star_sq=1.0, n=3)
        assert params.A == 2.0
        assert params.D1 == pytest.approx(0.1)
        params = theory.params_msigma(L=2.0, max_Li=5.0, M=1.0, sigma_sq=0.0,
                                      zeta_star_sq=0.0, n=3)
        assert params.A == pytest.approx(2.0 + 5.0 / 3.0)
        assert params.D1 == 0.0

    def test_F_recomputation_consistency(self):
        params = theory.params_eclsvrg(1.0, 2.0, 4, 0.3)
        assert params.F == 4 * params.B / (3 * params.rho)
        assert params.h == 4 * (params.A + params.C * params.F)


def oracle_stepsize_strongly_convex(h, mu, K, a, c1, c2):
    """Independently re-typed closed-form stepsize (positive constants only)."""
    inner = min(a * mu * mu * K * K / (4 * c1), a * mu**3 * K**3 / (8 * c2))
    return min(1.0 / h, math.log(max(2.0, inner)) / (mu * K))


def oracle_stepsize_convex(h, K, a, b, c1, c2):
    return min(1.0 / h, math.sqrt(a / b), math.sqrt(a / (c1 * K)),
               (a / (c2 * K)) ** (1 / 3))


class TestStepsizes:
    def test_strongly_convex_zero_constants(self):
        h, mu, K = 10.0, 1.0, 100
        gamma = theory.stepsize_strongly_convex(h, mu, K, a=1.0, c1=0.0, c2=0.0)
        assert gamma == pytest.approx(min(1 / h, math.log(2) / (mu * K)))

    def test_strongly_convex_example(self):
        h, mu, K, a, c1 = 10.0, 1.0, 10**6, 1.0, 1.0
        gamma = theory.stepsize_strongly_convex(h, mu, K, a, c1, 0.0)
        expected = min(0.1, math.log(max(2.0, mu**2 * K**2 / 4)) / (mu * K))
        assert gamma == pytest.approx(expected, rel=1e-12)

    def test_strongly_convex_random_tuples_match_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            h = float(rng.uniform(0.5, 100))
            mu = float(rng.uniform(1e-3, 5))
            K = int(rng.integers(1, 10**6))
            a = float(rng.uniform(1e-3, 100))
            c1 = float(rng.uniform(1e-6, 100))
            c2 = float(rng.uniform(1e-6, 100))
            assert theory.stepsize_strongly_convex(h, mu, K, a, c1, c2) \
                == pytest.approx(
                    oracle_stepsize_strongly_convex(h, mu, K, a, c1, c2),
                    rel=1e-12,
                )

    def test_strongly_convex_never_exceeds_cap(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            h = float(rng.uniform(0.5, 100))
            gamma = theory.stepsize_strongly_convex(
                h, 1.0, int(rng.integers(1, 1000)), 1.0,
                float(rng.uniform(0, 2)), float(rng.uniform(0, 2)),
            )
            assert gamma <= 1.0 / h + 1e-15

    def test_convex_zero_constants(self):
        assert theory.stepsize_convex(4.0, 10, a=1.0, b=0.0, c1=0.0, c2=0.0) \
            == pytest.approx(0.25)

    def test_convex_sqrt_term(self):
        gamma = theory.stepsize_convex(0.1, 1, a=1.0, b=4.0, c1=0.0, c2=0.0)
        assert gamma == pytest.approx(0.5)

    def test_convex_random_tuples_match_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            h = float(rng.uniform(0.5, 100))
            K = int(rng.integers(1, 10**6))
            a = float(rng.uniform(1e-3, 100))
            b = float(rng.uniform(1e-6, 100))
            c1 = float(rng.uniform(1e-6, 100))
            c2 = float(rng.uniform(1e-6, 100))
            assert theory.stepsize_convex(h, K, a, b, c1, c2) == pytest.approx(
                oracle_stepsize_convex(h, K, a, b, c1, c2), rel=1e-12
            )


class TestBoundRhs:
    def test_pure_geometric(self):
        params = theory.params_ecsgd_as(1.0, 1.0, 2, 0.0, Delta=0.0, mu=0.5)
        gamma = params.stepsize_cap
        T0 = 4.0
        K = 100
        rhs = theory.bound_rhs(params, gamma, K, T0, mu=0.5)
        eta = min(gamma * 0.5 / 2, 0.25)
        assert rhs == pytest.approx((1 - eta) ** (K + 1) * 2 * T0 / gamma)

    def test_mu_zero_leading_term(self):
        params = theory.params_ecsgd_as(1.0, 1.0, 2, 0.0)
        gamma = params.stepsize_cap
        rhs = theory.bound_rhs(params, gamma, 9, T0=1.0, mu=0.0)
        assert rhs == pytest.approx(2.0 / (gamma * 10))

    def test_large_K_limit(self):
        params = theory.params_ecsgd_as(1.0, 1.0, 2, 1.5, Delta=2.0, mu=0.5)
        gamma = params.stepsize_cap
        limit = 2 * gamma * (params.D1 + 3 * params.L * gamma * params.Delta**2)
        rhs = theory.bound_rhs(params, gamma, 10**6, T0=1.0, mu=0.5)
        assert rhs == pytest.approx(limit, rel=1e-9)

    def test_monotone_in_K(self):
        params = theory.params_eclsvrg(1.0, 2.0, 4, 0.2, Delta=1.0, mu=0.3)
        gamma = params.stepsize_cap
        values = [theory.bound_rhs(params, gamma, K, T0=5.0, mu=0.3)
                  for K in (1, 10, 100, 1000, 10_000)]
        assert all(v2 <= v1 + 1e-15 for v1, v2 in zip(values, values[1:]))

    def test_gamma_over_cap_rejected(self):
        params = theory.params_ecsgd_as(1.0, 1.0, 2, 0.0)
        with pytest.raises(ValueError):
            theory.bound_rhs(params, params.stepsize_cap * 2, 10, 1.0, 0.1)

    def test_initial_potential(self):
        params = theory.params_eclsvrg(1.0, 2.0, 4, 0.5)
        T0 = theory.initial_potential(params, gamma=0.1, dist0_sq=2.0,
                                      sigma0_sq=3.0)
        assert T0 == pytest.approx(2.0 + params.F * 0.01 * 3.0)


class TestLambdaRule:
    def test_direct_evaluation(self):
        eps, d, gamma, alpha = 1e-3, 123, 0.27, 5000.0
        lam = theory.ht_lambda_rule(eps, d, gamma, alpha)
        assert lam == pytest.approx(alpha * math.sqrt(eps / (d**2 * gamma)))

    def test_linearity_in_alpha(self):
        base = theory.ht_lambda_rule(1e-3, 50, 0.1, 5000)
        assert theory.ht_lambda_rule(1e-3, 50, 0.1, 10000) == pytest.approx(2 * base)

    def test_zero_epsilon_degenerates(self):
        assert theory.ht_lambda_rule(0.0, 10, 0.1) == 0.0
