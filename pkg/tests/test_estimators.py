import itertools

import numpy as np
import pytest

from ecopt import estimators, sampling, theory
from ecopt.problem import solve_reference


def exact_mean_estimate(state, obj, scheme, i, x):
    """Expectation of worker i's estimator over the finite sampling table."""
    if scheme.kind == "full_batch":
        if state.kind == "sgd":
            return obj.worker_grad(i, x)
        return (obj.worker_grad(i, x) - obj.worker_grad(i, state.w_ref)
                + state.cached_full_grads[i])
    acc = np.zeros(obj.d)
    for j in range(obj.m):
        p = scheme.probs[i, j]
        if p == 0:
            continue
        w = scheme.weights[i, j]
        if state.kind == "sgd":
            g = w * obj.sample_grad(i, j, x)
        else:
            g = (w * (obj.sample_grad(i, j, x)
                      - obj.sample_grad(i, j, state.w_ref))
                 + state.cached_full_grads[i])
        acc += p * g
    return acc


class TestEstimate:
    def test_lsvrg_zero_variance_at_reference(self, tiny_obj):
        x0 = np.ones(tiny_obj.d)
        state = estimators.init_estimator("lsvrg", tiny_obj, x0, p=0.5)
        scheme = sampling.make_scheme(
            "uniform", tiny_obj.smoothness(), tiny_obj.n, tiny_obj.m
        )
        rng = np.random.default_rng(0)
        for i in range(tiny_obj.n):
            for _ in range(10):
                g = estimators.estimate(state, tiny_obj, scheme, i, x0, rng)
                np.testing.assert_allclose(
                    g, tiny_obj.worker_grad(i, x0), atol=1e-15
                )

    def test_sgd_full_batch_exact(self, tiny_obj):
        state = estimators.init_estimator("sgd", tiny_obj, np.zeros(tiny_obj.d))
        scheme = sampling.make_scheme("full_batch", None, 0, 0)
        rng = np.random.default_rng(1)
        x = np.array([0.3, -0.7])
        g = estimators.estimate(state, tiny_obj, scheme, 0, x, rng)
        np.testing.assert_array_equal(g, tiny_obj.worker_grad(0, x))

    @pytest.mark.parametrize("kind", ["sgd", "lsvrg"])
    @pytest.mark.parametrize("scheme_kind", ["uniform", "importance"])
    def test_exact_unbiasedness(self, tiny_obj, kind, scheme_kind):
        x0 = np.zeros(tiny_obj.d)
        state = estimators.init_estimator(kind, tiny_obj, x0, p=0.3)
        scheme = sampling.make_scheme(
            scheme_kind, tiny_obj.smoothness(), tiny_obj.n, tiny_obj.m
        )
        rng = np.random.default_rng(2)
        for _ in range(5):
            x = rng.standard_normal(tiny_obj.d)
            for i in range(tiny_obj.n):
                mean = exact_mean_estimate(state, tiny_obj, scheme, i, x)
                np.testing.assert_allclose(
                    mean, tiny_obj.worker_grad(i, x), atol=1e-12
                )

    def test_monte_carlo_unbiasedness(self, tiny_obj):
        state = estimators.init_estimator("sgd", tiny_obj, np.zeros(tiny_obj.d))
        scheme = sampling.make_scheme(
            "uniform", tiny_obj.smoothness(), tiny_obj.n, tiny_obj.m
        )
        rng = np.random.default_rng(3)
        x = np.array([0.5, -0.2])
        trials = 100_000
        draws = np.empty((trials, tiny_obj.d))
        for t in range(trials):
            draws[t] = estimators.estimate(state, tiny_obj, scheme, 0, x, rng)
        target = tiny_obj.worker_grad(0, x)
        se = draws.std(axis=0, ddof=1) / np.sqrt(trials)
        assert np.all(np.abs(draws.mean(axis=0) - target) <= 3 * se + 1e-12)

    def test_stale_cache_detected(self, tiny_obj):
        state = estimators.init_estimator("lsvrg", tiny_obj, np.zeros(tiny_obj.d),
                                          p=0.5)
        scheme = sampling.make_scheme(
            "uniform", tiny_obj.smoothness(), tiny_obj.n, tiny_obj.m
        )
        state.w_ref[0] += 1.0  # external mutation invalidates the cache
        with pytest.raises(RuntimeError, match="stale"):
            estimators.estimate(
                state, tiny_obj, scheme, 0, np.zeros(tiny_obj.d),
                np.random.default_rng(4),
            )


class TestReferenceUpdate:
    def test_p_one_updates_every_round(self, tiny_obj):
        state = estimators.init_estimator("lsvrg", tiny_obj, np.zeros(tiny_obj.d),
                                          p=1.0)
        rng = np.random.default_rng(5)
        for k in range(5):
            x = np.full(tiny_obj.d, float(k))
            assert estimators.maybe_update_reference(state, tiny_obj, x, rng)
            np.testing.assert_array_equal(state.w_ref, x)

    def test_p_zero_never_updates(self, tiny_obj):
        x0 = np.zeros(tiny_obj.d)
        state = estimators.init_estimator("lsvrg", tiny_obj, x0, p=0.0)
        rng = np.random.default_rng(6)
        for _ in range(100):
            assert not estimators.maybe_update_reference(
                state, tiny_obj, np.ones(tiny_obj.d), rng
            )
        np.testing.assert_array_equal(state.w_ref, x0)

    def test_update_frequency_binomial(self, tiny_obj):
        p = 0.1
        state = estimators.init_estimator("lsvrg", tiny_obj, np.zeros(tiny_obj.d),
                                          p=p)
        rng = np.random.default_rng(7)
        rounds = 100_000
        hits = sum(
            estimators.maybe_update_reference(state, tiny_obj, np.zeros(tiny_obj.d),
                                              rng)
            for _ in range(rounds)
        )
        se = np.sqrt(p * (1 - p) / rounds)
        assert abs(hits / rounds - p) <= 3 * se

    def test_full_grad_evals_counter(self, tiny_obj):
        state = estimators.init_estimator("lsvrg", tiny_obj, np.zeros(tiny_obj.d),
                                          p=1.0)
        assert state.full_grad_evals == tiny_obj.n
        estimators.maybe_update_reference(
            state, tiny_obj, np.ones(tiny_obj.d), np.random.default_rng(8)
        )
        assert state.full_grad_evals == 2 * tiny_obj.n


class TestSigmaK:
    def test_sgd_always_zero(self, tiny_obj):
        state = estimators.init_estimator("sgd", tiny_obj, np.zeros(tiny_obj.d))
        assert estimators.sigma_k_sq(state, tiny_obj, 10.0, 0.0) == 0.0

    def test_at_optimum_zero(self, tiny_obj):
        ref = solve_reference(tiny_obj, tol=1e-12, max_iter=100_000)
        state = estimators.init_estimator("lsvrg", tiny_obj, ref.x_star, p=0.5)
        assert estimators.sigma_k_sq(state, tiny_obj, 5.0, ref.f_star) == pytest.approx(
            0.0, abs=1e-20
        )

    def test_definition_after_update(self, tiny_obj):
        ref = solve_reference(tiny_obj, tol=1e-12, max_iter=100_000)
        state = estimators.init_estimator("lsvrg", tiny_obj, np.zeros(tiny_obj.d),
                                          p=1.0)
        x = np.array([0.4, -0.8])
        estimators.maybe_update_reference(state, tiny_obj, x,
                                          np.random.default_rng(9))
        L_exp = 3.7
        expected = 2 * L_exp * (tiny_obj.f_value(x) - ref.f_star)
        assert estimators.sigma_k_sq(state, tiny_obj, L_exp, ref.f_star) \
            == pytest.approx(expected, abs=1e-12)

    def test_recursion_exact_expectation(self, tiny_obj):
        # E_k[sigma_{k+1}^2] = (1-p) sigma_k^2 + 2 p L_exp (f(x^k) - f*)
        ref = solve_reference(tiny_obj, tol=1e-12, max_iter=100_000)
        L_exp = sampling.expected_smoothness(
            sampling.make_scheme("uniform", tiny_obj.smoothness(), tiny_obj.n,
                                 tiny_obj.m),
            tiny_obj.smoothness(),
        )
        p = 0.3
        w_ref = np.array([0.2, 0.7])
        x = np.array([-0.5, 0.9])
        sigma_now = 2 * L_exp * (tiny_obj.f_value(w_ref) - ref.f_star)
        sigma_if_updated = 2 * L_exp * (tiny_obj.f_value(x) - ref.f_star)
        exact_expectation = (1 - p) * sigma_now + p * sigma_if_updated
        formula = (1 - p) * sigma_now + 2 * p * L_exp * (
            tiny_obj.f_value(x) - ref.f_star
        )
        assert exact_expectation == pytest.approx(formula, abs=1e-12)


class TestSecondMomentBound:
    @pytest.mark.parametrize("kind", ["sgd", "lsvrg"])
    def test_assumption_inequality_by_enumeration(self, tiny_obj, kind):
        # exact E_k ||g^k||^2 over all m^n joint draws on an n=2, m=2 instance
        ref = solve_reference(tiny_obj, tol=1e-12, max_iter=200_000)
        smooth = tiny_obj.smoothness()
        scheme = sampling.make_scheme("uniform", smooth, tiny_obj.n, tiny_obj.m)
        L_exp = sampling.expected_smoothness(scheme, smooth)
        L = smooth.global_L
        n = tiny_obj.n
        p_ref = 0.4
        w_ref = np.array([0.3, -0.6])
        state = estimators.init_estimator(kind, tiny_obj, w_ref, p=p_ref)
        if kind == "sgd":
            params = theory.params_ecsgd_as(
                L, L_exp, n, sampling.sigma_star_sq(scheme, tiny_obj, ref.x_star)
            )
            sigma_sq = 0.0
        else:
            params = theory.params_eclsvrg(L, L_exp, n, p_ref)
            sigma_sq = estimators.sigma_k_sq(state, tiny_obj, L_exp, ref.f_star)

        rng = np.random.default_rng(10)
        for _ in range(20):
            x = ref.x_star + rng.standard_normal(tiny_obj.d)
            lhs = 0.0
            for joint in itertools.product(range(tiny_obj.m), repeat=n):
                prob = np.prod([scheme.probs[i, joint[i]] for i in range(n)])
                g = np.zeros(tiny_obj.d)
                for i in range(n):
                    j = joint[i]
                    w = scheme.weights[i, j]
                    if kind == "sgd":
                        g += w * tiny_obj.sample_grad(i, j, x)
                    else:
                        g += (w * (tiny_obj.sample_grad(i, j, x)
                                   - tiny_obj.sample_grad(i, j, w_ref))
                              + state.cached_full_grads[i])
                g /= n
                lhs += prob * float(g @ g)
            rhs = (2 * params.A * (tiny_obj.f_value(x) - ref.f_star)
                   + params.B * sigma_sq + params.D1)
            assert lhs <= rhs + 1e-10
