"""Parameter calculus for the unified convergence analysis.

Each method maps to a parameter set (A, B, C, D1, D2, rho) of the key
second-moment assumption; from those the stepsize caps, the horizon-dependent
stepsize rules, and the non-asymptotic convergence-bound right-hand sides
are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class TheoryParams:
    A: float
    B: float
    C: float
    D1: float
    D2: float
    rho: float
    Delta: float = 0.0
    mu: float = 0.0
    L: float = 0.0
    L_exp: float = 0.0  # expected-smoothness constant of the sampling scheme

    def __post_init__(self):
        for name in ("A", "B", "C", "D1", "D2", "Delta", "mu", "L", "L_exp"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError("rho must be in (0, 1]")

    @property
    def F(self) -> float:
        return 4.0 * self.B / (3.0 * self.rho)

    @property
    def h(self) -> float:
        """Inverse stepsize cap: the analysis needs gamma <= 1/h = 1/(4(A+CF))."""
        return 4.0 * (self.A + self.C * self.F)

    @property
    def stepsize_cap(self) -> float:
        return 1.0 / self.h


def params_ecsgd_as(
    L: float, L_exp: float, n: int, sigma_star_sq: float,
    Delta: float = 0.0, mu: float = 0.0,
) -> TheoryParams:
    """EC-SGD with arbitrary sampling: A = L + 2 L_exp / n, D1 = 2 sigma*^2 / n."""
    return TheoryParams(
        A=L + 2.0 * L_exp / n,
        B=0.0,
        C=0.0,
        D1=2.0 * sigma_star_sq / n,
        D2=0.0,
        rho=1.0,
        Delta=Delta,
        mu=mu,
        L=L,
        L_exp=L_exp,
    )


def params_eclsvrg(
    L: float, L_exp: float, n: int, p: float,
    Delta: float = 0.0, mu: float = 0.0,
) -> TheoryParams:
    """EC-LSVRG: A = L + 2 L_exp/n, B = 8/n, C = p L_exp, rho = p, noises zero.

    B = 8/n is the conservative variance constant consistent with the
    published stepsize cap (4L + 152 L_exp/(3n))^{-1}; the tighter 2/n that
    the variance decomposition yields would shrink that cap's 152/3 to 56/3.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    return TheoryParams(
        A=L + 2.0 * L_exp / n,
        B=8.0 / n,
        C=p * L_exp,
        D1=0.0,
        D2=0.0,
        rho=p,
        Delta=Delta,
        mu=mu,
        L=L,
        L_exp=L_exp,
    )


def params_msigma(
    L: float, max_Li: float, M: float, sigma_sq: float, zeta_star_sq: float, n: int,
    Delta: float = 0.0, mu: float = 0.0,
) -> TheoryParams:
    """Calculator preset for the (M, sigma^2)-bounded-noise setting.

    No estimator in this package implements that noise model; the preset
    exists so its rate can be tabulated next to the others.
    """
    return TheoryParams(
        A=L + M * max_Li / n,
        B=0.0,
        C=0.0,
        D1=(2.0 * M * zeta_star_sq + sigma_sq) / n,
        D2=0.0,
        rho=1.0,
        Delta=Delta,
        mu=mu,
        L=L,
    )


def stepsize_strongly_convex(
    h: float, mu: float, K: int, a: float, c1: float, c2: float
) -> float:
    """gamma = min{1/h, ln(max{2, min{a mu^2 K^2/(4 c1), a mu^3 K^3/(8 c2)}})/(mu K)}.

    Terms with a zero constant in the denominator are dropped from the
    inner min; with both dropped the max saturates at 2.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if K < 1:
        raise ValueError("K must be >= 1")
    terms = []
    if c1 > 0:
        terms.append(a * mu**2 * K**2 / (4.0 * c1))
    if c2 > 0:
        terms.append(a * mu**3 * K**3 / (8.0 * c2))
    inner = max(2.0, min(terms)) if terms else 2.0
    return min(1.0 / h, math.log(inner) / (mu * K))


def stepsize_convex(h: float, K: int, a: float, b: float, c1: float, c2: float) -> float:
    """gamma = min{1/h, sqrt(a/b), sqrt(a/(c1 K)), cbrt(a/(c2 K))}.

    Zero-denominator terms are dropped (their limit is +inf).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    candidates = [1.0 / h]
    if b > 0:
        candidates.append(math.sqrt(a / b))
    if c1 > 0:
        candidates.append(math.sqrt(a / (c1 * K)))
    if c2 > 0:
        candidates.append((a / (c2 * K)) ** (1.0 / 3.0))
    return min(candidates)


def bound_rhs(params: TheoryParams, gamma: float, K: int, T0: float, mu: float) -> float:
    """Right-hand side of the non-asymptotic convergence bound.

    mu > 0: (1-eta)^{K+1} 2 T0 / gamma + 2 gamma (D1 + F D2 + 3 L gamma Delta^2)
    mu = 0: 2 T0 / (gamma (K+1)) + the same additive term.
    The geometric factor is evaluated in log space.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if gamma > params.stepsize_cap * (1.0 + 1e-12):
        raise ValueError(
            f"gamma {gamma:g} exceeds stepsize cap {params.stepsize_cap:g}; "
            "the bound does not apply"
        )
    additive = 2.0 * gamma * (
        params.D1 + params.F * params.D2 + 3.0 * params.L * gamma * params.Delta**2
    )
    if mu > 0:
        eta = min(gamma * mu / 2.0, params.rho / 4.0)
        lead = math.exp((K + 1) * math.log1p(-eta)) * 2.0 * T0 / gamma
    else:
        lead = 2.0 * T0 / (gamma * (K + 1))
    return lead + additive


def initial_potential(params: TheoryParams, gamma: float,
                      dist0_sq: float, sigma0_sq: float) -> float:
    """T0 = ||x0 - x*||^2 + F gamma^2 sigma_0^2."""
    return dist0_sq + params.F * gamma**2 * sigma0_sq


def t0_hat_diagnostic(params: TheoryParams, dist0_sq: float, sigma0_sq: float) -> float:
    """Asymptotic-rate potential R0^2 + F sigma_0^2 / (16 (A + C F)^2).

    Appears only inside asymptotic rates; surfaced as a diagnostic, never
    asserted against.
    """
    denom = 16.0 * (params.A + params.C * params.F) ** 2
    return dist0_sq + params.F * sigma0_sq / denom


def ht_lambda_rule(
    epsilon: float, d: int, gamma: float, alpha: float = 5000.0
) -> float:
    """Hard-threshold level alpha * sqrt(epsilon / (d^2 gamma)).

    epsilon = 0 degenerates to the identity compressor (lambda = 0).
    """
    if d <= 0 or gamma <= 0 or alpha < 0 or epsilon < 0:
        raise ValueError("inputs must be positive (epsilon, alpha may be zero)")
    return alpha * math.sqrt(epsilon / (d**2 * gamma))
