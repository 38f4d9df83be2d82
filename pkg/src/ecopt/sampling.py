"""Per-worker sampling distributions for the stochastic reformulation.

A scheme stores, per worker, a probability table p_ij and multiplier table
w_ij so that drawing sample j yields the stochastic gradient
w_ij * grad f_ij(x).  Unbiasedness requires p_ij * w_ij = 1/m for the
single-index schemes implemented here (uniform and importance); full-batch
is the deterministic degenerate case.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ecopt.problem import SmoothnessInfo

KINDS = ("uniform", "importance", "full_batch")

# sentinel drawn index for the deterministic full-batch scheme
FULL_BATCH = -1


@dataclass(frozen=True)
class SamplingScheme:
    kind: str
    probs: np.ndarray | None  # (n, m); None for full_batch
    weights: np.ndarray | None  # (n, m); None for full_batch
    _cdf: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.probs.shape[0] if self.probs is not None else 0


def make_scheme(kind: str, smooth: SmoothnessInfo, n: int, m: int) -> SamplingScheme:
    if kind == "full_batch":
        return SamplingScheme("full_batch", None, None)
    if kind == "uniform":
        probs = np.full((n, m), 1.0 / m)
        weights = np.ones((n, m))
    elif kind == "importance":
        per_sample = smooth.per_sample
        if per_sample.shape != (n, m):
            raise ValueError("smoothness table shape mismatch")
        probs = np.empty((n, m))
        weights = np.empty((n, m))
        for i in range(n):
            row = per_sample[i]
            total = row.sum()
            if total == 0:
                raise ValueError(
                    f"worker {i}: all per-sample smoothness constants are zero"
                )
            # L_ij = 0 means the summand is constant (zero gradient), so it
            # may safely receive zero probability; the multiplier is unused.
            probs[i] = row / total
            nz = row > 0
            weights[i, nz] = 1.0 / (m * probs[i, nz])
            weights[i, ~nz] = 0.0
    else:
        raise ValueError(f"unknown sampling kind {kind!r}")
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    return SamplingScheme(kind, probs, weights, cdf)


def draw(scheme: SamplingScheme, i: int, rng: np.random.Generator) -> tuple[int, float]:
    """Draw (sample index, multiplier) for worker i via inverse CDF."""
    if scheme.kind == "full_batch":
        return FULL_BATCH, 1.0
    u = rng.random()
    j = int(np.searchsorted(scheme._cdf[i], u, side="right"))
    j = min(j, scheme.probs.shape[1] - 1)
    return j, float(scheme.weights[i, j])


def expected_smoothness(scheme: SamplingScheme, smooth: SmoothnessInfo) -> float:
    """The closed-form expected-smoothness constant for each scheme.

    uniform: max_ij L_ij; importance: max_i mean_j L_ij; full-batch: the
    largest local full-gradient smoothness constant.
    """
    if scheme.kind == "uniform":
        return float(smooth.per_sample.max())
    if scheme.kind == "importance":
        return float(smooth.per_worker_mean.max())
    if scheme.kind == "full_batch":
        return float(smooth.per_worker.max())
    raise AssertionError(scheme.kind)


def sigma_star_sq(scheme: SamplingScheme, obj, x_star: np.ndarray) -> float:
    """Average sampling variance at the optimum (exact, no Monte-Carlo).

    (1/n) sum_i sum_j p_ij ||w_ij grad f_ij(x*) - grad f_i(x*)||^2; zero for
    full-batch and for m = 1.
    """
    if scheme.kind == "full_batch":
        return 0.0
    total = 0.0
    for i in range(obj.n):
        gi = obj.worker_grad(i, x_star)
        for j in range(obj.m):
            p = scheme.probs[i, j]
            if p == 0.0:
                continue
            diff = scheme.weights[i, j] * obj.sample_grad(i, j, x_star) - gi
            total += p * float(diff @ diff)
    return total / obj.n
