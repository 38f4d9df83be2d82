"""Distributed finite-sum objectives and their smoothness constants.

The main objective is l2-regularized logistic regression split across n
workers with m samples each; a simple quadratic is provided for engine
tests.  All operations are pure and the objective objects are immutable,
so they can be shared freely between simulated workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from ecopt.data import WorkerShard


class UnconvergedError(RuntimeError):
    """Reference solver hit its iteration cap; carries the best iterate."""

    def __init__(self, result: "ReferenceSolution"):
        self.result = result
        super().__init__(
            f"reference solver stopped at grad norm {result.grad_norm:.3e} "
            f"after {result.iterations} iterations"
        )


@dataclass(frozen=True)
class SmoothnessInfo:
    """Per-sample, per-worker and global smoothness constants."""

    per_sample: np.ndarray  # (n, m) constants of the individual summands
    per_worker_mean: np.ndarray  # (n,) row means of per_sample
    per_worker: np.ndarray  # (n,) smoothness of each local average
    global_L: float  # smoothness of the full objective


@dataclass(frozen=True)
class ReferenceSolution:
    x_star: np.ndarray
    f_star: float
    grad_norm: float
    iterations: int
    converged: bool


def _check_finite(x: np.ndarray, name: str = "x"):
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")


def _stable_log1pexp(t: np.ndarray) -> np.ndarray:
    # log(1 + exp(t)) without overflow for large |t|
    return np.logaddexp(0.0, t)


class LogRegObjective:
    """f(x) = (1/nm) sum_ij [ln(1 + exp(-y_ij <a_ij, x>)) + l2/2 ||x||^2].

    With l2 > 0 the objective is l2-strongly convex (mu = l2).
    """

    def __init__(self, shards: Sequence[WorkerShard], l2: float):
        if l2 < 0:
            raise ValueError("l2 must be nonnegative")
        if not shards:
            raise ValueError("need at least one shard")
        d = shards[0].d
        m = shards[0].m
        for s in shards:
            if s.d != d or s.m != m:
                raise ValueError("all shards must share the same (m, d) shape")
        self.shards = tuple(shards)
        self.l2 = float(l2)
        self.n = len(shards)
        self.m = m
        self.d = d
        self._smoothness: SmoothnessInfo | None = None

    @property
    def mu(self) -> float:
        return self.l2

    def _check_x(self, x: np.ndarray):
        if x.shape != (self.d,):
            raise ValueError(f"x must have shape ({self.d},)")
        _check_finite(x)

    def _check_indices(self, i: int, j: int | None = None):
        if not 0 <= i < self.n:
            raise IndexError(f"worker index {i} out of range")
        if j is not None and not 0 <= j < self.m:
            raise IndexError(f"sample index {j} out of range")

    def sample_grad(self, i: int, j: int, x: np.ndarray) -> np.ndarray:
        """Gradient of the (i, j)-th summand: -y sigmoid(-y<a,x>) a + l2 x."""
        self._check_indices(i, j)
        self._check_x(x)
        a = self.shards[i].features[j]
        y = self.shards[i].labels[j]
        t = y * float(a @ x)
        return (-y * expit(-t)) * a + self.l2 * x

    def worker_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        self._check_indices(i)
        self._check_x(x)
        feats = self.shards[i].features
        y = self.shards[i].labels
        t = y * (feats @ x)
        coef = -y * expit(-t)
        return (feats.T @ coef) / self.m + self.l2 * x

    def full_grad(self, x: np.ndarray) -> np.ndarray:
        g = np.zeros(self.d)
        for i in range(self.n):
            g += self.worker_grad(i, x)
        return g / self.n

    def f_value(self, x: np.ndarray) -> float:
        self._check_x(x)
        total = 0.0
        for s in self.shards:
            t = s.labels * (s.features @ x)
            total += float(np.sum(_stable_log1pexp(-t)))
        reg = 0.5 * self.l2 * float(x @ x)
        return total / (self.n * self.m) + reg

    def smoothness(self) -> SmoothnessInfo:
        """Closed-form constants: L_ij = l2 + ||a_ij||^2/4; L via lambda_max."""
        if self._smoothness is None:
            per_sample = np.stack(
                [self.l2 + np.sum(s.features**2, axis=1) / 4.0 for s in self.shards]
            )
            per_worker_mean = per_sample.mean(axis=1)
            per_worker = np.array(
                [
                    self.l2 + _lambda_max_gram(s.features) / (4.0 * self.m)
                    for s in self.shards
                ]
            )
            all_rows = np.vstack([s.features for s in self.shards])
            global_L = self.l2 + _lambda_max_gram(all_rows) / (4.0 * self.n * self.m)
            self._smoothness = SmoothnessInfo(
                per_sample, per_worker_mean, per_worker, global_L
            )
        return self._smoothness


def _lambda_max_gram(rows: np.ndarray, tol: float = 1e-8, max_iter: int = 10_000) -> float:
    """Largest eigenvalue of rows^T rows by power iteration.

    Iterates on the Gram action v -> rows^T (rows v), so the full d x d
    matrix is never formed.  All-zero data gives 0.
    """
    d = rows.shape[1]
    if rows.size == 0 or not np.any(rows):
        return 0.0
    rng = np.random.Generator(np.random.PCG64(12345))
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = rows.T @ (rows @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        new_lam = float(v @ w)
        v = w / norm
        if abs(new_lam - lam) <= tol * max(abs(new_lam), 1e-30):
            return new_lam
        lam = new_lam
    return lam


class QuadraticObjective:
    """scale/2 ||x - center||^2 presented through the same interface.

    Modeled as n=m=1 so it plugs into the engine and reference solver for
    closed-form gradient-descent checks.
    """

    def __init__(self, center: np.ndarray, scale: float = 1.0):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.n = 1
        self.m = 1
        self.d = self.center.shape[0]

    @property
    def mu(self) -> float:
        return self.scale

    def sample_grad(self, i: int, j: int, x: np.ndarray) -> np.ndarray:
        return self.scale * (x - self.center)

    def worker_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.scale * (x - self.center)

    def full_grad(self, x: np.ndarray) -> np.ndarray:
        return self.scale * (x - self.center)

    def f_value(self, x: np.ndarray) -> float:
        diff = x - self.center
        return 0.5 * self.scale * float(diff @ diff)

    def smoothness(self) -> SmoothnessInfo:
        ones = np.full((1, 1), self.scale)
        return SmoothnessInfo(ones, ones[:, 0], ones[:, 0], self.scale)


def solve_reference(
    obj,
    tol: float,
    max_iter: int = 10_000_000,
    x0: np.ndarray | None = None,
    raise_on_unconverged: bool = False,
) -> ReferenceSolution:
    """Full-gradient descent with stepsize 1/L until ||grad f|| <= tol.

    Returns the achieved gradient norm; an unconverged run is surfaced via
    converged=False (or UnconvergedError when requested), never silently.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    L = obj.smoothness().global_L
    if L <= 0:
        raise ValueError("objective has zero smoothness; nothing to solve")
    gamma = 1.0 / L
    x = np.zeros(obj.d) if x0 is None else np.asarray(x0, dtype=float).copy()
    converged = False
    it = 0
    g = obj.full_grad(x)
    for it in range(1, max_iter + 1):
        if np.linalg.norm(g) <= tol:
            converged = True
            it -= 1
            break
        x = x - gamma * g
        g = obj.full_grad(x)
    else:
        converged = bool(np.linalg.norm(g) <= tol)
    result = ReferenceSolution(
        x_star=x,
        f_star=obj.f_value(x),
        grad_norm=float(np.linalg.norm(g)),
        iterations=it,
        converged=converged,
    )
    if raise_on_unconverged and not converged:
        raise UnconvergedError(result)
    return result
