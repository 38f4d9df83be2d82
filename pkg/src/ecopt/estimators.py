"""Per-worker stochastic gradient estimators.

Two kinds: plain sampled gradients ("sgd") and the loopless
variance-reduced estimator ("lsvrg") that differences against a randomly
refreshed global reference point and adds the cached local full gradient.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ecopt import sampling
from ecopt.sampling import FULL_BATCH, SamplingScheme

KINDS = ("sgd", "lsvrg")


def _digest(x: np.ndarray) -> bytes:
    return hashlib.sha256(np.ascontiguousarray(x).tobytes()).digest()


@dataclass
class EstimatorState:
    kind: str
    p: float = 0.0  # reference refresh probability (lsvrg)
    w_ref: np.ndarray | None = None
    cached_full_grads: np.ndarray | None = None  # (n, d)
    full_grad_evals: int = 0
    _ref_digest: bytes = field(default=b"", repr=False)


def init_estimator(kind: str, obj, x0: np.ndarray, p: float = 0.0) -> EstimatorState:
    if kind not in KINDS:
        raise ValueError(f"unknown estimator kind {kind!r}")
    state = EstimatorState(kind=kind, p=p)
    if kind == "lsvrg":
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        _refresh_reference(state, obj, x0)
    return state


def _refresh_reference(state: EstimatorState, obj, x: np.ndarray):
    state.w_ref = np.asarray(x, dtype=float).copy()
    state.cached_full_grads = np.stack(
        [obj.worker_grad(i, state.w_ref) for i in range(obj.n)]
    )
    state.full_grad_evals += obj.n
    state._ref_digest = _digest(state.w_ref)


def estimate(
    state: EstimatorState,
    obj,
    scheme: SamplingScheme,
    i: int,
    x: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Worker i's stochastic gradient at x; unbiased for grad f_i(x)."""
    j, w = sampling.draw(scheme, i, rng)
    if state.kind == "sgd":
        if j == FULL_BATCH:
            return obj.worker_grad(i, x)
        return w * obj.sample_grad(i, j, x)
    # lsvrg: same drawn index at both evaluation points
    if state.w_ref is None:
        raise RuntimeError("lsvrg estimator not initialized")
    if state._ref_digest != _digest(state.w_ref):
        raise RuntimeError("stale lsvrg cache: reference point mutated externally")
    cached = state.cached_full_grads[i]
    if j == FULL_BATCH:
        return obj.worker_grad(i, x) - obj.worker_grad(i, state.w_ref) + cached
    return (
        w * (obj.sample_grad(i, j, x) - obj.sample_grad(i, j, state.w_ref)) + cached
    )


def maybe_update_reference(
    state: EstimatorState, obj, x: np.ndarray, coin_rng: np.random.Generator
) -> bool:
    """One shared Bernoulli(p) coin per round; the reference point is global."""
    if state.kind != "lsvrg":
        raise ValueError("reference updates only apply to lsvrg")
    if coin_rng.random() < state.p:
        _refresh_reference(state, obj, x)
        return True
    return False


def sigma_k_sq(state: EstimatorState, obj, expected_L: float, f_star: float) -> float:
    """Variance-process value 2 L_exp (f(w_ref) - f*); identically 0 for sgd."""
    if state.kind == "sgd":
        return 0.0
    gap = obj.f_value(state.w_ref) - f_star
    return 2.0 * expected_L * max(gap, 0.0)
