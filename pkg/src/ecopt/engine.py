"""Synchronous round engine: broadcast, local estimate, error-compensated
compression, server aggregation, plus diagnostics (virtual iterates and the
geometrically-weighted running average of the iterates).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ecopt import compressors, estimators, sampling
from ecopt.compressors import CompressorSpec
from ecopt.problem import ReferenceSolution

DIVERGENCE_NORM = 1e12


@dataclass(frozen=True)
class RunConfig:
    gamma: float
    K: int
    compressor: CompressorSpec
    estimator: str = "sgd"  # "sgd" | "lsvrg"
    p: float = 0.0  # lsvrg reference refresh probability
    sampling: str = "uniform"  # "uniform" | "importance" | "full_batch"
    seed: int = 0
    eta_override: float | None = None
    record_every: int = 1
    parallel: bool = False

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.estimator not in estimators.KINDS:
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.sampling not in sampling.KINDS:
            raise ValueError(f"unknown sampling kind {self.sampling!r}")
        if self.eta_override is not None and not 0.0 <= self.eta_override < 1.0:
            raise ValueError("eta_override must be in [0, 1)")


@dataclass(frozen=True)
class TraceRecord:
    k: int
    f_gap_x: float
    f_gap_avg: float
    bits_per_worker_cum: float  # mean cumulative payload bits across workers
    err_norm_sq: float  # ||mean_i e_i||^2
    virtual_residual: float  # ||x_tilde - (x - mean_i e_i)||
    sigma_k_sq: float
    x_norm: float  # ||x^k||, the scale for the virtual-residual tolerance


@dataclass(frozen=True)
class RunResult:
    traces: list[TraceRecord]
    x_final: np.ndarray
    x_avg: np.ndarray
    eta: float
    diverged: bool
    full_grad_evals: int
    bits_per_worker: np.ndarray  # (n,) final cumulative counts


class WeightedAverage:
    """Running average with weights w_k = (1 - eta)^{-(k+1)}.

    The raw weights grow geometrically and overflow floats for large K, so
    only the ratio w_k / W_k is ever formed, with log W_k tracked via
    logaddexp.
    """

    def __init__(self, x0: np.ndarray, eta: float):
        if not 0.0 <= eta < 1.0:
            raise ValueError("eta must be in [0, 1)")
        self.eta = eta
        self._log_step = -math.log1p(-eta)  # log w_k - log w_{k-1}
        self._log_w = self._log_step  # log w_0
        self._log_W = self._log_w
        self.value = np.asarray(x0, dtype=float).copy()

    def update(self, x: np.ndarray) -> np.ndarray:
        self._log_w += self._log_step
        self._log_W = np.logaddexp(self._log_W, self._log_w)
        ratio = math.exp(self._log_w - self._log_W)
        self.value += ratio * (x - self.value)
        return self.value


def default_eta(gamma: float, mu: float, rho: float) -> float:
    return min(gamma * mu / 2.0, rho / 4.0)


def run(config: RunConfig, obj, reference: ReferenceSolution,
        x0: np.ndarray | None = None) -> RunResult:
    """Execute K rounds of error-compensated compressed SGD.

    Deterministic in config.seed: every worker owns a dedicated rng stream
    and the lsvrg coin uses its own, so the result does not depend on
    worker execution order (config.parallel fans workers out over threads).
    """
    n, d = obj.n, obj.d
    smooth = obj.smoothness()
    scheme = sampling.make_scheme(config.sampling, smooth, n, obj.m)
    expected_L = sampling.expected_smoothness(scheme, smooth)
    f_star = reference.f_star
    gamma = config.gamma

    seeds = np.random.SeedSequence(config.seed).spawn(n + 1)
    worker_rngs = [np.random.Generator(np.random.PCG64(s)) for s in seeds[:n]]
    coin_rng = np.random.Generator(np.random.PCG64(seeds[n]))

    x = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float).copy()
    errors = np.zeros((n, d))
    virtual = x.copy()
    bits = np.zeros(n, dtype=np.int64)
    state = estimators.init_estimator(config.estimator, obj, x, p=config.p)

    rho = config.p if config.estimator == "lsvrg" else 1.0
    eta = (
        config.eta_override
        if config.eta_override is not None
        else default_eta(gamma, obj.mu, rho)
    )
    avg = WeightedAverage(x, eta)

    traces: list[TraceRecord] = []
    diverged = False

    def record(k: int):
        mean_err = errors.mean(axis=0)
        traces.append(
            TraceRecord(
                k=k,
                f_gap_x=obj.f_value(x) - f_star,
                f_gap_avg=obj.f_value(avg.value) - f_star,
                bits_per_worker_cum=float(bits.mean()),
                err_norm_sq=float(mean_err @ mean_err),
                virtual_residual=float(np.linalg.norm(virtual - (x - mean_err))),
                sigma_k_sq=estimators.sigma_k_sq(state, obj, expected_L, f_star),
                x_norm=float(np.linalg.norm(x)),
            )
        )

    def worker_round(i: int):
        g_i = estimators.estimate(state, obj, scheme, i, x, worker_rngs[i])
        c = errors[i] / gamma + g_i
        msg = compressors.compress(config.compressor, c, worker_rngs[i])
        v_i = gamma * compressors.reconstruct(msg)
        errors[i] = errors[i] + gamma * g_i - v_i
        bits[i] += compressors.payload_bits(msg)
        return g_i, v_i

    record(0)
    pool = ThreadPoolExecutor(max_workers=n) if config.parallel else None
    try:
        for k in range(config.K):
            if pool is not None:
                results = list(pool.map(worker_round, range(n)))
            else:
                results = [worker_round(i) for i in range(n)]
            # fixed worker order + numpy pairwise summation for determinism
            g = np.sum(np.stack([r[0] for r in results]), axis=0) / n
            v = np.sum(np.stack([r[1] for r in results]), axis=0) / n
            x_prev = x
            x = x - v
            virtual -= gamma * g
            if state.kind == "lsvrg":
                estimators.maybe_update_reference(state, obj, x_prev, coin_rng)
            avg.update(x)
            last = k + 1 == config.K
            if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_NORM:
                diverged = True
                x = np.where(np.isfinite(x), x, 0.0)
                record(k + 1)
                break
            if (k + 1) % config.record_every == 0 or last:
                record(k + 1)
    finally:
        if pool is not None:
            pool.shutdown()

    return RunResult(
        traces=traces,
        x_final=x,
        x_avg=avg.value.copy(),
        eta=eta,
        diverged=diverged,
        full_grad_evals=state.full_grad_evals,
        bits_per_worker=bits.copy(),
    )


CSV_COLUMNS = ("k", "f_gap_x", "f_gap_avg", "bits_cum", "err_norm_sq", "sigma_k_sq")


def traces_to_csv(traces: list[TraceRecord], header_lines: list[str] | None = None) -> str:
    """Render traces as CSV with optional '#'-prefixed audit header lines."""
    out = []
    for line in header_lines or []:
        out.append(f"# {line}")
    out.append(",".join(CSV_COLUMNS))
    for t in traces:
        out.append(
            f"{t.k},{t.f_gap_x:.17g},{t.f_gap_avg:.17g},"
            f"{t.bits_per_worker_cum:.17g},{t.err_norm_sq:.17g},{t.sigma_k_sq:.17g}"
        )
    return "\n".join(out) + "\n"
