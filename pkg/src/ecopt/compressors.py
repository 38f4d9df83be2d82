"""Compression operators with exact payload-size accounting.

Absolute compressors (hard-threshold, scaled rounding, identity) guarantee
E||C(x) - x||^2 <= Delta^2 uniformly in x; contractive comparators (TopK,
RandK) guarantee E||C(x) - x||^2 <= (1 - k/d)||x||^2 instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

KINDS = ("identity", "hard_threshold", "top_k", "rand_k", "rounding")

# Wire encoding (little-endian): 32-bit entry count, then either
# 32-bit index + 32-bit value pairs (sparse) or 32-bit values for all d
# coordinates (dense).  Fixed here so bit plots are reproducible.
_COUNT_BITS = 32
_INDEX_BITS = 32
_VALUE_BITS = 32


@dataclass(frozen=True)
class CompressorSpec:
    kind: str
    threshold: float = 0.0  # hard_threshold
    k: int = 0  # top_k / rand_k
    step: float = 0.0  # rounding grid

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown compressor kind {self.kind!r}")
        if self.kind == "hard_threshold" and self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.kind in ("top_k", "rand_k") and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.kind == "rounding" and self.step <= 0:
            raise ValueError("step must be > 0")

    @property
    def is_deterministic(self) -> bool:
        return self.kind in ("identity", "hard_threshold", "top_k")

    def label(self) -> str:
        if self.kind == "hard_threshold":
            return f"ht(lambda={self.threshold:g})"
        if self.kind == "top_k":
            return f"top{self.k}"
        if self.kind == "rand_k":
            return f"rand{self.k}"
        if self.kind == "rounding":
            return f"round(step={self.step:g})"
        return "identity"


def identity() -> CompressorSpec:
    return CompressorSpec("identity")


def hard_threshold(lam: float) -> CompressorSpec:
    return CompressorSpec("hard_threshold", threshold=lam)


def top_k(k: int) -> CompressorSpec:
    return CompressorSpec("top_k", k=k)


def rand_k(k: int) -> CompressorSpec:
    return CompressorSpec("rand_k", k=k)


def rounding(step: float) -> CompressorSpec:
    return CompressorSpec("rounding", step=step)


@dataclass(frozen=True)
class CompressedMessage:
    """Sparse wire representation: strictly increasing indices into [0, d)."""

    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray  # float64, kept exact so reconstruction is lossless
    d: int

    def __post_init__(self):
        if self.indices.shape != self.values.shape:
            raise ValueError("indices and values must align")
        if self.indices.size and (
            np.any(np.diff(self.indices) <= 0)
            or self.indices[0] < 0
            or self.indices[-1] >= self.d
        ):
            raise ValueError("indices must be strictly increasing and < d")


def compress(
    spec: CompressorSpec, x: np.ndarray, rng: np.random.Generator | None = None
) -> CompressedMessage:
    """Apply the compressor to x; stochastic kinds consume rng."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot compress non-finite vector")
    d = x.shape[0]
    if spec.kind == "identity":
        idx = np.arange(d, dtype=np.int64)
        return CompressedMessage(idx, x.copy(), d)
    if spec.kind == "hard_threshold":
        idx = np.nonzero(np.abs(x) >= spec.threshold)[0].astype(np.int64)
        return CompressedMessage(idx, x[idx].copy(), d)
    if spec.kind == "top_k":
        if spec.k > d:
            raise ValueError(f"k={spec.k} exceeds dimension {d}")
        # stable sort on -|x| breaks magnitude ties toward lower indices
        order = np.argsort(-np.abs(x), kind="stable")[: spec.k]
        idx = np.sort(order).astype(np.int64)
        return CompressedMessage(idx, x[idx].copy(), d)
    if spec.kind == "rand_k":
        if spec.k > d:
            raise ValueError(f"k={spec.k} exceeds dimension {d}")
        if rng is None:
            raise ValueError("rand_k requires an rng")
        chosen = rng.choice(d, size=spec.k, replace=False)
        idx = np.sort(chosen).astype(np.int64)
        return CompressedMessage(idx, (d / spec.k) * x[idx], d)
    if spec.kind == "rounding":
        if rng is None:
            raise ValueError("stochastic rounding requires an rng")
        scaled = x / spec.step
        lo = np.floor(scaled)
        frac = scaled - lo
        up = rng.random(d) < frac
        rounded = (lo + up) * spec.step
        idx = np.nonzero(rounded)[0].astype(np.int64)
        return CompressedMessage(idx, rounded[idx], d)
    raise AssertionError(spec.kind)


def reconstruct(msg: CompressedMessage) -> np.ndarray:
    out = np.zeros(msg.d)
    out[msg.indices] = msg.values
    return out


def absolute_delta(spec: CompressorSpec, d: int) -> float | None:
    """Worst-case Delta for absolute compressors, None for contractive ones.

    Hard-threshold: every dropped entry is < lambda in magnitude, so
    ||C(x) - x||^2 < lambda^2 d.  Stochastic rounding moves each entry by
    at most one grid step, giving step * sqrt(d).
    """
    if spec.kind == "identity":
        return 0.0
    if spec.kind == "hard_threshold":
        return spec.threshold * np.sqrt(d)
    if spec.kind == "rounding":
        return spec.step * np.sqrt(d)
    return None


def payload_bits(msg: CompressedMessage) -> int:
    """Bits on the wire: count + (index, value) pairs, or dense when smaller.

    Ties between the sparse and dense encodings go to sparse.
    """
    sparse = _COUNT_BITS + msg.indices.size * (_INDEX_BITS + _VALUE_BITS)
    dense = _COUNT_BITS + msg.d * _VALUE_BITS
    return dense if dense < sparse else sparse


def estimate_second_moment(
    spec: CompressorSpec,
    sample_x: Callable[[np.random.Generator], np.ndarray],
    trials: int,
    rng: np.random.Generator,
    relative: bool = False,
) -> tuple[float, float]:
    """Monte-Carlo mean of ||C(x) - x||^2 (or its ratio to ||x||^2).

    Returns (mean, standard error) so callers can form 3-sigma bands.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    vals = np.empty(trials)
    for t in range(trials):
        x = sample_x(rng)
        err = reconstruct(compress(spec, x, rng)) - x
        v = float(err @ err)
        if relative:
            norm = float(x @ x)
            v = v / norm if norm > 0 else 0.0
        vals[t] = v
    stderr = float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return float(vals.mean()), stderr
