"""Dataset ingestion: LIBSVM parsing, synthetic generation, worker sharding."""

from __future__ import annotations

import gzip
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class LibsvmFormatError(ValueError):
    """Malformed LIBSVM input; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


@dataclass(frozen=True)
class WorkerShard:
    """One worker's local data slice.

    features: (m, d) float64, labels: (m,) with values in {-1, +1}.
    """

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must have one entry per feature row")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    total_samples: int
    d: int
    kept_samples: int  # after truncation to a multiple of n

    def __post_init__(self):
        if self.kept_samples > self.total_samples:
            raise ValueError("kept_samples cannot exceed total_samples")


def parse_libsvm(lines: Iterable[str], d_override: int | None = None):
    """Parse LIBSVM-format text: `<label> <index>:<value> ...`, 1-based indices.

    Labels are mapped to {-1, +1}: any value > 0 maps to +1 and the rest to
    -1, which covers both the {-1,+1} and {0,1} conventions.  Returns
    (rows, labels, d) with dense float64 rows in input order.  Feature
    indices must be strictly ascending within a line.
    """
    raw: list[list[tuple[int, float]]] = []
    labels: list[float] = []
    max_index = 0
    for line_no, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        tokens = body.split()
        try:
            y = float(tokens[0])
        except ValueError:
            raise LibsvmFormatError(line_no, f"non-numeric label {tokens[0]!r}")
        entries: list[tuple[int, float]] = []
        prev_index = 0
        for tok in tokens[1:]:
            if ":" not in tok:
                raise LibsvmFormatError(line_no, f"missing ':' in token {tok!r}")
            idx_s, val_s = tok.split(":", 1)
            try:
                idx = int(idx_s)
            except ValueError:
                raise LibsvmFormatError(line_no, f"non-integer index {idx_s!r}")
            try:
                val = float(val_s)
            except ValueError:
                raise LibsvmFormatError(line_no, f"non-numeric value {val_s!r}")
            if idx < 1:
                raise LibsvmFormatError(line_no, f"index {idx} must be >= 1")
            if idx <= prev_index:
                raise LibsvmFormatError(
                    line_no, f"indices not strictly ascending at {idx}"
                )
            prev_index = idx
            entries.append((idx, val))
        max_index = max(max_index, prev_index)
        labels.append(1.0 if y > 0 else -1.0)
        raw.append(entries)

    d = d_override if d_override is not None else max_index
    if d < max_index:
        raise ValueError(f"d_override={d} smaller than max feature index {max_index}")
    rows = np.zeros((len(raw), d))
    for r, entries in enumerate(raw):
        for idx, val in entries:
            rows[r, idx - 1] = val
    return rows, np.asarray(labels), d


def serialize_libsvm(rows: np.ndarray, labels: np.ndarray) -> str:
    """Inverse of parse_libsvm (zero entries are omitted)."""
    out = io.StringIO()
    for row, y in zip(rows, labels):
        parts = ["+1" if y > 0 else "-1"]
        for idx in np.nonzero(row)[0]:
            parts.append(f"{idx + 1}:{row[idx]:.17g}")
        out.write(" ".join(parts) + "\n")
    return out.getvalue()


def load_libsvm(path: str, d_override: int | None = None):
    """Read a LIBSVM file, transparently decompressing `.gz` paths."""
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt") as fh:
        return parse_libsvm(fh, d_override=d_override)


def partition(
    rows: np.ndarray, labels: np.ndarray, n: int, seed: int
) -> list[WorkerShard]:
    """Shuffle samples (Fisher-Yates) and split into n equal contiguous shards.

    The sample count is truncated to the largest multiple of n; the seed
    fully determines the result.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    count = rows.shape[0]
    if count < n:
        raise ValueError(f"need at least n={n} samples, got {count}")
    perm = _fisher_yates(count, seed)
    m = count // n
    kept = m * n
    shuffled_rows = rows[perm[:kept]]
    shuffled_labels = labels[perm[:kept]]
    return [
        WorkerShard(
            np.ascontiguousarray(shuffled_rows[i * m : (i + 1) * m]),
            np.ascontiguousarray(shuffled_labels[i * m : (i + 1) * m]),
        )
        for i in range(n)
    ]


def _fisher_yates(count: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = np.arange(count)
    for i in range(count - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def synth_logreg(
    n: int,
    m: int,
    d: int,
    seed: int,
    separation: float = np.inf,
) -> tuple[list[WorkerShard], np.ndarray]:
    """Generate a synthetic linearly-separable-ish logistic instance.

    Features are standard normal; labels are sign(<a, u> + noise) for a
    hidden unit direction u, with noise standard deviation 1/separation
    (separation=inf gives perfectly consistent labels).  Returns the n
    shards and u.
    """
    if min(n, m, d) < 1:
        raise ValueError("n, m, d must all be >= 1")
    if separation <= 0:
        raise ValueError("separation must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    shards = []
    for _ in range(n):
        feats = rng.standard_normal((m, d))
        margin = feats @ u
        if np.isfinite(separation):
            margin = margin + rng.standard_normal(m) / separation
        labels = np.where(margin >= 0, 1.0, -1.0)
        shards.append(WorkerShard(feats, labels))
    return shards, u


def stack_rows(shards: Sequence[WorkerShard]) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate shard features/labels back into flat arrays."""
    rows = np.vstack([s.features for s in shards])
    labels = np.concatenate([s.labels for s in shards])
    return rows, labels
