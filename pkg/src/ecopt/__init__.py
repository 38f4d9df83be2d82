"""Simulator for distributed error-compensated SGD with gradient compression.

Subpackages cover the objective (l2-regularized logistic regression),
dataset ingestion and sharding, compression operators with bit accounting,
sampling schemes, stochastic gradient estimators (plain and loopless
variance-reduced), the synchronous round engine, and the convergence-rate
parameter calculator.
"""

from ecopt.compressors import CompressorSpec
from ecopt.data import WorkerShard
from ecopt.engine import RunConfig, run
from ecopt.problem import LogRegObjective, solve_reference

__all__ = [
    "CompressorSpec",
    "WorkerShard",
    "RunConfig",
    "run",
    "LogRegObjective",
    "solve_reference",
]
