"""Batch experiment driver: config parsing, presets, CSV and SVG output.

Config files use a flat `key = value` line format ('#' starts a comment).
Recognized keys and their defaults are documented in CONFIG_KEYS; unknown
keys and malformed lines raise ConfigError with the offending line number.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ecopt import compressors, data, sampling, theory
from ecopt.compressors import CompressorSpec
from ecopt.engine import RunConfig, RunResult, run, traces_to_csv
from ecopt.problem import LogRegObjective, ReferenceSolution, solve_reference
from ecopt.svgplot import line_plot_svg

PRESETS = ("exp1_sampling", "exp2_vr", "exp3_ht_vs_topk", "custom")

DATA_DIR_ENV = "ECOPT_DATA_DIR"

CONFIG_KEYS = {
    "preset": "custom",
    "name": "run",
    "dataset": "synth:n=4,m=50,d=20,seed=1,separation=5",
    "l2": "auto",  # auto = 1e-4 * max_i mean_j L_ij
    "normalize": "false",
    "d_override": "",
    "n": "20",  # workers for file datasets (synth: carries its own n)
    "shuffle_seed": "0",
    "method": "ecsgd",  # custom preset only
    "sampling": "uniform",
    "compressor": "ht:auto",  # ht:auto resolves lambda via the threshold rule
    "gamma": "rule:maxlij",
    "p": "auto",  # lsvrg refresh probability; auto = 1/m
    "epochs": "",  # required: iterations K = epochs * m
    "seeds": "1",
    "record_every": "1",
    "parallel": "false",
    "ref_tol": "1e-9",
    "epsilon": "1e-3",  # threshold-rule accuracy target
    "alpha": "5000",  # threshold-rule scale
}


class ConfigError(ValueError):
    def __init__(self, line_no: int | None, message: str):
        self.line_no = line_no
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class MethodSpec:
    label: str
    estimator: str  # "sgd" | "lsvrg"
    sampling: str
    compressor: str  # raw descriptor, resolved per-dataset
    gamma: str  # raw descriptor ("rule:..." or a number)


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    preset: str
    dataset: str
    methods: tuple[MethodSpec, ...]
    epochs: int
    seeds: tuple[int, ...]
    l2: str
    n: int
    shuffle_seed: int
    record_every: int
    parallel: bool
    ref_tol: float
    epsilon: float
    alpha: float
    normalize: bool
    d_override: int | None
    p: str


def parse_config(text: str) -> ExperimentPreset:
    values = dict(CONFIG_KEYS)
    explicit: set[str] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line_no, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in values:
            raise ConfigError(line_no, f"unknown key {key!r}")
        values[key] = value
        explicit.add(key)

    def fail(key: str, msg: str):
        raise ConfigError(None, f"key {key!r}: {msg}")

    preset = values["preset"]
    if preset not in PRESETS:
        fail("preset", f"must be one of {PRESETS}")
    if not values["epochs"]:
        fail("epochs", "required (no default)")
    try:
        epochs = int(values["epochs"])
    except ValueError:
        fail("epochs", "must be an integer")
    if epochs < 1:
        fail("epochs", "must be >= 1")
    try:
        seeds = tuple(int(s) for s in values["seeds"].split(",") if s.strip())
    except ValueError:
        fail("seeds", "must be a comma-separated list of integers")
    if not seeds:
        fail("seeds", "must list at least one seed")

    def as_bool(key: str) -> bool:
        v = values[key].lower()
        if v not in ("true", "false"):
            fail(key, "must be true or false")
        return v == "true"

    def as_float(key: str) -> float:
        try:
            return float(values[key])
        except ValueError:
            fail(key, "must be a number")

    d_override = None
    if values["d_override"]:
        try:
            d_override = int(values["d_override"])
        except ValueError:
            fail("d_override", "must be an integer")

    if preset == "custom":
        methods = (
            MethodSpec(
                label=values["method"],
                estimator=_estimator_for(values["method"]),
                sampling=values["sampling"],
                compressor=values["compressor"],
                gamma=values["gamma"],
            ),
        )
    else:
        methods = _preset_methods(preset)

    return ExperimentPreset(
        name=values["name"],
        preset=preset,
        dataset=values["dataset"],
        methods=methods,
        epochs=epochs,
        seeds=seeds,
        l2=values["l2"],
        n=int(values["n"]),
        shuffle_seed=int(values["shuffle_seed"]),
        record_every=int(values["record_every"]),
        parallel=as_bool("parallel"),
        ref_tol=as_float("ref_tol"),
        epsilon=as_float("epsilon"),
        alpha=as_float("alpha"),
        normalize=as_bool("normalize"),
        d_override=d_override,
        p=values["p"],
    )


def _estimator_for(method: str) -> str:
    if method == "ecsgd":
        return "sgd"
    if method == "eclsvrg":
        return "lsvrg"
    raise ConfigError(None, f"key 'method': unknown method {method!r}")


def _preset_methods(preset: str) -> tuple[MethodSpec, ...]:
    if preset == "exp1_sampling":
        return (
            MethodSpec("ecsgd-us", "sgd", "uniform", "ht:auto", "rule:us"),
            MethodSpec("ecsgd-is", "sgd", "importance", "ht:auto", "rule:is"),
        )
    if preset == "exp2_vr":
        return (
            MethodSpec("ecsgd", "sgd", "uniform", "ht:auto", "rule:maxlij"),
            MethodSpec("eclsvrg", "lsvrg", "uniform", "ht:auto", "rule:maxlij"),
        )
    if preset == "exp3_ht_vs_topk":
        return (
            MethodSpec("eclsvrg-ht", "lsvrg", "uniform", "ht:auto", "rule:maxlij"),
            MethodSpec("eclsvrg-topk", "lsvrg", "uniform", "topk:auto", "rule:maxlij"),
        )
    raise AssertionError(preset)


def load_dataset(preset: ExperimentPreset):
    """Resolve the dataset descriptor into shards plus a manifest."""
    desc = preset.dataset
    if desc.startswith("synth:"):
        params = _parse_kv(desc[len("synth:"):], "dataset")
        n = int(params.get("n", 4))
        m = int(params.get("m", 50))
        d = int(params.get("d", 20))
        seed = int(params.get("seed", 1))
        separation = float(params.get("separation", "inf"))
        shards, _ = data.synth_logreg(n, m, d, seed, separation)
        manifest = data.DatasetManifest(desc, n * m, d, n * m)
        return shards, manifest
    path = Path(desc)
    if not path.exists():
        cache = os.environ.get(DATA_DIR_ENV)
        if cache:
            candidate = Path(cache) / desc
            if candidate.exists():
                path = candidate
    if not path.exists():
        raise FileNotFoundError(f"dataset {desc!r} not found")
    rows, labels, d = data.load_libsvm(str(path), d_override=preset.d_override)
    if preset.normalize:
        norms = np.linalg.norm(rows, axis=1)
        norms[norms == 0] = 1.0
        rows = rows / norms[:, None]
    shards = data.partition(rows, labels, preset.n, preset.shuffle_seed)
    kept = (rows.shape[0] // preset.n) * preset.n
    manifest = data.DatasetManifest(str(path), rows.shape[0], d, kept)
    return shards, manifest


def _parse_kv(body: str, key: str) -> dict[str, str]:
    out = {}
    if not body:
        return out
    for item in body.split(","):
        if "=" not in item:
            raise ConfigError(None, f"key {key!r}: malformed item {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def resolve_gamma(descriptor: str, obj: LogRegObjective, method: MethodSpec,
                  p: float) -> tuple[float, str]:
    """Turn a gamma descriptor into a number; returns (gamma, how)."""
    smooth = obj.smoothness()
    if descriptor.startswith("rule:"):
        rule = descriptor[len("rule:"):]
        if rule == "us":
            g = 1.0 / (smooth.global_L + smooth.per_sample.max() / obj.n)
        elif rule == "is":
            g = 1.0 / (smooth.global_L + smooth.per_worker_mean.max() / obj.n)
        elif rule == "maxlij":
            g = 1.0 / smooth.per_sample.max()
        elif rule == "cap":
            scheme = sampling.make_scheme(method.sampling, smooth, obj.n, obj.m)
            L_exp = sampling.expected_smoothness(scheme, smooth)
            if method.estimator == "lsvrg":
                params = theory.params_eclsvrg(smooth.global_L, L_exp, obj.n, p)
            else:
                params = theory.params_ecsgd_as(smooth.global_L, L_exp, obj.n, 0.0)
            g = params.stepsize_cap
        else:
            raise ConfigError(None, f"unknown gamma rule {rule!r}")
        return g, descriptor
    try:
        return float(descriptor), "explicit"
    except ValueError:
        raise ConfigError(None, f"key 'gamma': bad value {descriptor!r}")


def resolve_compressor(descriptor: str, obj: LogRegObjective, gamma: float,
                       preset: ExperimentPreset) -> CompressorSpec:
    if descriptor == "identity":
        return compressors.identity()
    if ":" not in descriptor:
        raise ConfigError(None, f"key 'compressor': bad value {descriptor!r}")
    kind, body = descriptor.split(":", 1)
    def scalar(param: str) -> str:
        # accept both "ht:0.5" and "ht:lambda=0.5" spellings
        if "=" in body:
            return _parse_kv(body, "compressor")[param]
        return body

    if kind == "ht":
        if body == "auto":
            lam = theory.ht_lambda_rule(preset.epsilon, obj.d, gamma, preset.alpha)
        else:
            lam = float(scalar("lambda"))
        return compressors.hard_threshold(lam)
    if kind == "topk":
        k = max(1, round(obj.d / 100)) if body == "auto" else int(scalar("k"))
        return compressors.top_k(k)
    if kind == "randk":
        return compressors.rand_k(int(scalar("k")))
    if kind == "round":
        return compressors.rounding(float(scalar("step")))
    raise ConfigError(None, f"key 'compressor': unknown kind {kind!r}")


def _dataset_hash(obj: LogRegObjective) -> str:
    h = hashlib.sha256()
    for s in obj.shards:
        h.update(np.ascontiguousarray(s.features).tobytes())
        h.update(np.ascontiguousarray(s.labels).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class MethodRun:
    method: MethodSpec
    seed: int
    result: RunResult
    csv_path: Path
    gamma: float
    compressor: CompressorSpec


def run_experiment(preset: ExperimentPreset, outdir: str | Path) -> list[MethodRun]:
    """Run every (method, seed) pair, write CSVs, and emit one SVG overlay."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    shards, manifest = load_dataset(preset)
    l2 = _resolve_l2(preset, shards)
    obj = LogRegObjective(shards, l2)
    reference = solve_reference(obj, preset.ref_tol, max_iter=200_000)
    ds_hash = _dataset_hash(obj)
    K = preset.epochs * obj.m

    runs: list[MethodRun] = []
    for method in preset.methods:
        p = _resolve_p(preset.p, obj.m) if method.estimator == "lsvrg" else 0.0
        gamma, gamma_how = resolve_gamma(method.gamma, obj, method, p)
        comp = resolve_compressor(method.compressor, obj, gamma, preset)
        for seed in preset.seeds:
            config = RunConfig(
                gamma=gamma,
                K=K,
                compressor=comp,
                estimator=method.estimator,
                p=p,
                sampling=method.sampling,
                seed=seed,
                record_every=preset.record_every,
                parallel=preset.parallel,
            )
            result = run(config, obj, reference)
            header = _audit_header(
                preset, method, config, manifest, ds_hash, gamma_how, l2,
                reference, comp,
            )
            csv_path = outdir / f"{preset.name}_{method.label}_seed{seed}.csv"
            csv_path.write_text(traces_to_csv(result.traces, header))
            runs.append(MethodRun(method, seed, result, csv_path, gamma, comp))

    svg_path = outdir / f"{preset.name}.svg"
    svg_path.write_text(_overlay_svg(preset, runs))
    return runs


def _resolve_l2(preset: ExperimentPreset, shards) -> float:
    if preset.l2 == "auto":
        per_sample = np.stack([np.sum(s.features**2, axis=1) / 4.0 for s in shards])
        base = per_sample.mean(axis=1).max()
        return 1e-4 * float(base) if base > 0 else 1e-4
    return float(preset.l2)


def _resolve_p(p_raw: str, m: int) -> float:
    if p_raw == "auto":
        return 1.0 / m
    return float(p_raw)


def _audit_header(preset, method, config: RunConfig, manifest, ds_hash,
                  gamma_how, l2, reference: ReferenceSolution,
                  comp: CompressorSpec) -> list[str]:
    lines = [
        f"preset={preset.preset} name={preset.name}",
        f"dataset={preset.dataset} hash={ds_hash} "
        f"total_samples={manifest.total_samples} kept={manifest.kept_samples} "
        f"d={manifest.d}",
        f"method={method.label} estimator={config.estimator} "
        f"sampling={config.sampling} p={config.p:.17g}",
        f"compressor={comp.label()}",
        f"gamma={config.gamma:.17g} (resolved via {gamma_how}; "
        f"raw descriptor {method.gamma})",
        f"l2={l2:.17g} epochs={preset.epochs} K={config.K} seed={config.seed} "
        f"record_every={config.record_every} parallel={config.parallel}",
        f"reference: f_star={reference.f_star:.17g} "
        f"grad_norm={reference.grad_norm:.3e} converged={reference.converged}",
        "epoch accounting: 1 epoch = m stochastic gradients per worker; "
        "lsvrg adds an expected p*m full-gradient-equivalents per epoch",
    ]
    return lines


def _overlay_svg(preset: ExperimentPreset, runs: list[MethodRun]) -> str:
    series = []
    for method in preset.methods:
        group = [r for r in runs if r.method.label == method.label]
        if not group:
            continue
        # traces share the recording grid; average bits and gaps across seeds
        length = min(len(r.result.traces) for r in group)
        xs = np.mean(
            [[t.bits_per_worker_cum for t in r.result.traces[:length]] for r in group],
            axis=0,
        )
        ys = np.mean(
            [[t.f_gap_x for t in r.result.traces[:length]] for r in group], axis=0
        )
        series.append((method.label, xs.tolist(), ys.tolist()))
    return line_plot_svg(
        series,
        title=f"{preset.name} ({preset.preset})",
        x_label="cumulative bits per worker",
        y_label="f(x) - f*",
    )
