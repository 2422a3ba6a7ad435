"""Seeded Monte-Carlo sweeps over (VNR, bias) grids with paired trials.

Every decoder at a grid point consumes the same per-trial (message, noise)
streams, so error-rate and node-count comparisons are matched-pair.  Trial
streams are derived from (seed, stream label, trial index) alone; the same
spec and seed reproduce a sweep byte for byte, and all grid points share
the per-trial randomness (common random numbers across the grid).

Results aggregate to one CSV row per (grid point, decoder) with exact
integer counters, a 95% Clopper-Pearson interval on the frame-error rate,
and mean/median/95th-percentile visited-node counts.
"""
from __future__ import annotations

import hashlib
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import beta

from . import __version__
from .channel import (
    GAUSSIAN_ALGORITHM,
    STREAM_CODE,
    STREAM_MESSAGE,
    STREAM_NOISE,
    draw_message,
    stream_rng,
)
from .lattice import (
    LatticeBasis,
    ModPCodeSpec,
    construct_mod_p,
    load_basis,
    random_parity,
)
from . import _kernels

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

CSV_COLUMNS = (
    "mu_c_db", "mu_c", "bias_mode", "b_or_delta", "decoder", "trials",
    "errors", "fer", "fer_lo95", "fer_hi95", "mean_nodes", "median_nodes",
    "p95_nodes", "overflows", "seed",
)

WORKERS_ENV_VAR = "LATSEQ_WORKERS"


class InvalidConfigError(ValueError):
    """Sweep configuration violates the schema."""


@dataclass(frozen=True)
class SweepSpec:
    """Declarative description of one sweep experiment.

    The lattice is either a mod-p code (m, p, k_info; parity drawn once
    from the seeded code stream) normalized to cell volume (2 pi e)^(m/2)
    unless ``target_volume`` overrides it, or an explicit ``basis_file``.
    ``bias_mode`` is "fixed" (values are biases b) or "scaled" (values are
    deltas; b = (1 - sqrt(delta)) mu_c sigma^2 at each grid point).
    ``target_errors = 0`` disables early stopping.
    """

    m: int
    vnr_db: tuple[float, ...]
    bias_values: tuple[float, ...]
    bias_mode: str = "fixed"
    decoders: tuple[str, ...] = ("sphere", "stack")
    trials_per_point: int = 1000
    target_errors: int = 100
    seed: int = 0
    message_span: int = 2
    noise_variance: float = 1.0
    p: int = 997
    k_info: int | None = None
    basis_file: str | None = None
    target_volume: float | None = None
    reduce_basis: bool = True
    max_stack_entries: int = 2 ** 20
    max_visited_nodes: int = 10 ** 6
    noise_generator: str = GAUSSIAN_ALGORITHM

    def __post_init__(self):
        if self.m < 1:
            raise InvalidConfigError("m must be positive")
        if not self.vnr_db:
            raise InvalidConfigError("vnr_db grid must be nonempty")
        if self.bias_mode not in ("fixed", "scaled"):
            raise InvalidConfigError(f"bias_mode must be fixed|scaled, got {self.bias_mode!r}")
        if "stack" in self.decoders and not self.bias_values:
            raise InvalidConfigError("bias_values must be nonempty when the stack decoder runs")
        if self.bias_mode == "scaled":
            for d in self.bias_values:
                if not 0.0 < d <= 1.0:
                    raise InvalidConfigError(f"scaled-bias delta must be in (0, 1], got {d}")
        else:
            for b in self.bias_values:
                if b < 0:
                    raise InvalidConfigError(f"fixed bias must be nonnegative, got {b}")
        unknown = set(self.decoders) - {"sphere", "stack"}
        if unknown or not self.decoders:
            raise InvalidConfigError(f"decoders must be a nonempty subset of sphere|stack, got {self.decoders}")
        if self.trials_per_point < 1:
            raise InvalidConfigError("trials_per_point must be >= 1")
        if self.target_errors < 0:
            raise InvalidConfigError("target_errors must be >= 0 (0 disables early stop)")
        if self.noise_generator != GAUSSIAN_ALGORITHM:
            raise InvalidConfigError(
                f"unsupported noise_generator {self.noise_generator!r}; this build provides {GAUSSIAN_ALGORITHM!r}"
            )
        if any(mu <= 0 for mu in self.mu_grid()):
            raise InvalidConfigError("vnr grid produced nonpositive mu_c")

    def mu_grid(self) -> tuple[float, ...]:
        return tuple(10.0 ** (db / 10.0) for db in self.vnr_db)

    def resolved_k_info(self) -> int:
        return self.k_info if self.k_info is not None else math.ceil(self.m / 2)


_SCHEMA = {
    "seed": int,
    "trials_per_point": int,
    "target_errors": int,
    "decoders": list,
    "message_span": int,
    "noise_variance": (int, float),
    "noise_generator": str,
    "lattice": dict,
    "grid": dict,
    "bias": dict,
    "budgets": dict,
}
_LATTICE_KEYS = {"m": int, "p": int, "k_info": int, "basis_file": str,
                 "target_volume": (int, float), "reduce_basis": bool}
_GRID_KEYS = {"vnr_db": (str, list)}
_BIAS_KEYS = {"mode": str, "values": list}
_BUDGET_KEYS = {"max_stack_entries": int, "max_visited_nodes": int}


def _check_table(table: dict, schema: dict, where: str) -> None:
    for key, value in table.items():
        if key not in schema:
            raise InvalidConfigError(f"unknown key {key!r} in {where}")
        expected = schema[key]
        if not isinstance(value, expected):
            raise InvalidConfigError(f"{where}.{key} has wrong type {type(value).__name__}")


def parse_grid(text) -> tuple[float, ...]:
    """Grid syntax: 'start:step:stop' (endpoints inclusive within 1e-9),
    a comma-separated list, or a TOML list of numbers."""
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InvalidConfigError(f"grid must be start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise InvalidConfigError("grid step must be positive")
        values = []
        v = start
        while v <= stop + 1e-9:
            values.append(v)
            v = start + len(values) * step
        return tuple(values)
    return tuple(float(p) for p in text.split(","))


def load_sweep_spec(path) -> SweepSpec:
    """Parse and validate a TOML sweep configuration; unknown keys are rejected."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return sweep_spec_from_dict(doc)


def sweep_spec_from_dict(doc: dict) -> SweepSpec:
    _check_table(doc, _SCHEMA, "config")
    lattice = doc.get("lattice")
    if lattice is None:
        raise InvalidConfigError("config needs a [lattice] table")
    _check_table(lattice, _LATTICE_KEYS, "lattice")
    if "m" not in lattice:
        raise InvalidConfigError("lattice.m is required")
    grid = doc.get("grid")
    if grid is None or "vnr_db" not in grid:
        raise InvalidConfigError("config needs [grid] with vnr_db")
    _check_table(grid, _GRID_KEYS, "grid")
    bias = doc.get("bias", {"mode": "fixed", "values": [0.0]})
    _check_table(bias, _BIAS_KEYS, "bias")
    budgets = doc.get("budgets", {})
    _check_table(budgets, _BUDGET_KEYS, "budgets")
    kwargs = dict(
        m=lattice["m"],
        p=lattice.get("p", 997),
        k_info=lattice.get("k_info"),
        basis_file=lattice.get("basis_file"),
        target_volume=lattice.get("target_volume"),
        reduce_basis=lattice.get("reduce_basis", True),
        vnr_db=parse_grid(grid["vnr_db"]),
        bias_mode=bias.get("mode", "fixed"),
        bias_values=tuple(float(v) for v in bias.get("values", [0.0])),
        seed=doc.get("seed", 0),
        trials_per_point=doc.get("trials_per_point", 1000),
        target_errors=doc.get("target_errors", 100),
        decoders=tuple(doc.get("decoders", ["sphere", "stack"])),
        message_span=doc.get("message_span", 2),
        noise_variance=float(doc.get("noise_variance", 1.0)),
        noise_generator=doc.get("noise_generator", GAUSSIAN_ALGORITHM),
        max_stack_entries=budgets.get("max_stack_entries", 2 ** 20),
        max_visited_nodes=budgets.get("max_visited_nodes", 10 ** 6),
    )
    return SweepSpec(**kwargs)


def resolve_basis(spec: SweepSpec) -> LatticeBasis:
    """The (fixed) lattice of a sweep: loaded from file or drawn once from
    the seeded code stream and normalized to the target volume."""
    if spec.basis_file is not None:
        basis = load_basis(spec.basis_file)
        if basis.dimension != spec.m:
            raise InvalidConfigError(
                f"basis file dimension {basis.dimension} != configured m {spec.m}"
            )
        return basis
    target = spec.target_volume
    if target is None:
        target = (2.0 * math.pi * math.e) ** (spec.m / 2.0)
    parity = random_parity(spec.m, spec.resolved_k_info(), spec.p,
                           stream_rng(spec.seed, STREAM_CODE, 0))
    code = ModPCodeSpec(m=spec.m, p=spec.p, k_info=spec.resolved_k_info(), parity=parity)
    return construct_mod_p(code, target, reduce_basis=spec.reduce_basis)


def resolve_bias(bias_mode: str, value: float, mu_c: float, noise_variance: float) -> float:
    """Unnormalized decoder bias b for one grid point."""
    if bias_mode == "scaled":
        return (1.0 - math.sqrt(value)) * mu_c * noise_variance
    return float(value)


def _decoder_configs(spec: SweepSpec) -> list[tuple[str, float | None]]:
    configs: list[tuple[str, float | None]] = []
    if "sphere" in spec.decoders:
        configs.append(("sphere", None))
    if "stack" in spec.decoders:
        configs.extend(("stack", v) for v in spec.bias_values)
    return configs


def _run_trials(basis_arrays, spec_fields, mu_c, configs, t0, t1):
    """Decode trials [t0, t1) with every decoder config on shared randomness.

    Returns (errors, nodes, flagged) boolean/int arrays of shape
    (len(configs), t1 - t0).  Module-level so process pools can pickle it.
    """
    G, Q, R = basis_arrays
    (seed, span, sigma2, bias_mode, max_stack, max_nodes) = spec_fields
    m = G.shape[0]
    n = t1 - t0
    scale = math.sqrt(mu_c)
    rscaled = scale * R
    sigma = math.sqrt(sigma2)
    errors = np.zeros((len(configs), n), dtype=bool)
    flagged = np.zeros((len(configs), n), dtype=bool)
    nodes = np.zeros((len(configs), n), dtype=np.int64)
    for t in range(t0, t1):
        z = draw_message(m, span, stream_rng(seed, STREAM_MESSAGE, t))
        w = sigma * stream_rng(seed, STREAM_NOISE, t).standard_normal(m)
        y = scale * (G @ z) + w
        yprime = Q.T @ y
        col = t - t0
        for ci, (name, value) in enumerate(configs):
            if name == "sphere":
                zhat, _, nv, status = _kernels.sphere_search(rscaled, yprime, max_nodes)
            else:
                b = resolve_bias(bias_mode, value, mu_c, sigma2)
                zhat, _, nv, status = _kernels.stack_search(
                    rscaled, yprime, b, max_stack, max_nodes)
            bad = status != _kernels.STATUS_COMPLETED
            errors[ci, col] = bad or not np.array_equal(zhat, z)
            flagged[ci, col] = bad
            nodes[ci, col] = nv
    return errors, nodes, flagged


@dataclass(frozen=True)
class RowStats:
    """Aggregated results of one (grid point, decoder) cell."""

    mu_c_db: float
    mu_c: float
    bias_mode: str
    b_or_delta: float
    decoder: str
    trials: int
    errors: int
    fer: float
    fer_lo95: float
    fer_hi95: float
    mean_nodes: float
    median_nodes: float
    p95_nodes: float
    overflows: int
    seed: int


@dataclass(frozen=True)
class SweepResult:
    """All rows of a sweep plus reproducibility metadata."""

    rows: tuple[RowStats, ...]
    seed: int
    code_hash: str
    software_version: str = __version__

    def to_csv(self, out) -> None:
        """Write the CSV contract: header, one row per cell, LF endings,
        floats with 9 significant digits."""
        def fmt(v):
            if isinstance(v, float):
                return format(v, ".9g")
            return str(v)

        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(",".join(fmt(getattr(row, c)) for c in CSV_COLUMNS))
        text = "\n".join(lines) + "\n"
        if hasattr(out, "write"):
            out.write(text)
        else:
            write_atomic(out, text)


def write_atomic(path, text: str) -> None:
    """Write via a temp file + rename so readers never see partial output."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def binomial_interval(errors: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact (Clopper-Pearson) two-sided binomial interval."""
    if not 0 <= errors <= trials or trials < 1:
        raise ValueError("need 0 <= errors <= trials, trials >= 1")
    alpha = 1.0 - confidence
    lo = 0.0 if errors == 0 else float(beta.ppf(alpha / 2.0, errors, trials - errors + 1))
    hi = 1.0 if errors == trials else float(beta.ppf(1.0 - alpha / 2.0, errors + 1, trials - errors))
    return lo, hi


def code_fingerprint(basis: LatticeBasis) -> str:
    digest = hashlib.sha256()
    digest.update(np.int64(basis.dimension).tobytes())
    digest.update(np.ascontiguousarray(basis.generator).tobytes())
    return digest.hexdigest()[:16]


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"ignoring non-integer {WORKERS_ENV_VAR}={env!r}", file=sys.stderr)
    return 1


def _point_outcomes(basis, spec: SweepSpec, mu_c: float, configs, workers: int,
                    pool=None):
    """Per-trial outcome arrays for one grid point, early stop applied.

    Chunks are merged in trial order, so the result is identical for any
    worker count.
    """
    basis_arrays = (basis.generator, basis.q_factor, basis.r_factor)
    spec_fields = (spec.seed, spec.message_span, spec.noise_variance,
                   spec.bias_mode, spec.max_stack_entries, spec.max_visited_nodes)
    total = spec.trials_per_point
    if workers == 1:
        chunk = min(total, 256) if spec.target_errors > 0 else total
    else:
        chunk = max(64, math.ceil(total / (workers * 8)))
    bounds = [(t, min(t + chunk, total)) for t in range(0, total, chunk)]
    parts = []
    if pool is None or workers == 1:
        done = np.zeros(len(configs), dtype=np.int64)
        for t0, t1 in bounds:
            part = _run_trials(basis_arrays, spec_fields, mu_c, configs, t0, t1)
            parts.append(part)
            if spec.target_errors > 0:
                done += part[0].sum(axis=1)
                if np.all(done >= spec.target_errors):
                    break
    else:
        futures = [pool.submit(_run_trials, basis_arrays, spec_fields, mu_c, configs, t0, t1)
                   for t0, t1 in bounds]
        done = np.zeros(len(configs), dtype=np.int64)
        for fut in futures:
            part = fut.result()
            parts.append(part)
            if spec.target_errors > 0:
                done += part[0].sum(axis=1)
                if np.all(done >= spec.target_errors):
                    for rest in futures[len(parts):]:
                        rest.cancel()
                    break
    errors = np.concatenate([p[0] for p in parts], axis=1)
    nodes = np.concatenate([p[1] for p in parts], axis=1)
    flagged = np.concatenate([p[2] for p in parts], axis=1)
    if spec.target_errors > 0:
        cum = np.cumsum(errors, axis=1)
        reached = np.all(cum >= spec.target_errors, axis=0)
        hit = np.flatnonzero(reached)
        if hit.size:
            keep = hit[0] + 1
            errors, nodes, flagged = errors[:, :keep], nodes[:, :keep], flagged[:, :keep]
    return errors, nodes, flagged


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Run the paired trials of every grid point and aggregate per-decoder rows.

    Trials where a decoder ran out of budget or overflowed its stack count
    as frame errors for that decoder and are reported in ``overflows``.
    """
    basis = resolve_basis(spec)
    configs = _decoder_configs(spec)
    nworkers = _worker_count(workers)
    rows: list[RowStats] = []
    pool = ProcessPoolExecutor(max_workers=nworkers) if nworkers > 1 else None
    try:
        for db, mu_c in zip(spec.vnr_db, spec.mu_grid()):
            errors, nodes, flagged = _point_outcomes(basis, spec, mu_c, configs,
                                                     nworkers, pool)
            trials = errors.shape[1]
            for ci, (name, value) in enumerate(configs):
                nerr = int(errors[ci].sum())
                lo, hi = binomial_interval(nerr, trials)
                rows.append(RowStats(
                    mu_c_db=float(db),
                    mu_c=float(mu_c),
                    bias_mode="none" if name == "sphere" else spec.bias_mode,
                    b_or_delta=0.0 if value is None else float(value),
                    decoder=name,
                    trials=trials,
                    errors=nerr,
                    fer=nerr / trials,
                    fer_lo95=lo,
                    fer_hi95=hi,
                    mean_nodes=float(nodes[ci].mean()),
                    median_nodes=float(np.median(nodes[ci])),
                    p95_nodes=float(np.percentile(nodes[ci], 95)),
                    overflows=int(flagged[ci].sum()),
                    seed=spec.seed,
                ))
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return SweepResult(rows=tuple(rows), seed=spec.seed,
                       code_hash=code_fingerprint(basis))


def tail_distribution(spec: SweepSpec, mu_c_db: float, bias_value: float,
                      thresholds, workers: int | None = None):
    """Empirical Pr(visited nodes >= L) of the stack decoder at one point.

    Runs the full ``trials_per_point`` trials (no early stop) for a clean
    distribution.  Returns (list of (L, probability), trials).
    """
    if "stack" not in spec.decoders:
        raise InvalidConfigError("tail_distribution needs the stack decoder enabled")
    if bias_value not in spec.bias_values:
        raise InvalidConfigError(f"bias value {bias_value} not in spec.bias_values")
    point_spec = replace(spec, vnr_db=(float(mu_c_db),), decoders=("stack",),
                         bias_values=(float(bias_value),), target_errors=0)
    basis = resolve_basis(point_spec)
    configs = _decoder_configs(point_spec)
    nworkers = _worker_count(workers)
    pool = ProcessPoolExecutor(max_workers=nworkers) if nworkers > 1 else None
    try:
        _, nodes, _ = _point_outcomes(basis, point_spec, point_spec.mu_grid()[0],
                                      configs, nworkers, pool)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    counts = nodes[0]
    table = [(float(L), float(np.mean(counts >= L))) for L in thresholds]
    return table, counts.shape[0]
