"""Command-line front end: analytic tables, lattice construction, single
decodes, and Monte-Carlo sweeps.

All randomness flows from one --seed (default 0); subcomponents derive
their streams by labeled hashing of (seed, stream, trial).  Outputs are
machine-parseable CSV, written atomically (temp file + rename); pass
``--out -`` for standard output.  Worker processes for sweeps come from
the LATSEQ_WORKERS environment variable.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from .analysis import (
    ExponentQuery,
    complexity_estimate,
    cutoff_vnr,
    poltyrev_exponent,
    sequential_exponent,
)
from .channel import STREAM_CODE, stream_rng
from .decoders import StackConfig, sphere_decode, stack_decode
from .harness import (
    load_sweep_spec,
    parse_grid,
    resolve_basis,
    run_sweep,
    tail_distribution,
    write_atomic,
)
from .lattice import (
    ModPCodeSpec,
    construct_mod_p,
    load_basis,
    mod_p_kappa,
    random_parity,
    save_basis,
)

LN2 = math.log(2.0)


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".9g")
    return str(v)


def _emit_csv(out: str, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        write_atomic(out, text)


def _biased_exponent(mu: float, mode: str, value: float) -> float:
    if mode == "scaled":
        return sequential_exponent(ExponentQuery(mu_c=mu, delta=value), "scaled")
    if value >= mu:
        # bias at or above the VNR: no reliability exponent remains
        return 0.0
    return sequential_exponent(ExponentQuery(mu_c=mu, normalized_bias=value), "fixed")


def _cmd_exponent(args) -> int:
    mu_db = parse_grid(args.mu_db)
    if args.delta is not None:
        mode, values = "scaled", parse_grid(args.delta)
    elif args.bn is not None:
        mode, values = "fixed", parse_grid(args.bn)
    else:
        mode, values = "fixed", (0.0,)
    rows = []
    for db in mu_db:
        mu = 10.0 ** (db / 10.0)
        ep = poltyrev_exponent(mu)
        for v in values:
            eb = _biased_exponent(mu, mode, v)
            rows.append((float(db), mu, mode, float(v), ep, eb, ep / LN2, eb / LN2))
    _emit_csv(args.out, ("mu_c_db", "mu_c", "bias_mode", "b_or_delta",
                         "e_p", "e_b", "e_p_log2", "e_b_log2"), rows)
    return 0


def _cmd_cutoff(args) -> int:
    values = parse_grid(args.bn)
    if args.out is None:
        for bn in values:
            print(format(cutoff_vnr(bn), ".10g"))
        return 0
    rows = []
    for bn in values:
        mu0 = cutoff_vnr(bn)
        rows.append((float(bn), mu0, 10.0 * math.log10(mu0)))
    _emit_csv(args.out, ("b_n", "mu_0", "mu_0_db"), rows)
    return 0


def _make_mod_p_basis(m: int, p: int, k_info: int | None, seed: int,
                      target_volume: float | None, reduce_basis: bool):
    if k_info is None:
        k_info = math.ceil(m / 2)
    if target_volume is None:
        target_volume = (2.0 * math.pi * math.e) ** (m / 2.0)
    parity = random_parity(m, k_info, p, stream_rng(seed, STREAM_CODE, 0))
    spec = ModPCodeSpec(m=m, p=p, k_info=k_info, parity=parity)
    return construct_mod_p(spec, target_volume, reduce_basis=reduce_basis), k_info, target_volume


def _cmd_complexity_estimate(args) -> int:
    if args.basis:
        basis = load_basis(args.basis)
    else:
        basis, _, _ = _make_mod_p_basis(args.m, args.p, args.k_info, args.seed,
                                        None, not args.raw)
    bns = parse_grid(args.bn)
    rows = []
    for db in parse_grid(args.mu_db):
        mu = 10.0 ** (db / 10.0)
        for bn in bns:
            est = complexity_estimate(basis, bn, mu)
            rows.append((float(db), mu, float(bn), est.total))
    _emit_csv(args.out, ("mu_c_db", "mu_c", "b_n", "est_total_nodes"), rows)
    return 0


def _cmd_make_lattice(args) -> int:
    basis, k_info, volume = _make_mod_p_basis(
        args.m, args.p, args.k_info, args.seed, args.target_volume, not args.raw)
    save_basis(basis, args.out)
    kappa = mod_p_kappa(args.m, args.p, k_info, volume)
    print(f"# seed={args.seed} m={args.m} p={args.p} k_info={k_info} "
          f"kappa={kappa:.9g} volume={basis.volume:.9g}", file=sys.stderr)
    return 0


def _parse_vector(args) -> np.ndarray:
    if args.y_file:
        return np.loadtxt(args.y_file, dtype=float).ravel()
    return np.array([float(v) for v in args.y.split(",")])


def _cmd_decode(args) -> int:
    basis = load_basis(args.basis)
    y = _parse_vector(args)
    scale = args.scale if args.scale is not None else math.sqrt(10.0 ** (args.mu_db / 10.0))
    if args.decoder == "sphere":
        outcome = sphere_decode(basis, y, scale, max_visited_nodes=args.max_nodes)
    else:
        cfg = StackConfig(bias=args.bias, max_stack_entries=args.max_stack,
                          max_visited_nodes=args.max_nodes)
        outcome = stack_decode(basis, y, scale, cfg)
    m = basis.dimension
    header = ("decoder", "status", "visited_nodes", "distance_sq", "best_metric",
              *(f"z{i}" for i in range(m)))
    metric = "" if outcome.best_metric is None else _fmt(outcome.best_metric)
    row = (args.decoder, outcome.status.value, outcome.visited_nodes,
           outcome.distance_sq, metric, *(int(v) for v in outcome.decoded))
    _emit_csv(args.out, header, [row])
    return 0


def _cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.config)
    result = run_sweep(spec)
    if args.out == "-":
        result.to_csv(sys.stdout)
    else:
        result.to_csv(args.out)
    print(f"# seed={result.seed} code_hash={result.code_hash} "
          f"version={result.software_version}", file=sys.stderr)
    return 0


def _cmd_tail(args) -> int:
    spec = load_sweep_spec(args.config)
    thresholds = parse_grid(args.thresholds)
    table, trials = tail_distribution(spec, args.mu_db, args.bias, thresholds)
    rows = [(L, prob, trials) for L, prob in table]
    _emit_csv(args.out, ("threshold", "prob_nodes_ge_threshold", "trials"), rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latseq",
        description="Lattice coding tools for the unconstrained AWGN channel.",
        epilog=f"Grids are start:step:stop (inclusive) or comma lists. "
               f"Set LATSEQ_WORKERS to parallelize sweeps. Version {__version__}.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponent", help="error-exponent table over a VNR grid")
    p.add_argument("--mu-db", required=True, help="VNR grid in dB")
    p.add_argument("--bn", help="fixed normalized bias value(s)")
    p.add_argument("--delta", help="scaled-bias delta value(s) in (0, 1]")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_exponent)

    p = sub.add_parser("cutoff", help="cut-off VNR for normalized bias value(s)")
    p.add_argument("--bn", required=True)
    p.add_argument("--out", default=None,
                   help="CSV output; omit to print bare values")
    p.set_defaults(func=_cmd_cutoff)

    p = sub.add_parser("complexity-estimate", help="analytic node-count table")
    p.add_argument("--mu-db", required=True)
    p.add_argument("--bn", default="0")
    p.add_argument("--basis", help="basis file (else a mod-p code is built)")
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--p", type=int, default=997)
    p.add_argument("--k-info", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--raw", action="store_true", help="skip basis reduction")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_complexity_estimate)

    p = sub.add_parser("make-lattice", help="construct a mod-p lattice basis file")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--p", type=int, default=997)
    p.add_argument("--k-info", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-volume", type=float, default=None,
                   help="cell volume (default (2 pi e)^(m/2))")
    p.add_argument("--raw", action="store_true", help="skip basis reduction")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_make_lattice)

    p = sub.add_parser("decode", help="decode one received vector")
    p.add_argument("--basis", required=True)
    p.add_argument("--decoder", choices=("sphere", "stack"), default="sphere")
    p.add_argument("--bias", type=float, default=0.0)
    p.add_argument("--mu-db", type=float, default=0.0)
    p.add_argument("--scale", type=float, default=None,
                   help="basis scale (overrides --mu-db)")
    p.add_argument("--y", help="comma-separated received vector")
    p.add_argument("--y-file", help="whitespace-separated received vector file")
    p.add_argument("--max-nodes", type=int, default=10 ** 6)
    p.add_argument("--max-stack", type=int, default=2 ** 20)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("sweep", help="run a Monte-Carlo sweep from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("tail", help="complexity tail distribution at one grid point")
    p.add_argument("--config", required=True)
    p.add_argument("--mu-db", type=float, required=True)
    p.add_argument("--bias", type=float, required=True,
                   help="bias value (or delta) from the config's bias list")
    p.add_argument("--thresholds", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_tail)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "decode" and not (args.y or args.y_file):
        parser.error("decode needs --y or --y-file")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
