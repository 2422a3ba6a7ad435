"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s``.  The tradeoff sweep
(criteria 4/5) uses the m = 16 mod-997 rate-1/2 code at 10^4 paired trials
per grid point; all statistical claims are asserted at 95% confidence.
"""
import math
import time

import numpy as np
import pytest
from helpers import brute_force_cvp, random_basis

from latseq.analysis import (
    ExponentQuery,
    complexity_estimate,
    cutoff_vnr,
    effective_vnr,
    poltyrev_exponent,
    sequential_exponent,
)
from latseq.channel import STREAM_MESSAGE, STREAM_NOISE, draw_message, stream_rng
from latseq.cli import main as cli_main
from latseq.decoders import DecodeStatus, StackConfig, sphere_decode, stack_decode
from latseq.harness import (
    SweepSpec,
    _decoder_configs,
    _point_outcomes,
    binomial_interval,
    resolve_basis,
)
from latseq.lattice import build_basis

TWO_PI_E = 2.0 * math.pi * math.e
GRID_DB = (1.5, 2.25, 3.0, 3.75, 4.5, 5.25, 6.0)
TRIALS = 10_000
SEED = 2024


def _report(num: int, detail: str) -> None:
    print(f"[PASS] criterion {num}: {detail}")


@pytest.fixture(scope="module")
def tradeoff_data():
    """Paired per-trial outcomes of the m=16 Construction-A sweep."""
    t0 = time.time()
    spec = SweepSpec(
        m=16, p=997, k_info=8,
        vnr_db=GRID_DB, bias_mode="fixed", bias_values=(0.5, 1.0, 2.0),
        trials_per_point=TRIALS, target_errors=0, seed=SEED,
        max_visited_nodes=200_000,
    )
    basis = resolve_basis(spec)
    configs = _decoder_configs(spec)
    points = []
    for db, mu in zip(spec.vnr_db, spec.mu_grid()):
        errors, nodes, _ = _point_outcomes(basis, spec, mu, configs, 1)
        points.append((db, mu, errors, nodes))
    return spec, basis, configs, points, time.time() - t0


def test_criterion_1_analytic_golden_values():
    t0 = time.time()
    assert cutoff_vnr(0.0) == pytest.approx(4.0 / math.e, rel=1e-12)
    assert poltyrev_exponent(1.0) == 0.0
    # branch agreement at the joints
    assert 0.5 * (1.0 - math.log(2.0)) == pytest.approx(
        0.5 * math.log(math.e * 2.0 / 4.0), abs=1e-12)
    assert 0.5 * math.log(math.e) == pytest.approx(4.0 / 8.0, abs=1e-12)
    assert poltyrev_exponent(2.0) == pytest.approx(0.5 * (1.0 - math.log(2.0)), rel=1e-12)
    assert poltyrev_exponent(4.0) == pytest.approx(0.5, rel=1e-12)
    for bn in (0.0, 0.1, 1.0, 10.0, 100.0):
        assert effective_vnr(cutoff_vnr(bn), bn) == pytest.approx(4.0 / math.e, rel=1e-12)
    elapsed = time.time() - t0
    assert elapsed < 1.0
    _report(1, f"golden values exact to 1e-12 ({elapsed:.3f} s)")


def test_criterion_2_sphere_decoder_oracle():
    t0 = time.time()
    rng = np.random.default_rng(7)
    mismatches = 0
    for trial in range(200):
        m = 2 + trial % 3
        basis = random_basis(rng, m)
        scale = float(rng.uniform(0.5, 2.0))
        y = 2.0 * rng.normal(size=m)
        zbest, best = brute_force_cvp(scale * basis.generator, y)
        out = sphere_decode(basis, y, scale)
        if not np.array_equal(out.decoded, zbest):
            mismatches += 1
        assert out.distance_sq == pytest.approx(best, abs=1e-9)
    elapsed = time.time() - t0
    assert mismatches == 0
    assert elapsed < 30.0
    _report(2, f"200/200 exhaustive-search matches ({elapsed:.2f} s)")


def test_criterion_3_stack_b0_equivalence():
    t0 = time.time()
    rng = np.random.default_rng(11)
    mismatches = 0
    for trial in range(50):
        m = 2 + trial % 7
        basis = random_basis(rng, m)
        y = 1.5 * rng.normal(size=m)
        sp = sphere_decode(basis, y, 1.0)
        st = stack_decode(basis, y, 1.0, StackConfig(bias=0.0))
        same_point = np.array_equal(st.decoded, sp.decoded)
        same_distance = abs(st.distance_sq - sp.distance_sq) <= 1e-9
        if not (same_point or same_distance):
            mismatches += 1
    elapsed = time.time() - t0
    assert mismatches == 0
    assert elapsed < 60.0
    _report(3, f"50/50 zero-bias decodes match the sphere decoder ({elapsed:.2f} s)")


def test_criterion_4_performance_complexity_tradeoff(tradeoff_data):
    spec, basis, configs, points, build_time = tradeoff_data
    t0 = time.time()
    i_sphere = configs.index(("sphere", None))
    i_b1 = configs.index(("stack", 1.0))
    checked_fer = checked_nodes = 0
    details = []
    for db, mu, errors, nodes in points:
        n = errors.shape[1]
        assert n >= 10_000
        e_sp = int(errors[i_sphere].sum())
        e_st = int(errors[i_b1].sum())
        fer_sp, fer_st = e_sp / n, e_st / n
        # (a) error rates within a factor of 3 wherever both exceed 1e-3,
        #     and the factor-3 claim is not rejected at 95%
        if fer_sp > 1e-3 and fer_st > 1e-3:
            lo_st, _ = binomial_interval(e_st, n)
            _, hi_sp = binomial_interval(e_sp, n)
            assert fer_st <= 3.0 * fer_sp, f"FER ratio breached at {db} dB"
            assert lo_st <= 3.0 * hi_sp
            checked_fer += 1
            details.append(f"{db}dB ratio {fer_st / fer_sp:.2f}")
        # (b) strictly fewer visited nodes below 4 dB, one-sided 95%
        if db < 4.0:
            diff = nodes[i_b1].astype(float) - nodes[i_sphere].astype(float)
            bound = diff.mean() + 1.645 * diff.std(ddof=1) / math.sqrt(n)
            assert bound < 0.0, f"node-count reduction not significant at {db} dB"
            checked_nodes += 1
    elapsed = build_time + (time.time() - t0)
    assert checked_fer >= 2
    assert checked_nodes >= 3
    assert elapsed < 600.0
    _report(4, f"{checked_fer} FER points within x3 ({', '.join(details)}); "
               f"{checked_nodes} points with significant node reduction ({elapsed:.1f} s)")


def test_criterion_5_fixed_bias_right_shift(tradeoff_data):
    spec, basis, configs, points, _ = tradeoff_data
    biases = [(b, configs.index(("stack", b))) for b in (0.5, 1.0, 2.0)]
    for db, mu, errors, nodes in points:
        n = errors.shape[1]
        for (b_small, i_small), (b_large, i_large) in zip(biases, biases[1:]):
            lo_small, _ = binomial_interval(int(errors[i_small].sum()), n)
            _, hi_large = binomial_interval(int(errors[i_large].sum()), n)
            # nondecreasing in b within 95% intervals: a significant
            # decrease would put the larger bias's upper limit below the
            # smaller bias's lower limit
            assert hi_large >= lo_small, (
                f"FER(b={b_large}) significantly below FER(b={b_small}) at {db} dB")
    _report(5, f"FER nondecreasing in bias across {len(points)} grid points "
               f"for b in (0.5, 1, 2)")


def test_criterion_6_scaled_bias_slope(tradeoff_data):
    spec, basis, configs, points, _ = tradeoff_data
    t0 = time.time()
    # analytic: zero below 1/delta, delta*mu_c/8 beyond 4/delta, exact
    for delta in (0.5, 0.75, 1.0):
        grid = np.linspace(0.02, 6.0 / delta, 1000)
        values = sequential_exponent(ExponentQuery(mu_c=grid, delta=delta), "scaled")
        below = grid <= 1.0 / delta
        assert np.all(values[below] == 0.0)
        top = grid >= 4.0 / delta
        assert np.allclose(values[top], delta * grid[top] / 8.0, rtol=1e-12, atol=0)
    # empirical: at fixed mu_c = 2/0.75 (the 2/delta point of the middle
    # delta), the frame-error rate rises as delta falls, pairwise at 95%
    mu_db = 10.0 * math.log10(2.0 / 0.75)
    scaled_spec = SweepSpec(
        m=16, p=997, k_info=8, vnr_db=(mu_db,), bias_mode="scaled",
        bias_values=(0.5, 0.75, 1.0), decoders=("stack",),
        trials_per_point=TRIALS, target_errors=0, seed=SEED,
        max_visited_nodes=200_000,
    )
    sc_configs = _decoder_configs(scaled_spec)
    errors, _, _ = _point_outcomes(basis, scaled_spec, scaled_spec.mu_grid()[0],
                                   sc_configs, 1)
    n = errors.shape[1]
    assert n >= 10_000
    counts = {delta: int(errors[i].sum()) for i, (_, delta) in enumerate(sc_configs)}
    fers = []
    for d_small, d_large in ((0.5, 0.75), (0.75, 1.0)):
        lo_small, _ = binomial_interval(counts[d_small], n)
        _, hi_large = binomial_interval(counts[d_large], n)
        assert lo_small > hi_large, (
            f"FER(delta={d_small}) not significantly above FER(delta={d_large})")
        fers.append(f"delta={d_small}: {counts[d_small] / n:.4f}")
    elapsed = time.time() - t0
    _report(6, f"piecewise exponent exact; FER rises as delta falls at "
               f"{mu_db:.2f} dB ({', '.join(fers)}, delta=1: {counts[1.0] / n:.4f}) "
               f"({elapsed:.1f} s)")


def test_criterion_7_high_vnr_complexity_floor():
    t0 = time.time()
    mu = 20.0
    scale = math.sqrt(mu)
    details = []
    for m in (8, 16):
        basis = build_basis(math.sqrt(TWO_PI_E) * np.eye(m))
        for bias in (0.5, 5.0):
            counts = np.empty(1000)
            for t in range(1000):
                z = draw_message(m, 2, stream_rng(SEED, STREAM_MESSAGE, t))
                w = stream_rng(SEED, STREAM_NOISE, t).standard_normal(m)
                y = scale * (basis.generator @ z) + w
                out = stack_decode(basis, y, scale, StackConfig(bias=bias))
                assert out.status is DecodeStatus.COMPLETED
                counts[t] = out.visited_nodes
            mean = counts.mean()
            assert mean == pytest.approx(m, rel=0.05), (m, bias, mean)
            details.append(f"m={m} b={bias}: {mean:.2f}")
        est = complexity_estimate(basis, 1.0, 1e9)
        assert est.total == pytest.approx(m, rel=1e-3)
    elapsed = time.time() - t0
    assert elapsed < 60.0
    _report(7, f"mean visited nodes at mu_c=20 within 5% of m ({'; '.join(details)}); "
               f"analytic estimate at mu_c=1e9 within 1e-3 ({elapsed:.1f} s)")


def test_criterion_8_sweep_determinism(tmp_path, capsys):
    config = tmp_path / "run.toml"
    config.write_text(
        """
seed = 31
trials_per_point = 120
target_errors = 0
decoders = ["sphere", "stack"]

[lattice]
m = 8
p = 97
k_info = 4

[grid]
vnr_db = "2:2:6"

[bias]
mode = "fixed"
values = [1.0]
""")
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli_main(["sweep", "--config", str(config), "--out", str(out1)]) == 0
    assert cli_main(["sweep", "--config", str(config), "--out", str(out2)]) == 0
    capsys.readouterr()
    b1, b2 = out1.read_bytes(), out2.read_bytes()
    assert b1 == b2
    assert b1.decode("utf-8").splitlines()[0].startswith("mu_c_db,")
    _report(8, f"rerun produced byte-identical CSV ({len(b1)} bytes)")
