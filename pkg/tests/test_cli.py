import math

import numpy as np
import pytest

from latseq.cli import main
from latseq.lattice import load_basis

CONFIG = """
seed = 5
trials_per_point = 60
target_errors = 0
decoders = ["sphere", "stack"]

[lattice]
m = 4
p = 11
k_info = 2

[grid]
vnr_db = "2:2:6"

[bias]
mode = "fixed"
values = [0.5, 2.0]
"""


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_cutoff_prints_golden_value(capsys):
    code, out, _ = run_cli(capsys, "cutoff", "--bn", "0")
    assert code == 0
    assert out.strip() == "1.471517765"


def test_cutoff_csv(capsys, tmp_path):
    out_file = tmp_path / "c.csv"
    code, _, _ = run_cli(capsys, "cutoff", "--bn", "0,1", "--out", str(out_file))
    assert code == 0
    lines = out_file.read_text().splitlines()
    assert lines[0] == "b_n,mu_0,mu_0_db"
    assert lines[1].startswith("0,1.47151776")


def test_exponent_table(capsys):
    code, out, _ = run_cli(capsys, "exponent", "--mu-db", "0:0.5:10", "--out", "-")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "mu_c_db,mu_c,bias_mode,b_or_delta,e_p,e_b,e_p_log2,e_b_log2"
    assert len(lines) == 22  # header + 21 grid points
    first = lines[1].split(",")
    assert float(first[4]) == 0.0  # E_p at 0 dB (capacity) vanishes
    # fixed bias column matches E_p when b_n = 0
    for line in lines[1:]:
        cells = line.split(",")
        assert cells[4] == cells[5]


def test_exponent_scaled_mode(capsys):
    code, out, _ = run_cli(
        capsys, "exponent", "--mu-db", "12.0412", "--delta", "0.5", "--out", "-")
    assert code == 0
    cells = out.splitlines()[1].split(",")
    assert cells[2] == "scaled"
    assert float(cells[5]) == pytest.approx(1.0, rel=1e-4)  # delta*mu_c/8 at mu_c = 16


def test_make_lattice_decode_round_trip(capsys, tmp_path):
    basis_file = tmp_path / "code.txt"
    code, _, err = run_cli(capsys, "make-lattice", "--m", "6", "--p", "31",
                           "--k-info", "3", "--seed", "9", "--out", str(basis_file))
    assert code == 0
    assert "seed=9" in err
    b1 = load_basis(basis_file)
    b2 = load_basis(basis_file)
    assert np.array_equal(b1.q_factor, b2.q_factor)
    assert np.array_equal(b1.r_factor, b2.r_factor)
    y = ",".join(str(v) for v in 0.3 * np.arange(6))
    code, out, _ = run_cli(capsys, "decode", "--basis", str(basis_file),
                           "--decoder", "stack", "--bias", "1.0",
                           "--mu-db", "6", "--y", y)
    assert code == 0
    lines = out.splitlines()
    header = lines[0].split(",")
    assert header[:5] == ["decoder", "status", "visited_nodes", "distance_sq", "best_metric"]
    assert header[5:] == [f"z{i}" for i in range(6)]
    cells = lines[1].split(",")
    assert cells[0] == "stack"
    assert cells[1] == "completed"
    assert int(cells[2]) >= 6


def test_decode_sphere_stdout(capsys, tmp_path):
    basis_file = tmp_path / "code.txt"
    run_cli(capsys, "make-lattice", "--m", "4", "--p", "11", "--out", str(basis_file))
    code, out, _ = run_cli(capsys, "decode", "--basis", str(basis_file),
                           "--y", "0.1,0.2,0.3,0.4", "--scale", "1.0")
    assert code == 0
    cells = out.splitlines()[1].split(",")
    assert cells[0] == "sphere"
    assert cells[4] == ""  # no stack metric for the sphere decoder


def test_sweep_deterministic_files(capsys, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(CONFIG)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    code, _, err = run_cli(capsys, "sweep", "--config", str(cfg), "--out", str(out1))
    assert code == 0
    assert "code_hash=" in err
    code, _, _ = run_cli(capsys, "sweep", "--config", str(cfg), "--out", str(out2))
    assert code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_tail_cli(capsys, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(CONFIG)
    code, out, _ = run_cli(capsys, "tail", "--config", str(cfg), "--mu-db", "2",
                           "--bias", "0.5", "--thresholds", "0,4,1000000")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "threshold,prob_nodes_ge_threshold,trials"
    assert lines[1].split(",")[1] == "1"
    assert lines[-1].split(",")[1] == "0"


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["decode"])  # missing --basis
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["bogus-command"])
    assert exc.value.code == 2


def test_decode_requires_vector(capsys, tmp_path):
    basis_file = tmp_path / "code.txt"
    run_cli(capsys, "make-lattice", "--m", "4", "--p", "11", "--out", str(basis_file))
    with pytest.raises(SystemExit) as exc:
        main(["decode", "--basis", str(basis_file)])
    assert exc.value.code == 2


def test_runtime_error_exit_1(capsys):
    code, _, err = run_cli(capsys, "sweep", "--config", "/nonexistent.toml",
                           "--out", "-")
    assert code == 1
    assert "error:" in err


def test_grid_endpoint_inclusion(capsys):
    code, out, _ = run_cli(capsys, "exponent", "--mu-db", "1.5:0.75:6", "--out", "-")
    rows = out.splitlines()[1:]
    assert len(rows) == 7
    assert float(rows[-1].split(",")[0]) == pytest.approx(6.0)
