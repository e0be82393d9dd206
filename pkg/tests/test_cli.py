import os

import numpy as np
import pytest

from conftest import data_path
from qicas import build_hubbard, write_fcidump
from qicas.cli import main
from qicas.hamiltonian import write_orbitals
from qicas.rotation import random_orthogonal


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def read(path):
    with open(path) as f:
        return f.read()


def test_solve_dimer(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "--hubbard", "2,1.0,4.0", "--nelec", "2", "--out", str(tmp_path))
    assert code == 0
    assert out.strip() == "E = -0.828427125"
    assert read(tmp_path / "energy.csv") == "field,value\ne_fci,-0.828427125\n"
    manifest = read(tmp_path / "manifest.txt")
    assert "command=solve" in manifest and "tol=1e-09" in manifest and "precision=9" in manifest


def test_precision_flag(capsys, tmp_path):
    _, out, _ = run(capsys, "solve", "--hubbard", "2,1,4", "--precision", "4", "--out", str(tmp_path))
    assert out.strip() == "E = -0.8284"


def test_qicas_byte_identical(capsys, tmp_path):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        code, out, _ = run(capsys, "qicas", "--hubbard", "2,1.0,4.0", "--cas", "2,1", "--seed", "7",
                           "--out", str(d))
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    for f in ("history.csv", "orbitals.txt", "qicas.csv", "restarts.csv"):
        assert read(tmp_path / "a" / f) == read(tmp_path / "b" / f)


def test_manifest_replays_run(capsys, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    run(capsys, "qicas", "--hubbard", "4,1,4", "--cas", "2,2", "--seed", "3", "--restarts", "2",
        "--eps1", "1e-7", "--out", str(first))
    code, _, _ = run(capsys, "qicas", "--config", str(first / "manifest.txt"), "--out", str(second))
    assert code == 0
    for f in ("history.csv", "orbitals.txt", "qicas.csv"):
        assert read(first / f) == read(second / f)
    assert "eps1=1e-07" in read(second / "manifest.txt")


def test_flags_override_config(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("hubbard=2,1,4\nprecision=3\n# comment\n")
    code, out, _ = run(capsys, "solve", "--config", str(cfg), "--precision", "5", "--out", str(tmp_path / "o"))
    assert code == 0 and out.strip() == "E = -0.82843"
    code, out, _ = run(capsys, "solve", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert out.strip() == "E = -0.828"


def test_bad_config_is_usage_error(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("hubbard=2,1,4\nbogus=1\n")
    code, _, err = run(capsys, "solve", "--config", str(cfg))
    assert code == 2 and "bogus" in err


def test_bound_all_active_from_files(capsys, tmp_path):
    fcidump = tmp_path / "x.fcidump"
    fcidump.write_text(write_fcidump(build_hubbard(4, 1.0, 4.0)))
    basis = tmp_path / "u.txt"
    basis.write_text(write_orbitals(random_orthogonal(4, 2)))
    code, out, _ = run(capsys, "bound", "--fcidump", str(fcidump), "--cas", "4,4", "--basis-file",
                       str(basis), "--out", str(tmp_path / "o"))
    assert code == 0
    assert "delta_e = 0.000000000" in out
    rows = dict(line.split(",") for line in read(tmp_path / "o" / "bound.csv").splitlines()[1:])
    assert abs(float(rows["delta_e"])) < 1e-9 and rows["chain_d"] == "True"


@pytest.mark.parametrize("argv", [
    ["solve", "--bogus"],
    ["solve"],
    ["solve", "--hubbard", "2,1,4", "--fcidump", "x"],
    ["solve", "--hubbard", "2,1"],
    ["frobnicate"],
    ["casci", "--hubbard", "2,1,4"],
    ["casci", "--hubbard", "4,1,4", "--cas", "2,2", "--active", "0"],
    ["qicas", "--hubbard", "2,1,4", "--cas", "2,1", "--scope", "and"],
])
def test_usage_errors(capsys, argv, tmp_path):
    code, _, err = run(capsys, *argv, "--out", str(tmp_path)) if argv[0] != "frobnicate" else run(capsys, *argv)
    assert code == 2
    assert err


def test_missing_file_exit_1(capsys, tmp_path):
    missing = str(tmp_path / "nope.fcidump")
    code, _, err = run(capsys, "solve", "--fcidump", missing, "--out", str(tmp_path))
    assert code == 1 and missing in err
    code, _, err = run(capsys, "casci", "--hubbard", "2,1,4", "--cas", "2,2", "--basis-file",
                       str(tmp_path / "u.txt"), "--out", str(tmp_path))
    assert code == 1 and "u.txt" in err


def test_domain_error_exit_1(capsys, tmp_path):
    code, _, err = run(capsys, "casci", "--hubbard", "4,1,4", "--cas", "2,3", "--out", str(tmp_path))
    assert code == 0
    code, _, err = run(capsys, "casci", "--hubbard", "4,1,4", "--cas", "1,2", "--out", str(tmp_path))
    assert code == 1 and "CAS(1,2)" in err
    code, _, err = run(capsys, "size", "--hubbard", "6,1,4", "--out", str(tmp_path))
    assert code == 1 and "run of" in err


def test_fixture_fcidump_solve(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "--fcidump", data_path("h2_minimal.fcidump"), "--out", str(tmp_path))
    assert code == 0 and out.startswith("E = -1.13715")


def test_every_subcommand_writes_csv(capsys, tmp_path):
    base = ["--hubbard", "4,1,4"]
    cases = {
        "solve": [],
        "rdm": [],
        "entropy": ["--cas", "2,2"],
        "qicas": ["--cas", "2,2"],
        "casci": ["--cas", "2,2"],
        "scan": ["--cas", "2,2", "--n", "4"],
        "bound": ["--cas", "2,2"],
        "pipeline": ["--cas", "2,2", "--n", "3"],
    }
    for cmd, extra in cases.items():
        out = tmp_path / cmd
        code, line, err = run(capsys, cmd, *base, *extra, "--out", str(out))
        assert code == 0, (cmd, err)
        assert line.count("\n") == 1
        files = os.listdir(out)
        assert "manifest.txt" in files and any(f.endswith(".csv") for f in files)


def test_size_subcommand(capsys, tmp_path):
    from conftest import dimer_pairs_hamiltonian
    fcidump = tmp_path / "pairs.fcidump"
    fcidump.write_text(write_fcidump(dimer_pairs_hamiltonian()))
    code, out, err = run(capsys, "size", "--fcidump", str(fcidump), "--restarts", "2", "--out", str(tmp_path / "o"))
    assert code == 0, err
    assert out.startswith("D_CAS = 4")
    assert read(tmp_path / "o" / "threshold.csv").startswith("threshold,count\n0.01,")


def test_jobs_do_not_change_output(capsys, tmp_path):
    for jobs in ("1", "2"):
        run(capsys, "scan", "--hubbard", "4,1,4", "--cas", "2,2", "--n", "6", "--jobs", jobs,
            "--out", str(tmp_path / jobs))
    assert read(tmp_path / "1" / "scan.csv") == read(tmp_path / "2" / "scan.csv")
    assert np.isfinite(float(read(tmp_path / "1" / "scan.csv").splitlines()[1].split(",")[0]))
