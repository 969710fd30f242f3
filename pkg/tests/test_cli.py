import csv
import io
import subprocess
import sys

import pytest

from sbci.cli import SWEEP_HEADER, main
from sbci.metrics import SUMMARY_HEADER

CONFIG = "n_peers=40\ntotal_transactions=800\nfr_fraction=0.2\nseed=3\n"


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text(CONFIG)
    return p


def read_csv(path):
    return list(csv.reader(io.StringIO(path.read_text())))


def test_run_writes_outputs(cfg_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(cfg_file), "--out", str(out)]) == 0
    for name in ("scatter.csv", "summary.csv", "transactions.log", "config.txt"):
        assert (out / name).is_file()
    rows = read_csv(out / "summary.csv")
    assert rows[0] == SUMMARY_HEADER and len(rows) == 2
    assert len(read_csv(out / "scatter.csv")) == 41
    assert capsys.readouterr().out == (out / "summary.csv").read_text()


def test_run_is_byte_identical(cfg_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(cfg_file), "--out", str(a)]) == 0
    assert main(["run", str(cfg_file), "--out", str(b)]) == 0
    for name in ("scatter.csv", "summary.csv", "transactions.log", "config.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_echo_reproduces_run(cfg_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", str(cfg_file), "--out", str(a), "--epoch-size", "5"])
    main(["run", str(a / "config.txt"), "--out", str(b)])
    assert "epoch_size=5" in (a / "config.txt").read_text()
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()
    assert (a / "transactions.log").read_bytes() == (b / "transactions.log").read_bytes()


def test_seed_override(cfg_file, tmp_path):
    main(["run", str(cfg_file), "--out", str(tmp_path / "a")])
    main(["run", str(cfg_file), "--out", str(tmp_path / "b"), "--seed", "99"])
    assert "seed=99" in (tmp_path / "b" / "config.txt").read_text()
    assert (tmp_path / "a" / "transactions.log").read_bytes() != (tmp_path / "b" / "transactions.log").read_bytes()


def test_unknown_key_fails_naming_it(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(CONFIG + "turbo=yes\n")
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) != 0
    captured = capsys.readouterr()
    assert "turbo" in captured.err
    assert captured.out == ""
    assert not (tmp_path / "o").exists()


def test_missing_config(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.cfg")]) != 0
    assert "nope.cfg" in capsys.readouterr().err


def test_sweep_grid(tmp_path, capsys):
    spec = tmp_path / "grid.sweep"
    spec.write_text("alphas=0.9,0.6,0.3\nfr_fractions=0.1,0.3,0.5,0.7\n"
                    "n_peers=30\ntotal_transactions=300\nseed=10\n")
    out = tmp_path / "grid"
    assert main(["sweep", str(spec), "--out", str(out), "--jobs", "1"]) == 0
    rows = read_csv(out / "sweep_summary.csv")
    assert rows[0] == SWEEP_HEADER
    assert len(rows) == 13
    assert all(r[-1] == "ok" for r in rows[1:])
    assert [r[4] for r in rows[1:]] == [str(s) for s in range(10, 22)]
    assert (out / "cell_011" / "summary.csv").is_file()
    table = capsys.readouterr().out
    assert "AAD" in table and len(table.splitlines()) == 13


def test_sweep_parallel_matches_serial(tmp_path):
    spec = tmp_path / "g.sweep"
    spec.write_text("alphas=0.9,0.3\nfr_fractions=0.2\nn_peers=30\ntotal_transactions=200\n")
    main(["sweep", str(spec), "--out", str(tmp_path / "s"), "--jobs", "1"])
    main(["sweep", str(spec), "--out", str(tmp_path / "p"), "--jobs", "2"])
    assert (tmp_path / "s" / "sweep_summary.csv").read_bytes() == (tmp_path / "p" / "sweep_summary.csv").read_bytes()


def test_sweep_with_failing_cell(tmp_path, capsys):
    spec = tmp_path / "g.sweep"
    spec.write_text("alphas=0.9,1.0\nfr_fractions=0.2\nn_peers=30\ntotal_transactions=200\n")
    assert main(["sweep", str(spec), "--out", str(tmp_path / "g"), "--jobs", "1"]) == 1
    rows = read_csv(tmp_path / "g" / "sweep_summary.csv")
    assert rows[1][-1] == "ok"
    assert rows[2][-1].startswith("error") and "alpha" in rows[2][-1]


def test_sweep_empty_alpha_list(tmp_path, capsys):
    spec = tmp_path / "g.sweep"
    spec.write_text("alphas=\nfr_fractions=0.2\n")
    assert main(["sweep", str(spec), "--out", str(tmp_path / "g")]) != 0
    assert "alphas" in capsys.readouterr().err


@pytest.mark.parametrize("name", ["fig1-epoch0", "fig1-epoch1"])
def test_verify(name, capsys):
    assert main(["verify", name]) == 0
    out = capsys.readouterr().out
    assert "MISMATCH" not in out
    assert out.count(" ok") >= 5


def test_verify_unknown_name(capsys):
    assert main(["verify", "fig9"]) == 2
    assert "fig9" in capsys.readouterr().err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sbci", "verify", "fig1-epoch1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "0.4060" in proc.stdout
