import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from cyclosieve import __version__
from cyclosieve.cli import RunConfig, build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def data_rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_kloosterman_complex(capsys):
    code, out, _ = run(capsys, "kloosterman", "-p", "5", "-e", "1", "-n", "2", "--complex")
    assert code == 0
    assert out.startswith(f"# cyclosieve {__version__} kloosterman p=5 e=1 n=2")
    rows = data_rows(out)
    assert len(rows) == 4
    assert all(abs(float(r["im"])) < 1e-9 for r in rows)
    assert float(rows[0]["re"]) == pytest.approx(0.381966011250, abs=1e-9)


def test_kloosterman_residue(capsys):
    code, out, _ = run(capsys, "kloosterman", "-p", "5", "-e", "2", "-n", "3", "--residue", "41")
    assert code == 0
    rows = data_rows(out)
    assert len(rows) == 24
    assert all(0 <= int(r["value"]) < 41 for r in rows)
    assert "residue l=41" in out.splitlines()[0]


def test_kloosterman_tfs(tmp_path, capsys):
    path = tmp_path / "kl.tfs"
    code, _, _ = run(capsys, "kloosterman", "-p", "5", "-e", "2", "--residue", "41",
                     "--format", "tfs", "--out", str(path))
    assert code == 0 and path.read_bytes()[:4] == b"TFS1"
    code, _, err = run(capsys, "kloosterman", "-p", "5", "--format", "tfs")
    assert code == 2 and "ValidationError" in err


@pytest.mark.parametrize("argv,code,name", [
    (["kloosterman", "-p", "4"], 2, "NotPrime"),
    (["kloosterman", "-p", "5", "--residue", "43"], 2, "OrderNotDividing"),
    (["kloosterman", "-p", "5", "-e", "9"], 3, "FieldTooLarge"),
    (["gauss-sum", "--family", "SL", "-n", "3", "-l", "11"], 3, "GroupTooLarge"),
    (["gauss-sum", "--family", "Sp", "-n", "3", "-l", "5"], 2, "BadDimension"),
    (["formula-density", "x = z", "--primes", "3..10"], 2, "UnboundVariable"),
    (["formula-density", "exists y x = y", "--primes", "3..10"], 2, "FormulaSyntaxError"),
    (["primes", "-a", "2", "-m", "4", "-L", "10"], 2, "NotCoprime"),
    (["sieve", "-p", "5", "-e", "6", "-n", "2", "-m", "3"], 2, "EmptyLambda"),
])
def test_exit_codes(capsys, argv, code, name):
    got, _, err = run(capsys, *argv)
    assert got == code
    assert err.startswith(name)


def test_gauss_sum(capsys, tmp_path):
    hist = tmp_path / "h.csv"
    code, out, _ = run(capsys, "gauss-sum", "--family", "SL", "-n", "2", "-l", "7", "--histogram", str(hist))
    assert code == 0
    rec = json.loads(out)
    assert rec["tool"] == "cyclosieve" and rec["version"] == __version__
    assert rec["config"] == {"family": "SL", "n": 2, "ell": 7, "cap": 10**7}
    res = rec["result"]
    assert res["order"] == 336
    assert Fraction(res["alpha_num"], res["alpha_den"]) == Fraction(3, 2)
    assert Fraction(res["B_num"], res["B_den"]) == Fraction(9, 2)
    assert res["gauss_sum_max"] * 7**1.5 <= 3
    assert hist.read_text().splitlines()[0] == "t,count"


def test_formula_density(capsys):
    code, out, _ = run(capsys, "formula-density", "exists y: x = y^2", "--primes", "3..50")
    assert code == 0
    rows = json.loads(out)["result"]["rows"]
    assert rows[0]["ell"] == 3 and rows[-1]["ell"] == 47
    for r in rows:
        assert Fraction(*r["density"]) == Fraction(r["ell"] + 1, 2 * r["ell"])
    code, out, _ = run(capsys, "formula-density", "exists y: x = y^2", "--primes", "3..50", "--csv")
    rows = data_rows(out)
    assert list(rows[0])[:4] == ["ell", "count", "density_num", "density_den"]


def test_primes(capsys):
    code, out, _ = run(capsys, "primes", "-a", "1", "-m", "20", "-L", "100")
    assert code == 0 and json.loads(out)["result"]["count"] == 2


SIEVE_CONFIG = {
    "family": {"kind": "kloosterman", "n": 2},
    "p": 5, "e": 4,
    "target": {"kind": "mth_powers", "m": 3},
    "L": 300,
    "enum_cap": 100000,
}


def test_sieve_config_file_and_determinism(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SIEVE_CONFIG))
    code, out1, _ = run(capsys, "sieve", str(cfg), "--jobs", "1")
    assert code == 0
    code, out2, _ = run(capsys, "sieve", str(cfg), "--jobs", "4")
    assert out1 == out2
    rec = json.loads(out1)
    assert rec["version"] == __version__
    assert rec["config"]["p"] == 5 and rec["config"]["L"] == 300
    assert rec["q"] == 625 and [i["ell"] for i in rec["ideals"]] == [61, 181, 241]


def test_sieve_flags_win(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SIEVE_CONFIG))
    mask = tmp_path / "mask.csv"
    code, out, _ = run(capsys, "sieve", str(cfg), "-L", "200", "-e", "3", "--mask-csv", str(mask), "--timing")
    assert code == 0
    rec = json.loads(out)
    assert rec["L"] == 200 and rec["q"] == 125
    assert "timing" in rec
    assert len(mask.read_text().splitlines()) == 125


def test_run_config_merge(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({**SIEVE_CONFIG, "jobs": 3}))
    run_cfg = RunConfig.from_args(build_parser().parse_args(["sieve", str(cfg), "-m", "2"]))
    assert run_cfg.jobs == 3
    assert run_cfg.sieve.target.m == 2
    flagged = RunConfig.from_args(build_parser().parse_args(["sieve", str(cfg), "--jobs", "1"]))
    assert flagged.jobs == 1
    assert flagged.sieve == RunConfig.from_args(build_parser().parse_args(["sieve", str(cfg)])).sieve


def test_sieve_rejects_zero_jobs(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SIEVE_CONFIG))
    code, _, err = run(capsys, "sieve", str(cfg), "--jobs", "0")
    assert code == 2 and "jobs" in err


def test_sieve_missing_fields(capsys):
    code, _, err = run(capsys, "sieve", "-p", "5")
    assert code == 2 and "missing" in err


def test_cache_dir_flag(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("CYCLOSIEVE_CACHE", raising=False)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SIEVE_CONFIG))
    cache = tmp_path / "cache"
    cache.mkdir()
    code, _, _ = run(capsys, "--cache-dir", str(cache), "sieve", str(cfg))
    assert code == 0
    assert len(list(cache.glob("*.tfs"))) == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cyclosieve", "primes", "-a", "1", "-m", "20", "-L", "100"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["count"] == 2
    proc = subprocess.run([sys.executable, "-m", "cyclosieve", "kloosterman", "-p", "4"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 2 and "NotPrime" in proc.stderr
