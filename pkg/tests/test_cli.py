import csv
import io
import json
import math
import re
import subprocess
import sys

import pytest

from hypflat import cli
from hypflat.errors import AdmissibilityError, QuadratureError, RegimeError


def _run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def _json(argv, capsys):
    code, out, _ = _run(argv, capsys)
    assert code == 0
    return json.loads(out)


# --- parsing -----------------------------------------------------------------


def test_parse_defaults():
    cfg = cli.parse_args(["rates", "--d", "4", "--k", "3"])
    assert cfg.command == "rates"
    assert (cfg.params.d, cfg.params.k) == (4, 3)
    assert (cfg.spec.T, cfg.spec.M, cfg.spec.N) == (10.0, 200, 26)
    assert cfg.seed == 0 and cfg.format == "json"
    assert cfg.r == [float(r) for r in range(1, 13)]


def test_parse_verbatim():
    cfg = cli.parse_args(
        ["density", "--d", "5", "--k", "4", "--T", "10", "--M", "200", "--N", "26", "--out", "f.csv", "--format", "csv"]
    )
    assert cfg.out_path == "f.csv" and cfg.format == "csv"
    assert (cfg.spec.T, cfg.spec.M, cfg.spec.N) == (10.0, 200, 26)


def test_parse_errors():
    with pytest.raises(RegimeError, match=r"2k > d\+1"):
        cli.parse_args(["cumulants", "--d", "4", "--k", "2"])
    with pytest.raises(AdmissibilityError):
        cli.parse_args(["covariance", "--d", "4", "--k", "3", "--m", "5"])
    for argv in (["nonsense"], ["rates", "--d", "4"], ["cf", "--d", "4", "--k", "3", "--M", "0"], ["rates", "--d", "x", "--k", "3"]):
        with pytest.raises(cli.UsageError):
            cli.parse_args(argv)


@pytest.mark.parametrize(
    "argv, code",
    [
        (["cumulants", "--d", "4", "--k", "2"], 3),
        (["rates", "--d", "6", "--k", "3"], 3),
        (["bogus"], 2),
        (["simulate-z", "--d", "5", "--k", "4", "--n", "0"], 2),
        (["simulate-f1", "--d", "5", "--k", "4", "--r", "1", "2"], 2),
        (["rates", "--d", "4", "--k", "3", "--r", "-1"], 2),
    ],
)
def test_exit_codes(argv, code, capsys):
    got, out, err = _run(argv, capsys)
    assert got == code
    assert err
    if code == 3 and argv[0] == "cumulants":
        assert "2k > d+1" in err


def test_numeric_failure_exit_code(monkeypatch, capsys):
    def boom(cfg):
        raise QuadratureError("no convergence", estimate=1.5, abserr=0.25)

    monkeypatch.setitem(cli._COMMANDS, "rates", boom)
    code, out, _ = _run(["rates", "--d", "4", "--k", "3"], capsys)
    assert code == 4
    env = json.loads(out)
    assert env["results"]["error"] == "QuadratureError"
    assert env["results"]["estimate"] == 1.5


# --- outputs -----------------------------------------------------------------


def test_rates_json(capsys):
    env = _json(["rates", "--d", "4", "--k", "3"], capsys)
    assert set(env) == {"params", "spec", "git_describe", "results"}
    res = env["results"]
    assert res["beta"] == pytest.approx(2 / 11, rel=1e-15)
    assert res["alpha_star"] == pytest.approx(6 / 11, rel=1e-15)
    assert len(res["curve"]) == 12
    assert env["spec"]["T"] == 10.0 and env["spec"]["M"] == 200 and env["spec"]["N"] == 26


def test_catalan_check_json(capsys):
    res = _json(["catalan-check"], capsys)["results"]
    assert res["max_rel_error"] <= 1e-6
    assert res["G"].startswith("0.915965594")


def test_floats_are_written_with_17_digits(capsys):
    _, out, _ = _run(["rates", "--d", "4", "--k", "3"], capsys)
    m = re.search(r'"beta": ([0-9.eE+-]+)', out)
    assert m.group(1) == format(2 / 11, ".17g")
    assert float(m.group(1)) == 2 / 11


def test_dump_json_special_values():
    text = cli.dump_json({"a": math.nan, "b": [1, 2.5], "c": True, "d": None, "e": []})
    obj = json.loads(text)
    assert obj == {"a": None, "b": [1, 2.5], "c": True, "d": None, "e": []}


@pytest.mark.parametrize(
    "argv, header",
    [
        (["cumulants", "--d", "5", "--k", "4"], ["n", "cumulant"]),
        (["cf", "--d", "5", "--k", "4", "--M", "20"], ["t", "re", "im"]),
        (["density", "--d", "5", "--k", "4", "--x-min", "-1", "--x-max", "1", "--x-step", "0.5"], ["x", "f", "cdf"]),
        (["rates", "--d", "9", "--k", "7", "--r", "1", "2"], ["r", "bound"]),
        (["covariance", "--d", "4", "--k", "2", "--m", "2"], ["s11", "s12", "s21", "s22", "rank"]),
        (["catalan-check"], ["i", "j", "computed", "reference"]),
        (["cumulant-scan", "--d", "8"], ["d", "k", "cumulant"]),
        (["simulate-z", "--d", "5", "--k", "4", "--n", "10"], ["value"]),
    ],
)
def test_csv_headers(argv, header, capsys):
    code, out, _ = _run(argv + ["--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == header
    assert len(rows) > 1


def test_cumulants_csv_values(capsys):
    _, out, _ = _run(["cumulants", "--d", "4", "--k", "3", "--N", "4", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[1][0] == "2" and float(rows[1][1]) == pytest.approx(1.0, abs=1e-12)
    assert float(rows[2][1]) == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-13)


def test_covariance_rank_one_json(capsys):
    res = _json(["covariance", "--d", "5", "--k", "4", "--m", "2"], capsys)["results"]
    assert res["rank"] == 1
    assert res["scaling_regime"] == "e^{2r(k-1)}"


def test_simulate_rerun_is_byte_identical(tmp_path, capsys):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    base = ["simulate-z", "--d", "5", "--k", "4", "--n", "100000", "--seed", "7", "--format", "csv"]
    assert cli.main(base + ["--out", str(a)]) == 0
    assert cli.main(base + ["--out", str(b)]) == 0
    assert cli.main(base + ["--out", str(c), "--threads", "3"]) == 0
    data = a.read_bytes()
    assert data == b.read_bytes() == c.read_bytes()
    assert data.count(b"\n") == 100_001


def test_simulate_f1_json(capsys):
    res = _json(["simulate-f1", "--d", "4", "--k", "3", "--r", "2", "--n", "2000"], capsys)["results"]
    assert len(res["values"]) == 2000
    st = res["stats"]
    assert abs(st["mean"] - res["mean_F1"]) <= 5 * st["stderr_mean"]


def test_ks_convergence_json(capsys):
    argv = ["ks-convergence", "--d", "4", "--k", "3", "--r", "4", "6", "--n", "4000"]
    rows = _json(argv, capsys)["results"]["rows"]
    assert [r["r"] for r in rows] == [4.0, 6.0]
    for r in rows:
        assert 0 <= r["dk_from_cf"] <= r["esseen_bound"]
        assert 0 < r["ks"] < 1


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "hypflat", "rates", "--d", "5", "--k", "4", "--r", "1"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert json.loads(out.stdout)["results"]["w_regime"] == "4k=3d+1"
