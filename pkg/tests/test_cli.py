import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from hetcap import cli
from hetcap.verify import CheckReport


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("bq,bp,E,case,value", [
    (0.5, 0.5, 1.0, "C", np.log(1.5)),
    (0.5, 8.0, 1.0, "L", np.log(np.sqrt(6) - 1)),
    (8.0, 0.5, 1.0, "R", np.log(np.sqrt(6) - 1)),
    (0.5, 0.5, 0.5, "C", 0.0),
])
def test_capacity_command(capsys, bq, bp, E, case, value):
    code, out, err = run(capsys, "capacity", "--bq", str(bq), "--bp", str(bp), "--E", str(E))
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == cli.SCHEMA_VERSION
    assert doc["config"]["bq"] == bq and doc["config"]["E"] == E
    assert doc["result"]["case"] == case
    assert doc["result"]["value"] == pytest.approx(value, abs=1e-12)
    assert doc["result"]["unit"] == "nats"
    assert "bits" in err


def test_capacity_csv_and_file(capsys, tmp_path):
    path = tmp_path / "c.csv"
    code, out, _ = run(capsys, "capacity", "--bq", "0.5", "--bp", "0.5", "--E", "1",
                       "--format", "csv", "-o", str(path))
    assert code == 0 and out == ""
    r = rows(path.read_text())[0]
    assert float(r["value"]) == np.log(1.5)


@pytest.mark.parametrize("argv", [
    ["capacity", "--bq", "0.5", "--bp", "8", "--E", "0.2"],
    ["capacity", "--bq", "0.1", "--bp", "0.1", "--E", "1"],
    ["verify", "--family", "prop2", "--bq", "0.5", "--bp", "8", "--delta", "0.05", "--states", "2"],
    ["verify", "--family", "prop2", "--bq", "0.5", "--bp", "8", "--states", "2"],
    ["sweep", "--bq", "0.5", "--bp", "8", "--E-range", "2", "1", "0.5"],
    ["mc", "--bq", "0.5", "--bp", "8", "--E", "1", "--samples", "10"],
])
def test_invalid_input_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert "invalid input" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["capacity", "--bq", "0.5"])
    assert e.value.code == 2


def test_verify_deterministic(capsys, tmp_path):
    argv = ["verify", "--family", "prop2", "--bq", "0.5", "--bp", "8", "--delta", "0.25",
            "--states", "4", "--seed", "7"]
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(capsys, *argv, "-o", str(a))[0] == 0
    assert run(capsys, *argv, "-o", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    lines = [json.loads(x) for x in a.read_text().splitlines()]
    assert len(lines) == 4 and all(x["pass"] and x["family"] == "prop2" for x in lines)


def test_verify_failure_exit_1(capsys, monkeypatch):
    bad = CheckReport.inequality("prop2", {"state": 0}, 1.0, 0.0, 1e-5)
    monkeypatch.setattr(cli, "prop2_sweep", lambda *a, **k: [bad])
    code, out, err = run(capsys, "verify", "--family", "prop2", "--bq", "0.5", "--bp", "8",
                         "--delta", "0.25")
    assert code == 1
    assert "FAILED" in err and json.loads(out)["pass"] is False


def test_sweep_case_switch(capsys):
    code, out, _ = run(capsys, "sweep", "--bq", "0.5", "--bp", "8", "--E-range", "0.5", "8", "0.25",
                       "--lattice", "0", "--workers", "3")
    assert code == 0
    rs = rows(out)
    assert list(rs[0]) == cli.CURVE_COLUMNS
    es = [float(r["E"]) for r in rs]
    cases = [r["case"] for r in rs]
    assert es == sorted(es)
    first_c = cases.index("C")
    assert es[first_c] == pytest.approx(5.75)
    assert set(cases[:first_c]) == {"L"} and set(cases[first_c:]) == {"C"}
    cap = [float(r["C_closed_form"]) for r in rs]
    assert np.all(np.diff(cap) >= 0)
    assert cap[first_c] == pytest.approx(np.log(4), abs=1e-12)


def test_sweep_threshold_row_inserted():
    es = cli.sweep_energies(5.0, 6.0, 0.3, noise=cli.NoiseCovariance(0.5, 8.0))
    assert 5.75 in [round(e, 12) for e in es]


def test_sweep_symmetric_with_ba(capsys):
    code, out, _ = run(capsys, "sweep", "--bq", "1", "--bp", "1", "--E-range", "0.5", "2", "0.5",
                       "--lattice", "3")
    rs = rows(out)
    assert code == 0 and {r["case"] for r in rs} == {"C"}
    assert all(float(r["C_BA"]) <= float(r["C_closed_form"]) + 1e-6 for r in rs)


def test_sweep_json(capsys):
    code, out, _ = run(capsys, "sweep", "--bq", "1", "--bp", "1", "--E-range", "1", "2", "1",
                       "--lattice", "0", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["command"] == "sweep" and len(doc["result"]) == 2


def test_ba_command(capsys):
    code, out, err = run(capsys, "ba", "--bq", "0.5", "--bp", "0.5", "--E", "1", "--lattice", "3", "7")
    assert code == 0
    rs = rows(out)
    assert [int(r["lattice"]) for r in rs] == [3, 7]
    assert float(rs[0]["C_BA"]) <= float(rs[1]["C_BA"]) + 1e-9 <= np.log(1.5) + 1e-6


def test_mc_command(capsys):
    code, out, _ = run(capsys, "mc", "--bq", "0.5", "--bp", "0.5", "--E", "1", "--samples", "20000",
                       "--lattice", "9")
    res = json.loads(out)["result"]
    assert code == 0 and abs(res["z"]) < 4


def test_encoding_and_entropy_commands(capsys):
    code, out, _ = run(capsys, "encoding", "--bq", "0.5", "--bp", "8", "--E", "1")
    res = json.loads(out)["result"]
    assert code == 0 and res["encoding"]["case"] == "L"
    assert res["threshold_L"] == pytest.approx(5.75)
    code, out, _ = run(capsys, "entropy", "--bq", "0.5", "--bp", "8")
    res = json.loads(out)["result"]
    assert code == 0 and res["excess"] == pytest.approx(0, abs=1e-3)
    code, out, _ = run(capsys, "entropy", "--bq", "0.5", "--bp", "0.5", "--state", "fock", "--n", "2")
    assert json.loads(out)["result"]["excess"] > 0.1


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "hetcap", "capacity", "--bq", "0.5", "--bp", "0.5",
                        "--E", "1"], capture_output=True, text=True, check=False)
    assert p.returncode == 0
    assert json.loads(p.stdout)["result"]["value"] == pytest.approx(np.log(1.5))
