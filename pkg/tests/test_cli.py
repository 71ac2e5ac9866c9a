from __future__ import annotations

import csv
import json

import pytest

from oracles import naive_points
from strongapprox.cli import main

from conftest import CONFIGS


def run(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out.read_text()


def test_enumerate_matches_naive(tmp_path):
    code, text = run(tmp_path, "e.csv", "enumerate", "--model", "sl2", "--T", "6")
    assert code == 0
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == ["c1", "c2", "c3", "c4"]
    assert sorted(tuple(int(x) for x in r) for r in rows[1:]) == naive_points("sl2", 0, 0, 6)


def test_global_flags_either_side(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["--out", str(a), "--threads", "2", "enumerate", "--model", "quat", "--T", "8"]) == 0
    assert main(["enumerate", "--model", "quat", "--T", "8", "--threads", "2", "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()


def test_growth(tmp_path):
    code, text = run(tmp_path, "g.json", "growth", "--model", "sl2", "--T-list", "8,16,32,64")
    assert code == 0 and 1.5 < json.loads(text)["a"] < 2.5


def test_local_densities(tmp_path):
    code, text = run(tmp_path, "d.csv", "local-densities", "--model", "sl2", "--f", "trace", "--d-max", "6")
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == ["d", "count_group", "count_fiber", "rho_numerator", "rho_denominator"]
    assert rows[3] == ["3", "24", "6", "3", "4"]


def test_langweil(tmp_path):
    code, text = run(tmp_path, "l.csv", "langweil", "--config", str(CONFIGS / "flagship.json"),
                     "--f", "flagship", "--p-max", "20")
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == ["p", "count_V", "count_G", "observed_C", "ratio_times_p"]
    assert [r[0] for r in rows[1:]] == ["5", "7", "11", "13", "17", "19"]


def test_sieve(tmp_path):
    inp = tmp_path / "a.csv"
    inp.write_text("a\n" + "\n".join(str(i) for i in range(1, 31)) + "\n")
    om = tmp_path / "w.csv"
    om.write_text("p,num,den\n2,1,1\n3,1,1\n")
    code, text = run(tmp_path, "s.json", "sieve", "--input", str(inp), "--omega", str(om), "--z", "4")
    out = json.loads(text)
    assert code == 0 and out["S"] == 10 and out["product"] == pytest.approx(10)
    assert set(out["conditions"]["passed"]) == {"1", "2", "3"}


def test_saturate(tmp_path):
    code, text = run(tmp_path, "h.json", "saturate", "--model", "sl2", "--f", "c1", "--T", "64",
                     "--M", "50", "--r", "2", "--min-count", "1", "--limit", "3")
    out = json.loads(text)
    assert out["count"] == 14442
    assert len(out["hits"]) == 3
    assert all(all(int(p) > 50 for p in h["counted"]) for h in out["hits"])


def test_avoid(tmp_path, flagship_config):
    state = {
        "group": {"model": "quat", "a": 2, "b": 3},
        "torus": {"d": 2, "u": "17", "v": "12", "power": 2},
        "P_prime": ["-7", "-24", "-28", "24"],
        "S0": ["337"],
        "N_fiber": 2,
        "r0": 3,
        "subset": flagship_config["subset"],
    }
    path = tmp_path / "state.json"
    path.write_text(json.dumps(state))
    code, text = run(tmp_path, "sel.json", "avoid", "--state", str(path))
    out = json.loads(text)
    assert code == 0 and out["l"] == 0
    assert out["transcript"]["primes"][0]["orbit_distinct"] == 7


def test_solve_and_verify_isotropic(tmp_path):
    code, text = run(tmp_path, "c.json", "solve", "--config", str(CONFIGS / "isotropic.json"))
    assert code == 0
    code, rep = run(tmp_path, "v.json", "verify", "--certificate", str(tmp_path / "c.json"))
    assert code == 0 and json.loads(rep)["ok"]


def test_verify_rejects_tampering(tmp_path):
    run(tmp_path, "c.json", "solve", "--config", str(CONFIGS / "isotropic.json"))
    data = json.loads((tmp_path / "c.json").read_text())
    data["P_dprime"][1] = "7"
    (tmp_path / "bad.json").write_text(json.dumps(data))
    code, _ = run(tmp_path, "v.json", "verify", "--certificate", str(tmp_path / "bad.json"))
    assert code == 1


def test_workbench_errors_exit_two(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "isotropic.json").read_text())
    cfg["window"] = {"moduli": [{"modulus": 3, "residues": [[1, 0, 0, 1]]}], "S": []}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert main(["solve", "--config", str(path)]) == 2
    assert "ConfigRejectedError" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["enumerate", "--model", "quat", "--T", "32"],
    ["saturate", "--model", "sl2", "--f", "c1", "--T", "64", "--M", "50", "--min-count", "1"],
    ["solve", "--config", str(CONFIGS / "isotropic.json")],
])
def test_threads_do_not_change_output(tmp_path, argv):
    _, one = run(tmp_path, "1.out", *argv, "--threads", "1")
    _, many = run(tmp_path, "8.out", *argv, "--threads", "8")
    assert one == many
