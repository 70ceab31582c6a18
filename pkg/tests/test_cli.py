"""Command-line interface: dispatch, determinism, exit codes."""

import json
import subprocess
import sys

import pytest

from robinlab.cli import main, to_json


@pytest.fixture()
def ball_json(tmp_path):
    p = tmp_path / "ball.json"
    p.write_text(json.dumps({"kind": "ball", "n": 2, "radius": 1.0}))
    return str(p)


@pytest.fixture()
def family_json(tmp_path):
    p = tmp_path / "family.json"
    p.write_text(json.dumps({"kind": "translation", "n": 2,
                             "direction": [1.0, 0.0], "rho": 0.5}))
    return str(p)


@pytest.fixture()
def gens_json(tmp_path):
    p = tmp_path / "e21.json"
    p.write_text(json.dumps({"matrices": [[["0", "0"], ["1", "0"]],
                                          ]}))
    return str(p)


def test_to_json_formats():
    assert to_json({"a": 1.5, "b": [1, 2]}) == '{"a":1.5,"b":[1,2]}'
    assert to_json(0.1) == "0.10000000000000001"
    assert to_json(complex(1, -2)) == '{"re":1,"im":-2}'


def test_green_subcommand(ball_json, tmp_path, capsys):
    out = tmp_path / "res.json"
    code = main(["green", "--domain", ball_json, "--grid", "16",
                 "--pole", "0,0,0,0", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert abs(payload["lambda"] + 1.0) < 1e-4
    assert payload["grid"]["nodes_per_axis"] == 16
    assert payload["pole"] == [0, 0, 0, 0]
    assert payload["residual"] < 1e-8


def test_green_determinism(ball_json, tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        code = main(["green", "--domain", ball_json, "--grid", "16",
                     "--pole", "0.25,0,0,0", "--out", str(out)])
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_torus_from_tuple(capsys):
    assert main(["torus", "from-tuple", "1", "1", "0", "1", "1", "1"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["a"] == "num:[1,1];den:[1,0,1]"
    assert payload["b"] == "num:[1,-1];den:[1,0,1]"


def test_torus_foliation(capsys):
    assert main(["torus", "foliation", "1", "1", "0", "1", "1", "1"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["d"] == "1"
    assert payload["eta"] == "num:[-2];den:[-1,1]"


def test_torus_classify(capsys):
    assert main(["torus", "classify", "--a", "num:[1,2];den:[2]",
                 "--b", "num:[0];den:[1]"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["case"] == "cannot_occur"


def test_torus_validation_exit_code(capsys):
    assert main(["torus", "from-tuple", "2", "4", "0", "1", "1", "1"]) == 2


def test_lie_closure(gens_json, capsys):
    assert main(["lie", "closure", "--n", "2", "--base", "flag",
                 "--gens", gens_json]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["composition"] == [2]
    assert payload["dim"] == 4


def test_lie_closure_n3(tmp_path, capsys):
    p = tmp_path / "g.json"
    p.write_text(json.dumps([[["0", "0"], ["0", "0"], ["0", "0"]],
                             ]))
    # 3x3 zero generator: closure is the base itself
    rows3 = [[["0", "0"]] * 3 for _ in range(3)]
    p.write_text(json.dumps([rows3]))
    assert main(["lie", "closure", "--n", "3", "--gens", str(p)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["composition"] == [1, 1, 1]


def test_lie_spanning_grassmann(capsys):
    assert main(["lie", "spanning", "--grassmann", "2", "1"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["rank"] == 2 and payload["full"]


def test_lie_spanning_flag(capsys):
    assert main(["lie", "spanning", "--flag", "3"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["spanning"] is False


def test_lie_hopf(capsys):
    assert main(["lie", "hopf", "--n", "2"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["dim_x0"] == 3 and payload["dim_escape"] == 4


def test_lie_tangent(tmp_path, capsys):
    p = tmp_path / "m.json"
    p.write_text(json.dumps([[["0", "0"], ["0", "0"], ["0", "0"]],
                             [["2", "0"], ["0", "0"], ["0", "0"]],
                             [["3", "0"], ["5", "0"], ["0", "0"]]]))
    assert main(["lie", "tangent", "--matrix", str(p)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["tangent"] == [["2", "0"], ["3", "0"], ["5", "0"]]


def test_levi_subcommand(tmp_path, capsys):
    metric = tmp_path / "metric.json"
    metric.write_text(json.dumps({"kind": "euclidean", "n": 2}))
    domain = tmp_path / "dom.json"
    domain.write_text(json.dumps({"kind": "ball", "n": 2, "radius": 1.0}))
    assert main(["levi", "--metric", str(metric), "--domain", str(domain),
                 "--t", "0,0", "--z", "1,0,0,0"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["k2"] == 0.0 and payload["W"] == 0.0


def test_missing_file_exit_code(capsys):
    assert main(["green", "--domain", "/nonexistent.json",
                 "--pole", "0,0,0,0"]) == 2


def test_variation_subcommand(family_json, tmp_path):
    out = tmp_path / "rep.json"
    code = main(["variation", "--family", family_json, "--t0", "0,0",
                 "--grid", "20", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert abs(payload["lhs"] + 2.0) < 0.3
    assert payload["rhs_cross"] == 0.0


def test_console_entry_point(ball_json):
    proc = subprocess.run(
        [sys.executable, "-m", "robinlab.cli", "green", "--domain", ball_json,
         "--grid", "16", "--pole", "0,0,0,0"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["lambda"] == pytest.approx(-1.0, abs=1e-4)
