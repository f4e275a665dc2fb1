import json

import numpy as np
import pytest

from faberlab.cli import config_hash, main, sample_function
from faberlab.curve import CurveSpec, resample
from faberlab.expansion import decay_slope


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config-sha256=")
    header = lines[1].split(",")
    rows = [tuple(float(x) for x in ln.split(",")) for ln in lines[2:]]
    return lines[0], header, rows


def run(tmp_path, *args, capsys=None):
    code = main([*args, "--out-dir", str(tmp_path)])
    return code


def test_gen_circle_example(tmp_path):
    assert run(tmp_path, "gen", "--curve", "circle", "--p", "2", "--n", "5") == 0
    _, header, rows = read_csv(tmp_path / "faber_plus_p2_n5.csv")
    assert header == ["degree", "re", "im"]
    assert rows == [(5.0, 1.0, 0.0)]


def test_gen_is_deterministic_with_threads(tmp_path, monkeypatch):
    monkeypatch.setenv("FABERLAB_THREADS", "3")
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "gen", "--curve", "ellipse:2,1", "--p", "3", "--n", "0:4", "--side", "plus") == 0
    for n in range(5):
        name = f"faber_plus_p3_n{n}.csv"
        assert (a / name).read_bytes() == (b / name).read_bytes()
    _, _, rows = read_csv(a / "faber_plus_p3_n4.csv")
    assert rows[-1][0] == 4 and rows[-1][1] == pytest.approx((2 / 3) ** (4 + 1 / 3))


def test_check_example(tmp_path, capsys):
    code = run(tmp_path, "check", "--weight", '{"points":[3.14],"alphas":[0.5],"p":2}', "--curve", "circle")
    assert code == 0
    report = json.loads((tmp_path / "check.json").read_text())
    assert report["in_class"] is True
    assert report["betas"] == [0.5]
    assert report["window_ok"] is True
    assert report["config_sha256"] == json.loads(capsys.readouterr().out)["report"].get("config_sha256", report["config_sha256"])


def test_check_strict_violation(tmp_path, capsys):
    code = run(tmp_path, "check", "--weight", '{"points":[1.0],"alphas":[2.0]}', "--curve", "circle", "--strict")
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert any(v.get("beta") == 2.0 for v in err["violations"])


def test_check_jumps(tmp_path):
    code = run(tmp_path, "check", "--curve", "ellipse:2,1", "--jumps", "[[1.0, 1.5707963267948966]]")
    assert code == 0
    report = json.loads((tmp_path / "check.json").read_text())
    assert report["betas"] == [pytest.approx(-0.5)]


@pytest.mark.parametrize(
    "args",
    [
        ["gen", "--curve", "bogus", "--n", "2"],
        ["gen", "--curve", "circle", "--n", "2", "--N", "1000"],
        ["gen", "--curve", "circle", "--n", "2", "--p", "1"],
        ["gen", "--curve", "circle"],
        ["gen", "--config", "/nonexistent/config.json", "--n", "1"],
        ["frobnicate"],
        ["solve", "--f", "sample:nothing"],
        ["check", "--weight", '{"points":[1.0,2.0],"alphas":[0.5]}'],
    ],
)
def test_config_errors(tmp_path, args):
    assert run(tmp_path, *args) == 2


def test_bad_thread_count(tmp_path, monkeypatch):
    monkeypatch.setenv("FABERLAB_THREADS", "many")
    assert run(tmp_path, "gen", "--n", "1") == 2


def test_numerical_failure_exit(tmp_path):
    assert run(tmp_path, "gen", "--curve", "ellipse:2,1", "--side", "minus", "--n", "160") == 4


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "gen", "curve": "circle:2", "p": 2, "n": 3}))
    assert run(tmp_path, "gen", "--config", str(cfg)) == 0
    _, _, rows = read_csv(tmp_path / "faber_plus_p2_n3.csv")
    assert rows == [(3.0, pytest.approx(2 ** -3.5), 0.0)]
    assert run(tmp_path, "gen", "--config", str(cfg), "--n", "4") == 0
    assert (tmp_path / "faber_plus_p2_n4.csv").exists()


def test_solve_artifacts(tmp_path):
    pair = '{"A": 1, "B_step": {"at": 0.3, "jump": 1.5707963267948966}}'
    code = run(tmp_path, "solve", "--curve", "ellipse:2,1", "--pair", pair, "--f", "sample:random:3",
               "--seed", "7", "--weight", '{"points":[2.9],"alphas":[0.3]}')
    assert code == 0
    report = json.loads((tmp_path / "solve.json").read_text())
    assert report["residual"] < 1e-10
    first, header, rows = read_csv(tmp_path / "solution_trace.csv")
    assert header[0] == "s" and len(rows) == 1024
    assert first == f"# config-sha256={report['config_sha256']}"


def test_solve_strict_condition(tmp_path):
    # beta = -(p / 2 pi) h = -1.43 at the step for p = 3
    pair = '{"A": 1, "B_step": {"at": 0.3, "jump": 3.0}}'
    assert run(tmp_path, "solve", "--curve", "circle", "--p", "3", "--pair", pair, "--strict") == 3
    assert run(tmp_path, "solve", "--curve", "circle", "--p", "3", "--pair", pair) == 0


def test_expand_circle(tmp_path):
    code = run(tmp_path, "expand", "--curve", "circle", "--f", "sample:laurent:3", "--M1", "6", "--M2", "6",
               "--pair", '{"A": 1, "B": 1}')
    assert code == 0
    _, header, rows = read_csv(tmp_path / "coefficients.csv")
    big = {int(r[0]): complex(r[1], r[2]) for r in rows if abs(complex(r[1], r[2])) > 1e-10}
    # F-_{2,3} = i z^-3 on the unit circle
    assert big.keys() == {3, -3}
    assert big[3] == pytest.approx(1.0) and big[-3] == pytest.approx(-1j)
    _, header, rows = read_csv(tmp_path / "residuals.csv")
    assert header == ["M1", "M2", "residual"]
    assert rows[-1][2] < 1e-12


def test_study_phase_artifacts(tmp_path):
    code = run(tmp_path, "study", "--phase-alpha", "0.2", "--p", "2", "--curve", "ellipse:2,1", "--f", "sample:runge")
    assert code == 0
    _, header, rows = read_csv(tmp_path / "residuals.csv")
    assert header == ["M1", "M2", "residual"]
    ms = [int(r[0]) for r in rows]
    assert ms == list(range(8, 33))
    res = [r[2] for r in rows]
    report = json.loads((tmp_path / "study.json").read_text())
    assert report["slope"] == pytest.approx(decay_slope(ms, res))
    assert report["monotone"] is True


def test_sample_functions():
    c = resample(CurveSpec.ellipse(2.0, 1.0), 64)
    assert np.allclose(sample_function("sample:runge", c), 1 / (c.z - 3.0))
    assert np.allclose(sample_function("poly:2", c), c.z**2)
    assert np.allclose(sample_function("laurent:1", c), c.z + 1 / c.z)
    a = sample_function("random:2", c, seed=5)
    assert np.array_equal(a, sample_function("random:2", c, seed=5))
    assert not np.array_equal(a, sample_function("random:2", c, seed=6))


def test_config_hash_ignores_output_dir():
    assert config_hash({"a": 1, "out_dir": "x"}) == config_hash({"a": 1, "out_dir": "y"})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
