import csv
import json
import warnings

import numpy as np
import pytest

from gbkp import cli
from gbkp.config import read_solution, validate
from gbkp.errors import ConfigError

TINY_GRID = {"x": [0, 1, 3], "y": [0, 1, 3], "z": [0, 0.5, 3], "t": [0, 0.1, 3]}
N1 = {"n": 1, "params": {"alpha": [1], "rho": [1], "k": [1], "u0": 0}, "tau": {"im": [[2]]}}


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_minimal_config_is_valid():
    cfg = validate({"mode": "solve", **N1})
    assert cfg.n == 1 and cfg.tau.dim == 1


def test_positivity_error_names_entry():
    bad = {"mode": "solve", **N1, "tau": {"im": [[-1]]}}
    with pytest.raises(ConfigError, match=r"tau\.im\[0\]\[0\]"):
        validate(bad)


def test_missing_off_diagonal_reported():
    raw = {"mode": "solve", "n": 3, "params": {"alpha": [1, 1, 1], "rho": [1, 1, 1]},
           "tau": {"im": [[1, 0.1, 0.1], [0.1, 1, 0.1], [0.1, 0.1]]}}
    with pytest.raises(ConfigError, match=r"tau\.im\[2\]\[2\]: missing"):
        validate(raw)


def test_all_problems_reported_together():
    raw = {"mode": "solve", "n": 1, "params": {"alpha": [1], "rho": [0]}, "tau": {"im": [[0]]}, "bogus": 1}
    with pytest.raises(ConfigError) as info:
        validate(raw)
    msg = str(info.value)
    for fragment in ("bogus", "params.k", "params.rho", "tau.im[0][0]"):
        assert fragment in msg


def test_solve_eval_residual_chain(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["solve", "--config", write(tmp_path, "s.json", {"mode": "solve", **N1}), "--out", str(out)]) == 0
    sol_path = str(out / "solution.json")
    rec = json.loads((out / "solution.json").read_text())
    assert all(isinstance(v, str) for v in rec["waves"]["omega"])
    job = {"mode": "residual", "solution": sol_path, "grid": TINY_GRID, "residual": {"method": "analytic"}}
    assert cli.main(["residual", "--config", write(tmp_path, "r.json", job), "--out", str(out)]) == 0
    res = json.loads((out / "residual.json").read_text())
    assert float(res["analytic"]["max_abs"]) < 1e-8
    assert "finite_difference" not in res
    job = {"mode": "eval", "solution": sol_path, "grid": TINY_GRID}
    assert cli.main(["eval", "--config", write(tmp_path, "e.json", job), "--out", str(out)]) == 0
    rows = read_csv(out / "u_grid.csv")
    assert rows[0] == ["x", "y", "z", "t", "u"] and len(rows) == 1 + 81


def test_solution_round_trip(tmp_path, sol2):
    from gbkp.config import solution_record

    back = read_solution(solution_record(sol2))
    np.testing.assert_array_equal(back.constraint_residuals, sol2.constraint_residuals)
    np.testing.assert_array_equal(back.waves.omega, sol2.waves.omega)
    assert back.waves.c == sol2.waves.c and back.truncation == sol2.truncation


def test_info_counts(capsys):
    assert cli.main(["info", "--n", "3"]) == 0
    assert "20 = 6 + 12 + 2" in capsys.readouterr().out


def test_eval_zero_alpha_gives_zero_field(tmp_path):
    job = {"mode": "eval", "n": 1, "params": {"alpha": [0], "rho": [1], "k": [0.5], "u0": 0},
           "tau": {"im": [[1]]}, "grid": TINY_GRID}
    assert cli.main(["eval", "--config", write(tmp_path, "e.json", job), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "u_grid.csv")[1:]
    assert all(float(r[4]) == 0 for r in rows)


def test_runs_are_byte_identical(tmp_path):
    cfg = write(tmp_path, "s.json", {"mode": "solve", **N1})
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["solve", "--config", cfg, "--out", str(a)])
    cli.main(["solve", "--config", cfg, "--out", str(b)])
    assert (a / "solution.json").read_bytes() == (b / "solution.json").read_bytes()


def test_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, "bad.json", {"mode": "solve", **N1, "tau": {"im": [[-1]]}})
    assert cli.main(["solve", "--config", bad]) == 1
    assert cli.main(["solve", "--config", str(tmp_path / "nope.json")]) == 4
    n3 = {"mode": "solve", "n": 3, "params": {"alpha": [1, 0.5, 0.3], "rho": [1, -1, 2]},
          "tau": {"im": [[1, 0.1, 0.1], [0.1, 1.2, 0.1], [0.1, 0.1, 1.4]]}}
    assert cli.main(["solve", "--config", write(tmp_path, "n3.json", n3), "--out", str(tmp_path)]) == 2
    singular = {"mode": "soliton", "soliton": {"mu": [1, 0.5], "nu": [1, 1], "kappa": [-1, 1]},
                "grid": {"x": [39, 41, 3], "y": [0, 0.1, 3], "z": [0, 0.1, 3], "t": [0, 0.1, 3]}}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        code = cli.main(["soliton", "--config", write(tmp_path, "sg.json", singular), "--out", str(tmp_path)])
    assert code == 3
    err = capsys.readouterr().err
    assert "diagonal imaginary part must be positive" in err


def test_trunc_override(tmp_path):
    cfg = write(tmp_path, "s.json", {"mode": "solve", **N1})
    assert cli.main(["solve", "--config", cfg, "--out", str(tmp_path), "--trunc-m", "7"]) == 0
    rec = json.loads((tmp_path / "solution.json").read_text())
    assert rec["truncation"]["radius"] == 7


def test_limit_outputs(tmp_path):
    job = {"mode": "limit", "n": 2, "soliton": {"mu": [1, 2], "nu": [1, 2], "kappa": [0, 0]}}
    assert cli.main(["limit", "--config", write(tmp_path, "l.json", job), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "limit_report.csv")
    assert rows[0] == ["lambda", "unknown", "value", "fitted_coeff", "target", "rel_err"]
    checks = json.loads((tmp_path / "limit_checks.json").read_text())
    assert checks["ok"] is True and checks["checks"]


def test_limit_n1_requires_u0(tmp_path):
    job = {"mode": "limit", "n": 1, "params": {"alpha": [1], "rho": [1], "k": [1]}}
    assert cli.main(["limit", "--config", write(tmp_path, "l.json", job), "--out", str(tmp_path)]) == 1


def test_soliton_output(tmp_path):
    job = {"mode": "soliton", "soliton": {"mu": [1], "nu": [1], "kappa": [1]}, "grid": TINY_GRID}
    assert cli.main(["soliton", "--config", write(tmp_path, "s.json", job), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "soliton_grid.csv")
    origin = rows[1]
    assert [float(v) for v in origin[:4]] == [0, 0, 0, 0]
    assert float(origin[4]) == pytest.approx(1.0, rel=1e-15)
