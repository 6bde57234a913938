"""Acceptance criteria 1-9.

Each test appends one PASS/FAIL line to the session summary (see conftest),
then asserts.  Run as a script to print the lines directly.
"""

import dataclasses
import json
import math
import time

import numpy as np

from conftest import ACCEPTANCE_LINES, N1_FREE
from gbkp import cli
from gbkp.asymptotics import limit_n1, limit_n2, limit_n3
from gbkp.bilinear import characteristics, h_hat, residual_spectrum
from gbkp.residual import residual_analytic, residual_fd, grid_for
from gbkp.solitons import SolitonParams, admissible_kappa, bilinear_residual, phase_shift
from gbkp.solver import evaluate_u, parameter_count
from gbkp.theta import PeriodMatrix, Truncation, choose_truncation, quasi_periodicity_defect, theta

PI2 = math.pi**2
PI4 = math.pi**4


def record(num, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {num}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def random_tau(rng, n):
    b = rng.uniform(-0.3, 0.3, (n, n))
    im = b @ b.T + np.diag(rng.uniform(0.6, 1.5, n))
    return PeriodMatrix(im)


def test_criterion_1_theta(rng):
    start = time.perf_counter()
    brute = sum(math.exp(-math.pi * n * n) for n in range(-10, 11))
    val = theta(0.0, PeriodMatrix([[1.0]]), Truncation(10))
    worst = 0.0
    for case in range(100):
        n = case % 3 + 1
        tau = random_tau(rng, n)
        tr = choose_truncation(tau)
        xi = rng.uniform(0, 1, (4, n))
        for col in range(1, n + 1):
            worst = max(worst, quasi_periodicity_defect(xi, tau, tr, col))
    elapsed = time.perf_counter() - start
    ok = abs(val - 1.08643481) < 1e-8 and abs(val - brute) < 1e-14 and worst < 1e-8 and elapsed < 1.0
    record(1, ok, f"theta(0,i)={val:.10f}, max quasi-periodicity defect {worst:.2e}, {elapsed:.2f}s")
    assert ok


def _random_solitons(rng, count):
    mu = rng.uniform(0.3, 2.0, count) * rng.choice([-1, 1], count)
    nu = rng.uniform(0.3, 2.0, count) * rng.choice([-1, 1], count)
    kappa = rng.uniform(-1.0, 1.0, count)
    gamma = rng.uniform(-1.0, 1.0, count)
    return SolitonParams(mu, nu, kappa, gamma)


def test_criterion_2_bilinear_solitons(rng):
    start = time.perf_counter()
    r1 = r2 = r3 = 0.0
    for _ in range(50):
        r1 = max(r1, bilinear_residual(_random_solitons(rng, 1), 1))
        r2 = max(r2, bilinear_residual(_random_solitons(rng, 2), 2))
        r3 = max(r3, bilinear_residual(_random_solitons(rng, 3), 3))
    elapsed = time.perf_counter() - start
    ok = r1 < 1e-10 and r2 < 1e-10 and elapsed < 5.0
    record(2, ok, f"f1 {r1:.1e}, f2 {r2:.1e} (< 1e-10); f3 reported {r3:.3e}; {elapsed:.2f}s")
    assert ok


def test_criterion_3_n1_closure(sol1):
    w = sol1.waves
    poly = w.poly()
    h = [abs(h_hat(poly, w, sol1.tau, sol1.truncation, s)) for s in characteristics(1)]
    spec = residual_spectrum(poly, w, sol1.tau, sol1.truncation, 3)
    ok = max(h) < 1e-10 and spec < 1e-9
    record(3, ok, f"|H(0)|={h[0]:.1e}, |H(1)|={h[1]:.1e}, spectrum(R=3)={spec:.1e}")
    assert ok


def test_criterion_4_n1_asymptotics():
    start = time.perf_counter()
    rep = limit_n1(1.0, 1.0, 1.0, 0.0, ladder=(1e-2, 1e-3, 1e-4))
    elapsed = time.perf_counter() - start
    w0 = rep.fits["omega"].coeff(0)
    w2 = rep.fits["omega"].coeff(2)
    c2 = rep.fits["c"].coeff(2)
    exps = rep.fits["exponents"]
    ok = (
        abs(w0 - (-3 - 4 * PI2)) / abs(3 + 4 * PI2) < 1e-6
        and abs(w2 / (96 * PI2) - 1) < 1e-2
        and abs(c2 / (384 * PI4) - 1) < 1e-2
        and all(abs(e - 2) <= 0.05 for e in exps)
        and elapsed < 10
    )
    record(4, ok, f"omega0 err {abs(w0 + 3 + 4 * PI2) / (3 + 4 * PI2):.1e}, omega2/target {w2 / (96 * PI2):.5f}, "
                  f"c2/target {c2 / (384 * PI4):.5f}, exponents {[round(e, 4) for e in exps]}, {elapsed:.2f}s")
    assert ok


def test_criterion_5_n2_limit():
    p = SolitonParams([1, 2], [1, 2], [0, 0])
    rep = limit_n2(p, ladder=(1e-3, 1e-4, 1e-5), compare_at=1e-4)
    eA = phase_shift(p.row(0), p.row(1)).value
    lam3 = rep.checks["lambda3"].value
    diff = rep.checks["u_max_diff"].value
    u0 = abs(rep.checks["u0(bottom)"].value)
    c = abs(rep.checks["c(bottom)"].value)
    ok = (
        abs(eA - 1 / 9) < 1e-14
        and abs(lam3 / eA - 1) < 1e-2
        and diff < 1e-5
        and u0 < 1e-6
        and c < 1e-6
        and rep.checks["u_max_diff_mismatched"].ok
    )
    record(5, ok, f"lambda3={complex(lam3).real:.6f} (1/9), max|u-u_sol|={diff:.1e}, |u0|={u0:.1e}, |c|={c:.1e}")
    assert ok


def admissible_three_solitons():
    """Three solitons for which the bilinear three-soliton condition holds."""
    p = SolitonParams([1, 1.5, 2], [1, -1, 2.5], [0.5, -0.3, 0.2])
    kappa = p.kappa.copy()
    kappa[2] = admissible_kappa(p)
    return SolitonParams(p.mu, p.nu, kappa)


def test_criterion_6_n3_system():
    p = admissible_three_solitons()
    start = time.perf_counter()
    rep = limit_n3(p, tr=Truncation(4))
    elapsed = time.perf_counter() - start
    parts = {
        "8x8 backward residual < 1e-12": rep.checks["direct_backward_residual"].ok,
        "closure < 1e-8": rep.checks["closure(max)"].ok,
        "omega_j, k_j within 1%": all(
            rep.checks[n].ok for n in rep.checks if n.startswith(("omega", "k"))
        ),
        "c diagonal quadratics within 2%": all(rep.checks[f"c^2[{j}]"].ok for j in (1, 2, 3)),
        "runtime < 60s": elapsed < 60,
    }
    ok = all(parts.values())
    bad = [k for k, v in parts.items() if not v]
    detail = (
        f"backward {rep.checks['direct_backward_residual'].value:.3g}, "
        f"closure {rep.checks['closure(max)'].value:.2e}, {elapsed:.2f}s"
        + (f"; failing: {', '.join(bad)}" if bad else "")
    )
    record(6, ok, detail)
    for note in rep.notes:
        print("   ", note)
    assert ok, detail


def _pde_oracle(sol):
    g = grid_for(sol.waves, 9, phase_step=0.05)
    fd = residual_fd(lambda p: evaluate_u(sol, p), g)
    an = residual_analytic(sol, g)
    w = sol.waves
    bad = dataclasses.replace(sol, waves=dataclasses.replace(w, omega=w.omega * 1.1))
    fd_bad = residual_fd(lambda p: evaluate_u(bad, p), g)
    return fd, an, fd_bad


def test_criterion_7_pde_oracle(sol1, sol2):
    oks, bits = [], []
    for name, sol in (("N=1", sol1), ("N=2", sol2)):
        fd, an, fd_bad = _pde_oracle(sol)
        inflation = fd_bad.max_abs / fd.max_abs
        oks.append(fd.below_floor and an.max_abs < 1e-8 and inflation >= 10)
        bits.append(f"{name}: fd {fd.max_abs:.1e} <= floor {fd.fd_error_floor_estimate:.1e}, "
                    f"analytic {an.max_abs:.1e}, perturbed x{inflation:.0f}")
    ok = all(oks)
    record(7, ok, "; ".join(bits))
    assert ok


def test_criterion_8_counting():
    counts = [int(parameter_count(n)) for n in (1, 2, 3)]
    formula = [n * (n + 1) // 2 + 4 * n + 2 for n in (1, 2, 3)]
    ok = counts == [7, 13, 20] == formula
    record(8, ok, f"counts {counts}, N=3 breakdown {parameter_count(3)}")
    assert ok


def _pipeline(root):
    root.mkdir()
    solve_cfg = {"schema_version": 1, "mode": "solve", "n": 1, "params": N1_FREE, "tau": {"im": [[2.0]]}}
    grid = {"x": [0, 1, 9], "y": [0, 1, 9], "z": [0, 0.5, 5], "t": [0, 0.05, 5]}
    eval_cfg = {"schema_version": 1, "mode": "eval", "solution": "solution.json", "grid": grid}
    res_cfg = {"schema_version": 1, "mode": "residual", "solution": "solution.json", "grid": grid,
               "residual": {"method": "both"}}
    for name, cfg in (("solve.json", solve_cfg), ("eval.json", eval_cfg), ("residual.json.cfg", res_cfg)):
        (root / name).write_text(json.dumps(cfg))
    codes = [
        cli.main(["solve", "--config", str(root / "solve.json"), "--out", str(root)]),
        cli.main(["eval", "--config", str(root / "eval.json"), "--out", str(root)]),
        cli.main(["residual", "--config", str(root / "residual.json.cfg"), "--out", str(root)]),
    ]
    files = {n: (root / n).read_bytes() for n in ("solution.json", "u_grid.csv", "residual.json")}
    return codes, files


def test_criterion_9_cli_determinism(tmp_path):
    codes_a, a = _pipeline(tmp_path / "a")
    codes_b, b = _pipeline(tmp_path / "b")
    analytic = float(json.loads(a["residual.json"])["analytic"]["max_abs"])
    same = all(a[k] == b[k] for k in a)
    ok = codes_a == codes_b == [0, 0, 0] and same and analytic < 1e-8
    record(9, ok, f"exit codes {codes_a}, identical artifacts {same}, residual max_abs {analytic:.1e}")
    assert ok


if __name__ == "__main__":
    import pathlib
    import sys
    import tempfile

    from conftest import build_solution, N2_FREE, N2_IM

    r = np.random.default_rng(20240607)
    s1 = build_solution(1, N1_FREE, PeriodMatrix([[2.0]]))
    s2 = build_solution(2, N2_FREE, PeriodMatrix(N2_IM))
    runs = [
        lambda: test_criterion_1_theta(r),
        lambda: test_criterion_2_bilinear_solitons(r),
        lambda: test_criterion_3_n1_closure(s1),
        test_criterion_4_n1_asymptotics,
        test_criterion_5_n2_limit,
        test_criterion_6_n3_system,
        lambda: test_criterion_7_pde_oracle(s1, s2),
        test_criterion_8_counting,
        lambda: test_criterion_9_cli_determinism(pathlib.Path(tempfile.mkdtemp())),
    ]
    failed = 0
    for fn in runs:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
