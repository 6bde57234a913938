"""Periodic waves shrink to solitons as the nomes vanish.

For one wave, omega and c are fitted as power series in the nome and the
leading coefficients are compared against closed forms. For two waves the
soliton parameters are mapped onto periodic data; the cross nome that keeps
the linear system consistent turns out to be the soliton phase shift, and
the two fields coincide pointwise.
"""

import numpy as np

from gbkp.asymptotics import limit_n1, limit_n2, sample_grid
from gbkp.solitons import SolitonParams


def show(report):
    for c in report.checks.values():
        flag = "ok  " if c.ok else "FAIL"
        print(f"  [{flag}] {c.name:28s} value {c.value: .6e}  target {c.target: .6e}")
    for note in report.notes:
        print(f"  note: {note}")


print("one wave, alpha = rho = k = 1")
rep = limit_n1(1.0, 1.0, 1.0)
show(rep)
print("  convergence exponents:", np.round(rep.fits["exponents"], 4))

pair = SolitonParams([1, 2], [1, 2], [0, 0])
print("\ntwo solitons mu = nu = (1, 2), kappa = 0")
print(f"  phase shift exp(A12) = {pair.phase_shifts()[(0, 1)].value:.6f}")
rep = limit_n2(pair)
show(rep)
print(f"  compared on {sample_grid().shape[0] * sample_grid().shape[1]} points of the (x, y) plane")
