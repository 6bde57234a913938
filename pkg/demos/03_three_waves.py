"""Three waves: where the construction stops being exact.

The three-wave linear system has eight equations in eight unknowns, but two
exact gauge directions make it singular. The direct solve is refused; a
pinned least-squares solve still exists. Whether its closure residual is
small depends on whether the underlying soliton triple satisfies the
three-soliton condition, which this script measures on a generic triple and
on one whose third kappa was tuned to satisfy it.
"""

from gbkp.asymptotics import limit_n3
from gbkp.errors import IllConditionedError
from gbkp.solitons import SolitonParams, admissible_kappa, three_soliton_condition
from gbkp.solver import build_solution
from gbkp.theta import PeriodMatrix

try:
    build_solution(3, {"alpha": [1, 0.5, 0.3], "rho": [1, -1, 2]},
                   PeriodMatrix([[1, 0.1, 0.1], [0.1, 1.2, 0.1], [0.1, 0.1, 1.4]]))
except IllConditionedError as exc:
    print(f"direct solve refused: {exc}\n")

generic = SolitonParams([1, 1.5, 2], [1, -1, 2.5], [0.5, -0.3, 0.2])
kappa = generic.kappa.copy()
kappa[2] = admissible_kappa(generic)
tuned = SolitonParams(generic.mu, generic.nu, kappa)

for label, p in (("generic", generic), ("tuned", tuned)):
    rep = limit_n3(p)
    print(f"{label}: kappa = {p.kappa.round(6).tolist()}")
    print(f"  three-soliton condition {three_soliton_condition(p):.3e}")
    print(f"  closure residual        {rep.checks['closure(max)'].value:.3e}")
    failed = [c.name for c in rep.failed()]
    print(f"  failed checks           {failed or 'none'}\n")
