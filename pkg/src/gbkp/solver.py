"""Constraint systems for one-, two- and three-periodic waves.

Substituting theta into H(D) theta.theta = 0 and collecting Fourier modes
leaves 2**N independent equations, one per characteristic.  They are linear
in the unknowns (omega_j, and for larger N also u0, k_j, c), so each is a
row of a small dense system

    sum_n [ coefficient of unknown ] * eps_j(n) = right-hand side

with lattice weights eps_j(n) formed here from nome powers, deliberately
independently of the direct sums in :mod:`gbkp.bilinear`.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .bilinear import BilinearPoly, characteristics, h_hat, h_hat_scale
from .errors import (
    ClosureError,
    DegenerateParametersError,
    DimensionError,
    IllConditionedError,
    ParameterSetError,
)
from .theta import PeriodMatrix, Truncation, choose_truncation, lattice, log_theta_directional

COND_LIMIT = 1e12
CLOSURE_TOL = 1e-8
REALITY_TOL = 1e-10

FREE_KEYS = {
    1: ("alpha", "rho", "k", "u0"),
    2: ("alpha", "rho", "k"),
    3: ("alpha", "rho"),
}
OPTIONAL_KEYS = ("delta",)


def unknown_labels(n):
    if n == 1:
        return ("omega1", "c")
    if n == 2:
        return ("omega1", "omega2", "u0", "c")
    if n == 3:
        return ("omega1", "omega2", "omega3", "k1", "k2", "k3", "u0", "c")
    raise DimensionError(f"periodic waves implemented for N=1..3, got {n}")


def required_free(n):
    unknown_labels(n)
    return FREE_KEYS[n]


def _vec(value, n, name):
    arr = np.atleast_1d(np.asarray(value))
    if arr.shape != (n,):
        raise ParameterSetError(f"{name} must have {n} components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterSetError(f"{name} has non-finite entries")
    if not np.iscomplexobj(arr):
        arr = arr.astype(float)
    return arr


def check_free(n, free):
    """Validate a free-parameter mapping and normalise it to arrays."""
    need = set(required_free(n))
    given = set(free)
    problems = []
    if need - given:
        problems.append(f"missing {sorted(need - given)}")
    extra = given - need - set(OPTIONAL_KEYS)
    if extra:
        problems.append(f"not free for N={n}: {sorted(extra)}")
    if problems:
        raise ParameterSetError("; ".join(problems))
    out = {}
    for key in ("alpha", "rho", "k", "delta"):
        if key in free:
            out[key] = _vec(free[key], n, key)
    if "u0" in free:
        out["u0"] = complex(free["u0"]) if np.iscomplexobj(free["u0"]) else float(free["u0"])
    if np.any(out["rho"] == 0):
        raise ParameterSetError("every rho_j must be nonzero")
    return out


@dataclass(frozen=True, eq=False)
class WaveParams:
    alpha: np.ndarray
    rho: np.ndarray
    k: np.ndarray
    omega: np.ndarray
    delta: np.ndarray = None
    u0: complex = 0.0
    c: complex = 0.0

    def __post_init__(self):
        n = np.atleast_1d(self.alpha).size
        for name in ("alpha", "rho", "k", "omega", "delta"):
            val = getattr(self, name)
            arr = np.zeros(n) if val is None else np.atleast_1d(np.asarray(val))
            if arr.shape != (n,):
                raise DimensionError(f"{name} must have {n} components")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self):
        return self.alpha.size

    @property
    def is_real(self):
        parts = [self.alpha, self.rho, self.k, self.omega, self.delta, [self.u0, self.c]]
        return not any(np.iscomplexobj(np.asarray(p)) and np.any(np.imag(p)) for p in parts)

    def poly(self):
        return BilinearPoly(self.u0, self.c)

    def phase(self, points):
        """xi_j = alpha_j x + rho_j y + k_j z + omega_j t + delta_j at points (..., 4)."""
        pts = np.asarray(points, dtype=float)
        coef = np.stack([self.alpha, self.rho, self.k, self.omega])
        return pts @ coef + self.delta


@dataclass(frozen=True, eq=False)
class LinearSystem:
    A: np.ndarray
    b: np.ndarray
    labels: tuple
    cond_estimate: float = float("nan")
    nomes: tuple = ()


@dataclass(frozen=True, eq=False)
class SolveResult:
    x: np.ndarray
    labels: tuple
    cond_estimate: float
    backward_residual: float
    rank: int = None
    method: str = "lu"

    def as_dict(self):
        return dict(zip(self.labels, self.x))


@dataclass(frozen=True, eq=False)
class PeriodicWaveSolution:
    waves: WaveParams
    tau: PeriodMatrix
    truncation: Truncation
    constraint_residuals: np.ndarray
    cond_estimate: float
    backward_residual: float = 0.0
    method: str = "lu"
    pins: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.tau.dim


def _log_weights(tau, shift, lat):
    """log eps(n) for characteristic ``shift`` from nome powers.

    eps(n) = prod_j lambda_j^{(n_j - s_j)^2 + n_j^2}
             * prod_{j<k} lambda_jk^{(n_j - s_j)(n_k - s_k) + n_j n_k}
    """
    log_lam = -math.pi * np.diag(tau.im)
    d = lat - shift
    out = (d**2 + lat**2) @ log_lam
    for j, k in itertools.combinations(range(tau.dim), 2):
        log_cross = -2 * math.pi * tau.im[j, k]
        out = out + (d[:, j] * d[:, k] + lat[:, j] * lat[:, k]) * log_cross
    return out


def assemble(n, free, tau, tr=None):
    """Build the 2**N x 2**N system for the unknowns of dimension ``n``."""
    if tau.dim != n:
        raise DimensionError(f"period matrix is {tau.dim}x{tau.dim} but N={n}")
    free = check_free(n, free)
    tr = tr or choose_truncation(tau)
    alpha, rho = free["alpha"], free["rho"]
    k = free.get("k", np.zeros(n))
    u0 = free.get("u0", 0.0)
    lat = lattice(n, tr.radius)
    pi2, pi4 = math.pi**2, math.pi**4
    rows, rhs = [], []
    for shift in characteristics(n):
        s = 2 * lat - shift
        eps = np.exp(_log_weights(tau, shift, lat))
        sa, sr = s @ alpha, s @ rho
        row = [np.sum(-4 * pi2 * sr * s[:, i] * eps) for i in range(n)]
        if n == 3:
            row += [np.sum(-12 * pi2 * sa * s[:, i] * eps) for i in range(n)]
        if n >= 2:
            row.append(np.sum(12 * pi2 * sa**2 * eps))
        row.append(np.sum(eps))
        b = np.sum(16 * pi4 * sa**3 * sr * eps)
        if n < 3:
            b += np.sum(12 * pi2 * sa * (s @ k) * eps)
        if n == 1:
            # u0 is free for N=1, so its column moves to the right side
            b -= np.sum(12 * pi2 * u0 * sa**2 * eps)
        rows.append(row)
        rhs.append(b)
    A = np.array(rows, dtype=complex)
    b = np.array(rhs, dtype=complex)
    return LinearSystem(A, b, unknown_labels(n), _equilibrated_cond(A), tuple(tau.nomes))


def _row_scale(A):
    scale = np.max(np.abs(A), axis=1)
    return np.where(scale > 0, scale, 1.0)


def _equilibrated_cond(A):
    As = A / _row_scale(A)[:, None]
    with np.errstate(divide="ignore"):
        return float(np.linalg.cond(As))


def _check_distinct_rows(A, b):
    """Reject systems where two characteristics give parallel equations."""
    Ab = np.column_stack([A, b])
    norms = np.linalg.norm(Ab, axis=1)
    for i, j in itertools.combinations(range(len(Ab)), 2):
        if norms[i] == 0 or norms[j] == 0:
            raise DegenerateParametersError(f"characteristic row {i + 1 if norms[i] == 0 else j + 1} vanishes")
        cos = abs(np.vdot(Ab[i], Ab[j])) / (norms[i] * norms[j])
        if cos > 1 - 1e-13:
            raise DegenerateParametersError(f"characteristic rows {i + 1} and {j + 1} are parallel")


def _backward(A, x, b):
    r = np.linalg.norm(A @ x - b)
    nb = np.linalg.norm(b)
    return float(r / nb) if nb > 0 else float(r)


def solve(sys):
    """Dense LU solve with partial pivoting; refuses near-singular systems."""
    A, b = np.asarray(sys.A), np.asarray(sys.b)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
        raise DimensionError("solve needs a square matrix and a matching right side")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("system has non-finite entries")
    _check_distinct_rows(A, b)
    cond = _equilibrated_cond(A)
    if not cond <= COND_LIMIT:
        raise IllConditionedError(
            f"condition estimate {cond:.3g} exceeds {COND_LIMIT:.0e} (nomes {', '.join(f'{float(v):.4g}' for v in sys.nomes)})",
            cond,
            sys.nomes,
        )
    x = linalg.lu_solve(linalg.lu_factor(A), b)
    return SolveResult(x, tuple(sys.labels), cond, _backward(A, x, b), A.shape[0], "lu")


def solve_pinned(sys, pins, weighted=False):
    """Least-squares solve with some unknowns held at given values.

    Used where the system has exact null directions (gauge freedom) so a
    plain solve is impossible.  By default rows keep their natural nome
    scale, so any inconsistency is pushed into the highest-order
    characteristics; ``weighted`` equilibrates rows first instead.
    """
    labels = tuple(sys.labels)
    unknown = set(pins) - set(labels)
    if unknown:
        raise ParameterSetError(f"cannot pin unknown labels {sorted(unknown)}")
    A, b = np.asarray(sys.A), np.asarray(sys.b)
    keep = [i for i, lab in enumerate(labels) if lab not in pins]
    fixed = np.zeros(len(labels), dtype=complex)
    for i, lab in enumerate(labels):
        if lab in pins:
            fixed[i] = pins[lab]
    rhs = b - A @ fixed
    sub = A[:, keep]
    w = 1 / _row_scale(np.column_stack([sub, rhs])) if weighted else np.ones(len(b))
    sol, _, rank, sv = np.linalg.lstsq(sub * w[:, None], rhs * w, rcond=1e-12)
    x = fixed.copy()
    x[keep] = sol
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    return SolveResult(x, labels, cond, _backward(A, x, b), int(rank), "pinned-lstsq")


def _maybe_real(x, real):
    if not real:
        return x
    if np.any(np.abs(np.imag(x)) > REALITY_TOL * np.maximum(1.0, np.abs(x))):
        return x
    return np.real(x)


def waves_from_solution(n, free, result):
    free = check_free(n, free)
    real = not any(np.iscomplexobj(v) and np.any(np.imag(v)) for v in free.values())
    x = _maybe_real(result.x, real)
    vals = dict(zip(result.labels, x))
    omega = np.array([vals[f"omega{j + 1}"] for j in range(n)])
    k = np.array([vals[f"k{j + 1}"] for j in range(n)]) if n == 3 else free["k"]
    u0 = vals.get("u0", free.get("u0", 0.0))
    return WaveParams(free["alpha"], free["rho"], k, omega, free.get("delta"), u0, vals["c"])


def closure_residuals(waves, tau, tr):
    """|H_hat(theta_j)| / sum |terms| for every characteristic, via the direct sums."""
    poly = waves.poly()
    out = []
    for shift in characteristics(tau.dim):
        scale = h_hat_scale(poly, waves, tau, tr, shift)
        val = abs(h_hat(poly, waves, tau, tr, shift))
        out.append(val / scale if scale > 0 else val)
    return np.array(out)


def build_solution(n, free, tau, tr=None, pins=None, strict=True, closure_tol=CLOSURE_TOL):
    """Assemble, solve and independently re-verify a periodic wave.

    With ``pins`` the system is solved in the least-squares sense with those
    unknowns fixed.  ``strict`` raises :class:`ClosureError` when any
    characteristic sum fails to vanish; otherwise the residuals are just
    recorded on the returned solution.
    """
    tr = tr or choose_truncation(tau)
    sys = assemble(n, free, tau, tr)
    result = solve_pinned(sys, pins) if pins else solve(sys)
    waves = waves_from_solution(n, free, result)
    res = closure_residuals(waves, tau, tr)
    if strict and np.max(res) > closure_tol:
        raise ClosureError(
            f"closure check failed: max characteristic residual {np.max(res):.3g} > {closure_tol:.0e}",
            res,
        )
    return PeriodicWaveSolution(
        waves, tau, tr, res, result.cond_estimate, result.backward_residual, result.method, dict(pins or {})
    )


@dataclass(frozen=True)
class ParameterCount:
    n: int
    period: int
    waves: int
    scalars: int

    @property
    def total(self):
        return self.period + self.waves + self.scalars

    def __int__(self):
        return self.total

    def __str__(self):
        return f"{self.total} = {self.period} + {self.waves} + {self.scalars}"


def parameter_count(n):
    """N(N+1)/2 period entries + 4N wave coefficients + 2 scalars."""
    if int(n) != n or n < 1:
        raise DimensionError("N must be a positive integer")
    n = int(n)
    return ParameterCount(n, n * (n + 1) // 2, 4 * n, 2)


def _points(points):
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != 4:
        raise DimensionError("points must have trailing dimension 4 (x, y, z, t)")
    return pts


def _real_if_close(vals, sol):
    if not sol.waves.is_real and np.iscomplexobj(vals):
        return np.real(vals) if np.all(np.abs(np.imag(vals)) <= 1e-8 * np.maximum(1, np.abs(vals))) else vals
    return vals


def evaluate_u(sol, points):
    """u = u0 y + 2 d/dx ln theta at points of shape (..., 4)."""
    pts = _points(points)
    w = sol.waves
    xi = w.phase(pts)
    lx = log_theta_directional(xi, sol.tau, sol.truncation, [w.alpha])
    out = w.u0 * pts[..., 1] + 2 * lx
    return _real_if_close(out, sol)


def log_theta_jet(sol, points, labels):
    """Mixed derivative of ln theta along x/y/z/t labels, e.g. ("x", "x", "y")."""
    pts = _points(points)
    w = sol.waves
    dirs = {"x": w.alpha, "y": w.rho, "z": w.k, "t": w.omega}
    return log_theta_directional(w.phase(pts), sol.tau, sol.truncation, [dirs[lab] for lab in labels])
