"""One-, two- and three-soliton solutions used as small-amplitude targets.

Each soliton has phase eta_j = mu_j x + nu_j y + kappa_j z + varpi_j t + gamma_j
with varpi_j = -3 mu_j kappa_j / nu_j + mu_j^3.  The tau function is

    f = sum over subsets S of exp(sum_{j in S} eta_j) * prod_{i<j in S} e^{A_ij}

and u = 2 (ln f)_x.
"""

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .bilinear import BilinearPoly, ExpWave, d_op_on_exp_pair
from .errors import DimensionError, DomainError, ResonanceError, SignWarning, SingularPointError


def dispersion(mu, nu, kappa):
    if np.any(np.asarray(nu) == 0):
        raise DomainError("dispersion relation needs nu != 0")
    return -3 * mu * kappa / nu + mu**3


@dataclass(frozen=True)
class Soliton:
    mu: float
    nu: float
    kappa: float
    gamma: float = 0.0

    @property
    def varpi(self):
        return dispersion(self.mu, self.nu, self.kappa)

    def vector(self):
        return np.array([self.mu, self.nu, self.kappa, self.varpi])


@dataclass(frozen=True, eq=False)
class SolitonParams:
    mu: np.ndarray
    nu: np.ndarray
    kappa: np.ndarray
    gamma: np.ndarray = None

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
        kappa = np.atleast_1d(np.asarray(self.kappa, dtype=float))
        gamma = np.zeros_like(mu) if self.gamma is None else np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if not (mu.shape == nu.shape == kappa.shape == gamma.shape) or mu.ndim != 1:
            raise DimensionError("soliton parameter vectors must have equal length")
        if not 1 <= mu.size <= 3:
            raise DimensionError("between one and three solitons supported")
        if np.any(nu == 0):
            raise DomainError("every nu_j must be nonzero")
        for name, arr in (("mu", mu), ("nu", nu), ("kappa", kappa), ("gamma", gamma)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def count(self):
        return self.mu.size

    @property
    def varpi(self):
        return dispersion(self.mu, self.nu, self.kappa)

    def row(self, j):
        return Soliton(self.mu[j], self.nu[j], self.kappa[j], self.gamma[j])

    def phases(self, points):
        """eta_j at points of shape (..., 4) ordered (x, y, z, t); result (..., count)."""
        pts = np.asarray(points, dtype=float)
        coef = np.stack([self.mu, self.nu, self.kappa, self.varpi])
        return pts @ coef + self.gamma

    def phase_shifts(self):
        return {
            (i, j): phase_shift(self.row(i), self.row(j))
            for i, j in itertools.combinations(range(self.count), 2)
        }

    def truncated(self, order):
        return SolitonParams(self.mu[:order], self.nu[:order], self.kappa[:order], self.gamma[:order])


@dataclass(frozen=True)
class PhaseShift:
    value: float
    log_value: complex
    sign: int


def phase_shift(p_i, p_j):
    """Interaction coefficient e^{A_ij} of two solitons."""
    poly = BilinearPoly()
    wi = ExpWave(p_i.mu, p_i.nu, p_i.kappa, p_i.varpi)
    wj = ExpWave(p_j.mu, p_j.nu, p_j.kappa, p_j.varpi)
    num = d_op_on_exp_pair(poly, wi, wj)
    den = d_op_on_exp_pair(poly, wi, ExpWave(-p_j.mu, -p_j.nu, -p_j.kappa, -p_j.varpi))
    if den == 0:
        raise ResonanceError("phase shift denominator vanishes (resonant pair)")
    value = float(-num / den)
    if value > 0:
        return PhaseShift(value, complex(math.log(value)), 1)
    if value < 0:
        return PhaseShift(value, complex(math.log(-value), math.pi), -1)
    return PhaseShift(0.0, complex(-math.inf), 0)


def _subsets(count):
    return [s for r in range(count + 1) for s in itertools.combinations(range(count), r)]


def _subset_weights(params, order):
    shifts = params.phase_shifts()
    weights = []
    for s in _subsets(order):
        w = 1.0
        for pair in itertools.combinations(s, 2):
            w *= shifts[pair].value
        weights.append(w)
    return weights


def _check_order(params, order):
    if order not in (1, 2, 3) or order > params.count:
        raise DimensionError(f"order {order} not available for {params.count} soliton(s)")


def _exp_sum(params, order, points, deriv_x):
    """f (and f_x when requested) scaled by exp(-shift), with the per-point shift."""
    eta = params.truncated(order).phases(points)
    subsets = _subsets(order)
    expo = np.stack([eta[..., list(s)].sum(axis=-1) if s else np.zeros(eta.shape[:-1]) for s in subsets], axis=-1)
    weights = np.array(_subset_weights(params, order))
    shift = np.max(expo, axis=-1, keepdims=True)
    e = np.exp(expo - shift) * weights
    f = e.sum(axis=-1)
    if not deriv_x:
        return f, shift[..., 0]
    mus = np.array([sum(params.mu[j] for j in s) for s in subsets])
    return f, (e * mus).sum(axis=-1), shift[..., 0]


def tau_function(params, order, point):
    _check_order(params, order)
    f, shift = _exp_sum(params, order, point, deriv_x=False)
    if np.any(f <= 0):
        warnings.warn("tau function is non-positive at some points; solution singular there", SignWarning, stacklevel=2)
    out = f * np.exp(shift)
    return out[()] if np.ndim(out) == 0 else out


def soliton_u(params, order, point):
    """u = 2 f_x / f, from closed-form derivatives of the exponentials."""
    _check_order(params, order)
    f, fx, _ = _exp_sum(params, order, point, deriv_x=True)
    if np.any(f <= 0):
        raise SingularPointError("tau function non-positive; u undefined")
    out = 2 * fx / f
    return out[()] if np.ndim(out) == 0 else out


def bilinear_monomials(params, order, poly=None):
    """Expand H(D) f.f over exponential monomials of the tau function.

    Returns a dict mapping the multiplicity vector of each monomial
    exp(sum m_j eta_j), m_j in {0,1,2}, to (coefficient, relative residual),
    where the relative residual divides by the summed magnitudes of every
    polynomial monomial in every contributing pair (so exact cancellations
    among rounding-level terms do not read as large relative errors).
    """
    _check_order(params, order)
    poly = poly or BilinearPoly()
    subsets = _subsets(order)
    weights = _subset_weights(params, order)
    rows = [params.row(j).vector() for j in range(order)]
    waves = []
    for s in subsets:
        v = sum((rows[j] for j in s), np.zeros(4))
        waves.append(ExpWave(*v))
    acc = {}
    for (a, sa), (b, sb) in itertools.product(enumerate(subsets), repeat=2):
        m = [0] * order
        for j in sa:
            m[j] += 1
        for j in sb:
            m[j] += 1
        w = weights[a] * weights[b]
        term = w * d_op_on_exp_pair(poly, waves[a], waves[b])
        mag = abs(w) * poly.magnitude(*(waves[a].vector() - waves[b].vector()))
        coef, scale = acc.get(tuple(m), (0.0, 0.0))
        acc[tuple(m)] = (coef + term, scale + mag)
    return {m: (coef, abs(coef) / scale if scale > 0 else 0.0) for m, (coef, scale) in acc.items()}


def bilinear_residual(params, order, poly=None):
    """Largest relative monomial residual of H(D) f.f for the order-N tau function."""
    return max(rel for _, rel in bilinear_monomials(params, order, poly).values())


def three_soliton_condition(params):
    """Relative coefficient of exp(eta_1 + eta_2 + eta_3); zero iff f_3 solves the bilinear form."""
    _check_order(params, 3)
    return bilinear_monomials(params, 3)[(1, 1, 1)][1]


def admissible_kappa(params, j=2, bracket=None):
    """kappa_j for which the three-soliton condition holds, other parameters fixed.

    The signed triple-monomial coefficient is scanned on a grid and refined
    with Brent's method at the sign change nearest the current kappa_j.
    """
    _check_order(params, 3)

    def signed(kap):
        kappa = params.kappa.copy()
        kappa[j] = kap
        trial = SolitonParams(params.mu, params.nu, kappa, params.gamma)
        return bilinear_monomials(trial, 3)[(1, 1, 1)][0]

    lo, hi = bracket or (params.kappa[j] - 5.0, params.kappa[j] + 5.0)
    grid = np.linspace(lo, hi, 401)
    vals = []
    for g in grid:
        try:
            vals.append(signed(g))
        except ResonanceError:
            vals.append(np.nan)
    vals = np.array(vals)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if np.isfinite(fa) and np.isfinite(fb) and fa * fb < 0:
            r = optimize.brentq(signed, a, b, xtol=1e-14)
            if abs(signed(r)) < 1e-8 * (abs(fa) + abs(fb)):
                roots.append(r)
    if not roots:
        raise DomainError("no admissible kappa found in the scanned bracket")
    return min(roots, key=lambda r: abs(r - params.kappa[j]))
