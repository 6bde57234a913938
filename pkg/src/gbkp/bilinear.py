"""Hirota bilinear polynomial of the generalized BKP equation.

With u = u0*y + 2 (ln f)_x and one integration in x, the equation becomes

    H(D_x, D_y, D_z, D_t) f.f = 0,
    H(X, Y, Z, T) = Y T + 3 X Z - X^3 Y - 3 u0 X^2 + c .

On exponentials the D-operators reduce to polynomial evaluation at the
difference of wave vectors, which turns H(D) theta.theta into a Fourier
series whose coefficients H_hat(m') are the lattice sums below.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .theta import lattice

# Fixed row order of the characteristic equations for each dimension.
_CHARACTERISTICS = {
    1: ((0,), (1,)),
    2: ((0, 0), (1, 0), (0, 1), (1, 1)),
    3: (
        (0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1),
        (1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 1, 1),
    ),
}


def characteristics(n):
    """The 2**n half-period shift vectors, in the fixed row order used by the solver."""
    try:
        return [np.array(c) for c in _CHARACTERISTICS[n]]
    except KeyError:
        raise DimensionError(f"characteristics defined for N=1..3, got {n}") from None


@dataclass(frozen=True)
class BilinearPoly:
    u0: float = 0.0
    c: float = 0.0

    def __call__(self, X, Y, Z, T):
        return Y * T + 3 * X * Z - X**3 * Y - 3 * self.u0 * X**2 + self.c

    def magnitude(self, X, Y, Z, T):
        """Sum of the absolute values of the individual monomials of H."""
        X, Y, Z, T = (np.abs(v) for v in (X, Y, Z, T))
        return Y * T + 3 * X * Z + X**3 * Y + 3 * abs(self.u0) * X**2 + abs(self.c)


@dataclass(frozen=True)
class ExpWave:
    """Exponent alpha*x + rho*y + k*z + omega*t + delta of a single exponential."""

    alpha: complex = 0.0
    rho: complex = 0.0
    k: complex = 0.0
    omega: complex = 0.0
    delta: complex = 0.0

    def vector(self):
        return np.array([self.alpha, self.rho, self.k, self.omega])


def d_op_on_exp_pair(poly, w1, w2):
    """Coefficient of exp(xi_1 + xi_2) in H(D) exp(xi_1).exp(xi_2)."""
    d = w1.vector() - w2.vector()
    return poly(*d)


def _wave_arrays(waves, dim):
    vecs = [np.atleast_1d(np.asarray(getattr(waves, name))) for name in ("alpha", "rho", "k", "omega")]
    if any(v.shape != (dim,) for v in vecs):
        raise DimensionError(f"wave parameters must have {dim} components")
    return vecs


def h_hat_terms(poly, waves, tau, tr, shift, radius=None, magnitude=False):
    """Per-lattice-point summands of H_hat(m') for an integer shift vector m'.

    Term n is H(2 pi i <2n - m', alpha>, ..., 2 pi i <2n - m', omega>) times
    exp(pi i [<tau(n - m'), n - m'> + <tau n, n>]).
    """
    shift = np.asarray(shift, dtype=float)
    dim = tau.dim
    if shift.shape != (dim,):
        raise DimensionError(f"shift must have {dim} components")
    alpha, rho, k, omega = _wave_arrays(waves, dim)
    lat = lattice(dim, tr.radius if radius is None else radius)
    s = 2 * lat - shift
    two_pi_i = 2j * math.pi
    X, Y, Z, T = (two_pi_i * (s @ v) for v in (alpha, rho, k, omega))
    d = lat - shift
    expo = -math.pi * (np.einsum("li,ij,lj->l", d, tau.im, d) + np.einsum("li,ij,lj->l", lat, tau.im, lat))
    weight = np.exp(expo)
    if magnitude:
        return poly(X, Y, Z, T) * weight, poly.magnitude(X, Y, Z, T) * weight
    return poly(X, Y, Z, T) * weight


def h_hat(poly, waves, tau, tr, theta_j):
    """Characteristic sum H_hat(theta_j); vanishes for a genuine periodic wave."""
    return complex(np.sum(h_hat_terms(poly, waves, tau, tr, theta_j)))


def h_hat_scale(poly, waves, tau, tr, theta_j):
    """Sum of monomial magnitudes over the lattice, the scale for judging |H_hat| small."""
    _, mag = h_hat_terms(poly, waves, tau, tr, theta_j, magnitude=True)
    return float(np.sum(mag))


def residual_spectrum(poly, waves, tau, tr, R, return_all=False):
    """Largest |H_hat(m')| over the box |m'_i| <= R, each computed from its own lattice sum."""
    dim = tau.dim
    radius = tr.radius + math.ceil(R / 2)
    shifts = lattice(dim, R)
    values = np.array([np.sum(h_hat_terms(poly, waves, tau, tr, m, radius)) for m in shifts])
    peak = float(np.max(np.abs(values)))
    if return_all:
        return peak, shifts, values
    return peak


def recursion_factor(tau, shift, j):
    """Multiplier relating H_hat(m') to H_hat(m' - 2 e_j).

    H_hat(m') = H_hat(m' - 2 e_j) * exp(2 pi i [(tau m')_j - tau_jj]).
    """
    shift = np.asarray(shift, dtype=float)
    t = tau.tau
    return np.exp(2j * math.pi * (t[j] @ shift - t[j, j]))


def recursion_defect(poly, waves, tau, tr, shift, j):
    """|H_hat(m') - factor * H_hat(m' - 2 e_j)|, both sides from direct sums."""
    shift = np.asarray(shift, dtype=float)
    radius = tr.radius + math.ceil(np.max(np.abs(shift)) / 2) + 1
    lhs = np.sum(h_hat_terms(poly, waves, tau, tr, shift, radius))
    lowered = shift.copy()
    lowered[j] -= 2
    rhs = np.sum(h_hat_terms(poly, waves, tau, tr, lowered, radius)) * recursion_factor(tau, shift, j)
    return float(abs(lhs - rhs))
