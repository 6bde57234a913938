"""Truncated Riemann theta functions for purely imaginary period matrices.

The lattice sum

    theta(xi, tau) = sum_n exp(pi i <tau n, n> + 2 pi i <xi, n>)

is taken over the hypercube |n_i| <= M.  Derivatives are exact for the
truncated object: each lattice term is multiplied by the matching power of
2 pi i n.  Logarithmic derivatives along arbitrary direction vectors are
assembled from those by the set-partition (Faa di Bruno) expansion.
"""

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    DerivativeOrderError,
    DimensionError,
    MatrixDomainError,
    NearDivisorError,
    TruncationWarning,
)

MAX_ORDER = 5
RADIUS_CAP = 50
DIVISOR_GUARD = 1e-12
REALITY_TOL = 10 * np.finfo(float).eps
_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class PeriodMatrix:
    """Period matrix tau = i * im with ``im`` real symmetric positive definite."""

    im: np.ndarray

    def __post_init__(self):
        im = np.array(self.im, dtype=float)
        if im.ndim == 0:
            im = im.reshape(1, 1)
        if im.ndim != 2 or im.shape[0] != im.shape[1]:
            raise MatrixDomainError(f"period matrix must be square, got shape {im.shape}")
        if not 1 <= im.shape[0] <= 3:
            raise MatrixDomainError(f"dimension {im.shape[0]} not supported (1..3)")
        if not np.all(np.isfinite(im)):
            raise MatrixDomainError("period matrix has non-finite entries")
        if not np.array_equal(im, im.T):
            raise MatrixDomainError("period matrix is not symmetric")
        eig = np.linalg.eigvalsh(im)
        if eig[0] <= 0:
            raise MatrixDomainError(
                f"Im(tau) is not positive definite (smallest eigenvalue {eig[0]:.3g})"
            )
        im.setflags(write=False)
        object.__setattr__(self, "im", im)

    @classmethod
    def from_complex(cls, tau):
        tau = np.atleast_2d(np.asarray(tau, dtype=complex))
        if np.any(tau.real != 0):
            raise MatrixDomainError("only purely imaginary period matrices are supported")
        return cls(tau.imag)

    @classmethod
    def from_nomes(cls, nomes, cross=None):
        """Build tau from lambda_j = exp(pi i tau_jj) and lambda_jk = exp(2 pi i tau_jk)."""
        nomes = np.atleast_1d(np.asarray(nomes, dtype=float))
        n = nomes.size
        if np.any(nomes <= 0):
            raise MatrixDomainError("nomes must be positive")
        im = np.diag(-np.log(nomes) / math.pi)
        if cross is not None:
            cross = np.asarray(cross, dtype=float)
            for (i, j) in itertools.combinations(range(n), 2):
                lam = cross[i, j]
                if lam <= 0:
                    raise MatrixDomainError(f"cross nome {i + 1}{j + 1} must be positive")
                im[i, j] = im[j, i] = -math.log(lam) / (2 * math.pi)
        return cls(im)

    @property
    def dim(self):
        return self.im.shape[0]

    @property
    def tau(self):
        return 1j * self.im

    @property
    def nomes(self):
        return np.exp(-math.pi * np.diag(self.im))

    @property
    def cross_nomes(self):
        """Matrix of lambda_jk = exp(2 pi i tau_jk); the diagonal is meaningless and set to 1."""
        lam = np.exp(-2 * math.pi * self.im)
        np.fill_diagonal(lam, 1.0)
        return lam

    @property
    def t_min(self):
        return float(np.linalg.eigvalsh(self.im)[0])


@dataclass(frozen=True)
class Truncation:
    radius: int
    tail_tol: float = 1e-14
    capped: bool = False

    def __post_init__(self):
        if int(self.radius) != self.radius or self.radius < 1:
            raise ValueError("truncation radius must be an integer >= 1")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")


def tail_bound(tau, radius):
    """Bound on the omitted part of the lattice sum for half-width ``radius``."""
    n = tau.dim
    return (2 * radius + 1) ** n * math.exp(-math.pi * tau.t_min * (radius + 1) ** 2)


def choose_truncation(tau, tol=1e-14):
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    for m in range(1, RADIUS_CAP + 1):
        if tail_bound(tau, m) < tol:
            return Truncation(m, tol)
    warnings.warn(
        f"theta truncation capped at M={RADIUS_CAP}; tail bound "
        f"{tail_bound(tau, RADIUS_CAP):.2e} exceeds {tol:.1e}",
        TruncationWarning,
        stacklevel=2,
    )
    return Truncation(RADIUS_CAP, tol, capped=True)


@lru_cache(maxsize=64)
def lattice(dim, radius):
    """Integer points of the hypercube, ordered so that row i and row L-1-i are negatives."""
    pts = np.array(list(itertools.product(range(-radius, radius + 1), repeat=dim)), dtype=float)
    pts.setflags(write=False)
    return pts


def _as_phase(xi, tau):
    xi = np.asarray(xi)
    if xi.ndim == 0:
        xi = xi.reshape(1)
    if xi.shape[-1] != tau.dim:
        raise DimensionError(f"phase has {xi.shape[-1]} components, period matrix is {tau.dim}x{tau.dim}")
    real = not np.iscomplexobj(xi) or not np.any(xi.imag)
    return xi.reshape(-1, tau.dim), xi.shape[:-1], real


def _check_truncation(tr):
    if tr.capped:
        warnings.warn("theta evaluated with a capped truncation", TruncationWarning, stacklevel=3)


class ThetaJet:
    """Lattice terms of theta at a batch of phases, with cached directional sums.

    ``directions`` maps a label (e.g. ``"x"``) to an N-vector of weights; the
    directional derivative along label ``d`` multiplies lattice term n by
    2 pi i <n, d>.  For complex phases every term is rescaled by exp(-shift)
    per point so that large exponents do not overflow; ratios are unaffected.
    """

    def __init__(self, xi, tau, tr, directions=None):
        flat, self.shape, self.real = _as_phase(xi, tau)
        _check_truncation(tr)
        self.tau = tau
        lat = lattice(tau.dim, tr.radius)
        self._lat = lat
        base = -math.pi * np.einsum("li,ij,lj->l", lat, tau.im, lat)
        phase = 2j * math.pi * (flat @ lat.T)
        expo = base[None, :] + phase
        if self.real:
            self.shift = np.zeros(flat.shape[0])
        else:
            self.shift = expo.real.max(axis=1)
            expo -= self.shift[:, None]
        self._terms = np.exp(expo)
        self._abs_terms = np.abs(self._terms)
        self._forms = {}
        directions = directions or {}
        self.directions = {}
        for label, vec in directions.items():
            self.add_direction(label, vec)
        self._cache = {}

    def add_direction(self, label, vec):
        vec = np.asarray(vec)
        if vec.shape != (self.tau.dim,):
            raise DimensionError(f"direction {label!r} must have {self.tau.dim} components")
        self.directions[label] = vec
        self._forms[label] = 2j * math.pi * (self._lat @ vec)
        self._cache = {k: v for k, v in getattr(self, "_cache", {}).items() if label not in k}

    def raw(self, labels=()):
        """Scaled directional derivative sum for the multiset ``labels``, and its magnitude sum."""
        key = tuple(sorted(labels))
        if key not in self._cache:
            w = np.ones(self._lat.shape[0], dtype=complex)
            for lab in key:
                w = w * self._forms[lab]
            self._cache[key] = (self._terms @ w, self._abs_terms @ np.abs(w))
        return self._cache[key]

    def theta(self):
        s, _ = self.raw()
        return s * np.exp(self.shift)

    def near_divisor(self):
        s, _ = self.raw()
        with np.errstate(over="ignore"):
            return np.abs(s) * np.exp(self.shift) < DIVISOR_GUARD

    def log_derivative(self, labels):
        labels = tuple(labels)
        if len(labels) > MAX_ORDER:
            raise DerivativeOrderError(f"order {len(labels)} exceeds {MAX_ORDER}")
        if not labels:
            raise DerivativeOrderError("log_derivative needs at least one direction")
        f0, _ = self.raw()
        total = np.zeros_like(f0)
        for blocks in _partitions(len(labels)):
            k = len(blocks)
            prod = np.full_like(f0, (-1) ** (k - 1) * math.factorial(k - 1))
            for block in blocks:
                prod = prod * (self.raw(labels[i] for i in block)[0] / f0)
            total = total + prod
        return total


@lru_cache(maxsize=None)
def _partitions(k):
    def gen(items):
        if not items:
            yield ()
            return
        first, rest = items[0], items[1:]
        for p in gen(rest):
            yield ((first,),) + p
            for i in range(len(p)):
                yield p[:i] + ((first,) + p[i],) + p[i + 1:]

    return tuple(gen(tuple(range(k))))


def _finish(values, scale, real, shape):
    """Discard the imaginary part on the real path after checking it is rounding-level."""
    if real:
        bad = np.abs(values.imag) > REALITY_TOL * np.maximum(scale, np.finfo(float).tiny)
        if np.any(bad):
            warnings.warn("theta sum has a non-negligible imaginary part", RuntimeWarning, stacklevel=3)
        else:
            values = values.real
    values = values.reshape(shape)
    return values[()] if values.ndim == 0 else values


def _chunked(xi, tau, tr, fn):
    flat, shape, real = _as_phase(xi, tau)
    outs = []
    for start in range(0, flat.shape[0], _CHUNK):
        outs.append(fn(ThetaJet(flat[start:start + _CHUNK], tau, tr)))
    vals = np.concatenate([o[0] for o in outs])
    scale = np.concatenate([o[1] for o in outs])
    return vals, scale, real, shape


def theta(xi, tau, tr):
    def fn(jet):
        s, a = jet.raw()
        e = np.exp(jet.shift)
        return s * e, a * e

    return _finish(*_chunked(xi, tau, tr, fn))


def theta_deriv(xi, tau, tr, order):
    order = tuple(int(b) for b in np.atleast_1d(order))
    if len(order) != tau.dim:
        raise DimensionError("derivative multi-index length must equal the dimension")
    if any(b < 0 for b in order):
        raise DerivativeOrderError("negative derivative order")
    if sum(order) > MAX_ORDER:
        raise DerivativeOrderError(f"total order {sum(order)} exceeds {MAX_ORDER}")
    labels = tuple(j for j, b in enumerate(order) for _ in range(b))
    units = {j: np.eye(tau.dim)[j] for j in range(tau.dim)}

    def fn(jet):
        for j, vec in units.items():
            jet.add_direction(j, vec)
        s, a = jet.raw(labels)
        e = np.exp(jet.shift)
        return s * e, a * e

    return _finish(*_chunked(xi, tau, tr, fn))


def log_theta_directional(xi, tau, tr, directions):
    """Mixed derivative of ln theta along the given weight vectors (one per derivative)."""
    directions = [np.asarray(d) for d in directions]
    if not 1 <= len(directions) <= MAX_ORDER:
        raise DerivativeOrderError(f"between 1 and {MAX_ORDER} directions required")
    labels = tuple(range(len(directions)))
    dir_real = all(not np.iscomplexobj(d) or not np.any(d.imag) for d in directions)

    def fn(jet):
        for lab, d in zip(labels, directions):
            jet.add_direction(lab, d)
        if np.any(jet.near_divisor()):
            raise NearDivisorError("|theta| below 1e-12 at an evaluation point")
        val = jet.log_derivative(labels)
        return val, np.abs(val)

    vals, _, real, shape = _chunked(xi, tau, tr, fn)
    if real and dir_real:
        vals = vals.real
    vals = vals.reshape(shape)
    return vals[()] if vals.ndim == 0 else vals


def quasi_periodicity_defect(xi, tau, tr, lattice_col):
    """Largest relative violation of theta(xi + e_k) = theta(xi) and the tau_k shift rule.

    Adding a column of tau to xi recentres the lattice sum one site away, so
    the shifted side is summed with radius M + 1; otherwise the comparison
    would measure the hypercube edge (size ~exp(-pi t_min M^2)) rather than
    the function.
    """
    k = int(lattice_col)
    if not 1 <= k <= tau.dim:
        raise DimensionError(f"lattice column must be in 1..{tau.dim}")
    xi = np.asarray(xi, dtype=complex).reshape(-1, tau.dim)
    col = tau.tau[:, k - 1]
    base = theta(xi, tau, tr)
    unit = np.eye(tau.dim)[k - 1]
    d_int = np.abs(theta(xi + unit, tau, tr) - base) / np.abs(base)
    mult = np.exp(-1j * math.pi * tau.tau[k - 1, k - 1] - 2j * math.pi * xi[:, k - 1])
    expected = mult * base
    wide = Truncation(tr.radius + 1, tr.tail_tol)
    d_tau = np.abs(theta(xi + col, tau, wide) - expected) / np.abs(expected)
    return float(max(np.max(d_int), np.max(d_tau)))
