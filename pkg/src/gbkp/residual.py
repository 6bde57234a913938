"""Pointwise residual of u_ty - u_xxxy - 3 (u_x u_y)_x + 3 u_xz on a grid.

Two independent instruments:

* ``residual_fd`` differentiates any callable u(points) with centred
  second-order stencils and estimates its own truncation floor by Richardson
  comparison against half the step on a sample of nodes;
* ``residual_analytic`` writes every derivative of u = u0 y + 2 (ln theta)_x
  through directional log-theta derivatives, exact for the truncated sum.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivisorProximityError, GbkpError
from .solver import PeriodicWaveSolution
from .theta import _CHUNK, ThetaJet

AXES = ("x", "y", "z", "t")
GRID_CAP = 10**6
# halo cells needed per axis by the stencils below (x carries the 5-point third difference)
HALO = (2, 1, 1, 1)
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned grid; each axis is (min, max, points)."""

    x: tuple
    y: tuple
    z: tuple
    t: tuple
    cap: int = GRID_CAP

    def __post_init__(self):
        total = 1
        for name in AXES:
            lo, hi, n = getattr(self, name)
            if int(n) != n or n < 3:
                raise ValueError(f"grid axis {name} needs an integer number of points >= 3")
            if not hi > lo:
                raise ValueError(f"grid axis {name} needs max > min")
            object.__setattr__(self, name, (float(lo), float(hi), int(n)))
            total *= int(n)
        if total > self.cap:
            raise ValueError(f"grid has {total} nodes, above the cap of {self.cap}")

    @classmethod
    def cube(cls, lo, hi, points, cap=GRID_CAP):
        return cls(*((lo, hi, points),) * 4, cap=cap)

    @property
    def steps(self):
        return tuple((hi - lo) / (n - 1) for lo, hi, n in (getattr(self, a) for a in AXES))

    @property
    def shape(self):
        return tuple(getattr(self, a)[2] for a in AXES)

    @property
    def size(self):
        return int(np.prod(self.shape))

    def axis(self, name, halo=0):
        lo, hi, n = getattr(self, name)
        h = (hi - lo) / (n - 1)
        return lo + h * np.arange(-halo, n + halo)

    def nodes(self, halo=(0, 0, 0, 0)):
        """Node coordinates with axes ordered (x, y, z, t, 4)."""
        coords = [self.axis(a, g) for a, g in zip(AXES, halo)]
        return np.stack(np.meshgrid(*coords, indexing="ij"), axis=-1)

    def nodes_c_order(self):
        """Nodes flattened with t outermost and x innermost."""
        return np.ascontiguousarray(self.nodes().transpose(3, 2, 1, 0, 4)).reshape(-1, 4)


@dataclass(frozen=True)
class ResidualReport:
    max_abs: float
    rms: float
    location: tuple
    method: str
    fd_error_floor_estimate: float = float("nan")
    nodes: int = 0
    skipped: int = 0

    @property
    def below_floor(self):
        return self.max_abs <= self.fd_error_floor_estimate

    def as_dict(self):
        return {
            "max_abs": self.max_abs,
            "rms": self.rms,
            "location": list(self.location),
            "method": self.method,
            "fd_error_floor_estimate": self.fd_error_floor_estimate,
            "nodes": self.nodes,
            "skipped": self.skipped,
        }


def _sl(U, offsets):
    """View of the stencil interior shifted by ``offsets`` along the trailing four axes."""
    idx = [Ellipsis]
    for ax, (off, g) in enumerate(zip(offsets, HALO)):
        n = U.shape[U.ndim - 4 + ax]
        idx.append(slice(g + off, n - g + off))
    return U[tuple(idx)]


def _fd_residual(U, h):
    """Residual at interior points of a haloed block U[..., x, y, z, t]."""
    hx, hy, hz, ht = h

    def at(dx=0, dy=0, dz=0, dt=0):
        return _sl(U, (dx, dy, dz, dt))

    def d_y(fn, **kw):
        return (fn(dy=1, **kw) - fn(dy=-1, **kw)) / (2 * hy)

    u_x = (at(dx=1) - at(dx=-1)) / (2 * hx)
    u_y = (at(dy=1) - at(dy=-1)) / (2 * hy)
    u_xx = (at(dx=1) - 2 * at() + at(dx=-1)) / hx**2
    u_xy = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * hx * hy)
    u_xz = (at(1, 0, 1) - at(1, 0, -1) - at(-1, 0, 1) + at(-1, 0, -1)) / (4 * hx * hz)
    u_ty = (at(0, 1, 0, 1) - at(0, 1, 0, -1) - at(0, -1, 0, 1) + at(0, -1, 0, -1)) / (4 * hy * ht)

    def third_x(dy):
        return (at(2, dy) - 2 * at(1, dy) + 2 * at(-1, dy) - at(-2, dy)) / (2 * hx**3)

    u_xxxy = (third_x(1) - third_x(-1)) / (2 * hy)
    return u_ty - u_xxxy - 3 * (u_xx * u_y + u_x * u_xy) + 3 * u_xz


def _evaluate(u_eval, pts):
    try:
        return np.asarray(u_eval(pts))
    except Exception as exc:
        flat = pts.reshape(-1, 4)
        for p in flat:
            try:
                u_eval(p[None, :])
            except Exception as inner:
                msg = f"u evaluation failed at (x, y, z, t) = {tuple(float(v) for v in p)}: {inner}"
                try:
                    err = type(inner)(msg)
                except Exception:
                    err = GbkpError(msg)
                raise err from inner
        raise


def _stencil_offsets():
    rng = [np.arange(-g, g + 1) for g in HALO]
    return np.stack(np.meshgrid(*rng, indexing="ij"), axis=-1)


def _local_residual(u_eval, centers, h):
    """FD residual at arbitrary centre points using a private stencil block per point."""
    offs = _stencil_offsets() * np.asarray(h)
    pts = centers[:, None, None, None, None, :] + offs[None]
    U = _evaluate(u_eval, pts)
    return _fd_residual(U, h).reshape(len(centers))


def _stats(R, pts, method, floor=float("nan"), skipped=0):
    mag = np.abs(R)
    if mag.size == 0:
        return ResidualReport(0.0, 0.0, (), method, floor, 0, skipped)
    i = int(np.argmax(mag))
    flat = pts.reshape(-1, 4)
    return ResidualReport(
        float(mag.flat[i]),
        float(math.sqrt(np.mean(mag**2))),
        tuple(float(v) for v in flat[i]),
        method,
        float(floor),
        int(mag.size),
        int(skipped),
    )


def residual_fd(u_evaluator, grid, sample=256):
    """Finite-difference residual on ``grid`` with a Richardson error floor.

    The floor is 2 * (4/3) * max |R_h - R_{h/2}| over sampled nodes (the
    nodes with the largest |R_h| are always included) plus a rounding term
    for the fourth-order stencil.
    """
    h = grid.steps
    pts = grid.nodes(HALO)
    U = _evaluate(u_evaluator, pts)
    R = _fd_residual(U, h)
    centers = grid.nodes()
    mag = np.abs(R).ravel()
    flat = centers.reshape(-1, 4)
    top = np.argsort(mag)[::-1][: max(1, sample // 4)]
    stride = np.linspace(0, mag.size - 1, min(mag.size, sample - top.size)).astype(int)
    idx = np.unique(np.concatenate([top, stride]))
    half = tuple(v / 2 for v in h)
    R_half = _local_residual(u_evaluator, flat[idx], half)
    richardson = 2 * (4 / 3) * float(np.max(np.abs(R.ravel()[idx] - R_half)))
    umax = float(np.max(np.abs(U)))
    hx, hy, hz, ht = half
    rounding = 16 * EPS * umax * (1 / (hx**3 * hy) + 1 / (ht * hy) + 3 / (hx * hz) + 3 * umax / (hx**2 * hy))
    return _stats(R, centers, "finite-difference", richardson + rounding)


_DERIVS = {
    "u_ty": ("x", "y", "t"),
    "u_xxxy": ("x", "x", "x", "x", "y"),
    "u_x": ("x", "x"),
    "u_xy": ("x", "x", "y"),
    "u_xx": ("x", "x", "x"),
    "u_y": ("x", "y"),
    "u_xz": ("x", "x", "z"),
}


def analytic_terms(sol, points):
    """Derivatives of u entering the equation, from one theta jet per chunk.

    Returns (dict of arrays, near_divisor mask) for points of shape (m, 4).
    """
    w = sol.waves
    dirs = {"x": w.alpha, "y": w.rho, "z": w.k, "t": w.omega}
    pts = np.asarray(points, dtype=float).reshape(-1, 4)
    out = {key: [] for key in _DERIVS}
    masks = []
    for start in range(0, pts.shape[0], _CHUNK):
        chunk = pts[start:start + _CHUNK]
        jet = ThetaJet(w.phase(chunk), sol.tau, sol.truncation, dirs)
        masks.append(jet.near_divisor())
        with np.errstate(all="ignore"):
            for key, labels in _DERIVS.items():
                out[key].append(2 * jet.log_derivative(labels))
    terms = {key: np.concatenate(v) for key, v in out.items()}
    terms["u_y"] = w.u0 + terms["u_y"]
    return terms, np.concatenate(masks)


def residual_analytic(sol, grid, max_skip=0.01):
    """Residual of the equation for a periodic wave, exact for the truncated theta."""
    if not isinstance(sol, PeriodicWaveSolution):
        raise TypeError("residual_analytic needs a PeriodicWaveSolution")
    pts = grid.nodes_c_order()
    d, near = analytic_terms(sol, pts)
    skipped = int(np.count_nonzero(near))
    if skipped > max_skip * len(pts):
        raise DivisorProximityError(f"{skipped} of {len(pts)} nodes lie on the theta divisor")
    R = d["u_ty"] - d["u_xxxy"] - 3 * (d["u_xx"] * d["u_y"] + d["u_x"] * d["u_xy"]) + 3 * d["u_xz"]
    keep = ~near
    return _stats(R[keep], pts[keep], "analytic", skipped=skipped)


def grid_for(waves, points=9, phase_step=0.1, origin=(0.0, 0.0, 0.0, 0.0), cap=GRID_CAP):
    """A grid whose steps advance every phase by at most ``phase_step`` radians per cell.

    Useful for finite differences: a single step size on all axes would be far
    too coarse in t, where |omega| is typically much larger than |alpha|.
    """
    coefs = [waves.alpha, waves.rho, waves.k, waves.omega]
    axes = []
    for o, c in zip(origin, coefs):
        rate = 2 * math.pi * float(np.max(np.abs(c))) if np.size(c) else 0.0
        h = phase_step / rate if rate > 0 else phase_step
        axes.append((o, o + h * (points - 1), points))
    return GridSpec(*axes, cap=cap)
