"""
Smooth approximations of a density/flux pair and a characteristics solver
for the smoothed transport problems.

Given discrete ``rho`` and ``rho b`` on a space-time grid, ``mollify_pair``
builds

    rho_m = 1/m + (rho * eta_eps)        b_m = ((rho b) * eta_eps) / rho_m

with a compactly supported polynomial bump ``eta`` at scale ``eps = eps0/m``.
Near the boundary of the space-time box the kernel is truncated to the box
and renormalised, so no values outside the domain are ever invented.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.signal import fftconvolve

from nearinc.errors import SolverFault, UnderResolvedWarning
from nearinc.grid import CellField, Grid, boundary_faces
from nearinc.transport import CHARACTERISTIC, INFLOW, OUTFLOW, SIGN_RTOL, DensityFluxRecord

UNIFORM_RTOL = 1e-9


def bump_kernel(spacing: Sequence[float], eps: float) -> np.ndarray:
    """Discrete ``(1 - |z|^2)^4`` on ``|z| < 1``, ``z = offset / eps``,
    normalised to unit sum.  Axis ``k`` of the result has spacing
    ``spacing[k]``."""
    if eps <= 0:
        raise ValueError("mollification scale must be positive")
    half = [int(np.floor(eps / h)) for h in spacing]
    axes = [np.arange(-k, k + 1) * h / eps for k, h in zip(half, spacing)]
    Z = np.meshgrid(*axes, indexing="ij")
    r2 = sum(z ** 2 for z in Z)
    K = np.where(r2 < 1.0, (1.0 - r2) ** 4, 0.0)
    return K / K.sum()


def _normalized_convolution(f: np.ndarray, K: np.ndarray, weight: np.ndarray | None = None) -> np.ndarray:
    """``conv(w f, K) / conv(w, K)`` with zero padding outside the box."""
    w = np.ones(f.shape) if weight is None else weight
    num = fftconvolve(w * f, K, mode="same")
    den = fftconvolve(w, K, mode="same")
    return num / den


@dataclass(frozen=True)
class SmoothFieldPair:
    """One time level of a smoothed pair: ``rho_m >= 1/m`` and ``b_m``."""

    rho: CellField
    b: CellField
    m: int


@dataclass
class SmoothPairSequence:
    """Smoothed pair on all time levels.

    ``momentum`` is the mollified ``rho b`` (so ``b = momentum / rho``);
    ``under_resolved`` is set when ``eps < 2 max(dx)``.
    """

    grid: Grid
    times: np.ndarray
    rho: np.ndarray
    momentum: np.ndarray
    m: int
    eps: float
    under_resolved: bool = False
    source_linf: float = 0.0

    @property
    def b(self) -> np.ndarray:
        return self.momentum / self.rho[:, None]

    def pair(self, n: int) -> SmoothFieldPair:
        return SmoothFieldPair(CellField(self.grid, self.rho[n]), CellField(self.grid, self.b[n]), self.m)

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, n: int) -> SmoothFieldPair:
        return self.pair(n)

    def boundary_series(self) -> "BoundaryFluxSeries":
        """Outward boundary flux of ``rho_m b_m`` (times area), step ``n``
        taking the adjacent-cell values of level ``n``."""
        faces = boundary_faces(self.grid)
        vals = []
        for n in range(len(self.times) - 1):
            mom = faces.boundary_cells(self.momentum[n])      # (d, nfaces)
            vals.append(mom[faces.axis, np.arange(len(faces))] * faces.normal[np.arange(len(faces)), faces.axis]
                        * faces.area)
        return BoundaryFluxSeries(self.grid, self.times, np.array(vals))


def _check_uniform(times: np.ndarray) -> float:
    dts = np.diff(times)
    if len(dts) == 0 or np.any(dts <= 0):
        raise ValueError("time levels must be strictly increasing")
    if np.max(np.abs(dts - dts.mean())) > UNIFORM_RTOL * dts.mean():
        raise ValueError("mollification needs uniformly spaced time levels")
    return float(dts.mean())


def record_momentum(record: DensityFluxRecord) -> np.ndarray:
    """Cell values of ``rho b`` on each time level of a record.

    A cell takes the mean of the flux densities on its two faces along each
    axis; a level takes the mean of the steps ending and starting there.
    """
    grid = record.grid
    per_step = []
    for M in record.mass:
        comps = []
        for a, Ma in enumerate(M):
            k = Ma.shape[a]
            c = 0.5 * (np.take(Ma, np.arange(0, k - 1), axis=a) + np.take(Ma, np.arange(1, k), axis=a))
            comps.append(c / grid.face_area(a))
        per_step.append(np.stack(comps))
    per_step = np.array(per_step)
    levels = np.empty((record.steps + 1,) + per_step.shape[1:])
    levels[0] = per_step[0]
    levels[-1] = per_step[-1]
    levels[1:-1] = 0.5 * (per_step[:-1] + per_step[1:])
    return levels


def mollify_pair(grid: Grid, times, rho, momentum, m: int, eps0: float = 0.5) -> SmoothPairSequence:
    """Space-time mollification of ``(rho, rho b)`` at scale ``eps0 / m``.

    ``rho`` has shape ``(L, *n)`` and ``momentum`` shape ``(L, d, *n)`` on
    ``L`` uniformly spaced time levels.
    """
    if m < 1:
        raise ValueError("regularisation index must be >= 1")
    times = np.asarray(times, dtype=float)
    rho = np.asarray(rho, dtype=float)
    momentum = np.asarray(momentum, dtype=float)
    if rho.shape != (len(times),) + grid.shape:
        raise ValueError("rho does not match the time levels and grid")
    if momentum.shape != (len(times), grid.dim) + grid.shape:
        raise ValueError("momentum does not match the time levels and grid")
    if np.any(rho < 0) or not np.all(np.isfinite(rho)) or not np.all(np.isfinite(momentum)):
        raise ValueError("rho must be finite and nonnegative, rho b finite")
    dt = _check_uniform(times)
    eps = eps0 / m
    under = eps < 2 * max(grid.dx)
    if under:
        warnings.warn(f"eps={eps:.3g} under-resolves dx={max(grid.dx):.3g}", UnderResolvedWarning, stacklevel=2)
    K = bump_kernel((dt,) + grid.dx, eps)
    smooth_rho = np.maximum(_normalized_convolution(rho, K), 0.0)
    smooth_mom = np.stack([_normalized_convolution(momentum[:, a], K) for a in range(grid.dim)], axis=1)
    return SmoothPairSequence(grid, times, 1.0 / m + smooth_rho, smooth_mom, m, eps, under,
                              float(np.max(np.abs(momentum))) if momentum.size else 0.0)


def mollify_record(record: DensityFluxRecord, m: int, eps0: float = 0.5) -> SmoothPairSequence:
    return mollify_pair(record.grid, record.times, record.rho, record_momentum(record), m, eps0)


def defect(seq: SmoothPairSequence) -> tuple[np.ndarray, float]:
    """``h_m = d_t rho_m + div(b_m rho_m)`` by centred differences, and its
    space-time L1 norm (trapezoid weights in time)."""
    if len(seq.times) < 3:
        raise ValueError("need at least 3 time levels for centred time differences")
    grid = seq.grid
    h = np.gradient(seq.rho, seq.times, axis=0)
    for a in range(grid.dim):
        h = h + np.gradient(seq.momentum[:, a], grid.dx[a], axis=a + 1)
    dts = np.diff(seq.times)
    w = np.zeros(len(seq.times))
    w[:-1] += 0.5 * dts
    w[1:] += 0.5 * dts
    l1 = float(np.sum(np.abs(h) * w.reshape((-1,) + (1,) * grid.dim))) * grid.cell_volume
    return h, l1


def _interp(values: np.ndarray, axes: Sequence[np.ndarray], pts: np.ndarray) -> np.ndarray:
    """Multilinear interpolation on a uniform tensor grid with clamping to
    the hull of the nodes.  ``values`` has shape ``(C, *node_shape)``,
    ``pts`` shape ``(P, ndim)``; returns ``(C, P)``."""
    P = pts.shape[0]
    idx, frac = [], []
    for k, ax in enumerate(axes):
        x = np.clip(pts[:, k], ax[0], ax[-1])
        if len(ax) == 1:
            idx.append(np.zeros(P, dtype=int))
            frac.append(np.zeros(P))
            continue
        h = (ax[-1] - ax[0]) / (len(ax) - 1)
        s = (x - ax[0]) / h
        i = np.clip(np.floor(s).astype(int), 0, len(ax) - 2)
        idx.append(i)
        frac.append(np.clip(s - i, 0.0, 1.0))
    # nested one-axis lerps, clamped to the bracketing values: constants come
    # back bit-exact and results never leave the data range
    nd = len(axes)
    bits = np.meshgrid(*[[0, 1]] * nd, indexing="ij")
    sel = tuple(idx[k][:, None] + (bits[k].ravel()[None, :] if len(axes[k]) > 1 else 0) for k in range(nd))
    corners = values[(slice(None),) + sel].reshape((values.shape[0], P) + (2,) * nd)
    for k in range(nd):
        lo, hi = corners[:, :, 0], corners[:, :, 1]
        v = lo + frac[k].reshape((1, P) + (1,) * (nd - k - 1)) * (hi - lo)
        corners = np.clip(v, np.minimum(lo, hi), np.maximum(lo, hi))
    return corners


def _outside(grid: Grid, X: np.ndarray) -> np.ndarray:
    """Signed excess beyond the box (positive outside), per point."""
    lo = np.array(grid.lo)
    hi = np.array(grid.hi)
    return np.max(np.maximum(lo - X, X - hi), axis=1)


def characteristics_solve(seq: SmoothPairSequence, u0, g, points) -> np.ndarray:
    """Values of the solution of ``d_t u + b_m . grad u = 0`` at space-time
    sample points, by backward characteristics.

    ``points`` has shape ``(P, 1 + dim)`` with rows ``(t, x...)``.  Each path
    ``dX/ds = -b_m(t - s, X)`` is integrated with RK4 at step
    ``dx / (2 max|b_m|)``; a path reaching ``t = 0`` returns ``u0``
    interpolated at its foot, a path leaving through the lateral boundary
    returns ``g(t_hit, x_hit)`` at the hit located by bisection.
    Returns shape ``(m, P)``.
    """
    grid = seq.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != grid.dim + 1:
        raise ValueError("sample points must be rows (t, x...)")
    T = float(seq.times[-1])
    if np.any(pts[:, 0] < 0) or np.any(pts[:, 0] > T) or np.any(_outside(grid, pts[:, 1:]) > 0):
        raise ValueError("sample points must lie in the space-time domain")
    U0 = _cell_data(u0, grid)
    ncomp = U0.shape[0]
    b = seq.b                                             # (L, d, *n)
    b_nodes = np.moveaxis(b, 1, 0)                        # (d, L, *n)
    axes_tx = [seq.times] + [grid.centers(a) for a in range(grid.dim)]
    axes_x = [grid.centers(a) for a in range(grid.dim)]
    bmax = float(np.max(np.abs(b))) if b.size else 0.0
    h = min(grid.dx) / (2 * bmax) if bmax > 0 else np.inf

    def vel(t, X):
        return _interp(b_nodes, axes_tx, np.column_stack([t, X])).T

    def rk4(t, X, step):
        k1 = -vel(t, X)
        k2 = -vel(t - step / 2, X + step[:, None] / 2 * k1)
        k3 = -vel(t - step / 2, X + step[:, None] / 2 * k2)
        k4 = -vel(t - step, X + step[:, None] * k3)
        return X + step[:, None] / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    P = pts.shape[0]
    t = pts[:, 0].copy()
    X = pts[:, 1:].copy()
    out = np.full((ncomp, P), np.nan)
    active = np.ones(P, dtype=bool)
    budget = 2 * T + 1e-12
    travelled = np.zeros(P)
    tol = 1e-10 * min(grid.dx)
    while np.any(active):
        ia = np.flatnonzero(active)
        step = np.minimum(h, t[ia])
        done0 = step <= 0
        if np.any(done0):
            j = ia[done0]
            out[:, j] = _interp(U0, axes_x, X[j])
            active[j] = False
            ia, step = ia[~done0], step[~done0]
            if len(ia) == 0:
                break
        Xn = rk4(t[ia], X[ia], step)
        exited = _outside(grid, Xn) > 0
        if np.any(exited):
            je = ia[exited]
            lo_f = np.zeros(len(je))
            hi_f = np.ones(len(je))
            st = step[exited]
            speed = max(bmax, 1e-300)
            while np.max((hi_f - lo_f) * st) * speed > tol:
                mid = 0.5 * (lo_f + hi_f)
                Xm = rk4(t[je], X[je], mid * st)
                out_m = _outside(grid, Xm) > 0
                hi_f = np.where(out_m, mid, hi_f)
                lo_f = np.where(out_m, lo_f, mid)
            Xh = rk4(t[je], X[je], hi_f * st)
            Xh = np.clip(Xh, np.array(grid.lo), np.array(grid.hi))
            th = t[je] - hi_f * st
            out[:, je] = _eval_g(g, th, Xh, ncomp)
            active[je] = False
        keep = ~exited
        ik = ia[keep]
        X[ik] = Xn[keep]
        t[ik] = t[ik] - step[keep]
        travelled[ik] += step[keep]
        if np.any(travelled > budget):
            raise SolverFault("characteristic did not leave the space-time domain within budget")
        reached = ik[t[ik] <= 0]
        if len(reached):
            out[:, reached] = _interp(U0, axes_x, X[reached])
            active[reached] = False
    return out


def _cell_data(u0, grid: Grid) -> np.ndarray:
    """Initial data as a ``(m, *n)`` array."""
    if isinstance(u0, CellField):
        return np.asarray(u0.values)
    v = np.asarray(u0(*grid.cell_coords()) if callable(u0) else u0, dtype=float)
    if v.ndim == grid.dim + 1:
        return v
    if v.ndim == 1 and v.shape != grid.shape:
        return np.array(np.broadcast_to(v.reshape((-1,) + (1,) * grid.dim), (len(v),) + grid.shape))
    return np.array(np.broadcast_to(v, grid.shape))[None]


def _eval_g(g, t: np.ndarray, X: np.ndarray, ncomp: int) -> np.ndarray:
    if callable(g):
        v = np.asarray(g(t, *X.T), dtype=float)
    else:
        v = np.asarray(g, dtype=float)
    if v.ndim <= 1 and v.shape != (ncomp,):
        return np.broadcast_to(v, (ncomp, len(t)))
    if v.shape == (ncomp,):
        return np.broadcast_to(v[:, None], (ncomp, len(t)))
    return np.broadcast_to(v, (ncomp, len(t)))


@dataclass
class BoundaryFluxSeries:
    """Outward boundary mass flux (times area) per step and face."""

    grid: Grid
    times: np.ndarray
    mass: np.ndarray
    eps_sign: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.mass = np.asarray(self.mass, dtype=float)
        if self.eps_sign is None:
            scale = float(np.max(np.abs(self.mass))) if self.mass.size else 0.0
            self.eps_sign = SIGN_RTOL * scale

    @classmethod
    def from_record(cls, record: DensityFluxRecord) -> "BoundaryFluxSeries":
        return cls(record.grid, record.times, np.array([record.boundary_mass(n) for n in range(record.steps)]),
                   record.sign_threshold)

    def labels(self) -> np.ndarray:
        m, e = self.mass, self.eps_sign
        return np.where(m < -e, INFLOW, np.where(m > e, OUTFLOW, CHARACTERISTIC)).astype(np.int8)

    def labels_at(self, t: np.ndarray) -> np.ndarray:
        """Labels of the steps containing times ``t``."""
        k = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        return self.labels()[k]


def indicator_convergence_study(series: Mapping[int, BoundaryFluxSeries | DensityFluxRecord],
                                reference: BoundaryFluxSeries | DensityFluxRecord) -> dict[int, tuple[float, float]]:
    """Measure of ``{Gamma-_m vs Gamma-}`` and ``{Gamma+_m vs Gamma+}``
    disagreement, restricted to the reference's inflow and outflow faces.

    Labels of each approximation are read at the midpoints of the
    reference steps, and each disagreeing face-step counts ``area * dt``.
    """
    ref = reference if isinstance(reference, BoundaryFluxSeries) else BoundaryFluxSeries.from_record(reference)
    faces = boundary_faces(ref.grid)
    mids = 0.5 * (ref.times[:-1] + ref.times[1:])
    weight = np.diff(ref.times)[:, None] * faces.area[None]
    lr = ref.labels()
    active = lr != CHARACTERISTIC
    result = {}
    for m, s in series.items():
        s = s if isinstance(s, BoundaryFluxSeries) else BoundaryFluxSeries.from_record(s)
        if s.grid != ref.grid:
            raise ValueError(f"series m={m} lives on a different grid")
        lm = s.labels_at(mids)
        minus = active & ((lm == INFLOW) != (lr == INFLOW))
        plus = active & ((lm == OUTFLOW) != (lr == OUTFLOW))
        result[m] = (float(np.sum(weight[minus])), float(np.sum(weight[plus])))
    return result
