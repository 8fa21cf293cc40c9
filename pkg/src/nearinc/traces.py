"""
Discrete normal traces of ``(rho, rho b)`` and ``(rho u, rho u b)``.

A trace here is simply the face flux a scheme actually used, so the
discrete Gauss-Green identity holds by construction.  Mass traces are
outward-positive and already multiplied by the face area.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from nearinc.grid import CellField, Grid
from nearinc.transport import CHARACTERISTIC, INFLOW, OUTFLOW, DensityFluxRecord, TransportSolution


@dataclass
class BoundaryTrace:
    grid: Grid
    times: np.ndarray
    mass: np.ndarray          # (N, nfaces)
    transported: np.ndarray   # (N, m, nfaces)
    upwind: np.ndarray        # (N, m, nfaces), NaN on characteristic faces
    rho0: CellField
    q0: CellField
    eps_sign: float
    bound: float

    @property
    def labels(self) -> np.ndarray:
        m, e = self.mass, self.eps_sign
        return np.where(m < -e, INFLOW, np.where(m > e, OUTFLOW, CHARACTERISTIC)).astype(np.int8)

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    def bound_violation(self) -> float:
        """Largest excess of ``|Tr(rho u b)|`` over ``bound * |Tr(rho b)|``."""
        if self.mass.size == 0:
            return 0.0
        excess = np.abs(self.transported) - self.bound * np.abs(self.mass)[:, None]
        return float(np.max(excess))


def _same_record(a: DensityFluxRecord, b: DensityFluxRecord) -> bool:
    if a is b:
        return True
    return (a.grid == b.grid and np.array_equal(a.times, b.times) and np.array_equal(a.rho, b.rho)
            and all(np.array_equal(x, y) for Ma, Mb in zip(a.mass, b.mass) for x, y in zip(Ma, Mb)))


def extract_traces(record: DensityFluxRecord, sol: TransportSolution) -> BoundaryTrace:
    if not _same_record(record, sol.record):
        raise ValueError("transport solution was not built on this record")
    mass = np.array([record.boundary_mass(n) for n in range(record.steps)]).reshape(record.steps, len(record.faces))
    bound = max(float(np.max(np.abs(sol.u[0]))),
                float(np.max(np.abs(sol.inflow))) if sol.inflow.size else 0.0)
    return BoundaryTrace(record.grid, record.times, mass, sol.traces, sol.upwind,
                         CellField(record.grid, record.rho[0]), CellField(record.grid, sol.q0),
                         record.sign_threshold, bound)


def gauss_green_residual(trace: BoundaryTrace, sol: TransportSolution) -> np.ndarray:
    """Per component, ``sum dt * Tr(rho u b) + sum (q(T) - q(0)) vol`` relative
    to the largest term; the weak identity with a test function equal to 1."""
    vol = trace.grid.cell_volume
    axes = tuple(range(1, trace.grid.dim + 1))
    boundary = np.einsum("n,nmf->m", trace.dt, trace.transported)
    change = (sol.q[-1] - sol.q[0]).sum(axis=axes) * vol
    scale = np.maximum.reduce([np.abs(sol.q).max(axis=(0,) + tuple(a + 1 for a in axes)) * trace.grid.volume,
                               np.einsum("n,nmf->m", trace.dt, np.abs(trace.transported)),
                               np.full(sol.components, 1e-300)])
    return np.abs(boundary + change) / scale


def square(s):
    return s * s


def renormalization_check(trace: BoundaryTrace, h: Callable = square,
                          renormalized: BoundaryTrace | None = None, where: str = "inflow") -> float:
    """Worst deviation between ``h(Tr(rho u b) / Tr(rho b)) Tr(rho b)`` and the
    trace of the ``h``-renormalised problem, relative to the trace scale.

    Without ``renormalized`` the comparison partner is ``h(u_upwind) Tr(rho b)``
    built from the scheme's own upwind values, on every non-characteristic
    face.  With a trace from a solve of the data ``h(u0), h(g)`` the
    comparison runs over the faces selected by ``where``: ``"inflow"``
    (where both are fixed by the data) or ``"all"``.  On outflow faces the
    second solve carries its own numerical diffusion, so deviations there
    are diagnostic only.
    """
    M = trace.mass
    live = trace.labels != CHARACTERISTIC
    safe = np.where(live, M, 1.0)
    with np.errstate(invalid="ignore"):
        lhs = h(trace.transported / safe[:, None]) * safe[:, None]
    if renormalized is None:
        with np.errstate(invalid="ignore"):
            rhs = h(trace.upwind) * safe[:, None]
        sel = live
    else:
        if renormalized.mass.shape != M.shape or not np.array_equal(renormalized.mass, M):
            raise ValueError("renormalised trace comes from a different record")
        rhs = renormalized.transported
        if where == "inflow":
            sel = trace.labels == INFLOW
        elif where == "all":
            sel = live
        else:
            raise ValueError(f"unknown face selection {where!r}")
    sel = np.broadcast_to(sel[:, None], lhs.shape)
    if not np.any(sel):
        return 0.0
    dev = np.abs(lhs - rhs)[sel]
    scale = max(float(np.max(np.abs(lhs[sel]))), float(np.max(np.abs(rhs[sel]))), 1e-300)
    return float(np.max(dev)) / scale


@dataclass
class HyperplaneTrace:
    """Flux densities across the face plane ``x_axis = r`` (``r`` snapped to
    the nearest plane, index ``k``).  ``mass`` has shape ``(N, *transverse)``
    and ``flux`` shape ``(N, m, *transverse)``; both per unit area."""

    axis: int
    k: int
    r: float
    times: np.ndarray
    area: float
    mass: np.ndarray
    flux: np.ndarray


def hyperplane_trace(record: DensityFluxRecord, sol: TransportSolution, axis: int, r: float) -> HyperplaneTrace:
    grid = record.grid
    if not _same_record(record, sol.record):
        raise ValueError("transport solution was not built on this record")
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} out of range")
    if not (grid.lo[axis] <= r <= grid.hi[axis]):
        raise ValueError(f"plane x_{axis} = {r} lies outside the domain")
    k = int(np.clip(np.rint((r - grid.lo[axis]) / grid.dx[axis]), 0, grid.n[axis]))
    area = grid.face_area(axis)
    mass, flux = [], []
    for n in range(record.steps):
        mass.append(np.take(record.mass[n][axis], k, axis=axis) / area)
        flux.append(np.take(sol.face_fluxes(n)[axis], k, axis=axis + 1) / area)
    N = record.steps
    tshape = tuple(grid.n[a] for a in range(grid.dim) if a != axis)
    return HyperplaneTrace(axis, k, float(grid.nodes(axis)[k]), record.times, area,
                           np.array(mass).reshape((N,) + tshape),
                           np.array(flux).reshape((N, sol.components) + tshape))


def hyperplane_distance(a: HyperplaneTrace, b: HyperplaneTrace) -> float:
    """L1 distance over time and transverse area of the two flux densities."""
    if a.axis != b.axis or not np.array_equal(a.times, b.times):
        raise ValueError("hyperplane traces are not comparable")
    dt = np.diff(a.times).reshape((-1,) + (1,) * (a.flux.ndim - 1))
    return float(np.sum(np.abs(a.flux - b.flux) * dt) * a.area)


def space_continuity(record: DensityFluxRecord, sol: TransportSolution, axis: int, r0: float,
                     offsets=(4, 3, 2, 1)) -> list[tuple[float, float]]:
    """``(r, ||gamma_r - gamma_r0||)`` for planes ``offsets`` faces above ``r0``,
    or all below it when the farthest one would leave the domain."""
    ref = hyperplane_trace(record, sol, axis, r0)
    dx = record.grid.dx[axis]
    side = 1 if ref.k + max(offsets) <= record.grid.n[axis] else -1
    if not 0 <= ref.k + side * max(offsets) <= record.grid.n[axis]:
        raise ValueError("not enough face planes on either side of r0")
    out = []
    for j in offsets:
        k = ref.k + side * j
        g = hyperplane_trace(record, sol, axis, record.grid.lo[axis] + k * dx)
        out.append((g.r, hyperplane_distance(g, ref)))
    return out


def slab_balance(record: DensityFluxRecord, sol: TransportSolution, axis: int, k0: int, k1: int) -> np.ndarray:
    """Relative closure, per component, of the conserved quantity in the slab
    between face planes ``k0 < k1``: change of content plus net outflow
    through both planes and the lateral boundary."""
    grid = record.grid
    if not 0 <= k0 < k1 <= grid.n[axis]:
        raise ValueError("need face plane indices 0 <= k0 < k1 <= n")
    a0 = hyperplane_trace(record, sol, axis, grid.lo[axis] + k0 * grid.dx[axis])
    a1 = hyperplane_trace(record, sol, axis, grid.lo[axis] + k1 * grid.dx[axis])
    dt = record.dt
    tsum = tuple(range(2, a0.flux.ndim))
    through = np.einsum("n,nm->m", dt, (a1.flux - a0.flux).sum(axis=tsum) * a0.area)
    faces = record.faces
    idx = np.array([grid.multi_index(c)[axis] for c in faces.cell])
    lateral = (faces.axis != axis) & (idx >= k0) & (idx < k1)
    side = np.einsum("n,nm->m", dt, sol.traces[:, :, lateral].sum(axis=2)) if lateral.any() else 0.0
    sl = [slice(None)] * (grid.dim + 2)
    sl[axis + 2] = slice(k0, k1)
    q = sol.q[tuple(sl)]
    change = (q[-1] - q[0]).reshape(sol.components, -1).sum(axis=1) * grid.cell_volume
    peak_flux = max(float(np.max(np.abs(a0.flux), initial=0.0)), float(np.max(np.abs(a1.flux), initial=0.0)))
    scale = max(float(np.max(np.abs(q))) * grid.volume, peak_flux * a0.area * float(dt.sum()), 1e-300)
    return np.abs(change + through + side) / scale


__all__ = [
    "BoundaryTrace", "HyperplaneTrace", "extract_traces", "gauss_green_residual", "renormalization_check",
    "hyperplane_trace", "hyperplane_distance", "space_continuity", "slab_balance", "square",
]
