"""
Upwind transport of ``u`` by a nearly incompressible field:

    d_t(rho u) + div(rho u b) = 0,   u = u0 at t = 0,   u = g on the inflow set.

The scheme never sees ``b`` itself.  It consumes the per-face mass fluxes of
``rho b`` from a :class:`DensityFluxRecord`, the same fluxes that advance
``rho``.  Every new cell value of ``u`` is then a convex combination of the
old value and of upwind/inflow values, which gives the maximum principle,
order preservation and exact preservation of constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from nearinc.grid import BoundaryFaceSet, CellField, Grid, boundary_faces, eval_cells, eval_faces

CONTINUITY_RTOL = 1e-12
VACUUM_RTOL = 1e-12
SIGN_RTOL = 1e-14

INFLOW, CHARACTERISTIC, OUTFLOW = -1, 0, 1


@dataclass
class DensityFluxRecord:
    """Discrete witness of ``d_t rho + div(rho b) = 0``.

    ``mass[n][a]`` holds, for step ``n``, the flux of ``rho b`` through each
    face normal to axis ``a`` (oriented along ``+e_a``, already multiplied by
    the face area).  ``rho[n]`` is the density at ``times[n]``.
    """

    grid: Grid
    times: np.ndarray
    rho: np.ndarray
    mass: list
    faces: BoundaryFaceSet = field(init=False, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.rho = np.asarray(self.rho, dtype=float)
        self.faces = boundary_faces(self.grid)
        if self.rho.shape != (len(self.times),) + self.grid.shape:
            raise ValueError("density snapshots do not match the time levels")
        if len(self.mass) != len(self.times) - 1:
            raise ValueError("need one set of face fluxes per step")
        for n, M in enumerate(self.mass):
            if len(M) != self.grid.dim:
                raise ValueError(f"step {n}: need one flux array per axis")
            for a in range(self.grid.dim):
                if np.shape(M[a]) != self.grid.face_shape(a):
                    raise ValueError(f"step {n}: flux array for axis {a} has the wrong shape")

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def flux_scale(self) -> float:
        return max((float(np.max(np.abs(m))) for M in self.mass for m in M), default=0.0)

    @property
    def sign_threshold(self) -> float:
        return SIGN_RTOL * self.flux_scale

    @property
    def vacuum_threshold(self) -> float:
        return VACUUM_RTOL * float(np.max(self.rho)) if self.rho.size else 0.0

    def boundary_mass(self, n: int) -> np.ndarray:
        """Outward mass flux (times area) on each boundary face in step ``n``."""
        return self.faces.outward(self.mass[n])

    def labels(self, n: int) -> np.ndarray:
        m = self.boundary_mass(n)
        eps = self.sign_threshold
        return np.where(m < -eps, INFLOW, np.where(m > eps, OUTFLOW, CHARACTERISTIC)).astype(np.int8)

    def divergence(self, n: int) -> np.ndarray:
        """Net outgoing mass flux of every cell in step ``n``."""
        div = np.zeros(self.grid.shape)
        for a, M in enumerate(self.mass[n]):
            k = M.shape[a]
            div += np.take(M, np.arange(1, k), axis=a) - np.take(M, np.arange(0, k - 1), axis=a)
        return div

    def outflow(self, n: int) -> np.ndarray:
        """Total mass flux leaving each cell in step ``n`` (nonnegative)."""
        out = np.zeros(self.grid.shape)
        for a, M in enumerate(self.mass[n]):
            k = M.shape[a]
            out += np.maximum(np.take(M, np.arange(1, k), axis=a), 0.0)
            out += np.maximum(-np.take(M, np.arange(0, k - 1), axis=a), 0.0)
        return out

    def continuity_defect(self, n: int) -> float:
        """Worst cell defect of discrete continuity in step ``n``, relative."""
        vol = self.grid.cell_volume
        dt = self.times[n + 1] - self.times[n]
        res = (self.rho[n + 1] - self.rho[n]) * vol + dt * self.divergence(n)
        scale = max(float(np.max(np.abs(self.rho[n]))) * vol,
                    float(np.max(np.abs(self.rho[n + 1]))) * vol,
                    dt * max(float(np.max(np.abs(m))) for m in self.mass[n]), 1e-300)
        return float(np.max(np.abs(res))) / scale

    def step(self, n: int) -> "DensityFluxRecord":
        """The single-step record of step ``n``."""
        return DensityFluxRecord(self.grid, self.times[n:n + 2], self.rho[n:n + 2], [self.mass[n]])

    def validate(self):
        """Reject records that break continuity, positivity or the outflow
        bound ``dt * outflow <= rho * vol`` that upwinding relies on."""
        vol = self.grid.cell_volume
        if np.any(self.rho < 0):
            raise ValueError("record density must be nonnegative")
        for n in range(self.steps):
            d = self.continuity_defect(n)
            if d > CONTINUITY_RTOL:
                raise ValueError(f"step {n}: discrete continuity violated (relative defect {d:.3e})")
            dt = self.times[n + 1] - self.times[n]
            w0 = self.rho[n] * vol - dt * self.outflow(n)
            scale = max(float(np.max(self.rho[n])) * vol, 1e-300)
            if np.min(w0) < -CONTINUITY_RTOL * scale:
                raise ValueError(f"step {n}: mass leaving a cell exceeds its content")
        return self


def continuity_record(grid: Grid, rho0, velocity: Callable, T: float, cfl: float = 0.45,
                      rho_b=None, dt: float | None = None) -> DensityFluxRecord:
    """Build a record by upwinding ``d_t rho + div(rho b) = 0``.

    ``velocity(t, *x)`` returns the ``dim`` components of ``b``; component
    ``a`` is sampled at the centres of faces normal to axis ``a``.  Inflow
    faces see the density ``rho_b`` (constant or ``(t, *x)``; defaults to the
    adjacent cell).  Steps are uniform, the largest ones that respect ``cfl``
    (or exactly ``dt`` when given, shortened to land on ``T``).
    """
    faces = boundary_faces(grid)
    rho = eval_cells(rho0, grid)
    if np.any(rho < 0):
        raise ValueError("density must be nonnegative")
    vol = grid.cell_volume
    area = [grid.face_area(a) for a in range(grid.dim)]

    def face_velocity(t):
        out = []
        for a in range(grid.dim):
            comp = velocity(t, *grid.face_coords(a))[a]
            out.append(np.broadcast_to(np.asarray(comp, dtype=float), grid.face_shape(a)))
        return out

    if dt is None:
        bmax = max(float(np.max(np.abs(v))) for v in face_velocity(0.0))
        if bmax == 0:
            dt = T
        else:
            dt = cfl * min(grid.dx) / (grid.dim * bmax)
    nsteps = max(1, int(np.ceil(T / dt - 1e-12)))
    h = T / nsteps
    times = np.linspace(0.0, T, nsteps + 1)
    snaps, mass = [rho], []
    for n in range(nsteps):
        t = times[n]
        if rho_b is None:
            ghost = faces.boundary_cells(rho)
        else:
            ghost = eval_faces(rho_b, faces, t)
        M = []
        for a, b in enumerate(face_velocity(t)):
            low = faces.to_ghost(ghost, a, 0)
            high = faces.to_ghost(ghost, a, 1)
            padded = np.concatenate([low, rho, high], axis=a)
            k = padded.shape[a]
            left = np.take(padded, np.arange(0, k - 1), axis=a)
            right = np.take(padded, np.arange(1, k), axis=a)
            M.append(area[a] * b * np.where(b > 0, left, right))
        div = np.zeros(grid.shape)
        for a, Ma in enumerate(M):
            k = Ma.shape[a]
            div += np.take(Ma, np.arange(1, k), axis=a) - np.take(Ma, np.arange(0, k - 1), axis=a)
        rho = rho - (h / vol) * div
        if np.any(rho < 0):
            raise ValueError("velocity too large for the step size: density turned negative")
        snaps.append(rho)
        mass.append(tuple(M))
    return DensityFluxRecord(grid, times, np.array(snaps), mass)


@dataclass
class TransportIBVP:
    """``u0`` is a constant, array, CellField or ``f(*x)``; ``g`` a constant or
    ``g(t, *x)`` on boundary faces.  Both may have ``components`` entries."""

    record: DensityFluxRecord
    u0: object
    g: object
    components: int = 1

    @property
    def T(self) -> float:
        return float(self.record.times[-1])


class TransportStep(NamedTuple):
    u: np.ndarray
    q: np.ndarray
    traces: np.ndarray
    upwind: np.ndarray


@dataclass
class TransportSolution:
    """Snapshots of the transported state.

    ``u[n]`` is the scheme's state at level ``n`` (its values on vacuum
    cells are arbitrary but finite), ``q = rho * u`` the conserved quantity,
    ``traces[n]`` the outward flux of ``rho u b`` (times area) on each
    boundary face during step ``n`` and ``upwind[n]`` the value of ``u``
    carried through each boundary face (NaN on characteristic faces).
    """

    record: DensityFluxRecord
    u: np.ndarray
    traces: np.ndarray
    upwind: np.ndarray
    inflow: np.ndarray

    @property
    def grid(self) -> Grid:
        return self.record.grid

    @property
    def components(self) -> int:
        return self.u.shape[1]

    @property
    def q(self) -> np.ndarray:
        # + 0.0 turns the -0.0 of (0 * negative) into +0.0
        return self.record.rho[:, None] * self.u + 0.0

    @property
    def q0(self) -> np.ndarray:
        return self.q[0]

    def recovered(self) -> np.ndarray:
        """``u`` where ``rho >= eps_vac``, NaN elsewhere."""
        mask = self.record.rho >= self.record.vacuum_threshold
        return np.where(mask[:, None], self.u, np.nan)

    def face_upwind(self, n: int) -> list[np.ndarray]:
        """Value of ``u`` carried through every face in step ``n``, shape
        ``(m, *face_shape)`` per axis; boundary faces use the inflow values
        where mass enters."""
        rec = self.record
        u = self.u[n]
        out = []
        for a, M in enumerate(rec.mass[n]):
            g_low = rec.faces.to_ghost(self.inflow[n], a, 0)
            g_high = rec.faces.to_ghost(self.inflow[n], a, 1)
            padded = np.concatenate([g_low, u, g_high], axis=a + 1)
            k = padded.shape[a + 1]
            left = np.take(padded, np.arange(0, k - 1), axis=a + 1)
            right = np.take(padded, np.arange(1, k), axis=a + 1)
            out.append(np.where(M > 0, left, right))
        return out

    def face_fluxes(self, n: int) -> list[np.ndarray]:
        """Flux of ``rho u b`` along ``+e_a`` on all faces in step ``n``."""
        return [up * M for up, M in zip(self.face_upwind(n), self.record.mass[n])]


def _upwind_step(u: np.ndarray, rho_old: np.ndarray, rho_new: np.ndarray, mass, dt: float,
                 g: np.ndarray, grid: Grid, faces: BoundaryFaceSet, eps_sign: float):
    """Advance ``u`` (shape ``(m, *n)``) by one step of the upwind scheme."""
    vol = grid.cell_volume
    weights = []
    values = []
    out = np.zeros(grid.shape)
    for a, M in enumerate(mass):
        k = M.shape[a]
        M_low = np.take(M, np.arange(0, k - 1), axis=a)   # left face of each cell
        M_high = np.take(M, np.arange(1, k), axis=a)      # right face of each cell
        out += np.maximum(M_high, 0.0) + np.maximum(-M_low, 0.0)
        g_low = faces.to_ghost(g, a, 0)
        g_high = faces.to_ghost(g, a, 1)
        padded = np.concatenate([g_low, u, g_high], axis=a + 1)
        kp = padded.shape[a + 1]
        from_low = np.take(padded, np.arange(0, kp - 2), axis=a + 1)
        from_high = np.take(padded, np.arange(2, kp), axis=a + 1)
        weights.append(dt * np.maximum(M_low, 0.0))
        values.append(from_low)
        weights.append(dt * np.maximum(-M_high, 0.0))
        values.append(from_high)
    w0 = np.maximum(rho_old * vol - dt * out, 0.0)
    W = np.stack([w0] + weights)                      # (K, *n)
    V = np.stack([u] + values)                        # (K, m, *n)
    D = W.sum(axis=0)
    ref = np.argmax(W, axis=0)
    u_ref = np.take_along_axis(V, ref[None, None], axis=0)[0]
    safe = np.where(D > 0, D, 1.0)
    with np.errstate(invalid="ignore"):
        incr = np.sum((W / safe)[:, None] * (V - u_ref[None]), axis=0)
    # a cell that holds and receives no mass keeps its (irrelevant) state
    u_new = np.where(D > 0, u_ref + incr, u)
    q_new = rho_new * u_new + 0.0

    m_out = faces.outward(mass)
    label = np.where(m_out < -eps_sign, INFLOW, np.where(m_out > eps_sign, OUTFLOW, CHARACTERISTIC))
    interior = faces.boundary_cells(u)
    up = np.where(label == INFLOW, g, interior)
    up = np.where(label == CHARACTERISTIC, np.nan, up)
    traces = np.where(label == CHARACTERISTIC, 0.0, up * m_out)
    return u_new, q_new, traces, up


def step_transport(u, step: DensityFluxRecord, g, t: float | None = None) -> TransportStep:
    """One upwind step of the state ``u`` (CellField or ``(m, *n)`` array)
    over a single-step record (see :meth:`DensityFluxRecord.step`).

    ``g`` is the inflow datum (constant, ``(m, nfaces)`` array or
    ``g(t, *x)``).  Returns the new state, ``q = rho_new * u_new``, the
    outward boundary traces of ``rho u b`` and the upwind boundary values.
    """
    if step.steps != 1:
        raise ValueError("expected a single-step record")
    step.validate()
    grid = step.grid
    u = np.array(u.values if isinstance(u, CellField) else u, dtype=float)
    if u.shape == grid.shape:
        u = u[None]
    if u.shape[1:] != grid.shape:
        raise ValueError("state does not fit the record's grid")
    t0 = float(step.times[0]) if t is None else t
    gv = eval_faces(g, step.faces, t0, components=u.shape[0])
    return TransportStep(*_upwind_step(u, step.rho[0], step.rho[1], step.mass[0], float(step.dt[0]),
                                       gv, grid, step.faces, step.sign_threshold))


def solve_transport(problem: TransportIBVP) -> TransportSolution:
    rec = problem.record
    rec.validate()
    grid, faces = rec.grid, rec.faces
    m = problem.components
    u = eval_cells(problem.u0, grid, components=m)
    if not np.all(np.isfinite(u)):
        raise ValueError("initial datum must be finite")
    eps = rec.sign_threshold
    us, traces, ups, gs = [u], [], [], []
    for n in range(rec.steps):
        t = rec.times[n]
        g = eval_faces(problem.g, faces, t, components=m)
        if not np.all(np.isfinite(g)):
            raise ValueError(f"boundary datum must be finite (t={t})")
        u, _, tr, up = _upwind_step(u, rec.rho[n], rec.rho[n + 1], rec.mass[n], rec.times[n + 1] - t,
                                    g, grid, faces, eps)
        us.append(u)
        traces.append(tr)
        ups.append(up)
        gs.append(g)
    shape_b = (0, m, len(faces))
    return TransportSolution(
        rec,
        np.array(us),
        np.array(traces) if traces else np.zeros(shape_b),
        np.array(ups) if ups else np.zeros(shape_b),
        np.array(gs) if gs else np.zeros(shape_b),
    )


def max_principle_margin(sol: TransportSolution, u0_linf: float, g_linf: float) -> float:
    """``max(|u0|, |g|) - max |u|`` over non-vacuum cells; nonnegative when
    the maximum principle holds."""
    r = sol.recovered()
    vals = np.abs(r[np.isfinite(r)])
    worst = float(vals.max()) if vals.size else 0.0
    return max(u0_linf, g_linf) - worst


def comparison_check(sol1: TransportSolution, sol2: TransportSolution) -> float:
    """min over cells and levels of ``q1 - q2`` for two solves sharing a record."""
    if sol1.record is not sol2.record:
        r1, r2 = sol1.record, sol2.record
        same = (r1.grid == r2.grid and np.array_equal(r1.times, r2.times) and np.array_equal(r1.rho, r2.rho)
                and all(np.array_equal(x, y) for M1, M2 in zip(r1.mass, r2.mass) for x, y in zip(M1, M2)))
        if not same:
            raise ValueError("solutions were built on different flux records")
    return float(np.min(sol1.q - sol2.q))


@dataclass(frozen=True)
class SmoothTest:
    """Test function with its time derivative and spatial gradient, each a
    callable ``(t, *x)``."""

    value: Callable
    dt: Callable
    grad: Callable

    def __call__(self, t, *x):
        return self.value(t, *x)


def bump(center: Sequence[float], radius: float, t_center: float = 0.0, t_radius: float = np.inf,
         amplitude: float = 1.0) -> SmoothTest:
    """C-infinity bump ``A exp(1 - 1/(1 - s))`` with ``s = |x - c|^2/R^2 + (t - t_c)^2/R_t^2``.

    The default ``t_radius`` makes the bump independent of time.
    """
    c = np.atleast_1d(np.asarray(center, dtype=float))
    R2 = radius ** 2
    Rt2 = t_radius ** 2

    def parts(t, *x):
        s = sum((xi - ci) ** 2 for xi, ci in zip(x, c)) / R2
        s = s + ((t - t_center) ** 2 / Rt2 if np.isfinite(Rt2) else 0.0)
        s = np.asarray(s, dtype=float)
        inside = s < 1.0
        ss = np.where(inside, s, 0.0)
        val = np.where(inside, amplitude * np.exp(1.0 - 1.0 / (1.0 - ss)), 0.0)
        dval_ds = np.where(inside, -val / (1.0 - ss) ** 2, 0.0)
        return val, dval_ds

    def value(t, *x):
        return parts(t, *x)[0]

    def dt(t, *x):
        _, d = parts(t, *x)
        return d * (2.0 * (t - t_center) / Rt2 if np.isfinite(Rt2) else 0.0)

    def grad(t, *x):
        _, d = parts(t, *x)
        return tuple(d * 2.0 * (xi - ci) / R2 for xi, ci in zip(x, c))

    return SmoothTest(value, dt, grad)


def weak_residual(sol: TransportSolution, psi: SmoothTest) -> np.ndarray:
    """Quadrature of the distributional identity

        int int rho u (d_t psi + b . grad psi) - int_Gamma Tr(rho u b) psi
            + int (rho u)_0 psi(0) - int (rho u)(T) psi(T)

    per component.  The last term vanishes for test functions supported in
    ``[0, T)``.  ``rho u b`` at a cell is the mean of the upwind face
    fluxes on its two faces along each axis; time integrals use the left
    rectangle rule on the step partition.  The result is O(dx + dt).
    """
    rec = sol.record
    grid, faces = rec.grid, rec.faces
    vol = grid.cell_volume
    coords = grid.cell_coords()
    q = sol.q
    total = vol * np.sum(q[0] * np.asarray(psi.value(0.0, *coords))[None], axis=tuple(range(1, grid.dim + 1)))
    for n in range(rec.steps):
        t = rec.times[n]
        dt = rec.times[n + 1] - t
        pt = np.broadcast_to(np.asarray(psi.dt(t, *coords), dtype=float), grid.shape)
        gr = psi.grad(t, *coords)
        integrand = q[n] * pt[None]
        for a, Fa in enumerate(sol.face_fluxes(n)):
            k = Fa.shape[a + 1]
            cell = 0.5 * (np.take(Fa, np.arange(0, k - 1), axis=a + 1) + np.take(Fa, np.arange(1, k), axis=a + 1))
            cell = cell / grid.face_area(a)
            integrand = integrand + cell * np.broadcast_to(np.asarray(gr[a], dtype=float), grid.shape)[None]
        total = total + dt * vol * np.sum(integrand, axis=tuple(range(1, grid.dim + 1)))
        pf = np.broadcast_to(np.asarray(psi.value(t, *faces.center.T), dtype=float), (len(faces),))
        total = total - dt * np.sum(sol.traces[n] * pf[None], axis=-1)
    T = rec.times[-1]
    total = total - vol * np.sum(q[-1] * np.asarray(psi.value(T, *coords))[None], axis=tuple(range(1, grid.dim + 1)))
    return np.asarray(total, dtype=float)
