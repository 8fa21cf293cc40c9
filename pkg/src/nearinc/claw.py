"""
First-order Godunov finite-volume solver for the scalar law

    d_t rho + div(F(rho) rho) = 0      in (0, T) x Omega

with boundary data imposed in the Bardos-le Roux-Nedelec sense: the ghost
state on every boundary face is the boundary datum, and the same monotone
flux is used there as in the interior, so the datum is attained only where
characteristics enter the domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from nearinc.errors import SolverFault
from nearinc.grid import BoundaryFaceSet, CellField, Grid, boundary_faces, eval_cells, eval_faces

N_SAMPLES = 1025
DEFAULT_CFL = 0.45


def _as_vectorized(func):
    def wrapped(r):
        r = np.asarray(r, dtype=float)
        return np.broadcast_to(np.asarray(func(r), dtype=float), r.shape)

    return wrapped


@dataclass(frozen=True)
class FluxFamily:
    """Velocity laws ``f^i`` with derivatives; the conserved flux along axis
    ``i`` is ``G^i(rho) = f^i(rho) * rho``."""

    f: tuple[Callable, ...]
    df: tuple[Callable, ...]
    name: str = "custom"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if len(self.f) != len(self.df):
            raise ValueError("need one derivative per flux component")
        object.__setattr__(self, "f", tuple(_as_vectorized(g) for g in self.f))
        object.__setattr__(self, "df", tuple(_as_vectorized(g) for g in self.df))

    @property
    def dim(self) -> int:
        return len(self.f)

    def G(self, axis: int, rho):
        rho = np.asarray(rho, dtype=float)
        return self.f[axis](rho) * rho

    def dG(self, axis: int, rho):
        rho = np.asarray(rho, dtype=float)
        return self.df[axis](rho) * rho + self.f[axis](rho)

    def wavespeed(self, lo: float, hi: float) -> float:
        """max_i max_{rho in [lo, hi]} |dG^i/drho|, by dense sampling."""
        key = ("speed", float(lo), float(hi))
        if key not in self._cache:
            r = np.linspace(lo, hi, N_SAMPLES)
            lam = max(float(np.max(np.abs(self.dG(a, r)))) for a in range(self.dim))
            if not np.isfinite(lam):
                raise SolverFault(f"wavespeed is not finite on [{lo}, {hi}]")
            self._cache[key] = lam
        return self._cache[key]

    def critical_points(self, axis: int, lo: float, hi: float) -> np.ndarray:
        """Interior extrema of ``G^axis`` on ``[lo, hi]``."""
        key = ("crit", axis, float(lo), float(hi))
        if key in self._cache:
            return self._cache[key]
        pts = []
        if hi > lo:
            r = np.linspace(lo, hi, N_SAMPLES)
            d = self.dG(axis, r)
            for k in range(1, N_SAMPLES - 1):
                if d[k] == 0.0:
                    pts.append(r[k])
            for k in range(N_SAMPLES - 1):
                if d[k] * d[k + 1] < 0.0:
                    pts.append(brentq(lambda s: float(self.dG(axis, s)), r[k], r[k + 1], xtol=1e-15))
        out = np.array(sorted(set(pts)), dtype=float)
        self._cache[key] = out
        return out

    def numerical_flux(self, axis: int, left, right, lo: float, hi: float):
        """Godunov flux along ``+e_axis`` and the interface state attaining it.

        ``lo``/``hi`` must bracket every state involved; extrema of ``G`` are
        looked up among the critical points on that range.
        """
        return _godunov(lambda r: self.G(axis, r), self.critical_points(axis, lo, hi), left, right)

    @classmethod
    def linear(cls, velocity: Sequence[float]) -> "FluxFamily":
        vel = [float(c) for c in np.atleast_1d(velocity)]
        f = tuple((lambda c: lambda r: np.full_like(r, c))(c) for c in vel)
        df = tuple(lambda r: np.zeros_like(r) for _ in vel)
        return cls(f, df, name="linear")

    @classmethod
    def burgers_like(cls, dim: int = 1, scale: Sequence[float] | None = None) -> "FluxFamily":
        """``f^i(rho) = c_i rho`` so that ``G^i = c_i rho^2``."""
        c = [1.0] * dim if scale is None else [float(s) for s in scale]
        f = tuple((lambda s: lambda r: s * r)(s) for s in c)
        df = tuple((lambda s: lambda r: np.full_like(r, s))(s) for s in c)
        return cls(f, df, name="burgers-like")

    @classmethod
    def polynomial(cls, coeffs: Sequence[Sequence[float]]) -> "FluxFamily":
        """``f^i`` given by ascending polynomial coefficients, one list per axis."""
        polys = [np.polynomial.Polynomial(c) for c in coeffs]
        f = tuple(p for p in polys)
        df = tuple(p.deriv() for p in polys)
        return cls(f, df, name="polynomial")


def _godunov(G, crit, left, right):
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    lo = np.minimum(left, right)
    hi = np.maximum(left, right)
    gl, gr = G(left), G(right)
    fmin = np.minimum(gl, gr)
    smin = np.where(gl <= gr, left, right)
    fmax = np.maximum(gl, gr)
    smax = np.where(gl >= gr, left, right)
    for c in crit:
        inside = (lo < c) & (c < hi)
        if not np.any(inside):
            continue
        gc = float(G(c))
        lower = inside & (gc < fmin)
        fmin = np.where(lower, gc, fmin)
        smin = np.where(lower, c, smin)
        upper = inside & (gc > fmax)
        fmax = np.where(upper, gc, fmax)
        smax = np.where(upper, c, smax)
    inc = left <= right
    return np.where(inc, fmin, fmax), np.where(inc, smin, smax)


def godunov_flux(rho_l: float, rho_r: float, G: Callable[[float], float], orientation: int = 1) -> float:
    """Godunov flux of the scalar flux ``orientation * G`` between two states.

    Returns min of the flux over ``[rho_l, rho_r]`` when ``rho_l <= rho_r``
    and the max over ``[rho_r, rho_l]`` otherwise.  The extremum is found by
    dense sampling followed by a bounded refinement around the best sample.
    """
    if not (np.isfinite(rho_l) and np.isfinite(rho_r)):
        raise ValueError("states must be finite")
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")

    def g(r):
        return orientation * float(G(r))

    if rho_l == rho_r:
        return g(rho_l)
    sign = 1.0 if rho_l <= rho_r else -1.0  # minimise sign * g
    a, b = min(rho_l, rho_r), max(rho_l, rho_r)
    r = np.linspace(a, b, N_SAMPLES)
    vals = np.array([sign * g(s) for s in r])
    k = int(np.argmin(vals))
    best = vals[k]
    lo_k, hi_k = r[max(k - 1, 0)], r[min(k + 1, N_SAMPLES - 1)]
    if hi_k > lo_k:
        res = minimize_scalar(lambda s: sign * g(s), bounds=(lo_k, hi_k), method="bounded",
                              options={"xatol": 1e-14 * max(1.0, abs(b - a))})
        if res.success and res.fun < best:
            best = float(res.fun)
    return sign * best


@dataclass
class ScalarIBVP:
    """Scalar law with initial datum ``rho0`` and boundary datum ``rho_b``.

    ``rho0`` is a constant, an array, a CellField or a callable of the cell
    coordinates; ``rho_b`` is a constant or a callable ``(t, *x)`` evaluated
    at boundary face centres.  Both must be nonnegative densities.
    """

    flux: FluxFamily
    rho0: object
    rho_b: object
    T: float

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError("final time must be positive")


class ClawStep(NamedTuple):
    rho: CellField
    dt: float
    fluxes: tuple[np.ndarray, ...]
    states: tuple[np.ndarray, ...]
    boundary: np.ndarray


@dataclass
class ClawSolution:
    """Snapshots of rho and every face flux actually used.

    ``fluxes[n][a]`` is the Godunov flux density along ``+e_a`` in step
    ``n`` (per unit face area), ``states[n][a]`` the interface state with
    ``G^a(state) == flux``, and ``boundary[n]`` the ghost values imposed on
    the boundary faces during step ``n``.
    """

    grid: Grid
    flux: FluxFamily
    times: np.ndarray
    rho: np.ndarray
    fluxes: list
    states: list
    boundary: list
    faces: BoundaryFaceSet = field(repr=False)

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    def snapshot(self, n: int) -> CellField:
        return CellField(self.grid, self.rho[n])

    def boundary_flux(self, n: int) -> np.ndarray:
        """Outward flux times face area on each boundary face in step ``n``."""
        return self.faces.outward(self.fluxes[n]) * self.faces.area

    def mass_residual(self, n: int) -> float:
        """Relative defect of discrete conservation over step ``n``."""
        vol = self.grid.cell_volume
        dm = float(np.sum(self.rho[n + 1] - self.rho[n])) * vol
        out = float(np.sum(self.boundary_flux(n))) * (self.times[n + 1] - self.times[n])
        scale = max(float(np.sum(np.abs(self.rho[n]))) * vol, abs(out), 1e-300)
        return abs(dm + out) / scale

    def to_record(self):
        """Wrap the face fluxes as mass fluxes of the density ``rho``."""
        from nearinc.transport import DensityFluxRecord

        area = [self.grid.face_area(a) for a in range(self.grid.dim)]
        mass = [tuple(F[a] * area[a] for a in range(self.grid.dim)) for F in self.fluxes]
        return DensityFluxRecord(self.grid, np.array(self.times), self.rho, mass)


def _ghosted(rho: np.ndarray, ghost: np.ndarray, faces: BoundaryFaceSet, axis: int) -> np.ndarray:
    low = faces.to_ghost(ghost, axis, 0)
    high = faces.to_ghost(ghost, axis, 1)
    return np.concatenate([low, rho, high], axis=axis)


def _face_pair(padded: np.ndarray, axis: int):
    n = padded.shape[axis]
    left = np.take(padded, np.arange(0, n - 1), axis=axis)
    right = np.take(padded, np.arange(1, n), axis=axis)
    return left, right


def _advance(rho, ghost, grid, faces, flux, cfl, remaining, fixed_dt=None):
    lo = min(float(rho.min()), float(ghost.min()))
    hi = max(float(rho.max()), float(ghost.max()))
    lam = flux.wavespeed(lo, hi)
    limit = cfl * min(grid.dx) / (grid.dim * lam) if lam > 0 else np.inf
    if fixed_dt is not None:
        if fixed_dt > limit * (1 + 1e-12):
            raise SolverFault(f"fixed step {fixed_dt} violates the CFL bound {limit}")
        limit = fixed_dt
    dt = min(limit, remaining)
    new = rho.copy()
    F, S = [], []
    for a in range(grid.dim):
        left, right = _face_pair(_ghosted(rho, ghost, faces, a), a)
        Fa, Sa = flux.numerical_flux(a, left, right, lo, hi)
        n = Fa.shape[a]
        new -= (dt / grid.dx[a]) * (np.take(Fa, np.arange(1, n), axis=a) - np.take(Fa, np.arange(0, n - 1), axis=a))
        F.append(Fa)
        S.append(Sa)
    if not np.all(np.isfinite(new)):
        raise SolverFault("non-finite value in the conservative update")
    # rounding guard: a monotone update cannot leave [lo, hi]
    np.clip(new, lo, hi, out=new)
    return new, dt, tuple(F), tuple(S)


def _check_cfl(cfl: float):
    if not (0 < cfl <= 1):
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")


def step_claw(rho: CellField, problem: ScalarIBVP, t: float = 0.0, cfl: float = DEFAULT_CFL) -> ClawStep:
    """One explicit step from time ``t``; the step is capped at ``problem.T``."""
    _check_cfl(cfl)
    grid = rho.grid
    faces = boundary_faces(grid)
    r = np.array(rho.values[0])
    if np.any(r < 0):
        raise ValueError("density must be nonnegative")
    ghost = eval_faces(problem.rho_b, faces, t)
    new, dt, F, S = _advance(r, ghost, grid, faces, problem.flux, cfl, problem.T - t)
    return ClawStep(CellField(grid, new), dt, F, S, ghost)


def solve_claw(problem: ScalarIBVP, grid: Grid, cfl: float = DEFAULT_CFL, max_steps: int = 1_000_000,
               dt: float | None = None) -> ClawSolution:
    """March to ``problem.T``.  Steps follow the CFL bound unless ``dt`` fixes
    them (it must respect the bound; the last step is shortened)."""
    _check_cfl(cfl)
    if dt is not None and not dt > 0:
        raise ValueError("fixed step must be positive")
    if problem.flux.dim != grid.dim:
        raise ValueError("flux family and grid dimensions differ")
    faces = boundary_faces(grid)
    rho = eval_cells(problem.rho0, grid)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise ValueError("initial density must be finite and nonnegative")
    times, snaps, fluxes, states, bdry = [0.0], [rho], [], [], []
    t = 0.0
    while t < problem.T:
        if len(fluxes) >= max_steps:
            raise SolverFault(f"step budget {max_steps} exhausted at t={t}")
        ghost = eval_faces(problem.rho_b, faces, t)
        if np.any(ghost < 0) or not np.all(np.isfinite(ghost)):
            raise ValueError(f"boundary density must be finite and nonnegative (t={t})")
        rho, h, F, S = _advance(rho, ghost, grid, faces, problem.flux, cfl, problem.T - t, dt)
        t = problem.T if h >= problem.T - t else t + h
        times.append(t)
        snaps.append(rho)
        fluxes.append(F)
        states.append(S)
        bdry.append(ghost)
    return ClawSolution(grid, problem.flux, np.array(times), np.array(snaps), fluxes, states, bdry, faces)


def _sample_test(psi, grid: Grid, times: np.ndarray) -> np.ndarray:
    coords = grid.cell_coords()
    vals = np.array([np.broadcast_to(np.asarray(psi(t, *coords), dtype=float), grid.shape) for t in times])
    if not np.all(np.isfinite(vals)):
        raise ValueError("test function must be finite")
    if np.any(vals < 0):
        raise ValueError("test function must be nonnegative")
    return vals


def entropy_residual(sol: ClawSolution, problem: ScalarIBVP, k_samples: Sequence[float], psi,
                     trace: str = "interface") -> float:
    """Discrete Kruzkov/BLN entropy functional, minimised over ``k_samples``.

    Time and space derivatives of ``psi`` enter as differences of its samples
    at time levels and cell centres, and interior faces carry the numerical
    entropy flux ``F(a v k, b v k) - F(a ^ k, b ^ k)``.  With this choice the
    interior and initial contributions are an exact summation by parts of the
    cell entropy inequalities of the monotone scheme.

    The boundary term is ``sgn(rho_b - k) (G(T rho) - G(k)) . n``.  With
    ``trace="interface"`` the boundary trace ``T rho`` is the Godunov
    interface state on the face, with ``trace="adjacent"`` it is the value of
    the adjacent interior cell.
    """
    if trace not in ("interface", "adjacent"):
        raise ValueError(f"unknown trace rule {trace!r}")
    grid, flux, faces = sol.grid, sol.flux, sol.faces
    vol = grid.cell_volume
    psi_n = _sample_test(psi, grid, sol.times)
    ks = [float(k) for k in np.atleast_1d(k_samples)]
    dlo = min(float(sol.rho.min()), min(float(b.min()) for b in sol.boundary))
    dhi = max(float(sol.rho.max()), max(float(b.max()) for b in sol.boundary))
    n_sgn = faces.normal[np.arange(len(faces)), faces.axis]
    adj_psi_all = [faces.boundary_cells(psi_n[n + 1]) for n in range(sol.steps)]
    best = np.inf
    for k in ks:
        lo, hi = min(dlo, k), max(dhi, k)
        eta = np.abs(sol.rho - k)
        total = vol * float(np.sum(eta[0] * psi_n[0])) - vol * float(np.sum(eta[-1] * psi_n[-1]))
        total += vol * float(np.sum(eta[:-1] * (psi_n[1:] - psi_n[:-1])))
        Gk = [float(flux.G(a, k)) for a in range(grid.dim)]
        for n in range(sol.steps):
            dt = sol.times[n + 1] - sol.times[n]
            ghost = sol.boundary[n]
            ps = psi_n[n + 1]
            for a in range(grid.dim):
                left, right = _face_pair(_ghosted(sol.rho[n], ghost, faces, a), a)
                Fp, _ = flux.numerical_flux(a, np.maximum(left, k), np.maximum(right, k), lo, hi)
                Fm, _ = flux.numerical_flux(a, np.minimum(left, k), np.minimum(right, k), lo, hi)
                Q = Fp - Fm
                m = Q.shape[a]
                Qi = np.take(Q, np.arange(1, m - 1), axis=a)
                dpsi = np.diff(ps, axis=a)
                total += dt * grid.face_area(a) * float(np.sum(Qi * dpsi))
            if trace == "interface":
                gt = faces.outward(sol.fluxes[n]) * n_sgn  # back to +e_a orientation
            else:
                adj = faces.boundary_cells(sol.rho[n])
                gt = np.empty(len(faces))
                for a in range(grid.dim):
                    sel = faces.axis == a
                    gt[sel] = flux.G(a, adj[sel])
            gk = np.array([Gk[a] for a in faces.axis])
            B = np.sign(ghost - k) * (gt - gk) * n_sgn
            total -= dt * float(np.sum(faces.area * B * adj_psi_all[n]))
        best = min(best, total)
    return float(best)


def exact_riemann(G: Callable, dG: Callable, rho_l: float, rho_r: float, xi):
    """Entropy solution of the Riemann problem for a convex or concave flux,
    evaluated at similarity coordinates ``xi = x / t``."""
    xi = np.asarray(xi, dtype=float)
    a, b = min(rho_l, rho_r), max(rho_l, rho_r)
    if a == b:
        return np.full_like(xi, float(rho_l))
    r = np.linspace(a, b, N_SAMPLES)
    d = np.asarray(dG(r), dtype=float) * np.ones_like(r)
    dd = np.diff(d)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(d))))
    if np.any(dd > tol) and np.any(dd < -tol):
        raise ValueError("flux is neither convex nor concave on the data range")
    sl, sr = float(dG(rho_l)), float(dG(rho_r))
    if sl >= sr:
        s = (float(G(rho_l)) - float(G(rho_r))) / (rho_l - rho_r)
        return np.where(xi < s, float(rho_l), float(rho_r))
    out = np.where(xi <= sl, float(rho_l), float(rho_r))
    fan = (xi > sl) & (xi < sr)
    for idx in np.flatnonzero(fan):
        x = xi.flat[idx]
        out.flat[idx] = brentq(lambda s: float(dG(s)) - x, a, b, xtol=1e-15)
    return out
