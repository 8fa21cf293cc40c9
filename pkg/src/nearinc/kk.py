"""
The system ``d_t U + sum_i d_i(f^i(|U|) U) = 0`` solved by splitting
``U = rho theta``: the modulus ``rho = |U|`` solves a scalar law, and every
component of the direction ``theta`` is transported by the scalar solver's
own face fluxes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from nearinc.claw import DEFAULT_CFL, ClawSolution, FluxFamily, ScalarIBVP, _sample_test, solve_claw
from nearinc.grid import CellField, Grid, boundary_faces
from nearinc.transport import VACUUM_RTOL, DensityFluxRecord, TransportIBVP, TransportSolution, solve_transport

COMPAT_SAMPLES = 100
COMPAT_TOL = 1e-8


@dataclass
class KKData:
    """``U0`` is a length-``N`` constant, an ``(N, *n)`` array or
    ``U0(*x) -> (N, ...)``; ``Ub`` a length-``N`` constant or
    ``Ub(t, *x) -> (N, ...)`` on boundary face centres."""

    N: int
    U0: object
    Ub: object
    flux: FluxFamily
    T: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("need at least one component")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError("final time must be positive")

    def initial(self, grid: Grid) -> np.ndarray:
        v = self.U0
        if isinstance(v, CellField):
            v = v.values
        v = np.asarray(v(*grid.cell_coords()) if callable(v) else v, dtype=float)
        return _vector_block(v, self.N, grid.shape)

    def boundary(self, t: float, grid: Grid) -> np.ndarray:
        faces = boundary_faces(grid)
        v = np.asarray(self.Ub(t, *faces.center.T) if callable(self.Ub) else self.Ub, dtype=float)
        return _vector_block(v, self.N, (len(faces),))

    def total_variation(self, grid: Grid) -> float:
        """Discrete total variation of the sampled ``|U0|``."""
        r = np.linalg.norm(self.initial(grid), axis=0)
        tv = 0.0
        for a in range(grid.dim):
            tv += float(np.sum(np.abs(np.diff(r, axis=a)))) * grid.face_area(a)
        return tv


def _vector_block(v: np.ndarray, N: int, shape: tuple[int, ...]) -> np.ndarray:
    # a length-N vector is a per-component constant, even when the sample
    # count happens to equal N
    if v.ndim == 1 and v.shape[0] == N:
        v = v.reshape((N,) + (1,) * len(shape))
    elif v.ndim == len(shape) and N == 1 and v.shape != (N,) + shape[1:]:
        v = v[None]
    out = np.array(np.broadcast_to(v, (N,) + shape), dtype=float)
    if not np.all(np.isfinite(out)):
        raise ValueError("KK data must be finite")
    return out


def _direction(U: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Modulus and direction; the direction is ``e_1`` where the modulus is
    below ``eps``."""
    r = np.linalg.norm(U, axis=0)
    theta = np.zeros_like(U)
    theta[0] = 1.0
    live = r >= eps
    if eps == 0:
        live = r > 0
    theta = np.where(live[None], U / np.where(live, r, 1.0)[None], theta)
    return r, theta


@dataclass
class SplitData:
    scalar: ScalarIBVP
    theta0: np.ndarray
    theta_b: Callable
    eps_vac: float


def split_data(data: KKData, grid: Grid, vacuum_direction=None) -> SplitData:
    """Modulus problem and direction data.

    In the initial vacuum the direction is ``e_1`` unless
    ``vacuum_direction`` (an ``(N, *n)`` array or a length-``N`` vector)
    says otherwise; it need not be a unit vector.
    """
    U0 = data.initial(grid)
    r0 = np.linalg.norm(U0, axis=0)
    scale0 = float(r0.max()) if r0.size else 0.0
    eps0 = VACUUM_RTOL * scale0
    _, theta0 = _direction(U0, eps0)
    if vacuum_direction is not None:
        alt = _vector_block(np.asarray(vacuum_direction, dtype=float), data.N, grid.shape)
        theta0 = np.where((r0 < eps0)[None], alt, theta0)

    def rho_b(t, *x):
        return np.linalg.norm(data.boundary(t, grid), axis=0)

    def theta_b(t, *x):
        Ub = data.boundary(t, grid)
        rb = np.linalg.norm(Ub, axis=0)
        eps = VACUUM_RTOL * max(scale0, float(rb.max()) if rb.size else 0.0)
        return _direction(Ub, eps)[1]

    return SplitData(ScalarIBVP(data.flux, r0, rho_b, data.T), theta0, theta_b, eps0)


@dataclass
class KKState:
    claw: ClawSolution
    record: DensityFluxRecord
    theta: TransportSolution
    U: np.ndarray        # (levels, N, *n)
    eps_vac: float

    @property
    def rho(self) -> np.ndarray:
        return self.claw.rho

    @property
    def times(self) -> np.ndarray:
        return self.claw.times

    def direction_norm(self) -> np.ndarray:
        """``|theta|`` where ``rho >= eps_vac``, NaN elsewhere."""
        r = np.linalg.norm(self.theta.u, axis=1)
        return np.where(self.rho >= self.eps_vac, r, np.nan)

    def unit_defect(self) -> float:
        """Space-time L1 norm of ``rho |theta|^2 - rho``."""
        d = self.rho * np.sum(self.theta.u ** 2, axis=1) - self.rho
        dt = self.claw.dt.reshape((-1,) + (1,) * self.claw.grid.dim)
        return float(np.sum(np.abs(d[:-1]) * dt)) * self.claw.grid.cell_volume


def solve_kk(data: KKData, grid: Grid, cfl: float = DEFAULT_CFL, vacuum_direction=None) -> KKState:
    split = split_data(data, grid, vacuum_direction)
    claw = solve_claw(split.scalar, grid, cfl)
    record = claw.to_record()
    theta = solve_transport(TransportIBVP(record, split.theta0, split.theta_b, components=data.N))
    eps = record.vacuum_threshold
    U = np.where((claw.rho >= eps)[:, None], claw.rho[:, None] * theta.u, 0.0) + 0.0
    return KKState(claw, record, theta, U, eps)


def _jacobian_flux(flux: FluxFamily, axis: int, U: np.ndarray) -> np.ndarray:
    """``D(f(|U|) U)`` for a batch ``U`` of shape ``(N, P)``; returns ``(P, N, N)``."""
    r = np.linalg.norm(U, axis=0)
    f = flux.f[axis](r)
    df = flux.df[axis](r)
    N, P = U.shape
    J = f[:, None, None] * np.eye(N)[None]
    safe = np.where(r > 0, r, 1.0)
    J += (df / safe)[:, None, None] * np.einsum("ip,jp->pij", U, U)
    return J


def _gradient(func: Callable, U: np.ndarray, out_dim: int | None) -> np.ndarray:
    """Central differences; returns ``(P, N)`` or ``(P, out_dim, N)``."""
    N, P = U.shape
    h = 1e-5 * np.maximum(1.0, np.abs(U))
    cols = []
    for j in range(N):
        e = np.zeros_like(U)
        e[j] = h[j]
        cols.append((np.asarray(func(U + e)) - np.asarray(func(U - e))) / (2 * h[j]))
    g = np.stack(cols, axis=-1)        # (P, N) or (out_dim, P, N)
    return g if out_dim is None else np.moveaxis(g, 0, 1)


def check_compatibility(flux: FluxFamily, eta: Callable, Q: Callable, N: int, radius: float,
                        seed: int = 0, samples: int = COMPAT_SAMPLES, tol: float = COMPAT_TOL) -> None:
    """Verify ``grad(eta) . D(f^i(|U|) U) == grad(Q^i)`` at random points of
    the ball of ``radius``; raise with the first failing point."""
    rng = np.random.default_rng(seed)
    U = rng.uniform(-radius, radius, size=(N, samples))
    U[:, np.linalg.norm(U, axis=0) < 1e-3 * radius] += 0.1 * radius
    grad_eta = _gradient(eta, U, None)                    # (P, N)
    grad_Q = _gradient(Q, U, flux.dim)                    # (P, d, N)
    for i in range(flux.dim):
        lhs = np.einsum("pn,pnk->pk", grad_eta, _jacobian_flux(flux, i, U))
        err = np.abs(lhs - grad_Q[:, i])
        scale = np.maximum(1.0, np.abs(grad_Q[:, i]))
        bad = np.flatnonzero(np.any(err > tol * scale, axis=1))
        if len(bad):
            p = bad[0]
            raise ValueError(f"entropy pair incompatible along axis {i} at U={U[:, p].tolist()} "
                             f"(mismatch {float(err[p].max()):.3e})")


def entropy_pair_check(state: KKState, eta: Callable, Q: Callable, phi, seed: int = 0) -> float:
    """Discrete ``int eta(U) d_t phi + Q(U) . grad phi`` for ``phi >= 0``.

    ``eta(U)`` maps ``(N, ...)`` to ``(...)``, ``Q(U)`` maps ``(N, ...)`` to
    ``(d, ...)``.  The face value of ``Q`` is ``Q(rho* theta_up)`` with
    ``rho*`` the scalar solver's interface state and ``theta_up`` the
    direction the transport step carried through the face.
    """
    claw, grid = state.claw, state.claw.grid
    N = state.U.shape[1]
    radius = max(float(np.max(np.linalg.norm(state.U, axis=1))), 1e-3)
    check_compatibility(claw.flux, eta, Q, N, radius, seed)
    phi_n = _sample_test(phi, grid, claw.times)
    vol = grid.cell_volume
    E = np.asarray(eta(np.moveaxis(state.U, 1, 0)), dtype=float)     # (levels, *n)
    total = vol * float(np.sum(E[0] * phi_n[0])) - vol * float(np.sum(E[-1] * phi_n[-1]))
    total += vol * float(np.sum(E[:-1] * (phi_n[1:] - phi_n[:-1])))
    for n in range(claw.steps):
        dt = claw.times[n + 1] - claw.times[n]
        ups = state.theta.face_upwind(n)
        for a in range(grid.dim):
            Uf = claw.states[n][a][None] * ups[a]
            Qa = np.asarray(Q(Uf), dtype=float)[a]
            k = Qa.shape[a]
            Qi = np.take(Qa, np.arange(1, k - 1), axis=a)
            total += dt * grid.face_area(a) * float(np.sum(Qi * np.diff(phi_n[n + 1], axis=a)))
    return float(total)


def modulus_pair(flux: FluxFamily):
    """``eta(U) = |U|`` and ``Q^i(U) = f^i(|U|) |U|``."""

    def eta(U):
        return np.linalg.norm(U, axis=0)

    def Q(U):
        r = np.linalg.norm(U, axis=0)
        return np.stack([flux.G(i, r) for i in range(flux.dim)])

    return eta, Q


def energy_pair(flux: FluxFamily, nodes: int = 64):
    """``eta(U) = |U|^2`` with ``Q^i(U) = 2 r G^i(r) - 2 int_0^r G^i``,
    ``r = |U|``; the integral uses Gauss-Legendre quadrature."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    s, w = 0.5 * (x + 1.0), 0.5 * w

    def eta(U):
        return np.sum(np.asarray(U) ** 2, axis=0)

    def Q(U):
        r = np.linalg.norm(U, axis=0)
        out = []
        for i in range(flux.dim):
            integral = r * np.sum(w * flux.G(i, r[..., None] * s), axis=-1)
            out.append(2 * r * flux.G(i, r) - 2 * integral)
        return np.stack(out)

    return eta, Q
