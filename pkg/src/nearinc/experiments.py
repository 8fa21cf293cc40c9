"""
Canned scenarios, refinement studies and the stability ladder.

Every scenario returns a :class:`RunResult` whose tables are lists of
``(t, id, quantity, value)`` rows; the CLI only serialises them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from nearinc.claw import FluxFamily, ScalarIBVP, entropy_residual, exact_riemann, solve_claw
from nearinc.grid import Grid, boundary_faces
from nearinc.kk import KKData, solve_kk
from nearinc.regularize import _normalized_convolution, bump_kernel, defect, mollify_record
from nearinc.traces import extract_traces
from nearinc.transport import (CHARACTERISTIC, INFLOW, OUTFLOW, DensityFluxRecord, TransportIBVP, bump,
                               continuity_record, max_principle_margin, solve_transport)

Row = tuple


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int = 0
    cfl: float = 0.45
    T: float | None = None
    n: int | None = None
    refine: list[int] | None = None
    m: list[int] | None = None
    flux: str | None = None
    coefficients: list[list[float]] | None = None
    velocity: list[float] | None = None
    data: str | None = None
    value: float = 1.0
    rungs: int = 5
    perturbation: str = "mollify"
    output: str = "out"
    refine_power: int = 0


@dataclass
class RunResult:
    snapshots: list[Row] = field(default_factory=list)
    traces: list[Row] = field(default_factory=list)
    diagnostics: dict[str, float] = field(default_factory=dict)
    summary: list[Row] = field(default_factory=list)


# ---------------------------------------------------------------- presets

def make_flux(cfg: ExperimentConfig, dim: int, default: str) -> FluxFamily:
    preset = cfg.flux or default
    if preset == "linear":
        vel = cfg.velocity or [1.0] * dim
        if len(vel) != dim:
            raise ValueError(f"linear flux needs {dim} velocity components")
        return FluxFamily.linear(vel)
    if preset == "burgers-like":
        return FluxFamily.burgers_like(dim, cfg.velocity)
    if preset == "rotational":
        if dim != 2:
            raise ValueError("the rotational flux preset is two-dimensional")
        return FluxFamily((np.cos, np.sin), (lambda r: -np.sin(r), np.cos), name="rotational")
    if preset == "polynomial":
        if not cfg.coefficients or len(cfg.coefficients) != dim:
            raise ValueError(f"polynomial flux needs {dim} coefficient lists")
        return FluxFamily.polynomial(cfg.coefficients)
    raise ValueError(f"unknown flux preset {preset!r}")


def make_datum(cfg: ExperimentConfig, dim: int, default: Callable) -> Callable:
    """Transported datum as an analytic function of ``x`` defined on all of
    ``R^d`` (so exact solutions can look it up outside the box)."""
    preset, c = cfg.data, cfg.value
    if preset is None:
        return default
    if preset == "constant":
        return lambda *x: np.full(np.shape(x[0]), c)
    if preset == "step":
        return lambda *x: np.where(x[0] < 0.5, c, 0.0)
    if preset == "bump":
        b = bump([0.5] * dim, 0.25, amplitude=c)
        return lambda *x: b.value(0.0, *x)
    if preset == "random":
        table = np.random.default_rng(cfg.seed).uniform(-c, c, size=(16,) * dim)

        def lookup(*x):
            idx = tuple(np.floor(np.asarray(xi) * 16).astype(int) % 16 for xi in x)
            return table[idx]

        return lookup
    raise ValueError(f"unknown data preset {preset!r}")


def _levels(cfg: ExperimentConfig, default_refine: list[int]) -> list[int]:
    """Refinement ladder: the configured list, else ``[n]`` when a single
    size is set, else the scenario default; all scaled by ``2^refine_power``."""
    if cfg.refine:
        base = list(cfg.refine)
    else:
        base = list(default_refine) if cfg.n is None else [cfg.n]
    return [k << cfg.refine_power for k in base]


def _size(cfg: ExperimentConfig, default: int) -> int:
    return (cfg.n or default) << cfg.refine_power


def _test_function(grid: Grid, T: float):
    ctr = [0.5 * (lo + hi) for lo, hi in zip(grid.lo, grid.hi)]
    rad = 0.45 * min(hi - lo for lo, hi in zip(grid.lo, grid.hi))
    return bump(ctr, rad, 0.0, 0.9 * T)


# ------------------------------------------------------------ diagnostics

def _claw_diagnostics(sol, problem) -> dict[str, float]:
    lo = min(float(sol.rho[0].min()), min(float(b.min()) for b in sol.boundary))
    hi = max(float(sol.rho[0].max()), max(float(b.max()) for b in sol.boundary))
    ks = np.linspace(lo, hi, 5)
    return {
        "mass_residual": max(sol.mass_residual(n) for n in range(sol.steps)),
        "max_principle_margin": min(float(sol.rho.min()) - lo, hi - float(sol.rho.max())),
        "entropy_residual": entropy_residual(sol, problem, ks, _test_function(sol.grid, problem.T)),
    }


def _transport_diagnostics(record: DensityFluxRecord, tsol, g_linf: float) -> dict[str, float]:
    u0 = float(np.max(np.abs(tsol.u[0])))
    return {
        "continuity_residual": max(record.continuity_defect(n) for n in range(record.steps)),
        "transport_max_principle_margin": max_principle_margin(tsol, u0, g_linf),
    }


def _snapshot_rows(times, fields: dict[str, np.ndarray]) -> list[Row]:
    rows = []
    for lvl in (0, len(times) - 1):
        for name, arr in fields.items():
            for i, v in enumerate(np.asarray(arr[lvl]).reshape(-1)):
                rows.append((times[lvl], i, name, v))
    return rows


TRACE_WINDOWS = 64


def _trace_rows(trace) -> list[Row]:
    """Boundary traces integrated over at most ``TRACE_WINDOWS`` groups of
    consecutive steps; ``t`` is the window start.  Window sums keep the
    Gauss-Green balance intact while bounding the file size."""
    N = trace.mass.shape[0]
    edges = np.unique(np.linspace(0, N, min(N, TRACE_WINDOWS) + 1).round().astype(int))
    dt = trace.dt
    m = trace.transported.shape[1]
    names = ["transported_trace"] if m == 1 else [f"transported_trace[{c}]" for c in range(m)]
    rows = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        w = dt[lo:hi]
        mass = w @ trace.mass[lo:hi]
        moved = np.einsum("n,nmf->mf", w, trace.transported[lo:hi])
        eps = trace.eps_sign * float(w.sum())
        label = np.where(mass < -eps, INFLOW, np.where(mass > eps, OUTFLOW, CHARACTERISTIC))
        t = trace.times[lo]
        for f in range(mass.shape[0]):
            rows.append((t, f, "mass_trace_integral", mass[f]))
            for c in range(m):
                rows.append((t, f, names[c] + "_integral", moved[c, f]))
            rows.append((t, f, "label", int(label[f])))
    return rows


# -------------------------------------------------------------- scenarios

def _run_constant(cfg: ExperimentConfig) -> RunResult:
    n = _size(cfg, 64)
    grid = Grid(0.0, 1.0, n)
    T = cfg.T or 0.5
    c = cfg.value
    flux = make_flux(cfg, 1, "burgers-like")
    prob = ScalarIBVP(flux, c, c, T)
    sol = solve_claw(prob, grid, cfg.cfl)
    rec = sol.to_record()
    tsol = solve_transport(TransportIBVP(rec, c, c))
    res = RunResult()
    res.diagnostics = {**_claw_diagnostics(sol, prob), **_transport_diagnostics(rec, tsol, abs(c))}
    res.diagnostics["max_deviation"] = float(np.max(np.abs(sol.rho - c)))
    res.snapshots = _snapshot_rows(sol.times, {"rho": sol.rho, "q": tsol.q[:, 0]})
    res.traces = _trace_rows(extract_traces(rec, tsol))
    return res


def _riemann(cfg: ExperimentConfig, left: float, right: float, x0: float) -> RunResult:
    T = cfg.T or 0.5
    flux = make_flux(cfg, 1, "burgers-like")
    G = lambda r: flux.G(0, r)
    dG = lambda r: flux.dG(0, r)
    res = RunResult()
    sol = prob = None
    for n in _levels(cfg, [64, 128, 256, 512]):
        grid = Grid(0.0, 1.0, n)
        prob = ScalarIBVP(flux, lambda x: np.where(x < x0, left, right),
                          lambda t, x: np.where(x < 0.5, left, right), T)
        sol = solve_claw(prob, grid, cfg.cfl)
        x = grid.centers(0)
        exact = exact_riemann(G, dG, left, right, (x - x0) / T)
        res.summary.append((T, n, "l1_error", float(np.sum(np.abs(sol.rho[-1] - exact)) * grid.dx[0])))
        if left > right:
            mid = 0.5 * (left + right)
            cross = np.flatnonzero((sol.rho[-1][:-1] >= mid) & (sol.rho[-1][1:] < mid))
            front = x[cross[0]] + grid.dx[0] / 2 if len(cross) else np.nan
            speed = (G(left) - G(right)) / (left - right)
            res.summary.append((T, n, "front_error", abs(front - (x0 + speed * T))))
            res.summary.append((T, n, "dx", grid.dx[0]))
    rec = sol.to_record()
    tsol = solve_transport(TransportIBVP(rec, 1.0, 1.0))
    res.diagnostics = {**_claw_diagnostics(sol, prob), **_transport_diagnostics(rec, tsol, 1.0)}
    res.snapshots = _snapshot_rows(sol.times, {"rho": sol.rho})
    res.traces = _trace_rows(extract_traces(rec, tsol))
    return res


def _run_shock(cfg):
    return _riemann(cfg, 1.0, 0.0, 0.25)


def _run_rarefaction(cfg):
    return _riemann(cfg, 0.0, 1.0, 0.5)


def _run_advection(cfg: ExperimentConfig) -> RunResult:
    T = cfg.T or 0.4
    u0 = make_datum(cfg, 1, lambda x: np.where(x < 0.5, 1.0, 0.0))
    g = cfg.value if cfg.data == "constant" else 1.0
    res = RunResult()
    for n in _levels(cfg, [64, 128, 256, 512]):
        grid = Grid(0.0, 1.0, n)
        prob = ScalarIBVP(FluxFamily.linear([1.0]), 1.0, 1.0, T)
        sol = solve_claw(prob, grid, cfg.cfl)
        rec = sol.to_record()
        tsol = solve_transport(TransportIBVP(rec, u0, g))
        x = grid.centers(0)
        exact = np.where(x - T >= 0, u0(x - T), g)
        res.summary.append((T, n, "l1_error", float(np.sum(np.abs(tsol.q[-1, 0] - exact)) * grid.dx[0])))
    res.diagnostics = {**_claw_diagnostics(sol, prob), **_transport_diagnostics(rec, tsol, abs(g))}
    res.snapshots = _snapshot_rows(sol.times, {"rho": sol.rho, "q": tsol.q[:, 0]})
    res.traces = _trace_rows(extract_traces(rec, tsol))
    return res


def shear_setup(n: int, T: float, u0: Callable, dt: float | None = None, wobble: float = 0.0):
    """Unit square, ``rho = 1``, ``b = (y, 0)`` plus an optional
    divergence-free wobble with no normal component on the boundary."""
    grid = Grid((0.0, 0.0), (1.0, 1.0), (n, n))

    def velocity(t, x, y):
        bx = y + wobble * 2 * np.pi * np.sin(np.pi * x) ** 2 * np.sin(np.pi * y) * np.cos(np.pi * y)
        by = -wobble * 2 * np.pi * np.sin(np.pi * x) * np.cos(np.pi * x) * np.sin(np.pi * y) ** 2
        return bx, by

    rec = continuity_record(grid, 1.0, velocity, T, cfl=0.45, dt=dt)
    g = lambda t, x, y: u0(x - t * y, y)
    return grid, rec, g


def _shear_default(x, y):
    return 0.5 + 0.5 * np.sin(2 * np.pi * (x + y))


def _run_shear(cfg: ExperimentConfig) -> RunResult:
    T = cfg.T or 0.5
    u0 = make_datum(cfg, 2, _shear_default)
    res = RunResult()
    for n in _levels(cfg, [32, 64, 128]):
        grid, rec, g = shear_setup(n, T, u0)
        tsol = solve_transport(TransportIBVP(rec, u0, g))
        X, Y = grid.cell_coords()
        exact = u0(X - T * Y, Y)
        res.summary.append((T, n, "l1_error", float(np.sum(np.abs(tsol.q[-1, 0] - exact)) * grid.cell_volume)))
    g_linf = float(np.max(np.abs(tsol.inflow)))
    res.diagnostics = {**_transport_diagnostics(rec, tsol, g_linf), "entropy_residual": float("nan")}
    res.snapshots = _snapshot_rows(rec.times, {"q": tsol.q[:, 0]})
    res.traces = _trace_rows(extract_traces(rec, tsol))
    return res


def _run_rotation(cfg: ExperimentConfig) -> RunResult:
    T = cfg.T or 0.5
    blob = bump((0.5, 0.7), 0.15)
    u0 = make_datum(cfg, 2, lambda x, y: blob.value(0.0, x, y))
    res = RunResult()
    for n in _levels(cfg, [32, 64, 128]):
        grid = Grid((0.0, 0.0), (1.0, 1.0), (n, n))
        rec = continuity_record(grid, 1.0, lambda t, x, y: (-(y - 0.5), x - 0.5), T, cfg.cfl)
        tsol = solve_transport(TransportIBVP(rec, u0, 0.0))
        X, Y = grid.cell_coords()
        c, s = np.cos(T), np.sin(T)
        exact = u0(0.5 + c * (X - 0.5) + s * (Y - 0.5), 0.5 - s * (X - 0.5) + c * (Y - 0.5))
        res.summary.append((T, n, "l1_error", float(np.sum(np.abs(tsol.q[-1, 0] - exact)) * grid.cell_volume)))
    res.diagnostics = {**_transport_diagnostics(rec, tsol, 0.0), "entropy_residual": float("nan")}
    res.snapshots = _snapshot_rows(rec.times, {"q": tsol.q[:, 0]})
    res.traces = _trace_rows(extract_traces(rec, tsol))
    return res


def kk_data(dim: int, cfg: ExperimentConfig) -> KKData:
    if dim == 1:
        def U0(x):
            return np.stack([np.cos(6 * x) * (1 + x), np.sin(6 * x) * (1 + x), np.where(x < 0.5, 0.0, 0.5)])
        flux = make_flux(cfg, 1, "polynomial") if cfg.flux else FluxFamily.polynomial([[0.5, 1.0]])
        return KKData(3, U0, [1.0, 0.0, 0.0], flux, cfg.T or 0.4)

    def U0(x, y):
        r = 1 + 0.5 * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)
        ang = 3 * (x + 2 * y)
        return np.stack([r * np.cos(ang), r * np.sin(ang), np.where(x + y < 1, 0.0, 0.3)])
    flux = make_flux(cfg, 2, "polynomial") if cfg.flux else FluxFamily.polynomial([[0.5, 1.0], [0.25, 0.5]])
    return KKData(3, U0, [1.0, 0.0, 0.0], flux, cfg.T or 0.1)


def _run_kk(cfg: ExperimentConfig, dim: int) -> RunResult:
    data = kk_data(dim, cfg)
    res = RunResult()
    st = None
    for n in _levels(cfg, [64, 128, 256] if dim == 1 else [32, 64, 128]):
        grid = Grid((0.0,) * dim, (1.0,) * dim, (n,) * dim)
        st = solve_kk(data, grid, cfg.cfl)
        res.summary.append((data.T, n, "unit_defect", st.unit_defect()))
    U0 = data.initial(grid)
    bound = max(float(np.max(np.linalg.norm(U0, axis=0))), max(float(np.max(b)) for b in st.claw.boundary))
    prob = ScalarIBVP(data.flux, np.linalg.norm(U0, axis=0), lambda t, *x: np.linalg.norm(data.boundary(t, grid), axis=0),
                      data.T)
    res.diagnostics = {**_claw_diagnostics(st.claw, prob),
                       **_transport_diagnostics(st.record, st.theta, 1.0),
                       "modulus_margin": min(float(st.rho.min()), bound - float(st.rho.max())),
                       "direction_excess": float(np.nanmax(st.direction_norm())) - 1.0,
                       "total_variation": data.total_variation(grid)}
    res.snapshots = _snapshot_rows(st.times, {"rho": st.rho, **{f"U[{j}]": st.U[:, j] for j in range(data.N)}})
    res.traces = _trace_rows(extract_traces(st.record, st.theta))
    return res


def random_problem(seed: int, dim: int, n: int):
    """Seeded random density law with random transported data."""
    rng = np.random.default_rng(seed)
    grid = Grid((0.0,) * dim, (1.0,) * dim, (n,) * dim)
    faces = boundary_faces(grid)
    coeffs = [list(rng.uniform(-1, 1, size=2)) for _ in range(dim)]
    flux = FluxFamily.polynomial(coeffs)
    rho0 = rng.uniform(0, 2, size=grid.shape) * (rng.uniform(size=grid.shape) > 0.2)
    rho_b = rng.uniform(0, 2, size=len(faces))
    u0 = rng.uniform(-1, 1, size=grid.shape) * rng.uniform(0.5, 2)
    g = rng.uniform(-1, 1, size=len(faces)) * rng.uniform(0.5, 2)
    T = float(rng.uniform(0.05, 0.2))
    return grid, ScalarIBVP(flux, rho0, rho_b, T), u0, g


def _run_random(cfg: ExperimentConfig, dim: int) -> RunResult:
    n = _size(cfg, 64 if dim == 1 else 24)
    grid, prob, u0, g = random_problem(cfg.seed, dim, n)
    sol = solve_claw(prob, grid, cfg.cfl)
    rec = sol.to_record()
    tsol = solve_transport(TransportIBVP(rec, u0, g))
    res = RunResult()
    res.diagnostics = {**_claw_diagnostics(sol, prob), **_transport_diagnostics(rec, tsol, float(np.abs(g).max()))}
    res.snapshots = _snapshot_rows(sol.times, {"rho": sol.rho, "q": tsol.q[:, 0]})
    res.traces = _trace_rows(extract_traces(rec, tsol))
    return res


def regularize_record(n: int, dim: int = 1) -> DensityFluxRecord:
    """Conservative records with smooth, non-constant density: a 1D
    compressive flow, or a rigid rotation of a 2D density bump pattern."""
    if dim == 1:
        return continuity_record(Grid(0.0, 1.0, n), lambda x: 1 + 0.5 * np.sin(2 * np.pi * x),
                                 lambda t, x: (0.5 + 0.3 * np.sin(2 * np.pi * x),), 0.5)
    grid = Grid((0.0, 0.0), (1.0, 1.0), (n, n))
    return continuity_record(grid, lambda x, y: 1 + 0.5 * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y),
                             lambda t, x, y: (0.5 - y, x - 0.5), 0.5)


def _run_regularize(cfg: ExperimentConfig) -> RunResult:
    rec = regularize_record(_size(cfg, 128))
    res = RunResult()
    for m in cfg.m or [4, 8, 16, 32]:
        seq = mollify_record(rec, m)
        _, l1 = defect(seq)
        res.summary.append((float(rec.times[-1]), m, "defect_l1", l1))
        res.summary.append((float(rec.times[-1]), m, "under_resolved", int(seq.under_resolved)))
    tsol = solve_transport(TransportIBVP(rec, 1.0, 1.0))
    res.diagnostics = {**_transport_diagnostics(rec, tsol, 1.0), "entropy_residual": float("nan")}
    res.snapshots = _snapshot_rows(rec.times, {"rho": rec.rho})
    res.traces = _trace_rows(extract_traces(rec, tsol))
    return res


# -------------------------------------------------------------- stability

@dataclass
class StabilityStudySpec:
    """Perturbation ladder ``eps_n = 2^-n`` on the shear scenario.

    ``kind`` is ``"mollify"`` (smoothed initial datum and a divergence-free
    velocity wobble of size ``eps_n``), ``"boundary"`` (inflow datum shifted
    by a bump of L1 size ``eps_n``) or ``"zero"`` (no perturbation).
    """

    rungs: int = 5
    kind: str = "mollify"
    n: int = 48
    T: float = 0.5

    def ladder(self) -> np.ndarray:
        eps = 2.0 ** -np.arange(1, self.rungs + 1)
        if np.any(np.diff(eps) >= 0):
            raise ValueError("perturbation ladder must be strictly decreasing")
        return eps


def _step_datum(x, y):
    return np.where(x < 0.4 + 0.2 * y, 1.0, 0.0)


def stability_study(spec: StabilityStudySpec) -> list[Row]:
    """Rows ``(T, rung, quantity, value)`` with the space-time L1 distance of
    ``q`` and the L1 distance of the boundary traces to the unperturbed
    solve, plus the rung's perturbation size."""
    if spec.kind not in ("mollify", "boundary", "zero"):
        raise ValueError(f"unknown perturbation kind {spec.kind!r}")
    eps = spec.ladder()
    wob_max = 1.0 if spec.kind == "mollify" else 0.0
    h = 0.45 * (1.0 / spec.n) / (2 * (1.0 + 2 * np.pi * wob_max * float(eps.max())))
    grid, rec, g = shear_setup(spec.n, spec.T, _step_datum, dt=h)
    ref = solve_transport(TransportIBVP(rec, _step_datum, g))
    ref_tr = extract_traces(rec, ref)
    faces = boundary_faces(grid)
    rows = []
    dt = rec.dt
    for k, e in enumerate(eps, start=1):
        if spec.kind == "zero":
            rec_n, u0_n, g_n = rec, _step_datum, g
        elif spec.kind == "mollify":
            _, rec_n, _ = shear_setup(spec.n, spec.T, _step_datum, dt=h, wobble=e)
            K = bump_kernel(grid.dx, e)
            u0_n = _normalized_convolution(_step_datum(*grid.cell_coords()), K)
            g_n = g
        else:
            left = (faces.axis == 0) & (faces.side == 0)
            prof = np.where(left, np.sin(np.pi * faces.center[:, 1]) ** 2, 0.0)
            size = float(np.sum(prof * faces.area)) * spec.T
            rec_n, u0_n = rec, _step_datum
            g_n = (lambda e_, p_: lambda t, x, y: g(t, x, y) + e_ * p_)(e / size, prof)
        sol = solve_transport(TransportIBVP(rec_n, u0_n, g_n))
        tr = extract_traces(rec_n, sol)
        dq = float(np.sum(np.abs(sol.q[:-1] - ref.q[:-1])[:, 0] * dt[:, None, None])) * grid.cell_volume
        dtr = float(np.sum(np.abs(tr.transported - ref_tr.transported)[:, 0] * dt[:, None]))
        rows += [(spec.T, k, "eps", float(e)), (spec.T, k, "l1_q", dq), (spec.T, k, "l1_traces", dtr)]
    if spec.kind == "boundary":
        C = max(r[3] / eps[r[1] - 1] for r in rows if r[2] == "l1_q")
        rows.append((spec.T, 0, "fitted_C", float(C)))
    return rows


def _run_stability(cfg: ExperimentConfig) -> RunResult:
    spec = StabilityStudySpec(rungs=cfg.rungs, kind=cfg.perturbation, n=_size(cfg, 48), T=cfg.T or 0.5)
    res = RunResult(summary=stability_study(spec))
    grid, rec, g = shear_setup(spec.n, spec.T, _step_datum)
    tsol = solve_transport(TransportIBVP(rec, _step_datum, g))
    res.diagnostics = {**_transport_diagnostics(rec, tsol, 1.0), "entropy_residual": float("nan")}
    return res


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    run: Callable[[ExperimentConfig], RunResult]


SCENARIOS: dict[str, Scenario] = {s.name: s for s in [
    Scenario("constant-1d", "constant density and transported datum; every residual vanishes", _run_constant),
    Scenario("riemann-shock-1d", "G = rho^2 shock, L1 error against the exact solution", _run_shock),
    Scenario("riemann-rarefaction-1d", "G = rho^2 rarefaction fan, L1 error study", _run_rarefaction),
    Scenario("advection-1d", "rho = 1, b = 1, step datum with inflow fill", _run_advection),
    Scenario("shear-2d", "rho = 1, b = (y, 0) on the unit square", _run_shear),
    Scenario("rotation-2d", "rigid rotation of a bump about the centre", _run_rotation),
    Scenario("kk-1d", "three-component splitting in 1D", lambda c: _run_kk(c, 1)),
    Scenario("kk-2d", "three-component splitting in 2D", lambda c: _run_kk(c, 2)),
    Scenario("random-1d", "seeded random density law and transported data, 1D", lambda c: _run_random(c, 1)),
    Scenario("random-2d", "seeded random density law and transported data, 2D", lambda c: _run_random(c, 2)),
    Scenario("regularize-1d", "defect of the mollified pair over the m ladder", _run_regularize),
    Scenario("stability-shear", "perturbation ladder eps_n = 2^-n on the shear scenario", _run_stability),
]}
