import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nearinc.errors import UnderResolvedWarning
from nearinc.experiments import regularize_record
from nearinc.grid import Grid
from nearinc.regularize import (BoundaryFluxSeries, SmoothPairSequence, bump_kernel, characteristics_solve, defect,
                                indicator_convergence_study, mollify_pair, mollify_record, record_momentum)
from nearinc.transport import INFLOW, continuity_record


def quiet(fn, *args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnderResolvedWarning)
        return fn(*args, **kw)


def levels(L, T=1.0):
    return np.linspace(0.0, T, L)


def tv(a):
    return float(np.sum(np.abs(np.diff(a))))


@pytest.mark.parametrize("spacing,eps", [((0.1,), 0.35), ((0.01, 0.02), 0.1), ((0.05, 0.03, 0.04), 0.2)])
def test_kernel_unit_mass(spacing, eps):
    K = bump_kernel(spacing, eps)
    assert abs(K.sum() - 1.0) <= 1e-10
    assert np.all(K >= 0)
    assert np.allclose(K, K[tuple(slice(None, None, -1) for _ in spacing)])
    with pytest.raises(ValueError):
        bump_kernel(spacing, 0.0)


def test_constants_are_fixed_points():
    grid = Grid((0, 0), (1, 1), (20, 16))
    for m in (1, 4, 9):
        seq = quiet(mollify_pair, grid, levels(11), np.ones((11, 20, 16)), np.ones((11, 2, 20, 16)), m)
        assert np.allclose(seq.rho, 1 + 1 / m, rtol=0, atol=1e-14)
        assert np.allclose(seq.b, 1 / (1 + 1 / m), rtol=0, atol=1e-14)


def test_pair_contract():
    grid = Grid(0, 1, 32)
    rng = np.random.default_rng(0)
    rho = rng.uniform(0, 3, (9, 32))
    seq = quiet(mollify_pair, grid, levels(9), rho, rng.normal(size=(9, 1, 32)), 3)
    p = seq[4]
    assert len(seq) == 9
    assert p.m == 3 and np.all(p.rho.values >= 1 / 3)
    assert np.allclose(p.rho.values * p.b.values, seq.momentum[4])


def test_jump_smooths_and_tv_does_not_grow():
    grid = Grid(0, 1, 200)
    x = grid.centers(0)
    step = np.where(x < 0.4, 2.0, 0.5)
    rho = np.broadcast_to(step, (7, 200))
    seq = mollify_pair(grid, levels(7, 0.1), rho, np.zeros((7, 1, 200)), 4)
    for level in seq.rho:
        assert tv(level) <= tv(step) + 1e-12
        assert np.max(np.abs(np.diff(level))) < 0.5 * 1.5      # no single-cell jump left


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1, 2]), st.sampled_from([2, 5, 16]))
def test_momentum_bound(seed, dim, m):
    rng = np.random.default_rng(seed)
    n = (40,) if dim == 1 else (12, 10)
    grid = Grid((0,) * dim, (1,) * dim, n)
    rho = rng.uniform(0, 2, (6,) + n)
    mom = rng.normal(size=(6, dim) + n) * rng.uniform(0.1, 10)
    seq = quiet(mollify_pair, grid, levels(6), rho, mom, m)
    assert np.max(np.abs(seq.rho[:, None] * seq.b)) <= 4 * np.max(np.abs(mom)) + 1e-10
    assert np.all(seq.rho >= 1 / m)


def test_mass_preserved_for_interior_support():
    grid = Grid((0, 0), (1, 1), (64, 64))
    X, Y = grid.cell_coords()
    blob = np.where((X - 0.5) ** 2 + (Y - 0.5) ** 2 < 0.05, 1.0 + X, 0.0)
    for m in (4, 8):
        seq = mollify_pair(grid, levels(5), np.broadcast_to(blob, (5, 64, 64)), np.zeros((5, 2, 64, 64)), m)
        for level in seq.rho:
            mass = level.sum() * grid.cell_volume
            assert mass == pytest.approx(blob.sum() * grid.cell_volume + 1 / m, abs=1e-10)


def test_under_resolved_is_flagged():
    grid = Grid(0, 1, 16)
    with pytest.warns(UnderResolvedWarning):
        seq = mollify_pair(grid, levels(5), np.ones((5, 16)), np.ones((5, 1, 16)), 8)
    assert seq.under_resolved
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not mollify_pair(grid, levels(5), np.ones((5, 16)), np.ones((5, 1, 16)), 1).under_resolved


def test_rejects_bad_input():
    grid = Grid(0, 1, 8)
    ok = (np.ones((4, 8)), np.ones((4, 1, 8)))
    with pytest.raises(ValueError, match="uniform"):
        mollify_pair(grid, [0, 0.1, 0.3, 0.4], *ok, 1)
    with pytest.raises(ValueError):
        mollify_pair(grid, levels(4), -ok[0], ok[1], 1)
    with pytest.raises(ValueError):
        mollify_pair(grid, levels(4), ok[0], ok[1], 0)
    with pytest.raises(ValueError):
        mollify_pair(grid, levels(4), ok[0][:, :5], ok[1], 1)


def test_record_momentum_of_uniform_flow():
    rec = continuity_record(Grid(0, 1, 10), 2.0, lambda t, x: (0.5 + 0 * x,), 0.3)
    assert np.allclose(record_momentum(rec), 1.0, rtol=0, atol=1e-15)


def test_defect_vanishes_on_constants():
    grid = Grid((0, 0), (1, 1), (16, 16))
    mom = np.stack([np.full((6, 16, 16), 0.3), np.full((6, 16, 16), -0.2)], axis=1)
    h, l1 = quiet(defect, quiet(mollify_pair, grid, levels(6), np.ones((6, 16, 16)), mom, 3))
    assert np.max(np.abs(h)) <= 1e-10 and l1 <= 1e-10
    with pytest.raises(ValueError):
        defect(quiet(mollify_pair, grid, levels(2), np.ones((2, 16, 16)), mom[:2], 3))


@pytest.mark.parametrize("dim,n", [(1, 256), (2, 64)])
def test_defect_decreases_on_conservative_records(dim, n):
    rec = regularize_record(n, dim)
    l1 = [quiet(defect, quiet(mollify_record, rec, m))[1] for m in (4, 8, 16, 32)]
    assert all(b <= a for a, b in zip(l1, l1[1:]))
    assert l1[-1] < 0.25 * l1[0]


def test_defect_negative_control():
    # rho b = rho with rho steady: d_t rho = 0 but div(rho b) != 0
    grid = Grid(0, 1, 256)
    x = grid.centers(0)
    rho = np.broadcast_to(1 + 0.5 * np.sin(2 * np.pi * x), (21, 256))
    l1 = [defect(mollify_pair(grid, levels(21, 0.5), rho, rho[:, None], m))[1] for m in (4, 8, 16, 32)]
    # [DERIVED] int_0^T int |d_x rho| = 0.5 * 2 = 1.0 for the unmollified field
    assert min(l1) > 0.5
    assert l1[-1] > 0.9 * l1[0]


def _uniform_seq(grid, c, times):
    L = len(times)
    mom = np.stack([np.full((L,) + grid.shape, ca) for ca in c], axis=1)
    return SmoothPairSequence(grid, np.asarray(times, float), np.ones((L,) + grid.shape), mom, 1, 0.1)


def test_characteristics_constant_field():
    grid = Grid((0, 0), (1, 1), (20, 20))
    seq = _uniform_seq(grid, (0.5, 0.25), levels(3, 1.0))
    u0 = lambda x, y: 2 * x + 3 * y
    g = lambda t, x, y: 100 + t
    pts = np.array([[0.5, 0.6, 0.5], [1.0, 0.9, 0.7], [1.0, 0.2, 0.5], [0.0, 0.3, 0.3]])
    u = characteristics_solve(seq, u0, g, pts)[0]
    # [DERIVED] feet of the straight lines x - c t
    assert u[0] == pytest.approx(2 * 0.35 + 3 * 0.375, abs=1e-12)
    assert u[1] == pytest.approx(2 * 0.4 + 3 * 0.45, abs=1e-12)
    assert u[2] == pytest.approx(100 + 0.6, abs=1e-9)    # hits x = 0 at t = 1 - 0.2/0.5
    assert u[3] == pytest.approx(2 * 0.3 + 3 * 0.3, abs=1e-12)


def test_characteristics_rotation_revolution():
    grid = Grid((0, 0), (1, 1), (32, 32))
    T = 2 * np.pi
    times = levels(5, T)
    X, Y = grid.cell_coords()
    mom = np.broadcast_to(np.stack([-(Y - 0.5), X - 0.5]), (5, 2, 32, 32))
    seq = SmoothPairSequence(grid, times, np.ones((5, 32, 32)), np.array(mom), 1, 0.1)
    ang = np.linspace(0, 2 * np.pi, 7, endpoint=False)
    pts = np.column_stack([np.full(7, T), 0.5 + 0.3 * np.cos(ang), 0.5 + 0.3 * np.sin(ang)])
    xs = characteristics_solve(seq, lambda x, y: x, 0.0, pts)[0]
    ys = characteristics_solve(seq, lambda x, y: y, 0.0, pts)[0]
    assert np.max(np.abs(xs - pts[:, 1])) <= 1e-6
    assert np.max(np.abs(ys - pts[:, 2])) <= 1e-6
    # a quarter turn back maps (x, y) to the point rotated by -pi/2
    q = pts.copy()
    q[:, 0] = np.pi / 2
    xq = characteristics_solve(seq, lambda x, y: x, 0.0, q)[0]
    assert np.allclose(xq, 0.5 + (q[:, 2] - 0.5), atol=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_characteristics_max_principle(seed):
    rng = np.random.default_rng(seed)
    grid = Grid((0, 0), (1, 1), (12, 12))
    L = 4
    mom = rng.normal(size=(L, 2, 12, 12))
    seq = SmoothPairSequence(grid, levels(L, 0.5), np.ones((L, 12, 12)), mom, 1, 0.1)
    u0 = rng.uniform(-1, 1, (12, 12))
    gv = rng.uniform(-3, 3)
    pts = np.column_stack([rng.uniform(0, 0.5, 40), rng.uniform(0, 1, (40, 2))])
    u = characteristics_solve(seq, u0, lambda t, x, y: gv + 0 * t, pts)
    assert np.all(np.abs(u) <= max(np.abs(u0).max(), abs(gv)))
    c = characteristics_solve(seq, -0.8, -0.8, pts)
    assert np.all(c == -0.8)


def test_characteristics_rejects_outside_points():
    grid = Grid(0, 1, 8)
    seq = _uniform_seq(grid, (1.0,), levels(3))
    for p in ([[1.5, 0.5]], [[0.5, 1.2]], [[-0.1, 0.5]], [[0.5, 0.5, 0.5]]):
        with pytest.raises(ValueError):
            characteristics_solve(seq, 0.0, 0.0, p)


def _reversing_record(n):
    return continuity_record(Grid(0, 1, n), lambda x: 1 + 0.5 * np.sin(2 * np.pi * x),
                             lambda t, x: (np.sin(7 * t + 1 + 2 * x) ** 3,), 1.0)


def test_indicator_trivial_and_constructed():
    rec = continuity_record(Grid((0, 0), (1, 1), (6, 6)), 1.0, lambda t, x, y: (0 * x, 0 * y), 0.5, dt=0.1)
    still = BoundaryFluxSeries.from_record(rec)
    assert np.all(still.labels() == 0)
    assert indicator_convergence_study({1: still, 2: rec}, rec) == {1: (0.0, 0.0), 2: (0.0, 0.0)}

    rec = _reversing_record(32)
    ref = BoundaryFluxSeries.from_record(rec)
    k, f = np.argwhere(ref.labels() == INFLOW)[3]
    flipped = ref.mass.copy()
    flipped[k, f] = -flipped[k, f]
    dt = rec.times[k + 1] - rec.times[k]
    res = indicator_convergence_study({7: BoundaryFluxSeries(rec.grid, rec.times, flipped, ref.eps_sign)}, ref)
    assert res[7] == (dt * 1.0, dt * 1.0)


def test_indicator_trend_and_grid_check():
    rec = _reversing_record(128)
    series = {m: quiet(mollify_record, rec, m).boundary_series() for m in (4, 8, 16, 32)}
    res = indicator_convergence_study(series, rec)
    minus = [res[m][0] for m in (4, 8, 16, 32)]
    assert all(b <= a for a, b in zip(minus, minus[1:]))
    assert minus[-1] < 0.5 * minus[0]
    with pytest.raises(ValueError, match="grid"):
        indicator_convergence_study({4: series[4]}, _reversing_record(64))
