import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nearinc.claw import FluxFamily, ScalarIBVP, solve_claw
from nearinc.grid import Grid
from nearinc.traces import (extract_traces, gauss_green_residual, hyperplane_distance, hyperplane_trace,
                            renormalization_check, slab_balance, space_continuity, square)
from nearinc.transport import CHARACTERISTIC, INFLOW, OUTFLOW, TransportIBVP, continuity_record, solve_transport


def claw_record(seed, dim):
    rng = np.random.default_rng(seed)
    n = (20,) if dim == 1 else (9, 8)
    grid = Grid((0,) * dim, (1,) * dim, n)
    fam = FluxFamily.polynomial([list(rng.uniform(-1, 1, 2)) for _ in range(dim)])
    r0 = rng.uniform(0, 2, size=n) * (rng.uniform(size=n) > 0.2)
    return solve_claw(ScalarIBVP(fam, r0, rng.uniform(0, 2), 0.15), grid).to_record()


def random_solve(seed, dim, h=None):
    rec = claw_record(seed, dim)
    rng = np.random.default_rng(seed + 7)
    u0 = rng.uniform(-2, 2, rec.grid.shape)
    g = rng.uniform(-2, 2, len(rec.faces))
    h = h or (lambda s: s)
    return rec, solve_transport(TransportIBVP(rec, u0, g)), solve_transport(TransportIBVP(rec, h(u0), h(g)))


def test_box_with_uniform_flow():
    grid = Grid((0, 0), (1, 1), (4, 5))
    rec = continuity_record(grid, 1.0, lambda t, x, y: (1 + 0 * x, 0 * y), 0.2)
    sol = solve_transport(TransportIBVP(rec, 1.0, 1.0))
    tr = extract_traces(rec, sol)
    f = rec.faces
    left = (f.axis == 0) & (f.normal[:, 0] < 0)
    right = (f.axis == 0) & (f.normal[:, 0] > 0)
    assert np.array_equal(tr.mass[:, left], np.full((rec.steps, left.sum()), -0.2))
    assert np.array_equal(tr.mass[:, right], np.full((rec.steps, right.sum()), 0.2))
    assert np.all(tr.mass[:, f.axis == 1] == 0)
    assert np.array_equal(tr.transported[:, 0], tr.mass)
    lab = tr.labels
    assert np.all(lab[:, left] == INFLOW) and np.all(lab[:, right] == OUTFLOW)
    assert np.all(lab[:, f.axis == 1] == CHARACTERISTIC)
    assert np.array_equal(tr.rho0.values[0], rec.rho[0])


def test_mismatched_solution_rejected():
    rec = claw_record(1, 1)
    other = solve_transport(TransportIBVP(claw_record(2, 1), 0.0, 0.0))
    with pytest.raises(ValueError):
        extract_traces(rec, other)
    with pytest.raises(ValueError):
        hyperplane_trace(rec, other, 0, 0.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1, 2]))
def test_trace_invariants(seed, dim):
    rec, sol, _ = random_solve(seed, dim)
    tr = extract_traces(rec, sol)
    assert gauss_green_residual(tr, sol).max() <= 1e-12
    assert tr.bound_violation() <= 1e-12
    lab = tr.labels
    assert set(np.unique(lab)) <= {INFLOW, CHARACTERISTIC, OUTFLOW}
    inflow = lab == INFLOW
    g = sol.inflow
    assert np.array_equal(tr.transported[:, 0][inflow], (g[:, 0] * tr.mass)[inflow])


def test_renormalization_identity_and_constants():
    rec, sol, same = random_solve(3, 2)
    tr = extract_traces(rec, sol)
    assert renormalization_check(tr, lambda s: s) == 0.0
    assert renormalization_check(tr, lambda s: s, extract_traces(rec, same)) == 0.0
    c = solve_transport(TransportIBVP(rec, 0.6, 0.6))
    c2 = solve_transport(TransportIBVP(rec, 0.36, 0.36))
    assert renormalization_check(extract_traces(rec, c), square, extract_traces(rec, c2), where="all") <= 1e-15


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1, 2]))
def test_renormalization_square(seed, dim):
    rec, sol, sq = random_solve(seed, dim, square)
    tr = extract_traces(rec, sol)
    assert renormalization_check(tr) <= 1e-12
    assert renormalization_check(tr, square, extract_traces(rec, sq)) <= 1e-12


def test_renormalization_rejects_foreign_trace():
    rec, sol, _ = random_solve(4, 1)
    other_rec, other, _ = random_solve(5, 1)
    with pytest.raises(ValueError):
        renormalization_check(extract_traces(rec, sol), square, extract_traces(other_rec, other))
    with pytest.raises(ValueError):
        renormalization_check(extract_traces(rec, sol), square, extract_traces(rec, sol), where="outflow")


def test_hyperplane_constant_fields():
    grid = Grid((0, 0), (1, 1), (10, 6))
    rec = continuity_record(grid, 2.0, lambda t, x, y: (0.5 + 0 * x, 0 * y), 0.3)
    sol = solve_transport(TransportIBVP(rec, 1.5, 1.5))
    ref = hyperplane_trace(rec, sol, 0, 0.0)
    assert np.all(ref.flux == 1.5)
    for r in (0.1, 0.33, 0.72, 1.0):
        g = hyperplane_trace(rec, sol, 0, r)
        assert np.array_equal(g.flux, ref.flux)
        assert hyperplane_distance(g, ref) == 0.0
    assert hyperplane_trace(rec, sol, 0, 0.33).r == pytest.approx(0.3)
    with pytest.raises(ValueError):
        hyperplane_trace(rec, sol, 0, 1.2)
    with pytest.raises(ValueError):
        hyperplane_trace(rec, sol, 2, 0.5)


def test_slab_balance():
    rec = continuity_record(Grid(0, 1, 50), 1.0, lambda t, x: (np.ones_like(x),), 0.4)
    sol = solve_transport(TransportIBVP(rec, lambda x: np.where(x < 0.5, 0.0, 1.0), 1.0))
    for k0, k1 in [(0, 50), (10, 30), (22, 23)]:
        assert slab_balance(rec, sol, 0, k0, k1)[0] <= 1e-12
    rec, sol, _ = random_solve(9, 2)
    for axis in (0, 1):
        assert slab_balance(rec, sol, axis, 2, 6).max() <= 1e-12
    with pytest.raises(ValueError):
        slab_balance(rec, sol, 0, 4, 4)


def test_space_continuity_step_advection():
    rec = continuity_record(Grid(0, 1, 100), 1.0, lambda t, x: (np.ones_like(x),), 0.4)
    sol = solve_transport(TransportIBVP(rec, lambda x: np.where(x < 0.5, 0.0, 1.0), 1.0))
    d = [dist for _, dist in space_continuity(rec, sol, 0, 0.3)]
    assert all(b < a for a, b in zip(d, d[1:])) and d[-1] > 0
    near_end = space_continuity(rec, sol, 0, 0.99)
    assert all(r < 0.99 for r, _ in near_end)
