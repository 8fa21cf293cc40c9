import numpy as np
import pytest

from nearinc.claw import FluxFamily, ScalarIBVP, entropy_residual, solve_claw
from nearinc.experiments import ExperimentConfig, kk_data
from nearinc.grid import Grid
from nearinc.kk import (KKData, check_compatibility, energy_pair, entropy_pair_check, modulus_pair, solve_kk,
                        split_data)
from nearinc.transport import bump

FLUX1 = FluxFamily.polynomial([[0.5, 1.0]])


def test_split_pythagorean_and_vacuum():
    grid = Grid(0, 1, 10)
    x = grid.centers(0)
    U0 = np.stack([np.where(x < 0.5, 3.0, 0.0), np.where(x < 0.5, 4.0, 0.0)])
    sp = split_data(KKData(2, U0, [0.0, 2.0], FLUX1, 0.1), grid)
    rho0 = sp.scalar.rho0
    rho0 = rho0(x) if callable(rho0) else np.asarray(rho0)
    assert np.array_equal(rho0, np.where(x < 0.5, 5.0, 0.0))
    assert np.allclose(sp.theta0[:, :5], [[0.6], [0.8]], rtol=0, atol=1e-16)
    assert np.array_equal(sp.theta0[:, 5:], np.array([[1.0] * 5, [0.0] * 5]))
    assert np.all(np.abs(np.linalg.norm(sp.theta0, axis=0) - 1) <= 1e-15)
    assert sp.theta_b(0.0).tolist() == [[0.0, 0.0], [1.0, 1.0]]


def test_data_validation():
    with pytest.raises(ValueError):
        KKData(0, 1.0, 1.0, FLUX1, 0.1)
    with pytest.raises(ValueError):
        KKData(2, [1.0, 0.0], [1.0, 0.0], FLUX1, 0.0)
    with pytest.raises(ValueError):
        KKData(2, [np.nan, 0.0], [1.0, 0.0], FLUX1, 0.1).initial(Grid(0, 1, 4))


def test_scalar_reduction_bit_exact():
    grid = Grid(0, 1, 80)
    U0 = lambda x: np.where(x < 0.3, 1.0, 0.25 + x)
    st = solve_kk(KKData(1, U0, 0.7, FLUX1, 0.3), grid)
    ref = solve_claw(ScalarIBVP(FLUX1, U0(grid.centers(0)), 0.7, 0.3), grid)
    assert np.array_equal(st.times, ref.times)
    assert np.array_equal(st.rho, ref.rho)
    assert np.all(st.theta.u == 1.0)
    assert np.array_equal(st.U[:, 0], ref.rho)


def test_linear_flux_advects_components():
    lin = FluxFamily.linear([1.0])
    U0 = lambda x: np.stack([1 + 0 * x, np.where(x < 0.5, 1.0, -1.0)])
    errs = []
    for n in (64, 128, 256):
        grid = Grid(0, 1, n)
        st = solve_kk(KKData(2, U0, [1.0, 1.0], lin, 0.3), grid)
        x = grid.centers(0)
        exact = np.where(x - 0.3 < 0, 1.0, U0(x - 0.3)[1])
        errs.append(np.sum(np.abs(st.U[-1, 1] - exact)) / n)
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("dim,sizes", [(1, (64, 128, 256)), (2, (16, 32, 64))])
def test_three_component_contract(dim, sizes):
    data = kk_data(dim, ExperimentConfig(scenario=f"kk-{dim}d"))
    defects = []
    for n in sizes:
        grid = Grid((0,) * dim, (1,) * dim, (n,) * dim)
        st = solve_kk(data, grid)
        U0 = data.initial(grid)
        bound = max(np.linalg.norm(U0, axis=0).max(), np.linalg.norm(data.boundary(0.0, grid), axis=0).max())
        assert st.rho.min() >= 0 and st.rho.max() <= bound
        assert np.nanmax(st.direction_norm()) <= 1 + 1e-12
        assert np.all(np.moveaxis(st.U, 1, 0)[:, st.rho < st.eps_vac] == 0)
        defects.append(st.unit_defect())
    assert defects[0] > defects[1] > defects[2]


def test_vacuum_direction_is_irrelevant():
    grid = Grid(0, 1, 100)
    x = grid.centers(0)
    base = np.stack([np.where(x < 0.4, 0.0, 1 + x), np.where(x < 0.4, 0.0, 0.5 - x), 0 * x])
    data = KKData(3, base, [0.0, 1.0, 0.0], FLUX1, 0.3)
    a = solve_kk(data, grid)
    junk = np.random.default_rng(0).normal(size=(3, 100)) * 50
    b = solve_kk(data, grid, vacuum_direction=junk)
    assert not np.array_equal(a.theta.u, b.theta.u)
    assert a.U.tobytes() == b.U.tobytes()


def test_compatibility_checker():
    for flux, N in [(FLUX1, 3), (FluxFamily.polynomial([[0.5, 1.0], [0.25, -0.5]]), 2)]:
        check_compatibility(flux, *modulus_pair(flux), N, 2.0)
        check_compatibility(flux, *energy_pair(flux), N, 2.0)
    eta, Q = modulus_pair(FLUX1)
    with pytest.raises(ValueError, match="U="):
        check_compatibility(FLUX1, eta, lambda U: 2 * Q(U), 2, 1.0)
    eta2, _ = energy_pair(FLUX1)
    with pytest.raises(ValueError):
        check_compatibility(FLUX1, eta2, Q, 2, 1.0)


def test_energy_pair_closed_form():
    # [DERIVED] for G(r) = r^2: Q = 2 r^3 - 2 r^3 / 3 = 4 r^3 / 3
    burgers = FluxFamily.burgers_like(1)
    _, Q = energy_pair(burgers)
    U = np.array([[0.3, 1.2], [0.4, -0.5]])
    r = np.linalg.norm(U, axis=0)
    assert np.allclose(Q(U)[0], 4 * r ** 3 / 3, rtol=1e-13)


def test_modulus_pair_is_scalar_entropy_at_zero():
    grid = Grid(0, 1, 128)
    burgers = FluxFamily.burgers_like(1)
    U0 = lambda x: np.stack([np.where(x < 0.25, 1.0, 0.0), np.where(x < 0.25, 0.0, 0.0)])
    data = KKData(2, U0, [1.0, 0.0], burgers, 0.5)
    st = solve_kk(data, grid)
    psi = bump((0.5,), 0.45, 0.0, 0.45)
    eta, Q = modulus_pair(burgers)
    prob = ScalarIBVP(burgers, np.linalg.norm(data.initial(grid), axis=0), 1.0, 0.5)
    assert entropy_pair_check(st, eta, Q, psi) == pytest.approx(entropy_residual(st.claw, prob, [0.0], psi),
                                                              abs=1e-13)


def test_energy_pair_constant_state():
    grid = Grid((0, 0), (1, 1), (12, 12))
    st = solve_kk(KKData(2, [0.6, -0.8], [0.6, -0.8], FluxFamily.polynomial([[0.5, 1.0], [0.2, 0.1]]), 0.2), grid)
    psi = bump((0.5, 0.5), 0.4, 0.0, 0.18)
    assert abs(entropy_pair_check(st, *energy_pair(st.claw.flux), psi)) <= 1e-12


def test_shock_entropy_inequality():
    burgers = FluxFamily.burgers_like(1)
    U0 = lambda x: np.stack([np.where(x < 0.25, 0.6, 0.0), np.where(x < 0.25, 0.8, 0.0)])
    grid = Grid(0, 1, 512)
    st = solve_kk(KKData(2, U0, [0.6, 0.8], burgers, 0.5), grid)
    psi = bump((0.5,), 0.45, 0.0, 0.45)
    assert entropy_pair_check(st, *modulus_pair(burgers), psi) >= -1e-6
    assert entropy_pair_check(st, *energy_pair(burgers), psi) >= -1e-6
