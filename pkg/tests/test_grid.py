import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nearinc import CellField, boundary_faces, build_grid, l1_norm, linf_norm
from nearinc.grid import eval_cells, eval_faces


def test_build_1d():
    g = build_grid(0, 1, 4)
    assert g.dx == (0.25,)
    assert g.size == 4
    assert g.cell_volume == 0.25


def test_build_2d():
    g = build_grid((0, 0), (1, 2), (2, 4))
    assert g.dx == (0.5, 0.5)
    assert g.size == 8
    assert g.shape == (2, 4)


@pytest.mark.parametrize("lo,hi,n", [(1, 1, 4), (2, 1, 4), (0, 1, 1), ((0, 0, 0), (1, 1, 1), (2, 2, 2)),
                                     ((0, 0), (1,), (2, 2))])
def test_rejects_bad_boxes(lo, hi, n):
    with pytest.raises(ValueError):
        build_grid(lo, hi, n)


def test_boundary_faces_1d():
    f = boundary_faces(build_grid(0, 1, 4))
    assert len(f) == 2
    assert f.normal[:, 0].tolist() == [-1.0, 1.0]
    assert f.cell.tolist() == [0, 3]
    assert f.area.tolist() == [1.0, 1.0]


def test_boundary_faces_2d():
    g = build_grid((0, 0), (1, 2), (2, 4))
    f = boundary_faces(g)
    assert len(f) == 2 * (4 + 2)
    # faces normal to x have area dy, faces normal to y have area dx
    assert np.all(f.area[f.axis == 0] == g.dx[1])
    assert np.all(f.area[f.axis == 1] == g.dx[0])
    assert len(boundary_faces(build_grid((0, 0), (1, 1), (2, 2)))) == 8


@given(st.integers(2, 9), st.integers(2, 9))
def test_closed_surface(nx, ny):
    f = boundary_faces(build_grid((0, -1), (1.5, 2), (nx, ny)))
    v = f.area[:, None] * f.normal
    assert [math.fsum(v[:, a]) for a in range(2)] == [0.0, 0.0]
    assert len(f) == 2 * (nx + ny)
    assert np.all(np.abs(f.normal).sum(axis=1) == 1)


@given(st.integers(2, 7), st.integers(2, 7))
def test_index_round_trip(nx, ny):
    g = build_grid((0, 0), (1, 3), (nx, ny))
    for k in range(g.size):
        assert g.index(g.multi_index(k)) == k
        assert g.locate(g.center_of(k)) == k


def test_outward_and_ghost_layout():
    g = build_grid((0, 0), (1, 1), (3, 2))
    f = boundary_faces(g)
    fx = np.arange(4 * 2, dtype=float).reshape(4, 2)
    fy = np.arange(3 * 3, dtype=float).reshape(3, 3) + 100
    out = f.outward([fx, fy])
    assert out.tolist() == [-0, -1, 6, 7, -100, -103, -106, 102, 105, 108]
    ghost = f.to_ghost(np.arange(10.0), 1, 1)
    assert ghost.shape == (3, 1)
    assert ghost.ravel().tolist() == [7, 8, 9]


def test_norms():
    g = build_grid(0, 1, 10)
    assert l1_norm(CellField(g, np.full(10, 2.0))) == pytest.approx(2.0)
    assert linf_norm(CellField(g, np.full(10, 2.0))) == 2.0
    assert l1_norm(CellField(g, np.zeros(10))) == 0.0
    assert linf_norm(CellField(g, np.zeros(10))) == 0.0
    half = CellField.from_function(g, lambda x: np.where(x < 0.5, 3.0, 0.0))
    assert l1_norm(half) == pytest.approx(1.5)


@settings(max_examples=50)
@given(st.integers(0, 2**31), st.floats(-5, 5))
def test_l1_homogeneous_and_subadditive(seed, c):
    g = build_grid((0, 0), (1, 1), (5, 4))
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(2, 5, 4))
    assert l1_norm(c * a, g) == pytest.approx(abs(c) * l1_norm(a, g), rel=1e-12, abs=1e-14)
    assert l1_norm(a + b, g) <= l1_norm(a, g) + l1_norm(b, g) + 1e-12


def test_cellfield_contract():
    g = build_grid(0, 1, 4)
    f = CellField(g, [1, 2, 3, 4])
    assert f.components == 1 and f.values.shape == (1, 4)
    with pytest.raises(ValueError):
        f.values[0, 0] = 5.0
    with pytest.raises(ValueError):
        CellField(g, [1, 2, np.nan, 4])
    with pytest.raises(ValueError):
        CellField(g, np.zeros(5))
    assert CellField(g, np.zeros((3, 4))).components == 3


def test_samplers():
    g = build_grid((0, 0), (1, 1), (2, 2))
    f = boundary_faces(g)
    assert eval_cells(2.0, g).shape == (2, 2)
    assert eval_cells([1.0, 2.0], g, components=2)[:, 0, 0].tolist() == [1.0, 2.0]
    v = eval_faces(lambda t, x, y: x + 10 * t, f, 0.5)
    assert v.tolist() == [5.0, 5.0, 6.0, 6.0, 5.25, 5.75, 5.25, 5.75]
