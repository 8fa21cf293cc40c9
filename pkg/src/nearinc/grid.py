"""
Box domains, uniform Cartesian grids and boundary faces.

Cells are indexed row-major over the axis order, so a 2D field has shape
``(n[0], n[1])`` and the flat index of cell ``(i, j)`` is ``i * n[1] + j``.
Face-located quantities along axis ``a`` are stored as arrays whose shape
equals the cell shape with ``n[a] + 1`` entries along axis ``a``; entry ``k``
is the face between cells ``k - 1`` and ``k``. Such arrays always hold values
oriented along ``+e_a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Grid:
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    n: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        if not (len(lo) == len(hi) == len(n)):
            raise ValueError("lo, hi and n must have the same length")
        if len(n) not in (1, 2):
            raise ValueError(f"only 1D and 2D grids are supported, got dim={len(n)}")
        for a in range(len(n)):
            if not (np.isfinite(lo[a]) and np.isfinite(hi[a])) or lo[a] >= hi[a]:
                raise ValueError(f"degenerate box along axis {a}: [{lo[a]}, {hi[a]}]")
            if n[a] < 2:
                raise ValueError(f"need at least 2 cells along axis {a}, got {n[a]}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n", n)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple((h - l) / k for l, h, k in zip(self.lo, self.hi, self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    @property
    def volume(self) -> float:
        return float(np.prod([h - l for l, h in zip(self.lo, self.hi)]))

    def face_area(self, axis: int) -> float:
        """Measure of a face normal to ``axis`` (1 in 1D)."""
        dx = self.dx
        return float(np.prod([dx[j] for j in range(self.dim) if j != axis]))

    def face_shape(self, axis: int) -> tuple[int, ...]:
        s = list(self.n)
        s[axis] += 1
        return tuple(s)

    def centers(self, axis: int) -> np.ndarray:
        return self.lo[axis] + (np.arange(self.n[axis]) + 0.5) * self.dx[axis]

    def nodes(self, axis: int) -> np.ndarray:
        return self.lo[axis] + np.arange(self.n[axis] + 1) * self.dx[axis]

    def cell_coords(self) -> tuple[np.ndarray, ...]:
        """Cell-centre coordinate arrays, each of shape ``self.shape``."""
        return tuple(np.meshgrid(*[self.centers(a) for a in range(self.dim)], indexing="ij"))

    def face_coords(self, axis: int) -> tuple[np.ndarray, ...]:
        """Face-centre coordinates of the faces normal to ``axis``."""
        axes = [self.nodes(a) if a == axis else self.centers(a) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def index(self, multi: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(int(i) for i in multi), self.n))

    def multi_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(int(flat), self.n))

    def center_of(self, flat: int) -> np.ndarray:
        mi = self.multi_index(flat)
        return np.array([self.lo[a] + (mi[a] + 0.5) * self.dx[a] for a in range(self.dim)])

    def locate(self, point: Sequence[float]) -> int:
        """Flat index of the cell containing ``point`` (closed on the upper edge)."""
        p = np.atleast_1d(np.asarray(point, dtype=float))
        mi = []
        for a in range(self.dim):
            if not (self.lo[a] <= p[a] <= self.hi[a]):
                raise ValueError(f"point {p} outside the domain")
            k = int(np.floor((p[a] - self.lo[a]) / self.dx[a]))
            mi.append(min(max(k, 0), self.n[a] - 1))
        return self.index(mi)


def build_grid(lo, hi, n) -> Grid:
    return Grid(lo, hi, n)


@dataclass(frozen=True)
class BoundaryFaceSet:
    """Boundary faces, ordered by axis, then low side before high side,
    then transverse cells in row-major order."""

    grid: Grid
    cell: np.ndarray
    axis: np.ndarray
    side: np.ndarray  # 0 = low, 1 = high
    normal: np.ndarray
    area: np.ndarray
    center: np.ndarray

    def __len__(self) -> int:
        return len(self.cell)

    def blocks(self):
        """Yield ``(axis, side, slice)`` for the contiguous face blocks."""
        start = 0
        for a in range(self.grid.dim):
            m = self.grid.size // self.grid.n[a]
            for side in (0, 1):
                yield a, side, slice(start, start + m)
                start += m

    def outward(self, face_arrays: Sequence[np.ndarray]) -> np.ndarray:
        """Gather boundary values of ``+e_a``-oriented face arrays with the
        outward sign applied.  Leading axes of the arrays are preserved."""
        out = []
        for a, side, _ in self.blocks():
            arr = np.asarray(face_arrays[a])
            lead = arr.ndim - self.grid.dim
            idx = [slice(None)] * arr.ndim
            idx[lead + a] = 0 if side == 0 else -1
            v = arr[tuple(idx)].reshape(arr.shape[:lead] + (-1,))
            out.append(-v if side == 0 else v)
        return np.concatenate(out, axis=-1)

    def boundary_cells(self, cell_array: np.ndarray) -> np.ndarray:
        """Values of a cell array at the cell adjacent to each boundary face."""
        arr = np.asarray(cell_array)
        lead = arr.ndim - self.grid.dim
        flat = arr.reshape(arr.shape[:lead] + (-1,))
        return flat[..., self.cell]

    def to_ghost(self, values: np.ndarray, axis: int, side: int) -> np.ndarray:
        """Reshape the per-face values of one block into a ghost slab
        (cell shape with extent 1 along ``axis``)."""
        for a, s, sl in self.blocks():
            if a == axis and s == side:
                v = np.asarray(values)[..., sl]
                shape = list(self.grid.n)
                shape[axis] = 1
                return v.reshape(v.shape[:-1] + tuple(shape))
        raise ValueError(f"no block for axis={axis}, side={side}")


def boundary_faces(grid: Grid) -> BoundaryFaceSet:
    cells, axes, sides, normals, areas, centers = [], [], [], [], [], []
    flat = np.arange(grid.size).reshape(grid.n)
    coords = grid.cell_coords()
    for a in range(grid.dim):
        for side in (0, 1):
            sl = [slice(None)] * grid.dim
            sl[a] = 0 if side == 0 else grid.n[a] - 1
            sl = tuple(sl)
            c = flat[sl].ravel()
            k = len(c)
            nrm = np.zeros((k, grid.dim))
            nrm[:, a] = -1.0 if side == 0 else 1.0
            ctr = np.stack([coords[j][sl].ravel() for j in range(grid.dim)], axis=1)
            ctr[:, a] = grid.lo[a] if side == 0 else grid.hi[a]
            cells.append(c)
            axes.append(np.full(k, a))
            sides.append(np.full(k, side))
            normals.append(nrm)
            areas.append(np.full(k, grid.face_area(a)))
            centers.append(ctr)
    return BoundaryFaceSet(
        grid=grid,
        cell=np.concatenate(cells),
        axis=np.concatenate(axes),
        side=np.concatenate(sides),
        normal=np.concatenate(normals),
        area=np.concatenate(areas),
        center=np.concatenate(centers),
    )


@dataclass(frozen=True)
class CellField:
    """Cell averages of an ``m``-component quantity, ``values.shape == (m, *grid.n)``."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape == self.grid.shape:
            v = v[None]
        if v.ndim != self.grid.dim + 1 or v.shape[1:] != self.grid.shape:
            raise ValueError(f"values of shape {v.shape} do not fit grid {self.grid.shape}")
        if v.shape[0] < 1:
            raise ValueError("a field needs at least one component")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def components(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_function(cls, grid: Grid, func, components: int | None = None) -> "CellField":
        """Sample ``func(*cell_centres)`` at cell centres."""
        v = np.asarray(func(*grid.cell_coords()), dtype=float)
        if v.shape == ():
            v = np.full(grid.shape, float(v))
        if components is not None and v.shape == grid.shape:
            v = np.broadcast_to(v, (components,) + grid.shape)
        return cls(grid, v)


def l1_norm(f: CellField | np.ndarray, grid: Grid | None = None) -> float:
    if isinstance(f, CellField):
        grid, v = f.grid, f.values
    else:
        v = np.asarray(f)
    return float(np.sum(np.abs(v)) * grid.cell_volume)


def linf_norm(f: CellField | np.ndarray) -> float:
    v = f.values if isinstance(f, CellField) else np.asarray(f)
    return float(np.max(np.abs(v))) if v.size else 0.0


def eval_cells(value, grid: Grid, components: int | None = None) -> np.ndarray:
    """Sample initial-type data (constant, array, CellField or ``f(*x)``) at
    cell centres.  Returns shape ``grid.shape`` or ``(m, *grid.shape)``."""
    if isinstance(value, CellField):
        v = value.values if components is not None else value.values[0]
    elif callable(value):
        v = np.asarray(value(*grid.cell_coords()), dtype=float)
    else:
        v = np.asarray(value, dtype=float)
    return _fit(v, grid.shape, components)


def eval_faces(value, faces: BoundaryFaceSet, t: float, components: int | None = None) -> np.ndarray:
    """Sample boundary data (constant, array or ``f(t, *x)``) at boundary face
    centres.  Returns shape ``(nfaces,)`` or ``(m, nfaces)``."""
    if callable(value):
        v = np.asarray(value(t, *faces.center.T), dtype=float)
    else:
        v = np.asarray(value, dtype=float)
    return _fit(v, (len(faces),), components)


def _fit(v: np.ndarray, shape: tuple[int, ...], components: int | None) -> np.ndarray:
    if components is None:
        return np.array(np.broadcast_to(v, shape), dtype=float)
    if v.ndim == len(shape) + 1 and v.shape[0] == components:
        return np.array(np.broadcast_to(v, (components,) + shape), dtype=float)
    if v.ndim == 1 and v.shape[0] == components and shape != (components,):
        v = v.reshape((components,) + (1,) * len(shape))
    return np.array(np.broadcast_to(v, (components,) + shape), dtype=float)
