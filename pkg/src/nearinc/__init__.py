"""Finite-volume laboratory for transport by nearly incompressible fields,
scalar conservation laws with BLN boundary data, and the Keyfitz-Kranzer
system."""

from nearinc.grid import BoundaryFaceSet, CellField, Grid, boundary_faces, build_grid, l1_norm, linf_norm

__all__ = ["BoundaryFaceSet", "CellField", "Grid", "boundary_faces", "build_grid", "l1_norm", "linf_norm"]
