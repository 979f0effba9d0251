"""Discrete geometry and difference operators.

The horizontal domain is a periodic rectangle discretized with collocated
cell centers; the vertical column is bounded, with scalars and horizontal
velocity at cell centers and vertical velocity on the nz+1 horizontal cell
faces. Array axes are ordered (x1, x2) for plan fields and (x1, x2, z) for
column fields. All derivatives are second-order centered differences;
divergences are written in flux form so that grid sums telescope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

# Height of the transformed vertical column, 1 - 1/e. This is the image of
# a unit physical column under the vertical change of variables z = 1 - e^(-y).
DEFAULT_HEIGHT = 1.0 - math.exp(-1.0)


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid for the periodic slab.

    nx1, nx2   number of cells in the periodic horizontal directions
               (at least 4, even, so centered stencils and mirror symmetry
               tests are well posed)
    nz         number of vertical cells (at least 2)
    lx1, lx2   horizontal periods
    h          vertical extent of the column
    """

    nx1: int
    nx2: int
    nz: int
    lx1: float = 1.0
    lx2: float = 1.0
    h: float = DEFAULT_HEIGHT

    def __post_init__(self):
        for name, n in (("nx1", self.nx1), ("nx2", self.nx2)):
            if not isinstance(n, int) or n < 4 or n % 2 != 0:
                raise ValueError(f"{name} must be an even integer >= 4, got {n!r}")
        if not isinstance(self.nz, int) or self.nz < 2:
            raise ValueError(f"nz must be an integer >= 2, got {self.nz!r}")
        for name, l in (("lx1", self.lx1), ("lx2", self.lx2), ("h", self.h)):
            if not (l > 0.0) or not math.isfinite(l):
                raise ValueError(f"{name} must be positive and finite, got {l!r}")

    @property
    def dx1(self) -> float:
        return self.lx1 / self.nx1

    @property
    def dx2(self) -> float:
        return self.lx2 / self.nx2

    @property
    def dz(self) -> float:
        return self.h / self.nz

    @property
    def cell_area(self) -> float:
        return self.dx1 * self.dx2

    @property
    def cell_volume(self) -> float:
        return self.dx1 * self.dx2 * self.dz

    def x1_centers(self) -> np.ndarray:
        return (np.arange(self.nx1) + 0.5) * self.dx1

    def x2_centers(self) -> np.ndarray:
        return (np.arange(self.nx2) + 0.5) * self.dx2

    def z_centers(self) -> np.ndarray:
        return (np.arange(self.nz) + 0.5) * self.dz

    def z_faces(self) -> np.ndarray:
        return np.arange(self.nz + 1) * self.dz

    def meshgrid_2d(self) -> Tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates broadcast to (nx1, nx2)."""
        return np.meshgrid(self.x1_centers(), self.x2_centers(), indexing="ij")

    def meshgrid_3d(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cell-center coordinates broadcast to (nx1, nx2, nz)."""
        return np.meshgrid(
            self.x1_centers(), self.x2_centers(), self.z_centers(), indexing="ij"
        )


def field_values(f) -> np.ndarray:
    """Raw float array behind a field wrapper, or the array itself."""
    if hasattr(f, "values"):
        return f.values
    return np.asarray(f, dtype=float)


def _validated(grid: GridSpec, values, shape: tuple, kind: str) -> np.ndarray:
    arr = np.array(field_values(values), dtype=float, copy=True)
    if arr.shape != shape:
        raise ValueError(f"{kind} expects shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite values in {kind}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Field2D:
    """Plan field on horizontal cell centers, shape (nx1, nx2)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        g = self.grid
        object.__setattr__(
            self, "values", _validated(g, self.values, (g.nx1, g.nx2), "Field2D")
        )

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field2D":
        return cls(grid, np.zeros((grid.nx1, grid.nx2)))

    @classmethod
    def full(cls, grid: GridSpec, value: float) -> "Field2D":
        return cls(grid, np.full((grid.nx1, grid.nx2), float(value)))


@dataclass(frozen=True, eq=False)
class Field3D:
    """Column field on cell centers, shape (nx1, nx2, nz)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        g = self.grid
        object.__setattr__(
            self, "values", _validated(g, self.values, (g.nx1, g.nx2, g.nz), "Field3D")
        )

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field3D":
        return cls(grid, np.zeros((grid.nx1, grid.nx2, grid.nz)))


@dataclass(frozen=True, eq=False)
class FaceFieldZ:
    """Column field on the nz+1 vertical faces, shape (nx1, nx2, nz+1).

    When the field holds a vertical velocity, faces 0 and nz carry the
    impermeable boundary values; that condition is enforced by the state
    containers, not here, so generic face data can use this type too.
    """

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        g = self.grid
        object.__setattr__(
            self,
            "values",
            _validated(g, self.values, (g.nx1, g.nx2, g.nz + 1), "FaceFieldZ"),
        )

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FaceFieldZ":
        return cls(grid, np.zeros((grid.nx1, grid.nx2, grid.nz + 1)))


FieldLike = Union[Field2D, Field3D, FaceFieldZ, np.ndarray]


def grad_x(grid: GridSpec, f: FieldLike) -> Tuple[np.ndarray, np.ndarray]:
    """Horizontal gradient, centered differences, periodic wrap.

    Works on plan fields and per-level on column fields. Returns the two
    components with the input's shape.
    """
    a = field_values(f)
    d1 = (np.roll(a, -1, axis=0) - np.roll(a, 1, axis=0)) / (2.0 * grid.dx1)
    d2 = (np.roll(a, -1, axis=1) - np.roll(a, 1, axis=1)) / (2.0 * grid.dx2)
    return d1, d2


def div_x(grid: GridSpec, f1: FieldLike, f2: FieldLike) -> np.ndarray:
    """Horizontal divergence of a 2-vector field in flux form.

    Face fluxes are arithmetic means of the adjacent cell values, so the
    grid sum of the result telescopes to zero over the periodic directions.
    """
    a1 = field_values(f1)
    a2 = field_values(f2)
    # flux at face i+1/2 along each direction
    flux1 = 0.5 * (a1 + np.roll(a1, -1, axis=0))
    flux2 = 0.5 * (a2 + np.roll(a2, -1, axis=1))
    out = (flux1 - np.roll(flux1, 1, axis=0)) / grid.dx1
    out += (flux2 - np.roll(flux2, 1, axis=1)) / grid.dx2
    return out


def ddz(grid: GridSpec, f: FieldLike) -> np.ndarray:
    """Vertical derivative at cell centers with mirrored ghost cells.

    The mirror (ghost equals the boundary-adjacent cell) realizes a
    homogeneous Neumann condition at both ends of the column.
    """
    a = field_values(f)
    if a.shape[-1] != grid.nz:
        raise ValueError(f"ddz expects {grid.nz} vertical levels, got {a.shape[-1]}")
    padded = np.concatenate([a[..., :1], a, a[..., -1:]], axis=-1)
    return (padded[..., 2:] - padded[..., :-2]) / (2.0 * grid.dz)


def ddz_faces(grid: GridSpec, f: FieldLike) -> np.ndarray:
    """Vertical derivative of face data, evaluated at cell centers.

    Exact differencing of the nz+1 face values onto the nz cells between
    them; no ghost values are involved.
    """
    a = field_values(f)
    if a.shape[-1] != grid.nz + 1:
        raise ValueError(
            f"ddz_faces expects {grid.nz + 1} vertical faces, got {a.shape[-1]}"
        )
    return (a[..., 1:] - a[..., :-1]) / grid.dz


def d2dz2(grid: GridSpec, f: FieldLike) -> np.ndarray:
    """Second vertical derivative at cell centers, mirrored ghost cells."""
    a = field_values(f)
    if a.shape[-1] != grid.nz:
        raise ValueError(f"d2dz2 expects {grid.nz} vertical levels, got {a.shape[-1]}")
    padded = np.concatenate([a[..., :1], a, a[..., -1:]], axis=-1)
    return (padded[..., 2:] - 2.0 * padded[..., 1:-1] + padded[..., :-2]) / grid.dz**2


def integrate_z_partial(grid: GridSpec, f: FieldLike) -> np.ndarray:
    """Cumulative vertical integral from the bottom, returned on faces.

    Midpoint rule: the value at face k is the sum of the first k cell
    values times dz, so face 0 is exactly zero. Face input (nz+1 levels)
    is first averaged onto cell centers.
    """
    a = field_values(f)
    if a.shape[-1] == grid.nz + 1:
        a = 0.5 * (a[..., 1:] + a[..., :-1])
    elif a.shape[-1] != grid.nz:
        raise ValueError(
            f"integrate_z_partial expects {grid.nz} or {grid.nz + 1} vertical "
            f"levels, got {a.shape[-1]}"
        )
    out = np.zeros(a.shape[:-1] + (grid.nz + 1,))
    np.cumsum(a, axis=-1, out=out[..., 1:])
    out[..., 1:] *= grid.dz
    return out


def _face_weights(grid: GridSpec) -> np.ndarray:
    # trapezoid weights across the column faces
    w = np.full(grid.nz + 1, grid.dz)
    w[0] = 0.5 * grid.dz
    w[-1] = 0.5 * grid.dz
    return w


def cell_measure(grid: GridSpec, shape: tuple) -> np.ndarray:
    """Quadrature weight per grid point for the given field shape.

    Plan fields integrate over the horizontal area, center column fields
    over the full volume, and face fields use trapezoid weights in z.
    """
    if len(shape) == 2:
        return np.full(shape, grid.cell_area)
    if len(shape) == 3 and shape[-1] == grid.nz:
        return np.full(shape, grid.cell_volume)
    if len(shape) == 3 and shape[-1] == grid.nz + 1:
        return np.broadcast_to(
            grid.cell_area * _face_weights(grid), shape
        ).copy()
    raise ValueError(f"no quadrature rule for field shape {shape}")


def lp_norm(
    grid: GridSpec, f: FieldLike, p: float, weight: Optional[FieldLike] = None
) -> float:
    """Discrete L^p norm with the cell quadrature weights.

    `weight` is an optional nonnegative density multiplying |f|^p inside
    the integral. For p = inf the plain maximum of |f| is returned and the
    weight is ignored.
    """
    a = field_values(f)
    if p == np.inf or p == math.inf:
        return float(np.max(np.abs(a)))
    if not (p >= 1.0):
        raise ValueError(f"lp_norm requires p >= 1, got {p!r}")
    contrib = np.abs(a) ** p * cell_measure(grid, a.shape)
    if weight is not None:
        contrib = contrib * field_values(weight)
    return float(np.sum(contrib) ** (1.0 / p))
