"""Cell-centered periodic structured grids, scalar fields, and discrete operators.

The grid is a uniform box in 1, 2 or 3 dimensions with the same number of
cells N and the same spacing h along every axis.  Unknowns live at cell
centers ``lower + (i + 1/2) h``.  Field values are stored as an ndarray of
shape ``(N,) * dim`` in C order with the x index varying fastest, i.e. the
array axes are ordered (z, y, x) in 3D and (y, x) in 2D.

Besides the containers, this module provides the discrete L2 inner product
and norms, the variable-coefficient centered Laplacian in divergence (flux)
form, the discrete free energy of a three-species state, and the log-form
chemical potentials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import PositivityError

# Relative slack for floating-point comparisons of grid geometry.
_GEOM_RTOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered periodic box with equal spacing on all axes.

    Attributes:
        dim: spatial dimension, 1, 2 or 3.
        n: number of cells per axis (equal on all axes).
        lower, upper: domain bounds per axis, ordered (x, y, z).
        h: cell spacing, identical on every axis.
    """

    dim: int
    n: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    h: float = field(init=False)

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 1:
            raise ValueError(f"cells per axis must be positive, got {self.n}")
        lower = tuple(float(x) for x in self.lower)
        upper = tuple(float(x) for x in self.upper)
        if len(lower) != self.dim or len(upper) != self.dim:
            raise ValueError(
                f"lower/upper must have {self.dim} entries, "
                f"got {len(lower)} and {len(upper)}"
            )
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        spacings = [(u - l) / self.n for l, u in zip(lower, upper)]
        if min(spacings) <= 0.0:
            raise ValueError(f"degenerate domain: lower={lower}, upper={upper}")
        h = spacings[0]
        for s in spacings[1:]:
            if abs(s - h) > _GEOM_RTOL * abs(h):
                raise ValueError(
                    f"spacing must match on all axes, got {spacings}"
                )
        object.__setattr__(self, "h", h)

    @classmethod
    def box(cls, dim: int, n: int, lower: float = 0.0, upper: float = 1.0) -> Grid:
        """Cube (lower, upper)^dim with n cells per axis."""
        return cls(dim, n, (lower,) * dim, (upper,) * dim)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def num_cells(self) -> int:
        return self.n**self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along physical axis (0 = x)."""
        return self.lower[axis] + (np.arange(self.n) + 0.5) * self.h

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays (X, Y, Z)[:dim], each of shape ``self.shape``.

        The x coordinate varies along the last array axis so that a C-order
        flatten enumerates cells with x fastest.
        """
        axes = [self.centers(p) for p in range(self.dim)]
        grids = np.meshgrid(*axes[::-1], indexing="ij")
        return tuple(grids[::-1])

    def face_mesh(self, axis: int) -> tuple[np.ndarray, ...]:
        """Coordinates of the faces between cells i and i+1 along one physical axis.

        Face i sits at ``lower + (i + 1) h`` along ``axis`` (the face between
        cell i and its periodic successor) and at cell centers along the
        other axes.  Shapes match ``self.shape``.
        """
        coords = []
        for p in range(self.dim):
            if p == axis:
                coords.append(self.lower[p] + (np.arange(self.n) + 1.0) * self.h)
            else:
                coords.append(self.centers(p))
        grids = np.meshgrid(*coords[::-1], indexing="ij")
        return tuple(grids[::-1])

    def same_domain(self, other: Grid) -> bool:
        """True when both grids cover the same physical box (resolution may differ)."""
        if self.dim != other.dim:
            return False
        scale = max(abs(v) for v in (*self.lower, *self.upper, 1.0))
        return all(
            abs(a - b) <= _GEOM_RTOL * scale
            for a, b in zip(self.lower + self.upper, other.lower + other.upper)
        )


@dataclass
class Field:
    """One scalar value per cell of a :class:`Grid`.

    ``values`` has shape ``grid.shape`` (row-major, x fastest); any finite
    float input array of the right size is accepted and copied to float64.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.num_cells:
            raise ValueError(
                f"field has {v.size} values, grid has {self.grid.num_cells} cells"
            )
        self.values = v.reshape(self.grid.shape)

    @classmethod
    def full(cls, grid: Grid, value: float) -> Field:
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> Field:
        """Sample ``fn(x[, y[, z]])`` at cell centers (vectorized over ndarrays)."""
        return cls(grid, np.asarray(fn(*grid.mesh()), dtype=float))

    def copy(self) -> Field:
        return Field(self.grid, self.values.copy())

    def check_finite(self, label: str = "field") -> None:
        if not np.all(np.isfinite(self.values)):
            bad = int(np.flatnonzero(~np.isfinite(self.values.ravel()))[0])
            raise ValueError(f"{label} has a non-finite value at cell {bad}")


# A diffusion coefficient: a positive constant, a positive function of
# position (sampled analytically at face centers), or a cellwise Field
# (face value = mean of the two adjacent cells).
Coefficient = Union[float, Callable[..., np.ndarray], Field]


@dataclass(frozen=True)
class DiffusionCoeffs:
    """Per-species diffusion coefficients D_a, D_b, D_c."""

    d_a: Coefficient
    d_b: Coefficient
    d_c: Coefficient

    def __post_init__(self):
        for name, d in zip(("d_a", "d_b", "d_c"), (self.d_a, self.d_b, self.d_c)):
            if isinstance(d, (int, float)) and not d > 0.0:
                raise PositivityError(f"{name} must be positive, got {d}")

    def per_species(self) -> tuple[Coefficient, Coefficient, Coefficient]:
        return (self.d_a, self.d_b, self.d_c)


@dataclass(frozen=True)
class ModelParams:
    """Reference concentrations and rate constants for A + B <=> C.

    The constructor enforces detailed balance k_plus * a_inf * b_inf ==
    k_minus * c_inf (to 1e-12 relative), which is what makes the logarithmic
    free energy a Lyapunov functional of the reaction.
    """

    a_inf: float
    b_inf: float
    c_inf: float
    k_plus: float = 1.0
    k_minus: float = 1.0

    def __post_init__(self):
        for name in ("a_inf", "b_inf", "c_inf", "k_plus", "k_minus"):
            v = getattr(self, name)
            if not v > 0.0:
                raise PositivityError(f"{name} must be positive, got {v}")
        lhs = self.k_plus * self.a_inf * self.b_inf
        rhs = self.k_minus * self.c_inf
        if abs(lhs - rhs) > 1e-12 * max(abs(lhs), abs(rhs)):
            raise ValueError(
                "detailed balance violated: "
                f"k_plus*a_inf*b_inf = {lhs!r} != k_minus*c_inf = {rhs!r}"
            )


@dataclass
class State:
    """Concentration fields (a, b, c) at one time level."""

    a: Field
    b: Field
    c: Field
    time: float = 0.0

    def __post_init__(self):
        if not (self.a.grid == self.b.grid == self.c.grid):
            raise ValueError("a, b, c must share one grid")

    @property
    def grid(self) -> Grid:
        return self.a.grid

    @classmethod
    def uniform(cls, grid: Grid, a: float, b: float, c: float, time: float = 0.0) -> State:
        return cls(Field.full(grid, a), Field.full(grid, b), Field.full(grid, c), time)

    def species(self) -> tuple[tuple[str, Field], ...]:
        return (("a", self.a), ("b", self.b), ("c", self.c))

    def min_values(self) -> tuple[float, float, float]:
        return (
            float(self.a.values.min()),
            float(self.b.values.min()),
            float(self.c.values.min()),
        )

    def require_positive(self, context: str = "state") -> None:
        for name, f in self.species():
            m = f.values.min()
            if not m > 0.0:
                cell = int(np.argmin(f.values.ravel()))
                raise PositivityError(
                    f"{context}: species {name} is non-positive "
                    f"({m!r}) at cell {cell}"
                )


def _require_same_grid(f: Field, g: Field) -> None:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")


def inner_product(f: Field, g: Field) -> float:
    """Discrete L2 inner product: h^dim * sum of f*g over all cells."""
    _require_same_grid(f, g)
    return float(f.grid.cell_volume * np.sum(f.values * g.values))


def norm_l2(f: Field) -> float:
    """Discrete L2 norm, sqrt(<f, f>)."""
    return float(np.sqrt(f.grid.cell_volume) * np.linalg.norm(f.values.ravel()))


def norm_max(f: Field) -> float:
    """Discrete maximum norm, max |f|."""
    return float(np.max(np.abs(f.values)))


def mean_value(f: Field) -> float:
    """<f, 1>: the discrete integral of f over the domain."""
    return float(f.grid.cell_volume * np.sum(f.values))


def discrete_energy(state: State, params: ModelParams) -> float:
    """Discrete free energy sum_species <x (ln(x / x_inf) - 1), 1>.

    Raises :class:`PositivityError` if any concentration is not strictly
    positive (the logarithms would blow up).
    """
    state.require_positive("discrete_energy")
    refs = (params.a_inf, params.b_inf, params.c_inf)
    total = 0.0
    for (name, f), ref in zip(state.species(), refs):
        v = f.values
        total += float(np.sum(v * (np.log(v / ref) - 1.0)))
    return state.grid.cell_volume * total


def chemical_potentials(state: State, params: ModelParams) -> tuple[Field, Field, Field]:
    """Cellwise chemical potentials ln(a/a_inf), ln(b/b_inf), ln(c/c_inf)."""
    state.require_positive("chemical_potentials")
    g = state.grid
    return (
        Field(g, np.log(state.a.values / params.a_inf)),
        Field(g, np.log(state.b.values / params.b_inf)),
        Field(g, np.log(state.c.values / params.c_inf)),
    )


def face_coefficient(grid: Grid, d: Coefficient, axis: int) -> Union[float, np.ndarray]:
    """Diffusion coefficient sampled on the faces normal to a physical axis.

    Entry ``[..., i, ...]`` (along the array axis for ``axis``) is the value
    on the face between cell i and cell i+1 (periodic wrap at the end).
    Constants pass through unchanged; callables are evaluated at face
    centers; cellwise Fields are averaged between the two adjacent cells.
    """
    if isinstance(d, (int, float)):
        if not d > 0.0:
            raise PositivityError(f"diffusion coefficient must be positive, got {d}")
        return float(d)
    array_axis = grid.dim - 1 - axis
    if isinstance(d, Field):
        if d.grid != grid:
            raise ValueError("cellwise diffusion coefficient lives on a different grid")
        vals = 0.5 * (d.values + np.roll(d.values, -1, axis=array_axis))
    else:
        vals = np.asarray(d(*grid.face_mesh(axis)), dtype=float)
        vals = np.broadcast_to(vals, grid.shape)
    if not np.all(vals > 0.0):
        raise PositivityError(
            f"diffusion coefficient non-positive on a face along axis {axis}"
        )
    return vals


def apply_variable_laplacian(f: Field, d: Coefficient) -> Field:
    """Apply the divergence-form operator div(D grad f) with periodic wrap.

    Along each axis the face flux between cells i and i+1 is
    ``D_face * (f[i+1] - f[i]) / h``; the cell value is the net outflow
    divided by h, summed over axes.  The stencil is the standard centered
    second-order one; constants are in its kernel and its column sums vanish
    by telescoping.
    """
    grid = f.grid
    v = f.values
    h = grid.h
    out = np.zeros_like(v)
    for axis in range(grid.dim):
        array_axis = grid.dim - 1 - axis
        dface = face_coefficient(grid, d, axis)
        flux = dface * (np.roll(v, -1, axis=array_axis) - v) / h
        out += (flux - np.roll(flux, 1, axis=array_axis)) / h
    return Field(grid, out)
