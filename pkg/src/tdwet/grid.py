"""Uniform periodic grids, indicator fields, and phase partitions.

Conventions used throughout the package:

* A grid covers the rectangle [x0, x0+lx) x [y0, y0+ly) with nx by ny
  cells and is treated as a torus by every operator that acts on it.
* Fields are sampled at cell centers.  Arrays have shape (ny, nx) in
  C (row-major) order, so ``values[j, i]`` lives at
  ``(x0 + (i + 0.5) dx, y0 + (j + 0.5) dy)``.
* Geometry constructors use a strict interior test: a center exactly on
  the defining curve counts as outside the region.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "GridSpec",
    "ScalarField",
    "IndicatorField",
    "PhasePartition",
    "SurfaceTensionSet",
    "make_grid",
    "scalar_field",
    "indicator",
    "disk_indicator",
    "half_disk_indicator",
    "flat_solid",
    "sawtooth_height",
    "sawtooth_solid",
    "patterned_solid",
    "make_partition",
    "volume",
    "symmetric_difference_area",
]


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a uniform periodic cell-centered grid."""

    nx: int
    ny: int
    x0: float
    y0: float
    lx: float
    ly: float

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid needs at least one cell per axis, got {self.nx} x {self.ny}")
        if not (self.lx > 0.0 and self.ly > 0.0):
            raise ValueError(f"grid extents must be positive, got lx={self.lx}, ly={self.ly}")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape (ny, nx) of fields on this grid."""
        return (self.ny, self.nx)

    def x_centers(self) -> np.ndarray:
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    def y_centers(self) -> np.ndarray:
        return self.y0 + (np.arange(self.ny) + 0.5) * self.dy

    def center_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable coordinate arrays (X of shape (1, nx), Y of shape (ny, 1))."""
        return self.x_centers()[None, :], self.y_centers()[:, None]


def make_grid(nx: int, ny: int, x0: float, y0: float, lx: float, ly: float) -> GridSpec:
    """Validated public grid constructor.

    Requires nx, ny >= 8 so that interface-bearing fields are resolvable;
    tests that need tiny grids build GridSpec directly.  Any transform
    size is accepted (the FFT backend handles non powers of two), but
    powers of two are the intended regime.
    """
    if nx < 8 or ny < 8:
        raise ValueError(f"make_grid requires nx, ny >= 8, got {nx} x {ny}")
    return GridSpec(nx=nx, ny=ny, x0=float(x0), y0=float(y0), lx=float(lx), ly=float(ly))


def _read_only(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A real-valued cell-centered field.  Immutable after construction."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("scalar field contains non-finite values")
        object.__setattr__(self, "values", _read_only(v))


@dataclass(frozen=True, eq=False)
class IndicatorField:
    """A {0,1} cell-centered field, stored as booleans."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"indicator shape {v.shape} does not match grid shape {self.grid.shape}")
        if v.dtype != np.bool_:
            if not np.isin(v, (0, 1)).all():
                raise ValueError("indicator values must be exactly 0 or 1")
            v = v.astype(np.bool_)
        else:
            v = v.copy()
        object.__setattr__(self, "values", _read_only(v))

    @property
    def cell_count(self) -> int:
        return int(np.count_nonzero(self.values))


def scalar_field(grid: GridSpec, values: np.ndarray) -> ScalarField:
    return ScalarField(grid, values)


def indicator(grid: GridSpec, mask: np.ndarray) -> IndicatorField:
    return IndicatorField(grid, mask)


def volume(u: IndicatorField) -> float:
    """Area covered by an indicator: cell count times cell area."""
    return u.cell_count * u.grid.cell_area


def symmetric_difference_area(u: IndicatorField, v: IndicatorField) -> float:
    """Area of the symmetric difference of two indicators on one grid."""
    if u.grid != v.grid:
        raise ValueError("symmetric_difference_area requires fields on the same grid")
    return int(np.count_nonzero(u.values ^ v.values)) * u.grid.cell_area


def _from_predicate(grid: GridSpec, pred: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> IndicatorField:
    x, y = grid.center_mesh()
    return IndicatorField(grid, np.broadcast_to(pred(x, y), grid.shape))


def disk_indicator(grid: GridSpec, cx: float, cy: float, r: float) -> IndicatorField:
    """Cells whose centers are strictly inside the disk of radius r."""
    if r <= 0.0:
        raise ValueError(f"disk radius must be positive, got {r}")
    if not (grid.x0 < cx < grid.x0 + grid.lx and grid.y0 < cy < grid.y0 + grid.ly):
        raise ValueError(f"disk center ({cx}, {cy}) must lie strictly inside the domain")
    return _from_predicate(grid, lambda x, y: (x - cx) ** 2 + (y - cy) ** 2 < r * r)


def half_disk_indicator(
    grid: GridSpec,
    cx: float,
    cy: float,
    r: float,
    cutoff_y: float,
    keep: str = "above",
) -> IndicatorField:
    """Disk indicator clipped by the horizontal line y = cutoff_y.

    keep="above" retains the part with y > cutoff_y (a drop sitting on a
    wall at cutoff_y), keep="below" the complementary part.  A cutoff
    outside the disk yields the full disk or an empty field.
    """
    if keep not in ("above", "below"):
        raise ValueError(f"keep must be 'above' or 'below', got {keep!r}")
    disk = disk_indicator(grid, cx, cy, r)
    _, y = grid.center_mesh()
    half = y > cutoff_y if keep == "above" else y < cutoff_y
    return IndicatorField(grid, disk.values & np.broadcast_to(half, grid.shape))


def flat_solid(grid: GridSpec, top_y: float) -> IndicatorField:
    """Solid slab occupying all cells with center strictly below top_y."""
    if not (grid.y0 < top_y < grid.y0 + grid.ly):
        raise ValueError(f"solid top {top_y} must lie inside the domain ({grid.y0}, {grid.y0 + grid.ly})")
    return _from_predicate(grid, lambda x, y: y < top_y)


def _triangle_wave(t: np.ndarray) -> np.ndarray:
    # period-2pi triangle: rises -1 -> 1 on [-pi, 0], falls 1 -> -1 on [0, pi]
    t = np.mod(t + math.pi, 2.0 * math.pi) - math.pi
    return np.where(t <= 0.0, (2.0 / math.pi) * (t + math.pi) - 1.0, -(2.0 / math.pi) * t + 1.0)


def sawtooth_height(x: np.ndarray, baseline_y: float, k: int, alpha: float) -> np.ndarray:
    """Height of the sawtooth surface above x.

    The profile is baseline_y + tan(alpha) * (pi/(4k+2)) * |s((2k+1)x - pi)|
    with s the period-2pi triangle wave, giving 2k+1 teeth of slope
    +-tan(alpha) across an x-interval of length pi.  Valleys touch the
    baseline; apexes reach baseline + tan(alpha) * pi/(4k+2).
    """
    if k < 1:
        raise ValueError(f"sawtooth needs k >= 1, got {k}")
    if not 0.0 < alpha < math.pi / 2.0:
        raise ValueError(f"sawtooth inclination must lie in (0, pi/2), got {alpha}")
    amp = math.tan(alpha) * math.pi / (4 * k + 2)
    return baseline_y + amp * np.abs(_triangle_wave((2 * k + 1) * np.asarray(x, dtype=np.float64) - math.pi))


def sawtooth_solid(grid: GridSpec, baseline_y: float, k: int, alpha: float) -> IndicatorField:
    """Solid region below a sawtooth surface with 2k+1 teeth of slope tan(alpha)."""
    if not (grid.y0 < baseline_y < grid.y0 + grid.ly):
        raise ValueError(f"sawtooth baseline {baseline_y} must lie inside the domain")
    return _from_predicate(grid, lambda x, y: y < sawtooth_height(x, baseline_y, k, alpha))


def patterned_material_b(x: np.ndarray, k: int) -> np.ndarray:
    """Stripe assignment of the chemically patterned wall: True where material B.

    The interval (-pi/2, pi/2) splits into 2k+1 periods of width
    p = pi/(2k+1), each carrying equal amounts of materials A and B in
    half-period stripes, arranged mirror-symmetrically with a full-width
    B stripe centered at x = 0: B on |x| < p/2, then alternating
    A, B, A, ... stripes of width p/2 moving outward.
    """
    if k < 1:
        raise ValueError(f"patterned wall needs k >= 1, got {k}")
    half = math.pi / (4 * k + 2)  # half-period stripe width p/2
    m = np.floor(np.abs(np.asarray(x, dtype=np.float64)) / half).astype(np.int64)
    # stripe index 0 is the central B half; odd/even alternation outward
    return (m % 2) == 0


def patterned_solid(grid: GridSpec, top_y: float, k: int) -> tuple[IndicatorField, IndicatorField]:
    """Flat solid slab split into the two stripe materials (A, B)."""
    slab = flat_solid(grid, top_y)
    x, _ = grid.center_mesh()
    b = np.broadcast_to(patterned_material_b(x, k), grid.shape)
    mat_a = IndicatorField(grid, slab.values & ~b)
    mat_b = IndicatorField(grid, slab.values & b)
    return mat_a, mat_b


@dataclass(frozen=True, eq=False)
class PhasePartition:
    """Exact partition of the torus into liquid, vapor, and fixed solids.

    Every cell belongs to exactly one phase; the fluid phases are zero
    on every solid cell.  Solids never change during a run.
    """

    liquid: IndicatorField
    vapor: IndicatorField
    solids: tuple[IndicatorField, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "solids", tuple(self.solids))
        fields = (self.liquid, self.vapor, *self.solids)
        grid = self.liquid.grid
        if any(f.grid != grid for f in fields):
            raise ValueError("all phases of a partition must share one grid")
        count = self.liquid.values.astype(np.uint8) + self.vapor.values.astype(np.uint8)
        for s in self.solids:
            count += s.values.astype(np.uint8)
        if not (count == 1).all():
            raise ValueError("phases must cover every cell exactly once")

    @property
    def grid(self) -> GridSpec:
        return self.liquid.grid

    @property
    def n_liquid(self) -> int:
        return self.liquid.cell_count

    def fluid_mask(self) -> IndicatorField:
        return IndicatorField(self.grid, self.liquid.values | self.vapor.values)

    def solid_mask(self) -> IndicatorField:
        m = np.zeros(self.grid.shape, dtype=np.bool_)
        for s in self.solids:
            m |= s.values
        return IndicatorField(self.grid, m)

    def with_liquid(self, new_liquid: IndicatorField) -> "PhasePartition":
        """Partition with the given liquid set and vapor = fluid minus liquid."""
        fluid = self.liquid.values | self.vapor.values
        if (new_liquid.values & ~fluid).any():
            raise ValueError("new liquid set must stay inside the fluid region")
        vapor = IndicatorField(self.grid, fluid & ~new_liquid.values)
        return PhasePartition(new_liquid, vapor, self.solids)


def make_partition(liquid: IndicatorField, solids: Sequence[IndicatorField] = ()) -> PhasePartition:
    """Build a partition from a liquid set and solids; vapor is the rest.

    Liquid cells overlapping a solid are an error.
    """
    grid = liquid.grid
    solid_union = np.zeros(grid.shape, dtype=np.bool_)
    for s in solids:
        if (solid_union & s.values).any():
            raise ValueError("solid materials must not overlap")
        solid_union |= s.values
    if (liquid.values & solid_union).any():
        raise ValueError("liquid must not overlap the solid region")
    vapor = IndicatorField(grid, ~(liquid.values | solid_union))
    return PhasePartition(liquid, vapor, tuple(solids))


@dataclass(frozen=True)
class SurfaceTensionSet:
    """Surface tensions of the liquid-vapor interface and of each solid material.

    gamma_sl[m] and gamma_sv[m] belong to solid material m (the m-th
    entry of a partition's solids).  The partial wetting condition
    -1 < (gamma_sv - gamma_sl)/gamma_lv < 1 must hold for every material
    so that a Young angle exists.
    """

    gamma_lv: float
    gamma_sl: tuple[float, ...] = ()
    gamma_sv: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma_sl", tuple(float(g) for g in self.gamma_sl))
        object.__setattr__(self, "gamma_sv", tuple(float(g) for g in self.gamma_sv))
        if not self.gamma_lv > 0.0:
            raise ValueError(f"gamma_lv must be positive, got {self.gamma_lv}")
        if len(self.gamma_sl) != len(self.gamma_sv):
            raise ValueError("gamma_sl and gamma_sv must list the same materials")
        for m in range(len(self.gamma_sl)):
            c = (self.gamma_sv[m] - self.gamma_sl[m]) / self.gamma_lv
            if not -1.0 < c < 1.0:
                raise ValueError(
                    f"material {m} violates the partial wetting condition: cos(theta_Y) = {c}"
                )

    @property
    def n_materials(self) -> int:
        return len(self.gamma_sl)

    def cos_theta(self, m: int) -> float:
        return (self.gamma_sv[m] - self.gamma_sl[m]) / self.gamma_lv

    def theta(self, m: int) -> float:
        """Young angle of material m, in (0, pi)."""
        return math.acos(self.cos_theta(m))

    @classmethod
    def from_young_angles(
        cls, gamma_lv: float, angles: Sequence[float], gamma_sl: float = 1.0
    ) -> "SurfaceTensionSet":
        """Tensions realizing the given Young angles with a common gamma_sl.

        Only the differences gamma_sv - gamma_sl affect the dynamics; the
        common offset shifts the energy by a constant.
        """
        for a in angles:
            if not 0.0 < a < math.pi:
                raise ValueError(f"Young angles must lie in (0, pi), got {a}")
        return cls(
            gamma_lv=float(gamma_lv),
            gamma_sl=tuple(gamma_sl for _ in angles),
            gamma_sv=tuple(gamma_sl + gamma_lv * math.cos(a) for a in angles),
        )
