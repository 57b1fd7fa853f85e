"""Interface extraction and geometric measurements on phase partitions.

The liquid-vapor interface is traced as sub-cell polylines with a
marching-squares contour of the liquid indicator at level 1/2, masked to
the fluid region so that liquid-solid contact never contributes points.
Contact angles come from a least-squares circle fit of the interface
away from the wall, intersected with a horizontal reference line; angles
are measured inside the liquid against that line and lie in (0, pi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.ndimage
import scipy.optimize
from skimage.measure import find_contours

from .grid import GridSpec, IndicatorField, PhasePartition

__all__ = [
    "InterfaceCurve",
    "ContactMeasurement",
    "ErrorNorms",
    "AnalyticRegion",
    "MeasurementError",
    "DropDetachedError",
    "extract_interface",
    "indicator_contours",
    "fit_circle",
    "fit_contact",
    "fit_contact_band",
    "error_norms",
    "polyline_hausdorff",
    "curve_length",
    "connected_areas",
    "interface_boundary_clearance",
    "liquid_touches_solid",
]


class MeasurementError(RuntimeError):
    """A measurement could not be carried out on the given state."""


class DropDetachedError(MeasurementError):
    """The fitted interface does not reach the reference line."""


@dataclass(frozen=True, eq=False)
class InterfaceCurve:
    """A polyline of interface points in world coordinates.

    Closed curves repeat their first point as the last one; consecutive
    points are never farther apart than one cell diagonal.
    """

    points: np.ndarray  # shape (n, 2), columns (x, y)
    closed: bool

    def __post_init__(self) -> None:
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 2:
            raise ValueError("an interface curve needs at least two (x, y) points")
        object.__setattr__(self, "points", p)


@dataclass(frozen=True)
class ContactMeasurement:
    """Contact points and angles of a sessile drop against a reference line.

    Angles are interior to the liquid, against the horizontal, in
    (0, pi).  fit_contact fits a single circle, so its two angles agree
    up to the fit and fit_radius is the cap radius; fit_contact_band
    fits each side separately and reports fit_radius = inf.
    """

    left_x: float
    right_x: float
    left_angle: float
    right_angle: float
    fit_radius: float
    fit_center: tuple[float, float]


@dataclass(frozen=True)
class ErrorNorms:
    l1: float
    linf: float
    vol_err: float


@dataclass(frozen=True, eq=False)
class AnalyticRegion:
    """A closed reference region given in analytic form.

    contains maps broadcastable center coordinates to a boolean mask;
    boundary_points is a dense polyline along the region boundary; area
    is the exact area if known; distance optionally maps an (n, 2) point
    array to exact unsigned distances from the boundary.
    """

    contains: Callable[[np.ndarray, np.ndarray], np.ndarray]
    boundary_points: np.ndarray
    area: float | None = None
    distance: Callable[[np.ndarray], np.ndarray] | None = None
    boundary_closed: bool = True

    def rasterize(self, grid: GridSpec) -> IndicatorField:
        x, y = grid.center_mesh()
        return IndicatorField(grid, np.broadcast_to(self.contains(x, y), grid.shape))


def indicator_contours(
    u: IndicatorField, fluid_mask: IndicatorField | None = None
) -> list[InterfaceCurve]:
    """Marching-squares contours of an indicator at level 1/2.

    With a fluid mask, contour points adjacent to masked (solid) cells
    are dropped and curves become open where they meet the solid.
    """
    grid = u.grid
    mask = None
    if fluid_mask is not None:
        if fluid_mask.grid != grid:
            raise ValueError("fluid mask must live on the indicator's grid")
        mask = fluid_mask.values
    raw = find_contours(u.values.astype(np.float64), 0.5, mask=mask)
    curves = []
    for rc in raw:
        if rc.shape[0] < 2:
            continue
        closed = bool(np.array_equal(rc[0], rc[-1]))
        pts = np.empty_like(rc)
        pts[:, 0] = grid.x0 + (rc[:, 1] + 0.5) * grid.dx
        pts[:, 1] = grid.y0 + (rc[:, 0] + 0.5) * grid.dy
        curves.append(InterfaceCurve(points=pts, closed=closed))
    return curves


def extract_interface(partition: PhasePartition) -> list[InterfaceCurve]:
    """Liquid-vapor interface polylines of a partition.

    Solid contact is excluded: only crossings between liquid and vapor
    cells generate points.
    """
    return indicator_contours(partition.liquid, partition.fluid_mask())


def curve_length(curve: InterfaceCurve) -> float:
    d = np.diff(curve.points, axis=0)
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def fit_circle(points: np.ndarray) -> tuple[float, float, float]:
    """Least-squares circle through a point cloud: (xc, yc, radius).

    Algebraic fit followed by a geometric refinement of the center that
    minimizes the spread of the radial distances.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise MeasurementError("circle fit needs at least three points")
    x, y = pts[:, 0], pts[:, 1]
    a = np.column_stack([x, y, np.ones_like(x)])
    sol, *_ = np.linalg.lstsq(a, x * x + y * y, rcond=None)
    xc, yc = 0.5 * sol[0], 0.5 * sol[1]

    def spread(c):
        r = np.hypot(x - c[0], y - c[1])
        return r - r.mean()

    res = scipy.optimize.least_squares(spread, x0=np.array([xc, yc]), method="lm")
    xc, yc = float(res.x[0]), float(res.x[1])
    radius = float(np.hypot(x - xc, y - yc).mean())
    if not (np.isfinite(radius) and radius > 0.0):
        raise MeasurementError("circle fit did not produce a positive radius")
    return xc, yc, radius


def fit_contact(
    curves: Sequence[InterfaceCurve],
    reference_y: float,
    h_excl: float = 0.0,
) -> ContactMeasurement:
    """Contact points and angles from a circular-cap fit.

    Interface points with y <= reference_y + h_excl are excluded from
    the fit (h_excl removes the roughness layer of structured walls; use
    0 for flat walls).  The fitted circle is intersected with the line
    y = reference_y; no intersection means the drop sits detached above
    the line and raises DropDetachedError.
    """
    if not curves:
        raise MeasurementError("no interface curves to fit")
    pts = np.concatenate([c.points for c in curves], axis=0)
    pts = pts[pts[:, 1] > reference_y + h_excl]
    if pts.shape[0] < 3:
        raise MeasurementError("too few interface points above the exclusion band")
    xc, yc, radius = fit_circle(pts)
    disc = radius * radius - (reference_y - yc) ** 2
    if disc <= 0.0:
        raise DropDetachedError(
            f"fitted circle (center y {yc:.4g}, radius {radius:.4g}) "
            f"does not cross the reference line y = {reference_y:.4g}"
        )
    half_chord = math.sqrt(disc)
    angle = math.acos(max(-1.0, min(1.0, (reference_y - yc) / radius)))
    return ContactMeasurement(
        left_x=xc - half_chord,
        right_x=xc + half_chord,
        left_angle=angle,
        right_angle=angle,
        fit_radius=radius,
        fit_center=(xc, yc),
    )


def fit_contact_band(
    curves: Sequence[InterfaceCurve],
    reference_y: float,
    h_excl: float = 0.0,
    band: float = 0.05,
) -> ContactMeasurement:
    """Per-side contact measurement from the interface band at the foot.

    Interface points above reference_y + h_excl are split at their x
    midrange into a left and a right group.  On each side the fit window
    anchors at the group's lowest point and extends band upward, so the
    window rides the foot wherever it sits on a textured wall; a
    least-squares line x = a + b y through the window, intersected with
    y = reference_y, gives the contact point, and its slope the interior
    angle against the horizontal.  Unlike the whole-interface cap fit,
    the result tracks the local inclination at the contact line, which
    under a volume-forced sweep can stay far from the circle the bulk
    relaxes to; quasi-static hysteresis drivers measure here.  The
    parametrization by x(y) keeps overhanging feet (angles beyond pi/2)
    in scope.
    """
    if band <= 0.0:
        raise ValueError(f"band must be positive, got {band}")
    if not curves:
        raise MeasurementError("no interface curves to fit")
    pts = np.concatenate([c.points for c in curves], axis=0)
    pts = pts[pts[:, 1] > reference_y + h_excl]
    if pts.shape[0] < 6:
        raise MeasurementError(
            f"only {pts.shape[0]} interface points above the exclusion band"
        )
    mid = 0.5 * (float(pts[:, 0].min()) + float(pts[:, 0].max()))
    sides = pts[:, 0] < mid
    out = []
    for left, p in ((True, pts[sides]), (False, pts[~sides])):
        if p.shape[0] < 3:
            raise MeasurementError(
                f"{'left' if left else 'right'} side has {p.shape[0]} interface points"
            )
        window = p[p[:, 1] <= p[:, 1].min() + band]
        if window.shape[0] < 3:
            # thin contour column: widen to the three lowest points
            window = p[np.argsort(p[:, 1])[:3]]
        a = np.column_stack([np.ones(window.shape[0]), window[:, 1]])
        (offset, slope), *_ = np.linalg.lstsq(a, window[:, 0], rcond=None)
        x_wall = float(offset + slope * reference_y)
        angle = math.pi / 2.0 - math.atan(float(slope))
        out.append((x_wall, math.pi - angle if not left else angle))
    (left_x, left_angle), (right_x, right_angle) = out
    if not left_x < right_x:
        raise MeasurementError(
            f"contact band fit crossed over: left x {left_x:.4g} >= right x {right_x:.4g}"
        )
    return ContactMeasurement(
        left_x=left_x,
        right_x=right_x,
        left_angle=left_angle,
        right_angle=right_angle,
        fit_radius=math.inf,
        fit_center=(0.5 * (left_x + right_x), reference_y),
    )


def _segments(points: np.ndarray, closed: bool) -> tuple[np.ndarray, np.ndarray]:
    if closed and not np.array_equal(points[0], points[-1]):
        points = np.vstack([points, points[0]])
    return points[:-1], points[1:]


def _min_distance_to_segments(
    query: np.ndarray, seg_a: np.ndarray, seg_b: np.ndarray
) -> np.ndarray:
    """Per-query minimum distance to a set of segments (chunked O(n m))."""
    d = seg_b - seg_a
    len2 = np.einsum("ij,ij->i", d, d)
    len2 = np.where(len2 == 0.0, 1.0, len2)
    out = np.empty(query.shape[0])
    chunk = max(1, int(2e6 / max(seg_a.shape[0], 1)))
    for s in range(0, query.shape[0], chunk):
        q = query[s : s + chunk]
        w = q[:, None, :] - seg_a[None, :, :]
        t = np.clip(np.einsum("qsj,sj->qs", w, d) / len2[None, :], 0.0, 1.0)
        proj = seg_a[None, :, :] + t[:, :, None] * d[None, :, :]
        dist = np.linalg.norm(q[:, None, :] - proj, axis=2)
        out[s : s + chunk] = dist.min(axis=1)
    return out


def _curves_as_point_and_segment_sets(
    curves: Sequence[InterfaceCurve],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pts = np.concatenate([c.points for c in curves], axis=0)
    seg_a, seg_b = zip(*(_segments(c.points, c.closed) for c in curves))
    return pts, np.concatenate(seg_a, axis=0), np.concatenate(seg_b, axis=0)


def polyline_hausdorff(
    curves_a: Sequence[InterfaceCurve], curves_b: Sequence[InterfaceCurve]
) -> float:
    """Symmetric Hausdorff distance between two families of polylines.

    Vertices of each side are measured against the full segments of the
    other, so the result is exact up to the vertex spacing of the
    curves (at most one cell for extracted interfaces).
    """
    if not curves_a or not curves_b:
        raise MeasurementError("polyline_hausdorff needs curves on both sides")
    pts_a, seg_a0, seg_a1 = _curves_as_point_and_segment_sets(curves_a)
    pts_b, seg_b0, seg_b1 = _curves_as_point_and_segment_sets(curves_b)
    d_ab = _min_distance_to_segments(pts_a, seg_b0, seg_b1).max()
    d_ba = _min_distance_to_segments(pts_b, seg_a0, seg_a1).max()
    return float(max(d_ab, d_ba))


def error_norms(
    u: IndicatorField,
    reference: IndicatorField | AnalyticRegion,
    fluid_mask: IndicatorField | None = None,
) -> ErrorNorms:
    """L1, Linf, and volume errors of an indicator against a reference.

    L1 is the symmetric-difference area (the reference rasterized on the
    same grid if analytic).  Linf is the Hausdorff distance between the
    extracted interfaces, using exact boundary distances when the
    reference provides them.  vol_err is computed volume minus reference
    volume (exact area when known).
    """
    grid = u.grid
    if isinstance(reference, AnalyticRegion):
        ref_raster = reference.rasterize(grid)
        ref_area = reference.area if reference.area is not None else _area_of(ref_raster)
    else:
        if reference.grid != grid:
            raise ValueError("reference indicator must live on the same grid")
        ref_raster = reference
        ref_area = _area_of(ref_raster)

    l1 = int(np.count_nonzero(u.values ^ ref_raster.values)) * grid.cell_area
    vol_err = _area_of(u) - ref_area

    u_curves = indicator_contours(u, fluid_mask)
    if isinstance(reference, AnalyticRegion):
        if not u_curves:
            raise MeasurementError("computed field has no interface to compare")
        pts = np.concatenate([c.points for c in u_curves], axis=0)
        bpts = reference.boundary_points
        ref_curve = InterfaceCurve(points=bpts, closed=reference.boundary_closed)
        if reference.distance is not None:
            d_ab = float(reference.distance(pts).max())
        else:
            s0, s1 = _segments(ref_curve.points, ref_curve.closed)
            d_ab = float(_min_distance_to_segments(pts, s0, s1).max())
        _, sa0, sa1 = _curves_as_point_and_segment_sets(u_curves)
        d_ba = float(_min_distance_to_segments(bpts, sa0, sa1).max())
        linf = max(d_ab, d_ba)
    else:
        ref_curves = indicator_contours(ref_raster, fluid_mask)
        linf = polyline_hausdorff(u_curves, ref_curves)
    return ErrorNorms(l1=l1, linf=linf, vol_err=vol_err)


def _area_of(u: IndicatorField) -> float:
    return u.cell_count * u.grid.cell_area


def connected_areas(u: IndicatorField) -> np.ndarray:
    """Areas of the connected components of an indicator, ascending."""
    labels, n = scipy.ndimage.label(u.values)
    if n == 0:
        return np.empty(0)
    counts = np.bincount(labels.ravel())[1:]
    return np.sort(counts) * u.grid.cell_area


def interface_boundary_clearance(partition: PhasePartition) -> float:
    """Distance from the liquid-vapor interface to the domain boundary.

    Measured over centers of liquid or vapor cells that face the other
    fluid phase across a (periodic) cell edge; +inf when there is no
    interface.  Used for the kernel standoff rule: wrap-around artifacts
    are negligible while this clearance exceeds 10 sqrt(dt).
    """
    grid = partition.grid
    liq = partition.liquid.values
    vap = partition.vapor.values
    facing = np.zeros(grid.shape, dtype=np.bool_)
    for axis, shift in ((0, 1), (0, -1), (1, 1), (1, -1)):
        rolled = np.roll(vap, shift, axis=axis)
        facing |= liq & rolled
        facing |= vap & np.roll(liq, shift, axis=axis)
    if not facing.any():
        return math.inf
    jj, ii = np.nonzero(facing)
    x = grid.x0 + (ii + 0.5) * grid.dx
    y = grid.y0 + (jj + 0.5) * grid.dy
    return float(
        min(
            (x - grid.x0).min(),
            (grid.x0 + grid.lx - x).min(),
            (y - grid.y0).min(),
            (grid.y0 + grid.ly - y).min(),
        )
    )


def liquid_touches_solid(partition: PhasePartition) -> bool:
    """Whether any liquid cell shares a (periodic) edge with a solid cell."""
    solid = partition.solid_mask().values
    if not solid.any():
        return False
    liq = partition.liquid.values
    for axis, shift in ((0, 1), (0, -1), (1, 1), (1, -1)):
        if (liq & np.roll(solid, shift, axis=axis)).any():
            return True
    return False
