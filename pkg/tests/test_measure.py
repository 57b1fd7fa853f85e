import math

import numpy as np
import pytest

from tdwet.grid import (
    disk_indicator,
    flat_solid,
    half_disk_indicator,
    indicator,
    make_grid,
    make_partition,
    volume,
)
from tdwet.measure import (
    AnalyticRegion,
    DropDetachedError,
    MeasurementError,
    connected_areas,
    curve_length,
    error_norms,
    extract_interface,
    fit_circle,
    fit_contact,
    fit_contact_band,
    indicator_contours,
    interface_boundary_clearance,
    liquid_touches_solid,
    polyline_hausdorff,
)


def _shoelace(points):
    x, y = points[:, 0], points[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def test_disk_contour_closed_and_length():
    g = make_grid(256, 256, 0.0, 0.0, 1.0, 1.0)
    d = disk_indicator(g, 0.5, 0.5, 0.2)
    curves = indicator_contours(d)
    assert len(curves) == 1
    c = curves[0]
    assert c.closed
    # binary marching squares carries a resolution-independent staircase
    # length bias of ~5%; enclosed area is unbiased and first order in dx
    assert abs(curve_length(c) - 0.4 * math.pi) < 0.08 * 0.4 * math.pi
    assert abs(_shoelace(c.points) - volume(d)) < 3.0 * g.dx * 0.4 * math.pi


def test_half_plane_open_curve():
    g = make_grid(64, 64, 0.0, 0.0, 1.0, 1.0)
    _, y = g.center_mesh()
    half = indicator(g, np.broadcast_to(y < 0.5, g.shape))
    curves = indicator_contours(half)
    assert len(curves) == 1
    assert not curves[0].closed
    xs = curves[0].points[:, 0]
    assert xs.max() - xs.min() > 1.0 - 3.0 * g.dx  # spans the domain


def test_empty_liquid_no_curves():
    g = make_grid(32, 32, 0.0, 0.0, 1.0, 1.0)
    part = make_partition(indicator(g, np.zeros(g.shape, dtype=bool)))
    assert extract_interface(part) == []


def test_consecutive_points_stay_local():
    g = make_grid(128, 128, 0.0, 0.0, 1.0, 1.0)
    d = disk_indicator(g, 0.5, 0.5, 0.3)
    for c in indicator_contours(d):
        steps = np.linalg.norm(np.diff(c.points, axis=0), axis=1)
        assert steps.max() <= 2.0 * max(g.dx, g.dy)


def test_fit_circle_recovers_exact_circle():
    t = np.linspace(0.0, 2.0 * math.pi, 40, endpoint=False)
    pts = np.column_stack([0.3 + 0.25 * np.cos(t), -0.1 + 0.25 * np.sin(t)])
    cx, cy, r = fit_circle(pts)
    assert (cx, cy, r) == pytest.approx((0.3, -0.1, 0.25), abs=1e-9)
    with pytest.raises(MeasurementError, match="three points"):
        fit_circle(pts[:2])


def test_semicircle_contact_angles():
    g = make_grid(512, 512, 0.0, 0.0, 1.0, 1.0)
    wall = 0.25
    solid = flat_solid(g, wall)
    liquid = half_disk_indicator(g, 0.5, wall, 0.2, wall)
    part = make_partition(liquid, solids=(solid,))
    m = fit_contact(extract_interface(part), wall)
    assert m.left_angle == pytest.approx(math.pi / 2, abs=0.01)
    assert m.right_angle == pytest.approx(math.pi / 2, abs=0.01)
    assert m.left_x == pytest.approx(0.3, abs=2.0 * g.dx)
    assert m.right_x == pytest.approx(0.7, abs=2.0 * g.dx)
    assert m.left_x < m.right_x
    assert m.fit_radius == pytest.approx(0.2, abs=2.0 * g.dx)


def test_cap_contact_angle_pi_third():
    # circular cap with theta = pi/3: circle center sits R cos(theta) below the wall
    n = 1024
    g = make_grid(n, n, 0.0, 0.0, 1.0, 1.0)
    wall, R, theta = 0.25, 0.3, math.pi / 3
    cy = wall - R * math.cos(theta)
    solid = flat_solid(g, wall)
    x, y = g.center_mesh()
    mask = ((x - 0.5) ** 2 + (y - cy) ** 2 < R * R) & (y > wall)
    part = make_partition(indicator(g, mask), solids=(solid,))
    m = fit_contact(extract_interface(part), wall)
    assert m.left_angle == pytest.approx(theta, abs=0.02)
    assert m.right_angle == pytest.approx(theta, abs=0.02)
    half_chord = R * math.sin(theta)
    assert m.left_x == pytest.approx(0.5 - half_chord, abs=3.0 * g.dx)
    assert m.right_x == pytest.approx(0.5 + half_chord, abs=3.0 * g.dx)


def test_band_fit_reads_slanted_sides_exactly():
    # parallelogram with both sides leaning right at slope dx/dy = s:
    # interior angles are pi/2 -/+ atan(s), straight lines the band fit
    # should recover almost exactly
    g = make_grid(512, 512, 0.0, 0.0, 1.0, 1.0)
    wall, top, s = 0.25, 0.65, 0.35
    solid = flat_solid(g, wall)
    x, y = g.center_mesh()
    mask = (y > wall) & (y < top) & (x > 0.3 + s * (y - wall)) & (x < 0.7 + s * (y - wall))
    part = make_partition(indicator(g, mask), solids=(solid,))
    m = fit_contact_band(extract_interface(part), wall, band=0.2)
    assert m.left_angle == pytest.approx(math.pi / 2 - math.atan(s), abs=0.02)
    assert m.right_angle == pytest.approx(math.pi / 2 + math.atan(s), abs=0.02)
    assert m.left_x == pytest.approx(0.3, abs=2.0 * g.dx)
    assert m.right_x == pytest.approx(0.7, abs=2.0 * g.dx)
    assert math.isinf(m.fit_radius)


def test_band_fit_on_caps_tracks_wall_tangent():
    n = 1024
    g = make_grid(n, n, 0.0, 0.0, 1.0, 1.0)
    wall = 0.25
    solid = flat_solid(g, wall)
    x, y = g.center_mesh()
    for theta in (0.7, 2.1):
        R = 0.22 / math.sin(theta)
        cy = wall - R * math.cos(theta)
        mask = ((x - 0.5) ** 2 + (y - cy) ** 2 < R * R) & (y > wall)
        part = make_partition(indicator(g, mask), solids=(solid,))
        m = fit_contact_band(extract_interface(part), wall, band=0.04)
        # tangent rotates across the band, so the read sits a little
        # below the wall angle; the bias stays under ~ band / sin(theta) / R
        assert m.left_angle == pytest.approx(theta, abs=0.12)
        assert m.right_angle == pytest.approx(theta, abs=0.12)
        assert m.left_angle == pytest.approx(m.right_angle, abs=0.03)
        assert m.left_x == pytest.approx(0.5 - 0.22, abs=4.0 * g.dx)
        assert m.right_x == pytest.approx(0.5 + 0.22, abs=4.0 * g.dx)


def test_band_fit_errors():
    g = make_grid(256, 256, 0.0, 0.0, 1.0, 1.0)
    wall = 0.25
    solid = flat_solid(g, wall)
    liquid = half_disk_indicator(g, 0.5, wall, 0.2, wall)
    part = make_partition(liquid, solids=(solid,))
    curves = extract_interface(part)
    with pytest.raises(ValueError, match="band must be positive"):
        fit_contact_band(curves, wall, band=0.0)
    with pytest.raises(MeasurementError, match="no interface"):
        fit_contact_band([], wall, band=0.05)
    # a band thinner than one cell row falls back to the three lowest
    # points per side instead of failing
    m = fit_contact_band(curves, wall, band=1e-4)
    assert m.left_x < m.right_x
    # exclusion above the whole drop leaves nothing to fit
    with pytest.raises(MeasurementError, match="exclusion"):
        fit_contact_band(curves, wall, h_excl=0.9)


def test_detached_drop_reported():
    g = make_grid(256, 256, 0.0, 0.0, 1.0, 1.0)
    solid = flat_solid(g, 0.1)
    floating = disk_indicator(g, 0.5, 0.6, 0.15)
    part = make_partition(floating, solids=(solid,))
    with pytest.raises(DropDetachedError):
        fit_contact(extract_interface(part), 0.1)
    with pytest.raises(MeasurementError, match="exclusion band"):
        fit_contact(extract_interface(part), 0.1, h_excl=0.9)
    with pytest.raises(MeasurementError, match="no interface"):
        fit_contact([], 0.1)


def test_contact_translation_invariance():
    g = make_grid(256, 256, 0.0, 0.0, 1.0, 1.0)
    wall = 0.25
    solid = flat_solid(g, wall)
    liquid = half_disk_indicator(g, 0.4, wall, 0.2, wall)
    part = make_partition(liquid, solids=(solid,))
    shift_cells = 32
    moved = make_partition(
        indicator(g, np.roll(liquid.values, shift_cells, axis=1)), solids=(solid,)
    )
    a = fit_contact(extract_interface(part), wall)
    b = fit_contact(extract_interface(moved), wall)
    assert b.left_angle == pytest.approx(a.left_angle, abs=1e-6)
    assert b.right_angle == pytest.approx(a.right_angle, abs=1e-6)
    assert b.left_x - a.left_x == pytest.approx(shift_cells * g.dx, abs=1e-9)
    assert b.right_x - a.right_x == pytest.approx(shift_cells * g.dx, abs=1e-9)


def test_error_norms_identity():
    g = make_grid(128, 128, 0.0, 0.0, 1.0, 1.0)
    d = disk_indicator(g, 0.5, 0.5, 0.2)
    e = error_norms(d, d)
    assert (e.l1, e.linf, e.vol_err) == (0.0, 0.0, 0.0)


def test_error_norms_shifted_disk():
    g = make_grid(256, 256, 0.0, 0.0, 1.0, 1.0)
    r = 0.2
    d = disk_indicator(g, 0.5, 0.5, r)
    shifted = indicator(g, np.roll(d.values, 1, axis=1))
    e = error_norms(shifted, d)
    # one-cell shift sweeps two lens-shaped slivers of area ~ 2 r dx each
    assert e.l1 == pytest.approx(2.0 * 2.0 * r * g.dx, rel=0.25)
    assert e.linf == pytest.approx(g.dx, abs=0.5 * g.dx)
    assert e.vol_err == 0.0


def test_error_norms_analytic_reference():
    g = make_grid(256, 256, 0.0, 0.0, 1.0, 1.0)
    r = 0.2
    d = disk_indicator(g, 0.5, 0.5, r)
    t = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
    boundary = np.column_stack([0.5 + r * np.cos(t), 0.5 + r * np.sin(t)])
    region = AnalyticRegion(
        contains=lambda x, y: (x - 0.5) ** 2 + (y - 0.5) ** 2 < r * r,
        boundary_points=boundary,
        area=math.pi * r * r,
        distance=lambda pts: np.abs(np.hypot(pts[:, 0] - 0.5, pts[:, 1] - 0.5) - r),
    )
    e = error_norms(d, region)
    assert e.l1 == 0.0  # rasterization uses the same strict-interior rule
    assert abs(e.vol_err) <= 2.0 * math.pi * r * g.dx
    assert e.linf <= g.dx  # contour interpolation stays within a cell of the circle
    assert e.vol_err == pytest.approx(volume(d) - math.pi * r * r, abs=1e-15)


def test_hausdorff_symmetry_and_shift():
    g = make_grid(256, 256, 0.0, 0.0, 1.0, 1.0)
    d = disk_indicator(g, 0.5, 0.5, 0.2)
    shifted = indicator(g, np.roll(d.values, 3, axis=1))
    ca = indicator_contours(d)
    cb = indicator_contours(shifted)
    h_ab = polyline_hausdorff(ca, cb)
    h_ba = polyline_hausdorff(cb, ca)
    assert h_ab == pytest.approx(h_ba, abs=1e-12)
    assert h_ab == pytest.approx(3.0 * g.dx, abs=g.dx)
    with pytest.raises(MeasurementError, match="both sides"):
        polyline_hausdorff(ca, [])


def test_connected_areas_sorted():
    g = make_grid(128, 128, 0.0, 0.0, 1.0, 1.0)
    a = disk_indicator(g, 0.3, 0.3, 0.15)
    b = disk_indicator(g, 0.7, 0.7, 0.08)
    both = indicator(g, a.values | b.values)
    areas = connected_areas(both)
    assert len(areas) == 2
    assert areas[0] < areas[1]
    assert areas[0] == pytest.approx(volume(b), rel=1e-12)
    assert areas[1] == pytest.approx(volume(a), rel=1e-12)
    assert len(connected_areas(indicator(g, np.zeros(g.shape, bool)))) == 0


def test_boundary_clearance():
    g = make_grid(128, 128, 0.0, 0.0, 1.0, 1.0)
    part = make_partition(disk_indicator(g, 0.5, 0.5, 0.2))
    clr = interface_boundary_clearance(part)
    assert clr == pytest.approx(0.3, abs=2.0 * g.dx)
    empty = make_partition(indicator(g, np.zeros(g.shape, bool)))
    assert interface_boundary_clearance(empty) == math.inf


def test_liquid_touches_solid_with_wrap():
    g = make_grid(64, 64, 0.0, 0.0, 1.0, 1.0)
    solid = flat_solid(g, 0.1)
    sitting = half_disk_indicator(g, 0.5, 0.2, 0.15, 0.1)
    floating = disk_indicator(g, 0.5, 0.6, 0.15)
    assert liquid_touches_solid(make_partition(sitting, solids=(solid,)))
    assert not liquid_touches_solid(make_partition(floating, solids=(solid,)))
    # wrap contact: liquid hugging the top row touches the slab's periodic image
    mask = np.zeros(g.shape, dtype=bool)
    mask[-1, 10:20] = True
    assert liquid_touches_solid(make_partition(indicator(g, mask), solids=(solid,)))
