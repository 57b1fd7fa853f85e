"""Reference motions, analytic reference shapes, and experiment drivers.

The drivers reproduce the benchmark suite: curvature flow of two
circles (with and without a neutral wall), equilibrium spreading of a
drop on a flat wall, and quasi-static advancing/receding sweeps on
chemically striped and sawtooth walls.  Each driver builds its own grid
and phases, runs the threshold dynamics, and measures errors against
independent references: a volume-preserving two-circle ODE integrated
with RK4, and circular-cap equilibria fixed by volume and contact
angle.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.ndimage

from .grid import (
    GridSpec,
    IndicatorField,
    PhasePartition,
    SurfaceTensionSet,
    disk_indicator,
    flat_solid,
    half_disk_indicator,
    indicator,
    make_grid,
    make_partition,
    patterned_solid,
    sawtooth_solid,
)
from .spectral import KernelSpectrum, build_kernel_spectrum, convolve_values
from .dynamics import ConvCache, _check_materials, net_score_values
from .energy import _energy_from_convs
from .measure import (
    AnalyticRegion,
    ContactMeasurement,
    DropDetachedError,
    ErrorNorms,
    MeasurementError,
    error_norms,
    extract_interface,
    fit_contact,
    fit_contact_band,
    indicator_contours,
    interface_boundary_clearance,
    liquid_touches_solid,
    polyline_hausdorff,
)
from .solver import RunTrace, SolverConfig, SpectraCache, _threshold_raw, evolve_fixed_steps, run

__all__ = [
    "TwoCircleOracle",
    "two_circle_mcf_oracle",
    "CapShape",
    "spherical_cap_shape",
    "disk_region",
    "cap_region",
    "TwoCirclesResult",
    "two_circles_setup",
    "run_two_circles",
    "MirrorCheck",
    "SemicircleResult",
    "two_semicircles_setup",
    "run_two_semicircles",
    "DropSpreadingResult",
    "drop_spreading_setup",
    "run_drop_spreading",
    "WettingSetup",
    "patterned_wetting_setup",
    "sawtooth_wetting_setup",
    "HysteresisSchedule",
    "HysteresisStep",
    "HysteresisResult",
    "run_hysteresis",
]

# ---------------------------------------------------------------------------
# reference motions


@dataclass(frozen=True)
class TwoCircleOracle:
    """Radii of two disjoint circles under volume-preserving curvature flow."""

    radii: tuple[float, float]
    t_end: float
    smaller_area: float
    total_area: float


def two_circle_mcf_oracle(r_a: float, r_b: float, t_end: float, h: float = 1e-6) -> TwoCircleOracle:
    """Integrate dr_i/dt = 2/(r_a + r_b) - 1/r_i with classical RK4.

    The normal velocity of volume-preserving curvature flow is the mean
    curvature minus its interface average; for two circles the average
    is 2/(r_a + r_b), which conserves r_a^2 + r_b^2 exactly.  The fixed
    step h is small enough that the time-discretization error is far
    below every tolerance the result is compared at.
    """
    if not (r_a > 0.0 and r_b > 0.0):
        raise ValueError("both radii must be positive")
    if not t_end > 0.0:
        raise ValueError(f"t_end must be positive, got {t_end}")

    def rate(r1: float, r2: float) -> tuple[float, float]:
        lam = 2.0 / (r1 + r2)
        return lam - 1.0 / r1, lam - 1.0 / r2

    n_full, rem = divmod(t_end, h)
    steps = [h] * int(n_full)
    if rem > 1e-12 * t_end:
        steps.append(rem)
    r1, r2 = float(r_a), float(r_b)
    for dt in steps:
        if min(r1, r2) < 16.0 * dt:
            raise ValueError("a circle is about to vanish; oracle not valid here")
        k1 = rate(r1, r2)
        k2 = rate(r1 + 0.5 * dt * k1[0], r2 + 0.5 * dt * k1[1])
        k3 = rate(r1 + 0.5 * dt * k2[0], r2 + 0.5 * dt * k2[1])
        k4 = rate(r1 + dt * k3[0], r2 + dt * k3[1])
        r1 += dt * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) / 6.0
        r2 += dt * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) / 6.0
    return TwoCircleOracle(
        radii=(r1, r2),
        t_end=t_end,
        smaller_area=math.pi * min(r1, r2) ** 2,
        total_area=math.pi * (r1 * r1 + r2 * r2),
    )


@dataclass(frozen=True)
class CapShape:
    """Circular cap of prescribed area sitting on a horizontal line.

    theta is the interior contact angle; center_y is the circle center
    relative to the wall line (negative when theta < pi/2).
    """

    radius: float
    half_width: float
    apex_height: float
    center_y: float
    theta: float
    volume: float


def spherical_cap_shape(volume: float, theta: float) -> CapShape:
    """Cap radius and extents from area V = R^2 (theta - sin theta cos theta)."""
    if not volume > 0.0:
        raise ValueError(f"volume must be positive, got {volume}")
    if not 0.0 < theta < math.pi:
        raise ValueError(f"contact angle must lie in (0, pi), got {theta}")
    shape_factor = theta - math.sin(theta) * math.cos(theta)
    radius = math.sqrt(volume / shape_factor)
    return CapShape(
        radius=radius,
        half_width=radius * math.sin(theta),
        apex_height=radius * (1.0 - math.cos(theta)),
        center_y=-radius * math.cos(theta),
        theta=theta,
        volume=volume,
    )


# ---------------------------------------------------------------------------
# analytic reference regions


def disk_region(cx: float, cy: float, r: float, n_boundary: int = 2048) -> AnalyticRegion:
    if not r > 0.0:
        raise ValueError(f"radius must be positive, got {r}")
    phi = np.linspace(0.0, 2.0 * math.pi, n_boundary + 1)
    boundary = np.column_stack([cx + r * np.cos(phi), cy + r * np.sin(phi)])

    def contains(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return (x - cx) ** 2 + (y - cy) ** 2 < r * r

    def distance(pts: np.ndarray) -> np.ndarray:
        return np.abs(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) - r)

    return AnalyticRegion(
        contains=contains,
        boundary_points=boundary,
        area=math.pi * r * r,
        distance=distance,
        boundary_closed=True,
    )


def cap_region(
    volume: float,
    theta: float,
    wall_y: float,
    center_x: float = 0.0,
    n_boundary: int = 2048,
) -> tuple[AnalyticRegion, CapShape]:
    """Equilibrium cap as an analytic region; boundary is the free arc only.

    The flat base along the wall line is excluded from boundary_points
    and from the distance function, matching interfaces extracted with a
    fluid mask (which carry no liquid-solid segments either).
    """
    cap = spherical_cap_shape(volume, theta)
    cy = wall_y + cap.center_y
    # polar angle from the upward axis; the free arc spans [-theta, theta]
    psi = np.linspace(-theta, theta, n_boundary)
    boundary = np.column_stack(
        [center_x + cap.radius * np.sin(psi), cy + cap.radius * np.cos(psi)]
    )
    end_l = boundary[0]
    end_r = boundary[-1]

    def contains(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        inside = (x - center_x) ** 2 + (y - cy) ** 2 < cap.radius**2
        return inside & (y > wall_y)

    def distance(pts: np.ndarray) -> np.ndarray:
        vx = pts[:, 0] - center_x
        vy = pts[:, 1] - cy
        on_arc = np.abs(np.arctan2(vx, vy)) <= theta
        d_arc = np.abs(np.hypot(vx, vy) - cap.radius)
        d_ends = np.minimum(
            np.hypot(pts[:, 0] - end_l[0], pts[:, 1] - end_l[1]),
            np.hypot(pts[:, 0] - end_r[0], pts[:, 1] - end_r[1]),
        )
        return np.where(on_arc, d_arc, d_ends)

    region = AnalyticRegion(
        contains=contains,
        boundary_points=boundary,
        area=volume,
        distance=distance,
        boundary_closed=False,
    )
    return region, cap


# ---------------------------------------------------------------------------
# two shrinking circles (no wall)


@dataclass(frozen=True)
class TwoCirclesResult:
    """vol_err is the signed area difference computed minus reference."""

    trace: RunTrace
    oracle: TwoCircleOracle
    smaller_area: float
    vol_err: float
    errors: ErrorNorms
    runtime_s: float


_CIRCLE_A = (0.35, 0.35, 0.2)
_CIRCLE_B = (0.7, 0.7, 0.15)


def two_circles_setup(n: int) -> tuple[PhasePartition, SurfaceTensionSet]:
    grid = make_grid(n, n, 0.0, 0.0, 1.0, 1.0)
    d_a = disk_indicator(grid, *_CIRCLE_A)
    d_b = disk_indicator(grid, *_CIRCLE_B)
    partition = make_partition(indicator(grid, d_a.values | d_b.values))
    return partition, SurfaceTensionSet(gamma_lv=1.0, gamma_sl=(), gamma_sv=())


def _fixed_horizon_steps(t_end: float, dt: float) -> int:
    n_steps = round(t_end / dt)
    if n_steps < 1 or not math.isclose(n_steps * dt, t_end, rel_tol=1e-9):
        raise ValueError(f"dt = {dt} does not divide the horizon t_end = {t_end}")
    return n_steps


def _smaller_component(u: IndicatorField) -> IndicatorField:
    labels, n = scipy.ndimage.label(u.values)
    if n < 2:
        raise RuntimeError(f"expected two liquid components, found {n}")
    counts = np.bincount(labels.ravel())[1:]
    return indicator(u.grid, labels == (int(np.argmin(counts)) + 1))


def run_two_circles(n: int, dt: float, t_end: float = 0.02, snapshot_every: int = 0) -> TwoCirclesResult:
    """Two disjoint circles on the unit square, evolved to a fixed time.

    The smaller circle shrinks while the larger grows at preserved total
    volume; the shrunk circle is compared against the RK4 reference both
    in area and in interface deviation.
    """
    partition, tensions = two_circles_setup(n)
    grid = partition.grid
    n_steps = _fixed_horizon_steps(t_end, dt)
    spectrum = build_kernel_spectrum(grid, dt)

    t0 = time.perf_counter()
    trace = evolve_fixed_steps(partition, tensions, spectrum, n_steps, snapshot_every=snapshot_every)
    runtime = time.perf_counter() - t0

    oracle = two_circle_mcf_oracle(_CIRCLE_A[2], _CIRCLE_B[2], t_end)
    small = _smaller_component(trace.final.liquid)
    smaller_area = small.cell_count * grid.cell_area
    r_small = min(oracle.radii)
    errors = error_norms(small, disk_region(_CIRCLE_B[0], _CIRCLE_B[1], r_small))
    return TwoCirclesResult(
        trace=trace,
        oracle=oracle,
        smaller_area=smaller_area,
        vol_err=smaller_area - oracle.smaller_area,
        errors=errors,
        runtime_s=runtime,
    )


# ---------------------------------------------------------------------------
# two semicircles on a neutral wall


@dataclass(frozen=True)
class MirrorCheck:
    """Agreement between the wall run and its reflected free-space twin."""

    hausdorff: float
    hausdorff_cells: float
    sym_diff_cells: int
    area_diff: float


@dataclass(frozen=True)
class SemicircleResult:
    trace: RunTrace
    oracle: TwoCircleOracle
    smaller_area: float
    vol_err: float
    errors: ErrorNorms
    runtime_s: float
    mirror: MirrorCheck | None


_WALL_Y = 0.25
_SEMI_A = (0.3, 0.2)
_SEMI_B = (0.8, 0.15)


def two_semicircles_setup(n: int) -> tuple[PhasePartition, SurfaceTensionSet]:
    grid = make_grid(n, n, 0.0, 0.0, 1.0, 1.0)
    wall = flat_solid(grid, _WALL_Y)
    d_a = half_disk_indicator(grid, _SEMI_A[0], _WALL_Y, _SEMI_A[1], _WALL_Y, keep="above")
    d_b = half_disk_indicator(grid, _SEMI_B[0], _WALL_Y, _SEMI_B[1], _WALL_Y, keep="above")
    partition = make_partition(indicator(grid, d_a.values | d_b.values), [wall])
    return partition, SurfaceTensionSet.from_young_angles(1.0, [math.pi / 2.0])


def run_two_semicircles(
    n: int,
    dt: float,
    t_end: float = 0.02,
    mirror_check: bool = False,
    snapshot_every: int = 0,
) -> SemicircleResult:
    """Two semicircular drops on a neutral (90 degree) flat wall.

    By reflection across the wall line this flow is half of the
    two-circle flow, so the same ODE reference applies with halved
    areas.  With mirror_check the reflected whole-circle problem is run
    on a shifted periodic box and the upper halves are compared cell by
    cell and interface to interface.
    """
    if n % 4 != 0:
        raise ValueError(f"mirror alignment needs n divisible by 4, got {n}")
    partition, tensions = two_semicircles_setup(n)
    grid = partition.grid
    n_steps = _fixed_horizon_steps(t_end, dt)
    spectrum = build_kernel_spectrum(grid, dt)

    t0 = time.perf_counter()
    trace = evolve_fixed_steps(partition, tensions, spectrum, n_steps, snapshot_every=snapshot_every)
    runtime = time.perf_counter() - t0

    oracle = two_circle_mcf_oracle(_SEMI_A[1], _SEMI_B[1], t_end)
    small = _smaller_component(trace.final.liquid)
    smaller_area = small.cell_count * grid.cell_area
    oracle_half = 0.5 * oracle.smaller_area
    region, _ = cap_region(oracle_half, math.pi / 2.0, _WALL_Y, _SEMI_B[0])
    errors = error_norms(small, region, fluid_mask=trace.final.fluid_mask())

    mirror = None
    if mirror_check:
        tgrid = make_grid(n, n, 0.0, -0.25, 1.0, 1.0)
        t_a = disk_indicator(tgrid, _SEMI_A[0], _WALL_Y, _SEMI_A[1])
        t_b = disk_indicator(tgrid, _SEMI_B[0], _WALL_Y, _SEMI_B[1])
        twin = make_partition(indicator(tgrid, t_a.values | t_b.values))
        twin_tensions = SurfaceTensionSet(gamma_lv=1.0, gamma_sl=(), gamma_sv=())
        twin_trace = evolve_fixed_steps(
            twin, twin_tensions, build_kernel_spectrum(tgrid, dt), n_steps
        )
        # row q of the wall grid and row n/2 + (q - n/4) of the twin grid
        # share the same physical y, so the twin's upper half maps onto
        # the wall grid's fluid rows directly.
        q = n // 4
        mapped = np.zeros(grid.shape, dtype=np.bool_)
        mapped[q : q + n // 2, :] = twin_trace.final.liquid.values[n // 2 :, :]
        mapped_field = indicator(grid, mapped)
        fluid = trace.final.fluid_mask()
        haus = polyline_hausdorff(
            indicator_contours(trace.final.liquid, fluid),
            indicator_contours(mapped_field, fluid),
        )
        sym_cells = int(np.count_nonzero(mapped ^ trace.final.liquid.values))
        mirror = MirrorCheck(
            hausdorff=haus,
            hausdorff_cells=haus / grid.dx,
            sym_diff_cells=sym_cells,
            area_diff=(mapped_field.cell_count - trace.final.liquid.cell_count) * grid.cell_area,
        )
    return SemicircleResult(
        trace=trace,
        oracle=oracle,
        smaller_area=smaller_area,
        vol_err=smaller_area - oracle_half,
        errors=errors,
        runtime_s=runtime,
        mirror=mirror,
    )


# ---------------------------------------------------------------------------
# drop spreading to an equilibrium cap


@dataclass(frozen=True)
class DropSpreadingResult:
    trace: RunTrace
    cap: CapShape
    errors: ErrorNorms
    contact: ContactMeasurement
    angle_err: float
    clearance: float
    runtime_s: float


def drop_spreading_setup(n: int, theta: float = math.pi / 3.0) -> tuple[PhasePartition, SurfaceTensionSet]:
    half = math.pi / 2.0
    grid = make_grid(n, n, -half, -half, math.pi, math.pi)
    wall_y = -half / 2.0
    wall = flat_solid(grid, wall_y)
    liquid = half_disk_indicator(grid, 0.0, wall_y, math.pi / 4.0, wall_y, keep="above")
    return make_partition(liquid, [wall]), SurfaceTensionSet.from_young_angles(1.0, [theta])


def run_drop_spreading(
    n: int,
    refine: bool = True,
    dt0: float | None = None,
    theta: float = math.pi / 3.0,
    max_iters: int = 10000,
    eps: float | None = None,
    eps1: float | None = None,
    dt_min: float | None = None,
    snapshot_every: int = 0,
) -> DropSpreadingResult:
    """Half-disk drop on a flat wall relaxing to its equilibrium cap.

    Domain [-pi/2, pi/2]^2 with the wall filling y < -pi/4 and an
    initial semicircular drop of radius pi/4.  The default dt0 equals
    two cell widths; with refine the step is halved whenever the
    iteration stalls while still far from the previous level's rest
    state.  Errors are measured against the cap holding exactly the
    conserved discrete volume.
    """
    partition, tensions = drop_spreading_setup(n, theta)
    grid = partition.grid
    wall_y = -math.pi / 4.0
    cfg = SolverConfig(
        dt0=2.0 * grid.dx if dt0 is None else dt0,
        eps=eps,
        eps1=eps1,
        dt_min=dt_min,
        refine=refine,
        max_iters=max_iters,
    )

    t0 = time.perf_counter()
    trace = run(partition, tensions, cfg, snapshot_every=snapshot_every)
    runtime = time.perf_counter() - t0

    volume = partition.n_liquid * grid.cell_area
    region, cap = cap_region(volume, theta, wall_y, 0.0)
    final = trace.final
    errors = error_norms(final.liquid, region, fluid_mask=final.fluid_mask())
    contact = fit_contact(extract_interface(final), wall_y)
    return DropSpreadingResult(
        trace=trace,
        cap=cap,
        errors=errors,
        contact=contact,
        angle_err=0.5 * (contact.left_angle + contact.right_angle) - theta,
        clearance=interface_boundary_clearance(final),
        runtime_s=runtime,
    )


# ---------------------------------------------------------------------------
# quasi-static hysteresis sweeps


@dataclass(frozen=True)
class WettingSetup:
    """Initial state, tensions, and measurement conventions for a wall type."""

    partition: PhasePartition
    tensions: SurfaceTensionSet
    reference_y: float
    h_excl: float


def patterned_wetting_setup(
    n: int,
    theta_a: float = math.pi / 5.0,
    theta_b: float = 0.7 * math.pi,
    k: int = 4,
    r0: float = math.pi / 5.0,
) -> WettingSetup:
    """Flat wall striped with two materials, drop seeded on the center stripe.

    Material A (contact angle theta_a) and material B (theta_b)
    alternate in stripes of half-period pi/(4k+2); the stripe straddling
    x = 0 is B, so a small central drop starts fully on B.
    """
    half = math.pi / 2.0
    grid = make_grid(n, n, -half, -half, math.pi, math.pi)
    wall_y = -half / 2.0
    mat_a, mat_b = patterned_solid(grid, wall_y, k)
    liquid = half_disk_indicator(grid, 0.0, wall_y, r0, wall_y, keep="above")
    partition = make_partition(liquid, [mat_a, mat_b])
    tensions = SurfaceTensionSet.from_young_angles(1.0, [theta_a, theta_b])
    return WettingSetup(partition=partition, tensions=tensions, reference_y=wall_y, h_excl=0.0)


def sawtooth_wetting_setup(
    n: int,
    theta_y: float = math.pi / 2.0,
    k: int = 4,
    alpha: float = math.pi / 6.0,
    r0: float = math.pi / 5.0,
) -> WettingSetup:
    """Sawtooth wall of a single material, drop seeded over the central teeth.

    Teeth have face slope tan(alpha) and height tan(alpha) * pi/(4k+2).
    Contact measurements use the mid-roughness line as reference and
    exclude one tooth height above it, so reported angles are apparent
    angles of the envelope rather than local face angles.
    """
    half = math.pi / 2.0
    grid = make_grid(n, n, -half, -half, math.pi, math.pi)
    baseline = -half / 2.0
    solid = sawtooth_solid(grid, baseline, k, alpha)
    tooth = math.tan(alpha) * math.pi / (4.0 * k + 2.0)
    disk = disk_indicator(grid, 0.0, baseline + 0.5 * tooth, r0)
    liquid = indicator(grid, disk.values & ~solid.values)
    partition = make_partition(liquid, [solid])
    tensions = SurfaceTensionSet.from_young_angles(1.0, [theta_y])
    return WettingSetup(
        partition=partition,
        tensions=tensions,
        reference_y=baseline + 0.5 * tooth,
        h_excl=tooth,
    )


@dataclass(frozen=True)
class HysteresisSchedule:
    """Volume ramp for a quasi-static sweep.

    Each outer step shifts the target liquid count by delta_cells in
    the given direction ("advance" grows the drop, "recede" shrinks
    it), then relaxes to a fixed point of the dynamics at that count.
    """

    direction: str
    delta_cells: int
    n_steps: int
    settle_max_iters: int = 2000

    def __post_init__(self) -> None:
        if self.direction not in ("advance", "recede"):
            raise ValueError(f"direction must be 'advance' or 'recede', got {self.direction!r}")
        if self.delta_cells < 1:
            raise ValueError(f"delta_cells must be at least 1, got {self.delta_cells}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be at least 1, got {self.n_steps}")
        if self.settle_max_iters < 1:
            raise ValueError(f"settle_max_iters must be at least 1, got {self.settle_max_iters}")


@dataclass(frozen=True)
class HysteresisStep:
    step: int
    volume: float
    left_x: float
    right_x: float
    left_angle: float
    right_angle: float
    energy: float


@dataclass(frozen=True, eq=False)
class HysteresisResult:
    steps: tuple[HysteresisStep, ...]
    final: PhasePartition
    dt: float
    aborted: str | None  # None for a clean sweep, else the abort reason
    snapshots: tuple[tuple[int, np.ndarray], ...] = ()


def _settle(
    liquid: np.ndarray,
    tensions: SurfaceTensionSet,
    spectrum: KernelSpectrum,
    cache: ConvCache,
    fluid_idx: np.ndarray,
    m: int,
    max_iters: int,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Iterate at fixed count m until the liquid set repeats (period 1 or 2).

    Returns the settled mask, its smoothed field, and the iteration
    count.  Near a quasi-static sweep the fixed point is reached in a
    handful of iterations; max_iters only guards against runaway.
    """
    shape = liquid.shape
    liquid_conv = convolve_values(liquid.astype(np.float64), spectrum)
    older: np.ndarray | None = None
    it = 0
    for it in range(1, max_iters + 1):
        score = net_score_values(liquid_conv, cache, tensions)
        new, _ = _threshold_raw(score, fluid_idx, m, shape)
        same = np.array_equal(new, liquid)
        cycle = older is not None and np.array_equal(new, older)
        older = liquid
        liquid = new
        liquid_conv = convolve_values(new.astype(np.float64), spectrum)
        if same or cycle:
            break
    return liquid, liquid_conv, it


def run_hysteresis(
    partition: PhasePartition,
    tensions: SurfaceTensionSet,
    dt: float,
    schedule: HysteresisSchedule,
    reference_y: float,
    h_excl: float = 0.0,
    min_volume: float = 0.0,
    spectra: SpectraCache | None = None,
    snapshot_every: int = 0,
    contact_band: float | None = None,
    contact_h_excl: float = 0.0,
) -> HysteresisResult:
    """Quasi-static volume sweep against a structured or patterned wall.

    Step 0 relaxes the seed drop at its own volume; each later step
    shifts the target count per the schedule and relaxes again, always
    at fixed dt.  Contact points and apparent angles come from the
    per-side near-wall band fit (fit_contact_band): under volume forcing
    the bulk shape lags the contact line, and only the band tracks the
    advancing or receding inclination.  contact_band sets the band
    height; None picks max(2 sqrt(2 dt), 8 dx), two kernel widths with
    a floor that keeps enough contour points in the fit.  contact_h_excl
    masks interface points below reference_y + contact_h_excl for the
    band fit only; it defaults to 0 (the band anchors at the true foot,
    even inside wall roughness) while h_excl keeps excluding the
    roughness envelope from the sentinel.  A whole-interface cap fit
    still runs as a topology sentinel: when satellite droplets or
    lift-off leave no coherent cap, either fit
    fails and the sweep reports detachment.  The sweep aborts (with the
    partial record) when the drop detaches from the wall, when the
    interface gets within 10 sqrt(dt) of the domain boundary (kernel
    wrap-around would no longer be negligible), when the fluid region
    is exhausted, or when the volume falls below min_volume.
    """
    _check_materials(partition, tensions)
    if not partition.solids:
        raise ValueError("hysteresis sweeps need at least one solid material")
    grid = partition.grid
    if spectra is None:
        spectra = SpectraCache(partition)
    spectrum, cache = spectra.get(dt, partition)
    fluid_idx = spectra.fluid_idx
    standoff = 10.0 * math.sqrt(dt)
    sign = 1 if schedule.direction == "advance" else -1
    if contact_band is None:
        contact_band = max(2.0 * math.sqrt(2.0 * dt), 8.0 * grid.dx)

    liquid = partition.liquid.values
    m = partition.n_liquid
    steps: list[HysteresisStep] = []
    snapshots: list[tuple[int, np.ndarray]] = []
    aborted: str | None = None
    for s in range(schedule.n_steps + 1):
        if s > 0:
            m += sign * schedule.delta_cells
            if m < 1 or m * grid.cell_area < min_volume:
                aborted = "min-volume"
                break
            if m > fluid_idx.size:
                aborted = "fluid-exhausted"
                break
        liquid, liquid_conv, _ = _settle(
            liquid, tensions, spectrum, cache, fluid_idx, m, schedule.settle_max_iters
        )
        partition = partition.with_liquid(IndicatorField(grid, liquid))
        if not liquid_touches_solid(partition):
            aborted = "detached"
            break
        try:
            curves = extract_interface(partition)
            fit_contact(curves, reference_y, h_excl)
            contact = fit_contact_band(curves, reference_y, contact_h_excl, contact_band)
        except (DropDetachedError, MeasurementError):
            aborted = "detached"
            break
        energy = _energy_from_convs(partition, tensions, liquid_conv, cache).total
        steps.append(
            HysteresisStep(
                step=s,
                volume=m * grid.cell_area,
                left_x=contact.left_x,
                right_x=contact.right_x,
                left_angle=contact.left_angle,
                right_angle=contact.right_angle,
                energy=energy,
            )
        )
        if snapshot_every > 0 and s % snapshot_every == 0:
            snapshots.append((s, liquid.copy()))
        if interface_boundary_clearance(partition) < standoff:
            aborted = "standoff"
            break
    return HysteresisResult(
        steps=tuple(steps), final=partition, dt=dt, aborted=aborted, snapshots=tuple(snapshots)
    )
