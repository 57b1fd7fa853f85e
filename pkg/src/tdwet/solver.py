"""Iteration drivers: equilibration, time refinement, fixed stepping.

run_to_equilibrium iterates threshold-dynamics steps at a fixed time
step until the per-step change stalls.  run_with_time_refinement wraps
the same inner loop in the halving scheme: once the iteration converges
at the current dt, the state is compared against a checkpoint recorded
at the previous refinement level; if it still moved, dt is halved and
iteration continues, otherwise the run stops.  Halving also stops at a
floor dt_min.

Convergence at fixed dt is declared when the symmetric difference
between consecutive liquid sets drops to eps or below.  An exact
period-2 cycle (the new liquid set equals the set from two steps
earlier) is also treated as converged at that dt: such flip-flops of a
few boundary cells otherwise never meet a one-cell tolerance and would
stall the refinement loop.

The solver loop reuses the smoothed static masks per dt level and the
smoothed liquid set across iterations; results are bit-identical to
iterating dynamics.mbo_step by hand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .grid import GridSpec, IndicatorField, PhasePartition, SurfaceTensionSet
from .spectral import KernelSpectrum, build_kernel_spectrum, convolve_values
from .dynamics import ConvCache, _check_materials, _select_m_smallest, net_score_values
from .energy import _energy_from_convs

__all__ = [
    "SolverConfig",
    "StepRecord",
    "RunTrace",
    "run_to_equilibrium",
    "run_with_time_refinement",
    "evolve_fixed_steps",
    "SpectraCache",
]

TERMINATION_REASONS = ("converged", "refined-converged", "max_iters", "dt_floor", "completed")


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls.

    eps (inner convergence area), eps1 (refinement stop area), and
    dt_min default to one cell area, one cell area, and dx*dy
    respectively when left as None; they are resolved against the grid
    at run start.
    """

    dt0: float
    eps: float | None = None
    eps1: float | None = None
    dt_min: float | None = None
    max_iters: int = 10000
    refine: bool = False

    def __post_init__(self) -> None:
        if not self.dt0 > 0.0:
            raise ValueError(f"dt0 must be positive, got {self.dt0}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        for name in ("eps", "eps1", "dt_min"):
            v = getattr(self, name)
            if v is not None and not v > 0.0:
                raise ValueError(f"{name} must be positive when given, got {v}")

    def resolved(self, grid: GridSpec) -> "SolverConfig":
        """Config with grid-dependent defaults filled in."""
        eps = self.eps if self.eps is not None else grid.cell_area
        return SolverConfig(
            dt0=self.dt0,
            eps=eps,
            eps1=self.eps1 if self.eps1 is not None else eps,
            dt_min=self.dt_min if self.dt_min is not None else grid.dx * grid.dy,
            max_iters=self.max_iters,
            refine=self.refine,
        )


@dataclass(frozen=True)
class StepRecord:
    """Per-iteration diagnostics; energy refers to the post-step state."""

    iteration: int
    dt: float
    energy: float
    delta: float
    sym_diff: float
    volume: float
    n_liquid: int


@dataclass(frozen=True, eq=False)
class RunTrace:
    """Per-step records plus the final state.

    snapshots holds (iteration, liquid mask) pairs collected at the
    requested cadence; it is empty unless a cadence was requested, so
    long runs carry no state copies by default.
    """

    records: tuple[StepRecord, ...]
    final: PhasePartition
    termination: str
    initial_energy: float
    snapshots: tuple[tuple[int, np.ndarray], ...] = ()

    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    def dts(self) -> np.ndarray:
        return np.array([r.dt for r in self.records])


class SpectraCache:
    """Kernel spectra and smoothed static masks, keyed by dt.

    Valid for one family of partitions sharing the same fluid and solid
    masks (solids are fixed; only the liquid/vapor split evolves).
    """

    def __init__(self, partition: PhasePartition) -> None:
        self._grid = partition.grid
        self._fluid = (partition.liquid.values | partition.vapor.values).copy()
        self._solids = tuple(s.values for s in partition.solids)
        self._by_dt: dict[float, tuple[KernelSpectrum, ConvCache]] = {}
        self.fluid_idx = np.flatnonzero(self._fluid.ravel())

    def get(self, dt: float, partition: PhasePartition) -> tuple[KernelSpectrum, ConvCache]:
        if not np.array_equal(partition.liquid.values | partition.vapor.values, self._fluid):
            raise ValueError("spectra cache was built for a different fluid geometry")
        if dt not in self._by_dt:
            spectrum = build_kernel_spectrum(self._grid, dt)
            self._by_dt[dt] = (spectrum, ConvCache(partition, spectrum))
        return self._by_dt[dt]


def _threshold_raw(
    score: np.ndarray, fluid_idx: np.ndarray, m: int, shape: tuple[int, int]
) -> tuple[np.ndarray, float]:
    """Raw-array twin of dynamics.threshold_exact_volume (same ordering)."""
    g = score.ravel()[fluid_idx]
    if np.isnan(g).any():
        raise ValueError("scores contain NaN on fluid cells")
    local_sel, delta = _select_m_smallest(g, m)
    new = np.zeros(shape[0] * shape[1], dtype=np.bool_)
    new[fluid_idx[local_sel]] = True
    return new.reshape(shape), delta


def _run(
    partition: PhasePartition,
    tensions: SurfaceTensionSet,
    config: SolverConfig,
    *,
    refine: bool,
    spectra: SpectraCache | None = None,
    snapshot_every: int = 0,
) -> RunTrace:
    _check_materials(partition, tensions)
    grid = partition.grid
    cfg = config.resolved(grid)
    cell_area = grid.cell_area
    if spectra is None:
        spectra = SpectraCache(partition)
    fluid_idx = spectra.fluid_idx

    dt = cfg.dt0
    spectrum, cache = spectra.get(dt, partition)
    m = partition.n_liquid
    liquid = partition.liquid.values.copy()
    liquid_conv = convolve_values(liquid.astype(np.float64), spectrum)
    initial_energy = _energy_from_convs(partition, tensions, liquid_conv, cache).total

    checkpoint = liquid.copy()
    older: np.ndarray | None = None
    records: list[StepRecord] = []
    snapshots: list[tuple[int, np.ndarray]] = []
    termination = "max_iters"

    it = 0
    while it < cfg.max_iters:
        it += 1
        score = net_score_values(liquid_conv, cache, tensions)
        new_liquid, delta = _threshold_raw(score, fluid_idx, m, grid.shape)
        sym_cells = int(np.count_nonzero(new_liquid ^ liquid))
        sym_area = sym_cells * cell_area
        two_cycle = older is not None and sym_cells > 0 and np.array_equal(new_liquid, older)

        new_partition = partition.with_liquid(IndicatorField(grid, new_liquid))
        liquid_conv = convolve_values(new_liquid.astype(np.float64), spectrum)
        energy = _energy_from_convs(new_partition, tensions, liquid_conv, cache).total
        records.append(
            StepRecord(
                iteration=it,
                dt=dt,
                energy=energy,
                delta=delta,
                sym_diff=sym_area,
                volume=m * cell_area,
                n_liquid=int(np.count_nonzero(new_liquid)),
            )
        )
        older = liquid
        liquid = new_liquid
        partition = new_partition
        if snapshot_every > 0 and it % snapshot_every == 0:
            snapshots.append((it, liquid.copy()))

        if sym_area <= cfg.eps or two_cycle:
            if not refine:
                termination = "converged"
                break
            ref_diff = int(np.count_nonzero(checkpoint ^ liquid)) * cell_area
            if ref_diff >= cfg.eps1:
                if dt / 2.0 < cfg.dt_min:
                    termination = "dt_floor"
                    break
                dt = dt / 2.0
                spectrum, cache = spectra.get(dt, partition)
                checkpoint = liquid.copy()
                liquid_conv = convolve_values(liquid.astype(np.float64), spectrum)
                older = None
            else:
                termination = "refined-converged"
                break

    return RunTrace(
        records=tuple(records),
        final=partition,
        termination=termination,
        initial_energy=initial_energy,
        snapshots=tuple(snapshots),
    )


def run_to_equilibrium(
    partition: PhasePartition,
    tensions: SurfaceTensionSet,
    config: SolverConfig,
    *,
    spectra: SpectraCache | None = None,
    snapshot_every: int = 0,
) -> RunTrace:
    """Iterate at fixed dt0 until the liquid set stalls (or max_iters)."""
    return _run(
        partition, tensions, config, refine=False, spectra=spectra, snapshot_every=snapshot_every
    )


def run_with_time_refinement(
    partition: PhasePartition,
    tensions: SurfaceTensionSet,
    config: SolverConfig,
    *,
    spectra: SpectraCache | None = None,
    snapshot_every: int = 0,
) -> RunTrace:
    """Equilibrate with successive dt halvings down to dt_min."""
    return _run(
        partition, tensions, config, refine=True, spectra=spectra, snapshot_every=snapshot_every
    )


def run(
    partition: PhasePartition,
    tensions: SurfaceTensionSet,
    config: SolverConfig,
    *,
    spectra: SpectraCache | None = None,
    snapshot_every: int = 0,
) -> RunTrace:
    """Dispatch on config.refine."""
    return _run(
        partition,
        tensions,
        config,
        refine=config.refine,
        spectra=spectra,
        snapshot_every=snapshot_every,
    )


def evolve_fixed_steps(
    partition: PhasePartition,
    tensions: SurfaceTensionSet,
    spectrum: KernelSpectrum,
    n_steps: int,
    *,
    spectra: SpectraCache | None = None,
    snapshot_every: int = 0,
) -> RunTrace:
    """Exactly n_steps threshold-dynamics steps at a fixed kernel.

    Used for finite-horizon comparisons against reference motions; the
    trace termination reason is "completed".
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be at least 1, got {n_steps}")
    _check_materials(partition, tensions)
    grid = partition.grid
    cell_area = grid.cell_area
    if spectra is None:
        spectra = SpectraCache(partition)
    spectrum_cached, cache = spectra.get(spectrum.dt, partition)
    fluid_idx = spectra.fluid_idx

    m = partition.n_liquid
    liquid = partition.liquid.values.copy()
    liquid_conv = convolve_values(liquid.astype(np.float64), spectrum_cached)
    initial_energy = _energy_from_convs(partition, tensions, liquid_conv, cache).total

    records: list[StepRecord] = []
    snapshots: list[tuple[int, np.ndarray]] = []
    for it in range(1, n_steps + 1):
        score = net_score_values(liquid_conv, cache, tensions)
        new_liquid, delta = _threshold_raw(score, fluid_idx, m, grid.shape)
        sym_area = int(np.count_nonzero(new_liquid ^ liquid)) * cell_area
        new_partition = partition.with_liquid(IndicatorField(grid, new_liquid))
        liquid_conv = convolve_values(new_liquid.astype(np.float64), spectrum_cached)
        energy = _energy_from_convs(new_partition, tensions, liquid_conv, cache).total
        records.append(
            StepRecord(
                iteration=it,
                dt=spectrum_cached.dt,
                energy=energy,
                delta=delta,
                sym_diff=sym_area,
                volume=m * cell_area,
                n_liquid=int(np.count_nonzero(new_liquid)),
            )
        )
        liquid = new_liquid
        partition = new_partition
        if snapshot_every > 0 and it % snapshot_every == 0:
            snapshots.append((it, liquid.copy()))

    return RunTrace(
        records=tuple(records),
        final=partition,
        termination="completed",
        initial_energy=initial_energy,
        snapshots=tuple(snapshots),
    )
