"""One step of volume-preserving threshold dynamics for wetting.

Each step smooths phase indicators with the heat kernel, forms per-cell
costs of assigning a fluid cell to liquid or vapor, and rebuilds the
liquid set from the M fluid cells with the smallest net cost, where M is
the fixed liquid cell count.  Selecting exactly M cells preserves the
liquid volume bit-exactly and realizes the constrained minimization of
the linearized interfacial energy.

Two equivalent score formulations are provided.  The two-field form
keeps the liquid and vapor costs separate:

    liquid_cost = (1/sqrt(dt)) G_dt * (gamma_lv chi_vapor + sum_m gamma_sl[m] chi_solid_m)
    vapor_cost  = (1/sqrt(dt)) G_dt * (gamma_lv chi_liquid + sum_m gamma_sv[m] chi_solid_m)

The combined form folds the solid interaction into Young-angle weights
and needs one convolution:

    combined = (gamma_lv/sqrt(dt)) G_dt * (chi_vapor - chi_liquid - sum_m cos(theta_m) chi_solid_m)

Both rank fluid cells identically up to roundoff (the combined field
equals liquid_cost - vapor_cost), so thresholding either gives the same
new liquid set away from ties.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import (
    GridSpec,
    IndicatorField,
    PhasePartition,
    ScalarField,
    SurfaceTensionSet,
)
from .spectral import KernelSpectrum, convolve_values, smoothed_occupancy

__all__ = [
    "ScorePair",
    "ThresholdResult",
    "ConvCache",
    "score_pair",
    "combined_score",
    "threshold_exact_volume",
    "mbo_step",
]


@dataclass(frozen=True, eq=False)
class ScorePair:
    """Per-cell costs of assigning a cell to liquid resp. vapor."""

    liquid_cost: ScalarField
    vapor_cost: ScalarField


@dataclass(frozen=True, eq=False)
class ThresholdResult:
    """Outcome of one exact-volume thresholding.

    delta is the midpoint between the largest selected and smallest
    rejected score, reported as a diagnostic: membership is decided by
    the selection itself, never by comparing against delta.
    """

    new_liquid: IndicatorField
    delta: float
    selected_cells: int


def score_pair(
    partition: PhasePartition, tensions: SurfaceTensionSet, spectrum: KernelSpectrum
) -> ScorePair:
    """Two-field scores from the raw surface tensions."""
    _check_materials(partition, tensions)
    scale = 1.0 / math.sqrt(spectrum.dt)
    liquid_w = (0.0, tensions.gamma_lv, *tensions.gamma_sl)
    vapor_w = (tensions.gamma_lv, 0.0, *tensions.gamma_sv)
    liquid_cost = smoothed_occupancy(partition, liquid_w, spectrum)
    vapor_cost = smoothed_occupancy(partition, vapor_w, spectrum)
    return ScorePair(
        liquid_cost=ScalarField(partition.grid, scale * liquid_cost.values),
        vapor_cost=ScalarField(partition.grid, scale * vapor_cost.values),
    )


def combined_score(
    partition: PhasePartition,
    theta: float | Sequence[float],
    gamma_lv: float,
    spectrum: KernelSpectrum,
) -> ScalarField:
    """Single-field score from Young angles, one convolution.

    theta is one Young angle per solid material (a scalar is broadcast).
    Thresholding this field below a shift reproduces the two-field
    dynamics because it equals liquid_cost - vapor_cost for any tension
    set realizing the same angles.
    """
    n = len(partition.solids)
    angles = [float(theta)] * n if np.isscalar(theta) else [float(a) for a in theta]
    if len(angles) != n:
        raise ValueError(f"expected {n} Young angles, got {len(angles)}")
    for a in angles:
        if not 0.0 < a < math.pi:
            raise ValueError(f"Young angles must lie strictly in (0, pi), got {a}")
    if not gamma_lv > 0.0:
        raise ValueError(f"gamma_lv must be positive, got {gamma_lv}")
    weights = (-1.0, 1.0, *(-math.cos(a) for a in angles))
    smoothed = smoothed_occupancy(partition, weights, spectrum)
    return ScalarField(partition.grid, (gamma_lv / math.sqrt(spectrum.dt)) * smoothed.values)


def _select_m_smallest(scores: np.ndarray, m: int) -> tuple[np.ndarray, float]:
    """Indices of the m smallest entries, ties broken by ascending index.

    Equivalent to the first m entries of a stable argsort, computed in
    O(n).  Also returns the diagnostic threshold shift.
    """
    n = scores.size
    if m == 0:
        return np.empty(0, dtype=np.intp), float(scores.min() - 1.0) if n else 0.0
    if m == n:
        return np.arange(n, dtype=np.intp), float(scores.max() + 1.0)
    part = np.partition(scores, (m - 1, m))
    g_m, g_next = float(part[m - 1]), float(part[m])
    delta = 0.5 * (g_m + g_next)
    strict = np.flatnonzero(scores < g_m)
    tied = np.flatnonzero(scores == g_m)
    # flatnonzero returns ascending indices, so taking a prefix of the
    # tied cells is exactly the ascending-linear-index tie-break
    sel = np.concatenate([strict, tied[: m - strict.size]])
    sel.sort()
    return sel, delta


def threshold_exact_volume(
    score: ScalarField, fluid_mask: IndicatorField, m: int
) -> ThresholdResult:
    """New liquid set: exactly the m fluid cells with the smallest scores.

    Ties are broken by ascending linear cell index (row-major over the
    full grid), making the selection deterministic.  Scores on solid
    cells are ignored.  m must lie in [0, number of fluid cells].
    """
    if score.grid != fluid_mask.grid:
        raise ValueError("score and fluid mask live on different grids")
    fluid_idx = np.flatnonzero(fluid_mask.values.ravel())
    n_fluid = fluid_idx.size
    if not 0 <= m <= n_fluid:
        raise ValueError(f"target cell count {m} outside [0, {n_fluid}]")
    g = score.values.ravel()[fluid_idx]
    if np.isnan(g).any():
        raise ValueError("scores contain NaN on fluid cells")
    local_sel, delta = _select_m_smallest(g, m)
    new = np.zeros(score.grid.nx * score.grid.ny, dtype=np.bool_)
    new[fluid_idx[local_sel]] = True
    return ThresholdResult(
        new_liquid=IndicatorField(score.grid, new.reshape(score.grid.shape)),
        delta=delta,
        selected_cells=m,
    )


class ConvCache:
    """Smoothed static indicators of a partition at one time step.

    The fluid mask and the solid materials never change during a run, so
    their convolutions can be shared across iterations at a fixed dt.
    """

    def __init__(self, partition: PhasePartition, spectrum: KernelSpectrum) -> None:
        self.spectrum = spectrum
        fluid = partition.liquid.values | partition.vapor.values
        self.fluid_conv = convolve_values(fluid.astype(np.float64), spectrum)
        self.solid_convs = tuple(
            convolve_values(s.values.astype(np.float64), spectrum) for s in partition.solids
        )


def net_score_values(
    liquid_conv: np.ndarray,
    cache: ConvCache,
    tensions: SurfaceTensionSet,
) -> np.ndarray:
    """Net cost liquid_cost - vapor_cost assembled from per-phase convolutions.

    Uses G*chi_vapor = G*chi_fluid - G*chi_liquid, so a fresh step needs
    only the convolution of the current liquid set beyond the cached
    static fields.  The same expression is evaluated whether or not the
    static convolutions came from a cache, keeping results bit-identical.
    """
    dt = cache.spectrum.dt
    acc = tensions.gamma_lv * (cache.fluid_conv - 2.0 * liquid_conv)
    for m, sc in enumerate(cache.solid_convs):
        w = tensions.gamma_sl[m] - tensions.gamma_sv[m]
        if w != 0.0:
            acc += w * sc
    return acc / math.sqrt(dt)


def _check_materials(partition: PhasePartition, tensions: SurfaceTensionSet) -> None:
    if tensions.n_materials != len(partition.solids):
        raise ValueError(
            f"tension set lists {tensions.n_materials} materials, "
            f"partition has {len(partition.solids)}"
        )


def mbo_step(
    partition: PhasePartition,
    tensions: SurfaceTensionSet,
    spectrum: KernelSpectrum,
    m: int,
    *,
    cache: ConvCache | None = None,
    liquid_conv: np.ndarray | None = None,
) -> tuple[PhasePartition, ThresholdResult]:
    """One threshold-dynamics step at fixed liquid cell count m.

    Thresholds the net score (liquid_cost - vapor_cost) over the fluid
    cells; solids pass through unchanged.  m is normally the current
    liquid count (volume preservation); quasi-static drivers pass an
    adjusted target when injecting or extracting volume.

    cache and liquid_conv let a solver loop reuse the smoothed static
    masks and the smoothed current liquid set; passing them changes
    nothing about the result.
    """
    _check_materials(partition, tensions)
    if partition.grid != spectrum.grid:
        raise ValueError("partition and kernel spectrum live on different grids")
    if cache is None:
        cache = ConvCache(partition, spectrum)
    if liquid_conv is None:
        liquid_conv = convolve_values(partition.liquid.values.astype(np.float64), spectrum)
    score = ScalarField(partition.grid, net_score_values(liquid_conv, cache, tensions))
    result = threshold_exact_volume(score, partition.fluid_mask(), m)
    return partition.with_liquid(result.new_liquid), result
