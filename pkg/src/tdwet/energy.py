"""Kernel-based interfacial energy of a phase partition.

The energy at time step dt sums, over each pair of phases in contact,
the overlap of one indicator with the smoothed other:

    E_dt = (gamma_lv/sqrt(dt)) int chi_liquid G_dt * chi_vapor
         + sum_m (gamma_sl[m]/sqrt(dt)) int chi_liquid G_dt * chi_solid_m
         + sum_m (gamma_sv[m]/sqrt(dt)) int chi_vapor  G_dt * chi_solid_m

Integrals are cell sums times the cell area.  As dt -> 0 each term
approaches 1/sqrt(pi) times the corresponding weighted interface length,
so sqrt(pi) * lv_term / gamma_lv is a calibrated perimeter estimate.
Threshold dynamics never increases this energy at fixed dt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import IndicatorField, PhasePartition, SurfaceTensionSet
from .spectral import KernelSpectrum, convolve_values
from .dynamics import ConvCache, _check_materials

__all__ = ["EnergyBreakdown", "approx_energy", "linearized_value", "perimeter_estimate"]


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy terms by interface type at one time step."""

    lv_term: float
    sl_term: float
    sv_term: float
    total: float
    dt: float


def _energy_from_convs(
    partition: PhasePartition,
    tensions: SurfaceTensionSet,
    liquid_conv: np.ndarray,
    cache: ConvCache,
) -> EnergyBreakdown:
    dt = cache.spectrum.dt
    quad = partition.grid.cell_area / math.sqrt(dt)
    liquid = partition.liquid.values
    vapor = partition.vapor.values
    # G*chi_vapor = G*chi_fluid - G*chi_liquid by linearity
    vapor_conv = cache.fluid_conv - liquid_conv
    lv = tensions.gamma_lv * quad * float(np.sum(vapor_conv, where=liquid))
    sl = 0.0
    sv = 0.0
    for m, sc in enumerate(cache.solid_convs):
        sl += tensions.gamma_sl[m] * quad * float(np.sum(sc, where=liquid))
        sv += tensions.gamma_sv[m] * quad * float(np.sum(sc, where=vapor))
    return EnergyBreakdown(lv_term=lv, sl_term=sl, sv_term=sv, total=lv + sl + sv, dt=dt)


def approx_energy(
    partition: PhasePartition,
    tensions: SurfaceTensionSet,
    spectrum: KernelSpectrum,
    *,
    cache: ConvCache | None = None,
    liquid_conv: np.ndarray | None = None,
) -> EnergyBreakdown:
    """Energy of a partition, one convolution per distinct phase.

    The vapor convolution is derived from the fluid-mask and liquid
    convolutions by linearity.  cache and liquid_conv are optional
    precomputed smoothings (see dynamics.ConvCache); supplying them does
    not change the result.
    """
    _check_materials(partition, tensions)
    if partition.grid != spectrum.grid:
        raise ValueError("partition and kernel spectrum live on different grids")
    if cache is None:
        cache = ConvCache(partition, spectrum)
    if liquid_conv is None:
        liquid_conv = convolve_values(partition.liquid.values.astype(np.float64), spectrum)
    return _energy_from_convs(partition, tensions, liquid_conv, cache)


def perimeter_estimate(breakdown: EnergyBreakdown, gamma_lv: float) -> float:
    """Calibrated liquid-vapor interface length: sqrt(pi) * lv_term / gamma_lv."""
    if not gamma_lv > 0.0:
        raise ValueError(f"gamma_lv must be positive, got {gamma_lv}")
    return math.sqrt(math.pi) * breakdown.lv_term / gamma_lv


def linearized_value(
    cand_liquid: IndicatorField,
    cand_vapor: IndicatorField,
    reference: PhasePartition,
    tensions: SurfaceTensionSet,
    spectrum: KernelSpectrum,
) -> float:
    """Linearized energy of a candidate fluid split around a reference state.

    Evaluates

        (1/sqrt(dt)) [ int u1 G*(gamma_lv u2_ref + sum_m gamma_sl[m] chi_solid_m)
                     + int u2 G*(gamma_lv u1_ref + sum_m gamma_sv[m] chi_solid_m) ]

    for candidate indicators (u1, u2).  Threshold dynamics minimizes this
    value over all fluid splits with the same liquid cell count, which is
    what makes the energy non-increasing.
    """
    _check_materials(reference, tensions)
    grid = reference.grid
    if cand_liquid.grid != grid or cand_vapor.grid != grid:
        raise ValueError("candidate fields must live on the reference grid")
    solid = reference.solid_mask().values
    if ((cand_liquid.values | cand_vapor.values) & solid).any():
        raise ValueError("candidate fluid phases must vanish on solid cells")
    if (cand_liquid.values & cand_vapor.values).any():
        raise ValueError("candidate liquid and vapor must not overlap")

    w_liq = tensions.gamma_lv * reference.vapor.values.astype(np.float64)
    w_vap = tensions.gamma_lv * reference.liquid.values.astype(np.float64)
    for m, s in enumerate(reference.solids):
        w_liq += tensions.gamma_sl[m] * s.values
        w_vap += tensions.gamma_sv[m] * s.values
    quad = grid.cell_area / math.sqrt(spectrum.dt)
    liquid_cost = convolve_values(w_liq, spectrum)
    vapor_cost = convolve_values(w_vap, spectrum)
    return quad * (
        float(np.sum(liquid_cost, where=cand_liquid.values))
        + float(np.sum(vapor_cost, where=cand_vapor.values))
    )
