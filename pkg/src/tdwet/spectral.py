"""Gaussian smoothing on the torus, built directly in frequency space.

The heat kernel at time dt acts on a periodic field by multiplying its
Fourier coefficients with exp(-dt * |xi|^2), xi = 2 pi k / l for signed
integer frequencies k.  No reflective or zero-padded domain extension is
performed anywhere: the computational rectangle itself is the torus, and
configurations are expected to keep interfaces away from the outer
boundary (the kernel is negligible beyond 10 sqrt(dt)).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .grid import GridSpec, IndicatorField, PhasePartition, ScalarField

__all__ = ["KernelSpectrum", "build_kernel_spectrum", "convolve", "smoothed_occupancy"]

# Residual imaginary parts of an inverse transform of real data must stay
# below this fraction of the field's max magnitude.
_IMAG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KernelSpectrum:
    """Fourier multipliers of the heat kernel at a fixed time step."""

    grid: GridSpec
    dt: float
    multipliers: np.ndarray

    def __post_init__(self) -> None:
        m = self.multipliers
        if m.shape != self.grid.shape:
            raise ValueError("multiplier array does not match the grid")
        # far modes may underflow exp(-dt |xi|^2) to exactly 0.0; that is fine
        if m[0, 0] != 1.0 or not ((m >= 0.0) & (m <= 1.0)).all():
            raise ValueError("kernel multipliers must lie in [0, 1] with unit zero mode")
        m.setflags(write=False)


def build_kernel_spectrum(grid: GridSpec, dt: float) -> KernelSpectrum:
    """Multipliers exp(-dt (xi_x^2 + xi_y^2)) on the fft2 frequency layout."""
    if not dt > 0.0:
        raise ValueError(f"time step must be positive, got {dt}")
    xi_x = 2.0 * np.pi * scipy.fft.fftfreq(grid.nx, d=1.0 / grid.nx) / grid.lx
    xi_y = 2.0 * np.pi * scipy.fft.fftfreq(grid.ny, d=1.0 / grid.ny) / grid.ly
    mult = np.exp(-dt * (xi_y[:, None] ** 2 + xi_x[None, :] ** 2))
    return KernelSpectrum(grid=grid, dt=float(dt), multipliers=mult)


def convolve_values(values: np.ndarray, spectrum: KernelSpectrum) -> np.ndarray:
    """Heat-kernel smoothing of a raw (ny, nx) float array.

    Internal hot path shared by the typed wrapper and the solver loop.
    Asserts that the imaginary residue of the inverse transform is below
    1e-10 of the input's max magnitude.
    """
    out = scipy.fft.ifft2(scipy.fft.fft2(values) * spectrum.multipliers)
    scale = float(np.max(np.abs(values), initial=0.0))
    imag_max = float(np.max(np.abs(out.imag), initial=0.0))
    if imag_max > _IMAG_TOL * max(scale, 1e-300):
        raise FloatingPointError(
            f"imaginary residue {imag_max:g} exceeds {_IMAG_TOL:g} of field magnitude {scale:g}"
        )
    return np.ascontiguousarray(out.real)


def convolve(field: ScalarField | IndicatorField, spectrum: KernelSpectrum) -> ScalarField:
    """Smooth a field with the heat kernel of the spectrum's time step.

    Preserves the mean exactly up to roundoff (the zero mode multiplier
    is exactly one) and never amplifies the range (all multipliers lie
    in (0, 1]).
    """
    if field.grid != spectrum.grid:
        raise ValueError("field and kernel spectrum live on different grids")
    values = field.values.astype(np.float64) if field.values.dtype == np.bool_ else field.values
    return ScalarField(spectrum.grid, convolve_values(values, spectrum))


def smoothed_occupancy(
    partition: PhasePartition,
    weights: tuple[float, ...] | list[float],
    spectrum: KernelSpectrum,
) -> ScalarField:
    """Smooth a weighted sum of phase indicators in a single transform pass.

    weights are per phase in (liquid, vapor, solid_0, solid_1, ...)
    order.  The weighted occupancy field is assembled first and then
    convolved once, which is linear-equivalent to weighting the per-phase
    convolutions.
    """
    phases = (partition.liquid, partition.vapor, *partition.solids)
    if len(weights) != len(phases):
        raise ValueError(f"expected {len(phases)} weights, got {len(weights)}")
    if partition.grid != spectrum.grid:
        raise ValueError("partition and kernel spectrum live on different grids")
    acc = np.zeros(partition.grid.shape, dtype=np.float64)
    for w, phase in zip(weights, phases):
        if w != 0.0:
            acc += float(w) * phase.values
    return ScalarField(spectrum.grid, convolve_values(acc, spectrum))
