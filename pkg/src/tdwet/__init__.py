"""Threshold dynamics for wetting on structured solid surfaces.

Volume-preserving interface evolution of a liquid/vapor/solid partition
on a periodic rectangle: Gaussian smoothing by FFT, exact-count
thresholding, interfacial energy estimates, equilibrium and
time-refined solvers, and quasi-static contact-angle hysteresis sweeps.
"""
from .grid import (
    GridSpec,
    IndicatorField,
    PhasePartition,
    ScalarField,
    SurfaceTensionSet,
    disk_indicator,
    flat_solid,
    half_disk_indicator,
    indicator,
    make_grid,
    make_partition,
    patterned_solid,
    sawtooth_solid,
    scalar_field,
    symmetric_difference_area,
    volume,
)
from .spectral import KernelSpectrum, build_kernel_spectrum, convolve, smoothed_occupancy
from .dynamics import (
    ConvCache,
    ScorePair,
    ThresholdResult,
    combined_score,
    mbo_step,
    score_pair,
    threshold_exact_volume,
)
from .energy import EnergyBreakdown, approx_energy, linearized_value, perimeter_estimate
from .solver import (
    RunTrace,
    SolverConfig,
    SpectraCache,
    StepRecord,
    evolve_fixed_steps,
    run,
    run_to_equilibrium,
    run_with_time_refinement,
)
from .measure import (
    AnalyticRegion,
    ContactMeasurement,
    DropDetachedError,
    ErrorNorms,
    InterfaceCurve,
    MeasurementError,
    error_norms,
    extract_interface,
    fit_contact,
    polyline_hausdorff,
)
from .experiments import (
    CapShape,
    HysteresisResult,
    HysteresisSchedule,
    cap_region,
    disk_region,
    patterned_wetting_setup,
    run_drop_spreading,
    run_hysteresis,
    run_two_circles,
    run_two_semicircles,
    sawtooth_wetting_setup,
    spherical_cap_shape,
    two_circle_mcf_oracle,
)

__version__ = "0.1.0"
