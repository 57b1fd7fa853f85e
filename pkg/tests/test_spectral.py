import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tdwet.grid import GridSpec, flat_solid, half_disk_indicator, indicator, make_grid, make_partition, scalar_field
from tdwet.spectral import KernelSpectrum, build_kernel_spectrum, convolve, convolve_values, smoothed_occupancy

import oracles


def test_spectrum_basics():
    g = make_grid(32, 32, -math.pi / 2, -math.pi / 2, math.pi, math.pi)
    spec = build_kernel_spectrum(g, 0.01)
    m = spec.multipliers
    assert m[0, 0] == 1.0
    assert ((m >= 0.0) & (m <= 1.0)).all()
    # even symmetry: entry at (-ky, -kx) equals entry at (ky, kx)
    iy = (-np.arange(32)) % 32
    ix = (-np.arange(32)) % 32
    np.testing.assert_array_equal(m, m[np.ix_(iy, ix)])
    # on lx = pi the (kx, ky) = (1, 0) mode has |xi|^2 = 4
    assert m[0, 1] == pytest.approx(math.exp(-0.01 * 4.0), rel=1e-13)
    with pytest.raises(ValueError, match="time step must be positive"):
        build_kernel_spectrum(g, 0.0)


def test_spectrum_validation():
    g = make_grid(8, 8, 0.0, 0.0, 1.0, 1.0)
    bad = np.full((8, 8), 0.5)
    with pytest.raises(ValueError, match="unit zero mode"):
        KernelSpectrum(g, 0.01, bad)


def test_constant_preserved():
    g = make_grid(64, 32, 0.0, 0.0, 2.0, 1.0)
    spec = build_kernel_spectrum(g, 3.0e-4)
    out = convolve_values(np.full(g.shape, 3.7), spec)
    np.testing.assert_allclose(out, 3.7, rtol=1e-12)


def test_cosine_eigenfunction():
    g = make_grid(64, 64, -math.pi / 2, -math.pi / 2, math.pi, math.pi)
    dt = 0.02
    x, _ = g.center_mesh()
    f = np.broadcast_to(np.cos(2.0 * x), g.shape)
    out = convolve_values(f, build_kernel_spectrum(g, dt))
    np.testing.assert_allclose(out, math.exp(-4.0 * dt) * f, atol=1e-13)


def test_grid_mismatch_rejected():
    g1 = make_grid(16, 16, 0.0, 0.0, 1.0, 1.0)
    g2 = make_grid(16, 16, 0.0, 0.0, 2.0, 2.0)
    spec = build_kernel_spectrum(g2, 1e-3)
    with pytest.raises(ValueError, match="grid"):
        convolve(scalar_field(g1, np.zeros(g1.shape)), spec)


@settings(max_examples=25)
@given(seed=st.integers(0, 2**32 - 1), fac=st.floats(2.5, 200.0))
def test_convolution_invariants(seed, fac):
    """Mean preservation, maximum principle, semigroup, linearity.

    dt >= 2.5 dx^2 keeps the Nyquist multiplier below ~2e-11, so the
    band-limited wrapped Gaussian stays positive to well under the 1e-10
    maximum-principle slack.
    """
    n = 32
    g = make_grid(n, n, 0.0, 0.0, 1.0, 1.0)
    dt = fac * g.dx * g.dx
    spec = build_kernel_spectrum(g, dt)
    r = np.random.default_rng(seed)
    f = r.random((n, n))
    out = convolve_values(f, spec)
    assert abs(out.mean() - f.mean()) <= 1e-12 * abs(f.mean())
    assert out.min() >= f.min() - 1e-10
    assert out.max() <= f.max() + 1e-10

    half = build_kernel_spectrum(g, 0.5 * dt)
    twice = convolve_values(convolve_values(f, half), half)
    np.testing.assert_allclose(twice, out, atol=1e-10)

    h = r.random((n, n))
    lin = convolve_values(2.0 * f - 3.0 * h, spec)
    np.testing.assert_allclose(lin, 2.0 * out - 3.0 * convolve_values(h, spec), atol=1e-12)


def test_far_field_locality():
    # supports separated by > 10 sqrt(dt): leakage below 1e-10
    g = make_grid(256, 256, 0.0, 0.0, 1.0, 1.0)
    dt = 4.0 * g.dx * g.dx  # 10 sqrt(dt) = 0.03125
    a = np.zeros(g.shape, dtype=bool)
    b = np.zeros(g.shape, dtype=bool)
    a[:, 10:20] = True
    b[:, 60:70] = True  # gap 40 cells = 0.15625 > 10 sqrt(dt)
    out = convolve_values(a.astype(float), build_kernel_spectrum(g, dt))
    assert np.abs(out[b]).max() <= 1e-10


def test_half_plane_profile_matches_erfc():
    """Strip smoothing vs the 1-D closed form.

    The cell-sampled step makes the discrete convolution a midpoint rule:
    it deviates from 1/2 erfc(d/(2 sqrt(dt))) by the Euler-Maclaurin term
    (dx^2/24) d^2/dx^2 of the profile, max (dx^2/24) 0.121/dt.  Removing
    that term leaves O(dx^4/dt^2).  Wrap-around is < 1e-12 because every
    relevant distance exceeds 10 sqrt(dt).
    """
    n = 256
    g = make_grid(n, n, 0.0, 0.0, 1.0, 1.0)
    dx = g.dx
    x = g.x_centers()
    a, b = 0.25, 0.625  # cell-aligned raster edges
    strip = np.broadcast_to((x > a) & (x < b), g.shape)
    for fac in (4.0, 16.0):
        dt = fac * dx * dx
        row = convolve_values(strip.astype(float), build_kernel_spectrum(g, dt))[0]
        ref = oracles.half_plane_profile(x - b, dt) - oracles.half_plane_profile(x - a, dt)
        em_bound = (dx * dx / 24.0) * 0.121 / dt
        assert np.abs(row - ref).max() <= 1.05 * em_bound

        gauss = np.exp(-((x - b) ** 2) / (4 * dt)) / (2 * math.sqrt(math.pi * dt))
        gauss_a = np.exp(-((x - a) ** 2) / (4 * dt)) / (2 * math.sqrt(math.pi * dt))
        d2 = -((x - b) / (2 * dt)) * gauss + ((x - a) / (2 * dt)) * gauss_a
        corrected = ref + (dx * dx / 24.0) * d2
        assert np.abs(row - corrected).max() <= 3.0e-5 / fac**2 * 16.0


def test_quadrature_oracle_agreement(rng):
    n = 16
    g = make_grid(n, n, 0.0, 0.0, 1.0, 1.0)
    dt = 4.0 * g.dx * g.dx
    field = (rng.random((n, n)) < 0.5).astype(float)
    out = convolve_values(field, build_kernel_spectrum(g, dt))
    xs = g.x_centers()
    ys = g.y_centers()
    worst = 0.0
    for j in range(n):
        for i in range(n):
            q = oracles.quadrature_convolution(field, dt, (xs[i], ys[j]))
            worst = max(worst, abs(out[j, i] - q))
    assert worst < 1e-8


def test_smoothed_occupancy_linearity():
    g = make_grid(32, 32, 0.0, 0.0, 1.0, 1.0)
    solid = flat_solid(g, 0.25)
    liquid = half_disk_indicator(g, 0.5, 0.25, 0.2, 0.25)
    part = make_partition(liquid, solids=(solid,))
    spec = build_kernel_spectrum(g, 1e-3)
    w = (-1.0, 1.0, -0.5)
    out = smoothed_occupancy(part, w, spec)
    manual = (
        -convolve_values(part.liquid.values.astype(float), spec)
        + convolve_values(part.vapor.values.astype(float), spec)
        - 0.5 * convolve_values(solid.values.astype(float), spec)
    )
    np.testing.assert_allclose(out.values, manual, atol=1e-12)
    zero = smoothed_occupancy(part, (0.0, 0.0, 0.0), spec)
    np.testing.assert_array_equal(zero.values, 0.0)
    only = smoothed_occupancy(part, (1.0, 0.0, 0.0), spec)
    np.testing.assert_allclose(
        only.values, convolve_values(part.liquid.values.astype(float), spec), atol=1e-14
    )
    with pytest.raises(ValueError, match="weight"):
        smoothed_occupancy(part, (1.0, 0.0), spec)


def test_convolve_accepts_indicator():
    g = make_grid(16, 16, 0.0, 0.0, 1.0, 1.0)
    u = indicator(g, np.eye(16))
    out = convolve(u, build_kernel_spectrum(g, 1e-2))
    assert out.values.dtype == np.float64
    assert out.grid == g
