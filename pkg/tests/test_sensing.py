import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mwsense.condensate import CondensateParams, SpectralKernel, derive
from mwsense.cpw import CpwGeometry, make_mode
from mwsense.quadrature import QuadratureSpec
from mwsense.sensing import (MIN_SURFACE_GAP, REFERENCE_DETECTION, DetectionVolume, DistanceError, _density_prefactor,
                             atom_density, atom_rate, check_distance, detection_integral, monochromaticity_check,
                             outcoupling_eta, rate_prefactor, spectrum_convolved_rate)

HBAR = 1.054571817e-34
MU_B = 9.2740100783e-24
FAST = QuadratureSpec(rel_tol=1e-3)
SMALL_VOLUME = DetectionVolume(20e-6, 10e-6, 5e-6)


@pytest.fixture(scope="module")
def geom():
    return CpwGeometry(15e-6, 10e-6, 7.5e-6, 500e-6, 11.5)


@pytest.fixture(scope="module")
def mode(geom):
    return make_mode(geom, 2 * math.pi * 6.8354e9, 1.72e6)


@pytest.fixture(scope="module")
def cloud():
    return derive(CondensateParams(2e4, 5e-6))


@pytest.fixture(scope="module")
def fast_kernel(cloud):
    return SpectralKernel(cloud, 0.0, FAST.tightened(100))


def test_eta_fixture():
    expected = math.sqrt(3) * MU_B * 2.56e-9 * math.sqrt(2e4) / (4 * math.sqrt(2) * HBAR)
    assert outcoupling_eta(2.56e-9, 2e4) == pytest.approx(expected, rel=1e-14)
    assert outcoupling_eta(2.56e-9, 2e4) == pytest.approx(9748.369989991596, rel=1e-12)


@given(st.floats(0, 1e-6), st.floats(1, 1e8))
def test_eta_scalings(b_x, n0):
    eta = outcoupling_eta(b_x, n0)
    assert outcoupling_eta(b_x, 4 * n0) == pytest.approx(2 * eta, rel=1e-14)
    assert outcoupling_eta(2 * b_x, n0) == pytest.approx(2 * eta, rel=1e-14)
    assert outcoupling_eta(0.0, n0) == 0.0


def test_eta_matches_derived_per_tesla(cloud):
    assert outcoupling_eta(1.0, cloud.atom_number) == pytest.approx(cloud.eta_per_tesla, rel=1e-14)


def test_eta_rejects_negative():
    with pytest.raises(ValueError):
        outcoupling_eta(-1e-9, 10)
    with pytest.raises(ValueError):
        outcoupling_eta(1e-9, 0.5)


def test_density_zero_coupling(cloud):
    value, err = atom_density(cloud, 0.0, 0.0, np.array([0.0, 1e-6]), -65e-6)
    np.testing.assert_array_equal(value, 0.0)
    assert err == 0.0
    assert atom_density(cloud, 0.0, 0.0, 0.0, -65e-6)[0] == 0.0


def test_density_quadratic_in_eta(cloud):
    kernel = SpectralKernel(cloud, 0.0)
    one, _ = atom_density(cloud, 100.0, 0.0, 3e-6, -65e-6, kernel=kernel)
    three, _ = atom_density(cloud, 300.0, 0.0, 3e-6, -65e-6, kernel=kernel)
    assert one > 0
    assert three == pytest.approx(9 * one, rel=1e-14)


@pytest.mark.slow
def test_density_peaks_on_resonance(cloud):
    eta = outcoupling_eta(2.56e-9, cloud.atom_number)
    spec = QuadratureSpec(rel_tol=1e-4)
    centre, _ = atom_density(cloud, eta, 0.0, 0.0, -65e-6, spec)
    for delta in (2 * math.pi * 50e3, -2 * math.pi * 50e3, 2 * math.pi * 10e3, -2 * math.pi * 10e3):
        off, _ = atom_density(cloud, eta, delta, 0.0, -65e-6, spec)
        assert centre >= off


def test_density_rejects_mismatched_kernel(cloud, fast_kernel):
    with pytest.raises(ValueError):
        atom_density(cloud, 1.0, 5.0, 0.0, -65e-6, kernel=fast_kernel)


@given(st.floats(1, 1e7), st.floats(0.5e-6, 50e-6), st.floats(1e-12, 1e-6))
@settings(max_examples=100)
def test_count_routes_identity(n0, radius, b_x):
    d = derive(CondensateParams(n0, radius))
    eta = outcoupling_eta(b_x, n0)
    direct = rate_prefactor(d, b_x)
    via_density = _density_prefactor(d, eta) * d.density_scale
    assert via_density == pytest.approx(direct, rel=1e-10)


def test_detection_volume_validation(cloud):
    with pytest.raises(ValueError):
        DetectionVolume(65e-6, 0.0)
    with pytest.raises(ValueError):
        DetectionVolume(20e-6, 50e-6)
    with pytest.raises(ValueError):
        DetectionVolume(65e-6, 60e-6, -1.0)
    assert REFERENCE_DETECTION.top == pytest.approx(35e-6)
    assert REFERENCE_DETECTION.bottom == pytest.approx(95e-6)
    assert REFERENCE_DETECTION.radius_for(cloud) == pytest.approx(3 * cloud.a)
    with pytest.raises(ValueError, match="below the cloud"):
        DetectionVolume(6e-6, 4e-6).check_below(cloud)


def test_distance_constraint(cloud, geom, mode):
    check_distance(cloud, cloud.a + MIN_SURFACE_GAP)
    with pytest.raises(DistanceError):
        check_distance(cloud, 5e-6)
    with pytest.raises(DistanceError):
        atom_rate(cloud, geom, mode, 5e-6, SMALL_VOLUME, FAST, radius_report=False)


def test_distance_warning_when_not_enforced(cloud, geom, mode, fast_kernel):
    res = atom_rate(cloud, geom, mode, 5e-6, SMALL_VOLUME, FAST, enforce_distance=False, radius_report=False,
                    kernel=fast_kernel)
    assert res.atom_rate >= 0
    assert any("closer than" in w for w in res.warnings)


def test_atom_rate_result_fields(cloud, geom, mode, fast_kernel):
    d = 10e-6
    res = atom_rate(cloud, geom, mode, d, SMALL_VOLUME, FAST, kernel=fast_kernel, radius_report=False)
    assert res.warnings == ()
    assert res.converged
    assert res.b_x == res.b_attenuated
    assert res.b_attenuated == pytest.approx(math.exp(-math.pi * d / geom.half_width) * res.b_max_mode_volume)
    assert res.atom_rate == res.atom_rate_attenuated
    assert res.atom_rate_identity == pytest.approx(res.atom_rate, rel=1e-10)
    assert 0 < res.quadrature_error < 0.01 * res.atom_rate
    assert res.lateral_radius == 5e-6
    assert res.monochromatic_ratio == pytest.approx(cloud.bandwidth / mode.linewidth)


def test_atom_rate_quadratic_in_field(cloud, geom, mode, fast_kernel):
    one = atom_rate(cloud, geom, mode, 10e-6, SMALL_VOLUME, FAST, b_x=1e-9, kernel=fast_kernel, radius_report=False)
    two = atom_rate(cloud, geom, mode, 10e-6, SMALL_VOLUME, FAST, b_x=2e-9, kernel=fast_kernel, radius_report=False)
    assert two.atom_rate == pytest.approx(4 * one.atom_rate, rel=1e-12)
    assert two.atom_rate_attenuated == pytest.approx(one.atom_rate_attenuated, rel=1e-12)


def test_atom_rate_linear_in_atom_number(geom, mode):
    rates = []
    for n0 in (2e4, 5e4):
        d = derive(CondensateParams(n0, 5e-6))
        kernel = SpectralKernel(d, 0.0, FAST.tightened(100))
        rates.append(atom_rate(d, geom, mode, 10e-6, SMALL_VOLUME, FAST, b_x=2.56e-9, kernel=kernel,
                               radius_report=False).atom_rate)
    assert rates[1] / rates[0] == pytest.approx(2.5, rel=1e-12)


def test_atom_rate_distance_slope(cloud, geom, mode, fast_kernel):
    ds = np.array([8e-6, 15e-6, 30e-6])
    rates = np.array([atom_rate(cloud, geom, mode, d, SMALL_VOLUME, FAST, kernel=fast_kernel,
                                radius_report=False).atom_rate for d in ds])
    assert np.all(np.diff(rates) < 0)
    slopes = np.diff(np.log(rates)) / np.diff(ds)
    np.testing.assert_allclose(slopes, -2 * math.pi / geom.half_width, rtol=1e-9)


def test_atom_rate_monotone_in_radius(cloud, fast_kernel):
    _, _, _, cumulative = detection_integral(cloud, SMALL_VOLUME, FAST, kernel=fast_kernel,
                                             radii=[0.5 * cloud.a, 2 * cloud.a, 3 * cloud.a])
    values = [cumulative[r] for r in sorted(cumulative)]
    assert all(v2 >= v1 for v1, v2 in zip(values, values[1:]))


def test_atom_rate_monotone_in_height(cloud, fast_kernel):
    top = 15e-6
    values = []
    for height in (5e-6, 10e-6, 20e-6):
        vol = DetectionVolume(top + height / 2, height, 5e-6)
        values.append(detection_integral(cloud, vol, FAST, kernel=fast_kernel)[0])
    assert values[0] <= values[1] <= values[2]


def test_radius_report(cloud, geom, mode, fast_kernel):
    vol = DetectionVolume(20e-6, 10e-6)
    res = atom_rate(cloud, geom, mode, 10e-6, vol, FAST, kernel=fast_kernel)
    radii = [r for r, _ in res.radius_report]
    np.testing.assert_allclose(radii, [2 * cloud.a, 3 * cloud.a, 4 * cloud.a])
    counts = [c for _, c in res.radius_report]
    assert counts[1] == pytest.approx(res.atom_rate, rel=1e-14)
    assert counts[0] <= counts[1] <= counts[2]


def test_monochromaticity_reference_values(cloud, mode):
    assert cloud.bandwidth / (2 * math.pi) == pytest.approx(21e3, rel=0.03)
    assert mode.linewidth / (2 * math.pi) == pytest.approx(4.0e3, rel=0.02)
    assert monochromaticity_check(cloud, mode) == pytest.approx(5, rel=0.1)


def test_monochromaticity_limits(geom, cloud):
    lossless = make_mode(geom, 2 * math.pi * 6.8354e9)
    assert monochromaticity_check(cloud, lossless) == math.inf
    lossy = make_mode(geom, 2 * math.pi * 6.8354e9, 1e4)
    tiny = derive(CondensateParams(2e4, 1e-6))
    with pytest.warns(UserWarning, match="single-frequency"):
        ratio = monochromaticity_check(tiny, lossy)
    assert ratio < 2


def test_monochromaticity_warning_in_result(cloud, geom, fast_kernel):
    lossy = make_mode(geom, 2 * math.pi * 6.8354e9, 1e5)
    res = atom_rate(cloud, geom, lossy, 10e-6, SMALL_VOLUME, FAST, kernel=fast_kernel, radius_report=False)
    assert res.monochromatic_ratio < 2
    assert any("single-frequency" in w for w in res.warnings)


def _triangle(width, centre=0.0, area=1.0):
    half = width / 2
    return np.array([centre - half, centre, centre + half]), np.array([0.0, 2 * area / width, 0.0])


def test_narrow_spectrum_reduces_to_density(cloud):
    eta = 1000.0
    direct, _ = atom_density(cloud, eta, 0.0, 0.0, -65e-6)
    conv, err, converged = spectrum_convolved_rate(cloud, eta, 0.0, _triangle(2 * math.pi), 0.0, -65e-6)
    assert converged
    assert conv == pytest.approx(direct, rel=1e-3)
    assert err < 1e-3 * conv


@pytest.mark.slow
def test_spectrum_linearity_and_positivity(cloud):
    spectrum = _triangle(2 * math.pi * 2e3, centre=2 * math.pi * 1e3)
    fast = QuadratureSpec(rel_tol=1e-4)
    base, _, _ = spectrum_convolved_rate(cloud, 1000.0, 0.0, spectrum, 2e-6, -50e-6, FAST, fast)
    scaled, _, _ = spectrum_convolved_rate(cloud, 1000.0, 0.0, (spectrum[0], 3.5 * spectrum[1]), 2e-6, -50e-6,
                                           FAST, fast)
    assert base > 0
    assert scaled == pytest.approx(3.5 * base, rel=1e-12)


def test_spectrum_validation(cloud):
    with pytest.raises(ValueError, match="non-negative"):
        spectrum_convolved_rate(cloud, 1.0, 0.0, ([0.0, 1.0], [1.0, -0.1]), 0.0, -65e-6)
    with pytest.raises(ValueError, match="increasing"):
        spectrum_convolved_rate(cloud, 1.0, 0.0, ([1.0, 0.0], [1.0, 1.0]), 0.0, -65e-6)
    with pytest.raises(ValueError):
        spectrum_convolved_rate(cloud, 1.0, 0.0, ([0.0], [1.0]), 0.0, -65e-6)
    assert spectrum_convolved_rate(cloud, 1.0, 0.0, ([0.0, 1.0], [0.0, 0.0]), 0.0, -65e-6) == (0.0, 0.0, True)


@pytest.mark.slow
def test_flat_spectrum_against_riemann_sum(cloud):
    half = cloud.bandwidth / 2
    level = 1 / (2 * half)
    eta = 1000.0
    point = QuadratureSpec(rel_tol=1e-4)
    conv, _, _ = spectrum_convolved_rate(cloud, eta, 0.0, ([-half, half], [level, level]), 0.0, -65e-6,
                                         QuadratureSpec(rel_tol=1e-4), point)
    # dense midpoint sum over the band, one independent kernel per frequency
    n = 100
    edges = np.linspace(-half, half, n + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    # D(omega - 0) is the density at detuning -omega
    samples = [atom_density(cloud, eta, -w, 0.0, -65e-6, point)[0] for w in mids]
    riemann = float(np.sum(samples) * (edges[1] - edges[0]) * level)
    assert conv == pytest.approx(riemann, rel=0.01)


def test_atom_rate_nested_route_agrees(cloud, geom, mode, fast_kernel):
    reduced = atom_rate(cloud, geom, mode, 10e-6, SMALL_VOLUME, FAST, kernel=fast_kernel, radius_report=False)
    nested_kernel = SpectralKernel(cloud, 0.0, FAST.tightened(100), method="nested")
    nested = atom_rate(cloud, geom, mode, 10e-6, SMALL_VOLUME, FAST, kernel=nested_kernel, radius_report=False)
    assert nested.atom_rate == pytest.approx(reduced.atom_rate, rel=2 * FAST.rel_tol)


def test_result_is_frozen(cloud, geom, mode, fast_kernel):
    res = atom_rate(cloud, geom, mode, 10e-6, SMALL_VOLUME, FAST, kernel=fast_kernel, radius_report=False)
    with pytest.raises(dataclasses.FrozenInstanceError):
        res.atom_rate = 0.0
