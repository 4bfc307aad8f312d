"""Single-photon detection chain: field at the cloud, outcoupling, atom counts.

The count ``atom_rate`` integrates the outcoupled density over a cylindrical
detection region below the condensate. The density is stationary while the
cavity holds one photon; following the usual reading it is quoted as atoms per
unit time per cavity photon.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import trapezoid

from .condensate import CondensateDerived, SpectralKernel
from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .cpw import CpwGeometry, CpwMode, b_at_condensate, b_max_cqed, b_max_single_photon
from .quadrature import QuadratureSpec, integrate_1d, integrate_cylindrical_volume

#: Closest approach of the cloud surface to the chip (van der Waals limit), m.
MIN_SURFACE_GAP = 1e-6
#: Bandwidth/linewidth ratio below which the single-frequency drive is questionable.
MONOCHROMATIC_MIN_RATIO = 2.0
#: Radii, in cloud radii, at which the lateral convergence of the count is reported.
REPORT_RADII = (2.0, 3.0, 4.0)
DEFAULT_RADIUS_FACTOR = 3.0
IDENTITY_TOLERANCE = 1e-10

SENSING_SPEC = QuadratureSpec(rel_tol=1e-4)


class DistanceError(ValueError):
    """The cloud would sit closer to the chip than the van der Waals limit allows."""


@dataclass(frozen=True)
class DetectionVolume:
    """Cylinder coaxial with the vertical through the cloud centre.

    Attributes
    ----------
    center_depth : float
        Distance of the cylinder's centre below the cloud centre (m).
    height : float
        Vertical extent (m).
    lateral_radius : float or None
        Radius (m); ``None`` means three cloud radii.
    """

    center_depth: float
    height: float
    lateral_radius: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.height) and self.height > 0):
            raise ValueError(f"detection height must be positive, got {self.height!r}")
        if not math.isfinite(self.center_depth) or self.center_depth - self.height / 2 <= 0:
            raise ValueError("detection volume must lie entirely below the cloud centre")
        if self.lateral_radius is not None and not (
                math.isfinite(self.lateral_radius) and self.lateral_radius > 0):
            raise ValueError(f"lateral_radius must be positive, got {self.lateral_radius!r}")

    @property
    def top(self) -> float:
        """Depth of the upper face below the cloud centre."""
        return self.center_depth - self.height / 2

    @property
    def bottom(self) -> float:
        return self.center_depth + self.height / 2

    def radius_for(self, derived: CondensateDerived) -> float:
        if self.lateral_radius is None:
            return DEFAULT_RADIUS_FACTOR * derived.a
        return self.lateral_radius

    def check_below(self, derived: CondensateDerived) -> None:
        if self.top <= derived.a:
            raise ValueError(
                f"detection volume top ({self.top:.3g} m below centre) must lie below the cloud "
                f"(radius {derived.a:.3g} m)")


REFERENCE_DETECTION = DetectionVolume(center_depth=65e-6, height=60e-6)


@dataclass(frozen=True)
class SensingResult:
    """Outcome of the detection-volume integral for one cavity photon.

    ``atom_rate`` uses ``b_x``; ``atom_rate_attenuated`` uses the field
    decayed over the chip distance, so both readings of the drive are
    available side by side. ``radius_report`` pairs lateral radii (m) with
    the count inside them.
    """

    b_x: float
    eta: float
    atom_rate: float
    quadrature_error: float
    monochromatic_ratio: float
    warnings: tuple[str, ...]
    converged: bool
    atom_rate_identity: float
    detection_integral: float
    detection_integral_error: float
    b_max_mode_volume: float
    b_max_cqed: float
    b_attenuated: float
    atom_rate_attenuated: float
    lateral_radius: float
    radius_report: tuple[tuple[float, float], ...] = field(default=())


def outcoupling_eta(b_x: float, atom_number: float,
                    constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Collective coupling sqrt(3) mu_B B_x sqrt(N0) / (4 sqrt(2) hbar) in rad/s."""
    if not (math.isfinite(b_x) and b_x >= 0):
        raise ValueError(f"b_x must be non-negative, got {b_x!r}")
    if not atom_number >= 1:
        raise ValueError("atom_number must be >= 1")
    return math.sqrt(3) * constants.mu_bohr * b_x * math.sqrt(atom_number) / (4 * math.sqrt(2) * constants.hbar)


def _density_prefactor(derived: CondensateDerived, eta: float) -> float:
    return (derived.hbar * eta / derived.airy_energy) ** 2


def _kernel_spec(spec: QuadratureSpec) -> QuadratureSpec:
    # the wave-number integral behind each point sits two levels below the volume integral
    return spec.tightened(100.0)


def atom_density(derived: CondensateDerived, eta: float, delta: float, r_perp, y,
                 spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-6),
                 kernel: SpectralKernel | None = None):
    """Outcoupled density |hbar eta / (M g l0)|^2 D(-delta, r) in 1/m^3.

    Returns ``(density, error)``; both broadcast over ``r_perp`` and ``y``.
    """
    if eta == 0:
        shape = np.broadcast(np.asarray(r_perp), np.asarray(y)).shape
        zero = np.zeros(shape)
        return (zero.item() if zero.ndim == 0 else zero), 0.0
    if kernel is None:
        kernel = SpectralKernel(derived, -delta, spec)
    elif kernel.omega_minus_delta != -delta:
        raise ValueError("kernel was built for a different detuning")
    d_bar, err, _ = kernel.dbar(r_perp, y)
    scale = _density_prefactor(derived, eta) * derived.density_scale
    return scale * d_bar, scale * err


def monochromaticity_check(derived: CondensateDerived, mode: CpwMode) -> float:
    """Ratio of the cloud's transition bandwidth 2 M g a / hbar to the cavity linewidth.

    Warns when below :data:`MONOCHROMATIC_MIN_RATIO`.
    """
    ratio = derived.bandwidth / mode.linewidth if mode.linewidth > 0 else math.inf
    if ratio < MONOCHROMATIC_MIN_RATIO:
        warnings.warn(_mono_note(ratio), stacklevel=2)
    return ratio


def _mono_note(ratio):
    return (f"cloud bandwidth is only {ratio:.3g} cavity linewidths; "
            "the single-frequency drive approximation is questionable")


def check_distance(derived: CondensateDerived, d: float) -> None:
    """Raise :class:`DistanceError` unless d >= a + MIN_SURFACE_GAP."""
    if not d >= derived.a + MIN_SURFACE_GAP:
        raise DistanceError(
            f"cloud centre at d = {d:.4g} m is closer than a + {MIN_SURFACE_GAP:g} m "
            f"= {derived.a + MIN_SURFACE_GAP:.4g} m to the chip")


def detection_integral(derived: CondensateDerived, volume: DetectionVolume,
                       spec: QuadratureSpec = SENSING_SPEC, kernel: SpectralKernel | None = None,
                       radii=None, spectral_method: str = "reduced"):
    """int D_bar d^3r over the detection cylinder (m^3), on resonance.

    Integrates over annuli split at ``radii`` (and the volume's own radius)
    and returns ``(value, error, converged, cumulative)`` where
    ``cumulative`` maps each split radius to the integral inside it.
    """
    volume.check_below(derived)
    if kernel is None:
        kernel = SpectralKernel(derived, 0.0, _kernel_spec(spec), method=spectral_method)
    a = derived.a
    radius = volume.radius_for(derived)
    edges = sorted({radius, *(radii or ())})
    point_err = [0.0]

    def d_bar(rs, ys):
        value, err, _ = kernel.dbar(rs * a, ys * a)
        point_err[0] = max(point_err[0], err)
        return value

    # scaled coordinates keep the absolute tolerance meaningful
    y_lo, y_hi = -volume.bottom / a, -volume.top / a
    total, error, converged = 0.0, 0.0, True
    cumulative = {}
    inner = 0.0
    for edge in edges:
        res = integrate_cylindrical_volume(d_bar, edge / a, y_lo, y_hi, spec, r_min=inner / a)
        total += res.value
        error += res.error_estimate
        converged &= res.converged
        cumulative[edge] = (total * a ** 3, error)
        inner = edge
    value, error = cumulative[radius]
    error += point_err[0] * math.pi * (radius / a) ** 2 * (y_hi - y_lo)
    return value, error * a ** 3, bool(converged), {r: v for r, (v, _) in cumulative.items()}


def rate_prefactor(derived: CondensateDerived, b_x: float,
                   constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """(N0 / V) (sqrt(15) mu_B / (8 M g l0))^2 B_x^2, multiplying int D_bar d^3r."""
    coupling = math.sqrt(15) * constants.mu_bohr / (8 * derived.airy_energy)
    return derived.atom_number / derived.v_bec * coupling ** 2 * b_x ** 2


def atom_rate(derived: CondensateDerived, geom: CpwGeometry, mode: CpwMode, d: float,
              volume: DetectionVolume = REFERENCE_DETECTION, spec: QuadratureSpec = SENSING_SPEC,
              b_x: float | None = None, enforce_distance: bool = True, radius_report: bool = True,
              constants: PhysicalConstants = DEFAULT_CONSTANTS, kernel: SpectralKernel | None = None,
              spectral_method: str = "reduced") -> SensingResult:
    """Atoms outcoupled into the detection volume per cavity photon, on resonance.

    Parameters
    ----------
    d : float
        Distance of the cloud centre below the chip surface (m).
    b_x : float, optional
        Drive amplitude at the cloud (T). Defaults to the single-photon
        field attenuated over ``d``.
    enforce_distance : bool
        If False a too-close cloud is only reported in ``warnings``.
    radius_report : bool
        Also integrate out to 2a, 3a and 4a.

    Raises
    ------
    DistanceError
        If ``d < a + 1 um`` and ``enforce_distance`` is set.
    """
    notes = list(derived.warnings)
    try:
        check_distance(derived, d)
    except DistanceError as exc:
        if enforce_distance:
            raise
        notes.append(str(exc))
    b_single = b_max_single_photon(geom, mode, constants)
    b_circuit = b_max_cqed(geom, mode, constants)
    b_att = b_at_condensate(geom, mode, d, constants)
    if b_x is None:
        b_x = b_att
    eta = outcoupling_eta(b_x, derived.atom_number, constants)

    radii = [f * derived.a for f in REPORT_RADII] if radius_report else None
    integral, integral_err, converged, cumulative = detection_integral(
        derived, volume, spec, kernel=kernel, radii=radii, spectral_method=spectral_method)
    radius = volume.radius_for(derived)

    pref = rate_prefactor(derived, b_x, constants)
    rate = pref * integral
    # same count from the density route |hbar eta / M g l0|^2 int D
    identity = _density_prefactor(derived, eta) * derived.density_scale * integral
    if rate > 0 and abs(identity - rate) > IDENTITY_TOLERANCE * rate:
        raise RuntimeError(f"count routes disagree: {rate!r} vs {identity!r}")
    if not converged:
        notes.append("detection integral did not reach its tolerance")

    ratio = derived.bandwidth / mode.linewidth if mode.linewidth > 0 else math.inf
    if ratio < MONOCHROMATIC_MIN_RATIO:
        notes.append(_mono_note(ratio))
    report = tuple((r, pref * cumulative[r]) for r in radii) if radii else ()
    return SensingResult(
        b_x=b_x, eta=eta, atom_rate=rate, quadrature_error=pref * integral_err,
        monochromatic_ratio=ratio, warnings=tuple(notes), converged=converged,
        atom_rate_identity=identity, detection_integral=integral,
        detection_integral_error=integral_err, b_max_mode_volume=b_single, b_max_cqed=b_circuit,
        b_attenuated=b_att, atom_rate_attenuated=rate_prefactor(derived, b_att, constants) * integral,
        lateral_radius=radius, radius_report=report)


def _interpolated_spectrum(spectrum):
    omega, s = (np.asarray(v, float) for v in spectrum)
    if omega.ndim != 1 or omega.shape != s.shape or omega.size < 2:
        raise ValueError("spectrum must be two 1-D arrays of equal length >= 2")
    if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(s))):
        raise ValueError("spectrum samples must be finite")
    if np.any(np.diff(omega) <= 0):
        raise ValueError("spectrum frequencies must be strictly increasing")
    if np.any(s < 0):
        raise ValueError("spectrum samples must be non-negative")
    return omega, s


def spectrum_convolved_rate(derived: CondensateDerived, eta: float, delta: float, spectrum,
                            r_perp: float, y: float, spec: QuadratureSpec = SENSING_SPEC,
                            point_spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-6)):
    """|hbar eta / (M g l0)|^2 int d omega D(omega - delta, r) S(omega) for a sampled spectrum.

    ``spectrum`` is a pair ``(omega, S)`` of samples (rad/s, s/rad), linearly
    interpolated and zero outside the sampled range. Returns
    ``(density, error, converged)``.
    """
    omega, s = _interpolated_spectrum(spectrum)
    if eta == 0 or not np.any(s > 0):
        return 0.0, 0.0, True
    scale = _density_prefactor(derived, eta) * derived.density_scale
    point_err = [0.0]

    def weighted(w):
        out = np.empty(w.size)
        for i, wi in enumerate(w):
            kernel = SpectralKernel(derived, wi - delta, point_spec)
            value, err, _ = kernel.dbar(r_perp, y)
            point_err[0] = max(point_err[0], err)
            out[i] = value
        return out * np.interp(w, omega, s)

    # each piece between samples is smooth in the spectrum factor
    total, error, converged = 0.0, 0.0, True
    span = omega[-1] - omega[0]
    for lo, hi, s_lo, s_hi in zip(omega[:-1], omega[1:], s[:-1], s[1:]):
        if s_lo == 0 and s_hi == 0:
            continue
        piece = replace(spec, abs_tol=spec.abs_tol * (hi - lo) / span)
        res = integrate_1d(weighted, float(lo), float(hi), piece)
        total += res.value
        error += res.error_estimate
        converged &= res.converged
    weight = float(trapezoid(s, omega))
    return scale * total, scale * (error + point_err[0] * weight), bool(converged)
