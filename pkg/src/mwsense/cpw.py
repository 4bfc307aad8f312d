"""Coplanar waveguide resonator: conformal-mapping line parameters, the
quasi-static magnetic field of the half-wave mode and single-photon field
amplitudes.

Coordinates follow the resonator frame: ``x`` across the strip (0 at the
centre, magnetic wall at ``x = b``), ``y`` normal to the chip (``y <= 0`` is
the vacuum side, ``0 <= y <= h`` the substrate) and ``z`` along the line from
one open end (``0 <= z <= L``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .quadrature import QuadratureSpec, integrate_1d, integrate_semi_infinite
from .special import ellipk, sinc_half

SERIES_REL_TOL = 1e-10
SERIES_MAX_TERMS = 10_000
# "much smaller than" for the substrate-side mirror relations
QUASI_STATIC_RATIO = 0.1


@dataclass(frozen=True)
class CpwGeometry:
    """Cross-section of the line, all lengths in metres.

    Attributes
    ----------
    strip_width : float
        Centre conductor width S.
    gap : float
        Slot width W between centre conductor and ground.
    ground_width : float
        Width w of each ground electrode.
    substrate_thickness : float
        Substrate thickness h.
    eps_r : float
        Relative permittivity of the substrate.
    """

    strip_width: float
    gap: float
    ground_width: float
    substrate_thickness: float
    eps_r: float

    def __post_init__(self):
        for name in ("strip_width", "gap", "ground_width", "substrate_thickness"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value!r}")
        if not (math.isfinite(self.eps_r) and self.eps_r >= 1):
            raise ValueError(f"eps_r must be >= 1, got {self.eps_r!r}")

    @property
    def half_width(self) -> float:
        """b = S/2 + W + w, the position of the outer magnetic wall."""
        return self.strip_width / 2 + self.gap + self.ground_width

    @property
    def delta(self) -> float:
        return self.gap / self.half_width

    @property
    def delta_bar(self) -> float:
        return (self.strip_width + self.gap) / self.half_width

    def scaled(self, factor: float) -> "CpwGeometry":
        """Copy with every transverse length multiplied by ``factor``."""
        return CpwGeometry(self.strip_width * factor, self.gap * factor, self.ground_width * factor,
                           self.substrate_thickness * factor, self.eps_r)


def conformal_moduli(geom: CpwGeometry) -> tuple[float, float, float, float]:
    """Return ``(k0, k1, k0', k1')`` of the conformal maps for air and substrate."""
    s, w, h = geom.strip_width, geom.gap, geom.substrate_thickness
    k0 = s / (s + 2 * w)
    # sinh ratio written with exponentials scaled out to stay finite for thin substrates
    u0 = math.pi * s / (4 * h)
    u1 = math.pi * (s + 2 * w) / (4 * h)
    k1 = math.exp(u0 - u1) * (-math.expm1(-2 * u0)) / (-math.expm1(-2 * u1))
    k0p = math.sqrt((1 - k0) * (1 + k0))
    k1p = math.sqrt((1 - k1) * (1 + k1))
    for name, k in (("k0", k0), ("k1", k1), ("k0'", k0p), ("k1'", k1p)):
        if not 0 < k < 1:
            raise ValueError(f"degenerate geometry: {name} = {k!r} outside (0, 1)")
    return k0, k1, k0p, k1p


def elliptic_ratios(geom: CpwGeometry) -> tuple[float, float]:
    """kappa_i = K(k_i) / K(k_i') for the air (i=0) and substrate (i=1) maps."""
    k0, k1, k0p, k1p = conformal_moduli(geom)
    return ellipk(k0) / ellipk(k0p), ellipk(k1) / ellipk(k1p)


def effective_permittivity(geom: CpwGeometry) -> float:
    kappa0, kappa1 = elliptic_ratios(geom)
    return 1.0 + 0.5 * (geom.eps_r - 1.0) * kappa1 / kappa0


def capacitance_per_length(geom: CpwGeometry, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Distributed capacitance c = 4 eps0 eps_eff kappa0 in F/m."""
    kappa0, _ = elliptic_ratios(geom)
    return 4.0 * constants.eps0 * effective_permittivity(geom) * kappa0


@dataclass(frozen=True)
class CpwMode:
    """Half-wave resonance of a line, with its single-photon slot voltage."""

    omega: float
    lambda_free: float
    eps_eff: float
    lambda_g: float
    length: float
    n_transverse: int
    quality_q: float
    v0_volts: float

    @property
    def wavelength_ratio(self) -> float:
        """lambda / lambda_g."""
        return self.lambda_free / self.lambda_g

    @property
    def v(self) -> float:
        return math.sqrt(max(self.wavelength_ratio ** 2 - 1.0, 0.0))

    @property
    def q(self) -> float:
        return 1.0 - self.wavelength_ratio ** 2

    @property
    def linewidth(self) -> float:
        """Full width omega/Q in rad/s."""
        return self.omega / self.quality_q


def make_mode(geom: CpwGeometry, omega: float, quality_q: float = math.inf, n_transverse: int = 1,
              constants: PhysicalConstants = DEFAULT_CONSTANTS) -> CpwMode:
    """Fundamental longitudinal mode with L = lambda_g / 2 at angular frequency ``omega``.

    The single-photon voltage is sqrt(hbar omega / C) with the total
    capacitance C = c * L of the resonator.
    """
    if not (math.isfinite(omega) and omega > 0):
        raise ValueError(f"frequency must be positive, got {omega!r}")
    if not quality_q > 0:
        raise ValueError("quality factor must be positive")
    if int(n_transverse) != n_transverse or n_transverse < 1:
        raise ValueError("n_transverse must be a positive integer")
    eps_eff = effective_permittivity(geom)
    lam = 2 * math.pi * constants.c_light / omega
    lam_g = lam / math.sqrt(eps_eff)
    length = lam_g / 2
    c_total = capacitance_per_length(geom, constants) * length
    v0 = math.sqrt(constants.hbar * omega / c_total)
    return CpwMode(omega, lam, eps_eff, lam_g, length, int(n_transverse), quality_q, v0)


@dataclass(frozen=True)
class FieldVector:
    """Complex field phasors (tesla) in the resonator frame.

    Components may be scalars or arrays of a common shape. ``warnings`` lists
    violated validity conditions of the field model.
    """

    bx: complex | np.ndarray
    by: complex | np.ndarray
    bz: complex | np.ndarray
    warnings: tuple[str, ...] = field(default=())

    @property
    def peak_magnitude(self):
        """Largest |B(t)| over one period of the phasor field Re(B e^{-i w t})."""
        comps = (np.asarray(self.bx), np.asarray(self.by), np.asarray(self.bz))
        power = sum(np.abs(c) ** 2 for c in comps)
        coherent = np.abs(sum(c ** 2 for c in comps))
        return np.sqrt(0.5 * (power + coherent))


def slot_factor(geom: CpwGeometry, n):
    """s_n: sinc(n pi delta/2) * sin(n pi delta_bar/2) excitation weight of harmonic n."""
    n = np.asarray(n)
    return sinc_half(n, geom.delta) * np.sin(n * np.pi * geom.delta_bar / 2)


def field_prefactor(geom: CpwGeometry, mode: CpwMode, v0: float,
                    constants: PhysicalConstants = DEFAULT_CONSTANTS) -> complex:
    """p = -i mu0 (4 V0 / (Z0 b)) (lambda/lambda_g); relative permeability taken as 1."""
    z0 = constants.free_space_impedance
    return -1j * constants.mu0 * 4 * v0 / (z0 * geom.half_width) * mode.wavelength_ratio


def _terms_needed(geom, abs_y):
    """Harmonics needed for the tail of every series to drop below SERIES_REL_TOL.

    Uses |s_n| <= 2/(n pi delta), F_n >= 1 and a geometric tail sum, relative
    to the n=1 term of the x series.
    """
    b = geom.half_width
    alpha = np.pi * abs_y / b
    s1 = abs(float(slot_factor(geom, 1)))
    with np.errstate(divide="ignore"):
        c = SERIES_REL_TOL * s1 * np.pi * geom.delta * (-np.expm1(-alpha)) / 2
        n = np.where(alpha > 0, np.ceil(np.log(1.0 / c) / np.where(alpha > 0, alpha, 1.0)), SERIES_MAX_TERMS)
    return np.clip(n, 1, SERIES_MAX_TERMS).astype(int)


def _series(geom, mode, x, y, harmonic=None, unit_slot=False, n_max=SERIES_MAX_TERMS):
    """Transverse sums (Sx, Sy, Sz) at flattened points; Sz excludes the 2b/lambda_g factor."""
    b = geom.half_width
    abs_y = np.abs(y)
    if harmonic is not None:
        n_all = np.array([int(harmonic)])
        needed = np.ones(x.size, dtype=int)
    else:
        needed = np.minimum(_terms_needed(geom, abs_y), n_max)
        n_all = np.arange(1, int(needed.max(initial=1)) + 1)
    sx = np.zeros(x.size)
    sy = np.zeros(x.size)
    sz = np.zeros(x.size)
    # keep chunks of the (points x harmonics) matrix around 4e6 entries
    chunk = max(1, 4_000_000 // n_all.size)
    for start in range(0, x.size, chunk):
        sl = slice(start, start + chunk)
        nn = n_all[None, :]
        s_n = np.ones(n_all.size) if unit_slot else slot_factor(geom, n_all)
        f_n = np.sqrt(1 + (2 * b * mode.v / (n_all * mode.lambda_free)) ** 2)
        gamma = n_all * np.pi * f_n / b
        decay = np.exp(-gamma[None, :] * abs_y[sl, None])
        if harmonic is None:
            decay = np.where(nn <= needed[sl, None], decay, 0.0)
        phase = nn * np.pi * x[sl, None] / b
        cos_t = np.cos(phase)
        sin_t = np.sin(phase)
        sx[sl] = (cos_t * decay) @ (s_n / f_n)
        sy[sl] = (sin_t * decay) @ s_n
        sz[sl] = (sin_t * decay) @ (mode.q * s_n / (n_all * f_n))
    return sx, sy, sz


def _check_air_point(geom, mode, x, y, z):
    b = geom.half_width
    tol = 1e-12
    if np.any(x < -tol * b) or np.any(x > b * (1 + tol)):
        raise ValueError("x must satisfy 0 <= x <= b")
    if np.any(y > 0):
        raise ValueError("air-side field requires y <= 0")
    if np.any(z < -tol * mode.length) or np.any(z > mode.length * (1 + tol)):
        raise ValueError("z must satisfy 0 <= z <= L")


def field_air_side(geom: CpwGeometry, mode: CpwMode, x, y, z, v0: float | None = None,
                   harmonic: int | None = None, max_terms: int = SERIES_MAX_TERMS,
                   constants: PhysicalConstants = DEFAULT_CONSTANTS) -> FieldVector:
    """Quasi-static magnetic field on the vacuum side (y <= 0) for odd excitation.

    The harmonic sums are truncated once a geometric bound on the remaining
    tail is below 1e-10 of the leading term, or at 10^4 terms. At y = 0 the
    sums converge only conditionally and the cap is reached.

    Parameters
    ----------
    v0 : float, optional
        Slot voltage amplitude; defaults to the single-photon voltage of ``mode``.
    harmonic : int, optional
        Keep only this transverse harmonic instead of summing the series.
    max_terms : int
        Hard cap on the number of harmonics summed.
    """
    if int(max_terms) < 1:
        raise ValueError("max_terms must be at least 1")
    x, y, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(z, float))
    _check_air_point(geom, mode, x, y, z)
    shape = x.shape
    v0 = mode.v0_volts if v0 is None else v0
    p = field_prefactor(geom, mode, v0, constants)
    sx, sy, sz = _series(geom, mode, x.ravel(), y.ravel(), harmonic=harmonic, n_max=int(max_terms))
    zl = np.pi * z.ravel() / mode.length
    sin_z = np.sin(zl)
    cos_z = np.cos(zl)
    bx = p * sx * sin_z
    by = p * sy * sin_z
    bz = p * (2 * geom.half_width / mode.lambda_g) * sz * cos_z

    def shaped(arr):
        return arr.reshape(shape) if shape else arr.item()

    return FieldVector(shaped(bx), shaped(by), shaped(bz))


def field_substrate_side(geom: CpwGeometry, mode: CpwMode, x, y, z, v0: float | None = None,
                         harmonic: int | None = None,
                         constants: PhysicalConstants = DEFAULT_CONSTANTS) -> FieldVector:
    """Approximate field inside the substrate (0 <= y <= h) by mirroring the air side.

    Bx(y) = -Bx_air(-y), By(y) = By_air(-y), Bz = 0. The relations need
    b << lambda and b << h; when either ratio exceeds 0.1 the result carries
    a warning.
    """
    y = np.asarray(y, float)
    if np.any(y < 0) or np.any(y > geom.substrate_thickness):
        raise ValueError("substrate-side field requires 0 <= y <= h")
    air = field_air_side(geom, mode, x, -y, z, v0=v0, harmonic=harmonic, constants=constants)
    notes = []
    b = geom.half_width
    if b > QUASI_STATIC_RATIO * mode.lambda_free:
        notes.append(f"b/lambda = {b / mode.lambda_free:.3g} is not small; mirror relation inaccurate")
    if b > QUASI_STATIC_RATIO * geom.substrate_thickness:
        notes.append(f"b/h = {b / geom.substrate_thickness:.3g} is not small; mirror relation inaccurate")
    bz = np.zeros_like(np.asarray(air.bz))
    return FieldVector(-air.bx, air.by, bz.item() if bz.ndim == 0 else bz, tuple(notes))


@dataclass(frozen=True)
class ModeVolume:
    closed_form: float
    numeric: float
    numeric_error: float
    converged: bool

    @property
    def relative_difference(self) -> float:
        return abs(self.numeric - self.closed_form) / self.closed_form


def mode_volume(geom: CpwGeometry, mode: CpwMode, spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-6),
                constants: PhysicalConstants = DEFAULT_CONSTANTS) -> ModeVolume:
    """Mode volume int |B|^2 / |B_max|^2 of transverse mode ``mode.n_transverse``.

    The closed form L b^2 / pi holds for the lowest transverse mode. The
    numeric value integrates the single-harmonic field over both vacuum and
    substrate half spaces and both halves of the cross-section, normalised by
    the peak of the same field at the chip surface.
    """
    n = mode.n_transverse
    b = geom.half_width
    length = mode.length
    closed = length * b ** 2 / math.pi

    def intensity(x, y, z):
        # x, y, z broadcast; unit slot factor so that even harmonics are defined too
        xx, yy, zz = np.broadcast_arrays(x, y, z)
        sx, sy, sz = _series(geom, mode, xx.ravel(), yy.ravel(), harmonic=n, unit_slot=True)
        zl = np.pi * zz.ravel() / length
        bz_fac = 2 * b / mode.lambda_g
        air = (sx ** 2 + sy ** 2) * np.sin(zl) ** 2 + (bz_fac * sz * np.cos(zl)) ** 2
        sub = (sx ** 2 + sy ** 2) * np.sin(zl) ** 2
        return air.reshape(xx.shape), sub.reshape(xx.shape)

    # the single-harmonic intensity peaks on the surface, where cos or sin of the
    # transverse phase is extremal, at mid-length (or at the ends for Bz)
    air_peak, _ = intensity(np.array([[0.0], [b / (2 * n)]]), 0.0, np.array([[length / 2, 0.0]]))
    peak = float(air_peak.max())
    inner_spec = spec.tightened(100.0)
    y_spec = QuadratureSpec(rel_tol=inner_spec.rel_tol, abs_tol=inner_spec.abs_tol,
                            panel_width=b / (n * math.pi))
    inner_err = {"y": 0.0, "x": 0.0}

    def over_x(zs):
        def over_y(xs):
            def air_f(u):
                return intensity(xs[None, :, None], -u[None, None, :], zs[:, None, None])[0]

            def sub_f(u):
                return intensity(xs[None, :, None], u[None, None, :], zs[:, None, None])[1]

            air = integrate_semi_infinite(air_f, y_spec)
            sub = integrate_1d(sub_f, 0.0, geom.substrate_thickness, inner_spec)
            inner_err["y"] = max(inner_err["y"], air.error_estimate + sub.error_estimate)
            return air.value + sub.value

        res = integrate_1d(over_y, 0.0, b, spec.tightened(10.0))
        inner_err["x"] = max(inner_err["x"], res.error_estimate)
        return res.value

    res = integrate_1d(over_x, 0.0, length, spec)
    err = res.error_estimate + length * (inner_err["x"] + b * inner_err["y"])
    # factor 2 for the mirror-image half of the cross-section
    return ModeVolume(closed, 2 * float(res.value) / peak, 2 * err / peak, res.converged)


def b_max_single_photon(geom: CpwGeometry, mode: CpwMode,
                        constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """|B_max| = sqrt(2 mu0 hbar omega / V_c) with V_c = L b^2 / pi (tesla)."""
    v_c = mode.length * geom.half_width ** 2 / math.pi
    return math.sqrt(2 * constants.mu0 * constants.hbar * mode.omega / v_c)


def b_max_cqed(geom: CpwGeometry, mode: CpwMode, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Peak field from the single-photon slot voltage sqrt(hbar omega / (c L)).

    Equals sqrt(2/kappa0) * s_1 * sqrt(2 mu0 hbar omega / (L b^2)).
    """
    kappa0, _ = elliptic_ratios(geom)
    s1 = float(slot_factor(geom, 1))
    return (math.sqrt(2 / kappa0) * s1
            * math.sqrt(2 * constants.mu0 * constants.hbar * mode.omega / (mode.length * geom.half_width ** 2)))


def b_at_condensate(geom: CpwGeometry, mode: CpwMode, d: float,
                    constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Single-photon field at distance d below the strip: exp(-pi d / b) |B_max|."""
    if not (math.isfinite(d) and d >= 0):
        raise ValueError(f"distance must be non-negative, got {d!r}")
    return math.exp(-math.pi * d / geom.half_width) * b_max_single_photon(geom, mode, constants)
