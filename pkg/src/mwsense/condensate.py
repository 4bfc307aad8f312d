"""Thomas-Fermi condensate and its spectral resolution function.

Dimensionless conventions inside the spectral integrals: vertical
coordinates are measured in units of the Airy length ``l0`` and transverse
coordinates and wave numbers in units of the cloud radius ``a``. Energies are
measured in units of ``M g l0``. With these choices the transverse kinetic
energy of wave number ``kbar`` is ``kbar**2 / abar**2`` with ``abar = a/l0``.

The outgoing-wave Green function of free fall takes the form
``Ai(y_> - e) Ci(y_< - e)``; the spectral integrals below assume the
observation point lies under the cloud (``y < -a``), where ``y_<`` is always
the observation point.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import DEFAULT_CONSTANTS, PhysicalConstants, zeeman_splitting
from .quadrature import (FIXED_UPPER_LIMIT, NODES, IntegralResult, QuadratureSpec, integrate_1d,
                         integrate_semi_infinite)
from .special import airy_ai, airy_ai_bi, bessel_j0

# relative mismatch of the two chemical-potential routes that is rejected
MU_CONSISTENCY_LIMIT = 0.05
OVERLAP_METHODS = ("reduced", "nested")


def sphere_window(u):
    """(sin u - u cos u) / u^3, the Hankel transform of sqrt(1 - t^2) on the unit disc."""
    u = np.asarray(u, float)
    small = np.abs(u) < 1e-2
    safe = np.where(small, 1.0, u)
    out = (np.sin(safe) - safe * np.cos(safe)) / safe ** 3
    u2 = u * u
    return np.where(small, 1 / 3 - u2 / 30 + u2 * u2 / 840, out)


@dataclass(frozen=True)
class CondensateParams:
    """Inputs describing the trapped cloud.

    Give ``tf_radius`` (m), ``trap_frequencies`` (rad/s, x/y/z with y along
    gravity) or both; a missing one is completed from the Thomas-Fermi
    relations.
    """

    atom_number: float
    tf_radius: float | None = None
    trap_frequencies: tuple[float, float, float] | None = None
    b_offset: float = 1e-4

    def __post_init__(self):
        if not (math.isfinite(self.atom_number) and self.atom_number >= 1):
            raise ValueError(f"atom_number must be >= 1, got {self.atom_number!r}")
        if self.tf_radius is None and self.trap_frequencies is None:
            raise ValueError("need tf_radius or trap_frequencies")
        if self.tf_radius is not None and not (math.isfinite(self.tf_radius) and self.tf_radius > 0):
            raise ValueError(f"tf_radius must be positive, got {self.tf_radius!r}")
        if self.trap_frequencies is not None:
            if len(self.trap_frequencies) != 3 or not all(
                    math.isfinite(w) and w > 0 for w in self.trap_frequencies):
                raise ValueError("trap_frequencies must be three positive angular frequencies")
        if not (math.isfinite(self.b_offset) and self.b_offset >= 0):
            raise ValueError("b_offset must be non-negative")


@dataclass(frozen=True)
class CondensateDerived:
    """Quantities derived from :class:`CondensateParams` (SI units).

    ``mu`` is the atom-number form 5 N0 g_s / (2 V), which also fixes the
    normalisation of the Thomas-Fermi wave function; ``mu_trap`` is the
    radius form M omega_y^2 a^2 / 2.
    """

    atom_number: float
    a: float
    trap_frequencies: tuple[float, float, float]
    g_s: float
    mu: float
    mu_trap: float
    v_bec: float
    l0: float
    y0_sag: float
    omega0: float
    omega_L: float
    eta_per_tesla: float
    mass: float
    g_grav: float
    hbar: float
    warnings: tuple[str, ...] = field(default=())

    @property
    def omega_y(self) -> float:
        return self.trap_frequencies[1]

    @property
    def spherical(self) -> bool:
        wx, wy, wz = self.trap_frequencies
        return math.isclose(wx, wy, rel_tol=1e-9) and math.isclose(wy, wz, rel_tol=1e-9)

    @property
    def abar(self) -> float:
        """Cloud radius in Airy lengths."""
        return self.a / self.l0

    @property
    def density_scale(self) -> float:
        """mu / (N0 g_s): peak of the normalised density |Phi|^2, in 1/m^3."""
        return self.mu / (self.atom_number * self.g_s)

    @property
    def airy_energy(self) -> float:
        """M g l0 in joules."""
        return self.mass * self.g_grav * self.l0

    @property
    def bandwidth(self) -> float:
        """Spread 2 M g a / hbar of transition frequencies across the cloud (rad/s)."""
        return 2 * self.mass * self.g_grav * self.a / self.hbar

    @property
    def cavity_frequency(self) -> float:
        """Resonant drive omega_L + mu/hbar for the cloud centre (rad/s)."""
        return self.omega_L + self.mu / self.hbar


def derive(params: CondensateParams, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> CondensateDerived:
    """Fill in the Thomas-Fermi and trap quantities.

    Raises
    ------
    ValueError
        If radius and trap frequencies are both given and their chemical
        potentials differ by more than 5 %.
    """
    hbar, mass, g = constants.hbar, constants.mass_rb87, constants.g_grav
    n0 = params.atom_number
    g_s = 4 * math.pi * hbar ** 2 * constants.a_scatt / mass

    if params.trap_frequencies is None:
        a = params.tf_radius
        v_bec = 4 * math.pi * a ** 3 / 3
        mu = 5 * n0 * g_s / (2 * v_bec)
        w = math.sqrt(2 * mu / (mass * a ** 2))
        freqs = (w, w, w)
    else:
        freqs = tuple(float(w) for w in params.trap_frequencies)
        wbar3 = freqs[0] * freqs[1] * freqs[2]
        # mu from 5 N0 g_s / (2 V) with the semi-axes sqrt(2 mu / (M w_i^2))
        mu_from_trap = (15 * n0 * g_s * wbar3 * mass ** 1.5 / (8 * math.pi * 2 ** 1.5)) ** 0.4
        a = params.tf_radius if params.tf_radius is not None else math.sqrt(2 * mu_from_trap / (mass * freqs[1] ** 2))
        if params.tf_radius is None:
            v_bec = 4 * math.pi / 3 * (2 * mu_from_trap / mass) ** 1.5 / wbar3
            mu = mu_from_trap
        else:
            radii = [a * freqs[1] / w for w in freqs]
            v_bec = 4 * math.pi / 3 * radii[0] * radii[1] * radii[2]
            mu = 5 * n0 * g_s / (2 * v_bec)
    mu_trap = mass * freqs[1] ** 2 * a ** 2 / 2
    if abs(mu / mu_trap - 1) > MU_CONSISTENCY_LIMIT:
        raise ValueError(
            "inconsistent condensate inputs: chemical potential from atom number "
            f"mu/h = {mu / hbar / (2 * math.pi):.6g} Hz, from trap radius "
            f"mu/h = {mu_trap / hbar / (2 * math.pi):.6g} Hz")

    l0 = (hbar ** 2 / (2 * mass ** 2 * g)) ** (1 / 3)
    omega0 = zeeman_splitting(params.b_offset, constants)
    omega_l = constants.hf_splitting + omega0 + mass * g ** 2 / (2 * freqs[1] ** 2 * hbar)
    eta_per_tesla = math.sqrt(3) * constants.mu_bohr * math.sqrt(n0) / (4 * math.sqrt(2) * hbar)
    notes = []
    if a <= l0:
        msg = f"cloud radius {a:.3g} m does not exceed the Airy length {l0:.3g} m"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    return CondensateDerived(
        atom_number=n0, a=a, trap_frequencies=freqs, g_s=g_s, mu=mu, mu_trap=mu_trap, v_bec=v_bec,
        l0=l0, y0_sag=-g / freqs[1] ** 2, omega0=omega0, omega_L=omega_l, eta_per_tesla=eta_per_tesla,
        mass=mass, g_grav=g, hbar=hbar, warnings=tuple(notes))


def _require_spherical(derived):
    if not derived.spherical:
        raise ValueError("spectral quantities are implemented for spherical condensates only")


def tf_profile(derived: CondensateDerived, r_perp, y):
    """Thomas-Fermi wave function Phi(r) normalised to int Phi^2 d^3r = 1.

    Zero on and outside the sphere of radius ``a``.
    """
    _require_spherical(derived)
    r_perp = np.asarray(r_perp, float)
    y = np.asarray(y, float)
    inside = 1.0 - (r_perp ** 2 + y ** 2) / derived.a ** 2
    out = np.sqrt(derived.density_scale) * np.sqrt(np.clip(inside, 0.0, None))
    return out.item() if out.ndim == 0 else out


class SpectralKernel:
    """Evaluates the spectral resolution function for one detuning.

    The expensive part, the overlap of the condensate with free-fall states of
    transverse wave number ``kbar`` (the two inner integrals), does not depend
    on the observation point and is cached per wave number. Instances are
    safe to share between threads.

    With ``method="reduced"`` (default) the radial integral over the cloud is
    done in closed form, leaving one quadrature per wave number;
    ``method="nested"`` integrates vertical then radial numerically.

    Parameters
    ----------
    derived : CondensateDerived
    omega_minus_delta : float
        Spectral offset omega - Delta in rad/s.
    spec : QuadratureSpec
        Tolerance of the outer wave-number integral; the inner integrals run
        10x and 100x tighter.
    """

    def __init__(self, derived: CondensateDerived, omega_minus_delta: float,
                 spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-6), method: str = "reduced"):
        _require_spherical(derived)
        if method not in OVERLAP_METHODS:
            raise ValueError(f"method must be one of {OVERLAP_METHODS}, got {method!r}")
        self.derived = derived
        self.omega_minus_delta = float(omega_minus_delta)
        self.abar = derived.abar
        self.nu = derived.hbar * self.omega_minus_delta / derived.airy_energy
        self.spec = spec
        self.method = method
        self._cache: dict[float, float] = {}
        self._lock = threading.Lock()
        self.overlap_error = 0.0
        self._scale = None
        # overlap size where the cloud's energy band is reached sets the absolute tolerance
        probe = self.band_start + spec.panel_width * (0.5 + 0.5 * NODES)
        self._scale = float(np.max(np.abs(self._overlap_uncached(probe)))) or 1.0

    @property
    def band_start(self) -> float:
        """abar sqrt(nu): the wave number whose free-fall energy matches the cloud centre."""
        return self.abar * math.sqrt(max(self.nu, 0.0))

    def _inner_spec(self, factor):
        inner = self.spec.tightened(factor)
        if self._scale is None:
            return inner
        return QuadratureSpec(rel_tol=inner.rel_tol, abs_tol=inner.rel_tol * self._scale,
                              max_subdivisions=inner.max_subdivisions)

    def _overlap_uncached(self, kbar):
        if self.method == "nested":
            return self._overlap_nested(kbar)
        return self._overlap_reduced(kbar)

    def _overlap_reduced(self, kbar):
        # radial integral done in closed form:
        # int_0^c r J0(k r) sqrt(c^2 - r^2) dr = c^3 * sphere_window(k c)
        abar = self.abar
        eps = self.nu - kbar ** 2 / abar ** 2

        def vertical(theta):
            c = np.cos(theta)
            arg = abar * np.sin(theta)[None, :] - eps[:, None]
            return abar * c ** 4 * sphere_window(np.outer(kbar, c)) * airy_ai(arg)

        res = integrate_1d(vertical, -np.pi / 2, np.pi / 2, self._inner_spec(10.0))
        self.overlap_error = max(self.overlap_error, res.error_estimate)
        return np.atleast_1d(res.value)

    def _overlap_nested(self, kbar):
        abar = self.abar
        eps = self.nu - kbar ** 2 / abar ** 2
        th_spec = self._inner_spec(100.0)
        errs = [0.0]

        def radial(r):
            s = np.sqrt((1.0 - r) * (1.0 + r))

            def vertical(theta):
                # ybar' = abar * s * sin(theta) maps the chord onto [-pi/2, pi/2]
                arg = abar * s[None, :, None] * np.sin(theta)[None, None, :] - eps[:, None, None]
                return np.cos(theta) ** 2 * airy_ai(arg)

            inner = integrate_1d(vertical, -np.pi / 2, np.pi / 2, th_spec)
            errs[0] = max(errs[0], inner.error_estimate)
            return r * bessel_j0(np.outer(kbar, r)) * abar * s ** 2 * inner.value

        res = integrate_1d(radial, 0.0, 1.0, self._inner_spec(10.0))
        self.overlap_error = max(self.overlap_error, res.error_estimate + errs[0] * abar)
        return np.atleast_1d(res.value)

    def transverse_overlap(self, kbar) -> np.ndarray:
        """int_0^1 dr' r' J0(kbar r') int dy' sqrt(1 - r'^2 - y'^2/abar^2) Ai(y' - e(kbar))."""
        kbar = np.atleast_1d(np.asarray(kbar, float))
        with self._lock:
            missing = np.array(sorted({k for k in kbar.tolist() if k not in self._cache}))
        if missing.size:
            values = self._overlap_uncached(missing)
            with self._lock:
                self._cache.update(zip(missing.tolist(), values.tolist()))
        with self._lock:
            return np.array([self._cache[k] for k in kbar.tolist()])

    def _check_points(self, r_perp, y):
        if not (np.all(np.isfinite(r_perp)) and np.all(np.isfinite(y))):
            raise ValueError("observation points must be finite")
        if np.any(y >= -self.derived.a):
            raise ValueError("observation points must lie below the condensate (y < -a)")

    def reduced_amplitude(self, r_perp, y) -> IntegralResult:
        """Dimensionless triple integral T(r, y) at points below the cloud.

        ``r_perp`` and ``y`` are physical coordinates (m) relative to the
        cloud centre, broadcast against each other; only ``|r_perp|`` enters. F = -(pi / M g l0)
        sqrt(mu / N0 g_s) T.
        """
        r_perp, y = np.broadcast_arrays(np.asarray(r_perp, float), np.asarray(y, float))
        self._check_points(r_perp, y)
        shape = r_perp.shape
        rbar = np.abs(r_perp.ravel()) / self.derived.a
        ybar = y.ravel() / self.derived.l0
        abar2 = self.abar ** 2

        def integrand(k):
            overlap = self.transverse_overlap(k)
            live = overlap != 0.0
            out = np.zeros((rbar.size, k.size), dtype=complex)
            if np.any(live):
                kl = k[live]
                x = ybar[:, None] - self.nu + kl[None, :] ** 2 / abar2
                ai, bi = airy_ai_bi(x)
                out[:, live] = (kl * overlap[live])[None, :] * bessel_j0(rbar[:, None] * kl[None, :]) * (bi + 1j * ai)
            return out

        # for positive offsets the overlap only switches on near kbar = abar sqrt(nu), so
        # panels up to there are summed before the tail test starts
        spec = self.spec
        width = spec.panel_width
        head_panels = 0
        if spec.tail_cutoff_strategy != FIXED_UPPER_LIMIT:
            head_panels = int(math.ceil(self.band_start / width))
        head = 0.0
        error, evaluations, converged = 0.0, 0, True
        for n in range(head_panels):
            part = integrate_1d(integrand, n * width, (n + 1) * width, spec)
            head = head + np.asarray(part.value)
            error += part.error_estimate
            evaluations += part.evaluations
            converged &= part.converged
        if head_panels:
            head_norm = float(np.max(np.abs(head), initial=0.0))
            spec = replace(spec, abs_tol=max(spec.abs_tol, spec.rel_tol * head_norm))
        tail = integrate_semi_infinite(integrand, spec, lower=head_panels * width)
        value = (head + np.asarray(tail.value)).reshape(shape)
        return IntegralResult(value.item() if value.ndim == 0 else value, error + tail.error_estimate,
                              evaluations + tail.evaluations, bool(converged and tail.converged))

    def dbar(self, r_perp, y):
        """Dimensionless D/(mu/N0 g_s) = pi^2 |T|^2 and its error bound."""
        res = self.reduced_amplitude(r_perp, y)
        t_abs = np.abs(res.value)
        value = np.pi ** 2 * t_abs ** 2
        err = np.pi ** 2 * (2 * np.max(t_abs, initial=0.0) * res.error_estimate + res.error_estimate ** 2)
        return value, float(err), res.converged


@dataclass(frozen=True)
class SpectralPoint:
    omega_minus_delta: float
    r_perp: float
    y: float
    d_value: float
    d_bar: float
    error: float
    converged: bool
    f_value: complex


def spectral_amplitude_F(derived: CondensateDerived, omega_minus_delta: float, r_perp: float, y: float,
                         spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-6)) -> tuple[complex, IntegralResult]:
    """Complex amplitude F(omega - Delta, r) in 1/(J m^{3/2}).

    Returns ``(F, reduced)`` where ``reduced`` is the integration result of
    the dimensionless triple integral (value, error, convergence).
    """
    kernel = SpectralKernel(derived, omega_minus_delta, spec)
    res = kernel.reduced_amplitude(r_perp, y)
    pref = -np.pi / derived.airy_energy * math.sqrt(derived.density_scale)
    return pref * res.value, res


def spectral_resolution_D(derived: CondensateDerived, omega_minus_delta: float, r_perp: float, y: float,
                          spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-6),
                          kernel: SpectralKernel | None = None) -> SpectralPoint:
    """D = (M g l0)^2 |F|^2 (1/m^3) at one point, with its dimensionless form."""
    if kernel is None:
        kernel = SpectralKernel(derived, omega_minus_delta, spec)
    elif kernel.derived is not derived or kernel.omega_minus_delta != omega_minus_delta:
        raise ValueError("kernel was built for a different condensate or detuning")
    res = kernel.reduced_amplitude(r_perp, y)
    t = complex(res.value)
    d_bar = np.pi ** 2 * abs(t) ** 2
    err_bar = np.pi ** 2 * (2 * abs(t) * res.error_estimate + res.error_estimate ** 2)
    scale = derived.density_scale
    f_value = -np.pi / derived.airy_energy * math.sqrt(scale) * t
    return SpectralPoint(float(omega_minus_delta), float(r_perp), float(y), d_bar * scale, d_bar,
                         err_bar * scale, res.converged, f_value)
