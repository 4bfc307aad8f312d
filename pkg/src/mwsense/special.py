"""Special functions used by the waveguide and condensate models.

The numerical kernels are the scipy.special (Cephes) implementations; this
module pins the argument conventions, validates domains and turns silent
overflow into exceptions. All functions accept scalars or numpy arrays.

Conventions
-----------
* :func:`ellipk` takes the *modulus* ``k``, not the parameter ``m = k**2``
  used by scipy and Abramowitz & Stegun.
* :func:`airy_ci` is the outgoing-wave combination ``Bi(x) + 1j*Ai(x)``.
"""

from __future__ import annotations

import numpy as np
from scipy import special as _sp

#: Largest argument for which Bi(x) is representable in double precision.
BI_MAX_ARG = 103.0
#: Arguments below this are outside the validated range of the Airy kernels.
AIRY_MIN_ARG = -1.0e4


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: argument must be finite")
    return arr


def _unwrap(arr):
    return arr.item() if arr.ndim == 0 else arr


def ellipk(k):
    """Complete elliptic integral of the first kind K(k) for modulus 0 <= k < 1.

    K(k) = int_0^{pi/2} dtheta / sqrt(1 - k^2 sin^2 theta)
    """
    k = _as_float_array(k, "ellipk")
    if np.any(k < 0) or np.any(k >= 1):
        raise ValueError("ellipk: modulus must satisfy 0 <= k < 1")
    # (1-k)(1+k) keeps the complementary parameter accurate as k -> 1
    return _unwrap(_sp.ellipkm1((1.0 - k) * (1.0 + k)))


def _airy_checked(x, need_bi):
    x = _as_float_array(x, "airy")
    if np.any(x < AIRY_MIN_ARG):
        raise ValueError(f"airy: argument below validated range ({AIRY_MIN_ARG})")
    if need_bi and np.any(x > BI_MAX_ARG):
        raise OverflowError(f"airy_bi: Bi(x) overflows for x > {BI_MAX_ARG}")
    return x


def airy_ai(x):
    """Airy function Ai(x)."""
    x = _airy_checked(x, need_bi=False)
    return _unwrap(_sp.airy(x)[0])


def airy_bi(x):
    """Airy function Bi(x); raises OverflowError beyond :data:`BI_MAX_ARG`."""
    x = _airy_checked(x, need_bi=True)
    return _unwrap(_sp.airy(x)[2])


def airy_ai_bi(x):
    """Return ``(Ai(x), Bi(x))`` from a single kernel call."""
    x = _airy_checked(x, need_bi=True)
    ai, _, bi, _ = _sp.airy(x)
    return _unwrap(ai), _unwrap(bi)


def airy_derivatives(x):
    """Return ``(Ai'(x), Bi'(x))``."""
    x = _airy_checked(x, need_bi=True)
    _, aip, _, bip = _sp.airy(x)
    return _unwrap(aip), _unwrap(bip)


def airy_ci(x):
    """Complex Airy function Ci(x) = Bi(x) + i Ai(x).

    This is the outgoing solution of the free-fall problem. For x -> -inf it
    behaves like exp(i*(2/3)|x|^{3/2} + i*pi/4) / (sqrt(pi) |x|^{1/4}), so its
    modulus is smooth where Ai and Bi oscillate.
    """
    ai, bi = airy_ai_bi(x)
    return bi + 1j * ai


def bessel_j0(x):
    """Bessel function J0(x) for x >= 0."""
    x = _as_float_array(x, "bessel_j0")
    if np.any(x < 0):
        raise ValueError("bessel_j0: argument must be non-negative")
    return _unwrap(_sp.j0(x))


def bessel_j1(x):
    """Bessel function J1(x) for x >= 0."""
    x = _as_float_array(x, "bessel_j1")
    if np.any(x < 0):
        raise ValueError("bessel_j1: argument must be non-negative")
    return _unwrap(_sp.j1(x))


def sinc_half(n, delta):
    """sin(n pi delta / 2) / (n pi delta / 2), with the limit 1 at delta = 0."""
    n_arr = np.asarray(n)
    if not np.issubdtype(n_arr.dtype, np.integer) or np.any(n_arr < 1):
        raise ValueError("sinc_half: n must be a positive integer")
    delta = _as_float_array(delta, "sinc_half")
    if np.any(delta < 0) or np.any(delta >= 1):
        raise ValueError("sinc_half: delta must lie in [0, 1)")
    # np.sinc(t) = sin(pi t)/(pi t)
    return _unwrap(np.sinc(n_arr * delta / 2.0))
