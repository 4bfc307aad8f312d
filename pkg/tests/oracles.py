"""Independent reference implementations used only by the tests.

None of these call into ``mwsense``; they use textbook algorithms (AGM,
power series in extended precision, fixed high-order grids, Monte Carlo).
"""

import math

import mpmath
import numpy as np
from scipy.special import airy, j0


def ellipk_agm(k):
    """K(k) = pi / (2 AGM(1, sqrt(1 - k^2))) by plain iteration."""
    a, b = 1.0, math.sqrt((1.0 - k) * (1.0 + k))
    for _ in range(60):
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        if abs(a - b) <= 1e-17 * a:
            break
    return math.pi / (2.0 * a)


def airy_series(x, dps=80):
    """(Ai, Bi, Ai', Bi') at x from the Maclaurin series in mpmath arithmetic.

    Ai = c1 f - c2 g and Bi = sqrt(3) (c1 f + c2 g) with
    f = sum_k a_k x^{3k}, a_k / a_{k-1} = 1 / ((3k-1) 3k) and
    g = sum_k b_k x^{3k+1}, b_k / b_{k-1} = 1 / (3k (3k+1)).
    """
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        c1 = 1 / (mpmath.power(3, mpmath.mpf(2) / 3) * mpmath.gamma(mpmath.mpf(2) / 3))
        c2 = 1 / (mpmath.power(3, mpmath.mpf(1) / 3) * mpmath.gamma(mpmath.mpf(1) / 3))
        a, b = mpmath.mpf(1), mpmath.mpf(1)
        f, g = a, b * x
        fp, gp = mpmath.mpf(0), b
        eps = mpmath.mpf(10) ** (-dps + 5)
        for k in range(1, 10_000):
            a = a / ((3 * k - 1) * (3 * k))
            b = b / ((3 * k) * (3 * k + 1))
            tf = a * x ** (3 * k)
            tg = b * x ** (3 * k + 1)
            f += tf
            g += tg
            fp += 3 * k * a * x ** (3 * k - 1)
            gp += (3 * k + 1) * b * x ** (3 * k)
            if abs(tf) + abs(tg) < eps * (abs(f) + abs(g)):
                break
        ai = c1 * f - c2 * g
        bi = mpmath.sqrt(3) * (c1 * f + c2 * g)
        aip = c1 * fp - c2 * gp
        bip = mpmath.sqrt(3) * (c1 * fp + c2 * gp)
        return float(ai), float(bi), float(aip), float(bip)


def bessel_j0_series(x, dps=50):
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        term = mpmath.mpf(1)
        total = mpmath.mpf(0)
        k = 0
        while abs(term) > mpmath.mpf(10) ** (-dps + 3) or k < 3:
            total += term
            k += 1
            term = -term * (x / 2) ** 2 / k ** 2
        return float(total)


def richardson_trapezoid(f, a, b, n=1_000_000):
    """Trapezoid at n and n/2 panels combined to cancel the h^2 error."""
    def trap(m):
        x = np.linspace(a, b, m + 1)
        y = f(x)
        return (b - a) / m * (y.sum() - 0.5 * (y[0] + y[-1]))
    return (4 * trap(n) - trap(n // 2)) / 3


def monte_carlo_half_ball(n=10_000_000, seed=1234):
    """int over r_perp <= 1, 0 <= y <= 1 of 2 pi r max(0, 1 - r^2 - y^2), with its standard error.

    Uniform samples of (x, z, y) in the box [-1,1]^2 x [0,1].
    """
    rng = np.random.default_rng(seed)
    total = []
    for _ in range(n // 1_000_000):
        p = rng.uniform((-1.0, -1.0, 0.0), (1.0, 1.0, 1.0), size=(1_000_000, 3))
        r2 = p[:, 0] ** 2 + p[:, 1] ** 2
        v = np.where(r2 <= 1, np.clip(1 - r2 - p[:, 2] ** 2, 0, None), 0.0)
        total.append(v)
    v = np.concatenate(total) * 4.0   # box volume
    return v.mean(), v.std() / math.sqrt(v.size)


def _gauss(n, lo, hi):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def brute_force_amplitude(abar, nu, rbar, ybar, k_max=80.0, k_panel=1.0, k_nodes=24, r_nodes=96, t_nodes=192):
    """Dimensionless amplitude T on fixed Gauss grids, in the original nesting.

    Vertical integral innermost (chord mapped by y' = abar s sin(theta)),
    then the radial integral with J0, then the wave number on panels of
    width ``k_panel`` up to ``k_max``. ``rbar`` in cloud radii, ``ybar`` and
    ``nu`` in Airy units.
    """
    th, wth = _gauss(t_nodes, -np.pi / 2, np.pi / 2)
    rp, wrp = _gauss(r_nodes, 0.0, 1.0)
    s = np.sqrt(1 - rp ** 2)
    edges = np.arange(0.0, k_max + k_panel / 2, k_panel)
    ks, wk = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = _gauss(k_nodes, lo, hi)
        ks.append(x)
        wk.append(w)
    ks = np.concatenate(ks)
    wk = np.concatenate(wk)
    overlap = np.empty(ks.size)
    for i in range(0, ks.size, 200):
        k = ks[i:i + 200]
        e = nu - k[:, None, None] ** 2 / abar ** 2
        arg = abar * s[None, :, None] * np.sin(th)[None, None, :] - e
        vert = (np.cos(th) ** 2 * airy(arg)[0]) @ wth
        overlap[i:i + 200] = (rp * j0(k[:, None] * rp) * abar * s ** 2 * vert) @ wrp
    ai, _, bi, _ = airy(ybar - nu + ks ** 2 / abar ** 2)
    return np.sum(wk * ks * j0(ks * rbar) * (bi + 1j * ai) * overlap)
