"""Real-argument special functions.

Thin, domain-checked wrappers over ``scipy.special`` plus a Bessel zero
finder. Everything is real-valued: the spectral parameter stays on the
real axis throughout the package.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize, special

EULER_GAMMA = float(np.euler_gamma)


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


def _check_order(nu: float) -> None:
    if not nu > -1.0:
        raise DomainError(f"order must exceed -1, got {nu}")


def _check_bessel_arg(nu: float, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("Bessel argument must be non-negative")
    if nu < 0 and not float(nu).is_integer() and np.any(x == 0):
        raise DomainError(f"x = 0 is a singular point for order {nu}")
    return x


def _scalar_or_array(v, x):
    return float(v) if np.ndim(x) == 0 else v


def gamma_fn(x: float) -> float:
    """Euler Gamma; raises at the poles 0, -1, -2, ..."""
    if x <= 0 and float(x).is_integer():
        raise DomainError(f"Gamma has a pole at {x}")
    return float(special.gamma(x))


def bessel_j(nu: float, x):
    _check_order(nu)
    xa = _check_bessel_arg(nu, x)
    return _scalar_or_array(special.jv(nu, xa), x)


def bessel_j_prime(nu: float, x):
    xa = _check_bessel_arg(nu, x)
    return _scalar_or_array(special.jvp(nu, xa), x)


def bessel_i(nu: float, x):
    _check_order(nu)
    xa = _check_bessel_arg(nu, x)
    return _scalar_or_array(special.iv(nu, xa), x)


def bessel_ie(nu: float, x):
    """Exponentially scaled I: ``I_nu(x) * exp(-x)``."""
    xa = _check_bessel_arg(nu, x)
    return _scalar_or_array(special.ive(nu, xa), x)


def bessel_ke(nu: float, x):
    """Exponentially scaled Macdonald function ``K_nu(x) * exp(x)``, x > 0."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("K_nu needs x > 0")
    return _scalar_or_array(special.kve(nu, xa), x)


def bessel_k0(x):
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("K_0 needs x > 0")
    return _scalar_or_array(special.k0(xa), x)


def _mcmahon(nu: float, m: int) -> float:
    b = (m + nu / 2.0 - 0.25) * math.pi
    mu = 4.0 * nu * nu
    return b - (mu - 1.0) / (8.0 * b)


def bessel_j_zeros(nu: float, count: int) -> np.ndarray:
    """First ``count`` positive zeros of J_nu, ascending.

    Brackets come from a sign scan with step well below the zero spacing,
    each bracket is refined by Brent's method and polished with Newton.
    """
    _check_order(nu)
    if count < 1:
        raise ValueError("count must be >= 1")
    step = 0.25
    start = 1e-8 if nu < 0.5 else max(nu - 1.0, 1e-8)
    stop = max(_mcmahon(nu, count), nu) + 3.0 * math.pi
    xs = np.arange(start, stop + step, step)
    vals = special.jv(nu, xs)
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if len(idx) < count:
        raise RuntimeError(f"zero finder located {len(idx)} of {count} zeros for nu={nu}")
    zeros = np.empty(count)
    for m, i in enumerate(idx[:count]):
        x = optimize.brentq(lambda t: special.jv(nu, t), xs[i], xs[i + 1], xtol=1e-15, rtol=1e-15)
        for _ in range(2):
            d = special.jvp(nu, x)
            if d == 0:
                break
            x -= special.jv(nu, x) / d
        zeros[m] = x
    if np.any(np.diff(zeros) <= 0):
        raise RuntimeError(f"zeros not strictly increasing for nu={nu}")
    return zeros


def bessel_j_zero(nu: float, m: int) -> float:
    """The m-th (1-based) positive zero of J_nu."""
    if m < 1:
        raise ValueError("zero index is 1-based")
    return float(bessel_j_zeros(nu, m)[-1])


def _debye_sum(p, nu, sign):
    u1 = (3 * p - 5 * p**3) / 24.0
    u2 = (81 * p**2 - 462 * p**4 + 385 * p**6) / 1152.0
    u3 = (30375 * p**3 - 369603 * p**5 + 765765 * p**7 - 425425 * p**9) / 414720.0
    return 1.0 + sign * u1 / nu + u2 / nu**2 + sign * u3 / nu**3


def _debye_parts(nu, x):
    t = x / nu
    sq = np.sqrt(1.0 + t * t)
    eta = sq + np.log(t) - np.log1p(sq)
    return 1.0 / sq, eta, -0.25 * np.log1p(t * t)


def _log_i_series(nu, x, terms=80):
    t = 0.25 * x * x
    term = np.ones_like(t)
    acc = np.ones_like(t)
    for j in range(1, terms):
        term = term * t / (j * (nu + j))
        acc = acc + term
        if np.all(term <= 1e-17 * acc):
            break
    return nu * np.log(0.5 * x) - special.gammaln(nu + 1.0) + np.log(acc)


def log_bessel_i(nu, x):
    """``ln I_nu(x)`` for nu >= 0, x > 0, free of under/overflow.

    scipy's scaled function is used where representable; otherwise the
    ascending series (x^2/4 <= nu + 1) or the uniform Debye expansion.
    """
    nu, x = np.broadcast_arrays(np.asarray(nu, float), np.asarray(x, float))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        v = special.ive(nu, x)
        out = np.log(v) + x
        bad = ~np.isfinite(out) | (v < 1e-290)
        if np.any(bad):
            nb, xb = nu[bad], x[bad]
            ser = 0.25 * xb * xb <= nb + 1.0
            res = np.empty_like(xb)
            if np.any(ser):
                res[ser] = _log_i_series(nb[ser], xb[ser])
            deb = ~ser
            if np.any(deb):
                p, eta, q = _debye_parts(nb[deb], xb[deb])
                res[deb] = -0.5 * np.log(2 * np.pi * nb[deb]) + q + nb[deb] * eta + np.log(_debye_sum(p, nb[deb], 1.0))
            out = np.array(out, copy=True)
            out[bad] = res
    return out


def log_bessel_k(nu, x):
    """``ln K_nu(x)`` for nu >= 0, x > 0 (Debye expansion where kve overflows)."""
    nu, x = np.broadcast_arrays(np.asarray(nu, float), np.asarray(x, float))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        v = special.kve(nu, x)
        out = np.log(v) - x
        bad = ~np.isfinite(out) | (v > 1e290)
        if np.any(bad):
            nb, xb = nu[bad], x[bad]
            p, eta, q = _debye_parts(nb, xb)
            out = np.array(out, copy=True)
            out[bad] = 0.5 * np.log(np.pi / (2 * nb)) + q - nb * eta + np.log(_debye_sum(p, nb, -1.0))
    return out
