"""Closed-form one-corner theory on the circular sector.

The sector ``{0 < r < R, 0 < theta < omega}`` with ``pi < omega < 2 pi``
has a single non-convex corner, so its non-Friedrichs Dirichlet Laplacians
form a one-parameter family labelled by a real ``theta``.

Two conventions for the spectral parameter are carried side by side:

``"literal"``
    the printed J-Bessel formulas, evaluated verbatim at z > 0.
``"modified"``
    the same objects for the resolvent ``(-Delta + z)^{-1}``, z > 0, where
    the deficiency family solves ``Delta g_z = z g_z`` and is built from
    I-Bessel functions. Production computations use this one.

The two are related by ``literal(z) = -modified(-z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import specfun
from .krein import SingularDenominatorError

CONVENTIONS = ("literal", "modified")
ADOPTED_CONVENTION = "modified"


class PoleError(ArithmeticError):
    """Evaluation at a pole of the literal-J Weyl function."""


@dataclass(frozen=True)
class Wedge:
    omega: float
    radius: float = 1.0

    def __post_init__(self):
        if not math.pi < self.omega <= 2.0 * math.pi:
            raise ValueError(f"opening angle must lie in (pi, 2pi], got {self.omega}")
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def beta(self) -> float:
        return math.pi / self.omega

    def contains(self, r, th) -> bool:
        r, th = np.asarray(r), np.asarray(th)
        return bool(np.all((r > 0) & (r <= self.radius) & (th >= 0) & (th <= self.omega)))


@dataclass(frozen=True)
class AnalyticExtension:
    """Non-Friedrichs extension ``theta`` (n = 1, Pi = 1); Friedrichs is Pi = 0, not a sentinel."""

    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")


def _check_convention(convention: str) -> None:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")


def deficiency_g(w: Wedge, r, th):
    """``(1/sqrt(pi)) (r^-beta - r^beta / R^{2 beta}) sin(beta theta)``."""
    if not w.contains(r, th):
        raise ValueError("point outside the sector")
    b, R = w.beta, w.radius
    r = np.asarray(r, dtype=float)
    return (r**-b - r**b / R ** (2 * b)) * np.sin(b * np.asarray(th)) / math.sqrt(math.pi)


def deficiency_gz_radial(w: Wedge, z: float, r, convention: str = ADOPTED_CONVENTION):
    """Radial profile of ``g_z``; multiply by ``sin(beta theta)`` for the full function.

    Normalized so that ``g_z -> g`` as ``z -> 0``.
    """
    _check_convention(convention)
    if z <= 0:
        raise ValueError("z must be positive")
    b, R = w.beta, w.radius
    q = math.sqrt(z)
    r = np.asarray(r, dtype=float)
    c = (q / 2.0) ** b * specfun.gamma_fn(1.0 - b) / math.sqrt(math.pi)
    if convention == "literal":
        den = specfun.bessel_j(b, q * R)
        if den == 0:
            raise PoleError("J_beta(sqrt(z) R) = 0")
        return c * (specfun.bessel_j(-b, q * r) - specfun.bessel_j(-b, q * R) / den * specfun.bessel_j(b, q * r))
    # I_{-b}(x) - (I_{-b}(X)/I_b(X)) I_b(x) in exponentially scaled form
    x, X = q * r, q * R
    ratio = specfun.bessel_ie(-b, X) / specfun.bessel_ie(b, X)
    return c * np.exp(x) * (specfun.bessel_ie(-b, x) - ratio * specfun.bessel_ie(b, x))


def deficiency_gz(w: Wedge, z: float, r, th, convention: str = ADOPTED_CONVENTION):
    return deficiency_gz_radial(w, z, r, convention) * np.sin(w.beta * np.asarray(th))


def weyl_gamma(w: Wedge, z: float, convention: str = ADOPTED_CONVENTION) -> float:
    """Scalar Weyl function ``z <g, g_z>`` of the corner."""
    _check_convention(convention)
    if z <= 0:
        raise ValueError("z must be positive")
    b, R = w.beta, w.radius
    q = math.sqrt(z)
    pref = (z / 4.0) ** b
    if convention == "literal":
        den = specfun.bessel_j(b, q * R)
        if abs(den) <= 1e-13 * max(1.0, abs(specfun.bessel_j(-b, q * R))):
            raise PoleError("J_beta(sqrt(z) R) = 0")
        g_ratio = specfun.gamma_fn(-b) / specfun.gamma_fn(b)
        return R ** (-2 * b) + pref * g_ratio * specfun.bessel_j(-b, q * R) / den
    g_ratio = specfun.gamma_fn(1 - b) / specfun.gamma_fn(1 + b)
    i_ratio = specfun.bessel_ie(-b, q * R) / specfun.bessel_ie(b, q * R)
    return -(R ** (-2 * b)) + pref * g_ratio * i_ratio


def weyl_gamma_negative(w: Wedge, lam: float) -> float:
    """Analytic continuation of the modified Weyl function to ``z = -lam < 0``."""
    return -weyl_gamma(w, lam, "literal")


def corner_poles(w: Wedge, lam_max: float) -> np.ndarray:
    """Friedrichs eigenvalues of the ``sin(beta theta)`` channel below ``lam_max``."""
    count = max(1, int(math.sqrt(lam_max) * w.radius / math.pi) + 3)
    zeros = specfun.bessel_j_zeros(w.beta, count)
    lams = (zeros / w.radius) ** 2
    return lams[lams <= lam_max]


def secular_function(w: Wedge, ext: AnalyticExtension, lam: float, convention: str = ADOPTED_CONVENTION) -> float:
    """``theta + Gamma`` at the spectral parameter that ``lam`` maps to.

    Under ``"modified"`` an eigenvalue ``lam`` of the extension is a pole of
    ``(-Delta + z)^{-1}`` at ``z = -lam``; under ``"literal"`` the oscillatory
    formula is evaluated at ``lam`` itself.
    """
    _check_convention(convention)
    if convention == "literal":
        return ext.theta + weyl_gamma(w, lam, "literal")
    return ext.theta + weyl_gamma_negative(w, lam)


def secular_eigenvalues(
    w: Wedge,
    ext: AnalyticExtension,
    search: tuple[float, float],
    convention: str = ADOPTED_CONVENTION,
    xtol: float = 1e-12,
) -> list[float]:
    """Roots of the secular function in ``search``, bracketed between its poles."""
    lo, hi = search
    if not 0 <= lo < hi or not math.isfinite(hi):
        raise ValueError("search interval must be bounded and inside lam > 0")
    poles = corner_poles(w, hi)
    edges = [lo] + [p for p in poles if lo < p < hi] + [hi]
    roots = []
    for a, b in zip(edges[:-1], edges[1:]):
        eps = 1e-9 * max(1.0, b)
        a_in = max(a + eps, 1e-12) if a in poles or a == 0 else a
        b_in = b - eps if b in poles else b
        if b_in <= a_in:
            continue
        fa = secular_function(w, ext, a_in, convention)
        fb = secular_function(w, ext, b_in, convention)
        if fa * fb < 0:
            root = optimize.brentq(lambda t: secular_function(w, ext, t, convention), a_in, b_in, xtol=xtol, rtol=1e-15)
            roots.append(root)
    if any(np.diff(roots) <= 0):
        raise RuntimeError("secular roots not strictly increasing")
    return roots


def _frobenius(nu: float, lam: float, r: float, terms: int = 40):
    """``r^nu sum c_k r^{2k}`` and ``r d/dr`` of it, solving ``u'' + u'/r + (lam - nu^2/r^2) u = 0``."""
    c, val, der = 1.0, 0.0, 0.0
    for k in range(terms):
        if k:
            c *= -lam / (4.0 * k * (k + nu))
        term = c * r ** (2 * k)
        val += term
        der += (2 * k + nu) * term
        if abs(term) < 1e-18 * abs(val):
            break
    return r**nu * val, r**nu * der


def shooting_endpoint(w: Wedge, theta: float, lam: float, eps_frac: float = 1e-3) -> float:
    """``u(R)`` for the radial solution obeying the theta boundary condition at the vertex.

    Near the vertex ``u ~ a r^-beta + b r^beta`` with ``b = (theta - R^{-2 beta}) a``;
    the ODE is integrated in ``t = ln r`` from ``eps_frac * R`` to ``R``.
    """
    b, R = w.beta, w.radius
    eps = eps_frac * R
    um, dm = _frobenius(-b, lam, eps)
    up, dp = _frobenius(b, lam, eps)
    coef = theta - R ** (-2 * b)
    y0 = [um + coef * up, dm + coef * dp]

    def rhs(t, y):
        return [y[1], (b * b - lam * math.exp(2 * t)) * y[0]]

    sol = integrate.solve_ivp(rhs, (math.log(eps), math.log(R)), y0, method="DOP853", rtol=1e-12, atol=1e-14)
    return float(sol.y[0, -1])


def shooting_eigenvalues(w: Wedge, ext: AnalyticExtension, search: tuple[float, float], step: float = 0.05) -> list[float]:
    """Eigenvalues from radial shooting: zeros of ``lam -> u(R; lam)`` (no poles)."""
    lo, hi = search
    ks = np.arange(math.sqrt(max(lo, 0.0)) + 1e-6, math.sqrt(hi) + step, step)
    lams = np.minimum(ks**2, hi)
    vals = np.array([shooting_endpoint(w, ext.theta, x) for x in lams])
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(
            optimize.brentq(lambda t: shooting_endpoint(w, ext.theta, t), lams[i], lams[i + 1], xtol=1e-12, rtol=1e-14)
        )
    return roots


def extension_resolvent_kernel(
    w: Wedge,
    ext: AnalyticExtension,
    z: float,
    x: tuple[float, float],
    y: tuple[float, float],
    base_kernel,
    convention: str = ADOPTED_CONVENTION,
) -> float:
    """Kernel of the theta-extension resolvent: Friedrichs kernel plus the rank-one term.

    ``base_kernel(z, x, y)`` supplies the Friedrichs resolvent kernel.
    """
    den = ext.theta + weyl_gamma(w, z, convention)
    if abs(den) < 1e-12 * max(1.0, abs(ext.theta)):
        raise SingularDenominatorError("z is an eigenvalue parameter of the extension")
    gx = deficiency_gz(w, z, x[0], x[1], convention)
    gy = deficiency_gz(w, z, y[0], y[1], convention)
    return float(base_kernel(z, x, y) + gx * gy / den)
