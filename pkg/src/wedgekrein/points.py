"""Point perturbations of the Friedrichs sector Laplacian.

Domain elements are ``u = u0 + sum_k xi_k g_Omega(0; ., y_k)`` with ``u0`` in
the Friedrichs domain. Two regularized traces label the extensions:

``hat``
    ``lim_{x->y_k} (u(x) - xi_k g_Omega(0; x, y_k))``, Weyl matrix ``Gamma^Y``;
``check``
    ``lim_{x->y_k} (u(x) - xi_k ln(1/|x-y_k|)/(2 pi))``, Weyl matrix
    ``Gamma_check = Gamma^Y + diag(h_Omega(0; y_k, y_k))``.

The same operator has ``Theta_check = Theta_hat - Pi diag(h0) Pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import sector
from .krein import AnchoredWeyl, ExtensionParameter, krein_coefficients
from .sector import SectorBasis
from .wedge import Wedge

VARIANTS = ("hat", "check")


@dataclass(frozen=True)
class PointConfig:
    """Interaction points ``(r_k, theta_k)`` in sector coordinates."""

    points: tuple

    def __post_init__(self):
        pts = tuple((float(r), float(t)) for r, t in self.points)
        if not pts:
            raise ValueError("need at least one point")
        object.__setattr__(self, "points", pts)
        xy = self.cartesian()
        for i in range(len(pts)):
            for j in range(i):
                if np.hypot(*(xy[i] - xy[j])) <= 0:
                    raise ValueError("interaction points must be distinct")

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def radii(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def angles(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    def cartesian(self) -> np.ndarray:
        return np.array([[r * math.cos(t), r * math.sin(t)] for r, t in self.points])

    def validate(self, w: Wedge) -> "PointConfig":
        r, t = self.radii, self.angles
        if np.any(r <= 0) or np.any(r >= w.radius) or np.any(t <= 0) or np.any(t >= w.omega):
            raise ValueError("interaction points must lie strictly inside the sector")
        return self

    def permuted(self, perm) -> "PointConfig":
        return PointConfig(tuple(self.points[i] for i in perm))


def lambda_matrix(w: Wedge, pc: PointConfig) -> np.ndarray:
    """Off-diagonal ``g_Omega(0; y_i, y_j)``."""
    n = pc.n
    lam = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            lam[i, j] = lam[j, i] = float(sector.green0(w, pc.points[i], pc.points[j]))
    return lam


def h0_diagonal(w: Wedge, pc: PointConfig) -> np.ndarray:
    """``h_Omega(0; y_k, y_k) = -G_reg(0; y_k)``."""
    return np.array([-float(sector.green_reg0(w, y)) for y in pc.points])


def _offdiag_green(w: Wedge, pc: PointConfig, z: float, channels: int) -> np.ndarray:
    n = pc.n
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = sector.green_function(w, z, pc.points[i], pc.points[j], channels)
    return out


def gamma_hat(w: Wedge, pc: PointConfig, z: float, method: str = "exact", channels: int = sector.DEFAULT_CHANNELS) -> np.ndarray:
    """``Gamma^Y_z``: diagonal ``G_reg(0;y) - G_reg(z;y)``, off-diagonal ``-g_Omega(z; y_i, y_j)``."""
    if z <= 0:
        raise ValueError("z must be positive")
    if method == "exact":
        greg = [sector.green_regularized_diag_exact(w, z, y, channels) for y in pc.points]
    elif method == "offset":
        greg = [sector.green_regularized_diag(w, z, y, channels=channels).value for y in pc.points]
    else:
        raise ValueError("method must be 'exact' or 'offset'")
    diag = np.array([float(sector.green_reg0(w, y)) for y in pc.points]) - np.array(greg)
    return np.diag(diag) - _offdiag_green(w, pc, z, channels)


def gamma_check(w: Wedge, pc: PointConfig, z: float, method: str = "offset", channels: int = sector.DEFAULT_CHANNELS) -> np.ndarray:
    """Log-regularized variant: diagonal ``(ln(sqrt z/2) - psi(1))/(2 pi) + h_Omega(z; y, y)``.

    ``h_Omega(z; y, y)`` is read off ``G_reg(z; y)`` and the small-argument
    expansion of ``K_0``; with that, the diagonal reduces to ``-G_reg(z; y)``.
    """
    if method == "exact":
        greg = np.array([sector.green_regularized_diag_exact(w, z, y, channels) for y in pc.points])
    else:
        greg = np.array([sector.green_regularized_diag(w, z, y, channels=channels).value for y in pc.points])
    free = (math.log(math.sqrt(z) / 2) + np.euler_gamma) / (2 * math.pi)
    h_z = -free - greg
    return np.diag(free + h_z) - _offdiag_green(w, pc, z, channels)


@dataclass
class PIMatrices:
    z: float
    gamma_hat: np.ndarray
    gamma_check: np.ndarray
    lambda_y: np.ndarray


def build_pi_matrices(obj, pc: PointConfig, z: float, method: str = "exact", channels: int = sector.DEFAULT_CHANNELS) -> PIMatrices:
    w = obj.wedge if isinstance(obj, SectorBasis) else obj
    pc.validate(w)
    gh = gamma_hat(w, pc, z, method, channels)
    return PIMatrices(z, gh, gh + np.diag(h0_diagonal(w, pc)), lambda_matrix(w, pc))


def check_parameter(ext: ExtensionParameter, h0: np.ndarray) -> ExtensionParameter:
    """``Theta_check = Theta_hat - Pi diag(h0) Pi`` (same operator, other trace)."""
    if ext.rank == 0:
        return ext
    theta = ext.theta - ext.pi @ np.diag(h0) @ ext.pi
    return ExtensionParameter(ext.pi, 0.5 * (theta + theta.conj().T))


class PIBase:
    """Friedrichs sector Laplacian with point traces, in coefficient space.

    ``weyl_block`` returns the hat-convention Weyl matrix (``Lambda^Y``
    absorbed into the extension label). With ``anchored=True`` it is the
    truncation-consistent model ``Gamma(z_a) + (z - z_a) A(z_a)^T A(z)``,
    exact at ``z_a``, for which resolvent identities hold to rounding.
    """

    def __init__(self, basis: SectorBasis, pc: PointConfig, anchored: bool = True, z_anchor: float = 1.0, channels: int = sector.DEFAULT_CHANNELS):
        pc.validate(basis.wedge)
        self.basis, self.pc, self.channels = basis, pc, channels
        self.n = pc.n
        self._u_y = basis.modes(pc.radii, pc.angles)
        self.h0 = h0_diagonal(basis.wedge, pc)
        self.anchored = anchored
        self._anchor = (
            AnchoredWeyl(gamma_hat(basis.wedge, pc, z_anchor, "exact", channels), z_anchor, self.columns) if anchored else None
        )

    def columns(self, z: float) -> np.ndarray:
        """Coefficient vectors of ``g_Omega(z; ., y_k)``, shape (modes, n)."""
        return self._u_y / (self.basis.lam + z)[:, None]

    def resolvent_apply(self, z, v):
        return sector.resolvent_coeffs(self.basis, z, v)

    def gmap_apply(self, z, xi):
        return self.columns(z) @ np.asarray(xi)

    def gmap_adjoint(self, z, v):
        return self.columns(z).T @ np.asarray(v)

    def weyl_block(self, z: float, variant: str = "hat") -> np.ndarray:
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        gh = self._anchor(z) if self.anchored else gamma_hat(self.basis.wedge, self.pc, z, "exact", self.channels)
        return gh if variant == "hat" else gh + np.diag(self.h0)


def pi_resolvent(base: PIBase, ext: ExtensionParameter, z: float, v: np.ndarray, variant: str = "hat") -> np.ndarray:
    """Point-interaction resolvent applied to coefficient vector(s) ``v``."""
    out = base.resolvent_apply(z, v)
    if ext.rank == 0:
        return out
    cols = base.columns(z)
    xi = krein_coefficients(ext, base.weyl_block(z, variant), cols.T @ v)
    return out + cols @ xi


def pi_resolvent_matrix(base: PIBase, ext: ExtensionParameter, z: float, variant: str = "hat") -> np.ndarray:
    return pi_resolvent(base, ext, z, np.eye(base.basis.size), variant)


@dataclass
class HatTrace:
    value: float
    extrapolants: tuple


def hat_trace(
    obj,
    pc: PointConfig,
    u0,
    xi,
    k: int,
    variant: str = "hat",
    h: float | None = None,
    direction: float = 0.3,
) -> HatTrace:
    """Regularized trace at ``y_k`` of ``u = u0 + sum_j xi_j g_Omega(0; ., y_j)`` by offset extrapolation.

    ``u0`` is a callable ``u0(r, theta)`` or coefficients over a basis.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    w = obj.wedge if isinstance(obj, SectorBasis) else obj
    if not callable(u0):
        coeffs = np.asarray(u0)
        u0 = lambda r, th: float(obj.evaluate(coeffs, r, th)[0])  # noqa: E731
    xi = np.asarray(xi, float)
    h = 1e-3 * w.radius if h is None else h
    rk, tk = pc.points[k]
    p0 = np.array([rk * math.cos(tk), rk * math.sin(tk)])
    vals = []
    for hh in (h, h / 2, h / 4):
        p = p0 + hh * np.array([math.cos(direction), math.sin(direction)])
        x = (float(np.hypot(*p)), float(np.arctan2(p[1], p[0]) % (2 * math.pi)))
        val = u0(*x)
        for j, y in enumerate(pc.points):
            if j != k:
                val += xi[j] * float(sector.green0(w, x, y))
        if variant == "check":
            val += xi[k] * (float(sector.green0(w, x, (rk, tk))) - math.log(1.0 / hh) / (2 * math.pi))
        vals.append(val)
    r1 = [2 * vals[1] - vals[0], 2 * vals[2] - vals[1]]
    r2 = (4 * r1[1] - r1[0]) / 3
    if abs(r2 - r1[1]) > 1e-5 * max(1.0, abs(r2)):
        raise sector.ExtrapolationError("hat-trace extrapolants disagree")
    return HatTrace(float(r2), (r1[0], r1[1], r2))


def pi_eigenvalues(base: PIBase, theta: float, search: tuple[float, float], tol: float = 1e-12) -> list[float]:
    """Eigenvalues in ``search`` of the n = 1 point perturbation with coupling ``theta``.

    Roots of ``theta + Gamma(-lam)`` for the anchored (meromorphic) Weyl
    function, bracketed between consecutive Friedrichs eigenvalues that the
    point sees.
    """
    if base.n != 1 or not base.anchored:
        raise ValueError("eigenvalue scan needs a single point and the anchored Weyl model")
    lam = base.basis.lam
    uy = base._u_y[:, 0]
    anc = base._anchor
    ga = anc.columns(anc.z_anchor)[:, 0]

    def f(x):
        return theta + anc.w_anchor[0, 0] + (-x - anc.z_anchor) * float(np.sum(ga * uy / (lam - x)))

    seen = np.unique(lam[np.abs(uy) > 1e-12 * np.abs(uy).max()])
    lo, hi = search
    edges = [lo] + [p for p in seen if lo < p < hi] + [hi]
    roots = []
    for a, b in zip(edges[:-1], edges[1:]):
        eps = 1e-10 * max(1.0, b)
        a_in = a + eps if a in seen else a
        b_in = b - eps if b in seen else b
        if b_in <= a_in:
            continue
        fa, fb = f(a_in), f(b_in)
        if fa * fb < 0:
            roots.append(optimize.brentq(f, a_in, b_in, xtol=tol, rtol=1e-15))
    return roots
