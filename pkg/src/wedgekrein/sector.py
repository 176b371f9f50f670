"""Spectral model of the Friedrichs Laplacian on the circular sector.

Eigenfunctions are ``N_km J_{k beta}(j_{k beta, m} r / R) sin(k beta theta)``.
Operators act on coefficient vectors over this basis. Green functions are
evaluated from the conformal closed form at z = 0 plus, for z > 0, a sum of
per-angular-channel radial corrections that converges geometrically off the
diagonal and like ``k^-3`` on it.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import special

from . import quadrature as quad
from . import specfun
from .wedge import Wedge, deficiency_g

CACHE_ENV = "WEDGEKREIN_CACHE_DIR"
DEFAULT_K, DEFAULT_M = 40, 60
DEFAULT_CHANNELS = 400
TAIL_WARN = 1e-5


class TruncationWarning(UserWarning):
    pass


class ExtrapolationError(ArithmeticError):
    """Offset extrapolants of a regularized diagonal did not settle."""


# ---------------------------------------------------------------- basis


@dataclass(frozen=True)
class SectorBasis:
    wedge: Wedge
    K: int
    M: int
    k: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    nu: np.ndarray = field(repr=False)
    zero: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)
    norm: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.k.size

    def sorted_eigenvalues(self) -> np.ndarray:
        return np.sort(self.lam)

    def channel(self, k: int) -> np.ndarray:
        return np.nonzero(self.k == k)[0]

    def radial(self, r, idx=None) -> np.ndarray:
        """``N J_nu(j r / R)`` as a (modes, points) array, optionally for mode rows ``idx``."""
        r = np.atleast_1d(np.asarray(r, float))
        sel = slice(None) if idx is None else idx
        return self.norm[sel, None] * special.jv(self.nu[sel, None], np.outer(self.zero[sel], r) / self.wedge.radius)

    def modes(self, r, th) -> np.ndarray:
        r, th = np.broadcast_arrays(np.atleast_1d(np.asarray(r, float)), np.atleast_1d(np.asarray(th, float)))
        return self.radial(r) * np.sin(np.outer(self.nu, th))

    def evaluate(self, coeffs, r, th) -> np.ndarray:
        return np.asarray(coeffs) @ self.modes(r, th)

    def evaluate_grid(self, coeffs, r, th) -> np.ndarray:
        """Series on the tensor grid ``r x th``, shape (len(r), len(th)), channel by channel."""
        r, th = np.atleast_1d(np.asarray(r, float)), np.atleast_1d(np.asarray(th, float))
        coeffs = np.asarray(coeffs)
        out = np.zeros((r.size, th.size))
        for k in np.unique(self.k):
            idx = self.channel(k)
            if not np.any(coeffs[idx]):
                continue
            out += np.outer(coeffs[idx] @ self.radial(r, idx), np.sin(self.nu[idx[0]] * th))
        return out

    def vertex_traces(self) -> np.ndarray:
        """Coefficient of ``r^beta sin(beta theta)/sqrt(pi)`` in each mode (zero for k >= 2)."""
        b, R = self.wedge.beta, self.wedge.radius
        out = np.zeros(self.size)
        one = self.k == 1
        out[one] = self.norm[one] * math.sqrt(math.pi) * (self.zero[one] / (2 * R)) ** b / special.gamma(1 + b)
        return out

    def quadrature_orders(self) -> tuple[int, int]:
        return 4 * self.M + 40, 3 * self.K + 40

    def project(self, func, n_r: int | None = None, n_theta: int | None = None) -> np.ndarray:
        """``<u_n, func>`` by separable tensor Gauss-Legendre quadrature."""
        dn_r, dn_t = self.quadrature_orders()
        r, wr = quad.radial_rule(self.wedge.radius, n_r or dn_r)
        th, wt = quad.angular_rule(self.wedge.omega, n_theta or dn_t)
        vals = np.asarray(func(r[:, None], th[None, :]), float)
        out = np.empty(self.size)
        for k in np.unique(self.k):
            idx = self.channel(k)
            ang = vals @ (wt * np.sin(self.nu[idx[0]] * th))
            out[idx] = self.radial(r, idx) @ (wr * r * ang)
        return out

    def project_channel1(self, radial_fn, r_max: float | None = None, n_r: int | None = None) -> np.ndarray:
        """Coefficients of ``h(r) sin(beta theta)``; only k = 1 modes are nonzero."""
        r, wr = quad.radial_rule(self.wedge.radius, n_r or self.quadrature_orders()[0], r_max)
        out = np.zeros(self.size)
        idx = self.channel(1)
        out[idx] = 0.5 * self.wedge.omega * (self.radial(r, idx) @ (wr * r * radial_fn(r)))
        return out

    def to_dict(self) -> dict:
        return {
            "omega": self.wedge.omega,
            "radius": self.wedge.radius,
            "K": self.K,
            "M": self.M,
            "zeros": self.zero.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SectorBasis":
        w = Wedge(float(data["omega"]), float(data["radius"]))
        zeros = np.asarray(data["zeros"], float).reshape(int(data["K"]), int(data["M"]))
        return _assemble(w, int(data["K"]), int(data["M"]), zeros)


def _assemble(w: Wedge, K: int, M: int, zeros: np.ndarray) -> SectorBasis:
    k = np.repeat(np.arange(1, K + 1), M)
    m = np.tile(np.arange(1, M + 1), K)
    nu = k * w.beta
    zero = zeros.ravel()
    norm = 2.0 / (w.radius * np.abs(special.jv(nu + 1, zero)) * math.sqrt(w.omega))
    return SectorBasis(w, K, M, k, m, nu, zero, (zero / w.radius) ** 2, norm)


def cache_key(w: Wedge, K: int, M: int) -> str:
    tag = f"{w.omega!r}|{w.radius!r}|{K}|{M}"
    return "basis-" + hashlib.sha256(tag.encode()).hexdigest()[:20] + ".json"


def cache_dir() -> Path | None:
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else None


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


@lru_cache(maxsize=16)
def _build_cached(omega: float, radius: float, K: int, M: int, directory: str | None) -> SectorBasis:
    w = Wedge(omega, radius)
    path = Path(directory) / cache_key(w, K, M) if directory else None
    if path is not None and path.exists():
        return SectorBasis.from_dict(json.loads(path.read_text()))
    zeros = np.empty((K, M))
    for k in range(1, K + 1):
        try:
            zeros[k - 1] = specfun.bessel_j_zeros(k * w.beta, M)
        except RuntimeError as exc:
            raise RuntimeError(f"zero finder failed for nu={k * w.beta}, M={M}: {exc}") from exc
    basis = _assemble(w, K, M, zeros)
    if path is not None:
        _write_atomic(path, json.dumps(basis.to_dict()))
    return basis


def build_basis(w: Wedge, K: int = DEFAULT_K, M: int = DEFAULT_M, cache: str | Path | None = None) -> SectorBasis:
    """Truncated Friedrichs eigenbasis; disk-cached when ``cache`` or the env override is set."""
    if K < 1 or M < 1:
        raise ValueError("K and M must be >= 1")
    directory = cache if cache is not None else cache_dir()
    return _build_cached(w.omega, w.radius, K, M, str(directory) if directory else None)


# ---------------------------------------------------------------- cutoff and singular functions


@dataclass(frozen=True)
class CutoffProfile:
    """``f = 1`` on (0, R/3], ``0`` on [2R/3, inf), smoothstep in between."""

    radius: float
    kind: str = "cubic"

    def __post_init__(self):
        if self.kind not in ("cubic", "quintic"):
            raise ValueError("kind must be 'cubic' or 'quintic'")

    def _t(self, r):
        return np.clip(3.0 * np.asarray(r, float) / self.radius - 1.0, 0.0, 1.0)

    def _inside(self, r):
        r = np.asarray(r, float)
        return (r > self.radius / 3.0) & (r < 2.0 * self.radius / 3.0)

    def f(self, r):
        t = self._t(r)
        s = 3 * t**2 - 2 * t**3 if self.kind == "cubic" else 10 * t**3 - 15 * t**4 + 6 * t**5
        return 1.0 - s

    def df(self, r):
        t = self._t(r)
        ds = 6 * t - 6 * t**2 if self.kind == "cubic" else 30 * t**2 - 60 * t**3 + 30 * t**4
        return np.where(self._inside(r), -ds * 3.0 / self.radius, 0.0)

    def d2f(self, r):
        t = self._t(r)
        d2s = 6 - 12 * t if self.kind == "cubic" else 60 * t - 180 * t**2 + 120 * t**3
        return np.where(self._inside(r), -d2s * 9.0 / self.radius**2, 0.0)


class SingularFunctions:
    """``s = f u+``, ``sigma = f u-`` and ``g = sigma + (-Delta^F)^{-1} Delta sigma``.

    Coefficient vectors over ``basis``: ``e`` (sigma), ``d`` (Delta sigma),
    ``s`` (s), ``ds`` (Delta s), ``g``. Norms use 1D radial quadrature, which
    is exact in the angle for these single-channel functions.
    """

    def __init__(self, basis: SectorBasis, cutoff: CutoffProfile | None = None):
        w = basis.wedge
        self.basis = basis
        self.cutoff = cutoff or CutoffProfile(w.radius)
        self.beta = w.beta
        two_thirds = 2.0 * w.radius / 3.0
        self.e = basis.project_channel1(self.sigma_radial, r_max=two_thirds)
        self.d = basis.project_channel1(self.lap_sigma_radial, r_max=two_thirds)
        self.s = basis.project_channel1(self.s_radial, r_max=two_thirds)
        self.ds = basis.project_channel1(self.lap_s_radial, r_max=two_thirds)
        self.g = self.e + self.d / basis.lam
        n = basis.quadrature_orders()[0]
        r, wr = quad.radial_rule(w.radius, n, two_thirds)
        half = 0.5 * w.omega
        self.sigma_norm2 = float(half * np.sum(wr * r * self.sigma_radial(r) ** 2))
        self.sigma_lap_sigma = float(half * np.sum(wr * r * self.sigma_radial(r) * self.lap_sigma_radial(r)))

    def _u(self, r, sign):
        return np.asarray(r, float) ** (sign * self.beta) / math.sqrt(math.pi)

    def s_radial(self, r):
        return self.cutoff.f(r) * self._u(r, 1)

    def sigma_radial(self, r):
        return self.cutoff.f(r) * self._u(r, -1)

    def lap_s_radial(self, r):
        r = np.asarray(r, float)
        c = self.cutoff
        return (c.d2f(r) + (1 + 2 * self.beta) * c.df(r) / r) * self._u(r, 1)

    def lap_sigma_radial(self, r):
        r = np.asarray(r, float)
        c = self.cutoff
        return (c.d2f(r) + (1 - 2 * self.beta) * c.df(r) / r) * self._u(r, -1)

    def s_value(self, r, th):
        return self.s_radial(r) * np.sin(self.beta * np.asarray(th))

    def sigma_value(self, r, th):
        return self.sigma_radial(r) * np.sin(self.beta * np.asarray(th))

    def lap_s(self, r, th):
        return self.lap_s_radial(r) * np.sin(self.beta * np.asarray(th))

    def lap_sigma(self, r, th):
        return self.lap_sigma_radial(r) * np.sin(self.beta * np.asarray(th))


def gamma_z_general(basis: SectorBasis, sf: SingularFunctions, z: float) -> float:
    """Corner Weyl function from the sigma-representation, by spectral coefficients."""
    if z <= 0:
        raise ValueError("z must be positive")
    lam, e, d = basis.lam, sf.e, sf.d
    c = z * e - d
    return float(z * sf.sigma_norm2 + np.sum(d * d / lam) - np.sum(c * c / (lam + z)))


def gamma_tilde_general(basis: SectorBasis, sf: SingularFunctions, z: float) -> float:
    """Variant with ``-<sigma, Delta sigma>`` in place of ``||(-Delta^F)^{-1/2} Delta sigma||^2``."""
    lam, e, d = basis.lam, sf.e, sf.d
    c = z * e - d
    return float(z * sf.sigma_norm2 - sf.sigma_lap_sigma - np.sum(c * c / (lam + z)))


def gamma_shift(basis: SectorBasis, sf: SingularFunctions) -> float:
    """``<sigma, Delta sigma> + ||(-Delta^F)^{-1/2} Delta sigma||^2``."""
    return float(sf.sigma_lap_sigma + np.sum(sf.d**2 / basis.lam))


def pairing_check(basis: SectorBasis, sf: SingularFunctions, use_coefficients: bool = False) -> float:
    """``<g, -Delta^F s>`` with closed-form ``g`` (2D quadrature) or with ``g``'s coefficients."""
    if use_coefficients:
        return float(-np.dot(sf.g, sf.ds))
    w = basis.wedge
    n_r, _ = basis.quadrature_orders()
    r, th, wt = quad.sector_rule(w.radius, w.omega, n_r, 64, r_max=2.0 * w.radius / 3.0)
    return float(-np.sum(wt * deficiency_g(w, r, th) * sf.lap_s(r, th)))


def resolvent_coeffs(basis: SectorBasis, z: float, v: np.ndarray) -> np.ndarray:
    """``(-Delta^F + z)^{-1}`` in coefficient space."""
    if z <= -basis.lam.min():
        raise ValueError("z must lie in the resolvent set of -Delta^F")
    v = np.asarray(v)
    lam = basis.lam if v.ndim == 1 else basis.lam[:, None]
    return v / (lam + z)


# ---------------------------------------------------------------- Green functions


def _wedge_of(obj) -> Wedge:
    return obj.wedge if isinstance(obj, SectorBasis) else obj


def _conformal(w: Wedge, r, th):
    return (np.asarray(r, float) / w.radius) ** w.beta * np.exp(1j * w.beta * np.asarray(th, float))


def green0(obj, x, y):
    """``g_Omega(0; x, y)`` via the map onto the half disk."""
    w = _wedge_of(obj)
    a, b = _conformal(w, *x), _conformal(w, *y)
    num = np.abs(a - np.conj(b)) * np.abs(1 - a * np.conj(b))
    den = np.abs(a - b) * np.abs(1 - a * b)
    return np.log(num / den) / (2 * math.pi)


def green_reg0(obj, y):
    """``lim_{x->y} [g_Omega(0;x,y) - ln(1/|x-y|)/(2 pi)] = -h_Omega(0;y,y)``."""
    w = _wedge_of(obj)
    r, th = (np.asarray(v, float) for v in y)
    rho2 = (r / w.radius) ** (2 * w.beta)
    num = 2 * np.sin(w.beta * th) * (1 - rho2) * r
    den = w.beta * np.abs(1 - rho2 * np.exp(2j * w.beta * th))
    return np.log(num / den) / (2 * math.pi)


def _series_minus_one(t, nu, first):
    """``sum_{j>=1} t^j / (j! (first)_j)`` for the normalized I (first=nu+1) or K (first=1-nu) series."""
    term = np.ones_like(t)
    acc = np.zeros_like(t)
    for j in range(1, 60):
        poch = first + (j - 1)
        if first < 0 and np.any(np.abs(poch) < 0.5):
            break
        term = term * t / (j * poch)
        acc = acc + term
        if np.all(np.abs(term) <= 1e-18 * np.maximum(1.0, np.abs(acc))):
            break
    return acc


def channel_corrections(w: Wedge, z: float, r1, r2, channels: int) -> np.ndarray:
    """``D_k(r1, r2)``: z-radial Green function minus its z = 0 counterpart, k = 1..channels.

    Returns an array of shape (channels, points).
    """
    r1, r2 = np.broadcast_arrays(np.atleast_1d(np.asarray(r1, float)), np.atleast_1d(np.asarray(r2, float)))
    rs, rl = np.minimum(r1, r2), np.maximum(r1, r2)
    R = w.radius
    q = math.sqrt(z)
    nus = w.beta * np.arange(1, channels + 1)
    out = np.empty((channels, rs.size))
    X = q * R
    for i, nu in enumerate(nus):
        xs, xl = q * rs, q * rl
        ratio = (rs / rl) ** nu
        refl = (rs * rl / R**2) ** nu
        series_ok = (nu >= 20.0) & (0.25 * xl * xl <= 0.25 * nu)
        res = np.empty(rs.size)
        if np.any(series_ok):
            tS, tL = 0.25 * xs[series_ok] ** 2, 0.25 * xl[series_ok] ** 2
            phs = _series_minus_one(tS, nu, nu + 1.0)
            phl = _series_minus_one(tL, nu, nu + 1.0)
            psl = _series_minus_one(tL, nu, 1.0 - nu)
            tX = 0.25 * X * X
            if tX <= 0.25 * nu:
                rho_m1 = (_series_minus_one(np.array([tX]), nu, 1.0 - nu)[0] - _series_minus_one(np.array([tX]), nu, nu + 1.0)[0]) / (
                    1.0 + _series_minus_one(np.array([tX]), nu, nu + 1.0)[0]
                )
            else:
                ln_rho = (
                    math.log(2 * nu) + 2 * nu * math.log(X / 2) + float(specfun.log_bessel_k(nu, X))
                    - float(specfun.log_bessel_i(nu, X)) - 2 * special.gammaln(nu + 1.0)
                )
                rho_m1 = math.expm1(ln_rho)
            direct_term = phs + psl + phs * psl
            refl_term = (1 + phs) * (1 + phl) * (1 + rho_m1) - 1.0
            res[series_ok] = (ratio[series_ok] * direct_term - refl[series_ok] * refl_term) / (2 * nu)
        other = ~series_ok
        if np.any(other):
            xs_o, xl_o = xs[other], xl[other]
            lis = specfun.log_bessel_i(nu, xs_o)
            gz = np.exp(lis + specfun.log_bessel_k(nu, xl_o)) - np.exp(
                lis + specfun.log_bessel_i(nu, xl_o) + specfun.log_bessel_k(nu, X) - specfun.log_bessel_i(nu, X)
            )
            res[other] = gz - (ratio[other] - refl[other]) / (2 * nu)
        out[i] = res
    return out


def diagonal_tail(w: Wedge, z: float, r, channels: int):
    """Euler-Maclaurin estimate of ``sum_{k > channels} (2/omega) sin^2 D_k(r, r)`` (angle-averaged)."""
    x = math.sqrt(z) * np.asarray(r, float)
    b = w.beta
    a = channels + 0.5
    return (np.log(2.0 / x) - np.arcsinh(b * a / x) + np.log(b * a)) / (2 * b * w.omega)


def green_correction(obj, z: float, x, y, channels: int = DEFAULT_CHANNELS) -> np.ndarray:
    """``g_Omega(z; x, y) - g_Omega(0; x, y)`` (smooth across the diagonal)."""
    w = _wedge_of(obj)
    if z == 0:
        return np.zeros(np.broadcast(np.asarray(x[0]), np.asarray(y[0])).shape)
    (r1, t1), (r2, t2) = x, y
    shape = np.broadcast(np.asarray(r1), np.asarray(r2), np.asarray(t1), np.asarray(t2)).shape
    r1, r2, t1, t2 = (np.broadcast_to(np.asarray(v, float), shape).ravel() for v in (r1, r2, t1, t2))
    d = channel_corrections(w, z, r1, r2, channels)
    ks = w.beta * np.arange(1, channels + 1)[:, None]
    ang = (2.0 / w.omega) * np.sin(ks * t1) * np.sin(ks * t2)
    total = np.sum(ang * d, axis=0)
    tail = np.abs(diagonal_tail(w, z, np.minimum(r1, r2), channels)) * np.minimum(r1, r2) / np.maximum(r1, r2)
    if np.any(tail > TAIL_WARN):
        warnings.warn(f"green_function channel tail up to {tail.max():.2e}", TruncationWarning, stacklevel=2)
    return total.reshape(shape)


def green_function(obj, z: float, x, y, channels: int = DEFAULT_CHANNELS):
    """Green function of ``-Delta^F + z`` at ``x != y`` (polar pairs, broadcastable)."""
    if z < 0:
        raise ValueError("z must be >= 0")
    val = green0(obj, x, y) + green_correction(obj, z, x, y, channels)
    return float(val) if np.ndim(val) == 0 else val


def green_series(basis: SectorBasis, z: float, x, y) -> float:
    """Plain truncated eigen-series (reference for off-diagonal checks)."""
    ux = basis.modes(*x)[:, 0]
    uy = basis.modes(*y)[:, 0]
    return float(np.sum(ux * uy / (basis.lam + z)))


def green_regularized_diag_exact(obj, z: float, y, channels: int = DEFAULT_CHANNELS) -> float:
    """``G_reg(z; y)`` by closed form plus diagonal channel sums with analytic tail."""
    w = _wedge_of(obj)
    base = float(green_reg0(w, y))
    if z == 0:
        return base
    r, th = float(y[0]), float(y[1])
    d = channel_corrections(w, z, np.array([r]), np.array([r]), channels)[:, 0]
    ks = w.beta * np.arange(1, channels + 1)
    return base + float(np.sum((2.0 / w.omega) * np.sin(ks * th) ** 2 * d)) + float(diagonal_tail(w, z, r, channels))


@dataclass
class RegDiagResult:
    value: float
    extrapolants: tuple
    spread: float


def green_regularized_diag(
    obj,
    z: float,
    y,
    h: float | None = None,
    direction: float = 0.0,
    tol: float = 1e-5,
    channels: int = DEFAULT_CHANNELS,
) -> RegDiagResult:
    """``G_reg(z; y)`` by offsets ``h, h/2, h/4`` and two Richardson stages.

    ``direction`` is the offset angle in the plane.
    """
    w = _wedge_of(obj)
    h = 1e-3 * w.radius if h is None else h
    r0, t0 = float(y[0]), float(y[1])
    p0 = np.array([r0 * math.cos(t0), r0 * math.sin(t0)])
    def edge(a):
        return r0 * math.sin(a) if a < math.pi / 2 else r0

    dist = min(edge(t0), edge(w.omega - t0), w.radius - r0)
    if dist <= 10 * h:
        raise ValueError("point too close to the boundary for the offset scale")
    vals = []
    for hh in (h, h / 2, h / 4):
        p = p0 + hh * np.array([math.cos(direction), math.sin(direction)])
        x = (float(np.hypot(*p)), float(np.arctan2(p[1], p[0]) % (2 * math.pi)))
        vals.append(green_function(w, z, x, (r0, t0), channels) - math.log(1.0 / hh) / (2 * math.pi))
    r1 = [2 * vals[1] - vals[0], 2 * vals[2] - vals[1]]
    r2 = (4 * r1[1] - r1[0]) / 3
    spread = abs(r2 - r1[1])
    if spread > tol:
        raise ExtrapolationError(f"regularized diagonal extrapolants disagree by {spread:.2e}")
    return RegDiagResult(float(r2), (r1[0], r1[1], r2), float(spread))


# ---------------------------------------------------------------- vertex trace


@dataclass
class VertexTraceResult:
    value: float
    radii: np.ndarray
    samples: np.ndarray
    exponent: float
    converged: bool


def wedge_mean(w: Wedge, u, rho: float, n_r: int = 40, n_theta: int = 64) -> float:
    """Mean of ``u(r, theta)`` over the small wedge of radius ``rho``."""
    r, th, wt = quad.sector_rule(3.0 * rho, w.omega, n_r, n_theta, r_max=rho)
    return float(np.sum(wt * u(r, th)) / (0.5 * w.omega * rho**2))


def vertex_trace(obj, u, radii, tol: float = 1e-6) -> VertexTraceResult:
    """Scaled small-wedge means ``(pi^{3/2}/4)(2+beta) rho^{-beta} <u>`` extrapolated to rho -> 0.

    ``u`` is a callable ``u(r, theta)`` or a coefficient vector over a basis.
    """
    w = _wedge_of(obj)
    if not callable(u):
        if not isinstance(obj, SectorBasis):
            raise TypeError("coefficient input needs a SectorBasis")
        coeffs = np.asarray(u)
        u = lambda r, th: obj.evaluate(coeffs, np.ravel(r), np.ravel(th)).reshape(np.shape(r))  # noqa: E731
    radii = np.asarray(radii, float)
    if np.any(np.diff(radii) >= 0):
        raise ValueError("radii must decrease")
    b = w.beta
    scale = math.pi**1.5 / 4 * (2 + b)
    t = np.array([scale * rho**-b * wedge_mean(w, u, rho) for rho in radii])
    value, exponent = float(t[-1]), float("nan")
    if len(t) >= 3:
        d1, d2 = t[-2] - t[-3], t[-1] - t[-2]
        if abs(d1) > 1e-14 and d2 / d1 > 0 and abs(d2) < abs(d1):
            q = d2 / d1
            value = float(t[-1] + d2 * q / (1 - q))
        dev = np.abs(t - value)
        good = dev > 1e-13 * max(1.0, abs(value))
        if good.sum() >= 2:
            exponent = float(np.polyfit(np.log(radii[good]), np.log(dev[good]), 1)[0])
    converged = abs(value - t[-1]) <= max(tol, 10 * abs(t[-1] - t[-2]) if len(t) > 1 else tol)
    if not converged:
        warnings.warn("vertex trace did not settle", TruncationWarning, stacklevel=2)
    return VertexTraceResult(value, radii, t, exponent, bool(converged))


# ---------------------------------------------------------------- extension residual


def extension_weak_residual(
    basis: SectorBasis,
    theta: float,
    z: float,
    convention: str,
    v,
    phi,
    lap_phi,
    n_r: int = 200,
    n_theta: int = 96,
) -> float:
    """Relative weak residual ``|<R v, (-Delta + z) phi> - <v, phi>|`` for the theta-extension.

    ``phi`` must vanish near the vertex and on the boundary; the rank-one part
    uses ``g_z`` of the requested convention.
    """
    from .wedge import deficiency_gz, weyl_gamma

    w = basis.wedge
    r1, _ = quad.radial_rule(w.radius, n_r)
    t1, _ = quad.angular_rule(w.omega, n_theta)
    r, th, wt = quad.sector_rule(w.radius, w.omega, n_r, n_theta)
    vv = v(r, th)
    coeffs = resolvent_coeffs(basis, z, basis.project(v))
    u = basis.evaluate_grid(coeffs, r1, t1).ravel()
    gz = deficiency_gz(w, z, r, th, convention)
    den = theta + weyl_gamma(w, z, convention)
    u = u + gz * np.sum(wt * gz * vv) / den
    lhs = np.sum(wt * u * (-lap_phi(r, th) + z * phi(r, th)))
    rhs = np.sum(wt * vv * phi(r, th))
    scale = math.sqrt(np.sum(wt * vv**2) * np.sum(wt * phi(r, th) ** 2))
    return float(abs(lhs - rhs) / scale)


def _bump(w: Wedge):
    """Test pair ``phi = f(r) sin(beta theta)``, ``f = ((r - a)(R - r))^3`` on ``a < r < R``, ``a = R/3``."""
    a, R, b = w.radius / 3.0, w.radius, w.beta

    def f(r):
        return np.where(r > a, ((r - a) * (R - r)) ** 3, 0.0)

    def f1(r):
        p, q = r - a, R - r
        return np.where(r > a, 3 * (p * q) ** 2 * (q - p), 0.0)

    def f2(r):
        p, q = r - a, R - r
        return np.where(r > a, 6 * p * q * (q - p) ** 2 - 6 * (p * q) ** 2, 0.0)

    def phi(r, th):
        return f(r) * np.sin(b * th)

    def lap_phi(r, th):
        return (f2(r) + f1(r) / r - b * b * f(r) / r**2) * np.sin(b * th)

    return phi, lap_phi


def select_convention(basis: SectorBasis, theta: float = 1.0, z: float = 1.0) -> tuple[str, dict]:
    """Pick the convention whose extension resolvent solves the weak equation (smaller residual)."""
    w = basis.wedge
    phi, lap_phi = _bump(w)

    def v(r, th):
        return (w.radius - r) * np.sin(w.beta * th)

    res = {c: extension_weak_residual(basis, theta, z, c, v, phi, lap_phi) for c in ("literal", "modified")}
    return min(res, key=res.get), res
