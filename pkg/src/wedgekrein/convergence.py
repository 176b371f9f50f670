"""Renormalized point interactions approaching the corner.

A single point ``y_N = (r_N, theta0)`` moves to the vertex. With coupling
``theta_N = s(y_N)^2 theta`` the point-interaction resolvent tends in norm to
the resolvent of the theta-extension at the corner. Both resolvents share the
Friedrichs part, so their difference is ``c_N a a^T - c b b^T`` and its norm
follows from a 2 x 2 problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sector
from .krein import ExtensionParameter, SingularDenominatorError, gauge_transform
from .sector import SectorBasis, build_basis
from .wedge import ADOPTED_CONVENTION, AnalyticExtension, Wedge, weyl_gamma

TAIL_TOL = 1e-4


@dataclass(frozen=True)
class ApproachPath:
    theta0: float
    radii: tuple

    def __post_init__(self):
        r = np.asarray(self.radii, float)
        if r.size == 0 or np.any(r <= 0) or np.any(np.diff(r) >= 0):
            raise ValueError("path radii must be positive and strictly decreasing")
        object.__setattr__(self, "radii", tuple(float(x) for x in r))

    @classmethod
    def geometric(cls, w: Wedge, theta0: float | None = None, n_max: int = 12, ratio: float = 0.5, r0: float | None = None):
        r0 = w.radius / 3.0 if r0 is None else r0
        if r0 > w.radius / 3.0 + 1e-15:
            raise ValueError("path must start inside r <= R/3")
        theta0 = 0.5 * w.omega if theta0 is None else theta0
        return cls(theta0, tuple(r0 * ratio**n for n in range(n_max + 1)))

    def check(self, w: Wedge) -> None:
        if not 0 < self.theta0 < w.omega or math.sin(w.beta * self.theta0) <= 0:
            raise ValueError("theta0 must keep sin(beta theta0) > 0")
        if self.radii[0] > w.radius / 3.0 + 1e-15:
            raise ValueError("path must stay inside r <= R/3")

    def point(self, n: int) -> tuple[float, float]:
        return (self.radii[n], self.theta0)


def s_value(w: Wedge, y) -> float:
    """``s(y) = r^beta sin(beta theta)/sqrt(pi)`` (cutoff is 1 along the path)."""
    return y[0] ** w.beta * math.sin(w.beta * y[1]) / math.sqrt(math.pi)


def rank_two_norm(a: np.ndarray, ca: float, b: np.ndarray, cb: float) -> float:
    """``|| ca a a^T - cb b b^T ||_2`` through a thin QR of ``[a b]``."""
    _, r = np.linalg.qr(np.column_stack([a, b]))
    small = r @ np.diag([ca, -cb]) @ r.T
    return float(np.abs(np.linalg.eigvalsh(0.5 * (small + small.T))).max())


@dataclass
class ConvergenceRow:
    N: int
    r: float
    s: float
    theta_N: float
    distance: float
    distance_no_renorm: float
    sensitivity: float
    M_used: int
    tail: float
    capped: bool


@dataclass
class ConvergenceRun:
    wedge: Wedge
    target: AnalyticExtension
    path: ApproachPath
    z_eval: float = 1.0
    K: int = sector.DEFAULT_K
    M: int = sector.DEFAULT_M
    m_cap: int = 120
    convention: str = ADOPTED_CONVENTION
    channels: int = sector.DEFAULT_CHANNELS
    rows: list = field(default_factory=list)

    def __post_init__(self):
        self.path.check(self.wedge)
        if self.z_eval <= 0:
            raise ValueError("z_eval must be positive")
        if self.convention != ADOPTED_CONVENTION:
            raise ValueError("the corner target is defined with the adopted convention only")

    def basis(self, M: int) -> SectorBasis:
        return build_basis(self.wedge, self.K, M)

    def s_at(self, n: int) -> float:
        return s_value(self.wedge, self.path.point(n))


def renormalized_coupling(run: ConvergenceRun, n: int) -> ExtensionParameter:
    """``Pi_N, Theta_N = Pi_N M_N Theta M_N Pi_N`` with ``M_N = s(y_N)``."""
    return gauge_transform(ExtensionParameter.scalar(run.target.theta), np.array([[run.s_at(n)]]))


def _columns(basis: SectorBasis, y, z: float) -> np.ndarray:
    return basis.modes(*y)[:, 0] / (basis.lam + z)


def _tail_ratio(basis: SectorBasis, a: np.ndarray) -> float:
    top = basis.m > (3 * basis.M) // 4
    head = np.linalg.norm(a[~top])
    return float(np.linalg.norm(a[top]) / head) if head > 0 else 0.0


def _select_basis(run: ConvergenceRun, y):
    """Raise M by factors of 1.5 until the coefficient tail is resolved or the cap binds."""
    M = run.M
    while True:
        basis = run.basis(M)
        a = _columns(basis, y, run.z_eval)
        tail = _tail_ratio(basis, a)
        if tail < TAIL_TOL:
            return basis, a, tail, False
        if M >= run.m_cap:
            return basis, a, tail, True
        M = min(run.m_cap, int(math.ceil(1.5 * M)))


def _distance_parts(run: ConvergenceRun, basis: SectorBasis, a: np.ndarray, y, theta_n: float):
    z = run.z_eval
    gh = float(sector.green_reg0(run.wedge, y)) - sector.green_regularized_diag_exact(run.wedge, z, y, run.channels)
    den_n = theta_n + gh
    den_t = run.target.theta + weyl_gamma(run.wedge, z, run.convention)
    if abs(den_n) < 1e-14 or abs(den_t) < 1e-14:
        raise SingularDenominatorError("z_eval hits an eigenvalue parameter")
    b = basis.vertex_traces() / (basis.lam + z)
    return a, 1.0 / den_n, b, 1.0 / den_t


def resolvent_distance(run: ConvergenceRun, n: int, renormalize: bool = True) -> tuple[float, dict]:
    y = run.path.point(n)
    basis, a, tail, capped = _select_basis(run, y)
    theta_n = float(renormalized_coupling(run, n).theta[0, 0]) if renormalize else run.target.theta
    a, ca, b, cb = _distance_parts(run, basis, a, y, theta_n)
    dist = rank_two_norm(a, ca, b, cb)
    half = basis.m <= basis.M // 2
    coarse = rank_two_norm(a[half], ca, b[half], cb)
    info = {"M_used": basis.M, "tail": tail, "capped": capped, "sensitivity": abs(dist - coarse), "theta_N": theta_n}
    return dist, info


def friedrichs_gap(run: ConvergenceRun) -> float:
    """``|| R^theta_z - R^F_z ||`` at truncation M."""
    basis = run.basis(run.M)
    z = run.z_eval
    b = basis.vertex_traces() / (basis.lam + z)
    return abs(1.0 / (run.target.theta + weyl_gamma(run.wedge, z, run.convention))) * float(b @ b)


def execute(run: ConvergenceRun) -> list[ConvergenceRow]:
    rows = []
    for n in range(len(run.path.radii)):
        d, info = resolvent_distance(run, n, True)
        d0, _ = resolvent_distance(run, n, False)
        rows.append(
            ConvergenceRow(
                N=n,
                r=run.path.radii[n],
                s=run.s_at(n),
                theta_N=info["theta_N"],
                distance=d,
                distance_no_renorm=d0,
                sensitivity=info["sensitivity"],
                M_used=info["M_used"],
                tail=info["tail"],
                capped=info["capped"],
            )
        )
    run.rows = rows
    return rows


def loglog_slope(r, d, tail_fraction: float = 0.5) -> float:
    """Least-squares slope of ln d against ln r over the deepest part of the path."""
    r, d = np.asarray(r, float), np.asarray(d, float)
    start = int(len(r) * (1 - tail_fraction))
    sel = slice(start, None) if len(r) - start >= 2 else slice(None)
    return float(np.polyfit(np.log(r[sel]), np.log(d[sel]), 1)[0])


def trace_deviation(run: ConvergenceRun, n: int, u0, zeta: float) -> float:
    """``|u(y_N)/s(y_N) - zeta|`` for ``u = u0 + zeta s`` (``u0`` callable)."""
    y = run.path.point(n)
    s = run.s_at(n)
    return abs((float(u0(*y)) + zeta * s) / s - zeta)
