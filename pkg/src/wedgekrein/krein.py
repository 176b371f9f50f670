"""Kreĭn-type resolvent formula for finite-rank self-adjoint extensions.

A base self-adjoint operator ``A`` (negative definite) and a surjective
trace ``tau: D(A) -> C^n`` determine the symmetric restriction
``S = A | ker(tau)``. Every self-adjoint extension of ``S`` is labelled by
a pair ``(Pi, Theta)``: an orthogonal projector on ``C^n`` and a symmetric
map on its range. Its resolvent is

    (-A_{Pi,Theta} + z)^{-1} = (-A + z)^{-1}
        + G_z Pi (Theta + Pi W_z Pi)^{-1} Pi G_z^*

with ``G_z = (tau (-A + z)^{-1})^*`` and ``W_z = z G_0^* G_z``.
All spectral parameters are real.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

PROJ_TOL = 1e-12
SINGULAR_RTOL = 1e-10
GAUGE_MAX_COND = 1e12


class SingularDenominatorError(ArithmeticError):
    """The restricted Kreĭn matrix is singular: z is an eigenvalue parameter."""


class NearSingularGaugeError(ValueError):
    pass


class BaseOperator(Protocol):
    """What ``assemble_resolvent`` needs from a base operator."""

    n: int

    def resolvent_apply(self, z: float, v: np.ndarray) -> np.ndarray: ...

    def gmap_apply(self, z: float, xi: np.ndarray) -> np.ndarray: ...

    def gmap_adjoint(self, z: float, v: np.ndarray) -> np.ndarray: ...

    def weyl_block(self, z: float) -> np.ndarray: ...


def _range_basis(pi: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(pi)
    return v[:, w > 0.5]


@dataclass(frozen=True)
class ExtensionParameter:
    """The label ``(Pi, Theta)`` of one self-adjoint extension.

    ``theta`` is stored as an n x n matrix supported on ``range(pi)``.
    """

    pi: np.ndarray
    theta: np.ndarray
    basis: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pi = np.atleast_2d(np.asarray(self.pi))
        theta = np.atleast_2d(np.asarray(self.theta))
        n = pi.shape[0]
        if pi.shape != (n, n) or theta.shape != (n, n):
            raise ValueError("pi and theta must be square matrices of equal size")
        if not np.allclose(pi @ pi, pi, atol=PROJ_TOL, rtol=0) or not np.allclose(
            pi, pi.conj().T, atol=PROJ_TOL, rtol=0
        ):
            raise ValueError("pi is not an orthogonal projector")
        if not np.allclose(theta, theta.conj().T, atol=PROJ_TOL, rtol=0):
            raise ValueError("theta is not symmetric")
        if not np.allclose(pi @ theta @ pi, theta, atol=PROJ_TOL, rtol=0):
            raise ValueError("theta is not supported on range(pi)")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "basis", _range_basis(pi))

    @property
    def n(self) -> int:
        return self.pi.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def friedrichs(cls, n: int) -> "ExtensionParameter":
        return cls(np.zeros((n, n)), np.zeros((n, n)))

    @classmethod
    def scalar(cls, theta: float) -> "ExtensionParameter":
        """n = 1, Pi = 1."""
        return cls(np.ones((1, 1)), np.full((1, 1), float(theta)))

    @classmethod
    def full(cls, theta: np.ndarray) -> "ExtensionParameter":
        theta = np.atleast_2d(np.asarray(theta))
        return cls(np.eye(theta.shape[0]), theta)

    @classmethod
    def from_subspace(cls, span: np.ndarray, theta_small: np.ndarray) -> "ExtensionParameter":
        """Build from a spanning set of range(Pi) and Theta in an orthonormal basis of it.

        ``theta_small`` is expressed in the orthonormal basis returned by QR of ``span``.
        """
        q, _ = np.linalg.qr(np.atleast_2d(span))
        theta_small = np.atleast_2d(theta_small)
        return cls(q @ q.conj().T, q @ theta_small @ q.conj().T)


def restricted_matrix(ext: ExtensionParameter, weyl: np.ndarray) -> np.ndarray:
    q = ext.basis
    return q.conj().T @ (ext.theta + weyl) @ q


def krein_coefficients(ext: ExtensionParameter, weyl: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``Pi (Theta + Pi W Pi)^{-1} Pi rhs`` on an orthonormal basis of range(Pi)."""
    q = ext.basis
    if q.shape[1] == 0:
        return np.zeros_like(rhs)
    m = restricted_matrix(ext, weyl)
    sv = np.linalg.svd(m, compute_uv=False)
    # scale by the summands too, so a 1 x 1 cancellation is caught
    scale = max(sv[0], np.linalg.norm(ext.theta, 2), np.linalg.norm(q.conj().T @ weyl @ q, 2))
    if sv[-1] <= SINGULAR_RTOL * scale:
        raise SingularDenominatorError(
            f"restricted Kreĭn matrix singular (sigma_min/scale = {sv[-1] / max(scale, 1e-300):.3e})"
        )
    return q @ np.linalg.solve(m, q.conj().T @ rhs)


def assemble_resolvent(base: BaseOperator, ext: ExtensionParameter, z: float, v: np.ndarray) -> np.ndarray:
    """Apply the extension's resolvent ``(-A_{Pi,Theta} + z)^{-1}`` to ``v``."""
    out = base.resolvent_apply(z, v)
    if ext.rank == 0:
        return out
    xi = krein_coefficients(ext, base.weyl_block(z), base.gmap_adjoint(z, v))
    return out + base.gmap_apply(z, xi)


def gauge_transform(ext: ExtensionParameter, m: np.ndarray) -> ExtensionParameter:
    """Relabel ``(Pi, Theta)`` for the trace ``M tau``.

    range(Pi_M) = (M^*)^{-1} range(Pi), Theta_M = Pi_M M Theta M^* Pi_M.
    """
    m = np.atleast_2d(np.asarray(m))
    if m.shape != ext.pi.shape:
        raise ValueError("gauge matrix has the wrong shape")
    if not np.isfinite(np.linalg.cond(m)) or np.linalg.cond(m) > GAUGE_MAX_COND:
        raise NearSingularGaugeError("gauge matrix is (nearly) singular")
    n = ext.n
    if ext.rank == 0:
        return ExtensionParameter.friedrichs(n)
    span = np.linalg.solve(m.conj().T, ext.basis)
    q, _ = np.linalg.qr(span)
    pi_m = q @ q.conj().T
    theta_m = pi_m @ m @ ext.theta @ m.conj().T @ pi_m
    theta_m = 0.5 * (theta_m + theta_m.conj().T)
    return ExtensionParameter(pi_m, theta_m)


def weyl_block_via_difference(base, z: float, check_tol: float = 1e-8) -> np.ndarray:
    """``z G_0^* G_z`` by adjoint composition, cross-checked against ``tau(G_0 - G_z)``.

    The cross-check runs when ``base`` exposes ``trace_of_gdiff(z)``.
    """
    n = base.n
    eye = np.eye(n)
    cols = np.column_stack([base.gmap_apply(z, eye[:, j]) for j in range(n)])
    block = z * np.column_stack([base.gmap_adjoint(0.0, cols[:, j]) for j in range(n)])
    other = getattr(base, "trace_of_gdiff", None)
    if other is not None:
        alt = other(z)
        scale = max(np.abs(block).max(), np.abs(alt).max(), 1e-300)
        if np.abs(block - alt).max() > check_tol * max(scale, 1.0):
            raise ArithmeticError("adjoint-composition and trace-difference Weyl blocks disagree")
    return block


@dataclass
class AnchoredWeyl:
    """Truncation-consistent Weyl matrix.

    ``W(z) = W_exact(z_a) + (z - z_a) G_{z_a}^* G_z`` agrees with the exact
    Weyl matrix at the anchor and satisfies ``W(z) - W(w) = (z - w) G_w^* G_z``
    exactly for the (possibly truncated) G-columns, which keeps resolvent
    identities exact at truncation.
    """

    w_anchor: np.ndarray
    z_anchor: float
    columns: callable  # z -> matrix whose columns are G_z e_j

    def __call__(self, z: float) -> np.ndarray:
        if z == self.z_anchor:
            return self.w_anchor
        ga = self.columns(self.z_anchor)
        gz = self.columns(z)
        return self.w_anchor + (z - self.z_anchor) * (ga.conj().T @ gz)
