"""Gauss-Legendre rules on the sector, split at the cutoff kinks r = R/3, 2R/3."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss(a: float, b: float, n: int):
    x, w = _leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def radial_rule(radius: float, n: int, r_max: float | None = None):
    """Nodes/weights for ``int_0^{r_max} F(r) dr`` with panels at R/3 and 2R/3.

    The first panel uses ``r = (R/3) t^3`` so integrands behaving like
    ``r^{1-2 beta}`` at the vertex are integrated to high order.
    """
    r_max = radius if r_max is None else r_max
    breaks = [b for b in (radius / 3.0, 2.0 * radius / 3.0) if b < r_max]
    first = breaks[0] if breaks else r_max
    t, wt = gauss(0.0, 1.0, 2 * n)
    nodes = [first * t**3]
    weights = [3.0 * first * t**2 * wt]
    edges = breaks + [r_max]
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss(a, b, n)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def angular_rule(omega: float, n: int):
    return gauss(0.0, omega, n)


def sector_rule(radius: float, omega: float, n_r: int, n_theta: int, r_max: float | None = None):
    """Tensor rule for ``int int F(r, theta) r dr dtheta``; returns (r, theta, weights) flattened."""
    r, wr = radial_rule(radius, n_r, r_max)
    th, wth = angular_rule(omega, n_theta)
    rr, tt = np.meshgrid(r, th, indexing="ij")
    ww = np.outer(wr * r, wth)
    return rr.ravel(), tt.ravel(), ww.ravel()
