"""Tensor quadrature rules on the half-line and on S^1 / S^2."""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.legendre import leggauss


def gauss_legendre(a, b, n):
    x, w = leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def sphere_rule(n_dim, nodes):
    """Quadrature on S^{n-1}.

    ``n_dim == 2``: ``nodes`` equispaced angles (trapezoid, exact for
    trigonometric polynomials of degree < nodes).
    ``n_dim == 3``: ``nodes`` Gauss-Legendre points in cos(polar) times
    ``2 * nodes`` azimuths, exact for spherical harmonics of degree < nodes
    in each factor.

    Returns ``(points, weights)``; points are shape ``(N,)`` for n=2 and
    ``(N, 2)`` (polar, azimuth) for n=3.
    """
    if n_dim == 2:
        theta = 2.0 * math.pi * np.arange(nodes) / nodes
        return theta, np.full(nodes, 2.0 * math.pi / nodes)
    if n_dim == 3:
        x, wx = leggauss(nodes)
        n_az = 2 * nodes
        az = 2.0 * math.pi * np.arange(n_az) / n_az
        polar = np.arccos(x)
        pp, aa = np.meshgrid(polar, az, indexing="ij")
        ww = np.outer(wx, np.full(n_az, 2.0 * math.pi / n_az))
        return np.column_stack([pp.ravel(), aa.ravel()]), ww.ravel()
    raise ValueError(f"sphere quadrature only for n=2,3, got {n_dim}")


def sphere_grid(n_dim, nodes):
    """Nested sampling grid (no weights) used for suprema.

    Doubling ``nodes`` yields a superset, so grid maxima are monotone
    under refinement.  For n=3 the polar grid includes both poles.
    """
    if n_dim == 2:
        return 2.0 * math.pi * np.arange(nodes) / nodes
    if n_dim == 3:
        n_polar = max(nodes // 2, 1)
        polar = math.pi * np.arange(n_polar + 1) / n_polar
        az = 2.0 * math.pi * np.arange(nodes) / nodes
        pp, aa = np.meshgrid(polar, az, indexing="ij")
        pts = np.column_stack([pp.ravel(), aa.ravel()])
        # poles are single points
        keep = ~((np.isclose(pts[:, 0], 0.0) | np.isclose(pts[:, 0], math.pi)) & (pts[:, 1] > 0))
        return pts[keep]
    raise ValueError(f"sphere grid only for n=2,3, got {n_dim}")


def meridian_grid(nodes):
    """Polar angles on the azimuth-0 meridian of S^2, poles included."""
    n_polar = max(nodes // 2, 1)
    polar = math.pi * np.arange(n_polar + 1) / n_polar
    return np.column_stack([polar, np.zeros_like(polar)])


def to_cartesian(n_dim, omega):
    omega = np.asarray(omega, float)
    if n_dim == 2:
        return np.column_stack([np.cos(omega), np.sin(omega)])
    polar, az = omega[..., 0], omega[..., 1]
    return np.stack([np.sin(polar) * np.cos(az), np.sin(polar) * np.sin(az), np.cos(polar)], axis=-1)
