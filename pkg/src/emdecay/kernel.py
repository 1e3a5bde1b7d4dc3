"""Truncated eigenfunction-Bessel series for the rescaled propagator kernels.

Schroedinger:  K(x, y) = (|x||y|)^{(2-n)/2} sum_k I_{beta_k}(-i|x||y|) psi_k(x^) conj(psi_k(y^))
Heat:          G(x, y) = (|x||y|)^{(2-n)/2} e^{-(|x|^2+|y|^2)/2} sum_k I_{beta_k}(|x||y|) psi_k(x^) conj(psi_k(y^))

Each term carries ``z^{beta_k - (n-2)/2}`` with ``z = |x||y|`` and
``beta_k - (n-2)/2 >= g >= 0``, so the series is evaluated through the
reduced Bessel functions of :mod:`emdecay.special` and the origin is an
explicit limit rather than ``0/0`` arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import gammaln

from .angular import AngularModel, build_model
from .errors import DomainError, InsufficientEigenpairsError, OutOfCertificateError
from .special import weighted_i_scaled_terms, weighted_j_terms

Which = Literal["schrodinger", "heat"]

DEFAULT_Z_MAX = 10.0


@dataclass(frozen=True)
class SpacePoint:
    """Polar factorization ``x = r * omega``.

    ``omega`` is an angle for n=2 and ``(polar, azimuth)`` for n=3.
    """

    r: float
    omega: float | tuple

    def __post_init__(self):
        if not self.r >= 0:
            raise DomainError(f"radius must be >= 0, got {self.r}")


def _to_arrays(n, points):
    """Accept a SpacePoint, a sequence of them, or an ``(r, omega)`` array pair."""
    if isinstance(points, SpacePoint):
        points, single = [points], True
    else:
        single = False
    if isinstance(points, tuple) and len(points) == 2 and not isinstance(points[0], SpacePoint):
        r = np.atleast_1d(np.asarray(points[0], float))
        omega = np.asarray(points[1], float)
    else:
        r = np.array([p.r for p in points], float)
        omega = np.array([p.omega for p in points], float)
    if n == 2:
        omega = np.broadcast_to(np.atleast_1d(omega), r.shape)
    else:
        omega = np.broadcast_to(np.atleast_2d(omega), r.shape + (2,))
    if np.any(r < 0):
        raise DomainError("radius must be >= 0")
    return r, omega, single


def _term_log_bounds(model, z_ref):
    """log of ``z_ref^{beta - shift} sup^2 2^{-beta} / Gamma(beta + 1)`` per pair."""
    betas = model.betas
    expo = betas - model.shift
    return expo * math.log(z_ref) + 2.0 * np.log(model.sup_norms) - betas * math.log(2.0) - gammaln(betas + 1.0)


def _tail_remainder(terms, block_end):
    """Geometric estimate of the sum beyond the stored pairs, from the last complete blocks."""
    ends = np.flatnonzero(block_end)
    if len(ends) < 3:
        return math.inf
    starts = np.concatenate([[0], ends[:-1] + 1])
    sums = np.array([terms[s : e + 1].sum() for s, e in zip(starts, ends)])
    last, prev = sums[-1], sums[-2]
    if prev <= 0:
        return 0.0 if last == 0 else math.inf
    rho = last / prev
    if rho >= 1.0:
        return math.inf
    incomplete = terms[ends[-1] + 1 :].sum()
    return float(incomplete + last * rho / (1.0 - rho))


@dataclass(frozen=True, eq=False)
class KernelSeries:
    model: AngularModel
    tol: float
    z_max: float
    K_used: int
    tail_bound: float

    @property
    def n(self):
        return self.model.n

    @property
    def betas(self):
        return self.model.betas[: self.K_used]

    def term_bounds(self, z):
        """``z^{beta_k - shift} sup_k^2 2^{-beta_k}/Gamma(beta_k+1)`` for each retained pair.

        Pointwise majorant of the k-th term of ``|K|`` and ``|G|`` at ``|x||y| = z``
        (sharp constant from the integral representation).
        """
        model = self.model
        betas = model.betas[: self.K_used]
        z = np.atleast_1d(np.asarray(z, float))[:, None]
        expo = betas - model.shift
        with np.errstate(divide="ignore"):
            logt = 2.0 * np.log(model.sup_norms[: self.K_used]) - betas * math.log(2.0) - gammaln(betas + 1.0)
            zpow = np.where(expo < 1e-12, 1.0, np.exp(expo * np.log(z)))
        return zpow * np.exp(logt)

    def magnitude_bound(self, z):
        return self.term_bounds(z).sum(axis=1)

    def to_dict(self):
        return {
            "tol": self.tol,
            "z_max": self.z_max,
            "K_used": self.K_used,
            "tail_bound": self.tail_bound,
            "g": self.model.g,
        }


def plan(model, z_max, tol, z_cap=None):
    """Smallest block-complete truncation whose tail bound is below ``tol`` on ``z <= z_max``."""
    if tol <= 0 or z_max <= 0:
        raise DomainError("tol and z_max must be positive")
    if z_cap is not None and z_max > z_cap:
        raise DomainError(f"z_max={z_max} exceeds the configured certificate bound {z_cap}")
    # every exponent beta - shift is >= 0, so the bound at z_max covers all z <= z_max
    terms = np.exp(_term_log_bounds(model, z_max))
    remainder = _tail_remainder(terms, model.block_end)
    # tails[K] = sum_{k >= K} terms (0-based), i.e. the tail after keeping K pairs
    tails = np.concatenate([np.cumsum(terms[::-1])[::-1], [0.0]]) + remainder
    for K in range(1, model.k_max + 1):
        if model.block_end[K - 1] and tails[K] <= tol:
            return KernelSeries(model=model, tol=tol, z_max=z_max, K_used=K, tail_bound=float(tails[K]))
    achieved = float(tails[model.k_max]) if model.block_end[-1] else float(tails[-1])
    raise InsufficientEigenpairsError(
        f"{model.k_max} eigenpairs cannot certify tol={tol:g} at z_max={z_max:g} "
        f"(achieved tail bound {achieved:.3e})",
        achieved=achieved,
    )


def auto_plan(spec, z_max=DEFAULT_Z_MAX, tol=1e-10, k_start=32, k_limit=8192):
    """Build a model large enough for :func:`plan` to succeed, doubling ``K_max``."""
    k = k_start
    while True:
        model = build_model(spec, k)
        try:
            return plan(model, z_max, tol)
        except InsufficientEigenpairsError:
            if k >= k_limit:
                raise
            k *= 2


# --------------------------------------------------------------------------
# evaluation


def radial_terms(ks, z, which, theta=0.0, gauss=None):
    """``(len(z), K_used)`` matrix of radial factors including ``z^{-(n-2)/2 - theta g}``.

    Schroedinger: ``e^{-i pi beta/2} z^{-s} J_beta(z)``.
    Heat: ``z^{-s} e^{-z} I_beta(z)`` times ``gauss`` (``e^{-(|x|-|y|)^2/2}``).
    """
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0, 1], got {theta}")
    z = np.atleast_1d(np.asarray(z, float))
    betas = ks.betas
    shift = ks.model.shift + theta * ks.model.g
    ub, inverse = np.unique(np.round(betas, 13), return_inverse=True)
    if which == "schrodinger":
        vals = weighted_j_terms(ub, z, shift)
        phase = np.exp(-0.5j * math.pi * ub)
        return (vals * phase[None, :])[:, inverse]
    if which == "heat":
        vals = weighted_i_scaled_terms(ub, z, shift)[:, inverse]
        if gauss is not None:
            vals = vals * np.asarray(gauss, float)[:, None]
        return vals
    raise DomainError(f"which must be 'schrodinger' or 'heat', got {which!r}")


def _check_certificate(ks, z):
    if np.any(z > ks.z_max * (1 + 1e-12)):
        raise OutOfCertificateError(f"|x||y| = {float(np.max(z)):.6g} exceeds the certified z_max = {ks.z_max:g}")


def _pairwise(ks, x, y, which, theta):
    rx, ox, single_x = _to_arrays(ks.n, x)
    ry, oy, single_y = _to_arrays(ks.n, y)
    rx, ry = np.broadcast_arrays(rx, ry)
    z = rx * ry
    _check_certificate(ks, z)
    gauss = np.exp(-0.5 * (rx - ry) ** 2) if which == "heat" else None
    T = radial_terms(ks, z, which, theta, gauss)
    px = ks.model.eval_psi(ox)[:, : ks.K_used]
    py = ks.model.eval_psi(oy)[:, : ks.K_used]
    out = np.sum(T * px * np.conj(py), axis=1)
    return (out[0] if single_x and single_y else out), z


def eval_schrodinger_K(ks, x, y):
    """Rescaled Schroedinger kernel ``K(x, y)`` (complex)."""
    return _pairwise(ks, x, y, "schrodinger", 0.0)[0]


def eval_heat_G(ks, x, y):
    """Rescaled heat kernel ``G(x, y)``; real up to rounding when ``A = 0``."""
    return _pairwise(ks, x, y, "heat", 0.0)[0]


def weighted_kernel(ks, x, y, theta, which="schrodinger"):
    """``z^{-theta g} |kernel(x, y)|`` with ``z = |x||y|``; finite at ``z = 0``."""
    return np.abs(_pairwise(ks, x, y, which, theta)[0])


def angular_sum(ks, z, psi_x, psi_y, which, theta=0.0, gauss=None):
    """Kernel on a product grid: shape ``(len(z), len(psi_x), len(psi_y))``.

    ``psi_x``/``psi_y`` are eigenfunction matrices from ``model.eval_psi``
    restricted to the retained pairs.
    """
    T = radial_terms(ks, z, which, theta, gauss)
    return np.einsum("zk,xk,yk->zxy", T, psi_x, np.conj(psi_y), optimize=True)
