"""Apply ``e^{-itH}`` and ``e^{-tH}`` to compactly supported data by quadrature.

The kernel is separable in the angular variables, so the ``y``-integral is
done in two stages: the datum is projected onto the eigenfunctions on each
radial quadrature shell, and the radial sum then runs over the Bessel
factors only.  This is the same tensor quadrature (Gauss-Legendre in
``|y|`` times a sphere rule) without ever forming the full kernel matrix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import DomainError, OracleFailure, OutOfCertificateError
from .kernel import _to_arrays, radial_terms
from .quadrature import gauss_legendre, sphere_rule


@dataclass(frozen=True)
class InitialDatum:
    """Datum supported in the annulus ``r_min <= |y| <= r_max``.

    ``values(r, omega)`` is vectorized over matching arrays.  ``radial_nodes``
    plays the role of the smoothness tag: it fixes the Gauss-Legendre order.
    """

    r_min: float
    r_max: float
    values: Callable = field(repr=False)
    radial_nodes: int = 64
    angular_nodes: int | None = None

    def __post_init__(self):
        if not 0 <= self.r_min < self.r_max:
            raise DomainError(f"need 0 <= r_min < r_max, got [{self.r_min}, {self.r_max}]")

    def scaled(self, factor):
        """Datum multiplied by a constant."""
        f = self.values
        return InitialDatum(self.r_min, self.r_max, lambda r, w: factor * f(r, w), self.radial_nodes, self.angular_nodes)

    def dilated(self, lam):
        """``y -> f(y / lam)``."""
        f = self.values
        return InitialDatum(
            lam * self.r_min, lam * self.r_max, lambda r, w: f(r / lam, w), self.radial_nodes, self.angular_nodes
        )

    @classmethod
    def radial(cls, profile, r_min, r_max, radial_nodes=64, angular_nodes=None):
        return cls(r_min, r_max, lambda r, w: profile(r), radial_nodes, angular_nodes)


@dataclass(frozen=True)
class PropagationResult:
    t: float
    r: np.ndarray
    omega: np.ndarray
    values: np.ndarray
    quadrature_error_estimate: float
    converged: bool

    def rows(self):
        omega = self.omega.reshape(len(self.r), -1)
        for i in range(len(self.r)):
            v = complex(self.values[i])
            yield [self.t, float(self.r[i]), *[float(a) for a in omega[i]], v.real, v.imag, abs(v)]

    def header(self):
        n_ang = self.omega.reshape(len(self.r), -1).shape[1]
        angles = ["theta"] if n_ang == 1 else ["polar", "azimuth"]
        return ["t", "r", *angles, "re", "im", "abs"]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.header())
            for row in self.rows():
                writer.writerow([f"{v:.17g}" for v in row])


def _default_angular_nodes(model, K_used):
    if model.n == 2:
        fmax = int(np.max(np.abs(model.freqs[np.any(np.abs(model.coeffs[:K_used]) > 1e-15, axis=0)])))
        return 2 * fmax + 32
    return int(model.lm[:K_used, 0].max()) + 16


def _propagate(model, ks, u0, t, out_points, which, radial_nodes, angular_nodes):
    if t <= 0:
        raise DomainError("t must be positive")
    if u0.r_min == 0 and model.g > 0:
        raise DomainError("data touching the origin are only allowed for g = 0 models")
    n = model.n
    r_out, om_out, _ = _to_arrays(n, out_points)
    scale = math.sqrt(2.0 * t)
    z_peak = float(np.max(r_out)) * u0.r_max / (scale * scale)
    if z_peak > ks.z_max * (1 + 1e-12):
        raise OutOfCertificateError(
            f"support radius {u0.r_max} and output radius {np.max(r_out):.4g} give z = {z_peak:.4g} "
            f"> certified {ks.z_max:g} at t = {t}"
        )
    K = ks.K_used
    r_nodes, r_w = gauss_legendre(u0.r_min, u0.r_max, radial_nodes)
    ang, ang_w = sphere_rule(n, angular_nodes)
    psi_ang = model.eval_psi(ang)[:, :K]
    rr = np.repeat(r_nodes, len(ang_w))
    aa = np.tile(ang, (radial_nodes, 1)) if n == 3 else np.tile(ang, radial_nodes)
    f = np.asarray(u0.values(rr, aa), dtype=complex).reshape(radial_nodes, len(ang_w))
    if which == "schrodinger":
        f = f * np.exp(1j * r_nodes**2 / (4.0 * t))[:, None]
    # c[j, k] = sum_a conj(psi_k(w_a)) f(r_j, w_a) w_a  times the radial measure
    coeff = (f * ang_w[None, :]) @ np.conj(psi_ang)
    coeff *= (r_w * r_nodes ** (n - 1))[:, None]

    psi_out = model.eval_psi(om_out)[:, :K]
    rho_out = r_out / scale
    rho_in = r_nodes / scale
    z = np.outer(rho_out, rho_in).ravel()
    gauss = np.exp(-0.5 * np.subtract.outer(rho_out, rho_in) ** 2).ravel() if which == "heat" else None
    T = radial_terms(ks, z, which, 0.0, gauss).reshape(len(r_out), radial_nodes, K)
    inner = np.einsum("ijk,jk->ik", T, coeff)
    vals = np.sum(inner * psi_out, axis=1) * scale ** (-n)
    if which == "schrodinger":
        vals = -1j * np.exp(1j * r_out**2 / (4.0 * t)) * vals
    return r_out, om_out, vals


def _apply(model, ks, u0, t, out_points, which, rtol, radial_nodes, angular_nodes):
    radial_nodes = radial_nodes or u0.radial_nodes
    angular_nodes = angular_nodes or u0.angular_nodes or _default_angular_nodes(model, ks.K_used)
    r, om, coarse = _propagate(model, ks, u0, t, out_points, which, radial_nodes, angular_nodes)
    _, _, fine = _propagate(model, ks, u0, t, out_points, which, 2 * radial_nodes, 2 * angular_nodes)
    scale = max(float(np.max(np.abs(fine))), 1e-300)
    err = float(np.max(np.abs(fine - coarse)) / scale)
    return PropagationResult(t=t, r=r, omega=om, values=fine, quadrature_error_estimate=err, converged=err < rtol)


def apply_schrodinger(model, ks, u0, t, out_points, rtol=1e-6, radial_nodes=None, angular_nodes=None):
    """``(e^{-itH} u0)(x)`` at ``out_points``; the estimate compares against halved resolution."""
    return _apply(model, ks, u0, t, out_points, "schrodinger", rtol, radial_nodes, angular_nodes)


def apply_heat(model, ks, u0, t, out_points, rtol=1e-6, radial_nodes=None, angular_nodes=None):
    """``(e^{-tH} u0)(x)`` at ``out_points``."""
    return _apply(model, ks, u0, t, out_points, "heat", rtol, radial_nodes, angular_nodes)


# --------------------------------------------------------------------------
# Crank-Nicolson oracle for the three-dimensional inverse-square heat flow


@dataclass(frozen=True)
class OracleResult:
    values: np.ndarray
    refinement_delta: float


def _graded_grid(R, cells, grading=2.0):
    # clustered towards r = 0, where a/r^2 is stiff
    s = np.linspace(0.0, 1.0, cells + 1)
    return R * (np.expm1(grading * s) / math.expm1(grading))


def _crank_nicolson(a, profile, t, R, cells, steps):
    r = _graded_grid(R, cells)
    ri = r[1:-1]
    hm = ri - r[:-2]
    hp = r[2:] - ri
    # v = r u solves v_t = v_rr - a v / r^2 with v(0) = v(R) = 0
    lower = 2.0 / (hm * (hm + hp))
    upper = 2.0 / (hp * (hm + hp))
    diag = -(lower + upper) - a / ri**2
    dt = t / steps
    m = len(ri)
    ab = np.zeros((3, m))
    ab[0, 1:] = -0.5 * dt * upper[:-1]
    ab[1, :] = 1.0 - 0.5 * dt * diag
    ab[2, :-1] = -0.5 * dt * lower[1:]
    v = ri * profile(ri)
    u_sup0 = float(np.max(np.abs(profile(ri))))
    for _ in range(steps):
        rhs = (1.0 + 0.5 * dt * diag) * v
        rhs[1:] += 0.5 * dt * lower[1:] * v[:-1]
        rhs[:-1] += 0.5 * dt * upper[:-1] * v[1:]
        v = solve_banded((1, 1), ab, rhs)
        if not np.all(np.isfinite(v)) or np.max(np.abs(v / ri)) > 1.01 * u_sup0 + 1e-12:
            raise OracleFailure("Crank-Nicolson iteration grew in sup norm")
    return r, np.concatenate([[0.0], v, [0.0]])


def heat_oracle(a, u0_radial, t, r_points, R=None, cells=800, steps=None):
    """Radial inverse-square heat flow in three dimensions by Crank-Nicolson.

    Solves ``u_t = u'' + (2/r) u' - (a/r^2) u`` for ``u0_radial`` (supported
    away from 0) with a Dirichlet far boundary at ``R``; the result at the
    finer of two resolutions is returned with the level-to-level change.
    """
    if a < 0:
        raise DomainError("heat_oracle needs a >= 0")
    if t <= 0:
        raise DomainError("t must be positive")
    r_points = np.asarray(r_points, float)
    if R is None:
        R = float(np.max(r_points)) + 5.0 + 12.0 * math.sqrt(t)
    if steps is None:
        steps = max(64, int(math.ceil(t / 2.5e-3)))

    def solve(c, s):
        r, v = _crank_nicolson(a, u0_radial, t, R, c, s)
        u = np.empty_like(v)
        u[1:] = v[1:] / r[1:]
        u[0] = 0.0 if a > 0 else u[1]
        return CubicSpline(r, u)(r_points)

    coarse = solve(cells, steps)
    fine = solve(2 * cells, 2 * steps)
    delta = float(np.max(np.abs(fine - coarse)) / max(np.max(np.abs(fine)), 1e-300))
    return OracleResult(values=fine, refinement_delta=delta)
