"""Weighted L^1 -> L^inf norms of the propagators and their decay exponents.

Norms are measured at kernel level: for an integral operator the
L^1 -> L^inf norm is the sup of the kernel, so

    || |x|^{-theta g} e^{-itH} |x|^{-theta g} ||
        = (2t)^{-n/2} sup |x|^{-theta g} |K(x/sqrt(2t), y/sqrt(2t))| |y|^{-theta g}
        = (2t)^{-n/2 - theta g} sup_{rescaled} z^{-theta g} |K|.

``scaling`` mode evaluates the last line once and applies the closed-form
time factor.  ``honest`` mode samples a fixed physical grid at every ``t``
and uses the physical weights, so the rescaled sample points move with
``t`` and grid error enters the fitted slope.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from .errors import DomainError
from .kernel import radial_terms
from .quadrature import meridian_grid, sphere_grid

DEFAULT_TIMES = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)


@dataclass(frozen=True)
class GridSpec:
    """Sampling of the rescaled ``(|x|, |y|, angles)`` space.

    Radii are ``r_nodes + 1`` geometric points ending at ``r_max`` and starting
    near ``r_min``, plus the origin.  The ratio is chosen so that ``1`` is a
    node, hence ``z = 1`` is sampled exactly.  Refinement doubles ``r_nodes``
    and ``angular_nodes``, and the refined grid contains the coarse one.
    """

    r_nodes: int = 32
    r_max: float = math.sqrt(10.0)
    angular_nodes: int = 16
    refinement_levels: int = 3
    r_min: float = 1e-2
    level_index: int = field(default=0, repr=False)

    def __post_init__(self):
        if self.r_nodes < 8 or self.angular_nodes < 8:
            raise DomainError("grid needs at least 8 radial and 8 angular nodes")
        if not 0 < self.r_min < self.r_max:
            raise DomainError("need 0 < r_min < r_max")
        if self.refinement_levels < 1:
            raise DomainError("refinement_levels must be >= 1")

    @property
    def z_max(self):
        return self.r_max**2

    def level(self, lvl):
        return GridSpec(
            self.r_nodes * 2**lvl,
            self.r_max,
            self.angular_nodes * 2**lvl,
            self.refinement_levels,
            self.r_min,
            self.level_index + lvl,
        )

    def _steps_above_one(self):
        # intervals between rho = 1 and r_max, so that rho = 1 (hence z = 1) is a node
        if self.r_max <= 1.0:
            return 0
        # fixed on the base level and doubled with it, so refined lattices contain coarse ones
        base = self.r_nodes // 2**self.level_index
        frac = math.log(self.r_max) / math.log(self.r_max / self.r_min)
        return max(1, round(base * frac)) * 2**self.level_index

    def ratio(self):
        k = self._steps_above_one()
        if k == 0:
            return (self.r_max / self.r_min) ** (1.0 / self.r_nodes)
        return self.r_max ** (1.0 / k)

    def radii(self):
        return self.r_max * self.ratio() ** np.arange(-self.r_nodes, 1.0)

    @property
    def rho_min(self):
        return float(self.radii()[0])

    @classmethod
    def parse(cls, text, **defaults):
        """``"r:<n>,ang:<n>,levels:<n>"`` (any subset, plus optional ``rmax``/``rmin``)."""
        keys = {"r": "r_nodes", "ang": "angular_nodes", "levels": "refinement_levels", "rmax": "r_max", "rmin": "r_min"}
        values = dict(defaults)
        for part in filter(None, (p.strip() for p in text.split(","))):
            key, _, val = part.partition(":")
            if key not in keys:
                raise DomainError(f"unknown grid key {key!r}")
            field_name = keys[key]
            values[field_name] = float(val) if field_name in ("r_max", "r_min") else int(val)
        return cls(**values)


def _angle_sets(model, nodes):
    if model.rotation_invariant:
        x = np.atleast_1d(model.canonical_point()) if model.n == 2 else model.canonical_point()[None, :]
        y = sphere_grid(2, nodes) if model.n == 2 else meridian_grid(nodes)
        return x, y
    pts = sphere_grid(model.n, nodes)
    return pts, pts


def _max_over_angles(ks, z, theta, which, nodes, chunk=256):
    """``max_{angles} |series(z, angles)|`` without the heat Gaussian factor."""
    ax, ay = _angle_sets(ks.model, nodes)
    K = ks.K_used
    px = ks.model.eval_psi(ax)[:, :K]
    py_h = np.conj(ks.model.eval_psi(ay)[:, :K]).T
    out = np.empty(len(z))
    for start in range(0, len(z), chunk):
        zz = z[start : start + chunk]
        T = radial_terms(ks, zz, which, theta)
        blocks = (T[:, None, :] * px[None, :, :]).reshape(-1, K) @ py_h
        out[start : start + chunk] = np.abs(blocks).reshape(len(zz), -1).max(axis=1)
    return out


@dataclass(frozen=True)
class SupResult:
    C_omega1: float
    C_omega2: float
    delta_omega1: float
    delta_omega2: float
    converged: bool
    monotone: bool
    history: list = field(default_factory=list)

    @property
    def C(self):
        return max(self.C_omega1, self.C_omega2)


def _sup_single(ks, theta, grid, which):
    rho = grid.radii()
    q = grid.ratio()
    if rho[-1] ** 2 > ks.z_max * (1 + 1e-9):
        raise DomainError(f"grid r_max^2 = {rho[-1] ** 2:.4g} exceeds kernel certificate z_max = {ks.z_max}")
    n_r = len(rho)
    # products rho_i rho_j = rho_0^2 q^(i+j): one z per index sum, plus z = 0
    z = np.concatenate([[0.0], rho[0] ** 2 * q ** np.arange(2 * n_r - 1)])
    M = _max_over_angles(ks, z, theta, which, grid.angular_nodes)
    if which == "heat":
        i, j = np.meshgrid(np.arange(n_r), np.arange(n_r), indexing="ij")
        gauss = np.exp(-0.5 * (rho[i] - rho[j]) ** 2)
        vals = gauss * M[1 + i + j]
        zij = rho[i] * rho[j]
        vals, zs = np.concatenate([[M[0]], vals.ravel()]), np.concatenate([[0.0], zij.ravel()])
    else:
        vals, zs = M, z
    # closures of the two regions; the kernel is continuous across z = 1
    eps = 1e-12
    c1 = float(vals[zs >= 1.0 - eps].max()) if np.any(zs >= 1.0 - eps) else 0.0
    c2 = float(vals[zs <= 1.0 + eps].max())
    return c1, c2


def sup_constants(ks, theta, grid, which="schrodinger"):
    """Grid suprema of ``z^{-theta g} |kernel|`` on ``z >= 1`` and ``z < 1``, with refinement.

    ``z`` is restricted to the certified range ``z <= grid.r_max^2``.
    """
    if not any(abs(z - 1.0) <= 0.1 for z in grid.rho_min**2 * grid.ratio() ** np.arange(2 * grid.r_nodes + 1)):
        raise DomainError("grid does not resolve the z = 1 interface")
    history = []
    for lvl in range(grid.refinement_levels + 1):
        history.append(_sup_single(ks, theta, grid.level(lvl), which))
    (p1, p2), (c1, c2) = history[-2], history[-1]
    d1 = abs(c1 - p1) / c1 if c1 > 0 else 0.0
    d2 = abs(c2 - p2) / c2 if c2 > 0 else 0.0
    monotone = all(
        b[0] >= a[0] * (1 - 1e-12) and b[1] >= a[1] * (1 - 1e-12) for a, b in zip(history[:-1], history[1:])
    )
    return SupResult(
        C_omega1=c1,
        C_omega2=c2,
        delta_omega1=d1,
        delta_omega2=d2,
        converged=max(d1, d2) < 0.01,
        monotone=monotone,
        history=[list(h) for h in history],
    )


def _honest_sup(ks, t, theta, grid, which):
    """Physical-grid sup of ``|x|^{-theta g} |k_t(x, y)| |y|^{-theta g}``, ``k_t`` the true kernel."""
    fine = grid.level(grid.refinement_levels)
    q = fine.ratio()
    scale = math.sqrt(2.0 * t)
    # fixed physical lattice r = q^j, independent of t
    j_lo = math.ceil(math.log(scale * fine.rho_min) / math.log(q) - 1e-9)
    j_hi = math.floor(math.log(scale * fine.r_max) / math.log(q) + 1e-9)
    r = q ** np.arange(j_lo, j_hi + 1)
    n = ks.n
    g = ks.model.g
    # products of lattice radii are lattice points again
    sums = np.arange(2 * j_lo, 2 * j_hi + 1)
    z = q**sums / (2.0 * t)
    M = _max_over_angles(ks, z, 0.0, which, fine.angular_nodes)
    prefactor = (2.0 * t) ** (-0.5 * n)
    weight = (q**sums) ** (-theta * g)
    if which == "heat":
        i, j = np.meshgrid(np.arange(len(r)), np.arange(len(r)), indexing="ij")
        rho = r / scale
        vals = np.exp(-0.5 * (rho[i] - rho[j]) ** 2) * (weight * M)[i + j]
    else:
        vals = weight * M
    best = float(np.max(vals)) * prefactor
    # origin: only the limit is available, and it carries the exact weight
    origin = _max_over_angles(ks, np.array([0.0]), theta, which, fine.angular_nodes)[0]
    return max(best, prefactor * (2.0 * t) ** (-theta * g) * origin)


@lru_cache(maxsize=256)
def _scaling_sup(ks, theta, grid, which):
    return sup_constants(ks, theta, grid, which)


def weighted_operator_norm(ks, t, theta, grid, which="schrodinger", mode="scaling"):
    """Kernel-level bound on ``|| |x|^{-theta g} e^{-itH} |x|^{-theta g} ||_{L^1 -> L^inf}``.

    For the heat flow ``e^{-itH}`` is replaced by ``e^{-tH}``.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    if not 0.0 <= theta <= 1.0:
        raise DomainError("theta must lie in [0, 1]")
    if mode == "scaling":
        sup = _scaling_sup(ks, float(theta), grid, which)
        return (2.0 * t) ** (-0.5 * ks.n - theta * ks.model.g) * sup.C
    if mode == "honest":
        return _honest_sup(ks, t, theta, grid, which)
    raise DomainError(f"mode must be 'scaling' or 'honest', got {mode!r}")


def fit_exponent(times, norms):
    """Least-squares slope of ``log(norm)`` against ``log(t)`` and its standard error."""
    times = np.asarray(times, float)
    norms = np.asarray(norms, float)
    if len(times) < 4 or times.max() / times.min() < 10:
        raise DomainError("need at least 4 times spanning a factor >= 10")
    if np.any(norms <= 0) or np.any(times <= 0):
        raise DomainError("norms and times must be positive")
    fit = stats.linregress(np.log(times), np.log(norms))
    return float(fit.slope), float(fit.stderr)


@dataclass
class DecayReport:
    model_id: str
    theta: float
    which: str
    mode: str
    g: float
    n: int
    times: list
    norms: list
    fitted_slope: float
    slope_stderr: float
    predicted_slope: float
    C_omega1: float
    C_omega2: float
    delta_omega1: float
    delta_omega2: float
    sup_converged: bool

    @property
    def slope_error(self):
        return abs(self.fitted_slope - self.predicted_slope)

    def to_dict(self):
        d = asdict(self)
        d["slope_error"] = self.slope_error
        return d

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def predicted_norms(self):
        t0, n0 = self.times[0], self.norms[0]
        return [n0 * (t / t0) ** self.predicted_slope for t in self.times]

    def csv_rows(self):
        for t, v, p in zip(self.times, self.norms, self.predicted_norms()):
            yield [t, v, p, self.theta]

    def to_csv(self, path, header=True):
        with open(path, "a" if not header else "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if header:
                w.writerow(["t", "norm", "predicted", "theta"])
            for row in self.csv_rows():
                w.writerow([f"{v:.17g}" for v in row])


def decay_sweep(ks, theta, grid, which="schrodinger", times=DEFAULT_TIMES, mode="scaling", model_id=""):
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise DomainError("times must be strictly increasing")
    sup = _scaling_sup(ks, float(theta), grid, which)
    norms = [weighted_operator_norm(ks, t, theta, grid, which, mode) for t in times]
    slope, stderr = fit_exponent(times, norms)
    n, g = ks.n, ks.model.g
    return DecayReport(
        model_id=model_id,
        theta=float(theta),
        which=which,
        mode=mode,
        g=g,
        n=n,
        times=times,
        norms=norms,
        fitted_slope=slope,
        slope_stderr=stderr,
        predicted_slope=-0.5 * n - theta * g,
        C_omega1=sup.C_omega1,
        C_omega2=sup.C_omega2,
        delta_omega1=sup.delta_omega1,
        delta_omega2=sup.delta_omega2,
        sup_converged=sup.converged,
    )


def verify_interpolation(ks, grid, thetas, which="schrodinger", times=DEFAULT_TIMES, mode="honest", tol=0.05):
    """Fitted slope per theta against ``-n/2 - theta g``, plus monotonicity in theta."""
    thetas = sorted(float(t) for t in thetas)
    if thetas[0] != 0.0 or thetas[-1] != 1.0:
        raise DomainError("thetas must include 0 and 1")
    reports = [decay_sweep(ks, th, grid, which, times, mode) for th in thetas]
    slopes = [r.fitted_slope for r in reports]
    return {
        "thetas": thetas,
        "slopes": slopes,
        "predicted": [r.predicted_slope for r in reports],
        "within_tol": all(r.slope_error <= tol for r in reports),
        "monotone": all(b <= a + 1e-12 for a, b in zip(slopes, slopes[1:])),
        "reports": reports,
    }
