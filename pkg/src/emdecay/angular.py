"""Spectral data of the angular operator ``L = (-i grad_S + A)^2 + a``.

Two-dimensional fields live on the circle, where ``L`` acts on
``2 pi``-periodic functions as ``(-i d/dtheta + A(theta))^2 + a(theta)``
with ``A`` the tangential component of the vector potential.  The
three-dimensional family is the constant inverse-square potential with
``A = 0``, whose eigenfunctions are spherical harmonics.

Eigenpairs are indexed ``k = 1, 2, ...`` with multiplicity, sorted by
eigenvalue and then by a canonical label (signed Fourier index on the
circle, ``(l, m)`` on the sphere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Union

import numpy as np
from scipy import linalg
from scipy import special as sp

from .errors import DomainError, HardyRangeError, ModelRejectedError, ResolutionError
from .quadrature import sphere_grid

_SQRT_2PI = math.sqrt(2.0 * math.pi)


# --------------------------------------------------------------------------
# field specifications


@dataclass(frozen=True)
class Free:
    """No potential: ``L`` is minus the Laplace-Beltrami operator."""

    n: int = 2
    kind: ClassVar[str] = "free"

    def __post_init__(self):
        if self.n not in (2, 3):
            raise DomainError(f"Free field supported for n=2,3 only, got n={self.n}")


@dataclass(frozen=True)
class AharonovBohm:
    """Vector potential ``alpha (-x2, x1)/|x|^2`` in the plane."""

    alpha: float
    kind: ClassVar[str] = "aharonov_bohm"

    @property
    def n(self):
        return 2


def _hermitian_check(coeffs, name):
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or c.size % 2 != 1:
        raise DomainError(f"{name} must be a centred sequence of odd length, got {c.size}")
    if not np.allclose(c, np.conj(c[::-1]), atol=1e-14, rtol=0):
        raise DomainError(f"{name} is not Hermitian-symmetric (function would not be real)")
    return tuple(complex(v) for v in c)


def _trig_to_coeffs(cos_part, sin_part):
    cos_part = list(cos_part) or [0.0]
    sin_part = list(sin_part)
    degree = max(len(cos_part), len(sin_part), 1) - 1
    c = np.zeros(2 * degree + 1, dtype=complex)
    c[degree] = cos_part[0] if cos_part else 0.0
    for p in range(1, degree + 1):
        cp = cos_part[p] if p < len(cos_part) else 0.0
        spp = sin_part[p] if p < len(sin_part) else 0.0
        c[degree + p] = 0.5 * (cp - 1j * spp)
        c[degree - p] = 0.5 * (cp + 1j * spp)
    return tuple(c)


def _eval_trig(coeffs, theta):
    c = np.asarray(coeffs)
    deg = (c.size - 1) // 2
    p = np.arange(-deg, deg + 1)
    return np.real(np.exp(1j * np.outer(np.atleast_1d(theta), p)) @ c)


@dataclass(frozen=True)
class Fourier2D:
    """Trigonometric-polynomial potentials on the circle.

    ``a_coeffs`` and ``A_coeffs`` are centred two-sided Fourier sequences
    ``c_{-P}, ..., c_P`` of real functions (Hermitian symmetric).
    """

    a_coeffs: tuple = (0j,)
    A_coeffs: tuple = (0j,)
    kind: ClassVar[str] = "fourier2d"

    def __post_init__(self):
        object.__setattr__(self, "a_coeffs", _hermitian_check(self.a_coeffs, "a_coeffs"))
        object.__setattr__(self, "A_coeffs", _hermitian_check(self.A_coeffs, "A_coeffs"))

    @property
    def n(self):
        return 2

    @classmethod
    def from_trig(cls, a_cos=(), a_sin=(), A_cos=(), A_sin=()):
        """Build from ``c0 + sum_p c_p cos(p t) + s_p sin(p t)`` lists (``s_0`` ignored)."""
        return cls(a_coeffs=_trig_to_coeffs(a_cos, a_sin), A_coeffs=_trig_to_coeffs(A_cos, A_sin))

    @property
    def degree(self):
        return max(len(self.a_coeffs), len(self.A_coeffs)) // 2

    def a(self, theta):
        return _eval_trig(self.a_coeffs, theta)

    def A(self, theta):
        return _eval_trig(self.A_coeffs, theta)

    def sup_norms(self):
        """(||A||_inf, ||a||_inf) by sampling at 16 (degree + 1) points."""
        theta = 2.0 * math.pi * np.arange(16 * (self.degree + 1)) / (16 * (self.degree + 1))
        return float(np.max(np.abs(self.A(theta)))), float(np.max(np.abs(self.a(theta))))


@dataclass(frozen=True)
class InverseSquare3D:
    """``A = 0`` and constant ``a`` in three dimensions."""

    a: float
    kind: ClassVar[str] = "inverse_square3d"

    @property
    def n(self):
        return 3


FieldSpec = Union[Free, AharonovBohm, Fourier2D, InverseSquare3D]


def as_fourier2d(spec):
    """Express a two-dimensional spec through Fourier coefficients."""
    if isinstance(spec, Fourier2D):
        return spec
    if isinstance(spec, AharonovBohm):
        return Fourier2D(A_coeffs=(complex(spec.alpha),))
    if isinstance(spec, Free) and spec.n == 2:
        return Fourier2D()
    raise DomainError(f"{spec!r} has no two-dimensional Fourier form")


def _pairs_to_json(coeffs):
    return [[float(np.real(c)), float(np.imag(c))] for c in coeffs]


def spec_to_dict(spec):
    if isinstance(spec, Free):
        return {"kind": "free", "n": spec.n}
    if isinstance(spec, AharonovBohm):
        return {"kind": "aharonov_bohm", "n": 2, "alpha": spec.alpha}
    if isinstance(spec, Fourier2D):
        return {
            "kind": "fourier2d",
            "n": 2,
            "a_coeffs": _pairs_to_json(spec.a_coeffs),
            "A_coeffs": _pairs_to_json(spec.A_coeffs),
        }
    if isinstance(spec, InverseSquare3D):
        return {"kind": "inverse_square3d", "n": 3, "a": spec.a}
    raise TypeError(f"unknown field spec {spec!r}")


def spec_from_dict(data):
    kind = data.get("kind")
    if kind == "free":
        return Free(n=int(data.get("n", 2)))
    if kind == "aharonov_bohm":
        return AharonovBohm(alpha=float(data["alpha"]))
    if kind == "inverse_square3d":
        return InverseSquare3D(a=float(data["a"]))
    if kind == "fourier2d":
        if "a_coeffs" in data or "A_coeffs" in data:
            to_c = lambda seq: tuple(complex(re, im) for re, im in seq)  # noqa: E731
            return Fourier2D(
                a_coeffs=to_c(data.get("a_coeffs", [[0.0, 0.0]])),
                A_coeffs=to_c(data.get("A_coeffs", [[0.0, 0.0]])),
            )
        return Fourier2D.from_trig(
            a_cos=data.get("a_cos", ()),
            a_sin=data.get("a_sin", ()),
            A_cos=data.get("A_cos", ()),
            A_sin=data.get("A_sin", ()),
        )
    raise DomainError(f"unknown field kind {kind!r}")


# --------------------------------------------------------------------------
# model


def sup_norm_exponent(n):
    if n == 2:
        return 0.0
    if n == 3:
        return 0.5
    return (n - 1) / 4.0


def _canonical_points(n):
    if n == 2:
        return np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
    return np.array([[0.0, 0.0], [0.5 * math.pi, 0.0], [1.0, 0.0], [2.0, 0.0], [0.5, 0.0], [2.5, 0.0]])


@dataclass(frozen=True)
class EigenPair:
    index: int
    mu: float
    beta: float
    alpha_order: float  # carried for completeness; the kernels only use beta
    sup_norm: float
    label: tuple
    psi: Callable = field(repr=False, compare=False)


@dataclass(frozen=True, eq=False)
class AngularModel:
    """Ordered eigendata of ``L``.

    Eigenfunctions are stored as coefficients: Fourier coefficients on the
    circle (``freqs``, ``coeffs``) or ``(l, m)`` labels with unit phases on
    the sphere.  :meth:`eval_psi` evaluates all of them at once.
    """

    spec: FieldSpec
    mus: np.ndarray
    labels: tuple
    sup_norms: np.ndarray
    block_end: np.ndarray
    freqs: np.ndarray | None = None
    coeffs: np.ndarray | None = None
    lm: np.ndarray | None = None
    phases: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.spec.n

    @property
    def k_max(self):
        return len(self.mus)

    @property
    def shift(self):
        """(n - 2) / 2."""
        return 0.5 * (self.n - 2)

    @property
    def betas(self):
        return np.sqrt(self.shift**2 + self.mus)

    @property
    def alpha_orders(self):
        return 0.5 * (self.n - 1) - self.betas

    @property
    def g(self):
        return gain_exponent(self)

    @property
    def b_n(self):
        return sup_norm_exponent(self.n)

    @property
    def sup_constant(self):
        """Smallest C with sup_norm(k) <= C max(1, mu_k)^b_n over the stored pairs."""
        return float(np.max(self.sup_norms / np.maximum(1.0, self.mus) ** self.b_n))

    @property
    def rotation_invariant(self):
        """Kernel depends on the two angles only through their relative position."""
        return not isinstance(self.spec, Fourier2D)

    def canonical_point(self):
        return _canonical_points(self.n)[0]

    def eval_psi(self, points):
        """Eigenfunction values, shape ``(len(points), K)``."""
        if self.n == 2:
            theta = np.atleast_1d(np.asarray(points, float))
            basis = np.exp(1j * np.outer(theta, self.freqs)) / _SQRT_2PI
            return basis @ self.coeffs.T
        pts = np.atleast_2d(np.asarray(points, float))
        l_max = int(self.lm[:, 0].max())
        m_max = int(np.abs(self.lm[:, 1]).max())
        y_all = sp.sph_harm_y_all(l_max, m_max, pts[:, 0], pts[:, 1])
        return (y_all[self.lm[:, 0], self.lm[:, 1]] * self.phases[:, None]).T

    @property
    def pairs(self):
        betas = self.betas
        alphas = self.alpha_orders
        out = []
        for k in range(self.k_max):
            out.append(
                EigenPair(
                    index=k + 1,
                    mu=float(self.mus[k]),
                    beta=float(betas[k]),
                    alpha_order=float(alphas[k]),
                    sup_norm=float(self.sup_norms[k]),
                    label=self.labels[k],
                    psi=(lambda pts, _k=k: self.eval_psi(pts)[:, _k]),
                )
            )
        return tuple(out)

    def to_dict(self):
        data = {
            "spec": spec_to_dict(self.spec),
            "n": self.n,
            "k_max": self.k_max,
            "eigenvalues": [float(m) for m in self.mus],
            "beta": [float(b) for b in self.betas],
            "alpha_order": [float(a) for a in self.alpha_orders],
            "sup_norm": [float(s) for s in self.sup_norms],
            "labels": [list(lab) for lab in self.labels],
            "block_end": [bool(b) for b in self.block_end],
            "g": self.g,
            "b_n": self.b_n,
            "sup_constant": self.sup_constant,
            "diagnostics": self.diagnostics,
        }
        if self.n == 2:
            data["freqs"] = [float(f) for f in self.freqs]
            data["coeffs"] = [_pairs_to_json(row) for row in self.coeffs]
        else:
            data["lm"] = self.lm.tolist()
            data["phases"] = _pairs_to_json(self.phases)
        return data

    @classmethod
    def from_dict(cls, data):
        spec = spec_from_dict(data["spec"])
        common = dict(
            spec=spec,
            mus=np.asarray(data["eigenvalues"], float),
            labels=tuple(tuple(lab) for lab in data["labels"]),
            sup_norms=np.asarray(data["sup_norm"], float),
            block_end=np.asarray(data["block_end"], bool),
            diagnostics=dict(data.get("diagnostics", {})),
        )
        if spec.n == 2:
            coeffs = np.array([[complex(re, im) for re, im in row] for row in data["coeffs"]])
            return cls(freqs=np.asarray(data["freqs"], float), coeffs=coeffs, **common)
        phases = np.array([complex(re, im) for re, im in data["phases"]])
        return cls(lm=np.asarray(data["lm"], int), phases=phases, **common)


def gain_exponent(model):
    """``sqrt(((n-2)/2)^2 + mu_1) - (n-2)/2``; equals ``sqrt(mu_1)`` for n=2."""
    mu1 = float(model.mus[0])
    if mu1 < 0:
        raise ModelRejectedError(f"mu_1 = {mu1} < 0")
    shift = 0.5 * (model.n - 2)
    return math.sqrt(shift * shift + mu1) - shift


def _check_ground_state(mu1, n):
    if mu1 >= 0:
        return
    hardy = -((n - 2) ** 2) / 4.0
    if mu1 >= hardy:
        raise HardyRangeError(
            f"mu_1 = {mu1:.6g} lies in [-(n-2)^2/4, 0): the operator is positive "
            "but the decay estimates need mu_1 >= 0"
        )
    raise ModelRejectedError(
        f"mu_1 = {mu1:.6g} < 0; the decay estimates need mu_1 >= 0 "
        f"(and this is below the Hardy threshold {hardy:.6g})"
    )


def _blocks(mus, rtol=1e-9):
    """Indices where a new degenerate block starts."""
    gaps = np.abs(np.diff(mus)) > rtol * np.maximum(1.0, np.abs(mus[1:]))
    return np.concatenate([[True], gaps])


def _fix_phases_fourier(freqs, coeffs, sup_norms):
    pts = _canonical_points(2)
    vals = (np.exp(1j * np.outer(pts, freqs)) / _SQRT_2PI) @ coeffs.T
    for k in range(coeffs.shape[0]):
        for v in vals[:, k]:
            if abs(v) > 1e-6 * sup_norms[k]:
                coeffs[k] *= np.conj(v) / abs(v)
                break
    return coeffs


def _circle_model(spec, freqs, mus_all, coeffs_all, k_max, diagnostics):
    if len(mus_all) <= k_max:
        raise ResolutionError("not enough eigenvalues to close the last block")
    start = _blocks(mus_all[: k_max + 1])
    block_end = np.append(start[1:], True)[:k_max]
    block_end[-1] = bool(start[k_max])
    coeffs = coeffs_all[:k_max].copy()
    sup_norms = np.sum(np.abs(coeffs), axis=1) / _SQRT_2PI
    coeffs = _fix_phases_fourier(freqs, coeffs, sup_norms)
    momentum = np.real(np.sum(np.abs(coeffs) ** 2 * freqs[None, :], axis=1))
    labels = tuple((round(float(p), 12),) for p in momentum)
    return AngularModel(
        spec=spec,
        mus=np.asarray(mus_all[:k_max], float),
        labels=labels,
        sup_norms=sup_norms,
        block_end=block_end,
        freqs=np.asarray(freqs, float),
        coeffs=coeffs,
        diagnostics=diagnostics,
    )


def _analytic_circle(spec, k_max):
    alpha = spec.alpha if isinstance(spec, AharonovBohm) else 0.0
    span = k_max + 2
    ks = np.arange(-span - int(abs(alpha)) - 1, span + int(abs(alpha)) + 2)
    mus = (ks + alpha) ** 2
    order = np.lexsort((ks, mus))
    ks, mus = ks[order], mus[order]
    # label with the signed Fourier index so ties sort ascending
    freqs = ks[: k_max + 1].astype(float)
    coeffs = np.eye(k_max + 1, dtype=complex)
    _check_ground_state(mus[0], 2)
    model = _circle_model(spec, freqs, mus[: k_max + 1], coeffs, k_max, {"solver": "analytic"})
    labels = tuple((int(k),) for k in ks[:k_max])
    object.__setattr__(model, "labels", labels)
    return model


def galerkin_matrix(spec, M):
    """Matrix of ``L`` in the basis ``e^{ik theta}/sqrt(2 pi)``, ``|k| <= M``.

    Entry ``(j, k)`` is ``jk delta + (j + k) A_{j-k} + (A^2)_{j-k} + a_{j-k}``,
    with ``A^2`` the full convolution, so the matrix is the exact compression
    of the quadratic form to trigonometric polynomials of degree ``M``.
    """
    spec = as_fourier2d(spec)
    freqs = np.arange(-M, M + 1)
    diff = freqs[:, None] - freqs[None, :]
    A = np.asarray(spec.A_coeffs)
    a = np.asarray(spec.a_coeffs)
    A2 = np.convolve(A, A)

    def lookup(c, d):
        deg = (c.size - 1) // 2
        out = np.zeros(d.shape, dtype=complex)
        mask = np.abs(d) <= deg
        out[mask] = c[d[mask] + deg]
        return out

    H = np.diag(freqs.astype(float) ** 2).astype(complex)
    H += (freqs[:, None] + freqs[None, :]) * lookup(A, diff)
    H += lookup(A2, diff) + lookup(a, diff)
    return freqs, H


def _canonical_cluster_basis(freqs, vecs, mus, rtol=1e-8):
    """Rotate each degenerate cluster to diagonalize the momentum operator."""
    vecs = vecs.copy()
    start = _blocks(mus, rtol)
    idx = np.flatnonzero(start)
    bounds = list(idx) + [len(mus)]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi - lo < 2:
            continue
        block = vecs[:, lo:hi]
        P = block.conj().T @ (freqs[:, None] * block)
        _, rot = linalg.eigh(P)
        vecs[:, lo:hi] = block @ rot
    return vecs


def _galerkin_solve(spec, k_max, M, tol, max_doublings):
    need = k_max + 1
    M = max(M, 4 * k_max, 2 * spec.degree + 8)
    freqs, H = galerkin_matrix(spec, M)
    prev = linalg.eigh(H, eigvals_only=True)[:need]
    shift = None
    for _ in range(max_doublings + 1):
        freqs2, H2 = galerkin_matrix(spec, 2 * M)
        mus2, vecs2 = linalg.eigh(H2)
        shift = float(np.max(np.abs(mus2[:need] - prev) / np.maximum(1.0, np.abs(mus2[:need]))))
        if shift < tol:
            return freqs2, mus2, vecs2, M, shift
        M *= 2
        prev = mus2[:need]
    raise ResolutionError(
        f"Galerkin eigenvalues moved by {shift:.3e} (> {tol:g}) between M={M // 2} and M={M}"
    )


def build_model(spec, K_max, M=0, tol=1e-10, max_doublings=3):
    """The ``K_max`` lowest eigenpairs of ``L`` for ``spec``.

    Analytic families skip the solver.  ``Fourier2D`` uses a Fourier-Galerkin
    discretization with basis size ``M`` (at least ``4 K_max``), accepted
    once doubling ``M`` moves the eigenvalues by less than ``tol``
    (relative to ``max(1, mu)``).
    """
    if K_max < 1:
        raise DomainError("K_max must be >= 1")
    if isinstance(spec, (AharonovBohm,)) or (isinstance(spec, Free) and spec.n == 2):
        return _analytic_circle(spec, K_max)
    if isinstance(spec, (InverseSquare3D, Free)):
        a = spec.a if isinstance(spec, InverseSquare3D) else 0.0
        _check_ground_state(a, 3)
        return _analytic_sphere(spec, a, K_max)
    if isinstance(spec, Fourier2D):
        freqs, mus, vecs, M_used, shift = _galerkin_solve(spec, K_max, M, tol, max_doublings)
        _check_ground_state(mus[0], 2)
        vecs = _canonical_cluster_basis(freqs.astype(float), vecs[:, : K_max + 1], mus[: K_max + 1])
        diag = {"solver": "fourier_galerkin", "M": int(2 * M_used), "eigenvalue_shift": shift}
        return _circle_model(spec, freqs.astype(float), mus, vecs.T, K_max, diag)
    raise DomainError(f"unsupported field spec {spec!r}")


def _analytic_sphere(spec, a, k_max):
    lm = []
    l = 0
    while len(lm) < k_max:
        lm.extend((l, m) for m in range(-l, l + 1))
        l += 1
    full = len(lm)
    lm = np.array(lm[:k_max], dtype=int)
    mus = lm[:, 0] * (lm[:, 0] + 1.0) + a
    block_end = np.zeros(k_max, bool)
    block_end[:-1] = lm[1:, 0] != lm[:-1, 0]
    block_end[-1] = full == k_max
    sup_norms = np.sqrt((2 * lm[:, 0] + 1) / (4.0 * math.pi))
    # phase: real and positive at the first canonical point where psi is nonzero
    pts = _canonical_points(3)
    vals = sp.sph_harm_y_all(int(lm[:, 0].max()), int(lm[:, 0].max()), pts[:, 0], pts[:, 1])
    vals = vals[lm[:, 0], lm[:, 1]]
    phases = np.ones(k_max, dtype=complex)
    for k in range(k_max):
        for v in vals[k]:
            if abs(v) > 1e-6 * sup_norms[k]:
                phases[k] = np.conj(v) / abs(v)
                break
    return AngularModel(
        spec=spec,
        mus=mus,
        labels=tuple((int(l_), int(m_)) for l_, m_ in lm),
        sup_norms=sup_norms,
        block_end=block_end,
        lm=lm,
        phases=phases,
        diagnostics={"solver": "analytic"},
    )


# --------------------------------------------------------------------------
# checks


def verify_form_bounds(spec, M):
    """Smallest eigenvalues of the two gap matrices of the two-sided form bound.

    Returns ``{"min_eig_upper_gap", "min_eig_lower_gap"}``; both should be
    ``>= -1e-10``.
    """
    spec = as_fourier2d(spec)
    freqs, L = galerkin_matrix(spec, M)
    lap = np.diag(freqs.astype(float) ** 2)
    if lap.shape != L.shape:
        raise DomainError("assembly dimension mismatch")
    A_inf, a_inf = spec.sup_norms()
    eye = np.eye(len(freqs))
    upper = 1.5 * lap + (3.0 * A_inf**2 + a_inf) * eye - L
    lower = L - (0.5 * lap - (A_inf**2 + a_inf) * eye)
    return {
        "min_eig_upper_gap": float(linalg.eigh(upper, eigvals_only=True)[0]),
        "min_eig_lower_gap": float(linalg.eigh(lower, eigvals_only=True)[0]),
        "A_inf": A_inf,
        "a_inf": a_inf,
        "M": M,
    }


def verify_weyl_growth(model, k_min=10):
    """min/max of ``mu_k / k^(2/(n-1))`` for ``k_min <= k <= K_max``."""
    if model.k_max < 20:
        raise DomainError("Weyl growth check needs K_max >= 20")
    k = np.arange(1, model.k_max + 1)
    sel = k >= k_min
    ratio = model.mus[sel] / k[sel] ** (2.0 / (model.n - 1))
    return {"ratio_min": float(ratio.min()), "ratio_max": float(ratio.max())}


def verify_sup_norm_bound(model, sample_points):
    """Empirical ``max |psi_k|`` on a sampling grid, normalised by ``max(1, mu_k)^b_n``."""
    pts = sphere_grid(model.n, sample_points)
    sups = np.max(np.abs(model.eval_psi(pts)), axis=0)
    scale = np.maximum(1.0, model.mus) ** model.b_n
    return {"C_best": float(np.max(sups / scale)), "empirical_sups": sups.tolist()}
