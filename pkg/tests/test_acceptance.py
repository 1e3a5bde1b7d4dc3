"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from emdecay.angular import AharonovBohm, Free, InverseSquare3D, as_fourier2d, build_model
from emdecay.angular import verify_form_bounds, verify_weyl_growth
from emdecay.cli import parse_preset
from emdecay.decay import DEFAULT_TIMES, GridSpec, decay_sweep, sup_constants, verify_interpolation
from emdecay.decay import weighted_operator_norm
from emdecay.kernel import auto_plan, eval_heat_G, eval_schrodinger_K
from emdecay.propagator import InitialDatum, apply_heat, apply_schrodinger, heat_oracle
from emdecay.special import bessel_i_imag, bessel_i_real, bessel_j, bessel_oracle
from emdecay.special import i_imag_half_gamma_bound, i_imag_sharp_bound

ROOT = Path(__file__).resolve().parents[1]
GRID = GridSpec()
PRESETS = [
    "free2d",
    "ab:0.1",
    "ab:0.3",
    "ab:0.5",
    "invsq3d:0",
    "invsq3d:1",
    "invsq3d:2",
    f"fourier2d:{ROOT / 'configs' / 'fourier2d_example.json'}",
]
SLOPE_TOL = 0.05

RESULTS = []


def record(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def short(preset):
    return preset.split(":")[0] + ":example" if preset.startswith("fourier2d") else preset


_plans = {}


def decay_plan(preset):
    if preset not in _plans:
        _plans[preset] = auto_plan(parse_preset(preset), z_max=GRID.z_max, tol=1e-10)
    return _plans[preset]


# --------------------------------------------------------------------------
# criteria


def check_free_closed_form():
    start = time.perf_counter()
    ks = auto_plan(Free(), z_max=10.0, tol=1e-12)
    r = np.linspace(0.0, math.sqrt(10.0), 30)
    phi = np.linspace(0.0, 2 * math.pi, 16, endpoint=False)
    R1, R2, PHI = (a.ravel() for a in np.meshgrid(r, r, phi, indexing="ij"))
    x, y = (R1, PHI), (R2, np.zeros_like(PHI))
    K = eval_schrodinger_K(ks, x, y)
    G = eval_heat_G(ks, x, y)
    dot = R1 * R2 * np.cos(PHI)
    err_k = np.max(np.abs(K - np.exp(-1j * dot) / (2 * math.pi)))
    err_g = np.max(np.abs(G - np.exp(-0.5 * (R1**2 + R2**2 - 2 * dot)) / (2 * math.pi)))
    elapsed = time.perf_counter() - start
    ok = err_k <= 1e-8 and err_g <= 1e-10 and elapsed < 30
    return record("1 free closed form", ok, f"K err {err_k:.2e}, G err {err_g:.2e}, {elapsed:.1f}s")


def check_aharonov_bohm(alpha):
    start = time.perf_counter()
    ks = decay_plan(f"ab:{alpha}")
    honest = decay_sweep(ks, 1.0, GRID, "schrodinger", mode="honest")
    scaling = decay_sweep(ks, 1.0, GRID, "schrodinger", mode="scaling")
    p = 1.0 + ks.model.g
    rescaled = np.array(scaling.norms) * np.array(scaling.times) ** p
    identity = np.max(np.abs(rescaled / rescaled[0] - 1))
    elapsed = time.perf_counter() - start
    target = -1.0 - abs(alpha - round(alpha))
    ok = abs(honest.fitted_slope - target) <= SLOPE_TOL and identity <= 1e-12 and elapsed < 120
    return record(
        f"2 AB alpha={alpha}",
        ok,
        f"slope {honest.fitted_slope:.4f} vs {target:.4f}, scaling identity {identity:.1e}, {elapsed:.1f}s",
    )


def check_inverse_square_heat(a):
    start = time.perf_counter()
    ks = decay_plan(f"invsq3d:{a}")
    rep = decay_sweep(ks, 1.0, GRID, "heat", mode="honest")
    target = -1.5 - (math.sqrt(0.25 + a) - 0.5)
    elapsed = time.perf_counter() - start
    ok = abs(rep.fitted_slope - target) <= SLOPE_TOL and elapsed < 120
    return record(f"3 inverse-square heat a={a}", ok, f"slope {rep.fitted_slope:.4f} vs {target:.4f}, {elapsed:.1f}s")


def check_interpolation():
    thetas = [0.0, 0.25, 0.5, 0.75, 1.0]
    rep = verify_interpolation(decay_plan("ab:0.5"), GRID, thetas, mode="honest", tol=SLOPE_TOL)
    targets = [-1.0 - th / 2 for th in thetas]
    worst = max(abs(s - t) for s, t in zip(rep["slopes"], targets))
    ok = rep["within_tol"] and rep["monotone"] and worst <= SLOPE_TOL
    slopes = ", ".join(f"{s:.3f}" for s in rep["slopes"])
    return record("4 interpolation ab:0.5", ok, f"slopes [{slopes}], worst {worst:.3f}, monotone {rep['monotone']}")


def check_constants():
    worst, failures = 0.0, []
    for preset in PRESETS:
        ks = decay_plan(preset)
        for which in ("schrodinger", "heat"):
            for theta in (0.0, 0.5, 1.0):
                sup = sup_constants(ks, theta, GRID, which)
                delta = max(sup.delta_omega1, sup.delta_omega2)
                worst = max(worst, delta)
                if not (sup.converged and len(sup.history) == 4 and math.isfinite(sup.C)):
                    failures.append(f"{short(preset)}/{which}/theta={theta}")
    detail = f"worst final change {100 * worst:.3f}% over 3 refinements"
    if failures:
        detail += "; not converged: " + ", ".join(failures)
    return record("5 sup constants converge", not failures and worst < 0.01, detail)


def check_oracle_grid():
    start = time.perf_counter()
    worst = 0.0
    for nu in np.linspace(0.0, 20.0, 20):
        for x in np.linspace(0.0, 20.0, 20):
            j_slow = bessel_oracle(nu, -1j * x) * np.exp(0.5j * math.pi * nu)
            i_slow = bessel_oracle(nu, x)
            for fast, slow in ((bessel_j(nu, x), j_slow), (bessel_i_real(nu, x), i_slow)):
                if slow != 0:
                    worst = max(worst, abs(fast - slow) / abs(slow))
                elif fast != 0:
                    worst = math.inf
    elapsed = time.perf_counter() - start
    return record("6 oracle equivalence", worst <= 1e-8 and elapsed < 60, f"worst rel {worst:.2e}, {elapsed:.1f}s")


def _bound_violations(bound):
    bad = []
    z = np.linspace(0.0, 20.0, 20)
    for nu in np.linspace(0.0, 20.0, 20):
        excess = np.max(np.abs(bessel_i_imag(nu, z)) - bound(nu, z))
        if excess > 1e-12:
            bad.append((float(nu), float(excess)))
    return bad


def check_gamma_half_bound():
    bad = _bound_violations(i_imag_half_gamma_bound)
    detail = "holds" if not bad else ", ".join(f"nu={nu:.3g} exceeds by {e:.3f}" for nu, e in bad)
    return record("6 bound |I_nu(iz)| <= |z|^nu/(2^nu Gamma(nu+1/2))", not bad, detail)


def check_sharp_bound():
    bad = _bound_violations(i_imag_sharp_bound)
    return record("6 bound |I_nu(iz)| <= (|z|/2)^nu/Gamma(nu+1)", not bad, "holds" if not bad else str(bad))


def check_spectrum():
    eig_err = 0.0
    gap = math.inf
    for alpha in (0.1, 0.3, 0.5):
        num = build_model(as_fourier2d(AharonovBohm(alpha)), 20).mus
        exact = np.sort((np.arange(-20, 21) + alpha) ** 2)[:20]
        eig_err = max(eig_err, float(np.max(np.abs(num - exact))))
        rep = verify_form_bounds(AharonovBohm(alpha), 64)
        gap = min(gap, rep["min_eig_upper_gap"], rep["min_eig_lower_gap"])
    rep = verify_form_bounds(parse_preset(PRESETS[-1]), 64)
    gap = min(gap, rep["min_eig_upper_gap"], rep["min_eig_lower_gap"])
    lo, hi = math.inf, 0.0
    for preset in PRESETS:
        w = verify_weyl_growth(build_model(parse_preset(preset), 40))
        lo, hi = min(lo, w["ratio_min"]), max(hi, w["ratio_max"])
    ok = eig_err <= 1e-10 and gap >= -1e-10 and 0.1 <= lo and hi <= 10.0
    return record(
        "7 spectral correctness",
        ok,
        f"eig err {eig_err:.1e}, min gap eig {gap:.3g}, Weyl ratios in [{lo:.3f}, {hi:.3f}] within [0.1, 10]",
    )


def _gaussian(sigma, c, r):
    return (sigma / (sigma + c)) * np.exp(-(r**2) / (4 * (sigma + c)))


def check_propagators():
    start = time.perf_counter()
    ks = auto_plan(Free(), z_max=10.0, tol=1e-12)
    u0 = InitialDatum.radial(lambda r: np.exp(-(r**2)), 0.0, 6.0, 96)
    r = np.linspace(0.0, 2.0, 9)
    errs = {}
    for which, c, fn in (("schrodinger", 1j, apply_schrodinger), ("heat", 1.0, apply_heat)):
        ref = _gaussian(0.25, c, r)
        got = fn(ks.model, ks, u0, 1.0, (r, 0.7)).values
        errs[which] = np.max(np.abs(got - ref)) / np.max(np.abs(ref))
    ring = lambda s: np.exp(-(((s - 1.5) / 0.3) ** 2))  # noqa: E731
    datum = InitialDatum.radial(ring, 0.3, 2.7, 64)
    inv = auto_plan(InverseSquare3D(2.0), z_max=14.0, tol=1e-10)
    r_in = np.linspace(0.4, 2.5, 10)
    points = (r_in, np.column_stack([np.full_like(r_in, 0.5 * math.pi), np.zeros_like(r_in)]))
    cn = 0.0
    for t in (0.25, 0.5, 1.0):
        got = apply_heat(inv.model, inv, datum, t, points, angular_nodes=8).values.real
        ref = heat_oracle(2.0, ring, t, r_in).values
        cn = max(cn, np.max(np.abs(got - ref)) / np.max(np.abs(ref)))
    elapsed = time.perf_counter() - start
    ok = errs["schrodinger"] <= 1e-5 and errs["heat"] <= 1e-6 and cn <= 1e-3 and elapsed < 300
    return record(
        "8 propagator oracles",
        ok,
        f"Gaussian {errs['schrodinger']:.1e}/{errs['heat']:.1e}, Crank-Nicolson {cn:.1e}, {elapsed:.1f}s",
    )


def check_dispersive(preset):
    ks = decay_plan(preset)
    half = ks.n / 2
    t = np.array(DEFAULT_TIMES)
    scaled = np.array([weighted_operator_norm(ks, s, 0.0, GRID, mode="scaling") for s in t]) * t**half
    honest = np.array([weighted_operator_norm(ks, s, 0.0, GRID, mode="honest") for s in t]) * t**half
    spread_s = np.max(np.abs(scaled / scaled[0] - 1))
    spread_h = np.max(honest) / np.min(honest) - 1
    ok = spread_s <= 1e-12 and spread_h <= 0.05
    return record(
        f"9 dispersive {short(preset)}", ok, f"scaling spread {spread_s:.1e}, honest spread {100 * spread_h:.2f}%"
    )


# --------------------------------------------------------------------------
# pytest entry points


def test_criterion_1_free_closed_form():
    assert check_free_closed_form()


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5])
def test_criterion_2_aharonov_bohm(alpha):
    assert check_aharonov_bohm(alpha)


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_criterion_3_inverse_square_heat(a):
    assert check_inverse_square_heat(a)


def test_criterion_4_interpolation():
    assert check_interpolation()


def test_criterion_5_constants():
    assert check_constants()


def test_criterion_6_oracle():
    assert check_oracle_grid()


def test_criterion_6_sharp_bound():
    assert check_sharp_bound()


@pytest.mark.xfail(strict=True, reason="the constant-1 Gamma(nu+1/2) bound is violated at nu = 0")
def test_criterion_6_gamma_half_bound():
    assert check_gamma_half_bound()


def test_criterion_7_spectrum():
    assert check_spectrum()


def test_criterion_8_propagators():
    assert check_propagators()


@pytest.mark.parametrize("preset", PRESETS, ids=short)
def test_criterion_9_dispersive(preset):
    assert check_dispersive(preset)


def main():
    check_free_closed_form()
    for alpha in (0.1, 0.3, 0.5):
        check_aharonov_bohm(alpha)
    for a in (1.0, 2.0):
        check_inverse_square_heat(a)
    check_interpolation()
    check_constants()
    check_oracle_grid()
    check_gamma_half_bound()
    check_sharp_bound()
    check_spectrum()
    check_propagators()
    for preset in PRESETS:
        check_dispersive(preset)
    return 0 if all(line.startswith("PASS") for line in RESULTS) else 1


if __name__ == "__main__":
    sys.exit(main())
