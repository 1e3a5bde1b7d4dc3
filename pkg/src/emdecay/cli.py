"""``emdecay`` command line: eigenpairs, decay sweeps and field snapshots.

Every command writes ``report.json`` into ``--out`` (also on failure) and
exits with

    0  all checks passed
    2  field rejected (negative ground state or Hardy range)
    3  eigenvalue solve did not resolve
    4  fitted decay exponent outside tolerance
    5  propagator disagrees with its oracle
    1  any other error
"""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import click
import numpy as np

from . import __version__
from .angular import (
    AharonovBohm,
    Free,
    InverseSquare3D,
    build_model,
    spec_from_dict,
    spec_to_dict,
    verify_form_bounds,
    verify_sup_norm_bound,
    verify_weyl_growth,
)
from .decay import DEFAULT_TIMES, GridSpec, decay_sweep
from .errors import EmDecayError, ModelRejectedError, ResolutionError
from .kernel import auto_plan
from .propagator import InitialDatum, apply_heat, apply_schrodinger, heat_oracle

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REJECTED = 2
EXIT_RESOLUTION = 3
EXIT_DECAY = 4
EXIT_ORACLE = 5

SLOPE_TOL = {"honest": 0.05, "scaling": 1e-12}
ORACLE_TOL = {"gaussian_schrodinger": 1e-5, "gaussian_heat": 1e-6, "crank_nicolson": 1e-3}


class UsageFailure(EmDecayError):
    pass


# --------------------------------------------------------------------------
# configuration


def parse_preset(text):
    """``free2d``, ``ab:<alpha>``, ``fourier2d:<file>`` or ``invsq3d:<a>``."""
    name, _, arg = text.partition(":")
    try:
        if name == "free2d" and not arg:
            return Free(n=2)
        if name == "ab":
            return AharonovBohm(alpha=float(arg))
        if name == "invsq3d":
            return InverseSquare3D(a=float(arg))
        if name == "fourier2d":
            data = json.loads(Path(arg).read_text())
            data.setdefault("kind", "fourier2d")
            if data["kind"] != "fourier2d":
                raise UsageFailure(f"{arg} does not describe a fourier2d field")
            return spec_from_dict(data)
    except (ValueError, OSError, KeyError) as exc:
        raise UsageFailure(f"bad preset {text!r}: {exc}") from exc
    raise UsageFailure(f"unknown preset {text!r}")


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


@dataclass
class RunConfig:
    preset: str | None = "free2d"
    spec: dict | None = None
    tol: float = 1e-10
    grid: str = ""
    times: list = field(default_factory=lambda: list(DEFAULT_TIMES))
    theta: list = field(default_factory=lambda: [0.0, 1.0])
    which: str = "schrodinger"
    mode: str = "honest"
    out: str = "."
    k: int = 20
    slope_tol: float | None = None
    datum: str | None = None

    def __post_init__(self):
        self.times = _float_list(self.times)
        self.theta = _float_list(self.theta)
        if self.tol <= 0 or (self.slope_tol is not None and self.slope_tol <= 0):
            raise UsageFailure("tolerances must be positive")
        if any(not 0.0 <= th <= 1.0 for th in self.theta):
            raise UsageFailure("theta values must lie in [0, 1]")
        if any(t <= 0 for t in self.times):
            raise UsageFailure("times must be positive")
        if self.which not in ("schrodinger", "heat"):
            raise UsageFailure(f"--which must be schrodinger or heat, got {self.which!r}")
        if self.mode not in SLOPE_TOL:
            raise UsageFailure(f"--mode must be scaling or honest, got {self.mode!r}")
        if self.k < 1:
            raise UsageFailure("-k must be >= 1")

    def field_spec(self):
        if self.spec is not None:
            return spec_from_dict(self.spec)
        if self.preset is None:
            raise UsageFailure("give --preset or --spec")
        return parse_preset(self.preset)

    def grid_spec(self):
        return GridSpec.parse(self.grid)

    @property
    def model_id(self):
        return self.preset if self.spec is None else spec_to_dict(self.field_spec())["kind"]

    @property
    def slope_tolerance(self):
        return self.slope_tol if self.slope_tol is not None else SLOPE_TOL[self.mode]


def load_config(config_path, overrides):
    """JSON file values, then the flags that were actually given."""
    data = {}
    if config_path:
        data = json.loads(Path(config_path).read_text())
        unknown = set(data) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise UsageFailure(f"unknown config keys: {sorted(unknown)}")
        if isinstance(data.get("spec"), str):
            data["spec"] = json.loads(Path(data["spec"]).read_text())
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "spec":
            value = json.loads(Path(value).read_text())
            data["preset"] = None
        if key == "preset":
            data.pop("spec", None)
        data[key] = value
    return RunConfig(**data)


# --------------------------------------------------------------------------
# output helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _exit_code_for(exc):
    if isinstance(exc, ModelRejectedError):
        return EXIT_REJECTED
    if isinstance(exc, ResolutionError):
        return EXIT_RESOLUTION
    return EXIT_ERROR


def _run(command, cfg, body):
    """Run ``body(cfg, out_dir, report)``; the report is written whatever happens."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {"command": command, "version": __version__, "config": asdict(cfg)}
    try:
        code = body(cfg, out, report)
    except EmDecayError as exc:
        code = getattr(exc, "exit_code", None) or _exit_code_for(exc)
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        click.echo(f"error: {exc}", err=True)
    except Exception as exc:  # report first, then let the traceback through
        report.update(exit_code=EXIT_ERROR, status="failed", error={"type": type(exc).__name__, "message": str(exc)})
        _write_json(out / "report.json", report)
        raise
    report["exit_code"] = code
    report["status"] = "ok" if code == EXIT_OK else "failed"
    _write_json(out / "report.json", report)
    return code


# --------------------------------------------------------------------------
# commands


def cmd_eigs(cfg):
    def body(cfg, out, report):
        spec = cfg.field_spec()
        model = build_model(spec, cfg.k, tol=cfg.tol)
        _write_rows(
            out / "eigs.csv",
            ["k", "mu", "beta", "sup_norm", "label"],
            [[p.index, p.mu, p.beta, p.sup_norm, " ".join(str(v) for v in p.label)] for p in model.pairs],
        )
        checks = {}
        if model.n == 2:
            M = max(64, 4 * cfg.k)
            fb = verify_form_bounds(spec, M)
            fb["passed"] = min(fb["min_eig_upper_gap"], fb["min_eig_lower_gap"]) >= -1e-10
            checks["form_bounds"] = fb
        if model.k_max >= 20:
            wg = verify_weyl_growth(model)
            wg["passed"] = 0.0 < wg["ratio_min"] <= wg["ratio_max"] < math.inf
            checks["weyl_growth"] = wg
        else:
            checks["weyl_growth"] = {"skipped": "needs -k >= 20", "passed": True}
        sn = verify_sup_norm_bound(model, 256)
        sn["passed"] = bool(math.isfinite(sn["C_best"]))
        sn.pop("empirical_sups")
        checks["sup_norm"] = sn
        report.update(
            spec=spec_to_dict(spec),
            n=model.n,
            mu_1=float(model.mus[0]),
            g=model.g,
            eigenvalues=[float(m) for m in model.mus],
            diagnostics=model.diagnostics,
            checks=checks,
        )
        ok = all(c["passed"] for c in checks.values())
        click.echo(f"mu_1 = {model.mus[0]:.12g}  g = {model.g:.12g}  checks {'passed' if ok else 'FAILED'}")
        return EXIT_OK if ok else EXIT_ERROR

    return _run("eigs", cfg, body)


def cmd_decay(cfg):
    def body(cfg, out, report):
        spec = cfg.field_spec()
        grid = cfg.grid_spec()
        ks = auto_plan(spec, z_max=grid.z_max, tol=cfg.tol)
        tol = cfg.slope_tolerance
        sweeps, failures = [], []
        for i, theta in enumerate(cfg.theta):
            rep = decay_sweep(ks, theta, grid, cfg.which, cfg.times, cfg.mode, cfg.model_id)
            rep.to_csv(out / "decay.csv", header=(i == 0))
            _write_rows(out / f"decay_theta{theta:g}.dat", ["t", "norm"], zip(rep.times, rep.norms))
            entry = rep.to_dict()
            entry["passed"] = rep.slope_error <= tol and rep.sup_converged
            sweeps.append(entry)
            click.echo(
                f"theta={theta:g}  slope {rep.fitted_slope:.6f}  predicted {rep.predicted_slope:.6f}  "
                f"|diff| {rep.slope_error:.2e}  sup refinement {max(rep.delta_omega1, rep.delta_omega2):.2e}"
            )
            if not entry["passed"]:
                failures.append(
                    f"theta={theta:g}: fitted {rep.fitted_slope:.6f} vs predicted {rep.predicted_slope:.6f} "
                    f"(|diff| {rep.slope_error:.3e}, tol {tol:g}, sup converged {rep.sup_converged})"
                )
        report.update(
            spec=spec_to_dict(spec), kernel=ks.to_dict(), grid=asdict(grid), slope_tol=tol, sweeps=sweeps
        )
        if failures:
            report["diff_summary"] = failures
            for line in failures:
                click.echo(line, err=True)
            return EXIT_DECAY
        return EXIT_OK

    return _run("decay", cfg, body)


def _parse_datum(text, model):
    """``gaussian:<sigma>`` is ``exp(-|x|^2/(4 sigma))``; ``ring:<r0>,<w>`` is radial and annular."""
    if text is None:
        text = "gaussian:1" if model.g == 0 else "ring:1.5,0.3"
    name, _, arg = text.partition(":")
    vals = _float_list(arg) if arg else []
    if name == "gaussian":
        sigma = vals[0] if vals else 1.0
        # truncated where the profile is below 1e-17
        R = math.sqrt(4.0 * sigma * 17.0 * math.log(10.0))
        return "gaussian", sigma, InitialDatum.radial(lambda r: np.exp(-(r**2) / (4.0 * sigma)), 0.0, R, 96)
    if name == "ring":
        r0, w = (vals + [1.5, 0.3][len(vals) :])[:2]
        lo, hi = max(r0 - 4 * w, 0.05 * r0), r0 + 4 * w
        datum = InitialDatum.radial(lambda r: np.exp(-(((r - r0) / w) ** 2)), lo, hi, 64)
        return "ring", (r0, w), datum
    raise UsageFailure(f"unknown datum {text!r}")


def _radial_nodes(model, K):
    """Fewest sphere-rule nodes that project a radial profile exactly onto the first ``K`` modes."""
    if model.n == 2:
        # the trapezoid sees frequency k as k mod nodes
        return max(8, int(np.max(np.abs(model.freqs))) + 1)
    # Gauss-Legendre in cos(polar) is exact to degree 2N-1; azimuths alias m at 2N
    return max(8, int(model.lm[:K, 0].max()) // 2 + 1)


def _is_free(spec):
    return isinstance(spec, Free) or (isinstance(spec, InverseSquare3D) and spec.a == 0.0)


def _output_points(n):
    r = np.linspace(0.25, 3.0, 12)
    omega = np.zeros_like(r) if n == 2 else np.column_stack([np.full_like(r, 0.5 * math.pi), np.zeros_like(r)])
    return r, omega


def cmd_propagate(cfg):
    def body(cfg, out, report):
        spec = cfg.field_spec()
        probe = build_model(spec, 1)
        kind, params, u0 = _parse_datum(cfg.datum, probe)
        r_out, omega = _output_points(probe.n)
        z_need = float(r_out.max()) * u0.r_max / (2.0 * min(cfg.times))
        ks = auto_plan(spec, z_max=max(z_need, 1.0), tol=cfg.tol)
        model = ks.model
        if kind == "ring":
            u0 = replace(u0, angular_nodes=_radial_nodes(model, ks.K_used))
        apply = apply_schrodinger if cfg.which == "schrodinger" else apply_heat
        snapshots, failures = [], []
        for t in cfg.times:
            res = apply(model, ks, u0, t, (r_out, omega))
            res.to_csv(out / f"field_t{t:g}.csv")
            snap = {"t": t, "quadrature_error_estimate": res.quadrature_error_estimate, "converged": res.converged}
            oracle = _oracle(spec, kind, params, u0, cfg.which, t, r_out, model.n)
            if oracle is not None:
                name, ref = oracle
                err = float(np.max(np.abs(res.values - ref)) / np.max(np.abs(ref)))
                snap["oracle"] = {"name": name, "max_relative_error": err, "tol": ORACLE_TOL[name]}
                if err > ORACLE_TOL[name]:
                    failures.append(f"t={t:g}: {name} relative error {err:.3e} > {ORACLE_TOL[name]:g}")
            snapshots.append(snap)
            click.echo(f"t={t:g}  quadrature estimate {res.quadrature_error_estimate:.2e}" + (
                f"  oracle {snap['oracle']['name']} error {snap['oracle']['max_relative_error']:.2e}"
                if "oracle" in snap else ""
            ))
        report.update(spec=spec_to_dict(spec), kernel=ks.to_dict(), datum=kind, snapshots=snapshots)
        if failures:
            report["diff_summary"] = failures
            for line in failures:
                click.echo(line, err=True)
            return EXIT_ORACLE
        return EXIT_OK

    return _run("propagate", cfg, body)


def _oracle(spec, kind, params, u0, which, t, r_out, n):
    if kind == "gaussian" and _is_free(spec):
        # exp(-|x|^2/(4 s)) evolves to (s/(s+c))^{n/2} exp(-|x|^2/(4(s+c))), c = it or t
        c = 1j * t if which == "schrodinger" else t
        ref = (params / (params + c)) ** (n / 2) * np.exp(-(r_out**2) / (4.0 * (params + c)))
        return f"gaussian_{which}", ref
    if kind == "ring" and which == "heat" and isinstance(spec, InverseSquare3D):
        r0, w = params
        profile = lambda r: np.where((r >= u0.r_min) & (r <= u0.r_max), np.exp(-(((r - r0) / w) ** 2)), 0.0)  # noqa: E731
        return "crank_nicolson", heat_oracle(spec.a, profile, t, r_out).values
    return None


# --------------------------------------------------------------------------
# click wiring


def _common(f):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON run config."),
        click.option("--preset", help="free2d | ab:<alpha> | fourier2d:<file> | invsq3d:<a>"),
        click.option("--spec", help="JSON field spec file (overrides --preset)."),
        click.option("--tol", type=float, help="Kernel truncation tolerance."),
        click.option("--out", help="Output directory."),
    ]
    for opt in reversed(options):
        f = opt(f)
    return f


def _finish(code):
    sys.exit(code)


@click.group()
@click.version_option(__version__)
def main():
    """Weighted dispersive and heat decay for scaling-critical electromagnetic fields."""


@main.command()
@_common
@click.option("-k", "k", type=int, help="Number of eigenpairs.")
def eigs(config_path, **flags):
    """Eigenpairs of the angular operator and their checks."""
    _finish(_dispatch(cmd_eigs, config_path, flags))


@main.command()
@_common
@click.option("--grid", help="r:<n>,ang:<n>,levels:<n>")
@click.option("--times", help="Comma-separated times.")
@click.option("--theta", help="Comma-separated weights in [0, 1].")
@click.option("--which", type=click.Choice(["schrodinger", "heat"]))
@click.option("--mode", type=click.Choice(["scaling", "honest"]))
@click.option("--slope-tol", type=float, help="Allowed |fitted - predicted| slope.")
def decay(config_path, **flags):
    """Fit decay exponents of the weighted L^1 -> L^inf norm."""
    _finish(_dispatch(cmd_decay, config_path, flags))


@main.command()
@_common
@click.option("--times", help="Comma-separated times.")
@click.option("--which", type=click.Choice(["schrodinger", "heat"]))
@click.option("--datum", help="gaussian:<sigma> | ring:<r0>,<width>")
def propagate(config_path, **flags):
    """Evolve a datum and compare with an oracle where one exists.

    Schroedinger results are verified for t of order 0.1 R^2 and above, R the
    outer radius of the datum.  At shorter times the integrand oscillates too
    fast for the fixed quadrature, which shows up as a large quadrature
    estimate in the report.
    """
    _finish(_dispatch(cmd_propagate, config_path, flags))


def _dispatch(command, config_path, flags):
    try:
        cfg = load_config(config_path, flags)
    except (EmDecayError, ValueError, TypeError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        out = Path(flags.get("out") or ".")
        out.mkdir(parents=True, exist_ok=True)
        _write_json(
            out / "report.json",
            {"command": command.__name__[4:], "status": "failed", "exit_code": EXIT_ERROR,
             "error": {"type": type(exc).__name__, "message": str(exc)}},
        )
        return EXIT_ERROR
    return command(cfg)


if __name__ == "__main__":
    main()
