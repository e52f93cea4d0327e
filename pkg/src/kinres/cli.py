"""Command-line driver: ``kinres {verify,sweep,profile-sigma,gap-demo}``.

Exit codes: 0 all checks pass, 1 a verification failed, 2 usage or
configuration error.  Outputs are written under ``--out`` as CSV (17
significant digits, one header row) and JSON (sorted keys), and are
byte-identical for identical configuration.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .collision import GradKernelModel, K_opnorm_estimate, apply_K
from .counterexample import (
    alpha_sweep,
    codim_sweep,
    ly2_gap_sweep,
    manufactured_solution_check,
    moment_functionals,
)
from .quadrature import QuadratureError
from .transport import (
    Gaussian,
    SeparableField,
    TwoSidedExponential,
    apply_S,
    bounded_case_constant,
    inverse_pair_residual,
    l1_identity_errors,
    sigma_estimate,
    sigma_integral_divergence,
)
from .velocity import CollisionFrequencyModel, Velocity, VelocityGrid, weight_triangle_check

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class RunConfig:
    nu0: float = 1.0
    C_amp: float = 1.0
    c_decay: float = 1.0
    q: float = 2.0
    alpha_min: float = 2.0**-14
    alpha_max: float = 2.0**-4
    n_points: int = 12
    quad_tol: float = 1e-12
    R_max: float = 50.0
    grid_level: int = 0
    n_xi1: int = 16
    n_perp: int = 3
    seed: int = 0
    triangle_samples: int = 1_000_000
    theta_min: float = 1e-5
    theta_max: float = 10.0
    n_theta: int = 60
    sigma_limit: float = math.exp(-1.0)
    sigma_tol: float = 0.01
    sigma_small_theta: float = 1e-3
    eps_list: list = dataclasses.field(default_factory=lambda: [1e-3, 5e-4, 2.5e-4, 1.25e-4])
    divergence_tol: float = 0.05
    xi1_list: list = dataclasses.field(default_factory=lambda: [float(v) for v in np.logspace(-1, -6, 11)])
    gap_slope_tol: float = 1e-3
    with_codim: bool = True
    timing: bool = False

    def validate(self) -> "RunConfig":
        for name in ("nu0", "c_decay", "alpha_min", "alpha_max", "quad_tol", "R_max",
                     "theta_min", "theta_max", "sigma_limit", "sigma_tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {v!r}")
        if not (isinstance(self.C_amp, (int, float)) and self.C_amp >= 0):
            raise ConfigError("C_amp must be nonnegative")
        if not self.q >= 1 or not math.isfinite(self.q):
            raise ConfigError("q must be a finite number >= 1")
        if not self.alpha_min < self.alpha_max:
            raise ConfigError("alpha_min must be smaller than alpha_max")
        if not self.quad_tol <= 1e-2:
            raise ConfigError("quad_tol must lie in (0, 1e-2]")
        if self.n_points < 4:
            raise ConfigError("n_points must be >= 4 (degenerate fit refused)")
        if not self.theta_min < self.theta_max or self.n_theta < 2:
            raise ConfigError("need theta_min < theta_max and n_theta >= 2")
        if len(self.eps_list) < 3 or any(not 0 < e < 1 for e in self.eps_list):
            raise ConfigError("eps_list needs at least 3 values in (0, 1)")
        if any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ConfigError("eps_list must be strictly decreasing")
        xs = self.xi1_list
        if len(xs) < 2 or any(v <= 0 for v in xs) or any(b >= a for a, b in zip(xs, xs[1:])):
            raise ConfigError("xi1_list must hold at least 2 positive, strictly decreasing values")
        if self.triangle_samples < 1 or self.grid_level < 0:
            raise ConfigError("triangle_samples must be >= 1 and grid_level >= 0")
        return self

    @property
    def nu_model(self) -> CollisionFrequencyModel:
        return CollisionFrequencyModel(self.nu0)

    @property
    def kernel(self) -> GradKernelModel:
        return GradKernelModel(self.C_amp, self.c_decay)

    def grid(self, R_max: float | None = None, level: int | None = None) -> VelocityGrid:
        return VelocityGrid.product(
            R_max=self.R_max if R_max is None else R_max,
            level=self.grid_level if level is None else level,
            n_xi1=self.n_xi1,
            n_perp=self.n_perp,
        )


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a flat JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# -- reporting -------------------------------------------------------------------

@dataclasses.dataclass
class CheckRecord:
    name: str
    passed: bool
    measured: float
    target: float
    tolerance: float
    runtime: float | None = None
    detail: str = ""

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["status"] = "pass" if d.pop("passed") else "fail"
        return d


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[h]) for h in header])


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _envelope(cfg: RunConfig, command: str, checks: list[CheckRecord], extra: dict | None = None) -> dict:
    out = {
        "command": command,
        "tool_version": __version__,
        "config": dataclasses.asdict(cfg),
        "checks": [c.to_json() for c in checks],
        "pass": all(c.passed for c in checks),
    }
    if extra:
        out.update(extra)
    return out


class _Timer:
    def __init__(self, enabled: bool):
        self.enabled = enabled

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = round(time.perf_counter() - self.t0, 6) if self.enabled else None


def _check(cfg, name, fn, target, tolerance, compare="abs"):
    """Run ``fn`` -> measured value; ``compare`` is ``abs`` (|m - t| <= tol) or ``le`` (m <= t + tol)."""
    with _Timer(cfg.timing) as t:
        try:
            measured = float(fn())
            detail = ""
        except QuadratureError as exc:
            measured, detail = float("nan"), str(exc)
    if compare == "le":
        ok = measured <= target + tolerance
    else:
        ok = abs(measured - target) <= tolerance
    return CheckRecord(name, bool(ok), measured, float(target), float(tolerance), t.elapsed, detail)


# -- commands ----------------------------------------------------------------

def cmd_verify(cfg: RunConfig, out: Path) -> int:
    nu_m, kern, grid = cfg.nu_model, cfg.kernel, cfg.grid()
    tol = cfg.quad_tol
    sample = [Velocity(*row) for row in grid.nodes[:: max(1, len(grid) // 40)]]

    def l1_identity():
        dev, _ = l1_identity_errors(grid, nu_m, tol)
        return np.max(np.abs(dev))

    def resolvent_of_constant():
        one = lambda y: np.ones_like(y)
        return max(abs(apply_S(one, xi, 0.3, nu_m, tol=tol) - 1.0 / nu_m(xi)) for xi in sample)

    def inverse_pair():
        fields = [SeparableField(Gaussian(1.0, 0.7)), SeparableField(TwoSidedExponential(0.5, 2.0))]
        return max(abs(inverse_pair_residual(f, xi, x, nu_m, tol=tol))
                   for f in fields for xi in sample[::4] for x in (-0.4, 0.0, 0.9))

    def k_constant():
        return apply_K(1.0, [0.3, -1.0, 2.0], kern, tol=max(tol, 1e-12))

    def k_gaussian():
        return apply_K(lambda v: np.exp(-v * v), [0.0, 0.0, 0.0], kern, tol=max(tol, 1e-12), radial=True)

    g_mass = 4.0 * math.pi * kern.C_amp / (2.0 * (kern.c_decay + 1.0))
    checks = [
        _check(cfg, "l1_identity", l1_identity, 0.0, 1e-10, "le"),
        _check(cfg, "resolvent_of_constant", resolvent_of_constant, 0.0, 1e-10, "le"),
        _check(cfg, "inverse_pair", inverse_pair, 0.0, 1e-8, "le"),
        _check(cfg, "weight_triangle", lambda: weight_triangle_check(cfg.triangle_samples, cfg.seed)[1],
               math.sqrt(2.0), 1e-12, "le"),
        _check(cfg, "K_constant_closed_form", k_constant, kern.total_mass(), 1e-6),
        _check(cfg, "K_gaussian_closed_form", k_gaussian, g_mass, 1e-6),
        _check(cfg, "bounded_case_constant", lambda: bounded_case_constant(grid, nu_m),
               math.sqrt(2.0) / cfg.nu0, 1e-6),
        _check(cfg, "manufactured_solution", lambda: manufactured_solution_check(
            kernel=kern, model=nu_m, tol=min(tol * 100, 1e-8)), 0.0, 1e-6, "le"),
    ]
    report = _envelope(cfg, "verify", checks, {"backend": _accel.backend_name()})
    write_json(out / "verify_report.json", report)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: measured={c.measured:.6g} target={c.target:.6g} tol={c.tolerance:g}")
    return EXIT_OK if report["pass"] else EXIT_FAIL


SWEEP_COLUMNS = ["alpha", "probe", "weighted_probe", "lq_norm", "log_alpha", "log_weighted_probe"]


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    rep = alpha_sweep(cfg.q, cfg.alpha_min, cfg.alpha_max, cfg.n_points, model=cfg.nu_model)
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, list(rep.rows()))
    verdict = rep.verdict()
    ok = rep.passed
    if cfg.with_codim:
        cs = codim_sweep(moment_functionals(), cfg.q, model=cfg.nu_model)
        verdict["codim"] = {
            "fitted_slope": cs.fitted_slope,
            "target": cs.slope_target,
            "tolerance": cs.slope_tol,
            "max_residual": cs.max_residual,
            "pass": cs.passed,
        }
        ok = ok and cs.passed
    verdict["pass"] = ok
    write_json(out / "sweep_verdict.json", {"tool_version": __version__, "config": dataclasses.asdict(cfg), **verdict})
    print(f"{'PASS' if ok else 'FAIL'}  slope={rep.fitted_slope:.6f} target={rep.slope_target:.6f} tol={rep.slope_tol}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_profile_sigma(cfg: RunConfig, out: Path) -> int:
    grid, nu_m = cfg.grid(), cfg.nu_model
    thetas = np.geomspace(cfg.theta_min, cfg.theta_max, cfg.n_theta)
    rows = []
    for th in thetas:
        est = sigma_estimate(float(th), grid, nu_m)
        rows.append({"theta": th, "sigma": est.value, "sigma_times_theta": est.value * th, "tail_limit": est.tail_limit})
    write_csv(out / "sigma_profile.csv", ["theta", "sigma", "sigma_times_theta", "tail_limit"], rows)

    table = sigma_integral_divergence(cfg.eps_list, grid, nu_m)
    write_csv(out / "sigma_divergence.csv", ["eps", "integral"], [{"eps": e, "integral": v} for e, v in table])

    small = [r["sigma_times_theta"] for r in rows if r["theta"] <= cfg.sigma_small_theta]
    st_err = max(abs(v / cfg.sigma_limit - 1.0) for v in small) if small else float("inf")
    sig = [r["sigma"] for r in rows]
    monotone = all(b <= a for a, b in zip(sig, sig[1:]))
    integrals = [v for _, v in table]
    incs = [
        (b - a) / (cfg.sigma_limit * math.log(e0 / e1))
        for (e0, a), (e1, b) in zip(table, table[1:])
    ]
    inc_err = max(abs(v - 1.0) for v in incs)
    ratio = (integrals[2] - integrals[0]) / (integrals[1] - integrals[0])
    ratio_target = math.log(cfg.eps_list[0] / cfg.eps_list[2]) / math.log(cfg.eps_list[0] / cfg.eps_list[1])
    checks = [
        CheckRecord("sigma_theta_limit", st_err <= cfg.sigma_tol, max(small, key=lambda v: abs(v - cfg.sigma_limit)) if small else float("nan"),
                    cfg.sigma_limit, cfg.sigma_tol, detail="relative deviation of sigma*theta for theta <= sigma_small_theta"),
        CheckRecord("sigma_monotone", monotone, float(monotone), 1.0, 0.0),
        CheckRecord("divergence_increments", inc_err <= cfg.divergence_tol, inc_err, 0.0, cfg.divergence_tol,
                    detail="max relative deviation of increments from sigma_limit*ln(eps_k/eps_k+1)"),
        CheckRecord("divergence_ratio", abs(ratio / ratio_target - 1.0) <= cfg.divergence_tol, ratio, ratio_target, cfg.divergence_tol),
    ]
    report = _envelope(cfg, "profile-sigma", checks)
    write_json(out / "sigma_verdict.json", report)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: measured={c.measured:.6g} target={c.target:.6g} tol={c.tolerance:g}")
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_gap_demo(cfg: RunConfig, out: Path) -> int:
    rows, slope = ly2_gap_sweep(cfg.xi1_list)
    write_csv(out / "gap.csv", ["xi1", "ratio"], [{"xi1": a, "ratio": r} for a, r in rows])
    ok = abs(slope + 1.0) <= cfg.gap_slope_tol
    check = CheckRecord("gap_slope", ok, slope, -1.0, cfg.gap_slope_tol)
    write_json(out / "gap_verdict.json", _envelope(cfg, "gap-demo", [check]))
    print(f"{'PASS' if ok else 'FAIL'}  gap slope={slope:.6f} target=-1 tol={cfg.gap_slope_tol:g}")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "profile-sigma": cmd_profile_sigma,
    "gap-demo": cmd_gap_demo,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kinres", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="flat JSON config; every key optional")
        p.add_argument("--out", metavar="DIR", default="kinres_out", help="output directory (default: %(default)s)")
        p.add_argument("--q", type=float)
        p.add_argument("--alpha-min", type=float, dest="alpha_min")
        p.add_argument("--alpha-max", type=float, dest="alpha_max")
        p.add_argument("--points", type=int, dest="n_points")
        p.add_argument("--seed", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = load_config(args.config)
        for key in ("q", "alpha_min", "alpha_max", "n_points", "seed"):
            v = getattr(args, key)
            if v is not None:
                setattr(cfg, key, v)
        cfg.validate()
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"kinres: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return COMMANDS[args.command](cfg, out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
