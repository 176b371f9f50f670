"""Command-line front end: ``wedgekrein {oracle,wedge,pi,converge,cache}``.

Outputs are CSV (17 significant digits) and JSON, written atomically and
free of timestamps so that repeated runs are byte-identical.

Exit codes: 0 success, 2 property failure, 3 accuracy cap, 4 config error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import sector
from .convergence import ApproachPath, ConvergenceRun, execute, friedrichs_gap, loglog_slope
from .finite import oracle_suite
from .krein import SingularDenominatorError
from .points import PointConfig, build_pi_matrices, gamma_check
from .wedge import (
    ADOPTED_CONVENTION,
    AnalyticExtension,
    PoleError,
    Wedge,
    extension_resolvent_kernel,
    secular_eigenvalues,
    shooting_eigenvalues,
    weyl_gamma,
)

EXIT_OK, EXIT_PROPERTY, EXIT_CAP, EXIT_CONFIG = 0, 2, 3, 4
EIG_TOL = 1e-5


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    omega: float = 1.5 * math.pi
    radius: float = 1.0
    K: int = sector.DEFAULT_K
    M: int = sector.DEFAULT_M
    m_cap: int = 120
    theta: list = field(default_factory=lambda: [1.0, -1.0, 0.0, 10.0])
    z: list = field(default_factory=lambda: [0.1, 0.5, 1.0, 2.0, 5.0, 10.0])
    z_eval: float = 1.0
    theta0: float | None = None
    n_max: int = 12
    ratio: float = 0.5
    r0: float | None = None
    seed: int = 0
    instances: int = 100
    d_max: int = 8
    n_max_deficiency: int = 3
    perturb_theta: float = 0.0
    points: list = field(default_factory=lambda: [[0.4, 1.2], [0.5, 3.0]])
    eig_max: float = 60.0
    kernel_source: list = field(default_factory=lambda: [0.5, 2.0])
    kernel_grid: list = field(default_factory=lambda: [5, 7])
    convention: str = ADOPTED_CONVENTION
    out: str = "."

    def validate(self) -> "RunConfig":
        if not math.pi < self.omega <= 2 * math.pi:
            raise ConfigError("omega must lie in (pi, 2pi]")
        if not self.radius > 0:
            raise ConfigError("radius must be positive")
        if self.K < 1 or self.M < 1 or self.m_cap < self.M:
            raise ConfigError("need K, M >= 1 and m_cap >= M")
        if not self.theta or not all(math.isfinite(t) for t in self.theta):
            raise ConfigError("theta must be a non-empty list of finite numbers")
        if not self.z or any(z <= 0 for z in self.z) or self.z_eval <= 0:
            raise ConfigError("z values must be positive")
        if self.n_max < 0 or not 0 < self.ratio < 1:
            raise ConfigError("need n_max >= 0 and 0 < ratio < 1")
        if self.r0 is not None and not 0 < self.r0 <= self.radius / 3:
            raise ConfigError("r0 must satisfy 0 < r0 <= R/3")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.instances < 1 or not 3 <= self.d_max <= 12 or not 1 <= self.n_max_deficiency <= 3:
            raise ConfigError("oracle sizes out of range (d in [3, 12], n in [1, 3])")
        if self.convention not in ("literal", "modified", "auto"):
            raise ConfigError("convention must be literal, modified or auto")
        if len(self.kernel_grid) != 2 or min(self.kernel_grid) < 2:
            raise ConfigError("kernel_grid needs two sizes >= 2")
        return self

    @classmethod
    def from_sources(cls, path: str | None, overrides: dict) -> "RunConfig":
        data = {}
        if path:
            try:
                data = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        for key in ("theta", "z"):
            if key in data and not isinstance(data[key], list):
                data[key] = [data[key]]
        try:
            cfg = cls(**data)
            cfg.theta = [float(t) for t in cfg.theta]
            cfg.z = [float(t) for t in cfg.z]
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.validate()

    def wedge(self) -> Wedge:
        return Wedge(self.omega, self.radius)


# ---------------------------------------------------------------- output


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    return "nan" if math.isnan(x) else format(x, ".17g")


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)] + [",".join(fmt(v) for v in row) for row in rows]
    write_atomic(path, "\n".join(lines) + "\n")


def write_json(path: Path, obj) -> None:
    write_atomic(path, json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n")


def _resolve_convention(cfg: RunConfig, basis=None) -> tuple[str, dict]:
    if cfg.convention != "auto":
        return cfg.convention, {}
    basis = basis or sector.build_basis(cfg.wedge(), cfg.K, cfg.M)
    return sector.select_convention(basis)


# ---------------------------------------------------------------- commands


def cmd_oracle(cfg: RunConfig) -> int:
    reports = oracle_suite(
        cfg.seed,
        cfg.instances,
        d_range=(3, cfg.d_max),
        n_range=(1, cfg.n_max_deficiency),
        perturb_theta=cfg.perturb_theta,
    )
    payload = [r.as_dict() for r in reports]
    write_json(Path(cfg.out) / "oracle.json", payload)
    for r in payload:
        print(f"{'PASS' if r['pass'] else 'FAIL'} {r['property']} max_error={fmt(r['max_error'])}")
    return EXIT_OK if all(r["pass"] for r in payload) else EXIT_PROPERTY


def cmd_wedge(cfg: RunConfig) -> int:
    w = cfg.wedge()
    out = Path(cfg.out)
    basis = sector.build_basis(w, cfg.K, cfg.M)
    conv, residuals = _resolve_convention(cfg, basis)
    sf = sector.SingularFunctions(basis)

    weyl_rows = []
    for z in cfg.z:
        try:
            lit, flag = weyl_gamma(w, z, "literal"), "ok"
        except PoleError:
            lit, flag = float("nan"), "literal_pole"
        mod = weyl_gamma(w, z, "modified")
        gen = sector.gamma_z_general(basis, sf, z)
        if abs(gen - mod) > 1e-4 * max(1.0, abs(mod)):
            flag = "general_mismatch" if flag == "ok" else flag + ";general_mismatch"
        weyl_rows.append([z, lit, mod, gen, abs(gen - mod), flag])
    write_csv(out / "weyl.csv", ["z", "gamma_literal", "gamma_modified", "gamma_general", "general_abs_diff", "flag"], weyl_rows)

    eig_rows, bad = [], False
    for th in cfg.theta:
        ext = AnalyticExtension(th)
        sec = secular_eigenvalues(w, ext, (0.0, cfg.eig_max), conv)
        sho = shooting_eigenvalues(w, ext, (0.0, cfg.eig_max))
        for i in range(max(len(sec), len(sho))):
            a = sec[i] if i < len(sec) else float("nan")
            b = sho[i] if i < len(sho) else float("nan")
            diff = abs(a - b)
            ok = math.isfinite(diff) and diff <= EIG_TOL
            bad |= not ok
            eig_rows.append([th, i, a, b, diff, "ok" if ok else "mismatch"])
    write_csv(out / "eigenvalues.csv", ["theta", "index", "lambda_secular", "lambda_shooting", "abs_diff", "flag"], eig_rows)

    # kernel of the theta-extension resolvent (first theta, first z) at a polar grid,
    # boundary rows included
    y = tuple(cfg.kernel_source)
    z0, ext0 = cfg.z_eval, AnalyticExtension(cfg.theta[0])
    nr, nt = cfg.kernel_grid
    radii = np.linspace(w.radius / nr, w.radius, nr)
    angles = np.linspace(0.0, w.omega, nt)
    kern_rows = []
    for r in radii:
        for t in angles:
            on_boundary = r == w.radius or t in (0.0, w.omega)
            if math.hypot(r * math.cos(t) - y[0] * math.cos(y[1]), r * math.sin(t) - y[0] * math.sin(y[1])) < 1e-12:
                kern_rows.append([r, t, float("nan"), "source"])
                continue
            try:
                val = extension_resolvent_kernel(
                    w, ext0, z0, (r, t), y, lambda zz, xx, yy: sector.green_function(w, zz, xx, yy), conv
                )
                flag = "boundary" if on_boundary else "ok"
                if on_boundary:
                    val = 0.0 if abs(val) < 1e-10 else val
            except SingularDenominatorError:
                val, flag = float("nan"), "eigenvalue"
            kern_rows.append([r, t, val, flag])
    write_csv(out / "kernel.csv", ["r", "angle", "kernel", "flag"], kern_rows)
    write_json(
        out / "wedge.json",
        {"omega": w.omega, "radius": w.radius, "convention": conv, "residuals": residuals, "z_kernel": z0,
         "theta_kernel": ext0.theta, "source": list(y), "eigen_pass": not bad},
    )
    return EXIT_PROPERTY if bad else EXIT_OK


def cmd_pi(cfg: RunConfig) -> int:
    w = cfg.wedge()
    try:
        pc = PointConfig(tuple(tuple(p) for p in cfg.points)).validate(w)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    rows, worst = [], 0.0
    for z in cfg.z:
        mats = build_pi_matrices(w, pc, z)
        indep = gamma_check(w, pc, z, "offset")
        for i in range(pc.n):
            for j in range(pc.n):
                dev = abs(indep[i, j] - mats.gamma_check[i, j])
                worst = max(worst, dev)
                rows.append([z, i, j, mats.gamma_hat[i, j], mats.gamma_check[i, j], indep[i, j], mats.lambda_y[i, j],
                             "ok" if dev <= 1e-5 else "mismatch"])
    write_csv(Path(cfg.out) / "pi.csv",
              ["z", "i", "j", "gamma_hat", "gamma_check", "gamma_check_offset", "lambda_y", "flag"], rows)
    return EXIT_OK if worst <= 1e-5 else EXIT_PROPERTY


def cmd_converge(cfg: RunConfig, allow_cap: bool = False) -> int:
    w = cfg.wedge()
    conv, residuals = _resolve_convention(cfg)
    if conv != ADOPTED_CONVENTION:
        raise ConfigError("the convergence target needs the modified convention")
    try:
        path = ApproachPath.geometric(w, cfg.theta0, cfg.n_max, cfg.ratio, cfg.r0)
        run = ConvergenceRun(w, AnalyticExtension(cfg.theta[0]), path, cfg.z_eval, cfg.K, cfg.M, cfg.m_cap, conv)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = execute(run)
    header = ["N", "r_N", "s_N", "theta_N", "distance", "distance_no_renorm", "sensitivity", "M_used", "tail", "truncation_flag"]
    write_csv(
        Path(cfg.out) / "converge.csv",
        header,
        [[r.N, r.r, r.s, r.theta_N, r.distance, r.distance_no_renorm, r.sensitivity, r.M_used, r.tail,
          "cap" if r.capped else "ok"] for r in rows],
    )
    dist = [r.distance for r in rows]
    capped = any(r.capped for r in rows)
    summary = {
        "omega": w.omega, "radius": w.radius, "theta": run.target.theta, "z_eval": run.z_eval,
        "theta0": path.theta0, "convention": conv, "residuals": residuals,
        "slope": loglog_slope(path.radii, dist) if len(rows) > 1 else None,
        "distance_first": dist[0], "distance_last": dist[-1],
        "no_renorm_last": rows[-1].distance_no_renorm, "friedrichs_gap": friedrichs_gap(run),
        "cap_bound": capped, "m_cap": run.m_cap,
    }
    write_json(Path(cfg.out) / "converge.json", summary)
    return EXIT_CAP if capped and not allow_cap else EXIT_OK


def cmd_cache(cfg: RunConfig, action: str) -> int:
    directory = sector.cache_dir() or Path(cfg.out) / "basis-cache"
    directory.mkdir(parents=True, exist_ok=True)
    if action == "build":
        sector.build_basis(cfg.wedge(), cfg.K, cfg.M, cache=directory)
        print(directory / f"{sector.cache_key(cfg.wedge(), cfg.K, cfg.M)}.json")
    elif action == "list":
        for p in sorted(directory.glob("*.json")):
            print(p.name)
    else:
        for p in sorted(directory.glob("*.json")):
            p.unlink()
    return EXIT_OK


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--omega", type=float)
    common.add_argument("--radius", type=float)
    common.add_argument("--theta", type=float, nargs="+")
    common.add_argument("--kmax", dest="K", type=int)
    common.add_argument("--mmax", dest="M", type=int)
    common.add_argument("--z", type=float, nargs="+")
    common.add_argument("--convention", choices=["literal", "modified", "auto"])
    common.add_argument("--out", help="output directory")

    parser = argparse.ArgumentParser(prog="wedgekrein", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("oracle", parents=[common], help="finite-model property suite")
    p.add_argument("--perturb-theta", dest="perturb_theta", type=float, help="inject a Theta shift on the Krein side")
    p.add_argument("--instances", type=int)
    sub.add_parser("wedge", parents=[common], help="Weyl functions, eigenvalues, kernel")
    sub.add_parser("pi", parents=[common], help="point-interaction Weyl matrices")
    p = sub.add_parser("converge", parents=[common], help="renormalized approach to the corner")
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--ratio", type=float)
    p.add_argument("--theta0", type=float)
    p.add_argument("--m-cap", dest="m_cap", type=int)
    p.add_argument("--allow-cap", action="store_true", help="exit 0 even if the truncation cap binds")
    p = sub.add_parser("cache", parents=[common], help="basis cache maintenance")
    p.add_argument("action", choices=["build", "list", "clear"])
    return parser


_NON_CONFIG = {"command", "config", "allow_cap", "action"}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
    try:
        cfg = RunConfig.from_sources(args.config, overrides)
        if args.command == "oracle":
            return cmd_oracle(cfg)
        if args.command == "wedge":
            return cmd_wedge(cfg)
        if args.command == "pi":
            return cmd_pi(cfg)
        if args.command == "converge":
            return cmd_converge(cfg, args.allow_cap)
        return cmd_cache(cfg, args.action)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
