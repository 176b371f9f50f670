"""End-to-end acceptance criteria, one test per criterion.

Each test records a single ``PASS``/``FAIL`` line (shown in the terminal
summary) and then asserts.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from wedgekrein import sector, specfun
from wedgekrein.convergence import ApproachPath, ConvergenceRun, execute, friedrichs_gap, loglog_slope
from wedgekrein.finite import oracle_suite
from wedgekrein.krein import ExtensionParameter, krein_coefficients
from wedgekrein.points import PIBase, PointConfig, check_parameter, gamma_check, gamma_hat, h0_diagonal, pi_resolvent
from wedgekrein.sector import SingularFunctions, build_basis, gamma_z_general, pairing_check, vertex_trace
from wedgekrein.wedge import AnalyticExtension, Wedge, secular_eigenvalues, shooting_eigenvalues, weyl_gamma


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


DEFAULT = Wedge(1.5 * math.pi, 1.0)
FULL = Wedge(2 * math.pi, 1.0)


def test_criterion_1_special_functions():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    errs = {}
    x = rng.uniform(-3, 10, 4000)
    x = x[np.min(np.abs(x[:, None] - np.arange(-4, 1)), axis=1) > 1e-3][:1000]
    errs["gamma_recurrence"] = max(abs(specfun.gamma_fn(v + 1) - v * specfun.gamma_fn(v)) / abs(v * specfun.gamma_fn(v)) for v in x)
    nu, xx = rng.uniform(0.05, 4, 500), rng.uniform(0.5, 40, 500)
    rec = [abs(specfun.bessel_j(n - 1, s) + specfun.bessel_j(n + 1, s) - 2 * n / s * specfun.bessel_j(n, s))
           / max(abs(specfun.bessel_j(n - 1, s)), abs(specfun.bessel_j(n + 1, s))) for n, s in zip(nu, xx)]
    errs["bessel_recurrence"] = max(rec)
    wr = []
    for n, s in zip(rng.uniform(0.51, 0.99, 200), rng.uniform(0.2, 30, 200)):
        h = 1e-5 * max(1.0, s)
        d = lambda v: (specfun.bessel_j(v, s + h) - specfun.bessel_j(v, s - h)) / (2 * h)  # noqa: E731
        w = specfun.bessel_j(n, s) * d(-n) - specfun.bessel_j(-n, s) * d(n)
        exact = -2 * math.sin(n * math.pi) / (math.pi * s)
        wr.append(abs(w - exact) / abs(exact))
    errs["wronskian"] = max(wr)
    grid = np.linspace(0.2, 45, 200)
    errs["half_integer"] = max(
        np.abs(specfun.bessel_j(0.5, grid) - np.sqrt(2 / (np.pi * grid)) * np.sin(grid)).max(),
        np.abs(specfun.bessel_j(-0.5, grid) - np.sqrt(2 / (np.pi * grid)) * np.cos(grid)).max(),
        np.abs(specfun.bessel_i(0.5, grid[:50]) / (np.sqrt(2 / (np.pi * grid[:50])) * np.sinh(grid[:50])) - 1).max(),
    )
    zres = 0.0
    for n in (0.0, 0.5, 2 / 3, 4 / 3, 10.0, 26.0):
        z = specfun.bessel_j_zeros(n, 60)
        assert np.all(np.diff(z) > 0)
        zres = max(zres, np.abs(specfun.bessel_j(n, z)).max())
    errs["zero_residual"] = zres
    errs["gamma_ratio"] = max(
        abs(specfun.gamma_fn(-b) / specfun.gamma_fn(b) + specfun.gamma_fn(1 - b) / specfun.gamma_fn(1 + b))
        for b in np.linspace(0.51, 0.99, 25)
    )
    limits = {"gamma_recurrence": 1e-10, "bessel_recurrence": 1e-8, "wronskian": 1e-6, "half_integer": 1e-10,
              "zero_residual": 1e-9, "gamma_ratio": 1e-12}
    elapsed = time.perf_counter() - t0
    ok = all(errs[k] <= limits[k] for k in limits) and elapsed < 10
    report(1, "special functions", ok, ", ".join(f"{k}={v:.1e}" for k, v in errs.items()) + f", {elapsed:.1f}s")


def test_criterion_2_finite_oracle():
    t0 = time.perf_counter()
    reports = oracle_suite(0, 100, d_range=(3, 8), n_range=(1, 3))
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in reports) and elapsed < 60
    worst = ", ".join(f"{r.property}={r.max_error:.1e}" for r in reports)
    report(2, "finite-model oracle (100 instances)", ok, f"{worst}, {elapsed:.1f}s")


def test_criterion_3_pairing():
    t0 = time.perf_counter()
    vals = {}
    for name, w in (("3pi/2", DEFAULT), ("2pi", FULL)):
        b = build_basis(w)
        vals[name] = pairing_check(b, SingularFunctions(b))
    elapsed = time.perf_counter() - t0
    ok = all(abs(v - 1) <= 1e-6 for v in vals.values()) and elapsed < 30
    report(3, "pairing <g, -Delta s> = 1", ok, ", ".join(f"{k}: |err|={abs(v - 1):.1e}" for k, v in vals.items()) + f", {elapsed:.1f}s")


def test_criterion_4_vertex_trace():
    b = build_basis(DEFAULT)
    sf = SingularFunctions(b)
    radii = [0.08, 0.04, 0.02, 0.01]
    errs = [abs(vertex_trace(DEFAULT, lambda r, th, z=z: z * sf.s_value(r, th), radii).value - z) for z in (1.0, -2.5, 0.3)]
    beta = DEFAULT.beta
    smooth = vertex_trace(DEFAULT, lambda r, th: r ** (1.5 * beta) * (1 - r) * np.sin(beta * th), [0.1, 0.05, 0.025, 0.0125, 0.00625])
    ok = max(errs) <= 1e-6 and smooth.exponent > 0 and abs(smooth.samples[-1]) < abs(smooth.samples[0])
    report(4, "vertex trace", ok, f"max |tau(s zeta) - zeta|={max(errs):.1e}, smooth-test exponent={smooth.exponent:.3f}")


def test_criterion_5_weyl_function():
    b = build_basis(DEFAULT)
    sf = SingularFunctions(b)
    zs = [0.05, 0.2, 0.5, 1.0, 2.0, 4.0, 7.0, 10.0, 15.0, 20.0]
    cross = max(abs(gamma_z_general(b, sf, z) - weyl_gamma(DEFAULT, z)) / abs(weyl_gamma(DEFAULT, z)) for z in zs)
    closed = 0.0
    for z in (0.1, 0.7, 2.0, 5.0, 12.0, 30.0):
        q = math.sqrt(z)
        closed = max(closed, abs(weyl_gamma(FULL, z, "modified") - (q / math.tanh(q) - 1)))
        if abs(math.sin(q)) > 1e-3:
            closed = max(closed, abs(weyl_gamma(FULL, z, "literal") - (1 - q / math.tan(q))))
    small = max(abs(weyl_gamma(w, 1e-12, c)) for w in (DEFAULT, FULL) for c in ("literal", "modified"))
    small = max(small, abs(gamma_z_general(b, sf, 1e-12)))
    ok = cross <= 1e-4 and closed <= 1e-8 and small <= 1e-6
    report(5, "Weyl function cross-validation", ok, f"general-vs-analytic rel={cross:.1e}, cot/coth abs={closed:.1e}, z->0 {small:.1e}")


def test_criterion_6_eigenvalues():
    worst, increasing, counts = 0.0, True, []
    for theta in (-1.0, 0.0, 1.0, 10.0):
        ext = AnalyticExtension(theta)
        sec = secular_eigenvalues(DEFAULT, ext, (0.0, 80.0))
        sho = shooting_eigenvalues(DEFAULT, ext, (0.0, 80.0))
        increasing &= bool(np.all(np.diff(sec) > 0) and np.all(np.diff(sho) > 0))
        if len(sec) != len(sho):
            worst = math.inf
        else:
            worst = max(worst, float(np.abs(np.array(sec) - np.array(sho)).max()))
        counts.append(len(sec))
    ok = worst <= 1e-5 and increasing
    report(6, "secular vs shooting eigenvalues", ok, f"max |diff|={worst:.1e}, roots per theta={counts}")


def test_criterion_7_point_interactions():
    b = build_basis(DEFAULT)
    pc = PointConfig(((0.5, 1.2), (0.6, 3.4)))
    zs = (0.3, 1.0, 3.0, 8.0)
    diffs = [gamma_check(DEFAULT, pc, z, "offset") - gamma_hat(DEFAULT, pc, z, "exact") for z in zs]
    offdiag = max(abs(d[0, 1]) + abs(d[1, 0]) for d in diffs)
    spread = float(np.ptp(np.array([np.diag(d) for d in diffs]), axis=0).max())

    ext = ExtensionParameter.full(np.array([[0.3, 0.1], [0.1, -0.2]]))
    v = np.random.default_rng(3).standard_normal(b.size)
    z = 1.3
    exact = PIBase(b, pc, anchored=False)
    cols = exact.columns(z)
    r0 = sector.resolvent_coeffs(b, z, v)
    hat = r0 + cols @ krein_coefficients(ext, gamma_hat(DEFAULT, pc, z), cols.T @ v)
    chk = r0 + cols @ krein_coefficients(check_parameter(ext, h0_diagonal(DEFAULT, pc)), gamma_check(DEFAULT, pc, z, "offset"), cols.T @ v)
    bridge = float(np.abs(hat - chk).max())

    base = PIBase(b, pc)
    u = np.random.default_rng(4).standard_normal(b.size)
    lhs = u @ pi_resolvent(base, ext, 1.0, v)
    sym = abs(lhs - pi_resolvent(base, ext, 1.0, u) @ v) / abs(lhs)
    d1 = pi_resolvent(base, ext, 1.0, v) - pi_resolvent(base, ext, 2.5, v)
    ident = float(np.abs(d1 - 1.5 * pi_resolvent(base, ext, 1.0, pi_resolvent(base, ext, 2.5, v))).max() / np.abs(d1).max())
    ok = offdiag <= 1e-5 and spread <= 1e-5 and bridge <= 1e-6 and sym <= 1e-8 and ident <= 1e-8
    report(7, "point-interaction consistency", ok,
           f"check-hat offdiag={offdiag:.1e} z-spread={spread:.1e}, bridge={bridge:.1e}, symmetry={sym:.1e}, resolvent identity={ident:.1e}")


def test_criterion_8_convergence():
    t0 = time.perf_counter()
    path = ApproachPath.geometric(DEFAULT, n_max=12)
    run = ConvergenceRun(DEFAULT, AnalyticExtension(1.0), path, z_eval=1.0)
    rows = execute(run)
    elapsed = time.perf_counter() - t0
    d = np.array([r.distance for r in rows])
    control = np.array([r.distance_no_renorm for r in rows])
    gap = friedrichs_gap(run)
    slope = loglog_slope(path.radii, d)
    capped = any(r.capped for r in rows)
    ok = (
        d[-1] < 1e-2
        and d[-1] < 0.1 * d[0]
        and slope > 0
        and control[-1] > 0.5 * gap
        and control[-1] > 0.5 * control[0]
        and elapsed < 600
    )
    report(8, "renormalized convergence", ok,
           f"d0={d[0]:.3e}, d12={d[-1]:.3e}, slope={slope:.3f}, no-renorm d12={control[-1]:.3f} (Friedrichs gap {gap:.3f}), "
           f"truncation cap bound={capped}, {elapsed:.1f}s")


def _cli(args, out):
    return subprocess.run([sys.executable, "-m", "wedgekrein.cli", *args, "--out", str(out)], capture_output=True)


@pytest.mark.parametrize("args", [["oracle", "--seed", "7"], ["converge"], ["wedge", "--theta", "1", "--z", "0.5", "2"], ["pi", "--z", "1"]])
def test_criterion_9_determinism(tmp_path, args):
    a, b = tmp_path / "a", tmp_path / "b"
    ra, rb = _cli(args, a), _cli(args, b)
    files = sorted(p.name for p in a.iterdir())
    same = ra.returncode == rb.returncode and ra.stdout == rb.stdout and files == sorted(p.name for p in b.iterdir())
    same = same and all((a / f).read_bytes() == (b / f).read_bytes() for f in files)
    ok = same and ra.returncode in (0, 3) and files
    report(9, f"determinism ({args[0]})", bool(ok), f"exit={ra.returncode}, files={files}")
