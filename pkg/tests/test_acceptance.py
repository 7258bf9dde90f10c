"""End-to-end acceptance gate.

One test per shipped guarantee, each at its stated tolerance and (where
stated) its runtime budget, printing a single pass line on success.  These
are deliberately redundant with the per-module suites: this file is the
contract, the module suites are the diagnostics.
"""

import math
import time

import numpy as np
import pytest

from cornerwalk.compensation import (
    boundary_harmonic,
    build_sequence,
    harmonic_eval,
)
from cornerwalk.curve import cramer_transform, g_branch
from cornerwalk.model import kernel_eval
from cornerwalk.montecarlo import (
    SimConfig,
    brownian_halfplane_kernel,
    estimate_escape,
    estimate_green,
    estimate_halfplane_survival,
    green_direction_scan,
    martin_kernel_profile,
    skipfree_exit_root,
)
from cornerwalk.uniformization import (
    alpha_of_s,
    beta_of_s,
    compute_params,
    denominator_sequence,
    sequence_at,
)
from cornerwalk.cli import main

from oracles import fib_escape_exact, green_enum
from conftest import FIB_TEXT

S_STAR = (math.sqrt(5.0) - 1.0) / 2.0


def _passed(n, msg):
    print(f"criterion {n} PASS: {msg}")


def value_table(geom, imax, tol=1e-14):
    seq = build_sequence(geom, (0.0, 0.0), truncation_tol=tol, imin=2)
    table = {}
    for i in range(0, imax + 1):
        for j in range(0, imax + 1):
            if i == 0 or j == 0:
                table[i, j] = None
            else:
                table[i, j] = harmonic_eval(seq, i, j)
    return table


def residual_grid(dist, table, imax):
    worst = 0.0
    val = lambda i, j: 0.0 if table[i, j] is None else table[i, j].value
    for i in range(1, imax + 1):
        for j in range(1, imax + 1):
            shifted = math.fsum(
                p * val(i + di, j + dj)
                for (di, dj), p in zip(dist.steps, dist.probs)
            )
            worst = max(worst, abs(val(i, j) - shifted))
    return worst


def test_criterion_01_fibonacci_escape(fib, fib_geom):
    t0 = time.perf_counter()
    seq = build_sequence(fib_geom, (0.0, 0.0), truncation_tol=1e-14, imin=2)
    series = harmonic_eval(seq, 1, 1).value
    oracle = float(fib_escape_exact(1, 1))
    assert abs(series - oracle) <= 1e-12

    est = estimate_escape(
        fib, (1, 1), SimConfig(seed=20260819, n_paths=200_000, horizon=10_000)
    )
    z = (est.mean - series) / est.std_error
    assert abs(z) <= 3.0
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _passed(1, f"escape(1,1)={series:.15f}, |series-oracle|<=1e-12, "
               f"MC z={z:+.2f} (200k paths, horizon 1e4) in {elapsed:.1f}s")


def test_criterion_02_denominator_sequences(fib):
    params = compute_params(fib)
    got = denominator_sequence(params, S_STAR, 9)
    want = [1, 1, 2, 5, 13, 34, 89, 233, 610, 1597]
    assert got == pytest.approx(want, abs=1e-9)

    rho = params.rho
    lucas = [rho**n + rho**-n for n in range(9)]
    assert lucas == pytest.approx([2, 3, 7, 18, 47, 123, 322, 843, 2207], abs=1e-9)

    u = [math.sqrt(5.0) * (rho**n - rho**-n) for n in range(9)]
    assert u == pytest.approx([0, 5, 15, 40, 105, 275, 720, 1885, 4935], abs=1e-9)
    for n in range(2, 9):
        assert u[n] == pytest.approx(3 * u[n - 1] - u[n - 2], abs=1e-9)
    _passed(2, "denominators at s* are bisected Fibonacci; Lucas and u-sequence "
               "(u_n = 3u_{n-1} - u_{n-2}) hold to 1e-9")


def test_criterion_03_harmonicity_residuals(fib, all_five, diag_heavy,
                                            fib_geom, all_five_geom,
                                            diag_heavy_geom):
    t0 = time.perf_counter()
    worst = 0.0
    for dist, geom in [(fib, fib_geom), (all_five, all_five_geom),
                       (diag_heavy, diag_heavy_geom)]:
        table = value_table(geom, 21)
        worst = max(worst, residual_grid(dist, table, 20))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-10
    assert elapsed < 10.0
    _passed(3, f"max harmonicity residual {worst:.2e} <= 1e-10 over 20x20 "
               f"for 3 models in {elapsed:.1f}s")


def test_criterion_04_dirichlet_and_positivity(fib_geom, all_five_geom,
                                               diag_heavy_geom):
    for geom in [fib_geom, all_five_geom, diag_heavy_geom]:
        seq = build_sequence(geom, (0.0, 0.0), truncation_tol=1e-14, imin=2)
        for k in range(0, 51):
            assert harmonic_eval(seq, k, 0).value == 0.0
            assert harmonic_eval(seq, 0, k).value == 0.0
        table = value_table(geom, 20)
        for i in range(1, 21):
            for j in range(1, 21):
                hv = table[i, j]
                assert hv.value >= -hv.tail_bound
                # all three models jump into the positive quadrant, so the
                # strict-positivity regime applies everywhere on the grid
                assert hv.value > 0.0
    _passed(4, "h vanishes exactly on the axes (i,j <= 50); h >= -tail_bound "
               "and strictly positive on 20x20 for 3 models")


def test_criterion_05_uniformization_identities(fib, fib_geom):
    params = compute_params(fib)
    rng = np.random.default_rng(55)
    for s in rng.uniform(0.05, 4.0, size=1000):
        s = float(s)
        al, be = alpha_of_s(params, s), beta_of_s(params, s)
        assert abs(kernel_eval(fib, al, be)) <= 1e-12
        assert abs(al - alpha_of_s(params, 1.0 / s)) <= 1e-12
        assert abs(be - beta_of_s(params, 1.0 / (params.rho**2 * s))) <= 1e-12

    h = 1e-6
    al, be = alpha_of_s(params, 1.0), beta_of_s(params, 1.0)
    d_beta = (kernel_eval(fib, al, be + h) - kernel_eval(fib, al, be - h)) / (2 * h)
    assert abs(d_beta) <= 1e-9
    s_lo = 1.0 / params.rho
    al, be = alpha_of_s(params, s_lo), beta_of_s(params, s_lo)
    d_alpha = (kernel_eval(fib, al + h, be) - kernel_eval(fib, al - h, be)) / (2 * h)
    assert abs(d_alpha) <= 1e-9

    seq = build_sequence(fib_geom, (0.0, 0.0), imin=2)
    for n in range(-6, 7):
        al, be = sequence_at(params, S_STAR, n)
        assert abs(al - math.exp(seq.a(n))) <= 1e-11
        assert abs(be - math.exp(seq.b(n))) <= 1e-11
    _passed(5, "kernel annihilated at 1000 random s (1e-12); involutions 1e-12; "
               "double-root partials 1e-9; chain agreement 1e-11 for |n| <= 6")


def test_criterion_06_boundary_harmonic(fib, fib_geom):
    y0 = fib_geom.y0

    def ratio(i, j, h):
        y = y0 + h
        seq = build_sequence(fib_geom, (g_branch(fib_geom, y), y), imin=2)
        return harmonic_eval(seq, i, j).value / h

    for i, j in [(1, 1), (2, 3), (5, 5)]:
        r1, r2 = ratio(i, j, 1e-3), ratio(i, j, 1e-4)
        richardson = (1e-3 * r2 - 1e-4 * r1) / (1e-3 - 1e-4)
        analytic = boundary_harmonic(fib_geom, i, j)
        assert abs(richardson - analytic) <= 1e-6
        assert analytic >= 0.0

    vals = {}
    for i in range(0, 7):
        for j in range(0, 7):
            vals[i, j] = (
                0.0 if i == 0 or j == 0 else boundary_harmonic(fib_geom, i, j)
            )
    worst = 0.0
    for i in range(1, 5):
        for j in range(1, 5):
            shifted = math.fsum(
                p * vals[i + di, j + dj]
                for (di, dj), p in zip(fib.steps, fib.probs)
            )
            worst = max(worst, abs(vals[i, j] - shifted))
    assert worst <= 1e-8
    _passed(6, f"Richardson finite differences match the derivative series to "
               f"1e-6 at three points; residual {worst:.2e} <= 1e-8")


def test_criterion_07_skip_free(fib):
    c = skipfree_exit_root(fib)
    assert abs(c - 0.5) <= 1e-13

    cfg = SimConfig(seed=7, n_paths=40_000, horizon=4_000)
    for height in (1, 2, 3):
        est = estimate_halfplane_survival(fib, height, cfg)
        target = 1.0 - 0.5**height
        assert abs(est.mean - target) <= 3.0 * est.std_error

    from cornerwalk.model import parse_model_text
    from fractions import Fraction

    ratios = []
    for k in (16, 32, 64):
        delta = Fraction(1, k)
        half = (1 - delta) / 2
        dist = parse_model_text(f"1 1 {delta}\n1 -1 {half}\n-1 1 {half}\n")
        cu = skipfree_exit_root(dist)
        mu2 = math.fsum(p * dj for (_, dj), p in zip(dist.steps, dist.probs))
        var2 = math.fsum(p * dj * dj for (_, dj), p in zip(dist.steps, dist.probs))
        var2 -= mu2 * mu2
        ratios.append((1.0 - cu) * var2 / (2.0 * mu2))
    assert all(0.9 <= r <= 1.1 for r in ratios)
    _passed(7, f"c=1/2 to 1e-13; survivals 1/2, 3/4, 7/8 within 3 sigma; "
               f"drift-shrinking ratios {[f'{r:.4f}' for r in ratios]} in [0.9, 1.1]")


def test_criterion_08_brownian_kernel():
    rng = np.random.default_rng(8)
    for _ in range(50):
        sig = rng.normal(size=(2, 2))
        sig = sig @ sig.T + 0.05 * np.eye(2)
        assert brownian_halfplane_kernel(
            float(rng.uniform(0.1, 3)), (float(rng.normal()), 0.0),
            (float(rng.normal()), float(rng.uniform(0, 2))), (0, 0), sig,
        ) == 0.0

    for _ in range(1000):
        a = rng.normal(size=(2, 2))
        sigma = a @ a.T + 0.05 * np.eye(2)
        t = float(rng.uniform(0.1, 5.0))
        x = (float(rng.normal()), float(rng.uniform(0, 3)))
        y = (float(rng.normal()), float(rng.uniform(0, 3)))
        mu = rng.normal(size=2)
        val = brownian_halfplane_kernel(t, x, y, mu, sigma)
        d = np.array(y) - np.array(x) - t * mu
        quad = float(d @ np.linalg.inv(sigma) @ d) / (2 * t)
        gauss = math.exp(-quad) / (2 * math.pi * t * math.sqrt(np.linalg.det(sigma)))
        cap = (2 * x[1] * y[1] / (t * sigma[0, 0])) * gauss
        assert val <= cap * (1 + 1e-12)

    worst = 0.0
    for _ in range(50):
        a = rng.normal(size=(2, 2))
        sigma = a @ a.T + 0.05 * np.eye(2)
        x2, y2 = float(rng.uniform(0.1, 2)), float(rng.uniform(0.1, 2))
        u_target = float(rng.uniform(1e-5, 1e-3))
        t = 2 * x2 * y2 / (sigma[0, 0] * u_target)
        x = (float(rng.normal()), x2)
        y = (float(rng.normal()), y2)
        val = brownian_halfplane_kernel(t, x, y, (0, 0), sigma)
        d = np.array(y) - np.array(x)
        quad = float(d @ np.linalg.inv(sigma) @ d) / (2 * t)
        gauss = math.exp(-quad) / (2 * math.pi * t * math.sqrt(np.linalg.det(sigma)))
        worst = max(worst, abs(val / (u_target * gauss) - 1.0))
    assert worst <= 0.01
    _passed(8, f"boundary zero exact; upper bound holds on 1000 random SPD "
               f"inputs; equivalence deviation {worst:.2e} <= 1% at small ratio")


def test_criterion_09_green_and_martin(fib, all_five, all_five_geom,
                                       fib_geom):
    t0 = time.perf_counter()

    # twisted short-horizon Green vs exact enumeration
    steps_exact = dict(zip(all_five.steps, all_five.exact))
    twist = cramer_transform(all_five_geom, (2 / math.sqrt(5), 1 / math.sqrt(5)))
    zs = []
    for horizon in (2, 4):
        truth = float(green_enum(steps_exact, (2, 2), (3, 3), horizon))
        est = estimate_green(
            all_five, (2, 2), (3, 3),
            SimConfig(seed=5, n_paths=200_000, horizon=horizon, twist=twist),
        )
        z = (est.mean - truth) / est.std_error
        zs.append(z)
        assert abs(z) <= 3.0

    # Martin ratio along the drift diagonal approaches the series ratio
    seq = build_sequence(all_five_geom, (0.0, 0.0), imin=2)
    ref = harmonic_eval(seq, 2, 3).value / harmonic_eval(seq, 1, 1).value
    prof = martin_kernel_profile(
        all_five, (2, 3), [(10, 10), (15, 15), (20, 20)],
        SimConfig(seed=2, n_paths=400_000),
    )
    errs = [abs(p.mean - ref) / ref for p in prof]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 0.10

    # direction-scan stabilization
    pts = green_direction_scan(
        fib, (1, 1), (1.0, 1.0), [15, 22, 30],
        SimConfig(seed=11, n_paths=200_000),
    )
    gap = abs(pts[-1].value - pts[-2].value) / abs(pts[-1].value)
    assert gap <= 0.10

    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    _passed(9, f"twisted-Green z={[f'{z:+.2f}' for z in zs]} vs enumeration; "
               f"Martin |rel err| {[f'{e:.4f}' for e in errs]} monotone, final "
               f"<= 10%; scan gap {gap:.3f} <= 0.10 in {elapsed:.0f}s")


def test_criterion_10_reproducibility(tmp_path):
    model = tmp_path / "fib.txt"
    model.write_text(FIB_TEXT)

    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        code = main([
            "compare", str(model), "3", "3",
            "--seed", "31", "--n-paths", "5000", "--horizon", "800",
            "-o", str(path),
        ])
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]

    scans = []
    for name in ("s1.csv", "s2.csv"):
        path = tmp_path / name
        code = main([
            "green-scan", str(model), "1", "1", "--u", "1", "1",
            "--radii", "6,10", "--seed", "11", "--n-paths", "20000",
            "-o", str(path),
        ])
        assert code == 0
        scans.append(path.read_bytes())
    assert scans[0] == scans[1]
    _passed(10, "compare and green-scan CSVs are byte-identical across reruns "
                "with fixed seeds (batch layout is part of the contract)")
