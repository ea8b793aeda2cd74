"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line (shown in the terminal summary and
printed directly with ``-s``). Run ``python tests/test_acceptance.py`` to get
the lines without pytest; add ``--slow`` to include criterion 10.
"""
import math
import sys
import time

import numpy as np
import pytest
from scipy import special

from hyperkloos import exactsums as es
from hyperkloos.formula import (
    FormulaInstance,
    hat_F_d_quadrature,
    lhs_hyper_sum,
    long_element_term,
    tilde_F_d,
    tilde_F_d0,
    x_threshold,
)
from hyperkloos.gl3bessel import (
    K_wl_numeric,
    WALL_THRESHOLD,
    default_contour,
    hat_K_residue,
    hat_K_wl,
    hat_K_wl_wall,
    residue_pole,
)
from hyperkloos.oscint import tilde_h1
from hyperkloos.specfun import bessel_j, bessel_j_dnu, certify_jsigmait
from hyperkloos.testfun import (
    LIE_PAIRS,
    T_w5,
    T_wl,
    default_config,
    lie_derivative_check,
    lie_derivative_value,
)
from hyperkloos.weylalg import BruhatW5Factorization, SpectralParameter as SP, w5_factorization_product

RESULTS = []
NONZERO = [v for v in range(-3, 4) if v]


def report(number, title, passed, detail, elapsed=None, budget=None):
    if budget is not None and elapsed is not None and elapsed > budget:
        passed = False
        detail += f"; runtime {elapsed:.1f} s over budget {budget} s"
    elif elapsed is not None:
        detail += f"; {elapsed:.1f} s"
    line = f"{'PASS' if passed else 'FAIL'} {number:>2}  {title}: {detail}"
    RESULTS.append(line)
    print(line, flush=True)
    assert passed, line


def _inst(m, n, C=1.0, X=1.0):
    return FormulaInstance(m, n, default_config(C, X))


# ---------------------------------------------------------------- 1

def test_criterion_01_kl3_factorization():
    start = time.perf_counter()
    worst, off = 0.0, 0.0
    for m1 in NONZERO:
        for m2 in NONZERO:
            for n1 in NONZERO:
                m, n = (m1, m2), (n1, m1)
                for c1 in range(1, 31):
                    lhs = es.s_w5(m, n, (c1, c1 * c1)).value
                    rhs = c1 * es.kl3(n1, m1, m2, c1).value
                    worst = max(worst, abs(lhs - rhs))
                    for k in (1, c1 + 1, 2 * c1, c1 + 3):
                        if k != c1:
                            off = max(off, abs(es.s_w5(m, n, (c1, c1 * k)).value))
    elapsed = time.perf_counter() - start
    report(1, "Kl3 factorization", worst <= 1e-9 and off <= 1e-9,
           f"max |s_w5 - c1 Kl3| = {worst:.2e}, max |s_w5| off c2 = c1^2 is {off:.2e} (tol 1e-9)",
           elapsed, 10)


# ---------------------------------------------------------------- 2

def test_criterion_02_vanishing_threshold():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    nonzero_above, nonzero_below = 0, 0
    for _ in range(20):
        m = tuple(int(v) for v in rng.choice(NONZERO, 2))
        n = tuple(int(v) for v in rng.choice(NONZERO, 2))
        C = float(rng.uniform(1.0, 3.0))
        th = x_threshold(_inst(m, n, C))
        for factor in (1.01, 2.0):
            nonzero_above += long_element_term(_inst(m, n, C, factor * th)).value != 0
        nonzero_below += long_element_term(_inst(m, n, C, 0.1 * th)).value != 0
    elapsed = time.perf_counter() - start
    report(2, "long-element vanishing threshold", nonzero_above == 0 and nonzero_below >= 1,
           f"nonzero above threshold: {nonzero_above}/40, nonzero at 0.1 threshold: {nonzero_below}/20",
           elapsed, 60)


# ---------------------------------------------------------------- 3

def test_criterion_03_T_w5_reproduction():
    start = time.perf_counter()
    cfg = default_config()
    ys = np.concatenate([np.linspace(0.9, 2.1, 14), [-1.5, -0.7, 0.3, 0.6, 2.6, 4.0]])
    worst = max(abs(T_w5(cfg, y) - cfg.f(np.array([y]))[0]) for y in ys)
    elapsed = time.perf_counter() - start
    report(3, "T_w5 reproduces f", worst <= 1e-8, f"max error {worst:.2e} on 20 points (tol 1e-8)",
           elapsed, 30)


# ---------------------------------------------------------------- 4

def test_criterion_04_T_wl_closed_form():
    cfg = default_config(1.0, 1.0)
    roots = np.linspace(401.0, 900.0, 10)
    grid = [(-(r * r), (1.5 if k % 3 else 1.2) / r) for k, r in enumerate(roots)]
    rel, ratios = 0.0, []
    for y in grid:
        closed = T_wl(cfg, y)
        integral = T_wl(cfg, y, mode="integral")
        rel = max(rel, abs(closed - integral) / abs(integral))
        ratios.append(abs(closed) / abs(y[0]) ** 0.25)
    # a priori constant: |T_wl| <= sqrt|y1| |tilde_h1(sqrt|y1|)| and |tilde_h1(u)| <= (1 + 3/u) / sqrt(2u)
    K = 1.0
    report(4, "T_wl closed form vs integral", rel <= 1e-6 and max(ratios) <= K,
           f"max relative gap {rel:.2e} (tol 1e-6); max |T_wl|/|y1|^(1/4) = {max(ratios):.3f} <= K = {K}")


# ---------------------------------------------------------------- 5

def test_criterion_05_stationary_phase():
    worst = 0.0
    for u in (50.0, -50.0, 200.0, -200.0, 800.0, -800.0):
        val = tilde_h1(u)
        E = math.sqrt(2 * abs(u)) * val * np.exp(-2j * np.pi * (2 * u + np.sign(u) / 8)) - 1
        worst = max(worst, abs(E) * abs(u))
    report(5, "stationary phase for tilde_h1", worst <= 3, f"max |u E(u)| = {worst:.3f} (bound 3)")


# ---------------------------------------------------------------- 6

def test_criterion_06_bessel_certificates():
    start = time.perf_counter()
    xs = np.array([1.0, 5.0, 20.0])
    a = float(np.max(np.abs(bessel_j_dnu(np.zeros(3), xs) - np.pi / 2 * special.y0(xs))))
    b = certify_jsigmait(n=50).worst_ratio
    rng = np.random.default_rng(6)
    nu = rng.uniform(-5, 5, 100) + 1j * rng.uniform(-15, 15, 100)
    x = rng.uniform(0.5, 60, 100)
    rhs = 2 * nu / x * bessel_j(nu, x)
    lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
    scale = np.abs(bessel_j(nu - 1, x)) + np.abs(bessel_j(nu + 1, x)) + np.abs(rhs)
    c = float(np.max(np.abs(lhs - rhs) / scale))
    elapsed = time.perf_counter() - start
    report(6, "Bessel certificates", a <= 1e-6 and b <= 2 and c <= 1e-8,
           f"(a) {a:.2e} (tol 1e-6), (b) worst ratio {b:.3f} on 50^3 grid (bound 2), "
           f"(c) recurrence {c:.2e} (tol 1e-8)", elapsed, 60)


# ---------------------------------------------------------------- 7

def _cauchy_residue(d, v, s1, mu, pole, radius=0.05, k=128):
    th = 2 * np.pi * np.arange(k) / k
    z = pole + radius * np.exp(1j * th)
    vals = np.array([hat_K_wl(d, (s1, zz), v, mu).to_complex() for zz in z])
    return np.mean(vals * radius * np.exp(1j * th))


def test_criterion_07_kernel_consistency():
    start = time.perf_counter()
    mu3 = SP.from_r(3, 0.3j)
    y = (-2.0, -3.0)
    a = K_wl_numeric(3, y, mu3, default_contour(3, mu3, sigma=(-0.1, -0.1)))
    b = K_wl_numeric(3, y, mu3, default_contour(3, mu3, sigma=(-0.2, -0.15)))
    shift = abs(a - b) / max(1.0, abs(a))
    mu4 = SP.from_r(4, 0.1j)
    num = _cauchy_residue(4, (-1, 1), 0.5, mu4, residue_pole(4, mu4))
    displayed = abs(num - hat_K_residue(4, (-1, 1), 0.5, mu4, convention="displayed")) / abs(num)
    kernel = abs(num - hat_K_residue(4, (-1, 1), 0.5, mu4)) / abs(num)
    plus = max(abs(hat_K_wl(d, (0.3 + 1j * t, 0.2 - 1j * t), (1, 1), SP.from_r(d, 0.2j)).to_complex())
               for d in range(2, 7) for t in (0.0, 2.0, 7.0))
    elapsed = time.perf_counter() - start
    report(7, "kernel consistency", shift <= 1e-6 and displayed <= 1e-8 and plus == 0,
           f"contour shift {shift:.2e} (tol 1e-6); Cauchy vs displayed residue {displayed:.2e} (tol 1e-8), "
           f"vs kernel-convention residue {kernel:.2e}; max |K^{{++}}| = {plus:.1e}", elapsed, 120)


# ---------------------------------------------------------------- 8

def test_criterion_08_wall_regularization():
    s_values = [(0.3 + 0.7j, 0.25 - 1.1j), (0.2 - 2.0j, 0.3 + 0.4j)]
    signs = ((1, 1), (1, -1), (-1, 1), (-1, -1))
    a = 2.0j
    worst_band, worst_limit = 0.0, 0.0
    for s in s_values:
        for v in signs:
            def direct(h):
                return hat_K_wl(0, s, v, SP((a + h, a - h, -2 * a))).to_complex()
            vals = [direct(h) for h in (1e-2, 5e-3, 2.5e-3)]
            r1 = [(4 * vals[1] - vals[0]) / 3, (4 * vals[2] - vals[1]) / 3]
            limit = (16 * r1[1] - r1[0]) / 15
            wall = hat_K_wl_wall(0, s, v, SP((a, a, -2 * a))).to_complex()
            worst_limit = max(worst_limit, abs(wall - limit) / abs(limit))
            half = WALL_THRESHOLD / 2
            inside = hat_K_wl_wall(0, s, v, SP((a + 0.999 * half, a - 0.999 * half, -2 * a))).to_complex()
            outside = hat_K_wl_wall(0, s, v, SP((a + 1.001 * half, a - 1.001 * half, -2 * a))).to_complex()
            worst_band = max(worst_band, abs(inside - outside) / abs(limit))
    report(8, "wall regularization", worst_band <= 1e-3 and worst_limit <= 1e-5,
           f"handoff jump {worst_band:.2e} (tol 1e-3), wall vs Richardson limit {worst_limit:.2e} (tol 1e-5)")


# ---------------------------------------------------------------- 9

def _cell_point(rng, X=1.0, shoulder=False):
    t1 = rng.uniform(0.92, 1.08)
    t2 = rng.uniform(1.1, 1.9) / math.sqrt(t1)
    w = rng.uniform(0.0027, 0.0048) if shoulder else rng.uniform(-0.0045, 0.0045)
    v1, v3 = rng.uniform(0.6, 1.9, 2)
    u = rng.uniform(-1, 1, 3)
    return BruhatW5Factorization(1.0, t1, t2, w * math.sqrt(t1) / X, *u, v1, v3)


def test_criterion_09_lie_derivatives():
    rng = np.random.default_rng(9)
    cfg = default_config()
    worst = 0.0
    for _ in range(5):
        g = w5_factorization_product(_cell_point(rng))
        worst = max(worst, max(lie_derivative_check(ij, cfg, g) for ij in LIE_PAIRS))
    scale_err = 0.0
    for ij in ((2, 1), (3, 1)):
        for _ in range(5):
            seed = int(rng.integers(1 << 31))
            vals = []
            for X in (10.0, 100.0):
                fac = _cell_point(np.random.default_rng(seed), X, shoulder=True)
                vals.append(abs(lie_derivative_value(ij, default_config(1.0, X), w5_factorization_product(fac))))
            scale_err = max(scale_err, abs(vals[1] / vals[0] / 10 - 1))
    report(9, "Lie derivatives", worst <= 1e-5 and scale_err <= 0.2,
           f"max residual {worst:.2e} over 9 E_ij x 5 points (tol 1e-5); "
           f"E21/E31 ratio X=100 vs X=10 deviates from 10 by {scale_err:.1%} (tol 20%)")


# ---------------------------------------------------------------- 10

@pytest.mark.slow
def test_criterion_10_spectral_concordance():
    start = time.perf_counter()
    inst = _inst((1, 1), (1, 1), 1.0, 25.0)
    quad = hat_F_d_quadrature(6, 0j, inst)
    tilde = tilde_F_d(6, 0j, inst)
    ratio = quad.value / tilde
    agree = 0.5 <= abs(ratio) <= 2 and ratio.real > 0
    inst4 = _inst((1, 1), (1, 1), 1.0, 1e4)
    gaps = [abs(tilde_F_d(d, 0.01j, inst4) / tilde_F_d0(d, 0.01j, inst4) - 1) for d in (20, 40, 80)]
    monotone = gaps[0] > gaps[1] > gaps[2]
    elapsed = time.perf_counter() - start
    report(10, "spectral asymptotic concordance", agree and monotone,
           f"(a) hat_F/tilde_F = {ratio.real:.4f}{ratio.imag:+.4f}i, |ratio| = {abs(ratio):.3f} "
           f"(need within factor 2; quadrature error {quad.error:.1e}); "
           f"(b) gaps {gaps[0]:.2e} > {gaps[1]:.2e} > {gaps[2]:.2e}: {monotone}", elapsed, 1800)


# ---------------------------------------------------------------- 11

def test_criterion_11_growth():
    start = time.perf_counter()
    m, n = (2, 3), (1, 1)
    lhs_ratios = [abs(lhs_hyper_sum(_inst(m, n, C)).value) / C**3.1 for C in (1.0, 2.0, 4.0, 8.0, 16.0)]
    # K is fixed at the smallest grid point and then checked on the rest
    K_lhs = lhs_ratios[0]
    wl_ratios = []
    for C in (2.0, 4.0, 8.0):
        th = x_threshold(_inst(m, n, C))
        for frac in (0.5, 0.2, 0.1, 0.05):
            X = frac * th
            wl_ratios.append(abs(long_element_term(_inst(m, n, C, X)).value) / (X**-0.9 * C**4.6))
    K_wl = wl_ratios[0]
    elapsed = time.perf_counter() - start
    ok = K_lhs > 0 and K_wl > 0 and max(lhs_ratios) <= K_lhs and max(wl_ratios) <= K_wl
    report(11, "empirical growth", ok,
           f"|lhs|/C^3.1 max {max(lhs_ratios[1:]):.3g} vs K = {K_lhs:.3g} (C = 1); "
           f"|wl|/(X^-0.9 C^4.6) max {max(wl_ratios[1:]):.3g} vs K = {K_wl:.3g} (C = 2, X = threshold/2)",
           elapsed)


if __name__ == "__main__":
    slow = "--slow" in sys.argv
    for name, fn in sorted(globals().items()):
        if not name.startswith("test_criterion_"):
            continue
        if name == "test_criterion_10_spectral_concordance" and not slow:
            print("SKIP 10  spectral asymptotic concordance: pass --slow")
            continue
        try:
            fn()
        except AssertionError:
            pass
