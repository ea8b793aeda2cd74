import math

import mpmath as mp
import numpy as np
import pytest

from hyperkloos.errors import BadIntervals
from hyperkloos.testfun import (
    LIE_PAIRS,
    T_w5,
    T_wl,
    default_config,
    eval_F,
    eval_F_iwasawa,
    iwasawa_coordinates,
    iwasawa_support_constraints,
    k_matrix,
    lie_derivative_check,
    lie_derivative_value,
    make_plateau_bump,
)
from hyperkloos.weylalg import BruhatW5Factorization, w5_factorization_product


def _cell_point(rng, cfg, inside=True):
    """Matrix in the open cell; with ``inside`` its coordinates sit in the bump plateaus/interiors."""
    if inside:
        t1 = rng.uniform(0.92, 1.08)
        t2 = rng.uniform(1.1, 1.9) / (cfg.C**3 * math.sqrt(t1))
        z1 = rng.uniform(-1, 1) * 0.004 * math.sqrt(t1) / cfg.X
        v1, v3 = rng.uniform(0.6, 1.9, 2)
    else:
        t1, t2, z1, v1, v3 = rng.uniform(0.3, 2.5, 5)
    u1, u2, u3 = rng.uniform(-1, 1, 3)
    fac = BruhatW5Factorization(1.0, t1, t2, z1, u1, u2, u3, v1, v3)
    return w5_factorization_product(fac)


def _psi(u):
    return np.exp(2j * np.pi * (u[0, 1] + u[1, 2]))


# ------------------------------------------------------------------ bumps

def test_bump_exact_values():
    b = make_plateau_bump((1.0, 2.0), (1.3, 1.7))
    assert b(np.array([1.5]))[0] == 1.0
    assert b(np.array([1.3, 1.7]))[0] == 1.0
    vals = b(np.array([0.0, 1.0, 2.0, 2.5, -1.0]))
    assert np.all(vals == 0.0)


def test_bump_monotone_shoulders():
    b = make_plateau_bump((1.0, 2.0), (1.3, 1.7))
    up = b(np.linspace(1.0, 1.3, 200))
    down = b(np.linspace(1.7, 2.0, 200))
    assert np.all(np.diff(up) >= 0)
    assert np.all(np.diff(down) <= 0)


def _mp_bump(x, a, p0, p1, b):
    psi = lambda t: mp.exp(-1 / t) if t > 0 else mp.mpf(0)
    S = lambda t: psi(t) / (psi(t) + psi(1 - t))
    return S((x - a) / (p0 - a)) * S((b - x) / (b - p1))


@pytest.mark.parametrize("order", [1, 2, 3, 5, 8])
def test_bump_derivatives_match_finite_differences(order):
    b = make_plateau_bump((0.5, 2.0), (0.9, 1.1))
    xs = np.linspace(0.55, 1.95, 23)
    xs = xs[(xs < 0.9) | (xs > 1.1)][:20]
    exact = b.derivative(xs, order)
    with mp.workdps(40):
        fd = [float(mp.diff(lambda t: _mp_bump(t, 0.5, 0.9, 1.1, 2.0), mp.mpf(float(x)), order,
                            h=mp.mpf("1e-12"), method="step")) for x in xs]
    assert np.max(np.abs(exact - fd) / np.abs(fd)) < 1e-6


@pytest.mark.parametrize("support, plateau", [((1, 2), (0.5, 1.5)), ((1, 2), (1.0, 1.5)),
                                              ((2, 1), (1.2, 1.5)), ((1, 2), (1.6, 1.4))])
def test_bump_bad_intervals(support, plateau):
    with pytest.raises(BadIntervals):
        make_plateau_bump(support, plateau)


def test_default_config_invariants():
    cfg = default_config()
    assert abs(cfg.h3.integral() - 1) < 1e-10
    assert cfg.h2(np.array([0.0]))[0] == 1.0
    xs = np.linspace(-0.006, 0.006, 101)
    assert np.array_equal(cfg.h2(xs), cfg.h2(-xs))
    assert cfg.h1.plateau[0] <= 0.9 and cfg.h1.plateau[1] >= 1.1


# ------------------------------------------------------------ evaluation

def test_F_zero_on_degenerate_cell():
    g = np.array([[1.0, 2.0, 3.0], [0.0, 1.0, 4.0], [5.0, 0.0, 1.0]])  # B1 = g[2,1] = 0
    assert eval_F(g) == 0


def test_F_plateau_example():
    cfg = default_config()
    for t2 in (1.2, 1.5, 1.05):
        fac = BruhatW5Factorization(1.0, 1.0, t2, 0.0, 0.3, -0.2, 0.7, 1.0, 1.0)
        g = w5_factorization_product(fac)
        expected = cfg.f(np.array([t2]))[0] * cfg.h3(np.array([1.0]))[0] ** 2
        assert abs(abs(eval_F(g, cfg)) - expected) < 1e-12


def test_F_vectorized_matches_exact():
    cfg = default_config()
    rng = np.random.default_rng(3)
    gs = np.array([_cell_point(rng, cfg) for _ in range(10)])
    vec = eval_F(gs, cfg)
    one = np.array([eval_F(g, cfg) for g in gs])
    assert np.max(np.abs(vec - one)) < 1e-10


def test_left_unipotent_equivariance():
    cfg = default_config()
    rng = np.random.default_rng(7)
    for _ in range(20):
        g = _cell_point(rng, cfg)
        u = np.eye(3)
        u[0, 1], u[0, 2], u[1, 2] = rng.uniform(-2, 2, 3)
        assert abs(eval_F(u @ g, cfg) - _psi(u) * eval_F(g, cfg)) < 1e-10


def test_F_small_near_degenerate_cell():
    cfg = default_config()
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(50):
        g = _cell_point(rng, cfg)
        # drive B1 = g[2,1] to zero along a path from the support
        for eps in (1e-7, 1e-9):
            h = g.copy()
            h[2, 1] = eps
            worst = max(worst, abs(eval_F(h, cfg)))
    assert worst <= 1e-8


# --------------------------------------------------------------- Iwasawa

def test_iwasawa_closed_form_matches_bruhat():
    cfg = default_config()
    rng = np.random.default_rng(5)
    for _ in range(30):
        g = _cell_point(rng, cfg)
        c = iwasawa_coordinates(g)
        yk = np.diag([c["y1"] * c["y2"], c["y1"], 1.0]) @ k_matrix(c["theta1"], c["theta2"], c["theta3"])
        direct = eval_F(yk, cfg)
        closed = eval_F_iwasawa(c["y1"], c["y2"], c["theta1"], c["theta2"], c["theta3"], cfg)
        assert abs(direct - closed) < 1e-9
        assert abs(direct) > 0


@pytest.mark.parametrize("C", [1.0, 2.0])
def test_iwasawa_support_constraints(C):
    cfg = default_config(C, 1.0)
    rng = np.random.default_rng(17)
    y1s, y2s = [], []
    count = 0
    while count < 10_000:
        g = _cell_point(rng, cfg)
        c = iwasawa_coordinates(g)
        yk = np.diag([c["y1"] * c["y2"], c["y1"], 1.0]) @ c["k"]
        if eval_F(yk, cfg) == 0:
            continue
        count += 1
        assert all(iwasawa_support_constraints(c["theta1"], c["theta2"], c["theta3"]).values())
        y1s.append(abs(c["y1"]))
        y2s.append(abs(c["y2"]) * C**3)
    assert 0.05 < min(y1s) and max(y1s) < 20
    assert 0.05 < min(y2s) and max(y2s) < 20


# ------------------------------------------------------------ transforms

def test_T_w5_reproduces_f():
    cfg = default_config()
    ys = np.concatenate([np.linspace(0.8, 2.2, 15), [-1.5, -0.5, 0.5, 3.0, 10.0]])
    for y in ys:
        assert abs(T_w5(cfg, y) - cfg.f(np.array([y]))[0]) <= 1e-8


def test_T_w5_linear_in_f():
    from dataclasses import replace
    cfg = default_config()
    doubled = replace(cfg, f=replace(cfg.f, scale=2.0))
    assert T_w5(doubled, 1.2) == pytest.approx(2 * T_w5(cfg, 1.2), rel=1e-12)


def _twl_grid(cfg):
    # y1 = -a with h2(X/sqrt a) != 0 requires sqrt a >= 200 X; f needs y2 sqrt a in (1, 2)
    roots = np.linspace(401.0, 900.0, 10)
    return [(-(r * r), 1.5 / r * (1 if k % 2 else -1)) for k, r in enumerate(roots)]


def test_T_wl_closed_form_matches_integral():
    cfg = default_config()
    for y in _twl_grid(cfg):
        closed = T_wl(cfg, y)
        integral = T_wl(cfg, y, mode="integral")
        assert abs(closed - integral) <= 1e-6 * abs(integral)


def test_T_wl_trivial_bound():
    cfg = default_config()
    ratios = [abs(T_wl(cfg, y)) / abs(y[0]) ** 0.25 for y in _twl_grid(cfg)]
    assert max(ratios) < 2.0


@pytest.mark.parametrize("y", [(4e4, 1.0), (-100.0, 0.1), (-(400.0**2), 10.0)])
def test_T_wl_support_zeros(y):
    assert T_wl(default_config(), y) == 0


# ------------------------------------------------------------ Lie algebra

@pytest.mark.parametrize("ij", LIE_PAIRS)
def test_lie_residuals(ij):
    cfg = default_config()
    rng = np.random.default_rng(23)
    for _ in range(5):
        g = _cell_point(rng, cfg)
        assert lie_derivative_check(ij, cfg, g) <= 1e-5


def test_lie_off_plateau_points():
    # generic points where several bumps are on their shoulders
    cfg = default_config()
    rng = np.random.default_rng(29)
    done = 0
    while done < 5:
        g = _cell_point(rng, cfg)
        if eval_F(g, cfg) == 0:
            continue
        done += 1
        for ij in LIE_PAIRS:
            assert lie_derivative_check(ij, cfg, g) <= 1e-5


@pytest.mark.parametrize("ij", [(2, 1), (3, 1)])
def test_lie_x_linear_growth(ij):
    rng = np.random.default_rng(31)
    for _ in range(5):
        t1 = rng.uniform(0.92, 1.08)
        t2 = rng.uniform(1.1, 1.9) / math.sqrt(t1)
        w = rng.uniform(0.0027, 0.0048) * rng.choice([-1, 1])  # X z1 / sqrt t1 on the h2 shoulder
        v1, v3 = rng.uniform(0.6, 1.9, 2)
        u = rng.uniform(-1, 1, 3)
        vals = []
        for X in (10.0, 100.0):
            fac = BruhatW5Factorization(1.0, t1, t2, w * math.sqrt(t1) / X, *u, v1, v3)
            vals.append(abs(lie_derivative_value(ij, default_config(1.0, X), w5_factorization_product(fac))))
        assert abs(vals[1] / vals[0] / 10 - 1) < 0.2
