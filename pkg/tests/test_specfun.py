import math

import mpmath as mp
import numpy as np
import pytest
from scipy import special

from hyperkloos.errors import PoleError
from hyperkloos.specfun import (
    bessel_j,
    bessel_j_dnu,
    bessel_j_prime,
    bessel_y,
    certify_dnu_bound,
    certify_jsigmait,
    certify_phraglind,
    certify_series_tail,
    gamma_c,
    jit_first_term,
    log_gamma,
    log_q_factor,
    q_factor,
    y0_large_arg,
)


def test_gamma_examples():
    assert gamma_c(1) == pytest.approx(1, abs=1e-15)
    assert gamma_c(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    t = 1.0
    assert abs(gamma_c(1j * t)) ** 2 == pytest.approx(math.pi / (t * math.sinh(math.pi * t)), rel=1e-12)


def test_log_gamma_against_mpmath():
    rng = np.random.default_rng(0)
    z = rng.uniform(-20, 20, 30) + 1j * rng.uniform(-200, 200, 30)
    got = log_gamma(z)
    ref = np.array([complex(mp.loggamma(mp.mpc(x.real, x.imag))) for x in z])
    assert np.max(np.abs(got - ref) / np.maximum(1, np.abs(ref))) < 1e-12


def test_gamma_pole():
    with pytest.raises(PoleError):
        gamma_c(-2.0)


def test_q_factor():
    assert q_factor(5, 0.5) == pytest.approx(1, abs=1e-14)
    assert q_factor(3, 0) == pytest.approx(1, abs=1e-14)
    s = 0.3 + 2j
    mp.mp.dps = 40
    ref = mp.loggamma(mp.mpf(99) / 2 + mp.mpc(0.3, 2)) - mp.loggamma(mp.mpf(101) / 2 - mp.mpc(0.3, 2))
    assert abs(log_q_factor(100, s).real - float(ref.real)) < 1e-6
    mp.mp.dps = 15


def test_bessel_j_examples():
    assert bessel_j(0, 1e-12) == pytest.approx(1, abs=1e-12)
    assert bessel_j(0.5, math.pi / 2) == pytest.approx(2 / math.pi, rel=1e-13)
    val = bessel_j(5j, 100.0)
    lead = jit_first_term(5.0, 100.0)
    assert abs(val / lead - 1) <= 3 / 100


def test_bessel_j_against_mpmath():
    rng = np.random.default_rng(1)
    nu = rng.uniform(-5, 10, 40) + 1j * rng.uniform(-15, 15, 40)
    x = rng.uniform(0.2, 80, 40)
    got = bessel_j(nu, x)
    ref = np.array([complex(mp.besselj(mp.mpc(n.real, n.imag), xx)) for n, xx in zip(nu, x)])
    scale = np.exp(np.pi * np.abs(nu.imag) / 2) / np.sqrt(x)
    assert np.max(np.abs(got - ref) / scale) < 1e-9


def test_recurrence():
    rng = np.random.default_rng(2)
    r = rng.uniform(0, 20, 100)
    ang = rng.uniform(0, 2 * np.pi, 100)
    nu = r * np.exp(1j * ang)
    x = rng.uniform(1, 50, 100)
    lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
    rhs = 2 * nu / x * bessel_j(nu, x)
    scale = np.abs(bessel_j(nu - 1, x)) + np.abs(bessel_j(nu + 1, x)) + np.abs(rhs)
    assert np.max(np.abs(lhs - rhs) / scale) < 1e-8


def test_y0_large_argument_and_global_bound():
    assert abs(bessel_y(0, 10.0) - y0_large_arg(10.0)) <= 5 * 10**-1.5
    x = np.geomspace(0.01, 100, 300)
    y0 = np.abs(bessel_y(0, x))
    bound = np.minimum(1 + np.abs(np.log(x)), x**-0.5)
    assert np.max(y0 / bound) < 3


def test_wronskian():
    rng = np.random.default_rng(3)
    nu = rng.uniform(-3, 3, 20) + 1j * rng.uniform(-3, 3, 20)
    x = rng.uniform(1, 30, 20)
    h = 1e-5
    yp = (bessel_y(nu, x + h) - bessel_y(nu, x - h)) / (2 * h)
    w = bessel_j(nu, x) * yp - bessel_j_prime(nu, x) * bessel_y(nu, x)
    scale = np.exp(np.pi * np.abs(nu.imag))
    assert np.max(np.abs(w - 2 / (np.pi * x)) / scale) < 1e-8


def test_order_derivative():
    xs = np.array([1.0, 5.0, 20.0])
    assert np.max(np.abs(bessel_j_dnu(np.zeros(3), xs) - np.pi / 2 * special.y0(xs))) < 1e-6
    nu, x, h = 2 + 1j, 10.0, 1e-5
    fd = (bessel_j(nu + h, x) - bessel_j(nu - h, x)) / (2 * h)
    assert abs(bessel_j_dnu(nu, x) - fd) / abs(fd) < 1e-5


def test_jsigmait_certificate():
    cert = certify_jsigmait()
    assert cert.passes
    assert cert.worst_ratio <= 2


def test_phragmen_lindelof_certificate_finite():
    cert = certify_phraglind(n_sigma=6, n_t=21, n_x=30)
    assert np.isfinite(cert.worst_ratio) and cert.worst_ratio < 10


def test_dnu_certificate_finite():
    cert = certify_dnu_bound(n_x=20, n_t=16)
    assert np.isfinite(cert.worst_ratio) and cert.worst_ratio < 10


def test_series_tail_certificate():
    assert certify_series_tail().passes
