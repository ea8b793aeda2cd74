"""Invariant suites run by ``hyperkloos verify``.

Each suite returns a list of :class:`Check` records comparing a measured
quantity with a threshold. Randomized inputs come from a seeded generator,
so reports are reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import exactsums as es
from .formula import (
    FormulaInstance,
    deligne_ratio,
    lhs_hyper_sum,
    long_element_term,
    tilde_F_d,
    tilde_F_d0,
    x_threshold,
)
from .gl3bessel import hat_K_residue, hat_K_wl
from .oscint import tilde_h1
from .specfun import bessel_j, bessel_j_dnu, bessel_y, certify_jsigmait
from .testfun import T_w5, default_config
from .weylalg import SpectralParameter, weyl_act_mu, weyl_mul, WEYL_NAMES

__all__ = ["Check", "SUITES", "run_suite"]


@dataclass(frozen=True)
class Check:
    """``measured`` compared with ``threshold``; ``upper`` means measured must not exceed it."""

    name: str
    measured: float
    threshold: float
    upper: bool = True

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.measured):
            return False
        return self.measured <= self.threshold if self.upper else self.measured >= self.threshold


def _random_pair(rng, lo=-3, hi=3):
    vals = [v for v in range(lo, hi + 1) if v != 0]
    return (int(rng.choice(vals)), int(rng.choice(vals)))


def suite_identities(rng) -> list:
    out = []
    worst = 0.0
    for _ in range(12):
        m = _random_pair(rng)
        n1 = int(rng.choice([v for v in range(-3, 4) if v]))
        n = (n1, m[0])
        c1 = int(rng.integers(1, 16))
        lhs = es.s_w5(m, n, (c1, c1 * c1)).value
        rhs = c1 * es.kl3(n[0], m[0], m[1], c1).value
        worst = max(worst, abs(lhs - rhs))
    out.append(Check("s_w5 = c1 Kl3 at n2 = m1, c2 = c1^2", worst, 1e-9))
    off = max(abs(es.s_w5((1, 2), (1, 1), (c, c * c + c)).value) for c in range(2, 8))
    out.append(Check("s_w5 vanishes for c2 != c1^2 at n2 = m1", off, 0.0))
    worst = 0.0
    for _ in range(10):
        a, b = (int(v) for v in rng.integers(-20, 21, size=2))
        c = int(rng.integers(1, 40))
        worst = max(worst, abs(es.kl2(a, b, c).value - es.kl2(b, a, c).value))
    out.append(Check("Kl2 symmetric in m, n", worst, 1e-12))
    worst = 0.0
    for _ in range(4):
        m, n = _random_pair(rng), _random_pair(rng)
        c = (int(rng.integers(1, 7)), int(rng.integers(1, 7)))
        base = es.s_wl(m, n, c).value
        other = es.s_wl(m, n, c, rng=np.random.default_rng(int(rng.integers(1 << 31)))).value
        worst = max(worst, abs(base - other))
    out.append(Check("s_wl independent of Bezout choices", worst, 1e-9))
    mu = SpectralParameter.tempered(float(rng.normal()), float(rng.normal()))
    worst = 0.0
    for w in WEYL_NAMES:
        for w2 in WEYL_NAMES:
            lhs = weyl_act_mu(mu, weyl_mul(w, w2)).as_array()
            rhs = weyl_act_mu(weyl_act_mu(mu, w), w2).as_array()
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    out.append(Check("mu^(w w') = (mu^w)^w'", worst, 0.0))
    return out


def suite_bessel_bounds(rng) -> list:
    out = []
    xs = np.array([1.0, 5.0, 20.0])
    d0 = bessel_j_dnu(np.zeros(3), xs)
    out.append(Check("dJ/dnu at nu = 0 equals (pi/2) Y_0",
                     float(np.max(np.abs(d0 - np.pi / 2 * special.y0(xs)))), 1e-6))
    cert = certify_jsigmait(n=20)
    out.append(Check("|J_{sigma+it}(x)| sqrt(x) e^{-pi|t|/2}", cert.worst_ratio, 2.0))
    nu = rng.uniform(-3, 3, 60) + 1j * rng.uniform(-10, 10, 60)
    x = rng.uniform(0.5, 60, 60)
    lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
    rhs = 2 * nu / x * bessel_j(nu, x)
    scale = np.abs(bessel_j(nu - 1, x)) + np.abs(bessel_j(nu + 1, x)) + np.abs(rhs)
    out.append(Check("three-term recurrence residual", float(np.max(np.abs(lhs - rhs) / scale)), 1e-8))
    y = bessel_y(0.5 + 0j, x[:10])
    ref = special.yv(0.5, x[:10])
    out.append(Check("Y_{1/2} against scipy", float(np.max(np.abs(y - ref) / (1 + np.abs(ref)))), 1e-9))
    return out


def suite_stationary(rng) -> list:
    worst = 0.0
    for u in (50.0, -50.0, 200.0, -200.0):
        val = tilde_h1(u)
        err = math.sqrt(2 * abs(u)) * val * np.exp(-2j * np.pi * (2 * u + np.sign(u) / 8)) - 1
        worst = max(worst, abs(err) * abs(u))
    return [Check("|u E(u)| for the tilde_h1 main term", worst, 3.0)]


def suite_kernels(rng) -> list:
    out = []
    mu = SpectralParameter.from_r(4, 0.1j)
    zero = max(abs(hat_K_wl(d, (0.3 + 1j * t, 0.2 - 1j * t), (1, 1), SpectralParameter.from_r(d, 0.2j))
                   .to_complex()) for d in (2, 3, 5) for t in (0.0, 3.0))
    out.append(Check("v = (+,+) kernel vanishes for d >= 2", zero, 0.0))
    s1 = 0.5
    pole = 2 * 0.1j
    k = 128
    nodes = pole + 0.05 * np.exp(2j * np.pi * np.arange(k) / k)
    vals = np.array([hat_K_wl(4, (s1, z), (-1, 1), mu).to_complex() for z in nodes])
    cauchy = np.mean(vals * (nodes - pole))
    closed = hat_K_residue(4, (-1, 1), s1, mu)
    out.append(Check("Cauchy residue vs closed form at s2 = 2r",
                     abs(cauchy - closed) / abs(closed), 1e-8))
    t = rng.uniform(-5, 5, 2)
    mu0 = SpectralParameter.tempered(float(t[0]), float(t[1]))
    s = (0.3 + 0.7j, 0.2 - 1.1j)
    a = hat_K_wl(0, s, (-1, 1), mu0).to_complex()
    b = hat_K_wl(0, s, (-1, 1), weyl_act_mu(mu0, "w4")).to_complex()
    out.append(Check("d = 0 kernel invariant under mu -> mu^w4", abs(a - b) / abs(a), 1e-10))
    return out


def suite_support(rng) -> list:
    out = []
    nonzero = 0
    for _ in range(8):
        m, n = _random_pair(rng, -2, 2), _random_pair(rng, -2, 2)
        C = float(rng.uniform(1, 2))
        cfg = default_config(C, 1.0)
        inst = FormulaInstance(m, n, cfg)
        X = 1.01 * x_threshold(inst)
        val = long_element_term(FormulaInstance(m, n, cfg.with_scalings(X=X))).value
        nonzero += val != 0
    out.append(Check("long-element term vanishes above the X threshold (nonzero count)",
                     float(nonzero), 0.0))
    cfg = default_config()
    ys = np.linspace(0.5, 2.5, 9)
    err = max(abs(T_w5(cfg, y) - float(cfg.f(np.array([y]))[0])) for y in ys)
    out.append(Check("T_w5 reproduces f", err, 1e-8))
    return out


def suite_formula(rng) -> list:
    out = []
    worst = 0.0
    for C in (2.0, 4.0):
        res = lhs_hyper_sum(FormulaInstance((1, 1), (1, 1), default_config(C, 1.0)))
        for term in res.terms:
            worst = max(worst, deligne_ratio(term))
    out.append(Check("|S_w5| / (d(c1) c1^2) in the hyper-Kloosterman sum", worst, 3.0))
    inst = FormulaInstance((1, 1), (1, 1), default_config(1.0, 1e4))
    rels = [abs(tilde_F_d(d, 0.01j, inst) / tilde_F_d0(d, 0.01j, inst) - 1) for d in (20, 40, 80)]
    out.append(Check("|tilde F / tilde F_0 - 1| at d = 80, X = 1e4", rels[-1], rels[0]))
    return out


SUITES = {
    "identities": suite_identities,
    "bessel-bounds": suite_bessel_bounds,
    "stationary": suite_stationary,
    "kernels": suite_kernels,
    "support": suite_support,
    "formula": suite_formula,
}


def run_suite(name: str, seed: int = 0) -> list:
    """Run one suite with a generator seeded by ``seed``."""
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}") from None
    return fn(np.random.default_rng(seed))
