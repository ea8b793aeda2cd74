"""Both sides of the hyper-Kloosterman Kuznetsov formula.

Geometric side: the sum of w5 Kloosterman sums against ``f`` and the
long-element term. Spectral side: the transforms ``tilde F^d``, their
leading asymptotics ``tilde F^d_0``, a quadrature for the long-element
Bessel transform ``hat F^d``, and the weighted sum over a spectral dataset.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import loggamma

from .errors import (
    InvariantError,
    MissingEigenvalue,
    OutOfAsymptoticRange,
    SchemaError,
    WallError,
)
from .exactsums import s_w5, s_wl
from .gl3bessel import _check_walls, _log_cscmu, _log_hat_K, _lrg, K_wl_numeric
from .oscint import _h2_window, hat_f, hat_h2, load_tilde_h1_coefficients, tilde_h2
from .specfun import log_q_factor
from .testfun import TestFunctionConfig, T_wl, default_config
from .weylalg import WEYL, SignPair, SpectralParameter, chi_d_w, weyl_act_mu

__all__ = [
    "KIM_SARNAK_THETA",
    "FormulaInstance",
    "TermRecord",
    "SumBreakdown",
    "x_threshold",
    "lhs_hyper_sum",
    "long_element_term",
    "long_element_integrand",
    "spectral_norm",
    "tilde_F_d",
    "tilde_F_d0",
    "QuadratureResult",
    "hat_F_d_quadrature",
    "SpectralForm",
    "SpectralDataset",
    "SpectralSum",
    "spectral_rhs",
    "ingest_dataset",
    "dump_dataset",
]

KIM_SARNAK_THETA = 5 / 14
# exponent standing in for "X^eps" in the asymptotic ranges
SMALL_EXPONENT = 0.1
_LOG_2PI = math.log(2 * math.pi)


# ---------------------------------------------------------------- instances

@dataclass(frozen=True)
class FormulaInstance:
    """Index pairs ``m, n`` (all coordinates nonzero) and a test-function configuration."""

    m: tuple
    n: tuple
    cfg: TestFunctionConfig = field(default_factory=default_config)

    def __post_init__(self):
        m = tuple(int(v) for v in self.m)
        n = tuple(int(v) for v in self.n)
        if len(m) != 2 or len(n) != 2:
            raise ValueError("m and n must be pairs of integers")
        if 0 in m or 0 in n:
            raise ValueError("all coordinates of m and n must be nonzero")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)

    @property
    def weight(self) -> int:
        """``|m1 m2 n1 n2|``."""
        return abs(self.m[0] * self.m[1] * self.n[0] * self.n[1])


@dataclass(frozen=True)
class TermRecord:
    """One modulus pair of a geometric-side sum.

    ``value = kloosterman * weight``; ``argument`` is the point where the
    weight function is evaluated.
    """

    c1: int
    c2: int
    argument: tuple
    kloosterman: complex
    weight: complex
    term_count: int

    @property
    def value(self) -> complex:
        return self.kloosterman * self.weight


@dataclass(frozen=True)
class SumBreakdown:
    """Value of a finite sum over moduli with its termwise records."""

    value: complex
    terms: tuple = ()
    moduli: tuple = ()

    @property
    def enumerated(self) -> int:
        """Number of moduli in the summation range, including ones with zero weight."""
        return len(self.moduli)

    def __complex__(self):
        return complex(self.value)


def _fsum_complex(values) -> complex:
    values = list(values)
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


def _divisor_count(n: int) -> int:
    n = abs(n)
    count, k = 0, 1
    while k * k <= n:
        if n % k == 0:
            count += 1 if k * k == n else 2
        k += 1
    return count


def _f_value(cfg: TestFunctionConfig, x: float) -> float:
    return float(cfg.f(np.array([x]))[0])


def _f_abs_range(cfg: TestFunctionConfig) -> tuple:
    lo, hi = cfg.f.support
    return min(abs(lo), abs(hi)), max(abs(lo), abs(hi))


def x_threshold(inst: FormulaInstance) -> float:
    """``C |m1^2 m2 n1 n2^2|^(1/3) / (200 T1^(1/3))``; above it the long-element term vanishes."""
    (m1, m2), (n1, n2) = inst.m, inst.n
    cfg = inst.cfg
    return cfg.C * abs(m1 * m1 * m2 * n1 * n2 * n2) ** (1 / 3) / (200 * cfg.T1 ** (1 / 3))


# ---------------------------------------------------------------- geometric side

def deligne_ratio(term: TermRecord) -> float:
    """``|S_w5| / (d(c1) c1^2)``; observed to stay below 3."""
    return abs(term.kloosterman) / (_divisor_count(term.c1) * term.c1**2)


def lhs_hyper_sum(inst: FormulaInstance) -> SumBreakdown:
    """``sum S_w5(m, n, c) f(C^3 m1^2 m2 n1 / (n2 c1^3))`` over ``m1 c2 = n2 c1^2``.

    ``c1`` runs over both signs with ``|c1|^3`` in ``C^3 |m1^2 m2 n1 / n2| / [T_hi, T_lo]``
    where ``[T_lo, T_hi]`` is the absolute support of ``f``; ``c2 = n2 c1^2 / m1``
    must be an integer divisible by ``c1``. Terms with ``f = 0`` are dropped.
    The sum does not involve ``X``.
    """
    (m1, m2), (n1, n2) = inst.m, inst.n
    cfg = inst.cfg
    lo, hi = _f_abs_range(cfg)
    scale = cfg.C**3 * abs(m1 * m1 * m2 * n1 / n2)
    c_max = int(math.floor((scale / lo) ** (1 / 3) * (1 + 1e-12)))
    c_min = max(1, int(math.ceil((scale / hi) ** (1 / 3) * (1 - 1e-12))))
    terms = []
    moduli = []
    for a in range(c_min, c_max + 1):
        for c1 in (-a, a):
            num = n2 * c1 * c1
            if num % m1 or (num // m1) % c1:
                continue
            c2 = num // m1
            moduli.append((c1, c2))
            arg = cfg.C**3 * m1 * m1 * m2 * n1 / (n2 * c1**3)
            fv = _f_value(cfg, arg)
            if fv == 0:
                continue
            s = s_w5(inst.m, inst.n, (c1, c2))
            terms.append(TermRecord(c1, c2, (arg,), complex(s.value), complex(fv), s.term_count))
    terms.sort(key=lambda t: (abs(t.c1), t.c1))
    moduli.sort(key=lambda c: (abs(c[0]), c[0]))
    return SumBreakdown(_fsum_complex(t.value for t in terms), tuple(terms), tuple(moduli))


def long_element_moduli(inst: FormulaInstance) -> list:
    """Moduli ``(c1, c2)`` of the finite long-element region, both signs."""
    (m1, m2), (n1, n2) = inst.m, inst.n
    cfg = inst.cfg
    c2_max = cfg.T1 ** (-2 / 3) * cfg.C**2 * abs(m1 * m2 * m2 * n1 * n1 * n2) ** (1 / 3)
    out = []
    for b in range(1, int(math.floor(c2_max * (1 + 1e-12))) + 1):
        c1_max = math.sqrt(abs(m1 * n2 * b)) / (200 * cfg.X)
        for a in range(1, int(math.floor(c1_max * (1 + 1e-12))) + 1):
            for c1 in (-a, a):
                for c2 in (-b, b):
                    out.append((c1, c2))
    out.sort(key=lambda c: (abs(c[0]), abs(c[1]), c))
    return out


def _twl_support(cfg: TestFunctionConfig, y1: float, y2: float) -> bool:
    """Cheap test of whether the closed form of ``T_wl`` can be nonzero at ``y``."""
    if y1 >= 0:
        return False
    root = math.sqrt(-y1)
    if float(cfg.h2(np.array([cfg.X / root]))[0]) == 0:
        return False
    u = cfg.C**3 * y2 * root
    return _f_value(cfg, u) != 0 or _f_value(cfg, -u) != 0


def long_element_term(inst: FormulaInstance, tol: float = 1e-12) -> SumBreakdown:
    """``sum S_wl(m, n, c) T_wl(F)(m1 n2 c2 / c1^2, m2 n1 c1 / c2^2)``.

    The sum runs over ``|c2| <= T1^(-2/3) C^2 |m1 m2^2 n1^2 n2|^(1/3)`` and
    ``1 <= |c1| <= sqrt|m1 n2 c2| / (200 X)``. It enters the formula with a
    minus sign. Pairs where ``T_wl`` vanishes by support are listed in
    ``moduli`` but not evaluated.
    """
    (m1, m2), (n1, n2) = inst.m, inst.n
    cfg = inst.cfg
    moduli = long_element_moduli(inst)
    terms = []
    for c1, c2 in moduli:
        y = (m1 * n2 * c2 / c1**2, m2 * n1 * c1 / c2**2)
        if not _twl_support(cfg, *y):
            continue
        weight = T_wl(cfg, y, tol=tol)
        if weight == 0:
            continue
        s = s_wl(inst.m, inst.n, (c1, c2))
        terms.append(TermRecord(c1, c2, y, complex(s.value), complex(weight), s.term_count))
    return SumBreakdown(_fsum_complex(t.value for t in terms), tuple(terms), tuple(moduli))


# ---------------------------------------------------------------- spectral transforms

def _param(d: int, mu_or_r) -> SpectralParameter:
    if isinstance(mu_or_r, SpectralParameter):
        if mu_or_r.d != d:
            raise ValueError(f"parameter has weight {mu_or_r.d}, expected {d}")
        return mu_or_r
    if d >= 2 and np.ndim(mu_or_r) == 0:
        return SpectralParameter.from_r(d, complex(mu_or_r))
    return SpectralParameter(tuple(mu_or_r), d)


def _r_value(mu: SpectralParameter) -> complex:
    return mu.r if mu.r is not None else -mu.mu[2] / 2


def spectral_norm(mu: SpectralParameter) -> float:
    """``||mu|| = sqrt(1 + |mu1|^2 + |mu2|^2 + |mu3|^2)``."""
    return math.sqrt(1 + sum(abs(m) ** 2 for m in mu.mu))


def _require_tempered(mu: SpectralParameter):
    if not mu.is_tempered:
        raise ValueError("a tempered spectral parameter is required")


def tilde_F_d(d: int, mu_or_r, inst: FormulaInstance) -> complex:
    """The finite ``epsilon``/Weyl-group sums ``tilde F^d``.

    For ``d = 0, 1`` the sum over all six Weyl elements is formed in log scale
    (``cscmu^d``, the reciprocal gammas and ``e^{pi |Im(mu2 - mu3)| / 2}``
    are combined before exponentiating). For ``d >= 2`` only ``r`` enters.

    Raises
    ------
    WallError
        For ``d = 0, 1`` near a wall.
    """
    cfg = inst.cfg
    C, X = cfg.C, cfg.X
    mu = _param(d, mu_or_r)
    _require_tempered(mu)
    log_c = math.log(C / (2 * math.pi))
    if d >= 2:
        r = _r_value(mu)
        pref = 1j**d * math.pi * C**3 / (2 * X) * np.exp(6 * r * log_c + log_q_factor(d, -r))
        xi = (d - 1) ** 2 / (16 * math.pi**2 * X)
        total = 0j
        for e1 in (1, -1):
            h = hat_h2(e1 * xi, cfg)
            for e2 in (1, -1):
                fh = hat_f(e1 * e2, -1 - 2 * r, config=cfg)
                if fh != 0:
                    total += fh * (e1 * e2) ** d * h
        return complex(pref * total)
    _check_walls(d, mu.mu)
    log_csc = _log_cscmu(d, mu.mu)
    total = 0j
    for name, w in WEYL.items():
        m1, m2, m3 = weyl_act_mu(mu, name).mu
        gap = m2 - m3
        sg = 1 if gap.imag > 0 else -1
        logmag = (-3 * m1 * log_c + _lrg(1 + m1 - m2) + _lrg(1 + m1 - m3)
                  + math.pi / 2 * abs(gap.imag) + log_csc)
        if not np.isfinite(logmag.real):
            continue
        xi = sg * (gap * gap).real / (16 * math.pi**2 * X)
        h = hat_h2(xi, cfg)
        for e2 in (1, -1):
            fh = hat_f(sg * e2, -1 + m1, config=cfg)
            if fh == 0:
                continue
            total += w.sign * chi_d_w(d, name, (-1, e2)) * np.exp(logmag) * fh * h
    return complex(-math.pi**2 * C**3 / X * total)


def _weyl_for_small_coordinate(mu: SpectralParameter):
    """Weyl element with ``mu^w = (-2i t1, i t1 + i t2, i t1 - i t2)``, ``t2 > 0``.

    The smallest coordinate is moved to the front; the other two are ordered
    so that ``Im(mu2^w - mu3^w) > 0``.
    """
    best = None
    for name in WEYL:
        m1, m2, m3 = weyl_act_mu(mu, name).mu
        if (m2 - m3).imag <= 0:
            continue
        key = abs(m1)
        if best is None or key < best[0] - 1e-15:
            best = (key, name, m1, m2, m3)
    _, name, m1, m2, m3 = best
    t1 = (m1 / (-2j)).real
    t2 = ((m2 - m3) / 2j).real
    return name, t1, t2


def tilde_F_d0(d: int, mu_or_r, inst: FormulaInstance,
               small_exponent: float = SMALL_EXPONENT, convention: str = "derived") -> complex:
    """Leading asymptotics ``tilde F^d_0`` on the tempered spectrum.

    ``d = 0, 1`` needs one coordinate ``-2 i t1`` with ``|t1| <= X^small_exponent``
    (``t1 != 0``) and ``t2 >= X^(1/6)``; ``d >= 2`` needs
    ``|r| <= X^small_exponent`` and ``d >= X^(1/6)``.

    For ``d = 0, 1`` the ``derived`` convention (default) is the leading term
    of :func:`tilde_F_d` as ``t2 -> oo``::

        -i pi C^3 / (2 X t2) (C^3 t2^3 / (8 pi^3))^(2 i t1)
            * sum_eps chi_d^w((-1, -eps2)) eps1 hat_f(eps2, -1 - 2 i t1) hat_h2(eps1 t2^2 / (4 pi^2 X))

    and ``displayed`` is ``(-1)^d i pi C^3 / (2 X t1) sgn(w) (C^3 t2 / (8 pi^3))^(2 i t1)``
    times the same sum with ``chi_d^w((-1, eps2))``. Only ``derived`` converges
    to :func:`tilde_F_d` (relative error ``O(t2^-2)``) for every ordering of
    ``mu``. ``d >= 2`` has a single form.

    Raises
    ------
    OutOfAsymptoticRange
        Outside those ranges, where the value is negligible rather than given
        by the closed form.
    """
    cfg = inst.cfg
    C, X = cfg.C, cfg.X
    mu = _param(d, mu_or_r)
    _require_tempered(mu)
    small = X**small_exponent
    if d >= 2:
        r = _r_value(mu)
        if abs(r) > small or d < X ** (1 / 6):
            raise OutOfAsymptoticRange(
                f"need |r| <= X^{small_exponent} and d >= X^(1/6); got |r| = {abs(r):.3g}, d = {d}")
        pref = (math.pi * 1j**d * C**3 * (d + 1 + 2 * r) / (X * d * d)
                * np.exp(2 * r * math.log(C**3 / (4 * math.pi**3 * d))))
        xi = (d - 1) ** 2 / (16 * math.pi**2 * X)
        total = 0j
        for e2 in (1, -1):
            fh = hat_f(e2, -1 - 2 * r, config=cfg)
            if fh == 0:
                continue
            for e1 in (1, -1):
                total += e2**d * fh * hat_h2(e1 * xi, cfg)
        return complex(pref * total)
    name, t1, t2 = _weyl_for_small_coordinate(mu)
    if abs(t1) > small or t1 == 0 or t2 < X ** (1 / 6):
        raise OutOfAsymptoticRange(
            f"need 0 < |t1| <= X^{small_exponent} and t2 >= X^(1/6); got t1 = {t1:.3g}, t2 = {t2:.3g}")
    if convention == "derived":
        pref = (-1j * math.pi * C**3 / (2 * X * t2)
                * np.exp(2j * t1 * math.log(C**3 * t2**3 / (8 * math.pi**3))))
        flip = -1
    elif convention == "displayed":
        pref = ((-1) ** d * 1j * math.pi * C**3 / (2 * X * t1) * WEYL[name].sign
                * np.exp(2j * t1 * math.log(C**3 * t2 / (8 * math.pi**3))))
        flip = 1
    else:
        raise ValueError("convention must be 'derived' or 'displayed'")
    xi = t2 * t2 / (4 * math.pi**2 * X)
    total = 0j
    for e2 in (1, -1):
        fh = hat_f(e2, -1 - 2j * t1, config=cfg)
        if fh == 0:
            continue
        chi = chi_d_w(d, name, (-1, flip * e2))
        for e1 in (1, -1):
            total += chi * e1 * fh * hat_h2(e1 * xi, cfg)
    return complex(pref * total)


# ---------------------------------------------------------------- long-element transform

@dataclass(frozen=True)
class QuadratureResult:
    """Value of ``hat F^d(mu)`` with an error estimate and method diagnostics."""

    value: complex
    error: float
    method: str
    details: dict = field(default_factory=dict, compare=False)

    def __complex__(self):
        return complex(self.value)


def long_element_integrand(d: int, mu, inst: FormulaInstance, y, kernel=None) -> complex:
    """``T_wl(F)(y) conj(K^d_wl(y, mu)) / (4 |y1 y2|^3)``.

    The Bessel function is only evaluated where ``T_wl`` is nonzero, i.e.
    ``y1 < 0``, ``|y1| >= (200 X)^2`` and ``C^3 sqrt|y1| |y2|`` inside the support of ``f``.
    ``kernel`` overrides :func:`K_wl_numeric` (same signature as ``kernel(d, y, mu)``).
    """
    y1, y2 = float(y[0]), float(y[1])
    cfg = inst.cfg
    if not _twl_support(cfg, y1, y2):
        return 0j
    t = T_wl(cfg, (y1, y2))
    if t == 0:
        return 0j
    k = (kernel or K_wl_numeric)(d, (y1, y2), mu)
    return complex(t * np.conj(k) / (4 * abs(y1 * y2) ** 3))


def _ygrid_quadrature(d, mu, inst, grid, kernel):
    """Tensor Gauss-Legendre rule in ``(log|y1|, y2)`` over the support annulus."""
    cfg = inst.cfg
    n1, n2 = grid
    lo = math.log((200 * cfg.X) ** 2)
    hi = lo + math.log(1e3)
    x1, w1 = np.polynomial.legendre.leggauss(n1)
    l1 = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x1
    w1 = 0.5 * (hi - lo) * w1
    flo, fhi = _f_abs_range(cfg)
    x2, w2 = np.polynomial.legendre.leggauss(n2)
    total = 0j
    for lv, wv in zip(l1, w1):
        a = math.exp(lv)
        root = math.sqrt(a)
        # C^3 sqrt|y1| |y2| in the absolute support of f, both signs of y2
        b_lo, b_hi = flo / (cfg.C**3 * root), fhi / (cfg.C**3 * root)
        ys = 0.5 * (b_hi + b_lo) + 0.5 * (b_hi - b_lo) * x2
        ws = 0.5 * (b_hi - b_lo) * w2
        for sgn in (1, -1):
            for yv, wy in zip(ys, ws):
                # dy1 = |y1| dlog|y1|
                total += wv * wy * a * long_element_integrand(d, mu, inst, (-a, sgn * yv), kernel)
    return total


def _mellin_grid_s2(cfg, sigma2, step, rel_cut=1e-9):
    """Trapezoid nodes on ``Re s2 = sigma2`` wide enough for ``hat f(+-1, -1 - s2)`` to fall to ``rel_cut``."""
    peak = max(abs(hat_f(e, -1 - sigma2, config=cfg)) for e in (1, -1))
    top = 100.0
    while top < 1e5:
        edge = max(abs(hat_f(e, -1 - sigma2 - 1j * sg * top, config=cfg))
                   for e in (1, -1) for sg in (1, -1))
        if edge < rel_cut * peak:
            break
        top *= 1.5
    n = int(math.ceil(top / step))
    t2 = step * np.arange(-n, n + 1)
    return sigma2 + 1j * t2


def _mellin_inner(d, v, mu, cfg, z, s2, fh, log_x, log_c):
    """``sum_s2 (2 pi X)^-z (C/2 pi)^(3 s2) hat K(((z+s2)/2, s2)) hat f`` on a vector ``z``.

    Returns the trapezoid sums at step ``h`` and at ``2h`` (every other node).
    """
    fine = np.zeros(z.size, dtype=complex)
    coarse = np.zeros(z.size, dtype=complex)
    keep = fh != 0
    s2k, fhk = s2[keep], fh[keep]
    even = (np.flatnonzero(keep) % 2) == 0
    rows = max(1, (1 << 21) // max(1, s2k.size))
    for lo in range(0, z.size, rows):
        zz = z[lo:lo + rows, None]
        L = (_log_hat_K(d, v, (zz + s2k[None, :]) / 2, s2k[None, :], mu)
             - zz * log_x + 3 * s2k[None, :] * log_c)
        vals = np.exp(L) * fhk[None, :]
        fine[lo:lo + rows] = vals.sum(axis=1)
        coarse[lo:lo + rows] = 2 * vals[:, even].sum(axis=1)
    return fine, coarse


def _mellin_F_j(d, mu, cfg, e1, e2, j, sigma, s2_step, window_panels, nodes, fh_cache):
    """``hat F^d_j(eps, mu)`` as a double Mellin-Barnes integral in ``(z, s2)``, ``z = 2 s1 - s2``.

    ``tilde_h2(e1, 1/2 + j + z)`` only depends on ``z``; it is negligible unless
    ``sgn Im z = e1`` and ``|Im z| >= 4 pi X y_lo``. On the window where
    ``h2(1/y)`` varies it is computed numerically; beyond ``1.5 * 4 pi X y_flat``
    the stationary point sits where ``h2(1/y) = 1`` and the full Mellin
    transform ``e(e1/8) Gamma(-s) (-4 pi i e1 X)^s`` is used, on ``t = t_s / u^2``.
    Returns the value and an error estimate.
    """
    C, X = cfg.C, cfg.X
    sig1, sig2 = sigma
    re_z = 2 * sig1 - sig2
    v = SignPair(-1, e2)
    key = (e1 * e2, sig2, s2_step)
    if key not in fh_cache:
        s2 = _mellin_grid_s2(cfg, sig2, s2_step)
        fh_cache[key] = (s2, hat_f(e1 * e2, -1 - s2, config=cfg))
    s2, fh = fh_cache[key]
    log_x = math.log(2 * math.pi * X)
    log_c = math.log(C / (2 * math.pi))
    y_lo, y_flat = _h2_window(cfg.h2)
    t_lo = 0.8 * 4 * math.pi * X * y_lo
    t_s = 1.5 * 4 * math.pi * X * y_flat
    xg, wg = np.polynomial.legendre.leggauss(nodes)

    def window(panels):
        edges = np.linspace(t_lo, t_s, panels + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])[:, None]
        half = 0.5 * np.diff(edges)[:, None]
        return (mids + half * xg).ravel(), (half * wg).ravel()

    tw, ww = window(window_panels)
    tw2, ww2 = window(window_panels // 2)
    # tail: t = t_s / u^2, dt = 2 t_s du / u^3
    u = 0.5 * (xg + 1)
    tt = t_s / u**2
    wt = 0.5 * wg * 2 * t_s / u**3
    ut = 0.5 * (np.polynomial.legendre.leggauss(nodes // 2)[0] + 1)
    wut = 0.5 * np.polynomial.legendre.leggauss(nodes // 2)[1] * 2 * t_s / ut**3
    tt2 = t_s / ut**2

    def tail_h2(t):
        s = 0.5 + j + re_z + 1j * e1 * t
        b = 4 * math.pi * X
        return np.exp(loggamma(-s) + s * (math.log(b) - 0.5j * math.pi * e1) + 0.25j * math.pi * e1)

    parts = []
    for ts, ws, numeric in ((tw, ww, True), (tw2, ww2, True), (tt, wt, False), (tt2, wut, False)):
        z = re_z + 1j * e1 * ts
        fine, coarse = _mellin_inner(d, v, mu, cfg, z, s2, fh, log_x, log_c)
        if numeric:
            h = np.array([tilde_h2(e1, 0.5 + j + zz, X, config=cfg, tol=1e-11) for zz in z])
        else:
            h = tail_h2(ts)
        parts.append((np.sum(ws * fine * h), np.sum(ws * coarse * h)))
    (win, win_c), (win2, _), (tail, tail_c), (tail2, _) = parts
    norm = C**3 / X ** (0.5 + j) * (s2[1] - s2[0]).imag / (2 * (2 * math.pi) ** 2)
    value = norm * (win + tail)
    error = abs(norm) * (abs(win - win2) + abs(tail - tail2) + abs(win - win_c) + abs(tail - tail_c))
    return complex(value), float(error)


def hat_F_d_quadrature(d: int, mu_or_r, inst: FormulaInstance, grid=(64, 64),
                       method: str = "mellin", jmax: int = 1, sigma=(0.25, 0.25),
                       s2_step: float = 0.05, window_panels: int = 16, nodes: int = 16,
                       kernel=None) -> QuadratureResult:
    """Long-element Bessel transform ``hat F^d(mu) = (1/4) int T_wl(F) conj(K^d_wl) dy / |y1 y2|^3``.

    ``method="mellin"`` (default) substitutes ``y = (-X^2 u^2, eps2 t / (C^3 X u))``,
    expands ``tilde_h1(eps1 X u)`` to order ``jmax`` (its terms are of relative
    size ``(200 X)^-j``) and evaluates each resulting double Mellin-Barnes
    integral on ``Re s = sigma`` by quadrature. ``K^d_wl`` enters through its
    Mellin transform at ``conj(mu)``.

    ``method="ygrid"`` is the direct tensor rule, ``grid = (n_y1, n_y2)`` nodes,
    logarithmic in ``|y1|`` over ``[(200 X)^2, 10^3 (200 X)^2]`` and spanning the
    ``f``-support band in ``y2``, with the Bessel function from
    :func:`K_wl_numeric` (or ``kernel``). The Mellin-Barnes evaluation of
    ``K`` is only practical for small ``X``, and the truncation of ``|y1|``
    is not controlled; its error estimate is the change under halving the grid.

    Raises
    ------
    ContourError
        Propagated from the Bessel function (``ygrid``).
    """
    mu = _param(d, mu_or_r)
    _require_tempered(mu)
    if d <= 1:
        _check_walls(d, mu.mu)
    cfg = inst.cfg
    if method == "ygrid":
        n1, n2 = grid
        value = _ygrid_quadrature(d, mu, inst, (n1, n2), kernel)
        coarse = _ygrid_quadrature(d, mu, inst, (max(2, n1 // 2), max(2, n2 // 2)), kernel)
        return QuadratureResult(value, abs(value - coarse), "ygrid", {"grid": (n1, n2)})
    if method != "mellin":
        raise ValueError("method must be 'mellin' or 'ygrid'")
    sig1, sig2 = sigma
    if not (sig1 > 0 and sig2 > 0 and sig1 + sig2 < 1):
        raise ValueError("sigma must satisfy 0 < sigma_i and sigma1 + sigma2 < 1")
    mu_bar = SpectralParameter(tuple(np.conj(mu.mu)), d,
                               None if mu.r is None else np.conj(mu.r))
    coeffs = load_tilde_h1_coefficients()
    if jmax + 1 > min(len(coeffs[1]), len(coeffs[-1])):
        raise ValueError(f"jmax must be below {min(len(coeffs[1]), len(coeffs[-1]))}")
    fh_cache = {}
    total = 0j
    error = 0.0
    pieces = {}
    for e1 in (1, -1):
        for e2 in (1, -1):
            if hat_f(e1 * e2, -1 - sig2, config=cfg) == 0:
                continue
            for j in range(jmax + 1):
                val, err = _mellin_F_j(d, mu_bar, cfg, e1, e2, j, sigma, s2_step,
                                       window_panels, nodes, fh_cache)
                c = complex(coeffs[e1][j])
                pieces[(e1, e2, j)] = val
                total += c * val
                error += abs(c) * err
            # first dropped term of the tilde_h1 expansion
            error += abs(pieces[(e1, e2, jmax)]) / (200 * cfg.X)
    scale = 2**2.5 * math.pi**4
    return QuadratureResult(complex(scale * total), float(scale * error), "mellin",
                            {"pieces": pieces, "sigma": tuple(sigma), "jmax": jmax})


# ---------------------------------------------------------------- spectral data

_KINDS = ("cusp", "minEis", "maxEis")


@dataclass(frozen=True)
class SpectralForm:
    """One spectral datum: weight, parameter, Hecke eigenvalues and ``L(1, Ad^2)``.

    ``hecke`` maps positive index pairs ``(m1, m2)`` to ``lambda(m)``; lookups
    use absolute values. ``weight`` multiplies the term (1 for cusp forms,
    caller-supplied measure weights for Eisenstein rows).
    """

    d: int
    mu: SpectralParameter
    hecke: dict
    L1AdSq: float
    kind: str = "cusp"
    weight: float = 1.0
    form_id: str = ""

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvariantError(f"kind must be one of {_KINDS}", invariant="kind")
        if not self.L1AdSq > 0:
            raise InvariantError("L1AdSq must be positive", invariant="L1AdSq > 0")
        _check_spectral_parameter(self.mu)
        lam = self.hecke.get((1, 1))
        if lam is None or abs(lam - 1) > 1e-12:
            raise InvariantError("lambda((1,1)) must equal 1", invariant="lambda(1,1) = 1")

    def eigenvalue(self, index) -> complex:
        key = (abs(int(index[0])), abs(int(index[1])))
        try:
            return self.hecke[key]
        except KeyError:
            raise MissingEigenvalue(self.form_id or (self.d, self.mu.mu), key) from None


def _check_spectral_parameter(mu: SpectralParameter):
    """Tempered, or complementary ``(x + it, -x + it, -2it)`` with ``0 < x <= 5/14``."""
    if mu.is_tempered:
        return
    if mu.d >= 2:
        raise InvariantError("weight d >= 2 forms must have Re(r) = 0", invariant="tempered")
    m = mu.as_array()
    for perm in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
        a, b, c = m[list(perm)]
        x = (a.real - b.real) / 2
        if abs(c.real) < 1e-12 and abs(a.real + b.real) < 1e-12 and abs(a.imag - b.imag) < 1e-12:
            if 0 < abs(x) <= KIM_SARNAK_THETA:
                return
            raise InvariantError(
                f"complementary parameter with |Re x| = {abs(x):.4g} > 5/14",
                invariant="Kim-Sarnak bound")
    raise InvariantError("parameter is neither tempered nor complementary",
                         invariant="tempered or complementary")


@dataclass(frozen=True)
class SpectralDataset:
    """External stand-in for a spectral basis.

    ``completeness`` is the declared ``||mu||`` up to which the forms are complete.
    """

    forms: tuple
    provenance: str = ""
    completeness: float = 0.0

    def __post_init__(self):
        forms = tuple(self.forms)
        seen = set()
        for f in forms:
            key = (f.d, tuple(np.round(np.array(f.mu.mu), 12)))
            if key in seen:
                raise SchemaError(f"duplicate (d, mu) entry {key!r}")
            seen.add(key)
        object.__setattr__(self, "forms", forms)

    def __len__(self):
        return len(self.forms)


_FIELDS = {"kind", "d", "mu", "r", "hecke", "L1AdSq", "weight", "id"}


def _complex_pair(value, line, name):
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise SchemaError("expected a [re, im] pair of numbers", line=line, field=name)
    return complex(float(value[0]), float(value[1]))


def _parse_form(obj: dict, line: int) -> SpectralForm:
    unknown = set(obj) - _FIELDS
    if unknown:
        raise SchemaError(f"unknown fields {sorted(unknown)}", line=line)
    for name in ("kind", "d", "hecke", "L1AdSq"):
        if name not in obj:
            raise SchemaError("missing field", line=line, field=name)
    kind = obj["kind"]
    if kind not in _KINDS:
        raise SchemaError(f"kind must be one of {_KINDS}", line=line, field="kind")
    d = obj["d"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 0:
        raise SchemaError("d must be a nonnegative integer", line=line, field="d")
    if d >= 2:
        if "r" not in obj:
            raise SchemaError("weight d >= 2 records need r", line=line, field="r")
        r = _complex_pair(obj["r"], line, "r")
        mu = SpectralParameter.from_r(d, r)
    else:
        if "mu" not in obj:
            raise SchemaError("weight 0/1 records need mu", line=line, field="mu")
        raw = obj["mu"]
        if not isinstance(raw, list) or len(raw) != 3:
            raise SchemaError("mu must be three [re, im] pairs", line=line, field="mu")
        coords = tuple(_complex_pair(c, line, "mu") for c in raw)
        try:
            mu = SpectralParameter(coords, d)
        except ValueError as exc:
            raise SchemaError(str(exc), line=line, field="mu") from None
    hecke_raw = obj["hecke"]
    if not isinstance(hecke_raw, list):
        raise SchemaError("hecke must be a list of [[m1, m2], [re, im]]", line=line, field="hecke")
    hecke = {}
    for item in hecke_raw:
        if (not isinstance(item, list) or len(item) != 2 or not isinstance(item[0], list)
                or len(item[0]) != 2 or not all(isinstance(k, int) and k > 0 for k in item[0])):
            raise SchemaError("hecke entries must be [[m1, m2], [re, im]] with m1, m2 > 0",
                              line=line, field="hecke")
        key = tuple(item[0])
        if key in hecke:
            raise SchemaError(f"duplicate hecke index {key}", line=line, field="hecke")
        hecke[key] = _complex_pair(item[1], line, "hecke")
    lam11 = hecke.get((1, 1))
    if lam11 is None:
        raise SchemaError("hecke must contain the index [1, 1]", line=line, field="hecke")
    if lam11 == 0:
        raise InvariantError("lambda((1,1)) = 0 cannot be normalized",
                             invariant="lambda(1,1) = 1", line=line)
    if abs(lam11 - 1) > 1e-12:
        warnings.warn(f"line {line}: rescaling Hecke eigenvalues so that lambda((1,1)) = 1",
                      stacklevel=3)
        hecke = {k: v / lam11 for k, v in hecke.items()}
        hecke[(1, 1)] = 1 + 0j
    L = obj["L1AdSq"]
    if not isinstance(L, (int, float)) or isinstance(L, bool):
        raise SchemaError("L1AdSq must be a number", line=line, field="L1AdSq")
    weight = obj.get("weight", 1.0)
    if not isinstance(weight, (int, float)) or isinstance(weight, bool):
        raise SchemaError("weight must be a number", line=line, field="weight")
    try:
        return SpectralForm(d, mu, hecke, float(L), kind, float(weight), str(obj.get("id", line)))
    except InvariantError as exc:
        raise InvariantError(str(exc), invariant=exc.invariant, line=line) from None


def ingest_dataset(path) -> SpectralDataset:
    """Read a JSON-lines spectral dataset.

    Each nonblank line is one object. An optional object ``{"dataset": {"provenance": ...,
    "completeness": <||mu|| cutoff>}}`` carries the metadata; every other line is a form record
    with fields ``kind``, ``d``, ``mu`` (``d = 0, 1``: three ``[re, im]`` pairs)
    or ``r`` (``d >= 2``: one pair), ``hecke`` (list of ``[[m1, m2], [re, im]]``),
    ``L1AdSq``, optional ``weight`` and ``id``.

    Raises
    ------
    SchemaError
        Malformed lines, unknown or missing fields, duplicate ``(d, mu)``.
    InvariantError
        Parameters that are neither tempered nor complementary within 5/14,
        nonpositive ``L1AdSq``.
    """
    path = Path(path)
    forms = []
    meta = {}
    seen = {}
    with path.open() as fh:
        for line_no, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=line_no) from None
            if not isinstance(obj, dict):
                raise SchemaError("each line must be a JSON object", line=line_no)
            if "dataset" in obj:
                if set(obj) != {"dataset"} or not isinstance(obj["dataset"], dict):
                    raise SchemaError("metadata line must be {\"dataset\": {...}}", line=line_no)
                meta = obj["dataset"]
                comp = meta.get("completeness", 0.0)
                if isinstance(comp, bool) or not isinstance(comp, (int, float)) or comp < 0:
                    raise SchemaError("completeness must be a nonnegative number (the ||mu|| cutoff)",
                                      line=line_no, field="completeness")
                continue
            form = _parse_form(obj, line_no)
            key = (form.d, tuple(np.round(np.array(form.mu.mu), 12)))
            if key in seen:
                raise SchemaError(f"duplicate (d, mu); first seen on line {seen[key]}",
                                  line=line_no, field="mu" if form.d < 2 else "r")
            seen[key] = line_no
            forms.append(form)
    return SpectralDataset(tuple(forms), str(meta.get("provenance", "")),
                           float(meta.get("completeness", 0.0)))


def dump_dataset(ds: SpectralDataset, path) -> None:
    """Write ``ds`` in the format read by :func:`ingest_dataset`."""
    def pair(z):
        return [float(complex(z).real), float(complex(z).imag)]

    with Path(path).open("w") as fh:
        fh.write(json.dumps({"dataset": {"provenance": ds.provenance,
                                         "completeness": ds.completeness}}) + "\n")
        for f in ds.forms:
            rec = {"kind": f.kind, "d": f.d}
            if f.d >= 2:
                rec["r"] = pair(_r_value(f.mu))
            else:
                rec["mu"] = [pair(m) for m in f.mu.mu]
            rec["hecke"] = [[list(k), pair(v)] for k, v in sorted(f.hecke.items())]
            rec["L1AdSq"] = f.L1AdSq
            rec["weight"] = f.weight
            rec["id"] = f.form_id
            fh.write(json.dumps(rec) + "\n")


@dataclass(frozen=True)
class SpectralSum:
    """Weighted spectral sum with completeness and tail diagnostics.

    ``tail_bound`` is an order-of-magnitude estimate (implied constants set to 1):
    ``C^3 X^(-3/2)`` per form times the Weyl-law count ``X^(5/2) - cutoff^5`` of
    forms between the completeness cutoff and ``X^(1/2)``, times ``|m1 m2 n1 n2|``.
    """

    value: complex
    evaluator: str
    completeness: float
    tail_bound: float
    terms: tuple = ()
    negligible: int = 0

    def __complex__(self):
        return complex(self.value)


def _evaluate(evaluator: str, form: SpectralForm, inst: FormulaInstance, quad_kw: dict):
    if evaluator == "tilde0":
        return tilde_F_d0(form.d, form.mu, inst)
    if evaluator == "tilde":
        return tilde_F_d(form.d, form.mu, inst)
    if evaluator == "quadrature":
        return hat_F_d_quadrature(form.d, form.mu, inst, **quad_kw).value
    raise ValueError("evaluator must be 'tilde0', 'tilde' or 'quadrature'")


def spectral_rhs(inst: FormulaInstance, ds: SpectralDataset, evaluator: str = "tilde0",
                 normalization: float = 1.0, in_depth: bool = False, quad_kw=None) -> SpectralSum:
    """``normalization * |m1 m2 n1 n2| sum weight * lambda(n) conj(lambda(m)) / L(1, Ad^2) * F(mu)``.

    ``evaluator`` picks ``F`` among ``tilde0`` (:func:`tilde_F_d0`), ``tilde``
    (:func:`tilde_F_d`) and ``quadrature`` (:func:`hat_F_d_quadrature`). With
    ``tilde0``, forms outside the asymptotic range contribute 0 (the closed
    form is stated to be negligible there) and are counted in ``negligible``.

    ``normalization`` is the global constant relating the dataset's Hecke
    normalization to the spectral measure; it has to be fixed against an
    external computation before the two sides can be compared absolutely.
    ``in_depth=True`` applies the factor 4/3 and keeps only cusp forms with
    ``||mu|| > X^(1/6)``.

    Raises
    ------
    MissingEigenvalue
        When a form lacks ``lambda(m)`` or ``lambda(n)``.
    """
    cfg = inst.cfg
    quad_kw = quad_kw or {}
    terms = []
    negligible = 0
    for form in ds.forms:
        if in_depth and (form.kind != "cusp" or spectral_norm(form.mu) <= cfg.X ** (1 / 6)):
            continue
        ratio = form.eigenvalue(inst.n) * np.conj(form.eigenvalue(inst.m)) / form.L1AdSq
        try:
            val = _evaluate(evaluator, form, inst, quad_kw)
        except OutOfAsymptoticRange:
            if evaluator != "tilde0":
                raise
            negligible += 1
            val = 0j
        terms.append((form.form_id, complex(form.weight * ratio * val)))
    scale = normalization * inst.weight * (4 / 3 if in_depth else 1.0)
    value = scale * _fsum_complex(t for _, t in terms)
    cutoff = ds.completeness
    missing = max(0.0, cfg.X**2.5 - cutoff**5)
    tail = normalization * inst.weight * cfg.C**3 * cfg.X**-1.5 * missing
    return SpectralSum(complex(value), evaluator, cutoff, float(tail),
                       tuple((fid, scale * t) for fid, t in terms), negligible)
