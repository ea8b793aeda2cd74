"""Oscillatory integrals: adaptive quadrature, stationary phase, 1D transforms.

All phases are in cycles: an integrand is ``omega(t) e(phi(t))`` with
``e(x) = exp(2 pi i x)``.

Transforms of the bump functions ``f``, ``h1``, ``h2`` take any callable with a
``support`` attribute (a :class:`hyperkloos.testfun.BumpFunction` is the usual
choice). When omitted, the defaults of :func:`hyperkloos.testfun.default_config`
are used.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (MultipleStationaryPoints, NoConvergence, NoStationaryPoint,
                     OutOfAsymptoticRange)

__all__ = [
    "OscillatoryIntegrand",
    "StationaryPhaseResult",
    "osc_quadrature",
    "find_stationary_points",
    "bky_nonstationary_check",
    "bky_stationary_phase",
    "power_exp_tail",
    "tilde_h1",
    "tilde_h1_asymptotic",
    "tilde_h1_exact_coefficients",
    "fit_tilde_h1_coefficients",
    "load_tilde_h1_coefficients",
    "hat_h2",
    "hat_f",
    "tilde_h2",
    "H_j",
    "H_0_asymptotic",
    "d_factor",
    "hankel_coefficients",
]

_GL_NODES = 16
_ROUNDOFF = 64 * np.finfo(float).eps
_CHUNK = 1 << 20
_COEFF_FILE = Path(__file__).with_name("data") / "tilde_h1_coefficients.json"


def _e(x):
    return np.exp(2j * np.pi * x)


@lru_cache(maxsize=8)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def _default_cfg():
    from .testfun import default_config

    return default_config()


@dataclass(frozen=True)
class OscillatoryIntegrand:
    """``omega(t) e(phi(t))`` on a finite interval.

    Attributes
    ----------
    omega : callable
        Vectorized weight, real or complex.
    phi : callable
        Vectorized real phase in cycles.
    support : tuple of float
        Finite interval ``(a, b)``; ``omega`` vanishes outside it.
    dphi, d2phi : callable, optional
        Phase derivatives. Finite differences are used when absent.
    T, U : float
        Weight scales, ``omega^(j) << T U^-j``.
    Y, Q : float
        Phase scales, ``phi^(j) << Y Q^-j``.
    carrier : float, optional
        Linear frequency ``kappa`` (cycles per unit). When given, quadrature
        treats ``omega e(phi - kappa t)`` as the amplitude and integrates it
        against ``e(kappa t)`` exactly (Filon-Legendre panels), so panel
        widths only have to resolve the residual phase.
    """

    omega: Callable
    phi: Callable
    support: tuple
    dphi: Callable | None = None
    d2phi: Callable | None = None
    T: float = 1.0
    U: float = 1.0
    Y: float = 1.0
    Q: float = 1.0
    carrier: float | None = None

    def __post_init__(self):
        a, b = (float(x) for x in self.support)
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise ValueError(f"support must be a finite interval, got {self.support!r}")
        object.__setattr__(self, "support", (a, b))
        for name in ("T", "U", "Y", "Q"):
            if not getattr(self, name) > 0:
                raise ValueError(f"scale {name} must be positive")

    def phase_derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.dphi is not None:
            return np.asarray(self.dphi(t), dtype=float)
        h = 1e-6 * (self.support[1] - self.support[0])
        return (np.asarray(self.phi(t + h)) - np.asarray(self.phi(t - h))) / (2 * h)

    def phase_second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.d2phi is not None:
            return np.asarray(self.d2phi(t), dtype=float)
        h = 1e-4 * (self.support[1] - self.support[0])
        if self.dphi is not None:
            return (np.asarray(self.dphi(t + h)) - np.asarray(self.dphi(t - h))) / (2 * h)
        return (np.asarray(self.phi(t + h)) - 2 * np.asarray(self.phi(t))
                + np.asarray(self.phi(t - h))) / h**2

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.omega(t) * _e(self.phi(t))

    def residual(self, t):
        """``omega(t) e(phi(t) - carrier t)``."""
        t = np.asarray(t, dtype=float)
        return self.omega(t) * _e(self.phi(t) - self.carrier * t)

    def residual_phase_derivative(self, t):
        return self.phase_derivative(t) - (self.carrier or 0.0)


@dataclass(frozen=True)
class StationaryPhaseResult:
    """Stationary-phase approximation with its terms and error budget.

    Attributes
    ----------
    value : complex
        Sum of all computed terms.
    main_term : complex
        The ``j = 0`` term ``e(phi(t0) + sgn/8) omega(t0) / sqrt|phi''(t0)|``.
    correction_terms : tuple of complex
        Contributions of ``p_1, ..., p_jmax``.
    error_budget : float
        Estimated bound on ``|value - integral|``.
    t0 : float
    """

    value: complex
    main_term: complex
    correction_terms: tuple = field(default=())
    error_budget: float = np.inf
    t0: float = np.nan


# ---------------------------------------------------------------- quadrature

def _subdivide(edges: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Split panel ``i`` of ``edges`` into ``counts[i]`` equal pieces."""
    counts = counts.astype(np.int64)
    starts = np.repeat(edges[:-1], counts)
    widths = np.repeat((edges[1:] - edges[:-1]) / counts, counts)
    first = np.repeat(np.cumsum(counts) - counts, counts)
    local = np.arange(counts.sum()) - first
    out = np.empty(counts.sum() + 1)
    out[:-1] = starts + local * widths
    out[-1] = edges[-1]
    return out


def _osc_edges(integrand: OscillatoryIntegrand, osc_per_panel: float,
               min_panels: int, max_panels: int) -> np.ndarray:
    a, b = integrand.support
    edges = np.linspace(a, b, min_panels + 1)
    probe = np.linspace(0.0, 1.0, 5)
    for _ in range(2):
        widths = np.diff(edges)
        pts = edges[:-1, None] + widths[:, None] * probe
        rate = np.abs(integrand.residual_phase_derivative(pts)).max(axis=1)
        counts = np.maximum(1, np.ceil(rate * widths / osc_per_panel))
        if counts.sum() > max_panels:
            raise NoConvergence(
                f"oscillation needs {int(counts.sum())} panels, budget {max_panels}")
        if np.all(counts == 1):
            break
        edges = _subdivide(edges, counts)
    return edges


def _gl_sum(fn: Callable, edges: np.ndarray, n: int = _GL_NODES) -> tuple:
    """Composite Gauss-Legendre sum and the matching sum of ``|fn|``."""
    x, w = _gauss_legendre(n)
    mids = 0.5 * (edges[1:] + edges[:-1])
    halves = 0.5 * (edges[1:] - edges[:-1])
    total = 0j
    mass = 0.0
    step = max(1, _CHUNK // n)
    for lo in range(0, mids.size, step):
        m = mids[lo:lo + step, None]
        h = halves[lo:lo + step, None]
        vals = np.asarray(fn(m + h * x), dtype=complex)
        total += np.sum((vals * w) * h)
        mass += float(np.sum(np.abs(vals) * w * h))
    return complex(total), mass


@lru_cache(maxsize=8)
def _legendre_projector(n: int) -> np.ndarray:
    """Matrix taking values at Gauss-Legendre nodes to Legendre coefficients."""
    x, w = _gauss_legendre(n)
    P = np.polynomial.legendre.legvander(x, n - 1)          # (node, degree)
    return (P * w[:, None]).T * ((2 * np.arange(n) + 1) / 2)[:, None]


def _filon_sum(integrand: OscillatoryIntegrand, edges: np.ndarray, n: int = 32) -> tuple:
    """Sum over panels of ``int residual(t) e(kappa t) dt``.

    On each panel the residual is expanded in Legendre polynomials and
    ``int_{-1}^{1} P_m(x) e^{i w x} dx = 2 i^m j_m(w)`` is used.
    """
    from scipy.special import spherical_jn

    kappa = float(integrand.carrier)
    x, w = _gauss_legendre(n)
    proj = _legendre_projector(n)
    mids = 0.5 * (edges[1:] + edges[:-1])
    halves = 0.5 * (edges[1:] - edges[:-1])
    m = np.arange(n)
    total = 0j
    mass = 0.0
    step = max(1, _CHUNK // n)
    for lo in range(0, mids.size, step):
        mid = mids[lo:lo + step, None]
        half = halves[lo:lo + step, None]
        vals = np.asarray(integrand.residual(mid + half * x), dtype=complex)
        coef = vals @ proj.T                                 # (panel, degree)
        # panels produced by subdivision share a handful of widths
        widths, which = np.unique(half[:, 0], return_inverse=True)
        omega = 2 * np.pi * kappa * widths[:, None]
        moments = (2 * (1j ** m) * spherical_jn(m, omega))[which]
        panel = np.sum(coef * moments, axis=1) * half[:, 0] * _e(kappa * mid[:, 0])
        total += np.sum(panel)
        mass += float(np.sum(np.abs(vals) * w * half))
    return complex(total), mass


def osc_quadrature(integrand: OscillatoryIntegrand, tol: float = 1e-10,
                   osc_per_panel: float = 0.25, min_panels: int = 32,
                   max_panels: int = 1 << 23, return_error: bool = False):
    """Integrate ``omega(t) e(phi(t))`` over the support.

    Composite 16-point Gauss-Legendre with panel widths bounded by
    ``osc_per_panel / |phi'|``. With a ``carrier`` the panels are 32-point
    Filon-Legendre and only ``|phi' - carrier|`` limits their width. All panels are then halved and the two sums
    compared; halving repeats until the difference is below ``tol`` (or
    below the round-off floor ``64 eps (1 + 2 pi max|phi|) int |integrand|``,
    which no amount of halving can beat).

    Parameters
    ----------
    integrand : OscillatoryIntegrand
    tol : float
        Absolute tolerance.
    osc_per_panel : float
        Maximum number of phase cycles per panel.
    return_error : bool
        Also return the error estimate.

    Raises
    ------
    NoConvergence
        If the panel budget is exhausted first.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    edges = _osc_edges(integrand, osc_per_panel, min_panels, max_panels)
    if integrand.carrier is None:
        summer = lambda ed: _gl_sum(integrand, ed)
    else:
        summer = lambda ed: _filon_sum(integrand, ed)
    coarse, _ = summer(edges)
    # e(phi) carries an absolute phase error ~ eps |phi|
    phase_size = 1.0 + 2 * np.pi * float(np.max(np.abs(integrand.phi(edges))))
    while True:
        if 2 * (edges.size - 1) > max_panels:
            raise NoConvergence("panel budget exhausted", estimate=coarse, error=np.inf)
        edges = _subdivide(edges, np.full(edges.size - 1, 2))
        fine, mass = summer(edges)
        err = abs(fine - coarse)
        # below the round-off floor further halving cannot help
        if err <= max(tol, _ROUNDOFF * phase_size * mass):
            return (fine, err) if return_error else fine
        if 2 * (edges.size - 1) > max_panels:
            raise NoConvergence(
                f"error estimate {err:.3g} above tol {tol:.3g} at panel budget",
                estimate=fine, error=err)
        coarse = fine


# ---------------------------------------------------------- BKY machinery

def find_stationary_points(integrand: OscillatoryIntegrand, samples: int = 4001) -> list:
    """Zeros of ``phi'`` in the open support, located by sign changes and bisection."""
    a, b = integrand.support
    t = np.linspace(a, b, samples)
    d = integrand.phase_derivative(t)
    roots = []
    for i in np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) <= 0):
        lo, hi = t[i], t[i + 1]
        dlo = d[i]
        if dlo == 0:
            roots.append(float(lo))
            continue
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            dm = float(integrand.phase_derivative(mid))
            if np.sign(dm) == np.sign(dlo):
                lo, dlo = mid, dm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    out = []
    for r in roots:
        if a < r < b and not any(abs(r - o) < 1e-9 * (b - a) for o in out):
            out.append(r)
    return out


def bky_nonstationary_check(integrand: OscillatoryIntegrand, R: float, A: float,
                            samples: int = 4001) -> float:
    """Bound ``T ((Q R / sqrt(Y))^-A + (R U)^-A)`` for a phase with ``|phi'| >= R``.

    Raises
    ------
    ValueError
        If sampling finds ``|phi'| < R`` somewhere on the support.
    """
    a, b = integrand.support
    t = np.linspace(a, b, samples)
    low = float(np.min(np.abs(integrand.phase_derivative(t))))
    if low < R * (1 - 1e-9):
        raise ValueError(f"|phi'| drops to {low:.6g} < R = {R}")
    I = integrand
    return float(I.T * ((I.Q * R / math.sqrt(I.Y)) ** (-A) + (R * I.U) ** (-A)))


@lru_cache(maxsize=64)
def _central_weights(order: int, accuracy: int) -> tuple:
    """Exact central finite-difference weights (Fornberg) on integer offsets."""
    half = (order + 1) // 2 - 1 + (accuracy + 1) // 2 + 1
    offsets = list(range(-half, half + 1))
    n = len(offsets)
    c = [[Fraction(0)] * (order + 1) for _ in range(n)]
    c[0][0] = Fraction(1)
    c1 = Fraction(1)
    for i in range(1, n):
        c2 = Fraction(1)
        for j in range(i):
            c3 = Fraction(offsets[i] - offsets[j])
            c2 *= c3
            for k in range(min(i, order), -1, -1):
                prev = c[i - 1][k - 1] if k else 0
                c[i][k] = c1 * (k * prev - offsets[i - 1] * c[i - 1][k]) / c2
            for k in range(min(i, order), -1, -1):
                prev = c[j][k - 1] if k else 0
                c[j][k] = (offsets[i] * c[j][k] - k * prev) / c3
        c1 = c2
    return tuple(offsets), tuple(float(c[i][order]) for i in range(n))


def _derivative(fn: Callable, t0: float, order: int, step: float, accuracy: int = 8) -> complex:
    if order == 0:
        return complex(fn(np.array([t0]))[0])
    offsets, weights = _central_weights(order, accuracy)
    pts = t0 + step * np.asarray(offsets, dtype=float)
    vals = np.asarray(fn(pts), dtype=complex)
    return complex(np.dot(weights, vals) / step**order)


def _p_terms(integrand, t0, phi0, phi2, jmax, step):
    def G(t):
        t = np.asarray(t, dtype=float)
        H = integrand.phi(t) - phi0 - 0.5 * phi2 * (t - t0) ** 2
        return integrand.omega(t) * _e(H)

    sign8 = _e(np.sign(phi2) / 8)
    coeff = 1j / (4 * np.pi * phi2)
    return [complex(sign8 * coeff**j / math.factorial(j) * _derivative(G, t0, 2 * j, step))
            for j in range(jmax + 1)]


def bky_stationary_phase(integrand: OscillatoryIntegrand, t0: float | None = None,
                         jmax: int = 0, step_fraction: float = 0.05,
                         halvings: int = 7) -> StationaryPhaseResult:
    """Stationary-phase expansion around the unique critical point.

    ``e(phi(t0)) / sqrt|phi''(t0)| * sum_{j <= jmax} p_j`` with
    ``p_j = e(sgn(phi'')/8) / j! * (i / (4 pi phi''(t0)))^j G^(2j)(t0)`` and
    ``G(t) = omega(t) e(phi(t) - phi(t0) - phi''(t0)(t - t0)^2 / 2)``.
    Derivatives of ``G`` are eighth-order central differences. The step runs
    over ``step_fraction * width * 2^-k``, ``k < halvings``, and for each
    ``p_j`` the step where consecutive estimates agree best is kept; that
    disagreement is its differencing error. The error budget is twice the
    size of the next two terms plus twice the differencing errors.

    Raises
    ------
    NoStationaryPoint, MultipleStationaryPoints
    """
    if not 0 <= jmax <= 4:
        raise ValueError("jmax must be between 0 and 4")
    roots = find_stationary_points(integrand)
    if t0 is None:
        if not roots:
            raise NoStationaryPoint("phi' has no zero in the support")
        if len(roots) > 1:
            raise MultipleStationaryPoints(f"phi' vanishes at {roots}")
        t0 = roots[0]
    else:
        if len(roots) > 1:
            raise MultipleStationaryPoints(f"phi' vanishes at {roots}")
        if abs(float(integrand.phase_derivative(t0))) > 1e-6 * max(1.0, integrand.Y):
            raise NoStationaryPoint(f"phi'({t0}) is not zero")
    t0 = float(t0)
    phi0 = float(integrand.phi(np.array([t0]))[0])
    phi2 = float(integrand.phase_second_derivative(t0))
    if phi2 == 0:
        raise NoStationaryPoint("degenerate critical point (phi'' = 0)")
    width = integrand.support[1] - integrand.support[0]
    extra = min(jmax + 2, 6)
    ladder = np.array([_p_terms(integrand, t0, phi0, phi2, extra,
                                step_fraction * width * 2.0**-k)
                       for k in range(halvings)])          # (step, j)
    gaps = np.abs(np.diff(ladder, axis=0))
    best = np.argmin(gaps, axis=0)
    cols = np.arange(ladder.shape[1])
    terms = ladder[best + 1, cols]
    fd = gaps[best, cols]
    scale = _e(phi0) / math.sqrt(abs(phi2))
    contrib = [complex(scale * p) for p in terms]
    value = sum(contrib[: jmax + 1])
    fd_err = abs(scale) * float(np.sum(fd[: jmax + 1]))
    tail = sum(abs(c) for c in contrib[jmax + 1:])
    budget = 2.0 * tail + 2.0 * fd_err + 1e-12 * abs(value)
    return StationaryPhaseResult(value=complex(value), main_term=contrib[0],
                                 correction_terms=tuple(contrib[1: jmax + 1]),
                                 error_budget=float(budget), t0=t0)


# ------------------------------------------------------- analytic tails

def power_exp_tail(kappa: float, beta: complex, lower: float, tol: float = 1e-13) -> complex:
    """``int_lower^inf y^beta exp(i kappa y) dy`` for ``kappa != 0``, ``Re(beta) < 0``.

    The stretch up to twice the stationary point of ``kappa y + Im(beta) log y``
    is integrated on the real axis; beyond it the ray is rotated to
    ``y = Y + i sgn(kappa) tau`` where the integrand decays exponentially.
    """
    kappa = float(kappa)
    beta = complex(beta)
    if kappa == 0:
        if beta.real >= -1:
            raise ValueError("divergent power integral")
        return -lower ** (beta + 1) / (beta + 1)
    y_star = -beta.imag / kappa
    split = max(lower, 2 * y_star)
    total = 0j
    if split > lower:
        integ = OscillatoryIntegrand(
            omega=lambda y: y ** beta.real,
            phi=lambda y: (kappa * y + beta.imag * np.log(y)) / (2 * np.pi),
            dphi=lambda y: (kappa + beta.imag / y) / (2 * np.pi),
            support=(lower, split))
        total += osc_quadrature(integ, tol=tol * max(1.0, abs(split ** beta.real)),
                                osc_per_panel=1.0)
    sgn = 1.0 if kappa > 0 else -1.0
    rate = abs(kappa) - abs(beta.imag) / split
    rate = max(rate, 0.5 * abs(kappa))
    upper = 40.0 / rate
    x, w = _gauss_legendre(_GL_NODES)
    edges = np.concatenate([[0.0], upper * np.geomspace(1e-3, 1.0, 24)])
    mids = 0.5 * (edges[1:] + edges[:-1])[:, None]
    halves = 0.5 * np.diff(edges)[:, None]
    tau = mids + halves * x
    y = split + 1j * sgn * tau
    vals = np.exp(beta * np.log(y) + 1j * kappa * y) * (1j * sgn)
    total += complex(np.sum(vals * w * halves))
    return total


# ------------------------------------------------------------- transforms

def tilde_h1(u, config=None, tol: float = 1e-12):
    """``int_0^inf e(u (x + 1/x)) h1(x^2) dx / x^2`` by quadrature.

    Parameters
    ----------
    u : float or array of float
        Nonzero real.
    config : TestFunctionConfig, optional
    """
    cfg = config if config is not None else _default_cfg()
    h1 = cfg.h1
    lo, hi = h1.support
    a, b = math.sqrt(max(lo, 0.0)), math.sqrt(hi)
    scalar = np.ndim(u) == 0
    out = []
    for uu in np.atleast_1d(np.asarray(u, dtype=float)):
        if uu == 0:
            raise ValueError("tilde_h1 requires u != 0")
        integ = OscillatoryIntegrand(
            omega=lambda x: h1(x * x) / (x * x),
            phi=lambda x, uu=uu: uu * (x + 1 / x - 2),
            dphi=lambda x, uu=uu: uu * (1 - 1 / (x * x)),
            support=(a, b), Y=abs(uu))
        out.append(_e(2 * uu) * osc_quadrature(integ, tol=max(tol / math.sqrt(abs(uu) + 1), 1e-15)))
    out = np.array(out, dtype=complex)
    return complex(out[0]) if scalar else out


def hankel_coefficients(nu, kmax: int) -> np.ndarray:
    """``a_k(nu) = prod_{m=1}^k (4 nu^2 - (2m-1)^2) / (k! 8^k)`` for ``k <= kmax``."""
    nu = complex(nu)
    out = np.ones(kmax + 1, dtype=complex)
    for k in range(1, kmax + 1):
        out[k] = out[k - 1] * (4 * nu * nu - (2 * k - 1) ** 2) / (8 * k)
    return out


def tilde_h1_exact_coefficients(sign: int, kmax: int = 6) -> np.ndarray:
    """Asymptotic coefficients of ``tilde_h1`` from the Hankel expansion of ``H_1``.

    When ``h1 = 1`` near 1 the expansion depends only on that germ and matches
    ``-pi H^(1)_1(4 pi u)`` (``u > 0``), so ``c_{k,+} = i^k a_k(1) / (4 pi)^k``
    and ``c_{k,-} = conj(c_{k,+})``. Used as an independent check of the fit.
    """
    a = hankel_coefficients(1.0, kmax)
    k = np.arange(kmax + 1)
    c = (1j ** k) * a / (4 * np.pi) ** k
    return c if sign > 0 else np.conj(c)


def fit_tilde_h1_coefficients(us=(3200.0, 6400.0, 12800.0), nterms: int = 2,
                              sign: int = 1, config=None) -> np.ndarray:
    """Fit ``c_1..c_nterms`` of the ``tilde_h1`` expansion from quadrature values.

    ``sqrt(2|u|) tilde_h1(u) e(-2u - sgn/8) - 1`` is fitted by least squares
    to ``sum_j c_j |u|^-j``. Returns ``[1, c_1, ..., c_nterms]``.
    """
    us = np.asarray(us, dtype=float)
    u = sign * us
    vals = np.sqrt(2 * us) * tilde_h1(u, config, tol=1e-15) * _e(-2 * u - sign / 8) - 1
    A = us[:, None] ** -np.arange(1, nterms + 1)[None, :]
    # scale columns for conditioning
    scale = A.max(axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, vals, rcond=None)
    return np.concatenate([[1.0], coef / scale])


def generate_tilde_h1_coefficients(path: Path | str = _COEFF_FILE, nterms: int = 2) -> dict:
    """Fit coefficients for both signs and write them to ``path`` as JSON."""
    payload = {
        "description": "Asymptotic coefficients c_{j,sign} of tilde_h1(u) = "
                       "|2u|^{-1/2} e(2u + sgn(u)/8) sum_j c_{j,sgn(u)} |u|^{-j}",
        "method": "least-squares fit of quadrature values at "
                  "|u| in {3200, 6400, 12800}; c_0 = 1 fixed. Below |u| ~ 2000 "
                  "the shoulders of the default h1 still contribute (~1e-3 at 100, ~7e-10 at 800). "
                  "c_2 is limited to ~6% by double precision (c_2 / u^2 ~ 1e-11).",
        "generator": "hyperkloos.oscint.generate_tilde_h1_coefficients",
        "nterms": nterms,
    }
    for sign, key in ((1, "plus"), (-1, "minus")):
        c = fit_tilde_h1_coefficients(nterms=nterms, sign=sign)
        payload[key] = [[float(z.real), float(z.imag)] for z in c]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return payload


@lru_cache(maxsize=1)
def load_tilde_h1_coefficients() -> dict:
    """Stored fitted coefficients, keyed by sign ``+1``/``-1``."""
    data = json.loads(_COEFF_FILE.read_text())
    return {s: np.array([complex(*z) for z in data[k]])
            for s, k in ((1, "plus"), (-1, "minus"))}


def tilde_h1_asymptotic(u, nterms: int | None = None, coefficients: str = "fitted"):
    """Asymptotic series ``|2u|^{-1/2} e(2u + sgn/8) sum_j c_j |u|^-j``.

    ``coefficients`` is ``"fitted"`` (stored constants) or ``"hankel"``.
    """
    u = np.asarray(u, dtype=float)
    sign = np.sign(u)
    out = np.zeros(u.shape, dtype=complex)
    for s in (1, -1):
        mask = sign == s
        if not mask.any():
            continue
        if coefficients == "fitted":
            c = load_tilde_h1_coefficients()[s]
        elif coefficients == "hankel":
            c = tilde_h1_exact_coefficients(s, 8)
        else:
            raise ValueError("coefficients must be 'fitted' or 'hankel'")
        if nterms is not None:
            c = c[: nterms + 1]
        au = np.abs(u[mask])
        series = sum(cj * au ** (-j) for j, cj in enumerate(c))
        out[mask] = (2 * au) ** -0.5 * _e(2 * u[mask] + s / 8) * series
    return out if out.ndim else complex(out)


def hat_h2(xi, config=None, h2=None, tol: float = 1e-13):
    """One-sided Fourier transform ``int_0^inf e(-xi y) h2(y) dy``."""
    if h2 is None:
        h2 = (config if config is not None else _default_cfg()).h2
    b = h2.support[1]
    scalar = np.ndim(xi) == 0
    out = []
    for x in np.atleast_1d(np.asarray(xi, dtype=float)):
        integ = OscillatoryIntegrand(omega=h2, phi=lambda y, x=x: -x * y,
                                     dphi=lambda y, x=x: np.full_like(y, -x),
                                     support=(0.0, b))
        out.append(osc_quadrature(integ, tol=tol))
    out = np.array(out, dtype=complex)
    return complex(out[0]) if scalar else out


def hat_f(eps: int, s, f=None, config=None, tol: float = 1e-13):
    """Signed Mellin transform ``int_0^inf f(eps y) y^(s-1) dy``."""
    if eps not in (1, -1):
        raise ValueError("eps must be +1 or -1")
    if f is None:
        f = (config if config is not None else _default_cfg()).f
    lo, hi = f.support
    # support of y -> f(eps y) on the positive axis
    a, b = (lo, hi) if eps > 0 else (-hi, -lo)
    a = max(a, 0.0)
    scalar = np.ndim(s) == 0
    ss = np.atleast_1d(np.asarray(s, dtype=complex))
    if b <= a:
        out = np.zeros(ss.shape, dtype=complex)
        return complex(out[0]) if scalar else out
    if a <= 0:
        raise ValueError("f must be supported away from 0")
    out = []
    for sv in ss:
        sig, t = sv.real, sv.imag
        integ = OscillatoryIntegrand(
            omega=lambda y, sig=sig: f(eps * y) * y ** (sig - 1),
            phi=lambda y, t=t: t * np.log(y) / (2 * np.pi),
            dphi=lambda y, t=t: t / (2 * np.pi * y),
            support=(a, b))
        out.append(osc_quadrature(integ, tol=tol))
    out = np.array(out, dtype=complex)
    return complex(out[0]) if scalar else out


def _h2_window(h2) -> tuple:
    """``(y_lo, y_flat)``: ``h2(1/y) = 0`` below ``y_lo`` and ``= h2(0)`` above ``y_flat``."""
    b = h2.support[1]
    plateau = getattr(h2, "plateau", None)
    if plateau is None or not plateau[0] < 0 < plateau[1]:
        raise ValueError("h2 needs a plateau around 0 for the analytic tail")
    return 1.0 / b, 1.0 / min(plateau[1], -plateau[0])


def tilde_h2(eps: int, s, X: float, config=None, h2=None, tol: float = 1e-12):
    """``int_0^inf e(2 eps X y + eps/8) h2(1/y) y^-s dy / y``.

    The window where ``h2(1/y)`` varies is integrated numerically; beyond it
    ``h2(1/y) = h2(0)`` and :func:`power_exp_tail` is used.
    """
    if eps not in (1, -1):
        raise ValueError("eps must be +1 or -1")
    if h2 is None:
        h2 = (config if config is not None else _default_cfg()).h2
    y_lo, y_flat = _h2_window(h2)
    h20 = float(h2(np.array([0.0]))[0])
    scalar = np.ndim(s) == 0
    out = []
    for sv in np.atleast_1d(np.asarray(s, dtype=complex)):
        sig, t = sv.real, sv.imag
        integ = OscillatoryIntegrand(
            omega=lambda y, sig=sig: h2(1 / y) * y ** (-sig - 1),
            phi=lambda y, t=t: 2 * eps * X * y - t * np.log(y) / (2 * np.pi),
            dphi=lambda y, t=t: 2 * eps * X - t / (2 * np.pi * y),
            support=(y_lo, y_flat), carrier=2 * eps * X)
        body = osc_quadrature(integ, tol=tol, osc_per_panel=4.0)
        tail = h20 * power_exp_tail(4 * np.pi * eps * X, -sv - 1, y_flat, tol=tol)
        out.append(_e(eps / 8) * (body + tail))
    out = np.array(out, dtype=complex)
    return complex(out[0]) if scalar else out


def d_factor(nu, sign: int) -> complex:
    """``D_{nu, sign}``: ``(-sign i)^d`` for ``nu = d - 1``; ``e^{pi|t|/2} [sign = -sgn t]`` for ``nu = i t``."""
    nu = complex(nu)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if abs(nu.real) < 1e-14 and nu.imag != 0:
        t = nu.imag
        return complex(math.exp(math.pi * abs(t) / 2)) if sign == -np.sign(t) else 0j
    if abs(nu.imag) < 1e-14 and abs(nu.real - round(nu.real)) < 1e-14 and nu.real >= 1:
        d = int(round(nu.real)) + 1
        return complex((-sign * 1j) ** d)
    raise ValueError("D factor is defined for nu = d - 1 (d >= 2) or purely imaginary nu")


def H_0_asymptotic(eps: int, nu, X: float, config=None, h2=None) -> complex:
    """Leading term ``D_{nu,-eps} / (sqrt(8X) pi) hat_h2(eps nu^2 / (16 pi^2 X))``."""
    nu = complex(nu)
    xi = eps * (nu * nu).real / (16 * np.pi**2 * X)
    return d_factor(nu, -eps) / (math.sqrt(8 * X) * np.pi) * hat_h2(xi, config, h2)


def H_j(eps: int, nu, j: int, X: float, config=None, h2=None, tol: float = 1e-12,
        hankel_terms: int = 12) -> complex:
    """``int_0^inf e(2 eps X y + eps/8) h2(1/y) J_nu(4 pi X y) dy / y^(3/2 + j)``.

    ``J_nu = (H^(1)_nu + H^(2)_nu) / 2`` with the Hankel expansions, valid
    since ``4 pi X y >= 4 pi X y_lo`` is far beyond ``|nu|^2``. Each half is
    integrated over the window where ``h2(1/y)`` varies; on the remaining
    half-line the resonant half is a sum of powers and the other half uses
    :func:`power_exp_tail`.
    """
    if eps not in (1, -1):
        raise ValueError("eps must be +1 or -1")
    if h2 is None:
        h2 = (config if config is not None else _default_cfg()).h2
    nu = complex(nu)
    y_lo, y_flat = _h2_window(h2)
    h20 = float(h2(np.array([0.0]))[0])
    x_lo = 4 * np.pi * X * y_lo
    a = hankel_coefficients(nu, hankel_terms)
    if x_lo < max(30.0, 4 * abs(nu) ** 2):
        raise OutOfAsymptoticRange(
            f"4 pi X y_lo = {x_lo:.3g} is not beyond |nu|^2 = {abs(nu) ** 2:.3g}")
    total = 0j
    for branch in (1, -1):
        # H^(branch) ~ sqrt(2/(pi x)) e^{branch i (x - nu pi/2 - pi/4)} sum (branch i)^k a_k / x^k
        const = 0.5 * math.sqrt(2 / np.pi) * np.exp(branch * 1j * (-nu * np.pi / 2 - np.pi / 4))
        coef = np.array([(branch * 1j) ** k * a[k] for k in range(a.size)])
        freq = 2 * eps * X + branch * 2 * X          # cycles per unit y
        xs = 4 * np.pi * X

        def amp(y, coef=coef, const=const):
            x = xs * y
            series = np.zeros_like(y, dtype=complex)
            for k in range(coef.size - 1, -1, -1):
                series = series / x + coef[k]
            return const * x ** -0.5 * series * y ** (-1.5 - j)

        integ = OscillatoryIntegrand(
            omega=lambda y, amp=amp: h2(1 / y) * amp(y),
            phi=lambda y, freq=freq: freq * y,
            dphi=lambda y, freq=freq: np.full_like(y, freq),
            support=(y_lo, y_flat), carrier=freq if freq else None)
        body = osc_quadrature(integ, tol=tol, osc_per_panel=4.0)
        tail = 0j
        for k in range(coef.size):
            pk = const * coef[k] * xs ** (-0.5 - k)
            beta = -2.0 - j - k
            if freq == 0:
                tail += pk * (-(y_flat ** (beta + 1)) / (beta + 1))
            else:
                tail += pk * power_exp_tail(2 * np.pi * freq, beta, y_flat, tol=tol)
        total += body + h20 * tail
    return complex(_e(eps / 8) * total)
