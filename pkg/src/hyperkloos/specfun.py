"""Complex gamma/beta helpers and Bessel functions of complex order.

Bessel functions of complex order ``nu = sigma + i t`` grow like
``exp(pi |t| / 2)``. The ``scaled`` variants return ``J_nu(x) exp(-pi |t|/2)``
so that callers can carry the exponential factor in log form.

J is computed by three branches:

* the power series when ``x <= 10``;
* the Hankel asymptotic expansion when ``x >= max(30, |nu|^2)``;
* otherwise, integration of Bessel's equation from ``x = 10`` (series start
  values) with an 8th-order Runge-Kutta method, vectorized over all orders.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.integrate import solve_ivp

from .errors import PoleError

__all__ = [
    "log_gamma",
    "gamma_c",
    "rgamma_c",
    "beta_c",
    "log_q_factor",
    "q_factor",
    "log_sin_pi",
    "bessel_j",
    "bessel_j_scaled",
    "bessel_j_prime",
    "bessel_y",
    "bessel_j_dnu",
    "jit_first_term",
    "jit_emot_first_term",
    "jdm1_first_term",
    "y0_large_arg",
    "BoundCertificate",
    "certify_jsigmait",
    "certify_phraglind",
    "certify_dnu_bound",
    "certify_series_tail",
]

_POLE_TOL = 1e-14


def _check_pole(z, what="gamma"):
    z = np.asarray(z, dtype=complex)
    bad = (np.abs(z.imag) <= _POLE_TOL) & (z.real <= _POLE_TOL) & (
        np.abs(z.real - np.round(z.real)) <= _POLE_TOL)
    if np.any(bad):
        arg = complex(z[bad].ravel()[0]) if z.ndim else complex(z)
        raise PoleError(f"{what} pole at argument {arg}", argument=arg)


def log_gamma(z):
    """Principal-branch ``log Gamma(z)`` for complex ``z``.

    Raises
    ------
    PoleError
        At nonpositive integers.
    """
    _check_pole(z)
    return special.loggamma(np.asarray(z, dtype=complex))


def gamma_c(z):
    """Complex gamma function ``Gamma(z)``.

    Evaluated as ``exp(loggamma(z))``, so the result carries relative error of
    order ``eps * |log Gamma(z)|``.
    """
    out = np.exp(log_gamma(z))
    return out[()] if np.ndim(out) == 0 else out


def rgamma_c(z):
    """Entire reciprocal gamma function ``1/Gamma(z)`` (zero at poles)."""
    out = special.rgamma(np.asarray(z, dtype=complex))
    return out[()] if np.ndim(out) == 0 else out


def beta_c(a, b):
    """``Gamma(a) Gamma(b) / Gamma(a + b)`` via log-gamma."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_pole(a)
    _check_pole(b)
    out = np.exp(special.loggamma(a) + special.loggamma(b) - special.loggamma(a + b))
    out = np.where(np.isfinite(special.rgamma(a + b)) & (special.rgamma(a + b) == 0), 0, out)
    return out[()] if np.ndim(out) == 0 else out


def log_q_factor(d, s):
    """``log Q(d, s)`` with ``Q(d, s) = Gamma((d-1)/2 + s) / Gamma((d+1)/2 - s)``.

    Raises
    ------
    PoleError
        When the numerator argument is a nonpositive integer.
    """
    s = np.asarray(s, dtype=complex)
    num = (d - 1) / 2 + s
    den = (d + 1) / 2 - s
    _check_pole(num, "Q-factor numerator")
    lden = special.loggamma(den)
    return special.loggamma(num) - lden


def q_factor(d, s):
    """``Q(d, s) = Gamma((d-1)/2 + s) / Gamma((d+1)/2 - s)``.

    Evaluated from a log-gamma difference, so it stays finite for ``d`` up to
    at least ``1e4``. A pole of the denominator gives zero.
    """
    s = np.asarray(s, dtype=complex)
    num = (d - 1) / 2 + s
    den = (d + 1) / 2 - s
    _check_pole(num, "Q-factor numerator")
    # 1/Gamma(den) vanishes at the poles of the denominator
    den_pole = (np.abs(den.imag) <= _POLE_TOL) & (den.real <= _POLE_TOL) & (
        np.abs(den.real - np.round(den.real)) <= _POLE_TOL)
    safe_den = np.where(den_pole, 0.5, den)
    out = np.exp(special.loggamma(num) - special.loggamma(safe_den))
    out = np.where(den_pole, 0, out)
    return out[()] if np.ndim(out) == 0 else out


def log_sin_pi(z):
    """``log sin(pi z)`` stable for large ``|Im z|`` (any branch of the log)."""
    z = np.asarray(z, dtype=complex)
    # sin(pi z) = (e^{i pi z} - e^{-i pi z}) / 2i; factor out the dominant exponential
    up = z.imag >= 0
    # for Im z >= 0 the term e^{-i pi z} dominates
    a = np.where(up, -1j * np.pi * z, 1j * np.pi * z)
    ratio = np.exp(np.where(up, 2j * np.pi * z, -2j * np.pi * z))
    sign = np.where(up, 1.0, -1.0)
    return a + np.log(sign * (ratio - 1) / 2j + 0j)


# ---------------------------------------------------------------- Bessel J

_SERIES_TERMS = 80
_ODE_START = 10.0


def _series_ok(nu, x):
    return np.asarray(x) <= _ODE_START


def _hankel_ok(nu, x):
    return x >= np.maximum(30.0, np.abs(nu) ** 2)


def _series_terms_scaled(nu, x, deriv=False):
    """Log-scale series terms of ``J_nu(x) e^{-pi|t|/2}`` (and of d/dnu)."""
    nu = np.asarray(nu, dtype=complex)[..., None]
    x = np.asarray(x, dtype=float)[..., None]
    k = np.arange(_SERIES_TERMS)
    arg = k + nu + 1
    pole = (np.abs(arg.imag) <= _POLE_TOL) & (arg.real <= _POLE_TOL) & (
        np.abs(arg.real - np.round(arg.real)) <= _POLE_TOL)
    safe = np.where(pole, 0.5, arg)
    logt = ((nu + 2 * k) * np.log(x / 2) - special.gammaln(k + 1) - special.loggamma(safe)
            - np.pi * np.abs(nu.imag) / 2)
    terms = np.where(pole, 0, (-1.0) ** k * np.exp(logt))
    if not deriv:
        return terms
    dterms = terms * (np.log(x / 2) - special.psi(safe))
    # at a pole of Gamma(k+nu+1) = Gamma(-m), d/dnu 1/Gamma = (-1)^m m!
    if np.any(pole):
        m = np.round(-arg.real).astype(int)
        lim = (-1.0) ** m * special.factorial(np.maximum(m, 0))
        pole_term = (-1.0) ** k * np.exp((nu + 2 * k) * np.log(x / 2) - special.gammaln(k + 1)
                                        - np.pi * np.abs(nu.imag) / 2) * lim
        dterms = np.where(pole, pole_term, dterms)
    return dterms


def _series_scaled(nu, x):
    return _series_terms_scaled(nu, x).sum(axis=-1)


def _hankel_pq(nu, x, nterms=60):
    """Hankel P, Q sums for large x (stopping at the smallest term)."""
    nu = np.asarray(nu, dtype=complex)
    x = np.asarray(x, dtype=float)
    mu4 = 4 * nu * nu
    P = np.ones(np.broadcast(nu, x).shape, dtype=complex)
    Q = np.zeros_like(P)
    term = np.ones_like(P)
    last = np.full(P.shape, np.inf)
    active = np.ones(P.shape, dtype=bool)
    for k in range(1, nterms):
        term = term * (mu4 - (2 * k - 1) ** 2) / (k * 8 * x)
        mag = np.abs(term)
        active &= mag < last
        active &= mag > 1e-18 * np.abs(P)
        if not active.any():
            break
        last = np.where(active, mag, last)
        # a_k / x^k with sign (-1)^{floor(k/2)}
        sgn = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            P = np.where(active, P + sgn * term, P)
        else:
            Q = np.where(active, Q + sgn * term, Q)
    return P, Q


def _hankel_scaled(nu, x):
    nu = np.asarray(nu, dtype=complex)
    P, Q = _hankel_pq(nu, x)
    chi = x - nu * np.pi / 2 - np.pi / 4
    t = np.abs(nu.imag)
    # cos/sin(chi) carry e^{|Im chi|} = e^{pi |t|/2}; rescale
    scale = np.exp(-np.pi * t / 2)
    c = np.cos(chi) * scale
    s = np.sin(chi) * scale
    return np.sqrt(2 / (np.pi * x)) * (P * c - Q * s)


def _ode_scaled(nus, xs, rtol=1e-13):
    """Scaled J for every order in ``nus`` at every point of ``xs`` (>= 10)."""
    nus = np.asarray(nus, dtype=complex)
    xs = np.asarray(xs, dtype=float)
    out = np.empty((nus.size, xs.size), dtype=complex)
    x0 = _ODE_START
    at_start = xs <= x0
    if np.any(at_start):
        out[:, at_start] = _series_scaled(nus[:, None], xs[None, at_start])
    later = np.flatnonzero(~at_start)
    if later.size == 0:
        return out
    j0 = _series_scaled(nus, x0)
    # J' = (J_{nu-1} - J_{nu+1}) / 2, same scale factor
    jm = _series_scaled(nus - 1, x0)
    jp = _series_scaled(nus + 1, x0)
    dj0 = (jm - jp) / 2
    n = nus.size
    nu2 = nus * nus

    def rhs(x, y):
        j = y[:n]
        dj = y[n:]
        return np.concatenate([dj, -dj / x - (1 - nu2 / (x * x)) * j])

    order = np.argsort(xs[later])
    targets = xs[later][order]
    sol = solve_ivp(rhs, (x0, targets[-1]), np.concatenate([j0, dj0]), method="DOP853",
                    t_eval=targets, rtol=rtol, atol=1e-300)
    if not sol.success:
        raise RuntimeError(f"Bessel ODE integration failed: {sol.message}")
    vals = sol.y[:n]
    out[:, later[order]] = vals
    return out


def _ode_backward_scaled(nus, xs, rtol=1e-13):
    """Scaled ``J`` for every order in ``nus`` at every point of ``xs``, integrating
    down from a common start in the Hankel region of all orders."""
    nus = np.asarray(nus, dtype=complex)
    xs = np.asarray(xs, dtype=float)
    x0 = max(30.0, (float(np.max(np.abs(nus))) + 1) ** 2)
    j0 = _hankel_scaled(nus, x0)
    dj0 = (_hankel_scaled(nus - 1, x0) - _hankel_scaled(nus + 1, x0)) / 2
    n = nus.size
    nu2 = nus * nus

    def rhs(x, y):
        j = y[:n]
        dj = y[n:]
        return np.concatenate([dj, -dj / x - (1 - nu2 / (x * x)) * j])

    targets = np.sort(xs)[::-1]
    sol = solve_ivp(rhs, (x0, targets[-1]), np.concatenate([j0, dj0]), method="DOP853",
                    t_eval=targets, rtol=rtol, atol=1e-300)
    if not sol.success:
        raise RuntimeError(f"Bessel ODE integration failed: {sol.message}")
    out = np.empty((n, xs.size), dtype=complex)
    out[:, np.argsort(xs)[::-1]] = sol.y[:n]
    return out


def bessel_j_scaled(nu, x):
    """``J_nu(x) exp(-pi |Im nu| / 2)`` for complex ``nu`` and real ``x > 0``.

    Broadcasts over ``nu`` and ``x``.
    """
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, dtype=complex), np.asarray(x, dtype=float))
    if np.any(x_b <= 0):
        raise ValueError("bessel_j requires x > 0")
    nu_f = nu_b.ravel()
    x_f = x_b.ravel()
    out = np.empty(nu_f.shape, dtype=complex)
    ser = _series_ok(nu_f, x_f)
    han = ~ser & _hankel_ok(nu_f, x_f)
    ode = ~ser & ~han
    if ser.any():
        out[ser] = _series_scaled(nu_f[ser], x_f[ser])
    if han.any():
        out[han] = _hankel_scaled(nu_f[han], x_f[han])
    # for Re nu < 0, J_nu decays like x^nu across x < |nu|, so forward
    # integration amplifies the other solution by about (|nu|/10)^(2|Re nu|);
    # past Re nu = -2 integrate down from the Hankel region instead
    back = ode & (nu_f.real < -2)
    for part, solver in ((ode & ~back, _ode_scaled), (back, _ode_backward_scaled)):
        if part.any():
            idx = np.flatnonzero(part)
            unus, inu = np.unique(nu_f[idx], return_inverse=True)
            uxs, ix = np.unique(x_f[idx], return_inverse=True)
            table = solver(unus, uxs)
            out[idx] = table[inu, ix]
    out = out.reshape(nu_b.shape)
    return out[()] if out.ndim == 0 else out


def bessel_j(nu, x):
    """Bessel function ``J_nu(x)`` of complex order and positive argument.

    Parameters
    ----------
    nu : complex or array_like
    x : float or array_like
        Positive arguments; broadcast against ``nu``.

    Returns
    -------
    complex or ndarray
    """
    nu = np.asarray(nu, dtype=complex)
    out = bessel_j_scaled(nu, x) * np.exp(np.pi * np.abs(nu.imag) / 2)
    return out[()] if np.ndim(out) == 0 else out


def bessel_j_prime(nu, x):
    """``d/dx J_nu(x) = (J_{nu-1}(x) - J_{nu+1}(x)) / 2``."""
    nu = np.asarray(nu, dtype=complex)
    return (bessel_j(nu - 1, x) - bessel_j(nu + 1, x)) / 2


def _near_integer(nu, tol):
    return np.abs(nu - np.round(nu.real)) < tol


def _cauchy_average(fn, nu, radius, npts=32, power=0):
    """Cauchy integral over a circle of radius ``radius`` around ``nu``.

    ``power=0`` gives ``fn(nu)``; ``power=1`` gives ``fn'(nu)``.
    """
    nu = np.asarray(nu, dtype=complex)
    w = np.exp(2j * np.pi * (np.arange(npts) + 0.5) / npts)
    pts = nu[..., None] + radius * w
    vals = fn(pts)
    return np.mean(vals * w ** (-power), axis=-1) / radius**power


def _y_from_j(nu, x):
    nu = np.asarray(nu, dtype=complex)
    return (bessel_j(nu, x) * np.cos(nu * np.pi) - bessel_j(-nu, x)) / np.sin(nu * np.pi)


def bessel_y(nu, x):
    """Bessel function ``Y_nu(x)`` of complex order.

    Real orders use ``scipy.special.yv``. Complex non-integer orders use
    ``(J_nu cos(nu pi) - J_{-nu}) / sin(nu pi)``; within 0.05 of an integer
    the same expression is averaged over a surrounding circle (Cauchy formula).
    """
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, dtype=complex), np.asarray(x, dtype=float))
    out = np.empty(nu_b.shape, dtype=complex)
    real = nu_b.imag == 0
    if real.any():
        out[real] = special.yv(nu_b[real].real, x_b[real])
    cplx = ~real
    near = cplx & _near_integer(nu_b, 0.05)
    far = cplx & ~near
    if far.any():
        out[far] = _y_from_j(nu_b[far], x_b[far])
    if near.any():
        xs = x_b[near]
        out[near] = _cauchy_average(lambda p: _y_from_j(p, xs[:, None]), nu_b[near], 0.25)
    return out[()] if out.ndim == 0 else out


def _dnu_series(nu, x):
    nu = np.asarray(nu, dtype=complex)
    return (_series_terms_scaled(nu, x, deriv=True).sum(axis=-1)
            * np.exp(np.pi * np.abs(nu.imag) / 2))


def _dnu_cauchy(nu, x, radius=0.5, npts=32):
    nu = np.asarray(nu, dtype=complex)
    xs = np.asarray(x, dtype=float)
    return _cauchy_average(lambda p: bessel_j(p, xs[..., None]), nu, radius, npts, power=1)


def _tail_integrals(nu, x, upper=None):
    """``int_x^inf J Y dt/t`` and ``int_x^inf J^2 dt/t`` for one order."""
    upper = max(4 * x, 400.0) if upper is None else upper
    # composite Gauss-Legendre on unit-length panels
    nodes, weights = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(x, upper, int(np.ceil(upper - x)) + 1)
    a, b = edges[:-1, None], edges[1:, None]
    t = ((b - a) / 2 * nodes + (a + b) / 2).ravel()
    w = ((b - a) / 2 * weights).ravel()
    j = bessel_j(nu, t)
    y = bessel_y(nu, t)
    jy = np.sum(w * j * y / t)
    jj = np.sum(w * j * j / t)
    # tail beyond `upper` from the leading Hankel terms:
    # J^2 ~ (1 + sin(2t - nu pi)) / (pi t), J Y ~ -cos(2t - nu pi) / (pi t)
    ph = 2 * upper - nu * np.pi
    jj += 1 / (np.pi * upper) + np.cos(ph) / (2 * np.pi * upper**2)
    jy += np.sin(ph) / (2 * np.pi * upper**2)
    return jy, jj


def _dnu_dunster(nu, x):
    nu = complex(nu)
    y = complex(bessel_y(nu, x))
    if nu == 0:
        return np.pi / 2 * y
    j = complex(bessel_j(nu, x))
    jy, jj = _tail_integrals(nu, float(x))
    return np.pi / 2 * y + np.pi * nu * (j * jy - y * jj)


def bessel_j_dnu(nu, x, method: str = "auto"):
    """Order derivative ``d/dnu J_nu(x)``.

    Parameters
    ----------
    nu : complex or array_like
    x : float or array_like
    method : {"auto", "series", "dunster", "cauchy", "fd"}
        ``series`` differentiates the power series term by term, ``dunster``
        uses the integral formula with tail integrals of ``J Y`` and ``J^2``,
        ``cauchy`` averages ``J`` over a circle in the order variable, ``fd``
        is a central difference with step ``1e-5``. ``auto`` picks ``series``
        where the power series converges without cancellation, ``dunster`` for
        ``|Im nu| <= 2`` and ``cauchy`` otherwise.
    """
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, dtype=complex), np.asarray(x, dtype=float))
    if method == "series":
        out = _dnu_series(nu_b, x_b)
    elif method == "cauchy":
        out = _dnu_cauchy(nu_b, x_b)
    elif method == "fd":
        h = 1e-5
        out = (bessel_j(nu_b + h, x_b) - bessel_j(nu_b - h, x_b)) / (2 * h)
    elif method == "dunster":
        out = np.vectorize(_dnu_dunster, otypes=[complex])(nu_b, x_b)
    elif method == "auto":
        out = np.empty(nu_b.shape, dtype=complex)
        ser = (x_b <= _ODE_START) | (x_b < np.abs(nu_b.imag) ** (1 / 3))
        dun = ~ser & (np.abs(nu_b.imag) <= 2)
        cau = ~ser & ~dun
        if ser.any():
            out[ser] = _dnu_series(nu_b[ser], x_b[ser])
        if dun.any():
            out[dun] = np.vectorize(_dnu_dunster, otypes=[complex])(nu_b[dun], x_b[dun])
        if cau.any():
            out[cau] = _dnu_cauchy(nu_b[cau], x_b[cau])
    else:
        raise ValueError(f"unknown method {method!r}")
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------- leading-order formulas

def jit_emot_first_term(t, x):
    """Leading term of the uniform expansion of ``J_{it}(x)``, ``t != 0``.

    ``(2 pi)^(-1/2) (x^2+t^2)^(-1/4) e^(pi|t|/2) exp(i sgn(t) (sqrt(x^2+t^2) - |t| asinh(|t|/x) - pi/4))``.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    at = np.abs(t)
    phase = np.sqrt(t * t + x * x) - at * np.arcsinh(at / x) - np.pi / 4
    return ((x * x + t * t) ** -0.25 / np.sqrt(2 * np.pi) * np.exp(np.pi * at / 2)
            * np.exp(1j * np.sign(t) * phase))


def jit_first_term(t, x):
    """Large-``x`` leading term of ``J_{it}(x)`` for ``|t| << x^{1/2}``.

    ``(2 pi x)^(-1/2) e^(pi|t|/2) exp(i sgn(t) (x - t^2/(2x) - pi/4))``.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    return (np.exp(np.pi * np.abs(t) / 2) / np.sqrt(2 * np.pi * x)
            * np.exp(1j * np.sign(t) * (x - t * t / (2 * x) - np.pi / 4)))


def jdm1_first_term(d, x):
    """Leading term of ``J_{d-1}(x)`` for ``d << x^{1/2}``."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(2 / (np.pi * x)) * np.cos(x + (d - 1) ** 2 / (2 * x) - np.pi * d / 2 + np.pi / 4)


def y0_large_arg(x):
    """Leading large-argument term ``sqrt(2/(pi x)) sin(x - pi/4)`` of ``Y_0(x)``."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(2 / (np.pi * x)) * np.sin(x - np.pi / 4)


# ------------------------------------------------------------ certificates

@dataclass(frozen=True)
class BoundCertificate:
    """Empirical check of an inequality ``|quantity| <= constant * bound``.

    Attributes
    ----------
    bound_name : str
    grid : ndarray
        Evaluation points, one row per point.
    ratios : ndarray
        ``|quantity| / bound`` at each grid point.
    constant : float
        Declared constant; ``inf`` when only the empirical constant is recorded.
    """

    bound_name: str
    grid: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)
    constant: float = np.inf

    @property
    def worst_ratio(self) -> float:
        return float(np.max(self.ratios))

    @property
    def worst_point(self) -> np.ndarray:
        return self.grid[int(np.argmax(self.ratios))]

    @property
    def passes(self) -> bool:
        return bool(np.all(np.isfinite(self.ratios))) and self.worst_ratio <= self.constant


def certify_jsigmait(x_range=(1.0, 50.0), n: int = 50, constant: float = 2.0) -> BoundCertificate:
    """``|J_{sigma+it}(x)| sqrt(x) e^{-pi|t|/2} <= constant`` for ``-1 <= sigma < x/2``, ``|t| < x``.

    An ``n^3`` tensor grid in ``(sigma, t, x)`` is filtered to the region.
    """
    xs = np.linspace(*x_range, n)
    xmax = xs[-1]
    sig = np.linspace(-1.0, xmax / 2, n, endpoint=False)
    ts = np.linspace(-xmax, xmax, n + 2)[1:-1]
    S, T, X = np.meshgrid(sig, ts, xs, indexing="ij")
    keep = (S < X / 2) & (np.abs(T) < X)
    S, T, X = S[keep], T[keep], X[keep]
    vals = np.abs(bessel_j_scaled(S + 1j * T, X)) * np.sqrt(X)
    grid = np.column_stack([S, T, X])
    return BoundCertificate("J_{sigma+it}(x) << x^{-1/2} e^{pi|t|/2}", grid, vals, constant)


def certify_phraglind(n_sigma=11, n_t=41, n_x=60, constant: float = np.inf) -> BoundCertificate:
    """``|J_{sigma+it}(x)| (1+|x^2-sigma^2+t^2|+sigma|t|)^{1/4} e^{-pi|t|/2}`` on
    ``sigma in [0,10]``, ``t in [-20,20]``, ``x in [0.1,100]``."""
    sig = np.linspace(0, 10, n_sigma)
    ts = np.linspace(-20, 20, n_t)
    xs = np.geomspace(0.1, 100, n_x)
    S, T, X = np.meshgrid(sig, ts, xs, indexing="ij")
    S, T, X = S.ravel(), T.ravel(), X.ravel()
    weight = (1 + np.abs(X**2 - S**2 + T**2) + S * np.abs(T)) ** 0.25
    vals = np.abs(bessel_j_scaled(S + 1j * T, X)) * weight
    return BoundCertificate("J_{sigma+it}(x) << (1+|x^2-sigma^2+t^2|+sigma|t|)^{-1/4} e^{pi|t|/2}",
                            np.column_stack([S, T, X]), vals, constant)


def certify_dnu_bound(n_x=40, n_t=31, exponent=0.1, constant: float = np.inf) -> BoundCertificate:
    """``|dJ/dnu|_{nu=it} (1+x^2+t^2)^{1/4} e^{-pi t/2} / (x+1/x+|t|)^exponent``
    on ``x in [0.5,100]``, ``t in [0,30]``."""
    xs = np.geomspace(0.5, 100, n_x)
    ts = np.linspace(0, 30, n_t)
    T, X = np.meshgrid(ts, xs, indexing="ij")
    T, X = T.ravel(), X.ravel()
    d = bessel_j_dnu(1j * T, X, method="cauchy")
    vals = (np.abs(d) * (1 + X**2 + T**2) ** 0.25 * np.exp(-np.pi * T / 2)
            / (X + 1 / X + T) ** exponent)
    return BoundCertificate("dJ/dnu << (x+1/x+|t|)^eps (1+x^2+t^2)^{-1/4} e^{pi t/2}",
                            np.column_stack([T, X]), vals, constant)


def certify_series_tail(ts=(10.0, 30.0, 100.0), n_z=40, N: int = 2,
                        constant: float = 10.0) -> BoundCertificate:
    """Tail of the ``N``-term power series of ``J_{it}(z)`` on ``0 < z < 2 t^{1/3}``
    measured against ``t^{-3/2} e^{pi t/2}``."""
    rows, ratios = [], []
    for t in ts:
        zs = np.linspace(0, 2 * t ** (1 / 3), n_z + 1)[1:]
        terms = _series_terms_scaled(np.full(zs.shape, 1j * t), zs)
        tail = np.abs(terms[:, N + 1:].sum(axis=-1))  # already scaled by e^{-pi t/2}
        ratios.append(tail / t**-1.5)
        rows.append(np.column_stack([np.full(zs.shape, t), zs]))
    return BoundCertificate("power-series tail <= 10 t^{-3/2} e^{pi t/2}",
                            np.vstack(rows), np.concatenate(ratios), constant)
