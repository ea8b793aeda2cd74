"""Mellin-Barnes kernels of the long-element GL(3) Bessel functions.

``hat_K_wl`` is the normalized Mellin transform of ``K^d_wl(y, mu)``:

* ``d = 0, 1``: ``(1/2 pi^2) cscmu^d(mu) sum_{w in W3} chi_d^w(v) G^{v1 v2}(s, mu^w)``
  over the even Weyl elements ``W3 = {I, w4, w5}``.
* ``d >= 2``: ``(1/4 pi^2) (-v1 v2)^d B^v(s, r) Q(d, s1 - r) Q(d, s2 + r)``.

All gamma and sine products are summed in log form, so exponentially large
factors cancel before anything is exponentiated. ``K_wl_numeric`` inverts
the transform by a double contour integral along vertical segments with
45 degree left bends.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import ContourError, MultipleWalls, PoleError, WallError
from .specfun import log_sin_pi
from .weylalg import SignPair, SpectralParameter, chi_d_w, weyl_act_mu, weyl_element, weyl_mul

__all__ = [
    "W3",
    "ContourSpec",
    "KernelValue",
    "default_contour",
    "cscmu_d",
    "G_vv",
    "hat_K_wl",
    "hat_K_residue",
    "residue_pole",
    "stirling_log_bound",
    "K_wl_numeric",
    "hat_K_wl_wall",
    "WALL_THRESHOLD",
    "WALL_STEP",
]

W3 = ("I", "w4", "w5")

WALL_THRESHOLD = 1e-3
WALL_STEP = 1e-3
_SINE_TOL = 1e-8
_POLE_TOL = 1e-12
_LOG_4PI2 = math.log(4 * math.pi**2)


@dataclass(frozen=True)
class ContourSpec:
    """Product contour for the two Mellin variables.

    Each ``s_i`` runs up the vertical segment ``Re s_i = sigma_i``,
    ``|Im s_i| <= height``. At ``|Im s_i| = height`` it steps horizontally
    by ``left_bend`` and continues on a 45 degree ray, ``Re s_i`` decreasing
    by one per unit of ``|Im s_i|``.

    Attributes
    ----------
    sigma : (float, float)
    height : float
        Half-length of the vertical segments.
    nodes : int
        Gauss-Legendre nodes per unit length.
    left_bend : float
        Horizontal offset (``<= 0``) where the rays start.
    tol : float
        Allowed truncation estimate relative to the peak integrand mass.
    max_ray : float
        Longest ray (in ``|Im s|`` beyond ``height``) before giving up.
    """

    sigma: tuple = (0.1, 0.1)
    height: float = 4.0
    nodes: int = 16
    left_bend: float = 0.0
    tol: float = 1e-12
    max_ray: float = 400.0

    def __post_init__(self):
        sig = tuple(float(x) for x in self.sigma)
        if len(sig) != 2:
            raise ValueError("sigma must be a pair")
        object.__setattr__(self, "sigma", sig)
        if not self.height > 0:
            raise ValueError("height must be positive")
        if int(self.nodes) < 8:
            raise ValueError("nodes must be at least 8")
        object.__setattr__(self, "nodes", int(self.nodes))
        if self.left_bend > 0:
            raise ValueError("left_bend must be <= 0")


@dataclass(frozen=True)
class KernelValue:
    """``value * exp(log_scale)``, with an optional error estimate."""

    value: complex
    log_scale: float = 0.0
    contour: ContourSpec | None = None
    error: float = 0.0

    def to_complex(self) -> complex:
        return complex(self.value * math.exp(self.log_scale))

    def __complex__(self):
        return self.to_complex()


def _pack(logv, contour=None, error=0.0) -> KernelValue:
    """Scalar complex log to a ``KernelValue``; the scale is only carried when needed."""
    logv = complex(logv)
    if not np.isfinite(logv.real):
        return KernelValue(0j, 0.0, contour, error)
    scale = logv.real if abs(logv.real) > 600 else 0.0
    return KernelValue(complex(np.exp(logv - scale)), scale, contour, error)


# ------------------------------------------------------------- log helpers

def _is_pole(z):
    z = np.asarray(z, dtype=complex)
    return (np.abs(z.imag) <= _POLE_TOL) & (z.real <= _POLE_TOL) & (
        np.abs(z.real - np.round(z.real)) <= _POLE_TOL)


def _lg(z):
    """``log Gamma(z)``; raises at poles."""
    z = np.asarray(z, dtype=complex)
    bad = _is_pole(z)
    if np.any(bad):
        arg = complex(z[bad].ravel()[0]) if z.ndim else complex(z)
        raise PoleError(f"gamma pole at argument {arg}", argument=arg)
    return special.loggamma(z)


def _lrg(z):
    """``log(1/Gamma(z))``, ``-inf`` at poles."""
    z = np.asarray(z, dtype=complex)
    bad = _is_pole(z)
    safe = np.where(bad, 0.5, z)
    return np.where(bad, -np.inf + 0j, -special.loggamma(safe))


def _lsin(z):
    """``log sin(pi z)``, ``-inf`` at zeros."""
    z = np.asarray(z, dtype=complex)
    zero = (np.abs(z.imag) <= _POLE_TOL) & (np.abs(z.real - np.round(z.real)) <= _POLE_TOL)
    safe = np.where(zero, 0.5, z)
    return np.where(zero, -np.inf + 0j, log_sin_pi(safe))


def _logsumexp(logs, weights=None):
    """``log sum_k w_k exp(logs_k)`` for complex logs stacked on axis 0."""
    logs = np.asarray(logs, dtype=complex)
    top = np.max(np.where(np.isfinite(logs.real), logs.real, -np.inf), axis=0)
    top = np.where(np.isfinite(top), top, 0.0)
    terms = np.exp(logs - top)
    if weights is not None:
        terms = terms * np.asarray(weights).reshape((-1,) + (1,) * (logs.ndim - 1))
    total = terms.sum(axis=0)
    with np.errstate(divide="ignore"):
        return top + np.log(total + 0j)


def _mu(mu) -> SpectralParameter:
    if isinstance(mu, SpectralParameter):
        return mu
    return SpectralParameter(tuple(mu))


def _r_of(mu: SpectralParameter) -> complex:
    return mu.r if mu.r is not None else -mu.mu[2] / 2


# --------------------------------------------------------------- cscmu, G

def _cscmu_sine_args(d: int, m) -> tuple:
    """Arguments ``a`` of the three ``sin(pi a)`` factors of ``1/cscmu^d``."""
    m1, m2, m3 = m
    return (0.5 * (m1 - m2), 0.5 * (d + m1 - m3), 0.5 * (d + m2 - m3))


def cscmu_d(d: int, mu) -> complex:
    """``cscmu^d(mu) = 1 / (8 sin(pi/2)(mu1-mu2) sin(pi/2)(d+mu1-mu3) sin(pi/2)(d+mu2-mu3))``.

    Raises
    ------
    WallError
        When a sine factor is within 1e-8 of zero.
    """
    mu = _mu(mu)
    return complex(np.exp(_log_cscmu(d, mu.mu)))


def _log_cscmu(d: int, m) -> complex:
    total = math.log(8.0) + 0j
    for a in _cscmu_sine_args(d, m):
        if abs(complex(a).imag) < 1 and abs(np.sin(np.pi * complex(a))) < _SINE_TOL:
            raise WallError(f"cscmu^{d} has a vanishing sine factor sin(pi * {complex(a)})")
        total += complex(log_sin_pi(a))
    return -total


def _log_G(v: SignPair, s1, s2, m):
    """Complex log of ``G^{v1 v2}(s, mu)`` on arrays ``s1, s2``."""
    m1, m2, m3 = m
    if (v.v1, v.v2) == (1, 1):
        return (_lg(s1 - m1) + _lg(s1 - m2) + _lg(s1 - m3)
                + _lg(s2 + m1) + _lg(s2 + m2) + _lg(s2 + m3)
                + _lrg(s1 + s2) - math.log(3 * math.pi**2)
                + _lsin(m1 - m2) + _lsin(m1 - m3) + _lsin(m2 - m3))
    if (v.v1, v.v2) == (1, -1):
        return (_lsin(m2 - m3) + _lg(s1 - m2) + _lg(s1 - m3) + _lg(s2 + m1)
                + _lg(1 - s1 - s2)
                + _lrg(1 - s1 + m1) + _lrg(1 - s2 - m2) + _lrg(1 - s2 - m3))
    if (v.v1, v.v2) == (-1, 1):
        return (_lsin(m1 - m2) + _lg(s1 - m3) + _lg(s2 + m1) + _lg(s2 + m2)
                + _lg(1 - s1 - s2)
                + _lrg(1 - s1 + m1) + _lrg(1 - s1 + m2) + _lrg(1 - s2 - m3))
    return (_lsin(m1 - m3) + _lg(s1 - m1) + _lg(s1 - m3) + _lg(s2 + m1) + _lg(s2 + m3)
            + _lrg(1 - s1 + m2) + _lrg(1 - s2 - m2) + _lrg(s1 + s2))


def G_vv(v, s, mu) -> KernelValue:
    """``G^{v1 v2}(s, mu)`` as a scaled value.

    Raises
    ------
    PoleError
        When a numerator gamma argument is a nonpositive integer.
    """
    v = SignPair.of(v)
    mu = _mu(mu)
    s1, s2 = (complex(x) for x in s)
    return _pack(_log_G(v, np.asarray(s1), np.asarray(s2), mu.mu))


# ---------------------------------------------------------------- kernels

def _log_B(v: SignPair, s1, s2, r):
    if (v.v1, v.v2) == (1, -1):
        a, b = s1 + 2 * r, 1 - s1 - s2
    elif (v.v1, v.v2) == (-1, 1):
        a, b = s2 - 2 * r, 1 - s1 - s2
    else:
        a, b = s1 + 2 * r, s2 - 2 * r
    return _lg(a) + _lg(b) + _lrg(a + b)


def _log_Q(d, s):
    return _lg((d - 1) / 2 + s) + _lrg((d + 1) / 2 - s)


def _check_walls(d: int, m):
    if d <= 1:
        for i, j in ((0, 1), (0, 2), (1, 2)):
            if abs(m[i] - m[j]) < WALL_THRESHOLD:
                raise WallError(f"|mu_{i + 1} - mu_{j + 1}| < {WALL_THRESHOLD}; use hat_K_wl_wall")


def _log_hat_K(d: int, v: SignPair, s1, s2, mu: SpectralParameter):
    """Complex log of the kernel on arrays; no wall checks."""
    s1 = np.asarray(s1, dtype=complex)
    s2 = np.asarray(s2, dtype=complex)
    if d >= 2:
        if (v.v1, v.v2) == (1, 1):
            return np.full(np.broadcast(s1, s2).shape, -np.inf + 0j)
        r = _r_of(mu)
        sign = (-v.v1 * v.v2) ** d
        out = (_log_B(v, s1, s2, r) + _log_Q(d, s1 - r) + _log_Q(d, s2 + r)
               - _LOG_4PI2)
        return out + (0j if sign > 0 else 1j * np.pi)
    logs = []
    weights = []
    for w in W3:
        logs.append(_log_G(v, s1, s2, weyl_act_mu(mu, w).mu))
        weights.append(chi_d_w(d, w, v))
    return _logsumexp(np.broadcast_arrays(*logs), weights) + _log_cscmu(d, mu.mu) - math.log(
        2 * math.pi**2)


def hat_K_wl(d: int, s, v, mu) -> KernelValue:
    """Mellin transform ``hat K^d_wl(s, v, mu)`` of the long-element Bessel function.

    For ``d >= 2`` only ``r`` is used (``mu.r``, or ``-mu_3/2``).

    Raises
    ------
    WallError
        For ``d = 0, 1`` when two coordinates of ``mu`` are within 1e-3.
    PoleError
    """
    v = SignPair.of(v)
    mu = _mu(mu)
    if d <= 1:
        _check_walls(d, mu.mu)
    s1, s2 = (complex(x) for x in s)
    return _pack(_log_hat_K(d, v, np.asarray(s1), np.asarray(s2), mu))


def residue_pole(d: int, mu, w="I") -> complex:
    """The ``s2`` pole used by :func:`hat_K_residue`: ``2r`` or ``-mu^w_1``."""
    mu = _mu(mu)
    if d >= 2:
        return 2 * _r_of(mu)
    return -weyl_act_mu(mu, w).mu[0]


def _G1_minus(s1, m) -> complex:
    m1, m2, m3 = m
    log = (_lg(s1 - m3) + _lrg(1 + m1 - m2) + _lrg(1 + m1 - m3) + _lrg(1 - s1 + m2))
    return complex(-np.exp(log) / (2 * np.pi))


def hat_K_residue(d: int, v, s1, mu, w="I", convention: str = "kernel") -> complex:
    """Residue of ``hat K^d_wl((-1, v2), (s1, s2), mu)`` in ``s2``.

    ``d >= 2``: at ``s2 = 2r`` the value is ``v2^d Q(d, q) Q(d, s1 - r) / 4 pi^2``.
    With ``convention="kernel"`` ``q = 3r``, the value of ``Q(d, s2 + r)``
    at the pole. ``convention="displayed"`` uses ``q = -r`` instead.

    ``d = 0, 1``: at ``s2 = -mu^w_1`` the value is
    ``sgn(w) cscmu^d(mu) (chi_d^w(v) G1(s1, mu^w) - chi_d^{w w3}(v) G1(s1, mu^{w w3}))``.
    """
    v = SignPair.of(v)
    if v.v1 != -1:
        raise ValueError("residues are taken for v1 = -1")
    mu = _mu(mu)
    s1 = complex(s1)
    if d >= 2:
        r = _r_of(mu)
        if convention == "kernel":
            q = 3 * r
        elif convention == "displayed":
            q = -r
        else:
            raise ValueError("convention must be 'kernel' or 'displayed'")
        log = _log_Q(d, q) + _log_Q(d, s1 - r)
        return complex(v.v2**d * np.exp(log) / (4 * np.pi**2))
    _check_walls(d, mu.mu)
    w = weyl_element(w)
    ww3 = weyl_mul(w, "w3")
    first = chi_d_w(d, w, v) * _G1_minus(s1, weyl_act_mu(mu, w).mu)
    second = chi_d_w(d, ww3, v) * _G1_minus(s1, weyl_act_mu(mu, ww3).mu)
    return complex(w.sign * cscmu_d(d, mu) * (first - second))


def stirling_log_bound(d: int, s, mu) -> float:
    """Log of the Stirling-type majorant of ``|hat K^d_wl|``.

    ``d = 0, 1``: ``|s1+s2|^(1/2-Re(s1+s2)) prod_i |s1-mu_i|^(Re(s1-mu_i)-1/2) |s2+mu_i|^(Re(s2+mu_i)-1/2)``.
    ``d >= 2``: the same shape in ``s1 + 2r``, ``s2 - 2r`` and the two ``Q`` factors.
    """
    s1, s2 = (complex(x) for x in s)
    mu = _mu(mu)

    def term(z, power):
        return power * math.log(max(abs(z), 1.0))

    out = term(s1 + s2, 0.5 - (s1 + s2).real)
    if d >= 2:
        r = _r_of(mu)
        out += term(s1 + 2 * r, (s1 + 2 * r).real - 0.5)
        out += term(s2 - 2 * r, (s2 - 2 * r).real - 0.5)
        out += (2 * (s1 - r).real - 1) * math.log(d + abs(s1 - r))
        out += (2 * (s2 + r).real - 1) * math.log(d + abs(s2 + r))
        return out
    for m in mu.mu:
        out += term(s1 - m, (s1 - m).real - 0.5)
        out += term(s2 + m, (s2 + m).real - 0.5)
    return out


# ------------------------------------------------------------------ walls

def hat_K_wl_wall(d: int, s, v, mu, h: float = WALL_STEP) -> KernelValue:
    """Kernel near a wall ``mu_i = mu_j`` by symmetric averaging.

    Returns ``(K(mu0 + h e) + K(mu0 - h e)) / 2`` with ``e = e_i - e_j`` and
    ``mu0`` the projection of ``mu`` onto the wall. This differs from the
    (entire) kernel at ``mu`` by ``O(h^2)``. The error field
    is the Richardson estimate ``|A(h) - A(h/2)| * 4/3``.

    Raises
    ------
    MultipleWalls
        If more than one pair is within the wall threshold.
    """
    if d not in (0, 1):
        raise ValueError("wall regularization applies to d = 0, 1")
    v = SignPair.of(v)
    mu = _mu(mu)
    m = np.array(mu.mu)
    close = [(i, j) for i, j in ((0, 1), (0, 2), (1, 2)) if abs(m[i] - m[j]) <= WALL_THRESHOLD]
    if len(close) > 1:
        raise MultipleWalls(f"pairs {close} are all within {WALL_THRESHOLD}")
    if not close:
        return hat_K_wl(d, s, v, mu)
    i, j = close[0]
    e = np.zeros(3)
    e[i], e[j] = 1.0, -1.0
    m = m - (m[i] - m[j]) / 2 * e
    s1, s2 = (np.asarray(complex(x)) for x in s)

    def average(step):
        logs = [_log_hat_K(d, v, s1, s2, SpectralParameter(tuple(m + sgn * step * e), mu.d))
                for sgn in (1, -1)]
        return _logsumexp(np.array(logs)) - math.log(2)

    coarse = average(h)
    fine = average(h / 2)
    err = abs(np.exp(coarse) - np.exp(fine)) * 4 / 3
    return _pack(coarse, error=float(err))


# ------------------------------------------------------- contour integral

def default_contour(d: int, mu, **kw) -> ContourSpec:
    """Contour with the vertical part clearing every pole height by 2."""
    mu = _mu(mu)
    heights = [abs(m.imag) for m in mu.mu]
    if d >= 2:
        heights.append(abs(2 * _r_of(mu).imag))
    kw.setdefault("height", 2.0 + max(heights))
    return ContourSpec(**kw)


def _singularities(d: int, mu: SpectralParameter, which: int, depth: int) -> np.ndarray:
    """Poles of the kernel in ``s_which`` coming from factors in that variable alone."""
    n = np.arange(depth)
    pts = []
    if d >= 2:
        r = _r_of(mu)
        half = (d - 1) / 2
        bases = (-2 * r, r - half) if which == 0 else (2 * r, -r - half)
    else:
        bases = tuple(m for m in mu.mu) if which == 0 else tuple(-m for m in mu.mu)
    for b in bases:
        pts.append(b - n)
    return np.concatenate(pts)


@lru_cache(maxsize=16)
def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


def _pieces(sigma, height, left_bend, ray):
    """Straight pieces ``(start, end)`` of one contour, bottom to top."""
    lo = complex(sigma + left_bend, -height)
    hi = complex(sigma + left_bend, height)
    out = [(lo - ray * (1 + 1j), lo)]
    if left_bend < 0:
        out.append((lo, complex(sigma, -height)))
    out.append((complex(sigma, -height), complex(sigma, height)))
    if left_bend < 0:
        out.append((complex(sigma, height), hi))
    out.append((hi, hi + ray * (-1 + 1j)))
    return out


def _path_nodes(sigma, height, left_bend, ray, nodes, poles):
    """Nodes ``s`` and weights ``ds`` on one contour, panels graded near poles."""
    x, w = _gl(nodes)
    pts, wts = [], []
    for a, b in _pieces(sigma, height, left_bend, ray):
        length = abs(b - a)
        if length == 0:
            continue
        grid = np.linspace(0.0, 1.0, max(1, int(math.ceil(length))) + 1)
        stack = list(zip(grid[:-1], grid[1:]))
        done = []
        while stack:
            t0, t1 = stack.pop()
            mid = a + (b - a) * (t0 + t1) / 2
            width = (t1 - t0) * length
            dist = np.min(np.abs(poles - mid)) if poles.size else np.inf
            if width > dist and width > 1e-6:
                tm = (t0 + t1) / 2
                stack.extend([(t0, tm), (tm, t1)])
            else:
                done.append((t0, t1))
        for t0, t1 in sorted(done):
            half = (t1 - t0) / 2
            t = (t0 + t1) / 2 + half * x
            pts.append(a + (b - a) * t)
            wts.append((b - a) * half * w)
    return np.concatenate(pts), np.concatenate(wts)


def _log_integrand(d, v, s1, s2, mu, ly1, ly2):
    return (1 - s1) * ly1 + (1 - s2) * ly2 + _log_hat_K(d, v, s1, s2, mu)


def _ray_length(d, v, mu, ly, contour, which, other_sigma):
    """Smallest ray length after which the slice integrand has dropped by e^-40."""
    sig = contour.sigma[which]
    start = complex(sig + contour.left_bend, contour.height)
    t = np.arange(0.0, contour.max_ray + 1.0, 1.0)
    ray = start + t * (-1 + 1j)
    fixed = np.full_like(ray, other_sigma)
    vals = []
    for z in (ray, np.conj(ray)):
        a, b = (z, fixed) if which == 0 else (fixed, z)
        vals.append(_log_integrand(d, v, a, b, mu, *ly).real)
    mag = np.maximum(*vals)
    peak = np.max(mag)
    below = np.flatnonzero((mag < peak - 40) & (np.arange(t.size) > 0))
    # the last point of a run of decay that never comes back up
    for k in below:
        if np.all(mag[k:] < peak - 40):
            return float(t[k]) + 2.0
    raise ContourError(f"integrand does not decay along the s{which + 1} ray "
                       f"within {contour.max_ray}")


def K_wl_numeric(d: int, y, mu, contour: ContourSpec | None = None,
                 return_error: bool = False):
    """Long-element Bessel function ``K^d_wl(y, mu)`` by double contour integration.

    ``int int |4 pi^2 y1|^(1-s1) |4 pi^2 y2|^(1-s2) hat K^d_wl(s, sgn y, mu) ds1 ds2 / (2 pi i)^2``.

    Parameters
    ----------
    d : int
    y : (float, float)
        Nonzero reals.
    mu : SpectralParameter
        Tempered.
    contour : ContourSpec, optional
        Defaults to :func:`default_contour`.
    return_error : bool
        Also return the truncation estimate.

    Raises
    ------
    ContourError
        If the integrand has not decayed at the ends of the rays.
    """
    y1, y2 = (float(t) for t in y)
    if y1 == 0 or y2 == 0:
        raise ValueError("y must have nonzero coordinates")
    mu = _mu(mu)
    if not mu.is_tempered:
        raise ValueError("K_wl_numeric is restricted to tempered mu")
    if d <= 1:
        _check_walls(d, mu.mu)
    v = SignPair(int(np.sign(y1)), int(np.sign(y2)))
    if d >= 2 and (v.v1, v.v2) == (1, 1):
        return (0j, 0.0) if return_error else 0j
    if contour is None:
        contour = default_contour(d, mu)
    ly = (math.log(4 * math.pi**2 * abs(y1)), math.log(4 * math.pi**2 * abs(y2)))
    rays = [_ray_length(d, v, mu, ly, contour, k, contour.sigma[1 - k]) for k in (0, 1)]
    depth = int(max(rays) + contour.height + 10)
    paths = [_path_nodes(contour.sigma[k], contour.height, contour.left_bend, rays[k],
                         contour.nodes, _singularities(d, mu, k, depth)) for k in (0, 1)]
    (p1, w1), (p2, w2) = paths
    total = 0j
    peak = -np.inf
    edge = -np.inf
    step = max(1, (1 << 21) // p2.size)
    for lo in range(0, p1.size, step):
        S1 = p1[lo:lo + step, None]
        L = _log_integrand(d, v, S1, p2[None, :], mu, *ly)
        L = L + np.log(w1[lo:lo + step, None] * w2[None, :])
        total += np.sum(np.exp(L))
        mag = L.real
        peak = max(peak, float(np.max(mag)))
        edge = max(edge, float(np.max(mag[:, [0, -1]])))
        if lo == 0 or lo + step >= p1.size:
            rows = [0] if lo == 0 else []
            if lo + step >= p1.size:
                rows.append(-1)
            edge = max(edge, float(np.max(mag[rows, :])))
    value = total / (2j * np.pi) ** 2
    err = math.exp(edge - peak) if np.isfinite(peak) else 0.0
    if err > contour.tol:
        raise ContourError(f"truncation estimate {err:.2e} exceeds tolerance {contour.tol:.1e}")
    value = complex(value)
    return (value, err * abs(value)) if return_error else value
