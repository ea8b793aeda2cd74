"""The test function F, its Weyl-cell transforms and Lie-algebra checks.

``F(g) = e(u1 + u2 + v1) f(C^3 t2 sqrt|t1|) h1(t1) h2(X z1 / sqrt|t1|) h3(v1) h3(v3)``
in the coordinates of :func:`hyperkloos.weylalg.bruhat_w5_decompose`, and
``F = 0`` where ``B1 A2 = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import BadIntervals, DegenerateCell
from .weylalg import WEYL, bruhat_w5_decompose

__all__ = [
    "BumpFunction",
    "make_plateau_bump",
    "TestFunctionConfig",
    "default_config",
    "w5_coordinates",
    "eval_F",
    "eval_F_derivative_slots",
    "iwasawa_coordinates",
    "eval_F_iwasawa",
    "iwasawa_support_constraints",
    "T_w5",
    "T_wl",
    "lie_derivative_check",
    "lie_rhs",
    "lie_derivative_value",
    "k_matrix",
    "LIE_PAIRS",
]

_PSI_CUTOFF = 1.0 / 700.0


# ------------------------------------------------------------ Taylor jets
# A jet holds Taylor coefficients c_k = g^(k)(x) / k! along the last axis.

def _jet_mul(a, b):
    n = a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(n):
        out[..., k] = np.sum(a[..., : k + 1] * b[..., k::-1], axis=-1)
    return out


def _jet_recip(a):
    n = a.shape[-1]
    out = np.zeros_like(a)
    out[..., 0] = 1.0 / a[..., 0]
    for k in range(1, n):
        out[..., k] = -np.sum(a[..., 1: k + 1] * out[..., k - 1::-1], axis=-1) / a[..., 0]
    return out


def _jet_exp(a):
    n = a.shape[-1]
    out = np.zeros_like(a)
    out[..., 0] = np.exp(a[..., 0])
    for k in range(1, n):
        j = np.arange(1, k + 1)
        out[..., k] = np.sum(j * a[..., 1: k + 1] * out[..., k - 1::-1], axis=-1) / k
    return out


def _psi_jet(t, n):
    """Jet of ``exp(-1/t)`` (zero for ``t <= 1/700``) with ``dt/dx = 1``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (n,))
    live = t > _PSI_CUTOFF
    if live.any():
        tj = np.zeros((int(live.sum()), n))
        tj[:, 0] = t[live]
        if n > 1:
            tj[:, 1] = 1.0
        out[live] = _jet_exp(-_jet_recip(tj))
    return out


def _glue_jet(t, n):
    """Jet in ``t`` of ``S(t) = psi(t) / (psi(t) + psi(1 - t))``, exactly 0/1 outside (0, 1)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (n,))
    out[..., 0] = np.where(t >= 1, 1.0, 0.0)
    mid = (t > 0) & (t < 1)
    if mid.any():
        tm = t[mid]
        p = _psi_jet(tm, n)
        q = _psi_jet(1 - tm, n)
        # d/dt psi(1 - t) flips odd coefficients
        q = q * (-1.0) ** np.arange(n)
        inv = _jet_recip(p + q)
        # near t = 1 use S = 1 - psi(1 - t) / (...) so small derivatives keep relative accuracy
        low = _jet_mul(p, inv)
        high = -_jet_mul(q, inv)
        high[..., 0] += 1.0
        out[mid] = np.where((tm <= 0.5)[:, None], low, high)
    return out


def _chain_scale(jet, factor):
    """Jet of ``g(factor * x)`` from the jet of ``g`` at ``factor * x``."""
    return jet * factor ** np.arange(jet.shape[-1])


@dataclass(frozen=True)
class BumpFunction:
    """Smooth compactly supported function built from the glue ``S``.

    ``value = scale * S((x - a)/(p0 - a)) * S((b - x)/(b - p1))`` with support
    ``(a, b)`` and plateau ``[p0, p1]``.
    """

    support: tuple
    plateau: tuple | None = None
    scale: float = 1.0

    def __post_init__(self):
        a, b = (float(v) for v in self.support)
        if not a < b:
            raise BadIntervals(f"empty support {self.support!r}")
        p = self.plateau
        if p is None:
            p = ((a + b) / 2, (a + b) / 2)
        p0, p1 = (float(v) for v in p)
        if not a < p0 <= p1 < b:
            raise BadIntervals(f"plateau {p!r} is not strictly inside support {(a, b)!r}")
        object.__setattr__(self, "support", (a, b))
        object.__setattr__(self, "plateau", (p0, p1))

    def jet(self, x, order: int = 0) -> np.ndarray:
        """Taylor coefficients ``g^(k)(x)/k!`` for ``k <= order`` (last axis)."""
        if not 0 <= order <= 8:
            raise ValueError("derivative order must be between 0 and 8")
        x = np.asarray(x, dtype=float)
        n = order + 1
        a, b = self.support
        p0, p1 = self.plateau
        rise = _chain_scale(_glue_jet((x - a) / (p0 - a), n), 1.0 / (p0 - a))
        fall = _chain_scale(_glue_jet((b - x) / (b - p1), n), -1.0 / (b - p1))
        return self.scale * _jet_mul(rise, fall)

    def derivative(self, x, order: int = 1) -> np.ndarray:
        return self.jet(x, order)[..., order] * math.factorial(order)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.support
        p0, p1 = self.plateau
        out = np.zeros(x.shape)
        on = (x >= p0) & (x <= p1)
        out[on] = self.scale
        shoulder = (x > a) & (x < b) & ~on
        if shoulder.any():
            out[shoulder] = self.jet(x[shoulder], 0)[..., 0]
        return out

    def integral(self) -> float:
        """``int g`` by 64-panel Gauss-Legendre."""
        x, w = np.polynomial.legendre.leggauss(16)
        edges = np.linspace(*self.support, 65)
        mids = 0.5 * (edges[1:] + edges[:-1])[:, None]
        half = 0.5 * np.diff(edges)[:, None]
        return float(np.sum(self(mids + half * x) * w * half))

    def normalized(self) -> "BumpFunction":
        """Rescaled copy with unit integral."""
        return replace(self, scale=self.scale / self.integral())


def make_plateau_bump(support, plateau) -> BumpFunction:
    """Bump equal to 0 outside ``support`` and exactly 1 on ``plateau``.

    Raises
    ------
    BadIntervals
        Unless ``support[0] < plateau[0] <= plateau[1] < support[1]``.
    """
    return BumpFunction(tuple(support), tuple(plateau), 1.0)


@dataclass(frozen=True)
class TestFunctionConfig:
    """Bumps and scalings defining the test function.

    Attributes
    ----------
    f : BumpFunction
        Supported in ``+-[T1, T2]``.
    h1, h2, h3 : BumpFunction
    C, X : float
    T1, T2 : float
    """

    __test__ = False

    f: BumpFunction
    h1: BumpFunction
    h2: BumpFunction
    h3: BumpFunction
    C: float = 1.0
    X: float = 1.0
    T1: float = 1.0
    T2: float = 2.0

    def __post_init__(self):
        if not (self.C > 0 and self.X > 0 and 0 < self.T1 < self.T2):
            raise ValueError("need C, X > 0 and 0 < T1 < T2")
        lo, hi = self.f.support
        if not (abs(lo) >= self.T1 - 1e-12 and abs(hi) <= self.T2 + 1e-12 and lo * hi > 0):
            raise BadIntervals("f must be supported in [T1, T2] or [-T2, -T1]")
        a, b = self.h1.support
        if a < 0.5 or b > 2 or not (self.h1.plateau[0] <= 0.9 and self.h1.plateau[1] >= 1.1):
            raise BadIntervals("h1 must live in (1/2, 2) and equal 1 on (0.9, 1.1)")
        a, b = self.h2.support
        if abs(a + b) > 1e-15 or b > 1 / 200 + 1e-15 or float(self.h2(np.array([0.0]))[0]) != 1.0:
            raise BadIntervals("h2 must be even, supported in (-1/200, 1/200), with h2(0) = 1")
        p0, p1 = self.h2.plateau
        if abs(p0 + p1) > 1e-15:
            raise BadIntervals("h2 plateau must be symmetric")
        a, b = self.h3.support
        if a < 0.5 or b > 2 or abs(self.h3.integral() - 1) > 1e-10:
            raise BadIntervals("h3 must live in (1/2, 2) with unit integral")

    def with_scalings(self, C=None, X=None) -> "TestFunctionConfig":
        return replace(self, C=self.C if C is None else C, X=self.X if X is None else X)


@lru_cache(maxsize=1)
def _default_bumps():
    f = make_plateau_bump((1.0, 2.0), (1.3, 1.7))
    h1 = make_plateau_bump((0.5, 2.0), (0.9, 1.1))
    h2 = make_plateau_bump((-1 / 200, 1 / 200), (-1 / 400, 1 / 400))
    h3 = make_plateau_bump((0.5, 2.0), (1.0, 1.5)).normalized()
    return f, h1, h2, h3


def default_config(C: float = 1.0, X: float = 1.0) -> TestFunctionConfig:
    """Default bumps: ``f`` on (1, 2); ``h1`` on (1/2, 2) with plateau (0.9, 1.1);
    ``h2`` on (-1/200, 1/200) with plateau (-1/400, 1/400); ``h3`` on (1/2, 2)
    normalized to unit integral."""
    f, h1, h2, h3 = _default_bumps()
    return TestFunctionConfig(f=f, h1=h1, h2=h2, h3=h3, C=float(C), X=float(X), T1=1.0, T2=2.0)


# ------------------------------------------------------------ evaluation

def w5_coordinates(g) -> dict:
    """Vectorized float version of the w5-like factorization.

    ``g`` has shape ``(..., 3, 3)``. Returns arrays ``t1, t2, z1, u1, u2, v1, v3``
    and a boolean ``ok`` marking the open cell.
    """
    g = np.asarray(g, dtype=float)
    B1 = g[..., 2, 1]
    A1 = g[..., 2, 0]
    A2 = g[..., 1, 0] * g[..., 2, 1] - g[..., 1, 1] * g[..., 2, 0]
    B2 = g[..., 1, 2] * g[..., 2, 0] - g[..., 1, 0] * g[..., 2, 2]
    C2 = g[..., 1, 1] * g[..., 2, 2] - g[..., 1, 2] * g[..., 2, 1]
    det = np.linalg.det(g)
    ok = (B1 != 0) & (A2 != 0) & (det != 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = dict(
            t1=A2 / B1**2,
            t2=B1 * det / A2**2,
            z1=A1 / B1,
            u1=g[..., 1, 1] / B1,
            u2=(g[..., 0, 0] * g[..., 2, 1] - g[..., 0, 1] * g[..., 2, 0]) / A2,
            v1=-B2 / A2,
            v3=-C2 / A2,
        )
    out["ok"] = ok
    return out


def _F_from_coords(c: dict, cfg: TestFunctionConfig, orders=(0, 0, 0, 0, 0)):
    ok = c["ok"]
    t1 = np.where(ok, c["t1"], 1.0)
    root = np.sqrt(np.abs(t1))
    args = (
        (cfg.f, cfg.C**3 * c["t2"] * root),
        (cfg.h1, t1),
        (cfg.h2, cfg.X * c["z1"] / root),
        (cfg.h3, c["v1"]),
        (cfg.h3, c["v3"]),
    )
    val = np.exp(2j * np.pi * (c["u1"] + c["u2"] + c["v1"]))
    for (bump, x), k in zip(args, orders):
        x = np.where(ok, x, np.inf)
        val = val * (bump(x) if k == 0 else bump.derivative(x, k))
    return np.where(ok, val, 0j)


def eval_F(g, cfg: TestFunctionConfig | None = None):
    """Test function at one matrix (exact factorization) or a stack of matrices."""
    cfg = cfg or default_config()
    arr = np.asarray(g)
    if arr.shape == (3, 3):
        try:
            fac = bruhat_w5_decompose(g)
        except DegenerateCell:
            return 0j
        c = {k: np.float64(getattr(fac, k)) for k in ("t1", "t2", "z1", "u1", "u2", "v1", "v3")}
        c["ok"] = np.bool_(True)
        return complex(_F_from_coords(c, cfg))
    return _F_from_coords(w5_coordinates(arr), cfg)


def eval_F_derivative_slots(g, cfg: TestFunctionConfig, orders) -> complex:
    """``F^(d)(g)``: each bump replaced by its derivative of order ``orders[k]``."""
    return complex(_F_from_coords(w5_coordinates(np.asarray(g, dtype=float)), cfg, tuple(orders)))


# ------------------------------------------------------------ Iwasawa

def _rot12(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot13(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def k_matrix(theta1, theta2, theta3) -> np.ndarray:
    """``k = R12(theta1) R13(theta2) R12(theta3)`` in SO(3)."""
    return _rot12(theta1) @ _rot13(theta2) @ _rot12(theta3)


def iwasawa_coordinates(g) -> dict:
    """``g = lambda x y k`` with ``x`` unipotent, ``y = diag(y1 y2, y1, 1)``, ``k`` in SO(3).

    Returns ``x12, x23, y1, y2, theta1, theta2, theta3``.
    """
    from scipy.linalg import rq

    R, Qm = rq(np.asarray(g, dtype=float))
    signs = np.sign(np.diag(R))
    R = R * signs[None, :]
    Qm = signs[:, None] * Qm
    if np.linalg.det(Qm) < 0:
        # g = (-1) R (-Q) and scalars act trivially
        Qm = -Qm
    R = R / R[2, 2]
    diag = np.diag(R)
    x = R / diag[None, :]
    theta2 = float(np.arccos(np.clip(Qm[2, 2], -1, 1)))
    theta3 = float(np.arctan2(-Qm[2, 1], Qm[2, 0]))
    theta1 = float(np.arctan2(-Qm[1, 2], -Qm[0, 2]))
    return dict(x12=x[0, 1], x23=x[1, 2], y1=diag[1], y2=diag[0] / diag[1],
                theta1=theta1, theta2=theta2, theta3=theta3, k=Qm)


def eval_F_iwasawa(y1, y2, theta1, theta2, theta3, cfg: TestFunctionConfig | None = None):
    """``F(y k)`` from its closed form in Iwasawa coordinates."""
    cfg = cfg or default_config()
    s1, c1 = np.sin(theta1), np.cos(theta1)
    s2, c2 = np.sin(theta2), np.cos(theta2)
    s3, c3 = np.sin(theta3), np.cos(theta3)
    with np.errstate(divide="ignore", invalid="ignore"):
        csc2, cot3, tan1 = 1 / s2, c3 / s3, s1 / c1
        phase = (-y1 * csc2 * (c1 * cot3 - c2 * s1) - y2 * tan1
                 - csc2 * s3 * (c2 + cot3 * tan1))
        t1 = -y1 * c1 * csc2 / s3**2
        root = np.sqrt(np.abs(t1))
        f_arg = -cfg.C**3 * y2 * csc2 / c1**2 * s3 * root
        h2_arg = cfg.X * (-cot3) / root
        v1 = csc2 * s3 * (c2 * cot3 - tan1)
        v3 = -csc2 * s3 * (c2 + cot3 * tan1)
        val = (np.exp(2j * np.pi * phase) * cfg.f(f_arg) * cfg.h1(t1) * cfg.h2(h2_arg)
               * cfg.h3(v1) * cfg.h3(v3))
    return np.where(np.isfinite(val), val, 0j)


def iwasawa_support_constraints(theta1, theta2, theta3) -> dict:
    """The support constraints on the angles, each as a boolean."""
    return {
        "cot_theta3": abs(1 / math.tan(theta3)) < 1 / 100,
        "sin_theta2": abs(math.sin(theta2)) >= 1 / 3,
        "cos_theta2": abs(math.cos(theta2)) > 3 / 22,
        "tan_theta1": 47 / 300 < abs(math.tan(theta1)) < 201 / 99,
    }


# ------------------------------------------------------------ transforms

def _gl_grid(a, b, panels=64, nodes=16):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * np.diff(edges)[:, None]
    return (mids + half * x).ravel(), (half * w).ravel()


def T_w5(cfg: TestFunctionConfig, y2: float, panels: int = 48) -> complex:
    """``int F(y w5 v) conj(psi_I(v)) dv`` over ``v = v(v1, v3)`` with ``y = diag(y2, 1, 1)``.

    The domain is truncated to the support of the ``h3`` factors.
    """
    if y2 == 0:
        raise ValueError("y2 must be nonzero")
    a, b = cfg.h3.support
    pts, wts = _gl_grid(a, b, panels)
    V1, V3 = np.meshgrid(pts, pts, indexing="ij")
    W = np.outer(wts, wts)
    v = np.zeros(V1.shape + (3, 3))
    v[..., 0, 0] = v[..., 1, 1] = v[..., 2, 2] = 1.0
    v[..., 0, 2] = V3
    v[..., 1, 2] = V1
    g = np.diag([float(y2), 1.0, 1.0]) @ WEYL["w5"].as_matrix() @ v
    vals = eval_F(g, cfg) * np.exp(-2j * np.pi * V1)
    return complex(np.sum(vals * W))


def T_wl(cfg: TestFunctionConfig, y, mode: str = "closed_form", tol: float = 1e-12) -> complex:
    """Long-element transform at ``y = (y1, y2)``.

    ``closed_form`` uses ``sqrt|y1| sum_eps f(eps C^3 y2 sqrt|y1|) tilde_h1(eps sqrt|y1|) h2(X/sqrt|y1|)``;
    ``integral`` integrates over ``x2`` in R (both signs) after the ``x1, x3``
    integrals, which give ``(int h3)^2``.
    """
    from .oscint import OscillatoryIntegrand, osc_quadrature, tilde_h1

    y1, y2 = float(y[0]), float(y[1])
    if y1 >= 0:
        return 0j
    a = -y1
    root = math.sqrt(a)
    h2v = float(cfg.h2(np.array([cfg.X / root]))[0])
    if h2v == 0:
        return 0j
    fv = {eps: float(cfg.f(np.array([eps * cfg.C**3 * y2 * root]))[0]) for eps in (1, -1)}
    if mode == "closed_form":
        total = 0j
        for eps in (1, -1):
            if fv[eps] != 0:
                total += fv[eps] * tilde_h1(eps * root, cfg, tol=tol)
        return complex(root * h2v * total)
    if mode != "integral":
        raise ValueError("mode must be 'closed_form' or 'integral'")
    h3_mass = cfg.h3.integral() ** 2
    lo, hi = cfg.h1.support
    total = 0j
    for sgn_x2 in (1, -1):
        fval = fv[-sgn_x2]
        if fval == 0:
            continue
        # |x2| ranges where h1(a / x2^2) can be nonzero
        xa, xb = math.sqrt(a / hi), math.sqrt(a / lo)
        integ = OscillatoryIntegrand(
            omega=lambda r: cfg.h1(a / (r * r)),
            phi=lambda r, s=sgn_x2: -a / (s * r) - s * r,
            dphi=lambda r, s=sgn_x2: a / (s * r * r) - s,
            support=(xa, xb))
        total += fval * osc_quadrature(integ, tol=tol * root)
    return complex(total * h2v * h3_mass)


# ------------------------------------------------------------ Lie algebra

LIE_PAIRS = ((1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3))


def lie_rhs(ij, coords: dict, cfg: TestFunctionConfig) -> list:
    """Right-hand side of ``E_ij F`` as ``[(coefficient, derivative orders), ...]``.

    The ``2 pi i`` terms are reported with orders ``(0, 0, 0, 0, 0)``. The
    ``h2'`` coefficient of ``E_31`` is ``X (2 v1 + v3 z1) / (2 sqrt t1)``, as
    obtained from its vector field ``t1 v3 d_t1 - 2 t2 v3 d_t2 + ... +
    (v1 + v3 z1) d_z1``.
    """
    t1, t2, z1 = coords["t1"], coords["t2"], coords["z1"]
    v1, v3 = coords["v1"], coords["v3"]
    C3, X = cfg.C**3, cfg.X
    r = math.sqrt(t1)
    e = [tuple(int(k == j) for k in range(5)) for j in range(5)]
    zero = (0, 0, 0, 0, 0)
    tp = 2j * math.pi
    table = {
        (1, 1): [(-0.5 * C3 * r * t2, e[0]), (t1, e[1]), (X * z1 / (2 * r), e[2]), (-v3, e[4])],
        (1, 2): [(-2 * t1 * z1, e[1]), (-v1, e[4]), (tp * t1, zero)],
        (1, 3): [(1.0, e[4])],
        (2, 1): [(X / r, e[2]), (-v3, e[3]), (-tp * v3, zero)],
        (2, 2): [(-0.5 * C3 * r * t2, e[0]), (-t1, e[1]), (-X * z1 / (2 * r), e[2]),
                 (-v1, e[3]), (-tp * v1, zero)],
        (2, 3): [(1.0, e[3]), (tp, zero)],
        (3, 1): [(-1.5 * C3 * r * t2 * v3, e[0]), (t1 * v3, e[1]),
                 (X / (2 * r) * (2 * v1 + v3 * z1), e[2]), (-v1 * v3, e[3]), (-v3**2, e[4]),
                 (tp * (t2 - v1 * v3), zero)],
        (3, 2): [(-1.5 * C3 * r * t2 * v1, e[0]), (-t1 * (v1 + 2 * v3 * z1), e[1]),
                 (-v1 * X * z1 / (2 * r), e[2]), (-v1**2, e[3]), (-v1 * v3, e[4]),
                 (tp * (t1 * v3 - t2 * z1 - v1**2), zero)],
        (3, 3): [(C3 * r * t2, e[0]), (v1, e[3]), (v3, e[4]), (tp * v1, zero)],
    }
    return table[tuple(ij)]


def lie_derivative_check(ij, cfg: TestFunctionConfig, g, step: float | None = None) -> float:
    """Relative residual between ``d/de F(g exp(e E_ij))|_0`` and :func:`lie_rhs`.

    The derivative is a fourth-order central difference with step
    ``1e-6 / max(1, X)``, small against the width of ``h2``. The residual is scaled by
    ``max(|lhs|, |rhs|, |F(g)|)`` so that vanishing derivatives (bumps on a
    plateau) do not produce 0/0.
    """
    g = np.asarray(g, dtype=float)
    E = np.zeros((3, 3))
    E[ij[0] - 1, ij[1] - 1] = 1.0
    from scipy.linalg import expm

    def Fs(eps):
        return complex(_F_from_coords(w5_coordinates(g @ expm(eps * E)), cfg))

    h = step if step is not None else 1e-6 / max(1.0, cfg.X)
    lhs = (8 * (Fs(h) - Fs(-h)) - (Fs(2 * h) - Fs(-2 * h))) / (12 * h)
    coords = {k: float(v) for k, v in w5_coordinates(g).items() if k != "ok"}
    rhs = 0j
    for coef, orders in lie_rhs(ij, coords, cfg):
        rhs += coef * eval_F_derivative_slots(g, cfg, orders)
    scale = max(abs(lhs), abs(rhs), abs(Fs(0.0)), 1e-300)
    return abs(lhs - rhs) / scale


def lie_derivative_value(ij, cfg: TestFunctionConfig, g) -> complex:
    """``E_ij F(g)`` from :func:`lie_rhs`."""
    g = np.asarray(g, dtype=float)
    coords = {k: float(v) for k, v in w5_coordinates(g).items() if k != "ok"}
    return sum(coef * eval_F_derivative_slots(g, cfg, orders)
               for coef, orders in lie_rhs(ij, coords, cfg))
