"""Weyl group of GL(3), characters, spectral parameters and Pluecker coordinates.

Weyl elements act on a diagonal matrix ``diag(a1, a2, a3)`` by conjugation.
If ``w e_k = +-e_{sigma(k)}`` then ``w diag(a) w^-1`` carries ``a_k`` in
position ``sigma(k)``, so the induced action on exponents is
``(mu^w)_k = mu_{sigma(k)}`` and ``mu^(w w') = (mu^w)^w'``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Rational
from typing import Sequence

import numpy as np

from .errors import DegenerateCell

__all__ = [
    "RHO",
    "SpectralParameter",
    "WeylElement",
    "WEYL",
    "WEYL_NAMES",
    "weyl_element",
    "weyl_mul",
    "weyl_act_mu",
    "weyl_act_delta",
    "chi_d_w",
    "SignPair",
    "PluckerCoords",
    "plucker",
    "BruhatW5Factorization",
    "bruhat_w5_decompose",
    "w5_factorization_product",
]

# Half-sum of positive roots; only used for bookkeeping of p_{rho^w}.
RHO = (1, 0, -1)

_MU_SUM_TOL = 1e-12


@dataclass(frozen=True)
class SpectralParameter:
    """Spectral parameter ``mu`` in C^3 with ``sum(mu) = 0`` and weight ``d``.

    For ``d >= 2`` use :meth:`from_r`, which builds
    ``mu = ((d-1)/2 + r, -(d-1)/2 + r, -2r)``.
    """

    mu: tuple
    d: int = 0
    r: complex | None = None

    def __post_init__(self):
        mu = tuple(complex(m) for m in self.mu)
        if len(mu) != 3:
            raise ValueError("mu must have three coordinates")
        if not isinstance(self.d, Integral) or self.d < 0:
            raise ValueError("weight d must be a nonnegative integer")
        if abs(sum(mu)) > _MU_SUM_TOL:
            raise ValueError(f"mu must sum to zero, got {sum(mu)!r}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "d", int(self.d))
        if self.r is not None:
            r = complex(self.r)
            object.__setattr__(self, "r", r)
            if self.d >= 2 and mu != _mu_from_r(self.d, r):
                raise ValueError("mu is inconsistent with (d, r)")

    @classmethod
    def from_r(cls, d: int, r: complex) -> "SpectralParameter":
        """Weight ``d >= 2`` parameter ``mu^d(r)``."""
        if d < 2:
            raise ValueError("from_r requires d >= 2")
        return cls(_mu_from_r(d, complex(r)), d, complex(r))

    @classmethod
    def tempered(cls, t1: float, t2: float, d: int = 0) -> "SpectralParameter":
        """Tempered weight-0/1 parameter ``(i t1, i t2, -i(t1+t2))``."""
        return cls((1j * t1, 1j * t2, -1j * (t1 + t2)), d)

    @property
    def is_tempered(self) -> bool:
        if self.d >= 2:
            r = self.r if self.r is not None else -self.mu[2] / 2
            return abs(r.real) <= _MU_SUM_TOL
        return all(abs(m.real) <= _MU_SUM_TOL for m in self.mu)

    def as_array(self) -> np.ndarray:
        return np.array(self.mu, dtype=complex)


def _mu_from_r(d: int, r: complex) -> tuple:
    half = (d - 1) / 2
    return (half + r, -half + r, -2 * r)


@dataclass(frozen=True)
class WeylElement:
    """Element of the Weyl group stored by its permutation and signed matrix.

    ``perm[k]`` is the row of the nonzero entry in column ``k`` (0-based),
    i.e. ``w e_k = +-e_{perm[k]}``.
    """

    name: str
    perm: tuple
    sign: int
    matrix: tuple

    def as_matrix(self) -> np.ndarray:
        return np.array(self.matrix, dtype=int)

    def __mul__(self, other: "WeylElement") -> "WeylElement":
        return weyl_mul(self, other)


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def _make(name: str, rows) -> WeylElement:
    mat = np.array(rows, dtype=int)
    perm = tuple(int(np.flatnonzero(mat[:, k])[0]) for k in range(3))
    return WeylElement(name, perm, _perm_sign(perm), tuple(map(tuple, mat.tolist())))


WEYL_NAMES = ("I", "w2", "w3", "w4", "w5", "wl")

WEYL = {
    "I": _make("I", [[1, 0, 0], [0, 1, 0], [0, 0, 1]]),
    "w2": _make("w2", [[0, -1, 0], [-1, 0, 0], [0, 0, -1]]),
    "w3": _make("w3", [[-1, 0, 0], [0, 0, -1], [0, -1, 0]]),
    "w4": _make("w4", [[0, 1, 0], [0, 0, 1], [1, 0, 0]]),
    "w5": _make("w5", [[0, 0, 1], [1, 0, 0], [0, 1, 0]]),
    "wl": _make("wl", [[0, 0, -1], [0, -1, 0], [-1, 0, 0]]),
}

_BY_PERM = {w.perm: w for w in WEYL.values()}


def weyl_element(w) -> WeylElement:
    """Look up a Weyl element by name (or pass one through)."""
    if isinstance(w, WeylElement):
        return w
    try:
        return WEYL[w]
    except KeyError:
        raise ValueError(f"unknown Weyl element {w!r}; expected one of {WEYL_NAMES}") from None


def weyl_mul(w, w2) -> WeylElement:
    """Group product ``w * w2`` (matrix product modulo scalars)."""
    a, b = weyl_element(w), weyl_element(w2)
    perm = tuple(a.perm[b.perm[k]] for k in range(3))
    return _BY_PERM[perm]


def weyl_act_mu(mu: SpectralParameter, w) -> SpectralParameter:
    """Return ``mu^w`` defined by ``p_{mu^w}(y) = p_mu(w y w^-1)``."""
    w = weyl_element(w)
    new = tuple(mu.mu[w.perm[k]] for k in range(3))
    return SpectralParameter(new, mu.d)


def weyl_act_delta(delta: Sequence[int], w) -> tuple:
    """Return ``delta^w`` defined by ``chi_{delta^w}(y) = chi_delta(w y w^-1)``."""
    w = weyl_element(w)
    return tuple(int(delta[w.perm[k]]) for k in range(3))


@dataclass(frozen=True)
class SignPair:
    """Signs ``v = (v1, v2)`` read as ``diag(v1 v2, v1, 1)``."""

    v1: int
    v2: int

    def __post_init__(self):
        if self.v1 not in (1, -1) or self.v2 not in (1, -1):
            raise ValueError("sign coordinates must be exactly +1 or -1")

    @classmethod
    def of(cls, v) -> "SignPair":
        if isinstance(v, SignPair):
            return v
        v1, v2 = v
        return cls(int(v1), int(v2))

    def diagonal(self) -> tuple:
        return (self.v1 * self.v2, self.v1, 1)

    def __mul__(self, other: "SignPair") -> "SignPair":
        return SignPair(self.v1 * other.v1, self.v2 * other.v2)

    def __iter__(self):
        return iter((self.v1, self.v2))


def chi_d_w(d: int, w, v) -> int:
    """Evaluate ``chi_{(d,d,0)^w}`` on ``diag(v1 v2, v1, 1)``."""
    v = SignPair.of(v)
    delta = weyl_act_delta((d, d, 0), w)
    out = 1
    for a, e in zip(v.diagonal(), delta):
        if a < 0 and e % 2:
            out = -out
    return out


@dataclass(frozen=True)
class PluckerCoords:
    """Pluecker coordinates of ``U \\ GL(3)``; exact for integral or rational input."""

    A1: object
    B1: object
    C1: object
    A2: object
    B2: object
    C2: object

    def relation(self):
        """``A1 C2 + B1 B2 + C1 A2``, identically zero."""
        return self.A1 * self.C2 + self.B1 * self.B2 + self.C1 * self.A2

    def as_tuple(self) -> tuple:
        return (self.A1, self.B1, self.C1, self.A2, self.B2, self.C2)


def _exact_entries(g):
    """Return g as nested lists of ints/Fractions, plus whether input was exact."""
    arr = np.asarray(g, dtype=object)
    if arr.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    rows = []
    exact = True
    for i in range(3):
        row = []
        for j in range(3):
            x = arr[i, j]
            if isinstance(x, (Integral, np.integer)):
                row.append(int(x))
            elif isinstance(x, Rational):
                row.append(Fraction(x))
            else:
                exact = False
                row.append(Fraction(float(x)))
        rows.append(row)
    return rows, exact


def plucker(g) -> PluckerCoords:
    """Pluecker coordinates of a 3x3 matrix.

    Integral input gives Python integers. Real input is converted exactly to
    binary rationals, so the Pluecker relation holds exactly in every case.
    """
    m, _ = _exact_entries(g)
    return PluckerCoords(
        A1=m[2][0],
        B1=m[2][1],
        C1=m[2][2],
        A2=m[1][0] * m[2][1] - m[1][1] * m[2][0],
        B2=m[1][2] * m[2][0] - m[1][0] * m[2][2],
        C2=m[1][1] * m[2][2] - m[1][2] * m[2][1],
    )


@dataclass(frozen=True)
class BruhatW5Factorization:
    """Parameters of ``g = s u(u1,u2,u3) diag(t1 t2, t1, 1) z(z1) w5 v(v1,v3)``."""

    s: float
    t1: float
    t2: float
    z1: float
    u1: float
    u2: float
    u3: float
    v1: float
    v3: float


def _det3(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def bruhat_w5_decompose(g) -> BruhatW5Factorization:
    """Factor ``g`` on the open w5-like cell (``B1(g) A2(g) != 0``).

    Raises
    ------
    DegenerateCell
        If ``B1(g) A2(g) == 0`` or ``det(g) == 0``.
    """
    m, _ = _exact_entries(g)
    p = plucker(g)
    det = _det3(m)
    if p.B1 == 0 or p.A2 == 0:
        raise DegenerateCell("B1(g) * A2(g) = 0: matrix is off the w5-like cell")
    if det == 0:
        raise DegenerateCell("singular matrix")
    B1, A2 = Fraction(p.B1), Fraction(p.A2)
    vals = dict(
        s=B1,
        t1=A2 / B1**2,
        t2=m[2][1] * det / A2**2,
        z1=p.A1 / B1,
        u1=m[1][1] / B1,
        u2=(m[0][0] * m[2][1] - m[0][1] * m[2][0]) / A2,
        u3=m[0][1] / B1,
        v1=-p.B2 / A2,
        v3=-p.C2 / A2,
    )
    return BruhatW5Factorization(**{k: float(v) for k, v in vals.items()})


def w5_factorization_product(fac: BruhatW5Factorization, include_scalar: bool = True) -> np.ndarray:
    """Reassemble the matrix product of a w5-like factorization."""
    upper = np.array([[1.0, fac.u2, fac.u3], [0.0, 1.0, fac.u1], [0.0, 0.0, 1.0]])
    torus = np.diag([fac.t1 * fac.t2, fac.t1, 1.0])
    lower = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, fac.z1, 1.0]])
    right = np.array([[1.0, 0.0, fac.v3], [0.0, 1.0, fac.v1], [0.0, 0.0, 1.0]])
    prod = upper @ torus @ lower @ WEYL["w5"].as_matrix() @ right
    return fac.s * prod if include_scalar else prod
