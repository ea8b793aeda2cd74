"""Exact evaluation of classical, hyper- and GL(3) Kloosterman sums.

Every term ``e(a/q)`` is represented by its integer numerator over one common
denominator ``q``. Numerators are histogrammed, and the sum
``sum_k count_k e(k/q)`` is formed once with exactly rounded summation of
real and imaginary parts. The root-of-unity table is conjugate symmetric,
``e(-k/q) = conj(e(k/q))`` bit for bit, so conjugate sums come out exactly
conjugate.

Negative moduli use ``|c|`` for residue systems and keep the sign of ``c`` in
phase denominators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "SumResult",
    "e",
    "kl2",
    "kl3",
    "s_w5",
    "s_w4",
    "s_wl",
    "w5_compatible",
    "units",
    "inverse_table",
]


def e(x):
    """``exp(2 pi i x)``."""
    return np.exp(2j * np.pi * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SumResult:
    """Value of an exponential sum.

    Attributes
    ----------
    value : complex
    term_count : int
        Number of unimodular terms summed.
    phases : tuple of Fraction, optional
        Exact phases mod 1 of every term, when requested.
    """

    value: complex
    term_count: int
    phases: tuple | None = None

    def __complex__(self):
        return complex(self.value)

    def recompute(self) -> complex:
        """Re-sum the retained phases directly."""
        if self.phases is None:
            raise ValueError("phases were not retained")
        if not self.phases:
            return 0j
        q = math.lcm(*(p.denominator for p in self.phases))
        nums = [p.numerator * (q // p.denominator) for p in self.phases]
        return _sum_numerators(np.array(nums, dtype=np.int64), q)


@lru_cache(maxsize=64)
def _roots_of_unity(q: int) -> tuple:
    """Real and imaginary parts of ``e(k/q)``, conjugate symmetric exactly."""
    k = np.arange(q // 2 + 1)
    ang = 2 * np.pi * k / q
    cos = np.empty(q)
    sin = np.empty(q)
    cos[: k.size] = np.cos(ang)
    sin[: k.size] = np.sin(ang)
    # e((q-k)/q) = conj(e(k/q))
    cos[q - k[1:]] = cos[k[1:]]
    sin[q - k[1:]] = -sin[k[1:]]
    if q % 2 == 0:
        sin[q // 2] = 0.0
    sin[0] = 0.0
    if q % 4 == 0:
        cos[q // 4] = 0.0
        cos[3 * q // 4] = 0.0
    return cos, sin


def _sum_numerators(nums: np.ndarray, q: int) -> complex:
    """``sum e(n/q)`` over integer numerators ``n`` (any sign)."""
    if nums.size == 0:
        return 0j
    counts = np.bincount(np.mod(nums, q), minlength=q)
    nz = np.flatnonzero(counts)
    cos, sin = _roots_of_unity(q)
    w = counts[nz].astype(float)
    re = math.fsum(w * cos[nz])
    im = math.fsum(w * sin[nz])
    return complex(re, im)


def _result(nums: np.ndarray, q: int, keep_phases: bool) -> SumResult:
    nums = np.asarray(nums, dtype=np.int64).ravel()
    phases = None
    if keep_phases:
        phases = tuple(Fraction(int(n) % q, q) for n in nums)
    return SumResult(_sum_numerators(nums, q), int(nums.size), phases)


@lru_cache(maxsize=256)
def inverse_table(c: int) -> np.ndarray:
    """``inv[x]`` is the inverse of ``x`` mod ``c``, or ``-1`` for non-units."""
    c = abs(int(c))
    if c == 1:
        return np.zeros(1, dtype=np.int64)
    inv = np.full(c, -1, dtype=np.int64)
    for x in range(c):
        if math.gcd(x, c) == 1:
            inv[x] = pow(x, -1, c)
    inv.setflags(write=False)
    return inv


def units(c: int) -> np.ndarray:
    """Residues ``0 <= x < |c|`` coprime to ``c``."""
    return np.flatnonzero(inverse_table(c) >= 0)


def kl2(m: int, n: int, c: int, keep_phases: bool = False) -> SumResult:
    """Classical Kloosterman sum ``sum_{x y = 1 (c)} e((m x + n y)/c)``."""
    if c < 1:
        raise ValueError("modulus must be positive")
    x = units(c)
    xbar = inverse_table(c)[x]
    return _result(m * x + n * xbar, c, keep_phases)


def kl3(n1: int, m1: int, m2: int, c: int, keep_phases: bool = False) -> SumResult:
    """Hyper-Kloosterman sum ``sum_{x y z = 1 (c)} e((n1 x + m1 y + m2 z)/c)``."""
    if c < 1:
        raise ValueError("modulus must be positive")
    inv = inverse_table(c)
    u = units(c)
    x, y = np.meshgrid(u, u, indexing="ij")
    z = inv[(x * y) % c]
    return _result(n1 * x + m1 * y + m2 * z, c, keep_phases)


def w5_compatible(m, n, c) -> bool:
    """Support condition ``c1 | c2`` and ``m1 c2 = n2 c1^2`` of the w5 sum."""
    c1, c2 = int(c[0]), int(c[1])
    if c1 == 0 or c2 == 0:
        raise ValueError("moduli must be nonzero")
    return c2 % c1 == 0 and m[0] * c2 == n[1] * c1 * c1


def s_w5(m, n, c, keep_phases: bool = False) -> SumResult:
    """The w5 Kloosterman sum.

    ``sum e(m1 xbar1 x2 / c1 + m2 xbar2 / (c2/c1) + n1 x1 / c1)`` over
    ``x1 mod c1``, ``x2 mod c2`` with ``(x1, c1) = (x2, c2/c1) = 1``, and zero
    off the support condition.
    """
    m1, m2 = int(m[0]), int(m[1])
    n1 = int(n[0])
    c1, c2 = int(c[0]), int(c[1])
    if not w5_compatible(m, n, c):
        return SumResult(0j, 0, () if keep_phases else None)
    a1, a2 = abs(c1), abs(c2)
    q = c2 // c1
    aq = abs(q)
    s1 = 1 if c1 > 0 else -1
    sq = 1 if q > 0 else -1
    x1 = units(a1)
    x1bar = inverse_table(a1)[x1]
    inv_q = inverse_table(aq)
    x2 = np.arange(a2)
    x2 = x2[inv_q[x2 % aq] >= 0]
    x2bar = inv_q[x2 % aq]
    X1, X2 = np.meshgrid(np.arange(x1.size), np.arange(x2.size), indexing="ij")
    # common denominator |c2|
    num = (s1 * (m1 * x1bar[X1] * x2[X2] + n1 * x1[X1]) * aq
           + sq * m2 * x2bar[X2] * a1)
    return _result(num, a2, keep_phases)


def s_w4(m, n, c, keep_phases: bool = False) -> SumResult:
    """The w4 sum: the w5 sum with both index pairs and moduli swapped."""
    return s_w5((m[1], m[0]), (n[1], n[0]), (c[1], c[0]), keep_phases)


def _bezout_tables(c: int, rng=None):
    """For all ``(B, C) mod c`` with ``gcd(B, C, c) = 1`` find ``Y B + Z C = 1 (c)``.

    Returns arrays ``Y, Z, ok`` of shape ``(c, c)``. ``rng`` randomizes which
    solution is picked.
    """
    inv = inverse_table(c)
    B, C = np.meshgrid(np.arange(c), np.arange(c), indexing="ij")
    g = np.gcd(np.gcd(B, C), c)
    ok = g == 1
    Y = np.zeros((c, c), dtype=np.int64)
    Z = np.zeros((c, c), dtype=np.int64)
    todo = ok.copy()
    shifts = np.arange(c) if rng is None else rng.permutation(c)
    for k in shifts:
        idx = (B + k * C) % c
        hit = todo & (inv[idx] >= 0)
        if hit.any():
            y = inv[idx[hit]]
            Y[hit] = y
            Z[hit] = (k * y) % c
            todo &= ~hit
        if not todo.any():
            break
    if rng is not None:
        # (Y + t C) B + (Z - t B) C = Y B + Z C
        t = rng.integers(0, c, size=(c, c))
        Y = (Y + t * C) % c
        Z = (Z - t * B) % c
    return Y, Z, ok


def s_wl(m, n, c, keep_phases: bool = False, rng=None) -> SumResult:
    """Long-element Kloosterman sum.

    Sum over ``B1, C1 mod c1`` and ``B2, C2 mod c2`` with
    ``gcd(B1, C1, c1) = gcd(B2, C2, c2) = 1`` and
    ``c1 C2 + B1 B2 + c2 C1 = 0 mod c1 c2`` of
    ``e((m1 B1 + n1 (Y1 c2 - Z1 B2))/c1 + (m2 B2 + n2 (Y2 c1 - Z2 B1))/c2)``
    where ``Y_i B_i + Z_i C_i = 1 mod c_i``. The value does not depend on the
    Bezout choices; pass a numpy ``Generator`` as ``rng`` to randomize them.
    """
    m1, m2 = int(m[0]), int(m[1])
    n1, n2 = int(n[0]), int(n[1])
    c1, c2 = int(c[0]), int(c[1])
    if c1 == 0 or c2 == 0:
        raise ValueError("moduli must be nonzero")
    a1, a2 = abs(c1), abs(c2)
    Y1t, Z1t, ok1 = _bezout_tables(a1, rng)
    Y2t, Z2t, ok2 = _bezout_tables(a2, rng)
    B1, C1 = np.nonzero(ok1)
    B1 = B1[:, None]
    C1 = C1[:, None]
    B2 = np.arange(a2)[None, :]
    top = B1 * B2 + c2 * C1
    divisible = top % a1 == 0
    C2 = (-(top // c1)) % a2
    keep = divisible & ok2[np.broadcast_to(B2, top.shape), C2]
    B1b = np.broadcast_to(B1, top.shape)[keep]
    C1b = np.broadcast_to(C1, top.shape)[keep]
    B2b = np.broadcast_to(B2, top.shape)[keep]
    C2b = C2[keep]
    Y1, Z1 = Y1t[B1b, C1b], Z1t[B1b, C1b]
    Y2, Z2 = Y2t[B2b, C2b], Z2t[B2b, C2b]
    first = m1 * B1b + n1 * (Y1 * c2 - Z1 * B2b)
    second = m2 * B2b + n2 * (Y2 * c1 - Z2 * B1b)
    q = c1 * c2
    num = first * c2 + second * c1
    if q < 0:
        num = -num
    return _result(num, abs(q), keep_phases)
