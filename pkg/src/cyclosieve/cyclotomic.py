"""Cyclotomic integers Z[zeta_d] and their degree-1 prime ideals.

Elements are stored in the power basis 1, zeta, ..., zeta^{phi(d)-1} with
arbitrary-precision integer coefficients; products are reduced modulo the
d-th cyclotomic polynomial.  A degree-1 prime ideal above l = 1 (mod d) is
represented by the pair (l, omega) where omega in F_l has exact order d, the
image of zeta under the reduction map.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from math import gcd

import numpy as np
from sympy import totient

from .errors import MixedOrders, NotCoprime, ValidationError
from .field_core import make_field, unity_root


@functools.lru_cache(maxsize=None)
def cyclotomic_polynomial(d: int) -> tuple:
    """Coefficients of Phi_d, lowest degree first."""
    num = [-1] + [0] * (d - 1) + [1]
    for k in range(1, d):
        if d % k == 0:
            num = _exact_div(num, cyclotomic_polynomial(k))
    return tuple(num)


def _exact_div(a, b):
    a = list(a)
    quot = [0] * (len(a) - len(b) + 1)
    for shift in range(len(quot) - 1, -1, -1):
        c = a[shift + len(b) - 1]  # b is monic
        quot[shift] = c
        for j, y in enumerate(b):
            a[shift + j] -= c * y
    if any(a):
        raise AssertionError("inexact polynomial division")
    return quot


@functools.lru_cache(maxsize=None)
def _power_reductions(d: int) -> tuple:
    """Row k holds zeta^k in the power basis, for 0 <= k < d."""
    phi = int(totient(d))
    poly = cyclotomic_polynomial(d)
    rows = []
    cur = [1] + [0] * (phi - 1)
    for _ in range(d):
        rows.append(tuple(cur))
        # multiply by zeta: shift up, then fold X^phi = -sum poly[i] X^i
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            cur = [c - top * poly[i] for i, c in enumerate(cur)]
    return tuple(rows)


@dataclass(frozen=True)
class CycInt:
    """An element of Z[zeta_d]."""

    d: int
    coeffs: tuple

    def __post_init__(self):
        phi = int(totient(self.d))
        coeffs = tuple(int(c) for c in self.coeffs)
        if len(coeffs) != phi:
            raise ValidationError(f"expected {phi} coefficients for d = {self.d}, got {len(coeffs)}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, d):
        return cls(d, (0,) * int(totient(d)))

    @classmethod
    def one(cls, d):
        return cls.from_int(d, 1)

    @classmethod
    def from_int(cls, d, n):
        phi = int(totient(d))
        return cls(d, (int(n),) + (0,) * (phi - 1))

    @classmethod
    def zeta(cls, d, k=1):
        return cls(d, _power_reductions(d)[k % d])

    @classmethod
    def from_exponent_counts(cls, d, counts):
        """sum_k counts[k] zeta^k for a length-d integer sequence ``counts``."""
        rows = _power_reductions(d)
        out = [0] * len(rows[0])
        for k, c in enumerate(counts):
            c = int(c)
            if c:
                for i, r in enumerate(rows[k]):
                    if r:
                        out[i] += c * r
        return cls(d, tuple(out))

    def _check(self, other):
        if isinstance(other, int):
            return CycInt.from_int(self.d, other)
        if not isinstance(other, CycInt):
            return NotImplemented
        if other.d != self.d:
            raise MixedOrders(f"Z[zeta_{self.d}] vs Z[zeta_{other.d}]")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return CycInt(self.d, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return CycInt(self.d, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return CycInt(self.d, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return cyc_mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, k):
        result = CycInt.one(self.d)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def is_zero(self):
        return not any(self.coeffs)


def cyc_mul(a: CycInt, b: CycInt) -> CycInt:
    if a.d != b.d:
        raise MixedOrders(f"Z[zeta_{a.d}] vs Z[zeta_{b.d}]")
    phi = len(a.coeffs)
    prod = [0] * (2 * phi - 1)
    for i, x in enumerate(a.coeffs):
        if x:
            for j, y in enumerate(b.coeffs):
                if y:
                    prod[i + j] += x * y
    poly = cyclotomic_polynomial(a.d)
    for k in range(2 * phi - 2, phi - 1, -1):
        c = prod[k]
        if c:
            for i in range(phi):
                prod[k - phi + i] -= c * poly[i]
            prod[k] = 0
    return CycInt(a.d, tuple(prod[:phi]))


def cyc_add(a: CycInt, b: CycInt) -> CycInt:
    return a + b


def cyc_sub(a: CycInt, b: CycInt) -> CycInt:
    return a - b


def cyc_neg(a: CycInt) -> CycInt:
    return -a


def complex_embed(z: CycInt, k: int = 1) -> complex:
    """Image of z under zeta_d -> exp(2 pi i k / d)."""
    if gcd(k, z.d) != 1:
        raise NotCoprime(f"gcd({k}, {z.d}) != 1")
    phases = np.exp(2j * np.pi * k * np.arange(len(z.coeffs)) / z.d)
    return complex(np.dot(np.array(z.coeffs, dtype=float), phases))


# ---------------------------------------------------------------------------
# primes and prime ideals


def prime_sieve(limit: int) -> np.ndarray:
    """Boolean array ``is_prime[0..limit]`` (sieve of Eratosthenes)."""
    limit = int(limit)
    flags = np.ones(max(limit + 1, 2), dtype=bool)
    flags[:2] = False
    for i in range(2, int(limit**0.5) + 1):
        if flags[i]:
            flags[i * i::i] = False
    return flags[:limit + 1]


def primes_up_to(limit: int) -> np.ndarray:
    return np.flatnonzero(prime_sieve(limit))


def prime_count(a: int, m: int, L: int) -> int:
    """Number of primes l <= L with l = a (mod m)."""
    if gcd(a, m) != 1:
        raise NotCoprime(f"gcd({a}, {m}) != 1")
    primes = primes_up_to(L)
    return int(np.count_nonzero(primes % m == a % m))


@dataclass(frozen=True)
class PrimeIdealDeg1:
    """Degree-1 prime ideal (l, zeta_d - omega) of Z[zeta_d].

    ``omega`` is a residue mod ``ell``; in F_l the field-element index of a
    residue is the residue itself.  ``multiplicity`` is phi(d) when the ideal
    stands for all its Galois conjugates, else 1.
    """

    d: int
    ell: int
    omega: int
    multiplicity: int = 1

    def __post_init__(self):
        if self.ell % self.d != 1:
            raise ValidationError(f"{self.ell} is not 1 mod {self.d}")
        F = self.field
        if F.order_of(self.omega) != self.d:
            raise ValidationError(f"{self.omega} does not have order {self.d} mod {self.ell}")
        phi_at = 0
        for c in reversed(cyclotomic_polynomial(self.d)):
            phi_at = (phi_at * self.omega + c) % self.ell
        if phi_at:
            raise AssertionError("Phi_d(omega) != 0 mod l")

    @property
    def norm(self):
        return self.ell

    @property
    def field(self):
        return make_field(self.ell)

    @property
    def omega_element(self):
        return self.field.element(self.omega)

    def as_record(self):
        return {"d": self.d, "ell": self.ell, "omega": self.omega, "norm": self.norm}


def ideal_above(ell: int, d: int) -> PrimeIdealDeg1:
    """The representative degree-1 ideal above ``ell`` (omega from unity_root)."""
    return PrimeIdealDeg1(d, ell, unity_root(make_field(ell), d).index)


def deg1_prime_ideals(d: int, L: int, residue_condition=None, count_conjugates=False):
    """One degree-1 prime ideal of Z[zeta_d] per rational prime l <= L, l = 1 mod d.

    ``residue_condition`` is an optional pair ``(m, C)`` restricting to
    l mod m in C, with gcd(d, m) = 1.
    """
    if residue_condition is not None:
        m, classes = residue_condition
        if gcd(d, m) != 1:
            raise NotCoprime(f"gcd({d}, {m}) != 1")
        classes = {c % m for c in classes}
    mult = int(totient(d)) if count_conjugates else 1
    out = []
    for ell in primes_up_to(L).tolist():
        if ell % d != 1 or d % ell == 0:
            continue
        if residue_condition is not None and ell % m not in classes:
            continue
        out.append(PrimeIdealDeg1(d, ell, unity_root(make_field(ell), d).index, mult))
    return out


def ideals_to_json(ideals) -> str:
    return json.dumps([lam.as_record() for lam in ideals])


def ideals_from_json(text: str):
    return [PrimeIdealDeg1(r["d"], r["ell"], r["omega"]) for r in json.loads(text)]


def reduce_mod(z: CycInt, lam: PrimeIdealDeg1) -> int:
    """Image of z in F_l under zeta_d -> omega."""
    if z.d != lam.d:
        raise MixedOrders(f"Z[zeta_{z.d}] vs ideal of Z[zeta_{lam.d}]")
    acc = 0
    for c in reversed(z.coeffs):
        acc = (acc * lam.omega + c) % lam.ell
    return acc


def legendre(x: int, p: int) -> int:
    x %= p
    if x == 0:
        return 0
    return 1 if pow(x, (p - 1) // 2, p) == 1 else -1


@functools.lru_cache(maxsize=None)
def sqrt_p_cyclotomic(p: int) -> CycInt:
    """The element of Z[zeta_{4p}] squaring to p fixed by the Gauss-sum convention.

    For odd p it is eps^{-1} g_p with g_p = sum_x (x|p) zeta_p^x, zeta_p =
    zeta_{4p}^4, eps = 1 if p = 1 mod 4 and eps = zeta_4 = zeta_{4p}^p
    otherwise.  For p = 2 it is zeta_8 + zeta_8^{-1}.
    """
    d = 4 * p
    if p == 2:
        return CycInt.zeta(8, 1) + CycInt.zeta(8, 7)
    counts = [0] * d
    for x in range(1, p):
        counts[(4 * x) % d] += legendre(x, p)
    g = CycInt.from_exponent_counts(d, counts)
    if p % 4 == 1:
        return g
    # eps^{-1} = zeta_4^{-1} = zeta_{4p}^{3p}
    return g * CycInt.zeta(d, 3 * p)


def sqrt_q_mod(lam: PrimeIdealDeg1, p: int, e: int) -> int:
    """Square root of q = p^e modulo lam, via the reduced Gauss sum raised to e."""
    if lam.d != 4 * p:
        raise MixedOrders(f"ideal has d = {lam.d}, expected {4 * p}")
    s = reduce_mod(sqrt_p_cyclotomic(p), lam)
    return pow(s, e, lam.ell)
