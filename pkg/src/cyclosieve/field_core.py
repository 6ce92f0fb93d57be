"""Prime and extension fields F_{p^e} with vectorised arithmetic.

Elements are encoded as integers ``0 <= i < p**e`` whose base-p digits are
the coefficients (lowest degree first) of a polynomial in ``t`` reduced
modulo the field's defining polynomial.  All array methods accept and
return ``numpy`` integer arrays of such indices, so tables indexed by field
elements are plain arrays.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from math import gcd

import numpy as np
from sympy import factorint, isprime

from .errors import DomainMismatch, FieldTooLarge, NotPrime, OrderNotDividing

DEFAULT_TABLE_CAP = 2**24
MAX_ORDER = 2**62

# ---------------------------------------------------------------------------
# Polynomials over F_p as lists of ints, lowest degree first.


def _trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def poly_sub(a, b, p):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return _trim([(x - y) % p for x, y in zip(a, b)])


def poly_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim([c % p for c in out])


def poly_divmod(a, b, p):
    a, b = _trim(a), _trim(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = pow(b[-1], -1, p)
    quot = [0] * max(len(a) - len(b) + 1, 0)
    rem = list(a)
    while len(rem) >= len(b) and rem:
        shift = len(rem) - len(b)
        c = rem[-1] * inv_lead % p
        quot[shift] = c
        for j, y in enumerate(b):
            rem[shift + j] = (rem[shift + j] - c * y) % p
        rem = _trim(rem)
    return _trim(quot), rem


def poly_mod(a, m, p):
    return poly_divmod(a, m, p)[1]


def poly_gcd(a, b, p):
    a, b = _trim([c % p for c in a]), _trim([c % p for c in b])
    while b:
        a, b = b, poly_mod(a, b, p)
    if a:
        inv = pow(a[-1], -1, p)
        a = [c * inv % p for c in a]
    return a


def poly_powmod(a, k, m, p):
    result = [1]
    base = poly_mod(a, m, p)
    while k:
        if k & 1:
            result = poly_mod(poly_mul(result, base, p), m, p)
        base = poly_mod(poly_mul(base, base, p), m, p)
        k >>= 1
    return result


def poly_derivative(a, p):
    return _trim([(i * c) % p for i, c in enumerate(a)][1:])


def is_irreducible(m, p):
    """Irreducibility of a monic ``m`` of degree e over F_p.

    ``m`` is irreducible iff X^{p^e} = X mod m and gcd(X^{p^i} - X, m) = 1
    for 1 <= i < e.
    """
    e = len(m) - 1
    if e < 1:
        return False
    x = poly_mod([0, 1], m, p)
    frob = x
    for i in range(1, e + 1):
        frob = poly_powmod(frob, p, m, p)
        diff = poly_sub(frob, x, p)
        if i < e:
            if len(poly_gcd(diff, m, p)) != 1:
                return False
        elif diff:
            return False
    return True


def smallest_irreducible(p, e):
    """Lexicographically smallest monic irreducible of degree e over F_p.

    Coefficients are compared lowest degree first.
    """
    if e == 1:
        return (0, 1)
    for coeffs in itertools.product(range(p), repeat=e):
        if coeffs[0] == 0:
            continue
        m = list(coeffs) + [1]
        if is_irreducible(m, p):
            return tuple(m)
    raise AssertionError(f"no irreducible polynomial of degree {e} over F_{p}")


# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def make_field(p: int, e: int = 1, table_cap: int = DEFAULT_TABLE_CAP) -> "FiniteField":
    """Return the field with ``p**e`` elements; same arguments give the same field."""
    p, e = int(p), int(e)
    if p < 2 or not isprime(p):
        raise NotPrime(f"{p} is not prime")
    if e < 1:
        raise DomainMismatch(f"extension degree must be >= 1, got {e}")
    if p**e > MAX_ORDER:
        raise FieldTooLarge(f"p^e = {p}^{e} exceeds the index cap {MAX_ORDER}")
    return FiniteField(p, e, table_cap)


class FiniteField:
    """Arithmetic context for F_q, q = p**e.

    Use :func:`make_field` rather than the constructor so fields are shared.
    Log/exp tables relative to :attr:`generator` are built when ``q`` does
    not exceed ``table_cap``; otherwise every operation falls back to
    polynomial arithmetic on the digit vectors.
    """

    def __init__(self, p: int, e: int, table_cap: int = DEFAULT_TABLE_CAP):
        self.p = p
        self.e = e
        self.q = p**e
        self.modulus = smallest_irreducible(p, e)
        if not is_irreducible(list(self.modulus), p):
            raise AssertionError("defining polynomial is reducible")
        self._pows = np.array([p**i for i in range(e)], dtype=np.int64)
        self._order_factors = sorted(factorint(self.q - 1)) if self.q > 2 else []
        self.generator = self._find_generator()
        self.has_tables = self.q <= table_cap
        self._exp = self._log = None
        if self.has_tables:
            self._build_tables()

    def __repr__(self):
        return f"FiniteField(p={self.p}, e={self.e})"

    def __reduce__(self):
        return make_field, (self.p, self.e)

    # -- scalar helpers on python ints ------------------------------------

    def _to_poly(self, i):
        coeffs = []
        for _ in range(self.e):
            i, c = divmod(i, self.p)
            coeffs.append(c)
        return _trim(coeffs)

    def _from_poly(self, poly):
        return sum(int(c) * self.p**k for k, c in enumerate(poly))

    def _smul(self, a, b):
        if self.e == 1:
            return a * b % self.p
        prod = poly_mul(self._to_poly(a), self._to_poly(b), self.p)
        return self._from_poly(poly_mod(prod, list(self.modulus), self.p))

    def _spow(self, a, k):
        if self.e == 1:
            return pow(a, k, self.p)
        if k < 0:
            a, k = self._sinv(a), -k
        poly = poly_powmod(self._to_poly(a), k, list(self.modulus), self.p)
        return self._from_poly(poly)

    def _sinv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return self._spow(a, self.q - 2)

    def _find_generator(self):
        if self.q == 2:
            return 1
        n = self.q - 1
        for g in range(1, self.q):
            if all(self._spow(g, n // r) != 1 for r in self._order_factors):
                return g
        raise AssertionError("multiplicative group has no generator")

    def _build_tables(self):
        n = self.q - 1
        exp = np.empty(n, dtype=np.int64)
        exp[0] = 1
        filled = 1
        while filled < n:
            step = min(filled, n - filled)
            shift = self._spow(self.generator, filled)
            exp[filled:filled + step] = self._mul_const(exp[:step], shift)
            filled += step
        log = np.full(self.q, -1, dtype=np.int64)
        log[exp] = np.arange(n, dtype=np.int64)
        if (log[1:] < 0).any():
            raise AssertionError("generator does not have full order")
        self._exp, self._log = exp, log

    def _mul_const(self, xs, c):
        """Multiply an index array by the fixed element ``c`` (linear map on digits)."""
        if self.e == 1:
            return xs * c % self.p
        cols = [self._to_poly(self._smul(c, self.p**j)) for j in range(self.e)]
        mat = np.zeros((self.e, self.e), dtype=np.int64)
        for j, col in enumerate(cols):
            mat[:len(col), j] = col
        digits = self.digits(xs)
        return self.from_digits(digits @ mat.T % self.p)

    # -- vectorised arithmetic --------------------------------------------

    def digits(self, xs):
        xs = np.asarray(xs, dtype=np.int64)
        return (xs[..., None] // self._pows) % self.p

    def from_digits(self, digits):
        return (np.asarray(digits, dtype=np.int64) * self._pows).sum(axis=-1)

    def add(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.e == 1:
            return (a + b) % self.p
        return self.from_digits((self.digits(a) + self.digits(b)) % self.p)

    def neg(self, a):
        a = np.asarray(a, dtype=np.int64)
        if self.e == 1:
            return (-a) % self.p
        return self.from_digits((-self.digits(a)) % self.p)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.e == 1:
            return a * b % self.p
        if self.has_tables:
            a, b = np.broadcast_arrays(a, b)
            out = np.zeros(a.shape, dtype=np.int64)
            nz = (a != 0) & (b != 0)
            out[nz] = self._exp[(self._log[a[nz]] + self._log[b[nz]]) % (self.q - 1)]
            return out
        return self._poly_mul_arrays(a, b)

    def _poly_mul_arrays(self, a, b):
        da, db = self.digits(a), self.digits(b)
        da, db = np.broadcast_arrays(da, db)
        e, p = self.e, self.p
        prod = np.zeros(da.shape[:-1] + (2 * e - 1,), dtype=np.int64)
        for i in range(e):
            prod[..., i:i + e] += da[..., i:i + 1] * db
        prod %= p
        mod = self.modulus
        for k in range(2 * e - 2, e - 1, -1):
            c = prod[..., k].copy()
            for j in range(e):
                prod[..., k - e + j] -= c * mod[j]
            prod[..., k] = 0
            prod %= p
        return self.from_digits(prod[..., :e])

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if (a == 0).any():
            raise ZeroDivisionError("inverse of zero")
        if self.has_tables:
            return self._exp[(-self._log[a]) % (self.q - 1)]
        return self.pow(a, self.q - 2)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, k):
        a = np.asarray(a, dtype=np.int64)
        k = int(k)
        if self.has_tables:
            out = np.zeros(a.shape, dtype=np.int64)
            nz = a != 0
            out[nz] = self._exp[(self._log[a[nz]] * (k % (self.q - 1))) % (self.q - 1)]
            if k == 0:
                out[...] = 1
            elif k < 0 and not nz.all():
                raise ZeroDivisionError("negative power of zero")
            return out
        if k < 0:
            a, k = self.inv(a), -k
        result = np.ones(a.shape, dtype=np.int64)
        base = a
        while k:
            if k & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            k >>= 1
        return result

    def log(self, a):
        """Discrete logarithm to base :attr:`generator` (requires tables)."""
        if not self.has_tables:
            raise FieldTooLarge(f"no log tables for q = {self.q}")
        a = np.asarray(a, dtype=np.int64)
        if (a == 0).any():
            raise ZeroDivisionError("log of zero")
        return self._log[a]

    def exp(self, k):
        if not self.has_tables:
            raise FieldTooLarge(f"no log tables for q = {self.q}")
        return self._exp[np.asarray(k, dtype=np.int64) % (self.q - 1)]

    def frobenius(self, a, times=1):
        return self.pow(a, self.p ** (times % self.e))

    @functools.cached_property
    def basis_traces(self):
        """Absolute traces of the basis elements 1, t, ..., t^{e-1}."""
        return np.array([abs_trace(self, self.element(self.p**j)) for j in range(self.e)],
                        dtype=np.int64)

    def trace(self, a):
        """Vectorised absolute trace, via linearity over the basis traces."""
        if self.e == 1:
            return np.asarray(a, dtype=np.int64) % self.p
        return (self.digits(a) @ self.basis_traces) % self.p

    @functools.cached_property
    def trace_table(self):
        return self.trace(np.arange(self.q, dtype=np.int64))

    def is_mth_power(self, a, m):
        a = np.asarray(a, dtype=np.int64)
        g = gcd(m, self.q - 1)
        if self.has_tables:
            out = np.ones(a.shape, dtype=bool)
            nz = a != 0
            out[nz] = self._log[a[nz]] % g == 0
            return out
        return (a == 0) | (self.pow(a, (self.q - 1) // g) == 1)

    def elements(self):
        return np.arange(self.q, dtype=np.int64)

    def units(self):
        return np.arange(1, self.q, dtype=np.int64)

    def prime_subfield(self):
        """Indices of F_p inside F_q (the constants, which encode as themselves)."""
        return np.arange(self.p, dtype=np.int64)

    def element(self, index):
        index = int(index)
        if not 0 <= index < self.q:
            raise DomainMismatch(f"index {index} outside F_{self.q}")
        return FieldElement(self, index)

    def __call__(self, index):
        return self.element(index % self.q if self.e == 1 else index)

    def order_of(self, index):
        index = int(index)
        if index == 0:
            raise ZeroDivisionError("zero has no multiplicative order")
        n = self.q - 1
        for r in self._order_factors:
            while n % r == 0 and self._spow(index, n // r) == 1:
                n //= r
        return n


@dataclass(frozen=True, eq=False)
class FieldElement:
    field: FiniteField
    index: int

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.field is not self.field:
                raise DomainMismatch("elements of different fields")
            return other.index
        if isinstance(other, (int, np.integer)) and self.field.e == 1:
            return int(other) % self.field.p
        if isinstance(other, (int, np.integer)) and 0 <= other < self.field.p:
            return int(other)
        return NotImplemented

    def __eq__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self.index == o

    def __hash__(self):
        return hash((self.field.p, self.field.e, self.index))

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.field, int(self.field.add(self.index, o)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, int(self.field.neg(self.index)))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.field, int(self.field.sub(self.index, o)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.field, self.field._smul(self.index, o))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.field, self.field._smul(self.index, self.field._sinv(o)))

    def __pow__(self, k):
        if self.index == 0:
            if k < 0:
                raise ZeroDivisionError("negative power of zero")
            return FieldElement(self.field, 1 if k == 0 else 0)
        return FieldElement(self.field, self.field._spow(self.index, k))

    def __int__(self):
        return self.index

    def __index__(self):
        return self.index

    def __repr__(self):
        return f"F{self.field.q}({self.index})"


# ---------------------------------------------------------------------------
# Module-level operations


def _check_member(F, x):
    if isinstance(x, FieldElement):
        if x.field is not F:
            raise DomainMismatch("element belongs to a different field")
        return x.index
    x = int(x)
    if not 0 <= x < F.q:
        raise DomainMismatch(f"index {x} outside F_{F.q}")
    return x


def abs_trace(F: FiniteField, x) -> int:
    """tr(x) = x + x^p + ... + x^{p^{e-1}}, computed from the definition."""
    x = _check_member(F, x)
    total = 0
    power = x
    for _ in range(F.e):
        total = int(F.add(total, power))
        power = F._spow(power, F.p) if power else 0
    if total >= F.p:
        raise AssertionError("trace left the prime subfield")
    return total


def unity_root(F: FiniteField, d: int) -> FieldElement:
    """g^{(q-1)/d} for the field generator g: an element of exact order d."""
    d = int(d)
    if d < 1 or (F.q - 1) % d:
        raise OrderNotDividing(f"{d} does not divide {F.q - 1}")
    return F.element(F._spow(F.generator, (F.q - 1) // d))


def is_mth_power(F: FiniteField, x, m: int) -> bool:
    x = _check_member(F, x)
    if x == 0:
        return True
    return F._spow(x, (F.q - 1) // gcd(m, F.q - 1)) == 1
