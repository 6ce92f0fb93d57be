"""Trace functions over F_q: hyper-Kloosterman sums, exponential sums, point counts.

Every sum is first reduced to integer *counts* (how many summands carry the
additive-character exponent c, and the multiplicative-character exponent j),
so the value in any embedding is a short dot product.  An :class:`Embedding`
is either complex (zeta_{4p} -> exp(2 pi i k / 4p)) or a reduction modulo a
degree-1 prime ideal of Z[zeta_{4p}] (zeta_{4p} -> omega in F_l).  Residue
values are int64 arrays of residues mod l, complex values are complex128.

Sums are unnormalized unless stated otherwise; :func:`normalize` applies the
(-1)^{n-1} q^{-(n-1)/2} prefactor (with the Gauss-sum square root of q in
residue mode).
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field, replace
from math import gcd
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .cyclotomic import CycInt, PrimeIdealDeg1, ideal_above, sqrt_q_mod
from .errors import (
    BadCharacterOrder,
    CacheFormatError,
    DegenerateRationalFunction,
    EvenCharacteristic,
    FieldTooLarge,
    NotARoot,
    NotSquarefreeModP,
    ValidationError,
    ZeroArgument,
)
from .field_core import (
    FieldElement,
    FiniteField,
    make_field,
    poly_derivative,
    poly_gcd,
    unity_root,
)

TABLE_CAP = 2**20
CACHE_ENV = "CYCLOSIEVE_CACHE"
_CHUNK_CELLS = 2**22

# ---------------------------------------------------------------------------
# Embeddings


@dataclass(frozen=True)
class Embedding:
    """Where cyclotomic values live: ``Embedding.complex(p, k)`` or ``Embedding.residue(p, ideal)``."""

    p: int
    k: int | None = None
    ideal: PrimeIdealDeg1 | None = None

    def __post_init__(self):
        if (self.k is None) == (self.ideal is None):
            raise ValidationError("embedding needs exactly one of k or ideal")
        if self.k is not None and gcd(self.k, self.d) != 1:
            raise ValidationError(f"k = {self.k} is not coprime to {self.d}")
        if self.ideal is not None:
            if self.ideal.d != self.d:
                raise ValidationError(f"ideal has d = {self.ideal.d}, expected {self.d}")
            F = self.ideal.field
            if F.order_of(self.omega_p) != self.p or F.order_of(self.omega_4) != 4:
                raise AssertionError("omega^4 / omega^p have the wrong orders")

    @classmethod
    def complex(cls, p, k=1):
        return cls(p, k=k)

    @classmethod
    def residue(cls, p, ideal):
        if not isinstance(ideal, PrimeIdealDeg1):
            ideal = ideal_above(int(ideal), 4 * p)
        return cls(p, ideal=ideal)

    @property
    def d(self):
        return 4 * self.p

    @property
    def is_residue(self):
        return self.ideal is not None

    @property
    def ell(self):
        return self.ideal.ell if self.ideal else None

    @property
    def dtype(self):
        return np.int64 if self.is_residue else np.complex128

    @property
    def omega_p(self):
        return pow(self.ideal.omega, 4, self.ideal.ell)

    @property
    def omega_4(self):
        return pow(self.ideal.omega, self.p, self.ideal.ell)

    def describe(self):
        if self.is_residue:
            return {"mode": "residue", "d": self.d, "ell": self.ell, "omega": self.ideal.omega}
        return {"mode": "complex", "d": self.d, "k": self.k}

    # values of characters -------------------------------------------------

    def psi_table(self):
        """psi(c) = image of zeta_p^c for c = 0..p-1."""
        c = np.arange(self.p)
        if self.is_residue:
            ell, w = self.ell, self.omega_p
            return np.array([pow(w, int(i), ell) for i in c], dtype=np.int64)
        return np.exp(2j * np.pi * self.k * c / self.p)

    def root_of_unity_table(self, r):
        """Image of zeta_r^j for j = 0..r-1 (the values of an order-r character)."""
        if r == 1:
            return np.ones(1, dtype=self.dtype)
        j = np.arange(r)
        if self.d % r == 0:
            # zeta_r = zeta_{4p}^{4p/r}: stay inside the embedding
            step = self.d // r
            if self.is_residue:
                base = pow(self.ideal.omega, step, self.ell)
                return np.array([pow(base, int(i), self.ell) for i in j], dtype=np.int64)
            return np.exp(2j * np.pi * self.k * step * j / self.d)
        if self.is_residue:
            if (self.ell - 1) % r:
                raise BadCharacterOrder(f"no order-{r} root of unity mod {self.ell}")
            base = unity_root(self.ideal.field, r).index
            return np.array([pow(base, int(i), self.ell) for i in j], dtype=np.int64)
        return np.exp(2j * np.pi * j / r)

    def from_counts(self, counts):
        """sum_c counts[..., c] psi(c)."""
        counts = np.asarray(counts, dtype=np.int64)
        psi = self.psi_table()
        if self.is_residue:
            return ((counts % self.ell) @ psi) % self.ell
        return counts @ psi

    def from_int(self, values):
        values = np.asarray(values, dtype=np.int64)
        if self.is_residue:
            return values % self.ell
        return values.astype(np.complex128)

    def sqrt_q(self, e):
        if self.is_residue:
            return sqrt_q_mod(self.ideal, self.p, e)
        return float(self.p) ** (e / 2)

    def scale(self, values, factor):
        if self.is_residue:
            return (np.asarray(values, dtype=np.int64) * (int(factor) % self.ell)) % self.ell
        return np.asarray(values) * factor

    def inverse(self, x):
        if self.is_residue:
            return pow(int(x), -1, self.ell)
        return 1 / x

    def galois_twist(self, c):
        """Embedding with zeta_p -> zeta_p^c and zeta_4 fixed (c in F_p^x)."""
        c %= self.p
        if c == 0:
            raise ValidationError("c must be nonzero mod p")
        if self.p == 2:
            lift = 1
        else:
            lift = next(c + self.p * t for t in range(4) if (c + self.p * t) % 4 == 1)
        if self.is_residue:
            lam = self.ideal
            twisted = PrimeIdealDeg1(lam.d, lam.ell, pow(lam.omega, lift, lam.ell), lam.multiplicity)
            return Embedding(self.p, ideal=twisted)
        return Embedding(self.p, k=(self.k * lift) % self.d)


# ---------------------------------------------------------------------------
# Families and tables


@dataclass(frozen=True)
class Kloosterman:
    n: int

    @property
    def weight(self):
        return self.n - 1

    @property
    def sign(self):
        return (-1) ** (self.n - 1)

    tag = property(lambda self: self.n)


@dataclass(frozen=True)
class RationalFunction:
    """num/den with integer coefficients, lowest degree first."""

    num: tuple
    den: tuple = (1,)

    def __post_init__(self):
        object.__setattr__(self, "num", tuple(int(c) for c in self.num))
        object.__setattr__(self, "den", tuple(int(c) for c in self.den))
        if not any(self.den):
            raise DegenerateRationalFunction("zero denominator")

    @classmethod
    def poly(cls, coeffs):
        return cls(tuple(coeffs))

    @classmethod
    def coerce(cls, obj):
        if isinstance(obj, RationalFunction):
            return obj
        if isinstance(obj, dict):
            return cls(tuple(obj["num"]), tuple(obj.get("den", (1,))))
        if isinstance(obj, (int, np.integer)):
            return cls((int(obj),))
        return cls(tuple(obj))

    @property
    def is_polynomial(self):
        return len([c for c in self.den if c]) == 1 and self.den[0] != 0 and not any(self.den[1:])

    def degree(self):
        nz = [i for i, c in enumerate(self.num) if c]
        return nz[-1] if nz else -1

    def as_record(self):
        return {"num": list(self.num), "den": list(self.den)}

    def evaluate(self, F: FiniteField, ys):
        """Values at ``ys`` and a mask of the points that are not poles."""
        if not any(c % F.p for c in self.den):
            raise DegenerateRationalFunction(f"denominator vanishes identically mod {F.p}")
        num = _horner(F, self.num, ys)
        den = _horner(F, self.den, ys)
        ok = den != 0
        out = np.zeros_like(num)
        out[ok] = F.div(num[ok], den[ok])
        return out, ok


def _horner(F, coeffs, ys):
    ys = np.asarray(ys, dtype=np.int64)
    acc = np.zeros_like(ys)
    for c in reversed(coeffs):
        acc = F.add(F.mul(acc, ys), c % F.p)
    return acc


@dataclass(frozen=True)
class ExpSum:
    f: RationalFunction
    g: RationalFunction
    h: RationalFunction
    r: int = 1

    weight = 1
    sign = -1
    tag = 1 << 32


@dataclass(frozen=True)
class Hyperelliptic:
    f: tuple
    domain: str = "generic"

    weight = 1
    sign = 1
    tag = 2 << 32


@dataclass(frozen=True)
class FourierTransformOf:
    source: object
    conjugate: bool = False

    weight = 1
    sign = -1
    tag = 3 << 32


@dataclass
class TraceTable:
    """Values of a trace function at the field elements ``xs`` (index encoding)."""

    family: object
    p: int
    e: int
    embedding: Embedding
    xs: np.ndarray
    values: np.ndarray
    normalized: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def q(self):
        return self.p**self.e

    @property
    def field(self):
        return make_field(self.p, self.e)

    def __len__(self):
        return len(self.xs)

    def as_dict(self):
        """Mapping x -> value (python scalars)."""
        return dict(zip(self.xs.tolist(), self.values.tolist()))

    def dense(self):
        """Length-q array with zeros outside the table's domain."""
        out = np.zeros(self.q, dtype=self.values.dtype)
        out[self.xs] = self.values
        return out

    def at(self, x):
        x = x.index if isinstance(x, FieldElement) else int(x)
        hits = np.flatnonzero(self.xs == x)
        if not len(hits):
            raise KeyError(x)
        return self.values[hits[0]]


def _check_embedding(F, emb):
    if emb.p != F.p:
        raise ValidationError(f"embedding is for p = {emb.p}, field has p = {F.p}")


# ---------------------------------------------------------------------------
# Kloosterman sums


def kloosterman_counts(n: int, F: FiniteField, a) -> np.ndarray:
    """counts[c] = #{x in (F_q^x)^n : x_1...x_n = a, tr(x_1 + ... + x_n) = c}."""
    a = a.index if isinstance(a, FieldElement) else int(a)
    if a == 0:
        raise ZeroArgument("Kloosterman sums are defined on F_q^x")
    if n < 1:
        raise ValidationError("rank must be >= 1")
    tr = F.trace_table
    units = F.units()
    counts = np.zeros(F.p, dtype=np.int64)
    if n == 1:
        counts[tr[a]] = 1
        return counts
    # partial products / trace sums over x_1..x_{n-2}
    prods = np.ones(1, dtype=np.int64)
    trs = np.zeros(1, dtype=np.int64)
    for _ in range(n - 2):
        prods = F.mul(prods[:, None], units[None, :]).ravel()
        trs = (trs[:, None] + tr[units][None, :]).ravel()
    step = max(1, _CHUNK_CELLS // len(units))
    tr_units = tr[units]
    for start in range(0, len(prods), step):
        pr = prods[start:start + step]
        ts = trs[start:start + step]
        # x_{n-1} runs over units, x_n = a / (prod * x_{n-1})
        last = F.div(a, F.mul(pr[:, None], units[None, :]))
        total = (ts[:, None] + tr_units[None, :] + tr[last]) % F.p
        counts += np.bincount(total.ravel(), minlength=F.p)
    return counts


def kloosterman_point(n: int, F: FiniteField, a, emb: Embedding):
    """Unnormalized sum of psi(tr(x_1+...+x_n)) over x_1...x_n = a, from the definition."""
    _check_embedding(F, emb)
    return emb.from_counts(kloosterman_counts(n, F, a))[()]


def kloosterman_exact(n: int, F: FiniteField, a) -> CycInt:
    """The unnormalized sum as an exact element of Z[zeta_{4p}]."""
    counts = kloosterman_counts(n, F, a)
    d = 4 * F.p
    expo = np.zeros(d, dtype=np.int64)
    expo[4 * np.arange(F.p) % d] += counts
    return CycInt.from_exponent_counts(d, expo)


def _cyclic_convolve(a, b, ell=None):
    """out[i] = sum_k a[(i - k) mod N] b[k], exact mod ``ell`` for integer input."""
    N = len(a)
    if ell is None:
        return np.fft.ifft(np.fft.fft(a) * np.fft.fft(b))
    a2 = np.concatenate([a, a])
    b_rev = np.roll(b[::-1], 1)  # b_rev[j] = b[-j mod N]
    out = np.empty(N, dtype=a.dtype)
    rows = max(1, _CHUNK_CELLS // N)
    s = a2.strides[0]
    safe = N * (ell - 1) ** 2 < 2**63
    for r0 in range(0, N, rows):
        R = min(rows, N - r0)
        view = as_strided(a2[r0:], shape=(R, N), strides=(s, s), writeable=False)
        if safe:
            out[r0:r0 + R] = (view @ b_rev) % ell
        else:
            out[r0:r0 + R] = ((view * b_rev) % ell).sum(axis=1) % ell
    return out


def kloosterman_table(n: int, F: FiniteField, emb: Embedding, cap: int = TABLE_CAP) -> TraceTable:
    """Kl_n over F_q^x by the recursion Kl_m(a) = sum_{x != 0} Kl_{m-1}(a/x) psi(x).

    Works in discrete-log coordinates, where the recursion is a cyclic
    convolution of length q - 1: exact O(n q^2) in residue mode, FFT in
    complex mode.
    """
    _check_embedding(F, emb)
    if F.q > cap:
        raise FieldTooLarge(f"q = {F.q} exceeds the table cap {cap}")
    if not F.has_tables:
        raise FieldTooLarge(f"q = {F.q} has no log tables")
    exps = F.exp(np.arange(F.q - 1))
    psi = emb.psi_table()[F.trace_table[exps]]
    level = psi.copy()
    for _ in range(n - 1):
        level = _cyclic_convolve(level, psi, emb.ell)
    values = np.empty(F.q - 1, dtype=level.dtype)
    values[exps - 1] = level
    return TraceTable(Kloosterman(n), F.p, F.e, emb, F.units(), values)


# ---------------------------------------------------------------------------
# Normalization and Fourier transform


def _norm_factor(table, emb):
    fam = table.family
    w = fam.weight
    if w == 0:
        return 1
    if emb.is_residue:
        s = emb.sqrt_q(table.e)
        return fam.sign * pow(s, -w, emb.ell) % emb.ell
    return fam.sign * emb.sqrt_q(table.e) ** (-w)


def normalize(t: TraceTable, emb: Embedding | None = None) -> TraceTable:
    """Multiply by sign * q^{-weight/2}; Kloosterman: (-1)^{n-1} q^{-(n-1)/2}."""
    emb = emb or t.embedding
    if t.normalized:
        raise ValidationError("table is already normalized")
    factor = _norm_factor(t, emb)
    return replace(t, values=emb.scale(t.values, factor), normalized=True)


def denormalize(t: TraceTable, emb: Embedding | None = None) -> TraceTable:
    emb = emb or t.embedding
    if not t.normalized:
        raise ValidationError("table is not normalized")
    factor = emb.inverse(_norm_factor(t, emb))
    return replace(t, values=emb.scale(t.values, factor), normalized=False)


def fourier_transform_table(t: TraceTable, emb: Embedding | None = None, conjugate: bool = False) -> TraceTable:
    """a -> -q^{-1/2} sum_x t(x) psi(tr(a x)) over all a in F_q.

    With ``conjugate`` the character psi is replaced by its inverse.  Points
    outside the table's domain contribute t(x) = 0.
    """
    emb = emb or t.embedding
    F = t.field
    dense = t.dense()
    psi = emb.psi_table()
    if conjugate:
        psi = psi[(-np.arange(F.p)) % F.p]
    tr = F.trace_table
    xs = F.elements()
    out = np.empty(F.q, dtype=dense.dtype)
    rows = max(1, _CHUNK_CELLS // F.q)
    for a0 in range(0, F.q, rows):
        a = xs[a0:a0 + rows]
        phase = psi[tr[F.mul(a[:, None], xs[None, :])]]
        if emb.is_residue:
            out[a0:a0 + rows] = ((phase * dense[None, :]) % emb.ell).sum(axis=1) % emb.ell
        else:
            out[a0:a0 + rows] = phase @ dense
    if emb.is_residue:
        factor = (-pow(emb.sqrt_q(t.e), -1, emb.ell)) % emb.ell
    else:
        factor = -1 / emb.sqrt_q(t.e)
    return TraceTable(FourierTransformOf(t.family, conjugate), t.p, t.e, emb, xs,
                      emb.scale(out, factor), t.normalized)


# ---------------------------------------------------------------------------
# General exponential sums


def _character_exponents(F, g_vals, r):
    if r == 1:
        return np.zeros(len(g_vals), dtype=np.int64)
    return F.log(g_vals) % r


def _expsum_terms(f, g, h, r, F):
    """Per-y data: f(y), tr(h(y)), chi exponent; restricted to admissible y."""
    f, g, h = (RationalFunction.coerce(u) for u in (f, g, h))
    r = int(r)
    if r < 1 or (F.q - 1) % r:
        raise BadCharacterOrder(f"character order {r} does not divide q - 1 = {F.q - 1}")
    ys = F.elements()
    fy, f_ok = f.evaluate(F, ys)
    gy, g_ok = g.evaluate(F, ys)
    hy, h_ok = h.evaluate(F, ys)
    ok = f_ok & g_ok & h_ok
    if r > 1:
        ok &= gy != 0
    fy, gy, hy = fy[ok], gy[ok], hy[ok]
    return fy, F.trace_table[hy], _character_exponents(F, gy, r)


def expsum_counts(f, g, h, r, F: FiniteField, x) -> np.ndarray:
    """counts[c, j] = #{y : tr(x f(y) + h(y)) = c, chi(g(y)) = zeta_r^j}."""
    x = x.index if isinstance(x, FieldElement) else int(x)
    fy, trh, js = _expsum_terms(f, g, h, r, F)
    c = (F.trace_table[F.mul(x, fy)] + trh) % F.p
    return np.bincount(c * r + js, minlength=F.p * r).reshape(F.p, r)


def _counts2_value(counts, emb, r):
    psi = emb.psi_table()
    chi = emb.root_of_unity_table(r)
    if emb.is_residue:
        inner = ((counts % emb.ell) @ chi) % emb.ell
        return (inner @ psi) % emb.ell
    return psi @ (counts @ chi)


def exp_sum(f, g, h, r, F: FiniteField, x, emb: Embedding, normalized: bool = False):
    """sum_y psi(tr(x f(y) + h(y))) chi(g(y)), poles and (for r > 1) zeros of g excluded.

    ``chi`` is the order-r character chi(gen^k) = zeta_r^k.  With
    ``normalized`` the result is multiplied by -q^{-1/2}.
    """
    _check_embedding(F, emb)
    value = _counts2_value(expsum_counts(f, g, h, r, F, x), emb, int(r))
    if normalized:
        if emb.is_residue:
            value = (-value * pow(emb.sqrt_q(F.e), -1, emb.ell)) % emb.ell
        else:
            value = -value / emb.sqrt_q(F.e)
    return value


def exp_sum_table(f, g, h, r, F: FiniteField, emb: Embedding) -> TraceTable:
    """Unnormalized exponential sums at every x in F_q."""
    _check_embedding(F, emb)
    fam = ExpSum(*(RationalFunction.coerce(u) for u in (f, g, h)), int(r))
    fy, trh, js = _expsum_terms(fam.f, fam.g, fam.h, fam.r, F)
    psi = emb.psi_table()
    w = emb.root_of_unity_table(fam.r)[js]
    xs = F.elements()
    out = np.empty(F.q, dtype=emb.dtype)
    rows = max(1, _CHUNK_CELLS // max(len(fy), 1))
    for x0 in range(0, F.q, rows):
        x = xs[x0:x0 + rows]
        c = (F.trace_table[F.mul(x[:, None], fy[None, :])] + trh[None, :]) % F.p
        terms = psi[c]
        if emb.is_residue:
            out[x0:x0 + rows] = ((terms * w[None, :]) % emb.ell).sum(axis=1) % emb.ell
        else:
            out[x0:x0 + rows] = terms @ w
    return TraceTable(fam, F.p, F.e, emb, xs, out)


def expsum_hypotheses(f, g, h, r):
    """Report which known family the parameters look like and which checkable hypotheses fail.

    Returns a list of human-readable flags (empty when nothing is flagged).
    Hypotheses that need the complex critical values of f are reported as
    unverified rather than checked.
    """
    f, g, h = (RationalFunction.coerce(u) for u in (f, g, h))
    flags = []
    trivial_g = f.is_polynomial and g.num == (1,) and g.den == (1,)
    if r == 1 and trivial_g and f.num == (0, 1) and h.is_polynomial:
        n = h.degree()
        coeffs = list(h.num) + [0] * (n + 1 - len(h.num))
        if n < 3:
            flags.append("h has degree < 3")
        if n in (7, 9):
            flags.append("h has degree 7 or 9")
        if n >= 1 and coeffs[n - 1] != 0:
            flags.append("h has a nonzero coefficient in degree deg(h) - 1")
    elif r == 1 and not any(h.num) and g.num == (1,):
        flags.append("critical-value conditions on f not verified")
    elif r >= 2:
        if not f.is_polynomial or not _is_odd(f):
            flags.append("f is not an odd polynomial")
        if not _is_odd(g):
            flags.append("g is not odd")
        if h.is_polynomial and f.degree() > 0 and gcd(f.degree(), h.degree()) != 1:
            flags.append("degrees of f and h are not coprime")
    else:
        flags.append("parameters match none of the known coherent families")
    return flags


def _is_odd(rf):
    num_odd = all(c == 0 for i, c in enumerate(rf.num) if i % 2 == 0)
    num_even = all(c == 0 for i, c in enumerate(rf.num) if i % 2 == 1)
    den_odd = all(c == 0 for i, c in enumerate(rf.den) if i % 2 == 0)
    den_even = all(c == 0 for i, c in enumerate(rf.den) if i % 2 == 1)
    return (num_odd and den_even) or (num_even and den_odd)


# ---------------------------------------------------------------------------
# Hyperelliptic point counts


@dataclass(frozen=True)
class HyperellipticTrace:
    a: int
    normalized: float


def _check_hyperelliptic(f, F):
    f = tuple(int(c) for c in f)
    while f and f[-1] == 0:
        f = f[:-1]
    if F.p == 2:
        raise EvenCharacteristic("hyperelliptic point counts need odd p")
    deg = len(f) - 1
    if deg < 2 or deg % 2:
        raise ValidationError(f"f must have even degree >= 2, got {deg}")
    if f[-1] % F.p == 0:
        raise NotSquarefreeModP(f"leading coefficient of f vanishes mod {F.p}")
    fp = [c % F.p for c in f]
    if len(poly_gcd(fp, poly_derivative(fp, F.p), F.p)) != 1:
        raise NotSquarefreeModP(f"f is not squarefree mod {F.p}")
    return f


def _quadratic_character(F, values):
    chi = np.where(F.is_mth_power(values, 2), 1, -1)
    chi[values == 0] = 0
    return chi


def hyperelliptic_trace(f, z, F: FiniteField, require_root: bool = True) -> HyperellipticTrace:
    """a_z = q + 1 - #X_z(F_q) for y^2 = f(x)(x - z), via the quadratic character.

    The model has odd degree, hence one point at infinity, and
    a_z = -sum_x chi_2(f(x)(x - z)).  With ``require_root`` (the default)
    z must be a zero of f in F_q.
    """
    f = _check_hyperelliptic(f, F)
    z = z.index if isinstance(z, FieldElement) else int(z)
    xs = F.elements()
    fx = _horner(F, f, xs)
    if require_root and fx[z] != 0:
        raise NotARoot(f"f({z}) != 0 in F_{F.q}")
    chi = _quadratic_character(F, F.mul(fx, F.sub(xs, z)))
    a = -int(chi.sum())
    return HyperellipticTrace(a, a / F.q**0.5)


def count_points_naive(f, z, F: FiniteField) -> int:
    """#X_z(F_q) by enumerating all (x, y) with y^2 = f(x)(x - z), plus the point at infinity."""
    f = tuple(int(c) for c in f)
    xs = F.elements()
    rhs = F.mul(_horner(F, f, xs), F.sub(xs, int(z)))
    squares = F.mul(xs, xs)
    hits = np.bincount(squares, minlength=F.q)  # number of y with y^2 = v
    return int(hits[rhs].sum()) + 1


def hyperelliptic_table(f, F: FiniteField, emb: Embedding, domain: str = "generic") -> TraceTable:
    """a_z over z in F_q with f(z) != 0 (``generic``) or over the roots of f (``roots``)."""
    _check_embedding(F, emb)
    f = _check_hyperelliptic(f, F)
    xs = F.elements()
    fx = _horner(F, f, xs)
    zs = xs[fx != 0] if domain == "generic" else xs[fx == 0]
    if domain not in ("generic", "roots"):
        raise ValidationError(f"unknown domain {domain!r}")
    a = np.array([hyperelliptic_trace(f, z, F, require_root=False).a for z in zs.tolist()],
                 dtype=np.int64)
    return TraceTable(Hyperelliptic(f, domain), F.p, F.e, emb, zs, emb.from_int(a))


# ---------------------------------------------------------------------------
# Cache files

_MAGIC = b"TFS1"
_VERSION = 1
_HEADER = struct.Struct("<4sB5Q")


def write_table_cache(path, table: TraceTable):
    """Write a residue-mode, unnormalized table in the TFS1 binary format."""
    emb = table.embedding
    if not emb.is_residue:
        raise CacheFormatError("complex tables are never cached")
    if table.normalized:
        raise CacheFormatError("only unnormalized tables are cached")
    expected = _cache_domain(table.family, table.q)
    if expected is None or not np.array_equal(table.xs, expected):
        raise CacheFormatError("table domain is not cacheable")
    header = _HEADER.pack(_MAGIC, _VERSION, table.p, table.e, table.family.tag, emb.d, emb.ell)
    payload = np.asarray(table.values, dtype="<u8").tobytes()
    Path(path).write_bytes(header + payload)


def _cache_domain(family, q):
    if isinstance(family, Kloosterman):
        return np.arange(1, q, dtype=np.int64)
    if isinstance(family, ExpSum):
        return np.arange(q, dtype=np.int64)
    return None


@dataclass(frozen=True)
class CachedFamily:
    tag: int
    weight = 1
    sign = -1


def read_table_cache(path, omega: int | None = None) -> TraceTable:
    """Read a TFS1 file; ``omega`` defaults to the canonical unity_root choice."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CacheFormatError("truncated header")
    magic, version, p, e, tag, d, ell = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != _VERSION:
        raise CacheFormatError("bad magic or version")
    if d != 4 * p:
        raise CacheFormatError("d != 4p")
    values = np.frombuffer(raw[_HEADER.size:], dtype="<u8").astype(np.int64)
    q = p**e
    if tag < (1 << 32):
        family = Kloosterman(int(tag))
        xs = np.arange(1, q, dtype=np.int64)
    else:
        family = CachedFamily(int(tag))
        xs = np.arange(q, dtype=np.int64)
    if len(values) != len(xs):
        raise CacheFormatError(f"expected {len(xs)} values, found {len(values)}")
    lam = ideal_above(ell, d) if omega is None else PrimeIdealDeg1(d, ell, omega)
    return TraceTable(family, p, e, Embedding(p, ideal=lam), xs, values)


def cache_dir():
    path = os.environ.get(CACHE_ENV)
    return Path(path) if path else None


def cached_kloosterman_table(n, F, emb, directory=None) -> TraceTable:
    """kloosterman_table, reusing a TFS1 file in ``directory`` (or $CYCLOSIEVE_CACHE) when present."""
    directory = Path(directory) if directory else cache_dir()
    if directory is None or not emb.is_residue:
        return kloosterman_table(n, F, emb)
    name = f"kl_n{n}_p{F.p}_e{F.e}_l{emb.ell}_w{emb.ideal.omega}.tfs"
    path = directory / name
    if path.exists():
        table = read_table_cache(path, omega=emb.ideal.omega)
        if isinstance(table.family, Kloosterman) and table.family.n == n:
            return replace(table, embedding=emb)
    table = kloosterman_table(n, F, emb)
    directory.mkdir(parents=True, exist_ok=True)
    write_table_cache(path, table)
    return table
