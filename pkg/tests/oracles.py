"""Brute-force reference implementations that share no code with the library.

Field arithmetic here goes through sympy's dense GF(p)[X] routines, primes
through trial division, groups through filtering all matrices.
"""

from __future__ import annotations

import cmath
import itertools
from functools import lru_cache

import numpy as np
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_add, gf_irreducible_p, gf_mul, gf_pow_mod, gf_rem


def is_prime_td(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def prime_count_td(a: int, m: int, L: int) -> int:
    return sum(1 for ell in range(2, L + 1) if ell % m == a % m and is_prime_td(ell))


class OracleField:
    """F_{p^e} with elements as base-p digit indices (lowest degree first)."""

    def __init__(self, p: int, e: int):
        self.p, self.e, self.q = p, e, p**e
        self.modulus = self._smallest_irreducible()

    def _smallest_irreducible(self):
        # lexicographic in (c_0, c_1, ..., c_{e-1}), low degree first
        for low in itertools.product(range(self.p), repeat=self.e):
            low = list(low)
            high = [1] + low[::-1]
            if gf_irreducible_p([ZZ(c) for c in high], self.p, ZZ):
                return tuple(low) + (1,)
        raise AssertionError("no irreducible found")

    def to_low(self, idx):
        out = []
        for _ in range(self.e):
            out.append(idx % self.p)
            idx //= self.p
        return out

    def _high(self, idx):
        h = self.to_low(idx)[::-1]
        while h and h[0] == 0:
            h = h[1:]
        return [ZZ(c) for c in h]

    def _index(self, high):
        low = [int(c) for c in high][::-1]
        return sum(c * self.p**i for i, c in enumerate(low))

    def _mod(self):
        return [ZZ(c) for c in self.modulus[::-1]]

    def add(self, a, b):
        return self._index(gf_add(self._high(a), self._high(b), self.p, ZZ))

    def mul(self, a, b):
        return self._index(gf_rem(gf_mul(self._high(a), self._high(b), self.p, ZZ),
                                  self._mod(), self.p, ZZ))

    def pow(self, a, k):
        return self._index(gf_pow_mod(self._high(a), k, self._mod(), self.p, ZZ))

    def inv(self, a):
        return self.pow(a, self.q - 2)

    def trace(self, a):
        acc = 0
        for i in range(self.e):
            acc = self.add(acc, self.pow(a, self.p**i))
        assert acc < self.p
        return acc

    def generator(self):
        for g in range(1, self.q):
            if all(self.pow(g, (self.q - 1) // r) != 1 for r in _prime_factors(self.q - 1)):
                return g
        raise AssertionError


def _prime_factors(n):
    out, d = set(), 2
    while d * d <= n:
        while n % d == 0:
            out.add(d)
            n //= d
        d += 1
    if n > 1:
        out.add(n)
    return out


@lru_cache(maxsize=None)
def oracle_field(p, e):
    return OracleField(p, e)


@lru_cache(maxsize=None)
def log_exp_trace_tables(p, e):
    """(exp, log, trace) numpy tables built from the oracle field."""
    F = oracle_field(p, e)
    g = F.generator()
    exp = np.empty(F.q - 1, dtype=np.int64)
    x = 1
    for k in range(F.q - 1):
        exp[k] = x
        x = F.mul(x, g)
    log = np.full(F.q, -1, dtype=np.int64)
    log[exp] = np.arange(F.q - 1)
    basis = [F.trace(p**i) for i in range(e)]
    digits = np.arange(F.q)[:, None] // (p ** np.arange(e)) % p
    trace = (digits @ np.array(basis)) % p
    return exp, log, trace


def kloosterman_counts_oracle(n, p, e, a):
    """counts[c] = #{x_1..x_n nonzero, prod = a, tr(sum) = c} by explicit loops."""
    F = oracle_field(p, e)
    counts = [0] * p
    units = range(1, F.q)
    for xs in itertools.product(units, repeat=n - 1):
        prod, s = 1, 0
        for x in xs:
            prod = F.mul(prod, x)
            s = F.add(s, x)
        last = F.mul(a, F.inv(prod))
        counts[F.trace(F.add(s, last))] += 1
    return counts


def residue_from_counts(counts, omega_p, ell):
    return sum(c * pow(omega_p, i, ell) for i, c in enumerate(counts)) % ell


def complex_from_counts(counts, p, k=1):
    return sum(c * cmath.exp(2j * cmath.pi * k * i / p) for i, c in enumerate(counts))


def kl2_count_matrix(p, e, xs=None, chunk=256):
    """C[i, c] = #{y != 0 : tr(y + x_i/y) = c}, vectorized over the oracle's log tables."""
    exp, log, trace = log_exp_trace_tables(p, e)
    q = p**e
    xs = np.arange(1, q) if xs is None else np.asarray(xs)
    ys = np.arange(1, q)
    log_y = log[ys]
    tr_y = trace[ys]
    out = np.zeros((len(xs), p), dtype=np.int64)
    for s in range(0, len(xs), chunk):
        lx = log[xs[s:s + chunk]]
        quot = exp[(lx[:, None] - log_y[None, :]) % (q - 1)]
        c = (tr_y[None, :] + trace[quot]) % p
        rows = np.arange(len(lx))[:, None] * p
        out[s:s + chunk] = np.bincount((rows + c).ravel(), minlength=len(lx) * p).reshape(-1, p)
    return xs, out


def sl2_histogram_bruteforce(ell):
    """Trace counts over all 2x2 matrices of determinant 1, by filtering."""
    a, b, c, d = np.meshgrid(*(np.arange(ell),) * 4, indexing="ij")
    det1 = (a * d - b * c) % ell == 1
    return np.bincount(((a + d) % ell)[det1], minlength=ell)


def squares_with_zero(ell):
    return sorted({(x * x) % ell for x in range(ell)})


def mth_powers_with_zero(ell, m):
    return sorted({pow(x, m, ell) for x in range(ell)} | {0})


def hyperelliptic_points_bruteforce(f, z, p):
    """#{(x, y) in F_p^2 : y^2 = f(x)(x - z)} + 1 with plain integer loops."""
    count = 1
    for x in range(p):
        rhs = sum(c * x**i for i, c in enumerate(f)) * (x - z) % p
        count += sum(1 for y in range(p) if (y * y - rhs) % p == 0)
    return count


def legendre_euler(a, ell):
    a %= ell
    if a == 0:
        return 0
    return 1 if pow(a, (ell - 1) // 2, ell) == 1 else -1


def sl2_trace_counts_closed_form(ell):
    """N_t = l^2 + l * chi(t^2 - 4): class sizes of SL_2(F_l) grouped by trace."""
    return np.array([ell * ell + ell * legendre_euler(t * t - 4, ell) for t in range(ell)],
                    dtype=np.int64)


def kloosterman_count_matrix(n, p, e):
    """C[a - 1, c] = #{x in (F_q^x)^n : prod = a, tr(sum) = c}, all a at once.

    Enumerates x_1..x_{n-1} explicitly; x_n = a / prod and the trace is additive.
    """
    exp, log, trace = log_exp_trace_tables(p, e)
    q = p**e
    grids = np.meshgrid(*(np.arange(q - 1),) * (n - 1), indexing="ij")
    log_prod = sum(g.ravel() for g in grids) % (q - 1) if n > 1 else np.zeros(1, dtype=np.int64)
    tr_head = sum(trace[exp[g.ravel()]] for g in grids) if n > 1 else np.zeros(1, dtype=np.int64)
    out = np.zeros((q - 1, p), dtype=np.int64)
    for a in range(1, q):
        last = exp[(log[a] - log_prod) % (q - 1)]
        out[a - 1] = np.bincount((tr_head + trace[last]) % p, minlength=p)
    return out


def eval_formula_naive(node, ell, env):
    """Plain recursive truth value of a parsed formula, one assignment at a time."""
    kind = type(node).__name__
    if kind == "Eq":
        return _term_naive(node.left, ell, env) == _term_naive(node.right, ell, env)
    if kind == "Not":
        return not eval_formula_naive(node.arg, ell, env)
    if kind == "And":
        return eval_formula_naive(node.left, ell, env) and eval_formula_naive(node.right, ell, env)
    if kind == "Or":
        return eval_formula_naive(node.left, ell, env) or eval_formula_naive(node.right, ell, env)
    if kind == "Quant":
        vals = (eval_formula_naive(node.body, ell, {**env, node.var: v}) for v in range(ell))
        return any(vals) if node.kind == "exists" else all(vals)
    raise TypeError(node)


def _term_naive(t, ell, env):
    kind = type(t).__name__
    if kind == "Const":
        return t.value % ell
    if kind == "Var":
        return env[t.name] % ell
    if kind == "Neg":
        return -_term_naive(t.arg, ell, env) % ell
    if kind == "Pow":
        return pow(_term_naive(t.base, ell, env), t.exponent, ell)
    a, b = _term_naive(t.left, ell, env), _term_naive(t.right, ell, env)
    return {"+": a + b, "-": a - b, "*": a * b}[t.op] % ell
