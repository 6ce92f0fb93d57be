"""Small finite classical groups over F_l: enumeration, trace histograms, Gaussian sums.

Groups are enumerated as the closure of a generating set under right
multiplication (breadth first), with matrices stored as integer codes
sum a_{ij} l^{i n + j}.  The invariant forms are pinned in
:func:`invariant_form` and listed in ``forms.md`` at the repository root.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from sympy import isprime

from .errors import (
    BadDimension,
    GroupTooLarge,
    MismatchedField,
    NotPrime,
    ResourceError,
    TrivialCharacter,
    ValidationError,
)

FAMILIES = ("SL", "Sp", "SOplus", "SOminus", "SOodd", "GL")
DEFAULT_CAP = 10**7


def _check_dimension(family, n):
    if family not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if family in ("SL", "GL") and n < 1:
        raise BadDimension(f"{family}_{n}")
    if family == "Sp" and (n < 2 or n % 2):
        raise BadDimension(f"Sp_n needs even n >= 2, got {n}")
    if family in ("SOplus", "SOminus") and (n < 4 or n % 2):
        raise BadDimension(f"{family}_n needs even n >= 4, got {n}")
    if family == "SOodd" and (n < 3 or n % 2 == 0):
        raise BadDimension(f"SOodd_n needs odd n >= 3, got {n}")


@dataclass(frozen=True)
class GroupSpec:
    family: str
    n: int
    ell: int
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        _check_dimension(self.family, self.n)
        if not isprime(self.ell):
            raise NotPrime(f"{self.ell} is not prime")
        if self.ell == 2:
            raise ValidationError("l must be odd")

    @property
    def label(self):
        return f"{self.family}_{self.n}(F_{self.ell})"

    @property
    def form(self):
        return invariant_form(self.family, self.n, self.ell)


# ---------------------------------------------------------------------------
# Exact constants


def alpha_exponent(family: str, n: int) -> Fraction:
    """Gaussian-sum cancellation exponent of the Lie-type family."""
    _check_dimension(family, n)
    if family == "GL":
        return Fraction(n * (n - 1), 2)
    if family == "SL":
        return Fraction(n * n - 1, 2)
    if family in ("Sp", "SOminus"):
        return Fraction(n * (n + 2), 8)
    if family == "SOodd":
        return Fraction(n * n - 1, 8)
    return Fraction(n * (n - 2), 8)


def dim_rank(family: str, n: int):
    _check_dimension(family, n)
    if family == "SL":
        return n * n - 1, n - 1
    if family == "GL":
        return n * n, n
    if family == "Sp":
        return n * (n + 1) // 2, n // 2
    return n * (n - 1) // 2, n // 2


def sieve_exponent_B(family: str, n: int) -> Fraction:
    """Large-sieve exponent B by family (closed forms per family)."""
    _check_dimension(family, n)
    if family == "GL":
        raise ValidationError("GL_n has no sieve exponent; use SL_n")
    if family == "SL":
        return Fraction(2 * n * n + n - 1, 2)
    if family == "SOodd":
        return Fraction(2 * n * n - n + 3, 4)
    return Fraction(2 * n * n + 3 * n + 4, 4)


def sieve_exponent_from_dim(family: str, n: int) -> Fraction:
    """1 + dim(G) + rank(G)/2."""
    dim, rank = dim_rank(family, n)
    return 1 + dim + Fraction(rank, 2)


def closed_form_order(family: str, n: int, ell: int) -> int:
    _check_dimension(family, n)
    q = ell
    if family in ("GL", "SL"):
        gl = math.prod(q**n - q**i for i in range(n))
        return gl if family == "GL" else gl // (q - 1)
    m = n // 2
    if family in ("Sp", "SOodd"):
        return q ** (m * m) * math.prod(q ** (2 * i) - 1 for i in range(1, m + 1))
    eps = 1 if family == "SOplus" else -1
    return q ** (m * (m - 1)) * (q**m - eps) * math.prod(q ** (2 * i) - 1 for i in range(1, m))


# ---------------------------------------------------------------------------
# Forms and generators


def smallest_nonsquare(ell):
    return next(a for a in range(2, ell) if pow(a, (ell - 1) // 2, ell) == ell - 1)


def invariant_form(family, n, ell):
    """Gram matrix preserved by the group (None for SL/GL)."""
    if family in ("SL", "GL"):
        return None
    m = n // 2
    I = np.eye(m, dtype=np.int64)
    Z = np.zeros((m, m), dtype=np.int64)
    if family == "Sp":
        return np.block([[Z, I], [-I, Z]]) % ell
    if family == "SOodd":
        return np.eye(n, dtype=np.int64)
    if family == "SOplus":
        return np.block([[Z, I], [I, Z]])
    k = m - 1
    Ik = np.eye(k, dtype=np.int64)
    Zk = np.zeros((k, k), dtype=np.int64)
    M = np.zeros((n, n), dtype=np.int64)
    M[:2 * k, :2 * k] = np.block([[Zk, Ik], [Ik, Zk]])
    M[2 * k, 2 * k] = 1
    M[2 * k + 1, 2 * k + 1] = (-smallest_nonsquare(ell)) % ell
    return M


def _elementary(n, i, j, c, ell):
    E = np.eye(n, dtype=np.int64)
    E[i, j] = c % ell
    return E


def _reflection(u, M, ell):
    Mu = M @ u % ell
    Q = int(u @ Mu % ell)
    coef = (-2 * pow(Q, -1, ell)) % ell
    return (np.eye(len(u), dtype=np.int64) + coef * np.outer(u, Mu)) % ell


def generators(spec: GroupSpec, count: int = 4) -> np.ndarray:
    """Generating set; ``count`` is the number of reflection pairs for orthogonal groups."""
    n, ell, fam = spec.n, spec.ell, spec.family
    gens = []
    if fam in ("SL", "GL"):
        gens = [_elementary(n, i, j, 1, ell) for i in range(n) for j in range(n) if i != j]
        if fam == "GL":
            D = np.eye(n, dtype=np.int64)
            D[0, 0] = _primitive_root(ell)
            gens.append(D)
    elif fam == "Sp":
        J = spec.form
        vecs = []
        for i in range(n):
            vecs.append(np.eye(n, dtype=np.int64)[i])
            for j in range(i + 1, n):
                for s in (1, -1):
                    v = np.zeros(n, dtype=np.int64)
                    v[i], v[j] = 1, s % ell
                    vecs.append(v)
        # x -> x + <x, v> v with <x, v> = x^T J v
        gens = [(np.eye(n, dtype=np.int64) + np.outer(v, J @ v)) % ell for v in vecs]
    else:
        gens = _orthogonal_generators(spec, count)
    return np.array(gens, dtype=np.int64) % ell


def _orthogonal_generators(spec, count):
    # products r_{u0} r_u of reflections in seeded random anisotropic vectors
    M, ell, n = spec.form, spec.ell, spec.n
    rng = np.random.default_rng([spec.n, spec.ell, count])
    vecs = []
    while len(vecs) < count + 1:
        u = rng.integers(0, ell, size=n)
        if int(u @ M @ u) % ell:
            vecs.append(u)
    r0 = _reflection(vecs[0], M, ell)
    return [(r0 @ _reflection(u, M, ell)) % ell for u in vecs[1:]]


def _primitive_root(ell):
    from sympy import primitive_root

    return int(primitive_root(ell))


# ---------------------------------------------------------------------------
# Enumeration


@dataclass(frozen=True)
class TraceHistogram:
    ell: int
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def as_dict(self):
        return {t: int(c) for t, c in enumerate(self.counts)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "count"])
        for t, c in enumerate(self.counts.tolist()):
            w.writerow([t, c])
        return buf.getvalue()

    def probabilities(self) -> np.ndarray:
        return self.counts / self.total


def _powers(n, ell):
    if ell ** (n * n) >= 2**63:
        raise ResourceError(f"{n}x{n} matrices over F_{ell} do not fit 64-bit codes")
    return ell ** np.arange(n * n, dtype=np.int64)


def encode(mats, ell):
    mats = np.asarray(mats, dtype=np.int64)
    n = mats.shape[-1]
    return (mats.reshape(-1, n * n) * _powers(n, ell)).sum(axis=1)


def decode(codes, n, ell):
    codes = np.asarray(codes, dtype=np.int64)
    return ((codes[:, None] // _powers(n, ell)) % ell).reshape(-1, n, n)


def _closure(gens, ell, cap):
    n = gens.shape[1]
    ident = np.eye(n, dtype=np.int64)[None]
    seen = set(encode(ident, ell).tolist())
    frontier = ident
    batch = max(1, 2**21 // (len(gens) * n * n))
    while len(frontier):
        new_codes = []
        for f0 in range(0, len(frontier), batch):
            prods = np.einsum("fij,gjk->fgik", frontier[f0:f0 + batch], gens) % ell
            codes = np.unique(encode(prods.reshape(-1, n, n), ell))
            fresh = [c for c in codes.tolist() if c not in seen]
            seen.update(fresh)
            new_codes.extend(fresh)
            if len(seen) > cap:
                raise GroupTooLarge(f"closure exceeded the cap {cap}")
        frontier = decode(np.array(new_codes, dtype=np.int64), n, ell)
    return np.sort(np.fromiter(seen, dtype=np.int64, count=len(seen)))


@functools.lru_cache(maxsize=32)
def group_codes(spec: GroupSpec) -> np.ndarray:
    """Sorted codes of all group elements (closure of :func:`generators`)."""
    expected = closed_form_order(spec.family, spec.n, spec.ell)
    if expected > spec.cap:
        raise GroupTooLarge(f"|{spec.label}| = {expected} exceeds the cap {spec.cap}")
    count = 4
    codes = _closure(generators(spec, count), spec.ell, spec.cap)
    # a random reflection set can land in a proper subgroup; enlarge and retry
    while spec.family.startswith("SO") and len(codes) < expected and count < 64:
        count *= 2
        codes = _closure(generators(spec, count), spec.ell, spec.cap)
    if len(codes) != expected:
        raise AssertionError(f"closure of {spec.label} has {len(codes)} elements, expected {expected}")
    return codes


def group_elements(spec: GroupSpec) -> np.ndarray:
    return decode(group_codes(spec), spec.n, spec.ell)


def _trace_of_codes(codes, n, ell):
    pw = _powers(n, ell)
    diag = pw[[i * n + i for i in range(n)]]
    return sum((codes // d) % ell for d in diag) % ell


@functools.lru_cache(maxsize=32)
def enumerate_group(spec: GroupSpec):
    """(order, TraceHistogram) by exhaustive closure."""
    codes = group_codes(spec)
    counts = np.zeros(spec.ell, dtype=np.int64)
    step = 2**20
    for s in range(0, len(codes), step):
        counts += np.bincount(_trace_of_codes(codes[s:s + step], spec.n, spec.ell), minlength=spec.ell)
    counts.setflags(write=False)
    return len(codes), TraceHistogram(spec.ell, counts)


def is_in_group(spec: GroupSpec, g) -> bool:
    """Membership test from the defining equations (determinant and form)."""
    g = np.asarray(g, dtype=np.int64) % spec.ell
    det = _det_mod(g, spec.ell)
    if spec.family == "GL":
        return det != 0
    if det != 1:
        return False
    M = spec.form
    if M is None:
        return True
    return bool(np.array_equal((g.T @ M @ g) % spec.ell, M % spec.ell))


def _det_mod(g, ell):
    a = [[int(v) % ell for v in row] for row in g]
    n, det = len(a), 1
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det = det * a[c][c] % ell
        inv = pow(a[c][c], -1, ell)
        for r in range(c + 1, n):
            f = a[r][c] * inv % ell
            a[r] = [(x - f * y) % ell for x, y in zip(a[r], a[c])]
    return det % ell


# ---------------------------------------------------------------------------
# Gaussian sums and trace probabilities


def gauss_sum(spec_or_hist, c: int) -> complex:
    """(1/|G|) sum_g psi(c tr g) with psi(t) = exp(2 pi i t / l)."""
    hist = _hist(spec_or_hist)
    if c % hist.ell == 0:
        raise TrivialCharacter("c = 0 gives the trivial character")
    t = np.arange(hist.ell)
    return complex(hist.counts @ np.exp(2j * np.pi * c * t / hist.ell)) / hist.total


def gauss_sum_max(spec_or_hist):
    """(max over c != 0 of |gauss_sum|, attaining c)."""
    hist = _hist(spec_or_hist)
    mags = [abs(gauss_sum(hist, c)) for c in range(1, hist.ell)]
    best = int(np.argmax(mags))
    return mags[best], best + 1


def _hist(spec_or_hist) -> TraceHistogram:
    if isinstance(spec_or_hist, TraceHistogram):
        return spec_or_hist
    return enumerate_group(spec_or_hist)[1]


def prob_trace_in(spec_or_hist, A) -> Fraction:
    """P(tr g in A) for g uniform in G, exactly."""
    hist = _hist(spec_or_hist)
    if A.ell != hist.ell:
        raise MismatchedField(f"set lives in F_{A.ell}, group in F_{hist.ell}")
    return Fraction(int(hist.counts[A.members].sum()), hist.total)


def group_metadata(spec: GroupSpec, order: int | None = None) -> dict:
    alpha = alpha_exponent(spec.family, spec.n)
    record = {"family": spec.family, "n": spec.n, "ell": spec.ell,
              "order": order if order is not None else closed_form_order(spec.family, spec.n, spec.ell),
              "alpha_num": alpha.numerator, "alpha_den": alpha.denominator}
    if spec.family != "GL":
        B = sieve_exponent_B(spec.family, spec.n)
        record.update(B_num=B.numerator, B_den=B.denominator)
    return record


def fitted_exponent(value: float, ell: int) -> float:
    """-log_l(value)."""
    return -math.log(value) / math.log(ell) if value > 0 else math.inf


__all__ = [
    "FAMILIES", "GroupSpec", "TraceHistogram", "alpha_exponent", "closed_form_order", "decode",
    "dim_rank", "encode", "enumerate_group", "fitted_exponent", "gauss_sum", "gauss_sum_max",
    "generators", "group_codes", "group_elements", "group_metadata", "invariant_form",
    "is_in_group", "prob_trace_in", "sieve_exponent_B", "sieve_exponent_from_dim",
    "smallest_nonsquare",
]
