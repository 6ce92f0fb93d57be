"""First-order formulas in the language of rings, evaluated over prime fields F_l.

Formulas have exactly one free variable ``x``.  Evaluation is exhaustive:
each bound variable becomes a new numpy axis of length l, so a formula of
quantifier depth k costs O(l^(k+1)) cell operations (chunked over x when
that is too large to hold at once).

Concrete syntax::

    formula := quant* bool
    quant   := ("exists" | "forall") ident ":"
    bool    := bool "or" bool | bool "and" bool | "not" bool | "(" formula ")" | atom
    atom    := poly "=" poly
    poly    := poly ("+" | "-" | "*") poly | poly "^" nat | "-" poly | nat | ident | "(" poly ")"

``a -> b`` (or ``a implies b``) is accepted and stored as ``not a or b``.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import (
    DepthExceeded,
    FieldTooLargeForDepth,
    FormulaSyntaxError,
    UnboundVariable,
    ValidationError,
)
from .cyclotomic import primes_up_to

DEPTH_CAP = 3
EVAL_BUDGET = 10**9
_CHUNK_CELLS = 2**23

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-", "*"
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Neg:
    arg: "Term"


@dataclass(frozen=True)
class Pow:
    base: "Term"
    exponent: int


Term = Union[Const, Var, BinOp, Neg, Pow]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Quant:
    kind: str  # "exists" | "forall"
    var: str
    body: "Formula"


Formula = Union[Eq, Not, And, Or, Quant]

FREE_VAR = "x"

# ---------------------------------------------------------------------------
# Tokenizer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>->|[-+*^=():]))"
)
_KEYWORDS = {"exists", "forall", "and", "or", "not", "implies"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def tokenize(text: str):
    toks, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise FormulaSyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r}",
                                     len(text) - len(text[pos:].lstrip()))
        kind = m.lastgroup
        tok_text = m.group(kind)
        start = m.start(kind)
        if kind == "ident" and tok_text in _KEYWORDS:
            kind = "kw"
        toks.append(_Tok(kind, tok_text, start))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return FormulaSyntaxError(msg, tok.pos)

    def accept(self, text):
        if self.tok.text == text and self.tok.kind in ("op", "kw"):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            got = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {got!r}")

    # formulas
    def formula(self):
        if self.tok.kind == "kw" and self.tok.text in ("exists", "forall"):
            kind = self.tok.text
            self.i += 1
            if self.tok.kind != "ident":
                raise self.error("expected a variable name after quantifier")
            var = self.tok.text
            self.i += 1
            self.expect(":")
            return Quant(kind, var, self.formula())
        return self.implication()

    def implication(self):
        left = self.disjunction()
        if self.accept("->") or self.accept("implies"):
            right = self.implication()
            return Or(Not(left), right)
        return left

    def disjunction(self):
        node = self.conjunction()
        while self.accept("or"):
            node = Or(node, self.conjunction())
        return node

    def conjunction(self):
        node = self.negation()
        while self.accept("and"):
            node = And(node, self.negation())
        return node

    def negation(self):
        if self.accept("not"):
            return Not(self.negation())
        if self.tok.kind == "kw" and self.tok.text in ("exists", "forall"):
            return self.formula()
        if self.tok.text == "(":
            # "(" could open a sub-formula or a polynomial; try formula first
            save = self.i
            self.i += 1
            try:
                inner = self.formula()
                self.expect(")")
                if self.tok.text in ("=", "+", "-", "*", "^"):
                    raise self.error("polynomial continuation")
                return inner
            except FormulaSyntaxError:
                self.i = save
        return self.atom()

    def atom(self):
        left = self.poly()
        if not self.accept("="):
            got = self.tok.text or "end of input"
            raise self.error(f"expected '=', found {got!r}")
        return Eq(left, self.poly())

    # polynomials
    def poly(self):
        node = self.product()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.product())
        return node

    def product(self):
        node = self.unary()
        while self.accept("*"):
            node = BinOp("*", node, self.unary())
        return node

    def unary(self):
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.accept("^"):
            if self.tok.kind != "num":
                raise self.error("exponent must be a natural-number literal")
            exp = int(self.tok.text)
            self.i += 1
            return Pow(base, exp)
        return base

    def primary(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(int(tok.text))
        if tok.kind == "ident":
            self.i += 1
            return Var(tok.text)
        if self.accept("("):
            inner = self.poly()
            self.expect(")")
            return inner
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")


def parse_formula(text: str, depth_cap: int = DEPTH_CAP) -> Formula:
    """Parse and check well-formedness (bindings, free variable ``x``, depth cap)."""
    p = _Parser(text)
    node = p.formula()
    if p.tok.kind != "eof":
        raise p.error(f"trailing input {p.tok.text!r}")
    _check_scopes(node, frozenset({FREE_VAR}), set())
    depth = quantifier_depth(node)
    if depth > depth_cap:
        raise DepthExceeded(f"quantifier depth {depth} exceeds cap {depth_cap}")
    return node


def _check_scopes(node, bound, seen):
    if isinstance(node, Quant):
        if node.var == FREE_VAR or node.var in seen:
            raise ValidationError(f"variable {node.var!r} is bound more than once")
        seen.add(node.var)
        _check_scopes(node.body, bound | {node.var}, seen)
    elif isinstance(node, (And, Or)):
        _check_scopes(node.left, bound, seen)
        _check_scopes(node.right, bound, seen)
    elif isinstance(node, Not):
        _check_scopes(node.arg, bound, seen)
    elif isinstance(node, Eq):
        for name in term_variables(node.left) | term_variables(node.right):
            if name not in bound:
                raise UnboundVariable(name)


def term_variables(t) -> set:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, BinOp):
        return term_variables(t.left) | term_variables(t.right)
    if isinstance(t, (Neg,)):
        return term_variables(t.arg)
    if isinstance(t, Pow):
        return term_variables(t.base)
    return set()


def quantifier_depth(node) -> int:
    if isinstance(node, Quant):
        return 1 + quantifier_depth(node.body)
    if isinstance(node, (And, Or)):
        return max(quantifier_depth(node.left), quantifier_depth(node.right))
    if isinstance(node, Not):
        return quantifier_depth(node.arg)
    return 0


def reduction_safe(node) -> bool:
    """True when the formula contains no negation (implications were rewritten to negations)."""
    if isinstance(node, Not):
        return False
    if isinstance(node, Quant):
        return reduction_safe(node.body)
    if isinstance(node, (And, Or)):
        return reduction_safe(node.left) and reduction_safe(node.right)
    return True


# ---------------------------------------------------------------------------
# Pretty printer (output re-parses to the same AST)

_TERM_PREC = {"+": 1, "-": 1, "*": 2}


def format_term(t, prec=0) -> str:
    if isinstance(t, Const):
        return str(t.value)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, BinOp):
        p = _TERM_PREC[t.op]
        # left-associative: the right operand needs parentheses at equal precedence
        s = f"{format_term(t.left, p)} {t.op} {format_term(t.right, p + 1)}"
        return f"({s})" if p < prec else s
    if isinstance(t, Neg):
        s = f"-{format_term(t.arg, 3)}"
        return f"({s})" if prec > 3 else s
    if isinstance(t, Pow):
        s = f"{format_term(t.base, 5)}^{t.exponent}"
        return f"({s})" if prec > 4 else s
    raise TypeError(t)


_FORM_PREC = {Or: 1, And: 2}


def format_formula(node, prec=0) -> str:
    if isinstance(node, Eq):
        return f"{format_term(node.left)} = {format_term(node.right)}"
    if isinstance(node, Quant):
        s = f"{node.kind} {node.var}: {format_formula(node.body)}"
        return f"({s})" if prec > 0 else s
    if isinstance(node, Not):
        return f"not {format_formula(node.arg, 3)}"
    if isinstance(node, (And, Or)):
        p = _FORM_PREC[type(node)]
        word = "and" if isinstance(node, And) else "or"
        s = f"{format_formula(node.left, p)} {word} {format_formula(node.right, p + 1)}"
        return f"({s})" if p < prec else s
    raise TypeError(node)


# ---------------------------------------------------------------------------
# Evaluation


def _eval_term(t, env, ell):
    if isinstance(t, Const):
        return t.value % ell
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, BinOp):
        a = _eval_term(t.left, env, ell)
        b = _eval_term(t.right, env, ell)
        if t.op == "+":
            return (a + b) % ell
        if t.op == "-":
            return (a - b) % ell
        return (a * b) % ell
    if isinstance(t, Neg):
        return (-_eval_term(t.arg, env, ell)) % ell
    if isinstance(t, Pow):
        base = _eval_term(t.base, env, ell)
        return _powmod_array(base, t.exponent, ell)
    raise TypeError(t)


def _powmod_array(base, k, ell):
    if k == 0:
        return np.ones_like(np.asarray(base)) % ell
    acc = None
    sq = base
    while k:
        if k & 1:
            acc = sq if acc is None else (acc * sq) % ell
        k >>= 1
        if k:
            sq = (sq * sq) % ell
    return acc


def _eval(node, env, axis, ell, ndim):
    """Boolean array over axes 0..ndim-1; axis 0 is x, axis k the k-th nested quantifier.

    Every variable carries the full rank ``ndim`` so atoms that skip a bound
    variable still broadcast along the right axes.
    """
    if isinstance(node, Eq):
        return np.asarray(_eval_term(node.left, env, ell) == _eval_term(node.right, env, ell))
    if isinstance(node, Not):
        return ~_eval(node.arg, env, axis, ell, ndim)
    if isinstance(node, And):
        return _eval(node.left, env, axis, ell, ndim) & _eval(node.right, env, axis, ell, ndim)
    if isinstance(node, Or):
        return _eval(node.left, env, axis, ell, ndim) | _eval(node.right, env, axis, ell, ndim)
    if isinstance(node, Quant):
        shape = [1] * ndim
        shape[axis] = ell
        inner_env = dict(env)
        inner_env[node.var] = np.arange(ell, dtype=np.int64).reshape(shape)
        body = np.asarray(_eval(node.body, inner_env, axis + 1, ell, ndim))
        if body.ndim == 0:  # variable-free body
            return body
        reduce = np.any if node.kind == "exists" else np.all
        return reduce(body, axis=axis, keepdims=True)
    raise TypeError(node)


def _eval_points(phi, xs, ell, depth):
    ndim = depth + 1
    env = {FREE_VAR: xs.reshape((-1,) + (1,) * depth)}
    res = _eval(phi, env, 1, ell, ndim)
    return np.broadcast_to(res, (len(xs),) + (1,) * depth).reshape(len(xs))


def _image_fast_path(node):
    """Recognize ``exists y: x = P(y)`` (either side) and return P."""
    if isinstance(node, Quant) and node.kind == "exists" and isinstance(node.body, Eq):
        eq = node.body
        for lhs, rhs in ((eq.left, eq.right), (eq.right, eq.left)):
            if lhs == Var(FREE_VAR) and term_variables(rhs) <= {node.var}:
                return node.var, rhs
    return None


def eval_on_all(phi, ell: int, budget: int = EVAL_BUDGET) -> np.ndarray:
    """Boolean mask over a = 0..l-1 of the points where ``phi`` holds."""
    depth = quantifier_depth(phi)
    if ell**depth > budget:
        raise FieldTooLargeForDepth(f"{ell}^{depth} exceeds the evaluation budget {budget}")
    fast = _image_fast_path(phi)
    if fast is not None:
        var, poly = fast
        image = _eval_term(poly, {var: np.arange(ell, dtype=np.int64)}, ell)
        mask = np.zeros(ell, dtype=bool)
        mask[np.broadcast_to(image, (ell,))] = True
        return mask
    chunk = max(1, _CHUNK_CELLS // max(1, ell**depth))
    out = np.empty(ell, dtype=bool)
    for a0 in range(0, ell, chunk):
        xs = np.arange(a0, min(ell, a0 + chunk), dtype=np.int64)
        out[a0:a0 + len(xs)] = _eval_points(phi, xs, ell, depth)
    return out


def eval_formula(phi, ell: int, a: int, budget: int = EVAL_BUDGET) -> bool:
    """Truth value of phi(a) over F_l with quantifiers ranging over all of F_l."""
    depth = quantifier_depth(phi)
    if ell**depth > budget:
        raise FieldTooLargeForDepth(f"{ell}^{depth} exceeds the evaluation budget {budget}")
    return bool(_eval_points(phi, np.array([a % ell], dtype=np.int64), ell, depth)[0])


# ---------------------------------------------------------------------------
# Local sets


@dataclass(frozen=True)
class LocalSet:
    """A subset of F_l with its exact density."""

    ell: int
    members: np.ndarray = field(repr=False, compare=False)
    provenance: str = "explicit-list"

    def __post_init__(self):
        m = np.asarray(self.members, dtype=bool)
        if m.shape != (self.ell,):
            raise ValidationError(f"membership mask must have length {self.ell}")
        m.setflags(write=False)
        object.__setattr__(self, "members", m)

    @property
    def count(self) -> int:
        return int(self.members.sum())

    @property
    def density(self) -> Fraction:
        return Fraction(self.count, self.ell)

    def elements(self):
        return np.flatnonzero(self.members)

    def __contains__(self, a):
        return bool(self.members[int(a) % self.ell])

    def __len__(self):
        return self.count

    def __eq__(self, other):
        return (isinstance(other, LocalSet) and self.ell == other.ell
                and np.array_equal(self.members, other.members))

    def __hash__(self):
        return hash((self.ell, self.members.tobytes()))

    def complement(self):
        return LocalSet(self.ell, ~self.members, f"not({self.provenance})")

    def scaled(self, s: int):
        """{s a : a in A}."""
        s %= self.ell
        if s == 0:
            raise ValidationError("scale factor must be a unit")
        out = np.zeros(self.ell, dtype=bool)
        out[(self.elements() * s) % self.ell] = True
        return LocalSet(self.ell, out, f"{s}*({self.provenance})")

    @classmethod
    def from_elements(cls, ell, elements, provenance="explicit-list"):
        mask = np.zeros(ell, dtype=bool)
        mask[np.asarray(list(elements), dtype=np.int64) % ell] = True
        return cls(ell, mask, provenance)


def definable_subset(phi, ell: int, budget: int = EVAL_BUDGET) -> LocalSet:
    if isinstance(phi, str):
        phi = parse_formula(phi)
    return LocalSet(ell, eval_on_all(phi, ell, budget), f"formula: {format_formula(phi)}")


def mth_power_set(ell: int, m: int) -> LocalSet:
    """{0} together with the m-th powers in F_l."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    xs = np.arange(ell, dtype=np.int64)
    mask = np.zeros(ell, dtype=bool)
    mask[_powmod_array(xs, m, ell)] = True
    mask[0] = True
    return LocalSet(ell, mask, f"{m}-th powers")


def mth_power_density(ell: int, m: int) -> Fraction:
    return Fraction(ell - 1, ell) / math.gcd(m, ell - 1) + Fraction(1, ell)


def polynomial_image_set(ell: int, coeffs) -> LocalSet:
    """f(F_l) for an integer polynomial with coefficients lowest degree first."""
    xs = np.arange(ell, dtype=np.int64)
    acc = np.zeros(ell, dtype=np.int64)
    for c in reversed(list(coeffs)):
        acc = (acc * xs + int(c)) % ell
    mask = np.zeros(ell, dtype=bool)
    mask[acc] = True
    return LocalSet(ell, mask, f"image of {list(coeffs)}")


def polynomial_image_formula(coeffs) -> str:
    """``exists y: x = f(y)`` as formula text."""
    terms = []
    for i, c in enumerate(coeffs):
        if c == 0:
            continue
        mono = "1" if i == 0 else ("y" if i == 1 else f"y^{i}")
        if i == 0:
            terms.append(str(abs(c)))
        else:
            terms.append(mono if abs(c) == 1 else f"{abs(c)}*{mono}")
        terms[-1] = ("-" if c < 0 else "+") + terms[-1]
    body = "".join(reversed(terms)).lstrip("+") or "0"
    return f"exists y: x = {body}"


def image_density_expected(d: int) -> Fraction:
    """sum_{n=1}^d (-1)^{n+1}/n!: image density of a polynomial with Galois group S_d."""
    if d < 1:
        raise ValidationError("degree must be >= 1")
    return sum((Fraction((-1) ** (n + 1), math.factorial(n)) for n in range(1, d + 1)), Fraction(0))


# ---------------------------------------------------------------------------
# Density scans


@dataclass
class CDMScan:
    rows: list  # (ell, count, density Fraction)
    clusters: list  # cluster centers (floats)
    assignments: list
    max_scaled_deviation: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ell", "count", "density_num", "density_den"])
        for ell, count, dens in self.rows:
            w.writerow([ell, count, dens.numerator, dens.denominator])
        return buf.getvalue()


def _cluster(values, gap):
    order = np.argsort(values)
    groups, current = [], [order[0]]
    for a, b in zip(order, order[1:]):
        if values[b] - values[a] > gap:
            groups.append(current)
            current = []
        current.append(b)
    groups.append(current)
    return groups


def cdm_scan(phi, primes, centers=None, gap=None, budget: int = EVAL_BUDGET) -> CDMScan:
    """Densities of phi(F_l) over ``primes`` with an empirical cluster report.

    Without ``centers`` the densities are split into clusters at gaps wider
    than ``gap`` (default 1/sqrt(min l)); deviation is measured from each
    point's cluster center (or nearest given center) and scaled by sqrt(l).
    """
    if isinstance(phi, str):
        phi = parse_formula(phi)
    primes = [int(p) for p in primes]
    if not primes:
        raise ValidationError("empty prime list")
    rows = []
    for ell in primes:
        s = definable_subset(phi, ell, budget)
        rows.append((ell, s.count, s.density))
    dens = np.array([float(r[2]) for r in rows])
    ells = np.array(primes, dtype=float)
    if centers is None:
        gap = gap if gap is not None else 1 / math.sqrt(min(primes))
        groups = _cluster(dens, gap)
        centers = [float(np.mean(dens[g])) for g in groups]
    centers = [float(c) for c in centers]
    assign = [int(np.argmin([abs(v - c) for c in centers])) for v in dens]
    dev = np.abs(dens - np.array([centers[i] for i in assign])) * np.sqrt(ells)
    return CDMScan(rows, centers, assign, float(dev.max()))


def parse_prime_range(text: str):
    """``"a..b"`` -> primes in [a, b]."""
    m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*", text)
    if not m:
        raise ValidationError(f"prime range must look like a..b, got {text!r}")
    lo, hi = int(m.group(1)), int(m.group(2))
    return [p for p in primes_up_to(hi) if p >= lo]
