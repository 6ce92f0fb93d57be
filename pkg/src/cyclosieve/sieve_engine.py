"""Large-sieve experiments: which x in F_q have t(x) mod lambda in A_lambda for every lambda?

A :class:`SieveConfig` names a trace-function family, the field, a target set
descriptor and the ideal set.  :func:`build_sieve_plan` resolves it to exact
data (B, L, ideals, local sets, |Omega_lambda|/|G|, P(L)); :func:`survivor_count`
intersects the per-ideal conditions over trace tables; :func:`density_report`
runs both and adds the bound and annotations.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from sympy import totient

from . import __version__
from .cyclotomic import PrimeIdealDeg1, deg1_prime_ideals, sqrt_q_mod
from .errors import (
    EmptyLambda,
    GroupTooLarge,
    LocalDensityOne,
    NotCoprime,
    TableMismatch,
    UnsafeFormula,
    ValidationError,
    ZeroPL,
)
from .field_core import make_field
from .matrix_groups import (
    GroupSpec,
    closed_form_order,
    enumerate_group,
    prob_trace_in,
    sieve_exponent_B,
)
from .ring_formulas import (
    LocalSet,
    definable_subset,
    mth_power_set,
    parse_formula,
    polynomial_image_set,
    reduction_safe,
)
from .trace_functions import (
    Embedding,
    ExpSum,
    Hyperelliptic,
    Kloosterman,
    RationalFunction,
    TraceTable,
    cached_kloosterman_table,
    exp_sum_table,
    expsum_hypotheses,
    hyperelliptic_table,
)

# ---------------------------------------------------------------------------
# Target-set descriptors


@dataclass(frozen=True)
class MthPowers:
    m: int

    def local_set(self, ell):
        return mth_power_set(ell, self.m)


@dataclass(frozen=True)
class PolynomialImage:
    coeffs: tuple

    def local_set(self, ell):
        return polynomial_image_set(ell, self.coeffs)


@dataclass(frozen=True)
class FormulaTarget:
    text: str

    def local_set(self, ell):
        return definable_subset(parse_formula(self.text), ell)


@dataclass(frozen=True)
class ExplicitList:
    """Integers reduced mod l, or per-l element lists in ``per_ell``."""

    elements: tuple = ()
    per_ell: tuple = ()  # ((ell, (a, b, ...)), ...)

    def local_set(self, ell):
        chosen = dict(self.per_ell).get(ell, self.elements)
        return LocalSet.from_elements(ell, chosen)


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class SieveConfig:
    family: object
    p: int
    e: int
    target: object
    L: int | None = None
    condition: tuple | None = None  # (m', classes); None picks the default
    normalized: bool = False  # does the target set refer to normalized values?
    group: tuple | None = None  # (family, n)
    enum_cap: int = 10**7
    eps: float = 0.1
    jobs: int = 1

    @property
    def q(self):
        return self.p**self.e

    @property
    def d(self):
        return 4 * self.p

    def as_dict(self):
        return {
            "family": _family_record(self.family),
            "p": self.p,
            "e": self.e,
            "target": _target_record(self.target),
            "L": self.L,
            "condition": None if self.condition is None
            else [self.condition[0], sorted(self.condition[1])],
            "normalized": self.normalized,
            "group": list(self.group) if self.group else None,
            "enum_cap": self.enum_cap,
            "eps": self.eps,
        }

    @classmethod
    def from_dict(cls, rec: dict):
        rec = dict(rec)
        cond = rec.get("condition")
        group = rec.get("group")
        return cls(
            family=family_from_record(rec["family"]),
            p=int(rec["p"]),
            e=int(rec.get("e", 1)),
            target=target_from_record(rec["target"]),
            L=None if rec.get("L") is None else int(rec["L"]),
            condition=None if cond is None else (int(cond[0]), tuple(int(c) for c in cond[1])),
            normalized=bool(rec.get("normalized", False)),
            group=None if group is None else (str(group[0]), int(group[1])),
            enum_cap=int(rec.get("enum_cap", 10**7)),
            eps=float(rec.get("eps", 0.1)),
            jobs=int(rec.get("jobs", 1)),
        )


def _family_record(fam):
    if isinstance(fam, Kloosterman):
        return {"kind": "kloosterman", "n": fam.n}
    if isinstance(fam, ExpSum):
        return {"kind": "expsum", "f": fam.f.as_record(), "g": fam.g.as_record(),
                "h": fam.h.as_record(), "r": fam.r}
    if isinstance(fam, Hyperelliptic):
        return {"kind": "hyperelliptic", "f": list(fam.f)}
    raise ValidationError(f"unknown family {fam!r}")


def family_from_record(rec):
    kind = rec.get("kind")
    if kind == "kloosterman":
        return Kloosterman(int(rec["n"]))
    if kind == "expsum":
        return ExpSum(*(RationalFunction.coerce(rec[k]) for k in ("f", "g", "h")), int(rec.get("r", 1)))
    if kind == "hyperelliptic":
        return Hyperelliptic(tuple(int(c) for c in rec["f"]))
    raise ValidationError(f"unknown family kind {kind!r}")


def _target_record(t):
    if isinstance(t, MthPowers):
        return {"kind": "mth_powers", "m": t.m}
    if isinstance(t, PolynomialImage):
        return {"kind": "polynomial_image", "coeffs": list(t.coeffs)}
    if isinstance(t, FormulaTarget):
        return {"kind": "formula", "text": t.text}
    if isinstance(t, ExplicitList):
        return {"kind": "explicit", "elements": list(t.elements),
                "per_ell": {str(k): list(v) for k, v in t.per_ell}}
    raise ValidationError(f"unknown target {t!r}")


def target_from_record(rec):
    kind = rec.get("kind")
    if kind == "mth_powers":
        return MthPowers(int(rec["m"]))
    if kind == "polynomial_image":
        return PolynomialImage(tuple(int(c) for c in rec["coeffs"]))
    if kind == "formula":
        return FormulaTarget(str(rec["text"]))
    if kind == "explicit":
        per = tuple(sorted((int(k), tuple(int(a) for a in v)) for k, v in rec.get("per_ell", {}).items()))
        return ExplicitList(tuple(int(a) for a in rec.get("elements", ())), per)
    raise ValidationError(f"unknown target kind {kind!r}")


def default_group(family):
    if isinstance(family, Kloosterman):
        return ("Sp", family.n) if family.n % 2 == 0 else ("SL", family.n)
    if isinstance(family, Hyperelliptic):
        return ("Sp", len(family.f) - 1)
    raise ValidationError("exponential-sum families need an explicit group (family, n)")


def default_condition(cfg: SieveConfig):
    """(m', {1}) with m' the part of m prime to 4p, for m-th power targets."""
    if not isinstance(cfg.target, MthPowers):
        return None
    m = cfg.target.m
    for r in {2, cfg.p}:
        while m % r == 0:
            m //= r
    return (m, (1,)) if m > 1 else None


def _validate(cfg: SieveConfig):
    if isinstance(cfg.target, MthPowers):
        if cfg.target.m < 2:
            raise ValidationError("m must be >= 2")
        if math.gcd(cfg.target.m, cfg.p) != 1:
            raise ValidationError(f"m = {cfg.target.m} is not coprime to p = {cfg.p}")
    if isinstance(cfg.target, FormulaTarget) and not reduction_safe(parse_formula(cfg.target.text)):
        raise UnsafeFormula("formulas with negations or implications do not commute with reduction")
    if cfg.condition is not None and math.gcd(cfg.condition[0], cfg.d) != 1:
        raise NotCoprime(f"gcd({cfg.d}, {cfg.condition[0]}) != 1")


# ---------------------------------------------------------------------------
# Plans


def integer_root_floor(q: int, B: Fraction) -> int:
    """floor(q^{1/(2B)}), exactly: the largest L with L^{2B} <= q."""
    a, b = 2 * B.numerator, B.denominator  # L^(a/b) <= q  <=>  L^a <= q^b
    target = q**b
    L = max(1, int(round(q ** (1 / (2 * float(B))))))
    while L > 1 and L**a > target:
        L -= 1
    while (L + 1) ** a <= target:
        L += 1
    return L


def chebotarev_lower(d: int, m: int, C_size: int, L: float, eps: float, eps_grh: float = 0.1):
    """Lower-bound envelope |C| L / ((dm)^eps phi(m) log L) with validity flags.

    The unconditional flag is L >= (dm)^8; the GRH flag L >= (dm)^{2+eps_grh}
    is an annotation only.  The implicit constant is set to 1.
    """
    if math.gcd(d, m) != 1:
        raise NotCoprime(f"gcd({d}, {m}) != 1")
    dm = d * m
    value = C_size * L / (dm**eps * int(totient(m)) * math.log(L)) if L > 1 else 0.0
    return {
        "value": value,
        "unconditional_valid": L >= dm**8,
        "grh_valid": L >= dm ** (2 + eps_grh),
        "note": "envelope, implicit constant 1",
    }


@dataclass
class IdealData:
    ideal: PrimeIdealDeg1
    local_set: LocalSet  # A_lambda, applied to the values named by cfg.normalized
    group_set: LocalSet  # the same condition on normalized values (group side)
    scale: int  # normalization factor mod l
    omega_ratio: Fraction  # |Omega_lambda| / |G|
    omega_exact: bool
    group_order: int

    @property
    def local_density(self):
        return self.local_set.density

    @property
    def predicted_survival(self):
        return 1 - self.omega_ratio

    def as_record(self):
        return {
            "ell": self.ideal.ell,
            "omega": self.ideal.omega,
            "local_density": _frac(self.local_density),
            "omega_ratio": _frac(self.omega_ratio),
            "omega_exact": self.omega_exact,
            "group_order": self.group_order,
        }


@dataclass
class SievePlan:
    config: SieveConfig
    q: int
    B: Fraction
    L: int
    L_default: int
    group: tuple
    condition: tuple | None
    ideals: list
    local: list
    PL: Fraction
    multiplicity: int
    annotations: list = field(default_factory=list)

    @property
    def PL_full(self) -> Fraction:
        return self.PL * self.multiplicity

    @property
    def lambda_full_count(self) -> int:
        return len(self.ideals) * self.multiplicity

    @property
    def PL_exact(self) -> bool:
        return all(d.omega_exact for d in self.local)

    @property
    def sup_local_density(self) -> Fraction:
        return max(d.local_density for d in self.local)

    def subplan(self, k: int) -> "SievePlan":
        """The plan restricted to its first ``k`` ideals."""
        local = self.local[:k]
        return replace(self, ideals=self.ideals[:k], local=local,
                       PL=sum((d.omega_ratio for d in local), Fraction(0)))


def _normalization_factor(cfg, lam):
    fam = cfg.family
    ell = lam.ell
    if isinstance(fam, Kloosterman):
        w, sign = fam.n - 1, (-1) ** (fam.n - 1)
    elif isinstance(fam, ExpSum):
        w, sign = 1, -1
    else:
        w, sign = 1, 1
    if w == 0:
        return 1
    s = sqrt_q_mod(lam, cfg.p, cfg.e)
    return sign * pow(s, -w, ell) % ell


def _omega(spec_family, n, ell, group_set, cap):
    order = closed_form_order(spec_family, n, ell)
    if order <= cap:
        try:
            prob = prob_trace_in(GroupSpec(spec_family, n, ell, cap), group_set)
            return 1 - prob, True, order
        except GroupTooLarge:
            pass
    return 1 - group_set.density, False, order


def build_sieve_plan(cfg: SieveConfig) -> SievePlan:
    _validate(cfg)
    group = tuple(cfg.group) if cfg.group else default_group(cfg.family)
    B = sieve_exponent_B(*group)
    L_default = integer_root_floor(cfg.q, B)
    L = cfg.L if cfg.L is not None else L_default
    condition = cfg.condition if cfg.condition is not None else default_condition(cfg)
    ideals = deg1_prime_ideals(cfg.d, L, condition)
    m_cond = condition[0] if condition else 1
    c_size = len(set(condition[1])) if condition else 1
    if not ideals:
        expected = chebotarev_lower(cfg.d, m_cond, c_size, max(L, 2), cfg.eps)
        raise EmptyLambda(
            f"no degree-1 primes of Z[zeta_{cfg.d}] of norm <= {L} satisfy the conditions; "
            f"Chebotarev envelope at L = {L}: {expected['value']:.3g} "
            f"(valid unconditionally only for L >= {(cfg.d * m_cond) ** 8})")
    local = []
    for lam in ideals:
        A = cfg.target.local_set(lam.ell)
        if A.density >= 1:
            raise LocalDensityOne(f"A_lambda = F_{lam.ell} at l = {lam.ell}")
        c = _normalization_factor(cfg, lam)
        # t_norm = c t_raw; the group sees normalized traces
        group_set = A if cfg.normalized else A.scaled(c)
        ratio, exact, order = _omega(group[0], group[1], lam.ell, group_set, cfg.enum_cap)
        local.append(IdealData(lam, A, group_set, c, ratio, exact, order))
    PL = sum((d.omega_ratio for d in local), Fraction(0))
    plan = SievePlan(cfg, cfg.q, B, L, L_default, group, condition, ideals, local, PL,
                     int(totient(cfg.d)))
    plan.annotations.extend(_plan_annotations(plan))
    return plan


def _plan_annotations(plan):
    cfg = plan.config
    notes = []
    if plan.L != plan.L_default:
        notes.append(f"L = {plan.L} overrides the default floor(q^(1/2B)) = {plan.L_default}")
    if isinstance(cfg.family, Kloosterman) and cfg.e < 16 * plan.B:
        notes.append(f"hypothesis e >= 16B fails: e = {cfg.e} < {16 * plan.B}; computed anyway")
    for d in plan.local:
        if not d.omega_exact:
            notes.append(f"Omega at l = {d.ideal.ell} uses the main-term proxy 1 - |A|/l "
                         f"(|G| = {d.group_order} > cap {cfg.enum_cap}); error term O(1/l)")
    if not plan.PL_exact:
        notes.append("P(L) is approximate")
    if isinstance(cfg.family, ExpSum):
        for flag in expsum_hypotheses(cfg.family.f, cfg.family.g, cfg.family.h, cfg.family.r):
            notes.append(f"exponential-sum hypothesis: {flag}")
    if isinstance(cfg.family, Kloosterman):
        domain = "F_q^x"
    elif isinstance(cfg.family, Hyperelliptic):
        domain = "{z in F_q : f(z) != 0}"
    else:
        domain = "F_q"
    notes.append(f"survivors counted over the natural domain {domain}; density denominator is q")
    notes.append(f"one ideal per rational prime is sieved; |Lambda_L| with conjugates = "
                 f"{plan.lambda_full_count}")
    return notes


# ---------------------------------------------------------------------------
# Bounds and survivors


def theoretical_bound(plan: SievePlan, full_multiplicity: bool = False) -> float:
    """(1 + L^B / sqrt q) / P(L)."""
    PL = plan.PL_full if full_multiplicity else plan.PL
    if PL == 0:
        raise ZeroPL("P(L) = 0")
    B = plan.B
    return (1 + plan.L ** float(B) / math.sqrt(plan.q)) / float(PL)


def build_tables(plan: SievePlan, jobs: int | None = None, cache_dir=None) -> list:
    """Unnormalized residue-mode tables, one per ideal."""
    cfg = plan.config
    F = make_field(cfg.p, cfg.e)
    fam = cfg.family
    jobs = jobs or cfg.jobs
    if isinstance(fam, Hyperelliptic):
        # integer values: compute once, reduce per ideal
        base = hyperelliptic_table(fam.f, F, Embedding.complex(cfg.p))
        ints = np.rint(base.values.real).astype(np.int64)
        return [TraceTable(base.family, cfg.p, cfg.e, Embedding.residue(cfg.p, lam), base.xs,
                           ints % lam.ell) for lam in plan.ideals]

    def one(lam):
        emb = Embedding.residue(cfg.p, lam)
        if isinstance(fam, Kloosterman):
            return cached_kloosterman_table(fam.n, F, emb, cache_dir)
        return exp_sum_table(fam.f, fam.g, fam.h, fam.r, F, emb)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, plan.ideals))
    return [one(lam) for lam in plan.ideals]


@dataclass
class SieveReport:
    plan: SievePlan
    survivors: int
    domain_size: int
    running_survivors: list
    single_ideal_density: list
    mask: np.ndarray = field(repr=False)
    xs: np.ndarray = field(repr=False)
    timing: dict | None = None

    @property
    def density(self) -> float:
        return self.survivors / self.plan.q

    @property
    def bound(self) -> float:
        return theoretical_bound(self.plan)

    @property
    def bound_full(self) -> float:
        return theoretical_bound(self.plan, full_multiplicity=True)

    @property
    def bound_ratio(self) -> float:
        return self.density / self.bound

    @property
    def min_prediction(self) -> Fraction:
        return min(d.predicted_survival for d in self.plan.local)

    def envelope(self) -> float:
        cfg = self.plan.config
        B = float(self.plan.B)
        return cfg.p**cfg.eps * math.log(cfg.q) / (B * cfg.q ** (1 / (2 * B)))

    def chebotarev(self):
        plan = self.plan
        m = plan.condition[0] if plan.condition else 1
        c = len(set(plan.condition[1])) if plan.condition else 1
        ann = chebotarev_lower(plan.config.d, m, c, max(plan.L, 2), plan.config.eps)
        ann["primes_found"] = len(plan.ideals)
        return ann

    def orbit_estimate(self):
        cfg = self.plan.config
        if not isinstance(cfg.family, Kloosterman):
            return None
        g = math.gcd(cfg.p - 1, cfg.family.n)
        return self.survivors * g / (cfg.p - 1)

    def as_dict(self) -> dict:
        plan = self.plan
        rec = {
            "version": __version__,
            "config": plan.config.as_dict(),
            "q": plan.q,
            "B": _frac(plan.B),
            "L": plan.L,
            "L_default": plan.L_default,
            "group": list(plan.group),
            "condition": None if plan.condition is None
            else [plan.condition[0], sorted(plan.condition[1])],
            "ideals": [d.as_record() for d in plan.local],
            "lambda_representatives": len(plan.ideals),
            "lambda_full_count": plan.lambda_full_count,
            "PL": _frac(plan.PL),
            "PL_full": _frac(plan.PL_full),
            "PL_exact": plan.PL_exact,
            "sup_local_density": _frac(plan.sup_local_density),
            "survivors": self.survivors,
            "domain_size": self.domain_size,
            "density": self.density,
            "running_survivors": self.running_survivors,
            "single_ideal_density": self.single_ideal_density,
            "min_prediction": _frac(self.min_prediction),
            "bound": self.bound,
            "bound_full": self.bound_full,
            "bound_ratio": self.bound_ratio,
            "envelope": {"value": self.envelope(), "note": "envelope, implicit constant 1"},
            "chebotarev": self.chebotarev(),
            "annotations": list(plan.annotations),
        }
        orbits = self.orbit_estimate()
        if orbits is not None:
            rec["orbit_estimate"] = orbits
        if self.timing is not None:
            rec["timing"] = self.timing
        return rec

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2)

    def mask_csv(self) -> str:
        lines = ["x,survivor"]
        lines += [f"{x},{int(m)}" for x, m in zip(self.xs.tolist(), self.mask.tolist())]
        return "\n".join(lines) + "\n"


def _frac(f: Fraction):
    return [f.numerator, f.denominator]


def effective_set(ideal_data: IdealData, plan: SievePlan, table: TraceTable) -> LocalSet:
    """The set the table's raw values must hit, given its normalization flag."""
    if table.normalized:
        return ideal_data.group_set
    return ideal_data.local_set if not plan.config.normalized else \
        ideal_data.group_set.scaled(pow(ideal_data.scale, -1, ideal_data.ideal.ell))


def survivor_count(plan: SievePlan, tables) -> SieveReport:
    """Count x with t(x) mod lambda in A_lambda for every ideal, folding in ideal order."""
    tables = list(tables)
    if len(tables) != len(plan.ideals):
        raise TableMismatch(f"{len(tables)} tables for {len(plan.ideals)} ideals")
    xs = tables[0].xs
    mask = np.ones(len(xs), dtype=bool)
    running, single = [], []
    for data, table in zip(plan.local, tables):
        if not table.embedding.is_residue or table.embedding.ideal.ell != data.ideal.ell \
                or table.embedding.ideal.omega != data.ideal.omega:
            raise TableMismatch(f"table is not a residue table for l = {data.ideal.ell}")
        if not np.array_equal(table.xs, xs):
            raise TableMismatch("tables cover different x-domains")
        hit = effective_set(data, plan, table).members[table.values]
        single.append(int(hit.sum()) / plan.q)
        mask &= hit
        running.append(int(mask.sum()))
    return SieveReport(plan, running[-1], len(xs), running, single, mask, xs)


def density_report(cfg: SieveConfig, jobs: int | None = None, cache_dir=None,
                   timing: bool = False) -> SieveReport:
    t0 = time.perf_counter()
    plan = build_sieve_plan(cfg)
    t1 = time.perf_counter()
    tables = build_tables(plan, jobs, cache_dir)
    t2 = time.perf_counter()
    report = survivor_count(plan, tables)
    if timing:
        report.timing = {"plan_s": t1 - t0, "tables_s": t2 - t1,
                         "survivors_s": time.perf_counter() - t2}
    return report


# ---------------------------------------------------------------------------
# Equidistribution diagnostics


def value_histogram(table: TraceTable) -> np.ndarray:
    """Counts of each residue among the table values."""
    return np.bincount(np.asarray(table.values, dtype=np.int64), minlength=table.embedding.ell)


def total_variation(counts_a, counts_b) -> float:
    a = np.asarray(counts_a, dtype=float)
    b = np.asarray(counts_b, dtype=float)
    return 0.5 * float(np.abs(a / a.sum() - b / b.sum()).sum())


def equidistribution_tv(table: TraceTable, group_family: str, n: int) -> float:
    """TV distance between normalized table values mod l and the trace law of G(F_l)."""
    if not table.normalized:
        raise ValidationError("pass a normalized table")
    ell = table.embedding.ell
    _, hist = enumerate_group(GroupSpec(group_family, n, ell))
    return total_variation(value_histogram(table), hist.counts)


__all__ = [
    "ExplicitList", "FormulaTarget", "IdealData", "MthPowers", "PolynomialImage", "SieveConfig",
    "SievePlan", "SieveReport", "build_sieve_plan", "build_tables", "chebotarev_lower",
    "default_condition", "default_group", "density_report", "effective_set",
    "equidistribution_tv", "family_from_record", "integer_root_floor",
    "survivor_count", "target_from_record", "theoretical_bound", "total_variation",
    "value_histogram",
]
